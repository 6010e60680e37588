use microsets::seq::*;
use microsets::Rational;
use proptest::prelude::*;

/// Every pair of equal-length factors, compared directly.
fn balanced_brute(bits: &[bool]) -> bool {
    let n = bits.len();
    for len in 1..=n {
        let sums: Vec<usize> = (0..=n - len).map(|i| bits[i..i + len].iter().filter(|&&b| b).count()).collect();
        let (lo, hi) = (sums.iter().min().unwrap(), sums.iter().max().unwrap());
        if hi - lo > 1 {
            return false;
        }
    }
    true
}

fn density() -> impl Strategy<Value = Rational> {
    (1i64..60).prop_flat_map(|q| (0..=q).prop_map(move |p| Rational::new(p, q)))
}

proptest! {
    #[test]
    fn beatty_counts_are_floors(a in density(), n in 0usize..300) {
        let w = beatty_balanced(a).unwrap().prefix(n);
        let floor = (n as i64 * a.numer()).div_euclid(*a.denom());
        prop_assert_eq!(w.sigma() as i64, floor);
    }

    #[test]
    fn beatty_prefixes_are_balanced(a in density(), n in 1usize..80) {
        let w = beatty_balanced(a).unwrap().prefix(n);
        prop_assert!(balanced_brute(w.bits()));
        prop_assert!(is_balanced(&w, n));
    }

    #[test]
    fn balance_test_matches_brute_force(bits in prop::collection::vec(any::<bool>(), 1..24)) {
        let w = Word::from_bits(bits.clone());
        prop_assert_eq!(is_balanced(&w, bits.len()), balanced_brute(&bits));
    }

    #[test]
    fn shifts_and_prefixes_commute(bits in prop::collection::vec(any::<bool>(), 0..64), m in 0usize..64) {
        let w = Word::from_bits(bits.clone());
        let m = m.min(bits.len());
        let mut joined = w.prefix(m);
        joined.append(&w.shift(m));
        prop_assert_eq!(&joined, &w);
        prop_assert_eq!(w.to_string().parse::<Word>().unwrap(), w);
    }

    #[test]
    fn profile_is_running_density(bits in prop::collection::vec(any::<bool>(), 1..64)) {
        let w = Word::from_bits(bits.clone());
        let profile = density_profile(&w).unwrap();
        prop_assert_eq!(profile.len(), bits.len());
        for (i, r) in profile.iter().enumerate() {
            let ones = bits[..=i].iter().filter(|&&b| b).count() as i64;
            prop_assert_eq!(*r, Rational::new(ones, i as i64 + 1));
        }
    }
}

#[test]
fn first_disagreement_positions() {
    let a: Word = "0110".parse().unwrap();
    let b: Word = "0100".parse().unwrap();
    assert_eq!(a.first_disagreement(&b), Some(2));
    assert_eq!(a.first_disagreement(&a), None);
    assert_eq!(a.first_disagreement(&a.prefix(2)), None);
}

#[test]
fn all_words_in_lexicographic_order() {
    let words: Vec<String> = Word::all_of_length(3).map(|w| w.to_string()).collect();
    assert_eq!(words, ["000", "001", "010", "011", "100", "101", "110", "111"]);
}

#[test]
fn density_bounds_of_an_alternating_tail() {
    let w: Word = "1".repeat(4).parse::<Word>().unwrap();
    let mut x = w.clone();
    x.append(&"01".repeat(20).parse().unwrap());
    let profile = density_profile(&x).unwrap();
    let (lo, hi) = density_bounds(&profile, 30).unwrap();
    assert!(lo <= hi);
    assert!(lo > Rational::new(1, 2) && hi < Rational::new(3, 5));
}
