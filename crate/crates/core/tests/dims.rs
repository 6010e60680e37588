use microsets::dims::*;
use microsets::dyadic::{kx_set, DyadicSet, Metric};
use microsets::seq::Word;
use proptest::prelude::*;

/// Brute force over subsets: the largest set with pairwise distances above
/// `delta`, and the fewest centers whose closed `delta`-balls cover.
fn brute_counts(pts: &[Vec<f64>], metric: Metric, delta: f64) -> (usize, usize) {
    let n = pts.len();
    let d = |i: usize, j: usize| point_distance(&pts[i], &pts[j], metric);
    let mut pack = 0;
    let mut cover = n;
    for mask in 1u32..1 << n {
        let idx: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        if idx.len() > pack && idx.iter().enumerate().all(|(a, &i)| idx[a + 1..].iter().all(|&j| d(i, j) > delta)) {
            pack = idx.len();
        }
        if idx.len() < cover && (0..n).all(|p| idx.iter().any(|&c| d(p, c) <= delta)) {
            cover = idx.len();
        }
    }
    (cover, pack)
}

fn points(max: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(0u32..1024, 2), 1..max)
        .prop_map(|v| v.into_iter().map(|p| p.into_iter().map(|c| c as f64 / 1024.0 + 1.0 / 4096.0).collect()).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exact_counts_match_subset_search(pts in points(11), sup in any::<bool>()) {
        let metric = if sup { Metric::Sup } else { Metric::Euclidean };
        let cloud = PointCloud::new(pts.clone(), metric).unwrap();
        let levels: Vec<u32> = (0..7).collect();
        let covers = ball_covering_counts(&cloud, &levels).unwrap();
        let packs = packing_counts(&cloud, &levels).unwrap();
        for &n in &levels {
            let (c, p) = brute_counts(&pts, metric, (-(n as f64)).exp2());
            prop_assert_eq!(covers.get(n).unwrap(), &c.into());
            prop_assert_eq!(packs.get(n).unwrap(), &p.into());
        }
        prop_assert!(chain_check(&covers, &packs).unwrap());
    }

    #[test]
    fn greedy_packing_is_maximal(pts in points(40), level in 0u32..8) {
        let cloud = PointCloud::new(pts, Metric::Euclidean).unwrap();
        let delta = (-(level as f64)).exp2();
        let p = greedy_packing(&cloud, delta);
        prop_assert!(is_packing(&cloud, &p, delta));
        prop_assert!(is_maximal_packing(&cloud, &p, delta));
        let cover = greedy_min_cover(&cloud, delta);
        prop_assert!((0..cloud.len()).all(|i| cover.iter().any(|&c| cloud.dist(i, c) <= delta)));
    }

    #[test]
    fn kx_grid_counts_are_two_to_sigma(x in prop::collection::vec(any::<bool>(), 1..24)) {
        let w = Word::from_bits(x.clone());
        let set = kx_set(&w).unwrap();
        let levels: Vec<u32> = (0..=x.len() as u32).collect();
        let series = covering_counts(&set, &levels).unwrap();
        for (n, c) in series.entries() {
            prop_assert_eq!(c, &(num_bigint::BigUint::from(1u8) << w.prefix(*n as usize).sigma()));
        }
    }
}

#[test]
fn products_multiply_counts() {
    let a = kx_set(&"1101".parse().unwrap()).unwrap();
    let b = kx_set(&"0111".parse().unwrap()).unwrap();
    assert!(product_inequality_check(&a, &b, &[0, 1, 2, 3, 4]).unwrap());
}

#[test]
fn full_cube_estimates_its_dimension() {
    let full = DyadicSet::full(2, 8).unwrap();
    let series = covering_counts(&full, &(1..=8).collect::<Vec<_>>()).unwrap();
    let (lo, hi) = box_dim_estimate(&series, None).unwrap();
    assert_eq!((lo, hi), (2.0, 2.0));
}

#[test]
fn distance_matrix_must_be_a_metric() {
    assert!(DistanceMatrix::new(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).is_ok());
    assert!(DistanceMatrix::new(vec![vec![0.0, 1.0], vec![2.0, 0.0]]).is_err());
    assert!(DistanceMatrix::new(vec![vec![0.0, 1.0, 5.0], vec![1.0, 0.0, 1.0], vec![5.0, 1.0, 0.0]]).is_err());
}
