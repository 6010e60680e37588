use microsets::dyadic::{left_endpoints, Metric};
use microsets::families::*;
use microsets::realize::TargetSpec;
use microsets::seq::{beatty_balanced, Word};
use microsets::Rational;
use num_bigint::BigUint;
use proptest::prelude::*;

fn r(p: i64, q: i64) -> Rational {
    Rational::new(p, q)
}

/// Largest `m` with `m^q ≤ 2^{p e}`, by bisection on big integers.
fn floor_pow2_oracle(p: u32, q: u32, e: u32) -> u64 {
    let target = BigUint::from(1u8) << (p * e) as usize;
    let (mut lo, mut hi) = (1u64, 1u64 << 62);
    while lo < hi {
        let mid = lo + (hi - lo + 1) / 2;
        if BigUint::from(mid).pow(q) <= target {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    lo
}

fn grid_points(max: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::btree_set((0u32..256, 0u32..256), 1..max)
        .prop_map(|v| v.into_iter().map(|(x, y)| vec![x, y]).collect::<Vec<_>>())
        .prop_map(|v| v.into_iter().map(|p| p.into_iter().map(|c| c as f64 / 256.0).collect()).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pow2_floor_is_exact(p in 0u32..24, q in 1u32..12, e in 0u32..40) {
        let alpha = r(p as i64, q as i64);
        prop_assume!(p * e <= 60 * q);
        prop_assert_eq!(pow2_floor(alpha, e).unwrap(), floor_pow2_oracle(p, q, e));
    }

    #[test]
    fn packings_are_separated_and_maximal(pts in grid_points(60), n in 0i32..9, sup in any::<bool>()) {
        let metric = if sup { Metric::Sup } else { Metric::Euclidean };
        let view = MetricSpaceView::from_points(&pts, metric, 0, 0.0).unwrap();
        let p = view.greedy_packing(0..view.len(), n, None);
        let delta = (-(n as f64)).exp2();
        let d = |i: usize, j: usize| microsets::dims::point_distance(&pts[i], &pts[j], metric);
        for (a, &i) in p.iter().enumerate() {
            for &j in &p[a + 1..] {
                prop_assert!(d(i, j) > delta);
            }
        }
        for i in 0..pts.len() {
            prop_assert!(p.iter().any(|&c| d(i, c) <= delta));
        }
        prop_assert!(view.is_packing(&p, n));
    }

    #[test]
    fn ball_packing_is_greedy_over_the_ball(
        xs in prop::collection::btree_set(0i64..512, 1..24),
        ys in prop::collection::btree_set(0i64..512, 1..24),
        center in any::<prop::sample::Index>(),
        g in 0i32..8, extra in 0i32..6, sup in any::<bool>(),
    ) {
        let metric = if sup { Metric::Sup } else { Metric::Euclidean };
        let axes = vec![xs.into_iter().collect::<Vec<_>>(), ys.into_iter().collect()];
        let origin = [axes[0][0], axes[1][0]];
        let view = MetricSpaceView::product_grid(axes, 9, metric, &origin).unwrap();
        let c = center.index(view.len());
        let ball = view.ball(c, g);
        let plain = view.greedy_packing(ball.iter().copied(), g + extra, None);
        prop_assert_eq!(view.ball_packing(c, g, g + extra, None), plain);
    }

    #[test]
    fn hausdorff_tests_agree(pts in grid_points(30), split in any::<prop::sample::Index>(), n in 0i32..9) {
        let view = MetricSpaceView::from_points(&pts, Metric::Euclidean, 0, 0.0).unwrap();
        let s = split.index(pts.len()).max(1);
        let (a, b): (Vec<usize>, Vec<usize>) = ((0..s).collect(), (s - 1..pts.len()).collect());
        let h = view.hausdorff(&a, &b);
        prop_assert_eq!(view.hausdorff_within(&a, &b, n), h <= (-(n as f64)).exp2());
    }
}

fn spec() -> TargetSpec {
    TargetSpec::finite_set(vec![r(1, 8), r(1, 4)]).unwrap()
}

#[test]
fn box_family_on_a_zoom_net() {
    let view = MetricSpaceView::zoom_grid(&[1, 1], 1, 64, 6, Metric::Euclidean).unwrap();
    let kseq = level_schedule(&view, &[r(1, 4); 3], Variant::Box, LevelFunction::Linear, 60).unwrap();
    assert!(kseq.ks.windows(2).all(|w| w[0] < w[1]));
    for (n, &j) in kseq.witnesses.iter().enumerate() {
        let need = pow2_floor(kseq.alpha(n), j).unwrap() as usize;
        assert!(view.packing_number(view.origin(), kseq.g(n) as i32, j as i32, None) >= need);
    }
    let members = family_members(&spec(), &view, &kseq, 3).unwrap();
    assert_eq!(members.len(), 8);
    for m in &members {
        let report = family_dim_report(&view, &kseq, m).unwrap();
        assert!(report.passed(), "{}: {:?}", m.prefix, report.checks);
        assert!(has_exact_cardinalities(m).unwrap());
        assert!(is_nested(&view, &kseq, m));
        let alone = family_member(&m.prefix, &spec(), &view, &kseq, 3).unwrap();
        assert_eq!(&alone, m);
    }
    let c = continuity_check(&view, &kseq, &members);
    assert_eq!((c.pairs, c.violations), (28, 0));
}

#[test]
fn packing_family_on_a_self_similar_net() {
    let x = beatty_balanced(r(1, 4)).unwrap().prefix(24);
    let axis: Vec<i64> = left_endpoints(&x).unwrap().into_iter().map(|v| v as i64).collect();
    let o = axis[axis.len() / 2];
    let view = MetricSpaceView::product_grid(vec![axis.clone(), axis], 24, Metric::Sup, &[o, o]).unwrap();
    let kseq = level_schedule(&view, &[r(1, 12); 3], Variant::Packing, LevelFunction::Linear, 24).unwrap();
    let members = family_members(&spec(), &view, &kseq, 3).unwrap();
    for m in &members {
        let report = family_dim_report(&view, &kseq, m).unwrap();
        assert!(report.passed(), "{}: {:?}", m.prefix, report.checks);
        assert!(is_separated(&view, &kseq, m));
    }
    assert_eq!(continuity_check(&view, &kseq, &members).violations, 0);
}

#[test]
fn sparse_nets_exhaust() {
    let view = MetricSpaceView::uniform_grid(1, 3, Metric::Sup).unwrap();
    let err = level_schedule(&view, &[r(1, 2); 4], Variant::Box, LevelFunction::Linear, 60).unwrap_err();
    assert!(matches!(err, microsets::Error::ResolutionExhausted { .. }));
    assert!(level_schedule(&view, &[r(1, 2), r(1, 4)], Variant::Box, LevelFunction::Linear, 60).is_err());
}

#[test]
fn traces_export_their_levels() {
    let view = MetricSpaceView::zoom_grid(&[1, 1], 1, 32, 5, Metric::Sup).unwrap();
    let kseq = level_schedule(&view, &[r(1, 4); 2], Variant::Box, LevelFunction::Linear, 60).unwrap();
    let x: Word = "10".parse().unwrap();
    let m = family_member(&x, &spec(), &view, &kseq, 2).unwrap();
    let json = m.to_json(&view, &kseq);
    assert_eq!(json["prefix"], "10");
    assert_eq!(json["levels"].as_array().unwrap().len(), 2);
    assert_eq!(json["centers"].as_array().unwrap().len(), m.m());
    assert_eq!(json["levels"][1]["m"], m.m());
}
