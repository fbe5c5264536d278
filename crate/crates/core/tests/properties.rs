use mcar_core::datamodel::{ColumnRoles, Dataset};
use mcar_core::mcar::{
    a_n_statistic, a_n_test, d2_general, d2_univariate, d_n_statistic, AnRoute, TestKind,
};
use mcar_core::numerics::RngStream;
use mcar_core::synthesis::{DistributionSpec, MechanismSpec};
use proptest::prelude::*;

fn dataset(p: usize, q: usize, n: usize, prob: f64, seed: u64) -> (Dataset, ColumnRoles) {
    let mut rng = RngStream::new(seed, &[]);
    let names = (0..p + q).map(|j| format!("c{j}")).collect();
    let full = DistributionSpec::StdNormal { dim: p + q }
        .generate(n, names, &mut rng)
        .unwrap();
    let roles = ColumnRoles::leading(p, q);
    let ds = MechanismSpec::MarOneToX { prob, odds: 4.0, controls: None }
        .apply(&full, &roles, &mut rng)
        .unwrap();
    (ds, roles)
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1e-12)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn a_n_is_affine_invariant_in_complete_columns(
        p in 1usize..4, q in 1usize..4, n in 30usize..120, seed in any::<u64>(),
        scale in prop_oneof![-5.0..-0.2f64, 0.2..5.0f64], shift in -10.0..10.0f64,
    ) {
        let (ds, roles) = dataset(p, q, n, 0.25, seed);
        let Ok(a) = a_n_statistic(&ds, &roles, AnRoute::Unbiased) else { return Ok(()) };
        let x: Vec<f64> = ds.column(0).iter().map(|v| scale * v + shift).collect();
        let moved = ds.with_column(0, x).unwrap();
        let b = a_n_statistic(&moved, &roles, AnRoute::Unbiased).unwrap();
        prop_assert!(close(b, a, 1e-8), "{a} vs {b}");
    }

    #[test]
    fn a_n_is_row_permutation_invariant(
        p in 1usize..4, q in 1usize..4, n in 30usize..120, seed in any::<u64>(),
    ) {
        let (ds, roles) = dataset(p, q, n, 0.2, seed);
        let Ok(a) = a_n_statistic(&ds, &roles, AnRoute::Unbiased) else { return Ok(()) };
        let mut perm: Vec<usize> = (0..n).collect();
        perm.reverse();
        perm.rotate_left(seed as usize % n);
        let b = a_n_statistic(&ds.permute_rows(&perm).unwrap(), &roles, AnRoute::Unbiased).unwrap();
        prop_assert!(close(b, a, 1e-9), "{a} vs {b}");
    }

    #[test]
    fn results_are_well_formed(
        p in 1usize..4, q in 1usize..4, n in 30usize..120, seed in any::<u64>(),
        alpha in 0.001..1.0f64,
    ) {
        let (ds, roles) = dataset(p, q, n, 0.2, seed);
        for kind in [TestKind::An, TestKind::D2] {
            let Ok(r) = kind.run(&ds, &roles, alpha) else { continue };
            prop_assert!(r.statistic >= 0.0);
            prop_assert!((0.0..=1.0).contains(&r.p_value));
            prop_assert_eq!(r.reject, r.p_value <= alpha);
        }
    }

    #[test]
    fn univariate_closed_form_equals_a_n(
        p in 1usize..4, n in 20usize..200, seed in any::<u64>(), prob in 0.05..0.45f64,
    ) {
        let (ds, roles) = dataset(p, 1, n, prob, seed);
        let (Ok(a), Ok(d)) = (a_n_test(&ds, &roles, 0.05), d2_univariate(&ds, &roles, 0.05)) else {
            return Ok(());
        };
        prop_assert!(close(a.statistic, d.statistic, 1e-8));
        prop_assert_eq!(a.df, d.df);
        prop_assert!((a.p_value - d.p_value).abs() < 1e-8);
    }

    #[test]
    fn d_n_squared_is_a_n(n in 10usize..200, seed in any::<u64>()) {
        let (ds, roles) = dataset(1, 1, n, 0.3, seed);
        let (Ok(a), Ok(d)) = (a_n_statistic(&ds, &roles, AnRoute::Unbiased), d_n_statistic(&ds, &roles)) else {
            return Ok(());
        };
        prop_assert!(close(d * d, a, 1e-10));
    }
}

#[test]
fn general_and_univariate_little_agree_at_large_n() {
    let mut rng = RngStream::new(77, &[]);
    let names = (0..3).map(|j| format!("c{j}")).collect();
    let full = DistributionSpec::StdNormal { dim: 3 }
        .generate(2000, names, &mut rng)
        .unwrap();
    let roles = ColumnRoles::leading(2, 1);
    let ds = MechanismSpec::Mcar { prob: 0.15 }.apply(&full, &roles, &mut rng).unwrap();
    let g = d2_general(&ds, 0.05).unwrap();
    let u = d2_univariate(&ds, &roles, 0.05).unwrap();
    assert_eq!(g.df, u.df);
    assert!(close(g.statistic, u.statistic, 0.05), "{} vs {}", g.statistic, u.statistic);
}
