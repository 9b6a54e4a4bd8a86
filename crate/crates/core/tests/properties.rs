use nalgebra::DMatrix;
use proptest::prelude::*;
use rsgd::ecd::EllipticalFamily;
use rsgd::manifold::{decompose, distance, distance_sq, exp_map, inner, log_map, MetricParams};
use rsgd::random::{random_orthogonal, random_spd_in, random_symmetric, seeded_rng};
use rsgd::stats::{chi2_cdf, kde};
use rsgd::symkernel::{spd_inverse, sym_fn, SpdMatrix, SpectralFn, SymMatrix};
use rsgd::KotzModel;

fn rel(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

/// SPD matrix with eigenvalues log-uniform in `[10^-h, 10^h]`.
fn spd(dim: usize, h: f64, seed: u64) -> SpdMatrix {
    let r = 10f64.powf(h);
    random_spd_in(dim, 1.0 / r, r, &mut seeded_rng(seed, 0))
}

/// A model dimension with its information metric.
fn dim_metric() -> impl Strategy<Value = (usize, MetricParams)> {
    (1usize..=8, 0.3f64..6.0).prop_map(|(m, s)| (m, KotzModel::new(m, s).unwrap().info_coeffs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn log_exp_round_trip(dim in 1usize..=10, seed in any::<u64>()) {
        // Condition number up to 1e6.
        let a = spd(dim, 3.0, seed);
        let l = sym_fn(a.as_sym(), SpectralFn::Log).unwrap();
        let back = sym_fn(&l, SpectralFn::Exp).unwrap();
        prop_assert!(rel(back.as_matrix(), a.as_matrix()) < 1e-9);
    }

    #[test]
    fn inverse_is_involutive(dim in 1usize..=10, seed in any::<u64>()) {
        let a = spd(dim, 2.0, seed);
        let back = spd_inverse(&spd_inverse(&a).unwrap()).unwrap();
        prop_assert!(rel(back.as_matrix(), a.as_matrix()) < 1e-9);
    }

    #[test]
    fn inner_is_symmetric_and_bilinear((dim, p) in dim_metric(), seed in any::<u64>(), a in -3.0f64..3.0) {
        let mut rng = seeded_rng(seed, 1);
        let theta = random_spd_in(dim, 0.2, 5.0, &mut rng);
        let u = random_symmetric(dim, &mut rng);
        let v = random_symmetric(dim, &mut rng);
        let w = random_symmetric(dim, &mut rng);
        let uv = inner(&theta, &u, &v, p).unwrap();
        prop_assert!((uv - inner(&theta, &v, &u, p).unwrap()).abs() <= 1e-10 * (1.0 + uv.abs()));
        let lhs = inner(&theta, &(&u.scale(a) + &w), &v, p).unwrap();
        let rhs = a * uv + inner(&theta, &w, &v, p).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs()));
        prop_assert!(inner(&theta, &u, &u, p).unwrap() >= 0.0);
    }

    #[test]
    fn exp_and_log_are_inverse(dim in 1usize..=8, seed in any::<u64>()) {
        let mut rng = seeded_rng(seed, 2);
        let theta = random_spd_in(dim, 0.1, 10.0, &mut rng);
        let tau = random_spd_in(dim, 0.1, 10.0, &mut rng);
        let back = exp_map(&theta, &log_map(&theta, &tau).unwrap()).unwrap();
        prop_assert!(rel(back.as_matrix(), tau.as_matrix()) < 1e-9);
        let u = random_symmetric(dim, &mut rng).scale(0.5);
        let u_back = log_map(&theta, &exp_map(&theta, &u).unwrap()).unwrap();
        prop_assert!((&u_back - &u).frobenius_norm() < 1e-9 * (1.0 + u.frobenius_norm()));
    }

    #[test]
    fn distance_is_affine_invariant((dim, p) in dim_metric(), seed in any::<u64>()) {
        let mut rng = seeded_rng(seed, 3);
        let theta = random_spd_in(dim, 0.1, 10.0, &mut rng);
        let tau = random_spd_in(dim, 0.1, 10.0, &mut rng);
        let a = random_spd_in(dim, 0.3, 3.0, &mut rng).as_matrix() * random_orthogonal(dim, &mut rng);
        let mv = |m: &SpdMatrix| SpdMatrix::new(m.as_sym().congruence(&a)).unwrap();
        let d = distance_sq(&theta, &tau, p).unwrap();
        let da = distance_sq(&mv(&theta), &mv(&tau), p).unwrap();
        prop_assert!((d - da).abs() <= 1e-8 * (1.0 + d));
        prop_assert!((d - distance_sq(&tau, &theta, p).unwrap()).abs() <= 1e-9 * (1.0 + d));
    }

    #[test]
    fn geodesics_scale_distance((dim, p) in dim_metric(), seed in any::<u64>(), t in -2.0f64..2.0) {
        let mut rng = seeded_rng(seed, 4);
        let theta = random_spd_in(dim, 0.2, 5.0, &mut rng);
        let u = random_symmetric(dim, &mut rng).congruence(theta.sqrt().as_matrix());
        let u = u.scale(1.0 / inner(&theta, &u, &u, p).unwrap().sqrt());
        let d = distance(&theta, &exp_map(&theta, &u.scale(t)).unwrap(), p).unwrap();
        prop_assert!((d - t.abs()).abs() <= 1e-8 * (1.0 + t.abs()));
    }

    #[test]
    fn decomposition_is_orthogonal((dim, p) in dim_metric(), seed in any::<u64>()) {
        let mut rng = seeded_rng(seed, 5);
        let theta = random_spd_in(dim, 0.1, 10.0, &mut rng);
        let g = random_symmetric(dim, &mut rng);
        let (par, perp) = decompose(&theta, &g).unwrap();
        prop_assert!((&(&par + &perp) - &g).frobenius_norm() < 1e-12 * (1.0 + g.frobenius_norm()));
        let scale = (inner(&theta, &par, &par, p).unwrap() * inner(&theta, &perp, &perp, p).unwrap()).sqrt();
        prop_assert!(inner(&theta, &par, &perp, p).unwrap().abs() <= 1e-10 * (1.0 + scale));
    }

    #[test]
    fn chi2_cdf_is_a_cdf(dof in 1u32..60, x in 0.0f64..200.0, dx in 0.0f64..10.0) {
        let a = chi2_cdf(x, dof);
        let b = chi2_cdf(x + dx, dof);
        prop_assert!((0.0..=1.0).contains(&a));
        prop_assert!(b >= a - 1e-15);
    }

    #[test]
    fn kde_is_nonnegative(xs in prop::collection::vec(-50.0f64..50.0, 1..40), bw in 1e-3f64..10.0) {
        let grid: Vec<f64> = (0..101).map(|i| -60.0 + 1.2 * i as f64).collect();
        prop_assert!(kde(&xs, &grid, bw).unwrap().iter().all(|&d| d >= 0.0 && d.is_finite()));
    }
}

#[test]
fn identity_is_fixed_by_matrix_functions() {
    let i = SymMatrix::identity(4);
    for f in [SpectralFn::Sqrt, SpectralFn::InvSqrt, SpectralFn::Inverse, SpectralFn::Pow(2.7)] {
        assert!(rel(sym_fn(&i, f).unwrap().as_matrix(), i.as_matrix()) < 1e-15);
    }
}
