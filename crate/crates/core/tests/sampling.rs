use nalgebra::DMatrix;
use rand_distr::{ChiSquared, Distribution};
use rsgd::ecd::PreparedScatter;
use rsgd::estimator::{run, Ball, CenterMode, RunConfig};
use rsgd::mc::{replicate_runs, Execution};
use rsgd::random::{random_spd, seeded_rng};
use rsgd::stats::{chi2_cdf, ks_stat, mean_sd};
use rsgd::{KotzModel, SpdMatrix};
use statrs::distribution::{ChiSquared as StChi2, ContinuousCDF, Gamma};
use statrs::function::gamma::ln_gamma;

/// Asymptotic 5% critical value of the one-sample KS statistic.
fn ks_crit_5pct(n: usize) -> f64 {
    1.358 / (n as f64).sqrt()
}

#[test]
fn chi2_cdf_matches_statrs() {
    for dof in [1u32, 2, 3, 6, 10, 28, 45] {
        let reference = StChi2::new(dof as f64).unwrap();
        for i in 0..400 {
            let x = i as f64 * 0.25;
            let diff = (chi2_cdf(x, dof) - reference.cdf(x)).abs();
            assert!(diff < 1e-10, "dof {dof} x {x}: {diff}");
        }
    }
}

#[test]
fn second_moment_is_proportional_to_scatter() {
    for (m, s) in [(2, 1.0), (3, 2.0), (4, 0.5), (5, 4.0)] {
        let k = KotzModel::new(m, s).unwrap();
        let theta = random_spd(m, &mut seeded_rng(m as u64, 9));
        let n = 200_000;
        let xs = k.sample(&theta, n, 17).unwrap();
        let kk = m as f64 / (2.0 * s);
        let c = (2f64.ln() / s + ln_gamma(kk + 1.0 / s) - ln_gamma(kk)).exp() / m as f64;
        let mut sum = DMatrix::<f64>::zeros(m, m);
        let mut sum_sq = DMatrix::<f64>::zeros(m, m);
        for x in &xs {
            let v = x.as_vector();
            let o = v * v.transpose();
            sum_sq += o.component_mul(&o);
            sum += o;
        }
        let nf = n as f64;
        for i in 0..m {
            for j in 0..m {
                let mean = sum[(i, j)] / nf;
                let se = ((sum_sq[(i, j)] / nf - mean * mean) / nf).sqrt();
                let expected = c * theta.as_matrix()[(i, j)];
                assert!((mean - expected).abs() < 5.0 * se, "m {m} s {s} ({i},{j}): {mean} vs {expected} (se {se})");
            }
        }
    }
}

#[test]
fn gaussian_quadratic_form_is_chi_squared() {
    let m = 4;
    let k = KotzModel::new(m, 1.0).unwrap();
    let theta = random_spd(m, &mut seeded_rng(3, 9));
    let prepared = PreparedScatter::new(&theta).unwrap();
    let q: Vec<f64> = k.sample(&theta, 5000, 5).unwrap().iter().map(|x| prepared.quad_form(x)).collect();
    let reference = StChi2::new(m as f64).unwrap();
    let ks = ks_stat(&q, |x| reference.cdf(x)).unwrap();
    assert!(ks < ks_crit_5pct(q.len()), "ks {ks}");
}

#[test]
fn radial_power_is_gamma_distributed() {
    // (xᵀθ⁻¹x)^s / 2 ~ Gamma(m/(2s), 1).
    for (m, s) in [(3, 2.0), (7, 4.0), (2, 0.5)] {
        let k = KotzModel::new(m, s).unwrap();
        let theta = random_spd(m, &mut seeded_rng(m as u64, 8));
        let prepared = PreparedScatter::new(&theta).unwrap();
        let t: Vec<f64> =
            k.sample(&theta, 400_000, 11).unwrap().iter().map(|x| prepared.quad_form(x).powf(s) / 2.0).collect();
        let reference = Gamma::new(m as f64 / (2.0 * s), 1.0).unwrap();
        let ks = ks_stat(&t, |x| reference.cdf(x)).unwrap();
        assert!(ks < ks_crit_5pct(t.len()), "m {m} s {s}: ks {ks}");
    }
}

#[test]
fn ks_is_calibrated_on_chi_squared_draws() {
    let dof = 6;
    let draws = 500;
    let reps = 200;
    let dist = ChiSquared::new(dof as f64).unwrap();
    let mut rng = seeded_rng(2718, 0);
    let mut rejections = 0;
    let mut means = Vec::new();
    for _ in 0..reps {
        let xs: Vec<f64> = (0..draws).map(|_| dist.sample(&mut rng)).collect();
        if ks_stat(&xs, |x| chi2_cdf(x, dof)).unwrap() > ks_crit_5pct(draws) {
            rejections += 1;
        }
        means.push(mean_sd(&xs).0);
    }
    // 5% nominal level; binomial(200, 0.05) lies in [2, 20] with overwhelming probability.
    assert!((2..=20).contains(&rejections), "{rejections} rejections");
    let tol = 3.0 * (2.0 * dof as f64 / draws as f64).sqrt();
    let within = means.iter().filter(|&&m| (m - dof as f64).abs() < tol).count();
    assert!(within >= reps * 97 / 100, "{within}/{reps}");
}

#[test]
fn estimator_approaches_truth() {
    let k = KotzModel::new(3, 2.0).unwrap();
    let theta_star = random_spd(3, &mut seeded_rng(2024, 0));
    let mut cfg = RunConfig::new(k, theta_star, 10_000, 100);
    cfg.ball = Some(Ball { center: CenterMode::Truth, radius: 1.0 });
    let (trajs, failed) = replicate_runs(&cfg, 100, Execution::default()).unwrap();
    assert!(failed.is_empty());
    let p = rsgd::EllipticalFamily::info_coeffs(&k);
    let closer = trajs
        .iter()
        .filter(|t| {
            let d0 = rsgd::manifold::distance_sq(&t.theta0, &cfg.theta_star, p).unwrap();
            t.final_d2().unwrap() < 0.05 * d0
        })
        .count();
    assert!(closer >= 95, "{closer}/100 runs moved close to the truth");
}

#[test]
fn gaussian_run_without_ball_converges() {
    let k = KotzModel::new(2, 1.0).unwrap();
    let cfg = RunConfig::new(k, SpdMatrix::identity(2), 5000, 7);
    let traj = run(&cfg).unwrap();
    assert!(traj.final_d2().unwrap() < 0.01);
}
