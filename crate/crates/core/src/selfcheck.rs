//! Fast invariant checks over the geometry, the model and the score field.
//! Meant to run in a couple of seconds from the command line.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::ecd::{
    gradient_for_metric, invariant_grad_g, log_density_unnorm, EllipticalFamily, KotzModel, PreparedScatter,
};
use crate::error::Result;
use crate::manifold::{decompose, distance, distance_sq, exp_map, inner, log_map, norm, MetricParams};
use crate::random::{random_spd_in, random_symmetric, seeded_rng};
use crate::stats::McEstimate;
use crate::symkernel::{spd_inverse, sym_eig, SpdMatrix};

const TRIALS: usize = 20;
const SEED: u64 = 0x5e1f;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SelfcheckOptions {
    /// Evaluate the score under a deliberately wrong metric. Used to verify
    /// that the gradient check can fail.
    pub inject_metric_bug: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    /// Worst observed error against the check's tolerance.
    pub detail: String,
}

fn verdict(name: &'static str, worst: Result<f64>, tol: f64) -> CheckResult {
    match worst {
        Ok(w) => CheckResult { name, passed: w <= tol, detail: format!("worst {w:.3e} (tol {tol:.0e})") },
        Err(e) => CheckResult { name, passed: false, detail: format!("error: {e}") },
    }
}

fn rel(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm()
}

fn model_metric() -> (KotzModel, MetricParams) {
    let k = KotzModel::new(3, 2.0).expect("valid model");
    (k, k.info_coeffs())
}

fn eig_reconstruction() -> Result<f64> {
    let mut rng = seeded_rng(SEED, 1);
    let mut worst: f64 = 0.0;
    for i in 0..TRIALS {
        let s = random_symmetric(2 + i % 9, &mut rng);
        worst = worst.max(rel(sym_eig(&s)?.reconstruct().as_matrix(), s.as_matrix()));
    }
    Ok(worst)
}

fn inverse_residual() -> Result<f64> {
    let mut rng = seeded_rng(SEED, 2);
    let mut worst: f64 = 0.0;
    for i in 0..TRIALS {
        let dim = 2 + i % 9;
        let a = random_spd_in(dim, 1e-2, 1e2, &mut rng);
        let r = a.as_matrix() * spd_inverse(&a)?.as_matrix() - DMatrix::identity(dim, dim);
        worst = worst.max(r.norm());
    }
    Ok(worst)
}

fn exp_log_round_trip() -> Result<f64> {
    let mut rng = seeded_rng(SEED, 3);
    let mut worst: f64 = 0.0;
    for i in 0..TRIALS {
        let dim = 2 + i % 9;
        let theta = random_spd_in(dim, 0.1, 10.0, &mut rng);
        let tau = random_spd_in(dim, 0.1, 10.0, &mut rng);
        let back = exp_map(&theta, &log_map(&theta, &tau)?)?;
        worst = worst.max(rel(back.as_matrix(), tau.as_matrix()));
    }
    Ok(worst)
}

fn affine_invariance() -> Result<f64> {
    let (_, p) = model_metric();
    let mut rng = seeded_rng(SEED, 4);
    let mut worst: f64 = 0.0;
    for i in 0..TRIALS {
        let dim = 2 + i % 9;
        let theta = random_spd_in(dim, 0.1, 10.0, &mut rng);
        let tau = random_spd_in(dim, 0.1, 10.0, &mut rng);
        let a = random_spd_in(dim, 0.5, 2.0, &mut rng).as_matrix() * crate::random::random_orthogonal(dim, &mut rng);
        let moved = |m: &SpdMatrix| SpdMatrix::new(m.as_sym().congruence(&a));
        let d = distance_sq(&theta, &tau, p)?;
        let da = distance_sq(&moved(&theta)?, &moved(&tau)?, p)?;
        worst = worst.max((d - da).abs() / d);
    }
    Ok(worst)
}

fn geodesic_scaling() -> Result<f64> {
    let (_, p) = model_metric();
    let mut rng = seeded_rng(SEED, 5);
    let mut worst: f64 = 0.0;
    for i in 0..TRIALS {
        let dim = 2 + i % 9;
        let theta = random_spd_in(dim, 0.2, 5.0, &mut rng);
        let u = random_symmetric(dim, &mut rng).congruence(theta.sqrt().as_matrix());
        let u = u.scale(1.0 / norm(&theta, &u, p)?);
        let t = -2.0 + 4.0 * (i as f64 + 0.5) / TRIALS as f64;
        let d = distance(&theta, &exp_map(&theta, &u.scale(t))?, p)?;
        worst = worst.max((d - t.abs()).abs() / t.abs());
    }
    Ok(worst)
}

fn decompose_orthogonality() -> Result<f64> {
    let (_, p) = model_metric();
    let mut rng = seeded_rng(SEED, 6);
    let mut worst: f64 = 0.0;
    for i in 0..TRIALS {
        let dim = 2 + i % 9;
        let theta = random_spd_in(dim, 0.1, 10.0, &mut rng);
        let g = random_symmetric(dim, &mut rng);
        let (par, perp) = decompose(&theta, &g)?;
        let scale = norm(&theta, &par, p)? * norm(&theta, &perp, p)?;
        worst = worst.max(inner(&theta, &par, &perp, p)?.abs() / scale);
    }
    Ok(worst)
}

fn score_gradient(opts: SelfcheckOptions) -> Result<f64> {
    let mut rng = seeded_rng(SEED, 7);
    let mut worst: f64 = 0.0;
    for i in 0..TRIALS {
        let m = [2, 3, 5][i % 3];
        let s = [1.0, 2.0, 4.0][(i / 3) % 3];
        let k = KotzModel::new(m, s)?;
        let p = k.info_coeffs();
        let theta = random_spd_in(m, 0.5, 2.0, &mut rng);
        let x = k.sampler(&theta)?.draw(&mut rng);
        let score_metric = if opts.inject_metric_bug { MetricParams { i1: p.i1 * 1.5, i2: p.i2 } } else { p };
        let u = gradient_for_metric(&theta, &invariant_grad_g(&theta, &x, &k)?, score_metric)?;
        let v = random_symmetric(m, &mut rng);
        let v = v.scale(1.0 / v.frobenius_norm());
        let h = 1e-4;
        let fd = (log_density_unnorm(&exp_map(&theta, &v.scale(h))?, &x, &k)?
            - log_density_unnorm(&exp_map(&theta, &v.scale(-h))?, &x, &k)?)
            / (2.0 * h);
        worst = worst.max((inner(&theta, &u, &v, p)? - fd).abs() / (1.0 + fd.abs()));
    }
    Ok(worst)
}

/// Monte-Carlo estimate of `φ = E[(h′(xᵀx)·xᵀx)²]` under the identity.
pub fn phi_monte_carlo(model: &KotzModel, n: usize, seed: u64) -> Result<McEstimate> {
    let id = SpdMatrix::identity(model.m());
    let sampler = model.sampler(&id)?;
    let mut rng = seeded_rng(seed, 0);
    let mut vals = Vec::with_capacity(n);
    for _ in 0..n {
        let x = sampler.draw(&mut rng);
        let t = x.as_vector().norm_squared();
        let w = model.h_prime(t)? * t;
        vals.push(w * w);
    }
    Ok(McEstimate::from_values(&vals))
}

fn phi_check() -> Result<f64> {
    let k = KotzModel::new(3, 2.0)?;
    let est = phi_monte_carlo(&k, 100_000, SEED)?;
    Ok((est.mean - k.phi()).abs() / est.std_err)
}

/// Entrywise Monte-Carlo mean of the score at the truth, in units of its
/// standard error; the worst entry is returned.
pub fn score_bias_in_se(model: &KotzModel, theta_star: &SpdMatrix, n: usize, seed: u64) -> Result<f64> {
    let m = model.m();
    let prepared = PreparedScatter::new(theta_star)?;
    let sampler = model.sampler(theta_star)?;
    let mut rng = seeded_rng(seed, 0);
    let mut sum = DMatrix::<f64>::zeros(m, m);
    let mut sum_sq = DMatrix::<f64>::zeros(m, m);
    for _ in 0..n {
        let u = prepared.score(&sampler.draw(&mut rng), model)?.into_matrix();
        sum_sq += u.component_mul(&u);
        sum += u;
    }
    let nf = n as f64;
    let mut worst: f64 = 0.0;
    for (s, s2) in sum.iter().zip(sum_sq.iter()) {
        let mean = s / nf;
        let var = (s2 - nf * mean * mean) / (nf - 1.0);
        let se = (var.max(0.0) / nf).sqrt();
        worst = worst.max(mean.abs() / se);
    }
    Ok(worst)
}

fn score_unbiased() -> Result<f64> {
    let k = KotzModel::new(3, 2.0)?;
    let theta = random_spd_in(3, 0.5, 2.0, &mut seeded_rng(SEED, 8));
    score_bias_in_se(&k, &theta, 20_000, SEED)
}

/// Runs every check and returns one row per check.
pub fn run_selfcheck(opts: SelfcheckOptions) -> Vec<CheckResult> {
    vec![
        verdict("eig_reconstruction", eig_reconstruction(), 1e-10),
        verdict("spd_inverse_residual", inverse_residual(), 1e-10),
        verdict("exp_log_round_trip", exp_log_round_trip(), 1e-9),
        verdict("affine_invariance", affine_invariance(), 1e-8),
        verdict("geodesic_scaling", geodesic_scaling(), 1e-8),
        verdict("decompose_orthogonality", decompose_orthogonality(), 1e-10),
        verdict("score_metric_gradient", score_gradient(opts), 1e-5),
        verdict("phi_monte_carlo_se", phi_check(), 3.0),
        verdict("score_unbiased_se", score_unbiased(), 4.0),
    ]
}
