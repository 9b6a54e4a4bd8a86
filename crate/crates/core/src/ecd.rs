//! Elliptically contoured distributions with scatter matrix `θ`:
//!
//! ```text
//! p(x | θ) ∝ exp[ h(xᵀθ⁻¹x) − ½ log det θ ]
//! ```
//!
//! The normalizing constant does not depend on `θ` and is never computed;
//! every likelihood quantity here is a difference of unnormalized log
//! densities.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifold::{decompose, GradCoeffs, MetricParams};
use crate::random::seeded_rng;
use crate::symkernel::{SpdMatrix, SymMatrix, TangentVec};

/// A density generator `h` of an elliptical family in a fixed dimension.
pub trait EllipticalFamily {
    fn dim(&self) -> usize;

    /// The kernel `h(t)`, defined for `t ≥ 0`.
    fn h(&self, t: f64) -> Result<f64>;

    fn h_prime(&self, t: f64) -> Result<f64>;

    /// `φ = E[(h′(xᵀx)·xᵀx)²]` under the identity scatter matrix.
    fn phi(&self) -> f64;

    /// Coefficients of the Fisher information metric of the family:
    /// `I₁ = 2φ/(m(m+2))`, `I₂ = φ/(m(m+2)) − 1/4`.
    fn info_coeffs(&self) -> MetricParams {
        let m = self.dim() as f64;
        let phi = self.phi();
        MetricParams { i1: 2.0 * phi / (m * (m + 2.0)), i2: phi / (m * (m + 2.0)) - 0.25 }
    }

    fn grad_coeffs(&self) -> GradCoeffs {
        GradCoeffs::new(self.info_coeffs(), self.dim()).expect("information metric is positive definite")
    }
}

/// Kotz-type family `h(t) = −t^s / 2` in dimension `m`. `s = 1` is the
/// centred Gaussian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KotzModel {
    m: usize,
    s: f64,
}

impl KotzModel {
    pub const MAX_SHAPE: f64 = 9.0;

    pub fn new(m: usize, s: f64) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidInput("dimension must be at least 1".into()));
        }
        if !(s > 0.0 && s <= Self::MAX_SHAPE) {
            return Err(Error::InvalidInput(format!("shape exponent must lie in (0, {}], got {s}", Self::MAX_SHAPE)));
        }
        Ok(Self { m, s })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    /// Shape of the gamma law of `(xᵀθ⁻¹x)^s / 2`.
    pub fn radial_shape(&self) -> f64 {
        self.m as f64 / (2.0 * self.s)
    }

    /// Number of free parameters of an `m x m` scatter matrix, `m(m+1)/2`.
    pub fn param_dim(&self) -> usize {
        self.m * (self.m + 1) / 2
    }

    /// A sampler drawing from this model with scatter matrix `theta`.
    pub fn sampler(&self, theta: &SpdMatrix) -> Result<KotzSampler> {
        if theta.dim() != self.m {
            return Err(Error::InvalidInput(format!(
                "scatter matrix has dimension {}, model has {}",
                theta.dim(),
                self.m
            )));
        }
        let gamma = Gamma::new(self.radial_shape(), 1.0).map_err(|e| Error::InvalidInput(format!("gamma law: {e}")))?;
        Ok(KotzSampler { model: *self, root: theta.sqrt().as_matrix().clone(), gamma })
    }

    /// `count` independent draws, reproducible from `seed`.
    pub fn sample(&self, theta: &SpdMatrix, count: usize, seed: u64) -> Result<Vec<Sample>> {
        if count == 0 {
            return Err(Error::InvalidInput("sample count must be at least 1".into()));
        }
        let sampler = self.sampler(theta)?;
        let mut rng = seeded_rng(seed, 0);
        Ok((0..count).map(|_| sampler.draw(&mut rng)).collect())
    }
}

fn check_t(t: f64) -> Result<()> {
    if t >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("kernel argument must be non-negative, got {t}")))
    }
}

impl EllipticalFamily for KotzModel {
    fn dim(&self) -> usize {
        self.m
    }

    fn h(&self, t: f64) -> Result<f64> {
        check_t(t)?;
        Ok(-0.5 * t.powf(self.s))
    }

    fn h_prime(&self, t: f64) -> Result<f64> {
        check_t(t)?;
        Ok(-0.5 * self.s * t.powf(self.s - 1.0))
    }

    fn phi(&self) -> f64 {
        let k = self.radial_shape();
        self.s * self.s * k * (k + 1.0)
    }
}

/// One observation `x ∈ ℝ^m`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    x: DVector<f64>,
}

impl Sample {
    pub fn new(x: Vec<f64>) -> Result<Self> {
        if x.is_empty() || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("sample must be a non-empty finite vector".into()));
        }
        Ok(Self { x: DVector::from_vec(x) })
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.x
    }

    pub fn as_slice(&self) -> &[f64] {
        self.x.as_slice()
    }
}

/// Draws `x = r·θ^{1/2}·ω` with `ω` uniform on the unit sphere and
/// `r = (2T)^{1/(2s)}`, `T ~ Gamma(m/(2s), 1)`.
#[derive(Debug, Clone)]
pub struct KotzSampler {
    model: KotzModel,
    root: DMatrix<f64>,
    gamma: Gamma<f64>,
}

impl KotzSampler {
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Sample {
        let m = self.model.m;
        let dir = loop {
            let z = DVector::<f64>::from_fn(m, |_, _| StandardNormal.sample(rng));
            let n = z.norm();
            if n > 0.0 {
                break z / n;
            }
        };
        let t: f64 = self.gamma.sample(rng);
        let r = (2.0 * t).powf(1.0 / (2.0 * self.model.s));
        Sample { x: &self.root * dir * r }
    }
}

/// `θ` with its inverse and log-determinant precomputed, for repeated
/// evaluation against many samples.
#[derive(Debug, Clone)]
pub struct PreparedScatter<'a> {
    theta: &'a SpdMatrix,
    inv: SpdMatrix,
    log_det: f64,
}

impl<'a> PreparedScatter<'a> {
    pub fn new(theta: &'a SpdMatrix) -> Result<Self> {
        Ok(Self { theta, inv: theta.inverse()?, log_det: theta.log_det() })
    }

    fn check(&self, x: &Sample) -> Result<()> {
        if x.dim() != self.theta.dim() {
            return Err(Error::InvalidInput(format!(
                "sample has dimension {}, scatter matrix has {}",
                x.dim(),
                self.theta.dim()
            )));
        }
        Ok(())
    }

    /// `xᵀθ⁻¹x`, clamped at zero against rounding.
    pub fn quad_form(&self, x: &Sample) -> f64 {
        x.x.dot(&(self.inv.as_matrix() * &x.x)).max(0.0)
    }

    pub fn log_density_unnorm<F: EllipticalFamily>(&self, x: &Sample, model: &F) -> Result<f64> {
        self.check(x)?;
        Ok(model.h(self.quad_form(x))? - 0.5 * self.log_det)
    }

    pub fn invariant_grad<F: EllipticalFamily>(&self, x: &Sample, model: &F) -> Result<TangentVec> {
        self.check(x)?;
        let hp = model.h_prime(self.quad_form(x))?;
        let outer = &x.x * x.x.transpose();
        Ok(SymMatrix::from_matrix_unchecked(self.theta.as_matrix() * -0.5 - outer * hp))
    }

    pub fn score<F: EllipticalFamily>(&self, x: &Sample, model: &F) -> Result<TangentVec> {
        let g = self.invariant_grad(x, model)?;
        Ok(riemannian_gradient(self.theta, &self.inv, &g, model.grad_coeffs()))
    }
}

/// `J₁⁻¹ g_perp + J₂⁻¹ g_par`, reusing a precomputed `θ⁻¹`.
fn riemannian_gradient(theta: &SpdMatrix, inv: &SpdMatrix, g: &TangentVec, c: GradCoeffs) -> TangentVec {
    let tr = inv.as_sym().trace_product(g);
    let g_par = theta.as_sym().scale(tr / theta.dim() as f64);
    let g_perp = g - &g_par;
    &g_perp.scale(1.0 / c.j1) + &g_par.scale(1.0 / c.j2)
}

/// `h(xᵀθ⁻¹x) − ½ log det θ`.
pub fn log_density_unnorm<F: EllipticalFamily>(theta: &SpdMatrix, x: &Sample, model: &F) -> Result<f64> {
    PreparedScatter::new(theta)?.log_density_unnorm(x, model)
}

/// Gradient of the log density under the canonical affine-invariant metric
/// (`I₁ = 1, I₂ = 0`): `g(θ, x) = −½θ − h′(xᵀθ⁻¹x)·x xᵀ`.
pub fn invariant_grad_g<F: EllipticalFamily>(theta: &SpdMatrix, x: &Sample, model: &F) -> Result<TangentVec> {
    PreparedScatter::new(theta)?.invariant_grad(x, model)
}

/// Converts a canonical-metric gradient `g` into the gradient for metric
/// `p` by rescaling its two orthogonal components.
pub fn gradient_for_metric(theta: &SpdMatrix, g: &TangentVec, p: MetricParams) -> Result<TangentVec> {
    let c = GradCoeffs::new(p, theta.dim())?;
    let (g_par, g_perp) = decompose(theta, g)?;
    Ok(&g_perp.scale(1.0 / c.j1) + &g_par.scale(1.0 / c.j2))
}

/// The score `u(θ, x)`: the information-metric gradient of `log p(x | θ)`.
pub fn score_u<F: EllipticalFamily>(theta: &SpdMatrix, x: &Sample, model: &F) -> Result<TangentVec> {
    PreparedScatter::new(theta)?.score(x, model)
}

/// `log p(x | θ) − log p(x | θ*)`.
pub fn log_likelihood_ratio<F: EllipticalFamily>(
    theta: &SpdMatrix,
    theta_star: &SpdMatrix,
    x: &Sample,
    model: &F,
) -> Result<f64> {
    Ok(log_density_unnorm(theta, x, model)? - log_density_unnorm(theta_star, x, model)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{exp_map, inner};
    use crate::random::{random_spd, random_symmetric};
    use approx::assert_relative_eq;

    #[test]
    fn kernel_examples() {
        let k4 = KotzModel::new(3, 4.0).unwrap();
        assert_eq!(k4.h(1.0).unwrap(), -0.5);
        assert_eq!(k4.h(0.0).unwrap(), 0.0);
        let k1 = KotzModel::new(3, 1.0).unwrap();
        assert_eq!(k1.h_prime(2.0).unwrap(), -0.5);
        assert!(matches!(k1.h(-1.0), Err(Error::InvalidInput(_))));
        assert!(k1.h_prime(-1e-3).is_err());
    }

    #[test]
    fn kernel_derivative_matches_finite_difference() {
        for s in [0.5, 1.0, 2.0, 4.0, 9.0] {
            let k = KotzModel::new(2, s).unwrap();
            for t in [0.1, 0.5, 1.0, 3.0, 10.0] {
                let eps = 1e-5 * t;
                let fd = (k.h(t + eps).unwrap() - k.h(t - eps).unwrap()) / (2.0 * eps);
                let hp = k.h_prime(t).unwrap();
                assert!((fd - hp).abs() <= 1e-6 * hp.abs(), "s={s} t={t}");
            }
        }
    }

    #[test]
    fn model_validation() {
        assert!(KotzModel::new(0, 1.0).is_err());
        assert!(KotzModel::new(2, 0.0).is_err());
        assert!(KotzModel::new(2, 9.5).is_err());
        assert!(KotzModel::new(2, 9.0).is_ok());
    }

    #[test]
    fn phi_examples() {
        assert_relative_eq!(KotzModel::new(7, 4.0).unwrap().phi(), 26.25, epsilon = 1e-12);
        assert_relative_eq!(KotzModel::new(2, 1.0).unwrap().phi(), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn info_coeffs_closed_form() {
        // For Kotz, I₁ = (m+2s)/(2(m+2)) and I₂ = (s−1)/(2(m+2)); J₂ = s/2.
        for m in 1..=50 {
            for s in 1..=9 {
                let k = KotzModel::new(m, s as f64).unwrap();
                let p = k.info_coeffs();
                let (mf, sf) = (m as f64, s as f64);
                assert_relative_eq!(p.i1, (mf + 2.0 * sf) / (2.0 * (mf + 2.0)), epsilon = 1e-12);
                assert_relative_eq!(p.i2, (sf - 1.0) / (2.0 * (mf + 2.0)), epsilon = 1e-12);
                assert!(p.i2 >= -1e-15);
                assert_relative_eq!(k.grad_coeffs().j2, sf / 2.0, epsilon = 1e-12);
            }
        }
        let gauss = KotzModel::new(2, 1.0).unwrap().info_coeffs();
        assert_relative_eq!(gauss.i1, 0.5, epsilon = 1e-15);
        assert!(gauss.i2.abs() < 1e-15);
        let p = KotzModel::new(7, 4.0).unwrap().info_coeffs();
        assert_relative_eq!(p.i1, 15.0 / 18.0, epsilon = 1e-14);
        assert_relative_eq!(p.i2, 3.0 / 18.0, epsilon = 1e-14);
    }

    #[test]
    fn small_shape_metric_stays_positive_definite() {
        let k = KotzModel::new(5, 0.3).unwrap();
        assert!(k.info_coeffs().i2 < 0.0);
        assert_relative_eq!(k.grad_coeffs().j2, 0.15, epsilon = 1e-14);
    }

    #[test]
    fn log_density_examples() {
        let k = KotzModel::new(2, 1.0).unwrap();
        let zero = Sample::new(vec![0.0, 0.0]).unwrap();
        assert_eq!(log_density_unnorm(&SpdMatrix::identity(2), &zero, &k).unwrap(), 0.0);
        let c: f64 = 3.0;
        let theta = SpdMatrix::from_diagonal(&[c, c]).unwrap();
        assert_relative_eq!(log_density_unnorm(&theta, &zero, &k).unwrap(), -c.ln(), epsilon = 1e-15);
        let e1 = Sample::new(vec![1.0, 0.0]).unwrap();
        assert_relative_eq!(log_density_unnorm(&SpdMatrix::identity(2), &e1, &k).unwrap(), -0.5, epsilon = 1e-15);
        let three = Sample::new(vec![1.0, 0.0, 0.0]).unwrap();
        assert!(log_density_unnorm(&SpdMatrix::identity(2), &three, &k).is_err());
    }

    #[test]
    fn invariant_grad_examples() {
        let k = KotzModel::new(2, 1.0).unwrap();
        let theta = SpdMatrix::from_rows(&[vec![2.0, 0.3], vec![0.3, 1.0]]).unwrap();
        let zero = Sample::new(vec![0.0, 0.0]).unwrap();
        let g = invariant_grad_g(&theta, &zero, &k).unwrap();
        assert_eq!(g, theta.as_sym().scale(-0.5));

        let x = Sample::new(vec![0.7, -1.1]).unwrap();
        let g = invariant_grad_g(&SpdMatrix::identity(2), &x, &k).unwrap();
        let xv = x.as_vector();
        let expected = (xv * xv.transpose()) * 0.5 - DMatrix::identity(2, 2) * 0.5;
        assert_relative_eq!(g.as_matrix(), &expected, epsilon = 1e-15);
    }

    fn geodesic_derivative<F: EllipticalFamily>(theta: &SpdMatrix, v: &SymMatrix, x: &Sample, model: &F) -> f64 {
        let h = 1e-4;
        let up = exp_map(theta, &v.scale(h)).unwrap();
        let down = exp_map(theta, &v.scale(-h)).unwrap();
        (log_density_unnorm(&up, x, model).unwrap() - log_density_unnorm(&down, x, model).unwrap()) / (2.0 * h)
    }

    #[test]
    fn invariant_grad_is_canonical_metric_gradient() {
        let mut rng = seeded_rng(21, 0);
        for m in [2, 3, 5] {
            let k = KotzModel::new(m, 2.0).unwrap();
            let theta = random_spd(m, &mut rng);
            let x = k.sampler(&theta).unwrap().draw(&mut rng);
            let g = invariant_grad_g(&theta, &x, &k).unwrap();
            let v = random_symmetric(m, &mut rng);
            let fd = geodesic_derivative(&theta, &v, &x, &k);
            let ip = inner(&theta, &g, &v, MetricParams::canonical()).unwrap();
            assert!((ip - fd).abs() <= 1e-5 * (1.0 + fd.abs()), "m={m}: {ip} vs {fd}");
        }
    }

    #[test]
    fn score_is_information_metric_gradient() {
        let mut rng = seeded_rng(22, 0);
        for (m, s) in [(2, 1.0), (3, 2.0), (5, 4.0), (4, 0.6)] {
            let k = KotzModel::new(m, s).unwrap();
            let theta = random_spd(m, &mut rng);
            let x = k.sampler(&theta).unwrap().draw(&mut rng);
            let u = score_u(&theta, &x, &k).unwrap();
            let v = random_symmetric(m, &mut rng);
            let fd = geodesic_derivative(&theta, &v, &x, &k);
            let ip = inner(&theta, &u, &v, k.info_coeffs()).unwrap();
            assert!((ip - fd).abs() <= 1e-5 * (1.0 + fd.abs()), "m={m} s={s}: {ip} vs {fd}");
        }
    }

    #[test]
    fn score_of_pure_trace_gradient() {
        let k = KotzModel::new(3, 2.0).unwrap();
        let id = SpdMatrix::identity(3);
        let u = gradient_for_metric(&id, &SymMatrix::identity(3), k.info_coeffs()).unwrap();
        let j2 = k.grad_coeffs().j2;
        assert_relative_eq!(u.as_matrix(), SymMatrix::identity(3).scale(1.0 / j2).as_matrix(), epsilon = 1e-14);
    }

    #[test]
    fn score_is_linear_in_gradient() {
        let k = KotzModel::new(3, 2.0).unwrap();
        let mut rng = seeded_rng(4, 0);
        let theta = random_spd(3, &mut rng);
        let g = random_symmetric(3, &mut rng);
        let p = k.info_coeffs();
        let u1 = gradient_for_metric(&theta, &g, p).unwrap();
        let u2 = gradient_for_metric(&theta, &g.scale(2.0), p).unwrap();
        assert_relative_eq!(u2.as_matrix(), &(u1.as_matrix() * 2.0), epsilon = 1e-13);
    }

    #[test]
    fn sampler_is_deterministic() {
        let k = KotzModel::new(3, 2.0).unwrap();
        let theta = SpdMatrix::from_diagonal(&[1.0, 2.0, 0.5]).unwrap();
        let a = k.sample(&theta, 50, 9).unwrap();
        let b = k.sample(&theta, 50, 9).unwrap();
        let c = k.sample(&theta, 50, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(k.sample(&theta, 0, 9).is_err());
        assert!(k.sample(&SpdMatrix::identity(2), 1, 9).is_err());
    }

    #[test]
    fn likelihood_ratio_examples() {
        let k = KotzModel::new(2, 2.0).unwrap();
        let a = SpdMatrix::from_rows(&[vec![2.0, 0.3], vec![0.3, 1.0]]).unwrap();
        let b = SpdMatrix::from_diagonal(&[0.5, 3.0]).unwrap();
        let x = Sample::new(vec![0.4, 1.3]).unwrap();
        assert_eq!(log_likelihood_ratio(&a, &a, &x, &k).unwrap(), 0.0);
        let zero = Sample::new(vec![0.0, 0.0]).unwrap();
        assert_relative_eq!(
            log_likelihood_ratio(&a, &b, &zero, &k).unwrap(),
            -0.5 * (a.log_det() - b.log_det()),
            epsilon = 1e-14
        );
    }
}
