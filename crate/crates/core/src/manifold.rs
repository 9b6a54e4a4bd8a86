//! The manifold of SPD matrices with the two-parameter affine-invariant
//! metric family
//!
//! ```text
//! <u, v>_θ = I₁ tr(θ⁻¹u θ⁻¹v) + I₂ tr(θ⁻¹u) tr(θ⁻¹v)
//! ```
//!
//! All products of the form `θ⁻¹τ` are evaluated through the congruence
//! `θ^{-1/2} τ θ^{-1/2}`, which is similar to `θ⁻¹τ` but symmetric.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::symkernel::{sym_eig, SpdMatrix, SymMatrix, TangentVec};

/// Coefficients `(I₁, I₂)` of an affine-invariant metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricParams {
    pub i1: f64,
    pub i2: f64,
}

impl MetricParams {
    /// Requires `i1 > 0`. `i2` may be negative; the metric is positive
    /// definite on `m x m` matrices iff additionally `i1 + m·i2 > 0`, which
    /// [`GradCoeffs::new`] checks once the dimension is known.
    pub fn new(i1: f64, i2: f64) -> Result<Self> {
        if !(i1 > 0.0 && i1.is_finite()) || !i2.is_finite() {
            return Err(Error::InvalidInput(format!(
                "metric coefficients must satisfy i1 > 0 and be finite, got ({i1}, {i2})"
            )));
        }
        Ok(Self { i1, i2 })
    }

    /// The metric with `I₁ = 1, I₂ = 0`.
    pub fn canonical() -> Self {
        Self { i1: 1.0, i2: 0.0 }
    }
}

/// Eigenvalues of the metric on the traceless (`j1`) and pure-trace (`j2`)
/// subspaces of the tangent space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCoeffs {
    pub j1: f64,
    pub j2: f64,
}

impl GradCoeffs {
    pub fn new(p: MetricParams, dim: usize) -> Result<Self> {
        let j2 = p.i1 + dim as f64 * p.i2;
        if j2.is_nan() || j2 <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "metric ({}, {}) is not positive definite in dimension {dim}",
                p.i1, p.i2
            )));
        }
        Ok(Self { j1: p.i1, j2 })
    }
}

fn check_same_dim(theta: &SpdMatrix, u: &SymMatrix) -> Result<()> {
    theta.as_sym().check_dim(u)
}

/// `θ^{-1/2} u θ^{-1/2}`.
fn whiten(theta: &SpdMatrix, u: &SymMatrix) -> Result<SymMatrix> {
    Ok(u.congruence(theta.inv_sqrt()?.as_matrix()))
}

/// Riemannian inner product `<u, v>_θ`.
pub fn inner(theta: &SpdMatrix, u: &TangentVec, v: &TangentVec, p: MetricParams) -> Result<f64> {
    check_same_dim(theta, u)?;
    check_same_dim(theta, v)?;
    let w = theta.inv_sqrt()?;
    let uw = u.congruence(w.as_matrix());
    let vw = v.congruence(w.as_matrix());
    Ok(p.i1 * uw.trace_product(&vw) + p.i2 * uw.trace() * vw.trace())
}

pub fn norm(theta: &SpdMatrix, u: &TangentVec, p: MetricParams) -> Result<f64> {
    Ok(inner(theta, u, u, p)?.max(0.0).sqrt())
}

/// `Exp_θ(u) = θ exp(θ⁻¹u)`, evaluated as `θ^{1/2} exp(θ^{-1/2} u θ^{-1/2}) θ^{1/2}`.
pub fn exp_map(theta: &SpdMatrix, u: &TangentVec) -> Result<SpdMatrix> {
    check_same_dim(theta, u)?;
    let e = sym_eig(&whiten(theta, u)?)?;
    if e.max_value() > f64::MAX.ln() {
        return Err(Error::InvalidInput(format!("exponential overflows (eigenvalue {:e})", e.max_value())));
    }
    let inner = e.reconstruct_with(f64::exp);
    SpdMatrix::new(inner.congruence(theta.sqrt().as_matrix()))
}

/// Inverse of [`exp_map`]: `θ^{1/2} log(θ^{-1/2} τ θ^{-1/2}) θ^{1/2}`.
pub fn log_map(theta: &SpdMatrix, tau: &SpdMatrix) -> Result<TangentVec> {
    check_same_dim(theta, tau.as_sym())?;
    let e = sym_eig(&whiten(theta, tau.as_sym())?)?;
    if e.min_value() <= 0.0 {
        return Err(Error::DomainError("congruence lost positive definiteness".into()));
    }
    Ok(e.reconstruct_with(f64::ln).congruence(theta.sqrt().as_matrix()))
}

/// Squared geodesic distance `I₁ tr(L²) + I₂ tr²(L)` with `L = log(θ^{-1/2} τ θ^{-1/2})`.
pub fn distance_sq(theta: &SpdMatrix, tau: &SpdMatrix, p: MetricParams) -> Result<f64> {
    check_same_dim(theta, tau.as_sym())?;
    let e = sym_eig(&whiten(theta, tau.as_sym())?)?;
    if e.min_value() <= 0.0 {
        return Err(Error::DomainError("congruence lost positive definiteness".into()));
    }
    let (sum, sum_sq) = e.values.iter().fold((0.0, 0.0), |(s, s2), &l| {
        let ll = l.ln();
        (s + ll, s2 + ll * ll)
    });
    Ok((p.i1 * sum_sq + p.i2 * sum * sum).max(0.0))
}

pub fn distance(theta: &SpdMatrix, tau: &SpdMatrix, p: MetricParams) -> Result<f64> {
    Ok(distance_sq(theta, tau, p)?.sqrt())
}

/// Splits `g` into its component along `θ` and the `θ`-traceless remainder:
/// `g_par = tr(θ⁻¹g)·θ/m`, `g_perp = g − g_par`. The two parts are orthogonal
/// under every metric of the family.
pub fn decompose(theta: &SpdMatrix, g: &TangentVec) -> Result<(TangentVec, TangentVec)> {
    check_same_dim(theta, g)?;
    let tr = theta.inverse()?.as_sym().trace_product(g);
    let g_par = theta.as_sym().scale(tr / theta.dim() as f64);
    let g_perp = g - &g_par;
    Ok((g_par, g_perp))
}

/// Retracts `x` along the geodesic toward `center` until it lies within
/// `radius`. Points already inside the ball are returned unchanged.
pub fn project_to_ball(x: &SpdMatrix, center: &SpdMatrix, radius: f64, p: MetricParams) -> Result<SpdMatrix> {
    if radius.is_nan() || radius <= 0.0 {
        return Err(Error::InvalidInput(format!("ball radius must be positive, got {radius}")));
    }
    let d = distance(center, x, p)?;
    if d <= radius {
        return Ok(x.clone());
    }
    let v = log_map(center, x)?;
    exp_map(center, &v.scale(radius / d))
}
