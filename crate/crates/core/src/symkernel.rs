//! Dense real symmetric matrices and their spectral calculus.
//!
//! Every matrix function used by the geometry layer (exp, log, square roots,
//! inverses) goes through a single cyclic Jacobi eigendecomposition, so the
//! results are symmetric by construction and accurate for the small
//! dimensions this crate targets.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Smallest eigenvalue accepted for a positive-definite matrix.
pub const EIG_FLOOR: f64 = 1e-12;

const JACOBI_MAX_SWEEPS: usize = 100;
const JACOBI_REL_TOL: f64 = 1e-14;

/// A real symmetric `m x m` matrix.
///
/// Storage is symmetrized as `(A + Aᵀ)/2` on construction, so
/// `self[(i, j)] == self[(j, i)]` holds bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    data: DMatrix<f64>,
}

/// Tangent vectors at a point of the SPD manifold are symmetric matrices.
pub type TangentVec = SymMatrix;

fn symmetrize(mut a: DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    a
}

impl SymMatrix {
    /// Validates and symmetrizes a square matrix with finite entries.
    pub fn new(a: DMatrix<f64>) -> Result<Self> {
        if a.nrows() == 0 || a.nrows() != a.ncols() {
            return Err(Error::InvalidInput(format!(
                "expected a non-empty square matrix, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("matrix has non-finite entries".into()));
        }
        Ok(Self { data: symmetrize(a) })
    }

    /// Symmetrizes without validation. Callers guarantee a square, finite input.
    pub(crate) fn from_matrix_unchecked(a: DMatrix<f64>) -> Self {
        debug_assert_eq!(a.nrows(), a.ncols());
        Self { data: symmetrize(a) }
    }

    pub fn from_row_slice(dim: usize, entries: &[f64]) -> Result<Self> {
        if dim == 0 || entries.len() != dim * dim {
            return Err(Error::InvalidInput(format!(
                "expected {} entries for dimension {}, got {}",
                dim * dim,
                dim,
                entries.len()
            )));
        }
        Self::new(DMatrix::from_row_slice(dim, dim, entries))
    }

    /// Builds a matrix from nested rows, rejecting ragged input.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::InvalidInput("matrix rows must form a square".into()));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::from_row_slice(dim, &flat)
    }

    pub fn identity(dim: usize) -> Self {
        Self { data: DMatrix::identity(dim, dim) }
    }

    pub fn zeros(dim: usize) -> Self {
        Self { data: DMatrix::zeros(dim, dim) }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        Self { data: DMatrix::from_diagonal(&DVector::from_row_slice(diag)) }
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.row_iter().map(|r| r.iter().copied().collect()).collect()
    }

    pub fn trace(&self) -> f64 {
        self.data.trace()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.norm()
    }

    pub fn scale(&self, k: f64) -> Self {
        Self { data: &self.data * k }
    }

    /// `A · self · Aᵀ` for an arbitrary square `A`.
    pub fn congruence(&self, a: &DMatrix<f64>) -> Self {
        Self::from_matrix_unchecked(a * &self.data * a.transpose())
    }

    /// `tr(self · other)` for two symmetric matrices.
    pub fn trace_product(&self, other: &SymMatrix) -> f64 {
        self.data.component_mul(&other.data).sum()
    }

    pub(crate) fn check_dim(&self, other: &SymMatrix) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::InvalidInput(format!("dimension mismatch: {} vs {}", self.dim(), other.dim())));
        }
        Ok(())
    }
}

impl std::ops::Index<(usize, usize)> for SymMatrix {
    type Output = f64;
    fn index(&self, idx: (usize, usize)) -> &f64 {
        &self.data[idx]
    }
}

impl Add for &SymMatrix {
    type Output = SymMatrix;
    fn add(self, rhs: &SymMatrix) -> SymMatrix {
        SymMatrix { data: &self.data + &rhs.data }
    }
}

impl Sub for &SymMatrix {
    type Output = SymMatrix;
    fn sub(self, rhs: &SymMatrix) -> SymMatrix {
        SymMatrix { data: &self.data - &rhs.data }
    }
}

impl Neg for &SymMatrix {
    type Output = SymMatrix;
    fn neg(self) -> SymMatrix {
        SymMatrix { data: -&self.data }
    }
}

impl Mul<f64> for &SymMatrix {
    type Output = SymMatrix;
    fn mul(self, k: f64) -> SymMatrix {
        self.scale(k)
    }
}

/// Eigendecomposition `S = Q · diag(values) · Qᵀ` with ascending eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct EigDecomp {
    pub vectors: DMatrix<f64>,
    pub values: DVector<f64>,
}

impl EigDecomp {
    /// `Q · diag(f(λ)) · Qᵀ`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        let mut scaled = self.vectors.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= f(self.values[j]);
        }
        SymMatrix::from_matrix_unchecked(scaled * self.vectors.transpose())
    }

    pub fn reconstruct(&self) -> SymMatrix {
        self.reconstruct_with(|x| x)
    }

    pub fn min_value(&self) -> f64 {
        self.values[0]
    }

    pub fn max_value(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// Decomposition of `Q · diag(f(λ)) · Qᵀ`, re-sorted ascending.
    fn mapped(&self, f: impl Fn(f64) -> f64) -> EigDecomp {
        let n = self.values.len();
        let mapped: Vec<f64> = self.values.iter().map(|&v| f(v)).collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| mapped[i].total_cmp(&mapped[j]));
        let values = DVector::from_iterator(n, order.iter().map(|&i| mapped[i]));
        let vectors = self.vectors.select_columns(order.iter());
        EigDecomp { vectors, values }
    }
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
pub fn sym_eig(s: &SymMatrix) -> Result<EigDecomp> {
    if s.data.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("matrix has non-finite entries".into()));
    }
    let n = s.dim();
    let mut a = s.data.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    let tol = JACOBI_REL_TOL * a.norm();

    let mut converged = false;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[(p, q)] * a[(p, q)];
            }
        }
        if (2.0 * off).sqrt() <= tol {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - sn * akq;
                    a[(k, q)] = sn * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - sn * aqk;
                    a[(q, k)] = sn * apk + c * aqk;
                }
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - sn * vkq;
                    v[(k, q)] = sn * vkp + c * vkq;
                }
            }
        }
    }
    if !converged {
        return Err(Error::NoConvergence { sweeps: JACOBI_MAX_SWEEPS });
    }

    let diag: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| diag[i].total_cmp(&diag[j]));
    Ok(EigDecomp {
        vectors: v.select_columns(order.iter()),
        values: DVector::from_iterator(n, order.iter().map(|&i| diag[i])),
    })
}

/// Scalar functions with a spectral domain restriction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpectralFn {
    Exp,
    Log,
    Sqrt,
    InvSqrt,
    Inverse,
    Pow(f64),
}

impl SpectralFn {
    fn check_domain(self, min_eig: f64) -> Result<()> {
        let ok = match self {
            SpectralFn::Exp => true,
            SpectralFn::Log | SpectralFn::InvSqrt | SpectralFn::Inverse => min_eig > 0.0,
            SpectralFn::Sqrt => min_eig >= 0.0,
            SpectralFn::Pow(p) => min_eig > 0.0 || (min_eig == 0.0 && p > 0.0),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::DomainError(format!("{self:?} undefined for smallest eigenvalue {min_eig:e}")))
        }
    }

    fn apply(self, x: f64) -> f64 {
        match self {
            SpectralFn::Exp => x.exp(),
            SpectralFn::Log => x.ln(),
            SpectralFn::Sqrt => x.sqrt(),
            SpectralFn::InvSqrt => 1.0 / x.sqrt(),
            SpectralFn::Inverse => 1.0 / x,
            SpectralFn::Pow(p) => x.powf(p),
        }
    }
}

/// `Q · diag(f(λᵢ)) · Qᵀ` for one of the standard spectral functions.
pub fn sym_fn(s: &SymMatrix, f: SpectralFn) -> Result<SymMatrix> {
    let eig = sym_eig(s)?;
    f.check_domain(eig.min_value())?;
    Ok(eig.reconstruct_with(|x| f.apply(x)))
}

/// `Q · diag(f(λᵢ)) · Qᵀ` for an arbitrary scalar function.
pub fn sym_map(s: &SymMatrix, f: impl Fn(f64) -> f64) -> Result<SymMatrix> {
    Ok(sym_eig(s)?.reconstruct_with(f))
}

/// A symmetric positive-definite matrix together with its eigendecomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdMatrix {
    sym: SymMatrix,
    eig: EigDecomp,
}

impl SpdMatrix {
    pub fn new(sym: SymMatrix) -> Result<Self> {
        let eig = sym_eig(&sym)?;
        Self::validate(&eig)?;
        Ok(Self { sym, eig })
    }

    pub fn from_matrix(a: DMatrix<f64>) -> Result<Self> {
        Self::new(SymMatrix::new(a)?)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(SymMatrix::from_rows(rows)?)
    }

    pub fn identity(dim: usize) -> Self {
        Self::new(SymMatrix::identity(dim)).expect("identity is SPD")
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        Self::new(SymMatrix::from_diagonal(diag))
    }

    fn validate(eig: &EigDecomp) -> Result<()> {
        let min_eig = eig.min_value();
        if min_eig <= 0.0 {
            Err(Error::NotPositiveDefinite { min_eig })
        } else if min_eig <= EIG_FLOOR {
            Err(Error::IllConditioned { min_eig })
        } else {
            Ok(())
        }
    }

    /// `f(self)` for a function positive on the spectrum, reusing the eigenvectors.
    fn map_spd(&self, f: impl Fn(f64) -> f64 + Copy) -> Result<SpdMatrix> {
        let eig = self.eig.mapped(f);
        if eig.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("spectral function overflowed".into()));
        }
        Self::validate(&eig)?;
        Ok(SpdMatrix { sym: self.eig.reconstruct_with(f), eig })
    }

    pub fn dim(&self) -> usize {
        self.sym.dim()
    }

    pub fn as_sym(&self) -> &SymMatrix {
        &self.sym
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        self.sym.as_matrix()
    }

    pub fn eig(&self) -> &EigDecomp {
        &self.eig
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.sym.to_rows()
    }

    pub fn sqrt(&self) -> SpdMatrix {
        self.map_spd(f64::sqrt).expect("square root of an SPD matrix is SPD")
    }

    pub fn inv_sqrt(&self) -> Result<SpdMatrix> {
        self.map_spd(|x| 1.0 / x.sqrt())
    }

    pub fn inverse(&self) -> Result<SpdMatrix> {
        self.map_spd(|x| 1.0 / x)
    }

    pub fn log(&self) -> SymMatrix {
        self.eig.reconstruct_with(f64::ln)
    }

    pub fn log_det(&self) -> f64 {
        self.eig.values.iter().map(|v| v.ln()).sum()
    }

    pub fn condition_number(&self) -> f64 {
        self.eig.max_value() / self.eig.min_value()
    }
}

/// Inverse of an SPD matrix, computed from its stored eigendecomposition.
pub fn spd_inverse(s: &SpdMatrix) -> Result<SpdMatrix> {
    let min_eig = s.eig.min_value();
    if min_eig <= EIG_FLOOR {
        return Err(Error::IllConditioned { min_eig });
    }
    s.inverse()
}
