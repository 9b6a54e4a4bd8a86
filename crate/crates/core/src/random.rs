//! Seeded generators and random test matrices.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::symkernel::{EigDecomp, SpdMatrix, SymMatrix};

/// A ChaCha8 generator; `stream` separates independent uses of one seed.
pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Symmetric matrix with standard normal entries, symmetrized.
pub fn random_symmetric<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> SymMatrix {
    let a = DMatrix::<f64>::from_fn(dim, dim, |_, _| StandardNormal.sample(rng));
    SymMatrix::from_matrix_unchecked(a)
}

/// Haar-distributed orthogonal matrix from the QR factorization of a
/// Gaussian matrix, with the sign convention `diag(R) > 0`.
pub fn random_orthogonal<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DMatrix<f64> {
    let a = DMatrix::<f64>::from_fn(dim, dim, |_, _| StandardNormal.sample(rng));
    let qr = a.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dim {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// SPD matrix with eigenvalues log-uniform in `[lo, hi]` and a random
/// orthogonal eigenbasis.
pub fn random_spd_in<R: Rng + ?Sized>(dim: usize, lo: f64, hi: f64, rng: &mut R) -> SpdMatrix {
    let (llo, lhi) = (lo.ln(), hi.ln());
    let vals: Vec<f64> = (0..dim).map(|_| if lhi > llo { rng.random_range(llo..lhi).exp() } else { lo }).collect();
    let q = random_orthogonal(dim, rng);
    let eig = EigDecomp { vectors: q, values: nalgebra::DVector::from_vec(vals) };
    SpdMatrix::new(eig.reconstruct()).expect("eigenvalues are positive")
}

/// SPD matrix with eigenvalues log-uniform in `[0.5, 2]`.
pub fn random_spd<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> SpdMatrix {
    random_spd_in(dim, 0.5, 2.0, rng)
}
