//! Recursive estimation of the scatter matrix of an elliptically contoured
//! (Kotz-type) distribution by Riemannian stochastic gradient descent on the
//! SPD manifold, using the Fisher information metric of the model.
//!
//! Layout:
//! - [`symkernel`]: symmetric eigendecomposition and spectral matrix functions.
//! - [`manifold`]: the affine-invariant metric family, `Exp`/`Log`, distances.
//! - [`ecd`]: the Kotz model, its information metric, score field and sampler.
//! - [`estimator`]: the decreasing-step recursion and its run loop.
//! - [`stats`], [`mc`]: χ²/KS/KDE statistics and the replicated-run harness.
//! - [`selfcheck`]: fast invariant suite used by the CLI.

pub mod ecd;
pub mod error;
pub mod estimator;
pub mod manifold;
pub mod mc;
pub mod random;
pub mod selfcheck;
pub mod stats;
pub mod symkernel;

pub use ecd::{EllipticalFamily, KotzModel, Sample};
pub use error::{Error, Result};
pub use estimator::{Ball, CenterMode, RunConfig, StepSchedule, Trajectory};
pub use manifold::MetricParams;
pub use mc::{EffSummary, Execution, RateSummary};
pub use symkernel::{SpdMatrix, SymMatrix, TangentVec};
