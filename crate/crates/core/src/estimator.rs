//! Decreasing-step-size Riemannian stochastic gradient recursion
//!
//! ```text
//! θₙ = Exp_{θₙ₋₁}( γₙ · u(θₙ₋₁, xₙ) ),   γₙ = a / n^q
//! ```
//!
//! with an optional retraction onto a geodesic ball after every step.

use serde::{Deserialize, Serialize};

use crate::ecd::{EllipticalFamily, KotzModel, PreparedScatter, Sample};
use crate::error::{Error, Result};
use crate::manifold::{distance_sq, exp_map, norm, project_to_ball, MetricParams};
use crate::random::{random_symmetric, seeded_rng};
use crate::symkernel::{SpdMatrix, TangentVec};

const INIT_STREAM: u64 = 1;
const SAMPLE_STREAM: u64 = 2;

/// Step sizes `γₙ = a / n^q` with `q ∈ (1/2, 1]`, so that `Σγₙ = ∞` and
/// `Σγₙ² < ∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepSchedule {
    pub a: f64,
    pub q: f64,
}

impl StepSchedule {
    pub fn new(a: f64, q: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::InvalidInput(format!("gain must be positive, got {a}")));
        }
        if !(q > 0.5 && q <= 1.0) {
            return Err(Error::InvalidInput(format!("exponent must lie in (1/2, 1], got {q}")));
        }
        Ok(Self { a, q })
    }

    /// `γₙ = a/n`.
    pub fn harmonic(a: f64) -> Result<Self> {
        Self::new(a, 1.0)
    }

    /// # Panics
    /// If `n == 0`.
    pub fn step_size(&self, n: u64) -> f64 {
        assert!(n >= 1, "step index starts at 1");
        if self.q == 1.0 {
            self.a / n as f64
        } else {
            self.a / (n as f64).powf(self.q)
        }
    }
}

/// Free-function form of [`StepSchedule::step_size`].
pub fn step_size(n: u64, sched: &StepSchedule) -> f64 {
    sched.step_size(n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CenterMode {
    /// Centre on the initial iterate.
    Initial,
    /// Centre on the true parameter. Only available when it is known.
    Truth,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: CenterMode,
    pub radius: f64,
}

/// The stochastic direction of the recursion.
pub trait ScoreField {
    fn dim(&self) -> usize;
    fn score(&self, theta: &SpdMatrix, x: &Sample) -> Result<TangentVec>;
}

impl ScoreField for KotzModel {
    fn dim(&self) -> usize {
        self.m()
    }

    fn score(&self, theta: &SpdMatrix, x: &Sample) -> Result<TangentVec> {
        PreparedScatter::new(theta)?.score(x, self)
    }
}

/// One recursion step `Exp_θ(γ·u(θ, x))`.
pub fn sgd_step<S: ScoreField>(theta: &SpdMatrix, x: &Sample, gamma: f64, field: &S) -> Result<SpdMatrix> {
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidInput(format!("step size must be non-negative, got {gamma}")));
    }
    if gamma == 0.0 {
        return Ok(theta.clone());
    }
    let u = field.score(theta, x)?;
    exp_map(theta, &u.scale(gamma))
}

/// Like [`sgd_step`], but a tangent step longer than `max_len` is shortened
/// to `max_len` first. Starting inside a ball of radius `max_len / 2`, such a
/// step ends outside the ball in any case; shortening it keeps the
/// intermediate point well-conditioned before it is projected back.
pub fn bounded_sgd_step<S: ScoreField>(
    theta: &SpdMatrix,
    x: &Sample,
    gamma: f64,
    field: &S,
    metric: MetricParams,
    max_len: f64,
) -> Result<SpdMatrix> {
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidInput(format!("step size must be non-negative, got {gamma}")));
    }
    if gamma == 0.0 {
        return Ok(theta.clone());
    }
    let step = field.score(theta, x)?.scale(gamma);
    let len = norm(theta, &step, metric)?;
    let step = if len > max_len { step.scale(max_len / len) } else { step };
    exp_map(theta, &step)
}

/// Random start at information distance exactly `spread` from `theta_star`,
/// along a seed-determined direction.
pub fn init_theta0(theta_star: &SpdMatrix, spread: f64, metric: MetricParams, seed: u64) -> Result<SpdMatrix> {
    if !(spread >= 0.0 && spread.is_finite()) {
        return Err(Error::InvalidInput(format!("spread must be non-negative, got {spread}")));
    }
    if spread == 0.0 {
        return Ok(theta_star.clone());
    }
    let mut rng = seeded_rng(seed, INIT_STREAM);
    let root = theta_star.sqrt();
    let dir = random_symmetric(theta_star.dim(), &mut rng).congruence(root.as_matrix());
    let len = norm(theta_star, &dir, metric)?;
    exp_map(theta_star, &dir.scale(spread / len))
}

/// Squared distance to the reference at step `n`, when a reference exists.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub n: u64,
    pub d2: Option<f64>,
}

impl Checkpoint {
    /// `n · d²`, the quantity that is asymptotically χ²-distributed.
    pub fn nd2(&self) -> Option<f64> {
        self.d2.map(|d2| self.n as f64 * d2)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub theta0: SpdMatrix,
    pub checkpoints: Vec<Checkpoint>,
    pub final_theta: SpdMatrix,
    pub steps: u64,
}

impl Trajectory {
    pub fn final_d2(&self) -> Option<f64> {
        self.checkpoints.last().and_then(|c| c.d2)
    }
}

/// Options shared by synthetic and data-driven runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecursionOptions {
    pub schedule: StepSchedule,
    pub record_every: u64,
    pub ball: Option<Ball>,
}

/// Runs the recursion over a sample stream from `theta0`. Stops after
/// `max_steps` samples or when the stream ends. Distances are recorded
/// against `reference` when one is given.
pub fn run_stream<S, I>(
    field: &S,
    metric: MetricParams,
    theta0: SpdMatrix,
    samples: I,
    max_steps: Option<u64>,
    opts: &RecursionOptions,
    reference: Option<&SpdMatrix>,
) -> Result<Trajectory>
where
    S: ScoreField,
    I: IntoIterator<Item = Sample>,
{
    if opts.record_every == 0 {
        return Err(Error::InvalidInput("record_every must be at least 1".into()));
    }
    let dim = field.dim();
    if theta0.dim() != dim || reference.is_some_and(|r| r.dim() != dim) {
        return Err(Error::InvalidInput("initial or reference matrix has the wrong dimension".into()));
    }
    let ball = match opts.ball {
        None => None,
        Some(b) => {
            if b.radius.is_nan() || b.radius <= 0.0 {
                return Err(Error::InvalidInput(format!("ball radius must be positive, got {}", b.radius)));
            }
            let center = match b.center {
                CenterMode::Initial => theta0.clone(),
                CenterMode::Truth => reference
                    .ok_or_else(|| Error::InvalidInput("ball centred on the truth needs a reference matrix".into()))?
                    .clone(),
            };
            Some((center, b.radius))
        }
    };

    let checkpoint = |n: u64, theta: &SpdMatrix| -> Result<Checkpoint> {
        let d2 = reference.map(|r| distance_sq(theta, r, metric)).transpose()?;
        Ok(Checkpoint { n, d2 })
    };

    let mut theta = theta0.clone();
    let mut checkpoints = Vec::new();
    let mut n = 0u64;
    for x in samples {
        if max_steps.is_some_and(|max| n >= max) {
            break;
        }
        n += 1;
        if x.dim() != dim {
            return Err(Error::InvalidInput(format!("observation {n} has dimension {}, expected {dim}", x.dim())));
        }
        let diverged = |e: Error| Error::Diverged { step: n, source: Box::new(e) };
        let gamma = opts.schedule.step_size(n);
        theta = match &ball {
            None => sgd_step(&theta, &x, gamma, field),
            Some((center, radius)) => bounded_sgd_step(&theta, &x, gamma, field, metric, 2.0 * radius)
                .and_then(|t| project_to_ball(&t, center, *radius, metric)),
        }
        .map_err(diverged)?;
        if n.is_multiple_of(opts.record_every) {
            checkpoints.push(checkpoint(n, &theta)?);
        }
    }
    if !n.is_multiple_of(opts.record_every) {
        checkpoints.push(checkpoint(n, &theta)?);
    }
    Ok(Trajectory { theta0, checkpoints, final_theta: theta, steps: n })
}

/// A synthetic experiment: samples drawn from the model at `theta_star`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: KotzModel,
    pub theta_star: SpdMatrix,
    pub theta0_spread: f64,
    pub schedule: StepSchedule,
    pub n_steps: u64,
    pub ball: Option<Ball>,
    pub record_every: u64,
    pub seed: u64,
}

impl RunConfig {
    /// Config with unit spread, `γₙ = 1/n`, no ball, and about a hundred checkpoints.
    pub fn new(model: KotzModel, theta_star: SpdMatrix, n_steps: u64, seed: u64) -> Self {
        Self {
            model,
            theta_star,
            theta0_spread: 1.0,
            schedule: StepSchedule { a: 1.0, q: 1.0 },
            n_steps,
            ball: None,
            record_every: (n_steps / 100).max(1),
            seed,
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.theta_star.dim() != self.model.m() {
            return Err(Error::InvalidInput(format!(
                "true scatter matrix has dimension {}, model has {}",
                self.theta_star.dim(),
                self.model.m()
            )));
        }
        if self.n_steps == 0 || self.record_every == 0 {
            return Err(Error::InvalidInput("n_steps and record_every must be at least 1".into()));
        }
        if !(self.theta0_spread >= 0.0 && self.theta0_spread.is_finite()) {
            return Err(Error::InvalidInput(format!("spread must be non-negative, got {}", self.theta0_spread)));
        }
        StepSchedule::new(self.schedule.a, self.schedule.q)?;
        if let Some(b) = self.ball {
            if b.radius.is_nan() || b.radius <= 0.0 {
                return Err(Error::InvalidInput(format!("ball radius must be positive, got {}", b.radius)));
            }
        }
        Ok(())
    }

    pub fn recursion_options(&self) -> RecursionOptions {
        RecursionOptions { schedule: self.schedule, record_every: self.record_every, ball: self.ball }
    }
}

/// One synthetic run; deterministic in `cfg.seed`.
pub fn run(cfg: &RunConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let metric = cfg.model.info_coeffs();
    let theta0 = init_theta0(&cfg.theta_star, cfg.theta0_spread, metric, cfg.seed)?;
    let sampler = cfg.model.sampler(&cfg.theta_star)?;
    let mut rng = seeded_rng(cfg.seed, SAMPLE_STREAM);
    let samples = std::iter::repeat_with(move || sampler.draw(&mut rng));
    run_stream(&cfg.model, metric, theta0, samples, Some(cfg.n_steps), &cfg.recursion_options(), Some(&cfg.theta_star))
}
