//! Replicated runs of the estimator and the two summaries built from them:
//! the mean-square convergence rate and the distribution of `n·d²`.
//!
//! Replications run on the rayon pool when the `parallel` feature is on and
//! sequentially otherwise. Run `i` always uses seed `base_seed + i`, and
//! results are folded in run order, so both paths produce identical output.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimator::{run, RunConfig, Trajectory};
use crate::stats::{chi2_cdf, kde, ks_stat, mean_sd, ols_fit, silverman_bandwidth, trapezoid};

/// Number of points in the KDE grid.
pub const KDE_GRID_POINTS: usize = 512;

/// How replications are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Rayon data-parallel; identical to `Sequential` without the `parallel` feature.
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

/// Evaluates `f(0), …, f(runs − 1)` and returns the results in index order.
pub fn replicate<T, F>(runs: usize, exec: Execution, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            (0..runs).into_par_iter().map(f).collect()
        }
        _ => (0..runs).map(f).collect(),
    }
}

/// Runs `runs` replications of `cfg` with seeds `cfg.seed + i`. Failed runs
/// are dropped and their seeds returned; more than 5% failures is an error.
pub fn replicate_runs(cfg: &RunConfig, runs: usize, exec: Execution) -> Result<(Vec<Trajectory>, Vec<u64>)> {
    cfg.validate()?;
    let results = replicate(runs, exec, |i| {
        let seed = cfg.seed.wrapping_add(i as u64);
        (seed, run(&cfg.with_seed(seed)))
    });
    let mut ok = Vec::with_capacity(runs);
    let mut failed = Vec::new();
    for (seed, r) in results {
        match r {
            Ok(t) => ok.push(t),
            Err(_) => failed.push(seed),
        }
    }
    if failed.len() * 20 > runs {
        return Err(Error::TooManyFailures { failed: failed.len(), runs });
    }
    Ok((ok, failed))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatePoint {
    pub n: u64,
    pub mean_d2: f64,
    pub sd_d2: f64,
}

/// Mean of `d²(θₙ, θ*)` across runs and its log-log slope.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateSummary {
    pub runs: usize,
    pub failed_seeds: Vec<u64>,
    pub checkpoints: Vec<RatePoint>,
    pub fitted_slope: f64,
    pub fitted_intercept: f64,
    pub fit_range: (u64, u64),
}

/// `[max(1000, n/100), n]`, or `[n/10, n]` when the run is too short for that.
pub fn default_fit_range(n_steps: u64) -> (u64, u64) {
    let lo = (n_steps / 100).max(1000);
    if lo < n_steps {
        (lo, n_steps)
    } else {
        ((n_steps / 10).max(1), n_steps)
    }
}

/// Fits `log mean_d2 = slope·log n + intercept` over points with `n` in `range`.
pub fn fit_rate(points: &[RatePoint], range: (u64, u64)) -> Result<(f64, f64)> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = points
        .iter()
        .filter(|p| p.n >= range.0 && p.n <= range.1 && p.mean_d2 > 0.0)
        .map(|p| ((p.n as f64).ln(), p.mean_d2.ln()))
        .unzip();
    let fit = ols_fit(&xs, &ys)?;
    Ok((fit.slope, fit.intercept))
}

pub fn mc_rate(cfg: &RunConfig, runs: usize, exec: Execution) -> Result<RateSummary> {
    mc_rate_in_range(cfg, runs, default_fit_range(cfg.n_steps), exec)
}

pub fn mc_rate_in_range(cfg: &RunConfig, runs: usize, fit_range: (u64, u64), exec: Execution) -> Result<RateSummary> {
    if runs < 2 {
        return Err(Error::InvalidInput(format!("rate estimation needs at least 2 runs, got {runs}")));
    }
    if fit_range.0 >= fit_range.1 {
        return Err(Error::InvalidInput(format!("empty fit range {fit_range:?}")));
    }
    let (trajs, failed_seeds) = replicate_runs(cfg, runs, exec)?;
    let first = &trajs[0].checkpoints;
    let checkpoints: Vec<RatePoint> = first
        .iter()
        .enumerate()
        .map(|(k, cp)| {
            let d2s: Vec<f64> = trajs.iter().map(|t| t.checkpoints[k].d2.unwrap_or(f64::NAN)).collect();
            let (mean_d2, sd_d2) = mean_sd(&d2s);
            RatePoint { n: cp.n, mean_d2, sd_d2 }
        })
        .collect();
    let (fitted_slope, fitted_intercept) = fit_rate(&checkpoints, fit_range)?;
    Ok(RateSummary { runs: trajs.len(), failed_seeds, checkpoints, fitted_slope, fitted_intercept, fit_range })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KdeCurve {
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
    pub bandwidth: f64,
}

/// Distribution of `n·d²(θₙ, θ*)` at the final step, compared with χ²_dof.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EffSummary {
    pub runs: usize,
    pub failed_seeds: Vec<u64>,
    pub n: u64,
    pub dof: u32,
    pub mean_nd2: f64,
    pub ks_stat: f64,
    pub kde: KdeCurve,
    pub samples: Vec<f64>,
}

impl EffSummary {
    /// Builds the summary from raw `n·d²` values.
    pub fn from_samples(samples: Vec<f64>, dof: u32, n: u64) -> Result<Self> {
        if samples.len() < 2 || dof == 0 {
            return Err(Error::InvalidInput("need at least two samples and one degree of freedom".into()));
        }
        let bandwidth = silverman_bandwidth(&samples)?;
        let lo = samples.iter().copied().fold(f64::INFINITY, f64::min) - 5.0 * bandwidth;
        let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 5.0 * bandwidth;
        let step = (hi - lo) / (KDE_GRID_POINTS - 1) as f64;
        let grid: Vec<f64> = (0..KDE_GRID_POINTS).map(|i| lo + step * i as f64).collect();
        let density = kde(&samples, &grid, bandwidth)?;
        let ks = ks_stat(&samples, |x| chi2_cdf(x, dof))?;
        let (mean_nd2, _) = mean_sd(&samples);
        Ok(Self {
            runs: samples.len(),
            failed_seeds: Vec::new(),
            n,
            dof,
            mean_nd2,
            ks_stat: ks,
            kde: KdeCurve { grid, density, bandwidth },
            samples,
        })
    }

    pub fn kde_mass(&self) -> f64 {
        trapezoid(&self.kde.grid, &self.kde.density)
    }
}

pub fn mc_efficiency(cfg: &RunConfig, runs: usize, exec: Execution) -> Result<EffSummary> {
    if runs < 50 {
        return Err(Error::InvalidInput(format!("efficiency check needs at least 50 runs, got {runs}")));
    }
    let (trajs, failed_seeds) = replicate_runs(cfg, runs, exec)?;
    let samples: Vec<f64> =
        trajs.iter().map(|t| t.final_d2().map(|d2| d2 * t.steps as f64).unwrap_or(f64::NAN)).collect();
    let dof = cfg.model.param_dim() as u32;
    let mut summary = EffSummary::from_samples(samples, dof, cfg.n_steps)?;
    summary.failed_seeds = failed_seeds;
    Ok(summary)
}
