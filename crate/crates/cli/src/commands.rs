use std::time::Instant;

use serde::Serialize;

use rsgd::estimator::{run, run_stream, RecursionOptions};
use rsgd::manifold::distance_sq;
use rsgd::mc::{self, default_fit_range};
use rsgd::selfcheck::{run_selfcheck, SelfcheckOptions};
use rsgd::{
    Ball, CenterMode, EffSummary, EllipticalFamily, Execution, KotzModel, RateSummary, RunConfig, SpdMatrix,
    StepSchedule,
};

use crate::args::{
    BallArgs, BallCenter, EstimateArgs, McArgs, McEfficiencyArgs, McRateArgs, ModelArgs, SampleArgs, ScheduleArgs,
    SelfcheckArgs, ThetaSpec,
};
use crate::error::{CliError, CliResult};
use crate::io::{csv_string, emit, json_string, read_samples, resolve_theta};
use crate::svg;

fn model(a: &ModelArgs) -> CliResult<KotzModel> {
    Ok(KotzModel::new(a.m, a.s)?)
}

fn schedule(a: &ScheduleArgs) -> CliResult<StepSchedule> {
    Ok(StepSchedule::new(a.a, a.q)?)
}

fn ball(a: &BallArgs, truth_known: bool) -> Option<Ball> {
    a.ball_radius.map(|radius| {
        let center = match a.ball_center {
            Some(BallCenter::Truth) => CenterMode::Truth,
            Some(BallCenter::Initial) => CenterMode::Initial,
            None if truth_known => CenterMode::Truth,
            None => CenterMode::Initial,
        };
        Ball { center, radius }
    })
}

fn record_every(flag: Option<u64>, n: u64) -> CliResult<u64> {
    match flag {
        Some(0) => Err(CliError::usage("--record-every must be at least 1")),
        Some(k) => Ok(k),
        None => Ok((n / 100).max(1)),
    }
}

fn fmt(v: f64) -> String {
    v.to_string()
}

pub fn sample(a: &SampleArgs) -> CliResult<()> {
    let k = model(&a.model)?;
    if a.count == 0 {
        return Err(CliError::usage("--count must be at least 1"));
    }
    let theta = resolve_theta(&a.theta, a.model.m)?;
    let xs = k.sample(&theta, a.count, a.seed)?;
    let text = csv_string(None, xs.iter().map(|x| x.as_slice().iter().copied().map(fmt).collect::<Vec<_>>()))?;
    emit(a.out.as_deref(), &text)
}

#[derive(Serialize)]
struct EstimateConfig {
    mode: &'static str,
    m: usize,
    s: f64,
    schedule: StepSchedule,
    ball: Option<Ball>,
    record_every: u64,
    n_steps: Option<u64>,
    seed: Option<u64>,
    spread: Option<f64>,
    data: Option<String>,
    theta_star: Option<String>,
    theta0: Option<String>,
}

#[derive(Serialize)]
struct EstimateSummary {
    config: EstimateConfig,
    steps: u64,
    theta0: Vec<Vec<f64>>,
    final_theta: Vec<Vec<f64>>,
    theta_star: Option<Vec<Vec<f64>>>,
    initial_d2: Option<f64>,
    final_d2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    runtime_secs: Option<f64>,
}

pub fn estimate(a: &EstimateArgs) -> CliResult<()> {
    let start = Instant::now();
    let k = model(&a.model)?;
    let sched = schedule(&a.schedule)?;
    let metric = k.info_coeffs();
    let m = a.model.m;

    let (traj, truth, config) = if a.synthetic {
        let spec = a.theta_star.clone().unwrap_or(ThetaSpec::Identity);
        let truth = resolve_theta(&spec, m)?;
        let n = a.n_steps.ok_or_else(|| CliError::usage("--synthetic needs --n-steps"))?;
        let cfg = RunConfig {
            theta0_spread: a.spread,
            schedule: sched,
            ball: ball(&a.ball, true),
            record_every: record_every(a.record_every, n)?,
            ..RunConfig::new(k, truth.clone(), n, a.seed)
        };
        let traj = run(&cfg)?;
        let config = EstimateConfig {
            mode: "synthetic",
            m,
            s: a.model.s,
            schedule: sched,
            ball: cfg.ball,
            record_every: cfg.record_every,
            n_steps: Some(n),
            seed: Some(a.seed),
            spread: Some(a.spread),
            data: None,
            theta_star: Some(spec.to_string()),
            theta0: None,
        };
        (traj, Some(truth), config)
    } else {
        let path = a.data.as_ref().ok_or_else(|| CliError::usage("either --data or --synthetic is required"))?;
        let samples = read_samples(path, m)?;
        let truth = a.theta_star.as_ref().map(|s| resolve_theta(s, m)).transpose()?;
        let theta0_spec = a.theta0.clone().unwrap_or(ThetaSpec::Identity);
        let theta0 = resolve_theta(&theta0_spec, m)?;
        let available = samples.len() as u64;
        let steps = a.n_steps.map_or(available, |n| n.min(available));
        let opts = RecursionOptions {
            schedule: sched,
            record_every: record_every(a.record_every, steps)?,
            ball: ball(&a.ball, truth.is_some()),
        };
        let traj = run_stream(&k, metric, theta0, samples, a.n_steps, &opts, truth.as_ref())?;
        let config = EstimateConfig {
            mode: "data",
            m,
            s: a.model.s,
            schedule: sched,
            ball: opts.ball,
            record_every: opts.record_every,
            n_steps: a.n_steps,
            seed: None,
            spread: None,
            data: Some(path.display().to_string()),
            theta_star: a.theta_star.as_ref().map(|s| s.to_string()),
            theta0: Some(theta0_spec.to_string()),
        };
        (traj, truth, config)
    };

    if let Some(path) = &a.out_trajectory {
        let text = match truth {
            Some(_) => csv_string(
                Some(&["n", "d2", "nd2"]),
                traj.checkpoints.iter().map(|c| {
                    let d2 = c.d2.unwrap_or(f64::NAN);
                    vec![c.n.to_string(), fmt(d2), fmt(c.n as f64 * d2)]
                }),
            )?,
            None => csv_string(Some(&["n"]), traj.checkpoints.iter().map(|c| vec![c.n.to_string()]))?,
        };
        emit(Some(path), &text)?;
    }

    let initial_d2 = truth.as_ref().map(|t| distance_sq(&traj.theta0, t, metric)).transpose()?;
    let summary = EstimateSummary {
        config,
        steps: traj.steps,
        theta0: traj.theta0.to_rows(),
        final_theta: traj.final_theta.to_rows(),
        theta_star: truth.as_ref().map(SpdMatrix::to_rows),
        initial_d2,
        final_d2: traj.final_d2(),
        runtime_secs: a.timing.then(|| start.elapsed().as_secs_f64()),
    };
    emit(a.out_summary.as_deref(), &json_string(&summary)?)
}

#[derive(Serialize)]
struct McConfig {
    m: usize,
    s: f64,
    schedule: StepSchedule,
    ball: Option<Ball>,
    theta_star: String,
    spread: f64,
    runs: usize,
    n_steps: u64,
    base_seed: u64,
    record_every: u64,
}

#[derive(Serialize)]
struct McOutput<T: Serialize> {
    config: McConfig,
    summary: T,
    #[serde(skip_serializing_if = "Option::is_none")]
    runtime_secs: Option<f64>,
}

fn mc_setup(a: &McArgs) -> CliResult<(RunConfig, McConfig, Execution)> {
    let k = model(&a.model)?;
    let sched = schedule(&a.schedule)?;
    let truth = resolve_theta(&a.theta_star, a.model.m)?;
    if a.n_steps == 0 {
        return Err(CliError::usage("--n-steps must be at least 1"));
    }
    let cfg = RunConfig {
        theta0_spread: a.spread,
        schedule: sched,
        ball: ball(&a.ball, true),
        record_every: record_every(a.record_every, a.n_steps)?,
        ..RunConfig::new(k, truth, a.n_steps, a.base_seed)
    };
    cfg.validate()?;
    let echo = McConfig {
        m: a.model.m,
        s: a.model.s,
        schedule: sched,
        ball: cfg.ball,
        theta_star: a.theta_star.to_string(),
        spread: a.spread,
        runs: a.runs,
        n_steps: a.n_steps,
        base_seed: a.base_seed,
        record_every: cfg.record_every,
    };
    let exec = if a.sequential { Execution::Sequential } else { Execution::default() };
    Ok((cfg, echo, exec))
}

pub fn mc_rate(a: &McRateArgs) -> CliResult<()> {
    let start = Instant::now();
    let (cfg, config, exec) = mc_setup(&a.common)?;
    let (lo, hi) = default_fit_range(cfg.n_steps);
    let range = (a.fit_from.unwrap_or(lo), a.fit_to.unwrap_or(hi));
    let summary: RateSummary = mc::mc_rate_in_range(&cfg, a.common.runs, range, exec)?;
    if let Some(p) = &a.common.out_svg {
        emit(Some(p), &svg::rate_plot(&summary))?;
    }
    let out = McOutput { config, summary, runtime_secs: a.common.timing.then(|| start.elapsed().as_secs_f64()) };
    emit(a.common.out_json.as_deref(), &json_string(&out)?)
}

pub fn mc_efficiency(a: &McEfficiencyArgs) -> CliResult<()> {
    let start = Instant::now();
    let (cfg, config, exec) = mc_setup(&a.common)?;
    let summary: EffSummary = mc::mc_efficiency(&cfg, a.common.runs, exec)?;
    if let Some(p) = &a.common.out_svg {
        emit(Some(p), &svg::efficiency_plot(&summary))?;
    }
    let out = McOutput { config, summary, runtime_secs: a.common.timing.then(|| start.elapsed().as_secs_f64()) };
    emit(a.common.out_json.as_deref(), &json_string(&out)?)
}

/// Prints the check table; returns whether every check passed.
pub fn selfcheck(a: &SelfcheckArgs) -> bool {
    let opts = SelfcheckOptions { inject_metric_bug: a.inject_fault.is_some() };
    let rows = run_selfcheck(opts);
    let width = rows.iter().map(|r| r.name.len()).max().unwrap_or(0);
    for r in &rows {
        println!("{:<width$}  {}  {}", r.name, if r.passed { "PASS" } else { "FAIL" }, r.detail);
    }
    let failed = rows.iter().filter(|r| !r.passed).count();
    println!("{} of {} checks passed", rows.len() - failed, rows.len());
    failed == 0
}
