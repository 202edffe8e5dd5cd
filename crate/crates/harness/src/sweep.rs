//! Scaling sweeps: for each grid point, warm up a population of replicas with
//! the unadjusted kernel, then run lazy adjusted steps, doubling `K` until the
//! pooled endpoints pass the stationarity proxy or the cap is reached.

use rayon::prelude::*;

use randhmc::diagnostics::{stationarity_report_at, StationarityReport};
use randhmc::{GaussianTarget, Variant};

use crate::config::SweepConfig;
use crate::error::Result;
use crate::plan::{plan_point, PlanInput, PointPlan, Replica};
use crate::records::SweepRecord;
use crate::seeds::{hash64, spectrum_seed};

/// `1, 2, 4, ...` below `cap`, then `cap` itself; `[0]` when `cap` is 0.
pub fn checkpoints(cap: usize) -> Vec<usize> {
    let mut out: Vec<usize> = std::iter::successors(Some(1usize), |k| k.checked_mul(2))
        .take_while(|&k| k < cap)
        .collect();
    out.push(cap);
    out
}

pub fn plan(config: &SweepConfig, grid_index: usize, d: usize, kappa: f64) -> Result<PointPlan> {
    plan_point(PlanInput {
        d,
        kappa,
        alpha: config.alpha,
        kind: config.spectrum_kind,
        spectrum_seed: spectrum_seed(config.seed, grid_index as u64),
        epsilon: config.epsilon,
        overrides: &config.overrides,
        x0: None,
        skip_warmup: config.fixed_time_steps.is_some(),
        fixed_time_steps: config.fixed_time_steps,
    })
}

/// Validates the configuration and derives every grid point before any
/// chain runs, so configuration errors surface immediately.
pub fn plan_all(config: &SweepConfig) -> Result<Vec<PointPlan>> {
    config.validate()?;
    config
        .grid()
        .into_iter()
        .enumerate()
        .map(|(g, (d, kappa))| plan(config, g, d, kappa))
        .collect()
}

pub fn run_sweep(config: &SweepConfig) -> Result<Vec<SweepRecord>> {
    let plans = plan_all(config)?;
    let mut records = Vec::new();
    for (g, p) in plans.iter().enumerate() {
        records.extend(run_point(config, g, p)?);
    }
    Ok(records)
}

fn pool_report(config: &SweepConfig, plan: &PointPlan, replicas: &[Replica<'_>]) -> Result<StationarityReport> {
    let endpoints: Vec<Vec<f64>> = replicas.iter().map(|r| r.chain.position().to_vec()).collect();
    let level = config.thresholds.level;
    let coordinate_level = if config.thresholds.bonferroni {
        level / plan.d as f64
    } else {
        level
    };
    Ok(stationarity_report_at(
        &endpoints,
        &plan.spectrum,
        coordinate_level,
        level,
    )?)
}

/// Runs one grid point and returns one record per replica.
pub fn run_point(config: &SweepConfig, grid_index: usize, plan: &PointPlan) -> Result<Vec<SweepRecord>> {
    let target = GaussianTarget::diagonal(plan.spectrum.clone());
    let (variant, lazy) = match config.fixed_time_steps {
        Some(_) => (Variant::Unadjusted, false),
        None => (Variant::Adjusted, true),
    };
    let mut replicas: Vec<Replica<'_>> = (0..config.replicas)
        .map(|r| Replica::new(&target, plan, hash64(config.seed, grid_index as u64, r as u64)))
        .collect::<Result<_>>()?;
    replicas
        .par_iter_mut()
        .try_for_each(|rep| rep.run(plan.k0, Variant::Unadjusted, false, false, |_, _| {}))?;

    let mut done = 0;
    let mut outcome = None;
    for k in checkpoints(plan.k) {
        replicas
            .par_iter_mut()
            .try_for_each(|rep| rep.run(k - done, variant, lazy, true, |_, _| {}))?;
        done = k;
        let report = pool_report(config, plan, &replicas)?;
        if report.passed || k == plan.k {
            outcome = Some((k, report));
            break;
        }
    }
    let (k, report) = outcome.expect("checkpoints are never empty");

    replicas
        .iter()
        .map(|rep| {
            Ok(SweepRecord {
                experiment_id: config.experiment_id.clone(),
                d: plan.d,
                kappa: plan.kappa,
                alpha: plan.alpha(),
                beta: plan.beta(),
                delta: plan.delta,
                k0: plan.k0,
                k,
                seed: rep.seed,
                grad_evals: rep.grad_evals()?,
                acceptance_rate: rep.acceptance_rate(),
                ks_max: report.ks_max,
                energy_ks: report.energy_ks,
                converged: report.passed,
                wall_time_seconds: if config.record_wall_time {
                    rep.elapsed_seconds
                } else {
                    0.0
                },
            })
        })
        .collect()
}
