//! Single-configuration chain runs: records per replica plus an optional
//! thinned trajectory.

use std::io::Write;

use rayon::prelude::*;

use randhmc::diagnostics::stationarity_report;
use randhmc::{GaussianTarget, Variant};

use crate::config::ChainConfig;
use crate::error::{HarnessError, Result};
use crate::plan::{plan_point, PlanInput, PointPlan, Replica};
use crate::records::{fmt_f64, SweepRecord};
use crate::seeds::{hash64, spectrum_seed};

/// Fewest replicas for which pooled statistics are computed.
pub const MIN_POOL: usize = 100;

/// State of replica `replica` after `step` transitions (step 0 is `x0`).
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRow {
    pub replica: usize,
    pub step: usize,
    pub x: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainRun {
    pub plan: PointPlan,
    pub records: Vec<SweepRecord>,
    pub trajectory: Option<Vec<TrajectoryRow>>,
}

pub fn plan(config: &ChainConfig) -> Result<PointPlan> {
    config.validate()?;
    if config.fixed_time_steps.is_some() && config.variant != Variant::Unadjusted {
        return Err(HarnessError::usage(
            "fixed_time_steps is an ablation of the unadjusted kernel",
        ));
    }
    plan_point(PlanInput {
        d: config.d,
        kappa: config.kappa,
        alpha: config.alpha,
        kind: config.spectrum_kind,
        spectrum_seed: spectrum_seed(config.seed, 0),
        epsilon: config.epsilon,
        overrides: &config.overrides,
        x0: config.x0.clone(),
        skip_warmup: config.variant != Variant::Adjusted,
        fixed_time_steps: config.fixed_time_steps,
    })
}

/// `K0` unadjusted steps, then `K` steps of the configured kernel, for every
/// replica.
pub fn run_chain_config(config: &ChainConfig) -> Result<ChainRun> {
    let plan = plan(config)?;
    let target = if config.rotate {
        GaussianTarget::new(plan.spectrum.clone(), true, hash64(!config.seed, 1, u64::MAX))?
    } else {
        GaussianTarget::diagonal(plan.spectrum.clone())
    };
    if config.variant == Variant::Idealized && target.is_rotated() {
        return Err(randhmc::Error::InvalidArgument("the idealized kernel needs a diagonal target".into()).into());
    }
    let lazy = config.is_lazy();
    let thin = config.trajectory_thin;
    let results: Vec<(Replica<'_>, Vec<TrajectoryRow>)> = (0..config.replicas)
        .into_par_iter()
        .map(|r| {
            let mut rep = Replica::new(&target, &plan, hash64(config.seed, 0, r as u64))?;
            let mut rows = Vec::new();
            if thin.is_some() {
                rows.push(TrajectoryRow {
                    replica: r,
                    step: 0,
                    x: plan.x0.clone(),
                });
            }
            let mut keep = |step: usize, out: &randhmc::StepOutcome| {
                if let Some(t) = thin {
                    if step.is_multiple_of(t) {
                        rows.push(TrajectoryRow {
                            replica: r,
                            step,
                            x: out.new_x.clone(),
                        });
                    }
                }
            };
            rep.run(plan.k0, Variant::Unadjusted, false, false, &mut keep)?;
            rep.run(plan.k, config.variant, lazy, true, &mut keep)?;
            Ok((rep, rows))
        })
        .collect::<Result<_>>()?;

    let (ks_max, energy_ks, converged) = if config.replicas >= MIN_POOL {
        let endpoints: Vec<Vec<f64>> = results
            .iter()
            .map(|(rep, _)| target.to_diagonal(rep.chain.position()))
            .collect::<randhmc::Result<_>>()?;
        let report = stationarity_report(&endpoints, &plan.spectrum, config.level)?;
        (report.ks_max, report.energy_ks, report.passed)
    } else {
        (f64::NAN, f64::NAN, false)
    };

    let records = results
        .iter()
        .map(|(rep, _)| {
            Ok(SweepRecord {
                experiment_id: config.experiment_id.clone(),
                d: plan.d,
                kappa: plan.kappa,
                alpha: plan.alpha(),
                beta: plan.beta(),
                delta: plan.delta,
                k0: plan.k0,
                k: plan.k,
                seed: rep.seed,
                grad_evals: rep.grad_evals()?,
                acceptance_rate: rep.acceptance_rate(),
                ks_max,
                energy_ks,
                converged,
                wall_time_seconds: if config.record_wall_time {
                    rep.elapsed_seconds
                } else {
                    0.0
                },
            })
        })
        .collect::<Result<_>>()?;
    let trajectory = thin.map(|_| results.into_iter().flat_map(|(_, rows)| rows).collect());
    Ok(ChainRun {
        plan,
        records,
        trajectory,
    })
}

/// CSV with columns `replica,step,x_0,...,x_{d-1}`.
pub fn write_trajectory<W: Write>(out: W, d: usize, rows: &[TrajectoryRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["replica".to_string(), "step".to_string()];
    header.extend((0..d).map(|i| format!("x_{i}")));
    w.write_record(&header)?;
    for row in rows {
        let mut fields = vec![row.replica.to_string(), row.step.to_string()];
        fields.extend(row.x.iter().map(|&a| fmt_f64(a)));
        w.write_record(&fields)?;
    }
    w.flush()?;
    Ok(())
}
