use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::step::{lazy_skip, step_adjusted, step_idealized, step_unadjusted, StepOutcome, Variant};
use super::time_set::TimeSet;
use crate::error::{check_dim, invalid, Result};
use crate::gaussian::{FirstOrderOracle, GaussianTarget};
use crate::{rng_from_seed, Rng};

/// Default value of the unpinned constants in front of the step counts.
pub const DEFAULT_STEP_CONSTANT: f64 = 40.0;

#[derive(Debug, Clone, PartialEq)]
pub struct KernelConfig {
    pub variant: Variant,
    pub lazy: bool,
    /// Carries the step size.
    pub time_set: TimeSet,
    pub seed: u64,
    /// Keep every `thin`-th state in the trajectory; `None` keeps none.
    pub thin: Option<usize>,
}

impl KernelConfig {
    pub fn delta(&self) -> f64 {
        self.time_set.delta()
    }
}

/// Per-step bookkeeping. The new state itself is not stored; see
/// [`RunStats::trajectory`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub variant: Variant,
    pub accepted: bool,
    pub proposed_t: f64,
    pub n_leapfrog: usize,
    pub grad_evals: u64,
    pub lazy_skip: bool,
    pub acceptance_probability: Option<f64>,
}

impl StepRecord {
    fn new(variant: Variant, out: &StepOutcome) -> Self {
        Self {
            variant,
            accepted: out.accepted,
            proposed_t: out.proposed_t,
            n_leapfrog: out.n_leapfrog,
            grad_evals: out.grad_evals,
            lazy_skip: out.lazy_skip,
            acceptance_probability: out.acceptance_probability,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunStats {
    /// Gradient evaluations charged at two per leapfrog step.
    pub total_grad_evals: u64,
    /// The count an implementation caching the shared endpoint gradient would
    /// pay: `n + 1` per proposal of `n` steps.
    pub cached_grad_evals: u64,
    /// Queries seen by the oracle; always equals `total_grad_evals`.
    pub oracle_queries: u64,
    /// Accepted non-lazy steps over non-lazy steps (1 if there were none).
    pub acceptance_rate: f64,
    /// `x0` followed by every `thin`-th state.
    pub trajectory: Option<Vec<Vec<f64>>>,
    pub per_step: Vec<StepRecord>,
    pub final_x: Vec<f64>,
}

/// A single sequential chain with its own oracle and RNG.
#[derive(Debug)]
pub struct Chain<'a> {
    target: &'a GaussianTarget,
    oracle: FirstOrderOracle<'a>,
    time_set: TimeSet,
    x: Vec<f64>,
    rng: Rng,
    grad_evals: u64,
    cached_grad_evals: u64,
    moves: u64,
    accepted: u64,
}

impl<'a> Chain<'a> {
    pub fn new(target: &'a GaussianTarget, time_set: TimeSet, x0: Vec<f64>, seed: u64) -> Result<Self> {
        check_dim(target.dim(), x0.len())?;
        if x0.iter().any(|a| !a.is_finite()) {
            return Err(invalid("starting point must be finite"));
        }
        Ok(Self {
            target,
            oracle: FirstOrderOracle::new(target),
            time_set,
            x: x0,
            rng: rng_from_seed(seed),
            grad_evals: 0,
            cached_grad_evals: 0,
            moves: 0,
            accepted: 0,
        })
    }

    /// Advances the chain by one transition of the given kernel.
    pub fn step(&mut self, variant: Variant, lazy: bool) -> Result<StepOutcome> {
        if variant == Variant::Idealized && self.target.is_rotated() {
            return Err(invalid("the idealized kernel needs a diagonal target"));
        }
        let out = if lazy && lazy_skip(&mut self.rng) {
            StepOutcome::skip(&self.x)
        } else {
            match variant {
                Variant::Idealized => step_idealized(&self.x, self.target.spectrum(), &self.time_set, &mut self.rng)?,
                Variant::Unadjusted => step_unadjusted(&self.x, &mut self.oracle, &self.time_set, &mut self.rng)?,
                Variant::Adjusted => step_adjusted(&self.x, &mut self.oracle, &self.time_set, &mut self.rng)?,
            }
        };
        if !out.lazy_skip {
            self.moves += 1;
            self.accepted += out.accepted as u64;
            if out.n_leapfrog > 0 {
                self.cached_grad_evals += out.n_leapfrog as u64 + 1;
            }
        }
        self.grad_evals += out.grad_evals;
        self.x.clone_from(&out.new_x);
        Ok(out)
    }

    pub fn position(&self) -> &[f64] {
        &self.x
    }

    pub fn time_set(&self) -> &TimeSet {
        &self.time_set
    }

    pub fn total_grad_evals(&self) -> u64 {
        self.grad_evals
    }

    pub fn cached_grad_evals(&self) -> u64 {
        self.cached_grad_evals
    }

    pub fn oracle_queries(&self) -> u64 {
        self.oracle.query_count()
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.moves == 0 {
            1.0
        } else {
            self.accepted as f64 / self.moves as f64
        }
    }
}

struct Recorder {
    thin: Option<usize>,
    trajectory: Vec<Vec<f64>>,
    per_step: Vec<StepRecord>,
}

impl Recorder {
    fn new(thin: Option<usize>, x0: &[f64]) -> Result<Self> {
        if thin == Some(0) {
            return Err(invalid("thinning factor must be at least 1"));
        }
        Ok(Self {
            thin,
            trajectory: if thin.is_some() { vec![x0.to_vec()] } else { Vec::new() },
            per_step: Vec::new(),
        })
    }

    fn push(&mut self, variant: Variant, out: &StepOutcome) {
        self.per_step.push(StepRecord::new(variant, out));
        if let Some(thin) = self.thin {
            if self.per_step.len().is_multiple_of(thin) {
                self.trajectory.push(out.new_x.clone());
            }
        }
    }

    fn finish(self, chain: Chain<'_>) -> RunStats {
        RunStats {
            total_grad_evals: chain.total_grad_evals(),
            cached_grad_evals: chain.cached_grad_evals(),
            oracle_queries: chain.oracle_queries(),
            acceptance_rate: chain.acceptance_rate(),
            trajectory: self.thin.map(|_| self.trajectory),
            per_step: self.per_step,
            final_x: chain.x,
        }
    }
}

/// Applies `k` transitions of the configured kernel starting at `x0`.
pub fn run_chain(config: &KernelConfig, target: &GaussianTarget, x0: &[f64], k: usize) -> Result<RunStats> {
    if config.variant == Variant::Idealized && target.is_rotated() {
        return Err(invalid("the idealized kernel needs a diagonal target"));
    }
    let mut chain = Chain::new(target, config.time_set.clone(), x0.to_vec(), config.seed)?;
    let mut rec = Recorder::new(config.thin, x0)?;
    for _ in 0..k {
        let out = chain.step(config.variant, config.lazy)?;
        rec.push(config.variant, &out);
    }
    Ok(rec.finish(chain))
}

/// `k0` unadjusted warm-up steps followed by `k` lazy adjusted steps, sharing
/// one step size, time set, RNG stream and gradient count.
pub fn run_pipeline(
    target: &GaussianTarget,
    x0: &[f64],
    k0: usize,
    k: usize,
    delta: f64,
    seed: u64,
    thin: Option<usize>,
) -> Result<RunStats> {
    let s = target.spectrum();
    let time_set = TimeSet::build(s.alpha(), s.beta(), delta)?;
    let mut chain = Chain::new(target, time_set, x0.to_vec(), seed)?;
    let mut rec = Recorder::new(thin, x0)?;
    for _ in 0..k0 {
        let out = chain.step(Variant::Unadjusted, false)?;
        rec.push(Variant::Unadjusted, &out);
    }
    for _ in 0..k {
        let out = chain.step(Variant::Adjusted, true)?;
        rec.push(Variant::Adjusted, &out);
    }
    Ok(rec.finish(chain))
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(invalid(format!("epsilon must lie in (0, 1/2), got {epsilon}")));
    }
    Ok(())
}

/// `gamma = max{1, ln(1/s)}` with `s = epsilon / 12`.
pub fn default_gamma(epsilon: f64) -> Result<f64> {
    check_epsilon(epsilon)?;
    Ok((12.0 / epsilon).ln().max(1.0))
}

/// `delta = min{pi / (20 sqrt(beta)), 1 / (10 sqrt(gamma beta) d^(1/4))}`.
pub fn default_step_size(beta: f64, d: usize, gamma: f64) -> Result<f64> {
    if !(beta > 0.0 && beta.is_finite()) || d == 0 || !(gamma >= 1.0) {
        return Err(invalid("need beta > 0, d >= 1 and gamma >= 1"));
    }
    let time_set_cap = PI / (20.0 * beta.sqrt());
    let concentration = 1.0 / (10.0 * (gamma * beta).sqrt() * (d as f64).powf(0.25));
    Ok(time_set_cap.min(concentration))
}

/// `K0 = ceil(c0 * ln(d kappa (sqrt(alpha) |x0|_inf + 1) / epsilon))`.
pub fn default_warmup_steps(d: usize, kappa: f64, alpha: f64, x0_inf: f64, epsilon: f64, c0: f64) -> Result<usize> {
    check_epsilon(epsilon)?;
    let arg = d as f64 * kappa * (alpha.sqrt() * x0_inf + 1.0) / epsilon;
    Ok((c0 * arg.ln()).ceil().max(0.0) as usize)
}

/// `K = ceil(c * ln(d kappa ln(1/epsilon)) * ln(1/epsilon))`.
pub fn default_adjusted_steps(d: usize, kappa: f64, epsilon: f64, c: f64) -> Result<usize> {
    check_epsilon(epsilon)?;
    let l = (1.0 / epsilon).ln();
    Ok((c * (d as f64 * kappa * l).ln().max(0.0) * l).ceil() as usize)
}

/// The all-equal start with `|x0| = sqrt(d / alpha)`.
pub fn default_start(d: usize, alpha: f64) -> Vec<f64> {
    vec![1.0 / alpha.sqrt(); d]
}
