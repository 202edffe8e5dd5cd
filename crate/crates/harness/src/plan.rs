//! Turning configuration into concrete runs: spectrum, step size, time set
//! and step counts for one grid point, and replica bookkeeping.

use std::time::Instant;

use randhmc::kernels::{default_adjusted_steps, default_gamma, default_start, default_step_size, default_warmup_steps};
use randhmc::{Chain, GaussianTarget, Spectrum, SpectrumKind, StepOutcome, TimeSet, Variant};

use crate::config::Overrides;
use crate::error::{HarnessError, Result};

/// Everything derived for one `(d, kappa)` point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointPlan {
    pub d: usize,
    pub kappa: f64,
    pub spectrum: Spectrum,
    pub gamma: f64,
    pub delta: f64,
    pub time_set: TimeSet,
    pub x0: Vec<f64>,
    pub k0: usize,
    /// Largest number of main-phase steps.
    pub k: usize,
}

impl PointPlan {
    pub fn alpha(&self) -> f64 {
        self.spectrum.alpha()
    }

    pub fn beta(&self) -> f64 {
        self.spectrum.beta()
    }
}

pub struct PlanInput<'a> {
    pub d: usize,
    pub kappa: f64,
    pub alpha: f64,
    pub kind: SpectrumKind,
    pub spectrum_seed: u64,
    pub epsilon: f64,
    pub overrides: &'a Overrides,
    pub x0: Option<Vec<f64>>,
    /// Default the warm-up length to 0 instead of the pipeline value.
    pub skip_warmup: bool,
    pub fixed_time_steps: Option<usize>,
}

pub fn plan_point(input: PlanInput<'_>) -> Result<PointPlan> {
    let PlanInput { d, kappa, alpha, .. } = input;
    let beta = kappa * alpha;
    let spectrum = Spectrum::generate(d, input.kind, alpha, beta, input.spectrum_seed)?;
    let gamma = match input.overrides.gamma {
        Some(g) => g,
        None => default_gamma(input.epsilon)?,
    };
    let delta = match input.overrides.delta {
        Some(delta) => delta,
        None => default_step_size(beta, d, gamma)?,
    };
    let time_set = match input.fixed_time_steps {
        Some(n) => {
            // the ablation still respects the step-size requirement
            TimeSet::build(alpha, beta, delta)?;
            TimeSet::fixed(delta, n)?
        }
        None => TimeSet::build(alpha, beta, delta)?,
    };
    let x0 = input.x0.unwrap_or_else(|| default_start(d, alpha));
    if x0.len() != d {
        return Err(HarnessError::usage(format!(
            "x0 has {} entries, expected {d}",
            x0.len()
        )));
    }
    let x0_inf = x0.iter().fold(0.0f64, |m, a| m.max(a.abs()));
    let k0 = match (input.overrides.k0, input.skip_warmup) {
        (Some(k0), _) => k0,
        (None, true) => 0,
        (None, false) => default_warmup_steps(d, kappa, alpha, x0_inf, input.epsilon, input.overrides.warmup_constant)?,
    };
    let k = match input.overrides.k {
        Some(k) => k,
        None => default_adjusted_steps(d, kappa, input.epsilon, input.overrides.adjusted_constant)?,
    };
    Ok(PointPlan {
        d,
        kappa,
        spectrum,
        gamma,
        delta,
        time_set,
        x0,
        k0,
        k,
    })
}

/// One chain plus the counters the records need.
#[derive(Debug)]
pub struct Replica<'a> {
    pub seed: u64,
    pub chain: Chain<'a>,
    pub steps: usize,
    pub step_grad_evals: u64,
    main_moves: u64,
    main_accepts: u64,
    pub elapsed_seconds: f64,
}

impl<'a> Replica<'a> {
    pub fn new(target: &'a GaussianTarget, plan: &PointPlan, seed: u64) -> Result<Self> {
        Ok(Self {
            seed,
            chain: Chain::new(target, plan.time_set.clone(), plan.x0.clone(), seed)?,
            steps: 0,
            step_grad_evals: 0,
            main_moves: 0,
            main_accepts: 0,
            elapsed_seconds: 0.0,
        })
    }

    /// Runs `n` steps. `main` marks steps whose acceptance is reported.
    pub fn run(
        &mut self,
        n: usize,
        variant: Variant,
        lazy: bool,
        main: bool,
        mut visit: impl FnMut(usize, &StepOutcome),
    ) -> Result<()> {
        let start = Instant::now();
        for _ in 0..n {
            let out = self.chain.step(variant, lazy)?;
            self.steps += 1;
            self.step_grad_evals += out.grad_evals;
            if main && !out.lazy_skip {
                self.main_moves += 1;
                self.main_accepts += out.accepted as u64;
            }
            visit(self.steps, &out);
        }
        self.elapsed_seconds += start.elapsed().as_secs_f64();
        Ok(())
    }

    /// Accepted over non-lazy main-phase steps; 1 when there were none.
    pub fn acceptance_rate(&self) -> f64 {
        if self.main_moves == 0 {
            1.0
        } else {
            self.main_accepts as f64 / self.main_moves as f64
        }
    }

    /// Gradient evaluations, checked against the per-step sum and the oracle.
    pub fn grad_evals(&self) -> Result<u64> {
        let total = self.chain.total_grad_evals();
        if total != self.step_grad_evals || total != self.chain.oracle_queries() {
            return Err(HarnessError::Inconsistent(format!(
                "replica {}: charged {total}, per-step sum {}, oracle saw {}",
                self.seed,
                self.step_grad_evals,
                self.chain.oracle_queries()
            )));
        }
        Ok(total)
    }
}
