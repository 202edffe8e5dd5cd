//! Markov kernels with randomized integration time.
//!
//! Three kernels share one proposal mechanism: refresh the velocity
//! `v ~ N(0, I)`, draw an integration time `t` uniformly from a [`TimeSet`],
//! and move along the Hamiltonian flow for time `t`.
//!
//! - [`step_idealized`] uses the exact flow (white-box, no gradient cost).
//! - [`step_unadjusted`] uses `t / delta` leapfrog steps and always accepts;
//!   it samples the modified target exactly.
//! - [`step_adjusted`] adds a Metropolis filter, restoring the true target.
//!
//! [`Chain`] strings steps together with bookkeeping; [`run_chain`] and
//! [`run_pipeline`] are the batch entry points.

mod chain;
mod step;
mod time_set;

pub use chain::{
    default_adjusted_steps, default_gamma, default_start, default_step_size, default_warmup_steps, run_chain,
    run_pipeline, Chain, KernelConfig, RunStats, StepRecord, DEFAULT_STEP_CONSTANT,
};
pub use step::{
    closed_form_acceptance, draw_velocity, lazy_wrap, leapfrog_proposal, step_adjusted, step_idealized,
    step_unadjusted, Proposal, StepOutcome, Variant,
};
pub use time_set::TimeSet;
