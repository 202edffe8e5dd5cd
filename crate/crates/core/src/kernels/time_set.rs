use std::f64::consts::PI;

use rand::Rng;

use crate::error::{invalid, Result};

// Boundary comparisons are made with this relative slack so that products such
// as 200 * (pi / 20) that equal the cutoff mathematically are treated as equal.
const BOUNDARY_SLACK: f64 = 1e-12;

/// Smallest set size for which the cosine lemma's counting argument works.
pub const MIN_TIME_SET_SIZE: usize = 10;

/// A finite set of integration times `{k * delta}`, stored as the integer step
/// counts `k` so that `t / delta` is always an exact integer.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSet {
    delta: f64,
    steps: Vec<usize>,
}

impl TimeSet {
    /// `build_time_set`: `{k delta : k >= 1, k delta < 10 pi / sqrt(alpha)}`
    /// with the requirement `0 < delta <= pi / (20 sqrt(beta))`.
    pub fn build(alpha: f64, beta: f64, delta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(invalid(format!("alpha must be positive, got {alpha}")));
        }
        if !(beta >= alpha && beta.is_finite()) {
            return Err(invalid(format!("beta must be >= alpha, got {beta}")));
        }
        let max_delta = PI / (20.0 * beta.sqrt());
        if !(delta > 0.0 && delta <= max_delta * (1.0 + BOUNDARY_SLACK)) {
            return Err(invalid(format!(
                "step size {delta} outside (0, pi/(20 sqrt(beta))] = (0, {max_delta}]"
            )));
        }
        let ts = Self::below_cutoff(alpha, delta)?;
        if ts.len() < MIN_TIME_SET_SIZE {
            return Err(invalid(format!(
                "time set has {} elements, fewer than {MIN_TIME_SET_SIZE}",
                ts.len()
            )));
        }
        Ok(ts)
    }

    /// `{k delta : k >= 1, k delta < 10 pi / sqrt(alpha)}` without the
    /// step-size and size requirements of [`build`](Self::build).
    pub fn below_cutoff(alpha: f64, delta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(invalid(format!("alpha must be positive, got {alpha}")));
        }
        let cutoff = 10.0 * PI / alpha.sqrt();
        let below = |k: usize| (k as f64) * delta < cutoff * (1.0 - BOUNDARY_SLACK);
        let mut k_max = (cutoff / delta).floor() as usize;
        while k_max > 0 && !below(k_max) {
            k_max -= 1;
        }
        while below(k_max + 1) {
            k_max += 1;
        }
        Self::from_steps(delta, (1..=k_max).collect())
    }

    /// A single integration time `n_steps * delta` (fixed-time ablation).
    pub fn fixed(delta: f64, n_steps: usize) -> Result<Self> {
        Self::from_steps(delta, vec![n_steps])
    }

    /// An arbitrary set of step counts. None of the lemma's size or step-size
    /// conditions are enforced.
    pub fn from_steps(delta: f64, mut steps: Vec<usize>) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(invalid(format!("step size must be positive, got {delta}")));
        }
        if steps.is_empty() {
            return Err(invalid("time set must not be empty"));
        }
        if steps.contains(&0) {
            return Err(invalid("integration times must be positive multiples of delta"));
        }
        steps.sort_unstable();
        steps.dedup();
        Ok(Self { delta, steps })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Leapfrog step counts `k`, ascending.
    pub fn steps(&self) -> &[usize] {
        &self.steps
    }

    /// Integration times `k * delta`, ascending.
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.steps.iter().map(move |&k| k as f64 * self.delta)
    }

    pub fn max_time(&self) -> f64 {
        *self.steps.last().expect("time set is non-empty") as f64 * self.delta
    }

    /// Expected number of leapfrog steps for a uniform draw.
    pub fn mean_steps(&self) -> f64 {
        self.steps.iter().sum::<usize>() as f64 / self.len() as f64
    }

    /// Draws a step count uniformly.
    pub fn sample_steps<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.steps[rng.random_range(0..self.steps.len())]
    }
}
