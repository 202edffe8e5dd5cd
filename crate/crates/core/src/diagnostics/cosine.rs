use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Estimate;
use crate::error::{invalid, Error, Result};
use crate::kernels::TimeSet;
use crate::rng_from_seed;

/// `|cos(omega t)|` at or below this counts as a contracting time.
pub const COS_THRESHOLD: f64 = 0.9;

const MIN_TAIL_SAMPLES: usize = 10_000;

/// Fraction of `t` in the time set with `|cos(omega t)| <= 0.9`, by
/// enumeration.
pub fn cos_time_probability(omega: f64, time_set: &TimeSet) -> f64 {
    let hits = time_set
        .times()
        .filter(|&t| (omega * t).cos().abs() <= COS_THRESHOLD)
        .count();
    hits as f64 / time_set.len() as f64
}

/// Monte Carlo estimate of `P[prod_k |cos(omega t_k)| >= 0.9^(K/4)]` over
/// `K` independent uniform draws from the time set.
pub fn cos_product_tail(omega: f64, time_set: &TimeSet, k: usize, n_mc: usize, seed: u64) -> Result<Estimate> {
    if k == 0 {
        return Err(invalid("K must be at least 1"));
    }
    if n_mc < MIN_TAIL_SAMPLES {
        return Err(invalid(format!(
            "need at least {MIN_TAIL_SAMPLES} Monte Carlo tuples, got {n_mc}"
        )));
    }
    // compare in log space so long products do not underflow
    let log_cos: Vec<f64> = time_set.times().map(|t| (omega * t).cos().abs().ln()).collect();
    let threshold = k as f64 / 4.0 * COS_THRESHOLD.ln();
    let mut rng = rng_from_seed(seed);
    let mut hits = 0u64;
    for _ in 0..n_mc {
        let s: f64 = (0..k).map(|_| log_cos[rng.random_range(0..log_cos.len())]).sum();
        hits += (s >= threshold) as u64;
    }
    Ok(Estimate::proportion(hits, n_mc as u64))
}

/// Law of one coordinate after `K` idealized steps with times `t_1..t_K`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoordinateLaw {
    pub mean: f64,
    pub variance: f64,
}

/// `N(x0 p, (1 - p^2) / omega^2)` with `p = prod_k cos(omega t_k)`.
pub fn kstep_coordinate_law(x0: f64, omega: f64, times: &[f64]) -> Result<CoordinateLaw> {
    if times.is_empty() {
        return Err(invalid("need at least one integration time"));
    }
    if !(omega > 0.0) {
        return Err(invalid(format!("frequency must be positive, got {omega}")));
    }
    let p: f64 = times.iter().map(|t| (omega * t).cos()).product();
    Ok(CoordinateLaw {
        mean: x0 * p,
        variance: ((1.0 - p * p) / (omega * omega)).max(0.0),
    })
}

/// Density at `z` of one idealized step from `x` with fixed time `t`:
/// `N(x cos(omega t), sin(omega t)^2 / omega^2)`.
pub fn proposal_density(x: f64, z: f64, omega: f64, t: f64) -> Result<f64> {
    if !(omega > 0.0) {
        return Err(invalid(format!("frequency must be positive, got {omega}")));
    }
    let (s, c) = (omega * t).sin_cos();
    if s.abs() <= 1e-12 {
        return Err(Error::DegenerateProposal(s.abs()));
    }
    let r = (z - x * c) * omega / s;
    Ok(omega / (s.abs() * (2.0 * PI).sqrt()) * (-0.5 * r * r).exp())
}
