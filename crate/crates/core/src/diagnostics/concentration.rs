use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;

use super::Estimate;
use crate::dynamics::modified_spectrum;
use crate::error::{check_dim, invalid, Error, Result};
use crate::gaussian::Spectrum;
use crate::rng_from_seed;

/// The set `{x : |sum_i omega_i^4 x_i^2 - sum_i omega_i^2| <= gamma sqrt(sum_i omega_i^4)}`
/// on which the quadratic form concentrates.
#[derive(Debug, Clone, PartialEq)]
pub struct EGammaSet {
    gamma: f64,
    omega_4: Vec<f64>,
    center: f64,
    radius: f64,
}

impl EGammaSet {
    pub fn new(gamma: f64, spectrum: &Spectrum) -> Result<Self> {
        if !(gamma >= 1.0 && gamma.is_finite()) {
            return Err(invalid(format!("gamma must be >= 1, got {gamma}")));
        }
        Ok(Self {
            gamma,
            omega_4: spectrum.omega_sq().iter().map(|w| w * w).collect(),
            center: spectrum.omega_sq().iter().sum(),
            radius: gamma * spectrum.frobenius(),
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn dim(&self) -> usize {
        self.omega_4.len()
    }

    /// `sum_i omega_i^4 x_i^2`.
    pub fn quadratic_form(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        Ok(self.omega_4.iter().zip(x).map(|(w4, a)| w4 * a * a).sum())
    }

    pub fn contains(&self, x: &[f64]) -> Result<bool> {
        Ok((self.quadratic_form(x)? - self.center).abs() <= self.radius)
    }
}

/// Which Gaussian to measure a set under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Law {
    /// The target `N(0, diag(1/omega^2))`.
    Pi,
    /// The modified target `N(0, diag(1/omega_hat^2))`.
    PiHat,
}

/// Monte Carlo estimate of the measure of `E_gamma` under `law`. `delta` is
/// only used for [`Law::PiHat`], where it must satisfy
/// `delta <= beta^(-1/2) d^(-1/4)`.
pub fn e_gamma_measure(
    set: &EGammaSet,
    spectrum: &Spectrum,
    law: Law,
    delta: f64,
    n_mc: usize,
    seed: u64,
) -> Result<Estimate> {
    check_dim(set.dim(), spectrum.dim())?;
    if n_mc == 0 {
        return Err(invalid("need at least one Monte Carlo sample"));
    }
    let omega_sq = match law {
        Law::Pi => spectrum.omega_sq().to_vec(),
        Law::PiHat => {
            let limit = 1.0 / (spectrum.beta().sqrt() * (spectrum.dim() as f64).powf(0.25));
            if !(delta >= 0.0 && delta <= limit) {
                return Err(invalid(format!(
                    "delta = {delta} exceeds beta^(-1/2) d^(-1/4) = {limit}"
                )));
            }
            modified_spectrum(spectrum, delta)?
        }
    };
    // stream the draws: only the quadratic form is needed, sum_i (w4_i / w2_i) g_i^2
    let weights: Vec<f64> = set.omega_4.iter().zip(&omega_sq).map(|(w4, w2)| w4 / w2).collect();
    let mut rng = rng_from_seed(seed);
    let mut hits = 0u64;
    for _ in 0..n_mc {
        let q: f64 = weights
            .iter()
            .map(|w| {
                let g: f64 = rng.sample(StandardNormal);
                w * g * g
            })
            .sum();
        hits += ((q - set.center).abs() <= set.radius) as u64;
    }
    Ok(Estimate::proportion(hits, n_mc as u64))
}

/// Ratio of the normalized modified density to the normalized target density,
/// `prod_i (1 - delta^2 omega_i^2 / 4)^(1/2) exp(delta^2 / 8 sum_i omega_i^4 x_i^2)`.
pub fn density_ratio(x: &[f64], spectrum: &Spectrum, delta: f64) -> Result<f64> {
    check_dim(spectrum.dim(), x.len())?;
    let mut log_ratio = 0.0;
    for (&w2, &a) in spectrum.omega_sq().iter().zip(x) {
        let z = delta * delta * w2;
        if !(z < 4.0) {
            return Err(invalid(format!("delta^2 omega^2 = {z} must be below 4")));
        }
        log_ratio += 0.5 * (1.0 - z / 4.0).ln() + delta * delta / 8.0 * w2 * w2 * a * a;
    }
    Ok(log_ratio.exp())
}

/// `min{1, (3/8) delta^2 sqrt(sum_i omega_i^4)}`, an upper bound on the TV
/// distance between the target and the modified target.
pub fn tv_bound_modified(spectrum: &Spectrum, delta: f64) -> Result<f64> {
    if !(delta >= 0.0 && delta * delta * spectrum.beta() <= 1.0) {
        return Err(invalid(format!("delta = {delta} exceeds 1/sqrt(beta)")));
    }
    Ok((0.375 * delta * delta * spectrum.frobenius()).min(1.0))
}

/// Exact TV distance between `N(0, var_a)` and `N(0, var_b)`.
pub fn gaussian_tv_1d(var_a: f64, var_b: f64) -> Result<f64> {
    if !(var_a > 0.0 && var_b > 0.0) {
        return Err(invalid("variances must be positive"));
    }
    if var_a == var_b {
        return Ok(0.0);
    }
    let (lo, hi) = if var_a < var_b { (var_a, var_b) } else { (var_b, var_a) };
    // the densities cross at +-c; the narrower one dominates inside
    let c = ((hi / lo).ln() * lo * hi / (hi - lo)).sqrt();
    let inside = |v: f64| erf(c / (2.0 * v).sqrt());
    Ok(inside(lo) - inside(hi))
}

/// Exact TV distance between `N(mu_a, sigma^2)` and `N(mu_b, sigma^2)`; at
/// most `|mu_a - mu_b| / sigma`.
pub fn gaussian_tv_mean_shift(mu_a: f64, mu_b: f64, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(invalid("standard deviation must be positive"));
    }
    Ok(erf((mu_a - mu_b).abs() / (2.0 * std::f64::consts::SQRT_2 * sigma)))
}

/// `exp(-delta^2 gamma sqrt(d) beta / 4)`, a lower bound on the Metropolis
/// acceptance probability between points of `E_gamma`.
pub fn acceptance_lower_bound(gamma: f64, delta: f64, beta: f64, d: usize) -> Result<f64> {
    if !(gamma >= 1.0) {
        return Err(invalid(format!("gamma must be >= 1, got {gamma}")));
    }
    Ok((-delta * delta * gamma * (d as f64).sqrt() * beta / 4.0).exp())
}

/// Outcome of the warm-start check: the modified target is warm for the
/// target with gap at most `bound = 3 s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WarmStart {
    pub bound: f64,
    pub gamma: f64,
    /// Largest step size for which the bound was checked to apply.
    pub delta_threshold: f64,
}

/// Gap bound `3 s` between the modified target and the target at scale `s`,
/// valid when `delta <= 1 / (10 sqrt(gamma beta) d^(1/4))` with
/// `gamma = max{1, ln(1/s)}`.
pub fn warmness_gap_bound(s: f64, delta: f64, spectrum: &Spectrum) -> Result<WarmStart> {
    if !(s > 0.0 && s < 0.5) {
        return Err(invalid(format!("s must lie in (0, 1/2), got {s}")));
    }
    if !(delta > 0.0) {
        return Err(invalid(format!("delta must be positive, got {delta}")));
    }
    let gamma = (1.0 / s).ln().max(1.0);
    let delta_threshold = 1.0 / (10.0 * (gamma * spectrum.beta()).sqrt() * (spectrum.dim() as f64).powf(0.25));
    if delta > delta_threshold * (1.0 + 1e-12) {
        return Err(Error::NotApplicable(format!(
            "delta = {delta} exceeds the warm-start threshold {delta_threshold}"
        )));
    }
    Ok(WarmStart {
        bound: 3.0 * s,
        gamma,
        delta_threshold,
    })
}
