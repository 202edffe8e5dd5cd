use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use statrs::function::gamma::gamma_lr;

use crate::error::{check_dim, invalid, Result};
use crate::gaussian::Spectrum;

const MIN_SAMPLES: usize = 100;

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// CDF of the chi-squared law with `dof` degrees of freedom.
pub fn chi_squared_cdf(dof: usize, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        gamma_lr(dof as f64 / 2.0, x / 2.0)
    }
}

/// `sup_z |F_n(z) - cdf(z)|` for the empirical CDF of `samples`.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    if samples.len() < MIN_SAMPLES {
        return Err(invalid(format!(
            "KS statistic needs at least {MIN_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    if samples.iter().any(|a| a.is_nan()) {
        return Err(invalid("samples contain NaN"));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let n = sorted.len() as f64;
    Ok(sorted
        .iter()
        .enumerate()
        .map(|(i, &z)| {
            let f = cdf(z);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max))
}

/// `sup_z |F_a(z) - F_b(z)|` for two empirical CDFs.
pub fn ks_two_sample_statistic(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() < MIN_SAMPLES || b.len() < MIN_SAMPLES {
        return Err(invalid(format!(
            "two-sample KS needs at least {MIN_SAMPLES} samples on each side"
        )));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_unstable_by(f64::total_cmp);
    b.sort_unstable_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let z = a[i].min(b[j]);
        while i < a.len() && a[i] <= z {
            i += 1;
        }
        while j < b.len() && b[j] <= z {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// Asymptotic one-sample KS critical value `sqrt(-ln(level/2)/2) / sqrt(n)`.
pub fn ks_critical_value(n: usize, level: f64) -> f64 {
    (-(level / 2.0).ln() / 2.0).sqrt() / (n as f64).sqrt()
}

/// Asymptotic two-sample KS critical value.
pub fn ks_two_sample_critical_value(n: usize, m: usize, level: f64) -> f64 {
    let (n, m) = (n as f64, m as f64);
    (-(level / 2.0).ln() / 2.0).sqrt() * ((n + m) / (n * m)).sqrt()
}

/// KS distance between the energies `sum_i omega_i^2 x_i^2` of `samples`
/// (eigenbasis coordinates) and the chi-squared law with `d` degrees of
/// freedom they follow under the target.
pub fn energy_statistic(samples: &[Vec<f64>], spectrum: &Spectrum) -> Result<f64> {
    let energies = energies(samples, spectrum)?;
    let d = spectrum.dim();
    ks_statistic(&energies, |e| chi_squared_cdf(d, e))
}

fn energies(samples: &[Vec<f64>], spectrum: &Spectrum) -> Result<Vec<f64>> {
    samples
        .iter()
        .map(|x| {
            check_dim(spectrum.dim(), x.len())?;
            Ok(spectrum.omega_sq().iter().zip(x).map(|(w2, a)| w2 * a * a).sum())
        })
        .collect()
}

/// Convergence proxy for a pooled set of samples: the worst per-coordinate
/// KS distance to the exact marginal, and the energy KS distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationarityReport {
    pub n: usize,
    pub ks_max: f64,
    /// Critical value for the coordinate tests.
    pub ks_critical: f64,
    pub energy_ks: f64,
    /// Critical value for the energy test.
    pub energy_critical: f64,
    pub passed: bool,
}

/// Tests eigenbasis samples against the target: each coordinate at
/// `level / d` (Bonferroni) and the energy at `level`.
pub fn stationarity_report(samples: &[Vec<f64>], spectrum: &Spectrum, level: f64) -> Result<StationarityReport> {
    stationarity_report_at(samples, spectrum, level / spectrum.dim() as f64, level)
}

/// [`stationarity_report`] with explicit levels for the coordinate tests and
/// the energy test.
pub fn stationarity_report_at(
    samples: &[Vec<f64>],
    spectrum: &Spectrum,
    coordinate_level: f64,
    energy_level: f64,
) -> Result<StationarityReport> {
    for level in [coordinate_level, energy_level] {
        if !(level > 0.0 && level < 1.0) {
            return Err(invalid(format!("test level must lie in (0, 1), got {level}")));
        }
    }
    let d = spectrum.dim();
    let n = samples.len();
    if n < MIN_SAMPLES {
        return Err(invalid(format!("need at least {MIN_SAMPLES} samples, got {n}")));
    }
    let mut column = vec![0.0; n];
    let mut ks_max = 0.0f64;
    for (i, &w2) in spectrum.omega_sq().iter().enumerate() {
        for (c, x) in column.iter_mut().zip(samples) {
            check_dim(d, x.len())?;
            *c = x[i];
        }
        let sd = 1.0 / w2.sqrt();
        ks_max = ks_max.max(ks_statistic(&column, |z| normal_cdf(z / sd))?);
    }
    let energy_ks = energy_statistic(samples, spectrum)?;
    let ks_critical = ks_critical_value(n, coordinate_level);
    let energy_critical = ks_critical_value(n, energy_level);
    Ok(StationarityReport {
        n,
        ks_max,
        ks_critical,
        energy_ks,
        energy_critical,
        passed: ks_max <= ks_critical && energy_ks <= energy_critical,
    })
}
