//! Closed-form laws, checkable bounds and test statistics.
//!
//! - [`cosine`]: the time-set cosine probability, the cosine-product tail,
//!   the K-step coordinate law of the idealized chain and its one-step
//!   proposal density.
//! - [`concentration`]: the concentration set `E_gamma`, the density ratio
//!   and TV bound between the target and the modified target, and the
//!   acceptance and warm-start bounds.
//! - [`stats`]: Kolmogorov-Smirnov statistics and the stationarity report
//!   used as the convergence proxy.
//!
//! Everything here works in the eigenbasis of the precision matrix.

pub mod concentration;
pub mod cosine;
pub mod stats;

use serde::{Deserialize, Serialize};

pub use concentration::{
    acceptance_lower_bound, density_ratio, e_gamma_measure, gaussian_tv_1d, gaussian_tv_mean_shift, tv_bound_modified,
    warmness_gap_bound, EGammaSet, Law, WarmStart,
};
pub use cosine::{
    cos_product_tail, cos_time_probability, kstep_coordinate_law, proposal_density, CoordinateLaw, COS_THRESHOLD,
};
pub use stats::{
    chi_squared_cdf, energy_statistic, ks_critical_value, ks_statistic, ks_two_sample_critical_value,
    ks_two_sample_statistic, normal_cdf, stationarity_report, stationarity_report_at, StationarityReport,
};

/// A Monte Carlo proportion with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
    pub n: u64,
}

impl Estimate {
    pub(crate) fn proportion(hits: u64, n: u64) -> Self {
        let p = hits as f64 / n as f64;
        Self {
            value: p,
            std_error: (p * (1.0 - p) / n as f64).sqrt(),
            n,
        }
    }
}
