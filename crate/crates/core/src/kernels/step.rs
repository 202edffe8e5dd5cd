use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::time_set::TimeSet;
use crate::dynamics::{check_step_size, leapfrog_in_place, rotate_coordinate, PhaseState};
use crate::error::{check_dim, invalid, Result};
use crate::gaussian::{FirstOrderOracle, Spectrum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Idealized,
    Unadjusted,
    Adjusted,
}

impl std::str::FromStr for Variant {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "idealized" => Ok(Self::Idealized),
            "unadjusted" => Ok(Self::Unadjusted),
            "adjusted" => Ok(Self::Adjusted),
            other => Err(invalid(format!("unknown kernel variant {other:?}"))),
        }
    }
}

/// Result of one kernel transition.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub new_x: Vec<f64>,
    /// False on rejections and on lazy skips.
    pub accepted: bool,
    /// Integration time `n_leapfrog * delta`; 0 on lazy skips.
    pub proposed_t: f64,
    pub n_leapfrog: usize,
    pub grad_evals: u64,
    pub lazy_skip: bool,
    /// Metropolis acceptance probability; `None` unless the step was adjusted
    /// and not skipped.
    pub acceptance_probability: Option<f64>,
}

impl StepOutcome {
    pub(crate) fn skip(x: &[f64]) -> Self {
        Self {
            new_x: x.to_vec(),
            accepted: false,
            proposed_t: 0.0,
            n_leapfrog: 0,
            grad_evals: 0,
            lazy_skip: true,
            acceptance_probability: None,
        }
    }
}

/// `v ~ N(0, I_d)`.
pub fn draw_velocity<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<f64> {
    (0..d).map(|_| rng.sample(StandardNormal)).collect()
}

/// A leapfrog proposal `(x', v')` together with its Metropolis log-acceptance
/// `H(x, v) - H(x', v')`.
#[derive(Debug, Clone, PartialEq)]
pub struct Proposal {
    pub state: PhaseState,
    pub n_steps: usize,
    pub grad_evals: u64,
    pub log_acceptance: f64,
}

impl Proposal {
    /// `min{1, exp(log_acceptance)}`.
    pub fn acceptance_probability(&self) -> f64 {
        self.log_acceptance.min(0.0).exp()
    }
}

/// Runs `n_steps` leapfrog steps from `(x, v)`. The potential values at both
/// endpoints come from the gradient queries the integrator makes anyway, so
/// the Hamiltonians cost nothing extra.
pub fn leapfrog_proposal(
    x: &[f64],
    v: &[f64],
    n_steps: usize,
    delta: f64,
    oracle: &mut FirstOrderOracle<'_>,
) -> Result<Proposal> {
    check_dim(oracle.dim(), x.len())?;
    check_dim(oracle.dim(), v.len())?;
    if n_steps == 0 {
        return Err(invalid("a proposal needs at least one leapfrog step"));
    }
    check_step_size(delta, oracle.beta())?;
    let mut xp = x.to_vec();
    let mut vp = v.to_vec();
    let mut grad = vec![0.0; x.len()];
    let (f_start, f_end) = leapfrog_in_place(&mut xp, &mut vp, delta, n_steps, oracle, &mut grad)?;
    let log_acceptance = f_start + 0.5 * norm_sq(v) - f_end - 0.5 * norm_sq(&vp);
    Ok(Proposal {
        state: PhaseState { x: xp, v: vp },
        n_steps,
        grad_evals: 2 * n_steps as u64,
        log_acceptance,
    })
}

/// One step of idealized HMC: exact flow for a uniformly drawn time. Works
/// in the eigenbasis, so `x` must be given in diagonal coordinates.
pub fn step_idealized<R: Rng + ?Sized>(
    x: &[f64],
    spectrum: &Spectrum,
    time_set: &TimeSet,
    rng: &mut R,
) -> Result<StepOutcome> {
    check_dim(spectrum.dim(), x.len())?;
    let v = draw_velocity(x.len(), rng);
    let k = time_set.sample_steps(rng);
    let t = k as f64 * time_set.delta();
    let new_x = x
        .iter()
        .zip(&v)
        .zip(spectrum.omega_sq())
        .map(|((&xi, &vi), &w2)| rotate_coordinate(xi, vi, w2.sqrt(), t).0)
        .collect();
    Ok(StepOutcome {
        new_x,
        accepted: true,
        proposed_t: t,
        n_leapfrog: 0,
        grad_evals: 0,
        lazy_skip: false,
        acceptance_probability: None,
    })
}

/// One step of unadjusted leapfrog HMC.
pub fn step_unadjusted<R: Rng + ?Sized>(
    x: &[f64],
    oracle: &mut FirstOrderOracle<'_>,
    time_set: &TimeSet,
    rng: &mut R,
) -> Result<StepOutcome> {
    check_dim(oracle.dim(), x.len())?;
    let v = draw_velocity(x.len(), rng);
    let k = time_set.sample_steps(rng);
    let p = leapfrog_proposal(x, &v, k, time_set.delta(), oracle)?;
    Ok(StepOutcome {
        new_x: p.state.x,
        accepted: true,
        proposed_t: k as f64 * time_set.delta(),
        n_leapfrog: k,
        grad_evals: p.grad_evals,
        lazy_skip: false,
        acceptance_probability: None,
    })
}

/// One step of Metropolis-adjusted leapfrog HMC. The uniform for the accept
/// test is always drawn, so the random stream does not depend on the outcome.
pub fn step_adjusted<R: Rng + ?Sized>(
    x: &[f64],
    oracle: &mut FirstOrderOracle<'_>,
    time_set: &TimeSet,
    rng: &mut R,
) -> Result<StepOutcome> {
    check_dim(oracle.dim(), x.len())?;
    let v = draw_velocity(x.len(), rng);
    let k = time_set.sample_steps(rng);
    let p = leapfrog_proposal(x, &v, k, time_set.delta(), oracle)?;
    let u: f64 = rng.random();
    let a = p.acceptance_probability();
    let accepted = u < a;
    Ok(StepOutcome {
        new_x: if accepted { p.state.x } else { x.to_vec() },
        accepted,
        proposed_t: k as f64 * time_set.delta(),
        n_leapfrog: k,
        grad_evals: p.grad_evals,
        lazy_skip: false,
        acceptance_probability: Some(a),
    })
}

/// `min{1, exp(delta^2/8 * sum_i omega_i^4 (x_i^2 - x'_i^2))}`, the acceptance
/// probability of a leapfrog proposal `x -> x'` written in the eigenbasis.
pub fn closed_form_acceptance(x: &[f64], x_prime: &[f64], spectrum: &Spectrum, delta: f64) -> Result<f64> {
    check_dim(spectrum.dim(), x.len())?;
    check_dim(spectrum.dim(), x_prime.len())?;
    let s: f64 = spectrum
        .omega_sq()
        .iter()
        .zip(x.iter().zip(x_prime))
        .map(|(&w2, (&a, &b))| w2 * w2 * (a - b) * (a + b))
        .sum();
    Ok((delta * delta / 8.0 * s).min(0.0).exp())
}

/// The lazy coin. `true` means stay put.
pub(crate) fn lazy_skip<R: Rng + ?Sized>(rng: &mut R) -> bool {
    rng.random_bool(0.5)
}

/// Makes a kernel lazy: with probability 1/2 the returned step stays at `x`
/// at no cost, otherwise it delegates to `step`.
pub fn lazy_wrap<R, F>(mut step: F) -> impl FnMut(&[f64], &mut R) -> Result<StepOutcome>
where
    R: Rng + ?Sized,
    F: FnMut(&[f64], &mut R) -> Result<StepOutcome>,
{
    move |x, rng| {
        if lazy_skip(rng) {
            Ok(StepOutcome::skip(x))
        } else {
            step(x, rng)
        }
    }
}

fn norm_sq(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::GaussianTarget;
    use crate::rng_from_seed;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn unit_target(d: usize) -> GaussianTarget {
        GaussianTarget::diagonal(Spectrum::constant(d, 1.0).unwrap())
    }

    #[test]
    fn closed_form_examples() {
        let s = Spectrum::constant(1, 1.0).unwrap();
        assert_eq!(closed_form_acceptance(&[0.3], &[0.3], &s, 1.0).unwrap(), 1.0);
        assert_eq!(closed_form_acceptance(&[0.3], &[0.0], &s, 1.0).unwrap(), 1.0);
        assert_relative_eq!(
            closed_form_acceptance(&[0.0], &[2.0], &s, 1.0).unwrap(),
            (-0.5f64).exp(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn unadjusted_charges_two_per_step() {
        let target = unit_target(3);
        let mut oracle = FirstOrderOracle::new(&target);
        let ts = TimeSet::from_steps(PI / 20.0, vec![199]).unwrap();
        let out = step_unadjusted(&[1.0, 0.0, -1.0], &mut oracle, &ts, &mut rng_from_seed(1)).unwrap();
        assert_eq!(out.grad_evals, 398);
        assert_eq!(oracle.query_count(), 398);
        assert_relative_eq!(out.proposed_t, 199.0 * PI / 20.0);
        assert!(out.accepted && !out.lazy_skip);
    }

    #[test]
    fn adjusted_keeps_state_on_rejection_and_charges_anyway() {
        // a large step on a stiff coordinate gives a sizeable energy error
        let s = Spectrum::new(vec![1.0, 1.0], 1.0, 1.0).unwrap();
        let target = GaussianTarget::diagonal(s);
        let ts = TimeSet::from_steps(0.9, vec![3]).unwrap();
        let mut rejected = 0;
        let mut rng = rng_from_seed(5);
        let x = [3.0, -3.0];
        for _ in 0..200 {
            let mut oracle = FirstOrderOracle::new(&target);
            let out = step_adjusted(&x, &mut oracle, &ts, &mut rng).unwrap();
            assert_eq!(out.grad_evals, 6);
            assert_eq!(oracle.query_count(), 6);
            if !out.accepted {
                rejected += 1;
                assert_eq!(out.new_x, x);
            }
        }
        assert!(rejected > 0);
    }

    #[test]
    fn full_period_proposal_is_always_accepted() {
        // the per-step angle is slightly larger than delta; take the step
        // count nearest one full period
        let target = unit_target(1);
        let delta = 0.05;
        let phi = crate::dynamics::leapfrog_angle(1.0, delta);
        let n = (2.0 * PI / phi).round() as usize;
        let mut oracle = FirstOrderOracle::new(&target);
        let p = leapfrog_proposal(&[0.7], &[0.2], n, delta, &mut oracle).unwrap();
        assert!((p.state.x[0] - 0.7).abs() < 0.05);
        let s = Spectrum::constant(1, 1.0).unwrap();
        let cf = closed_form_acceptance(&[0.7], &p.state.x, &s, delta).unwrap();
        assert_relative_eq!(p.acceptance_probability(), cf, epsilon = 1e-10);
    }

    #[test]
    fn idealized_is_free_and_lazy_skip_is_identity() {
        let s = Spectrum::constant(2, 1.0).unwrap();
        let ts = TimeSet::build(1.0, 1.0, PI / 20.0).unwrap();
        let mut rng = rng_from_seed(3);
        let mut step = lazy_wrap(|x: &[f64], r: &mut crate::Rng| step_idealized(x, &s, &ts, r));
        let (mut skips, mut moves) = (0, 0);
        for _ in 0..100 {
            let out = step(&[0.5, -0.5], &mut rng).unwrap();
            assert_eq!(out.grad_evals, 0);
            if out.lazy_skip {
                assert_eq!(out.new_x, vec![0.5, -0.5]);
                assert!(!out.accepted);
                skips += 1;
            } else {
                assert!(out.accepted);
                moves += 1;
            }
        }
        assert!(skips > 0 && moves > 0);
    }

    #[test]
    fn rejects_bad_inputs() {
        let target = unit_target(2);
        let mut oracle = FirstOrderOracle::new(&target);
        let ts = TimeSet::from_steps(0.1, vec![2]).unwrap();
        let mut rng = rng_from_seed(0);
        assert!(step_adjusted(&[1.0], &mut oracle, &ts, &mut rng).is_err());
        let too_big = TimeSet::from_steps(1.5, vec![2]).unwrap();
        assert!(step_unadjusted(&[1.0, 0.0], &mut oracle, &too_big, &mut rng).is_err());
        assert_eq!(oracle.query_count(), 0);
        assert!("adjusted".parse::<Variant>().is_ok());
        assert!("mala".parse::<Variant>().is_err());
    }
}
