//! Harmonic-oscillator dynamics: the exact flow, the leapfrog integrator and
//! the modified Hamiltonian that leapfrog integrates exactly.
//!
//! On a quadratic potential with eigenfrequencies `omega_i`, one leapfrog step
//! of size `delta` is a rotation by the angle `phi_i` (with
//! `cos phi = 1 - delta^2 omega^2 / 2`) in the phase plane scaled by the
//! modified frequency `omega_hat_i = omega_i sqrt(1 - delta^2 omega_i^2 / 4)`.
//! Everything in this module that takes a [`Spectrum`] works in the
//! eigenbasis of `B`; only [`leapfrog_evolve`] goes through the oracle.

use crate::error::{check_dim, invalid, Result};
use crate::gaussian::{FirstOrderOracle, Spectrum};

/// A point `(x, v)` in phase space.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseState {
    pub x: Vec<f64>,
    pub v: Vec<f64>,
}

impl PhaseState {
    pub fn new(x: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        check_dim(x.len(), v.len())?;
        Ok(Self { x, v })
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    /// The state with its velocity negated.
    pub fn flipped(&self) -> Self {
        Self {
            x: self.x.clone(),
            v: self.v.iter().map(|v| -v).collect(),
        }
    }
}

/// `n_steps` leapfrog steps of size `delta`, total time `n_steps * delta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeapfrogSchedule {
    delta: f64,
    n_steps: usize,
}

impl LeapfrogSchedule {
    pub fn new(delta: f64, n_steps: usize) -> Result<Self> {
        if !(delta.is_finite() && delta > 0.0) {
            return Err(invalid(format!("step size must be positive, got {delta}")));
        }
        if n_steps == 0 {
            return Err(invalid("leapfrog schedule needs at least one step"));
        }
        Ok(Self { delta, n_steps })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn duration(&self) -> f64 {
        self.delta * self.n_steps as f64
    }
}

/// Result of a leapfrog integration.
#[derive(Debug, Clone, PartialEq)]
pub struct LeapfrogOutcome {
    pub state: PhaseState,
    /// Gradient evaluations charged: two per step.
    pub grad_evals: u64,
    /// What a gradient-caching implementation would need (`n + 1`). Reported
    /// for reference only.
    pub cached_grad_evals: u64,
    /// `f` at the initial position, from the first oracle query.
    pub potential_start: f64,
    /// `f` at the final position, from the last oracle query.
    pub potential_end: f64,
}

/// Rotates every coordinate by the harmonic flow with frequencies
/// `sqrt(omega_sq[i])` for time `t`. A zero frequency is free motion.
pub fn rotate_harmonic(state: &PhaseState, omega_sq: &[f64], t: f64) -> Result<PhaseState> {
    check_dim(omega_sq.len(), state.dim())?;
    let mut x = Vec::with_capacity(state.dim());
    let mut v = Vec::with_capacity(state.dim());
    for ((&x0, &v0), &w2) in state.x.iter().zip(&state.v).zip(omega_sq) {
        let (xt, vt) = rotate_coordinate(x0, v0, w2.sqrt(), t);
        x.push(xt);
        v.push(vt);
    }
    Ok(PhaseState { x, v })
}

#[inline]
pub(crate) fn rotate_coordinate(x: f64, v: f64, omega: f64, t: f64) -> (f64, f64) {
    if omega == 0.0 {
        return (x + t * v, v);
    }
    let (s, c) = (omega * t).sin_cos();
    (c * x + s * v / omega, -omega * s * x + c * v)
}

/// `exact_evolve`: the exact Hamiltonian flow of `H(x, v) = x'Bx/2 + v'v/2`
/// for time `t` (eigenbasis coordinates). Never touches an oracle.
pub fn exact_evolve(state: &PhaseState, spectrum: &Spectrum, t: f64) -> Result<PhaseState> {
    if !(t >= 0.0) {
        return Err(invalid(format!("evolution time must be non-negative, got {t}")));
    }
    rotate_harmonic(state, spectrum.omega_sq(), t)
}

/// `leapfrog_evolve`: kick-drift-kick leapfrog through the oracle.
///
/// Every step queries the gradient at both of its endpoints, so the oracle
/// counter advances by exactly `2 * n_steps`.
pub fn leapfrog_evolve(
    state: &PhaseState,
    schedule: &LeapfrogSchedule,
    oracle: &mut FirstOrderOracle<'_>,
) -> Result<LeapfrogOutcome> {
    check_dim(oracle.dim(), state.dim())?;
    check_step_size(schedule.delta, oracle.beta())?;
    let mut x = state.x.clone();
    let mut v = state.v.clone();
    let mut grad = vec![0.0; x.len()];
    let (potential_start, potential_end) =
        leapfrog_in_place(&mut x, &mut v, schedule.delta, schedule.n_steps, oracle, &mut grad)?;
    let n = schedule.n_steps as u64;
    Ok(LeapfrogOutcome {
        state: PhaseState { x, v },
        grad_evals: 2 * n,
        cached_grad_evals: n + 1,
        potential_start,
        potential_end,
    })
}

pub(crate) fn check_step_size(delta: f64, beta: f64) -> Result<()> {
    // delta <= 1/sqrt(beta) keeps delta^2 omega^2 <= 1 < 4, so every modified
    // frequency is real
    if !(delta > 0.0 && delta * delta * beta <= 1.0 + 1e-12) {
        return Err(invalid(format!(
            "step size {delta} exceeds 1/sqrt(beta) = {}",
            1.0 / beta.sqrt()
        )));
    }
    Ok(())
}

/// Runs `n_steps` leapfrog steps in place. Returns `(f(x_start), f(x_end))`.
pub(crate) fn leapfrog_in_place(
    x: &mut [f64],
    v: &mut [f64],
    delta: f64,
    n_steps: usize,
    oracle: &mut FirstOrderOracle<'_>,
    grad: &mut [f64],
) -> Result<(f64, f64)> {
    let half = 0.5 * delta;
    let mut f_start = f64::NAN;
    let mut f_end = f64::NAN;
    for step in 0..n_steps {
        let f = oracle.query_into(x, grad)?;
        if step == 0 {
            f_start = f;
        }
        for ((xi, vi), gi) in x.iter_mut().zip(v.iter_mut()).zip(grad.iter()) {
            *vi -= half * gi;
            *xi += delta * *vi;
        }
        f_end = oracle.query_into(x, grad)?;
        for (vi, gi) in v.iter_mut().zip(grad.iter()) {
            *vi -= half * gi;
        }
    }
    Ok((f_start, f_end))
}

/// `modified_spectrum`: `omega_hat_i^2 = omega_i^2 (1 - delta^2 omega_i^2 / 4)`.
pub fn modified_spectrum(spectrum: &Spectrum, delta: f64) -> Result<Vec<f64>> {
    modified_omega_sq(spectrum.omega_sq(), delta)
}

/// [`modified_spectrum`] on a raw list of squared frequencies.
pub fn modified_omega_sq(omega_sq: &[f64], delta: f64) -> Result<Vec<f64>> {
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(invalid(format!("step size must be non-negative, got {delta}")));
    }
    omega_sq
        .iter()
        .map(|&w2| {
            let z = delta * delta * w2;
            if z > 4.0 {
                Err(invalid(format!(
                    "delta^2 omega^2 = {z} exceeds 4; the leapfrog map is unstable"
                )))
            } else {
                Ok(w2 * (1.0 - z / 4.0))
            }
        })
        .collect()
}

/// Rotation angle `phi` of one leapfrog step for squared frequency `omega_sq`,
/// taken as `atan2(sin phi, cos phi)` so it is well conditioned near `pi`.
pub fn leapfrog_angle(omega_sq: f64, delta: f64) -> f64 {
    let z = delta * delta * omega_sq;
    let cos_phi = 1.0 - z / 2.0;
    let sin_phi = delta * omega_sq.sqrt() * (1.0 - z / 4.0).max(0.0).sqrt();
    sin_phi.atan2(cos_phi)
}

/// The one-step leapfrog propagator for a single oscillator, row-major.
pub fn propagator_matrix(omega_sq: f64, delta: f64) -> [[f64; 2]; 2] {
    let z = delta * delta * omega_sq;
    [
        [1.0 - z / 2.0, delta],
        [-delta * omega_sq * (1.0 - z / 4.0), 1.0 - z / 2.0],
    ]
}

/// Closed form of `n` leapfrog steps: each coordinate follows the exact flow
/// of the modified Hamiltonian for its own time `n phi_i / omega_hat_i`.
pub fn modified_flow(state: &PhaseState, spectrum: &Spectrum, delta: f64, n: usize) -> Result<PhaseState> {
    check_dim(spectrum.dim(), state.dim())?;
    let hat = modified_spectrum(spectrum, delta)?;
    let mut out = PhaseState {
        x: Vec::with_capacity(state.dim()),
        v: Vec::with_capacity(state.dim()),
    };
    for (i, (&w2, &h)) in spectrum.omega_sq().iter().zip(&hat).enumerate() {
        if h <= 0.0 {
            return Err(invalid("modified frequency vanishes (delta^2 omega^2 = 4)"));
        }
        let omega_hat = h.sqrt();
        let t = n as f64 * leapfrog_angle(w2, delta) / omega_hat;
        let (x, v) = rotate_coordinate(state.x[i], state.v[i], omega_hat, t);
        out.x.push(x);
        out.v.push(v);
    }
    Ok(out)
}

/// `H(x, v) = sum_i omega_i^2 x_i^2 / 2 + |v|^2 / 2`.
pub fn hamiltonian(state: &PhaseState, spectrum: &Spectrum) -> Result<f64> {
    quadratic_energy(state, spectrum.omega_sq())
}

/// `H_hat(x, v)`, the same energy with the modified frequencies.
pub fn modified_hamiltonian(state: &PhaseState, spectrum: &Spectrum, delta: f64) -> Result<f64> {
    quadratic_energy(state, &modified_spectrum(spectrum, delta)?)
}

fn quadratic_energy(state: &PhaseState, omega_sq: &[f64]) -> Result<f64> {
    check_dim(omega_sq.len(), state.dim())?;
    let potential: f64 = state.x.iter().zip(omega_sq).map(|(x, w)| w * x * x).sum();
    let kinetic: f64 = state.v.iter().map(|v| v * v).sum();
    Ok(0.5 * (potential + kinetic))
}

/// `H - H_hat = (delta^2 / 8) sum_i omega_i^4 x_i^2`, computed directly.
pub fn energy_gap(state: &PhaseState, spectrum: &Spectrum, delta: f64) -> Result<f64> {
    check_dim(spectrum.dim(), state.dim())?;
    let s: f64 = state
        .x
        .iter()
        .zip(spectrum.omega_sq())
        .map(|(x, w)| w * w * x * x)
        .sum();
    Ok(delta * delta / 8.0 * s)
}
