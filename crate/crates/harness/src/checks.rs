//! The lemma-check suite: each check recomputes one identity or bound from
//! scratch and reports a metric against its threshold.

use std::f64::consts::PI;

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::Serialize;

use randhmc::diagnostics::{
    acceptance_lower_bound, cos_product_tail, cos_time_probability, density_ratio, e_gamma_measure, gaussian_tv_1d,
    kstep_coordinate_law, tv_bound_modified, warmness_gap_bound, EGammaSet, Law,
};
use randhmc::dynamics::{
    hamiltonian, leapfrog_evolve, modified_flow, modified_hamiltonian, modified_spectrum, LeapfrogSchedule, PhaseState,
};
use randhmc::gaussian::sample_diagonal;
use randhmc::kernels::{closed_form_acceptance, default_gamma, default_step_size, leapfrog_proposal};
use randhmc::{rng_from_seed, Error, FirstOrderOracle, GaussianTarget, Rng, Spectrum, SpectrumKind, TimeSet};

use crate::config::LemmaConfig;
use crate::error::{HarnessError, Result};
use crate::seeds::hash64;

pub const CHECK_NAMES: [&str; 13] = [
    "leapfrog-exactness",
    "modified-energy",
    "energy-gap",
    "reversibility",
    "acceptance-form",
    "cos-probability",
    "cos-product",
    "kstep-law",
    "density-ratio",
    "tv-bound",
    "e-gamma-decay",
    "acceptance-bound",
    "warm-start",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub check: &'static str,
    pub passed: bool,
    /// The worst observed value of the checked quantity.
    pub metric: f64,
    pub threshold: f64,
    pub detail: String,
}

fn result(check: &'static str, metric: f64, threshold: f64, passed: bool, detail: String) -> CheckResult {
    CheckResult {
        check,
        passed,
        metric,
        threshold,
        detail,
    }
}

/// Runs every check, or only `only`.
pub fn run_checks(config: &LemmaConfig, only: Option<&str>) -> Result<Vec<CheckResult>> {
    config.validate()?;
    if let Some(name) = only {
        if !CHECK_NAMES.contains(&name) {
            return Err(HarnessError::usage(format!(
                "unknown check {name:?}; known checks: {}",
                CHECK_NAMES.join(", ")
            )));
        }
    }
    CHECK_NAMES
        .iter()
        .enumerate()
        .filter(|(_, name)| only.is_none_or(|o| o == **name))
        .map(|(i, &name)| {
            let rng = rng_from_seed(hash64(config.seed, i as u64, 0));
            run_one(name, config, rng)
        })
        .collect()
}

fn run_one(name: &'static str, c: &LemmaConfig, rng: Rng) -> Result<CheckResult> {
    match name {
        "leapfrog-exactness" => leapfrog_exactness(c, rng),
        "modified-energy" => modified_energy(c, rng),
        "energy-gap" => energy_gap(c, rng),
        "reversibility" => reversibility(c, rng),
        "acceptance-form" => acceptance_form(c, rng),
        "cos-probability" => cos_probability(c),
        "cos-product" => cos_product(c),
        "kstep-law" => kstep_law(c, rng),
        "density-ratio" => density_ratio_check(c),
        "tv-bound" => tv_bound(c, rng),
        "e-gamma-decay" => e_gamma_decay(c),
        "acceptance-bound" => acceptance_bound(c, rng),
        "warm-start" => warm_start(c),
        _ => unreachable!("names are validated"),
    }
}

fn spectrum(c: &LemmaConfig, d: usize) -> Result<Spectrum> {
    Ok(Spectrum::generate(d, SpectrumKind::TwoPoint, c.alpha, c.beta, 0)?)
}

fn normals(n: usize, rng: &mut Rng) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// A random phase-space point at the target's scale.
fn random_state(s: &Spectrum, rng: &mut Rng) -> PhaseState {
    let x = s
        .omega_sq()
        .iter()
        .map(|w2| rng.sample::<f64, _>(StandardNormal) / w2.sqrt())
        .collect();
    PhaseState {
        x,
        v: normals(s.dim(), rng),
    }
}

fn leapfrog_exactness(c: &LemmaConfig, mut rng: Rng) -> Result<CheckResult> {
    let s = spectrum(c, c.d)?;
    let delta = c.delta();
    let target = GaussianTarget::diagonal(s.clone());
    let mut oracle = FirstOrderOracle::new(&target);
    let state = random_state(&s, &mut rng);
    let hat = modified_spectrum(&s, delta)?;
    // orbit radius of each coordinate under the modified flow
    let radius: Vec<f64> = (0..s.dim())
        .map(|i| (state.x[i].powi(2) + state.v[i].powi(2) / hat[i]).sqrt())
        .collect();
    let mut worst = 0.0f64;
    let mut n = 1;
    while n <= c.leapfrog_steps {
        let lf = leapfrog_evolve(&state, &LeapfrogSchedule::new(delta, n)?, &mut oracle)?.state;
        let cf = modified_flow(&state, &s, delta, n)?;
        for i in 0..s.dim() {
            worst = worst.max((lf.x[i] - cf.x[i]).abs() / radius[i]);
            worst = worst.max((lf.v[i] - cf.v[i]).abs() / (radius[i] * hat[i].sqrt()));
        }
        n = if n == c.leapfrog_steps {
            n + 1
        } else {
            (n * 10).min(c.leapfrog_steps)
        };
    }
    let thr = 1e-8;
    Ok(result(
        "leapfrog-exactness",
        worst,
        thr,
        worst <= thr,
        format!("n <= {}", c.leapfrog_steps),
    ))
}

fn modified_energy(c: &LemmaConfig, mut rng: Rng) -> Result<CheckResult> {
    let s = spectrum(c, c.d)?;
    let delta = c.delta();
    let target = GaussianTarget::diagonal(s.clone());
    let mut oracle = FirstOrderOracle::new(&target);
    let mut state = random_state(&s, &mut rng);
    let h0 = modified_hamiltonian(&state, &s, delta)?;
    let one = LeapfrogSchedule::new(delta, 1)?;
    let mut worst = 0.0f64;
    for _ in 0..c.leapfrog_steps {
        state = leapfrog_evolve(&state, &one, &mut oracle)?.state;
        worst = worst.max((modified_hamiltonian(&state, &s, delta)? - h0).abs() / h0);
    }
    let thr = 1e-9;
    Ok(result(
        "modified-energy",
        worst,
        thr,
        worst <= thr,
        "relative drift".into(),
    ))
}

fn energy_gap(c: &LemmaConfig, mut rng: Rng) -> Result<CheckResult> {
    let s = spectrum(c, c.d)?;
    let delta = c.delta();
    let mut worst = 0.0f64;
    for _ in 0..c.states {
        let st = random_state(&s, &mut rng);
        let h = hamiltonian(&st, &s)?;
        let gap = h - modified_hamiltonian(&st, &s, delta)?;
        let formula: f64 = delta * delta / 8.0
            * s.omega_sq()
                .iter()
                .zip(&st.x)
                .map(|(w2, a)| w2 * w2 * a * a)
                .sum::<f64>();
        worst = worst.max((gap - formula).abs() / (1.0 + h));
    }
    let thr = 1e-12;
    Ok(result(
        "energy-gap",
        worst,
        thr,
        worst <= thr,
        format!("{} states", c.states),
    ))
}

fn reversibility(c: &LemmaConfig, mut rng: Rng) -> Result<CheckResult> {
    let s = spectrum(c, c.d)?;
    let ts = TimeSet::build(c.alpha, c.beta, c.delta())?;
    let target = GaussianTarget::diagonal(s.clone());
    let mut oracle = FirstOrderOracle::new(&target);
    let mut worst = 0.0f64;
    for _ in 0..c.states {
        let st = random_state(&s, &mut rng);
        let sched = LeapfrogSchedule::new(ts.delta(), ts.sample_steps(&mut rng))?;
        let fwd = leapfrog_evolve(&st, &sched, &mut oracle)?.state;
        let back = leapfrog_evolve(&fwd.flipped(), &sched, &mut oracle)?.state.flipped();
        for i in 0..s.dim() {
            worst = worst.max((back.x[i] - st.x[i]).abs() / (1.0 + st.x[i].abs()));
            worst = worst.max((back.v[i] - st.v[i]).abs() / (1.0 + st.v[i].abs()));
        }
    }
    let thr = 1e-10;
    Ok(result(
        "reversibility",
        worst,
        thr,
        worst <= thr,
        format!("{} round trips", c.states),
    ))
}

fn acceptance_form(c: &LemmaConfig, mut rng: Rng) -> Result<CheckResult> {
    let s = spectrum(c, c.d)?;
    let ts = TimeSet::build(c.alpha, c.beta, c.delta())?;
    let target = GaussianTarget::diagonal(s.clone());
    let mut oracle = FirstOrderOracle::new(&target);
    let mut worst = 0.0f64;
    let mut min_accept = 1.0f64;
    for _ in 0..c.states {
        let st = random_state(&s, &mut rng);
        let p = leapfrog_proposal(&st.x, &st.v, ts.sample_steps(&mut rng), ts.delta(), &mut oracle)?;
        let cf = closed_form_acceptance(&st.x, &p.state.x, &s, ts.delta())?;
        worst = worst.max((p.acceptance_probability() - cf).abs());
        min_accept = min_accept.min(cf);
    }
    let thr = 1e-10;
    Ok(result(
        "acceptance-form",
        worst,
        thr,
        worst <= thr,
        format!("{} proposals, smallest acceptance {min_accept:.6}", c.states),
    ))
}

fn log_grid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |j| {
        let f = if n == 1 { 0.0 } else { j as f64 / (n - 1) as f64 };
        lo * (hi / lo).powf(f)
    })
}

fn cos_probability(c: &LemmaConfig) -> Result<CheckResult> {
    let mut worst = f64::INFINITY;
    for (alpha, beta) in [(c.alpha, c.beta), (1.0, 1.0), (1.0, 100.0), (0.01, 1.0)] {
        let ts = TimeSet::build(alpha, beta, PI / (20.0 * beta.sqrt()))?;
        for omega in log_grid(alpha.sqrt(), beta.sqrt(), 200) {
            worst = worst.min(cos_time_probability(omega, &ts));
        }
    }
    Ok(result(
        "cos-probability",
        worst,
        0.5,
        worst >= 0.5,
        "smallest probability".into(),
    ))
}

fn cos_product(c: &LemmaConfig) -> Result<CheckResult> {
    let ts = TimeSet::build(c.alpha, c.beta, c.delta())?;
    let mut worst = f64::NEG_INFINITY;
    let mut passed = true;
    for (j, k) in [8usize, 16, 32, 64].into_iter().enumerate() {
        for (m, omega) in log_grid(c.alpha.sqrt(), c.beta.sqrt(), 3).enumerate() {
            let est = cos_product_tail(omega, &ts, k, c.n_mc, hash64(c.seed, j as u64, m as u64))?;
            let excess = est.value - (-(k as f64) / 8.0).exp() - 3.0 * est.std_error;
            worst = worst.max(excess);
            passed &= excess <= 0.0;
        }
    }
    Ok(result(
        "cos-product",
        worst,
        0.0,
        passed,
        "tail - exp(-K/8) - 3 se".into(),
    ))
}

fn kstep_law(c: &LemmaConfig, mut rng: Rng) -> Result<CheckResult> {
    let ts = TimeSet::build(c.alpha, c.beta, c.delta())?;
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let x0 = rng.random_range(-3.0..3.0);
        let omega = c.alpha.sqrt() * (c.beta / c.alpha).sqrt().powf(rng.random::<f64>());
        let times: Vec<f64> = (0..rng.random_range(1..=8))
            .map(|_| ts.sample_steps(&mut rng) as f64 * ts.delta())
            .collect();
        let law = kstep_coordinate_law(x0, omega, &times)?;
        let n = c.n_mc;
        let (mut sum, mut sum_sq) = (0.0, 0.0);
        for _ in 0..n {
            let mut x = x0;
            for &t in &times {
                let (sn, cs) = (omega * t).sin_cos();
                x = cs * x + sn / omega * rng.sample::<f64, _>(StandardNormal);
            }
            sum += x;
            sum_sq += x * x;
        }
        let nf = n as f64;
        let mean = sum / nf;
        let var = (sum_sq - nf * mean * mean) / (nf - 1.0);
        let se_mean = (law.variance / nf).sqrt();
        let se_var = law.variance * (2.0 / (nf - 1.0)).sqrt();
        if se_mean > 0.0 {
            worst = worst.max((mean - law.mean).abs() / se_mean);
            worst = worst.max((var - law.variance).abs() / se_var);
        }
    }
    Ok(result(
        "kstep-law",
        worst,
        4.0,
        worst <= 4.0,
        "largest deviation in standard errors".into(),
    ))
}

fn density_ratio_check(c: &LemmaConfig) -> Result<CheckResult> {
    let s = spectrum(c, c.d)?;
    let gamma = default_gamma(c.epsilon)?;
    let delta = default_step_size(c.beta, c.d, gamma)?;
    let set = EGammaSet::new(gamma, &s)?;
    let mut worst = 0.0f64;
    let mut inside = 0;
    for x in sample_diagonal(s.omega_sq(), 10 * c.states, hash64(c.seed, 100, 0))? {
        if set.contains(&x)? {
            inside += 1;
            worst = worst.max((density_ratio(&x, &s, delta)? - 1.0).abs());
        }
    }
    Ok(result(
        "density-ratio",
        worst,
        0.1,
        worst <= 0.1,
        format!("{inside} samples in E_gamma, gamma = {gamma:.4}"),
    ))
}

/// TV distance between two centered product Gaussians in two dimensions, by
/// midpoint quadrature.
fn tv_2d(var_a: [f64; 2], var_b: [f64; 2]) -> f64 {
    let n = 600;
    let half: Vec<f64> = (0..2).map(|i| 9.0 * var_a[i].max(var_b[i]).sqrt()).collect();
    let h = [2.0 * half[0] / n as f64, 2.0 * half[1] / n as f64];
    let pdf = |x: f64, v: f64| (-0.5 * x * x / v).exp() / (2.0 * PI * v).sqrt();
    let col = |i: usize, var: &[f64; 2]| -> Vec<f64> {
        (0..n)
            .map(|k| pdf(-half[i] + (k as f64 + 0.5) * h[i], var[i]))
            .collect()
    };
    let (a0, a1, b0, b1) = (col(0, &var_a), col(1, &var_a), col(0, &var_b), col(1, &var_b));
    let mut sum = 0.0;
    for j in 0..n {
        for k in 0..n {
            sum += (a0[j] * a1[k] - b0[j] * b1[k]).abs();
        }
    }
    0.5 * sum * h[0] * h[1]
}

fn tv_bound(c: &LemmaConfig, mut rng: Rng) -> Result<CheckResult> {
    let mut worst = f64::NEG_INFINITY;
    for case in 0..20 {
        let d = 1 + case % 2;
        let beta = c.alpha * (c.beta / c.alpha).powf(rng.random::<f64>());
        let w: Vec<f64> = (0..d).map(|_| rng.random_range(c.alpha..=beta)).collect();
        let s = Spectrum::new(w, c.alpha, beta)?;
        let delta = rng.random_range(0.05..1.0) / beta.sqrt();
        let hat = modified_spectrum(&s, delta)?;
        let var = |w: &[f64]| -> Vec<f64> { w.iter().map(|a| 1.0 / a).collect() };
        let (va, vb) = (var(s.omega_sq()), var(&hat));
        let tv = if d == 1 {
            gaussian_tv_1d(va[0], vb[0])?
        } else {
            tv_2d([va[0], va[1]], [vb[0], vb[1]])
        };
        worst = worst.max(tv - tv_bound_modified(&s, delta)?);
    }
    Ok(result(
        "tv-bound",
        worst,
        0.0,
        worst <= 0.0,
        "largest TV minus bound".into(),
    ))
}

fn e_gamma_decay(c: &LemmaConfig) -> Result<CheckResult> {
    let s = Spectrum::constant(c.e_gamma_dim, c.alpha)?;
    let mut logs = Vec::new();
    for (j, gamma) in [1.0, 2.0, 4.0, 8.0].into_iter().enumerate() {
        let set = EGammaSet::new(gamma, &s)?;
        let est = e_gamma_measure(&set, &s, Law::Pi, 0.0, c.e_gamma_samples, hash64(c.seed, 200, j as u64))?;
        logs.push((1.0 - est.value).ln());
    }
    let passed = logs.windows(2).all(|w| w[1] < w[0]) && logs.iter().all(|l| l.is_finite());
    let worst = logs.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
    Ok(result(
        "e-gamma-decay",
        worst,
        0.0,
        passed,
        format!("log(1 - measure) at gamma 1,2,4,8: {logs:.3?}"),
    ))
}

fn acceptance_bound(c: &LemmaConfig, mut rng: Rng) -> Result<CheckResult> {
    let s = spectrum(c, c.d)?;
    let gamma = default_gamma(c.epsilon)?;
    let delta = default_step_size(c.beta, c.d, gamma)?;
    let ts = TimeSet::build(c.alpha, c.beta, delta)?;
    let set = EGammaSet::new(gamma, &s)?;
    let bound = acceptance_lower_bound(gamma, delta, c.beta, c.d)?;
    let target = GaussianTarget::diagonal(s.clone());
    let mut oracle = FirstOrderOracle::new(&target);
    let mut lowest = 1.0f64;
    let mut pairs = 0;
    for x in sample_diagonal(s.omega_sq(), c.states, hash64(c.seed, 300, 0))? {
        let v = normals(c.d, &mut rng);
        let p = leapfrog_proposal(&x, &v, ts.sample_steps(&mut rng), delta, &mut oracle)?;
        if set.contains(&x)? && set.contains(&p.state.x)? {
            pairs += 1;
            lowest = lowest.min(p.acceptance_probability());
        }
    }
    Ok(result(
        "acceptance-bound",
        lowest,
        bound,
        lowest >= bound,
        format!("{pairs} proposals with both ends in E_gamma"),
    ))
}

fn warm_start(c: &LemmaConfig) -> Result<CheckResult> {
    let s = spectrum(c, c.d)?;
    let small = c.epsilon / 12.0;
    let gamma = default_gamma(c.epsilon)?;
    let delta = default_step_size(c.beta, c.d, gamma)?;
    let ok = warmness_gap_bound(small, delta, &s)?;
    let gated = matches!(
        warmness_gap_bound(small, 2.0 * ok.delta_threshold, &s),
        Err(Error::NotApplicable(_))
    );
    let passed = (ok.bound - 3.0 * small).abs() <= 1e-15 && gated;
    Ok(result(
        "warm-start",
        ok.bound,
        3.0 * small,
        passed,
        format!("s = {small}, hypothesis gate rejects large steps: {gated}"),
    ))
}
