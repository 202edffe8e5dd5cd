//! Statistical checks of the kernels against their known stationary and
//! transition laws.

#![allow(clippy::needless_range_loop)]

use std::f64::consts::PI;

use randhmc::diagnostics::{
    cos_time_probability, ks_critical_value, ks_statistic, ks_two_sample_critical_value, ks_two_sample_statistic,
    normal_cdf, stationarity_report,
};
use randhmc::dynamics::modified_spectrum;
use randhmc::gaussian::sample_diagonal;
use randhmc::kernels::{run_chain, step_adjusted, step_idealized, step_unadjusted};
use randhmc::{
    rng_from_seed, Chain, FirstOrderOracle, GaussianTarget, KernelConfig, Spectrum, SpectrumKind, TimeSet, Variant,
};

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    (m, xs.iter().map(|a| (a - m) * (a - m)).sum::<f64>() / (n - 1.0))
}

fn column(samples: &[Vec<f64>], i: usize) -> Vec<f64> {
    samples.iter().map(|x| x[i]).collect()
}

/// One kernel step from every exact sample; the outputs must again look like
/// exact samples from `reference`.
fn one_step_pushforward(variant: Variant, lazy: bool, s: &Spectrum, reference: &[f64], delta: f64) {
    let n = 100_000;
    let target = GaussianTarget::diagonal(s.clone());
    let ts = TimeSet::build(s.alpha(), s.beta(), delta).unwrap();
    let starts = sample_diagonal(reference, n, 101).unwrap();
    let mut rng = rng_from_seed(202);
    let mut oracle = FirstOrderOracle::new(&target);
    let out: Vec<Vec<f64>> = starts
        .iter()
        .map(|x| {
            if lazy && rand::Rng::random_bool(&mut rng, 0.5) {
                return x.clone();
            }
            match variant {
                Variant::Adjusted => step_adjusted(x, &mut oracle, &ts, &mut rng).unwrap().new_x,
                Variant::Unadjusted => step_unadjusted(x, &mut oracle, &ts, &mut rng).unwrap().new_x,
                Variant::Idealized => step_idealized(x, s, &ts, &mut rng).unwrap().new_x,
            }
        })
        .collect();
    let fresh = sample_diagonal(reference, n, 303).unwrap();
    let level = 0.01 / s.dim() as f64;
    let crit = ks_two_sample_critical_value(n, n, level);
    for i in 0..s.dim() {
        let d = ks_two_sample_statistic(&column(&out, i), &column(&fresh, i)).unwrap();
        assert!(d <= crit, "{variant:?} coordinate {i}: KS {d} > {crit}");
    }
}

#[test]
fn adjusted_kernel_preserves_target() {
    // a step size well above the default makes rejections frequent enough to matter
    let s = Spectrum::generate(4, SpectrumKind::Geometric, 1.0, 25.0, 0).unwrap();
    let delta = PI / (20.0 * 5.0);
    one_step_pushforward(Variant::Adjusted, false, &s, s.omega_sq(), delta);
    one_step_pushforward(Variant::Adjusted, true, &s, s.omega_sq(), delta);
}

#[test]
fn unadjusted_kernel_preserves_modified_target() {
    let s = Spectrum::generate(4, SpectrumKind::Geometric, 1.0, 25.0, 0).unwrap();
    let delta = PI / (20.0 * 5.0);
    let hat = modified_spectrum(&s, delta).unwrap();
    one_step_pushforward(Variant::Unadjusted, false, &s, &hat, delta);
}

#[test]
fn idealized_kernel_preserves_target() {
    let s = Spectrum::generate(3, SpectrumKind::Geometric, 1.0, 9.0, 0).unwrap();
    one_step_pushforward(Variant::Idealized, false, &s, s.omega_sq(), PI / 60.0);
}

#[test]
fn idealized_quarter_period_is_standard_normal() {
    // omega = 1, the only time is pi/2: the output is v itself
    let s = Spectrum::constant(1, 1.0).unwrap();
    let ts = TimeSet::from_steps(PI / 20.0, vec![10]).unwrap();
    let mut rng = rng_from_seed(1);
    let xs: Vec<f64> = (0..20_000)
        .map(|_| step_idealized(&[3.0], &s, &ts, &mut rng).unwrap().new_x[0])
        .collect();
    let d = ks_statistic(&xs, normal_cdf).unwrap();
    assert!(d <= ks_critical_value(xs.len(), 0.01), "{d}");
}

#[test]
fn idealized_mean_is_start_times_average_cosine() {
    let s = Spectrum::new(vec![1.0, 2.5], 1.0, 4.0).unwrap();
    let ts = TimeSet::build(1.0, 4.0, PI / 40.0).unwrap();
    let x = [2.0, -1.5];
    let n = 100_000;
    let mut rng = rng_from_seed(8);
    let out: Vec<Vec<f64>> = (0..n)
        .map(|_| step_idealized(&x, &s, &ts, &mut rng).unwrap().new_x)
        .collect();
    for i in 0..2 {
        let w = s.omega_sq()[i].sqrt();
        let cos_mean = ts.times().map(|t| (w * t).cos()).sum::<f64>() / ts.len() as f64;
        let (m, v) = mean_var(&column(&out, i));
        assert!((m - x[i] * cos_mean).abs() <= 4.0 * (v / n as f64).sqrt());
    }
}

#[test]
fn lazy_fraction_is_one_half() {
    let s = Spectrum::constant(1, 1.0).unwrap();
    let target = GaussianTarget::diagonal(s);
    let config = KernelConfig {
        variant: Variant::Idealized,
        lazy: true,
        time_set: TimeSet::build(1.0, 1.0, PI / 20.0).unwrap(),
        seed: 77,
        thin: None,
    };
    let n = 100_000;
    let stats = run_chain(&config, &target, &[0.0], n).unwrap();
    let skips = stats.per_step.iter().filter(|r| r.lazy_skip).count() as f64;
    assert!((skips / n as f64 - 0.5).abs() <= 4.0 * (0.25 / n as f64).sqrt());
}

#[test]
fn unadjusted_chain_variance_is_modified() {
    let s = Spectrum::constant(1, 1.0).unwrap();
    let delta = PI / 20.0;
    let target = GaussianTarget::diagonal(s.clone());
    let config = KernelConfig {
        variant: Variant::Unadjusted,
        lazy: false,
        time_set: TimeSet::build(1.0, 1.0, delta).unwrap(),
        seed: 5,
        thin: Some(1),
    };
    let n = 40_000;
    let stats = run_chain(&config, &target, &[0.0], n).unwrap();
    let late: Vec<f64> = stats.trajectory.unwrap()[1000..].iter().map(|x| x[0]).collect();
    let (_, v) = mean_var(&late);
    let expected = 1.0 / modified_spectrum(&s, delta).unwrap()[0];
    // consecutive states are nearly independent here, so the iid error applies
    let se = expected * (2.0 / late.len() as f64).sqrt();
    assert!((v - expected).abs() <= 5.0 * se, "{v} vs {expected}");
}

#[test]
fn rotated_and_diagonal_runs_agree_statistically() {
    let s = Spectrum::generate(6, SpectrumKind::LogUniform, 1.0, 16.0, 3).unwrap();
    let diag = GaussianTarget::diagonal(s.clone());
    let rot = GaussianTarget::new(s.clone(), true, 9).unwrap();
    let ts = TimeSet::build(1.0, 16.0, PI / 80.0).unwrap();
    let n = 2000;
    let starts = sample_diagonal(s.omega_sq(), n, 4).unwrap();
    let (mut acc_d, mut acc_r) = (0.0, 0.0);
    let (mut out_d, mut out_r) = (Vec::new(), Vec::new());
    for (r, y) in starts.iter().enumerate() {
        let mut c = Chain::new(&diag, ts.clone(), y.clone(), r as u64).unwrap();
        c.step(Variant::Adjusted, false).unwrap();
        acc_d += c.acceptance_rate();
        out_d.push(c.position().to_vec());
        let mut c = Chain::new(&rot, ts.clone(), rot.from_diagonal(y).unwrap(), r as u64).unwrap();
        c.step(Variant::Adjusted, false).unwrap();
        acc_r += c.acceptance_rate();
        assert_eq!(c.total_grad_evals(), c.oracle_queries());
        out_r.push(rot.to_diagonal(c.position()).unwrap());
    }
    let (acc_d, acc_r) = (acc_d / n as f64, acc_r / n as f64);
    assert!(
        (acc_d - acc_r).abs() <= 4.0 * (0.25 / n as f64).sqrt() + 0.01,
        "{acc_d} vs {acc_r}"
    );
    let rd = stationarity_report(&out_d, &s, 0.01).unwrap();
    let rr = stationarity_report(&out_r, &s, 0.01).unwrap();
    assert!(rd.passed && rr.passed, "{rd:?} {rr:?}");
}

#[test]
fn time_set_lemma_holds_on_a_frequency_grid() {
    for &(alpha, beta) in &[(1.0f64, 1.0f64), (1.0, 100.0), (0.01, 1.0)] {
        let ts = TimeSet::build(alpha, beta, PI / (20.0 * beta.sqrt())).unwrap();
        for j in 0..200 {
            let f = if beta == alpha { 0.0 } else { j as f64 / 199.0 };
            let omega = alpha.sqrt() * (beta / alpha).sqrt().powf(f);
            assert!(cos_time_probability(omega, &ts) >= 0.5);
        }
    }
}
