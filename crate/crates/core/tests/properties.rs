use std::f64::consts::PI;

use proptest::prelude::*;
use randhmc::diagnostics::{density_ratio, gaussian_tv_1d, kstep_coordinate_law, tv_bound_modified, EGammaSet};
use randhmc::dynamics::{
    energy_gap, hamiltonian, leapfrog_evolve, modified_flow, modified_hamiltonian, LeapfrogSchedule, PhaseState,
};
use randhmc::gaussian::{random_orthogonal, sample_diagonal};
use randhmc::kernels::{closed_form_acceptance, leapfrog_proposal};
use randhmc::{FirstOrderOracle, GaussianTarget, Spectrum, TimeSet};

fn spectrum_strategy(max_d: usize) -> impl Strategy<Value = Spectrum> {
    (1..=max_d, 1.0f64..100.0).prop_flat_map(|(d, beta)| {
        prop::collection::vec(1.0f64..=beta, d).prop_map(move |w| Spectrum::new(w, 1.0, beta).unwrap())
    })
}

fn vector(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0f64..3.0, d)
}

fn case() -> impl Strategy<Value = (Spectrum, Vec<f64>, Vec<f64>, f64)> {
    spectrum_strategy(6).prop_flat_map(|s| {
        let d = s.dim();
        let max_delta = PI / (20.0 * s.beta().sqrt());
        (Just(s), vector(d), vector(d), 0.05f64..1.0).prop_map(move |(s, x, v, f)| (s, x, v, f * max_delta))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn leapfrog_equals_modified_rotation((s, x, v, delta) in case(), n in 1usize..400) {
        let target = GaussianTarget::diagonal(s.clone());
        let mut oracle = FirstOrderOracle::new(&target);
        let state = PhaseState::new(x, v).unwrap();
        let out = leapfrog_evolve(&state, &LeapfrogSchedule::new(delta, n).unwrap(), &mut oracle).unwrap();
        let closed = modified_flow(&state, &s, delta, n).unwrap();
        let scale = 1.0 + state.x.iter().chain(&state.v).fold(0.0f64, |m, a| m.max(a.abs())) * s.beta().sqrt();
        for i in 0..s.dim() {
            prop_assert!((out.state.x[i] - closed.x[i]).abs() <= 1e-9 * scale);
            prop_assert!((out.state.v[i] - closed.v[i]).abs() <= 1e-9 * scale * s.beta().sqrt());
        }
        prop_assert_eq!(oracle.query_count(), 2 * n as u64);
        prop_assert_eq!(out.grad_evals, 2 * n as u64);
    }

    #[test]
    fn modified_energy_is_conserved((s, x, v, delta) in case(), n in 1usize..400) {
        let target = GaussianTarget::diagonal(s.clone());
        let mut oracle = FirstOrderOracle::new(&target);
        let state = PhaseState::new(x, v).unwrap();
        let out = leapfrog_evolve(&state, &LeapfrogSchedule::new(delta, n).unwrap(), &mut oracle).unwrap();
        let h0 = modified_hamiltonian(&state, &s, delta).unwrap();
        let h1 = modified_hamiltonian(&out.state, &s, delta).unwrap();
        prop_assert!((h1 - h0).abs() <= 1e-10 * (1.0 + h0));
    }

    #[test]
    fn energy_gap_identity((s, x, v, delta) in case()) {
        let state = PhaseState::new(x.clone(), v).unwrap();
        let h = hamiltonian(&state, &s).unwrap();
        let gap = h - modified_hamiltonian(&state, &s, delta).unwrap();
        let formula: f64 = s.omega_sq().iter().zip(&x).map(|(w2, a)| w2 * w2 * a * a).sum::<f64>() * delta * delta / 8.0;
        prop_assert!((gap - formula).abs() <= 1e-12 * (1.0 + h));
        prop_assert!((energy_gap(&state, &s, delta).unwrap() - formula).abs() <= 1e-12 * (1.0 + h));
    }

    #[test]
    fn leapfrog_is_reversible((s, x, v, delta) in case(), n in 1usize..300) {
        let target = GaussianTarget::diagonal(s);
        let mut oracle = FirstOrderOracle::new(&target);
        let schedule = LeapfrogSchedule::new(delta, n).unwrap();
        let state = PhaseState::new(x, v).unwrap();
        let fwd = leapfrog_evolve(&state, &schedule, &mut oracle).unwrap();
        let back = leapfrog_evolve(&fwd.state.flipped(), &schedule, &mut oracle).unwrap().state.flipped();
        for i in 0..state.dim() {
            prop_assert!((back.x[i] - state.x[i]).abs() <= 1e-10 * (1.0 + state.x[i].abs()));
            prop_assert!((back.v[i] - state.v[i]).abs() <= 1e-10 * (1.0 + state.v[i].abs()));
        }
    }

    #[test]
    fn oracle_acceptance_matches_closed_form((s, x, v, delta) in case(), n in 1usize..300) {
        let target = GaussianTarget::diagonal(s.clone());
        let mut oracle = FirstOrderOracle::new(&target);
        let p = leapfrog_proposal(&x, &v, n, delta, &mut oracle).unwrap();
        let cf = closed_form_acceptance(&x, &p.state.x, &s, delta).unwrap();
        prop_assert!((p.acceptance_probability() - cf).abs() <= 1e-10);
    }

    #[test]
    fn oracle_gradient_matches_finite_differences(s in spectrum_strategy(5), seed in any::<u64>()) {
        let d = s.dim();
        let target = GaussianTarget::with_rotation(s, random_orthogonal(d, seed)).unwrap();
        let mut oracle = FirstOrderOracle::new(&target);
        let x: Vec<f64> = (0..d).map(|i| (i as f64 * 0.7 + 0.3).sin()).collect();
        let (_, g) = oracle.query(&x).unwrap();
        let h = 1e-5;
        for i in 0..d {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += h;
            xm[i] -= h;
            let fd = (oracle.query(&xp).unwrap().0 - oracle.query(&xm).unwrap().0) / (2.0 * h);
            prop_assert!((fd - g[i]).abs() <= 1e-6 * (1.0 + g[i].abs()));
        }
        prop_assert_eq!(oracle.query_count(), 1 + 2 * d as u64);
    }

    #[test]
    fn kstep_variance_identity(x0 in 0.1f64..5.0, omega in 0.1f64..10.0, times in prop::collection::vec(0.01f64..30.0, 1..20)) {
        let law = kstep_coordinate_law(x0, omega, &times).unwrap();
        prop_assert!(law.variance >= 0.0 && law.variance <= 1.0 / (omega * omega) * (1.0 + 1e-12));
        let lhs = law.variance * omega * omega + (law.mean / x0).powi(2);
        prop_assert!((lhs - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn e_gamma_is_monotone(s in spectrum_strategy(8), g1 in 1.0f64..5.0, dg in 0.0f64..5.0, seed in any::<u64>()) {
        let a = EGammaSet::new(g1, &s).unwrap();
        let b = EGammaSet::new(g1 + dg, &s).unwrap();
        for x in sample_diagonal(s.omega_sq(), 200, seed).unwrap() {
            if a.contains(&x).unwrap() {
                prop_assert!(b.contains(&x).unwrap());
            }
        }
    }

    #[test]
    fn time_set_steps_are_exact(alpha in 0.01f64..10.0, kappa in 1.0f64..400.0, f in 0.1f64..=1.0) {
        let beta = alpha * kappa;
        let delta = f * PI / (20.0 * beta.sqrt());
        let ts = TimeSet::build(alpha, beta, delta).unwrap();
        prop_assert!(ts.len() >= 10);
        let cutoff = 10.0 * PI / alpha.sqrt();
        for (k, t) in ts.steps().iter().zip(ts.times()) {
            prop_assert!(*k >= 1);
            prop_assert_eq!(t, *k as f64 * delta);
            prop_assert!(t < cutoff);
        }
    }

    #[test]
    fn tv_bound_dominates_one_dimensional_tv(w2 in 0.01f64..100.0, f in 0.0f64..=1.0) {
        let s = Spectrum::new(vec![w2], w2, w2).unwrap();
        let delta = f / w2.sqrt();
        let hat = w2 * (1.0 - delta * delta * w2 / 4.0);
        let tv = gaussian_tv_1d(1.0 / w2, 1.0 / hat).unwrap();
        prop_assert!(tv <= tv_bound_modified(&s, delta).unwrap() + 1e-15);
    }

    #[test]
    fn rotation_preserves_density(s in spectrum_strategy(5), seed in any::<u64>()) {
        let d = s.dim();
        let diag = GaussianTarget::diagonal(s.clone());
        let rot = GaussianTarget::with_rotation(s, random_orthogonal(d, seed)).unwrap();
        let y: Vec<f64> = (0..d).map(|i| 0.5 - i as f64 * 0.3).collect();
        let x = rot.from_diagonal(&y).unwrap();
        let a = diag.log_density_unnormalized(&y).unwrap();
        let b = rot.log_density_unnormalized(&x).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()));
        let back = rot.to_diagonal(&x).unwrap();
        for i in 0..d {
            prop_assert!((back[i] - y[i]).abs() <= 1e-12);
        }
    }
}

#[test]
fn density_ratio_integrates_modified_normalization() {
    // integral of ratio(x) * pi(x) dx is the mass of pi_hat, i.e. 1
    let s = Spectrum::constant(1, 2.0).unwrap();
    let delta = 0.4;
    let (lo, hi, n) = (-12.0, 12.0, 200_000);
    let h = (hi - lo) / n as f64;
    let pi = |x: f64| (2.0 / (2.0 * PI)).sqrt() * (-x * x).exp();
    let mut sum = 0.0;
    for i in 0..=n {
        let x = lo + i as f64 * h;
        let w = if i == 0 || i == n { 0.5 } else { 1.0 };
        sum += w * density_ratio(&[x], &s, delta).unwrap() * pi(x);
    }
    assert!((sum * h - 1.0).abs() < 1e-6, "{}", sum * h);
}
