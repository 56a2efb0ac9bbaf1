use super::*;
use crate::profile::ProfileParams;
use crate::specmat::{self, assemble, GridConfig};
use crate::Profile;
use std::sync::OnceLock;

const REFERENCE_Z: Complex64 = Complex64::new(0.6256796997870, 0.0227592851);

struct Setup {
    op: OperatorMatrix,
    eigen: specmat::UnstableEigen,
    dt: f64,
}

fn setup() -> &'static Setup {
    static S: OnceLock<Setup> = OnceLock::new();
    S.get_or_init(|| {
        let p = Profile::build(&ProfileParams::reference()).unwrap();
        let op = assemble(&p, 2.0, &GridConfig::with_n(1024)).unwrap();
        let eigen = specmat::shift_invert(&op, REFERENCE_Z * 2.0, 1e-13).unwrap();
        let dt = 0.09 / op.norm_bound();
        Setup { op, eigen, dt }
    })
}

fn config(tau_end: f64, dt: f64) -> RunConfig {
    let mut cfg = RunConfig::new(tau_end, dt);
    cfg.record_every = (0.5 / dt).round().max(1.0) as usize;
    cfg
}

#[test]
fn eigenray_grows_at_the_eigenvalue_rate() {
    let s = setup();
    let rate = s.eigen.lambda.im;
    assert!((s.eigen.z - REFERENCE_Z).norm() < 1e-6);
    let gamma0 = s.op.to_gamma(&s.eigen.state);
    let mut cfg = config(5.0 / rate, s.dt);
    cfg.keep_states = true;
    let tr = run(&s.op, &gamma0, &cfg).unwrap();
    for (t, n) in tr.tau.iter().zip(&tr.norms) {
        let exact = tr.norms[0] * (rate * t).exp();
        assert!((n / exact - 1.0).abs() < 5e-3, "tau {t}: {n} vs {exact}");
    }
    // The state stays on the initial ray.
    let e0 = &s.eigen.state;
    for g in tr.states.iter().step_by(20) {
        let v = s.op.to_state(g);
        let overlap: Complex64 = e0.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
        assert!(overlap.norm() / l2(&v) > 1.0 - 1e-6);
    }
    let fit = growth_fit(&tr, 0.0, 5.0 / rate).unwrap();
    assert!((fit.rate / rate - 1.0).abs() < 1e-6);
}

#[test]
fn random_data_is_taken_over_by_the_unstable_mode() {
    let s = setup();
    let rate = s.eigen.lambda.im;
    let data: Vec<Vec<Complex64>> = (0..3).map(|seed| random_data(&s.op, seed)).collect();
    let runs = run_ensemble(&s.op, &data, &config(400.0, s.dt));
    let delta = 0.02 * rate;
    let mut constants = Vec::new();
    for tr in runs {
        let tr = tr.unwrap();
        let fit = growth_fit(&tr, 250.0, 400.0).unwrap();
        assert!((fit.rate / rate - 1.0).abs() < 1e-2, "{} vs {rate}", fit.rate);
        // The bound M e^{(rate + δ)τ} is attained early, not by late growth.
        let k = tr.tau.iter().zip(&tr.norms).map(|(t, n)| n / (tr.norms[0] * ((rate + delta) * t).exp())).enumerate().fold(
            (0, 0.0),
            |acc, (i, v)| if v > acc.1 { (i, v) } else { acc },
        );
        assert!(tr.tau[k.0] < 100.0, "{}", tr.tau[k.0]);
        constants.push(tr.growth_constant(rate + delta));
    }
    let m = constants.iter().fold(0.0f64, |a, &b| a.max(b));
    assert!(m.is_finite() && m < 100.0, "{m}");
}

#[test]
fn halving_the_step_leaves_the_rate_unchanged() {
    let s = setup();
    let g = random_data(&s.op, 42);
    let a = run(&s.op, &g, &config(300.0, s.dt)).unwrap();
    let b = run(&s.op, &g, &config(300.0, 0.5 * s.dt)).unwrap();
    let ra = growth_fit(&a, 200.0, 300.0).unwrap().rate;
    let rb = growth_fit(&b, 200.0, 300.0).unwrap().rate;
    assert!((ra - rb).abs() <= 1e-4 * rb.abs(), "{ra} vs {rb}");
}

#[test]
fn shear_alone_preserves_the_norm() {
    let s = setup();
    let op = s.op.shear_only();
    let g = random_data(&op, 9);
    let tr = run(&op, &g, &config(10.0, 1e-3)).unwrap();
    for n in &tr.norms {
        assert!((n / tr.norms[0] - 1.0).abs() < 1e-6);
    }
}

#[test]
fn schedule_and_data_are_validated() {
    let s = setup();
    let g = random_data(&s.op, 1);
    assert!(matches!(run(&s.op, &g, &RunConfig::new(1.0, 1.0)), Err(EvolveError::StepTooLarge(_))));
    assert!(matches!(run(&s.op, &g, &RunConfig::new(-1.0, 1e-3)), Err(EvolveError::BadSchedule)));
    assert!(matches!(run(&s.op, &g[..10], &RunConfig::new(1.0, 1e-3)), Err(EvolveError::Length { .. })));
    let zero = vec![Complex64::new(0.0, 0.0); s.op.n()];
    assert!(matches!(run(&s.op, &zero, &RunConfig::new(1.0, 1e-3)), Err(EvolveError::ZeroData)));
    let mut capped = config(200.0, s.dt);
    capped.growth_cap = Some(GrowthCap { rate: 0.0, factor: 1.5 });
    assert!(matches!(run(&s.op, &g, &capped), Err(EvolveError::Instability { .. })));
}

#[test]
fn growth_fit_rejects_bad_windows() {
    let flat = Trajectory { m: 2.0, dt: 1.0, tau: vec![0.0, 1.0, 2.0, 3.0], norms: vec![0.0; 4], states: vec![], last: vec![] };
    assert!(matches!(growth_fit(&flat, 0.0, 3.0), Err(EvolveError::ZeroData)));
    let tau: Vec<f64> = (0..40).map(|k| k as f64).collect();
    let noisy: Vec<f64> = tau.iter().map(|t| (0.1 * t + if (*t as usize).is_multiple_of(2) { 0.5 } else { -0.5 }).exp()).collect();
    let tr = Trajectory { m: 2.0, dt: 1.0, tau: tau.clone(), norms: noisy, states: vec![], last: vec![] };
    assert!(matches!(growth_fit(&tr, 0.0, 39.0), Err(EvolveError::WindowTooNoisy { .. })));
    assert!(matches!(growth_fit(&tr, 10.0, 11.0), Err(EvolveError::Window { .. })));
    let clean = Trajectory { norms: tau.iter().map(|t| (0.1 * t).exp()).collect(), ..tr };
    assert!((growth_fit(&clean, 0.0, 39.0).unwrap().rate - 0.1).abs() < 1e-12);
    assert!(clean.csv().starts_with("tau,norm,log_norm\n"));
}

#[test]
fn random_data_is_reproducible() {
    let s = setup();
    assert_eq!(random_data(&s.op, 5), random_data(&s.op, 5));
    assert_ne!(random_data(&s.op, 5), random_data(&s.op, 6));
}
