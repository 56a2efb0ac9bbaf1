use super::*;
use crate::profile::ProfileParams;
use std::sync::OnceLock;

fn reference() -> &'static Profile {
    static P: OnceLock<Profile> = OnceLock::new();
    P.get_or_init(|| Profile::build(&ProfileParams::reference()).unwrap())
}

fn reference_mode() -> &'static NeutralMode {
    static M: OnceLock<NeutralMode> = OnceLock::new();
    M.get_or_init(|| sturm::smallest_eigenvalue(reference(), CriticalPoint::Inner, &SturmConfig::default()).unwrap())
}

fn reference_coefficient() -> &'static PlemeljCoefficient {
    static C: OnceLock<PlemeljCoefficient> = OnceLock::new();
    C.get_or_init(|| plemelj_for_mode(reference(), reference_mode(), &PlemeljConfig::default()).unwrap())
}

#[test]
fn imaginary_part_has_the_unstable_sign() {
    let c = reference_coefficient();
    assert!(c.density_at_a < 0.0);
    assert!(c.c.im > 0.0);
    let p = reference();
    let psi_a = reference_mode().psi_at_c;
    let expected = std::f64::consts::PI * psi_a * psi_a * p.a_prime(0.0) / p.xi_prime(0.0) / p.xi_prime(0.0).abs();
    assert!((c.imaginary - expected).abs() < 1e-12 * expected.abs());
    assert!((c.psi_at_a - psi_a).abs() < 1e-9 * psi_a);
}

#[test]
fn closed_form_matches_shrinking_regularization() {
    // Smooth member (feature width h/B = 0.075 well above the regularization).
    let p = Profile::build(&ProfileParams::new(0.5, 4.0)).unwrap();
    let mode = sturm::smallest_eigenvalue(&p, CriticalPoint::Inner, &SturmConfig::default()).unwrap();
    let c = plemelj_for_mode(&p, &mode, &PlemeljConfig::default()).unwrap();
    let psi = mode.psi();
    let f = |t: f64| psi.eval(t);
    let d = NeutralDensity::new(&p, &f, psi.domain()).unwrap();
    let (limit, raw) = regularized_limit(&d, 1e-2).unwrap();
    assert!(raw[2].im.abs() > raw[0].im.abs());
    assert!((limit.im - c.g().im).abs() <= 1e-4 * c.g().im.abs());
    assert!((limit.re - c.g().re).abs() <= 1e-3 * c.g().norm());
    let (fine, _) = regularized_limit(&d, 1e-3).unwrap();
    assert!((fine - c.g()).norm() <= 1e-6 * c.g().norm(), "{fine} vs {}", c.g());
}

#[test]
fn rescaled_neutral_mode_gives_the_same_coefficient() {
    let p = reference();
    let psi = reference_mode().psi();
    let doubled = |t: f64| 2.0 * psi.eval(t);
    let d = NeutralDensity::new(p, &doubled, psi.domain()).unwrap();
    let c = plemelj_coefficient(p, &d, reference_mode().wavenumber(), &PlemeljConfig::default()).unwrap();
    let c0 = reference_coefficient();
    assert!((c.c - c0.c).norm() < 1e-10 * c0.c.norm());
}

#[test]
fn principal_value_is_window_independent() {
    let c0 = reference_coefficient();
    let cfg = PlemeljConfig { window: 0.5 * c0.window, ..Default::default() };
    let c = plemelj_for_mode(reference(), reference_mode(), &cfg).unwrap();
    assert!((c.c.re - c0.c.re).abs() <= 1e-6);
}

#[test]
fn prediction_leaves_into_the_upper_half_plane() {
    let p = reference();
    let c = reference_coefficient();
    assert_eq!(predict_unstable(p, c, 0.0), Complex64::new(p.xi(0.0), 0.0));
    for h in [0.1, 0.01, 0.001] {
        assert!(predict_unstable(p, c, h).im > 0.0);
        assert!(predict_unstable(p, c, -h).im < 0.0);
    }
}

#[test]
fn branch_error_is_superlinear() {
    let r = verify_bifurcation(
        reference(),
        &[0.08, 0.04, 0.02, 0.01],
        &SturmConfig::default(),
        &PlemeljConfig::default(),
        &RayleighConfig::default(),
    )
    .unwrap();
    assert!(r.max_ratio().unwrap() <= 0.6, "{:?}", r.rows);
    for row in &r.rows {
        assert_eq!(row.count, 1);
        assert_eq!(row.count_above, 0);
        assert!(row.z_num.unwrap().im > 0.0);
    }
    // Shooting eigenvalue at h = 0.02 against the first-order prediction.
    let row = &r.rows[2];
    assert!(row.err.unwrap() < 1e-7);
    assert!(r.csv().starts_with("h,re_zpred,im_zpred,re_znum,im_znum,err,ratio\n"));
}

#[test]
fn step_list_is_validated() {
    let cfgs = (SturmConfig::default(), PlemeljConfig::default(), RayleighConfig::default());
    let p = reference();
    assert!(matches!(verify_bifurcation(p, &[0.01, 0.02], &cfgs.0, &cfgs.1, &cfgs.2), Err(BifurcationError::BadSteps)));
    assert!(matches!(
        verify_bifurcation(p, &[30.0], &cfgs.0, &cfgs.1, &cfgs.2),
        Err(BifurcationError::OutsideBand { .. })
    ));
}
