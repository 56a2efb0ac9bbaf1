use super::*;
use crate::profile::{CriticalPoint, ProfileParams};
use std::sync::OnceLock;

fn reference() -> &'static Profile {
    static P: OnceLock<Profile> = OnceLock::new();
    P.get_or_init(|| Profile::build(&ProfileParams::reference()).unwrap())
}

fn mode_at_two() -> &'static EigenMode {
    static M: OnceLock<EigenMode> = OnceLock::new();
    M.get_or_init(|| {
        let p = reference();
        let mut modes = find_eigenvalues(p, 2.0, &Rectangle::default_for(p), &RayleighConfig::default()).unwrap();
        assert_eq!(modes.len(), 1);
        modes.remove(0)
    })
}

fn inner_wavenumber() -> f64 {
    static M: OnceLock<f64> = OnceLock::new();
    *M.get_or_init(|| {
        crate::sturm::smallest_eigenvalue(reference(), CriticalPoint::Inner, &Default::default())
            .unwrap()
            .wavenumber()
    })
}

#[test]
fn free_equation_solutions_are_exponentials() {
    let p = Profile::flat(0.6);
    let cfg = RayleighConfig::default();
    let m = 2.5;
    let z = Complex64::new(0.3, 0.2);
    let s = solve_decaying(&p, m, z, Side::Minus, &cfg).unwrap();
    for t in [-9.0, -3.0, 0.0, 4.0] {
        let (v, d) = s.eval(t).unwrap();
        assert!((v.value() - Complex64::new((m * t).exp(), 0.0)).norm() < 1e-12 * (m * t).exp());
        assert!((d.value() - Complex64::new(m * (m * t).exp(), 0.0)).norm() < 1e-12 * m * (m * t).exp());
    }
    let e = evans(&p, m, z, &cfg).unwrap();
    assert!((e.value() - Complex64::new(-2.0 * m, 0.0)).norm() < 1e-13);
    assert_eq!(e.value().im, 0.0);
    let r = Rectangle { re_min: 0.1, re_max: 0.9, im_min: 1e-3, im_max: 0.5 };
    assert_eq!(count_zeros(&p, m, &r, &cfg).unwrap().count, 0);
}

#[test]
fn decaying_solutions_satisfy_the_equation() {
    let p = reference();
    let z = Complex64::new(p.xi(0.0), 0.05);
    for side in [Side::Minus, Side::Plus] {
        let s = solve_decaying(p, 2.0, z, side, &RayleighConfig::default()).unwrap();
        assert!(s.residual() <= 1e-8, "{side:?}: {}", s.residual());
    }
}

#[test]
fn far_amplitudes_agree_with_the_wronskian() {
    // W = -2m C₊ for the left solution and -2m C₋ for the right one.
    let p = reference();
    let cfg = RayleighConfig::default();
    let z = Complex64::new(0.7, 0.1);
    let w = evans(p, 3.0, z, &cfg).unwrap().value();
    for side in [Side::Minus, Side::Plus] {
        let c = solve_decaying(p, 3.0, z, side, &cfg).unwrap().far_amplitude.value();
        assert!((w + 6.0 * c).norm() < 1e-8 * w.norm());
    }
}

#[test]
fn renormalization_ledger_preserves_the_solution() {
    let p = reference();
    let z = Complex64::new(0.7, 0.1);
    let plain = solve_decaying(p, 12.0, z, Side::Minus, &RayleighConfig::default()).unwrap();
    let cfg = RayleighConfig { renormalize_above: 1e-3, ..Default::default() };
    let folded = solve_decaying(p, 12.0, z, Side::Minus, &cfg).unwrap();
    assert!(folded.ledger().iter().any(|&(_, log)| log != 0.0));
    for t in [-3.0, 0.1, 2.0, 20.0] {
        let (a, _) = plain.eval(t).unwrap();
        let (b, _) = folded.eval(t).unwrap();
        assert!((a.ln_abs() - b.ln_abs()).abs() < 1e-9);
    }
    let w = plain.far_amplitude.value();
    assert!((folded.far_amplitude.value() - w).norm() < 1e-9 * w.norm());
}

#[test]
fn wronskian_is_independent_of_matching_point() {
    let p = reference();
    let cfg = RayleighConfig::default();
    let z = Complex64::new(p.xi(0.0), 0.05);
    let w = evans(p, 2.0, z, &cfg).unwrap().value();
    for tm in [-0.25, 0.75] {
        let v = evans_matched_at(p, 2.0, z, tm, &cfg).unwrap().value();
        assert!((v - w).norm() <= 1e-8 * w.norm(), "{tm}: {v} vs {w}");
    }
}

#[test]
fn conjugate_parameter_gives_conjugate_wronskian() {
    let p = reference();
    let cfg = RayleighConfig::default();
    let z = Complex64::new(0.66, 0.04);
    let w = evans(p, 2.0, z, &cfg).unwrap().value();
    let v = evans(p, 2.0, z.conj(), &cfg).unwrap().value();
    assert!((v - w.conj()).norm() < 1e-12 * w.norm());
}

#[test]
fn neutral_mode_zeroes_the_wronskian() {
    let p = reference();
    let e = evans(p, inner_wavenumber(), Complex64::new(p.xi(0.0), 0.0), &RayleighConfig::default()).unwrap();
    assert!(e.relative().norm() <= 1e-6, "{}", e.relative());
}

#[test]
fn reference_eigenvalue_matches_scipy_shooting() {
    // Independent DOP853 shooting on spline-interpolated trapezoid tables.
    let m = mode_at_two();
    assert!((m.z - Complex64::new(0.6256796987997146, 0.022759284890310115)).norm() < 1e-8, "{}", m.z);
    assert!(m.z.im > 0.0);
    assert!(m.miss < 1e-9);
    assert_eq!(m.multiplicity, 1);
}

#[test]
fn eigenpair_diagnostics() {
    let m = mode_at_two();
    assert!(m.imag_identity_residual <= 1e-4);
    assert!((m.decay_minus - 2.0).abs() <= 0.02 * 2.0);
    assert!((m.decay_plus + 2.0).abs() <= 0.02 * 2.0);
    assert!((m.gamma_rate_plus + 2.5).abs() <= 0.05 * 2.5);
    assert!(m.gamma_rate_plus <= -2.5 + 0.05);
    assert!(m.residual < 1e-6);
    let f = m.eigenfunction.as_ref().unwrap();
    let (lo, hi) = f.domain();
    let mut g = |t: f64| f.eval(t).norm_sqr();
    let mut breaks = reference().breaks();
    breaks.retain(|&b| b > lo && b < hi);
    breaks.insert(0, lo);
    breaks.push(hi);
    let norm = crate::num::quad::integrate_breaks(&mut g, &breaks, 1e-12, 1e-10).unwrap();
    assert!((norm - 1.0).abs() < 1e-8, "{norm}");
}

#[test]
fn refinement_is_robust_to_truncation_and_tolerance() {
    let p = reference();
    let z = mode_at_two().z;
    let cfg = RayleighConfig::default();
    let (lo, hi) = p.tail_cutoffs(z, cfg.tail_mass).unwrap();
    let wide = RayleighConfig { truncation: Some((2.0 * lo, 2.0 * hi)), ..cfg.clone() };
    let zw = refine(p, 2.0, z, z + Complex64::new(1e-7, 0.0), &wide).unwrap();
    assert!((zw - z).norm() <= 1e-8, "{}", (zw - z).norm());
    let tight = RayleighConfig { rtol: 0.5 * cfg.rtol, atol: 0.5 * cfg.atol, ..cfg.clone() };
    let zt = refine(p, 2.0, z, z + Complex64::new(1e-7, 0.0), &tight).unwrap();
    assert!((zt - z).norm() <= 10.0 * cfg.refine_tol, "{}", (zt - z).norm());
}

#[test]
fn no_modes_beyond_the_inner_wavenumber() {
    let p = reference();
    let xa = p.xi(0.0);
    let r = Rectangle { re_min: p.xi(0.5), re_max: xa + 1.0, im_min: 1e-3, im_max: 1.0 };
    let c = count_zeros(p, inner_wavenumber() + 0.1, &r, &RayleighConfig::default()).unwrap();
    assert_eq!(c.count, 0);
}

#[test]
fn branch_exists_just_below_the_inner_wavenumber() {
    let p = reference();
    let xa = p.xi(0.0);
    let r = Rectangle { re_min: xa - 0.01, re_max: xa + 0.01, im_min: 1e-7, im_max: 0.01 };
    let c = count_zeros(p, inner_wavenumber() - 0.05, &r, &RayleighConfig::default()).unwrap();
    assert_eq!(c.count, 1);
    assert!((c.moment.re - xa).abs() < 1e-3 && c.moment.im > 0.0);
}

#[test]
fn scan_ignores_grid_order() {
    let p = reference();
    let cfg = RayleighConfig::default();
    let a = mode_scan(p, &[3.0, 2.0], &cfg).unwrap();
    let b = mode_scan(p, &[2.0, 3.0, 2.0], &cfg).unwrap();
    assert_eq!(a.rows.len(), 2);
    for (x, y) in a.rows.iter().zip(&b.rows) {
        assert_eq!(x.m, y.m);
        assert_eq!(x.modes.len(), y.modes.len());
        for (u, v) in x.modes.iter().zip(&y.modes) {
            assert_eq!(u.z, v.z);
        }
    }
}

#[test]
fn rejects_small_wavenumbers_and_real_levels() {
    let p = reference();
    let cfg = RayleighConfig::default();
    assert!(matches!(evans(p, 1.0, Complex64::new(0.5, 0.1), &cfg), Err(RayleighError::Wavenumber(_))));
    assert!(matches!(evans(p, 2.0, Complex64::new(0.7, 0.0), &cfg), Err(RayleighError::SpectralParameter(_))));
}
