use super::*;
use crate::fields::{self, LogGrid};
use crate::profile::ProfileParams;
use crate::sturm::{self, SturmConfig};
use proptest::prelude::*;
use std::sync::OnceLock;

/// Shooting eigenvalue at m = 2 of the B4/B36 blend tuned to m₀ = 2.
const TUNED_Z: Complex64 = Complex64::new(0.8157252698077849, 0.0023826952362030304);
/// Shooting eigenvalue at m = 2 of the reference profile.
const REFERENCE_Z: Complex64 = Complex64::new(0.6256796997870, 0.0227592851);

fn tuned() -> &'static Profile {
    static P: OnceLock<Profile> = OnceLock::new();
    P.get_or_init(|| {
        let p0 = Profile::build(&ProfileParams::new(0.5, 4.0)).unwrap();
        let p1 = Profile::build(&ProfileParams::new(0.5, 36.0)).unwrap();
        sturm::tune_for_integer_mode(&p0, &p1, 2, 0.02, &SturmConfig::default()).unwrap().profile.unwrap()
    })
}

fn reference() -> &'static Profile {
    static P: OnceLock<Profile> = OnceLock::new();
    P.get_or_init(|| Profile::build(&ProfileParams::reference()).unwrap())
}

fn gaussian(op: &OperatorMatrix, center: f64, width: f64, phase: f64) -> Vec<Complex64> {
    op.t().iter().map(|&t| Complex64::from_polar((-((t - center) / width).powi(2)).exp(), phase * t)).collect()
}

#[test]
fn zero_state_maps_to_zero() {
    let op = assemble(reference(), 2.0, &GridConfig::with_n(256)).unwrap();
    let z = vec![Complex64::new(0.0, 0.0); 256];
    assert!(op.apply(&z).iter().all(|v| v.norm() == 0.0));
    assert!(op.with_transport(0.5, 10.0).unwrap().apply(&z).iter().all(|v| v.norm() == 0.0));
}

#[test]
fn fast_apply_matches_dense_matrix() {
    let base = assemble(reference(), 2.5, &GridConfig::with_n(300)).unwrap();
    let v = seeded_state(300, 3);
    for op in [base.clone(), base.with_transport(0.4, 7.0).unwrap(), base.shear_only()] {
        let a = op.dense();
        let fast = op.apply(&v);
        let slow: Vec<Complex64> = (0..300).map(|j| (0..300).map(|k| a[(j, k)] * v[k]).sum()).collect();
        let err = l2(&fast.iter().zip(&slow).map(|(x, y)| x - y).collect::<Vec<_>>());
        assert!(err <= 1e-12 * l2(&slow), "{err}");
    }
}

#[test]
fn kernel_matches_the_radial_poisson_solve() {
    // 𝒦γ = -(m/r) g′ψ with ψ from the independent log-grid quadrature.
    let p = reference();
    let m = 2.0;
    let op = assemble(p, m, &GridConfig::default()).unwrap();
    let (lo, hi) = (op.t()[0], *op.t().last().unwrap());
    let fine = LogGrid { t_min: lo, t_max: hi, n: 40001 };
    for (center, width, phase) in [(0.2, 0.6, 0.0), (-1.0, 1.5, 1.3), (1.5, 0.8, -0.4)] {
        let bump = |t: f64| Complex64::from_polar((-((t - center) / width).powi(2)).exp(), phase * t);
        let gamma_fine: Vec<Complex64> = fine.points().into_iter().map(bump).collect();
        let psi = fields::poisson_mode(m, fine, &gamma_fine).unwrap();
        let gamma: Vec<Complex64> = op.t().iter().map(|&t| bump(t)).collect();
        let k = op.to_gamma(&op.apply_kernel(&op.to_state(&gamma)));
        let mut err = 0.0f64;
        let mut peak = 0.0f64;
        for (j, &t) in op.t().iter().enumerate() {
            let r = t.exp();
            let expect = -m * p.a(t) / (r * r) * psi.eval(r).unwrap();
            err = err.max((k[j] - expect).norm());
            peak = peak.max(expect.norm());
        }
        assert!(err <= 1e-6 * peak, "center {center}: {:e}", err / peak);
    }
}

#[test]
fn tuned_eigenvalue_matches_shooting() {
    let op = assemble(tuned(), 2.0, &GridConfig::with_n(1024)).unwrap();
    let spec = spectrum(&op, 1e-6).unwrap();
    assert_eq!(spec.unstable.len(), 1);
    let lead = spec.leading().unwrap();
    assert!((lead.z - TUNED_Z).norm() < 1e-7, "{}", (lead.z - TUNED_Z).norm());
    assert!(lead.residual < 1e-10);
    // Everything else sits on the real axis.
    assert!(spec.cloud_height() < 1e-8, "{}", spec.cloud_height());
    let conj = spec.eigenvalues.iter().filter(|l| (l.conj() - lead.lambda).norm() < 1e-6).count();
    assert_eq!(conj, 1);
}

#[test]
fn refinement_improves_the_reference_eigenvalue() {
    let err = |n: usize| {
        let op = assemble(reference(), 2.0, &GridConfig::with_n(n)).unwrap();
        let e = shift_invert(&op, REFERENCE_Z * 2.0, 1e-13).unwrap();
        (e.z - REFERENCE_Z).norm()
    };
    let (coarse, fine) = (err(512), err(1024));
    assert!(fine < 1e-6, "{fine}");
    assert!(fine < 0.5 * coarse, "{coarse} -> {fine}");
}

#[test]
fn unstable_eigenvalue_is_simple() {
    let op = assemble(tuned(), 2.0, &GridConfig::with_n(1024)).unwrap();
    let spec = spectrum(&op, 1e-6).unwrap();
    let lambda = spec.leading().unwrap().lambda;
    let radius = spec.isolation(lambda) / 4.0;
    let probe = multiplicity_probe(&op, lambda, radius, 16).unwrap();
    assert_eq!((probe.algebraic, probe.geometric), (1, 1));
    assert!((probe.trace - 1.0).norm() < 1e-6, "{}", probe.trace);
    assert!((probe.compressed[0] - lambda).norm() < 1e-8 * lambda.norm());
    let half = multiplicity_probe(&op, lambda, radius / 2.0, 16).unwrap();
    assert_eq!(half.algebraic, 1);
}

#[test]
fn kernel_bound_constant_is_grid_independent() {
    let c = |n: usize| {
        let op = assemble(reference(), 3.0, &GridConfig::with_n(n)).unwrap();
        [(0.0, 0.5, 0.0), (-3.0, 2.0, 0.7), (4.0, 1.0, 0.0), (1.0, 6.0, -1.1)]
            .iter()
            .map(|&(c, w, ph)| op.kernel_bound_ratio(&op.to_state(&gaussian(&op, c, w, ph))))
            .fold(0.0, f64::max)
    };
    let (a, b) = (c(1024), c(2048));
    assert!(a.is_finite() && a > 0.0);
    assert!((a / b - 1.0).abs() < 1e-3, "{a} vs {b}");
}

#[test]
fn kernel_block_singular_values_converge_and_decay() {
    let sv = |n: usize| assemble(reference(), 2.0, &GridConfig::with_n(n)).unwrap().kernel_dense().singular_values().unwrap();
    let (a, b) = (sv(1024), sv(2048));
    for k in [0, 10, 100, 200] {
        assert!((a[k] / b[k] - 1.0).abs() < 0.05, "k = {k}: {} vs {}", a[k], b[k]);
    }
    // ‖𝒦 - 𝒦_k‖ = σ_k falls at the k⁻² rate of the exponential kernel.
    assert!(b[200] / b[100] < 0.35 && b[400] / b[200] < 0.35);
    assert!(b[400] < 2e-5 * b[0]);
}

#[test]
fn shear_is_bounded_by_the_axis_value() {
    let p = reference();
    let m = 4.0;
    let op = assemble(p, m, &GridConfig::with_n(512)).unwrap();
    let top = op.shear.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    assert!(top <= m * p.xi_minus_inf() * 1.01);
}

#[test]
fn transport_term_vanishes_like_one_over_beta() {
    let base = assemble(reference(), 2.0, &GridConfig::with_n(200)).unwrap();
    let d0 = base.dense();
    let diff = |beta: f64| {
        let d = base.with_transport(0.5, beta).unwrap().dense();
        Mat::from_fn(200, 200, |i, j| (d[(i, j)] - d0[(i, j)]) * beta)
    };
    let (a, b) = (diff(10.0), diff(1e6));
    let mut worst = 0.0f64;
    for i in 0..200 {
        for j in 0..200 {
            worst = worst.max((a[(i, j)] - b[(i, j)]).norm());
            // Hermitian perturbation: i times a real skew stencil.
            assert!((a[(i, j)] - a[(j, i)].conj()).norm() < 1e-9 * a[(i, j)].norm().max(1.0));
        }
    }
    assert!(worst < 1e-6);
    let dropped = base.with_transport(0.5, 3.0).unwrap();
    let plain = OperatorMatrix { transport: None, ..dropped }.dense();
    for i in 0..200 {
        for j in 0..200 {
            assert_eq!(plain[(i, j)], d0[(i, j)]);
        }
    }
}

#[test]
fn beta_branch_approaches_the_unperturbed_eigenvalue() {
    let p = Profile::build(&ProfileParams::new(0.9, 1000.0)).unwrap();
    let op = assemble(&p, 2.0, &GridConfig::with_n(1024)).unwrap();
    let z = Complex64::new(0.5471138748216884, 0.0225077219786978);
    let scan = beta_spectrum(&op, z * 2.0, 0.9, &[50.0, 100.0, 200.0, 400.0]).unwrap();
    assert!(scan.decreasing(), "{:?}", scan.rows.iter().map(|r| r.distance).collect::<Vec<_>>());
    assert!(scan.rows[3].distance <= scan.rows[0].distance / 4.0);
    for r in &scan.rows {
        let growth = r.lambda * Complex64::new(0.0, -1.0);
        let ss = growth * r.beta + 1.0 - 1.0 / scan.alpha;
        assert!((r.self_similar - ss).norm() < 1e-12 * ss.norm());
        assert!(r.growth.re > 0.0);
    }
    assert!(scan.csv().starts_with("beta,re_lambda,im_lambda,re_ss,im_ss,distance\n"));
}

#[test]
fn invalid_inputs_are_rejected() {
    let p = reference();
    assert!(matches!(assemble(p, 1.0, &GridConfig::with_n(64)), Err(SpecmatError::Wavenumber(_))));
    assert!(matches!(assemble(p, 2.0, &GridConfig::with_n(8)), Err(SpecmatError::Grid)));
    let op = assemble(p, 2.0, &GridConfig::with_n(64)).unwrap();
    assert!(matches!(op.with_transport(0.7, 10.0), Err(SpecmatError::Alpha { .. })));
    assert!(matches!(beta_spectrum(&op, REFERENCE_Z * 2.0, 0.5, &[100.0, 50.0]), Err(SpecmatError::BetaList)));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn shear_only_block_is_real_diagonal(m in 1.1f64..12.0) {
        let op = assemble(reference(), m, &GridConfig::with_n(128)).unwrap().shear_only();
        let a = op.dense();
        for i in 0..128 {
            for j in 0..128 {
                let v = a[(i, j)];
                prop_assert_eq!(v.im, 0.0);
                if i != j {
                    prop_assert_eq!(v.re, 0.0);
                }
            }
        }
    }

    #[test]
    fn transport_is_hermitian_in_state_coordinates(seed in 0u64..1000, beta in 1.0f64..1e4) {
        let op = assemble(reference(), 2.0, &GridConfig::with_n(96)).unwrap();
        let pert = op.with_transport(0.5, beta).unwrap();
        let u = seeded_state(96, seed);
        let w = seeded_state(96, seed + 1);
        let du: Vec<Complex64> = pert.apply(&u).iter().zip(op.apply(&u)).map(|(a, b)| a - b).collect();
        let dw: Vec<Complex64> = pert.apply(&w).iter().zip(op.apply(&w)).map(|(a, b)| a - b).collect();
        let lhs = dot(&w, &du);
        let rhs = dot(&dw, &u);
        prop_assert!((lhs - rhs).norm() <= 1e-10 * lhs.norm().max(1e-12));
    }
}
