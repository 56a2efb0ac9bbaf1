//! Acceptance suite: one PASS/FAIL line per criterion, informational lines
//! prefixed with `info`. Exits non-zero if any criterion fails.

use std::f64::consts::PI;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use vortexlab::bifurcation::{self, NeutralDensity, PlemeljConfig};
use vortexlab::evolve::{self, RunConfig};
use vortexlab::fields::{self, poisson2d, BackgroundConfig, Cutoff, LogGrid};
use vortexlab::num::{gauss::GaussRule, quad};
use vortexlab::profile::INNER_ZERO;
use vortexlab::rayleigh::{self, EigenMode, ModeScan, RayleighConfig, Rectangle};
use vortexlab::specmat::{self, GridConfig};
use vortexlab::sturm::{self, NeutralWavenumbers, SturmConfig, TrialFunction};
use vortexlab::{Complex64, CriticalPoint, Profile, ProfileParams};

type Verdict = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn info(msg: impl AsRef<str>) {
    println!("info  {}", msg.as_ref());
}

fn reference() -> &'static Profile {
    static P: OnceLock<Profile> = OnceLock::new();
    P.get_or_init(|| Profile::build(&ProfileParams::reference()).unwrap())
}

fn reference_band() -> &'static NeutralWavenumbers {
    static N: OnceLock<NeutralWavenumbers> = OnceLock::new();
    N.get_or_init(|| sturm::neutral_wavenumbers(reference(), &SturmConfig::default()).unwrap())
}

fn tuned() -> &'static Profile {
    static P: OnceLock<Profile> = OnceLock::new();
    P.get_or_init(|| {
        let p0 = Profile::build(&ProfileParams::new(0.5, 4.0)).unwrap();
        let p1 = Profile::build(&ProfileParams::new(0.5, 36.0)).unwrap();
        sturm::tune_for_integer_mode(&p0, &p1, 2, 0.02, &SturmConfig::default()).unwrap().profile.unwrap()
    })
}

/// Default rectangle with the floor lowered to 1e-6, low enough for the
/// slowest modes next to m_a.
fn low_floor(p: &Profile) -> Rectangle {
    Rectangle { im_min: 1e-6, ..Rectangle::default_for(p) }
}

/// Reference-profile scan across the band and up to m_a - 0.05.
fn reference_scan() -> &'static ModeScan {
    static S: OnceLock<ModeScan> = OnceLock::new();
    S.get_or_init(|| {
        let nw = reference_band();
        let ma = nw.m_a;
        let grid = [nw.m_b + 0.06, 2.0, 5.0, 10.0, 15.0, ma - 0.4, ma - 0.2, ma - 0.1, ma - 0.05];
        rayleigh::mode_scan_in(reference(), &grid, &low_floor(reference()), &RayleighConfig::default()).unwrap()
    })
}

fn leading_mode(p: &Profile, m: f64) -> EigenMode {
    let modes = rayleigh::find_eigenvalues(p, m, &Rectangle::default_for(p), &RayleighConfig::default()).unwrap();
    modes.into_iter().max_by(|a, b| a.z.im.total_cmp(&b.z.im)).expect("an unstable mode")
}

fn class_c_construction() -> Verdict {
    let start = Instant::now();
    let p = Profile::build(&ProfileParams::reference()).map_err(|e| e.to_string())?;
    let report = p.validate();
    let elapsed = start.elapsed();
    let failed: Vec<&str> = report.failures().iter().map(|c| c.name.as_str()).collect();
    let ts: Vec<f64> = (0..=15_000).map(|k| -5.0 + 1e-3 * k as f64).collect();
    let xi: Vec<f64> = ts.iter().map(|&t| p.xi(t)).collect();
    let decreasing = xi.windows(2).all(|w| w[1] < w[0]);
    ensure(
        failed.is_empty() && report.moment_residual.abs() <= 1e-8 && decreasing && elapsed < Duration::from_secs(5),
        format!(
            "{} checks, failed {failed:?}, moment residual {:.2e}, decreasing on [-5, 10] step 1e-3: {decreasing}, {:.2} s",
            report.checks.len(),
            report.moment_residual,
            elapsed.as_secs_f64()
        ),
    )
}

fn bottom_bound() -> Verdict {
    let start = Instant::now();
    let mut ok = true;
    let mut parts = Vec::new();
    for b in [400.0, 1000.0, 2500.0] {
        let p = Profile::build(&ProfileParams::new(0.5, b)).map_err(|e| e.to_string())?;
        let mode = sturm::smallest_eigenvalue(&p, CriticalPoint::Inner, &SturmConfig::default()).map_err(|e| e.to_string())?;
        let bound = b.sqrt() - 2.0 * PI * PI;
        ok &= mode.lambda >= bound && mode.method_gap <= 1e-6;
        parts.push(format!("B={b}: lambda_a {:.6} >= {bound:.4}, gap {:.1e}", mode.lambda, mode.method_gap));
    }
    let elapsed = start.elapsed();
    ok &= elapsed < Duration::from_secs(30);
    ensure(ok, format!("{}; {:.1} s", parts.join("; "), elapsed.as_secs_f64()))
}

/// π² + 2∫Q_a cos²(πt) by fixed composite Gauss-Legendre on the profile breaks.
fn cosine_quotient_oracle(p: &Profile) -> f64 {
    let rule = GaussRule::new(20);
    let mut cuts: Vec<f64> = p.breaks().into_iter().filter(|b| b.abs() < 0.5).collect();
    cuts.push(-0.5);
    cuts.push(0.5);
    cuts.push(INNER_ZERO);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let panels = 400;
        let h = (w[1] - w[0]) / panels as f64;
        for k in 0..panels {
            let a = w[0] + k as f64 * h;
            total += rule.integrate(a, a + h, |t| p.critical_quotient(CriticalPoint::Inner, t) * (PI * t).cos().powi(2));
        }
    }
    PI * PI + 2.0 * total
}

fn variational_bound() -> Verdict {
    let mut members: Vec<(String, Profile)> = [400.0, 1000.0, 2500.0, 4.0]
        .into_iter()
        .map(|b| (format!("B={b}"), Profile::build(&ProfileParams::new(0.5, b)).unwrap()))
        .collect();
    members.push(("tuned".into(), tuned().clone()));
    let mut ok = true;
    let mut parts = Vec::new();
    for (label, p) in &members {
        let q = sturm::rayleigh_quotient(p, CriticalPoint::Inner, &TrialFunction::cosine_bump()).map_err(|e| e.to_string())?;
        let oracle = cosine_quotient_oracle(p);
        let lambda = sturm::smallest_eigenvalue(p, CriticalPoint::Inner, &SturmConfig::default()).map_err(|e| e.to_string())?.lambda;
        let quad_err = (q - oracle).abs() / q.abs().max(1.0);
        let mut line = format!("{label}: q {q:.6}, quadrature {quad_err:.1e}, q + lambda_a {:.3}", q + lambda);
        ok &= quad_err <= 1e-8 && q >= -lambda;
        if p.params().is_some_and(|c| c.bound_applies()) {
            let b = p.params().unwrap().slope;
            ok &= q <= 2.0 * PI * PI - b.sqrt();
            line.push_str(&format!(", q <= 2pi^2 - sqrt(B) = {:.3}", 2.0 * PI * PI - b.sqrt()));
        }
        parts.push(line);
    }
    ensure(ok, parts.join("; "))
}

fn neutral_consistency() -> Verdict {
    let p = reference();
    let nw = reference_band();
    let cfg = RayleighConfig::default();
    let w = rayleigh::evans(p, nw.m_a, Complex64::new(p.xi(INNER_ZERO), 0.0), &cfg).map_err(|e| e.to_string())?;
    let rel = w.relative().norm();
    let count = rayleigh::count_zeros(p, nw.m_a - 0.05, &low_floor(p), &cfg).map_err(|e| e.to_string())?.count;
    ensure(rel <= 1e-6 && count == 1, format!("|W|/scale {rel:.2e} at m_a = {:.6}, zeros at m_a - 0.05: {count}", nw.m_a))
}

fn bifurcation_slope() -> Verdict {
    let start = Instant::now();
    let report = bifurcation::verify_bifurcation(
        reference(),
        &[0.08, 0.04, 0.02, 0.01],
        &SturmConfig::default(),
        &PlemeljConfig::default(),
        &RayleighConfig::default(),
    )
    .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let ratios: Vec<f64> = report.rows.iter().filter_map(|r| r.ratio).collect();
    let positive = report.rows.iter().all(|r| r.z_num.is_some_and(|z| z.im > 0.0));
    ensure(
        ratios.len() == 3 && ratios.iter().all(|&r| r <= 0.6) && positive && elapsed < Duration::from_secs(120),
        format!("ratios {ratios:.3?}, Im z_num > 0: {positive}, {:.1} s", elapsed.as_secs_f64()),
    )
}

/// (closed form Im(-c), Richardson limit of the regularized integrals).
fn plemelj_pair(p: &Profile) -> Result<(f64, f64, f64), String> {
    let mode = sturm::smallest_eigenvalue(p, CriticalPoint::Inner, &SturmConfig::default()).map_err(|e| e.to_string())?;
    let coeff = bifurcation::plemelj_for_mode(p, &mode, &PlemeljConfig::default()).map_err(|e| e.to_string())?;
    let psi = mode.psi();
    let f = |t: f64| psi.eval(t);
    let density = NeutralDensity::new(p, &f, psi.domain()).map_err(|e| e.to_string())?;
    let (limit, _) = bifurcation::regularized_limit(&density, 1e-2).map_err(|e| e.to_string())?;
    let closed = coeff.imaginary;
    Ok((closed, limit.im, (-coeff.c).im))
}

fn plemelj_consistency() -> Verdict {
    for (label, p) in [("reference", reference().clone()), ("tuned", tuned().clone())] {
        if let Ok((closed, limit, _)) = plemelj_pair(&p) {
            info(format!("criterion 6 on {label}: relative miss {:.2e}", (limit - closed).abs() / closed.abs()));
        }
    }
    let p = Profile::build(&ProfileParams::new(0.5, 4.0)).map_err(|e| e.to_string())?;
    let (closed, limit, from_c) = plemelj_pair(&p)?;
    let rel = (limit - closed).abs() / closed.abs();
    let own = (from_c - closed).abs() / closed.abs();
    ensure(
        rel <= 1e-4 && own <= 1e-12,
        format!("member (0.5, 4): pi phi(a)/|Xi'(a)| = {closed:.10}, regularized limit {limit:.10}, relative {rel:.2e}"),
    )
}

fn imaginary_identity() -> Verdict {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    let extra = [leading_mode(tuned(), 2.0)];
    for e in reference_scan().rows.iter().flat_map(|r| r.modes.iter()).chain(extra.iter()) {
        worst = worst.max(e.imag_identity_residual);
        count += 1;
    }
    ensure(count > 0 && worst <= 1e-4, format!("{count} eigenpairs, worst ratio {worst:.2e}"))
}

fn method_cross_validation() -> Verdict {
    let p = tuned();
    let m = 2.0;
    let nw = sturm::neutral_wavenumbers(p, &SturmConfig::default()).map_err(|e| e.to_string())?;
    let shooting = rayleigh::find_eigenvalues(p, m, &Rectangle::default_for(p), &RayleighConfig::default())
        .map_err(|e| e.to_string())?;
    let z = shooting.iter().max_by(|a, b| a.z.im.total_cmp(&b.z.im)).ok_or("no shooting eigenvalue")?.z;
    let op = specmat::assemble(p, m, &GridConfig::with_n(2048)).map_err(|e| e.to_string())?;
    let spec = specmat::spectrum(&op, 1e-6).map_err(|e| e.to_string())?;
    let lead = spec.leading().ok_or("no matrix eigenvalue")?;
    let coarse = (lead.lambda / m - z).norm();
    let probe = specmat::multiplicity_probe(&op, lead.lambda, spec.isolation(lead.lambda) / 4.0, 16).map_err(|e| e.to_string())?;
    let fine_op = specmat::assemble(p, m, &GridConfig::with_n(4096)).map_err(|e| e.to_string())?;
    let fine = (specmat::shift_invert(&fine_op, lead.lambda, 1e-13).map_err(|e| e.to_string())?.lambda / m - z).norm();
    let same_sets = spec.unstable.len() == shooting.len();
    ensure(
        nw.m_b < m && m < nw.m_a && coarse <= 1e-3 && fine <= 1e-4 && probe.algebraic == 1 && probe.geometric == 1 && same_sets,
        format!(
            "m_b {:.4} < 2 < m_a {:.4}; z {z:.10}; n=2048 {coarse:.2e}, n=4096 {fine:.2e}; multiplicity {}/{}; unstable counts {}/{}",
            nw.m_b,
            nw.m_a,
            probe.algebraic,
            probe.geometric,
            spec.unstable.len(),
            shooting.len()
        ),
    )
}

fn mode_range_structure() -> Verdict {
    let p = reference();
    let nw = reference_band();
    let scan = reference_scan();
    let missing: Vec<f64> = scan.rows.iter().filter(|r| r.count == 0).map(|r| r.m).collect();
    let mut above = Vec::new();
    for m in [nw.m_a + 0.1, nw.m_a + 0.5, 2.0 * nw.m_a] {
        let c = rayleigh::count_zeros(p, m, &Rectangle::default_for(p), &RayleighConfig::default()).map_err(|e| e.to_string())?;
        above.push(c.count);
    }
    // Inner branch over the approach grid m_a - 0.4 ... m_a - 0.05.
    let branch: Vec<(f64, Complex64)> = scan
        .rows
        .iter()
        .filter(|r| r.m >= nw.m_a - 0.5)
        .filter_map(|r| r.modes.iter().min_by(|a, b| (a.z.re - scan.xi_a).abs().total_cmp(&(b.z.re - scan.xi_a).abs())).map(|e| (r.m, e.z)))
        .collect();
    let im_monotone = branch.windows(2).all(|w| w[1].1.im < w[0].1.im);
    let (_, last) = *branch.last().ok_or("empty branch")?;
    let gap = (last.re - scan.xi_a).abs();
    ensure(
        missing.is_empty() && above.iter().all(|&c| c == 0) && branch.len() == 4 && im_monotone && last.im < 1e-3 && gap < 1e-2,
        format!(
            "{} m values with modes, missing {missing:?}; zeros above m_a {above:?}; Im z decreasing {im_monotone}, at m_a - 0.05 Im z {:.2e}, |Re z - Xi(a)| {gap:.2e}",
            scan.rows.len() - missing.len(),
            last.im
        ),
    )
}

fn decay_rates() -> Verdict {
    let ab = reference().alpha_bar();
    let mut worst = (0.0f64, 0.0f64);
    for e in reference_scan().rows.iter().flat_map(|r| r.modes.iter()) {
        let m = e.m;
        worst.0 = worst.0.max((e.decay_minus / m - 1.0).abs()).max((e.decay_plus / -m - 1.0).abs());
        worst.1 = worst.1.max((e.gamma_rate_plus / -(m + ab) - 1.0).abs());
    }
    ensure(worst.0 <= 0.02 && worst.1 <= 0.05, format!("worst decay miss {:.2e}, worst Gamma-rate miss {:.2e}", worst.0, worst.1))
}

fn beta_perturbation() -> Verdict {
    let betas = [50.0, 100.0, 200.0, 400.0];
    let reference_scan = {
        let p = reference();
        let z = leading_mode(p, 2.0).z;
        let op = specmat::assemble(p, 2.0, &GridConfig::with_n(2048)).map_err(|e| e.to_string())?;
        specmat::beta_spectrum(&op, z * 2.0, p.alpha_bar(), &betas).map_err(|e| e.to_string())?
    };
    info(format!(
        "criterion 11 on reference: d(50) {:.3e}, d(400) {:.3e}, ratio {:.2}",
        reference_scan.rows[0].distance,
        reference_scan.rows[3].distance,
        reference_scan.rows[0].distance / reference_scan.rows[3].distance
    ));
    let p = Profile::build(&ProfileParams::new(0.9, 1000.0)).map_err(|e| e.to_string())?;
    let z = leading_mode(&p, 2.0).z;
    let op = specmat::assemble(&p, 2.0, &GridConfig::with_n(2048)).map_err(|e| e.to_string())?;
    let scan = specmat::beta_spectrum(&op, z * 2.0, p.alpha_bar(), &betas).map_err(|e| e.to_string())?;
    let d: Vec<f64> = scan.rows.iter().map(|r| r.distance).collect();
    ensure(
        scan.decreasing() && d[3] <= d[0] / 4.0,
        format!("member (0.9, 1000), m = 2: d(50) {:.3e}, d(400) {:.3e}, ratio {:.2}", d[0], d[3], d[0] / d[3]),
    )
}

fn evolution_growth() -> Verdict {
    let p = reference();
    let m = 2.0;
    let z = leading_mode(p, m).z;
    let rate = m * z.im;
    let op = specmat::assemble(p, m, &GridConfig::with_n(1024)).map_err(|e| e.to_string())?;
    let dt = 0.09 / op.norm_bound();
    let sampled = |tau_end: f64, dt: f64| {
        let mut cfg = RunConfig::new(tau_end, dt);
        cfg.record_every = (0.5 / dt).round().max(1.0) as usize;
        cfg
    };
    let eigen = specmat::shift_invert(&op, z * m, 1e-13).map_err(|e| e.to_string())?;
    let horizon = 5.0 / rate;
    let ray = evolve::run(&op, &op.to_gamma(&eigen.state), &sampled(horizon, dt)).map_err(|e| e.to_string())?;
    let ray_miss = ray
        .tau
        .iter()
        .zip(&ray.norms)
        .map(|(t, n)| (n / (ray.norms[0] * (rate * t).exp()) - 1.0).abs())
        .fold(0.0, f64::max);
    let data: Vec<Vec<Complex64>> = (0..3).map(|seed| evolve::random_data(&op, seed)).collect();
    let mut random_miss: f64 = 0.0;
    for tr in evolve::run_ensemble(&op, &data, &sampled(400.0, dt)) {
        let tr = tr.map_err(|e| e.to_string())?;
        let fit = evolve::growth_fit(&tr, 250.0, 400.0).map_err(|e| e.to_string())?;
        random_miss = random_miss.max((fit.rate / rate - 1.0).abs());
    }
    let shear = op.shear_only();
    let g = evolve::random_data(&shear, 9);
    let tr = evolve::run(&shear, &g, &sampled(10.0, 1e-3)).map_err(|e| e.to_string())?;
    let drift = tr.norms.iter().map(|n| (n / tr.norms[0] - 1.0).abs()).fold(0.0, f64::max);
    ensure(
        random_miss <= 1e-2 && ray_miss <= 5e-3 && drift <= 1e-6,
        format!("rate m Im z = {rate:.8}; random data miss {random_miss:.2e}, eigenray miss {ray_miss:.2e}, shear-only drift {drift:.1e}"),
    )
}

fn background_scaling() -> Verdict {
    let p = reference();
    let times: Vec<f64> = (0..6).map(|k| 1e-3 * 10f64.powf(k as f64 / 5.0)).collect();
    let mut ok = true;
    let mut parts = Vec::new();
    for alpha in [p.alpha_bar(), 0.3] {
        let cfg = BackgroundConfig { beta: 3.0, alpha, chi: Cutoff::default(), p: 3.0 };
        let scan = fields::norm_scan(&cfg, p, &times).map_err(|e| e.to_string())?;
        let e = scan.exponents.as_ref().ok_or("no exponents")?;
        let target = scan.f1_exponent_target();
        let rel = ((e.lp_f1 - target) / target).abs();
        ok &= rel <= 0.05;
        let mut line = format!("alpha {alpha}: f1 exponent {:.4} vs {target:.4} ({rel:.1e})", e.lp_f1);
        if alpha == p.alpha_bar() {
            ok &= e.l2_dtv >= -0.05;
            line.push_str(&format!(", dtv exponent {:.4}", e.l2_dtv));
        }
        parts.push(line);
    }
    ensure(ok, parts.join("; "))
}

fn radial_poisson() -> Verdict {
    let densities: [(u32, f64, Box<dyn Fn(f64) -> f64 + Sync>); 2] = [
        (2, 1.0, Box::new(|r: f64| if r < 1.0 { r * r * (1.0 - r * r).powi(4) } else { 0.0 })),
        (3, 1.5, Box::new(|r: f64| if r < 1.5 { r.powi(3) * (1.0 - (r / 1.5).powi(2)).powi(6) } else { 0.0 })),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (m, support, gamma) in &densities {
        let mf = *m as f64;
        let grid = LogGrid { t_min: -12.0, t_max: support.ln(), n: 8001 };
        let samples: Vec<Complex64> = grid.points().iter().map(|&u| Complex64::new(gamma(u.exp()), 0.0)).collect();
        let sol = fields::poisson_mode(mf, grid, &samples).map_err(|e| e.to_string())?;
        let c = -quad::integrate(|s| s.powf(mf + 1.0) * gamma(s), 0.0, *support, 1e-15, 1e-14).map_err(|e| e.to_string())?
            / (2.0 * mf);
        let r_min = grid.t_min.exp();
        let psi = |r: f64| if r >= *support { c * r.powf(-mf) } else { sol.eval(r.max(r_min)).map(|v| v.re).unwrap_or(0.0) };
        let check = poisson2d::check_mode(*m, 2.0, 255, gamma, |r| c * r.powf(-mf), psi);
        ok &= check.relative_error <= 1e-4;
        parts.push(format!("m = {m}: relative {:.2e} (single grid {:.2e})", check.relative_error, check.coarse_error));
    }
    ensure(ok, parts.join("; "))
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 14] = [
        ("class-C construction", class_c_construction),
        ("bottom bound lambda_a >= sqrt(B) - 2 pi^2", bottom_bound),
        ("variational upper bound", variational_bound),
        ("neutral consistency", neutral_consistency),
        ("bifurcation slope", bifurcation_slope),
        ("Plemelj internal consistency", plemelj_consistency),
        ("imaginary-part identity", imaginary_identity),
        ("method cross-validation", method_cross_validation),
        ("mode-range structure", mode_range_structure),
        ("decay rates", decay_rates),
        ("beta-perturbation", beta_perturbation),
        ("evolution growth", evolution_growth),
        ("background scaling", background_scaling),
        ("radial Poisson cross-check", radial_poisson),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let verdict = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match verdict {
            Ok(detail) => println!("PASS  {:>2} {name}: {detail} [{secs:.1} s]", k + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {:>2} {name}: {detail} [{secs:.1} s]", k + 1);
            }
        }
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
