//! `reproduce` recipes: one bundle of checks per proposition, each with its
//! measured value and the bound it was held to.

use std::f64::consts::PI;
use std::fmt::Write as _;

use clap::ValueEnum;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::CliError;
use crate::bifurcation::{self, NeutralDensity, PlemeljConfig};
use crate::fields::{self, BackgroundConfig, Cutoff};
use crate::profile::{CriticalPoint, Profile, ProfileParams, INNER_ZERO};
use crate::rayleigh::{self, EigenMode, RayleighConfig, Rectangle};
use crate::specmat::{self, GridConfig};
use crate::sturm::{self, SturmConfig, TrialFunction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
pub enum Recipe {
    #[value(name = "class-C")]
    #[serde(rename = "class-C")]
    ClassC,
    #[value(name = "l-bottom")]
    #[serde(rename = "l-bottom")]
    LBottom,
    #[value(name = "p3+4")]
    #[serde(rename = "p3+4")]
    P3And4,
    #[value(name = "p5-7")]
    #[serde(rename = "p5-7")]
    P5To7,
    #[value(name = "p-almost-final")]
    #[serde(rename = "p-almost-final")]
    PAlmostFinal,
    #[value(name = "p-final")]
    #[serde(rename = "p-final")]
    PFinal,
    #[value(name = "l-two")]
    #[serde(rename = "l-two")]
    LTwo,
    #[value(name = "lem-curl")]
    #[serde(rename = "lem-curl")]
    LemCurl,
    #[value(name = "decay")]
    #[serde(rename = "decay")]
    Decay,
}

impl Recipe {
    pub fn id(self) -> &'static str {
        match self {
            Recipe::ClassC => "class-C",
            Recipe::LBottom => "l-bottom",
            Recipe::P3And4 => "p3+4",
            Recipe::P5To7 => "p5-7",
            Recipe::PAlmostFinal => "p-almost-final",
            Recipe::PFinal => "p-final",
            Recipe::LTwo => "l-two",
            Recipe::LemCurl => "lem-curl",
            Recipe::Decay => "decay",
        }
    }

    pub fn all() -> [Recipe; 9] {
        [
            Recipe::ClassC,
            Recipe::LBottom,
            Recipe::P3And4,
            Recipe::P5To7,
            Recipe::PAlmostFinal,
            Recipe::PFinal,
            Recipe::LTwo,
            Recipe::LemCurl,
            Recipe::Decay,
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecipeCheck {
    pub name: String,
    pub measured: f64,
    /// "<=", ">=", "<", ">" or "==".
    pub relation: String,
    pub bound: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecipeReport {
    pub recipe: Recipe,
    pub checks: Vec<RecipeCheck>,
    /// CSV table backing the checks, when there is one.
    pub table: Option<String>,
}

impl RecipeReport {
    fn new(recipe: Recipe) -> Self {
        RecipeReport { recipe, checks: Vec::new(), table: None }
    }

    fn push(&mut self, name: impl Into<String>, measured: f64, relation: &str, bound: f64) {
        let passed = match relation {
            "<=" => measured <= bound,
            ">=" => measured >= bound,
            "<" => measured < bound,
            ">" => measured > bound,
            _ => measured == bound,
        };
        self.checks.push(RecipeCheck { name: name.into(), measured, relation: relation.into(), bound, passed });
    }

    fn at_most(&mut self, name: impl Into<String>, measured: f64, bound: f64) {
        self.push(name, measured, "<=", bound);
    }

    fn at_least(&mut self, name: impl Into<String>, measured: f64, bound: f64) {
        self.push(name, measured, ">=", bound);
    }

    fn holds(&mut self, name: impl Into<String>, ok: bool) {
        self.push(name, if ok { 1.0 } else { 0.0 }, "==", 1.0);
    }

    pub fn failures(&self) -> usize {
        self.checks.iter().filter(|c| !c.passed).count()
    }

    pub fn passed(&self) -> bool {
        self.failures() == 0
    }

    /// One line per check, then the table, then the verdict.
    pub fn render(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            let tag = if c.passed { "PASS" } else { "FAIL" };
            let _ = writeln!(s, "{tag} {}: {:.6e} {} {:.6e}", c.name, c.measured, c.relation, c.bound);
        }
        if let Some(t) = &self.table {
            s.push_str(t);
        }
        let verdict = if self.passed() { "PASS" } else { "FAIL" };
        let _ = writeln!(s, "{verdict} {} ({} checks, {} failed)", self.recipe.id(), self.checks.len(), self.failures());
        s
    }
}

/// Run `recipe` on `profile`, or on the recipe's own default profile.
pub fn run(recipe: Recipe, profile: Option<&Profile>) -> Result<RecipeReport, CliError> {
    log::info!("reproduce {}", recipe.id());
    match recipe {
        Recipe::ClassC => class_c(&or_build(profile, ProfileParams::reference())?),
        Recipe::LBottom => l_bottom(profile),
        Recipe::P3And4 => p3_and_4(&or_build(profile, ProfileParams::reference())?),
        Recipe::P5To7 => p5_to_7(profile),
        Recipe::PAlmostFinal => p_almost_final(&or_build(profile, ProfileParams::reference())?),
        Recipe::PFinal => p_final(profile),
        Recipe::LTwo => l_two(&or_build(profile, ProfileParams::new(0.9, 1000.0))?),
        Recipe::LemCurl => lem_curl(&or_build(profile, ProfileParams::reference())?),
        Recipe::Decay => decay(&or_build(profile, ProfileParams::reference())?),
    }
}

fn or_build(profile: Option<&Profile>, params: ProfileParams) -> Result<Profile, CliError> {
    match profile {
        Some(p) => Ok(p.clone()),
        None => Ok(Profile::build(&params)?),
    }
}

/// Default search rectangle with its floor lowered to reach the slow modes
/// next to m_a.
fn low_floor_region(p: &Profile) -> Rectangle {
    Rectangle { im_min: 1e-6, ..Rectangle::default_for(p) }
}

fn leading_mode(p: &Profile, m: f64, cfg: &RayleighConfig) -> Result<Option<EigenMode>, CliError> {
    let modes = rayleigh::find_eigenvalues(p, m, &Rectangle::default_for(p), cfg)?;
    Ok(modes.into_iter().max_by(|a, b| a.z.im.total_cmp(&b.z.im)))
}

fn tuned_profile() -> Result<Profile, CliError> {
    let p0 = Profile::build(&ProfileParams::new(0.5, 4.0))?;
    let p1 = Profile::build(&ProfileParams::new(0.5, 36.0))?;
    let report = sturm::tune_for_integer_mode(&p0, &p1, 2, 0.02, &SturmConfig::default())?;
    Ok(report.profile.expect("tuning returns its blend"))
}

fn class_c(p: &Profile) -> Result<RecipeReport, CliError> {
    let mut r = RecipeReport::new(Recipe::ClassC);
    let v = p.validate();
    for c in &v.checks {
        r.checks.push(RecipeCheck {
            name: c.name.clone(),
            measured: c.value,
            relation: "check".into(),
            bound: c.bound,
            passed: c.passed,
        });
    }
    r.at_most("moment_residual", v.moment_residual.abs(), 1e-8);
    r.push("min_neg_xi_prime", v.min_neg_xi_prime, ">", 0.0);
    Ok(r)
}

fn l_bottom(profile: Option<&Profile>) -> Result<RecipeReport, CliError> {
    let mut r = RecipeReport::new(Recipe::LBottom);
    let members: Vec<(String, Profile)> = match profile {
        Some(p) => vec![("given".into(), p.clone())],
        None => [400.0, 1000.0, 2500.0]
            .into_iter()
            .map(|b| Ok((format!("B={b}"), Profile::build(&ProfileParams::new(0.5, b))?)))
            .collect::<Result<_, CliError>>()?,
    };
    let cfg = SturmConfig::default();
    let mut table = crate::io::Csv::new(&["B", "lambda_a", "bound", "quotient", "method_gap"]);
    for (label, p) in &members {
        let mode = sturm::smallest_eigenvalue(p, CriticalPoint::Inner, &cfg)?;
        let q = sturm::rayleigh_quotient(p, CriticalPoint::Inner, &TrialFunction::cosine_bump())?;
        let slope = p.params().map(|c| c.slope).unwrap_or(f64::NAN);
        let bound = slope.sqrt() - 2.0 * PI * PI;
        if p.params().is_some_and(|c| c.bound_applies()) {
            r.at_least(format!("lambda_a {label}"), mode.lambda, bound);
            r.at_least(format!("-quotient {label}"), -q, bound);
        }
        r.at_least(format!("quotient + lambda_a {label}"), q + mode.lambda, 0.0);
        r.at_most(format!("method_gap {label}"), mode.method_gap, 1e-6);
        table.row(&[slope, mode.lambda, bound, q, mode.method_gap]);
    }
    r.table = Some(table.into_string());
    Ok(r)
}

fn p3_and_4(p: &Profile) -> Result<RecipeReport, CliError> {
    let mut r = RecipeReport::new(Recipe::P3And4);
    let cfg = RayleighConfig::default();
    let nw = sturm::neutral_wavenumbers(p, &SturmConfig::default())?;
    let (ma, mb) = (nw.m_a, nw.m_b);
    let grid = [mb + 0.06, 0.5 * (ma + mb), ma - 0.4, ma - 0.2, ma - 0.1, ma - 0.05];
    let scan = rayleigh::mode_scan_in(p, &grid, &low_floor_region(p), &cfg)?;
    let mut table = crate::io::Csv::new(&["m", "re_z", "im_z", "re_gap"]);
    for row in &scan.rows {
        r.at_least(format!("modes at m={:.4}", row.m), row.count as f64, 1.0);
        for e in &row.modes {
            table.row(&[row.m, e.z.re, e.z.im, (e.z.re - scan.xi_a).abs()]);
        }
    }
    match &scan.inner_trend {
        Some(t) => {
            r.holds("Im z decreasing toward m_a", t.im_decreasing);
            r.holds("|Re z - Xi(a)| decreasing toward m_a", t.gap_decreasing);
            r.push("Im z at m_a - 0.05", *t.im_z.last().unwrap(), "<", 1e-3);
            r.push("|Re z - Xi(a)| at m_a - 0.05", *t.re_gap.last().unwrap(), "<", 1e-2);
        }
        None => r.holds("endpoint branch found", false),
    }
    for m in [ma + 0.1, ma + 0.5, 2.0 * ma] {
        let c = rayleigh::count_zeros(p, m, &Rectangle::default_for(p), &cfg)?;
        r.push(format!("zeros at m={m:.4}"), c.count as f64, "==", 0.0);
    }
    r.table = Some(table.into_string());
    Ok(r)
}

fn p5_to_7(profile: Option<&Profile>) -> Result<RecipeReport, CliError> {
    let mut r = RecipeReport::new(Recipe::P5To7);
    let p = or_build(profile, ProfileParams::reference())?;
    let scfg = SturmConfig::default();
    let rcfg = RayleighConfig::default();
    let nw = sturm::neutral_wavenumbers(&p, &scfg)?;
    let xa = p.xi(INNER_ZERO);
    let w = rayleigh::evans(&p, nw.m_a, Complex64::new(xa, 0.0), &rcfg)?;
    r.at_most("|W(m_a, Xi(a))|/scale", w.relative().norm(), 1e-6);
    let below = rayleigh::count_zeros(&p, nw.m_a - 0.05, &low_floor_region(&p), &rcfg)?;
    r.push("zeros at m_a - 0.05", below.count as f64, "==", 1.0);
    let report = bifurcation::verify_bifurcation(&p, &[0.08, 0.04, 0.02, 0.01], &scfg, &PlemeljConfig::default(), &rcfg)?;
    for row in &report.rows {
        let im = row.z_num.map(|z| z.im).unwrap_or(f64::NAN);
        r.push(format!("Im z_num h={}", row.h), im, ">", 0.0);
        if let Some(ratio) = row.ratio {
            r.at_most(format!("e(h)/e(2h) h={}", row.h), ratio, 0.6);
        }
    }
    // The regularized limit needs a density smoother than y, so the smooth
    // member stands in when no profile is given.
    let smooth = or_build(profile, ProfileParams::new(0.5, 4.0))?;
    let mode = sturm::smallest_eigenvalue(&smooth, CriticalPoint::Inner, &scfg)?;
    let coeff = bifurcation::plemelj_for_mode(&smooth, &mode, &PlemeljConfig::default())?;
    let psi = mode.psi();
    let f = |t: f64| psi.eval(t);
    let density = NeutralDensity::new(&smooth, &f, psi.domain())?;
    let (limit, _) = bifurcation::regularized_limit(&density, 1e-2)?;
    r.at_most("Plemelj Im part vs regularized limit", (limit.im - coeff.g().im).abs() / coeff.g().im.abs(), 1e-4);
    r.table = Some(report.csv());
    Ok(r)
}

fn p_almost_final(p: &Profile) -> Result<RecipeReport, CliError> {
    let mut r = RecipeReport::new(Recipe::PAlmostFinal);
    let cfg = RayleighConfig::default();
    let nw = sturm::neutral_wavenumbers(p, &SturmConfig::default())?;
    let grid: Vec<f64> = [0.2, 0.5, 0.8].iter().map(|s| nw.m_b + s * (nw.m_a - nw.m_b)).collect();
    let scan = rayleigh::mode_scan(p, &grid, &cfg)?;
    for row in &scan.rows {
        r.at_least(format!("modes at m={:.4}", row.m), row.count as f64, 1.0);
        for e in &row.modes {
            r.push(format!("Im z at m={:.4}", row.m), e.z.im, ">", 0.0);
            r.at_most(format!("imaginary identity at m={:.4}", row.m), e.imag_identity_residual, 1e-4);
        }
    }
    Ok(r)
}

fn p_final(profile: Option<&Profile>) -> Result<RecipeReport, CliError> {
    let mut r = RecipeReport::new(Recipe::PFinal);
    let p = match profile {
        Some(p) => p.clone(),
        None => tuned_profile()?,
    };
    let m = 2.0;
    let nw = sturm::neutral_wavenumbers(&p, &SturmConfig::default())?;
    r.push("m_b", nw.m_b, "<", m);
    r.push("m_a", nw.m_a, ">", m);
    let Some(mode) = leading_mode(&p, m, &RayleighConfig::default())? else {
        r.holds("shooting eigenvalue at m=2", false);
        return Ok(r);
    };
    let op = specmat::assemble(&p, m, &GridConfig::with_n(2048))?;
    let spec = specmat::spectrum(&op, 1e-6)?;
    let Some(lead) = spec.leading() else {
        r.holds("matrix eigenvalue at m=2", false);
        return Ok(r);
    };
    r.at_most("|lambda/m - z| n=2048", (lead.lambda / m - mode.z).norm(), 1e-3);
    let probe = specmat::multiplicity_probe(&op, lead.lambda, spec.isolation(lead.lambda) / 4.0, 16)?;
    r.push("algebraic multiplicity", probe.algebraic as f64, "==", 1.0);
    r.push("geometric multiplicity", probe.geometric as f64, "==", 1.0);
    let fine = specmat::assemble(&p, m, &GridConfig::with_n(4096))?;
    let refined = specmat::shift_invert(&fine, lead.lambda, 1e-13)?;
    r.at_most("|lambda/m - z| n=4096", (refined.lambda / m - mode.z).norm(), 1e-4);
    Ok(r)
}

fn l_two(p: &Profile) -> Result<RecipeReport, CliError> {
    let mut r = RecipeReport::new(Recipe::LTwo);
    let m = 2.0;
    let Some(mode) = leading_mode(p, m, &RayleighConfig::default())? else {
        r.holds("shooting eigenvalue at m=2", false);
        return Ok(r);
    };
    let op = specmat::assemble(p, m, &GridConfig::with_n(2048))?;
    let scan = specmat::beta_spectrum(&op, mode.z * m, p.alpha_bar(), &[50.0, 100.0, 200.0, 400.0])?;
    r.holds("d(beta) decreasing", scan.decreasing());
    let d = |k: usize| scan.rows[k].distance;
    r.at_most("d(400)/d(50)", d(3) / d(0), 0.25);
    r.table = Some(scan.csv());
    Ok(r)
}

fn lem_curl(p: &Profile) -> Result<RecipeReport, CliError> {
    let mut r = RecipeReport::new(Recipe::LemCurl);
    let times: Vec<f64> = (0..6).map(|k| 1e-3 * 10f64.powf(k as f64 / 5.0)).collect();
    let ab = p.alpha_bar();
    let mut alphas = vec![ab];
    if ab > 0.3 {
        alphas.push(0.3);
    }
    for alpha in alphas {
        let cfg = BackgroundConfig { beta: 3.0, alpha, chi: Cutoff::default(), p: 3.0 };
        let scan = fields::norm_scan(&cfg, p, &times)?;
        let Some(e) = scan.exponents.as_ref() else {
            r.holds(format!("exponents at alpha={alpha}"), false);
            continue;
        };
        let target = scan.f1_exponent_target();
        r.at_most(format!("f1 exponent rel. error alpha={alpha}"), ((e.lp_f1 - target) / target).abs(), 0.05);
        if alpha == ab {
            r.at_least("dtv exponent alpha=alpha_bar", e.l2_dtv, -0.05);
        }
        r.at_most(format!("Biot-Savart ratio alpha={alpha}"), scan.max_biot_savart_ratio(), 2.0 * scan.biot_savart_constant);
    }
    Ok(r)
}

fn decay(p: &Profile) -> Result<RecipeReport, CliError> {
    let mut r = RecipeReport::new(Recipe::Decay);
    let ab = p.alpha_bar();
    for m in [2.0, 5.0] {
        let Some(e) = leading_mode(p, m, &RayleighConfig::default())? else {
            r.holds(format!("eigenvalue at m={m}"), false);
            continue;
        };
        r.at_most(format!("left decay rel. error m={m}"), (e.decay_minus / m - 1.0).abs(), 0.02);
        r.at_most(format!("right decay rel. error m={m}"), (e.decay_plus / -m - 1.0).abs(), 0.02);
        r.at_most(format!("Gamma rate rel. error m={m}"), (e.gamma_rate_plus / -(m + ab) - 1.0).abs(), 0.05);
    }
    Ok(r)
}
