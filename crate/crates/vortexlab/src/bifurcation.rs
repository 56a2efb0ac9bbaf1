//! Plemelj coefficient of the neutral mode at the inner critical level and the
//! first-order unstable branch that leaves Ξ(a) as m decreases below m_a.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::num::quad::{self, QuadError};
use crate::profile::{CriticalPoint, Profile, INNER_ZERO};
use crate::rayleigh::{self, RayleighConfig, RayleighError, Rectangle};
use crate::sturm::{self, NeutralMode, SturmConfig, SturmError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BifurcationError {
    #[error("principal value remainder not resolved with window {window}: {source}")]
    WindowTooSmall { window: f64, source: QuadError },
    #[error("quadrature failed: {0}")]
    Quadrature(#[from] QuadError),
    #[error("h = {h} leaves the band: m_a - h = {m} is not above m_b = {m_b}")]
    OutsideBand { h: f64, m: f64, m_b: f64 },
    #[error("h values must be positive and decreasing")]
    BadSteps,
    #[error(transparent)]
    Sturm(#[from] SturmError),
    #[error(transparent)]
    Rayleigh(#[from] RayleighError),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlemeljConfig {
    /// Half-width of the window around a where the singular part is removed.
    pub window: f64,
    pub abs_tol: f64,
    pub rel_tol: f64,
}

impl Default for PlemeljConfig {
    fn default() -> Self {
        PlemeljConfig { window: 0.05, abs_tol: 1e-12, rel_tol: 1e-12 }
    }
}

/// G = lim_{y↓0} ∫ φ/(Ξ - Ξ(a) - iy) dt = pv∫ φ/(Ξ - Ξ(a)) + iπ φ(a)/|Ξ′(a)|
/// with φ = ψ₀² A/(Ξ - Ξ(a)), and c(a) = -G.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlemeljCoefficient {
    pub c: Complex64,
    pub principal_value: f64,
    /// π φ(a)/|Ξ′(a)|, the imaginary part of -c(a).
    pub imaginary: f64,
    /// φ(a) = ψ₀(a)² A′(a)/Ξ′(a).
    pub density_at_a: f64,
    pub xi_prime_a: f64,
    pub psi_at_a: f64,
    pub m_a: f64,
    pub window: f64,
}

impl PlemeljCoefficient {
    pub fn g(&self) -> Complex64 {
        -self.c
    }
}

/// Unit-normalized trial ψ₀ given by a closure on `support`.
pub struct NeutralDensity<'a> {
    profile: &'a Profile,
    psi: &'a (dyn Fn(f64) -> f64 + Sync),
    support: (f64, f64),
    inv_norm2: f64,
}

impl<'a> NeutralDensity<'a> {
    pub fn new(profile: &'a Profile, psi: &'a (dyn Fn(f64) -> f64 + Sync), support: (f64, f64)) -> Result<Self, BifurcationError> {
        let mut sq = |t: f64| psi(t).powi(2);
        let norm2 = quad::integrate_breaks(&mut sq, &breaks(profile, support, &[]), 1e-14, 1e-13)?;
        Ok(NeutralDensity { profile, psi, support, inv_norm2: 1.0 / norm2 })
    }

    /// φ(t) = ψ₀(t)² Q_a(t) for the normalized ψ₀.
    pub fn density(&self, t: f64) -> f64 {
        (self.psi)(t).powi(2) * self.inv_norm2 * self.profile.critical_quotient(CriticalPoint::Inner, t)
    }

    /// ∫ φ/(Ξ - Ξ(a) - iy) dt for y > 0.
    pub fn regularized(&self, y: f64) -> Result<Complex64, BifurcationError> {
        let p = self.profile;
        let w = 10.0 * y / p.xi_prime(INNER_ZERO).abs();
        let b = breaks(p, self.support, &[-w, -0.1 * w, 0.0, 0.1 * w, w]);
        let mut re = |t: f64| {
            let d = p.xi_difference(INNER_ZERO, t);
            self.density(t) * d / (d * d + y * y)
        };
        let mut im = |t: f64| {
            let d = p.xi_difference(INNER_ZERO, t);
            self.density(t) * y / (d * d + y * y)
        };
        Ok(Complex64::new(
            quad::integrate_breaks(&mut re, &b, 1e-13, 1e-12)?,
            quad::integrate_breaks(&mut im, &b, 1e-13, 1e-12)?,
        ))
    }
}

fn breaks(p: &Profile, (lo, hi): (f64, f64), extra: &[f64]) -> Vec<f64> {
    let mut v: Vec<f64> = p.breaks().into_iter().chain(extra.iter().copied()).filter(|&b| b > lo && b < hi).collect();
    v.push(lo);
    v.push(hi);
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// Principal value by subtracting φ(a)/(Ξ′(a) t) on [-w, w] and the closed
/// form imaginary part.
pub fn plemelj_coefficient(
    p: &Profile,
    density: &NeutralDensity<'_>,
    m_a: f64,
    cfg: &PlemeljConfig,
) -> Result<PlemeljCoefficient, BifurcationError> {
    let w = cfg.window;
    let xp = p.xi_prime(INNER_ZERO);
    let phi_a = density.density(INNER_ZERO);
    let singular = phi_a / xp;
    let mut outer = |t: f64| {
        let d = p.xi_difference(INNER_ZERO, t);
        let mut v = density.density(t) / d;
        if t.abs() < w {
            v -= singular / t;
        }
        v
    };
    let b = breaks(p, density.support, &[-w, 0.0, w]);
    let pv = quad::integrate_breaks(&mut outer, &b, cfg.abs_tol, cfg.rel_tol).map_err(|e| match e {
        QuadError::NotConverged { a, b, .. } if a.abs() <= w && b.abs() <= w => {
            BifurcationError::WindowTooSmall { window: w, source: e }
        }
        other => other.into(),
    })?;
    let imaginary = std::f64::consts::PI * phi_a / xp.abs();
    let psi_a = (density.psi)(INNER_ZERO) * density.inv_norm2.sqrt();
    Ok(PlemeljCoefficient {
        c: -Complex64::new(pv, imaginary),
        principal_value: pv,
        imaginary,
        density_at_a: phi_a,
        xi_prime_a: xp,
        psi_at_a: psi_a,
        m_a,
        window: w,
    })
}

/// c(a) for the computed ground state of L_a.
pub fn plemelj_for_mode(p: &Profile, mode: &NeutralMode, cfg: &PlemeljConfig) -> Result<PlemeljCoefficient, BifurcationError> {
    let psi = mode.psi();
    let f = |t: f64| psi.eval(t);
    let d = NeutralDensity::new(p, &f, psi.domain())?;
    plemelj_coefficient(p, &d, mode.wavenumber(), cfg)
}

/// Richardson limit y → 0 of the regularized integrals at y, y/2, y/4.
pub fn regularized_limit(d: &NeutralDensity<'_>, y: f64) -> Result<(Complex64, [Complex64; 3]), BifurcationError> {
    let g = [d.regularized(y)?, d.regularized(0.5 * y)?, d.regularized(0.25 * y)?];
    let r1 = g[1] * 2.0 - g[0];
    let r2 = g[2] * 2.0 - g[1];
    Ok(((r2 * 4.0 - r1) / 3.0, g))
}

/// First-order unstable eigenvalue at m = m_a - h: the solvability condition
/// -2 m_a h = -(z - Ξ(a)) G gives z = Ξ(a) + 2 m_a h/G = Ξ(a) - 2 m_a h/c(a).
pub fn predict_unstable(p: &Profile, coeff: &PlemeljCoefficient, h: f64) -> Complex64 {
    Complex64::new(p.xi(INNER_ZERO), 0.0) - coeff.c.inv() * (2.0 * coeff.m_a * h)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BifurcationRow {
    pub h: f64,
    pub z_pred: Complex64,
    pub z_num: Option<Complex64>,
    pub err: Option<f64>,
    /// e(h)/e(previous, larger h).
    pub ratio: Option<f64>,
    /// Zeros of W in the search box around the prediction.
    pub count: usize,
    /// Zeros in the same box at m = m_a + h.
    pub count_above: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BifurcationReport {
    pub m_a: f64,
    pub m_b: f64,
    pub xi_a: f64,
    pub coefficient: PlemeljCoefficient,
    pub rows: Vec<BifurcationRow>,
}

impl BifurcationReport {
    pub fn max_ratio(&self) -> Option<f64> {
        self.rows.iter().filter_map(|r| r.ratio).reduce(f64::max)
    }

    pub fn csv(&self) -> String {
        let mut csv = crate::io::Csv::new(&["h", "re_zpred", "im_zpred", "re_znum", "im_znum", "err", "ratio"]);
        for r in &self.rows {
            let z = r.z_num.unwrap_or(Complex64::new(f64::NAN, f64::NAN));
            csv.row(&[
                r.h,
                r.z_pred.re,
                r.z_pred.im,
                z.re,
                z.im,
                r.err.unwrap_or(f64::NAN),
                r.ratio.unwrap_or(f64::NAN),
            ]);
        }
        csv.into_string()
    }
}

/// Box around the prediction used to look for the numerical eigenvalue.
fn search_box(xa: f64, z_pred: Complex64) -> Rectangle {
    let r = 2.0 * (z_pred - xa).norm();
    Rectangle { re_min: xa - r, re_max: xa + r, im_min: 1e-3 * r, im_max: r }
}

/// Compare z_pred(h) with shooting eigenvalues at m = m_a - h.
pub fn verify_bifurcation(
    p: &Profile,
    h_list: &[f64],
    sturm_cfg: &SturmConfig,
    plemelj_cfg: &PlemeljConfig,
    rayleigh_cfg: &RayleighConfig,
) -> Result<BifurcationReport, BifurcationError> {
    if h_list.is_empty() || h_list.iter().any(|&h| !(h > 0.0)) || h_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(BifurcationError::BadSteps);
    }
    let nw = sturm::neutral_wavenumbers(p, sturm_cfg)?;
    for &h in h_list {
        if nw.m_a - h <= nw.m_b {
            return Err(BifurcationError::OutsideBand { h, m: nw.m_a - h, m_b: nw.m_b });
        }
    }
    let coefficient = plemelj_for_mode(p, &nw.mode_a, plemelj_cfg)?;
    let xa = p.xi(INNER_ZERO);
    let rows: Vec<Result<BifurcationRow, BifurcationError>> = h_list
        .par_iter()
        .map(|&h| {
            let z_pred = predict_unstable(p, &coefficient, h);
            let region = search_box(xa, z_pred);
            let m = nw.m_a - h;
            let modes = rayleigh::find_eigenvalues(p, m, &region, rayleigh_cfg)?;
            let z_num = modes.iter().map(|m| m.z).min_by(|a, b| (a - z_pred).norm().total_cmp(&(b - z_pred).norm()));
            let count_above = rayleigh::count_zeros(p, nw.m_a + h, &region, rayleigh_cfg)?.count;
            Ok(BifurcationRow {
                h,
                z_pred,
                z_num,
                err: z_num.map(|z| (z - z_pred).norm()),
                ratio: None,
                count: modes.len(),
                count_above,
            })
        })
        .collect();
    let mut rows = rows.into_iter().collect::<Result<Vec<_>, _>>()?;
    for i in 1..rows.len() {
        if let (Some(a), Some(b)) = (rows[i - 1].err, rows[i].err) {
            rows[i].ratio = Some(b / a);
        }
    }
    Ok(BifurcationReport { m_a: nw.m_a, m_b: nw.m_b, xi_a: xa, coefficient, rows })
}

#[cfg(test)]
mod tests;
