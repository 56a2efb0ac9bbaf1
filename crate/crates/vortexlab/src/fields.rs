//! Physical-space background: the smoothed vorticity g, the swirl ζ, the
//! truncated self-similar solution (ω̃, ṽ) with its force, and the radial
//! Poisson solve for a single angular mode.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::num::fit;
use crate::num::gauss;
use crate::num::quad::{self, QuadError};
use crate::Profile;

pub mod poisson2d;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldsError {
    #[error("alpha = {alpha} must lie in (0, alpha_bar = {alpha_bar}]")]
    Alpha { alpha: f64, alpha_bar: f64 },
    #[error("alpha_bar * p = {0} must be below 2")]
    Exponent(f64),
    #[error("beta must be finite and non-negative, got {0}")]
    Beta(f64),
    #[error("cutoff needs 0 < inner < outer, got [{inner}, {outer}]")]
    Cutoff { inner: f64, outer: f64 },
    #[error("times must be positive, increasing and at least two, got {0:?}")]
    Times(Vec<f64>),
    #[error("norm quadrature failed at t = {t}: {source}")]
    Quadrature { t: f64, source: QuadError },
    #[error("mode grid needs n >= 8 points and m > 1")]
    ModeGrid,
}

/// (g(r), ζ(r)) with g = Ξ′ + 2Ξ and ζ = Ξ at t = ln r.
pub fn g_and_zeta(p: &Profile, r: f64) -> (f64, f64) {
    if r <= 0.0 {
        let x = p.xi_minus_inf();
        return (2.0 * x, x);
    }
    let t = r.ln();
    let xi = p.xi(t);
    (p.xi_prime(t) + 2.0 * xi, xi)
}

/// r g′(r) = A(ln r).
pub fn r_g_prime(p: &Profile, r: f64) -> f64 {
    if r <= 0.0 {
        0.0
    } else {
        p.a(r.ln())
    }
}

/// r ζ′(r) = Ξ′(ln r).
pub fn r_zeta_prime(p: &Profile, r: f64) -> f64 {
    if r <= 0.0 {
        0.0
    } else {
        p.xi_prime(r.ln())
    }
}

/// Radial cutoff: 1 on [0, inner], quintic smoothstep down to 0 at `outer`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cutoff {
    pub inner: f64,
    pub outer: f64,
}

impl Default for Cutoff {
    fn default() -> Self {
        Cutoff { inner: 1.0, outer: 2.0 }
    }
}

impl Cutoff {
    fn unit(&self, r: f64) -> f64 {
        ((r - self.inner) / (self.outer - self.inner)).clamp(0.0, 1.0)
    }

    pub fn value(&self, r: f64) -> f64 {
        let x = self.unit(r);
        1.0 - x * x * x * (10.0 - 15.0 * x + 6.0 * x * x)
    }

    pub fn derivative(&self, r: f64) -> f64 {
        let x = self.unit(r);
        -30.0 * x * x * (1.0 - x) * (1.0 - x) / (self.outer - self.inner)
    }

    pub fn support(&self) -> f64 {
        self.outer
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BackgroundConfig {
    pub beta: f64,
    pub alpha: f64,
    #[serde(default)]
    pub chi: Cutoff,
    pub p: f64,
}

impl BackgroundConfig {
    pub fn validate(&self, alpha_bar: f64) -> Result<(), FieldsError> {
        if !(self.alpha > 0.0 && self.alpha <= alpha_bar) {
            return Err(FieldsError::Alpha { alpha: self.alpha, alpha_bar });
        }
        if !(alpha_bar * self.p < 2.0) || !(self.p >= 1.0) {
            return Err(FieldsError::Exponent(alpha_bar * self.p));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(FieldsError::Beta(self.beta));
        }
        if !(self.chi.inner > 0.0 && self.chi.outer > self.chi.inner) {
            return Err(FieldsError::Cutoff { inner: self.chi.inner, outer: self.chi.outer });
        }
        Ok(())
    }
}

/// Pointwise values of the background solution at (x, t).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FieldSample {
    pub x: [f64; 2],
    pub t: f64,
    pub omega: f64,
    pub velocity: [f64; 2],
    pub f1: f64,
    pub f2: f64,
    pub f3: f64,
    pub force: f64,
    pub dt_velocity: [f64; 2],
}

/// Radial profiles of the background at a fixed time; every field is
/// radial or radial times x^⊥.
#[derive(Clone, Copy)]
struct Radial<'a> {
    cfg: &'a BackgroundConfig,
    p: &'a Profile,
    t: f64,
    /// t^{1/α}
    scale: f64,
}

impl<'a> Radial<'a> {
    fn new(cfg: &'a BackgroundConfig, p: &'a Profile, t: f64) -> Self {
        Radial { cfg, p, t, scale: t.powf(1.0 / cfg.alpha) }
    }

    fn omega(&self, r: f64) -> f64 {
        let rho = r / self.scale;
        let (g, zeta) = g_and_zeta(self.p, rho);
        let chi = &self.cfg.chi;
        self.cfg.beta / self.t * (g * chi.value(r) + zeta * r * chi.derivative(r))
    }

    /// |ṽ| / r.
    fn swirl(&self, r: f64) -> f64 {
        let (_, zeta) = g_and_zeta(self.p, r / self.scale);
        self.cfg.beta / self.t * zeta * self.cfg.chi.value(r)
    }

    fn f1(&self, r: f64) -> f64 {
        let rho = r / self.scale;
        if rho > 2.0 {
            return 0.0;
        }
        let (g, _) = g_and_zeta(self.p, rho);
        let rgp = r_g_prime(self.p, rho);
        -self.cfg.beta / (self.t * self.t) * (g + rgp / self.cfg.alpha) * self.cfg.chi.value(r)
    }

    fn f2(&self, r: f64) -> f64 {
        let rho = r / self.scale;
        if rho <= 2.0 {
            return 0.0;
        }
        let ab = self.p.alpha_bar();
        let a = self.cfg.alpha;
        if ab == a {
            return 0.0;
        }
        self.cfg.beta * (ab / a - 1.0) * self.t.powf(ab / a - 2.0) * r.powf(-ab) * self.cfg.chi.value(r)
    }

    /// ζ(ρ) + ρζ′(ρ)/α.
    fn zeta_rate(&self, r: f64) -> f64 {
        let rho = r / self.scale;
        let a = self.cfg.alpha;
        if !self.p.is_flat() && rho.ln() >= self.p.right_edge() {
            // Closed tail, so the cancellation at α = ᾱ is exact.
            let ab = self.p.alpha_bar();
            let c1 = self.p.right_tail_coefficient();
            return c1 * (1.0 - 2.0 / a) * rho.powi(-2) + (1.0 - ab / a) * rho.powf(-ab) / (2.0 - ab);
        }
        let (_, zeta) = g_and_zeta(self.p, rho);
        zeta + r_zeta_prime(self.p, rho) / a
    }

    fn f3(&self, r: f64) -> f64 {
        let d = self.cfg.chi.derivative(r);
        if d == 0.0 {
            return 0.0;
        }
        -self.cfg.beta / (self.t * self.t) * self.zeta_rate(r) * r * d
    }

    /// |∂_tṽ| / r with sign.
    fn dt_swirl(&self, r: f64) -> f64 {
        -self.cfg.beta / (self.t * self.t) * self.zeta_rate(r) * self.cfg.chi.value(r)
    }

    /// Break points in u = ln r for radial quadrature.
    fn breaks(&self, u_min: f64) -> Vec<f64> {
        let ls = self.scale.ln();
        let chi = &self.cfg.chi;
        let u_max = chi.outer.ln();
        let mut b: Vec<f64> = self
            .p
            .breaks()
            .into_iter()
            .map(|x| x + ls)
            .chain([ls + std::f64::consts::LN_2, chi.inner.ln(), self.p.left_edge() + ls])
            .filter(|&u| u > u_min && u < u_max)
            .collect();
        b.push(u_min);
        b.push(u_max);
        b.sort_by(f64::total_cmp);
        b.dedup();
        b
    }

    /// ‖h‖_{L^q(R²)} for a radial h, integrated in u = ln r.
    fn norm<F: Fn(f64) -> f64>(&self, h: F, q: f64, weight_power: f64) -> Result<f64, FieldsError> {
        let u_min = self.scale.ln().min(0.0) - 40.0 / q.max(1.0);
        let b = self.breaks(u_min);
        let mut integrand = |u: f64| {
            let r = u.exp();
            (h(r).abs() * r.powf(weight_power)).powf(q) * r * r
        };
        let v = quad::integrate_breaks(&mut integrand, &b, 0.0, 1e-11)
            .map_err(|source| FieldsError::Quadrature { t: self.t, source })?;
        Ok((2.0 * std::f64::consts::PI * v).powf(1.0 / q))
    }
}

/// ω̃, ṽ, f and ∂_tṽ at (x, t).
pub fn background_fields(cfg: &BackgroundConfig, p: &Profile, x: [f64; 2], t: f64) -> FieldSample {
    let rad = Radial::new(cfg, p, t);
    let r = x[0].hypot(x[1]);
    let perp = [-x[1], x[0]];
    let (f1, f2, f3) = (rad.f1(r), rad.f2(r), rad.f3(r));
    let s = rad.swirl(r);
    let ds = rad.dt_swirl(r);
    FieldSample {
        x,
        t,
        omega: rad.omega(r),
        velocity: [s * perp[0], s * perp[1]],
        f1,
        f2,
        f3,
        force: f1 + f2 + f3,
        dt_velocity: [ds * perp[0], ds * perp[1]],
    }
}

/// ∂₁v₂ − ∂₂v₁ of ṽ by fourth-order centered differences with step `h`.
pub fn curl_by_differences(cfg: &BackgroundConfig, p: &Profile, x: [f64; 2], t: f64, h: f64) -> f64 {
    let v = |dx: f64, dy: f64| background_fields(cfg, p, [x[0] + dx, x[1] + dy], t).velocity;
    let d = |e: [f64; 2], comp: usize| {
        let at = |k: f64| v(k * h * e[0], k * h * e[1])[comp];
        (8.0 * (at(1.0) - at(-1.0)) - (at(2.0) - at(-2.0))) / (12.0 * h)
    };
    d([1.0, 0.0], 1) - d([0.0, 1.0], 0)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormRow {
    pub t: f64,
    pub l1_omega: f64,
    pub lp_omega: f64,
    pub lp_f: f64,
    pub lp_f1: f64,
    pub l2_dtv: f64,
    pub sup_velocity: f64,
    /// ‖ṽ‖_∞ / (‖ω̃‖_{L¹} + ‖ω̃‖_{L^p}).
    pub biot_savart_ratio: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormExponents {
    pub l1_omega: f64,
    pub lp_omega: f64,
    pub lp_f: f64,
    pub lp_f1: f64,
    pub l2_dtv: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormScan {
    pub config: BackgroundConfig,
    pub rows: Vec<NormRow>,
    /// Least-squares slopes of log-norm against log t; `None` for identically
    /// zero norms.
    pub exponents: Option<NormExponents>,
    /// Biot-Savart constant fitted at the first time.
    pub biot_savart_constant: f64,
}

impl NormScan {
    /// Expected exponent of ‖f₁(·,t)‖_{L^p}.
    pub fn f1_exponent_target(&self) -> f64 {
        2.0 / (self.config.alpha * self.config.p) - 2.0
    }

    pub fn max_biot_savart_ratio(&self) -> f64 {
        self.rows.iter().map(|r| r.biot_savart_ratio).fold(0.0, f64::max)
    }

    pub fn csv(&self) -> String {
        let mut csv = crate::io::Csv::new(&["t", "L1_omega", "Lp_omega", "Lp_f", "L2_dtv"]);
        for r in &self.rows {
            csv.row(&[r.t, r.l1_omega, r.lp_omega, r.lp_f, r.l2_dtv]);
        }
        csv.into_string()
    }
}

fn sup_velocity(rad: &Radial<'_>) -> f64 {
    let lo = rad.scale.ln() - 12.0;
    let hi = rad.cfg.chi.outer.ln();
    let n = 4000;
    (0..=n)
        .map(|i| {
            let r = (lo + (hi - lo) * i as f64 / n as f64).exp();
            (rad.swirl(r) * r).abs()
        })
        .fold(0.0, f64::max)
}

fn norm_row(cfg: &BackgroundConfig, p: &Profile, t: f64) -> Result<NormRow, FieldsError> {
    let rad = Radial::new(cfg, p, t);
    let q = cfg.p;
    let l1_omega = rad.norm(|r| rad.omega(r), 1.0, 0.0)?;
    let lp_omega = rad.norm(|r| rad.omega(r), q, 0.0)?;
    let lp_f = rad.norm(|r| rad.f1(r) + rad.f2(r) + rad.f3(r), q, 0.0)?;
    let lp_f1 = rad.norm(|r| rad.f1(r), q, 0.0)?;
    let l2_dtv = rad.norm(|r| rad.dt_swirl(r), 2.0, 1.0)?;
    let sup = sup_velocity(&rad);
    let mass = l1_omega + lp_omega;
    Ok(NormRow {
        t,
        l1_omega,
        lp_omega,
        lp_f,
        lp_f1,
        l2_dtv,
        sup_velocity: sup,
        biot_savart_ratio: if mass > 0.0 { sup / mass } else { 0.0 },
    })
}

/// Norms of ω̃, f, f₁ and ∂_tṽ at each time, with power-law exponents.
pub fn norm_scan(cfg: &BackgroundConfig, p: &Profile, times: &[f64]) -> Result<NormScan, FieldsError> {
    cfg.validate(p.alpha_bar())?;
    if times.len() < 2 || times.iter().any(|&t| !(t > 0.0 && t.is_finite())) || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(FieldsError::Times(times.to_vec()));
    }
    let rows = times.par_iter().map(|&t| norm_row(cfg, p, t)).collect::<Result<Vec<_>, _>>()?;
    let exponents = if cfg.beta > 0.0 {
        let slope = |f: fn(&NormRow) -> f64| {
            let y: Vec<f64> = rows.iter().map(f).collect();
            fit::power_law(times, &y)
        };
        Some(NormExponents {
            l1_omega: slope(|r| r.l1_omega),
            lp_omega: slope(|r| r.lp_omega),
            lp_f: slope(|r| r.lp_f),
            lp_f1: slope(|r| r.lp_f1),
            l2_dtv: slope(|r| r.l2_dtv),
        })
    } else {
        None
    };
    let biot_savart_constant = rows[0].biot_savart_ratio;
    Ok(NormScan { config: cfg.clone(), rows, exponents, biot_savart_constant })
}

/// Uniform grid in t = ln r.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogGrid {
    pub t_min: f64,
    pub t_max: f64,
    pub n: usize,
}

impl LogGrid {
    pub fn step(&self) -> f64 {
        (self.t_max - self.t_min) / (self.n - 1) as f64
    }

    pub fn points(&self) -> Vec<f64> {
        let h = self.step();
        (0..self.n).map(|j| self.t_min + h * j as f64).collect()
    }
}

/// ψ solving ψ″ + ψ′/r − m²ψ/r² = γ for one angular mode.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RadialModeFunction {
    pub m: f64,
    pub grid: LogGrid,
    pub gamma: Vec<Complex64>,
    pub psi: Vec<Complex64>,
}

/// Weights of ∫₀^h L_k(x) e^{−m(h−x)} dx for the cubic through the nodes
/// at offsets `stencil` (in units of h) relative to the segment start.
fn segment_weights(m: f64, h: f64, stencil: [f64; 4]) -> [f64; 4] {
    let rule = gauss::gl16();
    let mut w = [0.0; 4];
    for (k, wk) in w.iter_mut().enumerate() {
        *wk = rule.integrate(0.0, 1.0, |x| {
            let mut l = 1.0;
            for (i, &s) in stencil.iter().enumerate() {
                if i != k {
                    l *= (x - s) / (stencil[k] - s);
                }
            }
            l * (-m * h * (1.0 - x)).exp()
        }) * h;
    }
    w
}

/// F_j = ∫_{t_0}^{t_j} q(u) e^{−m(t_j − u)} du, fourth order.
fn damped_cumulative(q: &[Complex64], m: f64, h: f64) -> Vec<Complex64> {
    let n = q.len();
    let decay = (-m * h).exp();
    let first = segment_weights(m, h, [0.0, 1.0, 2.0, 3.0]);
    let inner = segment_weights(m, h, [-1.0, 0.0, 1.0, 2.0]);
    let last = segment_weights(m, h, [-2.0, -1.0, 0.0, 1.0]);
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for j in 1..n {
        let seg = j - 1;
        let (start, w) = if seg == 0 {
            (0, &first)
        } else if seg + 2 >= n {
            (n - 4, &last)
        } else {
            (seg - 1, &inner)
        };
        let local: Complex64 = (0..4).map(|k| q[start + k] * w[k]).sum();
        out[j] = out[j - 1] * decay + local;
    }
    out
}

/// ψ(r) = −(1/2m)[r^m ∫_r^∞ γ s^{1−m} ds + r^{−m} ∫₀^r γ s^{1+m} ds] on a
/// uniform log grid; γ is taken to vanish outside the grid.
pub fn poisson_mode(m: f64, grid: LogGrid, gamma: &[Complex64]) -> Result<RadialModeFunction, FieldsError> {
    if grid.n < 8 || gamma.len() != grid.n || !(m > 1.0) || !(grid.t_max > grid.t_min) {
        return Err(FieldsError::ModeGrid);
    }
    let h = grid.step();
    let t = grid.points();
    let q: Vec<Complex64> = gamma.iter().zip(&t).map(|(g, &u)| g * (2.0 * u).exp()).collect();
    let inner = damped_cumulative(&q, m, h);
    let mut rev: Vec<Complex64> = q.iter().rev().copied().collect();
    rev = damped_cumulative(&rev, m, h);
    rev.reverse();
    let psi = inner.iter().zip(&rev).map(|(a, b)| -(a + b) / (2.0 * m)).collect();
    Ok(RadialModeFunction { m, grid, gamma: gamma.to_vec(), psi })
}

/// ∫|γ|² r dr on a uniform log grid (composite Simpson where possible).
fn weighted_norm(grid: &LogGrid, values: &[Complex64]) -> f64 {
    let h = grid.step();
    let f: Vec<f64> = grid.points().iter().zip(values).map(|(u, v)| v.norm_sqr() * (2.0 * u).exp()).collect();
    let n = f.len();
    let mut s = 0.0;
    let even = if n % 2 == 1 { n } else { n - 1 };
    for i in (0..even - 1).step_by(2) {
        s += h / 3.0 * (f[i] + 4.0 * f[i + 1] + f[i + 2]);
    }
    if even < n {
        s += 0.5 * h * (f[n - 2] + f[n - 1]);
    }
    s.sqrt()
}

impl RadialModeFunction {
    pub fn radii(&self) -> Vec<f64> {
        self.grid.points().iter().map(|t| t.exp()).collect()
    }

    pub fn gamma_norm(&self) -> f64 {
        weighted_norm(&self.grid, &self.gamma)
    }

    /// max |ψ/r| on the grid.
    pub fn sup_psi_over_r(&self) -> f64 {
        self.psi.iter().zip(self.grid.points()).map(|(p, t)| p.norm() * (-t).exp()).fold(0.0, f64::max)
    }

    /// ‖γ‖/√(2m−2) + ‖γ‖/√(2m+2).
    pub fn sup_bound(&self) -> f64 {
        let g = self.gamma_norm();
        g / (2.0 * self.m - 2.0).sqrt() + g / (2.0 * self.m + 2.0).sqrt()
    }

    /// ψ at radius r by cubic Lagrange interpolation in ln r.
    pub fn eval(&self, r: f64) -> Option<Complex64> {
        let t = r.ln();
        let h = self.grid.step();
        let x = (t - self.grid.t_min) / h;
        if !(x >= 0.0 && x <= (self.grid.n - 1) as f64) {
            return None;
        }
        let start = (x.floor() as isize - 1).clamp(0, self.grid.n as isize - 4) as usize;
        let mut v = Complex64::new(0.0, 0.0);
        for k in 0..4 {
            let mut l = 1.0;
            for i in 0..4 {
                if i != k {
                    l *= (x - (start + i) as f64) / (k as f64 - i as f64);
                }
            }
            v += self.psi[start + k] * l;
        }
        Some(v)
    }

    /// Slope of ln|ψ| against ln r over the grid points with t in [lo, hi].
    pub fn tail_exponent(&self, lo: f64, hi: f64) -> f64 {
        let (x, y): (Vec<f64>, Vec<f64>) = self
            .grid
            .points()
            .into_iter()
            .zip(&self.psi)
            .filter(|(t, _)| *t >= lo && *t <= hi)
            .map(|(t, p)| (t, p.norm().ln()))
            .unzip();
        fit::line(&x, &y).0
    }
}
