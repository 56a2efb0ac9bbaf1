//! Rayleigh's stability equation -φ″ + m²φ + A/(Ξ - z) φ = 0: decaying
//! shooting, the Wronskian miss W(m, z), zero counting and eigenvalue search.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::num::ode::{self, DenseTrajectory, OdeError, OdeOptions};
use crate::profile::{Profile, ProfileError};
use crate::sampled::ComplexSamples;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RayleighError {
    #[error("wavenumber must exceed 1, got {0}")]
    Wavenumber(f64),
    #[error("spectral parameter {0} is real and not a critical level")]
    SpectralParameter(Complex64),
    #[error("tail mass criterion unreachable: {0}")]
    TailMassUnreachable(String),
    #[error("W nearly vanishes on the contour at z = {z} (|W|/scale = {relative:e})")]
    BoundaryNearZero { z: Complex64, relative: f64 },
    #[error("argument of W not resolved along the contour near z = {0}")]
    ContourUnresolved(Complex64),
    #[error("winding number {0} is not an integer")]
    NonIntegerWinding(f64),
    #[error("subdivision limit reached with {count} zeros in a cell of width {width:e}")]
    MaxSubdivision { count: usize, width: f64 },
    #[error("secant refinement did not converge near z = {0}")]
    NonConvergentRefinement(Complex64),
    #[error("tail window [{lo}, {hi}] not covered by the solution")]
    InsufficientTail { lo: f64, hi: f64 },
    #[error(transparent)]
    Ode(#[from] OdeError),
    #[error(transparent)]
    Profile(#[from] ProfileError),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RayleighConfig {
    pub rtol: f64,
    pub atol: f64,
    pub tail_mass: f64,
    pub matching_point: f64,
    /// |y| above which the amplitude is folded into the log ledger.
    pub renormalize_above: f64,
    /// Fixed truncation (L⁻, L⁺); chosen from the tail mass when absent.
    pub truncation: Option<(f64, f64)>,
    /// Relative |W| below which a contour point counts as hitting a zero.
    pub near_zero: f64,
    pub refine_tol: f64,
    pub max_depth: usize,
}

impl Default for RayleighConfig {
    fn default() -> Self {
        RayleighConfig {
            rtol: 1e-11,
            atol: 1e-14,
            tail_mass: 1e-12,
            matching_point: 0.25,
            renormalize_above: 1e30,
            truncation: None,
            near_zero: 1e-9,
            refine_tol: 1e-10,
            max_depth: 10,
        }
    }
}

impl RayleighConfig {
    fn ode(&self, dense: bool) -> OdeOptions {
        OdeOptions { rtol: self.rtol, atol: self.atol, dense, ..Default::default() }
    }

    fn cutoffs(&self, p: &Profile, z: Complex64) -> Result<(f64, f64), RayleighError> {
        match self.truncation {
            Some(t) => Ok(t),
            None => p.tail_cutoffs(z, self.tail_mass).map_err(|e| match e {
                ProfileError::Infeasible(s) => RayleighError::TailMassUnreachable(s),
                other => other.into(),
            }),
        }
    }
}

/// Complex number stored as mantissa · e^{log}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogScaled {
    pub mantissa: Complex64,
    pub log: f64,
}

impl LogScaled {
    pub fn value(&self) -> Complex64 {
        self.mantissa * self.log.exp()
    }

    pub fn ln_abs(&self) -> f64 {
        self.mantissa.norm().ln() + self.log
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// Decaying as t → -∞, normalized by φ e^{-mt} → 1.
    Minus,
    /// Decaying as t → +∞, normalized by φ e^{mt} → 1.
    Plus,
}

impl Side {
    fn sign(self) -> f64 {
        match self {
            Side::Minus => 1.0,
            Side::Plus => -1.0,
        }
    }
}

fn check_inputs(p: &Profile, m: f64, z: Complex64) -> Result<(), RayleighError> {
    if !(m > 1.0) {
        return Err(RayleighError::Wavenumber(m));
    }
    if z.im == 0.0 && p.potential(z).is_err() {
        return Err(RayleighError::SpectralParameter(z));
    }
    Ok(())
}

/// Stopping points from `from` to `to`: profile breaks (so no step straddles
/// a junction) and chunk boundaries at most `chunk` apart.
fn stops(p: &Profile, from: f64, to: f64, chunk: f64) -> Vec<f64> {
    let (lo, hi) = (from.min(to), from.max(to));
    let mut pts: Vec<f64> = p.breaks().into_iter().filter(|&b| b > lo && b < hi).collect();
    pts.push(to);
    if to < from {
        pts.sort_by(|a, b| b.total_cmp(a));
    } else {
        pts.sort_by(f64::total_cmp);
    }
    let mut out = Vec::new();
    let mut t = from;
    for b in pts {
        let n = ((b - t).abs() / chunk).ceil().max(1.0) as usize;
        for i in 1..n {
            out.push(t + (b - t) * i as f64 / n as f64);
        }
        out.push(b);
        t = b;
    }
    out
}

/// One leg y″ ± 2m y′ = Q y with φ = e^{±mt} y; integrated chunkwise so the
/// amplitude can be renormalized.
struct Leg {
    segments: Vec<(DenseTrajectory<Complex64, 2>, f64)>,
    end: [Complex64; 2],
    log: f64,
}

fn integrate_leg(
    p: &Profile,
    m: f64,
    z: Complex64,
    side: Side,
    from: f64,
    to: f64,
    cfg: &RayleighConfig,
    dense: bool,
) -> Result<Leg, RayleighError> {
    let q = p.potential(z)?;
    let drift = 2.0 * m * side.sign();
    let rhs = |t: f64, y: &[Complex64; 2]| [y[1], q.eval(t) * y[0] - y[1] * drift];
    let chunk = (20.0 / m).max(0.5);
    let opts = cfg.ode(dense);
    let mut state = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
    let mut log = 0.0;
    let mut segments = Vec::new();
    let mut t = from;
    for next in stops(p, from, to, chunk) {
        let mut traj = DenseTrajectory::new();
        let (y, _) = ode::integrate(rhs, t, state, next, &opts, |st| {
            if let Some(d) = st.dense {
                traj.push(d);
            }
        })?;
        if dense {
            segments.push((traj, log));
        }
        state = y;
        t = next;
        let size = state[0].norm().max(state[1].norm() / m);
        if size > cfg.renormalize_above {
            state = [state[0] / size, state[1] / size];
            log += size.ln();
        }
    }
    Ok(Leg { segments, end: state, log })
}

impl Leg {
    fn eval(&self, t: f64) -> Option<([Complex64; 2], f64)> {
        self.segments.iter().find_map(|(tr, log)| tr.eval(t).map(|y| (y, *log)))
    }
}

/// One-sided decaying solution over the whole truncated line.
pub struct ShootingSolution {
    pub side: Side,
    pub m: f64,
    pub z: Complex64,
    pub l_minus: f64,
    pub l_plus: f64,
    leg: Leg,
    profile: Profile,
    /// Coefficient of the growing exponential at the far end (zero for an
    /// eigenfunction).
    pub far_amplitude: LogScaled,
}

impl std::fmt::Debug for ShootingSolution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ShootingSolution")
            .field("side", &self.side)
            .field("m", &self.m)
            .field("z", &self.z)
            .field("l_minus", &self.l_minus)
            .field("l_plus", &self.l_plus)
            .field("far_amplitude", &self.far_amplitude)
            .finish()
    }
}

impl ShootingSolution {
    /// (φ, φ′) as log-scaled values.
    pub fn eval(&self, t: f64) -> Option<(LogScaled, LogScaled)> {
        let (y, log) = self.leg.eval(t)?;
        let s = self.side.sign() * self.m;
        let e = log + s * t;
        Some((
            LogScaled { mantissa: y[0], log: e },
            LogScaled { mantissa: y[1] + y[0] * s, log: e },
        ))
    }

    /// Accumulated renormalization exponents per chunk.
    pub fn ledger(&self) -> Vec<(f64, f64)> {
        self.leg
            .segments
            .iter()
            .filter_map(|(tr, log)| tr.span().map(|(lo, hi)| (if self.side == Side::Minus { lo } else { hi }, *log)))
            .collect()
    }

    /// Integrated residual of the ODE per integrator step, relative to max|φ|.
    pub fn residual(&self) -> f64 {
        let q = self.z;
        let pot = self.profile.potential(q).expect("checked potential");
        let mut knots: Vec<f64> = self.leg.segments.iter().flat_map(|(tr, _)| tr.knots()).collect();
        knots.sort_by(f64::total_cmp);
        knots.dedup();
        let shift = knots
            .iter()
            .filter_map(|&t| self.eval(t).map(|v| v.0.ln_abs()))
            .fold(f64::NEG_INFINITY, f64::max);
        let scaled = |t: f64| {
            let (v, d) = self.eval(t).expect("knot inside the solution");
            let e = (v.log - shift).exp();
            (v.mantissa * e, d.mantissa * e)
        };
        let (worst, size) = integral_residual(&knots, self.m, &pot, scaled);
        worst / size
    }

    /// φ on `grid`, divided by e^{shift} with shift the largest log magnitude.
    pub fn samples(&self, grid: &[f64]) -> (ComplexSamples, f64) {
        let vals: Vec<Option<LogScaled>> = grid.iter().map(|&t| self.eval(t).map(|v| v.0)).collect();
        let shift = vals.iter().flatten().map(|v| v.ln_abs()).fold(f64::NEG_INFINITY, f64::max);
        let values = vals
            .iter()
            .map(|v| v.map(|v| v.mantissa * (v.log - shift).exp()).unwrap_or(Complex64::new(f64::NAN, f64::NAN)))
            .collect();
        (ComplexSamples { t: grid.to_vec(), values, interpolation: Default::default() }, shift)
    }
}

/// Integrate the solution decaying on `side` across [L⁻, L⁺].
pub fn solve_decaying(
    p: &Profile,
    m: f64,
    z: Complex64,
    side: Side,
    cfg: &RayleighConfig,
) -> Result<ShootingSolution, RayleighError> {
    check_inputs(p, m, z)?;
    let (lo, hi) = cfg.cutoffs(p, z)?;
    let (from, to) = match side {
        Side::Minus => (lo, hi),
        Side::Plus => (hi, lo),
    };
    let leg = integrate_leg(p, m, z, side, from, to, cfg, true)?;
    // φ = e^{±mt} y; the growing part at the far end is e^{∓mt}-free:
    // for Side::Minus, φ ≈ C₊ e^{mt} + D e^{-mt} with C₊ = (y′ + 2my)/(2m) e^{...}.
    let y = leg.end;
    let s = side.sign();
    let growing = (y[1] + y[0] * (2.0 * m * s)) / (2.0 * m * s);
    let far_amplitude = LogScaled { mantissa: growing, log: leg.log };
    Ok(ShootingSolution { side, m, z, l_minus: lo, l_plus: hi, leg, profile: p.clone(), far_amplitude })
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EvansEvaluation {
    pub m: f64,
    pub z: Complex64,
    pub t_mid: f64,
    /// W = φ₋φ₊′ - φ₋′φ₊.
    pub miss: LogScaled,
    /// |φ₋φ₊′| + |φ₋′φ₊| on the same log scale as `miss`.
    pub scale: f64,
    pub l_minus: f64,
    pub l_plus: f64,
}

impl EvansEvaluation {
    pub fn value(&self) -> Complex64 {
        self.miss.value()
    }

    /// W divided by the size of its two terms.
    pub fn relative(&self) -> Complex64 {
        self.miss.mantissa / self.scale
    }

    pub fn scale(&self) -> f64 {
        self.scale * self.miss.log.exp()
    }
}

fn evans_at(p: &Profile, m: f64, z: Complex64, t_mid: f64, cfg: &RayleighConfig) -> Result<EvansEvaluation, RayleighError> {
    check_inputs(p, m, z)?;
    let (lo, hi) = cfg.cutoffs(p, z)?;
    let left = integrate_leg(p, m, z, Side::Minus, lo, t_mid, cfg, false)?;
    let right = integrate_leg(p, m, z, Side::Plus, hi, t_mid, cfg, false)?;
    let (a, b) = (left.end, right.end);
    // φ₋ = e^{mt} y₋, φ₊ = e^{-mt} y₊; the exponentials cancel in W.
    let dl = a[1] + a[0] * m;
    let dr = b[1] - b[0] * m;
    let w = a[0] * dr - dl * b[0];
    let scale = (a[0] * dr).norm() + (dl * b[0]).norm();
    Ok(EvansEvaluation {
        m,
        z,
        t_mid,
        miss: LogScaled { mantissa: w, log: left.log + right.log },
        scale,
        l_minus: lo,
        l_plus: hi,
    })
}

/// W(m, z) at the default matching point.
pub fn evans(p: &Profile, m: f64, z: Complex64, cfg: &RayleighConfig) -> Result<EvansEvaluation, RayleighError> {
    evans_at(p, m, z, cfg.matching_point, cfg)
}

/// W(m, z) matched at an arbitrary point (W does not depend on it).
pub fn evans_matched_at(
    p: &Profile,
    m: f64,
    z: Complex64,
    t_mid: f64,
    cfg: &RayleighConfig,
) -> Result<EvansEvaluation, RayleighError> {
    evans_at(p, m, z, t_mid, cfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rectangle {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Rectangle {
    /// [Ξ(b) - 0.1Δ, Ξ(a) + 0.1Δ] × [1e-4, Ξ(-∞)] with Δ = Ξ(a) - Ξ(b).
    pub fn default_for(p: &Profile) -> Rectangle {
        let xa = p.xi(crate::profile::INNER_ZERO);
        let xb = p.xi(crate::profile::OUTER_ZERO);
        let d = xa - xb;
        Rectangle { re_min: xb - 0.1 * d, re_max: xa + 0.1 * d, im_min: 1e-4, im_max: p.xi_minus_inf() }
    }

    pub fn around(z: Complex64, half: f64) -> Rectangle {
        Rectangle { re_min: z.re - half, re_max: z.re + half, im_min: z.im - half, im_max: z.im + half }
    }

    pub fn width(&self) -> f64 {
        self.re_max - self.re_min
    }

    pub fn height(&self) -> f64 {
        self.im_max - self.im_min
    }

    pub fn center(&self) -> Complex64 {
        Complex64::new(0.5 * (self.re_min + self.re_max), 0.5 * (self.im_min + self.im_max))
    }

    pub fn contains(&self, z: Complex64) -> bool {
        z.re >= self.re_min && z.re <= self.re_max && z.im >= self.im_min && z.im <= self.im_max
    }

    fn corners(&self) -> [Complex64; 4] {
        [
            Complex64::new(self.re_min, self.im_min),
            Complex64::new(self.re_max, self.im_min),
            Complex64::new(self.re_max, self.im_max),
            Complex64::new(self.re_min, self.im_max),
        ]
    }

    fn split(&self, fx: f64, fy: f64) -> [Rectangle; 4] {
        let xm = self.re_min + fx * self.width();
        let ym = self.im_min + fy * self.height();
        [
            Rectangle { re_max: xm, im_max: ym, ..*self },
            Rectangle { re_min: xm, im_max: ym, ..*self },
            Rectangle { re_min: xm, im_min: ym, ..*self },
            Rectangle { re_max: xm, im_min: ym, ..*self },
        ]
    }
}

/// Result of the argument principle on one rectangle.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ContourCount {
    pub count: usize,
    /// (1/2πi)∮ z W′/W dz: the sum of the enclosed zeros.
    pub moment: Complex64,
    pub evaluations: usize,
}

/// Truncation shared by every evaluation on a contour, so that W is one
/// holomorphic function along it.
fn contour_truncation(p: &Profile, r: &Rectangle, cfg: &RayleighConfig) -> Result<(f64, f64), RayleighError> {
    if let Some(t) = cfg.truncation {
        return Ok(t);
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut pts = r.corners().to_vec();
    pts.push(r.center());
    for x in [0.25, 0.5, 0.75] {
        pts.push(Complex64::new(r.re_min + x * r.width(), r.im_min));
    }
    for z in pts {
        let (a, b) = cfg.cutoffs(p, z)?;
        lo = lo.min(a);
        hi = hi.max(b);
    }
    Ok((lo, hi))
}

fn wrapped(delta: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    delta - two_pi * (delta / two_pi).round()
}

/// Winding number of W along the boundary of `r`.
pub fn count_zeros(p: &Profile, m: f64, r: &Rectangle, cfg: &RayleighConfig) -> Result<ContourCount, RayleighError> {
    if !(r.im_min > 0.0) {
        return Err(RayleighError::SpectralParameter(Complex64::new(r.re_min, r.im_min)));
    }
    let trunc = contour_truncation(p, r, cfg)?;
    let cfg = RayleighConfig { truncation: Some(trunc), ..cfg.clone() };
    let corners = r.corners();
    const START: usize = 24;
    let eval = |z: Complex64| -> Result<Complex64, RayleighError> {
        let e = evans(p, m, z, &cfg)?;
        let rel = e.relative();
        if rel.norm() < cfg.near_zero {
            return Err(RayleighError::BoundaryNearZero { z, relative: rel.norm() });
        }
        Ok(rel)
    };
    let initial: Vec<Complex64> = (0..4 * START)
        .map(|i| {
            let (k, j) = (i / START, i % START);
            corners[k] + (corners[(k + 1) % 4] - corners[k]) * (j as f64 / START as f64)
        })
        .collect();
    let values: Vec<Result<Complex64, RayleighError>> = initial.par_iter().map(|&z| eval(z)).collect();
    let mut pts: Vec<(Complex64, Complex64)> = Vec::with_capacity(initial.len() + 1);
    for (z, v) in initial.iter().zip(values) {
        pts.push((*z, v?));
    }
    pts.push(pts[0]);
    let mut evaluations = pts.len() - 1;
    let min_len = 1e-9 * (r.width() + r.height());
    let limit = std::f64::consts::PI / 6.0;
    // Refine each edge interval until the argument increment is small.
    let mut total_arg = 0.0;
    let mut moment = Complex64::new(0.0, 0.0);
    for w in pts.windows(2) {
        let mut stack = vec![(w[0], w[1])];
        while let Some(((za, wa), (zb, wb))) = stack.pop() {
            let d = (wb / wa).arg();
            let dm = (wb / wa).norm().ln();
            if d.abs() > limit {
                if (zb - za).norm() < min_len {
                    return Err(RayleighError::ContourUnresolved(za));
                }
                let zm = (za + zb) * 0.5;
                let wm = eval(zm)?;
                evaluations += 1;
                stack.push(((zm, wm), (zb, wb)));
                stack.push(((za, wa), (zm, wm)));
                continue;
            }
            total_arg += wrapped(d);
            // ∮ z d(log W) with the midpoint rule on each accepted piece.
            moment += (za + zb) * 0.5 * Complex64::new(dm, wrapped(d));
        }
    }
    let winding = total_arg / (2.0 * std::f64::consts::PI);
    if (winding - winding.round()).abs() > 0.05 || winding.round() < 0.0 {
        return Err(RayleighError::NonIntegerWinding(winding));
    }
    let count = winding.round() as usize;
    let moment = moment / Complex64::new(0.0, 2.0 * std::f64::consts::PI);
    Ok(ContourCount { count, moment, evaluations })
}

/// Secant iteration on W from two starting points.
fn refine(p: &Profile, m: f64, z0: Complex64, z1: Complex64, cfg: &RayleighConfig) -> Result<Complex64, RayleighError> {
    let w = |z: Complex64| evans(p, m, z, cfg).map(|e| e.miss.value());
    let (mut za, mut zb) = (z0, z1);
    let (mut wa, mut wb) = (w(za)?, w(zb)?);
    for _ in 0..80 {
        if wb == wa {
            break;
        }
        let zc = zb - wb * (zb - za) / (wb - wa);
        if !(zc.re.is_finite() && zc.im.is_finite()) || zc.im <= 0.0 {
            return Err(RayleighError::NonConvergentRefinement(zb));
        }
        let step = (zc - zb).norm();
        za = zb;
        wa = wb;
        zb = zc;
        if step <= cfg.refine_tol {
            return Ok(zb);
        }
        wb = w(zb)?;
    }
    Err(RayleighError::NonConvergentRefinement(zb))
}

/// Rayleigh eigenvalue with its matched eigenfunction and diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EigenMode {
    pub m: f64,
    pub z: Complex64,
    /// |W|/scale at z.
    pub miss: f64,
    /// max|-φ″ + m²φ + Qφ| / max|φ| on the sample grid.
    pub residual: f64,
    /// Fitted d log|φ|/dt on the left and right tails (targets m and -m).
    pub decay_minus: f64,
    pub decay_plus: f64,
    /// Fitted rates of Γ = φ″ - m²φ on the two tails.
    pub gamma_rate_minus: f64,
    pub gamma_rate_plus: f64,
    /// |∫A|φ|²/|Ξ-z|²| / ∫|A||φ|²/|Ξ-z|².
    pub imag_identity_residual: f64,
    pub multiplicity: usize,
    #[serde(skip)]
    pub eigenfunction: Option<ModeFunction>,
}

/// Unit-norm eigenfunction φ glued from the two decaying legs.
#[derive(Debug, Clone)]
pub struct ModeFunction {
    m: f64,
    z: Complex64,
    matching_point: f64,
    left: DenseTrajectory<Complex64, 5>,
    right: DenseTrajectory<Complex64, 5>,
    right_factor: Complex64,
    norm: f64,
    profile: Profile,
}

impl ModeFunction {
    fn leg(&self, t: f64) -> (Complex64, Complex64) {
        self.branch(t, t <= self.matching_point)
    }

    fn branch(&self, t: f64, on_left: bool) -> (Complex64, Complex64) {
        let tm = self.matching_point;
        let (y, s, f) = if on_left {
            let (lo, hi) = self.left.span().unwrap();
            let y = self.left.eval(t.clamp(lo, hi)).unwrap();
            (if t < lo { [y[0], Complex64::new(0.0, 0.0)] } else { [y[0], y[1]] }, self.m, Complex64::new(1.0, 0.0))
        } else {
            let (lo, hi) = self.right.span().unwrap();
            let y = self.right.eval(t.clamp(lo, hi)).unwrap();
            (if t > hi { [y[0], Complex64::new(0.0, 0.0)] } else { [y[0], y[1]] }, -self.m, self.right_factor)
        };
        let e = f * ((s * (t - tm)).exp() / self.norm);
        (e * y[0], e * (y[1] + y[0] * s))
    }

    pub fn eval(&self, t: f64) -> Complex64 {
        self.leg(t).0
    }

    pub fn derivative(&self, t: f64) -> Complex64 {
        self.leg(t).1
    }

    /// Γ = φ″ - m²φ = Aφ/(Ξ - z).
    pub fn big_gamma(&self, t: f64) -> Complex64 {
        self.eval(t) * self.profile.a(t) / (self.profile.xi(t) - self.z)
    }

    /// Vorticity γ = e^{-2t} Γ in the radial variable r = e^t.
    pub fn vorticity(&self, t: f64) -> Complex64 {
        self.big_gamma(t) * (-2.0 * t).exp()
    }

    pub fn samples(&self, grid: &[f64]) -> ComplexSamples {
        ComplexSamples::tabulate(grid.to_vec(), |t| self.eval(t))
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.left.span().unwrap().0, self.right.span().unwrap().1)
    }
}

/// Matched eigenfunction at an (approximate) eigenvalue; also returns the
/// two imaginary-identity integrals.
fn mode_function(p: &Profile, m: f64, z: Complex64, cfg: &RayleighConfig) -> Result<(ModeFunction, f64, f64), RayleighError> {
    let (lo, hi) = cfg.cutoffs(p, z)?;
    let tm = cfg.matching_point;
    let q = p.potential(z)?;
    let opts = cfg.ode(true);
    let zero = Complex64::new(0.0, 0.0);
    let leg = |from: f64, s: f64| -> Result<(DenseTrajectory<Complex64, 5>, [Complex64; 5]), RayleighError> {
        let rhs = |t: f64, y: &[Complex64; 5]| {
            let w = (2.0 * s * (t - tm)).exp() * y[0].norm_sqr();
            let a = p.a(t);
            let d = (p.xi(t) - z).norm_sqr();
            [
                y[1],
                q.eval(t) * y[0] - y[1] * (2.0 * s),
                Complex64::new(w * a / d, 0.0),
                Complex64::new(w * a.abs() / d, 0.0),
                Complex64::new(w, 0.0),
            ]
        };
        let mut traj = DenseTrajectory::new();
        let mut y = [Complex64::new(1.0, 0.0), zero, zero, zero, zero];
        let mut t = from;
        for next in stops(p, from, tm, f64::INFINITY) {
            y = ode::integrate(rhs, t, y, next, &opts, |st| {
                if let Some(d) = st.dense {
                    traj.push(d);
                }
            })?
            .0;
            t = next;
        }
        Ok((traj, y))
    };
    let (left, yl) = leg(lo, m)?;
    let (right, yr) = leg(hi, -m)?;
    let factor = yl[0] / yr[0];
    let f2 = factor.norm_sqr();
    // Integrals from the right leg were accumulated from hi down to tm.
    let signed = yl[2].re - f2 * yr[2].re;
    let absolute = yl[3].re - f2 * yr[3].re;
    let tail = (2.0 * m * (lo - tm)).exp() / (2.0 * m) + f2 * (-2.0 * m * (hi - tm)).exp() / (2.0 * m);
    let norm2 = yl[4].re - f2 * yr[4].re + tail;
    let f = ModeFunction {
        m,
        z,
        matching_point: tm,
        left,
        right,
        right_factor: factor,
        norm: norm2.sqrt(),
        profile: p.clone(),
    };
    Ok((f, signed, absolute))
}

fn slope_fit(ts: &[f64], ys: &[f64]) -> f64 {
    let n = ts.len() as f64;
    let mt = ts.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let num: f64 = ts.iter().zip(ys).map(|(t, y)| (t - mt) * (y - my)).sum();
    let den: f64 = ts.iter().map(|t| (t - mt).powi(2)).sum();
    num / den
}

/// Least-squares slopes of log|φ| and log|Γ| on windows of three e-folds.
pub fn decay_fit(mode: &EigenMode) -> Result<(f64, f64, f64, f64), RayleighError> {
    let f = mode.eigenfunction.as_ref().expect("mode carries its eigenfunction");
    tail_rates(f, mode.m)
}

fn tail_rates(f: &ModeFunction, m: f64) -> Result<(f64, f64, f64, f64), RayleighError> {
    let (lo, hi) = f.domain();
    let width = 3.0 / m;
    let left = (-3.0 - width, -3.0);
    let right = (10.0, 10.0 + width);
    if left.0 < lo {
        return Err(RayleighError::InsufficientTail { lo: left.0, hi: left.1 });
    }
    if right.1 > hi {
        return Err(RayleighError::InsufficientTail { lo: right.0, hi: right.1 });
    }
    let fit = |(a, b): (f64, f64), g: &dyn Fn(f64) -> Complex64| {
        let ts = crate::sampled::uniform_grid(a, b, 64);
        let ys: Vec<f64> = ts.iter().map(|&t| g(t).norm().ln()).collect();
        slope_fit(&ts, &ys)
    };
    Ok((
        fit(left, &|t| f.eval(t)),
        fit(right, &|t| f.eval(t)),
        fit(left, &|t| f.big_gamma(t)),
        fit(right, &|t| f.big_gamma(t)),
    ))
}

/// Integrated ODE residual on each cell of `knots`:
/// max |φ′(b) - φ′(a) - ∫_a^b (m² + Q)φ| / (b - a), and max |φ| over the knots.
fn integral_residual<F>(knots: &[f64], m: f64, q: &crate::profile::Potential<'_>, f: F) -> (f64, f64)
where
    F: Fn(f64) -> (Complex64, Complex64),
{
    let rule = crate::num::gauss::gl16();
    let zero = Complex64::new(0.0, 0.0);
    let mut worst: f64 = 0.0;
    let mut size: f64 = 0.0;
    for w in knots.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let (fa, da) = f(a);
        let (_, db) = f(b);
        size = size.max(fa.norm());
        let load = rule.integrate_with(a, b, zero, |t| f(t).0 * (m * m) + q.eval(t) * f(t).0);
        worst = worst.max((db - da - load).norm() / (b - a));
    }
    (worst, size)
}

fn ode_residual(f: &ModeFunction, p: &Profile, m: f64, z: Complex64) -> f64 {
    let q = p.potential(z).expect("checked potential");
    // Each leg on its own knots so the matching point is never straddled.
    let (l, sl) = integral_residual(&f.left.knots(), m, &q, |t| f.branch(t, true));
    let (r, sr) = integral_residual(&f.right.knots(), m, &q, |t| f.branch(t, false));
    l.max(r) / sl.max(sr)
}

/// Package an eigenvalue with eigenfunction and checks.
pub fn eigen_mode(p: &Profile, m: f64, z: Complex64, cfg: &RayleighConfig) -> Result<EigenMode, RayleighError> {
    let e = evans(p, m, z, cfg)?;
    let (f, signed, absolute) = mode_function(p, m, z, cfg)?;
    let (dm, dp, gm, gp) = tail_rates(&f, m)?;
    let residual = ode_residual(&f, p, m, z);
    let half = (0.5 * z.im).min(1e-3);
    let multiplicity = count_zeros(p, m, &Rectangle::around(z, half), cfg).map(|c| c.count).unwrap_or(0);
    Ok(EigenMode {
        m,
        z,
        miss: e.relative().norm(),
        residual,
        decay_minus: dm,
        decay_plus: dp,
        gamma_rate_minus: gm,
        gamma_rate_plus: gp,
        imag_identity_residual: signed.abs() / absolute,
        multiplicity,
        eigenfunction: Some(f),
    })
}

fn isolate(
    p: &Profile,
    m: f64,
    r: Rectangle,
    count: ContourCount,
    depth: usize,
    cfg: &RayleighConfig,
) -> Result<Vec<Complex64>, RayleighError> {
    if count.count == 0 {
        return Ok(Vec::new());
    }
    if count.count == 1 {
        let z0 = count.moment;
        let h = 1e-4 * r.width().min(r.height());
        let start = if r.contains(z0) { z0 } else { r.center() };
        if let Ok(z) = refine(p, m, start, start + Complex64::new(h, 0.5 * h), cfg) {
            let pad = Rectangle {
                re_min: r.re_min - 1e-8,
                re_max: r.re_max + 1e-8,
                im_min: r.im_min - 1e-8,
                im_max: r.im_max + 1e-8,
            };
            if pad.contains(z) {
                return Ok(vec![z]);
            }
        }
    }
    if depth >= cfg.max_depth {
        return Err(RayleighError::MaxSubdivision { count: count.count, width: r.width() });
    }
    // Off-center splits, shifted when a zero sits on an interior edge.
    let mut last_err = None;
    for (fx, fy) in [(0.5037, 0.4913), (0.4419, 0.5581), (0.5623, 0.4307)] {
        let cells = r.split(fx, fy);
        let counts: Vec<Result<ContourCount, RayleighError>> =
            cells.par_iter().map(|c| count_zeros(p, m, c, cfg)).collect();
        if let Some(Err(e)) = counts.iter().find(|c| c.is_err()) {
            last_err = Some(e.clone());
            continue;
        }
        let counts: Vec<ContourCount> = counts.into_iter().map(|c| c.unwrap()).collect();
        let mut found = Vec::new();
        for (c, n) in cells.iter().zip(counts) {
            found.extend(isolate(p, m, *c, n, depth + 1, cfg)?);
        }
        return Ok(found);
    }
    Err(last_err.unwrap())
}

/// All eigenvalues z ∈ 𝒰ₘ inside `region`, sorted by (Re z, Im z).
pub fn find_eigenvalues(
    p: &Profile,
    m: f64,
    region: &Rectangle,
    cfg: &RayleighConfig,
) -> Result<Vec<EigenMode>, RayleighError> {
    let count = count_zeros(p, m, region, cfg)?;
    let mut zs = isolate(p, m, *region, count, 0, cfg)?;
    zs.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    zs.par_iter().map(|&z| eigen_mode(p, m, z, cfg)).collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanRow {
    pub m: f64,
    pub count: usize,
    pub modes: Vec<EigenMode>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EndpointTrend {
    /// Grid values used (the last four with an eigenvalue, ascending in m).
    pub m: Vec<f64>,
    pub im_z: Vec<f64>,
    pub re_gap: Vec<f64>,
    pub im_decreasing: bool,
    pub gap_decreasing: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModeScan {
    pub xi_a: f64,
    pub xi_b: f64,
    pub rows: Vec<ScanRow>,
    /// Behavior of the branch nearest Ξ(a) as m grows.
    pub inner_trend: Option<EndpointTrend>,
}

/// Eigenvalues in the default rectangle for each m; rows sorted by m.
pub fn mode_scan(p: &Profile, m_grid: &[f64], cfg: &RayleighConfig) -> Result<ModeScan, RayleighError> {
    mode_scan_in(p, m_grid, &Rectangle::default_for(p), cfg)
}

/// [`mode_scan`] over a caller-chosen search rectangle.
pub fn mode_scan_in(p: &Profile, m_grid: &[f64], region: &Rectangle, cfg: &RayleighConfig) -> Result<ModeScan, RayleighError> {
    let mut ms = m_grid.to_vec();
    ms.sort_by(f64::total_cmp);
    ms.dedup();
    let rows: Vec<Result<ScanRow, RayleighError>> = ms
        .par_iter()
        .map(|&m| {
            let modes = find_eigenvalues(p, m, region, cfg)?;
            Ok(ScanRow { m, count: modes.len(), modes })
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>, _>>()?;
    let xi_a = p.xi(crate::profile::INNER_ZERO);
    let xi_b = p.xi(crate::profile::OUTER_ZERO);
    let branch: Vec<(f64, Complex64)> = rows
        .iter()
        .filter_map(|r| {
            r.modes
                .iter()
                .min_by(|a, b| (a.z.re - xi_a).abs().total_cmp(&(b.z.re - xi_a).abs()))
                .map(|mode| (r.m, mode.z))
        })
        .collect();
    let inner_trend = (branch.len() >= 4).then(|| {
        let tail = &branch[branch.len() - 4..];
        let im_z: Vec<f64> = tail.iter().map(|(_, z)| z.im).collect();
        let re_gap: Vec<f64> = tail.iter().map(|(_, z)| (z.re - xi_a).abs()).collect();
        EndpointTrend {
            m: tail.iter().map(|(m, _)| *m).collect(),
            im_decreasing: im_z.windows(2).all(|w| w[1] < w[0]),
            gap_decreasing: re_gap.windows(2).all(|w| w[1] < w[0]),
            im_z,
            re_gap,
        }
    });
    Ok(ModeScan { xi_a, xi_b, rows, inner_trend })
}

#[cfg(test)]
mod tests;
