//! Neutral-mode problems L_c ψ = -ψ″ + A/(Ξ - Ξ(c)) ψ at the two critical
//! levels, their ground states, neutral wavenumbers and σ-interpolation tuning.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::num::mesh::{Mesh, MeshMap};
use crate::num::ode::{self, DenseTrajectory, OdeError, OdeOptions};
use crate::num::roots::{self, RootError};
use crate::num::{gauss, quad};
use crate::profile::{CriticalPoint, Profile, ProfileError};
use crate::sampled::RealSamples;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SturmError {
    #[error("no bound state: L_{which} has no negative eigenvalue")]
    NoBoundState { which: &'static str },
    #[error("eigenvalue methods disagree: shooting {shooting}, finite differences {fd} (relative gap {gap:e})")]
    MethodDisagreement { shooting: f64, fd: f64, gap: f64 },
    #[error("unstable band is empty: lambda_a = {0} <= 1")]
    BandEmpty(f64),
    #[error("wavenumber {m0} is not bracketed: lambda_a = {lambda0} at sigma = 0 and {lambda1} at sigma = 1")]
    NotBracketed { m0: u32, lambda0: f64, lambda1: f64 },
    #[error("tuned blend at sigma = {sigma} does not satisfy {reason}")]
    TuneFailed { sigma: f64, reason: String },
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Ode(#[from] OdeError),
    #[error(transparent)]
    Root(#[from] RootError),
    #[error("quadrature failed: {0}")]
    Quadrature(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SturmConfig {
    pub rtol: f64,
    pub atol: f64,
    /// Neglected ∫|Q| beyond each truncation point.
    pub tail_mass: f64,
    /// Finite-difference points on the coarser of the two Richardson grids.
    pub fd_points: usize,
    /// Relative agreement demanded between the two methods.
    pub agreement: f64,
    pub matching_point: f64,
}

impl Default for SturmConfig {
    fn default() -> Self {
        SturmConfig {
            rtol: 1e-12,
            atol: 1e-14,
            tail_mass: 1e-12,
            fd_points: 8192,
            agreement: 1e-6,
            matching_point: 0.25,
        }
    }
}

/// Ground state of L_c.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NeutralMode {
    pub which: CriticalPoint,
    /// λ_c > 0 with -λ_c the smallest eigenvalue of L_c (shooting).
    pub lambda: f64,
    /// Same eigenvalue from the Richardson-extrapolated finite-difference solve.
    pub lambda_fd: f64,
    pub method_gap: f64,
    /// Second eigenvalue of the discretized operator (> -λ_c).
    pub excited_eigenvalue: f64,
    pub nodes: usize,
    /// ψ_c(c) for the unit-norm, positive-at-c ground state.
    pub psi_at_c: f64,
    #[serde(skip)]
    pub eigenfunction: Option<NeutralEigenfunction>,
}

impl NeutralMode {
    pub fn wavenumber(&self) -> f64 {
        self.lambda.sqrt()
    }

    pub fn psi(&self) -> &NeutralEigenfunction {
        self.eigenfunction.as_ref().expect("mode carries its eigenfunction")
    }
}

/// Unit-norm ground state ψ assembled from the two shooting legs.
#[derive(Debug, Clone)]
pub struct NeutralEigenfunction {
    decay: f64,
    matching_point: f64,
    left: DenseTrajectory<f64, 2>,
    right: DenseTrajectory<f64, 2>,
    left_scale: f64,
    right_scale: f64,
}

impl NeutralEigenfunction {
    fn leg(&self, t: f64) -> (f64, [f64; 2], f64) {
        if t <= self.matching_point {
            let (lo, hi) = self.left.span().unwrap();
            let y = self.left.eval(t.clamp(lo, hi)).unwrap();
            let y = if t < lo { [y[0], 0.0] } else { y };
            (self.left_scale, y, self.decay)
        } else {
            let (lo, hi) = self.right.span().unwrap();
            let y = self.right.eval(t.clamp(lo, hi)).unwrap();
            let y = if t > hi { [y[0], 0.0] } else { y };
            (self.right_scale, y, -self.decay)
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let (s, y, k) = self.leg(t);
        s * (k * t).exp() * y[0]
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let (s, y, k) = self.leg(t);
        s * (k * t).exp() * (k * y[0] + y[1])
    }

    pub fn samples(&self, t: Vec<f64>) -> RealSamples {
        RealSamples::tabulate(t, |x| self.eval(x))
    }

    /// Integration knots of both legs (useful quadrature breaks).
    pub fn knots(&self) -> Vec<f64> {
        let mut v = self.left.knots();
        v.extend(self.right.knots());
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.left.span().unwrap().0, self.right.span().unwrap().1)
    }
}

struct Shot {
    wronskian: f64,
    nodes: usize,
    left: Option<DenseTrajectory<f64, 2>>,
    right: Option<DenseTrajectory<f64, 2>>,
    left_mid: [f64; 2],
    right_mid: [f64; 2],
}

fn shoot(p: &Profile, c: CriticalPoint, lambda: f64, cfg: &SturmConfig, keep: bool) -> Result<Shot, SturmError> {
    let k = lambda.sqrt();
    let level = num_complex::Complex64::new(p.xi_at(c), 0.0);
    let (lo, hi) = p.tail_cutoffs(level, cfg.tail_mass)?;
    let tm = cfg.matching_point;
    let opts = OdeOptions { rtol: cfg.rtol, atol: cfg.atol, dense: keep, ..Default::default() };
    let q = |t: f64| p.critical_quotient(c, t);
    let from_left = |t: f64, y: &[f64; 2]| [y[1], -2.0 * k * y[1] + q(t) * y[0]];
    let from_right = |t: f64, y: &[f64; 2]| [y[1], 2.0 * k * y[1] + q(t) * y[0]];

    let mut nodes = 0usize;
    let mut left_traj = DenseTrajectory::new();
    let (left_mid, _) = ode::integrate(from_left, lo, [1.0, 0.0], tm, &opts, |st| {
        if st.y_old[0].signum() != st.y_new[0].signum() && st.y_new[0] != 0.0 {
            nodes += 1;
        }
        if let Some(d) = st.dense {
            left_traj.push(d);
        }
    })?;
    let opts_plain = OdeOptions { dense: false, ..opts };
    let (end, _) = ode::integrate(from_left, tm, left_mid, hi, &opts_plain, |st| {
        if st.y_old[0].signum() != st.y_new[0].signum() && st.y_new[0] != 0.0 {
            nodes += 1;
        }
    })?;
    if (end[1] + 2.0 * k * end[0]) / end[0] < 0.0 {
        nodes += 1;
    }
    let mut right_traj = DenseTrajectory::new();
    let (right_mid, _) = ode::integrate(from_right, hi, [1.0, 0.0], tm, &opts, |st| {
        if let Some(d) = st.dense {
            right_traj.push(d);
        }
    })?;
    let wronskian = left_mid[0] * right_mid[1] - left_mid[1] * right_mid[0] - 2.0 * k * left_mid[0] * right_mid[0];
    Ok(Shot {
        wronskian,
        nodes,
        left: keep.then_some(left_traj),
        right: keep.then_some(right_traj),
        left_mid,
        right_mid,
    })
}

fn potential_floor(p: &Profile, c: CriticalPoint) -> f64 {
    crate::sampled::uniform_grid(-3.0, 3.0, 6001)
        .into_iter()
        .map(|t| p.critical_quotient(c, t))
        .fold(0.0, f64::min)
}

/// λ_c by shooting: node-count bisection to isolate the ground state, then
/// Brent on the Wronskian.
pub fn ground_state_lambda(p: &Profile, c: CriticalPoint, cfg: &SturmConfig) -> Result<f64, SturmError> {
    let mut hi = -potential_floor(p, c) * 1.01 + 1e-3;
    let mut lo = 1e-4;
    if shoot(p, c, lo, cfg, false)?.nodes == 0 {
        return Err(SturmError::NoBoundState { which: c.label() });
    }
    while shoot(p, c, hi, cfg, false)?.nodes > 0 {
        hi *= 2.0;
    }
    let mut lo_count = usize::MAX;
    while hi - lo > 1e-3 * hi || lo_count != 1 {
        let mid = 0.5 * (lo + hi);
        let n = shoot(p, c, mid, cfg, false)?.nodes;
        if n >= 1 {
            lo = mid;
            lo_count = n;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 * hi {
            break;
        }
    }
    let w = |lam: f64| shoot(p, c, lam, cfg, false).map(|s| s.wronskian).unwrap_or(f64::NAN);
    Ok(roots::brent(w, lo, hi, 1e-15 * hi, 200)?)
}

fn eigenfunction(p: &Profile, c: CriticalPoint, lambda: f64, cfg: &SturmConfig) -> Result<(NeutralEigenfunction, usize), SturmError> {
    let shot = shoot(p, c, lambda, cfg, true)?;
    let k = lambda.sqrt();
    let tm = cfg.matching_point;
    let left = shot.left.unwrap();
    let right = shot.right.unwrap();
    // Continuity at the matching point.
    let ratio = ((k * tm).exp() * shot.left_mid[0]) / ((-k * tm).exp() * shot.right_mid[0]);
    let mut f = NeutralEigenfunction {
        decay: k,
        matching_point: tm,
        left,
        right,
        left_scale: 1.0,
        right_scale: ratio,
    };
    let knots = f.knots();
    let rule = gauss::gl16();
    let mut norm2: f64 = knots.windows(2).map(|w| rule.integrate(w[0], w[1], |t| f.eval(t).powi(2))).sum();
    let (lo, hi) = f.domain();
    norm2 += f.eval(lo).powi(2) / (2.0 * k) + f.eval(hi).powi(2) / (2.0 * k);
    let sign = if f.eval(c.location()) < 0.0 { -1.0 } else { 1.0 };
    let s = sign / norm2.sqrt();
    f.left_scale *= s;
    f.right_scale *= s;
    Ok((f, shot.nodes))
}

/// Lowest two eigenvalues of the Dirichlet finite-difference operator on a
/// sinh-graded mesh.
fn fd_eigenvalues(p: &Profile, c: CriticalPoint, n: usize, lo: f64, hi: f64) -> (f64, f64) {
    let scale = (2.0 * p.feature_scale()).clamp(1e-5, 0.05);
    let mesh = Mesh::new(lo, hi, n, &MeshMap::Sinh { center: 0.0, scale });
    let t = &mesh.t;
    let m = n - 2;
    let mut diag = Vec::with_capacity(m);
    let mut off = Vec::with_capacity(m);
    let mut mass = Vec::with_capacity(m);
    for i in 1..n - 1 {
        let hm = t[i] - t[i - 1];
        let hp = t[i + 1] - t[i];
        let w = 0.5 * (hm + hp);
        diag.push(1.0 / hm + 1.0 / hp + w * p.critical_quotient(c, t[i]));
        off.push(-1.0 / hp);
        mass.push(w);
    }
    let count = |mu: f64| -> usize {
        let mut neg = 0;
        let mut d = 1.0;
        for i in 0..m {
            let prev = if i == 0 { 0.0 } else { off[i - 1] * off[i - 1] / d };
            d = diag[i] - mu * mass[i] - prev;
            if d == 0.0 {
                d = -1e-300;
            }
            if d < 0.0 {
                neg += 1;
            }
        }
        neg
    };
    let mut lower = f64::INFINITY;
    let mut upper = f64::NEG_INFINITY;
    for i in 0..m {
        let r = off[i].abs() + if i > 0 { off[i - 1].abs() } else { 0.0 };
        lower = lower.min((diag[i] - r) / mass[i]);
        upper = upper.max((diag[i] + r) / mass[i]);
    }
    let kth = |k: usize| {
        let (mut a, mut b) = (lower, upper);
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if count(mid) > k {
                b = mid;
            } else {
                a = mid;
            }
            if b - a <= 4.0 * f64::EPSILON * mid.abs().max(1e-300) {
                break;
            }
        }
        0.5 * (a + b)
    };
    (kth(0), kth(1))
}

/// -λ_c computed by shooting and by finite differences, with the shooting
/// ground state returned.
pub fn smallest_eigenvalue(p: &Profile, c: CriticalPoint, cfg: &SturmConfig) -> Result<NeutralMode, SturmError> {
    let lambda = ground_state_lambda(p, c, cfg)?;
    let (psi, nodes) = eigenfunction(p, c, lambda, cfg)?;
    let k = lambda.sqrt();
    let level = num_complex::Complex64::new(p.xi_at(c), 0.0);
    let (l_minus, l_plus) = p.tail_cutoffs(level, cfg.tail_mass)?;
    let reach = (25.0 / k).max(20.0);
    let (lo, hi) = (l_minus.max(-reach), l_plus.min(reach));
    let (mu_n, ex_n) = fd_eigenvalues(p, c, cfg.fd_points, lo, hi);
    let (mu_2n, ex_2n) = fd_eigenvalues(p, c, 2 * cfg.fd_points - 1, lo, hi);
    let lambda_fd = -(4.0 * mu_2n - mu_n) / 3.0;
    let excited = (4.0 * ex_2n - ex_n) / 3.0;
    let gap = (lambda_fd - lambda).abs() / lambda;
    log::debug!("L_{}: shooting {lambda}, fd {lambda_fd} ({mu_n}, {mu_2n}), gap {gap:e}", c.label());
    if gap > cfg.agreement {
        return Err(SturmError::MethodDisagreement { shooting: lambda, fd: lambda_fd, gap });
    }
    let interior_nodes = nodes.saturating_sub(0);
    let psi_at_c = psi.eval(c.location());
    Ok(NeutralMode {
        which: c,
        lambda,
        lambda_fd,
        method_gap: gap,
        excited_eigenvalue: excited,
        nodes: interior_nodes,
        psi_at_c,
        eigenfunction: Some(psi),
    })
}

/// Admissible trial function for the variational characterization.
pub enum TrialFunction {
    /// Piecewise-linear interpolant of samples (zero outside the grid).
    Sampled(RealSamples),
    /// Closed-form ψ and ψ′ supported in `support`.
    Analytic {
        value: Box<dyn Fn(f64) -> f64 + Send + Sync>,
        derivative: Box<dyn Fn(f64) -> f64 + Send + Sync>,
        support: (f64, f64),
    },
}

impl TrialFunction {
    /// √2 cos(πt) on [-1/2, 1/2].
    pub fn cosine_bump() -> Self {
        let pi = std::f64::consts::PI;
        TrialFunction::Analytic {
            value: Box::new(move |t| 2f64.sqrt() * (pi * t).cos()),
            derivative: Box::new(move |t| -2f64.sqrt() * pi * (pi * t).sin()),
            support: (-0.5, 0.5),
        }
    }
}

/// ∫(|ψ′|² + Q_c ψ²) / ∫ψ², an upper bound for -λ_c.
pub fn rayleigh_quotient(p: &Profile, c: CriticalPoint, trial: &TrialFunction) -> Result<f64, SturmError> {
    let q = |t: f64| p.critical_quotient(c, t);
    let qerr = |e: quad::QuadError| SturmError::Quadrature(e.to_string());
    match trial {
        TrialFunction::Sampled(s) => {
            let mut kinetic = 0.0;
            let mut norm = 0.0;
            let mut potential = 0.0;
            for i in 0..s.len() - 1 {
                let (a, b) = (s.t[i], s.t[i + 1]);
                let (fa, fb) = (s.values[i], s.values[i + 1]);
                let h = b - a;
                kinetic += (fb - fa).powi(2) / h;
                norm += h * (fa * fa + fa * fb + fb * fb) / 3.0;
                let mut g = |t: f64| {
                    let v = fa + (fb - fa) * (t - a) / h;
                    q(t) * v * v
                };
                potential += quad::integrate_breaks(&mut g, &[a, b], 1e-15, 1e-13).map_err(qerr)?;
            }
            Ok((kinetic + potential) / norm)
        }
        TrialFunction::Analytic { value, derivative, support } => {
            let (lo, hi) = *support;
            let mut breaks: Vec<f64> = p.breaks().into_iter().filter(|&b| b > lo && b < hi).collect();
            breaks.insert(0, lo);
            breaks.push(hi);
            let mut kin = |t: f64| derivative(t).powi(2);
            let mut pot = |t: f64| q(t) * value(t).powi(2);
            let mut nrm = |t: f64| value(t).powi(2);
            let kinetic = quad::integrate_breaks(&mut kin, &breaks, 1e-14, 1e-13).map_err(qerr)?;
            let potential = quad::integrate_breaks(&mut pot, &breaks, 1e-14, 1e-13).map_err(qerr)?;
            let norm = quad::integrate_breaks(&mut nrm, &breaks, 1e-14, 1e-13).map_err(qerr)?;
            Ok((kinetic + potential) / norm)
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NeutralWavenumbers {
    pub lambda_a: f64,
    pub lambda_b: f64,
    pub m_a: f64,
    /// √max(1, λ_b).
    pub m_b: f64,
    pub mode_a: NeutralMode,
    pub mode_b: Option<NeutralMode>,
}

/// m_a = √λ_a and m_b = √max(1, λ_b).
pub fn neutral_wavenumbers(p: &Profile, cfg: &SturmConfig) -> Result<NeutralWavenumbers, SturmError> {
    let mode_a = smallest_eigenvalue(p, CriticalPoint::Inner, cfg)?;
    if mode_a.lambda <= 1.0 {
        return Err(SturmError::BandEmpty(mode_a.lambda));
    }
    let mode_b = match smallest_eigenvalue(p, CriticalPoint::Outer, cfg) {
        Ok(m) => Some(m),
        Err(SturmError::NoBoundState { .. }) => None,
        Err(e) => return Err(e),
    };
    let lambda_b = mode_b.as_ref().map(|m| m.lambda).unwrap_or(0.0);
    Ok(NeutralWavenumbers {
        lambda_a: mode_a.lambda,
        lambda_b,
        m_a: mode_a.lambda.sqrt(),
        m_b: lambda_b.max(1.0).sqrt(),
        mode_a,
        mode_b,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TuneReport {
    pub m0: u32,
    /// Blend parameter with λ_a = m0².
    pub sigma_star: f64,
    /// Returned blend parameter σ* + step.
    pub sigma: f64,
    pub lambda_a: f64,
    pub lambda_b: f64,
    pub m_a: f64,
    pub m_b: f64,
    #[serde(skip)]
    pub profile: Option<Profile>,
}

/// Find σ* with λ_a((1-σ*)Ξ₀ + σ*Ξ₁) = m0², step past it and verify
/// m_b < m0 < m_a on the returned blend.
pub fn tune_for_integer_mode(
    p0: &Profile,
    p1: &Profile,
    m0: u32,
    step: f64,
    cfg: &SturmConfig,
) -> Result<TuneReport, SturmError> {
    let target = (m0 as f64).powi(2);
    let lam = |s: f64| -> Result<f64, SturmError> {
        let b = Profile::interpolate(p0, p1, s)?;
        ground_state_lambda(&b, CriticalPoint::Inner, cfg)
    };
    let l0 = lam(0.0)?;
    let l1 = lam(1.0)?;
    if !(l0 < target && target < l1) {
        return Err(SturmError::NotBracketed { m0, lambda0: l0, lambda1: l1 });
    }
    let sigma_star = roots::brent(|s| lam(s).map(|l| l - target).unwrap_or(f64::NAN), 0.0, 1.0, 1e-12, 200)?;
    let sigma = (sigma_star + step).min(1.0);
    let blend = Profile::interpolate(p0, p1, sigma)?;
    let report = blend.validate();
    if !report.all_passed() {
        let names: Vec<String> = report.failures().iter().map(|c| c.name.clone()).collect();
        return Err(SturmError::TuneFailed { sigma, reason: format!("class checks {names:?}") });
    }
    let nw = neutral_wavenumbers(&blend, cfg)?;
    if !(nw.m_b < m0 as f64 && (m0 as f64) < nw.m_a) {
        return Err(SturmError::TuneFailed {
            sigma,
            reason: format!("m_b = {} < {m0} < m_a = {}", nw.m_b, nw.m_a),
        });
    }
    Ok(TuneReport {
        m0,
        sigma_star,
        sigma,
        lambda_a: nw.lambda_a,
        lambda_b: nw.lambda_b,
        m_a: nw.m_a,
        m_b: nw.m_b,
        profile: Some(blend),
    })
}
