//! Classical Runge–Kutta stepping of ∂τγ = −iℒₘγ on the specmat grid and
//! growth-rate fits of the resulting norms.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::num::fit;
use crate::specmat::{l2, OperatorMatrix};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvolveError {
    #[error("dt·‖L‖ = {0} exceeds the stability budget 0.1")]
    StepTooLarge(f64),
    #[error("dt and tau_end must be positive with tau_end >= dt")]
    BadSchedule,
    #[error("initial state has {got} samples, grid has {want}")]
    Length { got: usize, want: usize },
    #[error("initial data is zero")]
    ZeroData,
    #[error("norm {norm:e} at tau = {tau} exceeds the growth cap {cap:e}")]
    Instability { tau: f64, norm: f64, cap: f64 },
    #[error("fit window [{start}, {end}] holds fewer than 3 samples")]
    Window { start: f64, end: f64 },
    #[error("log-norm deviates from a line by {rms:e} (limit {limit:e})")]
    WindowTooNoisy { rms: f64, limit: f64 },
}

/// Upper limit for dt times the operator norm bound.
pub const STABILITY_BUDGET: f64 = 0.1;

/// RMS deviation of ln‖γ‖ from the fitted line above which a window is rejected.
pub const NOISE_LIMIT: f64 = 0.05;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub tau_end: f64,
    pub dt: f64,
    /// Record the norm every this many steps.
    pub record_every: usize,
    /// Keep the state at recorded times.
    pub keep_states: bool,
    /// Fail once ‖γ(τ)‖ > cap_factor·e^{2·rate·τ}‖γ0‖.
    pub growth_cap: Option<GrowthCap>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GrowthCap {
    pub rate: f64,
    pub factor: f64,
}

impl RunConfig {
    pub fn new(tau_end: f64, dt: f64) -> Self {
        RunConfig { tau_end, dt, record_every: 1, keep_states: false, growth_cap: None }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    pub m: f64,
    pub dt: f64,
    pub tau: Vec<f64>,
    /// ‖γ(τ_k)‖ in L²(r dr).
    pub norms: Vec<f64>,
    /// γ samples at the recorded times when requested.
    #[serde(skip)]
    pub states: Vec<Vec<Complex64>>,
    /// Final state in grid coordinates.
    #[serde(skip)]
    pub last: Vec<Complex64>,
}

impl Trajectory {
    pub fn csv(&self) -> String {
        let mut csv = crate::io::Csv::new(&["tau", "norm", "log_norm"]);
        for (t, n) in self.tau.iter().zip(&self.norms) {
            csv.row(&[*t, *n, n.ln()]);
        }
        csv.into_string()
    }

    /// max_k ‖γ(τ_k)‖ / (e^{rate τ_k} ‖γ(0)‖).
    pub fn growth_constant(&self, rate: f64) -> f64 {
        let n0 = self.norms[0];
        self.tau.iter().zip(&self.norms).map(|(t, n)| n / (n0 * (rate * t).exp())).fold(0.0, f64::max)
    }
}

fn axpy(y: &[Complex64], a: Complex64, x: &[Complex64]) -> Vec<Complex64> {
    y.iter().zip(x).map(|(u, v)| u + a * v).collect()
}

/// −iℒγ in state coordinates.
fn rhs(op: &OperatorMatrix, v: &[Complex64]) -> Vec<Complex64> {
    let mi = Complex64::new(0.0, -1.0);
    op.apply(v).into_iter().map(|x| x * mi).collect()
}

fn rk4_step(op: &OperatorMatrix, v: &[Complex64], dt: f64) -> Vec<Complex64> {
    let h = Complex64::new(dt, 0.0);
    let k1 = rhs(op, v);
    let k2 = rhs(op, &axpy(v, h * 0.5, &k1));
    let k3 = rhs(op, &axpy(v, h * 0.5, &k2));
    let k4 = rhs(op, &axpy(v, h, &k3));
    v.iter()
        .enumerate()
        .map(|(j, x)| x + (k1[j] + k2[j] * 2.0 + k3[j] * 2.0 + k4[j]) * (dt / 6.0))
        .collect()
}

/// Integrate from γ0 (samples of γ on the operator grid) to `tau_end`.
pub fn run(op: &OperatorMatrix, gamma0: &[Complex64], cfg: &RunConfig) -> Result<Trajectory, EvolveError> {
    if gamma0.len() != op.n() {
        return Err(EvolveError::Length { got: gamma0.len(), want: op.n() });
    }
    if !(cfg.dt > 0.0 && cfg.tau_end >= cfg.dt) || cfg.record_every == 0 {
        return Err(EvolveError::BadSchedule);
    }
    let budget = cfg.dt * op.norm_bound();
    if budget > STABILITY_BUDGET {
        return Err(EvolveError::StepTooLarge(budget));
    }
    let mut v = op.to_state(gamma0);
    let n0 = l2(&v);
    if n0 == 0.0 {
        return Err(EvolveError::ZeroData);
    }
    let steps = (cfg.tau_end / cfg.dt).round() as usize;
    let mut traj = Trajectory { m: op.m, dt: cfg.dt, tau: vec![0.0], norms: vec![n0], states: Vec::new(), last: Vec::new() };
    if cfg.keep_states {
        traj.states.push(gamma0.to_vec());
    }
    for k in 1..=steps {
        v = rk4_step(op, &v, cfg.dt);
        if k % cfg.record_every != 0 && k != steps {
            continue;
        }
        let tau = k as f64 * cfg.dt;
        let norm = l2(&v);
        let cap = cfg.growth_cap.map_or(f64::INFINITY, |c| c.factor * (2.0 * c.rate * tau).exp() * n0);
        if !norm.is_finite() || norm > cap {
            return Err(EvolveError::Instability { tau, norm, cap });
        }
        traj.tau.push(tau);
        traj.norms.push(norm);
        if cfg.keep_states {
            traj.states.push(op.to_gamma(&v));
        }
    }
    traj.last = op.to_gamma(&v);
    Ok(traj)
}

/// Trajectories from several initial data, in parallel.
pub fn run_ensemble(op: &OperatorMatrix, data: &[Vec<Complex64>], cfg: &RunConfig) -> Vec<Result<Trajectory, EvolveError>> {
    data.par_iter().map(|g| run(op, g, cfg)).collect()
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GrowthFit {
    pub rate: f64,
    pub intercept: f64,
    pub rms: f64,
    pub samples: usize,
}

/// Least-squares slope of ln‖γ‖ against τ over τ ∈ [start, end].
pub fn growth_fit(traj: &Trajectory, start: f64, end: f64) -> Result<GrowthFit, EvolveError> {
    if traj.norms.contains(&0.0) {
        return Err(EvolveError::ZeroData);
    }
    let (x, y): (Vec<f64>, Vec<f64>) =
        traj.tau.iter().zip(&traj.norms).filter(|(t, _)| **t >= start && **t <= end).map(|(t, n)| (*t, n.ln())).unzip();
    if x.len() < 3 {
        return Err(EvolveError::Window { start, end });
    }
    let (rate, intercept) = fit::line(&x, &y);
    let rms = fit::line_rms(&x, &y);
    if rms > NOISE_LIMIT {
        return Err(EvolveError::WindowTooNoisy { rms, limit: NOISE_LIMIT });
    }
    Ok(GrowthFit { rate, intercept, rms, samples: x.len() })
}

/// Smooth random data: a seeded sum of eight complex Gaussian bumps in t.
pub fn random_data(op: &OperatorMatrix, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bumps: Vec<(f64, f64, Complex64)> = (0..8)
        .map(|_| {
            let c = rng.gen_range(-3.0..3.0);
            let w = rng.gen_range(0.3..1.5);
            let a = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            (c, w, a)
        })
        .collect();
    op.t().iter().map(|&t| bumps.iter().map(|&(c, w, a)| a * (-((t - c) / w).powi(2)).exp()).sum()).collect()
}

#[cfg(test)]
mod tests;
