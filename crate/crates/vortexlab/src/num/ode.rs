//! Adaptive explicit Runge-Kutta integration (Dormand-Prince 8(5,3)) with
//! optional dense output, for small fixed-size real or complex systems.

use num_complex::Complex64;
use std::ops::{Add, Mul, Sub};
use thiserror::Error;

use super::dop853_tableau as tab;

pub trait OdeScalar:
    Copy + Default + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> + Send + Sync
{
    fn modulus(&self) -> f64;
}

impl OdeScalar for f64 {
    #[inline]
    fn modulus(&self) -> f64 {
        self.abs()
    }
}

impl OdeScalar for Complex64 {
    #[inline]
    fn modulus(&self) -> f64 {
        self.norm()
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OdeError {
    #[error("step size fell below the minimum {min_step:e} at t = {t}")]
    StepFailure { t: f64, min_step: f64 },
    #[error("exceeded {0} steps")]
    TooManySteps(usize),
    #[error("non-finite state at t = {0}")]
    NonFinite(f64),
}

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_step: f64,
    pub first_step: Option<f64>,
    pub max_steps: usize,
    pub dense: bool,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rtol: 1e-10,
            atol: 1e-12,
            max_step: f64::INFINITY,
            first_step: None,
            max_steps: 2_000_000,
            dense: false,
        }
    }
}

/// Interpolating polynomial over one accepted step.
#[derive(Debug, Clone)]
pub struct DenseStep<T: OdeScalar, const N: usize> {
    pub t_old: f64,
    pub t_new: f64,
    y_old: [T; N],
    f: [[T; N]; tab::INTERPOLATOR_POWER],
}

impl<T: OdeScalar, const N: usize> DenseStep<T, N> {
    pub fn eval(&self, t: f64) -> [T; N] {
        let x = (t - self.t_old) / (self.t_new - self.t_old);
        let mut y = [T::default(); N];
        for (i, fi) in self.f.iter().rev().enumerate() {
            let w = if i % 2 == 0 { x } else { 1.0 - x };
            for k in 0..N {
                y[k] = (y[k] + fi[k]) * w;
            }
        }
        for k in 0..N {
            y[k] = y[k] + self.y_old[k];
        }
        y
    }
}

/// Piecewise dense output collected over a whole integration.
#[derive(Debug, Clone, Default)]
pub struct DenseTrajectory<T: OdeScalar, const N: usize> {
    steps: Vec<DenseStep<T, N>>,
    increasing: bool,
}

impl<T: OdeScalar, const N: usize> DenseTrajectory<T, N> {
    pub fn new() -> Self {
        DenseTrajectory { steps: Vec::new(), increasing: true }
    }

    pub fn push(&mut self, step: &DenseStep<T, N>) {
        if self.steps.is_empty() {
            self.increasing = step.t_new >= step.t_old;
        }
        self.steps.push(step.clone());
    }

    /// Covered interval (lo, hi).
    pub fn span(&self) -> Option<(f64, f64)> {
        let first = self.steps.first()?;
        let last = self.steps.last()?;
        let (a, b) = (first.t_old, last.t_new);
        Some((a.min(b), a.max(b)))
    }

    /// Step boundaries in increasing order.
    pub fn knots(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.steps.iter().map(|s| s.t_old).collect();
        if let Some(l) = self.steps.last() {
            v.push(l.t_new);
        }
        if !self.increasing {
            v.reverse();
        }
        v
    }

    /// Multiply every stored state by `c`.
    pub fn scale(&mut self, c: f64) {
        for st in &mut self.steps {
            for k in 0..N {
                st.y_old[k] = st.y_old[k] * c;
                for row in st.f.iter_mut() {
                    row[k] = row[k] * c;
                }
            }
        }
    }

    pub fn eval(&self, t: f64) -> Option<[T; N]> {
        let (lo, hi) = self.span()?;
        if t < lo || t > hi {
            return None;
        }
        // Steps are monotone in time; binary search on the step start.
        let n = self.steps.len();
        let (mut a, mut b) = (0usize, n);
        while b - a > 1 {
            let mid = (a + b) / 2;
            let s = &self.steps[mid];
            let before = if self.increasing { t < s.t_old } else { t > s.t_old };
            if before {
                b = mid;
            } else {
                a = mid;
            }
        }
        Some(self.steps[a].eval(t))
    }
}

/// Data passed to the observer after every accepted step.
pub struct Step<'a, T: OdeScalar, const N: usize> {
    pub t_old: f64,
    pub t_new: f64,
    pub y_old: &'a [T; N],
    pub y_new: &'a [T; N],
    pub dense: Option<&'a DenseStep<T, N>>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 10.0;

#[inline]
fn axpy<T: OdeScalar, const N: usize>(y: &[T; N], k: &[[T; N]; 16], a: &[f64; 16], upto: usize, h: f64) -> [T; N] {
    let mut out = *y;
    for (j, kj) in k.iter().enumerate().take(upto) {
        let c = a[j];
        if c != 0.0 {
            let ch = c * h;
            for i in 0..N {
                out[i] = out[i] + kj[i] * ch;
            }
        }
    }
    out
}

/// Integrate `y' = f(t, y)` from `t0` to `t1` (either direction).
pub fn integrate<T, const N: usize, F, O>(
    mut f: F,
    t0: f64,
    y0: [T; N],
    t1: f64,
    opts: &OdeOptions,
    mut observer: O,
) -> Result<([T; N], OdeStats), OdeError>
where
    T: OdeScalar,
    F: FnMut(f64, &[T; N]) -> [T; N],
    O: FnMut(&Step<'_, T, N>),
{
    let mut stats = OdeStats::default();
    let dir = if t1 >= t0 { 1.0 } else { -1.0 };
    let mut t = t0;
    let mut y = y0;
    if t0 == t1 {
        return Ok((y, stats));
    }
    let mut fy = f(t, &y);
    stats.evaluations += 1;
    let span = (t1 - t0).abs();
    let mut h_abs = match opts.first_step {
        Some(h) => h.min(span),
        None => initial_step(&mut f, t, &y, &fy, dir, opts, &mut stats).min(span),
    };
    h_abs = h_abs.min(opts.max_step);
    let mut k = [[T::default(); N]; 16];
    let err_exp = -1.0 / 8.0;

    while dir * (t1 - t) > 0.0 {
        if stats.accepted >= opts.max_steps {
            return Err(OdeError::TooManySteps(opts.max_steps));
        }
        let min_step = 10.0 * (t.abs() * f64::EPSILON).max(f64::MIN_POSITIVE);
        let mut rejected = false;
        let (t_new, y_new, f_new, h) = loop {
            if h_abs < min_step {
                return Err(OdeError::StepFailure { t, min_step });
            }
            let mut h = h_abs * dir;
            let mut t_new = t + h;
            if dir * (t_new - t1) > 0.0 {
                t_new = t1;
            }
            h = t_new - t;
            let ha = h.abs();

            k[0] = fy;
            for s in 1..tab::N_STAGES {
                let ys = axpy(&y, &k, &tab::A[s], s, h);
                k[s] = f(t + tab::C[s] * h, &ys);
            }
            let mut y_new = y;
            for (j, kj) in k.iter().enumerate().take(tab::N_STAGES) {
                let c = tab::B[j] * h;
                if c != 0.0 {
                    for i in 0..N {
                        y_new[i] = y_new[i] + kj[i] * c;
                    }
                }
            }
            let f_new = f(t_new, &y_new);
            k[tab::N_STAGES] = f_new;
            stats.evaluations += tab::N_STAGES;

            let mut e5 = 0.0;
            let mut e3 = 0.0;
            let mut finite = true;
            for i in 0..N {
                let scale = opts.atol + opts.rtol * y[i].modulus().max(y_new[i].modulus());
                let mut s5 = T::default();
                let mut s3 = T::default();
                for j in 0..=tab::N_STAGES {
                    s5 = s5 + k[j][i] * tab::E5[j];
                    s3 = s3 + k[j][i] * tab::E3[j];
                }
                let a5 = s5.modulus() / scale;
                let a3 = s3.modulus() / scale;
                if !a5.is_finite() || !y_new[i].modulus().is_finite() {
                    finite = false;
                }
                e5 += a5 * a5;
                e3 += a3 * a3;
            }
            let err = if !finite {
                f64::INFINITY
            } else if e5 == 0.0 && e3 == 0.0 {
                0.0
            } else {
                ha * e5 / ((e5 + 0.01 * e3) * N as f64).sqrt()
            };
            if err < 1.0 {
                let mut factor = if err == 0.0 {
                    MAX_FACTOR
                } else {
                    (SAFETY * err.powf(err_exp)).min(MAX_FACTOR)
                };
                if rejected {
                    factor = factor.min(1.0);
                }
                h_abs = (ha * factor).min(opts.max_step);
                break (t_new, y_new, f_new, h);
            } else {
                stats.rejected += 1;
                rejected = true;
                let factor = if err.is_finite() {
                    (SAFETY * err.powf(err_exp)).max(MIN_FACTOR)
                } else {
                    MIN_FACTOR
                };
                h_abs = ha * factor;
            }
        };
        stats.accepted += 1;
        for v in y_new.iter() {
            if !v.modulus().is_finite() {
                return Err(OdeError::NonFinite(t_new));
            }
        }
        if opts.dense {
            for s in (tab::N_STAGES + 1)..tab::N_STAGES_EXTENDED {
                let ys = axpy(&y, &k, &tab::A[s], s, h);
                k[s] = f(t + tab::C[s] * h, &ys);
            }
            stats.evaluations += 3;
            let mut fd = [[T::default(); N]; tab::INTERPOLATOR_POWER];
            for i in 0..N {
                let dy = y_new[i] - y[i];
                fd[0][i] = dy;
                fd[1][i] = fy[i] * h - dy;
                fd[2][i] = dy * 2.0 - (f_new[i] + fy[i]) * h;
                for (r, drow) in tab::D.iter().enumerate() {
                    let mut s = T::default();
                    for j in 0..tab::N_STAGES_EXTENDED {
                        if drow[j] != 0.0 {
                            s = s + k[j][i] * drow[j];
                        }
                    }
                    fd[3 + r][i] = s * h;
                }
            }
            let dense = DenseStep { t_old: t, t_new, y_old: y, f: fd };
            observer(&Step { t_old: t, t_new, y_old: &y, y_new: &y_new, dense: Some(&dense) });
        } else {
            observer(&Step { t_old: t, t_new, y_old: &y, y_new: &y_new, dense: None });
        }
        t = t_new;
        y = y_new;
        fy = f_new;
    }
    Ok((y, stats))
}

fn initial_step<T, const N: usize, F>(
    f: &mut F,
    t: f64,
    y: &[T; N],
    fy: &[T; N],
    dir: f64,
    opts: &OdeOptions,
    stats: &mut OdeStats,
) -> f64
where
    T: OdeScalar,
    F: FnMut(f64, &[T; N]) -> [T; N],
{
    let mut d0 = 0.0;
    let mut d1 = 0.0;
    for i in 0..N {
        let sc = opts.atol + opts.rtol * y[i].modulus();
        d0 += (y[i].modulus() / sc).powi(2);
        d1 += (fy[i].modulus() / sc).powi(2);
    }
    d0 = (d0 / N as f64).sqrt();
    d1 = (d1 / N as f64).sqrt();
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let mut y1 = *y;
    for i in 0..N {
        y1[i] = y[i] + fy[i] * (h0 * dir);
    }
    let f1 = f(t + h0 * dir, &y1);
    stats.evaluations += 1;
    let mut d2 = 0.0;
    for i in 0..N {
        let sc = opts.atol + opts.rtol * y[i].modulus();
        d2 += ((f1[i] - fy[i]).modulus() / sc).powi(2);
    }
    d2 = (d2 / N as f64).sqrt() / h0;
    let h1 = if d1 <= 1e-15 && d2 <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(1.0 / 8.0)
    };
    (100.0 * h0).min(h1)
}
