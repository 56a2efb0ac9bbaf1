//! Five-point Poisson solve on a square with Dirichlet data, diagonalized by
//! the type-I sine transform.

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// In-place DST-I of every length-n line produced by `lines`.
struct Dst {
    n: usize,
    fft: Arc<dyn Fft<f64>>,
}

impl Dst {
    fn new(n: usize) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(2 * (n + 1));
        Dst { n, fft }
    }

    /// X_k = Σ_j x_j sin(π(j+1)(k+1)/(n+1)).
    fn apply(&self, line: &mut [f64], buf: &mut [Complex<f64>]) {
        let n = self.n;
        buf.fill(Complex::new(0.0, 0.0));
        for j in 0..n {
            buf[j + 1] = Complex::new(line[j], 0.0);
            buf[2 * n + 1 - j] = Complex::new(-line[j], 0.0);
        }
        self.fft.process(buf);
        for k in 0..n {
            line[k] = -0.5 * buf[k + 1].im;
        }
    }
}

/// Grid values of u with Δ_h u = f on the n×n interior of [−L, L]², where
/// `boundary(x, y)` supplies u on the edge.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridSolution {
    pub half_width: f64,
    pub n: usize,
    /// Row-major, index i + n j for the node (x_i, y_j).
    pub values: Vec<f64>,
}

impl GridSolution {
    pub fn step(&self) -> f64 {
        2.0 * self.half_width / (self.n + 1) as f64
    }

    pub fn coordinate(&self, i: usize) -> f64 {
        -self.half_width + self.step() * (i + 1) as f64
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i + self.n * j]
    }
}

pub fn solve<F, B>(half_width: f64, n: usize, rhs: F, boundary: B) -> GridSolution
where
    F: Fn(f64, f64) -> f64,
    B: Fn(f64, f64) -> f64,
{
    let h = 2.0 * half_width / (n + 1) as f64;
    let x = |i: isize| -half_width + h * (i + 1) as f64;
    let mut f = vec![0.0; n * n];
    for j in 0..n {
        for i in 0..n {
            let mut v = rhs(x(i as isize), x(j as isize));
            let h2 = h * h;
            if i == 0 {
                v -= boundary(x(-1), x(j as isize)) / h2;
            }
            if i == n - 1 {
                v -= boundary(x(n as isize), x(j as isize)) / h2;
            }
            if j == 0 {
                v -= boundary(x(i as isize), x(-1)) / h2;
            }
            if j == n - 1 {
                v -= boundary(x(i as isize), x(n as isize)) / h2;
            }
            f[i + n * j] = v;
        }
    }
    let dst = Dst::new(n);
    let mut buf = vec![Complex::new(0.0, 0.0); 2 * (n + 1)];
    let mut line = vec![0.0; n];
    transform_2d(&dst, &mut f, &mut buf, &mut line);
    let scale = (2.0 / (n + 1) as f64).powi(2);
    for j in 0..n {
        for i in 0..n {
            let lam = |k: usize| (2.0 * (std::f64::consts::PI * (k + 1) as f64 / (n + 1) as f64).cos() - 2.0) / (h * h);
            f[i + n * j] /= lam(i) + lam(j);
        }
    }
    transform_2d(&dst, &mut f, &mut buf, &mut line);
    for v in &mut f {
        *v *= scale;
    }
    GridSolution { half_width, n, values: f }
}

fn transform_2d(dst: &Dst, f: &mut [f64], buf: &mut [Complex<f64>], line: &mut [f64]) {
    let n = dst.n;
    for j in 0..n {
        dst.apply(&mut f[n * j..n * (j + 1)], buf);
    }
    for i in 0..n {
        for j in 0..n {
            line[j] = f[i + n * j];
        }
        dst.apply(line, buf);
        for j in 0..n {
            f[i + n * j] = line[j];
        }
    }
}

/// Result of comparing a radial mode ψ(r)cos(mθ) against two FD grids.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PoissonCheck {
    pub m: u32,
    pub half_width: f64,
    pub n_coarse: usize,
    /// max |u_FD − ψ cos mθ| / max |ψ| on coarse nodes after Richardson.
    pub relative_error: f64,
    /// Same before extrapolation (coarse grid only).
    pub coarse_error: f64,
}

/// Solves Δu = γ(r)cos(mθ) on two grids (n and 2n+1 interior points) with
/// boundary data from `exterior` and compares the Richardson value with
/// `psi(r)cos(mθ)` on the coarse nodes.
pub fn check_mode<G, E, P>(m: u32, half_width: f64, n: usize, gamma: G, exterior: E, psi: P) -> PoissonCheck
where
    G: Fn(f64) -> f64 + Sync,
    E: Fn(f64) -> f64 + Sync,
    P: Fn(f64) -> f64,
{
    let angular = |x: f64, y: f64| {
        let r = x.hypot(y);
        if r == 0.0 {
            0.0
        } else {
            (m as f64 * y.atan2(x)).cos()
        }
    };
    let rhs = |x: f64, y: f64| gamma(x.hypot(y)) * angular(x, y);
    let bc = |x: f64, y: f64| exterior(x.hypot(y)) * angular(x, y);
    let (coarse, fine) = rayon::join(|| solve(half_width, n, rhs, bc), || solve(half_width, 2 * n + 1, rhs, bc));
    let mut err = 0.0f64;
    let mut err_coarse = 0.0f64;
    let mut peak = 0.0f64;
    for j in 0..n {
        for i in 0..n {
            let (x, y) = (coarse.coordinate(i), coarse.coordinate(j));
            let exact = psi(x.hypot(y)) * angular(x, y);
            let uf = fine.at(2 * i + 1, 2 * j + 1);
            let uc = coarse.at(i, j);
            let rich = (4.0 * uf - uc) / 3.0;
            err = err.max((rich - exact).abs());
            err_coarse = err_coarse.max((uc - exact).abs());
            peak = peak.max(exact.abs());
        }
    }
    PoissonCheck { m, half_width, n_coarse: n, relative_error: err / peak, coarse_error: err_coarse / peak }
}
