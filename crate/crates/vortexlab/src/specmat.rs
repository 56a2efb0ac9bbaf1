//! Dense discretization of ℒₘ = 𝒮ₘ + 𝒦ₘ on L²(r dr), full spectra,
//! Riesz-projector multiplicity probes and the β-perturbed family.
//!
//! States are stored in the unitary coordinates v_j = √w_j r_j γ(r_j) on a
//! grid in t = ln r (uniform in a mapped coordinate s, t = T(s)), so that the
//! Euclidean norm of v is the trapezoid value of ‖γ‖ in L²(r dr). In these
//! coordinates
//!
//! (𝒦ₘγ)_j = (A_j/2) Σ_k e^{-m|t_j - t_k|} e^{t_k - t_j} √(w_j w_k) v_k,
//!
//! which splits into two decaying one-sided sums and is applied in O(n).

use faer::linalg::solvers::Solve;
use faer::Mat;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::num::mesh::{Mesh, MeshMap};
use crate::profile::Profile;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpecmatError {
    #[error("wavenumber must exceed 1, got {0}")]
    Wavenumber(f64),
    #[error("grid needs t_min < t_max and at least 16 points")]
    Grid,
    #[error("non-finite operator entry at t = {0}")]
    GridOverflow(f64),
    #[error("eigensolver failed: {0}")]
    Eigensolver(String),
    #[error("contour passes within reach of the spectrum at w = {0}")]
    ContourHitsSpectrum(Complex64),
    #[error("inverse iteration from {shift} did not converge (last change {change:e})")]
    NoConvergence { shift: Complex64, change: f64 },
    #[error("scaling exponent must lie in ]0, {alpha_bar}], got {alpha}")]
    Alpha { alpha: f64, alpha_bar: f64 },
    #[error("β values must be positive and increasing")]
    BetaList,
    #[error("eigenvector carries {0:e} of its mass on the outer stencil nodes")]
    StencilBoundary(f64),
    #[error("no unstable eigenvalue above Im = {0:e}")]
    NoUnstable(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub t_min: f64,
    /// Defaults to 12/ᾱ.
    pub t_max: Option<f64>,
    pub n: usize,
    /// Node clustering. `None` refines around a = 0 on the profile's feature
    /// scale.
    pub map: Option<MeshMap>,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { t_min: -12.0, t_max: None, n: 2048, map: None }
    }
}

impl GridConfig {
    pub fn with_n(n: usize) -> Self {
        GridConfig { n, ..Default::default() }
    }
}

/// (1/(αβ))(Id + r∂_r) added to the mode block, in the ℒ convention
/// (multiplied by i).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transport {
    pub alpha: f64,
    pub beta: f64,
}

#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    pub m: f64,
    pub alpha_bar: f64,
    t: Vec<f64>,
    /// dt/ds at the nodes.
    jac: Vec<f64>,
    ds: f64,
    sqrt_w: Vec<f64>,
    /// m ζ(r_j) = m Ξ(t_j).
    shear: Vec<f64>,
    /// A(t_j)/2 = g′(r_j)/(2 r_j) · r_j².
    coupling: Vec<f64>,
    /// e^{-(m+1)(t_j - t_{j-1})} and e^{-(m-1)(t_j - t_{j-1})} for j ≥ 1.
    decay_in: Vec<f64>,
    decay_out: Vec<f64>,
    kernel: bool,
    transport: Option<Transport>,
}

pub fn assemble(p: &Profile, m: f64, grid: &GridConfig) -> Result<OperatorMatrix, SpecmatError> {
    if !(m > 1.0) {
        return Err(SpecmatError::Wavenumber(m));
    }
    let t_max = grid.t_max.unwrap_or(12.0 / p.alpha_bar());
    if !(grid.t_min < t_max) || grid.n < 16 {
        return Err(SpecmatError::Grid);
    }
    let n = grid.n;
    let map = grid.map.clone().unwrap_or(MeshMap::Sinh { center: 0.0, scale: (2.0 * p.feature_scale()).clamp(1e-4, 0.02) });
    let Mesh { t, jac, ds, weights } = Mesh::new(grid.t_min, t_max, n, &map);
    let sqrt_w: Vec<f64> = weights.iter().map(|w| w.sqrt()).collect();
    let shear: Vec<f64> = t.par_iter().map(|&s| m * p.xi(s)).collect();
    let coupling: Vec<f64> = t.par_iter().map(|&s| 0.5 * p.a(s)).collect();
    if let Some(j) = (0..n).find(|&j| !shear[j].is_finite() || !coupling[j].is_finite()) {
        return Err(SpecmatError::GridOverflow(t[j]));
    }
    let steps: Vec<f64> = std::iter::once(0.0).chain(t.windows(2).map(|w| w[1] - w[0])).collect();
    let decay_in = steps.iter().map(|d| (-(m + 1.0) * d).exp()).collect();
    let decay_out = steps.iter().map(|d| (-(m - 1.0) * d).exp()).collect();
    Ok(OperatorMatrix {
        m,
        alpha_bar: p.alpha_bar(),
        t,
        jac,
        ds,
        sqrt_w,
        shear,
        coupling,
        decay_in,
        decay_out,
        kernel: true,
        transport: None,
    })
}

impl OperatorMatrix {
    pub fn n(&self) -> usize {
        self.t.len()
    }

    pub fn t(&self) -> &[f64] {
        &self.t
    }

    /// Largest spacing in t.
    pub fn max_step(&self) -> f64 {
        self.t.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    pub fn radii(&self) -> Vec<f64> {
        self.t.iter().map(|t| t.exp()).collect()
    }

    pub fn transport(&self) -> Option<Transport> {
        self.transport
    }

    /// 𝒮ₘ alone.
    pub fn shear_only(&self) -> OperatorMatrix {
        OperatorMatrix { kernel: false, transport: None, ..self.clone() }
    }

    pub fn with_transport(&self, alpha: f64, beta: f64) -> Result<OperatorMatrix, SpecmatError> {
        if !(alpha > 0.0 && alpha <= self.alpha_bar) {
            return Err(SpecmatError::Alpha { alpha, alpha_bar: self.alpha_bar });
        }
        if !(beta > 0.0) {
            return Err(SpecmatError::BetaList);
        }
        Ok(OperatorMatrix { transport: Some(Transport { alpha, beta }), ..self.clone() })
    }

    pub fn to_state(&self, gamma: &[Complex64]) -> Vec<Complex64> {
        gamma.iter().zip(&self.t).zip(&self.sqrt_w).map(|((g, t), s)| g * (s * t.exp())).collect()
    }

    pub fn to_gamma(&self, v: &[Complex64]) -> Vec<Complex64> {
        v.iter().zip(&self.t).zip(&self.sqrt_w).map(|((x, t), s)| x / (s * t.exp())).collect()
    }

    /// Trapezoid correction for the derivative jump of e^{-m|t-τ|} at τ = t.
    fn kink(&self, j: usize) -> f64 {
        if j == 0 || j + 1 == self.n() {
            0.0
        } else {
            -self.m * (self.ds * self.jac[j]).powi(2) / 6.0
        }
    }

    /// 𝒦ₘ in state coordinates.
    pub fn apply_kernel(&self, v: &[Complex64]) -> Vec<Complex64> {
        let n = self.n();
        let s: Vec<Complex64> = v.iter().zip(&self.sqrt_w).map(|(x, w)| x * w).collect();
        let mut left = vec![Complex64::new(0.0, 0.0); n];
        for j in 1..n {
            left[j] = (left[j - 1] + s[j - 1]) * self.decay_in[j];
        }
        let mut right = Complex64::new(0.0, 0.0);
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for j in (0..n).rev() {
            if j + 1 < n {
                right = (right + s[j + 1]) * self.decay_out[j + 1];
            }
            let c = self.coupling[j];
            out[j] = (left[j] + right + s[j]) * (c * self.sqrt_w[j]) + v[j] * (c * self.kink(j));
        }
        out
    }

    /// (Id + r∂_r)γ = r⁻¹∂_t(rγ) in state coordinates: W^{-1/2} (ds D_s) W^{-1/2}
    /// with the fourth-order centered stencil D_s and zero values outside
    /// the grid, which keeps the discrete operator skew.
    fn transport_term(&self, v: &[Complex64]) -> Vec<Complex64> {
        let n = self.n();
        let u: Vec<Complex64> = v.iter().zip(&self.sqrt_w).map(|(x, s)| x / s).collect();
        let at = |k: isize| if k < 0 || k >= n as isize { Complex64::new(0.0, 0.0) } else { u[k as usize] };
        (0..n as isize)
            .map(|j| (at(j - 2) - at(j - 1) * 8.0 + at(j + 1) * 8.0 - at(j + 2)) / (12.0 * self.sqrt_w[j as usize]))
            .collect()
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        let mut out: Vec<Complex64> = if self.kernel { self.apply_kernel(v) } else { vec![Complex64::new(0.0, 0.0); v.len()] };
        for (o, (x, s)) in out.iter_mut().zip(v.iter().zip(&self.shear)) {
            *o += x * s;
        }
        if let Some(tr) = self.transport {
            let c = Complex64::new(0.0, 1.0 / (tr.alpha * tr.beta));
            for (o, d) in out.iter_mut().zip(self.transport_term(v)) {
                *o += c * d;
            }
        }
        out
    }

    fn kernel_entry(&self, j: usize, k: usize) -> f64 {
        let d = self.t[j] - self.t[k];
        let decay = if j >= k { (-(self.m + 1.0) * d).exp() } else { ((self.m - 1.0) * d).exp() };
        let mut v = self.coupling[j] * self.sqrt_w[j] * self.sqrt_w[k] * decay;
        if j == k {
            v += self.coupling[j] * self.kink(j);
        }
        v
    }

    /// Dense 𝒦ₘ block.
    pub fn kernel_dense(&self) -> Mat<f64> {
        let n = self.n();
        let cols: Vec<Vec<f64>> = (0..n).into_par_iter().map(|k| (0..n).map(|j| self.kernel_entry(j, k)).collect()).collect();
        Mat::from_fn(n, n, |j, k| cols[k][j])
    }

    /// Dense real matrix when no transport term is present.
    pub fn dense_real(&self) -> Option<Mat<f64>> {
        if self.transport.is_some() {
            return None;
        }
        let mut a = if self.kernel { self.kernel_dense() } else { Mat::zeros(self.n(), self.n()) };
        for j in 0..self.n() {
            a[(j, j)] += self.shear[j];
        }
        Some(a)
    }

    pub fn dense(&self) -> Mat<Complex64> {
        let n = self.n();
        let real = OperatorMatrix { transport: None, ..self.clone() }.dense_real().unwrap();
        let mut a = Mat::from_fn(n, n, |j, k| Complex64::new(real[(j, k)], 0.0));
        if let Some(tr) = self.transport {
            let c = 1.0 / (tr.alpha * tr.beta);
            for j in 0..n {
                for (off, w) in [(-2isize, 1.0), (-1, -8.0), (1, 8.0), (2, -1.0)] {
                    let k = j as isize + off;
                    if k >= 0 && (k as usize) < n {
                        let k = k as usize;
                        let e = c * w / (12.0 * self.sqrt_w[j] * self.sqrt_w[k]);
                        a[(j, k)] += Complex64::new(0.0, e);
                    }
                }
            }
        }
        a
    }

    /// Upper bound of the operator norm by m·max|ζ| + ‖𝒦ₘ‖_F + transport stencil norm.
    pub fn norm_bound(&self) -> f64 {
        let shear = self.shear.iter().fold(0.0f64, |a, s| a.max(s.abs()));
        let kernel = if self.kernel {
            (0..self.n())
                .into_par_iter()
                .map(|j| (0..self.n()).map(|k| self.kernel_entry(j, k).powi(2)).sum::<f64>())
                .sum::<f64>()
                .sqrt()
        } else {
            0.0
        };
        let w = self.sqrt_w.iter().fold(f64::INFINITY, |a, s| a.min(s * s));
        let transport = self.transport.map_or(0.0, |tr| 18.0 / (12.0 * w * tr.alpha * tr.beta));
        shear + kernel + transport
    }

    /// max_j |(𝒦ₘγ)(r_j)| (1 + r_j)^{1+ᾱ} / ‖γ‖.
    pub fn kernel_bound_ratio(&self, v: &[Complex64]) -> f64 {
        let norm = l2(v);
        let kv = self.to_gamma(&self.apply_kernel(v));
        kv.iter().zip(&self.t).map(|(k, t)| k.norm() * (1.0 + t.exp()).powf(1.0 + self.alpha_bar)).fold(0.0, f64::max) / norm
    }
}

pub(crate) fn l2(v: &[Complex64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UnstableEigen {
    /// Eigenvalue of the mode block (m z in the Rayleigh convention).
    pub lambda: Complex64,
    pub z: Complex64,
    pub residual: f64,
    #[serde(skip)]
    pub state: Vec<Complex64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Spectrum {
    pub m: f64,
    pub n: usize,
    pub threshold: f64,
    /// Sorted by (Re, Im).
    pub eigenvalues: Vec<Complex64>,
    /// Eigenvalues with Im λ above the threshold, refined by inverse
    /// iteration, by decreasing Im λ.
    pub unstable: Vec<UnstableEigen>,
}

impl Spectrum {
    pub fn leading(&self) -> Option<&UnstableEigen> {
        self.unstable.first()
    }

    /// Largest |Im λ| among eigenvalues that are neither unstable nor
    /// conjugates of unstable ones.
    pub fn cloud_height(&self) -> f64 {
        let near = |l: &Complex64| {
            self.unstable.iter().any(|u| (u.lambda - l).norm().min((u.lambda.conj() - l).norm()) < 1e-8 * u.lambda.norm())
        };
        self.eigenvalues.iter().filter(|l| !near(l)).map(|l| l.im.abs()).fold(0.0, f64::max)
    }

    /// Distance from λ to the closest other eigenvalue.
    pub fn isolation(&self, lambda: Complex64) -> f64 {
        let mut d: Vec<f64> = self.eigenvalues.iter().map(|l| (l - lambda).norm()).collect();
        d.sort_by(f64::total_cmp);
        d.get(1).copied().unwrap_or(f64::INFINITY)
    }
}

pub fn eigenvalues(op: &OperatorMatrix) -> Result<Vec<Complex64>, SpecmatError> {
    let mut ev = match op.dense_real() {
        Some(a) => a.eigenvalues(),
        None => op.dense().eigenvalues(),
    }
    .map_err(|e| SpecmatError::Eigensolver(format!("{e:?}")))?;
    ev.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(ev)
}

/// Full dense spectrum; eigenvalues with Im λ > threshold are refined and
/// returned with their eigenvectors.
pub fn spectrum(op: &OperatorMatrix, threshold: f64) -> Result<Spectrum, SpecmatError> {
    let eigenvalues = eigenvalues(op)?;
    let mut unstable: Vec<UnstableEigen> = eigenvalues
        .iter()
        .filter(|l| l.im > threshold)
        .map(|&l| shift_invert(op, l, 1e-13))
        .collect::<Result<_, _>>()?;
    unstable.sort_by(|a, b| b.lambda.im.total_cmp(&a.lambda.im));
    Ok(Spectrum { m: op.m, n: op.n(), threshold, eigenvalues, unstable })
}

/// Unstable eigenvalue with the largest imaginary part.
pub fn leading_unstable(op: &OperatorMatrix, threshold: f64) -> Result<UnstableEigen, SpecmatError> {
    spectrum(op, threshold)?.unstable.into_iter().next().ok_or(SpecmatError::NoUnstable(threshold))
}

fn seeded_state(n: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(re, im)
        })
        .collect()
}

fn shifted(op: &OperatorMatrix, shift: Complex64) -> Mat<Complex64> {
    let mut a = op.dense();
    for j in 0..op.n() {
        a[(j, j)] -= shift;
    }
    a
}

/// Inverse iteration with shift, refactorizing once if convergence is slow.
pub fn shift_invert(op: &OperatorMatrix, shift: Complex64, tol: f64) -> Result<UnstableEigen, SpecmatError> {
    let n = op.n();
    let mut sigma = shift;
    let mut v = seeded_state(n, 11);
    let nv = l2(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    let mut lambda = shift;
    let mut change = f64::INFINITY;
    for _ in 0..3 {
        let lu = shifted(op, sigma).partial_piv_lu();
        for _ in 0..40 {
            let mut x = Mat::from_fn(n, 1, |j, _| v[j]);
            lu.solve_in_place(x.as_mut());
            let x: Vec<Complex64> = (0..n).map(|j| x[(j, 0)]).collect();
            let mu = dot(&v, &x);
            let next = sigma + 1.0 / mu;
            change = (next - lambda).norm();
            lambda = next;
            let nx = l2(&x);
            v = x.into_iter().map(|y| y / nx).collect();
            if change <= tol * lambda.norm().max(1.0) {
                let av = op.apply(&v);
                let residual = l2(&av.iter().zip(&v).map(|(a, x)| a - lambda * x).collect::<Vec<_>>());
                // Fix the phase so the largest component is real and positive.
                let big = v.iter().copied().max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap();
                let phase = big.conj() / big.norm();
                let state = v.iter().map(|x| x * phase).collect();
                return Ok(UnstableEigen { lambda, z: lambda / op.m, residual, state });
            }
        }
        sigma = lambda;
    }
    Err(SpecmatError::NoConvergence { shift, change })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MultiplicityProbe {
    pub center: Complex64,
    pub radius: f64,
    pub nodes: usize,
    pub algebraic: usize,
    pub geometric: usize,
    /// tr(Q*PQ) for an orthonormal basis Q of the projector range.
    pub trace: Complex64,
    pub singular_values: Vec<f64>,
    /// Eigenvalues of the operator compressed to the projector range.
    pub compressed: Vec<Complex64>,
}

/// (2πi)⁻¹∮(w - M)⁻¹ B dw by the trapezoid rule on a circle.
fn contour_apply(dense: &Mat<Complex64>, center: Complex64, radius: f64, nodes: usize, block: &Mat<Complex64>, floor: f64) -> Result<Mat<Complex64>, SpecmatError> {
    let n = dense.nrows();
    let parts: Vec<Result<Mat<Complex64>, SpecmatError>> = (0..nodes)
        .into_par_iter()
        .map(|q| {
            let theta = 2.0 * std::f64::consts::PI * (q as f64 + 0.5) / nodes as f64;
            let e = Complex64::from_polar(radius, theta);
            let w = center + e;
            let a = Mat::from_fn(n, n, |i, j| if i == j { w - dense[(i, j)] } else { -dense[(i, j)] });
            let lu = a.partial_piv_lu();
            let u = lu.U();
            if (0..n).any(|j| u[(j, j)].norm() < floor) {
                return Err(SpecmatError::ContourHitsSpectrum(w));
            }
            let mut y = block.clone();
            lu.solve_in_place(y.as_mut());
            let scale = e / nodes as f64;
            Ok(Mat::from_fn(n, block.ncols(), |i, j| y[(i, j)] * scale))
        })
        .collect();
    let mut sum = Mat::<Complex64>::zeros(n, block.ncols());
    for p in parts {
        sum += p?;
    }
    Ok(sum)
}

/// Riesz projector P = (2πi)⁻¹∮(w - M)⁻¹dw on a circle, applied to a seeded
/// random block. Its numerical rank estimates the algebraic multiplicity; the
/// compressed operator Q*MQ on range P gives the geometric one.
pub fn multiplicity_probe(op: &OperatorMatrix, center: Complex64, radius: f64, nodes: usize) -> Result<MultiplicityProbe, SpecmatError> {
    let n = op.n();
    let k = 4;
    let x = seeded_state(n * k, 5);
    let xmat = Mat::from_fn(n, k, |i, j| x[j * n + i]);
    let block_norm = l2(&x);
    let dense = op.dense();
    let floor = 1e-14 * op.norm_bound();
    let y = contour_apply(&dense, center, radius, nodes, &xmat, floor)?;
    let svd = y.thin_svd().map_err(|e| SpecmatError::Eigensolver(format!("{e:?}")))?;
    let singular_values: Vec<f64> = (0..k).map(|i| svd.S()[i].re).collect();
    let algebraic = singular_values.iter().filter(|&&s| s > 1e-8 * block_norm).count();
    if algebraic == 0 {
        return Ok(MultiplicityProbe {
            center,
            radius,
            nodes,
            algebraic,
            geometric: 0,
            trace: Complex64::new(0.0, 0.0),
            singular_values,
            compressed: Vec::new(),
        });
    }
    let qmat = Mat::from_fn(n, algebraic, |i, j| svd.U()[(i, j)]);
    let pq = contour_apply(&dense, center, radius, nodes, &qmat, floor)?;
    let col = |m: &Mat<Complex64>, j: usize| -> Vec<Complex64> { (0..n).map(|i| m[(i, j)]).collect() };
    let q: Vec<Vec<Complex64>> = (0..algebraic).map(|j| col(&qmat, j)).collect();
    let trace: Complex64 = (0..algebraic).map(|j| dot(&q[j], &col(&pq, j))).sum();
    let mq: Vec<Vec<Complex64>> = q.iter().map(|c| op.apply(c)).collect();
    let b = Mat::from_fn(algebraic, algebraic, |i, j| dot(&q[i], &mq[j]));
    let compressed = b.eigenvalues().map_err(|e| SpecmatError::Eigensolver(format!("{e:?}")))?;
    let mean: Complex64 = compressed.iter().sum::<Complex64>() / algebraic as f64;
    let mut shifted = b.clone();
    for i in 0..algebraic {
        shifted[(i, i)] -= mean;
    }
    let scale = b.norm_l2().max(1.0);
    let sv = shifted.singular_values().map_err(|e| SpecmatError::Eigensolver(format!("{e:?}")))?;
    let geometric = algebraic - sv.iter().filter(|&&s| s > 1e-6 * scale).count();
    Ok(MultiplicityProbe { center, radius, nodes, algebraic, geometric, trace, singular_values, compressed })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BetaRow {
    pub beta: f64,
    /// Eigenvalue of the perturbed block in the ℒ convention.
    pub lambda: Complex64,
    /// Eigenvalue of L_β = -i·lambda.
    pub growth: Complex64,
    /// β·growth + 1 - 1/α, the corresponding element of the self-similar spectrum.
    pub self_similar: Complex64,
    pub distance: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BetaScan {
    pub m: f64,
    pub alpha: f64,
    pub n: usize,
    pub reference: Complex64,
    pub rows: Vec<BetaRow>,
}

impl BetaScan {
    pub fn decreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].distance < w[0].distance)
    }

    pub fn csv(&self) -> String {
        let mut csv = crate::io::Csv::new(&["beta", "re_lambda", "im_lambda", "re_ss", "im_ss", "distance"]);
        for r in &self.rows {
            csv.row(&[r.beta, r.lambda.re, r.lambda.im, r.self_similar.re, r.self_similar.im, r.distance]);
        }
        csv.into_string()
    }
}

/// Follow the unstable eigenvalue of ℒₘ to the blocks with the transport
/// term (1/(αβ))(Id + r∂_r), continuing the branch from the largest β down.
pub fn beta_spectrum(op: &OperatorMatrix, reference: Complex64, alpha: f64, betas: &[f64]) -> Result<BetaScan, SpecmatError> {
    if betas.is_empty() || betas[0] <= 0.0 || betas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(SpecmatError::BetaList);
    }
    let base = shift_invert(op, reference, 1e-13)?;
    let mut shift = base.lambda;
    let mut rows = Vec::with_capacity(betas.len());
    for &beta in betas.iter().rev() {
        let pert = op.with_transport(alpha, beta)?;
        let e = shift_invert(&pert, shift, 1e-13)?;
        let edge: f64 = [0, 1, op.n() - 2, op.n() - 1].iter().map(|&j| e.state[j].norm()).fold(0.0, f64::max);
        let peak = e.state.iter().map(|x| x.norm()).fold(0.0, f64::max);
        if edge > 1e-8 * peak {
            return Err(SpecmatError::StencilBoundary(edge / peak));
        }
        shift = e.lambda;
        let growth = e.lambda * Complex64::new(0.0, -1.0);
        rows.push(BetaRow {
            beta,
            lambda: e.lambda,
            growth,
            self_similar: growth * beta + (1.0 - 1.0 / alpha),
            distance: (e.lambda - base.lambda).norm(),
        });
    }
    rows.reverse();
    Ok(BetaScan { m: op.m, alpha, n: op.n(), reference: base.lambda, rows })
}

#[cfg(test)]
mod tests;
