//! Adaptive Gauss-Kronrod (7/15) quadrature.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadError {
    #[error("adaptive quadrature did not converge on [{a}, {b}] (estimated error {err:e})")]
    NotConverged { a: f64, b: f64, err: f64 },
    #[error("integrand returned a non-finite value at x = {0}")]
    NonFinite(f64),
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_5,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_48,
    0.000000000000000000000000000000000,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_19,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_42,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// One 15-point Kronrod evaluation; returns (integral, error estimate).
pub fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Result<(f64, f64), QuadError> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    if !fc.is_finite() {
        return Err(QuadError::NonFinite(c));
    }
    let mut rk = fc * WGK[7];
    let mut rg = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let f1 = f(c - x);
        let f2 = f(c + x);
        if !f1.is_finite() {
            return Err(QuadError::NonFinite(c - x));
        }
        if !f2.is_finite() {
            return Err(QuadError::NonFinite(c + x));
        }
        rk += WGK[j] * (f1 + f2);
        if j % 2 == 1 {
            rg += WG[j / 2] * (f1 + f2);
        }
    }
    Ok((rk * h, ((rk - rg) * h).abs()))
}

/// Adaptive integration of `f` over [a, b] to `abs_tol + rel_tol * |I|`.
pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<f64, QuadError> {
    integrate_breaks(&mut f, &[a, b], abs_tol, rel_tol)
}

/// Adaptive integration over consecutive intervals of `breaks` (sorted).
pub fn integrate_breaks<F: FnMut(f64) -> f64>(
    f: &mut F,
    breaks: &[f64],
    abs_tol: f64,
    rel_tol: f64,
) -> Result<f64, QuadError> {
    const MAX_INTERVALS: usize = 20_000;
    let mut work: Vec<(f64, f64, f64, f64)> = Vec::new();
    let mut total = 0.0;
    let mut total_err = 0.0;
    for w in breaks.windows(2) {
        if w[1] > w[0] {
            let (v, e) = gk15(f, w[0], w[1])?;
            total += v;
            total_err += e;
            work.push((w[0], w[1], v, e));
        }
    }
    while total_err > abs_tol.max(rel_tol * total.abs()) {
        if work.len() >= MAX_INTERVALS {
            let (a, b) = (breaks[0], *breaks.last().unwrap());
            return Err(QuadError::NotConverged { a, b, err: total_err });
        }
        let (idx, _) = work
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .unwrap();
        let (a, b, v, e) = work.swap_remove(idx);
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            return Err(QuadError::NotConverged { a, b, err: total_err });
        }
        let (v1, e1) = gk15(f, a, m)?;
        let (v2, e2) = gk15(f, m, b)?;
        total += v1 + v2 - v;
        total_err += e1 + e2 - e;
        work.push((a, m, v1, e1));
        work.push((m, b, v2, e2));
    }
    // Re-sum in interval order so the result does not depend on refinement history.
    work.sort_by(|x, y| x.0.total_cmp(&y.0));
    Ok(work.iter().map(|w| w.2).sum())
}
