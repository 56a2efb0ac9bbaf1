//! Piecewise Chebyshev interpolants with adaptive splitting.

/// Degree used for every piece.
pub const DEGREE: usize = 24;

#[derive(Debug, Clone)]
pub struct ChebPiece {
    pub a: f64,
    pub b: f64,
    /// Coefficients of `sum c_k T_k(x)`, x in [-1, 1].
    pub coef: Vec<f64>,
}

impl ChebPiece {
    /// Interpolate `f` at the Chebyshev-Lobatto points of [a, b].
    pub fn fit<F: FnMut(f64) -> f64>(a: f64, b: f64, deg: usize, f: &mut F) -> Self {
        let n = deg;
        let nf = n as f64;
        let vals: Vec<f64> = (0..=n)
            .map(|j| {
                let x = (std::f64::consts::PI * j as f64 / nf).cos();
                f(0.5 * (a + b) + 0.5 * (b - a) * x)
            })
            .collect();
        let mut coef = vec![0.0; n + 1];
        for (k, ck) in coef.iter_mut().enumerate() {
            let mut s = 0.0;
            for (j, v) in vals.iter().enumerate() {
                let w = if j == 0 || j == n { 0.5 } else { 1.0 };
                s += w * v * (std::f64::consts::PI * (j * k) as f64 / nf).cos();
            }
            let scale = if k == 0 || k == n { 1.0 / nf } else { 2.0 / nf };
            *ck = s * scale;
        }
        ChebPiece { a, b, coef }
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        let x = (2.0 * t - self.a - self.b) / (self.b - self.a);
        clenshaw(&self.coef, x)
    }

    /// Antiderivative piece vanishing at `a`.
    pub fn antiderivative(&self) -> ChebPiece {
        let c = &self.coef;
        let n = c.len();
        let h = 0.5 * (self.b - self.a);
        let mut out = vec![0.0; n + 1];
        let get = |k: usize| if k < n { c[k] } else { 0.0 };
        out[1] = get(0) - 0.5 * get(2);
        for k in 2..=n {
            out[k] = (get(k - 1) - get(k + 1)) / (2.0 * k as f64);
        }
        for v in out.iter_mut() {
            *v *= h;
        }
        // Fix the constant so the value at x = -1 is zero.
        let at_left: f64 = out
            .iter()
            .enumerate()
            .map(|(k, v)| if k % 2 == 0 { *v } else { -*v })
            .sum();
        out[0] -= at_left;
        ChebPiece { a: self.a, b: self.b, coef: out }
    }

    fn tail(&self) -> f64 {
        let n = self.coef.len();
        self.coef[n.saturating_sub(3)..]
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

#[inline]
fn clenshaw(c: &[f64], x: f64) -> f64 {
    let mut b1 = 0.0;
    let mut b2 = 0.0;
    let x2 = 2.0 * x;
    for &ck in c.iter().skip(1).rev() {
        let b0 = ck + x2 * b1 - b2;
        b2 = b1;
        b1 = b0;
    }
    c[0] + x * b1 - b2
}

/// Contiguous sequence of Chebyshev pieces covering [breaks[0], breaks[last]].
#[derive(Debug, Clone, Default)]
pub struct PiecewiseCheb {
    pub pieces: Vec<ChebPiece>,
}

impl PiecewiseCheb {
    pub fn lower(&self) -> f64 {
        self.pieces[0].a
    }

    pub fn upper(&self) -> f64 {
        self.pieces.last().unwrap().b
    }

    #[inline]
    pub fn locate(&self, t: f64) -> usize {
        let p = &self.pieces;
        let mut lo = 0usize;
        let mut hi = p.len();
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if t < p[mid].a {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        lo
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        self.pieces[self.locate(t)].eval(t)
    }

    /// Break points between pieces (including both ends).
    pub fn breaks(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.pieces.iter().map(|p| p.a).collect();
        v.push(self.upper());
        v
    }
}

/// Adaptive fit of `f` on [a, b]: split until the trailing coefficients are
/// below `tol * scale`. `f(lo, seed, t)` receives the left end of the current
/// piece and the exact value there (`seed`, carried from the previously
/// accepted piece), so callers can run left-to-right recurrences.
pub fn fit_adaptive<F>(
    a: f64,
    b: f64,
    seed: f64,
    tol: f64,
    scale: f64,
    min_width: f64,
    f: &mut F,
) -> Vec<ChebPiece>
where
    F: FnMut(f64, f64, f64) -> f64,
{
    let mut out = Vec::new();
    let mut stack = vec![(a, b)];
    let mut seed = seed;
    while let Some((lo, hi)) = stack.pop() {
        let s0 = seed;
        let piece = ChebPiece::fit(lo, hi, DEGREE, &mut |t| f(lo, s0, t));
        if piece.tail() <= tol * scale || hi - lo <= min_width {
            seed = f(lo, s0, hi);
            out.push(piece);
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((mid, hi));
            stack.push((lo, mid));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolates_exp() {
        let mut f = |_: f64, _: f64, t: f64| (2.0 * t).exp();
        let pcs = fit_adaptive(-1.0, 1.0, 0.0, 1e-15, 1.0, 1e-6, &mut f);
        let pc = PiecewiseCheb { pieces: pcs };
        for i in 0..=100 {
            let t = -1.0 + 0.02 * i as f64;
            assert!((pc.eval(t) - (2.0 * t).exp()).abs() < 1e-13 * (2.0 * t).exp().max(1.0));
        }
    }

    #[test]
    fn antiderivative_matches() {
        let p = ChebPiece::fit(0.3, 1.7, DEGREE, &mut |t: f64| t.cos());
        let q = p.antiderivative();
        for i in 0..=10 {
            let t = 0.3 + 0.14 * i as f64;
            assert!((q.eval(t) - (t.sin() - 0.3f64.sin())).abs() < 1e-14);
        }
    }

    #[test]
    fn splits_on_sharp_feature() {
        let mut f = |_: f64, _: f64, t: f64| (t / 1e-3).tanh();
        let pcs = fit_adaptive(-1.0, 1.0, 0.0, 1e-14, 1.0, 1e-9, &mut f);
        assert!(pcs.len() > 4);
        let pc = PiecewiseCheb { pieces: pcs };
        for i in 0..=1000 {
            let t = -1.0 + 0.002 * i as f64 + 1e-5;
            assert!((pc.eval(t) - (t / 1e-3).tanh()).abs() < 1e-12);
        }
    }
}
