//! One explicit large-slope profile: A is assembled from analytic pieces and
//! C² quintic junctions, and Ξ′, Ξ are tabulated as piecewise Chebyshev series.

use std::f64::consts::LN_2;

use super::{ProfileError, ProfileParams};
use crate::num::cheb::{fit_adaptive, ChebPiece, PiecewiseCheb};
use crate::num::gauss;

/// Quintic in u = (t - x0) / w matching value, slope and curvature at both ends.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Quintic {
    x0: f64,
    w: f64,
    c: [f64; 6],
}

impl Quintic {
    pub(crate) fn hermite(x0: f64, x1: f64, left: [f64; 3], right: [f64; 3]) -> Self {
        let w = x1 - x0;
        let p0 = left[0];
        let p1 = left[1] * w;
        let p2 = 0.5 * left[2] * w * w;
        let y1 = right[0] - (p0 + p1 + p2);
        let d1 = right[1] * w - (p1 + 2.0 * p2);
        let s1 = right[2] * w * w - 2.0 * p2;
        let c3 = 10.0 * y1 - 4.0 * d1 + 0.5 * s1;
        let c4 = -15.0 * y1 + 7.0 * d1 - s1;
        let c5 = 6.0 * y1 - 3.0 * d1 + 0.5 * s1;
        Quintic { x0, w, c: [p0, p1, p2, c3, c4, c5] }
    }

    #[inline]
    pub(crate) fn value(&self, t: f64) -> f64 {
        let u = (t - self.x0) / self.w;
        let c = &self.c;
        c[0] + u * (c[1] + u * (c[2] + u * (c[3] + u * (c[4] + u * c[5]))))
    }

    #[inline]
    pub(crate) fn slope(&self, t: f64) -> f64 {
        let u = (t - self.x0) / self.w;
        let c = &self.c;
        (c[1] + u * (2.0 * c[2] + u * (3.0 * c[3] + u * (4.0 * c[4] + u * 5.0 * c[5])))) / self.w
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Component {
    pub params: ProfileParams,
    /// Amplitude of the left tail, A = -8 c0 e^{2t}.
    pub c0: f64,
    /// Left end of the linear ramp, -1/sqrt(B).
    pub ramp_start: f64,
    /// Left end of the left junction.
    pub left_edge: f64,
    left: Quintic,
    right: Quintic,
    xi_prime: PiecewiseCheb,
    xi: PiecewiseCheb,
    /// Coefficient of e^{-2t} in the right tail of Ξ.
    pub c1: f64,
    pub xi_minus_inf: f64,
}

/// Saturating ramp x (1 + x⁴)^{-1/4}: slope 1 and vanishing second to fourth
/// derivatives at 0, so A is C⁴ across the inner zero.
#[inline]
fn ramp(x: f64) -> f64 {
    if x.abs() > 1e30 {
        return x.signum();
    }
    x / (1.0 + x.powi(4)).powf(0.25)
}

#[inline]
fn ramp_slope(x: f64) -> f64 {
    if x.abs() > 1e30 {
        return 0.0;
    }
    (1.0 + x.powi(4)).powf(-1.25)
}

/// Value, slope and curvature of the bump at t = 1/2 from the left.
fn bump_end(p: &ProfileParams) -> [f64; 3] {
    let h = p.bump_height;
    let d = 0.5 - p.bump_shoulder;
    let x = p.slope * 0.5 / h;
    let th = h * ramp(x);
    let dth = p.slope * ramp_slope(x);
    [0.0, -3.0 * th / d, -6.0 * dth / d - 6.0 * th / (d * d)]
}

fn right_junction(p: &ProfileParams) -> Quintic {
    let ab = p.alpha_bar;
    let e = ab * 2f64.powf(-ab);
    Quintic::hermite(0.5, LN_2, bump_end(p), [-e, ab * e, -ab * ab * e])
}

fn left_junction(p: &ProfileParams, c0: f64, m0: f64, t1: f64) -> Quintic {
    let v = -8.0 * c0 * (2.0 * m0).exp();
    Quintic::hermite(m0, t1, [v, 2.0 * v, 4.0 * v], [p.slope * t1, p.slope, 0.0])
}

impl Component {
    /// Tune c0 for ∫_{-∞}^0 e^{2t} A dt = -1 and assemble.
    pub(crate) fn tuned(params: &ProfileParams) -> Result<Self, ProfileError> {
        let (m0, t1) = params.junction_points();
        // The constraint is affine in c0.
        let moment = |c0: f64| {
            let left = left_junction(params, c0, m0, t1);
            let tail = -2.0 * c0 * (4.0 * m0).exp();
            let blend = gauss::gl32().integrate(m0, t1, |s| (2.0 * s).exp() * left.value(s));
            let ramp = params.slope * (-0.25 - (2.0 * t1).exp() * (0.5 * t1 - 0.25));
            tail + blend + ramp
        };
        let i0 = moment(0.0);
        let i1 = moment(1.0);
        let c0 = (-1.0 - i0) / (i1 - i0);
        if !(c0.is_finite() && c0 > 0.0) {
            return Err(ProfileError::Infeasible(format!(
                "left-tail amplitude solving the moment condition is {c0}, must be positive"
            )));
        }
        Self::assemble(params, c0)
    }

    /// Assemble with a prescribed left-tail amplitude (no tuning).
    pub(crate) fn assemble(params: &ProfileParams, c0: f64) -> Result<Self, ProfileError> {
        let (m0, t1) = params.junction_points();
        let mut comp = Component {
            params: params.clone(),
            c0,
            ramp_start: t1,
            left_edge: m0,
            left: left_junction(params, c0, m0, t1),
            right: right_junction(params),
            xi_prime: PiecewiseCheb::default(),
            xi: PiecewiseCheb::default(),
            c1: 0.0,
            xi_minus_inf: 0.0,
        };
        comp.integrate_stream_function();
        Ok(comp)
    }

    #[inline]
    pub(crate) fn a(&self, t: f64) -> f64 {
        let p = &self.params;
        if t <= self.left_edge {
            -8.0 * self.c0 * (2.0 * t).exp()
        } else if t <= self.ramp_start {
            self.left.value(t)
        } else if t <= 0.0 {
            p.slope * t
        } else if t <= 0.5 {
            let th = p.bump_height * ramp(p.slope * t / p.bump_height);
            if t <= p.bump_shoulder {
                th
            } else {
                let u = (t - p.bump_shoulder) / (0.5 - p.bump_shoulder);
                th * (1.0 - u * u * u)
            }
        } else if t <= LN_2 {
            self.right.value(t)
        } else {
            -p.alpha_bar * (-p.alpha_bar * t).exp()
        }
    }

    #[inline]
    pub(crate) fn a_prime(&self, t: f64) -> f64 {
        let p = &self.params;
        if t <= self.left_edge {
            -16.0 * self.c0 * (2.0 * t).exp()
        } else if t <= self.ramp_start {
            self.left.slope(t)
        } else if t <= 0.0 {
            p.slope
        } else if t <= 0.5 {
            let x = p.slope * t / p.bump_height;
            let dth = p.slope * ramp_slope(x);
            if t <= p.bump_shoulder {
                dth
            } else {
                let d = 0.5 - p.bump_shoulder;
                let u = (t - p.bump_shoulder) / d;
                let th = p.bump_height * ramp(x);
                dth * (1.0 - u * u * u) - 3.0 * th * u * u / d
            }
        } else if t <= LN_2 {
            self.right.slope(t)
        } else {
            p.alpha_bar * p.alpha_bar * (-p.alpha_bar * t).exp()
        }
    }

    #[inline]
    pub(crate) fn xi_prime(&self, t: f64) -> f64 {
        if t <= self.left_edge {
            -2.0 * self.c0 * (2.0 * t).exp()
        } else if t >= LN_2 {
            let ab = self.params.alpha_bar;
            -2.0 * self.c1 * (-2.0 * t).exp() - ab * (-ab * t).exp() / (2.0 - ab)
        } else {
            self.xi_prime.eval(t)
        }
    }

    #[inline]
    pub(crate) fn xi(&self, t: f64) -> f64 {
        if t <= self.left_edge {
            self.xi_minus_inf - self.c0 * (2.0 * t).exp()
        } else if t >= LN_2 {
            let ab = self.params.alpha_bar;
            self.c1 * (-2.0 * t).exp() + (-ab * t).exp() / (2.0 - ab)
        } else {
            self.xi.eval(t)
        }
    }

    /// ∫_c^t Ξ′ without cancellation, for |t - c| small.
    pub(crate) fn xi_increment(&self, c: f64, t: f64) -> f64 {
        let (lo, hi, sign) = if t >= c { (c, t, 1.0) } else { (t, c, -1.0) };
        let rule = gauss::gl16();
        let mut sum = 0.0;
        let mut a = lo;
        while a < hi {
            let b = if a < self.left_edge || a >= LN_2 || self.xi_prime.pieces.is_empty() {
                hi
            } else {
                let idx = self.xi_prime.locate(a);
                self.xi_prime.pieces[idx].b.min(hi)
            };
            let b = if b <= a { hi } else { b };
            sum += rule.integrate(a, b, |s| self.xi_prime(s));
            a = b;
        }
        sign * sum
    }

    fn segments(&self) -> [f64; 6] {
        [self.left_edge, self.ramp_start, 0.0, self.params.bump_shoulder, 0.5, LN_2]
    }

    fn integrate_stream_function(&mut self) {
        // Ξ′(t) = e^{-2(t-lo)} Ξ′(lo) + ∫_lo^t e^{-2(t-s)} A(s) ds, seeded from the exact left tail.
        let seed0 = -2.0 * self.c0 * (2.0 * self.left_edge).exp();
        let mut pieces: Vec<ChebPiece> = Vec::new();
        let mut seed = seed0;
        let tol = 1e-14;
        {
            let this = &*self;
            let mut exact = |lo: f64, s0: f64, t: f64| -> f64 {
                if t == lo {
                    return s0;
                }
                let growth = gauss::gl32().integrate(lo, t, |s| (-2.0 * (t - s)).exp() * this.a(s));
                (-2.0 * (t - lo)).exp() * s0 + growth
            };
            for w in this.segments().windows(2) {
                let seg = fit_adaptive(w[0], w[1], seed, tol, 1.0, 1e-10, &mut exact);
                let last = seg.last().expect("non-empty segment");
                seed = exact(last.a, last.eval(last.a), w[1]);
                pieces.extend(seg);
            }
        }
        self.xi_prime = PiecewiseCheb { pieces };
        let end = self.xi_prime.eval(LN_2);
        let ab = self.params.alpha_bar;
        self.c1 = -2.0 * (end + ab * 2f64.powf(-ab) / (2.0 - ab));
        let mut value = 0.25 * self.c1 + 2f64.powf(-ab) / (2.0 - ab);
        let mut xi_pieces: Vec<ChebPiece> = Vec::with_capacity(self.xi_prime.pieces.len());
        for p in self.xi_prime.pieces.iter().rev() {
            let mut anti = p.antiderivative();
            let offset = value - anti.eval(anti.b);
            anti.coef[0] += offset;
            value = offset;
            xi_pieces.push(anti);
        }
        xi_pieces.reverse();
        self.xi = PiecewiseCheb { pieces: xi_pieces };
        self.xi_minus_inf = value + self.c0 * (2.0 * self.left_edge).exp();
    }

    pub(crate) fn xi_prime_breaks(&self) -> Vec<f64> {
        self.xi_prime.breaks()
    }
}
