//! Class membership checks for a built profile.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use super::Profile;
use crate::num::{quad, roots};
use crate::sampled::uniform_grid;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Measured quantity (residual, count, minimum...).
    pub value: f64,
    /// Threshold the value was compared against.
    pub bound: f64,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZeroReport {
    pub t: f64,
    pub a_prime: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
    pub zeros: Vec<ZeroReport>,
    /// min over the grid of -Ξ′.
    pub min_neg_xi_prime: f64,
    /// ∫_{-∞}^0 e^{2t} A dt + 1.
    pub moment_residual: f64,
    pub max_a: f64,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }
}

fn check(name: &str, passed: bool, value: f64, bound: f64, detail: String) -> Check {
    Check { name: name.to_string(), passed, value, bound, detail }
}

/// max A sampled with step 1e-3 on [-2, 2].
pub(crate) fn max_a(p: &Profile) -> f64 {
    uniform_grid(-2.0, 2.0, 4001).into_iter().map(|t| p.a(t)).fold(f64::NEG_INFINITY, f64::max)
}

/// ∫_{-∞}^0 e^{2t} A(t) dt by adaptive quadrature over the profile breaks.
pub(crate) fn left_moment(p: &Profile) -> f64 {
    if p.is_flat() {
        return 0.0;
    }
    let lo = p.left_edge();
    let mut breaks: Vec<f64> = p.breaks().into_iter().filter(|&b| b > lo && b < 0.0).collect();
    breaks.insert(0, lo);
    breaks.push(0.0);
    let tail = -2.0 * p.tail_amplitude() * (4.0 * lo).exp();
    let mut f = |t: f64| (2.0 * t).exp() * p.a(t);
    let body = quad::integrate_breaks(&mut f, &breaks, 1e-15, 1e-14).unwrap_or(f64::NAN);
    tail + body
}

impl Profile {
    fn fd_step(&self) -> f64 {
        self.parts
            .iter()
            .map(|(_, c)| 0.02 * c.params.bump_height / c.params.slope)
            .fold(1e-4, f64::min)
    }

    /// Run every class check and collect the results.
    pub fn validate(&self) -> ValidationReport {
        let grid = self.grid().points();
        let tol = self.tolerance();
        let mut checks = Vec::new();
        let c0 = self.tail_amplitude();
        let ab = self.alpha_bar();
        let xi_inf = self.xi_minus_inf();

        // (i) exponential left tail.
        let edge = self.left_edge();
        let mut left_err: f64 = 0.0;
        for &t in grid.iter().filter(|&&t| t <= edge) {
            let e = (2.0 * t).exp();
            left_err = left_err.max((self.a(t) + 8.0 * c0 * e).abs() / e);
            left_err = left_err.max((self.xi(t) - xi_inf + c0 * e).abs());
        }
        checks.push(check(
            "left_tail",
            c0 > 0.0 && left_err <= 1e-10,
            left_err,
            1e-10,
            format!("c0 = {c0}, A = -8 c0 e^(2t) and Xi - Xi(-inf) = -c0 e^(2t) for t <= {edge}"),
        ));

        // (ii) power right tail, including g = Ξ′ + 2Ξ = e^{-ᾱt}.
        let c1 = self.right_tail_coefficient();
        let mut right_err: f64 = 0.0;
        for &t in grid.iter().filter(|&&t| t >= LN_2) {
            let e = (-ab * t).exp();
            let xi_tail = c1 * (-2.0 * t).exp() + e / (2.0 - ab);
            right_err = right_err.max((self.a(t) + ab * e).abs());
            right_err = right_err.max((self.xi(t) - xi_tail).abs());
            right_err = right_err.max((self.xi_prime(t) + 2.0 * self.xi(t) - e).abs());
        }
        checks.push(check(
            "right_tail",
            !self.is_flat() && right_err <= 1e-10,
            right_err,
            1e-10,
            format!("A = -alpha_bar e^(-alpha_bar t), Xi' + 2 Xi = e^(-alpha_bar t) for t >= ln 2 (c1 = {c1})"),
        ));

        // (iii) exactly two zeros, rising then falling.
        let zeros = self.zeros_of_a(&grid);
        let shape_ok = zeros.len() == 2 && zeros[0].a_prime > 0.0 && zeros[1].a_prime < 0.0;
        let at_expected = zeros.len() == 2
            && (zeros[0].t - super::INNER_ZERO).abs() < 1e-10
            && (zeros[1].t - super::OUTER_ZERO).abs() < 1e-10;
        checks.push(check(
            "two_zeros",
            shape_ok && at_expected,
            zeros.len() as f64,
            2.0,
            format!("zeros of A at {:?}", zeros.iter().map(|z| z.t).collect::<Vec<_>>()),
        ));

        // (iv) Ξ′ < 0 and Ξ strictly decreasing.
        let min_neg_xi_prime = grid.iter().map(|&t| -self.xi_prime(t)).fold(f64::INFINITY, f64::min);
        let max_step = grid
            .windows(2)
            .map(|w| self.xi(w[1]) - self.xi(w[0]))
            .fold(f64::NEG_INFINITY, f64::max);
        checks.push(check(
            "decreasing",
            min_neg_xi_prime > 0.0 && max_step < 0.0,
            min_neg_xi_prime,
            0.0,
            format!("min(-Xi') = {min_neg_xi_prime:e}, max increment of Xi = {max_step:e}"),
        ));

        // (v) moment condition.
        let moment = left_moment(self);
        let moment_residual = moment + 1.0;
        checks.push(check(
            "moment",
            moment_residual.abs() <= tol,
            moment_residual.abs(),
            tol,
            format!("int_(-inf)^0 e^(2t) A dt = {moment}"),
        ));

        // (vi) max A ≤ 1/e.
        let peak = max_a(self);
        let cap = (-1.0f64).exp();
        checks.push(check("max_a", peak <= cap, peak, cap, format!("max A on [-2, 2] = {peak}")));

        // A = Ξ″ + 2Ξ′ with Ξ″ by five-point differences of Ξ′.
        let d = self.fd_step();
        let mut identity: f64 = 0.0;
        let mut worst = 0.0;
        for &t in &grid {
            let xpp = (self.xi_prime(t - 2.0 * d) - 8.0 * self.xi_prime(t - d) + 8.0 * self.xi_prime(t + d)
                - self.xi_prime(t + 2.0 * d))
                / (12.0 * d);
            let a = self.a(t);
            let r = (a - xpp - 2.0 * self.xi_prime(t)).abs() / (1.0 + a.abs());
            if r > identity {
                identity = r;
                worst = t;
            }
        }
        checks.push(check(
            "identity",
            identity <= 1e-8,
            identity,
            1e-8,
            format!("max |A - Xi'' - 2 Xi'|/(1 + |A|) at t = {worst}"),
        ));

        ValidationReport { checks, zeros, min_neg_xi_prime, moment_residual, max_a: peak }
    }

    fn zeros_of_a(&self, grid: &[f64]) -> Vec<ZeroReport> {
        let mut out = Vec::new();
        let mut last: Option<(f64, f64)> = None;
        for &t in grid {
            let v = self.a(t);
            if v == 0.0 {
                continue;
            }
            if let Some((tp, vp)) = last {
                if vp.signum() != v.signum() {
                    let r = roots::brent(|s| self.a(s), tp, t, 1e-15, 200).unwrap_or(0.5 * (tp + t));
                    out.push(ZeroReport { t: r, a_prime: self.a_prime(r) });
                }
            }
            last = Some((t, v));
        }
        out
    }
}
