//! Background vortex profiles: the vorticity-gradient function A, the
//! angular-velocity profile Ξ with A = Ξ″ + 2Ξ′, and the quotients A/(Ξ - z)
//! entering Rayleigh's equation.

mod component;
mod validate;

use std::f64::consts::LN_2;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sampled::{uniform_grid, ComplexSamples};
use component::Component;

pub use validate::{Check, ValidationReport, ZeroReport};

/// First zero of A (A′ > 0 there).
pub const INNER_ZERO: f64 = 0.0;
/// Second zero of A (A′ < 0 there).
pub const OUTER_ZERO: f64 = 0.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProfileError {
    #[error("invalid profile parameters: {0}")]
    InvalidParams(String),
    #[error("infeasible constraints: {0}")]
    Infeasible(String),
    #[error("stream function not strictly decreasing: Xi'({t}) = {xi_prime:e}")]
    NonMonotone { t: f64, xi_prime: f64 },
    #[error("potential A/(Xi - z) is singular for real z = {0} inside the range of Xi")]
    SingularPotential(f64),
    #[error("cannot blend profiles: {0}")]
    IncompatibleBlend(String),
}

/// Critical level at which a neutral mode can sit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriticalPoint {
    /// t = 0, where A changes sign from negative to positive.
    #[serde(alias = "a")]
    Inner,
    /// t = 1/2, where A changes sign from positive to negative.
    #[serde(alias = "b")]
    Outer,
}

impl CriticalPoint {
    pub fn location(self) -> f64 {
        match self {
            CriticalPoint::Inner => INNER_ZERO,
            CriticalPoint::Outer => OUTER_ZERO,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            CriticalPoint::Inner => "a",
            CriticalPoint::Outer => "b",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub t_min: f64,
    pub t_max: f64,
    pub n: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { t_min: -10.0, t_max: 20.0, n: 30_001 }
    }
}

impl GridSpec {
    pub fn points(&self) -> Vec<f64> {
        uniform_grid(self.t_min, self.t_max, self.n)
    }
}

fn default_tolerance() -> f64 {
    1e-8
}
fn default_bump_height() -> f64 {
    0.3
}
fn default_bump_shoulder() -> f64 {
    0.25
}
fn default_junction_width() -> f64 {
    0.5
}

/// Parameters of the explicit profile family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileParams {
    /// Decay exponent of the right tail, A = -ᾱ e^{-ᾱ t}.
    pub alpha_bar: f64,
    /// Slope of the linear ramp A = B t just left of the inner zero.
    #[serde(rename = "B")]
    pub slope: f64,
    /// Tolerance used by the class checks.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default)]
    pub grid: GridSpec,
    /// Saturation level of the positive bump, A ≈ h on ]0, 1/2[.
    #[serde(default = "default_bump_height")]
    pub bump_height: f64,
    /// Where the bump starts its cubic descent to zero at 1/2.
    #[serde(default = "default_bump_shoulder")]
    pub bump_shoulder: f64,
    /// Width of the left junction in units of 1/sqrt(B).
    #[serde(default = "default_junction_width")]
    pub junction_width: f64,
}

impl ProfileParams {
    pub fn new(alpha_bar: f64, slope: f64) -> Self {
        ProfileParams {
            alpha_bar,
            slope,
            tolerance: default_tolerance(),
            grid: GridSpec::default(),
            bump_height: default_bump_height(),
            bump_shoulder: default_bump_shoulder(),
            junction_width: default_junction_width(),
        }
    }

    /// The B = 1000, ᾱ = 1/2 profile used throughout the test-suite.
    pub fn reference() -> Self {
        Self::new(0.5, 1000.0)
    }

    pub fn check(&self) -> Result<(), ProfileError> {
        let bad = |m: String| Err(ProfileError::InvalidParams(m));
        if !(self.alpha_bar > 0.0 && self.alpha_bar < 1.0) {
            return bad(format!("alpha_bar = {} must lie in ]0, 1[", self.alpha_bar));
        }
        if !(self.slope > 0.0 && self.slope.is_finite()) {
            return bad(format!("B = {} must be positive", self.slope));
        }
        if !(self.bump_height > 0.0) {
            return bad(format!("bump_height = {} must be positive", self.bump_height));
        }
        if !(self.bump_shoulder > 0.0 && self.bump_shoulder < 0.5) {
            return bad(format!("bump_shoulder = {} must lie in ]0, 1/2[", self.bump_shoulder));
        }
        if !(self.junction_width > 0.0) {
            return bad(format!("junction_width = {} must be positive", self.junction_width));
        }
        if !(self.tolerance > 0.0) {
            return bad(format!("tolerance = {} must be positive", self.tolerance));
        }
        if self.grid.n < 2 || !(self.grid.t_max > self.grid.t_min) {
            return bad("grid needs n >= 2 and t_max > t_min".into());
        }
        Ok(())
    }

    /// Whether the explicit lower bound λ_a ≥ √B - 2π² is known to apply (B ≥ 81).
    pub fn bound_applies(&self) -> bool {
        self.slope >= 81.0
    }

    /// (left edge of the left junction, start of the linear ramp).
    pub fn junction_points(&self) -> (f64, f64) {
        let t1 = -1.0 / self.slope.sqrt();
        (t1 - self.junction_width / self.slope.sqrt(), t1)
    }
}

/// Serializable record sufficient to rebuild a profile bit-for-bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileDescriptor {
    pub components: Vec<ComponentRecord>,
    /// Additive constant (only used by the flat test profile).
    #[serde(default)]
    pub level: f64,
    pub summary: ProfileSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentRecord {
    pub weight: f64,
    pub params: ProfileParams,
    /// Left-tail amplitude c0 of this component.
    pub tail_amplitude: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileSummary {
    pub alpha_bar: f64,
    pub tail_amplitude: f64,
    pub right_tail_coefficient: f64,
    pub left_edge: f64,
    pub xi_minus_inf: f64,
    pub xi_a: f64,
    pub xi_b: f64,
    pub xi_prime_a: f64,
    pub xi_prime_b: f64,
    pub a_prime_a: f64,
    pub a_prime_b: f64,
}

/// A background profile: a convex combination of explicit components, or the
/// flat profile A ≡ 0.
#[derive(Debug, Clone)]
pub struct Profile {
    parts: Vec<(f64, Arc<Component>)>,
    level: f64,
    alpha_bar: f64,
}

impl Profile {
    /// Build the explicit profile, tuning the left-tail amplitude so that
    /// ∫_{-∞}^0 e^{2t} A dt = -1, and check monotonicity and max A ≤ 1/e.
    pub fn build(params: &ProfileParams) -> Result<Profile, ProfileError> {
        params.check()?;
        let comp = Component::tuned(params)?;
        let p = Profile::from_parts(vec![(1.0, Arc::new(comp))]);
        p.check_feasible()?;
        Ok(p)
    }

    /// Assemble with a prescribed left-tail amplitude and no constraint
    /// enforcement. Useful for perturbation studies.
    pub fn assemble_with_tail(params: &ProfileParams, tail_amplitude: f64) -> Result<Profile, ProfileError> {
        params.check()?;
        if !(tail_amplitude.is_finite() && tail_amplitude >= 0.0) {
            return Err(ProfileError::InvalidParams(format!(
                "tail amplitude {tail_amplitude} must be non-negative"
            )));
        }
        let comp = Component::assemble(params, tail_amplitude)?;
        Ok(Profile::from_parts(vec![(1.0, Arc::new(comp))]))
    }

    /// A ≡ 0 and Ξ ≡ `level`.
    pub fn flat(level: f64) -> Profile {
        Profile { parts: Vec::new(), level, alpha_bar: 0.5 }
    }

    /// (1 - σ) p0 + σ p1 in both A and Ξ.
    pub fn interpolate(p0: &Profile, p1: &Profile, sigma: f64) -> Result<Profile, ProfileError> {
        Profile::blend(&[(1.0 - sigma, p0), (sigma, p1)])
    }

    /// Weighted combination Σ w_i p_i with non-negative weights summing to one.
    pub fn blend(members: &[(f64, &Profile)]) -> Result<Profile, ProfileError> {
        if members.is_empty() {
            return Err(ProfileError::IncompatibleBlend("no members".into()));
        }
        let total: f64 = members.iter().map(|m| m.0).sum();
        if members.iter().any(|m| m.0 < 0.0) || (total - 1.0).abs() > 1e-12 {
            return Err(ProfileError::IncompatibleBlend(format!(
                "weights must be non-negative and sum to one (sum = {total})"
            )));
        }
        let ab = members[0].1.alpha_bar;
        let mut parts: Vec<(f64, Arc<Component>)> = Vec::new();
        let mut level = 0.0;
        for (w, p) in members {
            if p.parts.is_empty() || (p.alpha_bar - ab).abs() > 0.0 {
                return Err(ProfileError::IncompatibleBlend(
                    "members must be explicit profiles sharing alpha_bar".into(),
                ));
            }
            level += w * p.level;
            for (wi, c) in &p.parts {
                let weight = w * wi;
                if weight == 0.0 {
                    continue;
                }
                if let Some(slot) = parts.iter_mut().find(|(_, d)| Arc::ptr_eq(d, c)) {
                    slot.0 += weight;
                } else {
                    parts.push((weight, c.clone()));
                }
            }
        }
        Ok(Profile { parts, level, alpha_bar: ab })
    }

    fn from_parts(parts: Vec<(f64, Arc<Component>)>) -> Profile {
        let alpha_bar = parts[0].1.params.alpha_bar;
        Profile { parts, level: 0.0, alpha_bar }
    }

    pub fn from_descriptor(d: &ProfileDescriptor) -> Result<Profile, ProfileError> {
        if d.components.is_empty() {
            return Ok(Profile::flat(d.level));
        }
        let mut parts = Vec::new();
        for c in &d.components {
            c.params.check()?;
            parts.push((c.weight, Arc::new(Component::assemble(&c.params, c.tail_amplitude)?)));
        }
        let mut p = Profile::from_parts(parts);
        p.level = d.level;
        Ok(p)
    }

    pub fn descriptor(&self) -> ProfileDescriptor {
        ProfileDescriptor {
            components: self
                .parts
                .iter()
                .map(|(w, c)| ComponentRecord { weight: *w, params: c.params.clone(), tail_amplitude: c.c0 })
                .collect(),
            level: self.level,
            summary: self.summary(),
        }
    }

    pub fn summary(&self) -> ProfileSummary {
        ProfileSummary {
            alpha_bar: self.alpha_bar,
            tail_amplitude: self.tail_amplitude(),
            right_tail_coefficient: self.right_tail_coefficient(),
            left_edge: self.left_edge(),
            xi_minus_inf: self.xi_minus_inf(),
            xi_a: self.xi_at(CriticalPoint::Inner),
            xi_b: self.xi_at(CriticalPoint::Outer),
            xi_prime_a: self.xi_prime(INNER_ZERO),
            xi_prime_b: self.xi_prime(OUTER_ZERO),
            a_prime_a: self.a_prime(INNER_ZERO),
            a_prime_b: self.a_prime(OUTER_ZERO),
        }
    }

    pub fn is_flat(&self) -> bool {
        self.parts.is_empty()
    }

    /// Parameters of the first component (the only one unless blended).
    pub fn params(&self) -> Option<&ProfileParams> {
        self.parts.first().map(|(_, c)| &c.params)
    }

    pub fn is_blend(&self) -> bool {
        self.parts.len() > 1
    }

    pub fn alpha_bar(&self) -> f64 {
        self.alpha_bar
    }

    /// c0 in A = -8 c0 e^{2t} for t ≤ left_edge.
    pub fn tail_amplitude(&self) -> f64 {
        self.parts.iter().map(|(w, c)| w * c.c0).sum()
    }

    /// c1 in Ξ = c1 e^{-2t} + e^{-ᾱt}/(2-ᾱ) for t ≥ ln 2.
    pub fn right_tail_coefficient(&self) -> f64 {
        self.parts.iter().map(|(w, c)| w * c.c1).sum()
    }

    /// Point left of which A is the pure exponential.
    pub fn left_edge(&self) -> f64 {
        if self.is_flat() {
            return 0.0;
        }
        self.parts.iter().map(|(_, c)| c.left_edge).fold(f64::INFINITY, f64::min)
    }

    /// Point right of which A is the pure power tail.
    pub fn right_edge(&self) -> f64 {
        LN_2
    }

    /// Validation grid from the (first) component parameters.
    pub fn grid(&self) -> GridSpec {
        self.params().map(|p| p.grid).unwrap_or_default()
    }

    pub fn tolerance(&self) -> f64 {
        self.params().map(|p| p.tolerance).unwrap_or(default_tolerance())
    }

    #[inline]
    pub fn a(&self, t: f64) -> f64 {
        self.parts.iter().map(|(w, c)| w * c.a(t)).sum()
    }

    #[inline]
    pub fn a_prime(&self, t: f64) -> f64 {
        self.parts.iter().map(|(w, c)| w * c.a_prime(t)).sum()
    }

    #[inline]
    pub fn xi(&self, t: f64) -> f64 {
        self.level + self.parts.iter().map(|(w, c)| w * c.xi(t)).sum::<f64>()
    }

    #[inline]
    pub fn xi_prime(&self, t: f64) -> f64 {
        self.parts.iter().map(|(w, c)| w * c.xi_prime(t)).sum()
    }

    pub fn xi_minus_inf(&self) -> f64 {
        self.level + self.parts.iter().map(|(w, c)| w * c.xi_minus_inf).sum::<f64>()
    }

    pub fn xi_at(&self, c: CriticalPoint) -> f64 {
        self.xi(c.location())
    }

    /// Ξ(t) - Ξ(s) evaluated without cancellation when t and s are close.
    pub fn xi_difference(&self, s: f64, t: f64) -> f64 {
        if (t - s).abs() > 1e-4 {
            return self.xi(t) - self.xi(s);
        }
        self.parts.iter().map(|(w, c)| w * c.xi_increment(s, t)).sum()
    }

    /// Break points of the tabulated Ξ′ (for quadrature).
    pub fn breaks(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.parts.iter().flat_map(|(_, c)| c.xi_prime_breaks()).collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }

    /// Q_c(t) = A(t)/(Ξ(t) - Ξ(c)) with the removable singularity at t = c
    /// filled by A′(c)/Ξ′(c).
    #[inline]
    pub fn critical_quotient(&self, c: CriticalPoint, t: f64) -> f64 {
        if self.is_flat() {
            return 0.0;
        }
        let tc = c.location();
        if t == tc {
            return self.a_prime(tc) / self.xi_prime(tc);
        }
        self.a(t) / self.xi_difference(tc, t)
    }

    /// Evaluator for t ↦ A(t)/(Ξ(t) - z).
    pub fn potential(&self, z: Complex64) -> Result<Potential<'_>, ProfileError> {
        if self.is_flat() {
            return Ok(Potential { profile: self, kind: PotentialKind::Zero });
        }
        if z.im == 0.0 {
            for c in [CriticalPoint::Inner, CriticalPoint::Outer] {
                let level = self.xi_at(c);
                if (z.re - level).abs() <= 1e-14 * level.abs().max(1.0) {
                    return Ok(Potential { profile: self, kind: PotentialKind::Critical(c) });
                }
            }
            if z.re >= 0.0 && z.re <= self.xi_minus_inf() {
                return Err(ProfileError::SingularPotential(z.re));
            }
        }
        Ok(Potential { profile: self, kind: PotentialKind::Shifted(z) })
    }

    /// Samples of A/(Ξ - z) on the profile grid.
    pub fn rayleigh_potential(&self, z: Complex64) -> Result<ComplexSamples, ProfileError> {
        let q = self.potential(z)?;
        Ok(ComplexSamples::tabulate(self.grid().points(), |t| q.eval(t)))
    }

    /// Truncation points (L⁻, L⁺) beyond which ∫|A/(Ξ - z)| is below `mass`
    /// on each side, using the exact tails of A.
    pub fn tail_cutoffs(&self, z: Complex64, mass: f64) -> Result<(f64, f64), ProfileError> {
        if self.is_flat() {
            return Ok((-10.0, 10.0));
        }
        let dist = |lo: f64, hi: f64| {
            let x = z.re.clamp(lo, hi);
            Complex64::new(x - z.re, -z.im).norm()
        };
        let c0 = self.tail_amplitude();
        let inf = self.xi_minus_inf();
        let mut left = self.left_edge();
        for _ in 0..6 {
            let d = dist(self.xi(left), inf);
            if d <= 0.0 {
                return Err(ProfileError::SingularPotential(z.re));
            }
            left = (0.5 * (mass * d / (4.0 * c0)).ln()).min(self.left_edge());
        }
        let ab = self.alpha_bar;
        let mut right = LN_2;
        for _ in 0..6 {
            let d = dist(0.0, self.xi(right));
            if d <= 0.0 {
                return Err(ProfileError::SingularPotential(z.re));
            }
            right = (-(mass * d).ln() / ab).max(LN_2);
        }
        if !(left > -200.0 && right < 2000.0) {
            return Err(ProfileError::Infeasible(format!(
                "tail mass {mass:e} needs truncation at ({left}, {right})"
            )));
        }
        Ok((left, right))
    }

    /// Smallest length scale of A (width of the inner ramp, h/B).
    pub fn feature_scale(&self) -> f64 {
        self.parts
            .iter()
            .map(|(_, c)| c.params.bump_height / c.params.slope)
            .fold(1.0, f64::min)
    }

    /// `t,Xi,XiPrime,A` table on the profile grid.
    pub fn csv_table(&self) -> String {
        let mut out = String::from("t,Xi,XiPrime,A\n");
        for t in self.grid().points() {
            out.push_str(&format!(
                "{},{},{},{}\n",
                crate::io::fmt_f64(t),
                crate::io::fmt_f64(self.xi(t)),
                crate::io::fmt_f64(self.xi_prime(t)),
                crate::io::fmt_f64(self.a(t))
            ));
        }
        out
    }

    fn check_feasible(&self) -> Result<(), ProfileError> {
        let cap = (-1.0f64).exp();
        let peak = validate::max_a(self);
        if peak > cap {
            return Err(ProfileError::Infeasible(format!("max A = {peak} exceeds 1/e")));
        }
        let grid = self.grid().points();
        if let Some(&t) = grid.iter().find(|&&t| self.xi_prime(t) >= 0.0) {
            return Err(ProfileError::NonMonotone { t, xi_prime: self.xi_prime(t) });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
enum PotentialKind {
    Zero,
    Critical(CriticalPoint),
    Shifted(Complex64),
}

/// t ↦ A(t)/(Ξ(t) - z) for a fixed admissible z.
#[derive(Debug, Clone, Copy)]
pub struct Potential<'a> {
    profile: &'a Profile,
    kind: PotentialKind,
}

impl Potential<'_> {
    #[inline]
    pub fn eval(&self, t: f64) -> Complex64 {
        match self.kind {
            PotentialKind::Zero => Complex64::new(0.0, 0.0),
            PotentialKind::Critical(c) => Complex64::new(self.profile.critical_quotient(c, t), 0.0),
            PotentialKind::Shifted(z) => {
                let d = Complex64::new(self.profile.xi(t), 0.0) - z;
                Complex64::new(self.profile.a(t), 0.0) / d
            }
        }
    }

    pub fn critical(&self) -> Option<CriticalPoint> {
        match self.kind {
            PotentialKind::Critical(c) => Some(c),
            _ => None,
        }
    }
}
