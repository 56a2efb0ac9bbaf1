//! One-dimensional graded meshes t = T(s) with s uniform.

use serde::{Deserialize, Serialize};

/// Mesh clustering rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeshMap {
    Uniform,
    /// t = center + scale * sinh(s): spacing ~ scale * ds near `center`.
    Sinh { center: f64, scale: f64 },
    /// Density 1 + sum_i k_i / (1 + ((t - c_i) / w_i)^2).
    Density { features: Vec<Feature> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Feature {
    pub center: f64,
    pub width: f64,
    pub strength: f64,
}

#[derive(Debug, Clone)]
pub struct Mesh {
    pub t: Vec<f64>,
    /// dT/ds at each node.
    pub jac: Vec<f64>,
    pub ds: f64,
    /// Trapezoid weights in s mapped to t.
    pub weights: Vec<f64>,
}

impl MeshMap {
    fn forward(&self, t: f64) -> f64 {
        match self {
            MeshMap::Uniform => t,
            MeshMap::Sinh { center, scale } => ((t - center) / scale).asinh(),
            MeshMap::Density { features } => {
                t + features
                    .iter()
                    .map(|f| f.strength * f.width * ((t - f.center) / f.width).atan())
                    .sum::<f64>()
            }
        }
    }

    fn density(&self, t: f64) -> f64 {
        match self {
            MeshMap::Uniform => 1.0,
            MeshMap::Sinh { center, scale } => 1.0 / (scale * ((t - center) / scale).asinh().cosh()),
            MeshMap::Density { features } => {
                1.0 + features
                    .iter()
                    .map(|f| f.strength / (1.0 + ((t - f.center) / f.width).powi(2)))
                    .sum::<f64>()
            }
        }
    }

    fn inverse(&self, s: f64, lo: f64, hi: f64) -> f64 {
        match self {
            MeshMap::Uniform => s,
            MeshMap::Sinh { center, scale } => center + scale * s.sinh(),
            MeshMap::Density { .. } => {
                // Monotone map: safeguarded Newton.
                let (mut a, mut b) = (lo, hi);
                let mut t = 0.5 * (a + b);
                for _ in 0..200 {
                    let g = self.forward(t) - s;
                    if g > 0.0 {
                        b = t;
                    } else {
                        a = t;
                    }
                    let mut tn = t - g / self.density(t);
                    if !(tn > a && tn < b) {
                        tn = 0.5 * (a + b);
                    }
                    if (tn - t).abs() <= 1e-15 * (1.0 + t.abs()) {
                        return tn;
                    }
                    t = tn;
                }
                t
            }
        }
    }
}

impl Mesh {
    pub fn new(t_min: f64, t_max: f64, n: usize, map: &MeshMap) -> Mesh {
        assert!(n >= 2 && t_max > t_min);
        let s0 = map.forward(t_min);
        let s1 = map.forward(t_max);
        let ds = (s1 - s0) / (n - 1) as f64;
        let mut t = Vec::with_capacity(n);
        let mut jac = Vec::with_capacity(n);
        for j in 0..n {
            let s = s0 + ds * j as f64;
            let tj = if j == 0 {
                t_min
            } else if j == n - 1 {
                t_max
            } else {
                map.inverse(s, t_min, t_max)
            };
            t.push(tj);
            jac.push(1.0 / map.density(tj));
        }
        let mut weights: Vec<f64> = jac.iter().map(|j| j * ds).collect();
        weights[0] *= 0.5;
        weights[n - 1] *= 0.5;
        Mesh { t, jac, ds, weights }
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }
}
