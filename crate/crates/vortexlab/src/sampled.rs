//! Functions tabulated on a one-dimensional grid.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    #[default]
    Linear,
}

/// Samples `values[i] = f(t[i])` on an increasing grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledFunction<T> {
    pub t: Vec<f64>,
    pub values: Vec<T>,
    pub interpolation: Interpolation,
}

pub type RealSamples = SampledFunction<f64>;
pub type ComplexSamples = SampledFunction<Complex64>;

impl<T> SampledFunction<T>
where
    T: Copy + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
{
    pub fn tabulate<F: FnMut(f64) -> T>(t: Vec<f64>, mut f: F) -> Self {
        let values = t.iter().map(|&x| f(x)).collect();
        SampledFunction { t, values, interpolation: Interpolation::Linear }
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.t[0], *self.t.last().unwrap())
    }

    /// Interpolated value; `None` outside the grid.
    pub fn at(&self, x: f64) -> Option<T> {
        let (lo, hi) = self.domain();
        if !(x >= lo && x <= hi) {
            return None;
        }
        let i = match self.t.binary_search_by(|p| p.total_cmp(&x)) {
            Ok(i) => return Some(self.values[i]),
            Err(i) => i - 1,
        };
        let w = (x - self.t[i]) / (self.t[i + 1] - self.t[i]);
        Some(self.values[i] * (1.0 - w) + self.values[i + 1] * w)
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }
}

/// Uniform grid with `n` points on [lo, hi].
pub fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2);
    let h = (hi - lo) / (n - 1) as f64;
    (0..n).map(|i| if i == n - 1 { hi } else { lo + h * i as f64 }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_interpolation() {
        let f = RealSamples::tabulate(uniform_grid(0.0, 1.0, 11), |x| 2.0 * x + 1.0);
        assert!((f.at(0.537).unwrap() - 2.074).abs() < 1e-14);
        assert_eq!(f.at(1.0), Some(3.0));
        assert_eq!(f.at(1.5), None);
    }
}
