//! Piecewise cubic Hermite interpolation.

use serde::{Deserialize, Serialize};

/// Cubic Hermite interpolant through `(x_i, y_i)` with slopes `d_i`.
///
/// Built either from explicit slopes or with Fritsch-Carlson monotone
/// slopes, in which case monotone data yields a monotone interpolant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hermite {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl Hermite {
    pub fn with_slopes(x: Vec<f64>, y: Vec<f64>, d: Vec<f64>) -> Self {
        assert!(x.len() >= 2 && x.len() == y.len() && y.len() == d.len());
        debug_assert!(x.windows(2).all(|w| w[0] < w[1]), "abscissae must increase");
        Hermite { x, y, d }
    }

    /// Fritsch-Carlson monotone cubic.
    pub fn monotone(x: Vec<f64>, y: Vec<f64>) -> Self {
        let n = x.len();
        assert!(n >= 2 && n == y.len());
        let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / (x[i + 1] - x[i])).collect();
        let mut d = vec![0.0; n];
        d[0] = delta[0];
        d[n - 1] = delta[n - 2];
        for i in 1..n - 1 {
            d[i] = if delta[i - 1] * delta[i] <= 0.0 {
                0.0
            } else {
                // weighted harmonic mean (Fritsch-Butland)
                let h0 = x[i] - x[i - 1];
                let h1 = x[i + 1] - x[i];
                let w1 = 2.0 * h1 + h0;
                let w2 = h1 + 2.0 * h0;
                (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i])
            };
        }
        for i in 0..n - 1 {
            if delta[i] == 0.0 {
                d[i] = 0.0;
                d[i + 1] = 0.0;
                continue;
            }
            let a = d[i] / delta[i];
            let b = d[i + 1] / delta[i];
            let s = a * a + b * b;
            if s > 9.0 {
                let tau = 3.0 / s.sqrt();
                d[i] = tau * a * delta[i];
                d[i + 1] = tau * b * delta[i];
            }
        }
        Hermite { x, y, d }
    }

    pub fn xs(&self) -> &[f64] {
        &self.x
    }

    pub fn ys(&self) -> &[f64] {
        &self.y
    }

    pub fn slopes(&self) -> &[f64] {
        &self.d
    }

    pub fn x_min(&self) -> f64 {
        self.x[0]
    }

    pub fn x_max(&self) -> f64 {
        *self.x.last().expect("non-empty")
    }

    fn locate(&self, t: f64) -> Option<(usize, f64, f64)> {
        if !(t >= self.x[0] && t <= self.x_max()) {
            return None;
        }
        let i = self.x.partition_point(|&v| v <= t).saturating_sub(1).min(self.x.len() - 2);
        let h = self.x[i + 1] - self.x[i];
        Some((i, h, (t - self.x[i]) / h))
    }

    pub fn eval(&self, t: f64) -> Option<f64> {
        let (i, h, s) = self.locate(t)?;
        if s == 0.0 {
            return Some(self.y[i]);
        }
        if s == 1.0 {
            return Some(self.y[i + 1]);
        }
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        Some(h00 * self.y[i] + h10 * h * self.d[i] + h01 * self.y[i + 1] + h11 * h * self.d[i + 1])
    }

    pub fn derivative(&self, t: f64) -> Option<f64> {
        let (i, h, s) = self.locate(t)?;
        let s2 = s * s;
        let d00 = (6.0 * s2 - 6.0 * s) / h;
        let d10 = 3.0 * s2 - 4.0 * s + 1.0;
        let d01 = (-6.0 * s2 + 6.0 * s) / h;
        let d11 = 3.0 * s2 - 2.0 * s;
        Some(d00 * self.y[i] + d10 * self.d[i] + d01 * self.y[i + 1] + d11 * self.d[i + 1])
    }

    pub fn second_derivative(&self, t: f64) -> Option<f64> {
        let (i, h, s) = self.locate(t)?;
        let e00 = (12.0 * s - 6.0) / (h * h);
        let e10 = (6.0 * s - 4.0) / h;
        let e01 = (-12.0 * s + 6.0) / (h * h);
        let e11 = (6.0 * s - 2.0) / h;
        Some(e00 * self.y[i] + e10 * self.d[i] + e01 * self.y[i + 1] + e11 * self.d[i + 1])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reproduces_cubic_with_exact_slopes() {
        let x: Vec<f64> = (0..6).map(|i| i as f64 * 0.5).collect();
        let y: Vec<f64> = x.iter().map(|t| t * t * t).collect();
        let d: Vec<f64> = x.iter().map(|t| 3.0 * t * t).collect();
        let h = Hermite::with_slopes(x, y, d);
        for t in [0.1, 0.77, 1.3, 2.49] {
            assert!((h.eval(t).unwrap() - t * t * t).abs() < 1e-12);
            assert!((h.derivative(t).unwrap() - 3.0 * t * t).abs() < 1e-12);
            assert!((h.second_derivative(t).unwrap() - 6.0 * t).abs() < 1e-10);
        }
        assert!(h.eval(2.6).is_none());
    }

    proptest! {
        #[test]
        fn monotone_data_gives_monotone_interpolant(steps in prop::collection::vec((0.01f64..2.0, 0.0f64..5.0), 3..20)) {
            let mut x = vec![0.0];
            let mut y = vec![0.0];
            for (dx, dy) in &steps {
                x.push(x.last().unwrap() + dx);
                y.push(y.last().unwrap() + dy);
            }
            let h = Hermite::monotone(x.clone(), y);
            let top = *x.last().unwrap();
            let grid: Vec<f64> = (0..=400).map(|i| (top * i as f64 / 400.0).min(top)).collect();
            let vals: Vec<f64> = grid.iter().map(|&t| h.eval(t).unwrap()).collect();
            for w in vals.windows(2) {
                prop_assert!(w[1] >= w[0] - 1e-12);
            }
        }
    }
}
