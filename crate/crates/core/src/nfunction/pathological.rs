//! Convex function trapped between `t^p` and `t^q` that violates Δ₂.
//!
//! Outside the chord intervals the function is `t^p`. On `(a_i, b_i)` with
//! `a_i = 2^{k_i}` it follows the chord through `(a_i, a_i^p)` with slope
//! `2^{(p-1) k_i} (k_i - 1)`, so that `B(2 a_i) = k_i B(a_i)`.

use serde::{Deserialize, Serialize};

use super::{NFunctionError, Result};
use crate::numerics::roots;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub k: u32,
    /// Left end `2^k`, where the chord leaves the power branch.
    pub a: f64,
    /// Right end, where the chord meets the power branch again.
    pub b: f64,
    pub slope: f64,
    /// Chord value at `a`, equal to `a^p`.
    pub base: f64,
}

impl Segment {
    pub fn chord(&self, t: f64) -> f64 {
        self.base + self.slope * (t - self.a)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathologicalSegments {
    pub p: f64,
    pub q: f64,
    pub segments: Vec<Segment>,
}

/// Smallest `k > 2^p` with `((k - 1) / q)^{1/k} <= 2^{q-p}`.
pub fn first_exponent(p: f64, q: f64) -> u32 {
    let mut k = p.exp2().floor() as u32 + 1;
    while ((k as f64 - 1.0) / q).powf(1.0 / k as f64) > (q - p).exp2() {
        k += 1;
    }
    k
}

impl PathologicalSegments {
    pub fn build(p: f64, q: f64, cap: f64) -> Result<Self> {
        if !(p > 1.0 && q > p && q.is_finite()) {
            return Err(NFunctionError::InvalidExponents { p, q });
        }
        let mut segments = Vec::new();
        let mut k = first_exponent(p, q);
        loop {
            let kf = k as f64;
            let a = kf.exp2();
            if a >= cap || !a.is_finite() {
                break;
            }
            let base = (p * kf).exp2();
            let slope = ((p - 1.0) * kf).exp2() * (kf - 1.0);
            let gap = |t: f64| Ok::<_, NFunctionError>(t.powf(p) - (base + slope * (t - a)));
            // The gap is convex, negative at 2a and eventually positive.
            let mut hi = 4.0 * a;
            while gap(hi)? < 0.0 {
                hi *= 2.0;
            }
            let b = roots::bisect(gap, 0.0, 2.0 * a, hi)?;
            segments.push(Segment { k, a, b, slope, base });
            let mut next = b.log2().ceil() as u32;
            while (next as f64).exp2() < b {
                next += 1;
            }
            while next > k + 1 && ((next - 1) as f64).exp2() >= b {
                next -= 1;
            }
            k = next;
        }
        Ok(PathologicalSegments { p, q, segments })
    }

    fn active(&self, t: f64) -> Option<&Segment> {
        let i = self.segments.partition_point(|s| s.a <= t);
        let seg = self.segments.get(i.checked_sub(1)?)?;
        (t >= seg.a && t < seg.b).then_some(seg)
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self.active(t) {
            Some(seg) if t > seg.a => seg.chord(t),
            _ => t.powf(self.p),
        }
    }

    /// Right derivative.
    pub fn derivative(&self, t: f64) -> f64 {
        match self.active(t) {
            Some(seg) => seg.slope,
            None if t == 0.0 => 0.0,
            None => self.p * t.powf(self.p - 1.0),
        }
    }

    pub fn second_derivative(&self, t: f64) -> f64 {
        match self.active(t) {
            Some(_) => 0.0,
            None if t == 0.0 && self.p < 2.0 => f64::INFINITY,
            None if t == 0.0 && self.p > 2.0 => 0.0,
            None => self.p * (self.p - 1.0) * t.powf(self.p - 2.0),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_first_exponent() {
        assert_eq!(first_exponent(2.0, 3.0), 5);
        assert_eq!(first_exponent(1.5, 2.0), 3);
    }

    #[test]
    fn quadratic_case_segments() {
        let s = PathologicalSegments::build(2.0, 3.0, 1e6).unwrap();
        let ks: Vec<u32> = s.segments.iter().map(|g| g.k).collect();
        assert_eq!(&ks[..4], &[5, 7, 10, 13]);
        // chord meets t^2 again at a (k - 2)
        for g in &s.segments {
            assert!((g.b - g.a * (g.k as f64 - 2.0)).abs() <= 1e-9 * g.b);
        }
    }

    #[test]
    fn ratio_at_doubling_is_k() {
        let s = PathologicalSegments::build(2.0, 3.0, 1e9).unwrap();
        for g in &s.segments {
            assert_eq!(s.eval(2.0 * g.a) / s.eval(g.a), g.k as f64);
        }
    }

    #[test]
    fn rejects_bad_exponents() {
        assert!(PathologicalSegments::build(1.0, 3.0, 1e6).is_err());
        assert!(PathologicalSegments::build(3.0, 2.0, 1e6).is_err());
    }
}
