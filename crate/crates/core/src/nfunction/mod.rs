//! N-functions and their calculus.
//!
//! An [`NFunction`] is an immutable, cheaply clonable description of a convex
//! growth function `B: [0, ∞) → [0, ∞)` together with the largest argument
//! (`domain_cap`) at which double precision evaluation is trusted.
//!
//! Closed-form kinds carry exact first and second derivatives. Derived kinds
//! (conjugates, origin-normalised functions) evaluate through their parent.

mod conjugate;
pub mod diagnostics;
mod pathological;
pub mod spec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::interp::Hermite;
use crate::numerics::roots;

pub use diagnostics::{
    delta2_stats, dominates_much, fenchel_young_check, simonenko_indices, validate, Delta2Stats, DominationEvidence,
    DominationRow, SimonenkoIndices, ValidationReport,
};
pub use pathological::{PathologicalSegments, Segment};

/// Default trusted range for polynomial-type kinds.
pub const POLY_CAP: f64 = 1e12;
/// Default trusted range for exponential kinds.
pub const EXP_CAP: f64 = 700.0;
/// Trusted range for `LLogL`; wide enough for its index to approach 1.
pub const LLOGL_CAP: f64 = 1e100;

const VALUE_CEILING: f64 = 1e300;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NFunctionError {
    #[error("argument {t} exceeds the trusted domain cap {cap}")]
    DomainCapExceeded { t: f64, cap: f64 },
    #[error("negative or non-finite argument {0}")]
    InvalidArgument(f64),
    #[error("maximiser for slope {s} lies beyond the domain cap {cap}")]
    SupremumOutOfRange { s: f64, cap: f64 },
    #[error("invalid exponents p={p}, q={q}: need 1 < p < q")]
    InvalidExponents { p: f64, q: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("convexity fails near t={t} (excess {excess:e})")]
    NotConvex { t: f64, excess: f64 },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
}

pub type Result<T> = std::result::Result<T, NFunctionError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Kind {
    /// `coef * t^p`
    Power { p: f64, coef: f64 },
    /// `t^p log^beta(1 + t)`
    Zygmund { p: f64, beta: f64 },
    /// `(1 + t) log(1 + t) - t`
    LLogL,
    /// `exp(t) - t - 1`
    ExpConjugate,
    /// `t (exp(t) - 1)`, the N-function with the growth of `t exp(t)`.
    TExpT,
    Pathological { segments: PathologicalSegments },
    Tabulated { table: Hermite },
    Conjugate { of: Box<NFunction> },
    /// `t B(1)` on `[0, 1]`, `B(t)` beyond.
    OriginNormalized { of: Box<NFunction> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NFunction {
    kind: Kind,
    domain_cap: f64,
}

fn power_cap(p: f64, coef: f64) -> f64 {
    POLY_CAP.min((VALUE_CEILING / coef.max(1.0)).powf(1.0 / p))
}

impl NFunction {
    pub fn power(p: f64) -> Result<Self> {
        Self::scaled_power(p, 1.0)
    }

    pub fn scaled_power(p: f64, coef: f64) -> Result<Self> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(NFunctionError::InvalidParameter(format!("power exponent must exceed 1, got {p}")));
        }
        if !(coef > 0.0 && coef.is_finite()) {
            return Err(NFunctionError::InvalidParameter(format!("power coefficient must be positive, got {coef}")));
        }
        Ok(NFunction { kind: Kind::Power { p, coef }, domain_cap: power_cap(p, coef) })
    }

    pub fn zygmund(p: f64, beta: f64) -> Result<Self> {
        if !(p >= 1.0 && beta >= 0.0 && (p > 1.0 || beta > 0.0) && p.is_finite() && beta.is_finite()) {
            return Err(NFunctionError::InvalidParameter(format!(
                "zygmund needs p >= 1, beta >= 0 and p + beta > 1, got p={p}, beta={beta}"
            )));
        }
        Ok(NFunction { kind: Kind::Zygmund { p, beta }, domain_cap: power_cap(p + beta, 1.0) })
    }

    pub fn llogl() -> Self {
        NFunction { kind: Kind::LLogL, domain_cap: LLOGL_CAP }
    }

    pub fn exp_conjugate() -> Self {
        NFunction { kind: Kind::ExpConjugate, domain_cap: EXP_CAP }
    }

    pub fn t_exp_t() -> Self {
        NFunction { kind: Kind::TExpT, domain_cap: EXP_CAP }
    }

    /// Tabulated N-function through `(t_i, B_i)`; `(0, 0)` is prepended when
    /// missing. Without slopes, Fritsch-Carlson monotone slopes are used.
    pub fn tabulated(t: Vec<f64>, b: Vec<f64>, slopes: Option<Vec<f64>>) -> Result<Self> {
        if t.len() != b.len() || t.is_empty() || slopes.as_ref().is_some_and(|s| s.len() != t.len()) {
            return Err(NFunctionError::InvalidParameter("table columns differ in length".into()));
        }
        let (mut t, mut b, mut slopes) = (t, b, slopes);
        if t[0] != 0.0 {
            t.insert(0, 0.0);
            b.insert(0, 0.0);
            if let Some(s) = slopes.as_mut() {
                s.insert(0, 0.0);
            }
        }
        if b[0] != 0.0 {
            return Err(NFunctionError::InvalidParameter("tabulated B(0) must be 0".into()));
        }
        if !t.windows(2).all(|w| w[0] < w[1]) || !b.windows(2).all(|w| w[0] < w[1]) {
            return Err(NFunctionError::InvalidParameter("table must be strictly increasing in t and B".into()));
        }
        if t.len() < 3 {
            return Err(NFunctionError::InvalidParameter("table needs at least two positive knots".into()));
        }
        let cap = *t.last().expect("non-empty");
        let table = match slopes {
            Some(s) => Hermite::with_slopes(t, b, s),
            None => Hermite::monotone(t, b),
        };
        Ok(NFunction { kind: Kind::Tabulated { table }, domain_cap: cap })
    }

    pub fn pathological(p: f64, q: f64) -> Result<Self> {
        let cap = POLY_CAP.min(VALUE_CEILING.powf(1.0 / q.max(1.0)));
        Self::pathological_with_cap(p, q, cap)
    }

    /// Pathological example with segments generated up to `cap`.
    pub fn pathological_with_cap(p: f64, q: f64, cap: f64) -> Result<Self> {
        let segments = PathologicalSegments::build(p, q, cap)?;
        Ok(NFunction { kind: Kind::Pathological { segments }, domain_cap: cap })
    }

    /// Same function with a different trusted range.
    pub fn with_domain_cap(mut self, cap: f64) -> Result<Self> {
        if !(cap > 0.0) {
            return Err(NFunctionError::InvalidParameter(format!("domain cap must be positive, got {cap}")));
        }
        match &self.kind {
            Kind::Pathological { segments } => {
                let (p, q) = (segments.p, segments.q);
                return Self::pathological_with_cap(p, q, cap);
            }
            Kind::Tabulated { table } if cap > table.x_max() => {
                return Err(NFunctionError::DomainCapExceeded { t: cap, cap: table.x_max() });
            }
            _ => {}
        }
        self.domain_cap = cap;
        Ok(self)
    }

    /// `t B(1)` on `[0, 1]` and `B(t)` for `t > 1`.
    pub fn normalize_origin(&self) -> NFunction {
        NFunction { kind: Kind::OriginNormalized { of: Box::new(self.clone()) }, domain_cap: self.domain_cap }
    }

    pub fn kind(&self) -> &Kind {
        &self.kind
    }

    pub fn domain_cap(&self) -> f64 {
        self.domain_cap
    }

    /// True for kinds whose derivative is continuous; conjugation of the
    /// others falls back to golden-section maximisation.
    pub fn is_smooth(&self) -> bool {
        match &self.kind {
            Kind::Pathological { .. } | Kind::OriginNormalized { .. } => false,
            Kind::Conjugate { of } => of.is_smooth(),
            _ => true,
        }
    }

    pub fn name(&self) -> String {
        match &self.kind {
            Kind::Power { p, coef } if *coef == 1.0 => format!("t^{p}"),
            Kind::Power { p, coef } => format!("{coef}*t^{p}"),
            Kind::Zygmund { p, beta } => format!("t^{p}*log^{beta}(1+t)"),
            Kind::LLogL => "(1+t)log(1+t)-t".into(),
            Kind::ExpConjugate => "exp(t)-t-1".into(),
            Kind::TExpT => "t*(exp(t)-1)".into(),
            Kind::Pathological { segments } => format!("pathological(p={}, q={})", segments.p, segments.q),
            Kind::Tabulated { table } => format!("tabulated({} knots)", table.xs().len()),
            Kind::Conjugate { of } => format!("conj[{}]", of.name()),
            Kind::OriginNormalized { of } => format!("origin-normalized[{}]", of.name()),
        }
    }

    fn check_arg(&self, t: f64) -> Result<()> {
        if !(t >= 0.0) || t.is_infinite() {
            return Err(NFunctionError::InvalidArgument(t));
        }
        if t > self.domain_cap {
            return Err(NFunctionError::DomainCapExceeded { t, cap: self.domain_cap });
        }
        Ok(())
    }

    /// `B(t)`.
    pub fn eval(&self, t: f64) -> Result<f64> {
        self.check_arg(t)?;
        if t == 0.0 {
            return Ok(0.0);
        }
        Ok(match &self.kind {
            Kind::Power { p, coef } => coef * t.powf(*p),
            Kind::Zygmund { p, beta } => {
                let l = t.ln_1p();
                if *beta == 0.0 {
                    t.powf(*p)
                } else {
                    t.powf(*p) * l.powf(*beta)
                }
            }
            Kind::LLogL => {
                if t < 1e-3 {
                    let t2 = t * t;
                    t2 * (0.5 - t / 6.0 + t2 / 12.0 - t2 * t / 20.0 + t2 * t2 / 30.0)
                } else {
                    (1.0 + t) * t.ln_1p() - t
                }
            }
            Kind::ExpConjugate => {
                if t < 1e-3 {
                    let t2 = t * t;
                    t2 * (0.5 + t / 6.0 + t2 / 24.0 + t2 * t / 120.0 + t2 * t2 / 720.0)
                } else {
                    t.exp_m1() - t
                }
            }
            Kind::TExpT => t * t.exp_m1(),
            Kind::Pathological { segments } => segments.eval(t),
            Kind::Tabulated { table } => table.eval(t).expect("checked against cap"),
            Kind::Conjugate { of } => conjugate::conjugate_point(of, t)?.value,
            Kind::OriginNormalized { of } => {
                if t <= 1.0 {
                    t * of.eval(1.0)?
                } else {
                    of.eval(t)?
                }
            }
        })
    }

    /// Right derivative `B'(t)`.
    pub fn derivative(&self, t: f64) -> Result<f64> {
        self.check_arg(t)?;
        Ok(match &self.kind {
            Kind::Power { p, coef } => {
                if t == 0.0 {
                    0.0
                } else {
                    coef * p * t.powf(p - 1.0)
                }
            }
            Kind::Zygmund { p, beta } => {
                if t == 0.0 {
                    if p + beta > 1.0 {
                        0.0
                    } else {
                        1.0
                    }
                } else {
                    let l = t.ln_1p();
                    let first = p * t.powf(p - 1.0) * l.powf(*beta);
                    if *beta == 0.0 {
                        first
                    } else {
                        first + beta * t.powf(*p) * l.powf(beta - 1.0) / (1.0 + t)
                    }
                }
            }
            Kind::LLogL => t.ln_1p(),
            Kind::ExpConjugate => t.exp_m1(),
            Kind::TExpT => t.exp_m1() + t * t.exp(),
            Kind::Pathological { segments } => segments.derivative(t),
            Kind::Tabulated { table } => table.derivative(t).expect("checked against cap"),
            Kind::Conjugate { of } => conjugate::conjugate_point(of, t)?.maximizer,
            Kind::OriginNormalized { of } => {
                if t < 1.0 {
                    of.eval(1.0)?
                } else {
                    of.derivative(t)?
                }
            }
        })
    }

    /// `B''(t)`; a central difference of `B'` for kinds without a closed form.
    pub fn second_derivative(&self, t: f64) -> Result<f64> {
        self.check_arg(t)?;
        Ok(match &self.kind {
            Kind::Power { p, coef } => {
                if t == 0.0 {
                    if *p > 2.0 {
                        0.0
                    } else if *p == 2.0 {
                        2.0 * coef
                    } else {
                        f64::INFINITY
                    }
                } else {
                    coef * p * (p - 1.0) * t.powf(p - 2.0)
                }
            }
            Kind::Zygmund { p, beta } if t > 0.0 => {
                let l = t.ln_1p();
                let u = t.powf(*p);
                let du = p * t.powf(p - 1.0);
                let ddu = p * (p - 1.0) * t.powf(p - 2.0);
                if *beta == 0.0 {
                    ddu
                } else {
                    let v = l.powf(*beta);
                    let dv = beta * l.powf(beta - 1.0) / (1.0 + t);
                    let ddv = (beta * (beta - 1.0) * l.powf(beta - 2.0) - beta * l.powf(beta - 1.0)) / ((1.0 + t) * (1.0 + t));
                    ddu * v + 2.0 * du * dv + u * ddv
                }
            }
            Kind::LLogL => 1.0 / (1.0 + t),
            Kind::ExpConjugate => t.exp(),
            Kind::TExpT => (2.0 + t) * t.exp(),
            Kind::Pathological { segments } => segments.second_derivative(t),
            Kind::Tabulated { table } => table.second_derivative(t).expect("checked against cap"),
            Kind::Conjugate { of } => {
                let tstar = conjugate::conjugate_point(of, t)?.maximizer;
                let curv = of.second_derivative(tstar)?;
                if curv > 0.0 {
                    1.0 / curv
                } else {
                    f64::INFINITY
                }
            }
            Kind::OriginNormalized { of } => {
                if t < 1.0 {
                    0.0
                } else {
                    of.second_derivative(t)?
                }
            }
            _ => self.numeric_second_derivative(t)?,
        })
    }

    fn numeric_second_derivative(&self, t: f64) -> Result<f64> {
        let h = 1e-5 * t.max(1e-3);
        let lo = (t - h).max(0.0);
        let hi = (t + h).min(self.domain_cap);
        Ok((self.derivative(hi)? - self.derivative(lo)?) / (hi - lo))
    }

    /// `B^{-1}(y)` by bisection on a geometrically expanding bracket.
    pub fn inverse(&self, y: f64) -> Result<f64> {
        if !(y >= 0.0) || y.is_infinite() {
            return Err(NFunctionError::InvalidArgument(y));
        }
        if y == 0.0 {
            return Ok(0.0);
        }
        if let Kind::Power { p, coef } = self.kind {
            let t = (y / coef).powf(1.0 / p);
            self.check_arg(t)?;
            return Ok(t);
        }
        roots::solve_increasing(|t| self.eval(t), y, 1.0, self.domain_cap)?
            .ok_or(NFunctionError::DomainCapExceeded { t: f64::NAN, cap: self.domain_cap })
            .map_err(|_| NFunctionError::DomainCapExceeded { t: y, cap: self.domain_cap })
    }

    /// Legendre-Fenchel conjugate `s ↦ sup_t (ts - B(t))`.
    pub fn conjugate(&self) -> Result<NFunction> {
        conjugate::conjugate(self)
    }

    /// Evaluate on a batch of arguments.
    pub fn eval_many(&self, ts: &[f64], exec: crate::Exec) -> Result<Vec<f64>> {
        exec.map(ts, |&t| self.eval(t)).into_iter().collect()
    }

    /// Local growth exponent `t B'(t) / B(t)` at a small argument, used to
    /// decide integrability at the origin.
    pub fn origin_index(&self) -> Result<f64> {
        let t = 1e-6_f64.min(self.domain_cap * 1e-3);
        let b = self.eval(t)?;
        Ok(t * self.derivative(t)? / b)
    }

    /// Largest violation of midpoint convexity on `grid`, scaled by the
    /// function values involved. Returns the location and excess if it
    /// exceeds `rel_tol`.
    pub fn convexity_defect(&self, grid: &[f64], rel_tol: f64) -> Result<Option<(f64, f64)>> {
        let mut worst: Option<(f64, f64)> = None;
        for w in grid.windows(2) {
            let (a, b) = (w[0], w[1]);
            let (fa, fb) = (self.eval(a)?, self.eval(b)?);
            for theta in [0.25, 0.5, 0.75] {
                let m = theta * a + (1.0 - theta) * b;
                let fm = self.eval(m)?;
                let chord = theta * fa + (1.0 - theta) * fb;
                let excess = (fm - chord) / chord.abs().max(f64::MIN_POSITIVE);
                if excess > rel_tol && worst.is_none_or(|(_, e)| excess > e) {
                    worst = Some((m, excess));
                }
            }
        }
        Ok(worst)
    }
}

/// Increasing maps that can be inverted numerically; implemented by
/// N-functions and by the regularity target functions.
pub trait Growth: Sync {
    fn value(&self, t: f64) -> Result<f64>;

    /// Largest argument for which `value` is trusted.
    fn cap(&self) -> f64;

    fn inverse_value(&self, y: f64) -> Result<f64> {
        if y <= 0.0 {
            return Ok(0.0);
        }
        roots::solve_increasing(|t| self.value(t), y, 1.0, self.cap())?
            .ok_or(NFunctionError::DomainCapExceeded { t: y, cap: self.cap() })
    }
}

impl Growth for NFunction {
    fn value(&self, t: f64) -> Result<f64> {
        self.eval(t)
    }

    fn cap(&self) -> f64 {
        self.domain_cap
    }

    fn inverse_value(&self, y: f64) -> Result<f64> {
        self.inverse(y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_values() {
        assert_eq!(NFunction::power(2.0).unwrap().eval(2.0).unwrap(), 4.0);
        assert_eq!(NFunction::llogl().eval(0.0).unwrap(), 0.0);
        let z = NFunction::zygmund(2.0, 1.0).unwrap();
        assert!((z.eval(3.0).unwrap() - 9.0 * 4f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn small_argument_series_match_direct_formulas() {
        for t in [2e-4, 7e-4, 9.99e-4] {
            let l = NFunction::llogl().eval(t).unwrap();
            let direct = (1.0 + t) * t.ln_1p() - t;
            assert!((l - direct).abs() / l < 1e-9);
            let e = NFunction::exp_conjugate().eval(t).unwrap();
            let direct = t.exp_m1() - t;
            assert!((e - direct).abs() / e < 1e-9);
        }
    }

    #[test]
    fn domain_cap_is_enforced() {
        let b = NFunction::exp_conjugate();
        assert!(matches!(b.eval(701.0), Err(NFunctionError::DomainCapExceeded { .. })));
        assert!(b.eval(700.0).unwrap().is_finite());
        assert!(matches!(b.eval(-1.0), Err(NFunctionError::InvalidArgument(_))));
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let kinds = [
            NFunction::scaled_power(3.5, 0.25).unwrap(),
            NFunction::zygmund(2.0, 1.0).unwrap(),
            NFunction::zygmund(1.0, 1.0).unwrap(),
            NFunction::llogl(),
            NFunction::exp_conjugate(),
            NFunction::t_exp_t(),
        ];
        for b in &kinds {
            for t in [0.3, 1.7, 6.0] {
                let h = 1e-6 * t;
                let fd = (b.eval(t + h).unwrap() - b.eval(t - h).unwrap()) / (2.0 * h);
                let d = b.derivative(t).unwrap();
                assert!((fd - d).abs() / d.abs() < 1e-7, "{}: B' at {t}: {d} vs {fd}", b.name());
                let h2 = 1e-5 * t;
                let fd2 = (b.derivative(t + h2).unwrap() - b.derivative(t - h2).unwrap()) / (2.0 * h2);
                let d2 = b.second_derivative(t).unwrap();
                assert!((fd2 - d2).abs() / d2.abs() < 1e-6, "{}: B'' at {t}: {d2} vs {fd2}", b.name());
            }
        }
    }

    #[test]
    fn inverse_examples() {
        assert!((NFunction::power(3.0).unwrap().inverse(8.0).unwrap() - 2.0).abs() < 1e-14);
        assert_eq!(NFunction::llogl().inverse(0.0).unwrap(), 0.0);
        let l = NFunction::llogl();
        let y = l.eval(4.7).unwrap();
        assert!((l.inverse(y).unwrap() - 4.7).abs() < 1e-8 * 4.7);
        let z = NFunction::zygmund(2.0, 1.0).unwrap();
        let y = 123.4;
        let t = z.inverse(y).unwrap();
        assert!((z.eval(t).unwrap() - y).abs() <= 1e-10 * y);
    }

    #[test]
    fn inverse_beyond_range_errors() {
        let b = NFunction::exp_conjugate();
        let top = b.eval(700.0).unwrap();
        assert!(matches!(b.inverse(top * 10.0), Err(NFunctionError::DomainCapExceeded { .. })));
    }

    #[test]
    fn origin_normalization() {
        let b = NFunction::power(3.0).unwrap().normalize_origin();
        assert_eq!(b.eval(0.5).unwrap(), 0.5);
        for t in [1.5, 2.0, 10.0] {
            assert_eq!(b.eval(t).unwrap(), t.powi(3));
        }
        assert!(!b.is_smooth());
    }

    #[test]
    fn tabulated_requires_monotone_data() {
        assert!(NFunction::tabulated(vec![1.0, 2.0], vec![1.0, 0.5], None).is_err());
        let t = NFunction::tabulated(vec![1.0, 2.0, 3.0], vec![1.0, 4.0, 9.0], None).unwrap();
        assert_eq!(t.domain_cap(), 3.0);
        assert_eq!(t.eval(2.0).unwrap(), 4.0);
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(NFunction::power(1.0).is_err());
        assert!(NFunction::scaled_power(2.0, -1.0).is_err());
        assert!(NFunction::zygmund(1.0, 0.0).is_err());
    }
}
