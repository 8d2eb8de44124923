//! Growth classification at infinity and the Sobolev-Orlicz embedding
//! functions `H_N`, `B_N`, `φ_N`.

mod inequalities;
mod targets;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::Exec;
use crate::field::FieldError;
use crate::nfunction::{Growth, NFunction, NFunctionError};
use crate::numerics::interp::Hermite;
use crate::numerics::quad::adaptive_simpson;
use crate::numerics::sum::NeumaierSum;
use crate::numerics::geomspace;

pub use inequalities::{poincare_check, sobolev_poincare_check, InequalityCheck};
pub use targets::{regularity_targets, RegularityTargets, Target};

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error(transparent)]
    NFunction(#[from] NFunctionError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("growth at infinity could not be classified; pass an explicit slow/fast override")]
    UndeterminedGrowth,
    #[error("boundary cell {cell} carries {value:e}; the field must vanish on boundary cells")]
    BoundaryNotZero { cell: usize, value: f64 },
    #[error("dimension {0} is not supported here")]
    InvalidDimension(usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, EmbeddingError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GrowthClass {
    Slow,
    Fast,
    Undetermined,
}

#[derive(Debug, Clone, Serialize)]
pub struct GrowthEvidence {
    pub class: GrowthClass,
    /// `(T, I(2T) - I(T))` for `T = 2^j`.
    pub increments: Vec<(f64, f64)>,
    /// Ratios of consecutive increments over the last doublings used.
    pub tail_ratios: Vec<f64>,
    pub overridden: bool,
}

const TAIL_DOUBLINGS: usize = 5;
const FAST_RATIO: f64 = 0.9;
const SLOW_RATIO: f64 = 1.05;

fn integrand(b: &NFunction, n: usize) -> impl Fn(f64) -> std::result::Result<f64, NFunctionError> + '_ {
    let e = 1.0 / (n as f64 - 1.0);
    move |t: f64| {
        if t == 0.0 {
            return Ok(0.0);
        }
        Ok((t / b.eval(t)?).powf(e))
    }
}

/// `∫_a^b f` by adaptive Simpson in the logarithmic variable.
fn log_integral<F>(f: &F, a: f64, b: f64) -> std::result::Result<f64, NFunctionError>
where
    F: Fn(f64) -> std::result::Result<f64, NFunctionError>,
{
    let (la, lb) = (a.ln(), b.ln());
    adaptive_simpson(
        |u: f64| {
            let t = u.exp().clamp(a, b);
            Ok(f(t)? * t)
        },
        la,
        lb,
        1e-11,
        0.0,
        30,
    )
}

/// Classify the growth of `B` at infinity from the increments of
/// `I(T) = ∫_1^T (t/B(t))^{1/(N-1)} dt` over doublings `T = 2^j`.
///
/// Increments that shrink geometrically (ratio below 0.9 over the last five
/// doublings) or underflow give `Fast`; increments that grow geometrically
/// (ratio at least 1.05) give `Slow`; anything else is `Undetermined`.
pub fn growth_class(b: &NFunction, n: usize, override_class: Option<GrowthClass>) -> Result<GrowthEvidence> {
    if n < 2 {
        return Err(EmbeddingError::InvalidDimension(n));
    }
    let g = integrand(b, n);
    let mut increments = Vec::new();
    let mut t = 1.0_f64;
    while 2.0 * t <= b.domain_cap() {
        increments.push((t, log_integral(&g, t, 2.0 * t)?));
        t *= 2.0;
    }
    let tail_start = increments.len().saturating_sub(TAIL_DOUBLINGS + 1);
    let tail = &increments[tail_start..];
    let tail_ratios: Vec<f64> = tail.windows(2).map(|w| w[1].1 / w[0].1).collect();
    let underflow = increments.iter().any(|x| x.1 == 0.0 || x.1 < f64::MIN_POSITIVE);
    let class = if let Some(c) = override_class {
        c
    } else if tail_ratios.len() < TAIL_DOUBLINGS {
        if underflow {
            GrowthClass::Fast
        } else {
            GrowthClass::Undetermined
        }
    } else if underflow || tail_ratios.iter().all(|&r| r < FAST_RATIO) {
        GrowthClass::Fast
    } else if tail_ratios.iter().all(|&r| r >= SLOW_RATIO) {
        GrowthClass::Slow
    } else {
        GrowthClass::Undetermined
    };
    Ok(GrowthEvidence { class, increments, tail_ratios, overridden: override_class.is_some() })
}

/// Monotone cubic interpolation in log-log coordinates.
#[derive(Debug, Clone, Serialize)]
pub struct LogLogTable {
    table: Hermite,
}

impl LogLogTable {
    /// Knots whose abscissa does not strictly increase in log scale (a
    /// saturated integral in the fast case) are dropped.
    pub fn new(x: &[f64], y: &[f64]) -> Self {
        let mut lx: Vec<f64> = Vec::with_capacity(x.len());
        let mut ly: Vec<f64> = Vec::with_capacity(x.len());
        for (a, b) in x.iter().zip(y) {
            let (la, lb) = (a.ln(), b.ln());
            if lx.last().is_none_or(|&p| la > p) && ly.last().is_none_or(|&p| lb >= p) {
                lx.push(la);
                ly.push(lb);
            }
        }
        LogLogTable { table: Hermite::monotone(lx, ly) }
    }

    pub fn x_min(&self) -> f64 {
        self.table.x_min().exp()
    }

    pub fn x_max(&self) -> f64 {
        self.table.x_max().exp()
    }

    /// Value at `x`; below the first knot the first log-log slope is
    /// extended as a power law.
    pub fn eval(&self, x: f64) -> Option<f64> {
        if x <= 0.0 {
            return (x == 0.0).then_some(0.0);
        }
        let lx = x.ln();
        if lx < self.table.x_min() {
            let xs = self.table.xs();
            let ys = self.table.ys();
            let slope = (ys[1] - ys[0]) / (xs[1] - xs[0]);
            return Some((ys[0] + slope * (lx - xs[0])).exp());
        }
        if lx > self.table.x_max() {
            return if x <= self.x_max() * (1.0 + 1e-12) { Some(self.table.ys().last()?.exp()) } else { None };
        }
        Some(self.table.eval(lx)?.exp())
    }

    pub fn knots(&self) -> Vec<(f64, f64)> {
        self.table.xs().iter().zip(self.table.ys()).map(|(x, y)| (x.exp(), y.exp())).collect()
    }

    /// Inverse map as a table (valid because the data are increasing).
    pub fn inverted(&self) -> LogLogTable {
        let x: Vec<f64> = self.table.ys().iter().map(|v| v.exp()).collect();
        let y: Vec<f64> = self.table.xs().iter().map(|v| v.exp()).collect();
        LogLogTable::new(&x, &y)
    }
}

/// Tabulated `H_N`, `B_N` and `φ_N` on 512 log-spaced knots.
#[derive(Debug, Clone, Serialize)]
pub struct EmbeddingData {
    pub dim: usize,
    pub nprime: f64,
    pub growth: GrowthEvidence,
    pub origin_normalized: bool,
    /// `s ↦ H_N(s)`.
    pub h: LogLogTable,
    /// `t ↦ H_N^{-1}(t)`.
    pub h_inverse: LogLogTable,
    /// `t ↦ B_N(t)`, tabulated through the pairs `(H_N(s), B(s))`.
    pub b_n: LogLogTable,
    /// `s ↦ φ_N(s) = H_N(s)^{N'}`.
    pub phi_n: LogLogTable,
    #[serde(skip)]
    base: NFunction,
}

pub const TABLE_KNOTS: usize = 512;
pub const TABLE_START: f64 = 1e-6;

impl EmbeddingData {
    pub fn base(&self) -> &NFunction {
        &self.base
    }

    pub fn h_n(&self, s: f64) -> Result<f64> {
        self.h.eval(s).ok_or(EmbeddingError::NFunction(NFunctionError::DomainCapExceeded { t: s, cap: self.h.x_max() }))
    }

    pub fn b_n(&self, t: f64) -> Result<f64> {
        self.b_n.eval(t).ok_or(EmbeddingError::NFunction(NFunctionError::DomainCapExceeded { t, cap: self.b_n.x_max() }))
    }

    pub fn phi_n(&self, s: f64) -> Result<f64> {
        self.phi_n.eval(s).ok_or(EmbeddingError::NFunction(NFunctionError::DomainCapExceeded { t: s, cap: self.phi_n.x_max() }))
    }

    /// Log-log slope of `B_N` over the last `k` knots.
    pub fn b_n_tail_slope(&self, k: usize) -> f64 {
        let kn = self.b_n.knots();
        let (x1, y1) = kn[kn.len() - 1];
        let (x0, y0) = kn[kn.len() - 1 - k];
        (y1.ln() - y0.ln()) / (x1.ln() - x0.ln())
    }
}

/// Build `H_N`, `B_N`, `φ_N`. The origin is normalised only when the local
/// growth exponent at 0 makes `∫_0 (t/B)^{1/(N-1)}` diverge.
pub fn embedding_functions(
    b: &NFunction,
    n: usize,
    override_class: Option<GrowthClass>,
    exec: Exec,
) -> Result<EmbeddingData> {
    let growth = growth_class(b, n, override_class)?;
    if growth.class == GrowthClass::Undetermined {
        return Err(EmbeddingError::UndeterminedGrowth);
    }
    let nprime = n as f64 / (n as f64 - 1.0);
    let origin_exponent = b.origin_index()?;
    let origin_normalized = origin_exponent >= n as f64 - 1e-9;
    let base = if origin_normalized { b.normalize_origin() } else { b.clone() };
    let g = integrand(&base, n);
    let s = geomspace(TABLE_START, base.domain_cap(), TABLE_KNOTS);
    // power-law head: g(t) ≈ g(s0) (t/s0)^α near the origin
    let alpha = (1.0 - base.origin_index()?) / (n as f64 - 1.0);
    let head = s[0] * g(s[0])? / (1.0 + alpha);
    let pieces: Vec<std::result::Result<f64, NFunctionError>> =
        exec.map_range(s.len() - 1, |i| log_integral(&g, s[i], s[i + 1]));
    let mut acc = NeumaierSum::default();
    acc.add(head);
    let mut integral = vec![head];
    for p in pieces {
        acc.add(p?);
        integral.push(acc.total());
    }
    let hv: Vec<f64> = integral.iter().map(|v| v.powf(1.0 / nprime)).collect();
    let bv: Vec<f64> = s.iter().map(|&t| base.eval(t)).collect::<std::result::Result<_, _>>()?;
    drop(g);
    let h = LogLogTable::new(&s, &hv);
    Ok(EmbeddingData {
        dim: n,
        nprime,
        h_inverse: h.inverted(),
        h,
        b_n: LogLogTable::new(&hv, &bv),
        phi_n: LogLogTable::new(&s, &integral),
        growth,
        origin_normalized,
        base,
    })
}

/// `B_N` viewed as a growth function.
impl Growth for EmbeddingData {
    fn value(&self, t: f64) -> std::result::Result<f64, NFunctionError> {
        self.b_n.eval(t).ok_or(NFunctionError::DomainCapExceeded { t, cap: self.b_n.x_max() })
    }

    fn cap(&self) -> f64 {
        self.b_n.x_max()
    }
}
