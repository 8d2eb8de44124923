//! Grid diagnostics for growth conditions.
//!
//! These are numerical evidence gathered on finite grids. A bounded Δ₂ series
//! or a decreasing domination tail does not prove anything about the limit.

use serde::Serialize;

use super::{NFunction, Result};
use crate::exec::Exec;
use crate::numerics::geomspace;

#[derive(Debug, Clone, Serialize)]
pub struct Delta2Stats {
    pub ratio_max: f64,
    /// `(s, B(2s) / B(s))` on the geometric grid.
    pub ratio_series: Vec<(f64, f64)>,
    /// The last third of the series rises clearly above the first third.
    pub growing_evidence: bool,
}

/// `B(2s)/B(s)` over `n` geometric points in `[s0, smax]`.
pub fn delta2_stats(b: &NFunction, s0: f64, smax: f64, n: usize, exec: Exec) -> Result<Delta2Stats> {
    let grid = geomspace(s0, smax, n.max(2));
    let ratios: Vec<Result<f64>> = exec.map(&grid, |&s| Ok(b.eval(2.0 * s)? / b.eval(s)?));
    let mut series = Vec::with_capacity(grid.len());
    for (s, r) in grid.iter().zip(ratios) {
        series.push((*s, r?));
    }
    let ratio_max = series.iter().map(|x| x.1).fold(f64::NEG_INFINITY, f64::max);
    let third = (series.len() / 3).max(1);
    let head = series[..third].iter().map(|x| x.1).fold(f64::NEG_INFINITY, f64::max);
    let tail = series[series.len() - third..].iter().map(|x| x.1).fold(f64::NEG_INFINITY, f64::max);
    Ok(Delta2Stats { ratio_max, ratio_series: series, growing_evidence: tail > 1.2 * head })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SimonenkoIndices {
    /// Infimum of `t B'(t) / B(t)` on the grid.
    pub lower: f64,
    /// Supremum of `t B'(t) / B(t)` on the grid.
    pub upper: f64,
}

/// Grid estimate of the Simonenko indices on `[t0, tmax]`.
pub fn simonenko_indices(b: &NFunction, t0: f64, tmax: f64, n: usize, exec: Exec) -> Result<SimonenkoIndices> {
    let grid = geomspace(t0, tmax, n.max(2));
    let vals: Vec<Result<f64>> = exec.map(&grid, |&t| Ok(t * b.derivative(t)? / b.eval(t)?));
    let mut lower = f64::INFINITY;
    let mut upper = f64::NEG_INFINITY;
    for v in vals {
        let v = v?;
        lower = lower.min(v);
        upper = upper.max(v);
    }
    Ok(SimonenkoIndices { lower, upper })
}

#[derive(Debug, Clone, Serialize)]
pub struct DominationRow {
    pub eps: f64,
    /// `(t, P(t) / B(eps t))` on the tail of the grid.
    pub tail: Vec<(f64, f64)>,
    pub decreasing: bool,
    pub relative_drop: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DominationEvidence {
    pub rows: Vec<DominationRow>,
    pub holds: bool,
}

/// Evidence for `P << B`: for each `eps`, the tail of `P(t) / B(eps t)` on a
/// geometric grid in `[1, tmax]` must be nonincreasing and fall by more than
/// a relative `1e-3`. A constant tail does not count.
pub fn dominates_much(p: &NFunction, b: &NFunction, eps_grid: &[f64], tmax: f64, n: usize) -> Result<DominationEvidence> {
    const DROP_TOL: f64 = 1e-3;
    let grid = geomspace(1.0, tmax, n.max(4));
    let start = grid.len() / 2;
    let mut rows = Vec::with_capacity(eps_grid.len());
    for &eps in eps_grid {
        let mut tail = Vec::with_capacity(grid.len() - start);
        for &t in &grid[start..] {
            tail.push((t, p.eval(t)? / b.eval(eps * t)?));
        }
        let decreasing = tail.windows(2).all(|w| w[1].1 <= w[0].1 * (1.0 + 1e-12));
        let first = tail[0].1;
        let last = tail[tail.len() - 1].1;
        let relative_drop = (first - last) / first;
        rows.push(DominationRow { eps, tail, decreasing, relative_drop });
    }
    let holds = rows.iter().all(|r| r.decreasing && r.relative_drop > DROP_TOL);
    Ok(DominationEvidence { rows, holds })
}

/// Largest value of `|ξ·η| - B(|ξ|) - B̃(|η|)` over the samples.
pub fn fenchel_young_check(b: &NFunction, samples: &[(Vec<f64>, Vec<f64>)]) -> Result<f64> {
    let conj = b.conjugate()?;
    let mut worst = f64::NEG_INFINITY;
    for (xi, eta) in samples {
        let dot: f64 = xi.iter().zip(eta).map(|(a, c)| a * c).sum();
        let nx = xi.iter().map(|a| a * a).sum::<f64>().sqrt();
        let ny = eta.iter().map(|a| a * a).sum::<f64>().sqrt();
        let v = dot.abs() - b.eval(nx)? - conj.eval(ny)?;
        worst = worst.max(v);
    }
    Ok(if samples.is_empty() { 0.0 } else { worst })
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub zero_at_origin: bool,
    pub increasing: bool,
    /// Location and size of the worst midpoint-convexity excess, if any.
    pub convexity_defect: Option<(f64, f64)>,
    pub vanishing_slope_at_origin: bool,
    pub unbounded_slope_at_infinity: bool,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.zero_at_origin
            && self.increasing
            && self.convexity_defect.is_none()
            && self.vanishing_slope_at_origin
            && self.unbounded_slope_at_infinity
    }
}

/// Sampled check of the N-function invariants.
pub fn validate(b: &NFunction) -> Result<ValidationReport> {
    let cap = b.domain_cap();
    let grid = geomspace((1e-6f64).min(cap * 1e-8), cap, 120);
    let vals: Vec<f64> = grid.iter().map(|&t| b.eval(t)).collect::<Result<_>>()?;
    let increasing = vals.windows(2).all(|w| w[1] > w[0]);
    let convexity_defect = b.convexity_defect(&grid, 1e-9)?;
    let small = geomspace((1e-6f64).min(cap * 1e-8), (1e-2f64).min(cap * 1e-3), 12);
    let small_ratio: Vec<f64> = small.iter().map(|&t| Ok(b.eval(t)? / t)).collect::<Result<_>>()?;
    let vanishing = small_ratio.windows(2).all(|w| w[1] > w[0]) && small_ratio[0] < 0.5 * small_ratio[11];
    let large = geomspace(cap * 1e-3, cap, 12);
    let large_ratio: Vec<f64> = large.iter().map(|&t| Ok(b.eval(t)? / t)).collect::<Result<_>>()?;
    let unbounded = large_ratio.windows(2).all(|w| w[1] > w[0]);
    Ok(ValidationReport {
        zero_at_origin: b.eval(0.0)? == 0.0,
        increasing,
        convexity_defect,
        vanishing_slope_at_origin: vanishing,
        unbounded_slope_at_infinity: unbounded,
    })
}
