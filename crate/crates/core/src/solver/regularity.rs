//! Weak Orlicz-Marcinkiewicz quasi-norms of solutions against the
//! regularity targets, and their behaviour under grid refinement.

use serde::Serialize;

use super::Result;
use crate::embedding::RegularityTargets;
use crate::exec::Exec;
use crate::field::SampledField;
use crate::nfunction::Growth;
use crate::norms::{weak_marcinkiewicz, NormError};

/// Fraction of the distinct levels entering the tail estimate.
pub const TAIL_FRACTION: f64 = 0.2;
/// Relative spread under refinement accepted as stable.
pub const STABLE_VARIATION: f64 = 0.2;
/// Stricter spread for the sup norm of bounded solutions.
pub const SUP_VARIATION: f64 = 0.02;

#[derive(Debug, Clone, Default, Serialize)]
pub struct RegularityReport {
    pub u_phi1: Option<f64>,
    pub grad_psi1: Option<f64>,
    pub u_phi2: Option<f64>,
    pub grad_psi2: Option<f64>,
    /// Fast case: `‖u‖_∞`.
    pub u_sup: Option<f64>,
    /// Fast case: `|∇u|` against `B`.
    pub grad_base: Option<f64>,
}

fn weak<G: Growth + ?Sized>(g: &G, f: &SampledField, exec: Exec) -> Result<Option<f64>> {
    match weak_marcinkiewicz(g, f, TAIL_FRACTION, exec) {
        Ok(v) => Ok(Some(v)),
        Err(NormError::EmptyTail { .. }) => Ok(Some(0.0)),
        Err(e) => Err(e.into()),
    }
}

/// Quasi-norms of `u` and `|∇u|` against every target available for the
/// growth class.
pub fn regularity_verdict(u: &SampledField, grad_u: &SampledField, targets: &RegularityTargets, exec: Exec) -> Result<RegularityReport> {
    let g = u.with_values(1, grad_u.magnitudes())?;
    let mut r = RegularityReport::default();
    if let Some(t) = &targets.phi1 {
        r.u_phi1 = weak(t, u, exec)?;
    }
    if let Some(t) = &targets.psi1 {
        r.grad_psi1 = weak(t, &g, exec)?;
    }
    if let Some(t) = &targets.phi2 {
        r.u_phi2 = weak(t, u, exec)?;
    }
    if let Some(t) = &targets.psi2 {
        r.grad_psi2 = weak(t, &g, exec)?;
    }
    if targets.u_bounded {
        r.u_sup = Some(u.sup_norm());
    }
    if let Some(t) = &targets.gradient_base {
        r.grad_base = weak(t, &g, exec)?;
    }
    Ok(r)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    FiniteStable,
    GrowingUnderRefinement,
}

#[derive(Debug, Clone, Serialize)]
pub struct QuantityTrend {
    pub name: String,
    pub values: Vec<f64>,
    /// `(max − min) / max`.
    pub variation: f64,
    pub tolerance: f64,
    pub verdict: Verdict,
}

fn trend(name: &str, values: Vec<f64>, tolerance: f64) -> QuantityTrend {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let variation = if max > 0.0 { (max - min) / max } else { 0.0 };
    let finite = values.iter().all(|v| v.is_finite());
    let increasing = values.windows(2).all(|w| w[1] > w[0]);
    let verdict = if finite && (variation <= tolerance || !increasing) {
        Verdict::FiniteStable
    } else {
        Verdict::GrowingUnderRefinement
    };
    QuantityTrend { name: name.to_string(), values, variation, tolerance, verdict }
}

#[derive(Debug, Clone, Serialize)]
pub struct RefinementVerdict {
    pub grids: Vec<usize>,
    pub trends: Vec<QuantityTrend>,
}

impl RefinementVerdict {
    pub fn trend(&self, name: &str) -> Option<&QuantityTrend> {
        self.trends.iter().find(|t| t.name == name)
    }

    pub fn all_stable(&self) -> bool {
        self.trends.iter().all(|t| t.verdict == Verdict::FiniteStable)
    }
}

/// Collects every reported quantity across grids. A quantity is growing when
/// it increases at every refinement by more than the tolerance in total.
pub fn refinement_verdict(grids: &[usize], reports: &[RegularityReport]) -> RefinementVerdict {
    type Pick = fn(&RegularityReport) -> Option<f64>;
    let fields: [(&str, Pick, f64); 6] = [
        ("u_phi1", |r| r.u_phi1, STABLE_VARIATION),
        ("grad_psi1", |r| r.grad_psi1, STABLE_VARIATION),
        ("u_phi2", |r| r.u_phi2, STABLE_VARIATION),
        ("grad_psi2", |r| r.grad_psi2, STABLE_VARIATION),
        ("u_sup", |r| r.u_sup, SUP_VARIATION),
        ("grad_base", |r| r.grad_base, STABLE_VARIATION),
    ];
    let mut trends = Vec::new();
    for (name, pick, tol) in fields {
        let vals: Option<Vec<f64>> = reports.iter().map(pick).collect();
        if let Some(v) = vals {
            trends.push(trend(name, v, tol));
        }
    }
    RefinementVerdict { grids: grids.to_vec(), trends }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trend_classification() {
        assert_eq!(trend("a", vec![1.0, 1.05, 1.1], 0.2).verdict, Verdict::FiniteStable);
        assert_eq!(trend("a", vec![1.0, 2.0, 4.0], 0.2).verdict, Verdict::GrowingUnderRefinement);
        assert_eq!(trend("a", vec![1.0, f64::INFINITY, 1.0], 0.2).verdict, Verdict::GrowingUnderRefinement);
    }
}
