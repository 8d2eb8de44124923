//! Sampled Sobolev-Poincaré and modular Poincaré inequalities.

use serde::Serialize;

use super::{EmbeddingError, Result};
use crate::exec::Exec;
use crate::field::{FieldError, SampledField};
use crate::nfunction::NFunction;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct InequalityCheck {
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs / rhs`, defined as 0 when both sides vanish.
    pub ratio: f64,
    pub c1: f64,
}

fn check_inputs(u: &SampledField, grad_u: &SampledField, n: usize) -> Result<()> {
    u.same_grid(grad_u)?;
    if !u.is_scalar() {
        return Err(FieldError::NotScalar.into());
    }
    if u.dim() != n {
        return Err(EmbeddingError::InvalidDimension(n));
    }
    for c in 0..u.cells() {
        let v = u.values()[c];
        if u.is_boundary_cell(c) && v.abs() > 1e-12 {
            return Err(EmbeddingError::BoundaryNotZero { cell: c, value: v });
        }
    }
    Ok(())
}

fn gradient_modular(b: &NFunction, grad_u: &SampledField, exec: Exec) -> Result<f64> {
    let g = grad_u.magnitudes();
    Ok(exec.try_sum(g.len(), |i| b.eval(g[i]))? * grad_u.cell_measure())
}

fn ratio(lhs: f64, rhs: f64) -> f64 {
    if lhs == 0.0 && rhs == 0.0 {
        0.0
    } else {
        lhs / rhs
    }
}

/// `(∫ B(c₁|u|)^{N'})^{1/N'}` against `∫ B(|∇u|)` with `c₁ = 1/(4 diam Ω)`.
/// For `N = 1` the left side is the supremum of `B(c₁|u|)`.
pub fn sobolev_poincare_check(
    b: &NFunction,
    u: &SampledField,
    grad_u: &SampledField,
    n: usize,
    exec: Exec,
) -> Result<InequalityCheck> {
    check_inputs(u, grad_u, n)?;
    let c1 = 1.0 / (4.0 * u.diameter());
    let vals = u.values();
    let lhs = if n == 1 {
        let mut top: f64 = 0.0;
        for v in vals {
            top = top.max(b.eval(c1 * v.abs())?);
        }
        top
    } else {
        let np = n as f64 / (n as f64 - 1.0);
        let s = exec.try_sum(vals.len(), |i| Ok::<_, EmbeddingError>(b.eval(c1 * vals[i].abs())?.powf(np)))?;
        (s * u.cell_measure()).powf(1.0 / np)
    };
    let rhs = gradient_modular(b, grad_u, exec)?;
    Ok(InequalityCheck { lhs, rhs, ratio: ratio(lhs, rhs), c1 })
}

/// `∫ B(c₁|u|)` against `∫ B(|∇u|)`; `c1` defaults to `1/(4 diam Ω)`.
pub fn poincare_check(
    b: &NFunction,
    u: &SampledField,
    grad_u: &SampledField,
    n: usize,
    c1: Option<f64>,
    exec: Exec,
) -> Result<InequalityCheck> {
    check_inputs(u, grad_u, n)?;
    let c1 = c1.unwrap_or(1.0 / (4.0 * u.diameter()));
    let vals = u.values();
    let lhs = exec.try_sum(vals.len(), |i| b.eval(c1 * vals[i].abs()))? * u.cell_measure();
    let rhs = gradient_modular(b, grad_u, exec)?;
    Ok(InequalityCheck { lhs, rhs, ratio: ratio(lhs, rhs), c1 })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Tent of height `1/2 - h` that vanishes on the two boundary cells.
    fn tent(n: usize) -> SampledField {
        let h = 1.0 / n as f64;
        SampledField::from_fn(1, n, 1.0, move |x| (0.5 - h - (x[0] - 0.5).abs()).max(0.0)).unwrap()
    }

    #[test]
    fn zero_field_gives_zero_ratio() {
        let u = SampledField::constant(2, 8, 1.0, 0.0).unwrap();
        let g = u.gradient().unwrap();
        let r = sobolev_poincare_check(&NFunction::power(2.0).unwrap(), &u, &g, 2, Exec::Sequential).unwrap();
        assert_eq!((r.lhs, r.rhs, r.ratio), (0.0, 0.0, 0.0));
    }

    #[test]
    fn tent_poincare_below_one() {
        let u = tent(200);
        let g = u.gradient().unwrap();
        let b = NFunction::power(2.0).unwrap();
        let r = poincare_check(&b, &u, &g, 1, None, Exec::Sequential).unwrap();
        assert!(r.ratio <= 1.0);
        let half = poincare_check(&b, &u, &g, 1, Some(r.c1 / 2.0), Exec::Sequential).unwrap();
        assert!(half.lhs <= r.lhs);
    }

    #[test]
    fn boundary_values_are_rejected() {
        let u = SampledField::constant(1, 8, 1.0, 1.0).unwrap();
        let g = u.gradient().unwrap();
        let err = poincare_check(&NFunction::power(2.0).unwrap(), &u, &g, 1, None, Exec::Sequential);
        assert!(matches!(err, Err(EmbeddingError::BoundaryNotZero { .. })));
    }
}
