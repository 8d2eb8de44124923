use super::{Kind, NFunction, NFunctionError, Result, VALUE_CEILING};
use crate::numerics::interp::Hermite;
use crate::numerics::{geomspace, roots};

pub(crate) struct ConjugatePoint {
    pub value: f64,
    pub maximizer: f64,
}

/// `sup_t (ts - B(t))` and the maximising `t`.
pub(crate) fn conjugate_point(b: &NFunction, s: f64) -> Result<ConjugatePoint> {
    if s <= 0.0 {
        return Ok(ConjugatePoint { value: 0.0, maximizer: 0.0 });
    }
    let cap = b.domain_cap();
    let bracket = roots::geometric_bracket(|t| b.derivative(t), s, 1.0, cap)?;
    let (lo, hi) = match bracket {
        roots::Bracket::Found { lo, hi } => (lo, hi),
        roots::Bracket::BeyondCap => return Err(NFunctionError::SupremumOutOfRange { s, cap }),
    };
    let t = if b.is_smooth() {
        roots::bisect(|t| b.derivative(t), s, lo, hi)?
    } else {
        // Right derivatives may jump across `s`; the gain is still concave.
        roots::golden_section_max(|t| Ok::<_, NFunctionError>(t * s - b.eval(t)?), lo, hi)?.0
    };
    let value = (t * s - b.eval(t)?).max(0.0);
    Ok(ConjugatePoint { value, maximizer: t })
}

pub(crate) fn conjugate(b: &NFunction) -> Result<NFunction> {
    if let Kind::Tabulated { table } = b.kind() {
        return tabulated_conjugate(table);
    }
    let slope_cap = b.derivative(product_limit(b)?)?;
    let conj = NFunction { kind: Kind::Conjugate { of: Box::new(b.clone()) }, domain_cap: slope_cap };
    let top = slope_cap.min(1e6).max(2.0);
    let grid = geomspace(1e-3 * top.min(1.0), top * 0.999, 24);
    if let Some((t, excess)) = conj.convexity_defect(&grid, 1e-8)? {
        return Err(NFunctionError::NotConvex { t, excess });
    }
    Ok(conj)
}

/// Largest `t` with `t B'(t)` below the value ceiling, so that `t s` stays
/// finite everywhere on the conjugate's domain.
fn product_limit(b: &NFunction) -> Result<f64> {
    let cap = b.domain_cap();
    if cap * b.derivative(cap)? <= VALUE_CEILING {
        return Ok(cap);
    }
    Ok(roots::bisect(|t| Ok::<_, NFunctionError>(t * b.derivative(t)?), VALUE_CEILING, 0.0, cap)?)
}

/// Exact Legendre transform of Hermite data: every knot `(t, B, B')` maps to
/// `(B', tB' - B, t)`, which is again convex Hermite data.
fn tabulated_conjugate(table: &Hermite) -> Result<NFunction> {
    let mut s = Vec::with_capacity(table.xs().len());
    let mut v = Vec::with_capacity(s.capacity());
    let mut d = Vec::with_capacity(s.capacity());
    for ((&t, &bt), &slope) in table.xs().iter().zip(table.ys()).zip(table.slopes()) {
        if let Some(&last) = s.last() {
            if slope <= last {
                return Err(NFunctionError::NotConvex { t, excess: last - slope });
            }
        }
        s.push(slope);
        v.push((t * slope - bt).max(0.0));
        d.push(t);
    }
    NFunction::tabulated(s, v, Some(d))
}
