//! Bracketing root finders for monotone scalar maps.
//!
//! All routines accept fallible closures so that evaluation errors (for
//! example an argument beyond an N-function's trusted range) propagate to
//! the caller unchanged.

/// Outcome of a bracket search that may run off the trusted range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bracket {
    /// `f(lo) < target <= f(hi)`; `lo` may be zero.
    Found { lo: f64, hi: f64 },
    /// `f(cap) < target`.
    BeyondCap,
}

const MAX_STEPS: usize = 2200;

/// Geometric bracket search for a nondecreasing `f` on `(0, cap]`.
///
/// Starts at `start`, doubles upwards or halves downwards until the target
/// value is straddled. Halving stops at the smallest positive normal number,
/// in which case `lo` is returned as `0`.
pub fn geometric_bracket<E, F>(mut f: F, target: f64, start: f64, cap: f64) -> Result<Bracket, E>
where
    F: FnMut(f64) -> Result<f64, E>,
{
    let mut x = start.min(cap);
    if f(x)? >= target {
        for _ in 0..MAX_STEPS {
            let half = 0.5 * x;
            if half < f64::MIN_POSITIVE {
                return Ok(Bracket::Found { lo: 0.0, hi: x });
            }
            if f(half)? < target {
                return Ok(Bracket::Found { lo: half, hi: x });
            }
            x = half;
        }
        return Ok(Bracket::Found { lo: 0.0, hi: x });
    }
    for _ in 0..MAX_STEPS {
        if x >= cap {
            return Ok(Bracket::BeyondCap);
        }
        let next = (2.0 * x).min(cap);
        if f(next)? >= target {
            return Ok(Bracket::Found { lo: x, hi: next });
        }
        x = next;
    }
    Ok(Bracket::BeyondCap)
}

/// Bisection for a nondecreasing `f` with `f(lo) < target <= f(hi)`.
///
/// Runs until the bracket collapses to adjacent floating point numbers and
/// returns the midpoint of the final bracket.
pub fn bisect<E, F>(mut f: F, target: f64, mut lo: f64, mut hi: f64) -> Result<f64, E>
where
    F: FnMut(f64) -> Result<f64, E>,
{
    for _ in 0..MAX_STEPS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Solve `f(x) = target` for nondecreasing `f` on `[0, cap]` by geometric
/// bracketing followed by bisection. `Ok(None)` means the target lies above
/// `f(cap)`.
pub fn solve_increasing<E, F>(mut f: F, target: f64, start: f64, cap: f64) -> Result<Option<f64>, E>
where
    F: FnMut(f64) -> Result<f64, E>,
{
    match geometric_bracket(&mut f, target, start, cap)? {
        Bracket::BeyondCap => Ok(None),
        Bracket::Found { lo, hi } => bisect(f, target, lo, hi).map(Some),
    }
}

/// Golden-section search for the maximiser of a unimodal `f` on `[a, b]`.
pub fn golden_section_max<E, F>(mut f: F, mut a: f64, mut b: f64) -> Result<(f64, f64), E>
where
    F: FnMut(f64) -> Result<f64, E>,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    for _ in 0..400 {
        if (b - a) <= 4.0 * f64::EPSILON * b.abs().max(f64::MIN_POSITIVE) {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
    }
    let x = 0.5 * (a + b);
    let fx = f(x)?;
    let (mut best, mut fbest) = (x, fx);
    for (y, fy) in [(c, fc), (d, fd)] {
        if fy > fbest {
            best = y;
            fbest = fy;
        }
    }
    Ok((best, fbest))
}
