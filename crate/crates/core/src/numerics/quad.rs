//! One-dimensional quadrature.

/// Adaptive Simpson quadrature of `f` over `[a, b]`.
///
/// Stops refining an interval once the Richardson error estimate drops below
/// `max(abs_tol, rel_tol * |whole|)` scaled to the interval, or at
/// `max_depth`.
pub fn adaptive_simpson<E, F>(
    mut f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
    max_depth: u32,
) -> Result<f64, E>
where
    F: FnMut(f64) -> Result<f64, E>,
{
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a)?;
    let fb = f(b)?;
    let m = 0.5 * (a + b);
    let fm = f(m)?;
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let tol = abs_tol.max(rel_tol * whole.abs());
    simpson_step(&mut f, a, b, fa, fm, fb, whole, tol, max_depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<E, F>(
    f: &mut F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64, E>
where
    F: FnMut(f64) -> Result<f64, E>,
{
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm)?;
    let frm = f(rm)?;
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    let l = simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?;
    let r = simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?;
    Ok(l + r)
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 1 { x } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * p - pm1) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Composite Gauss-Legendre rule with `panels` equal panels of order `order`.
pub fn composite_gauss<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, panels: usize, order: usize) -> f64 {
    let (x, w) = gauss_legendre(order);
    let h = (b - a) / panels as f64;
    let mut acc = super::sum::NeumaierSum::default();
    for k in 0..panels {
        let lo = a + k as f64 * h;
        for (xi, wi) in x.iter().zip(&w) {
            acc.add(0.5 * h * wi * f(lo + 0.5 * h * (xi + 1.0)));
        }
    }
    acc.total()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::convert::Infallible;

    #[test]
    fn simpson_integrates_smooth_function() {
        let v = adaptive_simpson(|x| Ok::<_, Infallible>(x.exp()), 0.0, 1.0, 1e-12, 0.0, 40).unwrap();
        assert!((v - (1f64.exp() - 1.0)).abs() < 1e-11);
    }

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        for n in [1, 2, 5, 10, 20] {
            let (x, w) = gauss_legendre(n);
            let deg = 2 * n - 1;
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32 - 1)).sum();
            let exact = if (deg - 1) % 2 == 0 { 2.0 / deg as f64 } else { 0.0 };
            assert!((q - exact).abs() < 1e-13, "n={n}: {q} vs {exact}");
        }
    }
}
