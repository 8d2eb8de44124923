//! Scalar numerical kernels shared by every module.

pub mod interp;
pub mod quad;
pub mod roots;
pub mod sum;

/// `n >= 2` geometrically spaced points from `a` to `b` inclusive.
pub fn geomspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(a > 0.0 && b > 0.0 && n >= 2, "geomspace needs positive ends and n >= 2");
    let (la, lb) = (a.ln(), b.ln());
    (0..n)
        .map(|i| {
            if i == 0 {
                a
            } else if i == n - 1 {
                b
            } else {
                (la + (lb - la) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2);
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

/// Relative difference with an absolute floor at `floor`.
pub fn rel_diff(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}
