//! Smooth approximations of the datum: mollified measures and regularised
//! `L¹` samples.

use serde::{Deserialize, Serialize};

use super::problem::Grid;
use super::{Result, SolverError};
use crate::exec::Exec;
use crate::field::SampledField;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub location: Vec<f64>,
    pub weight: f64,
}

/// Unnormalised bump `exp(-1/(1 - r²))` on `r < 1`.
pub fn bump(r: f64) -> f64 {
    if r >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - r * r)).exp()
    }
}

/// `Σ weight · k^N ρ(k|x - x_atom|)`, with each atom's bump rescaled so its
/// discrete mass on the grid is exactly its weight.
pub fn mollify_measure(atoms: &[Atom], k: f64, grid: &Grid, exec: Exec) -> Result<SampledField> {
    let zero = grid.zero_field()?;
    let radius = 1.0 / k;
    for a in atoms {
        if a.location.len() != grid.dim {
            return Err(SolverError::InvalidProblem(format!("atom {:?} does not have {} coordinates", a.location, grid.dim)));
        }
        let dist = a.location.iter().map(|&x| x.min(grid.extent - x)).fold(f64::INFINITY, f64::min);
        if !(dist > radius) {
            return Err(SolverError::AtomTooCloseToBoundary { location: a.location.clone(), radius });
        }
    }
    let cm = zero.cell_measure();
    let mut values = vec![0.0; zero.cells()];
    for a in atoms {
        let raw = exec.map_range(zero.cells(), |c| {
            let x = zero.centre(c);
            let r2: f64 = a.location.iter().enumerate().map(|(i, &y)| (x[i] - y).powi(2)).sum();
            bump(k * r2.sqrt())
        });
        let mass = exec.sum(raw.len(), |c| raw[c]) * cm;
        if mass == 0.0 {
            return Err(SolverError::InvalidProblem(format!("mollifier of radius {radius} contains no cell centre")));
        }
        let scale = a.weight / mass;
        values.iter_mut().zip(&raw).for_each(|(v, r)| *v += scale * r);
    }
    Ok(zero.with_values(1, values)?)
}

#[derive(Debug, Clone)]
pub struct ApproximateData {
    pub field: SampledField,
    pub l1_distance: f64,
}

/// Renormalised convolution with the bump of radius `1/k`, then clamped to
/// `|f_k| <= 2|f|` wherever `f` is nonzero.
pub fn approximate_l1_data(f: &SampledField, k: f64, exec: Exec) -> Result<ApproximateData> {
    if !f.is_scalar() {
        return Err(crate::field::FieldError::NotScalar.into());
    }
    let n = f.n();
    let h = f.spacing();
    let reach = ((1.0 / (k * h)).floor() as usize).min(n);
    let dim = f.dim();
    let span = 2 * reach + 1;
    let offsets: Vec<(isize, isize, f64)> = if dim == 1 {
        (0..span).map(|i| i as isize - reach as isize).map(|i| (i, 0, bump(k * h * i.unsigned_abs() as f64))).collect()
    } else {
        let mut o = Vec::with_capacity(span * span);
        for j in 0..span {
            for i in 0..span {
                let (di, dj) = (i as isize - reach as isize, j as isize - reach as isize);
                let r = h * ((di * di + dj * dj) as f64).sqrt();
                o.push((di, dj, bump(k * r)));
            }
        }
        o
    }
    .into_iter()
    .filter(|o| o.2 > 0.0)
    .collect();
    let vals = f.values();
    let out = exec.map_range(f.cells(), |c| {
        let (ci, cj) = ((c % n) as isize, (c / n) as isize);
        let (mut num, mut den) = (0.0, 0.0);
        for &(di, dj, w) in &offsets {
            let (i, j) = (ci + di, cj + dj);
            if i < 0 || i >= n as isize || j < 0 || (dim == 2 && j >= n as isize) {
                continue;
            }
            let v = vals[i as usize + n * j as usize];
            num += w * v;
            den += w;
        }
        let smoothed = num / den;
        let fc = vals[c];
        if fc != 0.0 {
            smoothed.clamp(-2.0 * fc.abs(), 2.0 * fc.abs())
        } else {
            smoothed
        }
    });
    let field = f.with_values(1, out)?;
    let l1_distance = exec.sum(f.cells(), |c| (field.values()[c] - vals[c]).abs()) * f.cell_measure();
    Ok(ApproximateData { field, l1_distance })
}

/// `T_level f`: the sample clamped to `[-level, level]`.
pub fn truncation_data(f: &SampledField, level: f64) -> Result<SampledField> {
    Ok(f.map(|v| v.clamp(-level, level))?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(dim: usize, n: usize) -> Grid {
        Grid { dim, n, extent: 1.0 }
    }

    #[test]
    fn single_atom_has_unit_mass() {
        let a = [Atom { location: vec![0.5, 0.5], weight: 1.0 }];
        let f = mollify_measure(&a, 8.0, &grid(2, 65), Exec::Sequential).unwrap();
        assert!((f.l1_norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_atoms_add_their_weights() {
        let a = [Atom { location: vec![0.3], weight: 2.0 }, Atom { location: vec![0.7], weight: 3.0 }];
        let f = mollify_measure(&a, 10.0, &grid(1, 400), Exec::Sequential).unwrap();
        assert!((f.integral().unwrap() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn atom_near_boundary_is_rejected() {
        let a = [Atom { location: vec![0.05], weight: 1.0 }];
        assert!(matches!(
            mollify_measure(&a, 4.0, &grid(1, 100), Exec::Sequential),
            Err(SolverError::AtomTooCloseToBoundary { .. })
        ));
    }

    #[test]
    fn zero_stays_zero_and_clamp_holds() {
        let z = SampledField::constant(1, 50, 1.0, 0.0).unwrap();
        assert_eq!(approximate_l1_data(&z, 4.0, Exec::Sequential).unwrap().field.sup_norm(), 0.0);
        let f = SampledField::from_fn(2, 40, 1.0, |x| if x[0] < 0.5 { 0.1 } else { 5.0 }).unwrap();
        let g = approximate_l1_data(&f, 8.0, Exec::Sequential).unwrap().field;
        for (a, b) in g.values().iter().zip(f.values()) {
            assert!(a.abs() <= 2.0 * b.abs());
        }
    }
}
