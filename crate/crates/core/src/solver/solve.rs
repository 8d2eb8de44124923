//! Solves of the approximate problems and the discrete weak-form quantities
//! derived from them.

use serde::Serialize;

use super::mesh::Mesh;
use super::newton::{initial_guess, minimize, scatter, EnergyProblem, NewtonOptions};
use super::operator::{FluxForm, OperatorSpec};
use super::{Result, SolverError};
use crate::exec::Exec;
use crate::field::SampledField;
use crate::nfunction::EXP_CAP;

/// Relative residual tolerance, against `‖f_k‖_∞`.
pub const RESIDUAL_TOL: f64 = 1e-9;
/// Regularisation of `|ξ|` is `EPS_SCALE / h`.
pub const EPS_SCALE: f64 = 1e-8;
/// Under-relaxation of the outer fixed point for `z`-dependent fluxes.
pub const RELAXATION: f64 = 0.5;

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    pub max_newton: usize,
    pub max_outer: usize,
    pub exec: Exec,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { max_newton: 200, max_outer: 400, exec: Exec::default() }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Solution {
    #[serde(skip)]
    pub u: SampledField,
    pub newton_iterations: usize,
    pub outer_iterations: usize,
    pub linear_iterations: usize,
    /// Max-norm of the discrete weak residual per unit cell measure.
    pub residual_max: f64,
    pub tolerance: f64,
    /// Energy after each accepted Newton step of the last inner solve.
    pub energy_history: Vec<f64>,
    /// Smallest pointwise `A·∇u − d₀ B(|∇u|)` over all iterates.
    pub coercivity_margin: f64,
    /// Regularisation of `|ξ|` inside the flux.
    pub epsilon: f64,
    pub converged: bool,
}

fn trust_for(op: &OperatorSpec) -> Option<(f64, f64)> {
    (op.b.domain_cap() <= 2.0 * EXP_CAP).then_some((1.0, 0.5))
}

fn element_coefficients(op: &OperatorSpec, mesh: &Mesh, u: &[f64]) -> Vec<f64> {
    mesh.elements.iter().map(|e| op.form.coefficient(e.mean_value(u, mesh.vertices))).collect()
}

/// Solves `-div A(x, u, ∇u) = f` with zero boundary values on the grid of `f`.
///
/// Gradient-type fluxes minimise the discrete energy by damped Newton; the
/// `z`-dependent flux freezes the coefficient, solves, and relaxes.
pub fn solve_approximate(op: &OperatorSpec, f: &SampledField, opts: &SolveOptions) -> Result<Solution> {
    if let FluxForm::Custom(_) = op.form {
        return Err(SolverError::InvalidOperator("custom fluxes are validated but not solved".into()));
    }
    if !f.is_scalar() || f.dim() > 2 {
        return Err(SolverError::InvalidProblem("the datum must be a scalar field in one or two dimensions".into()));
    }
    let mesh = Mesh::new(f.dim(), f.n(), f.extent());
    let cm = mesh.cell_measure();
    let tol = RESIDUAL_TOL * f.sup_norm();
    let eps = EPS_SCALE / mesh.spacing();
    let load: Vec<f64> = f.values().iter().map(|v| v * cm).collect();
    let mut newton = NewtonOptions { max_iter: opts.max_newton, tol, trust: trust_for(op), d0: op.d0, exec: opts.exec };
    let ones = vec![1.0; mesh.elements.len()];
    let mut problem = EnergyProblem { mesh: &mesh, b: &op.b, coeff: ones, load, eps };
    let u0 = initial_guess(&problem, opts.exec);
    let mut out = minimize(&problem, u0, &newton)?;
    let mut outer = 0;
    let mut linear = out.linear_iterations;
    let mut newton_total = out.iterations;
    let mut margin = out.coercivity_margin;
    if let FluxForm::ZPerturbed { .. } = op.form {
        let mut u = out.u.clone();
        let mut residual;
        loop {
            problem.coeff = element_coefficients(op, &mesh, &u);
            residual = problem.gradient(&u, opts.exec)?.iter().fold(0.0f64, |m, r| m.max(r.abs())) / cm;
            if residual <= tol || outer >= opts.max_outer {
                break;
            }
            // inner solves only need to be as accurate as the current outer defect
            newton.tol = tol.max(1e-3 * residual);
            let inner = minimize(&problem, u.clone(), &newton)?;
            linear += inner.linear_iterations;
            newton_total += inner.iterations;
            margin = margin.min(inner.coercivity_margin);
            u.iter_mut().zip(&inner.u).for_each(|(a, b)| *a = (1.0 - RELAXATION) * *a + RELAXATION * b);
            out = inner;
            outer += 1;
        }
        out.u = u;
        out.residual_max = residual;
        out.converged = residual <= tol;
    }
    let sol = Solution {
        u: mesh.to_field(&out.u),
        newton_iterations: newton_total,
        outer_iterations: outer,
        linear_iterations: linear,
        residual_max: out.residual_max,
        tolerance: tol,
        energy_history: out.energy_history,
        coercivity_margin: margin,
        epsilon: eps,
        converged: out.converged,
    };
    if !sol.converged {
        return Err(SolverError::NonConvergence {
            iterations: newton_total,
            residual: sol.residual_max,
            tolerance: tol,
            best: Box::new(sol),
        });
    }
    Ok(sol)
}

fn regularised_problem<'a>(op: &'a OperatorSpec, mesh: &'a Mesh, u: &[f64], f: &SampledField) -> EnergyProblem<'a> {
    let cm = mesh.cell_measure();
    EnergyProblem {
        mesh,
        b: &op.b,
        coeff: element_coefficients(op, mesh, u),
        load: f.values().iter().map(|v| v * cm).collect(),
        eps: EPS_SCALE / mesh.spacing(),
    }
}

/// Discrete weak residual `Σ_T w A·∇φ_i − f_i |cell|`, divided by the cell
/// measure, for every unknown.
pub fn discrete_residual(op: &OperatorSpec, u: &SampledField, f: &SampledField, exec: Exec) -> Result<Vec<f64>> {
    u.same_grid(f)?;
    let mesh = Mesh::new(u.dim(), u.n(), u.extent());
    let p = regularised_problem(op, &mesh, u.values(), f);
    let cm = mesh.cell_measure();
    Ok(p.gradient(u.values(), exec)?.into_iter().map(|r| r / cm).collect())
}

/// `Σ_T w A(∇u)·∇φ − Σ f φ |cell|` for a test function `φ` on the cells.
pub fn weak_form_defect(op: &OperatorSpec, u: &SampledField, f: &SampledField, phi: &SampledField, exec: Exec) -> Result<f64> {
    u.same_grid(f)?;
    u.same_grid(phi)?;
    let mesh = Mesh::new(u.dim(), u.n(), u.extent());
    let p = regularised_problem(op, &mesh, u.values(), f);
    let fl = p.fluxes(u.values(), exec)?;
    let mut r = vec![0.0; mesh.unknowns()];
    scatter(&mesh, &fl, &mut r);
    let stiff = exec.sum(r.len(), |i| r[i] * phi.values()[i]);
    let load = exec.sum(r.len(), |i| p.load[i] * phi.values()[i]);
    Ok(stiff - load)
}

/// Element gradients averaged onto the cells they touch, as a vector field;
/// the discrete `∇u` used by the diagnostics.
pub fn element_gradient_field(u: &SampledField) -> Result<SampledField> {
    let mesh = Mesh::new(u.dim(), u.n(), u.extent());
    let dim = u.dim();
    let mut acc = vec![0.0; u.cells() * dim];
    let mut wsum = vec![0.0; u.cells()];
    for e in &mesh.elements {
        let g = e.gradient(u.values());
        for node in e.nodes[..mesh.vertices].iter().flatten() {
            for c in 0..dim {
                acc[node * dim + c] += e.weight * g[c];
            }
            wsum[*node] += e.weight;
        }
    }
    for (c, w) in wsum.iter().enumerate() {
        for k in 0..dim {
            acc[c * dim + k] /= w;
        }
    }
    Ok(u.with_values(dim, acc)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nfunction::NFunction;

    fn opts() -> SolveOptions {
        SolveOptions { exec: Exec::Sequential, ..Default::default() }
    }

    #[test]
    fn zero_datum_gives_zero_solution() {
        let op = OperatorSpec::potential(NFunction::power(3.0).unwrap()).unwrap();
        let f = SampledField::constant(2, 9, 1.0, 0.0).unwrap();
        let s = solve_approximate(&op, &f, &opts()).unwrap();
        assert_eq!(s.u.sup_norm(), 0.0);
    }

    #[test]
    fn quadratic_one_dimensional_closed_form() {
        let op = OperatorSpec::potential(NFunction::scaled_power(2.0, 0.5).unwrap()).unwrap();
        let n = 64;
        let f = SampledField::constant(1, n, 1.0, 1.0).unwrap();
        let s = solve_approximate(&op, &f, &opts()).unwrap();
        let err = (0..n)
            .map(|c| {
                let x = s.u.centre(c)[0];
                (s.u.values()[c] - x * (1.0 - x) / 2.0).abs()
            })
            .fold(0.0, f64::max);
        assert!(err < 1e-4, "{err}");
    }

    #[test]
    fn p_laplacian_midpoint() {
        let op = OperatorSpec::potential(NFunction::scaled_power(4.0, 0.25).unwrap()).unwrap();
        let f = SampledField::constant(1, 128, 1.0, 1.0).unwrap();
        let s = solve_approximate(&op, &f, &opts()).unwrap();
        let mid = 0.5 * (s.u.values()[63] + s.u.values()[64]);
        assert!((mid - 0.75 * 0.5f64.powf(4.0 / 3.0)).abs() < 2e-3, "{mid}");
        assert!(s.energy_history.windows(2).all(|w| w[1] <= w[0] + 1e-12 * w[0].abs()));
    }

    #[test]
    fn z_perturbed_flux_converges() {
        let op = OperatorSpec::new(NFunction::power(2.0).unwrap(), FluxForm::ZPerturbed { theta: 0.5 }).unwrap();
        let f = SampledField::constant(1, 64, 1.0, 3.0).unwrap();
        let s = solve_approximate(&op, &f, &opts()).unwrap();
        assert!(s.converged && s.outer_iterations > 0);
        let r = discrete_residual(&op, &s.u, &f, Exec::Sequential).unwrap();
        assert!(r.iter().all(|v| v.abs() <= s.tolerance));
    }

    #[test]
    fn two_dimensional_quadratic_matches_five_point() {
        let op = OperatorSpec::potential(NFunction::power(2.0).unwrap()).unwrap();
        let f = SampledField::constant(2, 17, 1.0, 1.0).unwrap();
        let s = solve_approximate(&op, &f, &opts()).unwrap();
        // centre value of -2Δu = 1 on the unit square is about 0.0737 / 2
        let c = s.u.values()[8 + 17 * 8];
        assert!((c - 0.07367 / 2.0).abs() < 2e-3, "{c}");
    }
}
