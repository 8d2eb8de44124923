//! Damped Newton minimisation of the discrete energy
//! `Σ_T w_T c_T B(ρ_T) − Σ_i l_i u_i` with `ρ = sqrt(|g|² + ε²)`.

use super::linalg::{pcg, solve_tridiagonal, Csr};
use super::mesh::Mesh;
use crate::exec::Exec;
use crate::nfunction::{NFunction, NFunctionError};
use crate::numerics::roots;

type NResult<T> = std::result::Result<T, NFunctionError>;

const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 60;
const CG_TOL: f64 = 1e-13;
/// Floor on the curvature along the gradient direction, relative to `B'(ρ)/ρ`.
const CURVATURE_FLOOR: f64 = 1e-8;

pub struct EnergyProblem<'a> {
    pub mesh: &'a Mesh,
    pub b: &'a NFunction,
    /// Per-element flux coefficient.
    pub coeff: Vec<f64>,
    /// `f_i · cell_measure`.
    pub load: Vec<f64>,
    pub eps: f64,
}

#[derive(Debug, Clone)]
pub struct NewtonOutcome {
    pub u: Vec<f64>,
    pub iterations: usize,
    pub linear_iterations: usize,
    /// Max-norm of the residual divided by the cell measure.
    pub residual_max: f64,
    /// Energy after every accepted step, starting with the initial guess.
    pub energy_history: Vec<f64>,
    /// Smallest `Σ A·g − d₀ Σ B(|g|)` over the iterates, weighted by element size.
    pub coercivity_margin: f64,
    pub converged: bool,
}

impl EnergyProblem<'_> {
    fn rho(&self, g: [f64; 2]) -> f64 {
        (g[0] * g[0] + g[1] * g[1] + self.eps * self.eps).sqrt()
    }

    pub fn energy(&self, u: &[f64], exec: Exec) -> NResult<f64> {
        let els = &self.mesh.elements;
        let stored = exec.try_sum(els.len(), |t| {
            let e = &els[t];
            Ok::<_, NFunctionError>(e.weight * self.coeff[t] * self.b.eval(self.rho(e.gradient(u)))?)
        })?;
        let work = exec.sum(u.len(), |i| self.load[i] * u[i]);
        Ok(stored - work)
    }

    /// Size of the terms in the energy, for rounding-aware comparisons.
    fn energy_scale(&self, u: &[f64], exec: Exec) -> NResult<f64> {
        let els = &self.mesh.elements;
        let stored = exec.try_sum(els.len(), |t| {
            let e = &els[t];
            Ok::<_, NFunctionError>(e.weight * self.coeff[t] * self.b.eval(self.rho(e.gradient(u)))?)
        })?;
        Ok(stored + exec.sum(u.len(), |i| (self.load[i] * u[i]).abs()))
    }

    /// Element fluxes `c B'(ρ) g / ρ`.
    pub fn fluxes(&self, u: &[f64], exec: Exec) -> NResult<Vec<[f64; 2]>> {
        let els = &self.mesh.elements;
        exec.map_range(els.len(), |t| {
            let g = els[t].gradient(u);
            let rho = self.rho(g);
            let s = self.coeff[t] * self.b.derivative(rho)? / rho;
            Ok([s * g[0], s * g[1]])
        })
        .into_iter()
        .collect()
    }

    /// Gradient of the energy in integrated units.
    pub fn gradient(&self, u: &[f64], exec: Exec) -> NResult<Vec<f64>> {
        let fl = self.fluxes(u, exec)?;
        let mut r: Vec<f64> = self.load.iter().map(|l| -l).collect();
        scatter(self.mesh, &fl, &mut r);
        Ok(r)
    }

    fn assemble_hessian(&self, u: &[f64], a: &mut Csr, slots: &[[usize; 9]], exec: Exec) -> NResult<()> {
        let els = &self.mesh.elements;
        let nv = self.mesh.vertices;
        let local: Vec<NResult<[f64; 9]>> = exec.map_range(els.len(), |t| {
            let e = &els[t];
            let g = e.gradient(u);
            let rho = self.rho(g);
            let a1 = self.b.derivative(rho)? / rho;
            let b2 = self.b.second_derivative(rho)?.max(CURVATURE_FLOOR * a1);
            let c = self.coeff[t] * e.weight;
            let k = (b2 - a1) / (rho * rho);
            let h = [[a1 + k * g[0] * g[0], k * g[0] * g[1]], [k * g[0] * g[1], a1 + k * g[1] * g[1]]];
            let mut m = [0.0; 9];
            for i in 0..nv {
                for j in 0..nv {
                    let mut s = 0.0;
                    for (r, hr) in h.iter().enumerate() {
                        for (q, hrq) in hr.iter().enumerate() {
                            s += e.coef[r][i] * hrq * e.coef[q][j];
                        }
                    }
                    m[3 * i + j] = c * s;
                }
            }
            Ok(m)
        });
        a.clear();
        for (t, m) in local.into_iter().enumerate() {
            let m = m?;
            for (k, &p) in slots[t].iter().enumerate() {
                if p != usize::MAX {
                    a.vals[p] += m[k];
                }
            }
        }
        Ok(())
    }

    /// `min_T [A·g − d₀ B(|g|)]` with the unregularised potential flux.
    fn coercivity_margin(&self, u: &[f64], d0: f64, exec: Exec) -> NResult<f64> {
        let els = &self.mesh.elements;
        let vals: Vec<NResult<f64>> = exec.map_range(els.len(), |t| {
            let g = els[t].gradient(u);
            let r = (g[0] * g[0] + g[1] * g[1]).sqrt();
            Ok(self.coeff[t] * self.b.derivative(r)? * r - d0 * self.b.eval(r)?)
        });
        vals.into_iter().try_fold(f64::INFINITY, |m, v| Ok(m.min(v?)))
    }
}

/// Adds `Σ_T w_T A_T · ∂g_T/∂u_i` into `out`.
pub fn scatter(mesh: &Mesh, fluxes: &[[f64; 2]], out: &mut [f64]) {
    for (e, a) in mesh.elements.iter().zip(fluxes) {
        for k in 0..mesh.vertices {
            if let Some(i) = e.nodes[k] {
                out[i] += e.weight * (a[0] * e.coef[0][k] + a[1] * e.coef[1][k]);
            }
        }
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Newton options. `trust` limits the change of any element gradient per
/// step to `trust_floor + trust_ratio · max|g|`.
#[derive(Debug, Clone, Copy)]
pub struct NewtonOptions {
    pub max_iter: usize,
    /// Absolute tolerance on the residual divided by the cell measure.
    pub tol: f64,
    pub trust: Option<(f64, f64)>,
    pub d0: f64,
    pub exec: Exec,
}

fn linear_solve(a: &Csr, rhs: &[f64], exec: Exec) -> (Vec<f64>, usize) {
    if a.is_tridiagonal() {
        (solve_tridiagonal(a, rhs), 1)
    } else {
        let mut x = vec![0.0; rhs.len()];
        let out = pcg(a, rhs, &mut x, CG_TOL, 20 * rhs.len().max(100), exec);
        (x, out.iterations)
    }
}

/// Quadratic model solve: the minimiser for `B(t) = t²/2` with unit
/// coefficients, used to build the initial guess.
fn poisson_guess(p: &EnergyProblem<'_>, exec: Exec) -> (Vec<f64>, usize) {
    let (mut a, slots) = p.mesh.matrix_pattern();
    let q = NFunction::scaled_power(2.0, 0.5).expect("valid parameters");
    // B'(ρ)/ρ = B''(ρ) = 1 for the quadratic, so the Hessian is exact at any point
    let quad = EnergyProblem { mesh: p.mesh, b: &q, coeff: p.coeff.clone(), load: p.load.clone(), eps: 1.0 };
    let zero = vec![0.0; p.load.len()];
    quad.assemble_hessian(&zero, &mut a, &slots, exec).expect("quadratic evaluation is finite");
    linear_solve(&a, &p.load, exec)
}

/// Best multiple of `v` along the energy, found by root finding on the
/// directional derivative.
fn scale_guess(p: &EnergyProblem<'_>, v: &[f64], exec: Exec) -> Vec<f64> {
    let work: f64 = exec.sum(v.len(), |i| p.load[i] * v[i]);
    if work <= 0.0 {
        return vec![0.0; v.len()];
    }
    let grads = p.mesh.gradients(v);
    let slope = |s: f64| -> NResult<f64> {
        let els = &p.mesh.elements;
        let inner = exec.try_sum(els.len(), |t| {
            let g = grads[t];
            let r = (g[0] * g[0] + g[1] * g[1]).sqrt();
            Ok::<_, NFunctionError>(els[t].weight * p.coeff[t] * p.b.derivative(s * r)? * r)
        })?;
        Ok(inner)
    };
    let gmax = grads.iter().fold(0.0f64, |m, g| m.max((g[0] * g[0] + g[1] * g[1]).sqrt()));
    let cap = if gmax > 0.0 { 0.5 * p.b.domain_cap() / gmax } else { 1.0 };
    let s = match roots::solve_increasing(slope, work, 1.0_f64.min(cap), cap) {
        Ok(Some(s)) => s,
        _ => 1.0_f64.min(cap),
    };
    v.iter().map(|x| s * x).collect()
}

/// Initial guess: the scaled solution of the quadratic model problem.
pub fn initial_guess(p: &EnergyProblem<'_>, exec: Exec) -> Vec<f64> {
    let (v, _) = poisson_guess(p, exec);
    scale_guess(p, &v, exec)
}

pub fn minimize(p: &EnergyProblem<'_>, u0: Vec<f64>, opts: &NewtonOptions) -> NResult<NewtonOutcome> {
    let exec = opts.exec;
    let cm = p.mesh.cell_measure();
    let (mut a, slots) = p.mesh.matrix_pattern();
    let mut u = u0;
    let mut e = p.energy(&u, exec)?;
    let mut history = vec![e];
    let mut linear_iterations = 0;
    let mut margin = p.coercivity_margin(&u, opts.d0, exec)?;
    let mut grad = p.gradient(&u, exec)?;
    let mut res = max_abs(&grad) / cm;
    let mut it = 0;
    while res > opts.tol && it < opts.max_iter {
        p.assemble_hessian(&u, &mut a, &slots, exec)?;
        let rhs: Vec<f64> = grad.iter().map(|g| -g).collect();
        let (step, li) = linear_solve(&a, &rhs, exec);
        linear_iterations += li;
        let decrement: f64 = exec.sum(step.len(), |i| grad[i] * step[i]);
        let mut alpha: f64 = 1.0;
        if let Some((floor, ratio)) = opts.trust {
            let dg = max_grad(p.mesh, &step);
            let gmax = max_grad(p.mesh, &u);
            let limit = floor + ratio * gmax;
            if dg > limit {
                alpha = limit / dg;
            }
        }
        let slack = 1e-13 * p.energy_scale(&u, exec)?;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let trial: Vec<f64> = u.iter().zip(&step).map(|(x, s)| x + alpha * s).collect();
            if let Ok(et) = p.energy(&trial, exec) {
                if et <= e + ARMIJO * alpha * decrement + slack {
                    accepted = Some((trial, et));
                    break;
                }
            }
            alpha *= 0.5;
        }
        let Some((trial, et)) = accepted else { break };
        let g_trial = p.gradient(&trial, exec)?;
        let r_trial = max_abs(&g_trial) / cm;
        // a step that neither lowers the energy nor the residual makes no progress
        if et >= e && r_trial >= res {
            break;
        }
        u = trial;
        e = et;
        grad = g_trial;
        res = r_trial;
        history.push(e);
        margin = margin.min(p.coercivity_margin(&u, opts.d0, exec)?);
        it += 1;
    }
    Ok(NewtonOutcome {
        u,
        iterations: it,
        linear_iterations,
        residual_max: res,
        energy_history: history,
        coercivity_margin: margin,
        converged: res <= opts.tol,
    })
}

fn max_grad(mesh: &Mesh, u: &[f64]) -> f64 {
    mesh.elements.iter().map(|e| e.gradient(u)).fold(0.0, |m, g| m.max((g[0] * g[0] + g[1] * g[1]).sqrt()))
}
