//! Problem descriptions and the full pipeline from datum to report.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::data::{approximate_l1_data, mollify_measure, Atom};
use super::estimates::{
    apriori_report, cauchy_matrix, default_taus, default_truncation_levels, flux_consistency, tail_constant,
    uniqueness_experiment, AprioriReport, CauchyMatrix, FluxConsistency, UniquenessReport,
};
use super::operator::{FluxForm, OperatorSpec, OperatorValidation};
use super::regularity::{refinement_verdict, regularity_verdict, RefinementVerdict, RegularityReport};
use super::solve::{element_gradient_field, solve_approximate, weak_form_defect, Solution, SolveOptions};
use super::{Result, SolverError};
use crate::embedding::{regularity_targets, GrowthClass};
use crate::exec::Exec;
use crate::field::SampledField;
use crate::nfunction::spec::NFunctionSpec;
use crate::nfunction::NFunction;
use crate::numerics::geomspace;

/// Tolerance of the weak-form identity relative to `‖φ‖_∞ ‖f_k‖₁`.
pub const TEST_IDENTITY_TOL: f64 = 1e-7;
/// Number of random test functions per level.
pub const TEST_FUNCTIONS: usize = 10;
/// Samples used to validate the operator.
pub const OPERATOR_SAMPLES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub dim: usize,
    pub n: usize,
    pub extent: f64,
}

impl Grid {
    pub fn zero_field(&self) -> Result<SampledField> {
        Ok(SampledField::constant(self.dim, self.n, self.extent, 0.0)?)
    }

    pub fn with_n(&self, n: usize) -> Grid {
        Grid { n, ..*self }
    }
}

/// `|x − center|^exponent`, an `L¹` function with a point singularity when
/// `-dim < exponent < 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Singular {
    pub center: Vec<f64>,
    pub exponent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Datum {
    /// Exactly one of the sources must be given.
    L1Sample {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        values: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        csv: Option<PathBuf>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        constant: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        singular: Option<Singular>,
    },
    AtomicMeasure { atoms: Vec<Atom> },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApproximationMode {
    #[default]
    MollifySequence,
    TwoSequenceUniqueness,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorConfig {
    #[serde(default = "default_form")]
    pub form: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower_order: Option<NFunctionSpec>,
}

fn default_form() -> String {
    "potential_gradient".into()
}

impl Default for OperatorConfig {
    fn default() -> Self {
        OperatorConfig { form: default_form(), theta: None, lower_order: None }
    }
}

fn default_seed() -> u64 {
    7
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub grid: Grid,
    pub nfunction: NFunctionSpec,
    #[serde(default)]
    pub operator: OperatorConfig,
    pub datum: Datum,
    pub mollifier_levels: Vec<f64>,
    #[serde(default)]
    pub truncation_levels: Vec<f64>,
    #[serde(default)]
    pub approximation_mode: ApproximationMode,
    /// Cell counts for the refinement study of the regularity verdict.
    #[serde(default)]
    pub refinement_grids: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub growth_override: Option<GrowthClass>,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] > w[0])
}

impl ProblemSpec {
    pub fn parse(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn check(&self) -> Result<()> {
        let g = &self.grid;
        if !(g.dim == 1 || g.dim == 2) || g.n < 2 || !(g.extent > 0.0) {
            return Err(SolverError::InvalidProblem(format!("grid must be 1-D or 2-D with n >= 2, got {g:?}")));
        }
        if self.mollifier_levels.is_empty() || !increasing(&self.mollifier_levels) {
            return Err(SolverError::InvalidProblem("mollifier_levels must be nonempty and increasing".into()));
        }
        if self.mollifier_levels.iter().any(|k| !(*k > 0.0)) {
            return Err(SolverError::InvalidProblem("mollifier levels must be positive".into()));
        }
        if !increasing(&self.truncation_levels) {
            return Err(SolverError::InvalidProblem("truncation_levels must be increasing".into()));
        }
        Ok(())
    }

    pub fn operator(&self) -> Result<OperatorSpec> {
        let b = self.nfunction.build()?;
        let form = match self.operator.form.as_str() {
            "potential_gradient" => FluxForm::PotentialGradient,
            "z_perturbed" => FluxForm::ZPerturbed { theta: self.operator.theta.unwrap_or(0.5) },
            other => return Err(SolverError::InvalidOperator(format!("unknown flux form `{other}`"))),
        };
        let op = OperatorSpec::new(b, form)?;
        match &self.operator.lower_order {
            Some(p) => op.with_lower_order(p.build()?),
            None => Ok(op),
        }
    }

    /// Datum sampled on `grid`; CSV paths are resolved against `base`.
    pub fn datum_field(&self, grid: &Grid, base: &Path) -> Result<Option<SampledField>> {
        let Datum::L1Sample { values, csv, constant, singular } = &self.datum else { return Ok(None) };
        let given = [values.is_some(), csv.is_some(), constant.is_some(), singular.is_some()];
        if given.iter().filter(|g| **g).count() != 1 {
            return Err(SolverError::InvalidProblem("l1_sample needs exactly one of values, csv, constant, singular".into()));
        }
        let field = if let Some(v) = values {
            SampledField::scalar(grid.dim, grid.n, grid.extent, v.clone())?
        } else if let Some(path) = csv {
            let file = std::fs::File::open(base.join(path)).map_err(crate::field::FieldError::Io)?;
            SampledField::read_csv(file)?
        } else if let Some(c) = constant {
            SampledField::constant(grid.dim, grid.n, grid.extent, *c)?
        } else {
            let s = singular.as_ref().expect("one source is present");
            if s.center.len() != grid.dim {
                return Err(SolverError::InvalidProblem("singular center has the wrong dimension".into()));
            }
            let (c, e) = (s.center.clone(), s.exponent);
            SampledField::from_fn(grid.dim, grid.n, grid.extent, move |x| {
                let r2: f64 = c.iter().enumerate().map(|(i, ci)| (x[i] - ci).powi(2)).sum();
                r2.sqrt().powf(e)
            })?
        };
        if field.dim() != grid.dim || field.n() != grid.n || field.extent() != grid.extent {
            return Err(SolverError::InvalidProblem("datum grid differs from the problem grid".into()));
        }
        Ok(Some(field))
    }

    /// Total variation of the datum: `|μ|(Ω)` or `‖f‖₁`.
    fn datum_mass(&self, sample: Option<&SampledField>) -> f64 {
        match (&self.datum, sample) {
            (Datum::AtomicMeasure { atoms }, _) => atoms.iter().map(|a| a.weight.abs()).sum(),
            (_, Some(f)) => f.l1_norm(),
            _ => 0.0,
        }
    }

    fn level_datum(&self, grid: &Grid, k: f64, sample: Option<&SampledField>) -> Result<SampledField> {
        match &self.datum {
            Datum::AtomicMeasure { atoms } => mollify_measure(atoms, k, grid, Exec::Sequential),
            _ => Ok(approximate_l1_data(sample.expect("sampled datum"), k, Exec::Sequential)?.field),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct WeakStarRow {
    pub test_function: String,
    pub pairing: f64,
    pub target: f64,
    pub relative_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelReport {
    pub level: f64,
    pub datum_l1: f64,
    pub datum_sup: f64,
    pub solve: Solution,
    pub energy_nonincreasing: bool,
    pub minimum: f64,
    /// Worst `|Σ A·∇φ − Σ f φ| / (‖φ‖_∞ ‖f_k‖₁)` over the random test functions.
    pub test_identity: f64,
    pub apriori: AprioriReport,
    pub tail_constant: f64,
    pub weak_star: Vec<WeakStarRow>,
}

#[derive(Debug, Clone, Serialize)]
pub struct OperatorSummary {
    pub form: String,
    pub b: String,
    pub p: String,
    pub d0: f64,
    pub d: f64,
    pub validation: OperatorValidation,
}

#[derive(Debug, Clone, Serialize)]
pub struct TargetSummary {
    pub growth_class: GrowthClass,
    pub k: f64,
    pub k_bar: f64,
    pub c1: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub problem: ProblemSpec,
    pub operator: OperatorSummary,
    pub datum_mass: f64,
    pub levels: Vec<LevelReport>,
    pub cauchy: Option<CauchyMatrix>,
    pub tail_levels: Vec<f64>,
    pub flux_consistency: FluxConsistency,
    pub targets: Option<TargetSummary>,
    pub regularity: Option<RegularityReport>,
    pub refinement: Option<RefinementVerdict>,
    pub uniqueness: Option<UniquenessReport>,
    /// Invariants that failed; empty for a clean run.
    pub flags: Vec<String>,
    #[serde(skip)]
    pub solutions: Vec<SampledField>,
    #[serde(skip)]
    pub data: Vec<SampledField>,
}

/// Smooth test functions for the weak-* pairing.
pub fn weak_star_tests() -> Vec<(&'static str, fn(&[f64]) -> f64)> {
    vec![
        ("1+|x|^2", |x| 1.0 + x.iter().map(|v| v * v).sum::<f64>()),
        ("exp(x1-x2)", |x| (x[0] - x.get(1).copied().unwrap_or(0.0)).exp()),
        ("2+sin(pi x1)cos(pi x2)", |x| {
            2.0 + (std::f64::consts::PI * x[0]).sin() * (std::f64::consts::PI * x.get(1).copied().unwrap_or(0.0)).cos()
        }),
    ]
}

pub fn weak_star_rows(atoms: &[Atom], f_k: &SampledField) -> Vec<WeakStarRow> {
    let cm = f_k.cell_measure();
    weak_star_tests()
        .into_iter()
        .map(|(name, phi)| {
            let pairing: f64 =
                (0..f_k.cells()).map(|c| f_k.values()[c] * phi(&f_k.centre(c)[..f_k.dim()])).sum::<f64>() * cm;
            let target: f64 = atoms.iter().map(|a| a.weight * phi(&a.location)).sum();
            WeakStarRow { test_function: name.into(), pairing, target, relative_error: ((pairing - target) / target).abs() }
        })
        .collect()
}

/// Worst normalised weak-form defect over seeded random test functions that
/// vanish on the boundary cells.
pub fn test_identity(op: &OperatorSpec, u: &SampledField, f: &SampledField, seed: u64, exec: Exec) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mass = f.l1_norm();
    let mut worst: f64 = 0.0;
    for _ in 0..TEST_FUNCTIONS {
        let vals: Vec<f64> =
            (0..u.cells()).map(|c| if u.is_boundary_cell(c) { 0.0 } else { rng.gen_range(-1.0..1.0) }).collect();
        let phi = u.with_values(1, vals)?;
        let defect = weak_form_defect(op, u, f, &phi, exec)?;
        let scale = phi.sup_norm() * mass;
        if scale > 0.0 {
            worst = worst.max(defect.abs() / scale);
        } else if defect != 0.0 {
            worst = f64::INFINITY;
        }
    }
    Ok(worst)
}

fn solve_level(
    spec: &ProblemSpec,
    op: &OperatorSpec,
    grid: &Grid,
    k: f64,
    sample: Option<&SampledField>,
) -> Result<(SampledField, Solution)> {
    let run = || -> Result<(SampledField, Solution)> {
        let f_k = spec.level_datum(grid, k, sample)?;
        let sol = solve_approximate(op, &f_k, &SolveOptions { exec: Exec::Sequential, ..Default::default() })?;
        Ok((f_k, sol))
    };
    run().map_err(|e| e.at_level(k))
}

/// Mollify, solve every level, and run the a priori, convergence and
/// regularity diagnostics. Levels and refinement grids are solved
/// concurrently under `exec`; each solve is sequential.
pub fn run_problem(spec: &ProblemSpec, base: &Path, exec: Exec) -> Result<SolveReport> {
    spec.check()?;
    let op = spec.operator()?;
    let validation = op.validate(OPERATOR_SAMPLES, spec.seed)?;
    let sample = spec.datum_field(&spec.grid, base)?;
    let mass = spec.datum_mass(sample.as_ref());
    let solved: Vec<Result<(SampledField, Solution)>> =
        exec.map(&spec.mollifier_levels, |&k| solve_level(spec, &op, &spec.grid, k, sample.as_ref()));
    let mut data = Vec::new();
    let mut solutions = Vec::new();
    let mut levels = Vec::new();
    let mut flags = Vec::new();
    if !validation.passes() {
        flags.push("operator structural conditions failed on samples".to_string());
    }
    let nonnegative = match &spec.datum {
        Datum::AtomicMeasure { atoms } => atoms.iter().all(|a| a.weight >= 0.0),
        _ => sample.as_ref().is_some_and(|f| f.values().iter().all(|v| *v >= 0.0)),
    };
    for (i, (&k, s)) in spec.mollifier_levels.iter().zip(solved).enumerate() {
        let (f_k, sol) = s?;
        let truncation =
            if spec.truncation_levels.is_empty() { default_truncation_levels(&sol.u) } else { spec.truncation_levels.clone() };
        let apriori = apriori_report(&op, &sol.u, mass, &truncation, exec).map_err(|e| e.at_level(k))?;
        let energy_nonincreasing =
            sol.energy_history.windows(2).all(|w| w[1] <= w[0] + 1e-12 * w[0].abs().max(f64::MIN_POSITIVE));
        let minimum = sol.u.values().iter().copied().fold(f64::INFINITY, f64::min);
        let identity = test_identity(&op, &sol.u, &f_k, spec.seed.wrapping_add(i as u64), exec)?;
        let weak_star = match &spec.datum {
            Datum::AtomicMeasure { atoms } => weak_star_rows(atoms, &f_k),
            _ => Vec::new(),
        };
        if apriori.violations > 0 {
            flags.push(format!("level {k}: a priori energy bound violated at {} truncation levels", apriori.violations));
        }
        if matches!(op.form, FluxForm::PotentialGradient) && !energy_nonincreasing {
            flags.push(format!("level {k}: energy increased across a Newton step"));
        }
        if sol.coercivity_margin < -1e-10 {
            flags.push(format!("level {k}: discrete coercivity margin {}", sol.coercivity_margin));
        }
        if identity > TEST_IDENTITY_TOL {
            flags.push(format!("level {k}: weak-form identity defect {identity:e}"));
        }
        if nonnegative && matches!(op.form, FluxForm::PotentialGradient) && minimum < -sol.tolerance.max(1e-12) {
            flags.push(format!("level {k}: minimum principle violated, min u = {minimum:e}"));
        }
        levels.push(LevelReport {
            level: k,
            datum_l1: f_k.l1_norm(),
            datum_sup: f_k.sup_norm(),
            solve: sol.clone(),
            energy_nonincreasing,
            minimum,
            test_identity: identity,
            apriori,
            tail_constant: 0.0,
            weak_star,
        });
        data.push(f_k);
        solutions.push(sol.u);
    }
    let finest = solutions.last().expect("at least one level");
    let top = finest.sup_norm();
    let tail_levels = if top > 0.0 { geomspace(0.05 * top, top, 12) } else { Vec::new() };
    for (lr, u) in levels.iter_mut().zip(&solutions) {
        lr.tail_constant = tail_constant(&op.b, u, &tail_levels)?;
    }
    let cauchy = (solutions.len() >= 2)
        .then(|| cauchy_matrix(&spec.mollifier_levels, &solutions, &default_taus(finest)))
        .transpose()?;
    let flux = flux_consistency(&op, finest, data.last().expect("at least one level"), exec)?;

    let mut targets = None;
    let mut regularity = None;
    let mut refinement = None;
    let c0 = 2.0 / op.d0;
    if mass > 0.0 {
        let t = regularity_targets(&op.b, spec.grid.dim, c0 * mass, finest.diameter(), spec.growth_override, exec)?;
        targets = Some(TargetSummary { growth_class: t.growth_class, k: t.k, k_bar: t.k_bar, c1: t.c1 });
        regularity = Some(regularity_verdict(finest, &element_gradient_field(finest)?, &t, exec)?);
        if !spec.refinement_grids.is_empty() {
            let k = *spec.mollifier_levels.last().expect("nonempty");
            let reports: Vec<Result<RegularityReport>> = exec.map(&spec.refinement_grids, |&n| {
                let grid = spec.grid.with_n(n);
                let local = match &spec.datum {
                    Datum::AtomicMeasure { .. } => None,
                    _ => spec.datum_field(&grid, base)?,
                };
                let (_, sol) = solve_level(spec, &op, &grid, k, local.as_ref())?;
                regularity_verdict(&sol.u, &element_gradient_field(&sol.u)?, &t, Exec::Sequential)
            });
            let reports: Vec<RegularityReport> = reports.into_iter().collect::<Result<_>>()?;
            refinement = Some(refinement_verdict(&spec.refinement_grids, &reports));
        }
    }
    let uniqueness = match (spec.approximation_mode, &sample) {
        (ApproximationMode::TwoSequenceUniqueness, Some(f)) => {
            Some(uniqueness_experiment(&op, f, &spec.mollifier_levels, exec)?)
        }
        (ApproximationMode::TwoSequenceUniqueness, None) => {
            return Err(SolverError::InvalidProblem("the uniqueness experiment needs an L1 sample".into()))
        }
        _ => None,
    };
    Ok(SolveReport {
        problem: spec.clone(),
        operator: OperatorSummary {
            form: op.form.name().into(),
            b: op.b.name(),
            p: op.p.name(),
            d0: op.d0,
            d: op.d,
            validation,
        },
        datum_mass: mass,
        levels,
        cauchy,
        tail_levels,
        flux_consistency: flux,
        targets,
        regularity,
        refinement,
        uniqueness,
        flags,
        solutions,
        data,
    })
}

/// Convenience constructor for the quadratic Dirac problem on the unit box.
pub fn dirac_problem(dim: usize, n: usize, levels: &[f64]) -> ProblemSpec {
    ProblemSpec {
        grid: Grid { dim, n, extent: 1.0 },
        nfunction: NFunction::power(2.0).expect("valid").to_spec(),
        operator: OperatorConfig::default(),
        datum: Datum::AtomicMeasure { atoms: vec![Atom { location: vec![0.5; dim], weight: 1.0 }] },
        mollifier_levels: levels.to_vec(),
        truncation_levels: Vec::new(),
        approximation_mode: ApproximationMode::MollifySequence,
        refinement_grids: Vec::new(),
        growth_override: None,
        seed: default_seed(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_round_trips_through_json() {
        let s = dirac_problem(2, 33, &[4.0, 8.0]);
        let text = serde_json::to_string(&s).unwrap();
        assert_eq!(ProblemSpec::parse(&text).unwrap(), s);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = r#"{"grid":{"dim":1,"n":8,"extent":1},"nfunction":{"kind":"power","params":{"p":2}},
            "datum":{"type":"l1_sample","constant":1},"mollifier_levels":[4],"bogus":1}"#;
        assert!(ProblemSpec::parse(text).is_err());
    }

    #[test]
    fn small_constant_problem_runs_clean() {
        let text = r#"{"grid":{"dim":1,"n":64,"extent":1},"nfunction":{"kind":"power","params":{"p":3}},
            "datum":{"type":"l1_sample","constant":1},"mollifier_levels":[4,8,16]}"#;
        let rep = run_problem(&ProblemSpec::parse(text).unwrap(), Path::new("."), Exec::Sequential).unwrap();
        assert!(rep.flags.is_empty(), "{:?}", rep.flags);
        assert_eq!(rep.levels.len(), 3);
    }
}
