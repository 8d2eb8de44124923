use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context as _, Result};
use orlicz_core::acceptance::{run_suite, Suite};
use orlicz_core::embedding::{embedding_functions, regularity_targets, EmbeddingError, GrowthClass, Target};
use orlicz_core::nfunction::diagnostics::{
    delta2_stats, dominates_much, simonenko_indices, validate, Delta2Stats, DominationEvidence, SimonenkoIndices,
    ValidationReport,
};
use orlicz_core::nfunction::spec::NFunctionSpec;
use orlicz_core::nfunction::{Growth, NFunction};
use orlicz_core::norms::{luxemburg_norm, marcinkiewicz_norm, modular, rearrange, weak_marcinkiewicz, MarcinkiewiczNorm};
use orlicz_core::numerics::geomspace;
use orlicz_core::solver::regularity::TAIL_FRACTION;
use orlicz_core::solver::{run_problem, ProblemSpec};
use orlicz_core::{Exec, SampledField};
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::output::{announce, inline_or_file, series, Out};
use crate::{EmbedArgs, NfunArgs, NfunSource, NormArgs, SolveArgs, VerifyArgs};

pub struct Context {
    pub out: Out,
    pub seed: u64,
    pub exec: Exec,
}

/// Invariant violations raised by a command; any entry makes the exit code nonzero.
pub type Flags = Vec<String>;

#[derive(Serialize)]
struct RunConfig<'a, A: Serialize> {
    command: &'a str,
    seed: u64,
    args: &'a A,
}

impl NfunSource {
    fn resolve(&self) -> Result<NFunctionSpec> {
        if let Some(text) = &self.spec {
            return Ok(NFunctionSpec::parse(&inline_or_file(text)?)?);
        }
        let kind = self.kind.clone().ok_or_else(|| anyhow!("give the N-function with --spec or --kind"))?;
        let mut params = Map::new();
        for (name, v) in [("p", self.p), ("q", self.q), ("beta", self.beta), ("coef", self.coef)] {
            if let Some(v) = v {
                params.insert(name.into(), json!(v));
            }
        }
        Ok(NFunctionSpec { kind, params: Value::Object(params) })
    }
}

fn build(spec: &NFunctionSpec) -> Result<NFunction> {
    spec.build().with_context(|| format!("building N-function `{}`", spec.kind))
}

#[derive(Serialize)]
struct Delta2Report {
    stats: Delta2Stats,
    verdict: &'static str,
}

#[derive(Serialize)]
struct NfunReport {
    name: String,
    spec: NFunctionSpec,
    domain_cap: f64,
    validation: ValidationReport,
    /// `(t, B(t), B'(t))`.
    table: Vec<[f64; 3]>,
    /// `(s, B̃(s))`.
    conjugate: Option<Vec<[f64; 2]>>,
    delta2: Option<Delta2Report>,
    indices: Option<SimonenkoIndices>,
    domination: Option<DominationEvidence>,
}

pub fn nfun(ctx: &Context, a: &NfunArgs) -> Result<Flags> {
    let spec = a.source.resolve()?;
    let b = build(&spec)?;
    let cap = b.domain_cap();
    let tmax = a.tmax.unwrap_or(cap.min(100.0));
    if !(a.tmin > 0.0 && tmax > a.tmin && a.points >= 2) {
        bail!("need 0 < tmin < tmax and at least two points");
    }
    let grid = geomspace(a.tmin, tmax, a.points);
    let table = grid.iter().map(|&t| Ok([t, b.eval(t)?, b.derivative(t)?])).collect::<Result<Vec<_>>>()?;
    let conjugate = if a.conjugate {
        let c = b.conjugate()?;
        let top = c.domain_cap().min(tmax);
        Some(geomspace(a.tmin.min(top / 2.0), top, a.points).iter().map(|&s| Ok([s, c.eval(s)?])).collect::<Result<Vec<_>>>()?)
    } else {
        None
    };
    let delta2 = if a.delta2 {
        let stats = delta2_stats(&b, 1.0, (cap / 2.0).min(1e12), 2000, ctx.exec)?;
        let verdict = if stats.growing_evidence { "NOT-Δ₂: doubling ratio grows without bound" } else { "Δ₂ on the sampled range" };
        Some(Delta2Report { stats, verdict })
    } else {
        None
    };
    let indices =
        if a.indices { Some(simonenko_indices(&b, 1e-3, (cap / 2.0).min(1e100), 400, ctx.exec)?) } else { None };
    let domination = match &a.lower_order {
        Some(text) => {
            let p = build(&NFunctionSpec::parse(&inline_or_file(text)?)?)?;
            let tmax = (cap / 4.0).min(p.domain_cap()).min(1e8);
            Some(dominates_much(&p, &b, &[1e-3, 1e-2, 0.1, 1.0], tmax, 200)?)
        }
        None => None,
    };
    let validation = validate(&b)?;
    let mut flags = Flags::new();
    if !validation.is_valid() {
        flags.push(format!("{} fails the N-function checks: {validation:?}", b.name()));
    }
    if domination.as_ref().is_some_and(|d| !d.holds) {
        flags.push("the lower-order function is not dominated".into());
    }

    println!("{}  (domain cap {cap:e})", b.name());
    println!("{:>14} {:>16} {:>16}", "t", "B(t)", "B'(t)");
    for r in &table {
        println!("{:>14.6e} {:>16.8e} {:>16.8e}", r[0], r[1], r[2]);
    }
    if let Some(c) = &conjugate {
        println!("{:>14} {:>16}", "s", "conjugate(s)");
        for r in c {
            println!("{:>14.6e} {:>16.8e}", r[0], r[1]);
        }
    }
    if let Some(d) = &delta2 {
        println!("max B(2s)/B(s) = {:.4}; {}", d.stats.ratio_max, d.verdict);
    }
    if let Some(i) = &indices {
        println!("index estimates: lower {:.6}, upper {:.6}", i.lower, i.upper);
    }
    if let Some(d) = &domination {
        println!("lower-order domination holds: {}", d.holds);
    }

    let report = NfunReport { name: b.name(), spec, domain_cap: cap, validation, table, conjugate, delta2, indices, domination };
    let config = RunConfig { command: "nfun", seed: ctx.seed, args: a };
    let mut written = vec![ctx.out.json("nfun.json", "nfun", &config, &report)?];
    written.push(ctx.out.csv("nfun_table.csv", &["t", "B", "dB"], report.table.iter().map(|r| r.to_vec()))?);
    let mut plot = vec![series("B", report.table.iter().map(|r| (r[0], r[1])).collect())];
    if let Some(c) = &report.conjugate {
        written.push(ctx.out.csv("nfun_conjugate.csv", &["s", "conjugate"], c.iter().map(|r| r.to_vec()))?);
        plot.push(series("conjugate", c.iter().map(|r| (r[0], r[1])).collect()));
    }
    if let Some(d) = &report.delta2 {
        let pts: Vec<(f64, f64)> = d.stats.ratio_series.clone();
        written.push(ctx.out.csv("nfun_delta2.csv", &["s", "ratio"], pts.iter().map(|&(s, r)| vec![s, r]))?);
        written.push(ctx.out.svg("nfun_delta2.svg", "B(2s)/B(s)", &[series("ratio", pts)], true, false)?);
    }
    written.push(ctx.out.svg("nfun.svg", &report.name, &plot, true, true)?);
    announce(&written);
    Ok(flags)
}

#[derive(Serialize)]
struct NormReport {
    nfunction: String,
    phi: String,
    dim: usize,
    n: usize,
    extent: f64,
    luxemburg: f64,
    /// `(λ, ∫ B(|f|/λ))` at `λ = 0.5, 1, 2` times the norm.
    modular: Vec<[f64; 2]>,
    integral: f64,
    marcinkiewicz: MarcinkiewiczNorm,
    weak_marcinkiewicz: f64,
}

pub fn norm(ctx: &Context, a: &NormArgs) -> Result<Flags> {
    let b = build(&a.source.resolve()?)?;
    let phi = match &a.phi {
        Some(text) => build(&NFunctionSpec::parse(&inline_or_file(text)?)?)?,
        None => b.clone(),
    };
    let file = fs::File::open(&a.field).with_context(|| format!("opening {}", a.field.display()))?;
    let f = SampledField::read_csv(file).with_context(|| format!("reading {}", a.field.display()))?;
    let f = if f.is_scalar() { f } else { f.with_values(1, f.magnitudes())? };
    let lux = luxemburg_norm(&b, &f, ctx.exec)?;
    let modular_rows = if lux > 0.0 {
        [0.5, 1.0, 2.0].iter().map(|s| Ok([s * lux, modular(&b, &f, s * lux, ctx.exec)?])).collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };
    let prof = rearrange(&f, ctx.exec)?;
    let report = NormReport {
        nfunction: b.name(),
        phi: phi.name(),
        dim: f.dim(),
        n: f.n(),
        extent: f.extent(),
        luxemburg: lux,
        modular: modular_rows,
        integral: prof.integral(),
        marcinkiewicz: marcinkiewicz_norm(&phi, &f, ctx.exec)?,
        weak_marcinkiewicz: weak_or_zero(&phi, &f, ctx.exec)?,
    };
    println!("Luxemburg norm ({}): {:.10e}", report.nfunction, report.luxemburg);
    for m in &report.modular {
        println!("  modular at lambda = {:.6e}: {:.10e}", m[0], m[1]);
    }
    println!("Marcinkiewicz norm ({}): {:.10e}{}", report.phi, report.marcinkiewicz.value, if report.marcinkiewicz.truncated { " (range truncated)" } else { "" });
    println!("weak Marcinkiewicz tail estimate: {:.10e}", report.weak_marcinkiewicz);

    let config = RunConfig { command: "norm", seed: ctx.seed, args: a };
    let mut written = vec![ctx.out.json("norm.json", "norm", &config, &report)?];
    written.push(ctx.out.with_writer("rearrangement.csv", |w| Ok(prof.write_csv(w)?))?);
    let fss = prof.fstarstar();
    let s = |i: usize| (i + 1) as f64 * prof.cell_measure;
    written.push(ctx.out.svg(
        "rearrangement.svg",
        "decreasing rearrangement",
        &[
            series("f*", prof.fstar.iter().enumerate().map(|(i, &v)| (s(i), v)).collect()),
            series("f**", fss.iter().enumerate().map(|(i, &v)| (s(i), v)).collect()),
        ],
        true,
        true,
    )?);
    announce(&written);
    Ok(Flags::new())
}

fn weak_or_zero<G: Growth + ?Sized>(phi: &G, f: &SampledField, exec: Exec) -> Result<f64> {
    match weak_marcinkiewicz(phi, f, TAIL_FRACTION, exec) {
        Ok(v) => Ok(v),
        Err(orlicz_core::norms::NormError::EmptyTail { .. }) => Ok(0.0),
        Err(e) => Err(e.into()),
    }
}

#[derive(Serialize)]
struct EmbedReport {
    nfunction: String,
    dim: usize,
    growth: orlicz_core::embedding::GrowthEvidence,
    origin_normalized: bool,
    b_n_tail_slope: f64,
    targets: orlicz_core::embedding::RegularityTargets,
}

fn parse_class(s: &Option<String>) -> Option<GrowthClass> {
    match s.as_deref() {
        Some("slow") => Some(GrowthClass::Slow),
        Some("fast") => Some(GrowthClass::Fast),
        _ => None,
    }
}

pub fn embed(ctx: &Context, a: &EmbedArgs) -> Result<Flags> {
    let b = build(&a.source.resolve()?)?;
    let class = parse_class(&a.override_class);
    let data = match embedding_functions(&b, a.dim, class, ctx.exec) {
        Err(EmbeddingError::UndeterminedGrowth) => {
            bail!("the growth of {} at infinity could not be classified; rerun with --override slow or --override fast", b.name())
        }
        other => other?,
    };
    let diameter = a.diameter.unwrap_or((a.dim as f64).sqrt());
    let targets = regularity_targets(&b, a.dim, a.k, diameter, class, ctx.exec)?;
    let report = EmbedReport {
        nfunction: b.name(),
        dim: a.dim,
        growth: data.growth.clone(),
        origin_normalized: data.origin_normalized,
        b_n_tail_slope: data.b_n_tail_slope(32),
        targets,
    };
    println!("{} in dimension {}: growth {:?}", report.nfunction, a.dim, report.growth.class);
    println!("log-log slope of B_N over the last knots: {:.4}", report.b_n_tail_slope);

    let config = RunConfig { command: "embed", seed: ctx.seed, args: a };
    let knots = |t: &orlicz_core::embedding::LogLogTable| t.knots().into_iter().map(|(x, y)| vec![x, y]);
    let mut written = vec![ctx.out.json("embed.json", "embed", &config, &report)?];
    written.push(ctx.out.csv("embed_h_n.csv", &["s", "H_N"], knots(&data.h))?);
    written.push(ctx.out.csv("embed_b_n.csv", &["t", "B_N"], knots(&data.b_n))?);
    written.push(ctx.out.csv("embed_phi_n.csv", &["s", "phi_N"], knots(&data.phi_n))?);
    let t = &report.targets;
    let named: Vec<&Target> = [&t.phi1, &t.psi1, &t.phi2, &t.psi2, &t.gradient_base].into_iter().flatten().collect();
    let grid = geomspace(1e-2, 1e4, 61);
    let mut header = vec!["t"];
    header.extend(named.iter().map(|x| x.name()));
    let rows = grid.iter().map(|&s| {
        let mut r = vec![s];
        r.extend(named.iter().map(|x| x.value(s).unwrap_or(f64::NAN)));
        r
    });
    written.push(ctx.out.csv("embed_targets.csv", &header, rows)?);
    let plot: Vec<_> = named
        .iter()
        .map(|x| series(x.name(), grid.iter().filter_map(|&s| x.value(s).ok().map(|v| (s, v))).collect()))
        .chain(std::iter::once(series("B_N", data.b_n.knots())))
        .collect();
    written.push(ctx.out.svg("embed.svg", "embedding functions and targets", &plot, true, true)?);
    announce(&written);
    Ok(Flags::new())
}

pub fn solve(ctx: &Context, a: &SolveArgs) -> Result<Flags> {
    let text = fs::read_to_string(&a.problem).with_context(|| format!("reading {}", a.problem.display()))?;
    let mut spec = ProblemSpec::parse(&text).with_context(|| format!("parsing {}", a.problem.display()))?;
    // a seed written in the spec wins over --seed
    let has_seed = serde_json::from_str::<Value>(&text).ok().is_some_and(|v| v.get("seed").is_some());
    if !has_seed {
        spec.seed = ctx.seed;
    }
    let base = a.problem.parent().unwrap_or(Path::new("."));
    let rep = run_problem(&spec, base, ctx.exec)?;

    for l in &rep.levels {
        println!(
            "level {:>8}: newton {:>3}, residual {:.2e} (tol {:.2e}), sup u {:.6e}, identity {:.1e}",
            l.level,
            l.solve.newton_iterations,
            l.solve.residual_max,
            l.solve.tolerance,
            l.solve.u.sup_norm(),
            l.test_identity
        );
    }
    if let Some(t) = &rep.targets {
        println!("growth class {:?}, K = {:.6e}", t.growth_class, t.k);
    }
    if let Some(r) = &rep.refinement {
        for t in &r.trends {
            println!("refinement {:<10} {:?} variation {:.3e} -> {:?}", t.name, t.values, t.variation, t.verdict);
        }
    }
    if let Some(u) = &rep.uniqueness {
        println!("uniqueness discrepancy {:?}, monotone {}", u.discrepancy, u.monotone);
    }

    let config = RunConfig { command: "solve", seed: spec.seed, args: &spec };
    let mut written = vec![ctx.out.json("solve.json", "solve", &config, &rep)?];
    for (k, (u, f)) in spec.mollifier_levels.iter().zip(rep.solutions.iter().zip(&rep.data)) {
        written.push(ctx.out.with_writer(&format!("solution_k{k}.csv"), |w| Ok(u.write_csv(w)?))?);
        written.push(ctx.out.with_writer(&format!("datum_k{k}.csv"), |w| Ok(f.write_csv(w)?))?);
    }
    if let Some(last) = rep.levels.last() {
        let rows = &last.apriori.rows;
        written.push(ctx.out.svg(
            "apriori.svg",
            "gradient energy of truncations against the bound",
            &[
                series("energy", rows.iter().map(|r| (r.t, r.gradient_energy)).collect()),
                series("c0 t |f|_1", rows.iter().map(|r| (r.t, r.energy_bound)).collect()),
            ],
            true,
            true,
        )?);
    }
    if let (Some(summary), Some(reg), Some(u)) = (&rep.targets, &rep.regularity, rep.solutions.last()) {
        let op = spec.operator()?;
        let targets = regularity_targets(&op.b, spec.grid.dim, summary.k, u.diameter(), spec.growth_override, ctx.exec)?;
        let grad = orlicz_core::solver::element_gradient_field(u)?;
        let g = u.with_values(1, grad.magnitudes())?;
        let mut plot = Vec::new();
        let mut add = |label: &str, field: &SampledField, target: &Option<Target>, q: Option<f64>| -> Result<()> {
            let prof = rearrange(field, ctx.exec)?;
            let top = field.sup_norm();
            if top <= 0.0 {
                return Ok(());
            }
            let levels = geomspace(1e-3 * top, top, 60);
            plot.push(series(&format!("|{{{label} > t}}|"), levels.iter().map(|&t| (t, prof.distribution(t))).collect()));
            if let (Some(tg), Some(q)) = (target, q.filter(|q| *q > 0.0)) {
                let curve = levels.iter().filter_map(|&t| tg.value(t / q).ok().map(|v| (t, 1.0 / v))).collect();
                plot.push(series(&format!("1/{}(t/q)", tg.name()), curve));
            }
            Ok(())
        };
        add("|u|", u, &targets.phi1, reg.u_phi1)?;
        add("|grad u|", &g, &targets.psi1, reg.grad_psi1)?;
        if targets.gradient_base.is_some() {
            add("|grad u|", &g, &targets.gradient_base, reg.grad_base)?;
        }
        written.push(ctx.out.svg("level_sets.svg", "level sets against regularity targets", &plot, true, true)?);
    }
    announce(&written);
    Ok(rep.flags.clone())
}

pub fn verify(ctx: &Context, a: &VerifyArgs) -> Result<Flags> {
    let suite: Suite = a.suite.parse().map_err(|e: String| anyhow!(e))?;
    let outcomes = run_suite(suite, ctx.seed, ctx.exec);
    for o in &outcomes {
        println!("{}", o.line());
    }
    let failed: Flags = outcomes.iter().filter(|o| !o.passed).map(|o| format!("criterion {} ({}) failed", o.id, o.name)).collect();
    println!("{} of {} criteria passed", outcomes.len() - failed.len(), outcomes.len());
    let config = RunConfig { command: "verify", seed: ctx.seed, args: a };
    announce(&[ctx.out.json("verify.json", "verify", &config, &outcomes)?]);
    Ok(failed)
}
