//! Decreasing and maximal rearrangements and Orlicz-Marcinkiewicz
//! quasi-norms.

use std::io::Write;

use serde::Serialize;

use super::{NormError, Result};
use crate::exec::Exec;
use crate::field::{FieldError, SampledField};
use crate::nfunction::{Growth, NFunctionError};
use crate::numerics::sum::NeumaierSum;

/// Step profile of `f*` with steps of width `cell_measure`, and `f**` at the
/// step boundaries.
#[derive(Debug, Clone, Serialize)]
pub struct RearrangementProfile {
    pub cell_measure: f64,
    /// `f*` on `[i m, (i + 1) m)`.
    pub fstar: Vec<f64>,
    /// `∫_0^{(i+1) m} f*` by compensated prefix sums.
    pub prefix: Vec<f64>,
}

/// Sort `|f|` in decreasing order, ties broken by cell index.
pub fn rearrange(f: &SampledField, exec: Exec) -> Result<RearrangementProfile> {
    if !f.is_scalar() {
        return Err(FieldError::NotScalar.into());
    }
    let mut keyed: Vec<(f64, usize)> = f.values().iter().map(|v| v.abs()).zip(0..).collect();
    exec.sort_by(&mut keyed, |a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let m = f.cell_measure();
    let fstar: Vec<f64> = keyed.into_iter().map(|(v, _)| v).collect();
    let mut acc = NeumaierSum::default();
    let prefix = fstar
        .iter()
        .map(|&v| {
            acc.add(v);
            acc.total() * m
        })
        .collect();
    Ok(RearrangementProfile { cell_measure: m, fstar, prefix })
}

impl RearrangementProfile {
    pub fn total_measure(&self) -> f64 {
        self.cell_measure * self.fstar.len() as f64
    }

    /// Right-continuous `f*(s)`; zero beyond `|Ω|`.
    pub fn fstar_at(&self, s: f64) -> f64 {
        let i = (s / self.cell_measure).floor();
        if s < 0.0 || i >= self.fstar.len() as f64 {
            return 0.0;
        }
        self.fstar[i as usize]
    }

    /// `f**(s) = (1/s) ∫_0^s f*`, with `f**(0) = f*(0)`.
    pub fn fstarstar_at(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return self.fstar.first().copied().unwrap_or(0.0);
        }
        let i = (s / self.cell_measure).floor() as usize;
        let before = if i == 0 { 0.0 } else { self.prefix[(i - 1).min(self.prefix.len() - 1)] };
        let partial = if i < self.fstar.len() { (s - i as f64 * self.cell_measure) * self.fstar[i] } else { 0.0 };
        (before + partial) / s
    }

    /// `f**` at the step boundaries `s_i = (i + 1) m`.
    pub fn fstarstar(&self) -> Vec<f64> {
        self.prefix.iter().enumerate().map(|(i, p)| p / ((i + 1) as f64 * self.cell_measure)).collect()
    }

    /// `|{f* > t}|`.
    pub fn distribution(&self, t: f64) -> f64 {
        self.fstar.partition_point(|&v| v > t) as f64 * self.cell_measure
    }

    pub fn integral(&self) -> f64 {
        self.prefix.last().copied().unwrap_or(0.0)
    }

    /// CSV with columns `s,fstar,fstarstar`, one row per step boundary
    /// preceded by the row at `s = 0`.
    pub fn write_csv<W: Write>(&self, w: W) -> std::io::Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let io = |e: csv::Error| std::io::Error::other(e);
        wr.write_record(["s", "fstar", "fstarstar"]).map_err(io)?;
        let first = self.fstar.first().copied().unwrap_or(0.0);
        wr.write_record(["0".to_string(), first.to_string(), first.to_string()]).map_err(io)?;
        for (i, fss) in self.fstarstar().into_iter().enumerate() {
            let s = (i + 1) as f64 * self.cell_measure;
            let next = self.fstar.get(i + 1).copied().unwrap_or(0.0);
            wr.write_record([s.to_string(), next.to_string(), fss.to_string()]).map_err(io)?;
        }
        wr.flush()
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct MarcinkiewiczNorm {
    pub value: f64,
    /// Some step boundaries were skipped because `1/s` left the trusted
    /// range of the inverse.
    pub truncated: bool,
}

/// `sup_s f**(s) / φ⁻¹(1/s)` over the step boundaries.
pub fn marcinkiewicz_norm<G: Growth + ?Sized>(phi: &G, f: &SampledField, exec: Exec) -> Result<MarcinkiewiczNorm> {
    let prof = rearrange(f, exec)?;
    let fss = prof.fstarstar();
    let m = prof.cell_measure;
    let ratios: Vec<std::result::Result<Option<f64>, NFunctionError>> = exec.map_range(fss.len(), |i| {
        let s = (i + 1) as f64 * m;
        match phi.inverse_value(1.0 / s) {
            Ok(inv) if inv > 0.0 => Ok(Some(fss[i] / inv)),
            Ok(_) => Ok(None),
            Err(NFunctionError::DomainCapExceeded { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    });
    let mut value: f64 = 0.0;
    let mut truncated = false;
    for r in ratios {
        match r? {
            Some(v) => value = value.max(v),
            None => truncated = true,
        }
    }
    Ok(MarcinkiewiczNorm { value, truncated })
}

/// Tail estimate of `limsup_{t→∞} t / φ⁻¹(1/|{|f| > t}|)`: the max over the
/// top `tail_fraction` of distinct levels, skipping levels whose super-level
/// set is empty.
pub fn weak_marcinkiewicz<G: Growth + ?Sized>(phi: &G, f: &SampledField, tail_fraction: f64, exec: Exec) -> Result<f64> {
    if !(tail_fraction > 0.0 && tail_fraction < 1.0) {
        return Err(NormError::InvalidArgument(format!("tail fraction must lie in (0, 1), got {tail_fraction}")));
    }
    let prof = rearrange(f, exec)?;
    let m = prof.cell_measure;
    // (level, number of cells strictly above it)
    let mut levels: Vec<(f64, usize)> = Vec::new();
    for (i, &v) in prof.fstar.iter().enumerate() {
        if levels.last().is_none_or(|&(l, _)| v < l) {
            levels.push((v, i));
        }
    }
    if levels.len() < 3 {
        return Err(NormError::EmptyTail { levels: levels.len() });
    }
    let take = ((levels.len() as f64 * tail_fraction).ceil() as usize).clamp(2, levels.len());
    let mut best: f64 = 0.0;
    for &(t, above) in &levels[..take] {
        if above == 0 || t == 0.0 {
            continue;
        }
        let mu = above as f64 * m;
        match phi.inverse_value(1.0 / mu) {
            Ok(inv) if inv > 0.0 => best = best.max(t / inv),
            Ok(_) | Err(NFunctionError::DomainCapExceeded { .. }) => {}
            Err(e) => return Err(e.into()),
        }
    }
    Ok(best)
}
