//! Report plumbing: configuration hashes, the tolerance set, JSON envelopes
//! and minimal SVG line charts.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

/// Hex SHA-256 of the compact JSON encoding of `config`.
pub fn config_hash<T: Serialize>(config: &T) -> String {
    let bytes = serde_json::to_vec(config).expect("configurations serialise");
    Sha256::digest(&bytes).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Every tolerance used by the solver and the acceptance suite.
#[derive(Debug, Clone, Serialize)]
pub struct ToleranceSet {
    pub residual_relative: f64,
    pub flux_regularisation_scale: f64,
    pub apriori_slack: f64,
    pub test_identity: f64,
    pub stable_variation: f64,
    pub sup_variation: f64,
    pub tail_fraction: f64,
    pub luxemburg_bisection: f64,
}

impl Default for ToleranceSet {
    fn default() -> Self {
        use crate::solver::{estimates, problem, regularity};
        ToleranceSet {
            residual_relative: crate::solver::RESIDUAL_TOL,
            flux_regularisation_scale: crate::solver::EPS_SCALE,
            apriori_slack: estimates::APRIORI_SLACK,
            test_identity: problem::TEST_IDENTITY_TOL,
            stable_variation: regularity::STABLE_VARIATION,
            sup_variation: regularity::SUP_VARIATION,
            tail_fraction: regularity::TAIL_FRACTION,
            luxemburg_bisection: 1e-13,
        }
    }
}

/// Report wrapper carrying the configuration hash and tolerances.
#[derive(Debug, Serialize)]
pub struct Envelope<'a, C: Serialize, P: Serialize> {
    pub command: &'a str,
    pub config_hash: String,
    pub config: &'a C,
    pub tolerances: ToleranceSet,
    pub report: &'a P,
}

impl<'a, C: Serialize, P: Serialize> Envelope<'a, C, P> {
    pub fn new(command: &'a str, config: &'a C, report: &'a P) -> Self {
        Envelope { command, config_hash: config_hash(config), config, tolerances: ToleranceSet::default(), report }
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
    text.push('\n');
    std::fs::write(path, text)
}

#[derive(Debug, Clone)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Line chart with optional logarithmic axes. Points that are not finite, or
/// not positive on a log axis, are dropped.
pub fn svg_line_plot(title: &str, series: &[Series], log_x: bool, log_y: bool) -> String {
    let (w, h, m) = (640.0, 420.0, 56.0);
    let tx = |v: f64| if log_x { v.log10() } else { v };
    let ty = |v: f64| if log_y { v.log10() } else { v };
    let keep = |&(x, y): &(f64, f64)| x.is_finite() && y.is_finite() && (!log_x || x > 0.0) && (!log_y || y > 0.0);
    let pts: Vec<Vec<(f64, f64)>> =
        series.iter().map(|s| s.points.iter().filter(|p| keep(p)).map(|&(x, y)| (tx(x), ty(y))).collect()).collect();
    let all = pts.iter().flatten();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !(x0.is_finite() && y0.is_finite()) {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 == x0 {
        x1 = x0 + 1.0;
    }
    if y1 == y0 {
        y1 = y0 + 1.0;
    }
    let sx = |x: f64| m + (x - x0) / (x1 - x0) * (w - 2.0 * m);
    let sy = |y: f64| h - m - (y - y0) / (y1 - y0) * (h - 2.0 * m);
    let mut out = String::new();
    let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(out, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="24" font-size="15" text-anchor="middle">{}</text>"#, w / 2.0, escape(title));
    let _ = writeln!(
        out,
        r#"<path d="M{m} {m} V{} H{}" stroke="black" fill="none"/>"#,
        h - m,
        w - m
    );
    let label = |v: f64, log: bool| if log { format!("1e{v:.1}") } else { format!("{v:.3e}") };
    let _ = writeln!(out, r#"<text x="{m}" y="{}" font-size="11">{}</text>"#, h - m + 16.0, label(x0, log_x));
    let _ = writeln!(out, r#"<text x="{}" y="{}" font-size="11" text-anchor="end">{}</text>"#, w - m, h - m + 16.0, label(x1, log_x));
    let _ = writeln!(out, r#"<text x="4" y="{}" font-size="11">{}</text>"#, h - m, label(y0, log_y));
    let _ = writeln!(out, r#"<text x="4" y="{}" font-size="11">{}</text>"#, m, label(y1, log_y));
    for (i, (s, p)) in series.iter().zip(&pts).enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        if !p.is_empty() {
            let d: Vec<String> = p
                .iter()
                .enumerate()
                .map(|(j, &(x, y))| format!("{}{:.2} {:.2}", if j == 0 { 'M' } else { 'L' }, sx(x), sy(y)))
                .collect();
            let _ = writeln!(out, r#"<path d="{}" stroke="{colour}" stroke-width="1.5" fill="none"/>"#, d.join(" "));
        }
        let ly = m + 16.0 * (i as f64 + 1.0);
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{ly}" font-size="12" fill="{colour}" text-anchor="end">{}</text>"#,
            w - m - 4.0,
            escape(&s.name)
        );
    }
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = serde_json::json!({"n": 1});
        assert_eq!(config_hash(&a), config_hash(&a));
        assert_ne!(config_hash(&a), config_hash(&serde_json::json!({"n": 2})));
        assert_eq!(config_hash(&a).len(), 64);
    }

    #[test]
    fn svg_contains_one_path_per_series() {
        let s = vec![
            Series { name: "a".into(), points: vec![(1.0, 1.0), (10.0, 100.0)] },
            Series { name: "b<c".into(), points: vec![(1.0, 2.0), (10.0, 0.0)] },
        ];
        let svg = svg_line_plot("t", &s, true, true);
        assert_eq!(svg.matches("stroke-width").count(), 2);
        assert!(svg.contains("b&lt;c"));
    }
}
