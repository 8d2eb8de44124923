//! Scalar and vector fields sampled at the cell centres of a uniform grid on
//! the box `[0, L]^dim`, `dim ∈ {1, 2}`, with `n` cells per axis.
//!
//! Cells are numbered with `x` varying fastest: `index = i + n * j`.

use std::io::{Read, Write};

use serde::Serialize;
use thiserror::Error;

use crate::exec::Exec;

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("non-finite sample at cell {0}")]
    NonFinite(usize),
    #[error("invalid field shape: {0}")]
    Shape(String),
    #[error("operation needs a scalar field")]
    NotScalar,
    #[error("CSV parse error at line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, FieldError>;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampledField {
    dim: usize,
    n: usize,
    extent: f64,
    components: usize,
    values: Vec<f64>,
}

impl SampledField {
    fn check_shape(dim: usize, n: usize, extent: f64, components: usize, len: usize) -> Result<()> {
        if !(dim == 1 || dim == 2) {
            return Err(FieldError::Shape(format!("dimension must be 1 or 2, got {dim}")));
        }
        if n == 0 || !(extent > 0.0 && extent.is_finite()) {
            return Err(FieldError::Shape(format!("need n > 0 and positive extent, got n={n}, extent={extent}")));
        }
        if components != 1 && components != dim {
            return Err(FieldError::Shape(format!("{components} components on a {dim}-D grid")));
        }
        let expected = n.pow(dim as u32) * components;
        if len != expected {
            return Err(FieldError::Shape(format!("expected {expected} values, got {len}")));
        }
        Ok(())
    }

    pub fn new(dim: usize, n: usize, extent: f64, components: usize, values: Vec<f64>) -> Result<Self> {
        Self::check_shape(dim, n, extent, components, values.len())?;
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(FieldError::NonFinite(i / components));
        }
        Ok(SampledField { dim, n, extent, components, values })
    }

    pub fn scalar(dim: usize, n: usize, extent: f64, values: Vec<f64>) -> Result<Self> {
        Self::new(dim, n, extent, 1, values)
    }

    pub fn constant(dim: usize, n: usize, extent: f64, c: f64) -> Result<Self> {
        Self::scalar(dim, n, extent, vec![c; n.pow(dim as u32)])
    }

    /// Scalar field from a function of the cell centre.
    pub fn from_fn<F: Fn(&[f64]) -> f64 + Sync + Send>(dim: usize, n: usize, extent: f64, f: F) -> Result<Self> {
        Self::check_shape(dim, n, extent, 1, n.pow(dim as u32))?;
        let h = extent / n as f64;
        let values = Exec::default().map_range(n.pow(dim as u32), |c| {
            let x = [(c % n) as f64 * h + 0.5 * h, (c / n) as f64 * h + 0.5 * h];
            f(&x[..dim])
        });
        Self::scalar(dim, n, extent, values)
    }

    /// Same grid, new values.
    pub fn with_values(&self, components: usize, values: Vec<f64>) -> Result<Self> {
        Self::new(self.dim, self.n, self.extent, components, values)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn extent(&self) -> f64 {
        self.extent
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn is_scalar(&self) -> bool {
        self.components == 1
    }

    pub fn cells(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn spacing(&self) -> f64 {
        self.extent / self.n as f64
    }

    pub fn cell_measure(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// `|Ω|`.
    pub fn measure(&self) -> f64 {
        self.extent.powi(self.dim as i32)
    }

    pub fn diameter(&self) -> f64 {
        self.extent * (self.dim as f64).sqrt()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Sample at cell `c`; one entry for scalars, `dim` entries for vectors.
    pub fn at(&self, c: usize) -> &[f64] {
        &self.values[c * self.components..(c + 1) * self.components]
    }

    pub fn centre(&self, c: usize) -> [f64; 2] {
        let h = self.spacing();
        let x = (c % self.n) as f64 * h + 0.5 * h;
        let y = if self.dim == 2 { (c / self.n) as f64 * h + 0.5 * h } else { 0.0 };
        [x, y]
    }

    /// Pointwise absolute value or Euclidean length.
    pub fn magnitudes(&self) -> Vec<f64> {
        if self.components == 1 {
            self.values.iter().map(|v| v.abs()).collect()
        } else {
            self.values.chunks(self.components).map(|v| v.iter().map(|x| x * x).sum::<f64>().sqrt()).collect()
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.magnitudes().into_iter().fold(0.0, f64::max)
    }

    pub fn l1_norm(&self) -> f64 {
        let m = self.magnitudes();
        Exec::default().sum(m.len(), |i| m[i]) * self.cell_measure()
    }

    pub fn integral(&self) -> Result<f64> {
        if !self.is_scalar() {
            return Err(FieldError::NotScalar);
        }
        Ok(Exec::default().sum(self.values.len(), |i| self.values[i]) * self.cell_measure())
    }

    pub fn same_grid(&self, other: &SampledField) -> Result<()> {
        if self.dim != other.dim || self.n != other.n || self.extent != other.extent {
            return Err(FieldError::GridMismatch(format!(
                "({}-D, n={}, L={}) vs ({}-D, n={}, L={})",
                self.dim, self.n, self.extent, other.dim, other.n, other.extent
            )));
        }
        Ok(())
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Result<Self> {
        if !self.is_scalar() {
            return Err(FieldError::NotScalar);
        }
        self.with_values(1, self.values.iter().map(|&v| f(v)).collect())
    }

    /// Cells with a face on the boundary of the box.
    pub fn is_boundary_cell(&self, c: usize) -> bool {
        let i = c % self.n;
        let j = c / self.n;
        i == 0 || i == self.n - 1 || (self.dim == 2 && (j == 0 || j == self.n - 1))
    }

    /// Central-difference gradient with zero Dirichlet data imposed by odd
    /// reflection across the boundary faces.
    pub fn gradient(&self) -> Result<Self> {
        if !self.is_scalar() {
            return Err(FieldError::NotScalar);
        }
        let n = self.n;
        let h = self.spacing();
        let u = &self.values;
        let get = |i: isize, j: isize, ci: usize, cj: usize| -> f64 {
            if i < 0 || j < 0 || i >= n as isize || j >= n as isize {
                -u[ci + n * cj]
            } else {
                u[i as usize + n * j as usize]
            }
        };
        let mut out = Vec::with_capacity(self.cells() * self.dim);
        for c in 0..self.cells() {
            let (i, j) = ((c % n) as isize, (c / n) as isize);
            let (ci, cj) = (c % n, c / n);
            out.push((get(i + 1, j, ci, cj) - get(i - 1, j, ci, cj)) / (2.0 * h));
            if self.dim == 2 {
                out.push((get(i, j + 1, ci, cj) - get(i, j - 1, ci, cj)) / (2.0 * h));
            }
        }
        self.with_values(self.dim, out)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::WriterBuilder::new().flexible(true).from_writer(w);
        let csv_err = |e: csv::Error| FieldError::Io(std::io::Error::other(e));
        wr.write_record(["dim", "n", "extent"]).map_err(csv_err)?;
        wr.write_record([self.dim.to_string(), self.n.to_string(), self.extent.to_string()]).map_err(csv_err)?;
        for c in 0..self.cells() {
            let x = self.centre(c);
            let mut row = vec![c.to_string(), x[0].to_string()];
            if self.dim == 2 {
                row.push(x[1].to_string());
            }
            row.extend(self.at(c).iter().map(|v| v.to_string()));
            wr.write_record(&row).map_err(csv_err)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(r);
        let mut records = rd.records();
        let mut next = |what: &str| -> Result<csv::StringRecord> {
            match records.next() {
                Some(Ok(rec)) => Ok(rec),
                Some(Err(e)) => Err(FieldError::Parse {
                    line: e.position().map_or(0, |p| p.line()),
                    message: e.to_string(),
                }),
                None => Err(FieldError::Parse { line: 0, message: format!("missing {what}") }),
            }
        };
        let header = next("header")?;
        if header.iter().collect::<Vec<_>>() != ["dim", "n", "extent"] {
            return Err(FieldError::Parse { line: 1, message: "header must be `dim,n,extent`".into() });
        }
        let meta = next("grid description")?;
        let line_of = |rec: &csv::StringRecord| rec.position().map_or(0, |p| p.line());
        let parse = |rec: &csv::StringRecord, k: usize| -> Result<f64> {
            rec.get(k)
                .ok_or_else(|| FieldError::Parse { line: line_of(rec), message: format!("missing column {}", k + 1) })?
                .parse::<f64>()
                .map_err(|e| FieldError::Parse { line: line_of(rec), message: format!("column {}: {e}", k + 1) })
        };
        if meta.len() != 3 {
            return Err(FieldError::Parse { line: line_of(&meta), message: "expected `dim,n,extent` values".into() });
        }
        let dim = parse(&meta, 0)? as usize;
        let n = parse(&meta, 1)? as usize;
        let extent = parse(&meta, 2)?;
        let mut values = Vec::new();
        let mut components = None;
        let mut expected_index = 0usize;
        for rec in records {
            let rec = rec.map_err(|e| FieldError::Parse {
                line: e.position().map_or(0, |p| p.line()),
                message: e.to_string(),
            })?;
            let comps = rec.len().checked_sub(1 + dim).filter(|&c| c == 1 || c == dim).ok_or_else(|| {
                FieldError::Parse { line: line_of(&rec), message: format!("unexpected column count {}", rec.len()) }
            })?;
            if *components.get_or_insert(comps) != comps {
                return Err(FieldError::Parse { line: line_of(&rec), message: "inconsistent column count".into() });
            }
            let idx = parse(&rec, 0)?;
            if idx != expected_index as f64 {
                return Err(FieldError::Parse {
                    line: line_of(&rec),
                    message: format!("expected cell index {expected_index}, found {idx}"),
                });
            }
            expected_index += 1;
            for k in 0..comps {
                values.push(parse(&rec, 1 + dim + k)?);
            }
        }
        Self::new(dim, n, extent, components.unwrap_or(1), values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn measure_bookkeeping() {
        let f = SampledField::constant(2, 8, 2.0, 1.0).unwrap();
        assert_eq!(f.cells(), 64);
        assert!((f.cell_measure() * f.cells() as f64 - f.measure()).abs() < 1e-14);
        assert!((f.integral().unwrap() - 4.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_non_finite() {
        assert!(matches!(
            SampledField::scalar(1, 3, 1.0, vec![0.0, f64::NAN, 1.0]),
            Err(FieldError::NonFinite(1))
        ));
    }

    #[test]
    fn gradient_of_linear_interior() {
        let f = SampledField::from_fn(2, 10, 1.0, |x| 3.0 * x[0] - x[1]).unwrap();
        let g = f.gradient().unwrap();
        let c = 4 + 10 * 5;
        assert!((g.at(c)[0] - 3.0).abs() < 1e-12);
        assert!((g.at(c)[1] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn csv_round_trip() {
        for f in [
            SampledField::from_fn(1, 7, 1.5, |x| x[0].sin()).unwrap(),
            SampledField::from_fn(2, 4, 1.0, |x| x[0] * x[1]).unwrap().gradient().unwrap(),
        ] {
            let mut buf = Vec::new();
            f.write_csv(&mut buf).unwrap();
            let back = SampledField::read_csv(buf.as_slice()).unwrap();
            assert_eq!(back, f);
        }
    }

    #[test]
    fn csv_errors_report_lines() {
        let text = "dim,n,extent\n1,2,1\n0,0.25,1\n1,0.75,abc\n";
        match SampledField::read_csv(text.as_bytes()) {
            Err(FieldError::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
        assert!(SampledField::read_csv("dim,n,extent\n1,3,1\n0,0.1,1\n".as_bytes()).is_err());
    }
}
