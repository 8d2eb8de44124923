use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context as _, Result};
use orlicz_core::report::{svg_line_plot, write_json, Envelope, Series};
use serde::Serialize;

/// Output directory, created on first write.
pub struct Out {
    dir: PathBuf,
}

impl Out {
    pub fn new(dir: PathBuf) -> Self {
        Out { dir }
    }

    fn path(&self, name: &str) -> Result<PathBuf> {
        fs::create_dir_all(&self.dir).with_context(|| format!("creating {}", self.dir.display()))?;
        Ok(self.dir.join(name))
    }

    pub fn json<C: Serialize, P: Serialize>(&self, name: &str, command: &str, config: &C, report: &P) -> Result<PathBuf> {
        let path = self.path(name)?;
        write_json(&path, &Envelope::new(command, config, report)).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }

    /// Numeric table with a header row.
    pub fn csv(&self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<PathBuf> {
        let path = self.path(name)?;
        let mut w = csv::Writer::from_path(&path).with_context(|| format!("writing {}", path.display()))?;
        w.write_record(header)?;
        for r in rows {
            w.write_record(r.iter().map(|v| v.to_string()))?;
        }
        w.flush()?;
        Ok(path)
    }

    pub fn with_writer(&self, name: &str, f: impl FnOnce(fs::File) -> Result<()>) -> Result<PathBuf> {
        let path = self.path(name)?;
        let file = fs::File::create(&path).with_context(|| format!("writing {}", path.display()))?;
        f(file)?;
        Ok(path)
    }

    pub fn svg(&self, name: &str, title: &str, series: &[Series], log_x: bool, log_y: bool) -> Result<PathBuf> {
        let path = self.path(name)?;
        fs::write(&path, svg_line_plot(title, series, log_x, log_y)).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}

pub fn series(name: &str, points: Vec<(f64, f64)>) -> Series {
    Series { name: name.to_string(), points }
}

pub fn announce(paths: &[PathBuf]) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}

/// Reads inline JSON or `@path`.
pub fn inline_or_file(text: &str) -> Result<String> {
    match text.strip_prefix('@') {
        Some(path) => fs::read_to_string(Path::new(path)).with_context(|| format!("reading {path}")),
        None => Ok(text.to_string()),
    }
}
