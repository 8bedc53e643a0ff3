//! CSV and meta files.

use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use crate::config::ScenarioConfig;

/// Round-trip format for every number written: 17 significant digits.
pub fn number(x: f64) -> String {
    format!("{x:.16e}")
}

/// Named columns of equal length sharing one time grid.
#[derive(Debug, Clone, Default)]
pub struct Table {
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
}

impl Table {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, name: impl Into<String>, values: Vec<f64>) -> &mut Self {
        self.names.push(name.into());
        self.columns.push(values);
        self
    }

    pub fn rows(&self) -> usize {
        self.columns.iter().map(Vec::len).min().unwrap_or(0)
    }

    pub fn write(&self, path: &Path) -> io::Result<()> {
        if let Some(bad) = self.columns.iter().position(|c| c.len() != self.rows()) {
            return Err(io::Error::other(format!(
                "column `{}` has {} rows, expected {}",
                self.names[bad],
                self.columns[bad].len(),
                self.rows()
            )));
        }
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.names)?;
        for i in 0..self.rows() {
            w.write_record(self.columns.iter().map(|c| number(c[i])))?;
        }
        w.flush()
    }
}

/// Writes the resolved config, preceded by `notes` as TOML comments.
pub fn write_meta(path: &Path, config: &ScenarioConfig, notes: &[String]) -> io::Result<()> {
    let mut f = File::create(path)?;
    for note in notes {
        for line in note.lines() {
            writeln!(f, "# {line}")?;
        }
    }
    f.write_all(config.to_toml().as_bytes())
}
