use std::fs;
use std::path::PathBuf;

use cgnet::rodeo::ScanResult;
use serde::Serialize;

use crate::error::CliError;

/// Output directory, or none when results only go to stdout.
pub struct Out(Option<PathBuf>);

impl Out {
    pub fn new(dir: Option<PathBuf>) -> Result<Self, CliError> {
        if let Some(d) = &dir {
            fs::create_dir_all(d).map_err(CliError::io(d))?;
        }
        Ok(Self(dir))
    }

    pub fn text(&self, name: &str, body: &str) -> Result<(), CliError> {
        let Some(d) = &self.0 else { return Ok(()) };
        let p = d.join(name);
        fs::write(&p, body).map_err(CliError::io(p))
    }

    pub fn json<T: Serialize + ?Sized>(&self, name: &str, value: &T) -> Result<(), CliError> {
        let body = serde_json::to_string_pretty(value).map_err(CliError::config)?;
        self.text(name, &(body + "\n"))
    }

    pub fn csv<T: Serialize>(&self, name: &str, rows: &[T]) -> Result<(), CliError> {
        let Some(d) = &self.0 else { return Ok(()) };
        let p = d.join(name);
        let mut w = csv::Writer::from_path(&p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
        for r in rows {
            w.serialize(r).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
        }
        w.flush().map_err(CliError::io(p))
    }

    pub fn scan(&self, name: &str, scan: &ScanResult) -> Result<(), CliError> {
        self.csv(name, &scan.points)
    }
}
