use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

/// 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Table { header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write(&self, path: &Path) -> Result<(), String> {
        let mut w = csv::Writer::from_path(path).map_err(|e| format!("{}: {e}", path.display()))?;
        w.write_record(&self.header).map_err(|e| e.to_string())?;
        for r in &self.rows {
            w.write_record(r).map_err(|e| e.to_string())?;
        }
        w.flush().map_err(|e| e.to_string())
    }
}

pub struct OutDir(pub PathBuf);

impl OutDir {
    pub fn create(path: PathBuf) -> Result<Self, String> {
        fs::create_dir_all(&path).map_err(|e| format!("{}: {e}", path.display()))?;
        Ok(OutDir(path))
    }

    pub fn sub(&self, name: &str) -> Result<Self, String> {
        Self::create(self.0.join(name))
    }

    pub fn csv(&self, name: &str, t: &Table) -> Result<(), String> {
        let p = self.0.join(name);
        t.write(&p)?;
        println!("wrote {}", p.display());
        Ok(())
    }

    pub fn json<T: Serialize>(&self, name: &str, v: &T) -> Result<(), String> {
        let p = self.0.join(name);
        let mut s = serde_json::to_string_pretty(v).map_err(|e| e.to_string())?;
        s.push('\n');
        fs::write(&p, s).map_err(|e| format!("{}: {e}", p.display()))?;
        println!("wrote {}", p.display());
        Ok(())
    }
}
