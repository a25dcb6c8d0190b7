use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::BenchError;

/// A named table with a header row; cells are already formatted.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: &[&str]) -> Self {
        Self { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: impl IntoIterator<Item = String>) {
        let row: Vec<String> = row.into_iter().collect();
        assert_eq!(row.len(), self.columns.len(), "row width for table {}", self.name);
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }
}

/// Contents of the `<table>.meta.json` sidecar.
#[derive(Debug, Clone, Serialize)]
struct Sidecar<'a> {
    table: &'a str,
    columns: &'a [String],
    rows: usize,
    config_hash: &'a str,
    code_version: &'a str,
    #[serde(skip_serializing_if = "serde_json::Value::is_null")]
    extra: serde_json::Value,
}

/// Writes tables as CSV with a JSON metadata sidecar. Each file is written to
/// a temporary name and renamed into place.
#[derive(Debug, Clone)]
pub struct OutputWriter {
    dir: PathBuf,
    config_hash: String,
}

impl OutputWriter {
    pub fn new(dir: &Path, config_hash: String) -> Result<Self, BenchError> {
        std::fs::create_dir_all(dir).map_err(|e| BenchError::Output(format!("{}: {e}", dir.display())))?;
        Ok(Self { dir: dir.to_path_buf(), config_hash })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write(&self, table: &Table, extra: serde_json::Value) -> Result<PathBuf, BenchError> {
        let csv_path = self.dir.join(format!("{}.csv", table.name));
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&table.columns)?;
        for row in &table.rows {
            w.write_record(row)?;
        }
        let bytes = w.into_inner().map_err(|e| BenchError::Output(e.to_string()))?;
        write_atomic(&csv_path, &bytes)?;

        let meta = Sidecar {
            table: &table.name,
            columns: &table.columns,
            rows: table.rows.len(),
            config_hash: &self.config_hash,
            code_version: env!("CARGO_PKG_VERSION"),
            extra,
        };
        let json = serde_json::to_vec_pretty(&meta).map_err(|e| BenchError::Output(e.to_string()))?;
        write_atomic(&self.dir.join(format!("{}.meta.json", table.name)), &json)?;
        Ok(csv_path)
    }

    pub fn write_bytes(&self, name: &str, bytes: &[u8]) -> Result<PathBuf, BenchError> {
        let path = self.dir.join(name);
        write_atomic(&path, bytes)?;
        Ok(path)
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), BenchError> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes).map_err(|e| BenchError::Output(format!("{}: {e}", tmp.display())))?;
    std::fs::rename(&tmp, path).map_err(|e| BenchError::Output(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn writes_csv_and_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let w = OutputWriter::new(dir.path(), "abc".into()).unwrap();
        let mut t = Table::new("demo", &["phi", "value_GHz"]);
        t.push(["0".to_string(), "1.5".to_string()]);
        w.write(&t, serde_json::json!({ "drive_frame": "lab" })).unwrap();
        let csv = std::fs::read_to_string(dir.path().join("demo.csv")).unwrap();
        assert_eq!(csv, "phi,value_GHz\n0,1.5\n");
        let meta: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("demo.meta.json")).unwrap()).unwrap();
        assert_eq!(meta["config_hash"], "abc");
        assert_eq!(meta["rows"], 1);
        assert_eq!(meta["extra"]["drive_frame"], "lab");
    }

    #[test]
    #[should_panic(expected = "row width")]
    fn ragged_rows_rejected() {
        let mut t = Table::new("demo", &["a", "b"]);
        t.push(["1".to_string()]);
    }
}
