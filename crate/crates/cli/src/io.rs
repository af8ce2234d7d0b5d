//! CSV ingestion, weight export, and guarded output files.

use std::fs;
use std::path::{Path, PathBuf};

use ebct::Dataset;
use nalgebra::DMatrix;

use crate::error::{CliError, Result};

/// Name of the optional unit identifier column.
pub const ID_COLUMN: &str = "id";

/// Which input columns play which role. Without an explicit covariate list,
/// every column other than the id, treatment and outcome is a covariate.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnRoles {
    pub treatment: String,
    pub outcome: Option<String>,
    pub covariates: Option<Vec<String>>,
}

impl Default for ColumnRoles {
    fn default() -> Self {
        Self {
            treatment: "T".to_string(),
            outcome: None,
            covariates: None,
        }
    }
}

fn column_index(headers: &[String], name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| CliError::MissingColumn(name.to_string()))
}

/// Reads a comma-separated file with a header row. Rows are numbered as file
/// lines, so the first data row is row 2.
pub fn read_csv(path: &Path, roles: &ColumnRoles) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::csv(path, e))?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::csv(path, e))?
        .iter()
        .map(str::to_string)
        .collect();

    let id_index = headers.iter().position(|h| h == ID_COLUMN);
    let t_index = column_index(&headers, &roles.treatment)?;
    let y_index = roles.outcome.as_deref().map(|c| column_index(&headers, c)).transpose()?;
    let covariate_names: Vec<String> = match &roles.covariates {
        Some(names) => names.clone(),
        None => headers
            .iter()
            .enumerate()
            .filter(|(i, _)| Some(*i) != id_index && *i != t_index && Some(*i) != y_index)
            .map(|(_, h)| h.clone())
            .collect(),
    };
    let x_indices = covariate_names
        .iter()
        .map(|c| column_index(&headers, c))
        .collect::<Result<Vec<_>>>()?;

    let mut ids = Vec::new();
    let mut t = Vec::new();
    let mut y = Vec::new();
    let mut x_rows: Vec<f64> = Vec::new();
    for (record_index, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::csv(path, e))?;
        let row = record_index + 2;
        let number = |index: usize| -> Result<f64> {
            let raw = record.get(index).unwrap_or("");
            raw.parse::<f64>().map_err(|_| CliError::ParseError {
                row,
                column: headers[index].clone(),
                value: raw.to_string(),
            })
        };
        t.push(number(t_index)?);
        if let Some(j) = y_index {
            y.push(number(j)?);
        }
        for &j in &x_indices {
            x_rows.push(number(j)?);
        }
        ids.push(match id_index {
            Some(j) => record.get(j).unwrap_or("").to_string(),
            None => (record_index + 1).to_string(),
        });
    }

    let x = DMatrix::from_row_slice(t.len(), x_indices.len(), &x_rows);
    Ok(Dataset::with_labels(
        t,
        x,
        y_index.map(|_| y),
        roles.treatment.clone(),
        covariate_names,
        roles.outcome.clone(),
        ids,
    )?)
}

/// `id,weight`, one row per unit, full precision.
pub fn write_weights(path: &Path, ids: &[String], weights: &[f64]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| CliError::csv(path, e))?;
    writer.write_record(["id", "weight"]).map_err(|e| CliError::csv(path, e))?;
    for (id, w) in ids.iter().zip(weights) {
        writer
            .write_record([id.as_str(), &w.to_string()])
            .map_err(|e| CliError::csv(path, e))?;
    }
    writer.flush().map_err(|e| CliError::io(path, e))
}

/// Inverse of [`write_weights`].
pub fn read_weights(path: &Path) -> Result<Vec<(String, f64)>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| CliError::csv(path, e))?;
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::csv(path, e))?;
        let raw = record.get(1).unwrap_or("");
        let w = raw.parse::<f64>().map_err(|_| CliError::ParseError {
            row: i + 2,
            column: "weight".to_string(),
            value: raw.to_string(),
        })?;
        out.push((record.get(0).unwrap_or("").to_string(), w));
    }
    Ok(out)
}

/// Output files of one command, checked up front so a refused overwrite
/// leaves nothing half-written.
#[derive(Debug, Clone)]
pub struct OutputSet {
    dir: PathBuf,
}

impl OutputSet {
    pub fn prepare(dir: &Path, names: &[&str], force: bool) -> Result<Self> {
        if !force {
            if let Some(existing) = names.iter().map(|n| dir.join(n)).find(|p| p.exists()) {
                return Err(CliError::OutputExists(existing));
            }
        }
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self { dir: dir.to_path_buf() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write_text(&self, name: &str, contents: &str) -> Result<()> {
        let path = self.path(name);
        fs::write(&path, contents).map_err(|e| CliError::io(path, e))
    }

    pub fn write_json<T: serde::Serialize>(&self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value).expect("output types serialize");
        text.push('\n');
        self.write_text(name, &text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, contents: &str) -> PathBuf {
        let p = dir.join(name);
        fs::write(&p, contents).unwrap();
        p
    }

    #[test]
    fn minimal_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "d.csv", "id,T,X1\n1,0.5,1.0\n2,1.5,2.0\n");
        let d = read_csv(&p, &ColumnRoles::default()).unwrap();
        assert_eq!((d.n(), d.k()), (2, 1));
        assert_eq!(d.treatment(), &[0.5, 1.5]);
        assert_eq!(d.covariate_names(), &["X1".to_string()]);
        assert_eq!(d.unit_ids(), &["1".to_string(), "2".to_string()]);
    }

    #[test]
    fn malformed_cell_located() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "d.csv", "id,T,X1\n1,0.5,abc\n2,1.5,2.0\n");
        match read_csv(&p, &ColumnRoles::default()) {
            Err(CliError::ParseError { row, column, .. }) => {
                assert_eq!(row, 2);
                assert_eq!(column, "X1");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn missing_column_named() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "d.csv", "id,T,X1\n1,0.5,1\n");
        let roles = ColumnRoles {
            covariates: Some(vec!["X9".into()]),
            ..Default::default()
        };
        assert!(matches!(read_csv(&p, &roles), Err(CliError::MissingColumn(c)) if c == "X9"));
        let roles = ColumnRoles {
            treatment: "dose".into(),
            ..Default::default()
        };
        assert!(matches!(read_csv(&p, &roles), Err(CliError::MissingColumn(c)) if c == "dose"));
    }

    #[test]
    fn row_index_is_default_id() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "d.csv", "T,X1,Y\n0.5,1,3\n1.5,2,4\n2.5,0,5\n");
        let roles = ColumnRoles {
            outcome: Some("Y".into()),
            ..Default::default()
        };
        let d = read_csv(&p, &roles).unwrap();
        assert_eq!(d.unit_ids(), &["1".to_string(), "2".to_string(), "3".to_string()]);
        assert_eq!(d.outcome().unwrap(), &[3.0, 4.0, 5.0]);
        assert_eq!(d.k(), 1);
    }

    #[test]
    fn outputs_refuse_overwrite() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "a.txt", "x");
        assert!(matches!(
            OutputSet::prepare(dir.path(), &["a.txt", "b.txt"], false),
            Err(CliError::OutputExists(_))
        ));
        assert!(OutputSet::prepare(dir.path(), &["a.txt"], true).is_ok());
        assert!(OutputSet::prepare(&dir.path().join("new"), &["a.txt"], false).is_ok());
    }
}
