use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{FeatureDictionary, FeatureMatrix};
use crate::{Error, Matrix, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixFormat {
    #[default]
    Csv,
    Jsonl,
}

impl std::str::FromStr for MatrixFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "jsonl" => Ok(Self::Jsonl),
            _ => Err(Error::Config(format!("unknown matrix format {s:?}"))),
        }
    }
}

/// `features.csv` -> `features.csv.dict.json`
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".dict.json");
    path.with_file_name(name)
}

#[derive(Serialize, Deserialize)]
struct JsonlRow {
    id: String,
    values: Vec<f64>,
}

/// Writes the matrix and its dictionary sidecar.
pub fn write_feature_matrix(path: &Path, m: &FeatureMatrix, format: MatrixFormat) -> Result<()> {
    let dict_path = sidecar_path(path);
    let dict_json = serde_json::to_vec_pretty(m.dictionary().as_ref())?;
    std::fs::write(&dict_path, dict_json).map_err(|e| Error::io(&dict_path, e))?;

    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    match format {
        MatrixFormat::Csv => {
            write!(w, "id").map_err(io)?;
            for n in m.dictionary().names() {
                write!(w, ",{n}").map_err(io)?;
            }
            writeln!(w).map_err(io)?;
            for (i, id) in m.row_ids().iter().enumerate() {
                if id.contains(',') || id.contains('"') || id.contains('\n') {
                    return Err(Error::invalid(format!("row id {id:?} cannot be written as CSV")));
                }
                write!(w, "{id}").map_err(io)?;
                for v in m.matrix().row(i) {
                    write!(w, ",{v}").map_err(io)?;
                }
                writeln!(w).map_err(io)?;
            }
        }
        MatrixFormat::Jsonl => {
            for (i, id) in m.row_ids().iter().enumerate() {
                let row = JsonlRow {
                    id: id.clone(),
                    values: m.matrix().row(i).to_vec(),
                };
                serde_json::to_writer(&mut w, &row)?;
                writeln!(w).map_err(io)?;
            }
        }
    }
    w.flush().map_err(io)
}

/// Reads a matrix written by [`write_feature_matrix`]; the CSV header must
/// agree with the sidecar dictionary.
pub fn read_feature_matrix(path: &Path, format: MatrixFormat) -> Result<FeatureMatrix> {
    let dict_path = sidecar_path(path);
    let dict_bytes = std::fs::read(&dict_path).map_err(|e| Error::io(&dict_path, e))?;
    let dict: Arc<FeatureDictionary> = Arc::new(serde_json::from_slice(&dict_bytes)?);
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut ids = Vec::new();
    let mut data = Vec::new();
    let line_err = |line: usize, message: String| Error::Line { line, message };
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.is_empty() {
            continue;
        }
        match format {
            MatrixFormat::Csv => {
                let mut fields = line.split(',');
                let first = fields.next().unwrap_or_default();
                if idx == 0 {
                    let header: Vec<&str> = fields.collect();
                    if first != "id"
                        || header.len() != dict.len()
                        || header.iter().zip(dict.names()).any(|(a, b)| a != b)
                    {
                        return Err(Error::DictionaryMismatch(format!(
                            "{} header does not match its dictionary",
                            path.display()
                        )));
                    }
                    continue;
                }
                ids.push(first.to_string());
                let before = data.len();
                for f in fields {
                    data.push(f.parse::<f64>().map_err(|e| line_err(idx + 1, e.to_string()))?);
                }
                if data.len() - before != dict.len() {
                    return Err(line_err(idx + 1, format!("expected {} values", dict.len())));
                }
            }
            MatrixFormat::Jsonl => {
                let row: JsonlRow = serde_json::from_str(&line).map_err(|e| line_err(idx + 1, e.to_string()))?;
                if row.values.len() != dict.len() {
                    return Err(line_err(idx + 1, format!("expected {} values", dict.len())));
                }
                ids.push(row.id);
                data.extend(row.values);
            }
        }
    }
    let matrix = Matrix::new(ids.len(), dict.len(), data)?;
    FeatureMatrix::new(dict, ids, matrix)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_both_formats() {
        let dict = Arc::new(FeatureDictionary::new("t", vec!["a".into(), "b.c".into()]).unwrap());
        let m = FeatureMatrix::new(
            dict,
            vec!["v1".into(), "v2".into()],
            Matrix::new(2, 2, vec![0.1, 1e-300, -3.5, 1.0 / 3.0]).unwrap(),
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        for format in [MatrixFormat::Csv, MatrixFormat::Jsonl] {
            let p = dir.path().join("m.out");
            write_feature_matrix(&p, &m, format).unwrap();
            assert!(sidecar_path(&p).exists());
            let back = read_feature_matrix(&p, format).unwrap();
            assert_eq!(back, m);
        }
    }
}
