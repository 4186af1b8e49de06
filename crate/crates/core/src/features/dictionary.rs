use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{Error, Matrix, Result};

/// Ordered, versioned list of unique feature names.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "DictionaryRepr", into = "DictionaryRepr")]
pub struct FeatureDictionary {
    version: String,
    names: Vec<String>,
    fingerprint: String,
    index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct DictionaryRepr {
    version: String,
    fingerprint: String,
    names: Vec<String>,
}

impl TryFrom<DictionaryRepr> for FeatureDictionary {
    type Error = Error;
    fn try_from(r: DictionaryRepr) -> Result<Self> {
        let dict = FeatureDictionary::new(r.version, r.names)?;
        if dict.fingerprint != r.fingerprint {
            return Err(Error::DictionaryMismatch(format!(
                "stored fingerprint {} does not match names ({})",
                r.fingerprint, dict.fingerprint
            )));
        }
        Ok(dict)
    }
}

impl From<FeatureDictionary> for DictionaryRepr {
    fn from(d: FeatureDictionary) -> Self {
        DictionaryRepr {
            version: d.version,
            fingerprint: d.fingerprint,
            names: d.names,
        }
    }
}

impl PartialEq for FeatureDictionary {
    fn eq(&self, other: &Self) -> bool {
        self.fingerprint == other.fingerprint
    }
}

impl FeatureDictionary {
    pub fn new(version: impl Into<String>, names: Vec<String>) -> Result<Self> {
        let version = version.into();
        let mut index = HashMap::with_capacity(names.len());
        for (i, n) in names.iter().enumerate() {
            if index.insert(n.clone(), i).is_some() {
                return Err(Error::DictionaryMismatch(format!("duplicate feature name {n}")));
            }
        }
        let fingerprint = fingerprint(&version, &names);
        Ok(Self {
            version,
            names,
            fingerprint,
            index,
        })
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// First 16 bytes of SHA-256 over the version and names, hex encoded.
    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    /// Sub-dictionary with the given names in this dictionary's order.
    /// Returns it with the source column indices.
    pub fn subset<S: AsRef<str>>(&self, names: &[S]) -> Result<(FeatureDictionary, Vec<usize>)> {
        let mut cols = Vec::with_capacity(names.len());
        for n in names {
            let n = n.as_ref();
            cols.push(
                self.position(n)
                    .ok_or_else(|| Error::DictionaryMismatch(format!("unknown feature {n}")))?,
            );
        }
        cols.sort_unstable();
        cols.dedup();
        let picked = cols.iter().map(|&i| self.names[i].clone()).collect();
        let dict = FeatureDictionary::new(format!("{}|subset", self.version), picked)?;
        Ok((dict, cols))
    }

    /// Names of `self` followed by those of `other`.
    pub fn concat(&self, other: &FeatureDictionary) -> Result<FeatureDictionary> {
        let names = self.names.iter().chain(&other.names).cloned().collect();
        FeatureDictionary::new(format!("{}+{}", self.version, other.version), names)
    }

    /// Every name with `prefix` prepended, e.g. `avg.`.
    pub fn prefixed(&self, prefix: &str) -> Result<FeatureDictionary> {
        let names = self.names.iter().map(|n| format!("{prefix}{n}")).collect();
        FeatureDictionary::new(format!("{prefix}{}", self.version), names)
    }
}

fn fingerprint(version: &str, names: &[String]) -> String {
    let mut h = Sha256::new();
    h.update(version.as_bytes());
    for n in names {
        h.update(b"\n");
        h.update(n.as_bytes());
    }
    h.finalize()[..16].iter().map(|b| format!("{b:02x}")).collect()
}

/// Feature values tied to their dictionary.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    dict: Arc<FeatureDictionary>,
    values: Vec<f64>,
}

impl FeatureVector {
    pub fn new(dict: Arc<FeatureDictionary>, values: Vec<f64>) -> Result<Self> {
        if values.len() != dict.len() {
            return Err(Error::DictionaryMismatch(format!(
                "{} values for a {}-feature dictionary",
                values.len(),
                dict.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("feature {} is not finite", dict.names()[i])));
        }
        Ok(Self { dict, values })
    }

    pub fn dictionary(&self) -> &Arc<FeatureDictionary> {
        &self.dict
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.dict.position(name).map(|i| self.values[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.dict
            .names()
            .iter()
            .map(String::as_str)
            .zip(self.values.iter().copied())
    }
}

/// Rows of feature values sharing one dictionary, each with an id (video
/// or channel).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    dict: Arc<FeatureDictionary>,
    row_ids: Vec<String>,
    matrix: Matrix,
}

impl FeatureMatrix {
    pub fn new(dict: Arc<FeatureDictionary>, row_ids: Vec<String>, matrix: Matrix) -> Result<Self> {
        if matrix.n_cols() != dict.len() || matrix.n_rows() != row_ids.len() {
            return Err(Error::DictionaryMismatch(format!(
                "{}x{} matrix for {} ids and {} features",
                matrix.n_rows(),
                matrix.n_cols(),
                row_ids.len(),
                dict.len()
            )));
        }
        Ok(Self { dict, row_ids, matrix })
    }

    /// Stacks vectors that must all share one dictionary.
    pub fn from_vectors(dict: Arc<FeatureDictionary>, rows: Vec<(String, FeatureVector)>) -> Result<Self> {
        let mut ids = Vec::with_capacity(rows.len());
        let mut data = Vec::with_capacity(rows.len() * dict.len());
        for (id, v) in rows {
            if v.dictionary().fingerprint() != dict.fingerprint() {
                return Err(Error::DictionaryMismatch(format!("row {id} uses another dictionary")));
            }
            data.extend(v.into_values());
            ids.push(id);
        }
        let matrix = Matrix::new(ids.len(), dict.len(), data)?;
        Self::new(dict, ids, matrix)
    }

    pub fn dictionary(&self) -> &Arc<FeatureDictionary> {
        &self.dict
    }

    pub fn row_ids(&self) -> &[String] {
        &self.row_ids
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn n_rows(&self) -> usize {
        self.matrix.n_rows()
    }

    pub fn n_cols(&self) -> usize {
        self.matrix.n_cols()
    }

    pub fn row_vector(&self, i: usize) -> FeatureVector {
        FeatureVector {
            dict: self.dict.clone(),
            values: self.matrix.row(i).to_vec(),
        }
    }

    pub fn select_rows(&self, indices: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            dict: self.dict.clone(),
            row_ids: indices.iter().map(|&i| self.row_ids[i].clone()).collect(),
            matrix: self.matrix.select_rows(indices),
        }
    }

    /// Keeps the named columns, in dictionary order.
    pub fn select_columns<S: AsRef<str>>(&self, names: &[S]) -> Result<FeatureMatrix> {
        let (dict, cols) = self.dict.subset(names)?;
        Ok(FeatureMatrix {
            dict: Arc::new(dict),
            row_ids: self.row_ids.clone(),
            matrix: self.matrix.select_columns(&cols),
        })
    }

    /// Same rows, columns of `self` then `other`. Row ids must match.
    pub fn hstack(&self, other: &FeatureMatrix) -> Result<FeatureMatrix> {
        if self.row_ids != other.row_ids {
            return Err(Error::invalid("row ids differ between stacked feature matrices"));
        }
        Ok(FeatureMatrix {
            dict: Arc::new(self.dict.concat(&other.dict)?),
            row_ids: self.row_ids.clone(),
            matrix: self.matrix.hstack(&other.matrix)?,
        })
    }
}
