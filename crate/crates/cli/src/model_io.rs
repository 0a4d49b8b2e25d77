//! JSON model files. Floats are written in their shortest round-trip form,
//! so a loaded model reproduces the fitted one bit for bit.

use std::path::Path;

use gfda::fisher::DiscriminantModel;
use gfda::linalg::OrthoBasis;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

const FORMAT: &str = "gfda-model";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub method: String,
    pub normalized: bool,
    pub ref_normalization: bool,
    pub labels: Vec<String>,
    /// Rows of the basis matrix (its ambient dimension).
    pub basis_rows: usize,
    /// Basis vectors.
    pub basis: Vec<Vec<f64>>,
    /// Rows of the whitening map, each of input length.
    pub whitening: Option<Vec<Vec<f64>>>,
    pub class_refs: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
    pub flags: Vec<String>,
}

impl ModelFile {
    pub fn from_model(m: &DiscriminantModel) -> Self {
        ModelFile {
            format: FORMAT.into(),
            version: VERSION,
            method: m.method.to_string(),
            normalized: m.normalized,
            ref_normalization: m.ref_normalization,
            labels: m.labels.clone(),
            basis_rows: m.basis.ambient_dim(),
            basis: m.basis.columns().map(|c| c.iter().copied().collect()).collect(),
            whitening: m
                .whitening
                .as_ref()
                .map(|w| w.row_iter().map(|r| r.iter().copied().collect()).collect()),
            class_refs: m.class_refs.iter().map(|r| r.iter().copied().collect()).collect(),
            eigenvalues: m.eigenvalues.clone(),
            flags: m.flags.clone(),
        }
    }

    pub fn into_model(self) -> Result<DiscriminantModel> {
        if self.format != FORMAT || self.version != VERSION {
            return Err(CliError::Io(format!(
                "not a {FORMAT} v{VERSION} file (found {} v{})",
                self.format, self.version
            )));
        }
        let rows = self.basis_rows;
        if self.basis.iter().any(|c| c.len() != rows) {
            return Err(CliError::Io("basis vectors have inconsistent length".into()));
        }
        let basis = DMatrix::from_fn(rows, self.basis.len(), |i, j| self.basis[j][i]);
        let whitening = match self.whitening {
            Some(w) => {
                let cols = w.first().map_or(0, Vec::len);
                if w.iter().any(|r| r.len() != cols) {
                    return Err(CliError::Io("whitening rows have inconsistent length".into()));
                }
                Some(DMatrix::from_fn(w.len(), cols, |i, j| w[i][j]))
            }
            None => None,
        };
        Ok(DiscriminantModel::from_parts(
            self.method.parse()?,
            self.normalized,
            self.ref_normalization,
            OrthoBasis::new(basis)?,
            whitening,
            self.labels,
            self.class_refs.into_iter().map(DVector::from_vec).collect(),
            self.eigenvalues,
            self.flags,
        )?)
    }
}

pub fn to_json(m: &DiscriminantModel) -> Result<String> {
    Ok(serde_json::to_string_pretty(&ModelFile::from_model(m))? + "\n")
}

pub fn load(path: &Path) -> Result<DiscriminantModel> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let file: ModelFile = serde_json::from_str(&text)?;
    file.into_model()
}
