//! JSON layouts for checkpoints and fixtures.
//!
//! Every array is flat and column-major (first index fastest), stated in the
//! `ordering` field so the files are self-describing:
//!
//! ```json
//! {"format":"tt","shape":[4,4,4],"ranks":[1,2,2,1],"ordering":"column-major",
//!  "cores":[[...],[...],[...]]}
//! {"format":"tucker","shape":[4,4,4],"ranks":[2,2,2],"ordering":"column-major",
//!  "core":[...],"factors":[[...],[...],[...]],"sigma":[[...],...]}
//! ```
//!
//! TT core `i` has dimensions `(ranks[i], shape[i], ranks[i+1])`; Tucker factor
//! `i` is `shape[i] × ranks[i]`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::tt::{Orthogonality, TtCore, TtTensor};
use super::tucker::TuckerTensor;
use crate::error::{Error, Result};
use crate::tensor::{DenseTensor, Matrix, Shape};

pub const ORDERING: &str = "column-major";

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "format", rename_all = "lowercase")]
pub enum DecompositionFile {
    Tucker {
        shape: Vec<usize>,
        ranks: Vec<usize>,
        ordering: String,
        core: Vec<f64>,
        factors: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        sigma: Vec<Vec<f64>>,
    },
    Tt {
        shape: Vec<usize>,
        ranks: Vec<usize>,
        ordering: String,
        cores: Vec<Vec<f64>>,
        #[serde(default = "no_ortho")]
        orthogonality: Orthogonality,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sigma: Option<Vec<Vec<f64>>>,
    },
}

fn no_ortho() -> Orthogonality {
    Orthogonality::None
}

fn check_ordering(ordering: &str) -> Result<()> {
    if ordering != ORDERING {
        return Err(Error::InvalidArgument(format!(
            "unsupported ordering {ordering:?}, expected {ORDERING:?}"
        )));
    }
    Ok(())
}

impl From<&TuckerTensor> for DecompositionFile {
    fn from(t: &TuckerTensor) -> Self {
        DecompositionFile::Tucker {
            shape: t.shape().dims().to_vec(),
            ranks: t.core().dims().to_vec(),
            ordering: ORDERING.into(),
            core: t.core().values().to_vec(),
            factors: t.factors().iter().map(|f| f.as_slice().to_vec()).collect(),
            sigma: t.sigma().to_vec(),
        }
    }
}

impl From<&TtTensor> for DecompositionFile {
    fn from(t: &TtTensor) -> Self {
        DecompositionFile::Tt {
            shape: t.shape().dims().to_vec(),
            ranks: t.full_ranks(),
            ordering: ORDERING.into(),
            cores: t.cores().iter().map(|c| c.data().to_vec()).collect(),
            orthogonality: t.orthogonality(),
            sigma: t.sigma().map(<[_]>::to_vec),
        }
    }
}

impl DecompositionFile {
    pub fn into_tucker(self) -> Result<TuckerTensor> {
        let DecompositionFile::Tucker {
            shape,
            ranks,
            ordering,
            core,
            factors,
            sigma,
        } = self
        else {
            return Err(Error::InvalidArgument("file holds a TT tensor, not Tucker".into()));
        };
        check_ordering(&ordering)?;
        if ranks.len() != shape.len() || factors.len() != shape.len() {
            return Err(Error::shape(&shape, &ranks));
        }
        let core = DenseTensor::from_vec(Shape::new(ranks.clone())?, core)?;
        let factors = factors
            .into_iter()
            .enumerate()
            .map(|(i, f)| {
                if f.len() != shape[i] * ranks[i] {
                    return Err(Error::shape(&[shape[i], ranks[i]], &[f.len()]));
                }
                Ok(Matrix::from_vec(shape[i], ranks[i], f))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(TuckerTensor::new(core, factors)?.with_sigma(sigma))
    }

    pub fn into_tt(self) -> Result<TtTensor> {
        let DecompositionFile::Tt {
            shape,
            ranks,
            ordering,
            cores,
            orthogonality,
            ..
        } = self
        else {
            return Err(Error::InvalidArgument("file holds a Tucker tensor, not TT".into()));
        };
        check_ordering(&ordering)?;
        if ranks.len() != shape.len() + 1 || cores.len() != shape.len() {
            return Err(Error::shape(&shape, &ranks));
        }
        let cores = cores
            .into_iter()
            .enumerate()
            .map(|(i, c)| TtCore::from_vec(ranks[i], shape[i], ranks[i + 1], c))
            .collect::<Result<Vec<_>>>()?;
        let mut t = TtTensor::new(cores)?;
        t.set_orthogonality(orthogonality);
        Ok(t)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

/// Reads a dense tensor stored as `{"shape": [...], "values": [...]}`
/// (column-major values).
pub fn read_dense(path: &Path) -> Result<DenseTensor> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let raw: DenseFile = serde_json::from_str(&text)?;
    DenseTensor::from_vec(Shape::new(raw.shape)?, raw.values)
}

pub fn write_dense(u: &DenseTensor, path: &Path) -> Result<()> {
    let raw = DenseFile {
        shape: u.dims().to_vec(),
        values: u.values().to_vec(),
    };
    fs::write(path, serde_json::to_string(&raw)?).map_err(|e| Error::io(path, e))
}

#[derive(Serialize, Deserialize)]
struct DenseFile {
    shape: Vec<usize>,
    values: Vec<f64>,
}
