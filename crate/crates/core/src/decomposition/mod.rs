//! Tucker/HOSVD and tensor-train formats.
//!
//! Both formats come with an exact decomposition, the hard-thresholding
//! operator `H_r` (truncated HOSVD resp. truncated TT-SVD), reconstruction,
//! and rank detection. Sign and gauge of factors are not normalised, so
//! equality of two decompositions should be checked on their dense
//! reconstructions.

mod canonical;
pub mod io;
mod tt;
mod tucker;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use canonical::{canonical_to_tt, CanonicalTensor};
pub use tt::{tt_svd, tt_truncate, Orthogonality, TtCore, TtTensor, TtTarget};
pub(crate) use tt::{contract_with_frames, left_frames, reshape, right_frames};
pub use tucker::{hosvd, truncate_hosvd, TuckerTensor};

use crate::error::{Error, Result};
use crate::linalg;
use crate::tensor::{DenseTensor, Shape};

/// Low-rank format: Tucker (one rank per mode) or tensor train (one rank per bond).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Tucker,
    Tt,
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Tucker => "tucker",
            Format::Tt => "tt",
        })
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tucker" | "hosvd" => Ok(Format::Tucker),
            "tt" | "tensor-train" => Ok(Format::Tt),
            other => Err(Error::InvalidArgument(format!("unknown format {other:?}"))),
        }
    }
}

/// Multilinear rank: `(r₁,…,r_d)` for Tucker, `(r₁,…,r_{d−1})` for TT.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RankTuple {
    pub format: Format,
    pub values: Vec<usize>,
}

impl RankTuple {
    pub fn new(format: Format, values: Vec<usize>) -> Result<Self> {
        if values.contains(&0) {
            return Err(Error::InvalidRank(format!("ranks {values:?} must all be >= 1")));
        }
        Ok(RankTuple { format, values })
    }

    pub fn tucker(values: impl Into<Vec<usize>>) -> Result<Self> {
        RankTuple::new(Format::Tucker, values.into())
    }

    pub fn tt(values: impl Into<Vec<usize>>) -> Result<Self> {
        RankTuple::new(Format::Tt, values.into())
    }

    pub fn values(&self) -> &[usize] {
        &self.values
    }

    pub fn max(&self) -> usize {
        self.values.iter().copied().max().unwrap_or(1)
    }

    /// Checks length and the per-entry upper bounds against `shape`.
    pub fn validate(&self, shape: &Shape) -> Result<()> {
        let d = shape.order();
        let dims = shape.dims();
        if self.values.contains(&0) {
            return Err(Error::InvalidRank(format!("ranks {:?} must all be >= 1", self.values)));
        }
        match self.format {
            Format::Tucker => {
                if self.values.len() != d {
                    return Err(Error::InvalidRank(format!(
                        "Tucker rank needs {d} entries, got {:?}",
                        self.values
                    )));
                }
                if let Some(i) = (0..d).find(|&i| self.values[i] > dims[i]) {
                    return Err(Error::InvalidRank(format!(
                        "r_{} = {} exceeds n_{} = {}",
                        i + 1,
                        self.values[i],
                        i + 1,
                        dims[i]
                    )));
                }
            }
            Format::Tt => {
                if self.values.len() + 1 != d {
                    return Err(Error::InvalidRank(format!(
                        "TT rank needs {} entries, got {:?}",
                        d - 1,
                        self.values
                    )));
                }
                for (i, &r) in self.values.iter().enumerate() {
                    let bound = shape.span(0..i + 1).min(shape.span(i + 1..d));
                    if r > bound {
                        return Err(Error::InvalidRank(format!(
                            "r_{} = {r} exceeds the unfolding bound {bound}",
                            i + 1
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Entrywise `k·r`, e.g. the `2r` rank bound of tangent vectors.
    pub fn scaled(&self, k: usize) -> RankTuple {
        RankTuple {
            format: self.format,
            values: self.values.iter().map(|r| r * k).collect(),
        }
    }
}

impl fmt::Display for RankTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.values.iter().map(|r| r.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Numerical ranks of the format's unfoldings: single-mode unfoldings for
/// Tucker, prefix unfoldings `U^{1..i}` for TT. Entries are at least 1.
pub fn multilinear_rank(u: &DenseTensor, format: Format) -> RankTuple {
    let d = u.order();
    let values = match format {
        Format::Tucker => (0..d)
            .map(|i| {
                let m = u.unfold(&[i]).expect("single mode is a valid unfolding");
                linalg::numerical_rank(&linalg::singular_values(&m), m.nrows(), m.ncols()).max(1)
            })
            .collect(),
        Format::Tt => (1..d)
            .map(|i| {
                let modes: Vec<usize> = (0..i).collect();
                let m = u.unfold(&modes).expect("prefix is a valid unfolding");
                linalg::numerical_rank(&linalg::singular_values(&m), m.nrows(), m.ncols()).max(1)
            })
            .collect(),
    };
    RankTuple { format, values }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_tuple_validation() {
        let s = Shape::new(vec![2, 3, 4]).unwrap();
        assert!(RankTuple::tucker(vec![2, 3, 4]).unwrap().validate(&s).is_ok());
        assert!(RankTuple::tucker(vec![3, 3, 4]).unwrap().validate(&s).is_err());
        assert!(RankTuple::tucker(vec![1, 1]).unwrap().validate(&s).is_err());
        assert!(RankTuple::tt(vec![2, 4]).unwrap().validate(&s).is_ok());
        assert!(RankTuple::tt(vec![3, 4]).unwrap().validate(&s).is_err());
        assert!(RankTuple::tt(vec![2, 5]).unwrap().validate(&s).is_err());
        assert!(RankTuple::tt(vec![0, 1]).is_err());
    }

    #[test]
    fn format_parsing() {
        assert_eq!("TT".parse::<Format>().unwrap(), Format::Tt);
        assert_eq!("hosvd".parse::<Format>().unwrap(), Format::Tucker);
        assert!("ht".parse::<Format>().is_err());
    }
}
