//! JSON container for persisted problem instances. Matrices are stored as
//! `{"rows", "cols", "data"}` with `data` in column-major order.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{DenseMatrix, SignedDiagonal, TriFactor};
use crate::riccati::{OcpData, PenaltySchedule};

pub const FORMAT: &str = "hyh-instance";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Payload {
    /// Low-rank update `LLᵀ + AΣAᵀ`.
    Kernel {
        l: TriFactor,
        a: DenseMatrix,
        sigma: SignedDiagonal,
    },
    /// OCP with the penalty schedules before and after an active-set change.
    Ocp {
        data: OcpData,
        sigma_old: PenaltySchedule,
        sigma_new: PenaltySchedule,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub format: String,
    pub version: u32,
    pub seed: Option<u64>,
    #[serde(flatten)]
    pub payload: Payload,
}

impl Instance {
    pub fn new(payload: Payload, seed: Option<u64>) -> Self {
        Instance {
            format: FORMAT.to_string(),
            version: VERSION,
            seed,
            payload,
        }
    }

    /// Check the header and the dimensions of the payload.
    pub fn validate(&self) -> Result<()> {
        if self.format != FORMAT {
            return Err(Error::Format(format!("unknown format tag {:?}", self.format)));
        }
        if self.version != VERSION {
            return Err(Error::Format(format!("unsupported version {}", self.version)));
        }
        match &self.payload {
            Payload::Kernel { l, a, sigma } => {
                if a.rows() != l.n() {
                    return Err(Error::Format(format!(
                        "A has {} rows but L has order {}",
                        a.rows(),
                        l.n()
                    )));
                }
                if sigma.len() != a.cols() {
                    return Err(Error::Format(format!(
                        "Σ has {} entries but A has {} columns",
                        sigma.len(),
                        a.cols()
                    )));
                }
            }
            Payload::Ocp {
                data,
                sigma_old,
                sigma_new,
            } => {
                data.validate()?;
                sigma_old.validate(&data.dims)?;
                sigma_new.validate(&data.dims)?;
            }
        }
        Ok(())
    }

    pub fn write_json<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, self).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn read_json<R: Read>(r: R) -> Result<Self> {
        let inst: Instance = serde_json::from_reader(r).map_err(|e| Error::Format(e.to_string()))?;
        inst.validate()?;
        Ok(inst)
    }

    pub fn to_json_string(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Self::read_json(s.as_bytes())
    }
}
