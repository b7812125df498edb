//! Riccati recursion for the stagewise Newton system of a linear-quadratic
//! optimal control problem with ALM penalties.
//!
//! The stage Hessians
//!
//! ```text
//! H_j = Hl_j + G_jᵀ Σ_j G_j + F_jᵀ P_{j+1} F_j,    P_N = Q_N + G_Nᵀ Σ_N G_N
//! ```
//!
//! are factored backwards in time as `[[Luu, 0], [Lxu, Lxx]]`, with
//! `P_j = Lxx Lxxᵀ` the cost-to-go. When only a few penalties change, each
//! `P_j` moves by a low-rank term `Φ_j Ŝ_j Φ_jᵀ` and the factors can be
//! updated stage by stage with the hyperbolic Householder kernels instead of
//! being recomputed.

mod factor;
mod solve;
mod update;

pub use factor::{assemble_stage_hessian, assemble_terminal_hessian, riccati_factor, riccati_factor_into, RiccatiWorkspace};
pub use solve::{kkt_residual, riccati_solve};
pub use update::{
    riccati_update, riccati_update_in_place, FallbackReason, RankBudget, UpdateCarry, UpdateOptions,
    UpdateReport,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{DenseMatrix, SignedDiagonal, TriFactor};

/// Problem dimensions. Stages run `0..=horizon`; `nc` has one entry per stage.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OcpDims {
    pub horizon: usize,
    pub nx: usize,
    pub nu: usize,
    pub nc: Vec<usize>,
}

impl OcpDims {
    /// Same constraint count at every stage.
    pub fn uniform(horizon: usize, nx: usize, nu: usize, nc: usize) -> Self {
        OcpDims {
            horizon,
            nx,
            nu,
            nc: vec![nc; horizon + 1],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 || self.nx == 0 || self.nu == 0 {
            return Err(Error::dims(format!(
                "need horizon, nx, nu >= 1 (got {}, {}, {})",
                self.horizon, self.nx, self.nu
            )));
        }
        if self.nc.len() != self.horizon + 1 {
            return Err(Error::dims(format!(
                "nc has {} entries, expected {}",
                self.nc.len(),
                self.horizon + 1
            )));
        }
        Ok(())
    }

    /// `nu + nx`, the size of a stage variable `(u, x)`.
    #[inline]
    pub fn nz(&self) -> usize {
        self.nu + self.nx
    }

    pub fn total_constraints(&self) -> usize {
        self.nc.iter().sum()
    }
}

/// Stagewise data of the equality constrained QP solved for the Newton step.
///
/// For `j < N`: `hess[j] = [[R, S], [Sᵀ, Q]]`, `dynamics[j] = (B A)`,
/// `constraints[j] = (D C)`, `grad[j]` is the gradient in `(u, x)` order and
/// `residual[j]` is the dynamics defect `e_j`. The terminal stage has
/// `hess_terminal = Q_N`, `constraints_terminal = C_N` and `grad_terminal`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OcpData {
    pub dims: OcpDims,
    pub hess: Vec<DenseMatrix>,
    pub hess_terminal: DenseMatrix,
    pub dynamics: Vec<DenseMatrix>,
    pub constraints: Vec<DenseMatrix>,
    pub constraints_terminal: DenseMatrix,
    pub grad: Vec<Vec<f64>>,
    pub grad_terminal: Vec<f64>,
    pub residual: Vec<Vec<f64>>,
    /// `x_init − x⁰`, the fixed initial state step.
    pub x0: Vec<f64>,
}

impl OcpData {
    pub fn validate(&self) -> Result<()> {
        let d = &self.dims;
        d.validate()?;
        let (n, nx, nz) = (d.horizon, d.nx, d.nz());
        let shape = |m: &DenseMatrix, r: usize, c: usize, what: &str, j: usize| -> Result<()> {
            if m.rows() != r || m.cols() != c {
                return Err(Error::dims(format!(
                    "{} at stage {} is {}x{}, expected {}x{}",
                    what,
                    j,
                    m.rows(),
                    m.cols(),
                    r,
                    c
                )));
            }
            Ok(())
        };
        let len = |v: &[f64], l: usize, what: &str, j: usize| -> Result<()> {
            if v.len() != l {
                return Err(Error::dims(format!(
                    "{} at stage {} has length {}, expected {}",
                    what,
                    j,
                    v.len(),
                    l
                )));
            }
            Ok(())
        };
        if self.hess.len() != n
            || self.dynamics.len() != n
            || self.constraints.len() != n
            || self.grad.len() != n
            || self.residual.len() != n
        {
            return Err(Error::dims(format!("stage arrays must have {} entries", n)));
        }
        for j in 0..n {
            shape(&self.hess[j], nz, nz, "Hessian", j)?;
            shape(&self.dynamics[j], nx, nz, "dynamics Jacobian", j)?;
            shape(&self.constraints[j], d.nc[j], nz, "constraint Jacobian", j)?;
            len(&self.grad[j], nz, "gradient", j)?;
            len(&self.residual[j], nx, "dynamics residual", j)?;
        }
        shape(&self.hess_terminal, nx, nx, "Hessian", n)?;
        shape(&self.constraints_terminal, d.nc[n], nx, "constraint Jacobian", n)?;
        len(&self.grad_terminal, nx, "gradient", n)?;
        len(&self.x0, nx, "initial state", 0)?;
        Ok(())
    }

    /// Constraint Jacobian of stage `j` (terminal one at `j = N`).
    pub fn constraint(&self, j: usize) -> &DenseMatrix {
        if j == self.dims.horizon {
            &self.constraints_terminal
        } else {
            &self.constraints[j]
        }
    }
}

/// Diagonal ALM penalties per stage: positive for active constraints, zero
/// otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PenaltySchedule {
    pub stages: Vec<SignedDiagonal>,
}

impl PenaltySchedule {
    pub fn new(stages: Vec<SignedDiagonal>) -> Self {
        PenaltySchedule { stages }
    }

    pub fn zeros(dims: &OcpDims) -> Self {
        PenaltySchedule {
            stages: dims.nc.iter().map(|&c| SignedDiagonal::zeros(c)).collect(),
        }
    }

    pub fn stage(&self, j: usize) -> &SignedDiagonal {
        &self.stages[j]
    }

    pub fn validate(&self, dims: &OcpDims) -> Result<()> {
        if self.stages.len() != dims.nc.len() {
            return Err(Error::dims(format!(
                "penalty schedule has {} stages, expected {}",
                self.stages.len(),
                dims.nc.len()
            )));
        }
        for (j, (s, &c)) in self.stages.iter().zip(&dims.nc).enumerate() {
            if s.len() != c {
                return Err(Error::dims(format!(
                    "stage {} has {} penalties for {} constraints",
                    j,
                    s.len(),
                    c
                )));
            }
        }
        Ok(())
    }

    /// Number of entries that differ from `other`.
    pub fn count_differences(&self, other: &PenaltySchedule) -> usize {
        self.stages
            .iter()
            .zip(&other.stages)
            .map(|(a, b)| {
                a.entries()
                    .iter()
                    .zip(b.entries())
                    .filter(|(x, y)| x != y)
                    .count()
            })
            .sum()
    }
}

/// Cholesky factors of all stage Hessians.
///
/// Stage `j < N` is kept as one `(nu + nx)`-order factor whose blocks are
/// `Luu` (leading `nu × nu`), `Lxu` (bottom-left `nx × nu`) and `Lxx`
/// (trailing `nx × nx`). The terminal factor is `chol(P_N)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiccatiFactors {
    nx: usize,
    nu: usize,
    stages: Vec<TriFactor>,
    terminal: TriFactor,
}

impl RiccatiFactors {
    pub(crate) fn with_dims(dims: &OcpDims) -> Self {
        RiccatiFactors {
            nx: dims.nx,
            nu: dims.nu,
            stages: (0..dims.horizon).map(|_| TriFactor::identity(dims.nz())).collect(),
            terminal: TriFactor::identity(dims.nx),
        }
    }

    pub fn horizon(&self) -> usize {
        self.stages.len()
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn nu(&self) -> usize {
        self.nu
    }

    /// Full stage factor `chol(H_j)`.
    pub fn stage(&self, j: usize) -> &TriFactor {
        &self.stages[j]
    }

    pub(crate) fn stage_mut(&mut self, j: usize) -> &mut TriFactor {
        &mut self.stages[j]
    }

    pub fn terminal(&self) -> &TriFactor {
        &self.terminal
    }

    pub(crate) fn terminal_mut(&mut self) -> &mut TriFactor {
        &mut self.terminal
    }

    pub fn luu(&self, j: usize) -> TriFactor {
        let s = self.stages[j].as_dense();
        TriFactor::from_lower(s.block(0, 0, self.nu, self.nu)).expect("square block")
    }

    pub fn lxu(&self, j: usize) -> DenseMatrix {
        self.stages[j].as_dense().block(self.nu, 0, self.nx, self.nu)
    }

    pub fn lxx(&self, j: usize) -> TriFactor {
        let s = self.stages[j].as_dense();
        TriFactor::from_lower(s.block(self.nu, self.nu, self.nx, self.nx)).expect("square block")
    }

    /// Factor of the cost-to-go `P_j` (`Lxx` of stage `j`, or the terminal
    /// factor at `j = N`).
    pub fn cost_to_go(&self, j: usize) -> TriFactor {
        if j == self.horizon() {
            self.terminal.clone()
        } else {
            self.lxx(j)
        }
    }

    /// `(data, offset, ld)` of the cost-to-go factor inside its storage.
    pub(crate) fn cost_to_go_raw(&self, j: usize) -> (&[f64], usize, usize) {
        if j == self.horizon() {
            (self.terminal.as_dense().as_slice(), 0, self.nx)
        } else {
            let nz = self.nu + self.nx;
            (self.stages[j].as_dense().as_slice(), self.nu * nz + self.nu, nz)
        }
    }

    /// Largest relative elementwise difference over all stage factors.
    pub fn rel_max_diff(&self, other: &RiccatiFactors) -> f64 {
        self.stages
            .iter()
            .zip(&other.stages)
            .map(|(a, b)| a.rel_max_diff(b))
            .fold(self.terminal.rel_max_diff(&other.terminal), f64::max)
    }

    /// True when every factor agrees bit for bit on its lower triangle.
    pub fn bits_eq(&self, other: &RiccatiFactors) -> bool {
        self.stages.len() == other.stages.len()
            && self.terminal.lower_bits_eq(&other.terminal)
            && self
                .stages
                .iter()
                .zip(&other.stages)
                .all(|(a, b)| a.lower_bits_eq(b))
    }

    pub fn has_positive_diagonals(&self) -> bool {
        self.terminal.has_positive_diagonal() && self.stages.iter().all(|s| s.has_positive_diagonal())
    }
}

/// Newton step `(Δu, Δx)`; `du` has `N` entries, `dx` has `N + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewtonStep {
    pub du: Vec<Vec<f64>>,
    pub dx: Vec<Vec<f64>>,
}

impl NewtonStep {
    pub fn zeros(dims: &OcpDims) -> Self {
        NewtonStep {
            du: vec![vec![0.0; dims.nu]; dims.horizon],
            dx: vec![vec![0.0; dims.nx]; dims.horizon + 1],
        }
    }
}
