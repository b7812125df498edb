//! Low-rank update of the Riccati factors after a change of penalties.
//!
//! Walking backwards from the terminal stage, the cost-to-go moves by
//! `P̃_j = P_j + Φ_j Ŝ_j Φ_jᵀ`. Stage `j` then sees the update matrix
//! `Υ_j = (F_jᵀ Φ_{j+1} | G_jᵀ)` with weights `Ŝ_j = diag(Ŝ_{j+1}, ΔΣ_j)`
//! (only the changed penalty rows of `G_j` are kept). Triangularizing the
//! `Luu` columns of `(L_j | Υ_j)` leaves `Φ_j` in the `x` rows of the
//! transformed `Υ_j`, which is copied out before the `Lxx` columns are
//! processed.

use crate::dense::gemm_tn;
use crate::error::Result;
use crate::hyh::{update_columns, DEFAULT_BLOCK_SIZE};
use crate::matrix::{DenseMatrix, SignedDiagonal};

use super::factor::{check_factor_dims, factor_stages_down_from, factor_terminal, RiccatiWorkspace};
use super::{OcpData, PenaltySchedule, RiccatiFactors};

/// Largest carry width a stage may take before the update is abandoned in
/// favour of refactoring.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankBudget {
    /// `max(nx, nu) + nc[j]` at stage `j`.
    Auto,
    Fixed(usize),
    Unlimited,
}

impl RankBudget {
    fn limit(self, nx: usize, nu: usize, nc: usize) -> usize {
        match self {
            RankBudget::Auto => nx.max(nu) + nc,
            RankBudget::Fixed(k) => k,
            RankBudget::Unlimited => usize::MAX,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UpdateOptions {
    pub block_size: usize,
    pub budget: RankBudget,
    /// Keep a copy of every `(Φ_j, Ŝ_j)` in the report.
    pub record_carries: bool,
}

impl Default for UpdateOptions {
    fn default() -> Self {
        UpdateOptions {
            block_size: DEFAULT_BLOCK_SIZE,
            budget: RankBudget::Auto,
            record_carries: false,
        }
    }
}

/// Low-rank change `Φ Ŝ Φᵀ` of a cost-to-go matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct UpdateCarry {
    pub phi: DenseMatrix,
    pub s: SignedDiagonal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FallbackReason {
    RankBudget,
    Indefinite,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UpdateReport {
    /// Carry width `k_j` per stage `0..=N` (zero where nothing changed or the
    /// stage was refactored).
    pub widths: Vec<usize>,
    /// First stage (walking backwards) that was refactored instead of updated.
    pub fallback: Option<(usize, FallbackReason)>,
    /// `carries[j]` is `(Φ_j, Ŝ_j)` when recording was requested and stage `j`
    /// was updated.
    pub carries: Vec<Option<UpdateCarry>>,
}

/// Factors for `sigma_new`, obtained by updating `factors` (computed for
/// `sigma_old`).
pub fn riccati_update(
    data: &OcpData,
    sigma_old: &PenaltySchedule,
    sigma_new: &PenaltySchedule,
    factors: &RiccatiFactors,
) -> Result<RiccatiFactors> {
    let mut out = factors.clone();
    riccati_update_in_place(
        data,
        sigma_old,
        sigma_new,
        &mut out,
        &mut RiccatiWorkspace::new(),
        UpdateOptions::default(),
    )?;
    Ok(out)
}

/// In-place form of [`riccati_update`]. Stages whose carry exceeds the rank
/// budget, or whose update turns indefinite, are refactored together with all
/// earlier stages.
pub fn riccati_update_in_place(
    data: &OcpData,
    sigma_old: &PenaltySchedule,
    sigma_new: &PenaltySchedule,
    factors: &mut RiccatiFactors,
    ws: &mut RiccatiWorkspace,
    opts: UpdateOptions,
) -> Result<UpdateReport> {
    let dims = &data.dims;
    sigma_old.validate(dims)?;
    sigma_new.validate(dims)?;
    check_factor_dims(data, factors)?;
    let (n, nx, nu, nz) = (dims.horizon, dims.nx, dims.nu, dims.nz());
    let r = opts.block_size.max(1);

    let mut report = UpdateReport {
        widths: vec![0; n + 1],
        fallback: None,
        carries: vec![None; n + 1],
    };

    // Carry (Φ, Ŝ): Φ is nx × k, column-major, in ws.phi.
    let mut k = 0usize;
    ws.shat.clear();

    // Terminal stage: Φ_N = rows of G_N whose penalty changed.
    let changed = changed_rows(sigma_old.stage(n), sigma_new.stage(n));
    if !changed.is_empty() {
        let kn = changed.len();
        if kn > opts.budget.limit(nx, nu, dims.nc[n]) {
            return refactor_from(data, sigma_new, n, FallbackReason::RankBudget, factors, ws, report);
        }
        grow(&mut ws.phi, nx * kn);
        grow(&mut ws.upsilon, nx * kn);
        let g = &data.constraints_terminal;
        for (t, &(row, ds)) in changed.iter().enumerate() {
            for c in 0..nx {
                ws.phi[t * nx + c] = g[(row, c)];
            }
            ws.shat.push(ds);
        }
        ws.upsilon[..nx * kn].copy_from_slice(&ws.phi[..nx * kn]);
        let res = update_columns(
            factors.terminal_mut().as_dense_mut().as_mut_slice(),
            nx,
            nx,
            &mut ws.upsilon,
            nx,
            &ws.shat,
            r,
            0..nx,
            &mut ws.hyh,
        );
        if res.is_err() {
            return refactor_from(data, sigma_new, n, FallbackReason::Indefinite, factors, ws, report);
        }
        k = kn;
        report.widths[n] = k;
        if opts.record_carries {
            report.carries[n] = Some(carry(&ws.phi, nx, k, &ws.shat));
        }
    }

    for j in (0..n).rev() {
        let changed = changed_rows(sigma_old.stage(j), sigma_new.stage(j));
        let k_new = k + changed.len();
        if k_new == 0 {
            continue;
        }
        if k_new > opts.budget.limit(nx, nu, dims.nc[j]) {
            return refactor_from(data, sigma_new, j, FallbackReason::RankBudget, factors, ws, report);
        }

        // Υ_j = (F_jᵀ Φ_{j+1} | G_j[changed]ᵀ), nz × k_new.
        grow(&mut ws.upsilon, nz * k_new);
        let ups = &mut ws.upsilon[..nz * k_new];
        gemm_tn(&data.dynamics[j], &ws.phi, k, ups, &mut ws.ft);
        let g = &data.constraints[j];
        for (t, &(row, ds)) in changed.iter().enumerate() {
            let col = &mut ups[(k + t) * nz..(k + t + 1) * nz];
            for (c, v) in col.iter_mut().enumerate() {
                *v = g[(row, c)];
            }
            ws.shat.push(ds);
        }

        let stage = factors.stage_mut(j).as_dense_mut().as_mut_slice();
        let mut res = update_columns(stage, nz, nz, ups, nz, &ws.shat, r, 0..nu, &mut ws.hyh);
        if res.is_ok() {
            grow(&mut ws.phi, nx * k_new);
            for t in 0..k_new {
                ws.phi[t * nx..(t + 1) * nx].copy_from_slice(&ups[t * nz + nu..(t + 1) * nz]);
            }
            res = update_columns(stage, nz, nz, ups, nz, &ws.shat, r, nu..nz, &mut ws.hyh);
        }
        if res.is_err() {
            return refactor_from(data, sigma_new, j, FallbackReason::Indefinite, factors, ws, report);
        }
        k = k_new;
        report.widths[j] = k;
        if opts.record_carries {
            report.carries[j] = Some(carry(&ws.phi, nx, k, &ws.shat));
        }
    }
    Ok(report)
}

fn refactor_from(
    data: &OcpData,
    sigma_new: &PenaltySchedule,
    stage: usize,
    reason: FallbackReason,
    factors: &mut RiccatiFactors,
    ws: &mut RiccatiWorkspace,
    mut report: UpdateReport,
) -> Result<UpdateReport> {
    let n = data.dims.horizon;
    if stage == n {
        factor_terminal(data, sigma_new, factors, ws)?;
        factor_stages_down_from(data, sigma_new, n - 1, factors, ws)?;
    } else {
        factor_stages_down_from(data, sigma_new, stage, factors, ws)?;
    }
    report.fallback = Some((stage, reason));
    Ok(report)
}

/// `(row, σ_new − σ_old)` for every penalty that changed.
fn changed_rows(old: &SignedDiagonal, new: &SignedDiagonal) -> Vec<(usize, f64)> {
    old.entries()
        .iter()
        .zip(new.entries())
        .enumerate()
        .filter(|(_, (a, b))| a != b)
        .map(|(i, (a, b))| (i, b - a))
        .collect()
}

fn carry(phi: &[f64], nx: usize, k: usize, shat: &[f64]) -> UpdateCarry {
    UpdateCarry {
        phi: DenseMatrix::from_col_major(nx, k, phi[..nx * k].to_vec()).expect("carry shape"),
        s: SignedDiagonal::new(shat[..k].to_vec()),
    }
}

fn grow(v: &mut Vec<f64>, len: usize) {
    if v.len() < len {
        v.resize(len, 0.0);
    }
}
