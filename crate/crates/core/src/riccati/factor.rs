use crate::dense::{cholesky_lower, dot};
use crate::error::{Error, Result};
use crate::hyh::HyhWorkspace;
use crate::matrix::{DenseMatrix, SignedDiagonal, TriFactor};

use super::{OcpData, PenaltySchedule, RiccatiFactors};

/// Scratch shared by the factorization, update and solve routines.
#[derive(Debug, Default, Clone)]
pub struct RiccatiWorkspace {
    x: Vec<f64>,
    y: Vec<f64>,
    active: Vec<usize>,
    pub(crate) hyh: HyhWorkspace,
    pub(crate) upsilon: Vec<f64>,
    pub(crate) phi: Vec<f64>,
    pub(crate) shat: Vec<f64>,
    pub(crate) ft: Vec<f64>,
}

impl RiccatiWorkspace {
    pub fn new() -> Self {
        Self::default()
    }
}

fn grow(v: &mut Vec<f64>, len: usize) {
    if v.len() < len {
        v.resize(len, 0.0);
    }
}

/// Lower triangle of `out += Xᵀ Y` where `X`, `Y` are `rows × nz`.
fn gram_acc(out: &mut [f64], nz: usize, x: &[f64], y: &[f64], rows: usize) {
    if rows == 0 {
        return;
    }
    for c in 0..nz {
        let yc = &y[c * rows..(c + 1) * rows];
        for r in c..nz {
            out[r + c * nz] += dot(&x[r * rows..(r + 1) * rows], yc);
        }
    }
}

/// Factor `base + Gᵀ Σ G + Fᵀ Lnext Lnextᵀ F` into `out` (order `nz`).
///
/// `next` is the cost-to-go factor `(data, offset, ld)` of order `nx`, absent
/// at the terminal stage (where `f` is unused).
#[allow(clippy::too_many_arguments)]
fn factor_stage(
    base: &DenseMatrix,
    g: &DenseMatrix,
    sigma: &SignedDiagonal,
    f: Option<&DenseMatrix>,
    next: Option<(&[f64], usize, usize)>,
    nx: usize,
    out: &mut [f64],
    ws: &mut RiccatiWorkspace,
) -> std::result::Result<(), usize> {
    let nz = base.rows();
    ws.active.clear();
    ws.active
        .extend(sigma.entries().iter().enumerate().filter(|(_, &s)| s != 0.0).map(|(i, _)| i));
    let nv = if next.is_some() { nx } else { 0 };
    let rows = nv + ws.active.len();
    grow(&mut ws.x, rows * nz);
    grow(&mut ws.y, rows * nz);

    for c in 0..nz {
        let xc = &mut ws.x[c * rows..(c + 1) * rows];
        let yc = &mut ws.y[c * rows..(c + 1) * rows];
        if let (Some((l, off, ld)), Some(f)) = (next, f) {
            // V = Lnextᵀ F, column by column.
            let fc = f.col(c);
            for i in 0..nx {
                let v = dot(&l[off + i * ld + i..off + i * ld + nx], &fc[i..nx]);
                xc[i] = v;
                yc[i] = v;
            }
        }
        for (t, &row) in ws.active.iter().enumerate() {
            let gv = g[(row, c)];
            xc[nv + t] = gv;
            yc[nv + t] = sigma.entries()[row] * gv;
        }
    }

    out[..nz * nz].copy_from_slice(base.as_slice());
    gram_acc(out, nz, &ws.x, &ws.y, rows);
    cholesky_lower(out, nz, nz)
}

pub(crate) fn factor_terminal(
    data: &OcpData,
    sigma: &PenaltySchedule,
    factors: &mut RiccatiFactors,
    ws: &mut RiccatiWorkspace,
) -> Result<()> {
    let n = data.dims.horizon;
    let nx = data.dims.nx;
    factor_stage(
        &data.hess_terminal,
        &data.constraints_terminal,
        sigma.stage(n),
        None,
        None,
        nx,
        factors.terminal_mut().as_dense_mut().as_mut_slice(),
        ws,
    )
    .map_err(|index| Error::StageNotPositiveDefinite { stage: n, index })
}

/// Refactor stages `j = from, from − 1, …, 0` against the cost-to-go already
/// stored for stage `from + 1`.
pub(crate) fn factor_stages_down_from(
    data: &OcpData,
    sigma: &PenaltySchedule,
    from: usize,
    factors: &mut RiccatiFactors,
    ws: &mut RiccatiWorkspace,
) -> Result<()> {
    let n = data.dims.horizon;
    let nx = data.dims.nx;
    for j in (0..=from.min(n - 1)).rev() {
        let (head, tail) = factors.stages.split_at_mut(j + 1);
        let out = head[j].as_dense_mut().as_mut_slice();
        let next = if j + 1 == n {
            (factors.terminal.as_dense().as_slice(), 0, nx)
        } else {
            let nz = data.dims.nz();
            (tail[0].as_dense().as_slice(), data.dims.nu * nz + data.dims.nu, nz)
        };
        factor_stage(
            &data.hess[j],
            &data.constraints[j],
            sigma.stage(j),
            Some(&data.dynamics[j]),
            Some(next),
            nx,
            out,
            ws,
        )
        .map_err(|index| Error::StageNotPositiveDefinite { stage: j, index })?;
    }
    Ok(())
}

/// Backward Riccati factorization of every stage Hessian.
pub fn riccati_factor(data: &OcpData, sigma: &PenaltySchedule) -> Result<RiccatiFactors> {
    data.validate()?;
    let mut factors = RiccatiFactors::with_dims(&data.dims);
    riccati_factor_into(data, sigma, &mut factors, &mut RiccatiWorkspace::new())?;
    Ok(factors)
}

/// [`riccati_factor`] writing into existing storage. `factors` must have
/// been created for the same dimensions.
pub fn riccati_factor_into(
    data: &OcpData,
    sigma: &PenaltySchedule,
    factors: &mut RiccatiFactors,
    ws: &mut RiccatiWorkspace,
) -> Result<()> {
    sigma.validate(&data.dims)?;
    check_factor_dims(data, factors)?;
    factor_terminal(data, sigma, factors, ws)?;
    factor_stages_down_from(data, sigma, data.dims.horizon - 1, factors, ws)
}

pub(crate) fn check_factor_dims(data: &OcpData, factors: &RiccatiFactors) -> Result<()> {
    let d = &data.dims;
    if factors.nx != d.nx || factors.nu != d.nu || factors.horizon() != d.horizon {
        return Err(Error::dims(format!(
            "factors are for N={}, nx={}, nu={} but data has N={}, nx={}, nu={}",
            factors.horizon(),
            factors.nx,
            factors.nu,
            d.horizon,
            d.nx,
            d.nu
        )));
    }
    Ok(())
}

/// Dense stage Hessian `Hl_j + G_jᵀ Σ_j G_j + F_jᵀ Lnext Lnextᵀ F_j`,
/// symmetrized. Assembled with plain matrix products, independently of the
/// factorization path.
pub fn assemble_stage_hessian(
    data: &OcpData,
    sigma: &PenaltySchedule,
    j: usize,
    next: &TriFactor,
) -> Result<DenseMatrix> {
    let d = &data.dims;
    if j >= d.horizon {
        return Err(Error::dims(format!("stage {} has no Hessian (N = {})", j, d.horizon)));
    }
    if next.n() != d.nx {
        return Err(Error::dims(format!(
            "cost-to-go factor has order {}, expected {}",
            next.n(),
            d.nx
        )));
    }
    let g = &data.constraints[j];
    let s = sigma.stage(j);
    if s.len() != g.rows() {
        return Err(Error::dims(format!(
            "stage {} has {} penalties for {} constraints",
            j,
            s.len(),
            g.rows()
        )));
    }
    let f = &data.dynamics[j];
    let sg = DenseMatrix::from_fn(g.rows(), g.cols(), |i, c| s.entries()[i] * g[(i, c)]);
    let penalty = g.transpose().matmul(&sg)?;
    let p = next.gram();
    let carried = f.transpose().matmul(&p)?.matmul(f)?;
    let mut h = data.hess[j].clone();
    for c in 0..h.cols() {
        for r in 0..h.rows() {
            h[(r, c)] += penalty[(r, c)] + carried[(r, c)];
        }
    }
    for c in 0..h.cols() {
        for r in (c + 1)..h.rows() {
            let avg = 0.5 * (h[(r, c)] + h[(c, r)]);
            h[(r, c)] = avg;
            h[(c, r)] = avg;
        }
    }
    Ok(h)
}

/// Dense `P_N = Q_N + G_Nᵀ Σ_N G_N`, symmetrized.
pub fn assemble_terminal_hessian(data: &OcpData, sigma: &PenaltySchedule) -> Result<DenseMatrix> {
    let g = &data.constraints_terminal;
    let s = sigma.stage(data.dims.horizon);
    let sg = DenseMatrix::from_fn(g.rows(), g.cols(), |i, c| s.entries()[i] * g[(i, c)]);
    let mut p = data.hess_terminal.clone();
    let penalty = g.transpose().matmul(&sg)?;
    for c in 0..p.cols() {
        for r in 0..p.rows() {
            p[(r, c)] += penalty[(r, c)];
        }
    }
    p.symmetrize_from_lower();
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::reference_cholesky;
    use crate::riccati::OcpDims;

    /// N = 1, nx = nu = 1, Hl = I, Q_N = 1, F = (1 1), no constraints.
    pub(crate) fn tiny() -> OcpData {
        OcpData {
            dims: OcpDims::uniform(1, 1, 1, 0),
            hess: vec![DenseMatrix::identity(2)],
            hess_terminal: DenseMatrix::identity(1),
            dynamics: vec![DenseMatrix::from_rows(&[[1.0, 1.0]]).unwrap()],
            constraints: vec![DenseMatrix::zeros(0, 2)],
            constraints_terminal: DenseMatrix::zeros(0, 1),
            grad: vec![vec![0.0; 2]],
            grad_terminal: vec![0.0],
            residual: vec![vec![0.0]],
            x0: vec![0.0],
        }
    }

    #[test]
    fn tiny_hand_recursion() {
        let data = tiny();
        let sigma = PenaltySchedule::zeros(&data.dims);
        let f = riccati_factor(&data, &sigma).unwrap();
        assert_eq!(f.terminal().get(0, 0), 1.0);
        let h = assemble_stage_hessian(&data, &sigma, 0, f.terminal()).unwrap();
        assert_eq!(h, DenseMatrix::from_rows(&[[2.0, 1.0], [1.0, 2.0]]).unwrap());
        assert!((f.luu(0).get(0, 0) - 2f64.sqrt()).abs() < 1e-15);
        assert!((f.lxu(0)[(0, 0)] - 1.0 / 2f64.sqrt()).abs() < 1e-15);
        assert!((f.lxx(0).get(0, 0) - 1.5f64.sqrt()).abs() < 1e-15);
        let oracle = reference_cholesky(&h).unwrap();
        assert!(f.stage(0).rel_max_diff(&oracle) < 1e-15);
    }

    #[test]
    fn assemble_without_constraints_and_identity_next() {
        let data = tiny();
        let sigma = PenaltySchedule::zeros(&data.dims);
        let h = assemble_stage_hessian(&data, &sigma, 0, &TriFactor::identity(1)).unwrap();
        let f = &data.dynamics[0];
        let want = {
            let mut w = f.transpose().matmul(f).unwrap();
            w[(0, 0)] += 1.0;
            w[(1, 1)] += 1.0;
            w
        };
        assert_eq!(h, want);
        assert!(assemble_stage_hessian(&data, &sigma, 1, &TriFactor::identity(1)).is_err());
    }

    #[test]
    fn indefinite_stage_is_reported() {
        let mut data = tiny();
        data.hess[0] = DenseMatrix::from_rows(&[[-5.0, 0.0], [0.0, 1.0]]).unwrap();
        let sigma = PenaltySchedule::zeros(&data.dims);
        assert_eq!(
            riccati_factor(&data, &sigma),
            Err(Error::StageNotPositiveDefinite { stage: 0, index: 0 })
        );
    }

    #[test]
    fn schedule_shape_checked() {
        let data = tiny();
        let bad = PenaltySchedule::new(vec![SignedDiagonal::zeros(1), SignedDiagonal::zeros(0)]);
        assert!(matches!(riccati_factor(&data, &bad), Err(Error::DimensionMismatch(_))));
    }
}
