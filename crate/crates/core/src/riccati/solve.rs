use crate::dense::{gemv_acc, gemv_t_acc, trmv_lower, trmv_lower_t, trsv_lower, trsv_lower_t};
use crate::error::{Error, Result};
use crate::matrix::{DenseMatrix, SignedDiagonal};

use super::{NewtonStep, OcpData, PenaltySchedule, RiccatiFactors};

/// Newton step from the Riccati factors: a backward pass for the affine
/// cost-to-go terms followed by a forward rollout of the feedback law.
pub fn riccati_solve(factors: &RiccatiFactors, data: &OcpData) -> Result<NewtonStep> {
    data.validate()?;
    super::factor::check_factor_dims(data, factors)?;
    let d = &data.dims;
    let (n, nx, nu, nz) = (d.horizon, d.nx, d.nu, d.nz());

    // hu_hat[j] = Luu⁻¹ h_u, kept for the forward pass.
    let mut hu_hat = vec![vec![0.0; nu]; n];
    let mut p = data.grad_terminal.clone();
    let mut q = vec![0.0; nx];
    let mut t = vec![0.0; nx];
    let mut h = vec![0.0; nz];
    for j in (0..n).rev() {
        // q = P_{j+1} e_j + p_{j+1}
        let (l, off, ld) = factors.cost_to_go_raw(j + 1);
        trmv_lower_t(&l[off..], ld, nx, &data.residual[j], &mut t);
        trmv_lower(&l[off..], ld, nx, &t, &mut q);
        for (qi, pi) in q.iter_mut().zip(&p) {
            *qi += pi;
        }
        h.copy_from_slice(&data.grad[j]);
        gemv_t_acc(&data.dynamics[j], &q, &mut h);

        let s = factors.stage(j).as_dense().as_slice();
        let (hu, hx) = h.split_at_mut(nu);
        trsv_lower(s, nz, nu, hu);
        // p_j = hx − Lxu ĥu
        for (c, &v) in hu.iter().enumerate() {
            let col = &s[c * nz + nu..(c + 1) * nz];
            for (pi, &lv) in hx.iter_mut().zip(col) {
                *pi -= lv * v;
            }
        }
        p.copy_from_slice(hx);
        hu_hat[j].copy_from_slice(hu);
    }

    let mut step = NewtonStep::zeros(d);
    step.dx[0].copy_from_slice(&data.x0);
    let mut z = vec![0.0; nz];
    for j in 0..n {
        let s = factors.stage(j).as_dense().as_slice();
        let (u, x) = z.split_at_mut(nu);
        x.copy_from_slice(&step.dx[j]);
        // u = −Luu⁻ᵀ (Lxuᵀ x + ĥu)
        for (c, uc) in u.iter_mut().enumerate() {
            let col = &s[c * nz + nu..(c + 1) * nz];
            *uc = -(hu_hat[j][c] + col.iter().zip(x.iter()).map(|(a, b)| a * b).sum::<f64>());
        }
        trsv_lower_t(s, nz, nu, u);
        step.du[j].copy_from_slice(u);
        let mut next = data.residual[j].clone();
        gemv_acc(&data.dynamics[j], &z, &mut next);
        step.dx[j + 1] = next;
    }
    Ok(step)
}

/// Relative infinity-norm residual of the KKT conditions of the Newton QP at
/// `step`, with the multipliers of the dynamics recovered backwards from the
/// state stationarity rows. Each block is scaled by `1 +` the largest norm of
/// its terms.
pub fn kkt_residual(data: &OcpData, sigma: &PenaltySchedule, step: &NewtonStep) -> Result<f64> {
    data.validate()?;
    sigma.validate(&data.dims)?;
    let d = &data.dims;
    let (n, nx, nu, nz) = (d.horizon, d.nx, d.nu, d.nz());
    if step.du.len() != n
        || step.dx.len() != n + 1
        || step.du.iter().any(|v| v.len() != nu)
        || step.dx.iter().any(|v| v.len() != nx)
    {
        return Err(Error::dims("step does not match the problem dimensions"));
    }
    let norm = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut worst = 0.0f64;

    // Initial state.
    let r0: Vec<f64> = step.dx[0].iter().zip(&data.x0).map(|(a, b)| a - b).collect();
    worst = worst.max(norm(&r0) / (1.0 + norm(&step.dx[0]).max(norm(&data.x0))));

    // λ_N = P^J_N x_N + g_N
    let mut lambda = data.grad_terminal.clone();
    let hess_n = &data.hess_terminal;
    hess_times(hess_n, data.constraint(n), sigma.stage(n), &step.dx[n], &mut lambda);

    let mut z = vec![0.0; nz];
    let mut s = vec![0.0; nz];
    let mut v = vec![0.0; nz];
    for j in (0..n).rev() {
        z[..nu].copy_from_slice(&step.du[j]);
        z[nu..].copy_from_slice(&step.dx[j]);

        // Dynamics.
        let mut fz = vec![0.0; nx];
        gemv_acc(&data.dynamics[j], &z, &mut fz);
        let dyn_res: Vec<f64> = (0..nx)
            .map(|i| step.dx[j + 1][i] - fz[i] - data.residual[j][i])
            .collect();
        let scale = norm(&step.dx[j + 1]).max(norm(&fz)).max(norm(&data.residual[j]));
        worst = worst.max(norm(&dyn_res) / (1.0 + scale));

        // Stationarity in u; the x rows define λ_j.
        s.copy_from_slice(&data.grad[j]);
        hess_times(&data.hess[j], &data.constraints[j], sigma.stage(j), &z, &mut s);
        v.fill(0.0);
        gemv_t_acc(&data.dynamics[j], &lambda, &mut v);
        let ru: Vec<f64> = (0..nu).map(|i| s[i] + v[i]).collect();
        let scale = norm(&s[..nu]).max(norm(&v[..nu]));
        worst = worst.max(norm(&ru) / (1.0 + scale));
        for i in 0..nx {
            lambda[i] = s[nu + i] + v[nu + i];
        }
    }
    Ok(worst)
}

/// `y += (H + Gᵀ Σ G) z`.
fn hess_times(h: &DenseMatrix, g: &DenseMatrix, sigma: &SignedDiagonal, z: &[f64], y: &mut [f64]) {
    gemv_acc(h, z, y);
    if g.rows() == 0 {
        return;
    }
    let mut gz = vec![0.0; g.rows()];
    gemv_acc(g, z, &mut gz);
    for (v, s) in gz.iter_mut().zip(sigma.entries()) {
        *v *= s;
    }
    gemv_t_acc(g, &gz, y);
}
