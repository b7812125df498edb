//! Invariant suites over seeded instances.
//!
//! Every invariant is reduced to a number compared against a tolerance
//! (`value <= tol`); yes/no properties report `0` or `1` against `0`.

use hyh_core::hyh::{hyh_apply_block, hyh_update, hyh_update_block, hyh_update_counted, reconstruct_q, FlopCounter};
use hyh_core::oracle::{reference_cholesky, residual_fro, sym_low_rank_form};
use hyh_core::probgen::{gen_ocp, gen_spd_factor, gen_update, perturb_active_set, toggle_penalties, GenConfig};
use hyh_core::riccati::{
    assemble_stage_hessian, assemble_terminal_hessian, kkt_residual, riccati_factor, riccati_solve,
    riccati_update, riccati_update_in_place, NewtonStep, OcpData, OcpDims, PenaltySchedule, RankBudget,
    RiccatiFactors, RiccatiWorkspace, UpdateOptions,
};
use hyh_core::{DenseMatrix, SignedDiagonal, TriFactor};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub const BLOCK_SIZES: [usize; 4] = [1, 2, 4, 8];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scope {
    Kernels,
    Riccati,
    All,
}

/// Deliberate corruption of the oracle side, used to show that the suites
/// catch wrong answers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Fault {
    #[default]
    None,
    /// Flip the sign of the first weight handed to the oracles.
    FlipSign,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub invariant: &'static str,
    pub seed: u64,
    pub value: f64,
    pub tol: f64,
    pub note: Option<String>,
}

impl Check {
    pub fn new(invariant: &'static str, seed: u64, value: f64, tol: f64) -> Self {
        Check {
            invariant,
            seed,
            value,
            tol,
            note: None,
        }
    }

    fn flag(invariant: &'static str, seed: u64, ok: bool) -> Self {
        Check::new(invariant, seed, if ok { 0.0 } else { 1.0 }, 0.0)
    }

    fn error(invariant: &'static str, seed: u64, e: impl std::fmt::Display) -> Self {
        Check {
            note: Some(e.to_string()),
            ..Check::new(invariant, seed, f64::INFINITY, 0.0)
        }
    }

    pub fn passed(&self) -> bool {
        self.value <= self.tol
    }
}

/// One row of the summary table.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub invariant: &'static str,
    pub cases: usize,
    pub failed: usize,
    pub worst: f64,
    pub tol: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub cases: usize,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed())
    }

    /// Per-invariant summary in order of first appearance.
    pub fn summary(&self) -> Vec<Summary> {
        let mut rows: Vec<Summary> = Vec::new();
        for c in &self.checks {
            let row = match rows.iter_mut().find(|r| r.invariant == c.invariant) {
                Some(r) => r,
                None => {
                    rows.push(Summary {
                        invariant: c.invariant,
                        cases: 0,
                        failed: 0,
                        worst: 0.0,
                        tol: c.tol,
                    });
                    rows.last_mut().unwrap()
                }
            };
            row.cases += 1;
            row.failed += !c.passed() as usize;
            if c.value.is_nan() || c.value > row.worst {
                row.worst = c.value;
            }
        }
        rows
    }

    pub fn render(&self) -> String {
        let mut s = format!("{:<34} {:>6} {:>6} {:>10} {:>8}  status\n", "invariant", "cases", "fail", "worst", "tol");
        for r in self.summary() {
            s += &format!(
                "{:<34} {:>6} {:>6} {:>10.2e} {:>8.0e}  {}\n",
                r.invariant,
                r.cases,
                r.failed,
                r.worst,
                r.tol,
                if r.failed == 0 { "pass" } else { "FAIL" }
            );
        }
        for c in self.failures() {
            s += &format!(
                "FAIL {} seed={} value={:e} tol={:e}{}\n",
                c.invariant,
                c.seed,
                c.value,
                c.tol,
                c.note.as_deref().map(|n| format!(" ({n})")).unwrap_or_default()
            );
        }
        s
    }
}

/// Run the suites of `scope` on `cases` instances seeded `seed, seed + 1, …`.
/// Cases run in parallel; checks come back in seed order.
pub fn run(scope: Scope, seed: u64, cases: usize, fault: Fault) -> Report {
    let per_case: Vec<Vec<Check>> = (0..cases as u64)
        .into_par_iter()
        .map(|i| {
            let s = seed.wrapping_add(i);
            let mut out = Vec::new();
            if matches!(scope, Scope::Kernels | Scope::All) {
                match random_kernel_case(s, 128, 32, fault) {
                    Ok(c) => out.extend(kernel_checks(s, &c, fault)),
                    Err(e) => out.push(Check::error("kernel.generation", s, e)),
                }
            }
            if matches!(scope, Scope::Riccati | Scope::All) {
                match random_ocp(s) {
                    Ok((data, s0)) => out.extend(ocp_checks(s, &data, &s0, None, fault)),
                    Err(e) => out.push(Check::error("riccati.generation", s, e)),
                }
            }
            out
        })
        .collect();
    Report {
        cases,
        checks: per_case.into_iter().flatten().collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelCase {
    pub l: TriFactor,
    pub a: DenseMatrix,
    pub sigma: SignedDiagonal,
}

/// Random update with `n ≤ max_n`, `m ≤ max_m` and roughly a third of the
/// columns negative. Odd seeds also get weights away from `±1` (with `AΣAᵀ`
/// unchanged). Under a fault, `m ≥ 1` so there is something to corrupt.
pub fn random_kernel_case(seed: u64, max_n: usize, max_m: usize, fault: Fault) -> hyh_core::Result<KernelCase> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=max_n);
    let min_m = (fault != Fault::None) as usize;
    let m = rng.gen_range(min_m..=max_m.max(min_m));
    let signs: Vec<f64> = (0..m).map(|_| if rng.gen_bool(1.0 / 3.0) { -1.0 } else { 1.0 }).collect();
    let cfg = GenConfig::new(seed);
    let l = gen_spd_factor(&cfg, n)?;
    let (mut a, mut sigma) = gen_update(&cfg, &l, &signs)?;
    if seed % 2 == 1 {
        for (p, s) in sigma.entries_mut().iter_mut().enumerate() {
            let c = rng.gen_range(0.1..10.0f64);
            *s *= c;
            for v in a.col_mut(p) {
                *v /= c.sqrt();
            }
        }
    }
    Ok(KernelCase { l, a, sigma })
}

fn faulty(sigma: &SignedDiagonal, fault: Fault) -> SignedDiagonal {
    let mut s = sigma.clone();
    if fault == Fault::FlipSign {
        if let Some(v) = s.entries_mut().first_mut() {
            *v = -*v;
        }
    }
    s
}

/// `‖L̃L̃ᵀ − H̃‖_F / ‖H̃‖_F` for the blocked update with block size `r`.
pub fn reconstruction(c: &KernelCase, r: usize) -> hyh_core::Result<f64> {
    let h = sym_low_rank_form(&c.l, &c.a, &c.sigma)?;
    residual_fro(&hyh_update(&c.l, &c.a, &c.sigma, r)?, &h)
}

/// Largest elementwise gap to the Cholesky factor of the assembled `H̃`,
/// relative to its largest entry.
pub fn oracle_gap(c: &KernelCase, r: usize) -> hyh_core::Result<f64> {
    let reference = reference_cholesky(&sym_low_rank_form(&c.l, &c.a, &c.sigma)?)?;
    Ok(hyh_update(&c.l, &c.a, &c.sigma, r)?.rel_max_diff(&reference))
}

/// Ŝ-orthogonality and annihilation gaps of the block transformation built
/// on the leading `k` rows and columns of the case.
pub fn block_transformation_gaps(c: &KernelCase, k: usize) -> hyh_core::Result<(f64, f64)> {
    let k = k.min(c.l.n());
    let m = c.a.cols();
    let mut l11 = TriFactor::from_lower(c.l.as_dense().block(0, 0, k, k))?;
    let mut a1 = c.a.block(0, 0, k, m);
    let mut before = DenseMatrix::zeros(k, k + m);
    before.set_block(0, 0, &l11.to_lower_dense());
    before.set_block(0, k, &a1);

    let w = hyh_update_block(&mut l11, &mut a1, &c.sigma)?;
    let q = reconstruct_q(&w, &c.sigma)?;
    let s = c.sigma.augmented(k);
    let mut qs = q.clone();
    for (j, sj) in s.entries().iter().enumerate() {
        for v in qs.col_mut(j) {
            *v *= sj;
        }
    }
    let mut gap = qs.matmul(&q.transpose())?;
    for (j, sj) in s.entries().iter().enumerate() {
        gap[(j, j)] -= sj;
    }
    let orth = gap.fro_norm() / (1.0 + s.fro_norm());

    let mut target = DenseMatrix::zeros(k, k + m);
    target.set_block(0, 0, &l11.to_lower_dense());
    let annihilation = before.matmul(&q)?.sub(&target)?.fro_norm() / before.fro_norm();
    Ok((orth, annihilation))
}

/// Relative gap between the blocked apply and right multiplication by the
/// densely reconstructed transformation, on the rows below the first block.
fn apply_gap(c: &KernelCase, k: usize) -> hyh_core::Result<f64> {
    let n = c.l.n();
    let k = k.min(n);
    let m = c.a.cols();
    let mut l11 = TriFactor::from_lower(c.l.as_dense().block(0, 0, k, k))?;
    let mut a1 = c.a.block(0, 0, k, m);
    let w = hyh_update_block(&mut l11, &mut a1, &c.sigma)?;
    let q = reconstruct_q(&w, &c.sigma)?;
    let mut l21 = c.l.as_dense().block(k, 0, n - k, k);
    let mut a2 = c.a.block(k, 0, n - k, m);
    let mut stacked = DenseMatrix::zeros(n - k, k + m);
    stacked.set_block(0, 0, &l21);
    stacked.set_block(0, k, &a2);
    let expect = stacked.matmul(&q)?;
    hyh_apply_block(&mut l21, &mut a2, &c.sigma, &w)?;
    let mut got = DenseMatrix::zeros(n - k, k + m);
    got.set_block(0, 0, &l21);
    got.set_block(0, k, &a2);
    Ok(got.sub(&expect)?.fro_norm() / (1.0 + expect.fro_norm()))
}

/// Worst of `|fma − closed form| / 4n`; sqrt and division counts must be
/// exact, otherwise infinity.
pub fn count_gap(c: &KernelCase, r: usize) -> hyh_core::Result<f64> {
    let n = c.l.n();
    let mut counter = FlopCounter::default();
    hyh_update_counted(&c.l, &c.a, &c.sigma, r, &mut counter)?;
    if counter.sqrt != n as u64 || counter.div != 2 * n as u64 {
        return Ok(f64::INFINITY);
    }
    let predicted = FlopCounter::predicted_fma(n, c.a.cols(), r);
    Ok((counter.fma as f64 - predicted).abs() / (4.0 * n as f64))
}

macro_rules! try_check {
    ($out:ident, $name:literal, $seed:expr, $e:expr) => {
        match $e {
            Ok(v) => v,
            Err(e) => {
                $out.push(Check::error($name, $seed, e));
                return $out;
            }
        }
    };
}

/// All kernel invariants on one case.
pub fn kernel_checks(seed: u64, c: &KernelCase, fault: Fault) -> Vec<Check> {
    let mut out = Vec::new();
    let oracle_case = KernelCase {
        sigma: faulty(&c.sigma, fault),
        ..c.clone()
    };
    let h = try_check!(out, "kernel.oracle_assembly", seed, sym_low_rank_form(&c.l, &c.a, &oracle_case.sigma));
    let reference = try_check!(out, "kernel.oracle_assembly", seed, reference_cholesky(&h));

    let mut results = Vec::new();
    for r in BLOCK_SIZES {
        let lt = try_check!(out, "kernel.update", seed, hyh_update(&c.l, &c.a, &c.sigma, r));
        out.push(Check::new("kernel.reconstruction", seed, residual_fro(&lt, &h).unwrap_or(f64::INFINITY), 1e-10));
        out.push(Check::new("kernel.oracle_equivalence", seed, lt.rel_max_diff(&reference), 1e-9));
        out.push(Check::flag("kernel.sign_preservation", seed, lt.has_positive_diagonal()));
        results.push(lt);
    }
    let spread = results.iter().map(|x| x.rel_max_diff(&results[0])).fold(0.0, f64::max);
    out.push(Check::new("kernel.block_size_independence", seed, spread, 1e-10));

    let back = try_check!(out, "kernel.composition", seed, hyh_update(&results[2], &c.a, &c.sigma.negated(), 4));
    out.push(Check::new("kernel.composition", seed, back.rel_max_diff(&c.l), 1e-8));

    let (orth, ann) = try_check!(out, "kernel.block_transformation", seed, block_transformation_gaps(c, 32));
    out.push(Check::new("kernel.s_orthogonality", seed, orth, 1e-11));
    out.push(Check::new("kernel.annihilation", seed, ann, 1e-11));
    let ag = try_check!(out, "kernel.apply_block", seed, apply_gap(c, 8));
    out.push(Check::new("kernel.apply_block", seed, ag, 1e-11));

    if c.sigma.entries().iter().all(|s| s.abs() == 1.0) {
        // The closed form assumes full blocks.
        let fits: Vec<usize> = BLOCK_SIZES.into_iter().filter(|r| c.l.n().is_multiple_of(*r)).collect();
        let r = fits[seed as usize % fits.len()];
        let g = try_check!(out, "kernel.operation_counts", seed, count_gap(c, r));
        out.push(Check::new("kernel.operation_counts", seed, g, 1.0));
    }

    let zero = DenseMatrix::zeros(c.l.n(), c.a.cols());
    let empty = DenseMatrix::zeros(c.l.n(), 0);
    let trivial = hyh_update(&c.l, &zero, &c.sigma, 4).map(|x| x.lower_bits_eq(&c.l)).unwrap_or(false)
        && hyh_update(&c.l, &empty, &SignedDiagonal::ones(0), 4).map(|x| x.lower_bits_eq(&c.l)).unwrap_or(false);
    out.push(Check::flag("kernel.trivial_bitwise", seed, trivial));
    out
}

/// Random OCP with `N ≤ 16`, `nx ≤ 8`, `nu ≤ 4`, `nc[j] ≤ 12`.
pub fn random_ocp(seed: u64) -> hyh_core::Result<(OcpData, PenaltySchedule)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x05ee_d0c9);
    let horizon = rng.gen_range(1..=16);
    let dims = OcpDims {
        horizon,
        nx: rng.gen_range(1..=8),
        nu: rng.gen_range(1..=4),
        nc: (0..=horizon).map(|_| rng.gen_range(0..=12)).collect(),
    };
    gen_ocp(&GenConfig::new(seed), &dims)
}

/// Flip patterns used by the equivalence checks: one entry, a quarter of
/// the entries and all of them.
pub fn flip_patterns(s0: &PenaltySchedule, seed: u64) -> hyh_core::Result<Vec<(&'static str, PenaltySchedule)>> {
    let cfg = GenConfig::new(seed);
    Ok(vec![
        ("one", toggle_penalties(s0, 1, &cfg)?),
        ("quarter", perturb_active_set(s0, &cfg.with_flip_fraction(0.25))?),
        ("all", perturb_active_set(s0, &cfg.with_flip_fraction(1.0))?),
    ])
}

fn fault_schedule(s: &PenaltySchedule, fault: Fault) -> PenaltySchedule {
    let mut s = s.clone();
    if fault == Fault::FlipSign {
        if let Some(v) = s.stages.iter_mut().flat_map(|d| d.entries_mut().iter_mut()).find(|v| **v != 0.0) {
            *v = -*v;
        } else if let Some(v) = s.stages.iter_mut().flat_map(|d| d.entries_mut().iter_mut()).next() {
            *v = 1.0;
        }
    }
    s
}

/// Largest gap between each stage factor and the Cholesky factor of the
/// densely assembled stage Hessian.
pub fn stage_oracle_gap(data: &OcpData, sigma: &PenaltySchedule, f: &RiccatiFactors) -> hyh_core::Result<f64> {
    let n = data.dims.horizon;
    let mut worst = f.terminal().rel_max_diff(&reference_cholesky(&assemble_terminal_hessian(data, sigma)?)?);
    for j in 0..n {
        let h = assemble_stage_hessian(data, sigma, j, &f.cost_to_go(j + 1))?;
        worst = worst.max(f.stage(j).rel_max_diff(&reference_cholesky(&h)?));
    }
    Ok(worst)
}

/// Largest gap of `P̃_j − P_j − Φ_j Ŝ_j Φ_jᵀ` over the updated stages,
/// relative to the largest entry of `P̃_j`.
pub fn carry_gap(data: &OcpData, s0: &PenaltySchedule, s1: &PenaltySchedule, f0: &RiccatiFactors) -> hyh_core::Result<f64> {
    let mut f1 = f0.clone();
    let opts = UpdateOptions {
        record_carries: true,
        budget: RankBudget::Unlimited,
        ..Default::default()
    };
    let rep = riccati_update_in_place(data, s0, s1, &mut f1, &mut RiccatiWorkspace::new(), opts)?;
    let gram = |l: TriFactor| -> hyh_core::Result<DenseMatrix> {
        let d = l.to_lower_dense();
        d.matmul(&d.transpose())
    };
    let mut worst = 0.0f64;
    for (j, carry) in rep.carries.iter().enumerate() {
        let Some(c) = carry else { continue };
        let p_new = gram(f1.cost_to_go(j))?;
        let p_old = gram(f0.cost_to_go(j))?;
        let mut phis = c.phi.clone();
        for (p, s) in c.s.entries().iter().enumerate() {
            for v in phis.col_mut(p) {
                *v *= s;
            }
        }
        let gap = p_new.sub(&p_old)?.sub(&phis.matmul(&c.phi.transpose())?)?;
        worst = worst.max(gap.max_abs() / p_new.max_abs());
    }
    Ok(worst)
}

/// True when the reported carry widths are the running counts of changed
/// penalties and stay within the default budget until the fallback stage.
pub fn rank_accounting_holds(data: &OcpData, s0: &PenaltySchedule, s1: &PenaltySchedule, f0: &RiccatiFactors) -> hyh_core::Result<bool> {
    let d = &data.dims;
    let mut f = f0.clone();
    let rep = riccati_update_in_place(data, s0, s1, &mut f, &mut RiccatiWorkspace::new(), UpdateOptions::default())?;
    let stop = rep.fallback.map(|(j, _)| j);
    let mut k = 0;
    for j in (0..=d.horizon).rev() {
        k += s0.stages[j].entries().iter().zip(s1.stages[j].entries()).filter(|(a, b)| a != b).count();
        let budget = d.nx.max(d.nu) + d.nc[j];
        if stop == Some(j) {
            return Ok(k > budget && rep.widths[j] == 0);
        }
        if rep.widths[j] != k || k > budget {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Dense solve of the Newton QP as one saddle-point system with LU, the
/// independent reference for the Riccati solve. Variables are ordered
/// `(u_0, x_0, …, u_{N−1}, x_{N−1}, x_N)`.
pub fn dense_kkt_step(data: &OcpData, sigma: &PenaltySchedule) -> Option<NewtonStep> {
    let d = &data.dims;
    let (n, nx, nu, nz) = (d.horizon, d.nx, d.nu, d.nz());
    let nv = n * nz + nx;
    let ne = (n + 1) * nx;
    let mut k = DMatrix::<f64>::zeros(nv + ne, nv + ne);
    let mut rhs = DVector::<f64>::zeros(nv + ne);
    for j in 0..=n {
        let (h, g, size) = if j < n {
            (&data.hess[j], &data.constraints[j], nz)
        } else {
            (&data.hess_terminal, &data.constraints_terminal, nx)
        };
        let s = sigma.stage(j).entries();
        let grad = if j < n { &data.grad[j] } else { &data.grad_terminal };
        for c in 0..size {
            for r in 0..size {
                let pen: f64 = (0..g.rows()).map(|i| g[(i, r)] * s[i] * g[(i, c)]).sum();
                k[(j * nz + r, j * nz + c)] = h[(r, c)] + pen;
            }
            rhs[j * nz + c] = -grad[c];
        }
    }
    for i in 0..nx {
        k[(nv + i, nu + i)] = 1.0;
        rhs[nv + i] = data.x0[i];
    }
    for j in 0..n {
        let row = nv + (j + 1) * nx;
        let next = if j + 1 < n { (j + 1) * nz + nu } else { n * nz };
        for i in 0..nx {
            for c in 0..nz {
                k[(row + i, j * nz + c)] = -data.dynamics[j][(i, c)];
            }
            k[(row + i, next + i)] = 1.0;
            rhs[row + i] = data.residual[j][i];
        }
    }
    for r in nv..nv + ne {
        for c in 0..nv {
            k[(c, r)] = k[(r, c)];
        }
    }
    let sol = k.lu().solve(&rhs)?;
    let mut step = NewtonStep::zeros(d);
    for j in 0..n {
        for i in 0..nu {
            step.du[j][i] = sol[j * nz + i];
        }
        for i in 0..nx {
            step.dx[j][i] = sol[j * nz + nu + i];
        }
    }
    for i in 0..nx {
        step.dx[n][i] = sol[n * nz + i];
    }
    Some(step)
}

/// Largest elementwise gap between two steps, relative to the largest entry
/// of `reference`.
pub fn step_gap(step: &NewtonStep, reference: &NewtonStep) -> f64 {
    let flat = |s: &NewtonStep| -> Vec<f64> { s.du.iter().chain(&s.dx).flatten().copied().collect() };
    let (x, y) = (flat(step), flat(reference));
    let scale = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let diff = x.iter().zip(&y).fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

/// All Riccati invariants on one instance. With `s_new` given only that
/// change is checked, otherwise the three standard flip patterns.
pub fn ocp_checks(
    seed: u64,
    data: &OcpData,
    s0: &PenaltySchedule,
    s_new: Option<&PenaltySchedule>,
    fault: Fault,
) -> Vec<Check> {
    let mut out = Vec::new();
    let f0 = try_check!(out, "riccati.factor", seed, riccati_factor(data, s0));
    let g = try_check!(out, "riccati.factor_oracle", seed, stage_oracle_gap(data, s0, &f0));
    out.push(Check::new("riccati.factor_oracle", seed, g, 1e-10));

    let same = try_check!(out, "riccati.noop_bitwise", seed, riccati_update(data, s0, s0, &f0));
    out.push(Check::flag("riccati.noop_bitwise", seed, same.bits_eq(&f0)));

    let patterns = match s_new {
        Some(s) => vec![("given", s.clone())],
        None => try_check!(out, "riccati.flip_patterns", seed, flip_patterns(s0, seed)),
    };
    for (_, s1) in &patterns {
        let reference_sched = fault_schedule(s1, fault);
        let fresh = match riccati_factor(data, &reference_sched) {
            Ok(f) => f,
            Err(e) => {
                out.push(Check::error("riccati.update_equivalence", seed, e));
                continue;
            }
        };
        for (name, budget) in [
            ("riccati.update_equivalence", RankBudget::Auto),
            ("riccati.fallback_equivalence", RankBudget::Fixed(1)),
        ] {
            let mut f = f0.clone();
            let opts = UpdateOptions {
                budget,
                block_size: 1 + seed as usize % 8,
                ..Default::default()
            };
            match riccati_update_in_place(data, s0, s1, &mut f, &mut RiccatiWorkspace::new(), opts) {
                Ok(_) => out.push(Check::new(name, seed, f.rel_max_diff(&fresh), 1e-8)),
                Err(e) => out.push(Check::error(name, seed, e)),
            }
        }
        let cg = try_check!(out, "riccati.carry_identity", seed, carry_gap(data, s0, s1, &f0));
        out.push(Check::new("riccati.carry_identity", seed, cg, 1e-9));
        let ok = try_check!(out, "riccati.rank_accounting", seed, rank_accounting_holds(data, s0, s1, &f0));
        out.push(Check::flag("riccati.rank_accounting", seed, ok));

        let updated = try_check!(out, "riccati.update", seed, riccati_update(data, s0, s1, &f0));
        let step = try_check!(out, "riccati.solve", seed, riccati_solve(&updated, data));
        let res = try_check!(out, "riccati.kkt_residual", seed, kkt_residual(data, &reference_sched, &step));
        out.push(Check::new("riccati.kkt_residual", seed, res, 1e-9));
        if data.dims.horizon <= 8 {
            match dense_kkt_step(data, &reference_sched) {
                Some(reference) => out.push(Check::new("riccati.dense_kkt", seed, step_gap(&step, &reference), 1e-8)),
                None => out.push(Check::error("riccati.dense_kkt", seed, "singular KKT matrix")),
            }
        }
    }
    out
}
