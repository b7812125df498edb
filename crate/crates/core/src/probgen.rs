//! Seeded instance generators.
//!
//! Random numbers come from ChaCha8 seeded with `seed_from_u64(seed)`, with a
//! separate stream per generator so that, for example, the OCP drawn for a
//! seed does not change when the perturbation for the same seed is drawn.
//! Gaussians are `rand_distr::StandardNormal`.

use rand::seq::index;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::dense;
use crate::error::{Error, Result};
use crate::matrix::{DenseMatrix, SignedDiagonal, TriFactor};
use crate::oracle::{reference_cholesky, sym_low_rank_form};
use crate::riccati::{riccati_factor, OcpData, OcpDims, PenaltySchedule};

const STREAM_SPD: u64 = 1;
const STREAM_UPDATE: u64 = 2;
const STREAM_OCP: u64 = 3;
const STREAM_PERTURB: u64 = 4;

/// Rescale attempts before [`gen_update`] gives up.
const MAX_RESCALES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenConfig {
    pub seed: u64,
    /// Target condition number of generated SPD matrices.
    pub cond_target: f64,
    /// Penalty value of an active constraint.
    pub gamma: f64,
    pub flip_fraction: f64,
}

impl GenConfig {
    pub fn new(seed: u64) -> Self {
        GenConfig {
            seed,
            cond_target: 1e3,
            gamma: 10.0,
            flip_fraction: 0.0,
        }
    }

    pub fn with_flip_fraction(mut self, f: f64) -> Self {
        self.flip_fraction = f;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.flip_fraction) {
            return Err(Error::GenerationFailed(format!(
                "flip fraction {} outside [0, 1]",
                self.flip_fraction
            )));
        }
        if !(self.cond_target >= 1.0) || !self.cond_target.is_finite() {
            return Err(Error::GenerationFailed(format!(
                "condition target {} must be >= 1",
                self.cond_target
            )));
        }
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return Err(Error::GenerationFailed(format!("gamma {} must be > 0", self.gamma)));
        }
        Ok(())
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }
}

fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> DenseMatrix {
    let data = (0..rows * cols)
        .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
        .collect();
    DenseMatrix::from_col_major(rows, cols, data).expect("generated shape")
}

fn gaussian_vec(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.sample(StandardNormal)).collect()
}

/// `Q diag(spectrum) Qᵀ` with `Q` a product of `n` random Householder
/// reflectors.
fn spd_with_spectrum(rng: &mut ChaCha8Rng, spectrum: &[f64]) -> DenseMatrix {
    let n = spectrum.len();
    let mut q = DenseMatrix::identity(n);
    let mut qv = vec![0.0; n];
    for _ in 0..n {
        let v = gaussian_vec(rng, n);
        let vv: f64 = v.iter().map(|x| x * x).sum();
        if vv == 0.0 {
            continue;
        }
        // Q ← Q (I − 2vvᵀ/vᵀv)
        qv.fill(0.0);
        dense::gemv_acc(&q, &v, &mut qv);
        let s = 2.0 / vv;
        for (c, &vc) in v.iter().enumerate() {
            dense::axpy(-s * vc, &qv, q.col_mut(c));
        }
    }
    let mut h = DenseMatrix::from_fn(n, n, |i, j| {
        (0..n).map(|k| q[(i, k)] * spectrum[k] * q[(j, k)]).sum()
    });
    h.symmetrize_from_lower();
    h
}

/// Random Cholesky factor of order `n` whose Gram matrix has eigenvalues
/// log-spaced between 1 and `cond_target`.
pub fn gen_spd_factor(cfg: &GenConfig, n: usize) -> Result<TriFactor> {
    cfg.validate()?;
    if n == 0 {
        return Err(Error::GenerationFailed("order must be at least 1".into()));
    }
    let mut rng = cfg.rng(STREAM_SPD);
    let spectrum: Vec<f64> = (0..n)
        .map(|i| {
            if n == 1 {
                1.0
            } else {
                cfg.cond_target.powf(i as f64 / (n - 1) as f64)
            }
        })
        .collect();
    let h = spd_with_spectrum(&mut rng, &spectrum);
    dense::cholesky(&h).map_err(|e| Error::GenerationFailed(format!("SPD factor: {e}")))
}

/// Random update `(A, Σ)` for `L` with `Σ = sign(signs)`. Columns with a
/// negative sign are halved until the downdate is comfortably absorbed
/// (`Σ_neg ‖L⁻¹a‖² ≤ 1/2`) and `LLᵀ + AΣAᵀ` factors.
pub fn gen_update(cfg: &GenConfig, l: &TriFactor, signs: &[f64]) -> Result<(DenseMatrix, SignedDiagonal)> {
    cfg.validate()?;
    let n = l.n();
    let m = signs.len();
    if let Some(p) = signs.iter().position(|s| !(*s != 0.0 && s.is_finite())) {
        return Err(Error::GenerationFailed(format!("sign {p} is zero or not finite")));
    }
    let sigma = SignedDiagonal::new(signs.iter().map(|s| s.signum()).collect());
    let mut rng = cfg.rng(STREAM_UPDATE);
    let mut a = gaussian(&mut rng, n, m, 1.0);
    let neg: Vec<usize> = (0..m).filter(|&p| sigma.entries()[p] < 0.0).collect();
    if neg.is_empty() {
        return Ok((a, sigma));
    }

    let ld = l.as_dense().as_slice();
    let weight = |a: &DenseMatrix| -> f64 {
        neg.iter()
            .map(|&p| {
                let mut x = a.col(p).to_vec();
                dense::trsv_lower(ld, n, n, &mut x);
                x.iter().map(|v| v * v).sum::<f64>()
            })
            .sum()
    };
    for _ in 0..MAX_RESCALES {
        if weight(&a) <= 0.5 && reference_cholesky(&sym_low_rank_form(l, &a, &sigma)?).is_ok() {
            return Ok((a, sigma));
        }
        for &p in &neg {
            for v in a.col_mut(p) {
                *v *= 0.5;
            }
        }
    }
    Err(Error::GenerationFailed(format!(
        "no positive definite downdate after {MAX_RESCALES} rescales"
    )))
}

/// Random OCP with positive definite stage costs, dynamics of spectral
/// radius at most 1.2 and a schedule where each constraint is active with
/// probability 1/2.
pub fn gen_ocp(cfg: &GenConfig, dims: &OcpDims) -> Result<(OcpData, PenaltySchedule)> {
    cfg.validate()?;
    dims.validate()?;
    let (n, nx, nu, nz) = (dims.horizon, dims.nx, dims.nu, dims.nz());
    let mut rng = cfg.rng(STREAM_OCP);

    let spd = |rng: &mut ChaCha8Rng, k: usize| {
        let m = gaussian(rng, k, k, 1.0 / (k as f64).sqrt());
        let mut h = m.matmul(&m.transpose()).expect("square");
        for i in 0..k {
            h[(i, i)] += 0.1;
        }
        h.symmetrize_from_lower();
        h
    };

    let mut hess = Vec::with_capacity(n);
    let mut dynamics = Vec::with_capacity(n);
    let mut constraints = Vec::with_capacity(n);
    let mut grad = Vec::with_capacity(n);
    let mut residual = Vec::with_capacity(n);
    for j in 0..n {
        hess.push(spd(&mut rng, nz));
        let b = gaussian(&mut rng, nx, nu, 1.0 / (nu as f64).sqrt());
        let r = gaussian(&mut rng, nx, nx, 1.0);
        // ρ(R) ≤ ‖R‖₂ ≤ √(‖R‖₁‖R‖∞)
        let norm1 = (0..nx).map(|c| r.col(c).iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
        let norm_inf = (0..nx)
            .map(|i| (0..nx).map(|c| r[(i, c)].abs()).sum::<f64>())
            .fold(0.0, f64::max);
        let s = 1.2 / (norm1 * norm_inf).sqrt().max(f64::MIN_POSITIVE);
        dynamics.push(DenseMatrix::from_fn(nx, nz, |i, c| {
            if c < nu {
                b[(i, c)]
            } else {
                s * r[(i, c - nu)]
            }
        }));
        constraints.push(gaussian(&mut rng, dims.nc[j], nz, 1.0 / (nz as f64).sqrt()));
        grad.push(gaussian_vec(&mut rng, nz));
        residual.push(gaussian_vec(&mut rng, nx));
    }
    let hess_terminal = spd(&mut rng, nx);
    let constraints_terminal = gaussian(&mut rng, dims.nc[n], nx, 1.0 / (nx as f64).sqrt());
    let grad_terminal = gaussian_vec(&mut rng, nx);
    let x0 = gaussian_vec(&mut rng, nx);

    let stages = dims
        .nc
        .iter()
        .map(|&c| {
            SignedDiagonal::new(
                (0..c)
                    .map(|_| if rng.gen_bool(0.5) { cfg.gamma } else { 0.0 })
                    .collect(),
            )
        })
        .collect();
    let sigma = PenaltySchedule::new(stages);
    let data = OcpData {
        dims: dims.clone(),
        hess,
        hess_terminal,
        dynamics,
        constraints,
        constraints_terminal,
        grad,
        grad_terminal,
        residual,
        x0,
    };
    riccati_factor(&data, &sigma).map_err(|e| Error::GenerationFailed(format!("OCP rejected: {e}")))?;
    Ok((data, sigma))
}

/// Toggle `⌈flip_fraction · total⌉` randomly chosen penalties between 0 and
/// `gamma`.
pub fn perturb_active_set(sigma: &PenaltySchedule, cfg: &GenConfig) -> Result<PenaltySchedule> {
    cfg.validate()?;
    let total: usize = sigma.stages.iter().map(|s| s.len()).sum();
    let count = ((cfg.flip_fraction * total as f64).ceil() as usize).min(total);
    toggle_penalties(sigma, count, cfg)
}

/// Toggle exactly `count` distinct, uniformly chosen penalties.
pub fn toggle_penalties(sigma: &PenaltySchedule, count: usize, cfg: &GenConfig) -> Result<PenaltySchedule> {
    cfg.validate()?;
    let total: usize = sigma.stages.iter().map(|s| s.len()).sum();
    if count > total {
        return Err(Error::GenerationFailed(format!(
            "cannot toggle {count} of {total} penalties"
        )));
    }
    let mut rng = cfg.rng(STREAM_PERTURB);
    let mut out = sigma.clone();
    let mut flat: Vec<(usize, usize)> = Vec::with_capacity(total);
    for (j, s) in sigma.stages.iter().enumerate() {
        flat.extend((0..s.len()).map(|i| (j, i)));
    }
    for k in index::sample(&mut rng, total, count) {
        let (j, i) = flat[k];
        let v = &mut out.stages[j].entries_mut()[i];
        *v = if *v == 0.0 { cfg.gamma } else { 0.0 };
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::residual_fro;

    #[test]
    fn spd_factor_is_deterministic_and_round_trips() {
        let cfg = GenConfig::new(7);
        let a = gen_spd_factor(&cfg, 32).unwrap();
        let b = gen_spd_factor(&cfg, 32).unwrap();
        assert!(a.lower_bits_eq(&b));
        let h = a.gram();
        let r = reference_cholesky(&h).unwrap();
        assert!(r.rel_max_diff(&a) < 1e-10);
        assert!(residual_fro(&a, &h).unwrap() < 1e-13);
    }

    #[test]
    fn spd_factor_of_order_one() {
        let l = gen_spd_factor(&GenConfig::new(3), 1).unwrap();
        assert!(l.get(0, 0) > 0.0);
    }

    #[test]
    fn spd_condition_near_target() {
        let l = gen_spd_factor(&GenConfig::new(11), 8).unwrap();
        // Diagonal of the Gram matrix lies between the extreme eigenvalues.
        let h = l.gram();
        for i in 0..8 {
            assert!(h[(i, i)] >= 1.0 - 1e-9 && h[(i, i)] <= 1e3 + 1e-6);
        }
    }

    #[test]
    fn update_patterns() {
        let cfg = GenConfig::new(5);
        let l = gen_spd_factor(&cfg, 16).unwrap();
        let (a, s) = gen_update(&cfg, &l, &[1.0, -1.0, 1.0, -1.0]).unwrap();
        assert_eq!(s.entries(), &[1.0, -1.0, 1.0, -1.0]);
        assert!(reference_cholesky(&sym_low_rank_form(&l, &a, &s).unwrap()).is_ok());

        let (a, s) = gen_update(&cfg, &l, &[]).unwrap();
        assert_eq!((a.rows(), a.cols(), s.len()), (16, 0, 0));

        let (a, _) = gen_update(&cfg, &l, &[1.0; 3]).unwrap();
        let (b, _) = gen_update(&cfg, &l, &[1.0; 3]).unwrap();
        assert_eq!(a, b);
        assert!(gen_update(&cfg, &l, &[0.0]).is_err());
    }

    #[test]
    fn ocp_is_deterministic() {
        let dims = OcpDims::uniform(3, 3, 2, 2);
        let cfg = GenConfig::new(1);
        let (d1, s1) = gen_ocp(&cfg, &dims).unwrap();
        let (d2, s2) = gen_ocp(&cfg, &dims).unwrap();
        assert_eq!(serde_json::to_string(&d1).unwrap(), serde_json::to_string(&d2).unwrap());
        assert_eq!(s1, s2);
        for s in &s1.stages {
            assert!(s.entries().iter().all(|&v| v == 0.0 || v == 10.0));
        }
    }

    #[test]
    fn ocp_without_constraints() {
        let dims = OcpDims::uniform(2, 2, 1, 0);
        let (_, s) = gen_ocp(&GenConfig::new(2), &dims).unwrap();
        assert!(s.stages.iter().all(|d| d.is_empty()));
    }

    #[test]
    fn perturbation_counts() {
        let dims = OcpDims::uniform(3, 2, 1, 10);
        let (_, sigma) = gen_ocp(&GenConfig::new(4), &dims).unwrap();
        let f0 = perturb_active_set(&sigma, &GenConfig::new(4)).unwrap();
        assert_eq!(f0, sigma);
        let all = perturb_active_set(&sigma, &GenConfig::new(4).with_flip_fraction(1.0)).unwrap();
        assert_eq!(all.count_differences(&sigma), 40);
        let q = perturb_active_set(&sigma, &GenConfig::new(4).with_flip_fraction(0.25)).unwrap();
        assert_eq!(q.count_differences(&sigma), 10);
        let one = toggle_penalties(&sigma, 1, &GenConfig::new(9)).unwrap();
        assert_eq!(one.count_differences(&sigma), 1);
        assert!(toggle_penalties(&sigma, 41, &GenConfig::new(9)).is_err());
    }

    #[test]
    fn bad_configs() {
        let mut cfg = GenConfig::new(0);
        cfg.flip_fraction = 1.5;
        assert!(cfg.validate().is_err());
        cfg = GenConfig::new(0);
        cfg.cond_target = 0.5;
        assert!(gen_spd_factor(&cfg, 3).is_err());
        cfg = GenConfig::new(0);
        cfg.gamma = 0.0;
        assert!(cfg.validate().is_err());
    }
}
