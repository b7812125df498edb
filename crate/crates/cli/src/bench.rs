//! Update-versus-refactorization benchmarks written as CSV rows.

use std::io::Write;

use hyh_core::dense::refactor_into;
use hyh_core::hyh::{hyh_update_in_place, HyhWorkspace};
use hyh_core::oracle::{residual_fro, sym_low_rank_form};
use hyh_core::probgen::{gen_ocp, gen_spd_factor, gen_update, perturb_active_set, toggle_penalties, GenConfig};
use hyh_core::riccati::{
    kkt_residual, riccati_factor, riccati_factor_into, riccati_solve, riccati_update_in_place, OcpDims,
    RiccatiWorkspace, UpdateOptions,
};
use hyh_core::{DenseMatrix, TriFactor};
use serde::Serialize;

use crate::timing::{interleaved, median, time_result, WARMUP};
use crate::verify::stage_oracle_gap;

pub const CSV_HEADER: &str = "method,n,m,r,N,nx,nu,nc,flip,reps,median_ns,residual,seed";

/// Residual limit for kernel rows.
pub const KERNEL_RESIDUAL_LIMIT: f64 = 1e-9;
/// Residual limit for Riccati rows.
pub const RICCATI_RESIDUAL_LIMIT: f64 = 1e-7;

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("invalid benchmark setup: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] hyh_core::Error),
    #[error("{method} residual {residual:e} exceeds {limit:e}")]
    Residual { method: String, residual: f64, limit: f64 },
    #[error("failed to write CSV: {0}")]
    Csv(#[from] csv::Error),
}

/// One CSV row. Inapplicable dimensions are left empty.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRecord {
    pub method: String,
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub r: Option<usize>,
    #[serde(rename = "N")]
    pub horizon: Option<usize>,
    pub nx: Option<usize>,
    pub nu: Option<usize>,
    pub nc: Option<usize>,
    pub flip: Option<f64>,
    pub reps: usize,
    pub median_ns: u64,
    pub residual: f64,
    pub seed: u64,
}

pub fn write_csv<W: Write>(w: W, records: &[BenchRecord]) -> Result<(), BenchError> {
    let mut out = csv::Writer::from_writer(w);
    if records.is_empty() {
        out.write_record(CSV_HEADER.split(','))?;
    }
    for r in records {
        out.serialize(r)?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

fn checked(method: &str, residual: f64, limit: f64) -> Result<f64, BenchError> {
    if residual <= limit {
        Ok(residual)
    } else {
        Err(BenchError::Residual {
            method: method.to_string(),
            residual,
            limit,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UpdateBench {
    pub n: usize,
    pub ms: Vec<usize>,
    pub rs: Vec<usize>,
    pub reps: usize,
    pub seed: u64,
}

/// Update columns alternate `+1, −1, +1, …`.
pub fn update_signs(m: usize) -> Vec<f64> {
    (0..m).map(|p| if p % 2 == 0 { 1.0 } else { -1.0 }).collect()
}

/// Per `m`: one `full_factorization` row, then one `hyh_update` row per
/// block size. All methods for one `m` are timed interleaved.
pub fn bench_update(b: &UpdateBench) -> Result<Vec<BenchRecord>, BenchError> {
    if b.n == 0 || b.reps < 3 || b.rs.contains(&0) {
        return Err(BenchError::Config("need n >= 1, reps >= 3 and block sizes >= 1".into()));
    }
    let cfg = GenConfig::new(b.seed);
    let l = gen_spd_factor(&cfg, b.n)?;
    let h = l.gram();
    let mut rows = Vec::new();
    for &m in &b.ms {
        let (a, sigma) = gen_update(&cfg, &l, &update_signs(m))?;
        let target = sym_low_rank_form(&l, &a, &sigma)?;

        let mut full = l.clone();
        let mut outs: Vec<(TriFactor, DenseMatrix, HyhWorkspace)> =
            b.rs.iter().map(|&r| (l.clone(), a.clone(), HyhWorkspace::with_capacity(r, m))).collect();
        let samples = {
            let mut base = || time_result(|| refactor_into(&h, &a, &sigma, &mut full));
            let mut trials: Vec<Box<dyn FnMut() -> hyh_core::Result<u64> + '_>> = vec![Box::new(&mut base)];
            for ((lo, ao, ws), &r) in outs.iter_mut().zip(&b.rs) {
                let (l, a, sigma) = (&l, &a, &sigma);
                trials.push(Box::new(move || {
                    lo.clone_from(l);
                    ao.clone_from(a);
                    time_result(|| hyh_update_in_place(lo, ao, sigma, r, ws))
                }));
            }
            let mut refs: Vec<&mut dyn FnMut() -> hyh_core::Result<u64>> =
                trials.iter_mut().map(|t| t.as_mut() as _).collect();
            interleaved(b.reps, WARMUP, &mut refs)?
        };

        let record = |method: &str, r: Option<usize>, ns: &[u64], residual: f64| BenchRecord {
            method: method.to_string(),
            n: Some(b.n),
            m: Some(m),
            r,
            horizon: None,
            nx: None,
            nu: None,
            nc: None,
            flip: None,
            reps: b.reps,
            median_ns: median(ns),
            residual,
            seed: b.seed,
        };
        let res = checked("full_factorization", residual_fro(&full, &target)?, KERNEL_RESIDUAL_LIMIT)?;
        rows.push(record("full_factorization", None, &samples[0], res));
        for (i, (lo, _, _)) in outs.iter().enumerate() {
            let res = checked("hyh_update", residual_fro(lo, &target)?, KERNEL_RESIDUAL_LIMIT)?;
            rows.push(record("hyh_update", Some(b.rs[i]), &samples[i + 1], res));
        }
    }
    Ok(rows)
}

/// How many penalties change between the old and new schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Flips {
    /// `⌈f · total⌉` entries.
    Fraction(f64),
    /// Exactly this many entries.
    Count(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiccatiBench {
    pub horizon: usize,
    pub nx: usize,
    pub nu: usize,
    pub ncs: Vec<usize>,
    pub flips: Flips,
    pub reps: usize,
    pub seed: u64,
}

/// Per `nc`: `riccati_factor`, `riccati_solve` and `riccati_update` rows for
/// the same randomly flipped penalty schedule, timed interleaved.
pub fn bench_riccati(b: &RiccatiBench) -> Result<Vec<BenchRecord>, BenchError> {
    if b.reps < 3 {
        return Err(BenchError::Config("need reps >= 3".into()));
    }
    if let Flips::Fraction(f) = b.flips {
        if !(0.0..=1.0).contains(&f) {
            return Err(BenchError::Config(format!("flip fraction {f} is outside [0, 1]")));
        }
    }
    let mut rows = Vec::new();
    for &nc in &b.ncs {
        let dims = OcpDims::uniform(b.horizon, b.nx, b.nu, nc);
        dims.validate()?;
        let cfg = GenConfig::new(b.seed);
        let (data, s0) = gen_ocp(&cfg, &dims)?;
        let total = dims.nc.iter().sum::<usize>();
        let (s1, flip) = match b.flips {
            Flips::Fraction(f) => (perturb_active_set(&s0, &cfg.with_flip_fraction(f))?, f),
            Flips::Count(k) if k > total => {
                return Err(BenchError::Config(format!("cannot flip {k} of {total} penalties")));
            }
            Flips::Count(k) => (toggle_penalties(&s0, k, &cfg)?, k as f64 / total.max(1) as f64),
        };
        let f0 = riccati_factor(&data, &s0)?;
        let fresh = riccati_factor(&data, &s1)?;

        let mut ff = f0.clone();
        let mut fu = f0.clone();
        let mut step = None;
        let (mut ws_f, mut ws_u) = (RiccatiWorkspace::new(), RiccatiWorkspace::new());
        let samples = {
            let mut factor = || time_result(|| riccati_factor_into(&data, &s1, &mut ff, &mut ws_f));
            let mut solve = || time_result(|| riccati_solve(&fresh, &data).map(|s| step = Some(s)));
            let mut update = || {
                fu.clone_from(&f0);
                time_result(|| {
                    riccati_update_in_place(&data, &s0, &s1, &mut fu, &mut ws_u, UpdateOptions::default()).map(|_| ())
                })
            };
            interleaved(b.reps, WARMUP, &mut [&mut factor, &mut solve, &mut update])?
        };
        let step = step.expect("solve ran");

        let record = |method: &str, ns: &[u64], residual: f64| BenchRecord {
            method: method.to_string(),
            n: None,
            m: None,
            r: None,
            horizon: Some(b.horizon),
            nx: Some(b.nx),
            nu: Some(b.nu),
            nc: Some(nc),
            flip: Some(flip),
            reps: b.reps,
            median_ns: median(ns),
            residual,
            seed: b.seed,
        };
        let res = checked("riccati_factor", stage_oracle_gap(&data, &s1, &ff)?, RICCATI_RESIDUAL_LIMIT)?;
        rows.push(record("riccati_factor", &samples[0], res));
        let res = checked("riccati_solve", kkt_residual(&data, &s1, &step)?, RICCATI_RESIDUAL_LIMIT)?;
        rows.push(record("riccati_solve", &samples[1], res));
        let res = checked("riccati_update", fu.rel_max_diff(&fresh), RICCATI_RESIDUAL_LIMIT)?;
        rows.push(record("riccati_update", &samples[2], res));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_rows_and_schema() {
        let b = UpdateBench {
            n: 12,
            ms: vec![0, 2],
            rs: vec![1, 4],
            reps: 3,
            seed: 1,
        };
        let rows = bench_update(&b).unwrap();
        assert_eq!(rows.len(), 2 * 3);
        assert_eq!(rows[0].method, "full_factorization");
        assert!(rows.iter().all(|r| r.median_ns > 0 && r.residual <= KERNEL_RESIDUAL_LIMIT));
        assert_eq!(rows[1].residual, 0.0);

        let mut buf = Vec::new();
        write_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        assert!(lines.next().unwrap().starts_with("full_factorization,12,0,,,,,,,3,"));
    }

    #[test]
    fn riccati_rows() {
        let b = RiccatiBench {
            horizon: 4,
            nx: 4,
            nu: 2,
            ncs: vec![0, 3],
            flips: Flips::Fraction(0.25),
            reps: 3,
            seed: 2,
        };
        let rows = bench_riccati(&b).unwrap();
        let methods: Vec<_> = rows.iter().map(|r| r.method.as_str()).collect();
        assert_eq!(methods, ["riccati_factor", "riccati_solve", "riccati_update"].repeat(2));
    }

    #[test]
    fn no_flips_means_exact_update() {
        let b = RiccatiBench {
            horizon: 3,
            nx: 2,
            nu: 1,
            ncs: vec![2],
            flips: Flips::Count(0),
            reps: 3,
            seed: 5,
        };
        let rows = bench_riccati(&b).unwrap();
        assert_eq!(rows[2].residual, 0.0);
    }

    #[test]
    fn bad_setups() {
        let mut b = UpdateBench {
            n: 4,
            ms: vec![1],
            rs: vec![1],
            reps: 2,
            seed: 1,
        };
        assert!(matches!(bench_update(&b), Err(BenchError::Config(_))));
        b.reps = 3;
        b.rs = vec![0];
        assert!(matches!(bench_update(&b), Err(BenchError::Config(_))));
    }

    #[test]
    fn empty_csv_still_has_header() {
        let mut buf = Vec::new();
        write_csv(&mut buf, &[]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().trim(), CSV_HEADER);
    }
}
