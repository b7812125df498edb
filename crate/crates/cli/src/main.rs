use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use hyh_cli::bench::{self, BenchError, Flips, RiccatiBench, UpdateBench};
use hyh_cli::timing::pin_current_thread;
use hyh_cli::verify::{self, Fault, KernelCase, Report, Scope};
use hyh_core::instance::{Instance, Payload};
use hyh_core::probgen::{gen_ocp, gen_spd_factor, gen_update, perturb_active_set, GenConfig};
use hyh_core::riccati::OcpDims;

/// Hyperbolic Householder factorization updates: invariant suites and
/// update-versus-refactorization benchmarks.
#[derive(Debug, Parser)]
#[command(name = "hyh", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Run the invariant suites on seeded instances (or one saved instance).
    Verify(VerifyArgs),
    /// Time the blocked update against a full refactorization (kernel scale).
    BenchUpdate(BenchUpdateArgs),
    /// Time Riccati factorization, solve and update (OCP scale).
    BenchRiccati(BenchRiccatiArgs),
    /// Write a generated instance as JSON.
    #[command(subcommand)]
    Gen(GenCmd),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ScopeArg {
    Kernels,
    Riccati,
    All,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long, value_enum, default_value = "all")]
    scope: ScopeArg,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    cases: usize,
    /// Check this instance file instead of generated ones.
    #[arg(long)]
    instance: Option<PathBuf>,
    /// Corrupt the oracle side on purpose; the run must then fail.
    #[arg(long, hide = true)]
    inject_fault: bool,
}

#[derive(Debug, Args)]
struct BenchUpdateArgs {
    #[arg(long, default_value_t = 64)]
    n: usize,
    /// Update ranks, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5,6,7,8,9,10,11,12,13,14,15,16")]
    m: Vec<usize>,
    /// Block sizes, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1,4,8")]
    r: Vec<usize>,
    #[arg(long, default_value_t = 50)]
    reps: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// CSV destination (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BenchRiccatiArgs {
    #[arg(short = 'N', long, default_value_t = 24)]
    horizon: usize,
    #[arg(long, default_value_t = 24)]
    nx: usize,
    #[arg(long, default_value_t = 8)]
    nu: usize,
    /// Constraints per stage, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "4,8,16,32")]
    nc: Vec<usize>,
    /// Fraction of penalties to flip.
    #[arg(long, default_value_t = 0.25)]
    flip: f64,
    /// Flip exactly this many penalties instead of a fraction.
    #[arg(long, conflicts_with = "flip")]
    flip_count: Option<usize>,
    #[arg(long, default_value_t = 20)]
    reps: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum GenCmd {
    /// Factor `L` and update `(A, Σ)`.
    Kernel {
        #[arg(long, default_value_t = 64)]
        n: usize,
        /// Sign pattern of `Σ`, one `+` or `-` per column.
        #[arg(long, default_value = "++++")]
        signs: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// OCP with penalty schedules before and after random flips.
    Ocp {
        #[arg(short = 'N', long, default_value_t = 24)]
        horizon: usize,
        #[arg(long, default_value_t = 24)]
        nx: usize,
        #[arg(long, default_value_t = 8)]
        nu: usize,
        #[arg(long, default_value_t = 8)]
        nc: usize,
        #[arg(long, default_value_t = 0.25)]
        flip: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Failure classes and their exit codes.
enum Failure {
    /// A verification or residual check failed (exit 1).
    Check(anyhow::Error),
    /// Bad arguments or I/O (exit 2).
    Usage(anyhow::Error),
}

impl From<BenchError> for Failure {
    fn from(e: BenchError) -> Self {
        match e {
            BenchError::Residual { .. } | BenchError::Core(_) => Failure::Check(e.into()),
            BenchError::Config(_) | BenchError::Csv(_) => Failure::Usage(e.into()),
        }
    }
}

fn usage(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Usage(e.into())
}

fn open_out(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn run_verify(a: VerifyArgs) -> Result<(), Failure> {
    let fault = if a.inject_fault { Fault::FlipSign } else { Fault::None };
    let report = match &a.instance {
        Some(path) => {
            let file = File::open(path)
                .with_context(|| format!("cannot open {}", path.display()))
                .map_err(usage)?;
            let inst = Instance::read_json(io::BufReader::new(file)).map_err(usage)?;
            let seed = inst.seed.unwrap_or(0);
            let checks = match &inst.payload {
                Payload::Kernel { l, a, sigma } => {
                    let case = KernelCase {
                        l: l.clone(),
                        a: a.clone(),
                        sigma: sigma.clone(),
                    };
                    verify::kernel_checks(seed, &case, fault)
                }
                Payload::Ocp {
                    data,
                    sigma_old,
                    sigma_new,
                } => verify::ocp_checks(seed, data, sigma_old, Some(sigma_new), fault),
            };
            Report { cases: 1, checks }
        }
        None => {
            let scope = match a.scope {
                ScopeArg::Kernels => Scope::Kernels,
                ScopeArg::Riccati => Scope::Riccati,
                ScopeArg::All => Scope::All,
            };
            if a.cases == 0 {
                eprintln!("warning: --cases 0, nothing to verify");
            }
            verify::run(scope, a.seed, a.cases, fault)
        }
    };
    print!("{}", report.render());
    println!(
        "{} cases, {} checks, {} failed",
        report.cases,
        report.checks.len(),
        report.failures().count()
    );
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Check(anyhow::anyhow!("verification failed")))
    }
}

fn write_rows(out: Option<&Path>, rows: &[bench::BenchRecord]) -> Result<(), Failure> {
    let w = open_out(out).map_err(usage)?;
    bench::write_csv(w, rows)?;
    Ok(())
}

fn run_gen(cmd: GenCmd) -> Result<(), Failure> {
    let (inst, out) = match cmd {
        GenCmd::Kernel { n, signs, seed, out } => {
            let signs = signs
                .chars()
                .map(|c| match c {
                    '+' => Ok(1.0),
                    '-' => Ok(-1.0),
                    other => Err(anyhow::anyhow!("sign pattern may only contain + and -, got {other:?}")),
                })
                .collect::<anyhow::Result<Vec<f64>>>()
                .map_err(usage)?;
            let cfg = GenConfig::new(seed);
            let l = gen_spd_factor(&cfg, n).map_err(usage)?;
            let (a, sigma) = gen_update(&cfg, &l, &signs).map_err(|e| Failure::Check(e.into()))?;
            (Instance::new(Payload::Kernel { l, a, sigma }, Some(seed)), out)
        }
        GenCmd::Ocp {
            horizon,
            nx,
            nu,
            nc,
            flip,
            seed,
            out,
        } => {
            let dims = OcpDims::uniform(horizon, nx, nu, nc);
            let cfg = GenConfig::new(seed).with_flip_fraction(flip);
            cfg.validate().map_err(usage)?;
            dims.validate().map_err(usage)?;
            let (data, sigma_old) = gen_ocp(&cfg, &dims).map_err(|e| Failure::Check(e.into()))?;
            let sigma_new = perturb_active_set(&sigma_old, &cfg).map_err(usage)?;
            let payload = Payload::Ocp {
                data,
                sigma_old,
                sigma_new,
            };
            (Instance::new(payload, Some(seed)), out)
        }
    };
    let mut w = open_out(out.as_deref()).map_err(usage)?;
    inst.write_json(&mut w).map_err(usage)?;
    writeln!(w).and_then(|_| w.flush()).map_err(usage)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.cmd {
        Cmd::Verify(a) => run_verify(a),
        Cmd::BenchUpdate(a) => {
            pin_current_thread();
            let b = UpdateBench {
                n: a.n,
                ms: a.m,
                rs: a.r,
                reps: a.reps,
                seed: a.seed,
            };
            bench::bench_update(&b)
                .map_err(Failure::from)
                .and_then(|rows| write_rows(a.out.as_deref(), &rows))
        }
        Cmd::BenchRiccati(a) => {
            pin_current_thread();
            let b = RiccatiBench {
                horizon: a.horizon,
                nx: a.nx,
                nu: a.nu,
                ncs: a.nc,
                flips: a.flip_count.map_or(Flips::Fraction(a.flip), Flips::Count),
                reps: a.reps,
                seed: a.seed,
            };
            bench::bench_riccati(&b)
                .map_err(Failure::from)
                .and_then(|rows| write_rows(a.out.as_deref(), &rows))
        }
        Cmd::Gen(g) => run_gen(g),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
