//! `gptensor` command line: rank estimation, decomposition, low-rank
//! approximation, the pencil baseline, and the perturbation benchmark.
//!
//! Exit codes: 0 on success, 1 on usage or input-file problems, 2 on
//! numerical failure.

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use gptensor::bench::{run_bench, BenchConfig, BenchMethod};
use gptensor::error::Error;
use gptensor::{
    approximate, approximate_reshaped, decompose_reshaped, decompose_with_diagnostics,
    estimate_rank, gevd_decompose, read_tensor, write_factors, ApproxOptions, CPDecomposition,
    DenseTensor,
};

#[derive(Parser)]
#[command(
    name = "gptensor",
    version,
    about = "CP decompositions and low-rank approximations of dense complex tensors"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, Default, ValueEnum)]
enum MethodArg {
    #[default]
    Gp,
    Gevd,
    Both,
}

impl From<MethodArg> for BenchMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Gp => BenchMethod::Gp,
            MethodArg::Gevd => BenchMethod::Gevd,
            MethodArg::Both => BenchMethod::Both,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the rank from the most square flattening spectrum.
    Rank {
        file: PathBuf,
        /// Relative singular-value threshold.
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long)]
        json: bool,
    },
    /// Exact rank-r decomposition.
    Decompose {
        file: PathBuf,
        #[arg(long)]
        rank: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Decompose through an order-3 reshape (order above 3 only).
        #[arg(long)]
        reshape: bool,
        /// Write the factors to this path (cpfactors-v1).
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Rank-r approximation, optionally refined by ALS.
    Approximate {
        file: PathBuf,
        #[arg(long)]
        rank: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Refine the estimate with alternating least squares.
        #[arg(long)]
        refine: bool,
        /// ALS sweep cap.
        #[arg(long = "max-iter", default_value_t = 500)]
        max_iter: usize,
        #[arg(long)]
        reshape: bool,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Slice-pencil (generalized eigenvalue) decomposition of a cubic tensor.
    Gevd {
        file: PathBuf,
        #[arg(long)]
        rank: usize,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Seeded perturbation benchmark over a noise grid.
    Bench {
        #[arg(long, value_delimiter = ',', required = true)]
        dims: Vec<usize>,
        #[arg(long)]
        rank: usize,
        /// Noise norms, comma separated; omit for exact (noise-free) runs.
        #[arg(long, value_delimiter = ',')]
        eps: Vec<f64>,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        reshape: bool,
        #[arg(long, value_enum, default_value_t)]
        method: MethodArg,
        #[arg(long = "max-iter", default_value_t = 500)]
        max_iter: usize,
        /// Write the full JSON report to this path.
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
}

/// Input-side problems are usage errors (exit 1); algorithmic failures are
/// numerical (exit 2).
fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io { .. }
        | Error::Malformed { .. }
        | Error::WrongFormatTag { .. }
        | Error::DataLengthMismatch { .. }
        | Error::InvalidTolerance { .. } => 1,
        _ => 2,
    }
}

fn fail(err: Error) -> i32 {
    eprintln!("error: {err}");
    exit_code(&err)
}

fn relative(resid: f64, t: &DenseTensor) -> f64 {
    let norm = t.hs_norm();
    if norm > 0.0 {
        resid / norm
    } else {
        resid
    }
}

fn reconstruction_residual(t: &DenseTensor, cp: &CPDecomposition) -> f64 {
    t.sub(&cp.expand()).map(|d| d.hs_norm()).unwrap_or(f64::NAN)
}

fn write_output(path: &Option<PathBuf>, cp: &CPDecomposition) -> Result<(), Error> {
    if let Some(path) = path {
        write_factors(path, cp)?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), i32> {
    match cli.command {
        Command::Rank { file, tol, json } => {
            let t = read_tensor(&file).map_err(fail)?;
            let rank = estimate_rank(&t, tol).map_err(fail)?;
            if json {
                println!(
                    "{}",
                    json!({"rank": rank, "tol": tol, "dims": t.dims()})
                );
            } else {
                println!("{rank}");
            }
            Ok(())
        }
        Command::Decompose {
            file,
            rank,
            seed,
            reshape,
            output,
            json,
        } => {
            let t = read_tensor(&file).map_err(fail)?;
            let (cp, diagnostics) = if reshape {
                (decompose_reshaped(&t, rank, seed).map_err(fail)?, None)
            } else {
                let (cp, d) = decompose_with_diagnostics(&t, rank, seed).map_err(fail)?;
                (cp, Some(d))
            };
            let resid = reconstruction_residual(&t, &cp);
            write_output(&output, &cp).map_err(fail)?;
            if json {
                println!(
                    "{}",
                    json!({
                        "dims": t.dims(),
                        "rank": rank,
                        "seed": seed,
                        "reshape": reshape,
                        "resid": resid,
                        "relative_resid": relative(resid, &t),
                        "diagnostics": diagnostics,
                        "output": output.as_ref().map(|p| p.display().to_string()),
                    })
                );
            } else {
                println!(
                    "rank-{rank} decomposition of {:?}: residual {resid:.3e} ({:.3e} relative)",
                    t.dims(),
                    relative(resid, &t)
                );
                if let Some(path) = &output {
                    println!("factors written to {}", path.display());
                }
            }
            Ok(())
        }
        Command::Approximate {
            file,
            rank,
            seed,
            refine,
            max_iter,
            reshape,
            output,
            json,
        } => {
            let t = read_tensor(&file).map_err(fail)?;
            let opts = ApproxOptions {
                seed,
                refine,
                max_als_iters: max_iter,
                ..ApproxOptions::default()
            };
            let res = if reshape {
                approximate_reshaped(&t, rank, &opts).map_err(fail)?
            } else {
                approximate(&t, rank, &opts).map_err(fail)?
            };
            let best = res.x_opt.as_ref().unwrap_or(&res.x_gp);
            write_output(&output, best).map_err(fail)?;
            if json {
                println!(
                    "{}",
                    json!({
                        "dims": t.dims(),
                        "rank": rank,
                        "seed": seed,
                        "reshape": reshape,
                        "refined": res.x_opt.is_some(),
                        "resid_gp": res.resid_gp,
                        "resid_opt": res.resid_opt,
                        "relative_resid_gp": relative(res.resid_gp, &t),
                        "relative_resid_opt": res.resid_opt.map(|r| relative(r, &t)),
                        "als_iters": res.als_iters,
                        "als_ridge_solves": res.als_ridge_solves,
                        "t_gp_ms": res.t_gp_ms,
                        "t_opt_ms": res.t_opt_ms,
                        "diagnostics": res.diagnostics,
                        "output": output.as_ref().map(|p| p.display().to_string()),
                    })
                );
            } else {
                println!(
                    "rank-{rank} approximation of {:?}: residual {:.4e}",
                    t.dims(),
                    res.resid_gp
                );
                if let Some(ropt) = res.resid_opt {
                    println!("refined residual {ropt:.4e} after {} sweeps", res.als_iters);
                }
                if let Some(path) = &output {
                    println!("factors written to {}", path.display());
                }
            }
            Ok(())
        }
        Command::Gevd {
            file,
            rank,
            output,
            json,
        } => {
            let t = read_tensor(&file).map_err(fail)?;
            let cp = gevd_decompose(&t, rank).map_err(fail)?;
            let resid = reconstruction_residual(&t, &cp);
            write_output(&output, &cp).map_err(fail)?;
            if json {
                println!(
                    "{}",
                    json!({
                        "dims": t.dims(),
                        "rank": rank,
                        "resid": resid,
                        "relative_resid": relative(resid, &t),
                        "output": output.as_ref().map(|p| p.display().to_string()),
                    })
                );
            } else {
                println!(
                    "pencil rank-{rank} decomposition of {:?}: residual {resid:.3e}",
                    t.dims()
                );
                if let Some(path) = &output {
                    println!("factors written to {}", path.display());
                }
            }
            Ok(())
        }
        Command::Bench {
            dims,
            rank,
            eps,
            trials,
            seed,
            reshape,
            method,
            max_iter,
            output,
            json,
        } => {
            let config = BenchConfig {
                dims,
                rank,
                epsilons: eps,
                trials,
                seed,
                reshape,
                method: method.into(),
                max_als_iters: max_iter,
            };
            let report = run_bench(&config).map_err(fail)?;
            if let Some(path) = &output {
                std::fs::write(path, report.to_json()).map_err(|source| {
                    fail(Error::Io {
                        path: path.display().to_string(),
                        source,
                    })
                })?;
            }
            if json {
                println!("{}", report.to_json());
            } else {
                print!("{}", report.render_table());
                if let Some(path) = &output {
                    println!("report written to {}", path.display());
                }
            }
            Ok(())
        }
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // clap's own exit uses code 2 for usage problems; this tool
            // reserves 2 for numerical failures.
            let _ = err.print();
            let code = if err.use_stderr() { 1 } else { 0 };
            std::process::exit(code);
        }
    };
    if let Err(code) = run(cli) {
        std::process::exit(code);
    }
}
