//! Command-line front end for the Harker–Pang sweeps.
//!
//! ```text
//! msem-bench sweep --sizes 5,10,20 --seeds 0..20 --algos pc,sem,msem --format table
//! msem-bench instance --m 10 --l 100 --seed 3
//! ```

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use msem::bench::{run_bench, write_report, BenchSpec, OutputFormat};
use msem::problems::harker_pang;
use msem::solvers::{Algorithm, SolverConfig, StopRule};
use msem::stepsize::LineSearchParams;

#[derive(Parser)]
#[command(name = "msem-bench", version, about = "Variational inequality solver benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a method-vs-method sweep over generated instances.
    Sweep(SweepArgs),
    /// Print one generated instance as JSON.
    Instance {
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 100)]
        l: usize,
        #[arg(long)]
        seed: u64,
    },
}

#[derive(Args)]
struct SweepArgs {
    /// Problem sizes m, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "5,10,20,30,40,50,60,70,80")]
    sizes: Vec<usize>,
    /// Number of constraints.
    #[arg(long, default_value_t = 100)]
    l: usize,
    /// Seeds: a comma-separated list, or a half-open range `a..b`.
    #[arg(long, default_value = "0", value_parser = parse_seeds)]
    seeds: SeedList,
    #[arg(long, value_delimiter = ',', default_value = "pc,sem,msem")]
    algos: Vec<Algorithm>,
    #[arg(long, default_value_t = 7.55)]
    sigma: f64,
    #[arg(long, default_value_t = 0.5)]
    rho: f64,
    #[arg(long, default_value_t = 0.85)]
    mu: f64,
    #[arg(long, default_value_t = 1.99)]
    gamma: f64,
    #[arg(long, default_value_t = 0.005)]
    eps: f64,
    #[arg(long, default_value_t = 200_000)]
    max_iter: usize,
    /// Fixed stepsize for the projection method (default 1/L).
    #[arg(long)]
    pm_alpha: Option<f64>,
    #[arg(long, default_value = "table")]
    format: OutputFormat,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run cells on all cores; timings become unreliable.
    #[arg(long)]
    parallel: bool,
    /// Audit every iteration against the known bounds (slower).
    #[arg(long)]
    check_invariants: bool,
}

#[derive(Clone)]
struct SeedList(Vec<u64>);

fn parse_seeds(s: &str) -> Result<SeedList, String> {
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|e| format!("bad range start: {e}"))?;
        let b: u64 = b.trim().parse().map_err(|e| format!("bad range end: {e}"))?;
        if a >= b {
            return Err(format!("empty seed range {s}"));
        }
        return Ok(SeedList((a..b).collect()));
    }
    s.split(',')
        .map(|t| t.trim().parse::<u64>().map_err(|e| format!("bad seed {t:?}: {e}")))
        .collect::<Result<Vec<_>, _>>()
        .map(SeedList)
}

fn sweep(args: SweepArgs) -> Result<(), String> {
    let ls = LineSearchParams::new(args.sigma, args.rho, args.mu).map_err(|e| e.to_string())?;
    let spec = BenchSpec {
        sizes: args.sizes,
        l: args.l,
        seeds: args.seeds.0,
        algos: args.algos,
        cfg: SolverConfig {
            ls,
            gamma: args.gamma,
            eps: args.eps,
            max_iter: args.max_iter,
            stop_rule: StopRule::NormX,
            check_invariants: args.check_invariants,
            ..SolverConfig::default()
        },
        pm_alpha: args.pm_alpha,
        output_format: args.format,
        output_path: args.out,
        parallel: args.parallel,
    };
    if spec.parallel && spec.output_format != OutputFormat::Table {
        eprintln!("warning: cells ran in parallel; wall_seconds are unreliable");
    }
    let rows = run_bench(&spec).map_err(|e| e.to_string())?;
    for r in rows.iter().filter(|r| r.error.is_some()) {
        eprintln!(
            "m={} seed={} {}: {}",
            r.m,
            r.seed,
            r.algo,
            r.error.as_deref().unwrap_or_default()
        );
    }
    write_report(&spec, &rows).map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Sweep(args) => sweep(args),
        Command::Instance { m, l, seed } => harker_pang(m, l, seed)
            .map(|inst| println!("{}", inst.to_json()))
            .map_err(|e| e.to_string()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
