//! Method-vs-method sweeps over the Harker–Pang family.
//!
//! Every `(m, seed)` pair gets one instance and one starting point, shared
//! by all algorithms in the sweep. Runs stop on `‖x‖ ≤ ε` (the instances
//! are solved by the origin). Failed or non-convergent runs are recorded,
//! never fatal.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::Vector;
use crate::problems::{harker_pang, starting_point, ProblemError, ProblemInstance};
use crate::solvers::{solve, solve_projection_method, Algorithm, SolverConfig, StopRule};

pub const CSV_HEADER: &str = "m,seed,algo,iterations,inner_trials,wall_seconds,converged";

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid benchmark spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error("cannot write report: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Table,
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "table" => Ok(OutputFormat::Table),
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(format!("unknown format {other:?} (expected table, csv or json)")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchSpec {
    pub sizes: Vec<usize>,
    pub l: usize,
    pub seeds: Vec<u64>,
    pub algos: Vec<Algorithm>,
    pub cfg: SolverConfig,
    /// Fixed stepsize for the projection method; defaults to `1/L`.
    pub pm_alpha: Option<f64>,
    pub output_format: OutputFormat,
    pub output_path: Option<PathBuf>,
    pub parallel: bool,
}

impl Default for BenchSpec {
    fn default() -> Self {
        Self {
            sizes: vec![5, 10, 20, 30, 40, 50, 60, 70, 80],
            l: 100,
            seeds: vec![0],
            algos: vec![Algorithm::Pc, Algorithm::Sem, Algorithm::Msem],
            cfg: SolverConfig {
                stop_rule: StopRule::NormX,
                check_invariants: false,
                ..SolverConfig::default()
            },
            pm_alpha: None,
            output_format: OutputFormat::Table,
            output_path: None,
            parallel: false,
        }
    }
}

impl BenchSpec {
    pub fn validate(&self) -> Result<(), BenchError> {
        if self.sizes.is_empty() || self.sizes.contains(&0) {
            return Err(BenchError::InvalidSpec("sizes must be nonempty and positive".into()));
        }
        if self.seeds.is_empty() {
            return Err(BenchError::InvalidSpec("seeds must be nonempty".into()));
        }
        if self.algos.is_empty() {
            return Err(BenchError::InvalidSpec("algos must be nonempty".into()));
        }
        if self.l == 0 {
            return Err(BenchError::InvalidSpec("l must be positive".into()));
        }
        if let Some(a) = self.pm_alpha {
            if !(a > 0.0) {
                return Err(BenchError::InvalidSpec("pm stepsize must be positive".into()));
            }
        }
        self.cfg
            .validate()
            .map_err(|e| BenchError::InvalidSpec(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub m: usize,
    pub seed: u64,
    pub algo: Algorithm,
    pub iterations: usize,
    pub inner_trials: u64,
    pub wall_seconds: f64,
    pub converged: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

fn run_cell(
    inst: &ProblemInstance,
    x0: &Vector,
    algo: Algorithm,
    spec: &BenchSpec,
    cfg: &SolverConfig,
) -> BenchRow {
    let m = inst.meta.m;
    let seed = inst.meta.seed;
    let result = match algo {
        Algorithm::Pm => {
            let alpha = spec.pm_alpha.unwrap_or(1.0 / inst.lipschitz);
            solve_projection_method(&inst.field, &inst.set, x0, alpha, cfg)
        }
        _ => solve(algo, &inst.field, &inst.set, x0, cfg),
    };
    match result {
        Ok(r) => BenchRow {
            m,
            seed,
            algo,
            iterations: r.iterations,
            inner_trials: r.inner_trials,
            wall_seconds: r.wall_seconds,
            converged: r.converged,
            error: None,
        },
        Err(e) => BenchRow {
            m,
            seed,
            algo,
            iterations: 0,
            inner_trials: 0,
            wall_seconds: 0.0,
            converged: false,
            error: Some(e.to_string()),
        },
    }
}

/// Runs every `(m, seed, algo)` cell and returns rows in that order.
pub fn run_bench(spec: &BenchSpec) -> Result<Vec<BenchRow>, BenchError> {
    spec.validate()?;
    let mut cfg = spec.cfg.clone();
    cfg.stop_rule = StopRule::NormX;

    let pairs: Vec<(usize, u64)> = spec
        .sizes
        .iter()
        .flat_map(|&m| spec.seeds.iter().map(move |&s| (m, s)))
        .collect();
    let instances = pairs
        .iter()
        .map(|&(m, seed)| Ok((harker_pang(m, spec.l, seed)?, starting_point(m, seed))))
        .collect::<Result<Vec<_>, ProblemError>>()?;

    let cells: Vec<(usize, Algorithm)> = (0..instances.len())
        .flat_map(|i| spec.algos.iter().map(move |&a| (i, a)))
        .collect();
    let run = |&(i, algo): &(usize, Algorithm)| {
        let (inst, x0) = &instances[i];
        let mut cell_cfg = cfg.clone();
        if cell_cfg.check_invariants {
            cell_cfg.reference_solution = inst.known_solution.clone();
        }
        run_cell(inst, x0, algo, spec, &cell_cfg)
    };
    Ok(if spec.parallel {
        cells.par_iter().map(run).collect()
    } else {
        cells.iter().map(run).collect()
    })
}

/// Median-aggregated statistics for one `(m, algo)` table cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub m: usize,
    pub algo: Algorithm,
    pub runs: usize,
    pub converged: usize,
    /// Medians over converged runs; `None` when most runs failed.
    pub iterations: Option<f64>,
    pub inner_trials: Option<f64>,
    pub wall_seconds: Option<f64>,
}

pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    })
}

pub fn summarize(rows: &[BenchRow]) -> Vec<CellSummary> {
    let mut groups: BTreeMap<(usize, Algorithm), Vec<&BenchRow>> = BTreeMap::new();
    for r in rows {
        groups.entry((r.m, r.algo)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((m, algo), rs)| {
            let ok: Vec<&BenchRow> = rs.iter().copied().filter(|r| r.converged).collect();
            let majority = 2 * ok.len() > rs.len();
            let med = |f: fn(&BenchRow) -> f64| {
                majority
                    .then(|| median(&mut ok.iter().map(|r| f(r)).collect::<Vec<_>>()))
                    .flatten()
            };
            CellSummary {
                m,
                algo,
                runs: rs.len(),
                converged: ok.len(),
                iterations: med(|r| r.iterations as f64),
                inner_trials: med(|r| r.inner_trials as f64),
                wall_seconds: med(|r| r.wall_seconds),
            }
        })
        .collect()
}

fn fmt_count(v: Option<f64>) -> String {
    match v {
        None => "--".into(),
        Some(x) if x.fract() == 0.0 => format!("{x:.0}"),
        Some(x) => format!("{x:.1}"),
    }
}

fn fmt_seconds(v: Option<f64>) -> String {
    v.map_or_else(|| "--".into(), |x| format!("{x:.4}"))
}

/// Medians per `(m, algo)` in the layout `m | Iter. | InIt. | CPU`, one
/// column per algorithm inside each group. `--` marks cells where most runs
/// did not converge.
pub fn render_table(rows: &[BenchRow]) -> String {
    render_table_with_note(rows, None)
}

fn render_table_with_note(rows: &[BenchRow], note: Option<&str>) -> String {
    let summaries = summarize(rows);
    let mut algos: Vec<Algorithm> = summaries.iter().map(|s| s.algo).collect();
    algos.sort();
    algos.dedup();
    let mut sizes: Vec<usize> = summaries.iter().map(|s| s.m).collect();
    sizes.dedup();
    let by_key: BTreeMap<(usize, Algorithm), &CellSummary> =
        summaries.iter().map(|s| ((s.m, s.algo), s)).collect();

    let mut header = vec!["m".to_string()];
    for metric in ["Iter.", "InIt.", "CPU(s)"] {
        header.extend(algos.iter().map(|a| format!("{metric} {a}")));
    }
    let mut body: Vec<Vec<String>> = Vec::new();
    for &m in &sizes {
        let mut line = vec![m.to_string()];
        let get = |a: &Algorithm| by_key.get(&(m, *a));
        line.extend(algos.iter().map(|a| fmt_count(get(a).and_then(|s| s.iterations))));
        line.extend(algos.iter().map(|a| fmt_count(get(a).and_then(|s| s.inner_trials))));
        line.extend(algos.iter().map(|a| fmt_seconds(get(a).and_then(|s| s.wall_seconds))));
        body.push(line);
    }
    let widths: Vec<usize> = (0..header.len())
        .map(|c| {
            body.iter()
                .map(|l| l[c].len())
                .chain([header[c].len()])
                .max()
                .unwrap_or(0)
        })
        .collect();
    let fmt_line = |cells: &[String]| {
        cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:>w$}"))
            .collect::<Vec<_>>()
            .join("  ")
    };
    let mut out = String::new();
    if let Some(n) = note {
        let _ = writeln!(out, "# {n}");
    }
    let _ = writeln!(out, "{}", fmt_line(&header));
    for line in &body {
        let _ = writeln!(out, "{}", fmt_line(line));
    }
    out
}

pub fn render_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.m, r.seed, r.algo, r.iterations, r.inner_trials, r.wall_seconds, r.converged
        );
    }
    out
}

pub fn render_json(rows: &[BenchRow]) -> String {
    serde_json::to_string_pretty(rows).expect("rows always serialize")
}

/// Renders rows in the requested format and writes them to the output path,
/// or to stdout when none is set.
pub fn write_report(spec: &BenchSpec, rows: &[BenchRow]) -> Result<(), BenchError> {
    let text = match spec.output_format {
        OutputFormat::Table => render_table_with_note(
            rows,
            spec.parallel
                .then_some("cells ran in parallel: CPU columns are unreliable"),
        ),
        OutputFormat::Csv => render_csv(rows),
        OutputFormat::Json => render_json(rows) + "\n",
    };
    match &spec.output_path {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}
