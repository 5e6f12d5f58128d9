//! `surplusect`: intersection statistics of Lagrangians in `CP^n`,
//! volume bounds, a clean loop of `RP^2`s and concurrent normals.

// negated comparisons are the NaN-rejecting form
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod body;
mod output;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;
use surplusect_core::bounds::{table1, BoundsRow};
use surplusect_core::clean_loop::{intersection_structure_report, CleanLoopParam, MEMBERSHIP_TOL, MIN_STRUCTURE_SAMPLES};
use surplusect_core::crofton::{
    chi_square_consistency, distribution_report, exact_law_n2, run_clifford_trials_with, DistributionReport,
    TrialOptions,
};
use surplusect_core::exec::with_threads;
use surplusect_core::intersection::{count_clifford, CountMethod, CountResult, DEFAULT_STARTS_PER_DIM};
use surplusect_core::normals::{caustic_grid, count_normals_2d, count_normals_3d, NormalCount, QueryPoint};
use surplusect_core::{Error, Execution, RngState, UnitaryMatrix};

#[derive(Parser, Debug)]
#[command(name = "surplusect", version, about = "Intersection counts, volume bounds and concurrent normals")]
struct Cli {
    /// Worker threads (all cores when unset).
    #[arg(long, global = true, env = "SURPLUSECT_THREADS")]
    threads: Option<usize>,

    /// Write to this file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Closed-form volume bounds for the Clifford torus.
    Bounds {
        #[arg(long, default_value_t = 6, value_parser = clap::value_parser!(u32).range(1..=12))]
        n_max: u32,
        #[arg(long, value_enum, default_value_t = TableFormat::Json)]
        format: TableFormat,
    },
    /// Monte Carlo law of #(T^n ∩ g RP^n) over Haar-random g.
    Crofton {
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..=4))]
        n: u32,
        #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..))]
        samples: u64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Newton starts per unknown for the multistart counter.
        #[arg(long, default_value_t = DEFAULT_STARTS_PER_DIM as u64, value_parser = clap::value_parser!(u64).range(100..=100_000))]
        starts_per_dim: u64,
        #[arg(long, value_enum, default_value_t = TableFormat::Json)]
        format: TableFormat,
    },
    /// Count T^n ∩ g RP^n for one unitary matrix (JSON nested [re, im] pairs).
    Count {
        matrix_file: PathBuf,
        #[arg(long, value_enum, default_value_t = Method::Auto)]
        method: Method,
        #[arg(long, default_value_t = DEFAULT_STARTS_PER_DIM as u64, value_parser = clap::value_parser!(u64).range(100..=100_000))]
        starts_per_dim: u64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Concurrent normals of a convex body through a point, or over a grid.
    Normals {
        /// ellipse:a,b | ellipsoid:r1,..,rn | ball:dim,r | trig2d:c0,a1,b1,a2,b2,...
        #[arg(long)]
        body: String,
        /// Query point x,y[,z].
        #[arg(long, allow_hyphen_values = true, conflicts_with_all = ["grid", "bbox"])]
        q: Option<String>,
        /// Grid resolution per axis.
        #[arg(long, requires = "bbox", value_parser = clap::value_parser!(u64).range(2..=10_000))]
        grid: Option<u64>,
        /// x0,y0,x1,y1
        #[arg(long, allow_hyphen_values = true, requires = "grid")]
        bbox: Option<String>,
        /// Grid output format.
        #[arg(long, value_enum, default_value_t = GridFormat::Csv)]
        format: GridFormat,
    },
    /// Sampled check of how two planes of the clean loop intersect.
    Cleanloop {
        #[arg(long, allow_hyphen_values = true)]
        t1: f64,
        #[arg(long, allow_hyphen_values = true)]
        t2: f64,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = MEMBERSHIP_TOL)]
        tol: f64,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum TableFormat {
    Json,
    Csv,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum GridFormat {
    Csv,
    Pgm,
    Json,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Method {
    Auto,
    Pencil,
    Multistart,
}

const EXIT_USAGE: u8 = 2;
const EXIT_INPUT: u8 = 3;
const EXIT_DEGENERATE: u8 = 4;
const EXIT_STRUCTURE: u8 = 5;

#[derive(Debug)]
enum Failure {
    Usage(String),
    Input(String),
    Degenerate(String),
    Structure(String),
    Io(std::io::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Input(_) => EXIT_INPUT,
            Failure::Degenerate(_) => EXIT_DEGENERATE,
            Failure::Structure(_) => EXIT_STRUCTURE,
            Failure::Io(_) => 1,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "usage error: {m}"),
            Failure::Input(m) => write!(f, "invalid input: {m}"),
            Failure::Degenerate(m) => write!(f, "degenerate geometry: {m}"),
            Failure::Structure(m) => write!(f, "structure check failed: {m}"),
            Failure::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::Degenerate(_)
            | Error::BudgetExceeded(_)
            | Error::ParityViolation { .. }
            | Error::MeshTooCoarse(_) => Failure::Degenerate(msg),
            Error::StructureViolation(_) => Failure::Structure(msg),
            _ => Failure::Input(msg),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = cli.threads;
    if threads == Some(0) {
        eprintln!("usage error: --threads must be at least 1");
        return ExitCode::from(EXIT_USAGE);
    }
    match with_threads(threads, || run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("surplusect: {f}");
            ExitCode::from(f.code())
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let out = cli.out.as_deref();
    match cli.command {
        Command::Bounds { n_max, format } => cmd_bounds(n_max, format, out),
        Command::Crofton { n, samples, seed, starts_per_dim, format } => {
            cmd_crofton(n as usize, samples, seed, starts_per_dim as usize, format, out)
        }
        Command::Count { matrix_file, method, starts_per_dim, seed } => {
            cmd_count(&matrix_file, method, starts_per_dim as usize, seed, out)
        }
        Command::Normals { body, q, grid, bbox, format } => cmd_normals(&body, q.as_deref(), grid, bbox.as_deref(), format, out),
        Command::Cleanloop { t1, t2, samples, seed, tol } => cmd_cleanloop(t1, t2, samples, seed, tol, out),
    }
}

fn cmd_bounds(n_max: u32, format: TableFormat, out: Option<&Path>) -> Result<(), Failure> {
    let rows: Vec<BoundsRow> = table1(n_max);
    let text = match format {
        TableFormat::Json => output::to_json(&rows)?,
        TableFormat::Csv => {
            let mut s = format!("{}\n", BoundsRow::CSV_HEADER);
            for r in &rows {
                s.push_str(&r.csv_line());
                s.push('\n');
            }
            s
        }
    };
    Ok(output::emit(out, &text)?)
}

#[derive(Serialize)]
struct CroftonOutput {
    #[serde(flatten)]
    report: DistributionReport,
    /// Pearson p-value against the exact law, when one is known.
    chi_square_p_value: Option<f64>,
}

fn cmd_crofton(
    n: usize,
    samples: u64,
    seed: u64,
    starts_per_dim: usize,
    format: TableFormat,
    out: Option<&Path>,
) -> Result<(), Failure> {
    let options = TrialOptions { starts_per_dim, execution: Execution::Parallel };
    let tally = run_clifford_trials_with(n, samples, seed, options)?;
    let report = distribution_report(&tally)?;
    let text = match format {
        TableFormat::Json => {
            let chi_square_p_value = match n {
                2 => chi_square_consistency(&tally, &exact_law_n2()).ok(),
                _ => None,
            };
            output::to_json(&CroftonOutput { report, chi_square_p_value })?
        }
        TableFormat::Csv => {
            let mut s = String::from("count,occurrences,probability,wilson_lower,wilson_upper\n");
            for (count, p) in &report.probabilities {
                s.push_str(&format!(
                    "{count},{},{:.16e},{:.16e},{:.16e}\n",
                    report.histogram[count], p.estimate, p.lower, p.upper
                ));
            }
            s
        }
    };
    Ok(output::emit(out, &text)?)
}

fn read_matrix(path: &Path) -> Result<UnitaryMatrix, Failure> {
    let raw = fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    let rows: Vec<Vec<[f64; 2]>> =
        serde_json::from_str(&raw).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    let dim = rows.len();
    if dim == 0 || rows.iter().any(|r| r.len() != dim) {
        return Err(Failure::Input("matrix must be square and non-empty".into()));
    }
    let m = DMatrix::from_fn(dim, dim, |i, j| Complex64::new(rows[i][j][0], rows[i][j][1]));
    Ok(UnitaryMatrix::new(m)?)
}

#[derive(Serialize)]
struct CountOutput {
    n: usize,
    method: &'static str,
    #[serde(flatten)]
    result: CountResult,
    /// Multistart counts are not certified to be complete.
    multistart_caveat: bool,
}

fn cmd_count(path: &Path, method: Method, starts_per_dim: usize, seed: u64, out: Option<&Path>) -> Result<(), Failure> {
    let g = read_matrix(path)?;
    let n = g.dim() - 1;
    if n < 1 {
        return Err(Failure::Input("matrix must be at least 2 x 2".into()));
    }
    if method == Method::Pencil && n != 2 {
        return Err(Failure::Usage(format!("the pencil method needs a 3 x 3 matrix, got {0} x {0}", n + 1)));
    }
    let (core_method, used) = match method {
        Method::Pencil => (CountMethod::Pencil, "pencil"),
        Method::Multistart => (CountMethod::Multistart, "multistart"),
        Method::Auto if n == 2 => (CountMethod::Auto, "pencil"),
        Method::Auto => (CountMethod::Auto, "multistart"),
    };
    let result = count_clifford(&g, core_method, starts_per_dim, &RngState::new(seed, 0))?;
    if result.degenerate {
        return Err(Failure::Degenerate("intersection is not transverse".into()));
    }
    let text = output::to_json(&CountOutput { n, method: used, result, multistart_caveat: used == "multistart" })?;
    Ok(output::emit(out, &text)?)
}

#[derive(Serialize)]
struct NormalsOutput {
    q: Vec<f64>,
    #[serde(flatten)]
    result: NormalCount,
}

fn cmd_normals(
    spec: &str,
    q: Option<&str>,
    grid: Option<u64>,
    bbox: Option<&str>,
    format: GridFormat,
    out: Option<&Path>,
) -> Result<(), Failure> {
    let h = body::parse_body(spec).map_err(Failure::Input)?;
    let text = match (q, grid, bbox) {
        (Some(q), None, None) => {
            let coords = body::parse_list(q).map_err(Failure::Usage)?;
            if coords.len() != h.dim() {
                return Err(Failure::Usage(format!("--q has {} coordinates, the body lives in R^{}", coords.len(), h.dim())));
            }
            let point = QueryPoint::new(coords.clone())?;
            let result = match h.dim() {
                2 => count_normals_2d(&h, &point)?,
                3 => count_normals_3d(&h, &point)?,
                d => return Err(Failure::Input(format!("normal counting supports R^2 and R^3, got R^{d}"))),
            };
            output::to_json(&NormalsOutput { q: coords, result })?
        }
        (None, Some(resolution), Some(bbox)) => {
            if h.dim() != 2 {
                return Err(Failure::Usage("grid mode needs a planar body".into()));
            }
            let bbox = body::parse_bbox(bbox).map_err(Failure::Usage)?;
            let grid = caustic_grid(&h, bbox, resolution as usize, Execution::Parallel)?;
            match format {
                GridFormat::Csv => grid.to_csv(),
                GridFormat::Pgm => grid.to_pgm(),
                GridFormat::Json => output::to_json(&grid)?,
            }
        }
        _ => return Err(Failure::Usage("give either --q or both --grid and --bbox".into())),
    };
    Ok(output::emit(out, &text)?)
}

fn cmd_cleanloop(t1: f64, t2: f64, samples: usize, seed: u64, tol: f64, out: Option<&Path>) -> Result<(), Failure> {
    let p1 = CleanLoopParam::new(t1).map_err(|e| Failure::Usage(e.to_string()))?;
    let p2 = CleanLoopParam::new(t2).map_err(|e| Failure::Usage(e.to_string()))?;
    if p1.same_as(p2, 1e-12) {
        return Err(Failure::Usage(format!("t1 = {t1} and t2 = {t2} name the same plane")));
    }
    if samples < MIN_STRUCTURE_SAMPLES {
        return Err(Failure::Usage(format!("--samples must be at least {MIN_STRUCTURE_SAMPLES}")));
    }
    if !(tol > 0.0) {
        return Err(Failure::Usage("--tol must be positive".into()));
    }
    let report = intersection_structure_report(p1, p2, samples, tol, seed, Execution::Parallel)?;
    output::emit(out, &output::to_json(&report)?)?;
    if report.passed {
        Ok(())
    } else {
        Err(Failure::Structure(format!(
            "{} generic sample(s) of the first plane lie on the second",
            report.generic_members
        )))
    }
}
