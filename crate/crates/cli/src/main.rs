//! `tpt`: command-line front end for the tester/learner/fooling pipelines.
//!
//! Exit codes: 0 success, 1 rejection verdict (the tester said no, which is
//! an outcome, not a failure), 2 error (with a JSON object on stderr).
//! Every seeded command prints one payload JSON line per seed and persists
//! a RunRecord under --out; identical (config, seed) reproduce payloads
//! bit-for-bit, which `--verify-repro` checks by running twice.

mod report;
mod run;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use tpt_core::distributions::sample_gaussian;
use tpt_core::fooling::{fooling_gap, lift_with_pdelta};
use tpt_core::io::{read_samples_csv, write_samples_csv};
use tpt_core::learner::{testable_learn, LearnConfig, LearnStatus};
use tpt_core::signapprox::impossibility_suite;
use tpt_core::tester::{tamm_accept, theory_parameters};
use tpt_core::{DiscreteDistribution, Error, LabeledSet, Polynomial, Result};

use run::{parse_index_list, read_input, resolve_workers, RunOutput, Runner};

#[derive(Parser)]
#[command(
    name = "tpt",
    version,
    about = "Moment-matching tester, L1 regression learner, and PTF fooling experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the moment-matching tester on a sample set
    Test(TestArgs),
    /// Tester-gated L1 polynomial regression on labeled samples
    Learn(LearnArgs),
    /// Fooling gap of a discrete distribution against a threshold function
    Fool(FoolArgs),
    /// Gaussian block lift of a sample set, with the companion polynomial
    Lift(LiftArgs),
    /// Sign-approximation error table over the built-in polynomial suite
    Signapprox(SignapproxArgs),
    /// Tester parameters the theory prescribes for given degree and accuracy
    Params(ParamsArgs),
    /// Aggregate RunRecord JSONs into per-command CSV tables
    Report(ReportArgs),
}

/// Flags shared by every seeded command. A JSON file passed via --config
/// overrides any of them (and the command's own flags) field by field.
#[derive(Args, Clone, Debug)]
struct CommonArgs {
    /// JSON config whose fields override the flags
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Seed for a single run
    #[arg(long)]
    seed: Option<u64>,
    /// Seed sweep: `0..19` (inclusive) or `3,7,11`; wins over --seed
    #[arg(long, value_name = "LIST")]
    seeds: Option<String>,
    /// Directory for RunRecord JSONs and data artifacts
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Run everything twice and fail unless payloads are byte-identical
    #[arg(long)]
    verify_repro: bool,
    /// Worker threads for seed sweeps (default: $TPT_WORKERS, else 1)
    #[arg(long)]
    workers: Option<usize>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err)
            if matches!(
                err.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            ) =>
        {
            print!("{err}");
            return ExitCode::SUCCESS;
        }
        Err(err) => {
            print_error_json("usage", &err.to_string());
            return ExitCode::from(2);
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(err) => {
            print_error_json(error_kind(&err), &err.to_string());
            ExitCode::from(2)
        }
    }
}

fn dispatch(command: Command) -> Result<ExitCode> {
    match command {
        Command::Test(args) => cmd_test(args),
        Command::Learn(args) => cmd_learn(args),
        Command::Fool(args) => cmd_fool(args),
        Command::Lift(args) => cmd_lift(args),
        Command::Signapprox(args) => cmd_signapprox(args),
        Command::Params(args) => cmd_params(args),
        Command::Report(args) => report::run(&report::ReportRequest {
            out_dir: args.out_dir.unwrap_or_else(|| args.dir.clone()),
            dir: args.dir,
        }),
    }
}

fn print_error_json(kind: &str, message: &str) {
    eprintln!(
        "{}",
        serde_json::json!({ "error": message, "kind": kind })
    );
}

fn error_kind(err: &Error) -> &'static str {
    match err {
        Error::DimensionMismatch { .. } => "dimension-mismatch",
        Error::SizeExceeded { .. } => "size-exceeded",
        Error::ZeroPolynomial => "zero-polynomial",
        Error::EmptyInput(_) => "empty-input",
        Error::InvalidParameter { .. } => "invalid-parameter",
        Error::Infeasible(_) => "infeasible",
        Error::SolverStalled { .. } => "solver-stalled",
        Error::Numerical(_) => "numerical",
        Error::Parse(_) => "parse",
        Error::Io(_) => "io",
        Error::Json(_) => "json",
    }
}

fn require<T>(value: Option<T>, name: &'static str) -> Result<T> {
    value.ok_or(Error::InvalidParameter {
        name,
        reason: "missing: pass the flag or set it in --config".to_string(),
    })
}

fn load_overrides<T: Default + serde::de::DeserializeOwned>(
    config: &Option<PathBuf>,
    inputs: &mut BTreeMap<String, String>,
) -> Result<T> {
    match config {
        None => Ok(T::default()),
        Some(path) => {
            let text = read_input(path, inputs)?;
            Ok(serde_json::from_str(&text)?)
        }
    }
}

/// Seed precedence: config seeds list, config seed, --seeds, --seed, 0.
fn resolve_seeds(
    common: &CommonArgs,
    config_seed: Option<u64>,
    config_seeds: Option<Vec<u64>>,
) -> Result<Vec<u64>> {
    if let Some(seeds) = config_seeds {
        if seeds.is_empty() {
            return Err(Error::EmptyInput("seeds"));
        }
        return Ok(seeds);
    }
    if let Some(seed) = config_seed {
        return Ok(vec![seed]);
    }
    if let Some(list) = &common.seeds {
        return parse_index_list(list);
    }
    Ok(vec![common.seed.unwrap_or(0)])
}

// ---------------------------------------------------------------- test

#[derive(Args, Debug)]
struct TestArgs {
    /// Sample CSV (`x1,...,xn[,label]`); any label column is ignored
    #[arg(long, value_name = "CSV", conflicts_with = "gen")]
    samples: Option<PathBuf>,
    /// Generate the sample set instead of reading one
    #[arg(long, value_enum, value_name = "KIND", requires = "n", requires = "m")]
    gen: Option<GenKind>,
    /// Dimension for --gen
    #[arg(long)]
    n: Option<usize>,
    /// Sample count for --gen
    #[arg(long)]
    m: Option<usize>,
    /// Moment degree to test up to
    #[arg(long)]
    k: Option<u32>,
    /// Moment tolerance
    #[arg(long)]
    eta: Option<f64>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Clone, Copy, Debug, Deserialize, Eq, PartialEq, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
enum GenKind {
    Gaussian,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct TestOverrides {
    samples: Option<PathBuf>,
    gen: Option<GenKind>,
    n: Option<usize>,
    m: Option<usize>,
    k: Option<u32>,
    eta: Option<f64>,
    seed: Option<u64>,
    seeds: Option<Vec<u64>>,
    out: Option<PathBuf>,
    workers: Option<usize>,
}

#[derive(Debug, Serialize)]
struct TestConfig {
    samples: Option<String>,
    gen: Option<GenKind>,
    n: Option<usize>,
    m: Option<usize>,
    k: u32,
    eta: f64,
}

fn cmd_test(args: TestArgs) -> Result<ExitCode> {
    let mut inputs = BTreeMap::new();
    let ov: TestOverrides = load_overrides(&args.common.config, &mut inputs)?;
    let k = require(ov.k.or(args.k), "k")?;
    let eta = require(ov.eta.or(args.eta), "eta")?;
    let samples_path = ov.samples.or(args.samples);
    let gen = ov.gen.or(args.gen);
    let n = ov.n.or(args.n);
    let m = ov.m.or(args.m);

    enum Source {
        File(Vec<Vec<f64>>),
        Gen { n: usize, m: usize },
    }
    let source = match (&samples_path, gen) {
        (Some(path), None) => {
            let text = read_input(path, &mut inputs)?;
            Source::File(read_samples_csv(&text)?.points)
        }
        (None, Some(GenKind::Gaussian)) => Source::Gen {
            n: require(n, "n")?,
            m: require(m, "m")?,
        },
        (Some(_), Some(_)) => {
            return Err(Error::invalid("samples", "give --samples or --gen, not both"))
        }
        (None, None) => return Err(Error::invalid("samples", "need --samples or --gen")),
    };

    let config = serde_json::to_value(TestConfig {
        samples: samples_path.map(|p| p.display().to_string()),
        gen,
        n,
        m,
        k,
        eta,
    })?;
    let runner = Runner {
        command: "test",
        config,
        inputs,
        seeds: resolve_seeds(&args.common, ov.seed, ov.seeds)?,
        out_dir: Some(ov.out.or(args.common.out).unwrap_or_else(|| ".".into())),
        verify_repro: args.common.verify_repro,
        workers: resolve_workers(args.common.workers, ov.workers),
    };
    runner.execute(|seed| {
        let generated;
        let points = match &source {
            Source::File(points) => points,
            Source::Gen { n, m } => {
                generated = sample_gaussian(*n, *m, seed);
                &generated
            }
        };
        let verdict = tamm_accept(points, k, eta)?;
        RunOutput::new(&verdict, !verdict.accepted)
    })
}

// ---------------------------------------------------------------- learn

#[derive(Args, Debug)]
struct LearnArgs {
    /// Labeled sample CSV (`x1,...,xn,label`, labels +-1)
    #[arg(long, value_name = "CSV")]
    data: Option<PathBuf>,
    /// Degree of the target concept class
    #[arg(long)]
    d: Option<u32>,
    /// Tester/regression degree (>= d)
    #[arg(long)]
    k: Option<u32>,
    /// Tester tolerance
    #[arg(long)]
    eta: Option<f64>,
    /// Accuracy parameter recorded with the outcome
    #[arg(long)]
    epsilon: Option<f64>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct LearnOverrides {
    data: Option<PathBuf>,
    d: Option<u32>,
    k: Option<u32>,
    eta: Option<f64>,
    epsilon: Option<f64>,
    seed: Option<u64>,
    seeds: Option<Vec<u64>>,
    out: Option<PathBuf>,
    workers: Option<usize>,
}

#[derive(Debug, Serialize)]
struct LearnCliConfig {
    data: String,
    d: u32,
    k: u32,
    eta: f64,
    epsilon: f64,
}

fn cmd_learn(args: LearnArgs) -> Result<ExitCode> {
    let mut inputs = BTreeMap::new();
    let ov: LearnOverrides = load_overrides(&args.common.config, &mut inputs)?;
    let data_path = require(ov.data.or(args.data), "data")?;
    let d = require(ov.d.or(args.d), "d")?;
    let k = require(ov.k.or(args.k), "k")?;
    let eta = require(ov.eta.or(args.eta), "eta")?;
    let epsilon = require(ov.epsilon.or(args.epsilon), "epsilon")?;

    let text = read_input(&data_path, &mut inputs)?;
    let table = read_samples_csv(&text)?;
    let labels = table
        .labels
        .ok_or(Error::invalid("data", "csv must have a label column"))?;
    let data = LabeledSet::new(table.points, labels)?;

    let config = serde_json::to_value(LearnCliConfig {
        data: data_path.display().to_string(),
        d,
        k,
        eta,
        epsilon,
    })?;
    let runner = Runner {
        command: "learn",
        config,
        inputs,
        seeds: resolve_seeds(&args.common, ov.seed, ov.seeds)?,
        out_dir: Some(ov.out.or(args.common.out).unwrap_or_else(|| ".".into())),
        verify_repro: args.common.verify_repro,
        workers: resolve_workers(args.common.workers, ov.workers),
    };
    runner.execute(|_seed| {
        let outcome = testable_learn(&data, d, epsilon, LearnConfig { k, eta })?;
        RunOutput::new(&outcome, outcome.status == LearnStatus::Rejected)
    })
}

// ---------------------------------------------------------------- fool

#[derive(Args, Debug)]
struct FoolArgs {
    /// Discrete distribution JSON ({"n", "points", "weights"})
    #[arg(long, value_name = "JSON")]
    dist: Option<PathBuf>,
    /// Threshold polynomial JSON ({"n", "terms"})
    #[arg(long, value_name = "JSON")]
    ptf: Option<PathBuf>,
    /// Monte Carlo sample count for the Gaussian side
    #[arg(long)]
    mc: Option<u64>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FoolOverrides {
    dist: Option<PathBuf>,
    ptf: Option<PathBuf>,
    mc: Option<u64>,
    seed: Option<u64>,
    seeds: Option<Vec<u64>>,
    out: Option<PathBuf>,
    workers: Option<usize>,
}

#[derive(Debug, Serialize)]
struct FoolConfig {
    dist: String,
    ptf: String,
    mc: u64,
}

fn cmd_fool(args: FoolArgs) -> Result<ExitCode> {
    let mut inputs = BTreeMap::new();
    let ov: FoolOverrides = load_overrides(&args.common.config, &mut inputs)?;
    let dist_path = require(ov.dist.or(args.dist), "dist")?;
    let ptf_path = require(ov.ptf.or(args.ptf), "ptf")?;
    let mc = require(ov.mc.or(args.mc), "mc")?;

    let dist: DiscreteDistribution = serde_json::from_str(&read_input(&dist_path, &mut inputs)?)?;
    let p: Polynomial = serde_json::from_str(&read_input(&ptf_path, &mut inputs)?)?;
    let ptf_id = ptf_path
        .file_stem()
        .map(|stem| stem.to_string_lossy().into_owned());

    let config = serde_json::to_value(FoolConfig {
        dist: dist_path.display().to_string(),
        ptf: ptf_path.display().to_string(),
        mc,
    })?;
    let runner = Runner {
        command: "fool",
        config,
        inputs,
        seeds: resolve_seeds(&args.common, ov.seed, ov.seeds)?,
        out_dir: Some(ov.out.or(args.common.out).unwrap_or_else(|| ".".into())),
        verify_repro: args.common.verify_repro,
        workers: resolve_workers(args.common.workers, ov.workers),
    };
    runner.execute(|seed| {
        let mut report = fooling_gap(&p, &dist, mc, seed)?;
        if let Some(id) = &ptf_id {
            report.ptf_id = id.clone();
        }
        RunOutput::new(&report, false)
    })
}

// ---------------------------------------------------------------- lift

#[derive(Args, Debug)]
struct LiftArgs {
    /// Sample CSV; a label column, if present, is carried through unchanged
    #[arg(long, value_name = "CSV")]
    data: Option<PathBuf>,
    /// Replicas per coordinate (block size)
    #[arg(long = "N", value_name = "N")]
    block_size: Option<usize>,
    /// Polynomial JSON to lift alongside the points
    #[arg(long, value_name = "JSON")]
    p: Option<PathBuf>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct LiftOverrides {
    data: Option<PathBuf>,
    #[serde(rename = "N")]
    block_size: Option<usize>,
    p: Option<PathBuf>,
    seed: Option<u64>,
    seeds: Option<Vec<u64>>,
    out: Option<PathBuf>,
    workers: Option<usize>,
}

#[derive(Debug, Serialize)]
struct LiftConfig {
    data: String,
    #[serde(rename = "N")]
    block_size: usize,
    p: String,
}

fn cmd_lift(args: LiftArgs) -> Result<ExitCode> {
    let mut inputs = BTreeMap::new();
    let ov: LiftOverrides = load_overrides(&args.common.config, &mut inputs)?;
    let data_path = require(ov.data.or(args.data), "data")?;
    let block_size = require(ov.block_size.or(args.block_size), "N")?;
    let p_path = require(ov.p.or(args.p), "p")?;

    let table = read_samples_csv(&read_input(&data_path, &mut inputs)?)?;
    let p: Polynomial = serde_json::from_str(&read_input(&p_path, &mut inputs)?)?;

    let config = serde_json::to_value(LiftConfig {
        data: data_path.display().to_string(),
        block_size,
        p: p_path.display().to_string(),
    })?;
    let runner = Runner {
        command: "lift",
        config,
        inputs,
        seeds: resolve_seeds(&args.common, ov.seed, ov.seeds)?,
        out_dir: Some(ov.out.or(args.common.out).unwrap_or_else(|| ".".into())),
        verify_repro: args.common.verify_repro,
        workers: resolve_workers(args.common.workers, ov.workers),
    };
    runner.execute(|seed| {
        let lift = lift_with_pdelta(&table.points, &p, block_size, seed)?;
        let csv = write_samples_csv(&lift.lifted_points, table.labels.as_deref())?;
        let csv_name = format!("lift-{seed}.csv");
        let payload = serde_json::json!({
            "block_size": lift.block_size,
            "rows": lift.lifted_points.len(),
            "input_dimension": table.points[0].len(),
            "lifted_dimension": lift.lifted_points[0].len(),
            "p_delta": lift.p_delta,
            "lifted_csv": csv_name,
            "lifted_sha256": run::sha256_hex(csv.as_bytes()),
        });
        Ok(RunOutput {
            payload,
            rejected: false,
            extra_files: vec![(csv_name, csv)],
        })
    })
}

// ---------------------------------------------------------------- signapprox

#[derive(Args, Debug)]
struct SignapproxArgs {
    /// Which polynomial suite to run (only `default` exists)
    #[arg(long, default_value = "default")]
    suite: String,
    /// Fit degrees: `1..25` (inclusive) or `1,5,9`
    #[arg(long, value_name = "LIST")]
    degrees: Option<String>,
    /// Integration half-range in x
    #[arg(long)]
    range: Option<f64>,
    /// Quadrature grid size (the residual check re-solves at twice this)
    #[arg(long)]
    nodes: Option<usize>,
    /// Output CSV path; the RunRecord lands next to it
    #[arg(long, value_name = "CSV", default_value = "table.csv")]
    out: PathBuf,
    /// JSON config whose fields override the flags
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Seed recorded with the run (the computation is deterministic)
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Run everything twice and fail unless payloads are byte-identical
    #[arg(long)]
    verify_repro: bool,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SignapproxOverrides {
    suite: Option<String>,
    degrees: Option<Vec<u32>>,
    range: Option<f64>,
    nodes: Option<usize>,
    out: Option<PathBuf>,
    seed: Option<u64>,
}

#[derive(Debug, Serialize)]
struct SignapproxConfig {
    suite: String,
    degrees: Vec<u32>,
    range: f64,
    nodes: usize,
    out: String,
}

fn cmd_signapprox(args: SignapproxArgs) -> Result<ExitCode> {
    let mut inputs = BTreeMap::new();
    let ov: SignapproxOverrides = load_overrides(&args.config, &mut inputs)?;
    let suite = ov.suite.unwrap_or(args.suite);
    if suite != "default" {
        return Err(Error::invalid("suite", "the only built-in suite is `default`"));
    }
    let degrees: Vec<u32> = match ov.degrees {
        Some(list) => list,
        None => parse_index_list(args.degrees.as_deref().unwrap_or("1..25"))?
            .into_iter()
            .map(|d| u32::try_from(d).map_err(|_| Error::invalid("degrees", "degree too large")))
            .collect::<Result<_>>()?,
    };
    let range = ov.range.or(args.range).unwrap_or(12.0);
    let nodes = ov.nodes.or(args.nodes).unwrap_or(4096);
    let csv_path = ov.out.unwrap_or(args.out);
    let seed = ov.seed.unwrap_or(args.seed);

    let csv_name = csv_path
        .file_name()
        .ok_or(Error::invalid("out", "not a file path"))?
        .to_string_lossy()
        .into_owned();
    let out_dir = match csv_path.parent() {
        Some(parent) if parent.as_os_str().is_empty() => PathBuf::from("."),
        Some(parent) => parent.to_path_buf(),
        None => PathBuf::from("."),
    };

    let config = serde_json::to_value(SignapproxConfig {
        suite,
        degrees: degrees.clone(),
        range,
        nodes,
        out: csv_path.display().to_string(),
    })?;
    let runner = Runner {
        command: "signapprox",
        config,
        inputs,
        seeds: vec![seed],
        out_dir: Some(out_dir),
        verify_repro: args.verify_repro,
        workers: 1,
    };
    runner.execute(|_seed| {
        let rows = impossibility_suite(&degrees, range, nodes)?;
        let mut csv = String::from("p_id,degree,error,grid_residual,grid_nodes,range\n");
        for row in &rows {
            csv.push_str(&format!(
                "{},{},{},{},{},{}\n",
                row.p_id,
                row.degree,
                tpt_core::io::format_float(row.error),
                tpt_core::io::format_float(row.grid_residual),
                row.grid_nodes,
                tpt_core::io::format_float(row.range),
            ));
        }
        Ok(RunOutput {
            payload: serde_json::to_value(&rows)?,
            rejected: false,
            extra_files: vec![(csv_name.clone(), csv)],
        })
    })
}

// ---------------------------------------------------------------- params

#[derive(Args, Debug)]
struct ParamsArgs {
    /// Concept-class degree
    #[arg(long)]
    d: Option<u32>,
    /// Target accuracy in (0, 1)
    #[arg(long)]
    epsilon: Option<f64>,
    /// Ambient dimension
    #[arg(long, default_value_t = 1)]
    n: usize,
    /// Multiplier on the tester degree k
    #[arg(long, default_value_t = 1.0)]
    c1: f64,
    /// Multiplier in the tolerance exponent
    #[arg(long, default_value_t = 1.0)]
    c2: f64,
    /// JSON config whose fields override the flags
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Seed recorded with the run (the computation is deterministic)
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory for the RunRecord (none written unless given)
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Run everything twice and fail unless payloads are byte-identical
    #[arg(long)]
    verify_repro: bool,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamsOverrides {
    d: Option<u32>,
    epsilon: Option<f64>,
    n: Option<usize>,
    c1: Option<f64>,
    c2: Option<f64>,
    seed: Option<u64>,
    out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct ParamsConfig {
    d: u32,
    epsilon: f64,
    n: usize,
    c1: f64,
    c2: f64,
}

fn cmd_params(args: ParamsArgs) -> Result<ExitCode> {
    let mut inputs = BTreeMap::new();
    let ov: ParamsOverrides = load_overrides(&args.config, &mut inputs)?;
    let d = require(ov.d.or(args.d), "d")?;
    let epsilon = require(ov.epsilon.or(args.epsilon), "epsilon")?;
    let n = ov.n.unwrap_or(args.n);
    let c1 = ov.c1.unwrap_or(args.c1);
    let c2 = ov.c2.unwrap_or(args.c2);

    let config = serde_json::to_value(ParamsConfig { d, epsilon, n, c1, c2 })?;
    let runner = Runner {
        command: "params",
        config,
        inputs,
        seeds: vec![ov.seed.unwrap_or(args.seed)],
        out_dir: ov.out.or(args.out),
        verify_repro: args.verify_repro,
        workers: 1,
    };
    runner.execute(|_seed| {
        let params = theory_parameters(d, epsilon, n, c1, c2)?;
        RunOutput::new(&params, false)
    })
}

// ---------------------------------------------------------------- report

#[derive(Args, Debug)]
struct ReportArgs {
    /// Directory of RunRecord JSONs
    #[arg(long, value_name = "DIR")]
    dir: PathBuf,
    /// Where the aggregated CSVs go (default: the record directory)
    #[arg(long, value_name = "DIR")]
    out_dir: Option<PathBuf>,
}
