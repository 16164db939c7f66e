mod input;

use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use empcp::montecarlo::{default_m, emit_table, format_f64, run_experiment, ExperimentSpec};
use empcp::presets::{emit_table_results, run_table, table_cells, Scale};
use empcp::rng::trial_seed;
use empcp::{
    discretize, estimate_changepoint, profile, run_tests, Combiner, DirectionSet, Error, Family,
    Method, Sample, StatFamily, TestReport,
};

const EXIT_PARSE: u8 = 2;
const EXIT_USAGE: u8 = 3;

#[derive(Parser)]
#[command(name = "empcp", version, about = "Nonparametric tests for a change point in multivariate data")]
struct Cli {
    /// Worker threads (default: all available cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Test for a change point in a CSV data file.
    Test(TestArgs),
    /// Estimate the change-point location.
    Estimate(EstimateArgs),
    /// Run a Monte Carlo experiment described by a key = value file.
    Simulate(SimulateArgs),
    /// Print the direction set used for half-space statistics.
    Discretize(DiscretizeArgs),
    /// Run one of the predefined experiment grids (1-5).
    Table(TableArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum StatArg {
    S,
    T,
    U,
    V,
}

impl From<StatArg> for Family {
    fn from(s: StatArg) -> Self {
        match s {
            StatArg::S => Family::S,
            StatArg::T => Family::T,
            StatArg::U => Family::U,
            StatArg::V => Family::V,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum CombineArg {
    Max,
    Mean,
}

impl From<CombineArg> for Combiner {
    fn from(c: CombineArg) -> Self {
        match c {
            CombineArg::Max => Combiner::Max,
            CombineArg::Mean => Combiner::Mean,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Hat,
    Check,
    Sim,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Hat => Method::Hat,
            MethodArg::Check => Method::Check,
            MethodArg::Sim => Method::Sim,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Output {
    Json,
    Csv,
}

#[derive(Args)]
struct DataArgs {
    /// CSV file: one observation per row, comma-separated, optional header.
    #[arg(long, short)]
    input: PathBuf,

    /// Directions for half-space statistics (default: 8 if d = 2, 32 if d >= 3).
    #[arg(long)]
    m: Option<usize>,
}

#[derive(Args)]
struct TestArgs {
    #[command(flatten)]
    data: DataArgs,

    /// Statistic families; several may be given separated by commas.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "s")]
    stat: Vec<StatArg>,

    /// Combiners over k; several may be given separated by commas.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "max")]
    combine: Vec<CombineArg>,

    #[arg(long, value_enum, default_value = "check")]
    method: MethodArg,

    /// Number of bootstrap or simulation replicates N.
    #[arg(long = "n-replicates", short = 'N', default_value_t = 1000)]
    n_replicates: usize,

    #[arg(long, default_value_t = 0.05)]
    alpha: f64,

    #[arg(long)]
    seed: u64,

    /// Use one multiplier matrix for all requested statistics.
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    share_multipliers: bool,

    #[arg(long, value_enum, default_value = "json")]
    output: Output,
}

#[derive(Args)]
struct EstimateArgs {
    #[command(flatten)]
    data: DataArgs,

    #[arg(long, value_enum, default_value = "s")]
    stat: StatArg,

    /// Also print the per-k statistic profile.
    #[arg(long)]
    profile: bool,

    #[arg(long, value_enum, default_value = "json")]
    output: Output,
}

#[derive(Args)]
struct SimulateArgs {
    /// Experiment file (key = value lines).
    spec: PathBuf,

    /// Overrides the file's `seed`.
    #[arg(long)]
    seed: Option<u64>,

    /// Report wall time in the `seconds` column (otherwise 0, keeping output reproducible).
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct DiscretizeArgs {
    #[arg(long)]
    d: usize,

    /// Number of directions (default: 8 if d = 2, 32 if d >= 3).
    #[arg(long)]
    m: Option<usize>,
}

#[derive(Args)]
struct TableArgs {
    /// Table number, 1 to 5.
    id: u8,

    /// Full scale: R = N = 1000 (hours of computing).
    #[arg(long)]
    full: bool,

    /// Trials per cell (default 100, or 1000 with --full).
    #[arg(long)]
    trials: Option<usize>,

    /// Replicates per trial (default 200, or 1000 with --full).
    #[arg(long)]
    replicates: Option<usize>,

    #[arg(long, default_value_t = 1)]
    seed: u64,

    #[arg(long)]
    timing: bool,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn parse(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_PARSE,
            message: message.into(),
        }
    }

    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Spec { .. }
            | Error::NonFinite { .. }
            | Error::Ragged { .. }
            | Error::Empty
            | Error::TooSmall { .. } => EXIT_PARSE,
            _ => EXIT_USAGE,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<input::ParseError> for Failure {
    fn from(e: input::ParseError) -> Self {
        Self::parse(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Self {
            code: 1,
            message: e.to_string(),
        }
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Self {
            code: 1,
            message: e.to_string(),
        }
    }
}

type CmdResult = Result<(), Failure>;

/// JSON/CSV record of one test.
#[derive(Serialize)]
struct TestRecord {
    statistic: String,
    family: String,
    combiner: String,
    method: String,
    n: usize,
    d: usize,
    m: usize,
    #[serde(rename = "N")]
    replicates: usize,
    seed: u64,
    observed: f64,
    p_value: f64,
    k_hat: usize,
    alpha: f64,
    reject: bool,
}

fn load(data: &DataArgs) -> Result<(Sample, usize), Failure> {
    let sample = input::read_path(&data.input)?;
    let d = sample.d();
    let m = data.m.unwrap_or_else(|| default_m(d));
    if m == 0 {
        return Err(Failure::usage("--m must be at least 1"));
    }
    Ok((sample, m))
}

fn directions(d: usize, m: usize) -> Result<DirectionSet, Failure> {
    Ok(discretize(d, m)?)
}

fn cmd_test(args: TestArgs) -> CmdResult {
    let (sample, m) = load(&args.data)?;
    let method = Method::from(args.method);
    if method == Method::Sim && sample.d() > 1 {
        return Err(Error::SimRequiresUnivariate { d: sample.d() }.into());
    }
    if args.n_replicates == 0 {
        return Err(Error::InvalidN.into());
    }
    if !(args.alpha > 0.0 && args.alpha < 1.0) {
        return Err(Failure::usage(format!("--alpha {} must lie in (0, 1)", args.alpha)));
    }
    let mut stats: Vec<StatFamily> = Vec::new();
    for s in &args.stat {
        for c in &args.combine {
            let st = StatFamily::new((*s).into(), (*c).into());
            if !stats.contains(&st) {
                stats.push(st);
            }
        }
    }
    let dirs = directions(sample.d(), m)?;
    let reports: Vec<TestReport> = if args.share_multipliers {
        run_tests(&sample, &stats, method, args.n_replicates, Some(&dirs), args.seed)?
    } else {
        stats
            .iter()
            .enumerate()
            .map(|(i, st)| {
                let seed = trial_seed(args.seed, i as u64);
                run_tests(&sample, &[*st], method, args.n_replicates, Some(&dirs), seed)
                    .map(|mut v| v.pop().expect("one report"))
            })
            .collect::<Result<_, _>>()?
    };
    let records: Vec<TestRecord> = reports
        .iter()
        .map(|r| TestRecord {
            statistic: r.stat.to_string(),
            family: r.stat.family.to_string(),
            combiner: r.stat.combiner.to_string(),
            method: r.method.to_string(),
            n: sample.n(),
            d: sample.d(),
            m: r.m,
            replicates: args.n_replicates,
            seed: r.seed,
            observed: r.observed,
            p_value: r.p_value,
            k_hat: r.k_hat,
            alpha: args.alpha,
            reject: r.p_value <= args.alpha,
        })
        .collect();
    let mut out = io::stdout().lock();
    match args.output {
        Output::Json => {
            if records.len() == 1 {
                serde_json::to_writer_pretty(&mut out, &records[0])
            } else {
                serde_json::to_writer_pretty(&mut out, &records)
            }
            .map_err(io::Error::from)?;
            writeln!(out)?;
        }
        Output::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record([
                "statistic", "family", "combiner", "method", "n", "d", "m", "N", "seed",
                "observed", "p_value", "k_hat", "alpha", "reject",
            ])?;
            for r in &records {
                w.write_record([
                    r.statistic.clone(),
                    r.family.clone(),
                    r.combiner.clone(),
                    r.method.clone(),
                    r.n.to_string(),
                    r.d.to_string(),
                    r.m.to_string(),
                    r.replicates.to_string(),
                    r.seed.to_string(),
                    format_f64(r.observed),
                    format_f64(r.p_value),
                    r.k_hat.to_string(),
                    format_f64(r.alpha),
                    r.reject.to_string(),
                ])?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct EstimateRecord {
    family: String,
    n: usize,
    d: usize,
    m: usize,
    k_hat: usize,
    max_value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    profile: Option<Vec<f64>>,
}

fn cmd_estimate(args: EstimateArgs) -> CmdResult {
    let (sample, m) = load(&args.data)?;
    let family = Family::from(args.stat);
    let dirs = directions(sample.d(), m)?;
    let p = profile(&sample, family, Some(&dirs))?;
    let k_hat = estimate_changepoint(&p);
    let mut out = io::stdout().lock();
    match args.output {
        Output::Json => {
            let record = EstimateRecord {
                family: family.to_string(),
                n: sample.n(),
                d: sample.d(),
                m: if family.uses_half_spaces() { dirs.m() } else { 0 },
                k_hat,
                max_value: p.at(k_hat),
                profile: args.profile.then(|| p.values().to_vec()),
            };
            serde_json::to_writer_pretty(&mut out, &record).map_err(io::Error::from)?;
            writeln!(out)?;
        }
        Output::Csv if args.profile => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(["k", "value", "is_estimate"])?;
            for (i, v) in p.values().iter().enumerate() {
                let k = i + 1;
                w.write_record([k.to_string(), format_f64(*v), (k == k_hat).to_string()])?;
            }
            w.flush()?;
        }
        Output::Csv => {
            writeln!(out, "k_hat\n{k_hat}")?;
        }
    }
    Ok(())
}

fn cmd_simulate(args: SimulateArgs) -> CmdResult {
    let text = std::fs::read_to_string(&args.spec)
        .map_err(|e| Failure::parse(format!("cannot read {}: {e}", args.spec.display())))?;
    let mut spec = ExperimentSpec::parse(&text)?;
    if let Some(seed) = args.seed {
        spec.scenario.seed = seed;
    }
    let mut result = run_experiment(&spec)?;
    if !args.timing {
        result = result.without_timing();
    }
    emit_table(&result, io::stdout().lock())?;
    Ok(())
}

fn cmd_discretize(args: DiscretizeArgs) -> CmdResult {
    let m = args.m.unwrap_or_else(|| default_m(args.d));
    let dirs = discretize(args.d, m)?;
    let mut w = csv::Writer::from_writer(io::stdout().lock());
    w.write_record((1..=args.d).map(|j| format!("a{j}")))?;
    for a in dirs.iter() {
        w.write_record(a.iter().map(|&x| format_f64(x)))?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_table(args: TableArgs) -> CmdResult {
    let base = if args.full {
        Scale::full(args.seed)
    } else {
        Scale::desk(args.seed)
    };
    let scale = Scale {
        trials: args.trials.unwrap_or(base.trials),
        replicates: args.replicates.unwrap_or(base.replicates),
        seed: args.seed,
    };
    let cells = table_cells(args.id, scale)?;
    let mut results = run_table(&cells)?;
    if !args.timing {
        for (_, r) in &mut results {
            *r = std::mem::take(r).without_timing();
        }
    }
    emit_table_results(&results, io::stdout().lock())?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("empcp: cannot configure {threads} worker threads: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    }
    let result = match cli.command {
        Command::Test(a) => cmd_test(a),
        Command::Estimate(a) => cmd_estimate(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Discretize(a) => cmd_discretize(a),
        Command::Table(a) => cmd_table(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("empcp: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
