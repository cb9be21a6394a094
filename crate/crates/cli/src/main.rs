//! `supnorm`: sup-norm confidence bounds, coverage experiments and checks.
//!
//! Every global flag can also be set through the environment with the
//! `SUPNORM_` prefix (`SUPNORM_SEED`, `SUPNORM_OUT`, `SUPNORM_THREADS`,
//! `SUPNORM_FORMAT`); flags win over the environment, which wins over
//! config files.

mod config;
mod manifest;
mod svg;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use supnorm_core::binomial::{clopper_pearson, empirical_bernstein_ci, thulin_endpoints, BinomialCi};
use supnorm_core::bounds::{BoundResult, BoundSpec, MChoice};
use supnorm_core::dist::{read_counts_csv, read_distribution_csv};
use supnorm_core::ingest::{load_frequency_csv, tokenize_corpus, TableMode};
use supnorm_core::montecarlo::{run_coverage, topk_experiment, CoverageReport};
use supnorm_core::theory::verify_all;

use config::Config;
use manifest::RunManifest;

/// Error with the process exit code it maps to: 2 for bad input or an
/// unmet precondition, 1 for anything else.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }

    pub fn runtime(message: impl Into<String>) -> Self {
        Self { code: 1, message: message.into() }
    }
}

impl From<supnorm_core::Error> for Failure {
    fn from(e: supnorm_core::Error) -> Self {
        use supnorm_core::Error as E;
        match e {
            E::InvalidArgument(_) | E::OutOfRange(_) | E::Parse { .. } | E::Validation(_) => Failure::usage(e.to_string()),
            E::Io(_) | E::Csv(_) | E::Json(_) => Failure::runtime(e.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "supnorm", version, about = "Simultaneous sup-norm confidence bounds for discrete distributions")]
struct Cli {
    /// Base seed; overrides any `seed` in a config file.
    #[arg(long, global = true, env = "SUPNORM_SEED")]
    seed: Option<u64>,

    /// Output directory for files and manifests.
    #[arg(long, global = true, env = "SUPNORM_OUT", default_value = "results")]
    out: PathBuf,

    /// Worker threads for Monte Carlo repetitions (default: available parallelism).
    #[arg(long, global = true, env = "SUPNORM_THREADS")]
    threads: Option<usize>,

    /// Output format; commands pick their own default when unset.
    #[arg(long, global = true, env = "SUPNORM_FORMAT", value_enum)]
    format: Option<Format>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate bounds on an observed count vector (`symbol,count` CSV).
    Bounds(BoundsArgs),
    /// Monte Carlo coverage sweep; writes a report, an SVG plot and a manifest.
    Coverage(ExperimentArgs),
    /// Coverage of the k symbols most frequent in each sample.
    Topk(ExperimentArgs),
    /// Clopper-Pearson, Thulin and empirical Bernstein intervals for y successes in n trials.
    BinomCi {
        y: u64,
        n: u64,
        #[arg(default_value_t = 0.05)]
        delta: f64,
    },
    /// Numerical checks of the supporting inequalities.
    VerifyTheory,
    /// Load a frequency table or tokenize a corpus and print the result.
    Ingest {
        path: PathBuf,
        /// counts, proportions or corpus.
        #[arg(long, default_value = "counts")]
        mode: String,
    },
}

#[derive(Debug, Args)]
struct BoundsArgs {
    counts: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    /// Comma-separated method names, or `all`.
    #[arg(long = "method", default_value = "all")]
    methods: String,
    /// Moment order: `auto` or an even integer.
    #[arg(long, default_value = "auto")]
    m: MChoice,
    /// Explicit δ₁ for the split methods (needs --delta2 too).
    #[arg(long, requires = "delta2")]
    delta1: Option<f64>,
    #[arg(long, requires = "delta1")]
    delta2: Option<f64>,
    /// True distribution (`symbol,probability` CSV) for the oracle methods;
    /// without it they are evaluated at the estimate.
    #[arg(long)]
    truth: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    /// Flat `key = value` config file.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in config: fig1, fig2, smoke or topk.
    #[arg(long)]
    preset: Option<String>,
    /// Override `reps`.
    #[arg(long)]
    reps: Option<usize>,
    /// Override `n` (comma-separated).
    #[arg(long)]
    n: Option<String>,
    /// Override `methods` (comma-separated or `all`).
    #[arg(long)]
    methods: Option<String>,
    /// Override `distributions`.
    #[arg(long)]
    distributions: Option<String>,
    /// Override `k`.
    #[arg(long)]
    k: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if threads == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Bounds(args) => cmd_bounds(cli, args),
        Command::Coverage(args) => cmd_experiment(cli, args, false),
        Command::Topk(args) => cmd_experiment(cli, args, true),
        Command::BinomCi { y, n, delta } => cmd_binom_ci(cli, *y, *n, *delta),
        Command::VerifyTheory => cmd_verify_theory(cli),
        Command::Ingest { path, mode } => cmd_ingest(cli, path, mode),
    }
}

fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String, Failure> {
    serde_json::to_string_pretty(value).map_err(|e| Failure::runtime(e.to_string()))
}

fn open(path: &Path) -> Result<std::fs::File, Failure> {
    std::fs::File::open(path).map_err(|e| Failure::runtime(format!("cannot open {}: {e}", path.display())))
}

fn cmd_bounds(cli: &Cli, args: &BoundsArgs) -> Result<(), Failure> {
    let counts = read_counts_csv(open(&args.counts)?).map_err(|e| Failure::usage(format!("{}: {e}", args.counts.display())))?;
    let phat = counts.mle();
    let truth = match &args.truth {
        Some(path) => {
            let d = read_distribution_csv(open(path)?).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
            if d.support_size() != phat.probs().len() {
                return Err(Failure::usage(format!(
                    "truth has {} symbols but the counts have {}",
                    d.support_size(),
                    phat.probs().len()
                )));
            }
            Some(d)
        }
        None => None,
    };
    let reference = truth.as_ref().map_or(phat.probs(), |d| d.probs());

    let mut results: Vec<BoundResult> = Vec::new();
    for method in config::parse_methods(&args.methods)? {
        let mut spec = BoundSpec::new(method, args.delta).with_m(args.m);
        if let (Some(d1), Some(d2)) = (args.delta1, args.delta2) {
            spec = spec.with_split(d1, d2);
        }
        let mut result = spec.evaluate(reference, &phat)?;
        if method.needs_truth() && truth.is_none() {
            result.components.insert("plug_in_truth".into(), 1.0);
        }
        results.push(result);
    }

    match cli.format.unwrap_or(Format::Json) {
        Format::Json => println!("{}", to_json(&results)?),
        Format::Csv => {
            println!("{}", BoundResult::CSV_HEADER.join(","));
            for r in &results {
                println!("{}", r.csv_record().join(","));
            }
        }
    }
    Ok(())
}

fn cmd_experiment(cli: &Cli, args: &ExperimentArgs, topk: bool) -> Result<(), Failure> {
    let (mut cfg, base_dir) = match (&args.config, &args.preset) {
        (Some(path), _) => (Config::load(path)?, path.parent().map(Path::to_path_buf).unwrap_or_default()),
        (None, Some(name)) => (Config::preset(name)?, PathBuf::from(".")),
        (None, None) => (Config::preset(if topk { "topk" } else { "smoke" })?, PathBuf::from(".")),
    };
    if let Some(reps) = args.reps {
        cfg.set("reps", reps.to_string());
    }
    if let Some(n) = &args.n {
        cfg.set("n", n.clone());
    }
    if let Some(m) = &args.methods {
        cfg.set("methods", m.clone());
    }
    if let Some(d) = &args.distributions {
        cfg.set("distributions", d.clone());
    }
    if let Some(k) = args.k {
        cfg.set("k", k.to_string());
    }
    if let Some(seed) = cli.seed {
        cfg.set("seed", seed.to_string());
    }
    if topk && !cfg.values.contains_key("k") {
        return Err(Failure::usage("top-k runs need `k` (config key or --k)"));
    }
    if !topk && cfg.values.contains_key("k") {
        return Err(Failure::usage("`k` is only meaningful for the topk command"));
    }

    let experiments = cfg.experiments(&base_dir)?;
    std::fs::create_dir_all(&cli.out).map_err(|e| Failure::runtime(format!("cannot create {}: {e}", cli.out.display())))?;
    let command = if topk { "topk" } else { "coverage" };
    let mut manifest = RunManifest::start(command, cfg.seed()?, cfg.values.clone(), cfg.hash());
    let format = cli.format.unwrap_or(Format::Csv);

    let outcome = (|| {
        for exp in &experiments {
            let report = if topk { topk_experiment(exp)? } else { run_coverage(exp)? };
            manifest.skipped_cells += report.cells.iter().filter(|c| c.skipped.is_some()).count();
            let stem = format!("{command}-{}", exp.label);
            emit_report(&mut manifest, &cli.out, &stem, &report, format)?;
            manifest.emit(&cli.out, &stem, "svg", svg::render(&report).as_bytes())?;
            eprintln!("{}: {} cells ({} skipped)", exp.label, report.cells.len(), report.cells.iter().filter(|c| c.skipped.is_some()).count());
        }
        Ok(())
    })();
    let path = manifest.finish(&cli.out, &outcome)?;
    println!("{}", path.display());
    outcome
}

fn emit_report(manifest: &mut RunManifest, dir: &Path, stem: &str, report: &CoverageReport, format: Format) -> Result<(), Failure> {
    match format {
        Format::Csv => {
            let mut buf = Vec::new();
            report.write_csv(&mut buf)?;
            manifest.emit(dir, stem, "csv", &buf)?;
        }
        Format::Json => {
            manifest.emit(dir, stem, "json", (report.to_json()? + "\n").as_bytes())?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct Interval {
    lower: f64,
    upper: f64,
    length: f64,
}

impl From<BinomialCi> for Interval {
    fn from(ci: BinomialCi) -> Self {
        Self { lower: ci.lower, upper: ci.upper, length: ci.length() }
    }
}

#[derive(Serialize)]
struct BinomCiOutput {
    y: u64,
    n: u64,
    delta: f64,
    clopper_pearson: Interval,
    /// `None` at `y ∈ {0, n}`, where the approximation is not defined.
    thulin: Option<Interval>,
    empirical_bernstein: Interval,
}

fn cmd_binom_ci(cli: &Cli, y: u64, n: u64, delta: f64) -> Result<(), Failure> {
    let out = BinomCiOutput {
        y,
        n,
        delta,
        clopper_pearson: clopper_pearson(y, n, delta)?.into(),
        thulin: if y == 0 || y >= n { None } else { Some(thulin_endpoints(y, n, delta)?.into()) },
        empirical_bernstein: empirical_bernstein_ci(y, n, delta)?.into(),
    };
    match cli.format.unwrap_or(Format::Json) {
        Format::Json => println!("{}", to_json(&out)?),
        Format::Csv => {
            println!("method,lower,upper,length");
            for (name, ci) in [
                ("clopper_pearson", Some(&out.clopper_pearson)),
                ("thulin", out.thulin.as_ref()),
                ("empirical_bernstein", Some(&out.empirical_bernstein)),
            ] {
                match ci {
                    Some(ci) => println!("{name},{:e},{:e},{:e}", ci.lower, ci.upper, ci.length),
                    None => println!("{name},,,"),
                }
            }
        }
    }
    Ok(())
}

fn cmd_verify_theory(cli: &Cli) -> Result<(), Failure> {
    let seed = cli.seed.unwrap_or(0);
    let mut cfg = Config::default();
    cfg.set("seed", seed.to_string());
    std::fs::create_dir_all(&cli.out).map_err(|e| Failure::runtime(format!("cannot create {}: {e}", cli.out.display())))?;
    let mut manifest = RunManifest::start("verify-theory", seed, cfg.values.clone(), cfg.hash());
    let mut json = String::new();
    let outcome = (|| {
        let report = verify_all(seed)?;
        json = to_json(&report)?;
        manifest.emit(&cli.out, "theory", "json", (json.clone() + "\n").as_bytes())?;
        for c in &report.checks {
            eprintln!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        }
        Ok(())
    })();
    manifest.finish(&cli.out, &outcome)?;
    outcome?;
    println!("{json}");
    Ok(())
}

fn cmd_ingest(cli: &Cli, path: &Path, mode: &str) -> Result<(), Failure> {
    let (table, value_name) = if mode.eq_ignore_ascii_case("corpus") {
        (tokenize_corpus(path)?, "count")
    } else {
        let mode: TableMode = mode.parse()?;
        let name = if mode == TableMode::Counts { "count" } else { "proportion" };
        (load_frequency_csv(path, mode)?, name)
    };
    match cli.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let stdout = std::io::stdout();
            table.write_csv(stdout.lock(), value_name)?;
        }
        Format::Json => println!("{}", table.to_json()?),
    }
    Ok(())
}
