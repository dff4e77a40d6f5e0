use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sauna_core::{
    gen_training_workload, gen_workload, generate, generated_manifest, run_bench, sauna_relax, top_n_sequential,
    BenchConfig, BoxQuery, CategoricalPredicate, Dataset, Domain, GenKind, GenSpec, Histogram, Manifest, MetricSpec,
    Norm, RelaxMode, RelaxStats, RelaxationPlan, Strategy, Weighting, DEFAULT_ALPHA,
};

const USAGE: u8 = 1;
const RUNTIME: u8 = 2;

#[derive(Parser)]
#[command(name = "sauna", version, about = "Relax box queries until they return N answers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic dataset and its manifest
    Generate(GenerateArgs),
    /// Build an equi-depth histogram over a dataset
    BuildHist(BuildHistArgs),
    /// Relax one query and print answers, plan and statistics
    Relax(RelaxArgs),
    /// Print the N nearest tuples found by a full scan
    Topn(TopnArgs),
    /// Run a workload through several strategies and report tuple counts
    Bench(BenchArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_parser = parse_kind)]
    kind: GenKind,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    dims: usize,
    #[arg(long, default_value_t = 1.0)]
    zipf: f64,
    #[arg(long, default_value_t = 10)]
    bells: usize,
    /// Per-dimension variance of each bell; defaults to (width/20)^2
    #[arg(long)]
    variance: Option<f64>,
    /// Distinct values per attribute for array datasets
    #[arg(long, default_value_t = 1000)]
    values: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Bounds applied to every dimension, as `lo,hi`
    #[arg(long, default_value = "0,1000", value_parser = parse_bounds)]
    domain: (f64, f64),
    #[arg(long)]
    out: PathBuf,
    /// Defaults to the output path with a `.manifest` extension
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Args)]
struct DataArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// Schema and domain sidecar; looked up next to the dataset when omitted
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Args)]
struct BuildHistArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value_t = 256, value_parser = clap::value_parser!(u64).range(1..))]
    budget: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct MetricArgs {
    /// aspect, inverse or explicit:w1,w2,...
    #[arg(long, default_value = "aspect", value_parser = parse_weighting)]
    metric: Weighting,
    #[arg(long, default_value = "l2", value_parser = parse_norm)]
    norm: Norm,
    /// Score a categorical predicate softly, as `attribute=weight`
    #[arg(long = "categorical-weight", value_parser = parse_categorical_weight)]
    categorical_weights: Vec<(String, f64)>,
}

impl MetricArgs {
    fn spec(&self) -> MetricSpec {
        MetricSpec {
            categorical_weights: self.categorical_weights.clone(),
            ..MetricSpec::new(self.norm, self.metric.clone())
        }
    }
}

#[derive(Args)]
struct QueryArgs {
    /// Ranges in numeric-attribute order, as `lo:hi,lo:hi,...`
    #[arg(long, value_parser = parse_query)]
    query: BoxQuery,
    /// Categorical equality predicate, as `attribute=value`
    #[arg(long = "where", value_parser = parse_predicate)]
    predicates: Vec<CategoricalPredicate>,
}

impl QueryArgs {
    fn query(&self) -> BoxQuery {
        self.query.clone().with_predicates(self.predicates.clone())
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct HistArgs {
    /// Histogram file; built in memory from `--budget` when omitted
    #[arg(long)]
    hist: Option<PathBuf>,
    #[arg(long, default_value_t = 256, value_parser = clap::value_parser!(u64).range(1..))]
    budget: u64,
}

#[derive(Args)]
struct RelaxArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    hist: HistArgs,
    #[command(flatten)]
    query: QueryArgs,
    #[arg(long = "n-answers", default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    n_answers: u64,
    #[command(flatten)]
    metric: MetricArgs,
    #[arg(long, default_value = "box-preserving", value_parser = parse_mode)]
    mode: RelaxMode,
    #[arg(long, default_value_t = DEFAULT_ALPHA, value_parser = parse_alpha)]
    alpha: f64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TopnArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    query: QueryArgs,
    #[arg(long = "n-answers", default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    n_answers: u64,
    #[command(flatten)]
    metric: MetricArgs,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    hist: HistArgs,
    #[arg(long = "n-answers", default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    n_answers: u64,
    #[command(flatten)]
    metric: MetricArgs,
    #[arg(long, default_value = "box-preserving", value_parser = parse_mode)]
    mode: RelaxMode,
    /// Fixed alpha for sauna-dynamic; trained on a random workload when omitted
    #[arg(long, value_parser = parse_alpha)]
    alpha: Option<f64>,
    /// Comma-separated subset of sauna-dynamic, sauna-restarts, sauna-norestarts, seq, opt, manual
    #[arg(long, value_delimiter = ',', value_parser = parse_strategy,
          default_value = "sauna-dynamic,sauna-restarts,sauna-norestarts,seq,opt,manual")]
    strategies: Vec<Strategy>,
    /// Number of tiles in the evaluation workload
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    queries: u64,
    /// Number of randomly placed training queries
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    training: u64,
    /// Seed for the training workload
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Per-query rows; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-strategy aggregates as CSV
    #[arg(long)]
    aggregate_out: Option<PathBuf>,
}

fn parse_kind(s: &str) -> Result<GenKind, String> {
    s.parse().map_err(|e: sauna_core::Error| e.to_string())
}

fn parse_norm(s: &str) -> Result<Norm, String> {
    s.parse().map_err(|e: sauna_core::Error| e.to_string())
}

fn parse_weighting(s: &str) -> Result<Weighting, String> {
    s.parse().map_err(|e: sauna_core::Error| e.to_string())
}

fn parse_mode(s: &str) -> Result<RelaxMode, String> {
    s.parse().map_err(|e: sauna_core::Error| e.to_string())
}

fn parse_strategy(s: &str) -> Result<Strategy, String> {
    s.parse().map_err(|e: sauna_core::Error| e.to_string())
}

fn parse_query(s: &str) -> Result<BoxQuery, String> {
    s.parse().map_err(|e: sauna_core::Error| e.to_string())
}

fn parse_alpha(s: &str) -> Result<f64, String> {
    let a: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if (0.0..=1.0).contains(&a) {
        Ok(a)
    } else {
        Err(format!("alpha must lie in [0, 1], got {a}"))
    }
}

fn parse_bounds(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s.split_once(',').ok_or_else(|| format!("expected lo,hi, got `{s}`"))?;
    let num = |x: &str| x.trim().parse::<f64>().map_err(|_| format!("`{x}` is not a number"));
    let (lo, hi) = (num(lo)?, num(hi)?);
    if lo < hi {
        Ok((lo, hi))
    } else {
        Err(format!("expected lo < hi, got {lo},{hi}"))
    }
}

fn parse_predicate(s: &str) -> Result<CategoricalPredicate, String> {
    let (attribute, value) = s
        .split_once('=')
        .ok_or_else(|| format!("expected attribute=value, got `{s}`"))?;
    Ok(CategoricalPredicate {
        attribute: attribute.trim().to_owned(),
        value: value.trim().to_owned(),
    })
}

fn parse_categorical_weight(s: &str) -> Result<(String, f64), String> {
    let (attribute, weight) = s
        .split_once('=')
        .ok_or_else(|| format!("expected attribute=weight, got `{s}`"))?;
    let weight: f64 = weight.trim().parse().map_err(|_| format!("`{weight}` is not a number"))?;
    Ok((attribute.trim().to_owned(), weight))
}

enum Failure {
    Usage(String),
    Runtime(Box<dyn std::error::Error>),
}

impl<E: std::error::Error + 'static> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Runtime(Box::new(e))
    }
}

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

type Outcome = Result<(), Failure>;

/// Resolves the metric for `query`, treating mismatches with the data as
/// argument errors.
fn checked_metric(args: &MetricArgs, query: &BoxQuery, data: &Dataset) -> Result<sauna_core::Metric, Failure> {
    query.check_dims(data.dims()).map_err(usage)?;
    args.spec().resolve(query).map_err(usage)
}

fn default_manifest(path: &Path) -> PathBuf {
    path.with_extension("manifest")
}

fn load_dataset(args: &DataArgs) -> Result<Dataset, sauna_core::Error> {
    let manifest = match &args.manifest {
        Some(path) => Some(Manifest::load(path)?),
        None => {
            let guess = default_manifest(&args.dataset);
            guess.exists().then(|| Manifest::load(&guess)).transpose()?
        }
    };
    match manifest {
        Some(m) => Dataset::load_csv(&args.dataset, &m.schema()?, m.domain.clone()),
        None => Dataset::load_csv(&args.dataset, &Dataset::infer_schema(&args.dataset)?, None),
    }
}

fn load_histogram(args: &HistArgs, data: &Dataset) -> Result<Histogram, sauna_core::Error> {
    match &args.hist {
        Some(path) => Histogram::load(path),
        None => Histogram::build_equi_depth(data, args.budget as usize),
    }
}

fn output(path: &Option<PathBuf>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn cmd_generate(args: GenerateArgs) -> Outcome {
    let spec = GenSpec {
        kind: args.kind,
        n: args.n,
        dims: args.dims,
        zipf: args.zipf,
        bells: args.bells,
        variance: args.variance,
        values: args.values,
        seed: args.seed,
    };
    spec.validate().map_err(usage)?;
    let domain = Domain::uniform(args.dims, args.domain.0, args.domain.1).map_err(usage)?;
    let data = generate(&spec, &domain)?;
    data.save_csv(&args.out)?;
    let manifest_path = args.manifest.unwrap_or_else(|| default_manifest(&args.out));
    generated_manifest(&data, &spec).save(&manifest_path)?;
    println!(
        "wrote {} tuples to {} and manifest {}",
        data.len(),
        args.out.display(),
        manifest_path.display()
    );
    Ok(())
}

fn cmd_build_hist(args: BuildHistArgs) -> Outcome {
    let data = load_dataset(&args.data)?;
    let hist = Histogram::build_equi_depth(&data, args.budget as usize)?;
    hist.save(&args.out)?;
    println!("buckets={} bytes={}", hist.buckets().len(), hist.byte_estimate());
    Ok(())
}

fn cmd_relax(args: RelaxArgs) -> Outcome {
    let data = load_dataset(&args.data)?;
    let hist = load_histogram(&args.hist, &data)?;
    let query = args.query.query();
    let metric = checked_metric(&args.metric, &query, &data)?;
    let out = sauna_relax(&data, &hist, &query, args.n_answers as usize, &metric, args.alpha, args.mode)?;
    let mut w = output(&args.out)?;
    match args.format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut w, &out)?;
            writeln!(w)?;
        }
        Format::Csv => {
            write!(w, "{}", out.answers.to_csv())?;
            writeln!(w)?;
            writeln!(w, "{}", RelaxationPlan::CSV_HEADER)?;
            if let Some(plan) = &out.plan {
                writeln!(w, "{}", plan.csv_row())?;
            }
            writeln!(w)?;
            writeln!(w, "{}", RelaxStats::CSV_HEADER)?;
            writeln!(w, "{}", out.stats.csv_row())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn cmd_topn(args: TopnArgs) -> Outcome {
    let data = load_dataset(&args.data)?;
    let query = args.query.query();
    let metric = checked_metric(&args.metric, &query, &data)?;
    let answers = top_n_sequential(&data, &query, args.n_answers as usize, &metric)?;
    let mut w = output(&args.out)?;
    match args.format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut w, &answers)?;
            writeln!(w)?;
        }
        Format::Csv => write!(w, "{}", answers.to_csv())?,
    }
    w.flush()?;
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> Outcome {
    let data = load_dataset(&args.data)?;
    let hist = load_histogram(&args.hist, &data)?;
    let domain = data.domain();
    let workload = gen_workload(domain, args.queries as usize);
    let config = BenchConfig {
        n: args.n_answers as usize,
        metric: args.metric.spec(),
        mode: args.mode,
        strategies: args.strategies,
        alpha: args.alpha,
        training: gen_training_workload(domain, args.training as usize, args.seed),
        ..BenchConfig::default()
    };
    let report = run_bench(&data, &hist, &workload, &config)?;
    let mut w = output(&args.out)?;
    match args.format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut w, &report)?;
            writeln!(w)?;
        }
        Format::Csv => report.write_csv(&mut w)?,
    }
    w.flush()?;
    if let Some(path) = &args.aggregate_out {
        report.write_aggregate_csv(BufWriter::new(File::create(path)?))?;
    }
    let summary: Vec<String> = report
        .aggregates
        .iter()
        .map(|a| format!("{}={:.3}%", a.strategy, a.mean_tuples_retrieved_pct))
        .collect();
    eprintln!("alpha={:.3} {}", report.alpha, summary.join(" "));
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::BuildHist(a) => cmd_build_hist(a),
        Command::Relax(a) => cmd_relax(a),
        Command::Topn(a) => cmd_topn(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(USAGE)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(RUNTIME)
        }
    }
}
