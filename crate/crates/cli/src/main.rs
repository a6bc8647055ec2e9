use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use vecdebias_core::comparison::{compare_subspaces, format_table, ComparisonConfig};
use vecdebias_core::metrics::report;
use vecdebias_core::presets;
use vecdebias_core::transforms::HdScope;
use vecdebias_core::{
    build_trace, DebiasJob, Error, JobSeeds, Method, MetricSets, PairedWordSet, Precision, Report, Snapshot,
    SubspaceMethod, TextFormat, WeatSets, WordSet,
};

#[derive(Debug, Parser)]
#[command(name = "vecdebias", version, about = "Debias word embeddings and score them")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Apply one debiasing method and write the modified embedding.
    Debias(DebiasArgs),
    /// Print WEAT and ECT for an embedding.
    Eval(EvalArgs),
    /// Compare subspace identification methods followed by linear projection.
    #[command(name = "table1")]
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Glove,
    Word2vec,
}

impl From<Format> for TextFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Glove => TextFormat::GloveText,
            Format::Word2vec => TextFormat::Word2vecText,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Lp,
    Hd,
    Inlp,
    Oscar,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SubspaceArg {
    Pca,
    PairedPca,
    TwoMeans,
    Classifier,
    Iterative,
}

impl From<SubspaceArg> for SubspaceMethod {
    fn from(s: SubspaceArg) -> Self {
        match s {
            SubspaceArg::Pca => SubspaceMethod::Pca,
            SubspaceArg::PairedPca => SubspaceMethod::PairedPca,
            SubspaceArg::TwoMeans => SubspaceMethod::TwoMeans,
            SubspaceArg::Classifier => SubspaceMethod::ClassifierNormal,
            SubspaceArg::Iterative => SubspaceMethod::Iterative,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ScopeArg {
    All,
    Sets,
}

#[derive(Debug, Args)]
struct Input {
    #[arg(long)]
    embedding: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Glove)]
    format: Format,
    /// Read only the first N rows.
    #[arg(long)]
    limit: Option<usize>,
}

/// Word lists are comma-separated or `@file` with one token per line.
#[derive(Debug, Args)]
struct DebiasArgs {
    #[command(flatten)]
    input: Input,
    #[arg(long, value_enum)]
    method: MethodArg,
    #[arg(long, value_enum)]
    subspace: Option<SubspaceArg>,
    #[arg(long)]
    seeds_f: Option<String>,
    #[arg(long)]
    seeds_m: Option<String>,
    /// Single seed set for PCA.
    #[arg(long)]
    seeds: Option<String>,
    /// Seed pairs `a:b` for paired PCA.
    #[arg(long)]
    pairs: Option<String>,
    /// Equalize pairs `a:b` (hard debiasing).
    #[arg(long)]
    equalize: Option<String>,
    /// Seed set of the second concept (OSCaR).
    #[arg(long)]
    second_seeds: Option<String>,
    #[arg(long, value_enum)]
    second_subspace: Option<SubspaceArg>,
    #[arg(long)]
    eval: Option<String>,
    /// Words left untouched by linear projection.
    #[arg(long)]
    exclude: Option<String>,
    #[arg(long, value_enum)]
    scope: Option<ScopeArg>,
    #[arg(long)]
    label: Option<String>,
    #[arg(long)]
    out: PathBuf,
    /// Output format; defaults to the input format.
    #[arg(long, value_enum)]
    out_format: Option<Format>,
    /// `fixed6` (six decimals) or `round-trip` (exact).
    #[arg(long, default_value = "fixed6")]
    precision: Precision,
    /// Write the step trace as JSON.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Print a before/after WEAT and ECT report as JSON.
    #[arg(long)]
    metrics: bool,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[command(flatten)]
    input: Input,
    #[arg(long)]
    weat_x: Option<String>,
    #[arg(long)]
    weat_y: Option<String>,
    #[arg(long)]
    weat_a: Option<String>,
    #[arg(long)]
    weat_b: Option<String>,
    #[arg(long)]
    ect_attrs: Option<String>,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[command(flatten)]
    input: Input,
    /// Female given names (one per line).
    #[arg(long)]
    names_f: Option<PathBuf>,
    #[arg(long)]
    names_m: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    rounds: usize,
    #[arg(long)]
    json: bool,
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidJob(_) => Failure::Usage(format!("invalid job: {e}")),
            Error::Io(_) => Failure::Runtime(format!("io: {e}")),
            Error::Parse { .. } | Error::DimensionMismatch { .. } => Failure::Runtime(format!("parse: {e}")),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

type CliResult<T> = Result<T, Failure>;

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure::Runtime(format!("io: {}: {e}", path.display()))
}

fn read_list_source(source: &str) -> CliResult<Vec<String>> {
    let items: Vec<String> = match source.strip_prefix('@') {
        Some(path) => fs::read_to_string(path)
            .map_err(|e| io_failure(Path::new(path), e))?
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(str::to_string)
            .collect(),
        None => source
            .split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(str::to_string)
            .collect(),
    };
    Ok(items)
}

fn word_set(label: &str, source: &str) -> CliResult<WordSet> {
    WordSet::new(label, read_list_source(source)?).map_err(|e| Failure::Usage(format!("--{label}: {e}")))
}

fn pairs(label: &str, source: &str) -> CliResult<PairedWordSet> {
    let mut out = Vec::new();
    for item in read_list_source(source)? {
        match item.split_once(':') {
            Some((a, b)) if !a.is_empty() && !b.is_empty() => out.push((a.to_string(), b.to_string())),
            _ => return Err(Failure::Usage(format!("--{label}: expected `a:b`, got `{item}`"))),
        }
    }
    PairedWordSet::new(out).map_err(|e| Failure::Usage(format!("--{label}: {e}")))
}

fn opt_set(label: &str, source: &Option<String>) -> CliResult<Option<WordSet>> {
    source.as_deref().map(|s| word_set(label, s)).transpose()
}

fn load(input: &Input) -> CliResult<Snapshot> {
    let file = fs::File::open(&input.embedding).map_err(|e| io_failure(&input.embedding, e))?;
    Ok(Snapshot::load(
        std::io::BufReader::new(file),
        input.format.into(),
        input.limit,
    )?)
}

fn build_job(args: &DebiasArgs) -> CliResult<DebiasJob> {
    let method = match args.method {
        MethodArg::Lp => Method::Lp,
        MethodArg::Hd => Method::Hd,
        MethodArg::Inlp => Method::Inlp,
        MethodArg::Oscar => Method::Oscar,
    };
    if method == Method::Hd && args.equalize.is_none() {
        return Err(Failure::Usage("--method hd requires --equalize".into()));
    }
    if method == Method::Oscar && args.second_seeds.is_none() {
        return Err(Failure::Usage("--method oscar requires --second-seeds".into()));
    }
    let seeds = JobSeeds {
        f: opt_set("seeds-f", &args.seeds_f)?,
        m: opt_set("seeds-m", &args.seeds_m)?,
        pairs: args.pairs.as_deref().map(|p| pairs("pairs", p)).transpose()?,
        set: opt_set("seeds", &args.seeds)?,
    };
    let mut job = DebiasJob::new(method, seeds);
    job.subspace_method = args.subspace.map(Into::into);
    job.equalize = args.equalize.as_deref().map(|p| pairs("equalize", p)).transpose()?;
    if let Some(second) = &args.second_seeds {
        job.second_subspace_seeds = Some(JobSeeds::single(word_set("second-seeds", second)?));
    }
    job.second_subspace_method = args.second_subspace.map(Into::into);
    if let Some(eval) = opt_set("eval", &args.eval)? {
        job.evaluation = eval;
    }
    job.exclude = opt_set("exclude", &args.exclude)?;
    if let Some(scope) = args.scope {
        job.hd_scope = match scope {
            ScopeArg::All => HdScope::All,
            ScopeArg::Sets => HdScope::Sets,
        };
    }
    if let Some(label) = &args.label {
        job.label = label.clone();
    }
    job.validate()?;
    Ok(job)
}

#[derive(Serialize)]
struct BeforeAfter {
    before: Report,
    after: Report,
}

fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    fs::write(path, bytes).map_err(|e| io_failure(path, e))
}

fn debias(args: DebiasArgs) -> CliResult<()> {
    let job = build_job(&args)?;
    let snapshot = load(&args.input)?;
    let (trace, out) = build_trace(&snapshot, &job)?;
    let out_format: TextFormat = args.out_format.unwrap_or(args.input.format).into();
    let bytes = out.transform.output.export_to_vec_with(out_format, args.precision);
    write_file(&args.out, &bytes)?;
    if let Some(path) = &args.trace {
        let json = serde_json::to_vec_pretty(&trace).map_err(|e| Failure::Runtime(e.to_string()))?;
        write_file(path, &json)?;
    }
    if args.metrics {
        let sets = presets::default_metric_sets();
        // score the file as written so `eval` on it reproduces these numbers
        let written = Snapshot::load(&bytes[..], out_format, None)?;
        let result = BeforeAfter {
            before: report(&snapshot, &sets)?,
            after: report(&written, &sets)?,
        };
        print_json(&result)?;
    }
    Ok(())
}

fn print_json<T: Serialize>(value: &T) -> CliResult<()> {
    let json = serde_json::to_string_pretty(value).map_err(|e| Failure::Runtime(e.to_string()))?;
    let mut stdout = std::io::stdout().lock();
    writeln!(stdout, "{json}").map_err(|e| Failure::Runtime(e.to_string()))
}

fn eval(args: EvalArgs) -> CliResult<()> {
    let defaults = presets::default_metric_sets();
    let pick = |label: &str, source: &Option<String>, default: WordSet| -> CliResult<WordSet> {
        Ok(opt_set(label, source)?.unwrap_or(default))
    };
    let weat = WeatSets::new(
        pick("weat-x", &args.weat_x, defaults.weat.x)?,
        pick("weat-y", &args.weat_y, defaults.weat.y)?,
        pick("weat-a", &args.weat_a, defaults.weat.a)?,
        pick("weat-b", &args.weat_b, defaults.weat.b)?,
    )
    .map_err(|e| Failure::Usage(e.to_string()))?;
    let sets = MetricSets {
        weat,
        ect_attributes: pick("ect-attrs", &args.ect_attrs, defaults.ect_attributes)?,
    };
    let snapshot = load(&args.input)?;
    print_json(&report(&snapshot, &sets)?)
}

fn compare(args: CompareArgs) -> CliResult<()> {
    let mut cfg = ComparisonConfig {
        rounds: args.rounds,
        ..ComparisonConfig::default()
    };
    if let Some(path) = &args.names_f {
        cfg.names_f = word_set("names-f", &format!("@{}", path.display()))?;
    }
    if let Some(path) = &args.names_m {
        cfg.names_m = word_set("names-m", &format!("@{}", path.display()))?;
    }
    let snapshot = load(&args.input)?;
    let rows = compare_subspaces(&snapshot, &cfg)?;
    if args.json {
        print_json(&rows)
    } else {
        print!("{}", format_table(&rows));
        Ok(())
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Debias(a) => debias(a),
        Command::Eval(a) => eval(a),
        Command::Compare(a) => compare(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
