//! `lexistab` command-line front end.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on data errors. Every
//! diagnostic goes to stderr with a machine-parsable `error:<code>:` prefix.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use lexistab::family::{self, MetricsError, StabilityConfig, SynonymPolicy};
use lexistab::lexicon::{self, IngestError, Normalization};
use lexistab::phylo::{self, TreeError};
use lexistab::rank::{self, RankError, DEFAULT_BIN_WIDTH};
use lexistab::sim::{self, SimConfig, SimError};

pub mod tables;

use tables::Precision;

#[derive(Error, Debug)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Rank(#[from] RankError),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("{0}")]
    Format(String),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Io { .. } => "io",
            CliError::Ingest(_) => "ingest",
            CliError::Metrics(_) => "metrics",
            CliError::Rank(_) => "rank",
            CliError::Tree(_) => "tree",
            CliError::Sim(_) => "simulate",
            CliError::Format(_) => "format",
            CliError::Usage(_) => "usage",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            _ => 2,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "lexistab", version, about = "Word stability and language distances from Swadesh-style lists")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Per-meaning stability of a lexicon TSV
    Stability(StabilityArgs),
    /// Language distance matrix of a lexicon TSV
    Distances(DistancesArgs),
    /// Rank curve, linear fit and histogram of a stability table
    Rank(RankArgs),
    /// Compare the stability tables of two families
    Compare(CompareArgs),
    /// UPGMA tree (Newick) from a distance matrix
    Tree(TreeArgs),
    /// Simulate a family with known replacement rates
    Simulate(SimulateArgs),
    /// Report dimensions and missing data of a lexicon TSV
    Validate(ValidateArgs),
}

#[derive(Args, Debug)]
pub struct LexiconArgs {
    /// Lexicon TSV
    #[arg(short, long)]
    pub input: PathBuf,
    #[arg(long, default_value = "first", value_parser = parse_policy)]
    pub synonyms: SynonymPolicy,
    /// Keep diacritics instead of folding them away
    #[arg(long)]
    pub keep_diacritics: bool,
    /// Worker threads for the pairwise loops
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub threads: Option<u32>,
}

#[derive(Args, Debug)]
pub struct StabilityArgs {
    #[command(flatten)]
    pub lexicon: LexiconArgs,
    /// Output CSV (stdout when omitted)
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    /// Minimum defined language pairs for a stability value
    #[arg(long, default_value_t = 1)]
    pub min_pairs: usize,
    #[arg(long)]
    pub full_precision: bool,
}

#[derive(Args, Debug)]
pub struct DistancesArgs {
    #[command(flatten)]
    pub lexicon: LexiconArgs,
    /// Output matrix CSV (stdout when omitted)
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    /// Replacement rate per lineage for the separation-time transform
    #[arg(long, requires = "time")]
    pub rate: Option<f64>,
    /// Separation-time matrix CSV; needs --rate
    #[arg(long, requires = "rate")]
    pub time: Option<PathBuf>,
    #[arg(long)]
    pub full_precision: bool,
}

#[derive(Args, Debug)]
pub struct RankArgs {
    /// Stability CSV
    #[arg(short, long)]
    pub input: PathBuf,
    /// Output directory for rank.csv, histogram.csv and fit.csv
    #[arg(short, long)]
    pub out: PathBuf,
    /// Inclusive rank range of the linear fit
    #[arg(long, default_value = "51:180", value_parser = parse_range)]
    pub fit_range: (usize, usize),
    #[arg(long, default_value_t = DEFAULT_BIN_WIDTH)]
    pub bin_width: f64,
    #[arg(long)]
    pub full_precision: bool,
}

#[derive(Args, Debug)]
pub struct CompareArgs {
    /// First stability CSV
    #[arg(long)]
    pub a: PathBuf,
    /// Second stability CSV
    #[arg(long)]
    pub b: PathBuf,
    /// Overlap CSV (printed after the summary when omitted)
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub full_precision: bool,
}

#[derive(Args, Debug)]
pub struct TreeArgs {
    /// Distance matrix CSV
    #[arg(short, long)]
    pub input: PathBuf,
    /// Newick output (stdout when omitted)
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Number of languages
    #[arg(long, default_value_t = 50)]
    pub n: usize,
    /// Number of meanings
    #[arg(long, default_value_t = 200)]
    pub m: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Per-character substitution rate
    #[arg(long, default_value_t = 0.1)]
    pub mu: f64,
    /// Replacement rates are log-uniform on [rate-min, rate-max]
    #[arg(long, default_value_t = 0.05)]
    pub rate_min: f64,
    #[arg(long, default_value_t = 5.0)]
    pub rate_max: f64,
    /// Output directory for dataset.tsv, truth.csv, tree.nwk, config.txt
    #[arg(short, long)]
    pub out: PathBuf,
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub threads: Option<u32>,
}

#[derive(Args, Debug)]
pub struct ValidateArgs {
    #[arg(short, long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub min_pairs: usize,
    #[arg(long)]
    pub keep_diacritics: bool,
}

fn parse_policy(s: &str) -> Result<SynonymPolicy, String> {
    s.parse()
}

fn parse_range(s: &str) -> Result<(usize, usize), String> {
    let (lo, hi) = s
        .split_once(':')
        .ok_or_else(|| format!("expected LO:HI, got {s:?}"))?;
    let lo = lo.trim().parse().map_err(|_| format!("bad LO in {s:?}"))?;
    let hi = hi.trim().parse().map_err(|_| format!("bad HI in {s:?}"))?;
    Ok((lo, hi))
}

fn precision(full: bool) -> Precision {
    if full {
        Precision::Full
    } else {
        Precision::Significant6
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })
}

fn emit(path: Option<&Path>, text: &str, stdout: &mut dyn Write) -> Result<(), CliError> {
    match path {
        Some(path) => write_file(path, text),
        None => stdout.write_all(text.as_bytes()).map_err(|source| CliError::Io {
            path: "<stdout>".into(),
            source,
        }),
    }
}

fn family_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn with_threads<T>(threads: Option<u32>, job: impl FnOnce() -> T + Send) -> Result<T, CliError>
where
    T: Send,
{
    match threads {
        None => Ok(job()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n as usize)
                .build()
                .map_err(|e| CliError::Usage(e.to_string()))?;
            Ok(pool.install(job))
        }
    }
}

fn load_lexicon(args: &LexiconArgs) -> Result<lexicon::FamilyDataset, CliError> {
    let pipeline = Normalization {
        fold_diacritics: !args.keep_diacritics,
    };
    let dataset = lexicon::parse_dataset(&read(&args.input)?, &pipeline)?;
    Ok(dataset.with_family(family_name(&args.input)))
}

fn stability_cmd(args: &StabilityArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let dataset = load_lexicon(&args.lexicon)?;
    let config = StabilityConfig {
        policy: args.lexicon.synonyms,
        min_pairs: args.min_pairs,
    };
    let report = with_threads(args.lexicon.threads, || family::stability_all(&dataset, &config))??;
    let text = tables::write_stability(&report, precision(args.full_precision))?;
    emit(args.out.as_deref(), &text, stdout)
}

fn distances_cmd(args: &DistancesArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let dataset = load_lexicon(&args.lexicon)?;
    let policy = args.lexicon.synonyms;
    let matrix = with_threads(args.lexicon.threads, || family::distance_matrix(&dataset, policy))??;
    let p = precision(args.full_precision);
    if let (Some(rate), Some(path)) = (args.rate, &args.time) {
        family::separation_time(0.0, rate)?;
        let times = matrix.map(|d| family::separation_time(d, rate).unwrap_or(f64::INFINITY));
        write_file(path, &tables::write_matrix(&times, p)?)?;
    }
    emit(args.out.as_deref(), &tables::write_matrix(&matrix, p)?, stdout)
}

fn rank_cmd(args: &RankArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let report = tables::read_stability(&read(&args.input)?, &family_name(&args.input))?;
    let curve = rank::rank_curve(&report)?;
    let (lo, hi) = args.fit_range;
    let fit = rank::linear_fit(&curve, lo, hi)?;
    let histogram = rank::stability_histogram(&report, args.bin_width)?;
    let p = precision(args.full_precision);
    create_dir(&args.out)?;
    write_file(&args.out.join("rank.csv"), &tables::write_rank(&curve, &fit, p)?)?;
    write_file(&args.out.join("histogram.csv"), &tables::write_histogram(&histogram, p)?)?;
    let summary = tables::write_fit(&fit, &curve, p)?;
    write_file(&args.out.join("fit.csv"), &summary)?;
    emit(None, &summary, stdout)
}

fn compare_cmd(args: &CompareArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    let a = tables::read_stability(&read(&args.a)?, &family_name(&args.a))?;
    let b = tables::read_stability(&read(&args.b)?, &family_name(&args.b))?;
    let matched = rank::match_reports(&a, &b);
    if !matched.only_first.is_empty() || !matched.only_second.is_empty() {
        let _ = writeln!(
            stderr,
            "note: {} labels only in {}, {} only in {}; excluded",
            matched.only_first.len(),
            a.family,
            matched.only_second.len(),
            b.family
        );
    }
    let r = rank::pearson(&matched.first, &matched.second)?;
    let curve = rank::overlap_ratio(&a, &b)?;
    let p = precision(args.full_precision);
    let summary = format!("pearson,{}\nshared,{}\n", p.format(r), curve.shared);
    emit(None, &summary, stdout)?;
    let table = tables::write_overlap(&curve, p)?;
    match &args.out {
        Some(path) => write_file(path, &table),
        None => emit(None, &table, stdout),
    }
}

fn tree_cmd(args: &TreeArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let matrix = tables::read_matrix(&read(&args.input)?)?;
    let tree = phylo::upgma(&matrix)?;
    emit(args.out.as_deref(), &(tree.to_newick() + "\n"), stdout)
}

fn simulate_cmd(args: &SimulateArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    if !(args.rate_min > 0.0 && args.rate_min <= args.rate_max) {
        return Err(CliError::Usage(format!(
            "need 0 < --rate-min <= --rate-max, got {} and {}",
            args.rate_min, args.rate_max
        )));
    }
    let config = SimConfig::log_uniform(args.n, args.m, (args.rate_min, args.rate_max), args.mu, args.seed);
    let (result, report) = with_threads(args.threads, || -> Result<_, CliError> {
        let result = sim::evolve(&config)?;
        let report = family::stability_all(&result.dataset, &StabilityConfig::default())?;
        Ok((result, report))
    })??;
    let score = sim::recovery_score(&result.rates, &report)?;
    create_dir(&args.out)?;
    write_file(&args.out.join("dataset.tsv"), &lexicon::write_dataset(&result.dataset)?)?;
    write_file(&args.out.join("truth.csv"), &result.truth_csv())?;
    write_file(&args.out.join("tree.nwk"), &(result.tree.to_newick() + "\n"))?;
    let describe = format!(
        "{}rate_distribution=log-uniform\nrate_min={}\nrate_max={}\n",
        config.describe(),
        args.rate_min,
        args.rate_max
    );
    write_file(&args.out.join("config.txt"), &describe)?;
    emit(None, &format!("recovery_score,{}\n", Precision::Full.format(score)), stdout)
}

fn validate_cmd(args: &ValidateArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let pipeline = Normalization {
        fold_diacritics: !args.keep_diacritics,
    };
    let dataset = lexicon::parse_dataset(&read(&args.input)?, &pipeline)?;
    let report = lexicon::validate(&dataset, args.min_pairs);
    let mut text = format!(
        "languages,{}\nmeanings,{}\nmissing,{}\n",
        report.n_languages, report.n_meanings, report.missing_total
    );
    for (language, meaning) in &report.missing_cells {
        text.push_str(&format!(
            "missing_cell,{},{}\n",
            dataset.languages()[*language],
            dataset.meanings()[*meaning]
        ));
    }
    for &meaning in &report.low_coverage {
        text.push_str(&format!(
            "low_coverage,{},{}\n",
            dataset.meanings()[meaning],
            report.pair_coverage[meaning]
        ));
    }
    emit(None, &text, stdout)
}

fn dispatch(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    match &cli.command {
        Command::Stability(args) => stability_cmd(args, stdout),
        Command::Distances(args) => distances_cmd(args, stdout),
        Command::Rank(args) => rank_cmd(args, stdout),
        Command::Compare(args) => compare_cmd(args, stdout, stderr),
        Command::Tree(args) => tree_cmd(args, stdout),
        Command::Simulate(args) => simulate_cmd(args, stdout),
        Command::Validate(args) => validate_cmd(args, stdout),
    }
}

/// Parses `args` (including the program name) and runs the subcommand,
/// returning the process exit code.
pub fn run_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{e}");
                return 0;
            }
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("").trim_start_matches("error: ");
            let _ = writeln!(stderr, "error:usage: {first}");
            return 1;
        }
    };
    match dispatch(&cli, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error:{}: {}", e.code(), e);
            e.exit_code()
        }
    }
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    let code = run_with(args, &mut stdout.lock(), &mut stderr.lock());
    let _ = std::io::stdout().flush();
    code
}
