use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ecastar_core::data_io::{self, generate_blobs};
use ecastar_core::harness::{
    self, emit_report, format_sig, parse_algorithms, Algorithm, Report, ReportFormat, RankCriterion,
    RunSettings, RunStatistics,
};
use ecastar_core::{Error, Result};

/// ECA* evolutionary clustering with K-means baselines.
#[derive(Parser)]
#[command(name = "ecastar", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Repeated seeded runs of one algorithm on one dataset.
    Run(RunArgs),
    /// Every algorithm on every dataset of a suite, plus the feature ranking.
    Bench(BenchArgs),
    /// Score an external partition.
    Metrics(MetricsArgs),
    /// Write a synthetic Gaussian-blob dataset.
    GenBlobs(BlobArgs),
}

#[derive(Args)]
struct Common {
    #[arg(long, default_value_t = 30)]
    runs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Flat `key = value` file with EcaConfig / KmConfig fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Worker threads (defaults to the number of cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Report wall times as 0 so reports are byte-identical between runs.
    #[arg(long)]
    no_timing: bool,
}

impl Common {
    fn settings(&self) -> Result<RunSettings> {
        let mut s = RunSettings {
            runs: self.runs,
            master_seed: self.seed,
            threads: self.threads,
            record_timing: !self.no_timing,
            ..RunSettings::default()
        };
        if let Some(path) = &self.config {
            s.apply_config_file(path)?;
        }
        Ok(s)
    }
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    algo: Algorithm,
    #[arg(long)]
    data: PathBuf,
    /// Ground-truth centroid file.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Ground-truth label file (needs --truth).
    #[arg(long)]
    labels: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    suite: PathBuf,
    #[arg(long, default_value = "eca_star,kmeans,kmeanspp")]
    algos: String,
    /// Ranking key, most significant first.
    #[arg(long, default_value = "ci,sse,time")]
    rank_key: String,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct MetricsArgs {
    #[arg(long)]
    data: PathBuf,
    /// Labels of the partition being scored.
    #[arg(long)]
    labels: PathBuf,
    /// Ground-truth centroid file.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Ground-truth label file.
    #[arg(long)]
    truth_labels: Option<PathBuf>,
    #[arg(long, default_value_t = ecastar_core::metrics::DEFAULT_SSE_OPT)]
    sse_opt: f64,
}

#[derive(Args)]
struct BlobArgs {
    #[arg(long)]
    k: usize,
    #[arg(long)]
    per: usize,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long, default_value_t = 1.0)]
    spread: f64,
    #[arg(long, default_value_t = 10.0)]
    sep: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory receiving points.txt, truth.txt and labels.txt.
    #[arg(long)]
    out: PathBuf,
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.to_path_buf(), source })
}

fn write_stats(dir: &Path, stats: &[RunStatistics]) -> Result<()> {
    for (format, ext) in [(ReportFormat::Csv, "csv"), (ReportFormat::Json, "json")] {
        emit_report(Report::Runs(stats), format, dir.join(format!("runs.{ext}")))?;
        emit_report(Report::Summary(stats), format, dir.join(format!("summary.{ext}")))?;
    }
    Ok(())
}

fn print_summary(stats: &RunStatistics) {
    let ci: Vec<usize> = stats.reports().filter_map(|r| r.ci).collect();
    let ci_text = if ci.is_empty() {
        String::new()
    } else {
        let zero = ci.iter().filter(|&&c| c == 0).count();
        format!(" ci=0 in {zero}/{}", ci.len())
    };
    let intra = stats.intra.map(|e| format_sig(e.average)).unwrap_or_else(|| "-".into());
    println!(
        "{} on {}: {} runs, {} failed, mean intra {intra}{ci_text}",
        stats.algorithm,
        stats.dataset,
        stats.runs.len(),
        stats.failed()
    );
}

fn run(args: RunArgs) -> Result<()> {
    let spec = harness::ExperimentSpec {
        algorithm: args.algo,
        data: args.data,
        truth: args.truth,
        labels: args.labels,
        settings: args.common.settings()?,
    };
    let stats = harness::run_experiment(&spec)?;
    create_dir(&args.common.out)?;
    write_stats(&args.common.out, std::slice::from_ref(&stats))?;
    print_summary(&stats);
    Ok(())
}

fn bench(args: BenchArgs) -> Result<()> {
    let suite = data_io::load_suite(&args.suite)?;
    let algorithms = parse_algorithms(&args.algos)?;
    let key = args
        .rank_key
        .split(',')
        .filter(|t| !t.trim().is_empty())
        .map(str::parse::<RankCriterion>)
        .collect::<Result<Vec<_>>>()?;
    let outcome = harness::run_bench(&suite, &algorithms, &args.common.settings()?, &key)?;
    let out = &args.common.out;
    create_dir(out)?;
    write_stats(out, &outcome.stats)?;
    emit_report(Report::Ranking(&outcome.ranking), ReportFormat::Csv, out.join("ranking.csv"))?;
    emit_report(Report::Ranking(&outcome.ranking), ReportFormat::Json, out.join("ranking.json"))?;
    for stats in &outcome.stats {
        print_summary(stats);
    }
    for (alg, rank) in outcome.ranking.algorithms.iter().zip(&outcome.ranking.overall) {
        println!("overall rank {alg}: {}", format_sig(*rank));
    }
    Ok(())
}

fn metrics(args: MetricsArgs) -> Result<()> {
    let (dataset, truth) = harness::load_inputs(&args.data, args.truth.as_deref(), args.truth_labels.as_deref())?;
    let labels = data_io::load_labels(&args.labels)?;
    let report = harness::score_partition(&dataset, &labels, truth.as_ref(), args.sse_opt)?;
    let json = serde_json::to_string_pretty(&report).map_err(|e| Error::Config(e.to_string()))?;
    println!("{json}");
    Ok(())
}

fn gen_blobs(args: BlobArgs) -> Result<()> {
    let (dataset, truth) = generate_blobs(args.k, args.per, args.dim, args.spread, args.sep, args.seed)?;
    create_dir(&args.out)?;
    data_io::write_points(args.out.join("points.txt"), &dataset)?;
    data_io::write_centroids(args.out.join("truth.txt"), &truth.centroids)?;
    if let Some(labels) = &truth.labels {
        data_io::write_labels(args.out.join("labels.txt"), labels)?;
    }
    println!("wrote {} points in {} dimensions to {}", dataset.n(), dataset.d(), args.out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(a) => run(a),
        Command::Bench(a) => bench(a),
        Command::Metrics(a) => metrics(a),
        Command::GenBlobs(a) => gen_blobs(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
