//! Repeated seeded runs, best/worst/average aggregation, the feature-based
//! ranking of algorithms, and report emission.
//!
//! Run `i` of an experiment uses seed `derive_seed(master_seed, i)` (see
//! [`crate::stats::RandomStream::derive`]), so results do not depend on how
//! many runs are requested or on how many threads execute them.

mod ranking;
mod report;

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use ranking::{rank_algorithms, GridCell, RankCriterion, RankingTable, DEFAULT_RANK_KEY};
pub use report::{emit_report, format_sig, render_report, Report, ReportFormat, RUN_COLUMNS};

use crate::baselines::{kmeans, KmConfig, KmInit};
use crate::data_io::{self, Dataset, DatasetMeta, GroundTruth, SuiteEntry};
use crate::eca::{run_eca, EcaConfig};
use crate::geometry::Centroids;
use crate::metrics::{evaluate, mean_point, MetricReport, Partition, DEFAULT_SSE_OPT};
use crate::stats::derive_seed;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    EcaStar,
    Kmeans,
    Kmeanspp,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::EcaStar => "eca_star",
            Algorithm::Kmeans => "kmeans",
            Algorithm::Kmeanspp => "kmeanspp",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "eca" | "eca_star" | "eca*" => Ok(Algorithm::EcaStar),
            "kmeans" | "km" => Ok(Algorithm::Kmeans),
            "kmeanspp" | "kmeans++" | "km++" => Ok(Algorithm::Kmeanspp),
            other => Err(Error::Config(format!("unknown algorithm '{other}'"))),
        }
    }
}

/// Settings shared by every run of an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSettings {
    pub runs: usize,
    pub master_seed: u64,
    pub eca: EcaConfig,
    pub km: KmConfig,
    /// Cluster count for the K-means baselines. `None` takes it from the
    /// ground truth.
    pub km_k: Option<usize>,
    pub sse_opt: f64,
    /// Worker threads; `None` uses rayon's default.
    pub threads: Option<usize>,
    /// When false, wall times are reported as 0 so reports are byte-stable.
    pub record_timing: bool,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self {
            runs: 30,
            master_seed: 0,
            eca: EcaConfig::default(),
            km: KmConfig::default(),
            km_k: None,
            sse_opt: DEFAULT_SSE_OPT,
            threads: None,
            record_timing: true,
        }
    }
}

impl RunSettings {
    /// Applies a flat `key = value` config file (`#` comments). Keys mirror
    /// the fields of [`EcaConfig`] and [`KmConfig`], plus `sse_opt`.
    pub fn apply_config_text(&mut self, path: &Path, text: &str) -> Result<()> {
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::Format {
                path: path.to_path_buf(),
                line: idx + 1,
                message,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected key = value, found '{line}'")))?;
            let (key, value) = (key.trim(), value.trim());
            if key == "sse_opt" {
                self.sse_opt = value.parse().map_err(|_| err(format!("bad sse_opt '{value}'")))?;
            } else if key == "k" {
                self.km_k = Some(value.parse().map_err(|_| err(format!("bad k '{value}'")))?);
            } else if !self.eca.set(key, value)? && !self.km.set(key, value)? {
                return Err(err(format!("unknown key '{key}'")));
            }
        }
        Ok(())
    }

    pub fn apply_config_file(&mut self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        self.apply_config_text(path, &text)
    }
}

/// One experiment: an algorithm on one dataset, repeated `settings.runs` times.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub algorithm: Algorithm,
    pub data: PathBuf,
    pub truth: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub settings: RunSettings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run: usize,
    pub seed: u64,
    pub report: Option<MetricReport>,
    pub error: Option<String>,
}

/// Best / worst / average of one quantity over the successful runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extremes {
    pub best: f64,
    pub worst: f64,
    pub average: f64,
}

impl Extremes {
    fn of(values: &[f64], maximise: bool) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let average = (values.iter().sum::<f64>() / values.len() as f64).clamp(min, max);
        Some(if maximise {
            Extremes { best: max, worst: min, average }
        } else {
            Extremes { best: min, worst: max, average }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunStatistics {
    pub dataset: String,
    pub algorithm: Algorithm,
    pub runs: Vec<RunRecord>,
    /// Minimised.
    pub intra: Option<Extremes>,
    /// Maximised.
    pub inter: Option<Extremes>,
    /// Minimised.
    pub wall_seconds: Option<Extremes>,
}

impl RunStatistics {
    pub fn from_runs(dataset: impl Into<String>, algorithm: Algorithm, runs: Vec<RunRecord>) -> Self {
        let ok: Vec<&MetricReport> = runs.iter().filter_map(|r| r.report.as_ref()).collect();
        let collect = |f: fn(&MetricReport) -> f64| ok.iter().map(|r| f(r)).collect::<Vec<_>>();
        Self {
            dataset: dataset.into(),
            algorithm,
            intra: Extremes::of(&collect(|r| r.avg_intra), false),
            inter: Extremes::of(&collect(|r| r.avg_inter), true),
            wall_seconds: Extremes::of(&collect(|r| r.wall_seconds), false),
            runs,
        }
    }

    pub fn reports(&self) -> impl Iterator<Item = &MetricReport> {
        self.runs.iter().filter_map(|r| r.report.as_ref())
    }

    pub fn failed(&self) -> usize {
        self.runs.iter().filter(|r| r.report.is_none()).count()
    }
}

fn single_run(
    algorithm: Algorithm,
    dataset: &Dataset,
    truth: Option<&GroundTruth>,
    settings: &RunSettings,
    seed: u64,
) -> Result<MetricReport> {
    let result = match algorithm {
        Algorithm::EcaStar => run_eca(dataset, &settings.eca, seed)?,
        Algorithm::Kmeans | Algorithm::Kmeanspp => {
            let k = settings.km_k.or(truth.map(GroundTruth::k)).ok_or_else(|| {
                Error::Config("K-means needs k from the config or the ground truth".into())
            })?;
            let init = if algorithm == Algorithm::Kmeans {
                KmInit::RandomPoints
            } else {
                KmInit::KmeansPlusPlus
            };
            kmeans(dataset, &KmConfig { k, init, ..settings.km.clone() }, seed)?
        }
    };
    let wall = if settings.record_timing { result.wall_seconds } else { 0.0 };
    evaluate(dataset, &result.centroids, &result.assignments, truth, settings.sse_opt, wall)
}

/// Runs an algorithm on an in-memory dataset. A failing run is recorded as
/// an error row and the remaining runs continue.
pub fn run_on(
    algorithm: Algorithm,
    dataset: &Dataset,
    truth: Option<&GroundTruth>,
    settings: &RunSettings,
) -> Result<RunStatistics> {
    if settings.runs == 0 {
        return Err(Error::Config("runs must be at least 1".into()));
    }
    if let Some(t) = truth {
        t.check_against(dataset)?;
    }
    let job = |run: usize| {
        let seed = derive_seed(settings.master_seed, run as u64);
        match single_run(algorithm, dataset, truth, settings, seed) {
            Ok(report) => RunRecord { run, seed, report: Some(report), error: None },
            Err(e) => RunRecord { run, seed, report: None, error: Some(e.to_string()) },
        }
    };
    let runs: Vec<RunRecord> = match settings.threads {
        Some(threads) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads.max(1))
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
            pool.install(|| (0..settings.runs).into_par_iter().map(job).collect())
        }
        None => (0..settings.runs).into_par_iter().map(job).collect(),
    };
    Ok(RunStatistics::from_runs(dataset.name(), algorithm, runs))
}

pub fn load_inputs(
    data: &Path,
    truth: Option<&Path>,
    labels: Option<&Path>,
) -> Result<(Dataset, Option<GroundTruth>)> {
    let dataset = data_io::load_points(data)?;
    let truth = match truth {
        Some(t) => {
            let gt = data_io::load_ground_truth(t, labels)?;
            gt.check_against(&dataset)?;
            Some(gt)
        }
        None if labels.is_some() => {
            return Err(Error::Config("labels need a ground-truth centroid file".into()))
        }
        None => None,
    };
    Ok((dataset, truth))
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<RunStatistics> {
    let (dataset, truth) = load_inputs(&spec.data, spec.truth.as_deref(), spec.labels.as_deref())?;
    run_on(spec.algorithm, &dataset, truth.as_ref(), &spec.settings)
}

/// Every (algorithm, dataset) cell of a suite plus the ranking over them.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchOutcome {
    pub stats: Vec<RunStatistics>,
    pub ranking: RankingTable,
}

pub fn run_bench(
    suite: &[SuiteEntry],
    algorithms: &[Algorithm],
    settings: &RunSettings,
    key: &[RankCriterion],
) -> Result<BenchOutcome> {
    let mut stats = Vec::new();
    let mut meta = std::collections::BTreeMap::<String, DatasetMeta>::new();
    for entry in suite {
        let data = entry.data.as_deref().ok_or_else(|| {
            Error::Config(format!("suite entry '{}' has no data path", entry.name))
        })?;
        let (mut dataset, truth) = load_inputs(data, entry.truth.as_deref(), entry.labels.as_deref())?;
        entry.meta.check(&entry.name, &dataset, truth.as_ref())?;
        dataset = dataset.with_name(entry.name.clone());
        for &alg in algorithms {
            stats.push(run_on(alg, &dataset, truth.as_ref(), settings)?);
        }
        meta.insert(entry.name.clone(), entry.meta.clone());
    }
    let cells: Vec<GridCell> = stats.iter().map(GridCell::from_stats).collect();
    let ranking = rank_algorithms(&cells, &meta, key)?;
    Ok(BenchOutcome { stats, ranking })
}

/// Scores an externally produced partition. Cluster centroids are the means
/// of their members; label ids need not be contiguous.
pub fn score_partition(
    dataset: &Dataset,
    labels: &[usize],
    truth: Option<&GroundTruth>,
    sse_opt: f64,
) -> Result<MetricReport> {
    if labels.len() != dataset.n() {
        return Err(Error::Domain(format!(
            "{} labels for {} points in '{}'",
            labels.len(),
            dataset.n(),
            dataset.name()
        )));
    }
    let partition = Partition::from_arbitrary(labels)?;
    let mut members: Vec<Vec<&[f64]>> = vec![Vec::new(); partition.k()];
    for (row, &l) in dataset.rows().zip(partition.labels()) {
        members[l].push(row);
    }
    let mut centroids = Centroids::with_capacity(dataset.d(), partition.k());
    for m in &members {
        centroids.push(&mean_point(m)?);
    }
    evaluate(dataset, &centroids, partition.labels(), truth, sse_opt, 0.0)
}

/// Parses a comma-separated algorithm list.
pub fn parse_algorithms(list: &str) -> Result<Vec<Algorithm>> {
    list.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(Algorithm::from_str)
        .collect()
}
