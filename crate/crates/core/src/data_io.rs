//! Plain-text dataset / ground-truth loading, the dataset metadata sidecar,
//! and a seeded Gaussian blob generator.
//!
//! Point files hold one observation per line as whitespace-separated decimal
//! tokens (integers or floats); blank lines are ignored. Values are used
//! exactly as read, with no scaling.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::geometry::Centroids;
use crate::stats::RandomStream;
use crate::{Error, Result};

/// Immutable N×D table of finite reals.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    name: String,
    n: usize,
    d: usize,
    values: Vec<f64>,
}

impl Dataset {
    pub fn new(name: impl Into<String>, d: usize, values: Vec<f64>) -> Result<Self> {
        if d == 0 || values.is_empty() {
            return Err(Error::Domain("dataset needs n ≥ 1 and d ≥ 1".into()));
        }
        if values.len() % d != 0 {
            return Err(Error::Domain(format!(
                "{} values do not form rows of {d}",
                values.len()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite value {bad}")));
        }
        Ok(Self {
            name: name.into(),
            n: values.len() / d,
            d,
            values,
        })
    }

    pub fn from_rows<R: AsRef<[f64]>>(name: impl Into<String>, rows: &[R]) -> Result<Self> {
        let d = rows.first().map_or(0, |r| r.as_ref().len());
        if rows.iter().any(|r| r.as_ref().len() != d) {
            return Err(Error::Domain("ragged rows".into()));
        }
        let values = rows.iter().flat_map(|r| r.as_ref().iter().copied()).collect();
        Self::new(name, d, values)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        self.values.chunks_exact(self.d)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    pub fn bounds(&self) -> Bounds {
        bounds(self)
    }
}

/// Per-dimension `(min, max)` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds(pub Vec<(f64, f64)>);

impl Bounds {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn range(&self, j: usize) -> f64 {
        self.0[j].1 - self.0[j].0
    }

    pub fn contains(&self, point: &[f64]) -> bool {
        point
            .iter()
            .zip(&self.0)
            .all(|(&x, &(lo, hi))| lo <= x && x <= hi)
    }
}

pub fn bounds(dataset: &Dataset) -> Bounds {
    let mut out: Vec<(f64, f64)> = dataset.row(0).iter().map(|&v| (v, v)).collect();
    for row in dataset.rows().skip(1) {
        for (b, &v) in out.iter_mut().zip(row) {
            b.0 = b.0.min(v);
            b.1 = b.1.max(v);
        }
    }
    Bounds(out)
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn parse_table(path: &Path, text: &str) -> Result<(usize, Vec<f64>)> {
    let mut d = None;
    let mut values = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let mut width = 0;
        for token in line.split_whitespace() {
            let v = f64::from_str(token).map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                line: line_no,
                token: token.to_string(),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: line_no,
                    token: token.to_string(),
                });
            }
            values.push(v);
            width += 1;
        }
        if width == 0 {
            continue;
        }
        match d {
            None => d = Some(width),
            Some(expected) if expected != width => {
                return Err(Error::Format {
                    path: path.to_path_buf(),
                    line: line_no,
                    message: format!("expected {expected} values, found {width}"),
                })
            }
            _ => {}
        }
    }
    match d {
        Some(d) => Ok((d, values)),
        None => Err(Error::EmptyInput(path.to_path_buf())),
    }
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

pub fn load_points(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let (d, values) = parse_table(path, &read_text(path)?)?;
    Dataset::new(stem(path), d, values)
}

/// Writes one row per line using the shortest round-tripping decimal form.
pub fn write_points(path: impl AsRef<Path>, dataset: &Dataset) -> Result<()> {
    write_rows(path.as_ref(), dataset.rows())
}

pub fn write_centroids(path: impl AsRef<Path>, centroids: &Centroids) -> Result<()> {
    write_rows(path.as_ref(), centroids.rows())
}

pub fn write_labels(path: impl AsRef<Path>, labels: &[usize]) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::with_capacity(labels.len() * 3);
    for l in labels {
        out.push_str(&l.to_string());
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

fn write_rows<'a>(path: &Path, rows: impl Iterator<Item = &'a [f64]>) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    for row in rows {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(w, "{}", line.join(" ")).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reference centroids and, optionally, a reference partition.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub centroids: Centroids,
    pub labels: Option<Vec<usize>>,
}

impl GroundTruth {
    pub fn new(centroids: Centroids, labels: Option<Vec<usize>>) -> Result<Self> {
        if centroids.is_empty() {
            return Err(Error::Domain("ground truth needs at least one centroid".into()));
        }
        if let Some(labels) = &labels {
            if let Some(bad) = labels.iter().find(|&&l| l >= centroids.k()) {
                return Err(Error::Domain(format!(
                    "label {bad} out of range for {} centroids",
                    centroids.k()
                )));
            }
        }
        Ok(Self { centroids, labels })
    }

    pub fn k(&self) -> usize {
        self.centroids.k()
    }

    /// Checks dimensionality and label count against a dataset.
    pub fn check_against(&self, dataset: &Dataset) -> Result<()> {
        if self.centroids.dim() != dataset.d() {
            return Err(Error::Domain(format!(
                "ground truth has d = {}, dataset '{}' has d = {}",
                self.centroids.dim(),
                dataset.name(),
                dataset.d()
            )));
        }
        if let Some(labels) = &self.labels {
            if labels.len() != dataset.n() {
                return Err(Error::Domain(format!(
                    "{} labels for {} points in '{}'",
                    labels.len(),
                    dataset.n(),
                    dataset.name()
                )));
            }
        }
        Ok(())
    }
}

/// Parses a label list. Tokens may be separated by whitespace or commas.
/// A partition-file header terminated by a line of dashes is skipped.
/// 1-based files (min label 1, no 0) are shifted to 0-based.
pub fn parse_labels(path: &Path, text: &str) -> Result<Vec<usize>> {
    let lines: Vec<&str> = text.lines().collect();
    let start = lines
        .iter()
        .rposition(|l| {
            let t = l.trim();
            t.len() >= 3 && t.chars().all(|c| c == '-')
        })
        .map_or(0, |i| i + 1);
    let mut labels = Vec::new();
    for (idx, line) in lines.iter().enumerate().skip(start) {
        for token in line.split(|c: char| c.is_whitespace() || c == ',') {
            if token.is_empty() {
                continue;
            }
            let v = token.parse::<usize>().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                line: idx + 1,
                token: token.to_string(),
            })?;
            labels.push(v);
        }
    }
    if labels.is_empty() {
        return Err(Error::EmptyInput(path.to_path_buf()));
    }
    let min = labels.iter().copied().min().unwrap_or(0);
    if min == 1 {
        labels.iter_mut().for_each(|l| *l -= 1);
    }
    Ok(labels)
}

pub fn load_labels(path: impl AsRef<Path>) -> Result<Vec<usize>> {
    let path = path.as_ref();
    parse_labels(path, &read_text(path)?)
}

pub fn load_ground_truth(
    centroid_path: impl AsRef<Path>,
    label_path: Option<&Path>,
) -> Result<GroundTruth> {
    let centroid_path = centroid_path.as_ref();
    let (d, values) = parse_table(centroid_path, &read_text(centroid_path)?)?;
    let labels = label_path.map(load_labels).transpose()?;
    GroundTruth::new(Centroids::from_flat(d, values), labels)
}

/// `k` isotropic Gaussian clusters of `per_cluster` points each.
///
/// Centers are drawn uniformly in `[0, L]^d` with
/// `L = separation · k^(1/d)` and rejected until every pair is at least
/// `separation` apart (1000 attempts per center). Points are emitted cluster
/// by cluster; the ground truth carries the true centers and labels.
pub fn generate_blobs(
    k: usize,
    per_cluster: usize,
    d: usize,
    spread: f64,
    separation: f64,
    seed: u64,
) -> Result<(Dataset, GroundTruth)> {
    const ATTEMPTS: usize = 1000;
    if k == 0 || per_cluster == 0 || d == 0 {
        return Err(Error::Config("k, per_cluster and d must be positive".into()));
    }
    if k * per_cluster < 2 {
        return Err(Error::Config("need at least two points".into()));
    }
    if !(spread > 0.0 && spread.is_finite()) || !(separation > 0.0 && separation.is_finite()) {
        return Err(Error::Config("spread and separation must be positive".into()));
    }
    let mut rng = RandomStream::new(seed);
    let side = separation * (k as f64).powf(1.0 / d as f64);
    let mut centers = Centroids::with_capacity(d, k);
    let mut candidate = vec![0.0; d];
    for _ in 0..k {
        let mut placed = false;
        for _ in 0..ATTEMPTS {
            candidate.iter_mut().for_each(|c| *c = side * rng.next_f64());
            if centers
                .rows()
                .all(|c| crate::geometry::euclidean(c, &candidate) >= separation)
            {
                centers.push(&candidate);
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(Error::Placement {
                k,
                separation,
                attempts: ATTEMPTS,
            });
        }
    }
    let mut values = Vec::with_capacity(k * per_cluster * d);
    let mut labels = Vec::with_capacity(k * per_cluster);
    for (label, center) in centers.rows().enumerate() {
        for _ in 0..per_cluster {
            values.extend(center.iter().map(|&c| c + spread * rng.standard_normal()));
            labels.push(label);
        }
    }
    let name = format!("blobs-k{k}-d{d}-s{seed}");
    let dataset = Dataset::new(name, d, values)?;
    let truth = GroundTruth::new(centers, Some(labels))?;
    Ok((dataset, truth))
}

/// The five dataset features used by the performance-ranking framework.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureTag {
    Overlap,
    ClusterCount,
    Dimensionality,
    Structure,
    Shape,
}

impl FeatureTag {
    pub const ALL: [FeatureTag; 5] = [
        FeatureTag::Overlap,
        FeatureTag::ClusterCount,
        FeatureTag::Dimensionality,
        FeatureTag::Structure,
        FeatureTag::Shape,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureTag::Overlap => "overlap",
            FeatureTag::ClusterCount => "cluster_count",
            FeatureTag::Dimensionality => "dimensionality",
            FeatureTag::Structure => "structure",
            FeatureTag::Shape => "shape",
        }
    }
}

impl fmt::Display for FeatureTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FeatureTag::ALL
            .into_iter()
            .find(|t| t.as_str() == s.trim())
            .ok_or_else(|| Error::Config(format!("unknown feature tag '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub tags: BTreeSet<FeatureTag>,
    pub declared_clusters: usize,
    pub declared_n: usize,
}

impl DatasetMeta {
    pub fn new(tags: impl IntoIterator<Item = FeatureTag>, declared_clusters: usize, declared_n: usize) -> Result<Self> {
        let tags: BTreeSet<_> = tags.into_iter().collect();
        if tags.is_empty() {
            return Err(Error::Config("dataset metadata needs at least one feature tag".into()));
        }
        if declared_clusters == 0 || declared_n == 0 {
            return Err(Error::Config("declared cluster count and size must be positive".into()));
        }
        Ok(Self {
            tags,
            declared_clusters,
            declared_n,
        })
    }

    /// Verifies the declared sizes against what was actually loaded.
    pub fn check(&self, name: &str, dataset: &Dataset, truth: Option<&GroundTruth>) -> Result<()> {
        if dataset.n() != self.declared_n {
            return Err(Error::Domain(format!(
                "'{name}' declares n = {} but has {} points",
                self.declared_n,
                dataset.n()
            )));
        }
        if let Some(t) = truth {
            if t.k() != self.declared_clusters {
                return Err(Error::Domain(format!(
                    "'{name}' declares {} clusters but ground truth has {}",
                    self.declared_clusters,
                    t.k()
                )));
            }
        }
        Ok(())
    }
}

/// One line of a suite / metadata sidecar file.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteEntry {
    pub name: String,
    pub meta: DatasetMeta,
    pub data: Option<PathBuf>,
    pub truth: Option<PathBuf>,
    pub labels: Option<PathBuf>,
}

/// Splits `key=value` tokens of a line; `#` starts a comment.
pub(crate) fn key_values(line: &str) -> impl Iterator<Item = &str> {
    line.split('#').next().unwrap_or("").split_whitespace()
}

/// Parses a suite file. Each non-comment line reads
///
/// ```text
/// s1 tags=overlap k=15 n=5000 data=s1.txt truth=s1-cb.txt labels=s1-label.pa
/// ```
///
/// `tags`, `k` and `n` are required; paths are optional and resolved
/// relative to the suite file's directory.
pub fn parse_suite(path: &Path, text: &str) -> Result<Vec<SuiteEntry>> {
    let base = path.parent().unwrap_or(Path::new(""));
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let err = |message: String| Error::Format {
            path: path.to_path_buf(),
            line: idx + 1,
            message,
        };
        let mut tokens = key_values(line);
        let Some(name) = tokens.next() else { continue };
        if name.contains('=') {
            return Err(err("line must start with a dataset name".into()));
        }
        let (mut tags, mut k, mut n) = (None, None, None);
        let (mut data, mut truth, mut labels) = (None, None, None);
        for token in tokens {
            let (key, value) = token
                .split_once('=')
                .ok_or_else(|| err(format!("expected key=value, found '{token}'")))?;
            let number = || value.parse::<usize>().map_err(|_| err(format!("bad {key} '{value}'")));
            match key {
                "tags" => {
                    tags = Some(
                        value
                            .split(',')
                            .filter(|t| !t.is_empty())
                            .map(FeatureTag::from_str)
                            .collect::<Result<Vec<_>>>()?,
                    )
                }
                "k" => k = Some(number()?),
                "n" => n = Some(number()?),
                "data" => data = Some(base.join(value)),
                "truth" => truth = Some(base.join(value)),
                "labels" => labels = Some(base.join(value)),
                other => return Err(err(format!("unknown key '{other}'"))),
            }
        }
        let meta = DatasetMeta::new(
            tags.ok_or_else(|| err("missing tags".into()))?,
            k.ok_or_else(|| err("missing k".into()))?,
            n.ok_or_else(|| err("missing n".into()))?,
        )?;
        out.push(SuiteEntry {
            name: name.to_string(),
            meta,
            data,
            truth,
            labels,
        });
    }
    Ok(out)
}

pub fn load_suite(path: impl AsRef<Path>) -> Result<Vec<SuiteEntry>> {
    let path = path.as_ref();
    parse_suite(path, &read_text(path)?)
}
