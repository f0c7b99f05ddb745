//! Lloyd's K-means with random-point or K-means++ seeding.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::data_io::Dataset;
use crate::eca::{ClusteringResult, FitnessSample};
use crate::geometry::{squared_distance, Centroids};
use crate::metrics::{cluster_spread, Partition};
use crate::stats::RandomStream;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KmInit {
    RandomPoints,
    #[default]
    KmeansPlusPlus,
}

impl FromStr for KmInit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "random_points" | "random" => Ok(KmInit::RandomPoints),
            "kmeanspp" | "kmeans++" => Ok(KmInit::KmeansPlusPlus),
            other => Err(Error::Config(format!("unknown K-means init '{other}'"))),
        }
    }
}

impl fmt::Display for KmInit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KmInit::RandomPoints => "random_points",
            KmInit::KmeansPlusPlus => "kmeanspp",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KmConfig {
    pub k: usize,
    pub max_iter: usize,
    pub init: KmInit,
    /// Stop once SSE changes by at most this relative amount.
    pub tolerance: f64,
}

impl Default for KmConfig {
    fn default() -> Self {
        Self {
            k: 2,
            max_iter: 50,
            init: KmInit::KmeansPlusPlus,
            tolerance: 1e-9,
        }
    }
}

impl KmConfig {
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.k == 0 || self.k > n {
            return Err(Error::Config(format!("k must lie in 1..={n}, got {}", self.k)));
        }
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be at least 1".into()));
        }
        if !(self.tolerance >= 0.0) {
            return Err(Error::Config("tolerance must be non-negative".into()));
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<bool> {
        let bad = || Error::Config(format!("bad value '{value}' for {key}"));
        match key {
            "k" => self.k = value.trim().parse().map_err(|_| bad())?,
            "max_iter" => self.max_iter = value.trim().parse().map_err(|_| bad())?,
            "init" => self.init = value.parse()?,
            "tolerance" => self.tolerance = value.trim().parse().map_err(|_| bad())?,
            _ => return Ok(false),
        }
        Ok(true)
    }
}

/// K-means++ seeding: the first centroid is a uniform point, each next one
/// is drawn with probability proportional to its squared distance to the
/// nearest chosen centroid. If every remaining weight is zero, points are
/// drawn uniformly, retrying up to `n` times to avoid duplicate centroids.
pub fn kmeanspp_seed(dataset: &Dataset, k: usize, rng: &mut RandomStream) -> Result<Centroids> {
    let n = dataset.n();
    if k == 0 || k > n {
        return Err(Error::Config(format!("k must lie in 1..={n}, got {k}")));
    }
    let mut centroids = Centroids::with_capacity(dataset.d(), k);
    let first = rng.below(n);
    centroids.push(dataset.row(first));
    let mut weights: Vec<f64> = dataset
        .rows()
        .map(|x| squared_distance(x, dataset.row(first)))
        .collect();
    while centroids.k() < k {
        let total: f64 = weights.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.next_f64() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &w) in weights.iter().enumerate() {
                if w > 0.0 {
                    acc += w;
                    pick = Some(i);
                    if acc > target {
                        break;
                    }
                }
            }
            pick.expect("positive total weight")
        } else {
            let mut pick = rng.below(n);
            for _ in 0..n {
                if centroids.rows().all(|c| c != dataset.row(pick)) {
                    break;
                }
                pick = rng.below(n);
            }
            pick
        };
        let chosen = dataset.row(pick).to_vec();
        centroids.push(&chosen);
        for (w, x) in weights.iter_mut().zip(dataset.rows()) {
            *w = w.min(squared_distance(x, &chosen));
        }
    }
    Ok(centroids)
}

/// `k` distinct points chosen uniformly without replacement.
pub fn random_points_seed(dataset: &Dataset, k: usize, rng: &mut RandomStream) -> Result<Centroids> {
    let n = dataset.n();
    if k == 0 || k > n {
        return Err(Error::Config(format!("k must lie in 1..={n}, got {k}")));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    let mut centroids = Centroids::with_capacity(dataset.d(), k);
    for slot in 0..k {
        let j = slot + rng.below(n - slot);
        idx.swap(slot, j);
        centroids.push(dataset.row(idx[slot]));
    }
    Ok(centroids)
}

fn assign(dataset: &Dataset, centroids: &Centroids) -> (Vec<usize>, f64) {
    let mut sse = 0.0;
    let labels = dataset
        .rows()
        .map(|x| {
            let (id, dist) = centroids.nearest(x);
            sse += dist;
            id
        })
        .collect();
    (labels, sse)
}

/// Means of the labelled points; an empty cluster is moved onto the point
/// farthest from its own centroid.
fn update(dataset: &Dataset, labels: &[usize], k: usize) -> Centroids {
    let d = dataset.d();
    let mut sums = vec![0.0; k * d];
    let mut counts = vec![0usize; k];
    for (x, &l) in dataset.rows().zip(labels) {
        counts[l] += 1;
        for (s, v) in sums[l * d..(l + 1) * d].iter_mut().zip(x) {
            *s += v;
        }
    }
    for (l, &c) in counts.iter().enumerate() {
        if c > 0 {
            sums[l * d..(l + 1) * d].iter_mut().for_each(|s| *s /= c as f64);
        }
    }
    let mut centroids = Centroids::from_flat(d, sums);
    if counts.contains(&0) {
        let mut spread: Vec<f64> = dataset
            .rows()
            .zip(labels)
            .map(|(x, &l)| squared_distance(x, centroids.row(l)))
            .collect();
        for l in (0..k).filter(|&l| counts[l] == 0) {
            let far = spread
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |best, (i, &s)| if s > best.1 { (i, s) } else { best })
                .0;
            centroids.row_mut(l).copy_from_slice(dataset.row(far));
            spread[far] = 0.0;
        }
    }
    centroids
}

/// Lloyd iterations from the given starting centroids. `sse_trace[t]` is the
/// SSE of the `t`-th assignment and never increases.
pub fn kmeans_from(dataset: &Dataset, config: &KmConfig, initial: Centroids) -> Result<ClusteringResult> {
    config.validate(dataset.n())?;
    if initial.k() != config.k || initial.dim() != dataset.d() {
        return Err(Error::Config("initial centroids do not match k or d".into()));
    }
    let start = Instant::now();
    let mut centroids = initial;
    let (mut labels, mut sse) = assign(dataset, &centroids);
    let mut sse_trace = vec![sse];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < config.max_iter {
        let next = update(dataset, &labels, config.k);
        let (next_labels, next_sse) = assign(dataset, &next);
        iterations += 1;
        sse_trace.push(next_sse);
        centroids = next;
        let fixpoint = next_labels == labels;
        let rel = if sse > 0.0 { (sse - next_sse).abs() / sse } else { 0.0 };
        labels = next_labels;
        sse = next_sse;
        if fixpoint || rel <= config.tolerance {
            converged = true;
            break;
        }
    }
    // duplicate points can leave a centroid without members; drop it
    let mut used = vec![false; centroids.k()];
    labels.iter().for_each(|&l| used[l] = true);
    if used.contains(&false) {
        let mut remap = vec![0; used.len()];
        let mut next = 0;
        for (l, &u) in used.iter().enumerate() {
            remap[l] = next;
            next += usize::from(u);
        }
        labels.iter_mut().for_each(|l| *l = remap[*l]);
        centroids.retain_rows(&used);
    }
    let partition = Partition::new(labels.clone(), None)?;
    let (avg_intra, avg_inter) = cluster_spread(dataset, &partition)?;
    Ok(ClusteringResult {
        initial_clusters: config.k,
        centroids,
        assignments: labels,
        fitness_trace: vec![FitnessSample { avg_intra, avg_inter }],
        sse_trace,
        iterations,
        converged,
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

pub fn kmeans(dataset: &Dataset, config: &KmConfig, seed: u64) -> Result<ClusteringResult> {
    config.validate(dataset.n())?;
    let start = Instant::now();
    let mut rng = RandomStream::new(seed);
    let initial = match config.init {
        KmInit::RandomPoints => random_points_seed(dataset, config.k, &mut rng)?,
        KmInit::KmeansPlusPlus => kmeanspp_seed(dataset, config.k, &mut rng)?,
    };
    let mut result = kmeans_from(dataset, config, initial)?;
    result.wall_seconds = start.elapsed().as_secs_f64();
    Ok(result)
}
