//! The ECA* evolutionary clustering loop.
//!
//! One run goes through percentile-rank initialisation, then repeats until
//! the fitness stops changing or `max_cycles` is hit:
//!
//! 1. sample historical centroids `oldC` between each cluster's quartiles,
//! 2. score `C` and `oldC` with centroid-conditional distances,
//! 3. keep the better of the two per cluster (the elite),
//! 4. build a Levy-flight mutant and a uniform crossover of elite and `oldC`,
//! 5. pick mutant or crossover per cluster by conditional inter distance,
//!    pulling out-of-range components back inside the data bounds,
//! 6. reassign points to the nearest resulting centroid,
//! 7. merge touching clusters and absorb sparse ones,
//! 8. evaluate average intra / inter cluster distance.

mod fitness;
mod init;
mod merge;
mod operators;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use fitness::{fitness, Fitness, FitnessSample};
pub use init::{cell_bins, initialize};
pub use merge::{merge_clusters, merge_diversity, min_distance};
pub use operators::{
    boundary_control, conditional_distances, crossover, mut_over, mutate, mutate_with, reassign,
    sample_historical, select_elite, ConditionalDistance,
};

use crate::data_io::{Bounds, Dataset};
use crate::geometry::Centroids;
use crate::metrics;
use crate::stats::{self, RandomStream};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrossoverType {
    #[default]
    Uniform,
}

impl FromStr for CrossoverType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "uniform" => Ok(CrossoverType::Uniform),
            other => Err(Error::Config(format!("unsupported crossover type '{other}'"))),
        }
    }
}

impl fmt::Display for CrossoverType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("uniform")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EcaConfig {
    /// Percentile bands per dimension; the initial grid has `S^D` cells.
    pub social_ranks: usize,
    /// Clusters holding less than this fraction of the points are absorbed.
    pub density_threshold: f64,
    /// Levy stability exponent.
    pub alpha: f64,
    pub max_cycles: usize,
    pub crossover_type: CrossoverType,
    /// Relative change in both fitness values at or below which a run stops.
    pub convergence_tolerance: f64,
    /// Levy step cap as a fraction of each dimension's data range.
    pub levy_cap_fraction: f64,
}

impl Default for EcaConfig {
    fn default() -> Self {
        Self {
            social_ranks: 2,
            density_threshold: 0.001,
            alpha: 1.001,
            max_cycles: 50,
            crossover_type: CrossoverType::Uniform,
            convergence_tolerance: 1e-9,
            levy_cap_fraction: 0.1,
        }
    }
}

impl EcaConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.social_ranks < 2 || self.social_ranks > u32::MAX as usize {
            return fail(format!("social_ranks must be at least 2, got {}", self.social_ranks));
        }
        if !(self.density_threshold > 0.0 && self.density_threshold < 1.0) {
            return fail(format!(
                "density_threshold must lie in (0, 1), got {}",
                self.density_threshold
            ));
        }
        if !(self.alpha > 0.0 && self.alpha <= 2.0) {
            return fail(format!("alpha must lie in (0, 2], got {}", self.alpha));
        }
        if self.max_cycles == 0 {
            return fail("max_cycles must be at least 1".into());
        }
        if !(self.convergence_tolerance >= 0.0) {
            return fail("convergence_tolerance must be non-negative".into());
        }
        if !(self.levy_cap_fraction > 0.0 && self.levy_cap_fraction <= 1.0) {
            return fail(format!(
                "levy_cap_fraction must lie in (0, 1], got {}",
                self.levy_cap_fraction
            ));
        }
        Ok(())
    }

    /// Sets one field from its textual name and value. Returns `Ok(false)`
    /// for keys this config does not own.
    pub fn set(&mut self, key: &str, value: &str) -> Result<bool> {
        fn num<T: FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad value '{value}' for {key}")))
        }
        match key {
            "social_ranks" | "S" => self.social_ranks = num(key, value)?,
            "density_threshold" | "C_dth" => self.density_threshold = num(key, value)?,
            "alpha" => self.alpha = num(key, value)?,
            "max_cycles" => self.max_cycles = num(key, value)?,
            "crossover_type" | "C_type" => self.crossover_type = value.parse()?,
            "convergence_tolerance" => self.convergence_tolerance = num(key, value)?,
            "levy_cap_fraction" => self.levy_cap_fraction = num(key, value)?,
            _ => return Ok(false),
        }
        Ok(true)
    }
}

/// One live cluster: its members (sorted point indices), current centroid
/// `C` and historical centroid `oldC`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    pub members: Vec<usize>,
    pub centroid: Vec<f64>,
    pub historical: Vec<f64>,
}

/// Mutable clustering state. Cluster ids are positions in `clusters` and
/// stay contiguous; removing a cluster preserves the order of the rest.
#[derive(Debug, Clone, PartialEq)]
pub struct EcaState {
    clusters: Vec<Cluster>,
    assignments: Vec<usize>,
    iteration: usize,
    initial_cells: usize,
    mean_ranks: Vec<f64>,
}

/// Interquartile mean of every dimension over the given members.
pub(crate) fn quartile_centroid(dataset: &Dataset, members: &[usize]) -> Vec<f64> {
    let mut column = Vec::with_capacity(members.len());
    (0..dataset.d())
        .map(|j| {
            column.clear();
            column.extend(members.iter().map(|&i| dataset.row(i)[j]));
            column.sort_by(f64::total_cmp);
            stats::interquartile_mean_sorted(&column)
        })
        .collect()
}

impl EcaState {
    /// Builds a state from a labelling with contiguous ids. Centroids are
    /// per-dimension interquartile means; `oldC` starts equal to `C`.
    pub fn from_assignments(dataset: &Dataset, assignments: &[usize]) -> Result<Self> {
        let partition = metrics::Partition::new(assignments.to_vec(), None)?;
        if partition.n() != dataset.n() {
            return Err(Error::Domain("assignment length differs from dataset size".into()));
        }
        let mut members = vec![Vec::new(); partition.k()];
        for (i, &l) in assignments.iter().enumerate() {
            members[l].push(i);
        }
        let clusters: Vec<Cluster> = members
            .into_iter()
            .map(|m| {
                let centroid = quartile_centroid(dataset, &m);
                Cluster {
                    members: m,
                    historical: centroid.clone(),
                    centroid,
                }
            })
            .collect();
        let initial_cells = clusters.len();
        Ok(Self {
            clusters,
            assignments: assignments.to_vec(),
            iteration: 0,
            initial_cells,
            mean_ranks: Vec::new(),
        })
    }

    fn from_clusters(clusters: Vec<Cluster>, n: usize, initial_cells: usize, mean_ranks: Vec<f64>) -> Self {
        let mut state = Self {
            clusters,
            assignments: vec![0; n],
            iteration: 0,
            initial_cells,
            mean_ranks,
        };
        state.sync_assignments();
        state
    }

    pub fn k(&self) -> usize {
        self.clusters.len()
    }

    pub fn clusters(&self) -> &[Cluster] {
        &self.clusters
    }

    pub fn assignments(&self) -> &[usize] {
        &self.assignments
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    /// Occupied grid cells before any sparse-cell absorption.
    pub fn initial_cells(&self) -> usize {
        self.initial_cells
    }

    /// Average percentile rank of every point across its dimensions.
    pub fn mean_ranks(&self) -> &[f64] {
        &self.mean_ranks
    }

    pub fn centroids(&self) -> Centroids {
        let d = self.clusters.first().map_or(0, |c| c.centroid.len());
        Centroids::from_rows(d, &self.clusters.iter().map(|c| &c.centroid[..]).collect::<Vec<_>>())
    }

    pub fn historical(&self) -> Centroids {
        let d = self.clusters.first().map_or(0, |c| c.historical.len());
        Centroids::from_rows(d, &self.clusters.iter().map(|c| &c.historical[..]).collect::<Vec<_>>())
    }

    pub(crate) fn clusters_mut(&mut self) -> &mut Vec<Cluster> {
        &mut self.clusters
    }

    pub(crate) fn sync_assignments(&mut self) {
        for (id, c) in self.clusters.iter().enumerate() {
            for &i in &c.members {
                self.assignments[i] = id;
            }
        }
    }

    pub(crate) fn set_historical(&mut self, historical: &Centroids) {
        for (c, row) in self.clusters.iter_mut().zip(historical.rows()) {
            c.historical.copy_from_slice(row);
        }
    }

    /// Replaces memberships with a fresh assignment to `centroids`, whose
    /// rows become the working centroids. Clusters left empty are dropped.
    pub(crate) fn apply_assignment(&mut self, assignments: Vec<usize>, centroids: &Centroids) {
        for c in self.clusters.iter_mut() {
            c.members.clear();
        }
        for (i, &l) in assignments.iter().enumerate() {
            self.clusters[l].members.push(i);
        }
        for (c, row) in self.clusters.iter_mut().zip(centroids.rows()) {
            c.centroid.copy_from_slice(row);
        }
        self.clusters.retain(|c| !c.members.is_empty());
        self.sync_assignments();
    }

    /// Runs one full iteration and returns the intermediate candidates.
    pub fn step(
        &mut self,
        dataset: &Dataset,
        config: &EcaConfig,
        bounds: &Bounds,
        rng: &mut RandomStream,
    ) -> Result<StepRecord> {
        let clusters_before = self.k();
        let current = self.centroids();
        let historical = sample_historical(self, dataset, rng)?;
        self.set_historical(&historical);

        let current_distances = conditional_distances(self, dataset, &current);
        let historical_distances = conditional_distances(self, dataset, &historical);
        let (elite, current_wins) =
            select_elite(&current, &historical, &current_distances, &historical_distances);
        let mutant = mutate(&elite, &current, &historical, &current_wins, config, bounds, rng)?;
        let crossed = crossover(&elite, &historical, config, rng)?;
        let chosen = mut_over(
            &mutant,
            &crossed,
            &current_distances,
            &historical_distances,
            bounds,
            rng,
        )?;

        let assignments = reassign(dataset, &chosen);
        self.apply_assignment(assignments, &chosen);
        merge_clusters(self, dataset, config);
        self.iteration += 1;

        Ok(StepRecord {
            clusters_before,
            clusters_after: self.k(),
            current,
            historical,
            current_distances,
            historical_distances,
            elite,
            current_wins,
            mutant,
            crossed,
            mut_over: chosen,
        })
    }
}

/// Intermediate products of one iteration, kept for diagnostics and tests.
#[derive(Debug, Clone)]
pub struct StepRecord {
    pub clusters_before: usize,
    pub clusters_after: usize,
    pub current: Centroids,
    pub historical: Centroids,
    pub current_distances: Vec<ConditionalDistance>,
    pub historical_distances: Vec<ConditionalDistance>,
    pub elite: Centroids,
    pub current_wins: Vec<bool>,
    pub mutant: Centroids,
    pub crossed: Centroids,
    pub mut_over: Centroids,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringResult {
    pub centroids: Centroids,
    pub assignments: Vec<usize>,
    /// Fitness of the starting clustering followed by one entry per iteration.
    pub fitness_trace: Vec<FitnessSample>,
    /// Nearest-centroid SSE aligned with `fitness_trace` (per iteration for
    /// K-means).
    pub sse_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub initial_clusters: usize,
    pub wall_seconds: f64,
}

impl ClusteringResult {
    pub fn cluster_count(&self) -> usize {
        self.centroids.k()
    }
}

pub fn run_eca(dataset: &Dataset, config: &EcaConfig, seed: u64) -> Result<ClusteringResult> {
    config.validate()?;
    let start = Instant::now();
    let mut rng = RandomStream::new(seed);
    let bounds = dataset.bounds();
    let mut state = initialize(dataset, config, &mut rng)?;

    let first = fitness(&state, dataset, None, config.convergence_tolerance)?;
    let mut trace = vec![first.sample];
    let mut sse_trace = vec![metrics::sse(dataset, &state.centroids())?];
    let mut converged = false;
    for _ in 0..config.max_cycles {
        state.step(dataset, config, &bounds, &mut rng)?;
        let f = fitness(&state, dataset, trace.last().copied(), config.convergence_tolerance)?;
        trace.push(f.sample);
        sse_trace.push(metrics::sse(dataset, &state.centroids())?);
        if f.converged {
            converged = true;
            break;
        }
    }
    Ok(ClusteringResult {
        centroids: state.centroids(),
        assignments: state.assignments().to_vec(),
        fitness_trace: trace,
        sse_trace,
        iterations: state.iteration(),
        converged,
        initial_clusters: state.initial_cells(),
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data_io::generate_blobs;

    #[test]
    fn config_validation() {
        assert!(EcaConfig::default().validate().is_ok());
        let bad = [
            EcaConfig { social_ranks: 1, ..Default::default() },
            EcaConfig { density_threshold: 0.0, ..Default::default() },
            EcaConfig { alpha: 3.0, ..Default::default() },
            EcaConfig { max_cycles: 0, ..Default::default() },
            EcaConfig { levy_cap_fraction: 0.0, ..Default::default() },
        ];
        for cfg in bad {
            assert!(matches!(cfg.validate(), Err(Error::Config(_))), "{cfg:?}");
        }
        let mut cfg = EcaConfig::default();
        assert!(cfg.set("social_ranks", "3").unwrap());
        assert!(!cfg.set("k", "3").unwrap());
        assert!(cfg.set("crossover_type", "single_point").is_err());
        assert_eq!(cfg.social_ranks, 3);
    }

    #[test]
    fn identical_points_give_one_cluster() {
        let ds = Dataset::from_rows("same", &vec![[2.5, -1.0]; 12]).unwrap();
        let r = run_eca(&ds, &EcaConfig::default(), 5).unwrap();
        assert_eq!(r.cluster_count(), 1);
        assert_eq!(r.centroids.row(0), &[2.5, -1.0]);
        assert!(r.assignments.iter().all(|&a| a == 0));
    }

    #[test]
    fn run_is_deterministic() {
        let (ds, _) = generate_blobs(3, 40, 2, 0.5, 8.0, 17).unwrap();
        let cfg = EcaConfig { social_ranks: 3, ..Default::default() };
        let mut a = run_eca(&ds, &cfg, 99).unwrap();
        let mut b = run_eca(&ds, &cfg, 99).unwrap();
        a.wall_seconds = 0.0;
        b.wall_seconds = 0.0;
        assert_eq!(a, b);
    }

    #[test]
    fn final_k_bounded_by_initial_cells() {
        // sparse and dense clusters side by side
        let (dense, _) = generate_blobs(4, 400, 2, 0.6, 12.0, 3).unwrap();
        let (sparse, _) = generate_blobs(4, 20, 2, 2.0, 12.0, 4).unwrap();
        let mut rows: Vec<Vec<f64>> = dense.rows().map(<[f64]>::to_vec).collect();
        rows.extend(sparse.rows().map(|r| vec![r[0] + 80.0, r[1]]));
        let ds = Dataset::from_rows("unbalanced", &rows).unwrap();
        let cfg = EcaConfig { social_ranks: 4, ..Default::default() };
        let r = run_eca(&ds, &cfg, 8).unwrap();
        assert!(r.cluster_count() <= r.initial_clusters);
        assert!(r.cluster_count() >= 1);
    }

    #[test]
    fn assignments_consistent_with_centroids_count() {
        let (ds, _) = generate_blobs(4, 50, 2, 0.4, 10.0, 21).unwrap();
        let r = run_eca(&ds, &EcaConfig::default(), 2).unwrap();
        let distinct: std::collections::BTreeSet<_> = r.assignments.iter().collect();
        assert_eq!(distinct.len(), r.cluster_count());
        assert_eq!(r.fitness_trace.len(), r.iterations + 1);
        assert_eq!(r.sse_trace.len(), r.fitness_trace.len());
    }
}
