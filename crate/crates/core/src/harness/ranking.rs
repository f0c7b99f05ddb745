use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::RunStatistics;
use crate::data_io::{DatasetMeta, FeatureTag};
use crate::{Error, Result};

/// A per-dataset ranking key. Lower is better for all of them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankCriterion {
    Ci,
    Sse,
    WallTime,
}

pub const DEFAULT_RANK_KEY: [RankCriterion; 3] =
    [RankCriterion::Ci, RankCriterion::Sse, RankCriterion::WallTime];

impl std::str::FromStr for RankCriterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "ci" => Ok(RankCriterion::Ci),
            "sse" => Ok(RankCriterion::Sse),
            "time" | "wall" | "wall_time" => Ok(RankCriterion::WallTime),
            other => Err(Error::Config(format!("unknown ranking criterion '{other}'"))),
        }
    }
}

/// Mean outcome of one algorithm on one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub algorithm: String,
    pub dataset: String,
    /// NaN when no run produced a centroid index.
    pub mean_ci: f64,
    pub mean_sse: f64,
    pub mean_wall: f64,
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

impl GridCell {
    pub fn from_stats(stats: &RunStatistics) -> Self {
        Self {
            algorithm: stats.algorithm.to_string(),
            dataset: stats.dataset.clone(),
            mean_ci: mean(stats.reports().filter_map(|r| r.ci.map(|c| c as f64))),
            mean_sse: mean(stats.reports().map(|r| r.sse)),
            mean_wall: mean(stats.reports().map(|r| r.wall_seconds)),
        }
    }

    fn value(&self, c: RankCriterion) -> f64 {
        match c {
            RankCriterion::Ci => self.mean_ci,
            RankCriterion::Sse => self.mean_sse,
            RankCriterion::WallTime => self.mean_wall,
        }
    }
}

/// NaN sorts after every number and equal to itself.
fn cmp_lower_better(a: f64, b: f64) -> Ordering {
    a.partial_cmp(&b).unwrap_or_else(|| a.is_nan().cmp(&b.is_nan()))
}

/// Ranks of `M` algorithms: 1 is best, tied groups share their average rank.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingTable {
    pub algorithms: Vec<String>,
    pub dataset_ranks: BTreeMap<String, Vec<f64>>,
    /// Only features carried by at least one dataset appear.
    pub feature_ranks: BTreeMap<FeatureTag, Vec<f64>>,
    pub overall: Vec<f64>,
}

impl RankingTable {
    pub fn overall_of(&self, algorithm: &str) -> Option<f64> {
        let i = self.algorithms.iter().position(|a| a == algorithm)?;
        Some(self.overall[i])
    }
}

fn rank_cells(cells: &[&GridCell], key: &[RankCriterion]) -> Vec<f64> {
    let compare = |a: &GridCell, b: &GridCell| {
        key.iter()
            .map(|&c| cmp_lower_better(a.value(c), b.value(c)))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    };
    let mut order: Vec<usize> = (0..cells.len()).collect();
    order.sort_by(|&a, &b| compare(cells[a], cells[b]));
    let mut ranks = vec![0.0; cells.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && compare(cells[order[start]], cells[order[end]]).is_eq() {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end
        let shared = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = shared;
        }
        start = end;
    }
    ranks
}

/// Ranks algorithms on every dataset of `meta`, averages the ranks over the
/// datasets carrying each feature, then averages the features.
///
/// Every (algorithm, dataset) pair must have exactly one cell and every
/// dataset with cells must have metadata, otherwise the missing entries are
/// listed in [`Error::IncompleteGrid`].
pub fn rank_algorithms(
    cells: &[GridCell],
    meta: &BTreeMap<String, DatasetMeta>,
    key: &[RankCriterion],
) -> Result<RankingTable> {
    if key.is_empty() {
        return Err(Error::Config("ranking key is empty".into()));
    }
    let mut algorithms: Vec<String> = Vec::new();
    for c in cells {
        if !algorithms.contains(&c.algorithm) {
            algorithms.push(c.algorithm.clone());
        }
    }
    let mut grid: BTreeMap<(&str, &str), Vec<&GridCell>> = BTreeMap::new();
    for c in cells {
        grid.entry((c.dataset.as_str(), c.algorithm.as_str())).or_default().push(c);
    }
    let mut missing = Vec::new();
    for c in cells {
        if !meta.contains_key(&c.dataset) {
            missing.push(format!("metadata for {}", c.dataset));
        }
    }
    for dataset in meta.keys() {
        for alg in &algorithms {
            match grid.get(&(dataset.as_str(), alg.as_str())).map(Vec::len) {
                Some(1) => {}
                Some(n) => missing.push(format!("{alg} on {dataset} has {n} cells")),
                None => missing.push(format!("{alg} on {dataset}")),
            }
        }
    }
    missing.dedup();
    if !missing.is_empty() || algorithms.is_empty() {
        if algorithms.is_empty() {
            missing.push("no cells".into());
        }
        return Err(Error::IncompleteGrid(missing));
    }

    let dataset_ranks: BTreeMap<String, Vec<f64>> = meta
        .keys()
        .map(|dataset| {
            let row: Vec<&GridCell> =
                algorithms.iter().map(|a| grid[&(dataset.as_str(), a.as_str())][0]).collect();
            (dataset.clone(), rank_cells(&row, key))
        })
        .collect();

    let m = algorithms.len();
    let mut feature_ranks = BTreeMap::new();
    for tag in FeatureTag::ALL {
        let carriers: Vec<&Vec<f64>> = meta
            .iter()
            .filter(|(_, md)| md.tags.contains(&tag))
            .map(|(name, _)| &dataset_ranks[name])
            .collect();
        if carriers.is_empty() {
            continue;
        }
        let avg = (0..m)
            .map(|a| carriers.iter().map(|r| r[a]).sum::<f64>() / carriers.len() as f64)
            .collect();
        feature_ranks.insert(tag, avg);
    }
    let overall = (0..m)
        .map(|a| {
            if feature_ranks.is_empty() {
                f64::NAN
            } else {
                feature_ranks.values().map(|r: &Vec<f64>| r[a]).sum::<f64>() / feature_ranks.len() as f64
            }
        })
        .collect();

    Ok(RankingTable { algorithms, dataset_ranks, feature_ranks, overall })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn cell(alg: &str, ds: &str, ci: f64, sse: f64, wall: f64) -> GridCell {
        GridCell { algorithm: alg.into(), dataset: ds.into(), mean_ci: ci, mean_sse: sse, mean_wall: wall }
    }

    fn meta(tags: &[FeatureTag]) -> DatasetMeta {
        DatasetMeta { tags: tags.iter().copied().collect::<BTreeSet<_>>(), declared_clusters: 2, declared_n: 10 }
    }

    #[test]
    fn lexicographic_key_and_ties() {
        let a = cell("a", "x", 0.0, 5.0, 1.0);
        let b = cell("b", "x", 0.0, 5.0, 1.0);
        let c = cell("c", "x", 0.0, 4.0, 9.0);
        let d = cell("d", "x", 1.0, 0.0, 0.0);
        let ranks = rank_cells(&[&a, &b, &c, &d], &DEFAULT_RANK_KEY);
        assert_eq!(ranks, vec![2.5, 2.5, 1.0, 4.0]);
        let by_time = rank_cells(&[&a, &b, &c, &d], &[RankCriterion::WallTime]);
        assert_eq!(by_time, vec![2.5, 2.5, 4.0, 1.0]);
    }

    #[test]
    fn nan_ranks_last() {
        let a = cell("a", "x", f64::NAN, 1.0, 1.0);
        let b = cell("b", "x", 3.0, 1.0, 1.0);
        assert_eq!(rank_cells(&[&a, &b], &DEFAULT_RANK_KEY), vec![2.0, 1.0]);
    }

    #[test]
    fn feature_averages() {
        let mut md = BTreeMap::new();
        md.insert("x".to_string(), meta(&[FeatureTag::Overlap, FeatureTag::Shape]));
        md.insert("y".to_string(), meta(&[FeatureTag::Overlap]));
        let cells = vec![
            cell("a", "x", 0.0, 1.0, 0.0),
            cell("b", "x", 1.0, 1.0, 0.0),
            cell("a", "y", 2.0, 1.0, 0.0),
            cell("b", "y", 1.0, 1.0, 0.0),
        ];
        let t = rank_algorithms(&cells, &md, &DEFAULT_RANK_KEY).unwrap();
        assert_eq!(t.feature_ranks[&FeatureTag::Overlap], vec![1.5, 1.5]);
        assert_eq!(t.feature_ranks[&FeatureTag::Shape], vec![1.0, 2.0]);
        assert_eq!(t.feature_ranks.len(), 2);
        assert_eq!(t.overall, vec![1.25, 1.75]);
    }

    #[test]
    fn incomplete_grid_lists_gaps() {
        let mut md = BTreeMap::new();
        md.insert("x".to_string(), meta(&[FeatureTag::Overlap]));
        md.insert("y".to_string(), meta(&[FeatureTag::Overlap]));
        let cells = vec![cell("a", "x", 0.0, 1.0, 0.0), cell("b", "x", 0.0, 1.0, 0.0), cell("a", "y", 0.0, 1.0, 0.0)];
        match rank_algorithms(&cells, &md, &DEFAULT_RANK_KEY) {
            Err(Error::IncompleteGrid(gaps)) => assert_eq!(gaps, vec!["b on y".to_string()]),
            other => panic!("expected incomplete grid, got {other:?}"),
        }
    }
}
