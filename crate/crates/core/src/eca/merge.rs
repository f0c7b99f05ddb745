//! Diversity-based merging of touching clusters and absorption of clusters
//! below the density threshold.

use super::{quartile_centroid, Cluster, EcaConfig, EcaState};
use crate::data_io::Dataset;
use crate::geometry::{euclidean, squared_distance};
use crate::metrics::{intra_cluster, pair_distance_sum};

/// Smallest point-to-point distance between two non-empty sets.
pub fn min_distance(a: &[&[f64]], b: &[&[f64]]) -> f64 {
    let mut best = f64::INFINITY;
    for x in a {
        for y in b {
            best = best.min(squared_distance(x, y));
        }
    }
    best.sqrt()
}

/// Merge diversity `σ = min(D_min − R_a, D_min − R_b)`, with `D_min` the
/// closest cross pair and `R` the average intra-cluster distance. The
/// clusters should merge when `σ ≤ 0`.
pub fn merge_diversity(a: &[&[f64]], b: &[&[f64]]) -> crate::Result<f64> {
    let dmin = min_distance(a, b);
    Ok((dmin - intra_cluster(a)?).min(dmin - intra_cluster(b)?))
}

/// (`D_min`, sum of all cross distances) in one pass.
fn cross_stats(dataset: &Dataset, a: &[usize], b: &[usize]) -> (f64, f64) {
    let mut min_sq = f64::INFINITY;
    let mut sum = 0.0;
    for &i in a {
        let x = dataset.row(i);
        for &j in b {
            let sq = squared_distance(x, dataset.row(j));
            min_sq = min_sq.min(sq);
            sum += sq.sqrt();
        }
    }
    (min_sq.sqrt(), sum)
}

fn average_intra(pair_sum: f64, size: usize) -> f64 {
    if size < 2 {
        0.0
    } else {
        2.0 * pair_sum / (size * (size - 1)) as f64
    }
}

fn merge_sorted(a: &mut Vec<usize>, b: Vec<usize>) {
    a.extend(b);
    a.sort_unstable();
}

/// Absorbs clusters whose share of the points is below `threshold` into
/// their nearest neighbour by centroid distance. The lowest sparse id is
/// handled first; ties on distance go to the lowest id.
pub(crate) fn absorb_sparse(clusters: &mut Vec<Cluster>, dataset: &Dataset, threshold: f64) {
    let n = dataset.n() as f64;
    while clusters.len() > 1 {
        let Some(i) = clusters
            .iter()
            .position(|c| (c.members.len() as f64) / n < threshold)
        else {
            break;
        };
        let mut target = (usize::MAX, f64::INFINITY);
        for (j, other) in clusters.iter().enumerate() {
            if j == i {
                continue;
            }
            let dist = euclidean(&clusters[i].centroid, &other.centroid);
            if dist < target.1 {
                target = (j, dist);
            }
        }
        let target = target.0;
        let moved = std::mem::take(&mut clusters[i].members);
        merge_sorted(&mut clusters[target].members, moved);
        clusters[target].centroid = quartile_centroid(dataset, &clusters[target].members);
        clusters.remove(i);
    }
}

/// Single ascending pass over cluster pairs `(i, j)`, `i < j`, merging `j`
/// into `i` whenever their diversity is `≤ 0`. Later pairs see the merged
/// clusters. Sparse clusters are then absorbed and every centroid is reset
/// to the members' interquartile mean.
pub fn merge_clusters(state: &mut EcaState, dataset: &Dataset, config: &EcaConfig) {
    let clusters = state.clusters_mut();
    let k = clusters.len();
    let mut pair_sums: Vec<f64> = clusters
        .iter()
        .map(|c| {
            let rows: Vec<&[f64]> = c.members.iter().map(|&i| dataset.row(i)).collect();
            pair_distance_sum(&rows)
        })
        .collect();
    let mut alive = vec![true; k];
    let mut touched = vec![false; k];
    for i in 0..k {
        if !alive[i] {
            continue;
        }
        for j in i + 1..k {
            if !alive[j] {
                continue;
            }
            let (dmin, cross) = cross_stats(dataset, &clusters[i].members, &clusters[j].members);
            let ri = average_intra(pair_sums[i], clusters[i].members.len());
            let rj = average_intra(pair_sums[j], clusters[j].members.len());
            let sigma = (dmin - ri).min(dmin - rj);
            if sigma <= 0.0 {
                let moved = std::mem::take(&mut clusters[j].members);
                merge_sorted(&mut clusters[i].members, moved);
                pair_sums[i] += pair_sums[j] + cross;
                alive[j] = false;
                touched[i] = true;
            }
        }
    }
    let mut idx = 0;
    clusters.retain(|_| {
        idx += 1;
        alive[idx - 1]
    });
    let touched: Vec<bool> = touched.into_iter().zip(&alive).filter(|(_, &a)| a).map(|(t, _)| t).collect();
    for (c, t) in clusters.iter_mut().zip(touched) {
        if t {
            c.centroid = quartile_centroid(dataset, &c.members);
        }
    }
    absorb_sparse(clusters, dataset, config.density_threshold);
    for c in clusters.iter_mut() {
        c.centroid = quartile_centroid(dataset, &c.members);
    }
    state.sync_assignments();
}
