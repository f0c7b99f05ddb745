//! Historical sampling, elite selection, mutation, crossover, mut-over and
//! reassignment.

use serde::{Deserialize, Serialize};

use super::{CrossoverType, EcaConfig, EcaState};
use crate::data_io::{Bounds, Dataset};
use crate::geometry::{euclidean, Centroids};
use crate::stats::{self, levy_step_with_sigma, uniform_in, LevyParams, RandomStream};
use crate::Result;

/// `oldC`: per cluster and dimension, a uniform draw between the members'
/// first and third quartiles.
pub fn sample_historical(state: &EcaState, dataset: &Dataset, rng: &mut RandomStream) -> Result<Centroids> {
    let d = dataset.d();
    let mut out = Centroids::with_capacity(d, state.k());
    let mut column = Vec::new();
    let mut row = vec![0.0; d];
    for cluster in state.clusters() {
        for (j, slot) in row.iter_mut().enumerate() {
            column.clear();
            column.extend(cluster.members.iter().map(|&i| dataset.row(i)[j]));
            column.sort_by(f64::total_cmp);
            let q = stats::quartiles_sorted(&column);
            *slot = uniform_in(q.q1, q.q3, rng)?;
        }
        out.push(&row);
    }
    Ok(out)
}

/// Intra and inter distances of one cluster measured against a candidate
/// centroid instead of the member mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionalDistance {
    /// Mean distance from the cluster's members to the candidate.
    pub intra: f64,
    /// Mean distance from the candidate to every non-member (0 if none).
    pub inter: f64,
}

pub fn conditional_distances(state: &EcaState, dataset: &Dataset, candidate: &Centroids) -> Vec<ConditionalDistance> {
    let n = dataset.n();
    state
        .clusters()
        .iter()
        .zip(candidate.rows())
        .map(|(cluster, c)| {
            let total: f64 = dataset.rows().map(|x| euclidean(x, c)).sum();
            let own: f64 = cluster.members.iter().map(|&i| euclidean(dataset.row(i), c)).sum();
            let m = cluster.members.len();
            ConditionalDistance {
                intra: own / m as f64,
                inter: if n > m { (total - own) / (n - m) as f64 } else { 0.0 },
            }
        })
        .collect()
}

/// Keeps `C_i` when its conditional intra distance is strictly smaller than
/// that of `oldC_i`, otherwise `oldC_i`. The flags record where `C` won.
pub fn select_elite(
    current: &Centroids,
    historical: &Centroids,
    current_d: &[ConditionalDistance],
    historical_d: &[ConditionalDistance],
) -> (Centroids, Vec<bool>) {
    let mut elite = Centroids::with_capacity(current.dim(), current.k());
    let mut wins = Vec::with_capacity(current.k());
    for i in 0..current.k() {
        let keep = current_d[i].intra < historical_d[i].intra;
        elite.push(if keep { current.row(i) } else { historical.row(i) });
        wins.push(keep);
    }
    (elite, wins)
}

/// `Mutant_ij = elite_ij + F_ij · HI_ij` with `HI = oldC − C` where `C` won
/// the elite selection and `C − oldC` otherwise. `step(j)` supplies `F_ij`.
pub fn mutate_with(
    elite: &Centroids,
    current: &Centroids,
    historical: &Centroids,
    current_wins: &[bool],
    mut step: impl FnMut(usize) -> f64,
) -> Centroids {
    let d = elite.dim();
    let mut out = Centroids::with_capacity(d, elite.k());
    let mut row = vec![0.0; d];
    for i in 0..elite.k() {
        let (c, old) = (current.row(i), historical.row(i));
        for j in 0..d {
            let hi = if current_wins[i] { old[j] - c[j] } else { c[j] - old[j] };
            row[j] = elite.row(i)[j] + step(j) * hi;
        }
        out.push(&row);
    }
    out
}

/// [`mutate_with`] driven by Levy steps capped at `levy_cap_fraction` of each
/// dimension's data range. Dimensions with zero range never move.
pub fn mutate(
    elite: &Centroids,
    current: &Centroids,
    historical: &Centroids,
    current_wins: &[bool],
    config: &EcaConfig,
    bounds: &Bounds,
    rng: &mut RandomStream,
) -> Result<Centroids> {
    let base = LevyParams { alpha: config.alpha, scale: 1.0, cap: 1.0 };
    base.validate()?;
    let sigma = base.sigma_u();
    let caps: Vec<f64> = (0..bounds.dim()).map(|j| config.levy_cap_fraction * bounds.range(j)).collect();
    Ok(mutate_with(elite, current, historical, current_wins, |j| {
        if caps[j] > 0.0 {
            levy_step_with_sigma(&LevyParams { cap: caps[j], ..base }, sigma, rng)
        } else {
            0.0
        }
    }))
}

/// Uniform crossover: each component comes from `parent` or `historical`
/// with a fair coin.
pub fn crossover(parent: &Centroids, historical: &Centroids, config: &EcaConfig, rng: &mut RandomStream) -> Result<Centroids> {
    match config.crossover_type {
        CrossoverType::Uniform => {}
    }
    let mut out = Centroids::with_capacity(parent.dim(), parent.k());
    let mut row = vec![0.0; parent.dim()];
    for i in 0..parent.k() {
        for (j, slot) in row.iter_mut().enumerate() {
            *slot = if rng.coin() { parent.row(i)[j] } else { historical.row(i)[j] };
        }
        out.push(&row);
    }
    Ok(out)
}

/// Per cluster, the mutant if `oldC` had the larger conditional inter
/// distance, otherwise the crossover child; then boundary control.
pub fn mut_over(
    mutant: &Centroids,
    crossed: &Centroids,
    current_d: &[ConditionalDistance],
    historical_d: &[ConditionalDistance],
    bounds: &Bounds,
    rng: &mut RandomStream,
) -> Result<Centroids> {
    let mut out = Centroids::with_capacity(mutant.dim(), mutant.k());
    for i in 0..mutant.k() {
        if historical_d[i].inter > current_d[i].inter {
            out.push(mutant.row(i));
        } else {
            out.push(crossed.row(i));
        }
    }
    boundary_control(&mut out, bounds, rng)?;
    Ok(out)
}

/// Redraws every component outside `[min_j, max_j]` uniformly inside it.
pub fn boundary_control(centroids: &mut Centroids, bounds: &Bounds, rng: &mut RandomStream) -> Result<()> {
    for i in 0..centroids.k() {
        for (x, &(lo, hi)) in centroids.row_mut(i).iter_mut().zip(&bounds.0) {
            if !(lo <= *x && *x <= hi) {
                *x = uniform_in(lo, hi, rng)?;
            }
        }
    }
    Ok(())
}

/// Nearest-centroid labels, lowest id on ties.
pub fn reassign(dataset: &Dataset, centroids: &Centroids) -> Vec<usize> {
    dataset.rows().map(|x| centroids.nearest(x).0).collect()
}
