use std::collections::BTreeMap;

use super::merge::absorb_sparse;
use super::{quartile_centroid, Cluster, EcaConfig, EcaState};
use crate::data_io::Dataset;
use crate::stats::{percentile_ranks, RandomStream};
use crate::Result;

/// Percentile band of every gene: `min(⌊P_ij · S / 100⌋, S − 1)`, returned
/// row-major, together with each point's average percentile rank.
pub fn cell_bins(dataset: &Dataset, social_ranks: usize) -> (Vec<u32>, Vec<f64>) {
    let (n, d) = (dataset.n(), dataset.d());
    let s = social_ranks as f64;
    let mut bins = vec![0u32; n * d];
    let mut mean_ranks = vec![0.0; n];
    for j in 0..d {
        let ranks = percentile_ranks(&dataset.column(j));
        for (i, p) in ranks.into_iter().enumerate() {
            let band = ((p * s / 100.0).floor() as usize).min(social_ranks - 1);
            bins[i * d + j] = band as u32;
            mean_ranks[i] += p / d as f64;
        }
    }
    (bins, mean_ranks)
}

/// Percentile-grid initialisation.
///
/// Each point falls into the cell given by its per-dimension band tuple;
/// cells are ordered by their mixed-radix index (dimension 0 most
/// significant) and only occupied ones are materialised, so the `S^D` grid
/// is never allocated. Cells below the density threshold are absorbed into
/// their nearest neighbour, then centroids are per-dimension interquartile
/// means of the members.
pub fn initialize(dataset: &Dataset, config: &EcaConfig, _rng: &mut RandomStream) -> Result<EcaState> {
    config.validate()?;
    let d = dataset.d();
    let (bins, mean_ranks) = cell_bins(dataset, config.social_ranks);
    let mut cells: BTreeMap<&[u32], Vec<usize>> = BTreeMap::new();
    for i in 0..dataset.n() {
        cells.entry(&bins[i * d..(i + 1) * d]).or_default().push(i);
    }
    let occupied = cells.len();
    let mut clusters: Vec<Cluster> = cells
        .into_values()
        .map(|members| {
            let centroid = quartile_centroid(dataset, &members);
            Cluster {
                members,
                historical: centroid.clone(),
                centroid,
            }
        })
        .collect();
    absorb_sparse(&mut clusters, dataset, config.density_threshold);
    for c in clusters.iter_mut() {
        c.centroid = quartile_centroid(dataset, &c.members);
        c.historical.clone_from(&c.centroid);
    }
    Ok(EcaState::from_clusters(clusters, dataset.n(), occupied, mean_ranks))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data_io::generate_blobs;

    fn init(ds: &Dataset, s: usize) -> EcaState {
        let cfg = EcaConfig { social_ranks: s, ..Default::default() };
        initialize(ds, &cfg, &mut RandomStream::new(0)).unwrap()
    }

    #[test]
    fn corners_of_unit_square() {
        let ds = Dataset::from_rows("sq", &[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]).unwrap();
        let (bins, ranks) = cell_bins(&ds, 2);
        // column ranks are 25 for the zeros and 75 for the ones
        assert_eq!(bins, vec![0, 0, 1, 0, 0, 1, 1, 1]);
        assert_eq!(ranks, vec![25.0, 50.0, 50.0, 75.0]);
        let st = init(&ds, 2);
        assert_eq!(st.k(), 4);
        assert_eq!(st.initial_cells(), 4);
        // mixed-radix order: (0,0), (0,1), (1,0), (1,1)
        let c = st.centroids();
        assert_eq!(c.row(0), &[0.0, 0.0]);
        assert_eq!(c.row(1), &[0.0, 1.0]);
        assert_eq!(c.row(2), &[1.0, 0.0]);
        assert_eq!(c.row(3), &[1.0, 1.0]);
        assert_eq!(st.assignments(), &[0, 2, 1, 3]);
    }

    #[test]
    fn at_most_s_pow_d_cells() {
        let (ds, _) = generate_blobs(6, 30, 2, 1.0, 4.0, 12).unwrap();
        assert!(init(&ds, 2).initial_cells() <= 4);
        assert!(init(&ds, 3).initial_cells() <= 9);
    }

    #[test]
    fn identical_points_single_cell() {
        let ds = Dataset::from_rows("same", &vec![[4.0, 4.0, 4.0]; 7]).unwrap();
        let st = init(&ds, 5);
        assert_eq!(st.k(), 1);
        assert_eq!(st.centroids().row(0), &[4.0, 4.0, 4.0]);
    }

    #[test]
    fn sparse_cells_are_absorbed() {
        // ten bands of 100 points each; a 0.2 threshold forces absorption
        let rows: Vec<[f64; 1]> = (0..1000).map(|i| [i as f64 * 1e-3]).collect();
        let ds = Dataset::from_rows("line", &rows).unwrap();
        let cfg = EcaConfig { social_ranks: 10, density_threshold: 0.2, ..Default::default() };
        let st = initialize(&ds, &cfg, &mut RandomStream::new(0)).unwrap();
        assert_eq!(st.initial_cells(), 10);
        assert!(st.k() <= 5);
        assert!(st.clusters().iter().all(|c| c.members.len() >= 200));
        let total: usize = st.clusters().iter().map(|c| c.members.len()).sum();
        assert_eq!(total, 1000);
    }

    #[test]
    fn high_dimensional_grid_is_sparse() {
        // 2^64 cells in principle; only occupied ones exist
        let (ds, _) = generate_blobs(2, 64, 64, 1.0, 30.0, 5).unwrap();
        let st = init(&ds, 2);
        assert!(st.initial_cells() <= ds.n());
        assert!(st.k() >= 1);
        let total: usize = st.clusters().iter().map(|c| c.members.len()).sum();
        assert_eq!(total, ds.n());
    }
}
