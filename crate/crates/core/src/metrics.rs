//! Internal (intra/inter cluster distance, SSE, nMSE, ε-ratio) and external
//! (centroid index, centroid similarity index, NMI) clustering measures.

use serde::{Deserialize, Serialize};

use crate::data_io::{Dataset, GroundTruth};
use crate::geometry::{euclidean, squared_distance, Centroids};
use crate::{Error, Result};

/// Optimal SSE assumed by the ε-ratio unless an experiment overrides it.
pub const DEFAULT_SSE_OPT: f64 = 0.001;

pub fn mean_point(points: &[&[f64]]) -> Result<Vec<f64>> {
    let first = points
        .first()
        .ok_or_else(|| Error::Domain("mean of an empty point set".into()))?;
    let mut mean = vec![0.0; first.len()];
    for p in points {
        for (m, v) in mean.iter_mut().zip(p.iter()) {
            *m += v;
        }
    }
    let n = points.len() as f64;
    mean.iter_mut().for_each(|m| *m /= n);
    Ok(mean)
}

/// Sum of Euclidean distances over unordered pairs of `points`.
pub(crate) fn pair_distance_sum(points: &[&[f64]]) -> f64 {
    let mut sum = 0.0;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            sum += euclidean(a, b);
        }
    }
    sum
}

/// Average distance over ordered pairs of distinct members; 0 for a singleton.
pub fn intra_cluster(members: &[&[f64]]) -> Result<f64> {
    match members.len() {
        0 => Err(Error::Domain("intra-cluster distance of an empty set".into())),
        1 => Ok(0.0),
        n => Ok(2.0 * pair_distance_sum(members) / (n * (n - 1)) as f64),
    }
}

/// Distance of each cluster's points to the other cluster's mean, averaged
/// over both clusters' points.
pub fn inter_cluster(a: &[&[f64]], b: &[&[f64]]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Domain("inter-cluster distance with an empty set".into()));
    }
    let va = mean_point(a)?;
    let vb = mean_point(b)?;
    let to_b: f64 = a.iter().map(|x| euclidean(x, &vb)).sum();
    let to_a: f64 = b.iter().map(|y| euclidean(y, &va)).sum();
    Ok((to_b + to_a) / (a.len() + b.len()) as f64)
}

/// Sum of squared distances from each point to its nearest centroid,
/// independent of any assignment.
pub fn sse(dataset: &Dataset, centroids: &Centroids) -> Result<f64> {
    if centroids.is_empty() {
        return Err(Error::Domain("SSE needs at least one centroid".into()));
    }
    check_dim(dataset.d(), centroids.dim())?;
    Ok(dataset.rows().map(|x| centroids.nearest(x).1).sum())
}

/// Diagnostic SSE against the labelled centroid instead of the nearest one.
pub fn sse_by_labels(dataset: &Dataset, labels: &[usize], centroids: &Centroids) -> Result<f64> {
    if centroids.is_empty() {
        return Err(Error::Domain("SSE needs at least one centroid".into()));
    }
    check_dim(dataset.d(), centroids.dim())?;
    if labels.len() != dataset.n() {
        return Err(Error::Domain("label count differs from point count".into()));
    }
    labels
        .iter()
        .zip(dataset.rows())
        .map(|(&l, x)| {
            if l >= centroids.k() {
                Err(Error::Domain(format!("label {l} has no centroid")))
            } else {
                Ok(squared_distance(x, centroids.row(l)))
            }
        })
        .sum()
}

pub fn nmse(sse_value: f64, n: usize, d: usize) -> Result<f64> {
    if n == 0 || d == 0 {
        return Err(Error::Domain("nMSE needs n·d > 0".into()));
    }
    Ok(sse_value / (n * d) as f64)
}

pub fn epsilon_ratio(sse_value: f64, sse_opt: f64) -> Result<f64> {
    if !(sse_opt > 0.0) {
        return Err(Error::Domain(format!("SSE_opt must be positive, got {sse_opt}")));
    }
    Ok((sse_value - sse_opt) / sse_opt)
}

fn check_dim(a: usize, b: usize) -> Result<()> {
    if a != b {
        Err(Error::Domain(format!("dimension mismatch: {a} vs {b}")))
    } else {
        Ok(())
    }
}

/// Labels with contiguous ids `0..k`, each used at least once.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    labels: Vec<usize>,
    k: usize,
    centroids: Option<Centroids>,
}

impl Partition {
    pub fn new(labels: Vec<usize>, centroids: Option<Centroids>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::Domain("empty partition".into()));
        }
        let k = labels.iter().max().map_or(0, |m| m + 1);
        let mut used = vec![false; k];
        labels.iter().for_each(|&l| used[l] = true);
        if let Some(gap) = used.iter().position(|u| !u) {
            return Err(Error::Domain(format!("cluster id {gap} is unused")));
        }
        if let Some(c) = &centroids {
            if c.k() != k {
                return Err(Error::Domain(format!("{} centroids for {k} clusters", c.k())));
            }
        }
        Ok(Self { labels, k, centroids })
    }

    /// Relabels arbitrary ids to contiguous ones in order of first use.
    pub fn from_arbitrary(labels: &[usize]) -> Result<Self> {
        let mut map = std::collections::HashMap::new();
        let relabelled = labels
            .iter()
            .map(|l| {
                let next = map.len();
                *map.entry(*l).or_insert(next)
            })
            .collect();
        Self::new(relabelled, None)
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn centroids(&self) -> Option<&Centroids> {
        self.centroids.as_ref()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        self.labels.iter().for_each(|&l| sizes[l] += 1);
        sizes
    }
}

/// Two directional cluster matchings between a solution and a reference.
///
/// `forward[i]` is the reference cluster matched to solution cluster `i`;
/// `backward[j]` the solution cluster matched to reference cluster `j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matching {
    pub forward: Vec<usize>,
    pub backward: Vec<usize>,
}

impl Matching {
    /// Nearest-centroid matching, lowest id on ties.
    pub fn from_centroids(solution: &Centroids, truth: &Centroids) -> Result<Self> {
        if solution.is_empty() || truth.is_empty() {
            return Err(Error::Domain("matching needs non-empty centroid sets".into()));
        }
        check_dim(solution.dim(), truth.dim())?;
        Ok(Self {
            forward: solution.rows().map(|c| truth.nearest(c).0).collect(),
            backward: truth.rows().map(|c| solution.nearest(c).0).collect(),
        })
    }

    /// Maximum-overlap matching from labels alone, lowest id on ties.
    pub fn from_overlap(solution: &Partition, truth: &Partition) -> Result<Self> {
        let table = contingency(solution, truth)?;
        let argmax = |counts: &mut dyn Iterator<Item = usize>| {
            let mut best = (0, 0);
            for (j, c) in counts.enumerate() {
                if c > best.1 {
                    best = (j, c);
                }
            }
            best.0
        };
        let forward = (0..solution.k())
            .map(|i| argmax(&mut table[i].iter().copied()))
            .collect();
        let backward = (0..truth.k())
            .map(|j| argmax(&mut table.iter().map(|row| row[j])))
            .collect();
        Ok(Self { forward, backward })
    }
}

fn orphans(mapping: &[usize], targets: usize) -> usize {
    let mut hit = vec![false; targets];
    mapping.iter().for_each(|&t| hit[t] = true);
    hit.iter().filter(|h| !**h).count()
}

/// Centroid index: the larger of the two directional orphan counts, where an
/// orphan is a target centroid no source centroid maps to.
pub fn centroid_index(solution: &Centroids, truth: &Centroids) -> Result<usize> {
    let m = Matching::from_centroids(solution, truth)?;
    Ok(orphans(&m.forward, truth.k()).max(orphans(&m.backward, solution.k())))
}

fn contingency(a: &Partition, b: &Partition) -> Result<Vec<Vec<usize>>> {
    if a.n() != b.n() {
        return Err(Error::Domain(format!(
            "partitions differ in length: {} vs {}",
            a.n(),
            b.n()
        )));
    }
    let mut table = vec![vec![0usize; b.k()]; a.k()];
    for (&x, &y) in a.labels().iter().zip(b.labels()) {
        table[x][y] += 1;
    }
    Ok(table)
}

/// Centroid similarity index: shared points between matched clusters,
/// summed over both matching directions and divided by `2N`.
pub fn csi(solution: &Partition, truth: &Partition, matching: &Matching) -> Result<f64> {
    let table = contingency(solution, truth)?;
    if matching.forward.len() != solution.k() || matching.backward.len() != truth.k() {
        return Err(Error::Domain("matching does not fit the partitions".into()));
    }
    let forward: usize = matching
        .forward
        .iter()
        .enumerate()
        .map(|(i, &j)| table[i][j])
        .sum();
    let backward: usize = matching
        .backward
        .iter()
        .enumerate()
        .map(|(j, &i)| table[i][j])
        .sum();
    Ok((forward + backward) as f64 / (2 * solution.n()) as f64)
}

fn entropy(counts: &[usize], n: f64) -> f64 {
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Normalised mutual information `2·I(A;B) / (H(A) + H(B))`, in nats.
/// Two single-cluster partitions score 1.
pub fn nmi(a: &Partition, b: &Partition) -> Result<f64> {
    let table = contingency(a, b)?;
    let n = a.n() as f64;
    let (sa, sb) = (a.sizes(), b.sizes());
    let (ha, hb) = (entropy(&sa, n), entropy(&sb, n));
    if a.k() == 1 && b.k() == 1 {
        return Ok(1.0);
    }
    if ha + hb == 0.0 {
        return Ok(1.0);
    }
    let mut mi = 0.0;
    for (i, row) in table.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            if c > 0 {
                let c = c as f64;
                mi += c / n * (c * n / (sa[i] as f64 * sb[j] as f64)).ln();
            }
        }
    }
    Ok((2.0 * mi / (ha + hb)).clamp(0.0, 1.0))
}

/// Members of each cluster as row slices.
pub(crate) fn group_rows<'a>(dataset: &'a Dataset, labels: &[usize], k: usize) -> Vec<Vec<&'a [f64]>> {
    let mut groups = vec![Vec::new(); k];
    for (&l, row) in labels.iter().zip(dataset.rows()) {
        groups[l].push(row);
    }
    groups
}

/// Mean intra-cluster distance over clusters and mean inter-cluster
/// distance over unordered cluster pairs (0 for a single cluster).
pub fn cluster_spread(dataset: &Dataset, partition: &Partition) -> Result<(f64, f64)> {
    if partition.n() != dataset.n() {
        return Err(Error::Domain("partition does not cover the dataset".into()));
    }
    let groups = group_rows(dataset, partition.labels(), partition.k());
    let k = groups.len();
    let intra = groups
        .iter()
        .map(|g| intra_cluster(g))
        .sum::<Result<f64>>()?
        / k as f64;
    if k < 2 {
        return Ok((intra, 0.0));
    }
    let means = groups
        .iter()
        .map(|g| mean_point(g))
        .collect::<Result<Vec<_>>>()?;
    // to_mean[a][b] = Σ_{x∈a} d(x, v_b)
    let mut to_mean = vec![vec![0.0; k]; k];
    for (a, group) in groups.iter().enumerate() {
        for x in group {
            for (b, v) in means.iter().enumerate() {
                if a != b {
                    to_mean[a][b] += euclidean(x, v);
                }
            }
        }
    }
    let mut inter = 0.0;
    for a in 0..k {
        for b in a + 1..k {
            inter += (to_mean[a][b] + to_mean[b][a]) / (groups[a].len() + groups[b].len()) as f64;
        }
    }
    Ok((intra, inter / (k * (k - 1) / 2) as f64))
}

/// Per-run bundle of every measure. External measures are present only when
/// ground truth was supplied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub sse: f64,
    pub nmse: f64,
    pub epsilon_ratio: f64,
    pub ci: Option<usize>,
    pub csi: Option<f64>,
    pub nmi: Option<f64>,
    pub avg_intra: f64,
    pub avg_inter: f64,
    pub wall_seconds: f64,
}

/// Scores a clustering. Without reference labels, the reference partition is
/// the nearest-ground-truth-centroid assignment of each point.
pub fn evaluate(
    dataset: &Dataset,
    centroids: &Centroids,
    labels: &[usize],
    truth: Option<&GroundTruth>,
    sse_opt: f64,
    wall_seconds: f64,
) -> Result<MetricReport> {
    let partition = Partition::new(labels.to_vec(), Some(centroids.clone()))?;
    let sse_value = sse(dataset, centroids)?;
    let (avg_intra, avg_inter) = cluster_spread(dataset, &partition)?;
    let (ci, csi_value, nmi_value) = match truth {
        None => (None, None, None),
        Some(truth) => {
            truth.check_against(dataset)?;
            let truth_labels = truth.labels.clone().unwrap_or_else(|| {
                dataset.rows().map(|x| truth.centroids.nearest(x).0).collect()
            });
            let ci = centroid_index(centroids, &truth.centroids)?;
            let (reference, matching) = match Partition::new(truth_labels.clone(), None) {
                Ok(reference) if reference.k() == truth.k() => {
                    let matching = Matching::from_centroids(centroids, &truth.centroids)?;
                    (reference, matching)
                }
                _ => {
                    // some reference clusters are empty: fall back to label overlap
                    let reference = Partition::from_arbitrary(&truth_labels)?;
                    let matching = Matching::from_overlap(&partition, &reference)?;
                    (reference, matching)
                }
            };
            let csi_value = csi(&partition, &reference, &matching)?;
            (Some(ci), Some(csi_value), Some(nmi(&partition, &reference)?))
        }
    };
    Ok(MetricReport {
        sse: sse_value,
        nmse: nmse(sse_value, dataset.n(), dataset.d())?,
        epsilon_ratio: epsilon_ratio(sse_value, sse_opt)?,
        ci,
        csi: csi_value,
        nmi: nmi_value,
        avg_intra,
        avg_inter,
        wall_seconds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn refs(points: &[Vec<f64>]) -> Vec<&[f64]> {
        points.iter().map(Vec::as_slice).collect()
    }

    fn refs_owned(points: &[[f64; 2]]) -> Vec<Vec<f64>> {
        points.iter().map(|p| p.to_vec()).collect()
    }

    #[test]
    fn intra_examples() {
        let pair = vec![vec![0.0, 0.0], vec![3.0, 4.0]];
        assert_eq!(intra_cluster(&refs(&pair)).unwrap(), 5.0);
        assert_eq!(intra_cluster(&refs(&[vec![1.0, 1.0]])).unwrap(), 0.0);
        let line = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![2.0, 0.0]];
        assert!((intra_cluster(&refs(&line)).unwrap() - 4.0 / 3.0).abs() < 1e-15);
        assert!(intra_cluster(&[]).is_err());
    }

    #[test]
    fn inter_examples() {
        let (a, b) = (vec![vec![0.0]], vec![vec![2.0]]);
        assert_eq!(inter_cluster(&refs(&a), &refs(&b)).unwrap(), 2.0);
        let a = refs_owned(&[[-1.0, 0.0], [-3.0, 1.0]]);
        let b = refs_owned(&[[1.0, 0.0], [3.0, -1.0]]);
        let (a, b) = (refs(&a), refs(&b));
        assert_eq!(inter_cluster(&a, &b).unwrap(), inter_cluster(&b, &a).unwrap());
        assert!(inter_cluster(&a, &[]).is_err());
    }

    #[test]
    fn sse_family() {
        let ds = Dataset::from_rows("p", &[[0.0], [2.0]]).unwrap();
        let c = Centroids::from_rows(1, &[[1.0]]);
        assert_eq!(sse(&ds, &c).unwrap(), 2.0);
        let exact = Centroids::from_rows(1, &[[0.0], [2.0]]);
        assert_eq!(sse(&ds, &exact).unwrap(), 0.0);
        assert!(sse(&ds, &Centroids::new(1)).is_err());
        // label-based variant charges the labelled centroid
        assert_eq!(sse_by_labels(&ds, &[1, 1], &exact).unwrap(), 4.0);

        assert_eq!(nmse(2.0, 2, 1).unwrap(), 1.0);
        assert_eq!(nmse(0.0, 5, 5).unwrap(), 0.0);
        assert_eq!(nmse(12.0, 3, 2).unwrap(), 2.0);
        assert!(nmse(1.0, 0, 2).is_err());

        assert_eq!(epsilon_ratio(0.001, DEFAULT_SSE_OPT).unwrap(), 0.0);
        assert_eq!(epsilon_ratio(2.0, 0.001).unwrap(), (2.0 - 0.001) / 0.001);
        assert_eq!(epsilon_ratio(0.002, 0.001).unwrap(), 1.0);
        assert!(epsilon_ratio(1.0, 0.0).is_err());
    }

    #[test]
    fn centroid_index_examples() {
        let truth = Centroids::from_rows(2, &[[0.0, 0.0], [10.0, 10.0]]);
        assert_eq!(centroid_index(&truth, &truth).unwrap(), 0);
        let sol = Centroids::from_rows(2, &[[0.0, 0.0], [0.0, 1.0]]);
        assert_eq!(centroid_index(&sol, &truth).unwrap(), 1);
        let wrong_dim = Centroids::from_rows(1, &[[0.0]]);
        assert!(centroid_index(&wrong_dim, &truth).is_err());
    }

    #[test]
    fn csi_examples() {
        let truth = Partition::new(vec![0, 0, 1, 1], None).unwrap();
        let m = Matching::from_overlap(&truth, &truth).unwrap();
        assert_eq!(csi(&truth, &truth, &m).unwrap(), 1.0);

        let collapsed = Partition::new(vec![0, 0, 0, 0], None).unwrap();
        let m = Matching::from_overlap(&collapsed, &truth).unwrap();
        assert_eq!(csi(&collapsed, &truth, &m).unwrap(), 0.75);

        let relabelled = Partition::new(vec![1, 1, 0, 0], None).unwrap();
        let m = Matching::from_overlap(&relabelled, &truth).unwrap();
        assert_eq!(csi(&relabelled, &truth, &m).unwrap(), 1.0);

        let short = Partition::new(vec![0, 1], None).unwrap();
        assert!(csi(&short, &truth, &m).is_err());
    }

    #[test]
    fn nmi_examples() {
        let a = Partition::new(vec![0, 0, 1, 1, 2, 2], None).unwrap();
        assert!((nmi(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        let permuted = Partition::new(vec![2, 2, 0, 0, 1, 1], None).unwrap();
        assert!((nmi(&a, &permuted).unwrap() - 1.0).abs() < 1e-12);

        // checkerboard: rows and columns of a 10×10 grid are independent
        let rows_p = Partition::new((0..100).map(|i| (i / 10) % 2).collect(), None).unwrap();
        let cols_p = Partition::new((0..100).map(|i| (i % 10) % 2).collect(), None).unwrap();
        assert!(nmi(&rows_p, &cols_p).unwrap() <= 0.02);

        let single = Partition::new(vec![0; 6], None).unwrap();
        assert_eq!(nmi(&single, &single).unwrap(), 1.0);
        assert_eq!(nmi(&single, &a).unwrap(), 0.0);
        assert!(nmi(&single, &Partition::new(vec![0, 0], None).unwrap()).is_err());
    }

    #[test]
    fn partition_validation() {
        assert!(Partition::new(vec![0, 2], None).is_err());
        assert!(Partition::new(vec![], None).is_err());
        let p = Partition::from_arbitrary(&[7, 7, 3]).unwrap();
        assert_eq!(p.labels(), &[0, 0, 1]);
    }

    #[test]
    fn spread_of_single_cluster() {
        let ds = Dataset::from_rows("s", &[[0.0, 0.0], [3.0, 4.0]]).unwrap();
        let p = Partition::new(vec![0, 0], None).unwrap();
        assert_eq!(cluster_spread(&ds, &p).unwrap(), (5.0, 0.0));
    }

    #[test]
    fn evaluate_keeps_truth_ids() {
        // truth labels first use id 1, so relabelling by first use would swap them
        let ds = Dataset::from_rows("e", &[[10.0], [11.0], [0.0], [1.0]]).unwrap();
        let truth = GroundTruth::new(Centroids::from_rows(1, &[[0.5], [10.5]]), Some(vec![1, 1, 0, 0])).unwrap();
        let sol = Centroids::from_rows(1, &[[10.5], [0.5]]);
        let report = evaluate(&ds, &sol, &[0, 0, 1, 1], Some(&truth), DEFAULT_SSE_OPT, 0.0).unwrap();
        assert_eq!(report.ci, Some(0));
        assert_eq!(report.csi, Some(1.0));
        assert!((report.nmi.unwrap() - 1.0).abs() < 1e-12);
    }
}
