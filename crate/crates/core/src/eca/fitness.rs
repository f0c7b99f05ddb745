use serde::{Deserialize, Serialize};

use super::EcaState;
use crate::data_io::Dataset;
use crate::metrics::{cluster_spread, Partition};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitnessSample {
    pub avg_intra: f64,
    pub avg_inter: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fitness {
    pub sample: FitnessSample,
    pub converged: bool,
}

fn relative_change(old: f64, new: f64) -> f64 {
    let scale = old.abs().max(new.abs());
    if scale == 0.0 {
        0.0
    } else {
        (new - old).abs() / scale
    }
}

/// Average intra distance over clusters and average inter distance over
/// cluster pairs; converged once both moved by at most `tolerance`
/// (relative) since `previous`.
pub fn fitness(
    state: &EcaState,
    dataset: &Dataset,
    previous: Option<FitnessSample>,
    tolerance: f64,
) -> Result<Fitness> {
    let partition = Partition::new(state.assignments().to_vec(), None)?;
    let (avg_intra, avg_inter) = cluster_spread(dataset, &partition)?;
    let sample = FitnessSample { avg_intra, avg_inter };
    let converged = previous.is_some_and(|p| {
        relative_change(p.avg_intra, avg_intra) <= tolerance
            && relative_change(p.avg_inter, avg_inter) <= tolerance
    });
    Ok(Fitness { sample, converged })
}
