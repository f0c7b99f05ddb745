//! Seeded randomness, percentile / quartile primitives and the Levy-flight
//! step generator consumed by the evolutionary operators.

use std::f64::consts::PI;

use statrs::function::gamma::gamma;

use crate::{Error, Result};

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Counter-based SplitMix64 stream.
///
/// The `i`-th draw (1-based) is `mix64(seed + i * 0x9e3779b97f4a7c15)` with
/// wrapping arithmetic, where `mix64` is the SplitMix64 finaliser
/// (`xor-shift 30, × 0xbf58476d1ce4e5b9, xor-shift 27, × 0x94d049bb133111eb,
/// xor-shift 31`). Seed 0 therefore yields `0xe220a8397b1dcdaf` first, the
/// reference SplitMix64 output. Derived quantities:
///
/// * `next_f64`: top 53 bits scaled by 2⁻⁵³, in `[0, 1)`.
/// * `below(n)`: `(next_u64 · n) >> 64`.
/// * `standard_normal`: Box–Muller cosine branch with `u1 = 1 − next_f64()`
///   and `u2 = next_f64()`; the sine branch is discarded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RandomStream {
    seed: u64,
    counter: u64,
}

impl RandomStream {
    pub fn new(seed: u64) -> Self {
        Self { seed, counter: 0 }
    }

    /// Independent stream for run `index` of an experiment seeded with
    /// `master`: seed = `mix64(master ^ mix64(index + 0x9e3779b97f4a7c15))`.
    /// Adding runs never changes the seeds of earlier runs.
    pub fn derive(master: u64, index: u64) -> Self {
        Self::new(derive_seed(master, index))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix64(self.seed.wrapping_add(self.counter.wrapping_mul(GOLDEN_GAMMA)))
    }

    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `[0, n)`. `n` must be positive.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "below(0)");
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }

    pub fn coin(&mut self) -> bool {
        self.next_u64() >> 63 == 1
    }

    pub fn standard_normal(&mut self) -> f64 {
        let u1 = 1.0 - self.next_f64();
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
    }
}

pub fn derive_seed(master: u64, index: u64) -> u64 {
    mix64(master ^ mix64(index.wrapping_add(GOLDEN_GAMMA)))
}

fn require_non_empty(values: &[f64], what: &str) -> Result<()> {
    if values.is_empty() {
        Err(Error::Domain(format!("{what} of an empty array")))
    } else {
        Ok(())
    }
}

/// Percentile rank of `x` within `values`, with ties counted at half weight:
/// `100 · (#{v < x} + ½·#{v = x}) / n`.
pub fn percentile_rank(values: &[f64], x: f64) -> Result<f64> {
    require_non_empty(values, "percentile rank")?;
    let (mut below, mut equal) = (0usize, 0usize);
    for &v in values {
        if v < x {
            below += 1;
        } else if v == x {
            equal += 1;
        }
    }
    Ok(100.0 * (below as f64 + 0.5 * equal as f64) / values.len() as f64)
}

/// Percentile rank of every entry of `column` within the column itself.
/// Same definition as [`percentile_rank`], computed in `O(n log n)`.
pub fn percentile_ranks(column: &[f64]) -> Vec<f64> {
    let mut sorted = column.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = column.len() as f64;
    column
        .iter()
        .map(|&x| {
            let below = sorted.partition_point(|&v| v < x);
            let upto = sorted.partition_point(|&v| v <= x);
            100.0 * (below as f64 + 0.5 * (upto - below) as f64) / n
        })
        .collect()
}

/// Linear-interpolation quantile of an already sorted, non-empty slice:
/// `h = (n−1)·p`, `v[⌊h⌋] + (h−⌊h⌋)(v[⌊h⌋+1] − v[⌊h⌋])`.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if lo + 1 >= sorted.len() || frac == 0.0 {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quartiles {
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
}

pub fn quartiles(values: &[f64]) -> Result<Quartiles> {
    require_non_empty(values, "quartiles")?;
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(quartiles_sorted(&sorted))
}

pub(crate) fn quartiles_sorted(sorted: &[f64]) -> Quartiles {
    Quartiles {
        q1: quantile_sorted(sorted, 0.25),
        q2: quantile_sorted(sorted, 0.5),
        q3: quantile_sorted(sorted, 0.75),
    }
}

/// Mean of the values lying in `[Q1, Q3]`; the plain mean if none do
/// (possible for two distinct values).
pub fn interquartile_mean(values: &[f64]) -> Result<f64> {
    require_non_empty(values, "interquartile mean")?;
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(interquartile_mean_sorted(&sorted))
}

pub(crate) fn interquartile_mean_sorted(sorted: &[f64]) -> f64 {
    let q = quartiles_sorted(sorted);
    let (sum, count) = sorted
        .iter()
        .filter(|&&v| q.q1 <= v && v <= q.q3)
        .fold((0.0, 0usize), |(s, c), &v| (s + v, c + 1));
    if count == 0 {
        sorted.iter().sum::<f64>() / sorted.len() as f64
    } else {
        sum / count as f64
    }
}

/// Uniform draw on `[lo, hi]`; returns `lo` exactly when the bounds coincide.
pub fn uniform_in(lo: f64, hi: f64, rng: &mut RandomStream) -> Result<f64> {
    if !(lo <= hi) {
        return Err(Error::Domain(format!("uniform_in: lo {lo} > hi {hi}")));
    }
    if lo == hi {
        return Ok(lo);
    }
    Ok((lo + (hi - lo) * rng.next_f64()).min(hi))
}

/// Parameters of a Mantegna Levy-flight step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevyParams {
    pub alpha: f64,
    pub scale: f64,
    /// Largest absolute step returned; `f64::INFINITY` disables clamping.
    pub cap: f64,
}

impl Default for LevyParams {
    fn default() -> Self {
        Self {
            alpha: 1.001,
            scale: 1.0,
            cap: f64::INFINITY,
        }
    }
}

impl LevyParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 2.0) {
            return Err(Error::Domain(format!(
                "Levy alpha must lie in (0, 2], got {}",
                self.alpha
            )));
        }
        if !(self.scale > 0.0) || !(self.cap > 0.0) {
            return Err(Error::Domain(
                "Levy scale and cap must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Mantegna's σ_u for the numerator normal.
    pub fn sigma_u(&self) -> f64 {
        let a = self.alpha;
        let num = gamma(1.0 + a) * (PI * a / 2.0).sin();
        let den = gamma((1.0 + a) / 2.0) * a * 2f64.powf((a - 1.0) / 2.0);
        (num / den).powf(1.0 / a)
    }
}

/// Levy-flight step via Mantegna's algorithm:
/// `scale · u / |v|^(1/alpha)` with `u ~ N(0, σ_u²)`, `v ~ N(0, 1)`, clamped
/// to `[−cap, cap]`.
pub fn levy_step(params: &LevyParams, rng: &mut RandomStream) -> Result<f64> {
    params.validate()?;
    Ok(levy_step_with_sigma(params, params.sigma_u(), rng))
}

/// [`levy_step`] with a precomputed σ_u, for hot loops.
pub(crate) fn levy_step_with_sigma(params: &LevyParams, sigma_u: f64, rng: &mut RandomStream) -> f64 {
    let u = sigma_u * rng.standard_normal();
    let v = loop {
        let v = rng.standard_normal().abs();
        if v >= 1e-300 {
            break v;
        }
    };
    let step = params.scale * u / v.powf(1.0 / params.alpha);
    step.clamp(-params.cap, params.cap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn splitmix_reference_output() {
        let mut rng = RandomStream::new(0);
        assert_eq!(rng.next_u64(), 0xe220_a839_7b1d_cdaf);
        assert_eq!(rng.next_u64(), 0x6e78_9e6a_a1b9_65f4);
        assert_eq!(rng.next_u64(), 0x06c4_5d18_8009_454f);
    }

    #[test]
    fn golden_sequence_seed_42() {
        let mut rng = RandomStream::new(42);
        let got: Vec<u64> = (0..3).map(|_| rng.next_u64()).collect();
        assert_eq!(
            got,
            vec![0xbdd7_3226_2feb_6e95, 0x28ef_e333_b266_f103, 0x4752_6757_130f_9f52]
        );
    }

    #[test]
    fn derived_streams_are_stable_and_distinct() {
        let a = RandomStream::derive(7, 0).seed();
        let b = RandomStream::derive(7, 1).seed();
        assert_ne!(a, b);
        assert_eq!(a, RandomStream::derive(7, 0).seed());
    }

    #[test]
    fn percentile_rank_examples() {
        assert_eq!(percentile_rank(&[1.0, 2.0, 3.0, 4.0], 4.0).unwrap(), 87.5);
        assert_eq!(percentile_rank(&[5.0, 5.0, 5.0], 5.0).unwrap(), 50.0);
        assert_eq!(percentile_rank(&[1.0, 2.0], 1.0).unwrap(), 25.0);
        assert!(percentile_rank(&[], 1.0).is_err());
    }

    #[test]
    fn column_ranks_match_scalar_definition() {
        let col = [3.0, 1.0, 3.0, 2.0, 9.0, 3.0];
        let fast = percentile_ranks(&col);
        for (i, &x) in col.iter().enumerate() {
            assert_eq!(fast[i], percentile_rank(&col, x).unwrap());
        }
    }

    #[test]
    fn quartile_examples() {
        let q = quartiles(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!((q.q1, q.q2, q.q3), (2.0, 3.0, 4.0));
        let q = quartiles(&[7.0]).unwrap();
        assert_eq!((q.q1, q.q2, q.q3), (7.0, 7.0, 7.0));
        let q = quartiles(&[0.0, 100.0]).unwrap();
        assert_eq!((q.q1, q.q2, q.q3), (25.0, 50.0, 75.0));
        assert!(quartiles(&[]).is_err());
    }

    #[test]
    fn interquartile_mean_examples() {
        assert_eq!(interquartile_mean(&[1.0, 2.0, 3.0, 4.0, 100.0]).unwrap(), 3.0);
        assert_eq!(interquartile_mean(&[5.0, 5.0, 5.0]).unwrap(), 5.0);
        assert_eq!(interquartile_mean(&[1.0, 2.0]).unwrap(), 1.5);
        assert!(interquartile_mean(&[]).is_err());
    }

    #[test]
    fn uniform_in_contract() {
        let mut rng = RandomStream::new(3);
        assert_eq!(uniform_in(4.0, 4.0, &mut rng).unwrap(), 4.0);
        assert!(uniform_in(1.0, 0.0, &mut rng).is_err());
        let n = 10_000;
        let mean = (0..n)
            .map(|_| uniform_in(0.0, 1.0, &mut rng).unwrap())
            .sum::<f64>()
            / n as f64;
        assert!((mean - 0.5).abs() < 0.02, "mean {mean}");
        let mut a = RandomStream::new(9);
        let mut b = RandomStream::new(9);
        for _ in 0..100 {
            assert_eq!(
                uniform_in(-3.0, 8.0, &mut a).unwrap(),
                uniform_in(-3.0, 8.0, &mut b).unwrap()
            );
        }
    }

    #[test]
    fn sigma_u_at_alpha_two_and_one() {
        // α = 2: Γ(3)·sin(π) = 0 so σ_u vanishes; α = 1: Γ(2)·1 / (Γ(1)·1·1) = 1.
        let p = LevyParams { alpha: 1.0, ..Default::default() };
        assert!((p.sigma_u() - 1.0).abs() < 1e-12);
        let p = LevyParams { alpha: 1.5, ..Default::default() };
        // Tabulated Mantegna constant for β = 1.5.
        assert!((p.sigma_u() - 0.696_574_502_557_697_8).abs() < 1e-9);
    }

    #[test]
    fn levy_step_respects_cap() {
        let params = LevyParams { cap: 0.1, ..Default::default() };
        let mut rng = RandomStream::new(11);
        for _ in 0..10_000 {
            let s = levy_step(&params, &mut rng).unwrap();
            assert!((-0.1..=0.1).contains(&s));
        }
    }

    #[test]
    fn levy_step_rejects_bad_params() {
        let mut rng = RandomStream::new(1);
        for p in [
            LevyParams { alpha: 0.0, ..Default::default() },
            LevyParams { alpha: 2.5, ..Default::default() },
            LevyParams { cap: 0.0, ..Default::default() },
        ] {
            assert!(levy_step(&p, &mut rng).is_err());
        }
    }

    #[test]
    fn levy_step_is_symmetric() {
        // Moderate cap so the standard error is finite; the mean must sit
        // within three standard errors of zero.
        let params = LevyParams { cap: 5.0, ..Default::default() };
        let mut rng = RandomStream::new(2024);
        let n = 100_000;
        let draws: Vec<f64> = (0..n).map(|_| levy_step(&params, &mut rng).unwrap()).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se = (var / n as f64).sqrt();
        assert!(mean.abs() <= 3.0 * se, "mean {mean} se {se}");
    }

    proptest! {
        #[test]
        fn percentile_rank_monotone(values in prop::collection::vec(-50i32..50, 1..40), a in -60i32..60, b in -60i32..60) {
            let values: Vec<f64> = values.into_iter().map(f64::from).collect();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let r_lo = percentile_rank(&values, lo as f64).unwrap();
            let r_hi = percentile_rank(&values, hi as f64).unwrap();
            prop_assert!(r_lo <= r_hi);
            prop_assert!((0.0..=100.0).contains(&r_lo));
        }

        #[test]
        fn quartiles_permutation_invariant(mut values in prop::collection::vec(-1e3f64..1e3, 1..40), seed in any::<u64>()) {
            let reference = quartiles(&values).unwrap();
            let mut rng = RandomStream::new(seed);
            for i in (1..values.len()).rev() {
                let j = rng.below(i + 1);
                values.swap(i, j);
            }
            let shuffled = quartiles(&values).unwrap();
            prop_assert_eq!(reference, shuffled);
            prop_assert!(reference.q1 <= reference.q2 && reference.q2 <= reference.q3);
        }

        #[test]
        fn iqm_translation_equivariant(values in prop::collection::vec(-1e3f64..1e3, 1..40), shift in -1e3f64..1e3) {
            let base = interquartile_mean(&values).unwrap();
            let moved: Vec<f64> = values.iter().map(|v| v + shift).collect();
            let got = interquartile_mean(&moved).unwrap();
            prop_assert!((got - (base + shift)).abs() <= 1e-9 * (1.0 + base.abs() + shift.abs()));
        }
    }
}
