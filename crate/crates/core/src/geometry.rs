//! Row-major point tables and Euclidean helpers shared by every algorithm.

use serde::{Deserialize, Serialize};

#[inline]
pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    squared_distance(a, b).sqrt()
}

/// A table of `k` centroids in `d` dimensions, stored row-major.
///
/// Row `i` is the centroid of cluster id `i`; ids are always contiguous.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Centroids {
    d: usize,
    values: Vec<f64>,
}

impl Centroids {
    pub fn new(d: usize) -> Self {
        Self {
            d,
            values: Vec::new(),
        }
    }

    pub fn from_rows<R: AsRef<[f64]>>(d: usize, rows: &[R]) -> Self {
        let mut out = Self::with_capacity(d, rows.len());
        for r in rows {
            out.push(r.as_ref());
        }
        out
    }

    pub fn with_capacity(d: usize, k: usize) -> Self {
        Self {
            d,
            values: Vec::with_capacity(d * k),
        }
    }

    pub fn from_flat(d: usize, values: Vec<f64>) -> Self {
        assert!(d > 0 && values.len() % d == 0, "flat table is not k×d");
        Self { d, values }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn k(&self) -> usize {
        if self.d == 0 {
            0
        } else {
            self.values.len() / self.d
        }
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.d..(i + 1) * self.d]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.values[i * self.d..(i + 1) * self.d]
    }

    pub fn push(&mut self, row: &[f64]) {
        assert_eq!(row.len(), self.d, "centroid dimensionality mismatch");
        self.values.extend_from_slice(row);
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.d.max(1))
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.values
    }

    /// Keeps only the rows whose flag is set, preserving their relative order.
    pub fn retain_rows(&mut self, keep: &[bool]) {
        assert_eq!(keep.len(), self.k());
        let d = self.d;
        let mut out = Vec::with_capacity(self.values.len());
        for (i, _) in keep.iter().enumerate().filter(|(_, &k)| k) {
            out.extend_from_slice(&self.values[i * d..(i + 1) * d]);
        }
        self.values = out;
    }

    /// Index of the row nearest to `point`; ties go to the lowest index.
    pub fn nearest(&self, point: &[f64]) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for (i, row) in self.rows().enumerate() {
            let dist = squared_distance(point, row);
            if dist < best.1 {
                best = (i, dist);
            }
        }
        best
    }
}
