//! Closed-tour TSP over edge devices: exact Held-Karp, a nearest-neighbour +
//! 2-opt heuristic, and a permutation brute force used as a test oracle.
//!
//! Every returned tour is canonical: it starts at node 0 and runs in the
//! direction whose second node has the smaller index.

mod brute;
mod exact;
mod heuristic;

pub use brute::{brute_force_oracle, BRUTE_FORCE_LIMIT};
pub use exact::{solve_exact, EXACT_LIMIT};
pub use heuristic::solve_heuristic;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{distance, Point};

#[derive(Debug, Error, PartialEq)]
pub enum TspError {
    #[error("exact solver handles at most {EXACT_LIMIT} nodes, got {0}; use the heuristic")]
    ExactLimit(usize),
    #[error("brute-force oracle handles at most {BRUTE_FORCE_LIMIT} nodes, got {0}")]
    OracleLimit(usize),
    #[error("invalid distance matrix: {0}")]
    InvalidInput(String),
}

/// Dense symmetric distance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    pub fn from_points(points: &[Point]) -> Self {
        let n = points.len();
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                data[i * n + j] = distance(points[i], points[j]);
            }
        }
        Self { n, data }
    }

    /// Validates a row-major square matrix: non-negative, finite, zero
    /// diagonal, exactly symmetric.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, TspError> {
        let n = rows.len();
        if n == 0 {
            return Err(TspError::InvalidInput("empty matrix".into()));
        }
        let mut data = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(TspError::InvalidInput(format!(
                    "row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        for i in 0..n {
            if data[i * n + i] != 0.0 {
                return Err(TspError::InvalidInput(format!("diagonal entry {i} is non-zero")));
            }
            for j in 0..n {
                let v = data[i * n + j];
                if !(v.is_finite() && v >= 0.0) {
                    return Err(TspError::InvalidInput(format!("entry ({i}, {j}) = {v}")));
                }
                if v != data[j * n + i] {
                    return Err(TspError::InvalidInput(format!("asymmetric at ({i}, {j})")));
                }
            }
        }
        Ok(Self { n, data })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn tour_length(&self, order: &[usize]) -> f64 {
        match order.len() {
            0 | 1 => 0.0,
            k => (0..k).map(|i| self.get(order[i], order[(i + 1) % k])).sum(),
        }
    }
}

/// A closed tour: `order` visits every node once and then returns to
/// `order[0]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tour {
    pub order: Vec<usize>,
    /// Closed length including the leg back to the first node (m).
    pub length: f64,
}

impl Tour {
    pub fn new(order: Vec<usize>, dist: &DistanceMatrix) -> Self {
        let length = dist.tour_length(&order);
        Self { order, length }
    }

    /// `order` with the first node appended.
    pub fn closed_order(&self) -> Vec<usize> {
        let mut closed = self.order.clone();
        if let Some(&first) = self.order.first() {
            closed.push(first);
        }
        closed
    }

    /// Rotate to start at node 0 and pick the direction with the smaller
    /// second node.
    pub fn canonicalize(mut self) -> Self {
        if let Some(pos) = self.order.iter().position(|&v| v == 0) {
            self.order.rotate_left(pos);
        }
        let k = self.order.len();
        if k > 2 && self.order[k - 1] < self.order[1] {
            self.order[1..].reverse();
        }
        self
    }

    pub fn is_permutation_of(&self, n: usize) -> bool {
        let mut sorted = self.order.clone();
        sorted.sort_unstable();
        sorted.into_iter().eq(0..n)
    }
}

/// Exact when `n <= EXACT_LIMIT`, heuristic otherwise.
pub fn solve(dist: &DistanceMatrix) -> Tour {
    if dist.len() <= EXACT_LIMIT {
        solve_exact(dist).expect("size checked")
    } else {
        solve_heuristic(dist)
    }
}
