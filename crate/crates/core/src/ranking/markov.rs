use serde::Serialize;

use super::graph::{ComparisonGraph, SampleFlip, SufficientStats};
use crate::error::{invalid, Error, Result};

pub const STATIONARY_TOLERANCE: f64 = 1e-12;
pub const STATIONARY_MAX_ITER: usize = 1_000_000;

/// Dense row-stochastic matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransitionMatrix {
    m: usize,
    data: Vec<f64>,
}

impl TransitionMatrix {
    /// Validate nonnegative entries and unit row sums (to 1e-12).
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let m = rows.len();
        if m == 0 {
            return Err(invalid("empty transition matrix"));
        }
        let mut data = Vec::with_capacity(m * m);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != m {
                return Err(invalid(format!("row {} has {} entries, expected {m}", i + 1, row.len())));
            }
            if row.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
                return Err(invalid(format!("row {} has a negative or non-finite entry", i + 1)));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-12 {
                return Err(invalid(format!("row {} sums to {sum}", i + 1)));
            }
            data.extend(row);
        }
        Ok(Self { m, data })
    }

    pub fn identity(m: usize) -> Self {
        let mut data = vec![0.0; m * m];
        for i in 0..m {
            data[i * m + i] = 1.0;
        }
        Self { m, data }
    }

    /// `P_ij = ybar_{i,j} / d` on edges, diagonal the complement of the row.
    pub fn from_stats(stats: &SufficientStats, d: f64) -> Result<Self> {
        let max_deg = stats.max_degree();
        if !(d.is_finite() && d > 0.0) {
            return Err(invalid(format!("normalization d must be positive (got {d})")));
        }
        if d < max_deg as f64 {
            return Err(invalid(format!(
                "normalization d = {d} is below the maximum degree {max_deg}; the diagonal could go negative"
            )));
        }
        let m = stats.m();
        let mut data = vec![0.0; m * m];
        for ((i, j), y) in stats.pairs() {
            data[i * m + j] = y / d;
            data[j * m + i] = (1.0 - y) / d;
        }
        for i in 0..m {
            let row = &mut data[i * m..(i + 1) * m];
            let off: f64 = row.iter().enumerate().filter(|&(c, _)| c != i).map(|(_, v)| v).sum();
            row[i] = 1.0 - off;
        }
        Ok(Self { m, data })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.m + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.m..(i + 1) * self.m]
    }

    /// `v^T P`.
    pub fn left_multiply(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.m];
        for (i, &vi) in v.iter().enumerate() {
            if vi == 0.0 {
                continue;
            }
            for (o, p) in out.iter_mut().zip(self.row(i)) {
                *o += vi * p;
            }
        }
        out
    }

    /// Maximum absolute row sum of `self - other`.
    pub fn inf_norm_distance(&self, other: &Self) -> f64 {
        (0..self.m)
            .map(|i| self.row(i).iter().zip(other.row(i)).map(|(a, b)| (a - b).abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

pub fn build_transition(graph: &ComparisonGraph) -> Result<TransitionMatrix> {
    TransitionMatrix::from_stats(&graph.sufficient_stats(), graph.normalization())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationaryDistribution {
    pub pi: Vec<f64>,
    pub iterations: usize,
    /// `||pi^T P - pi^T||_1` at exit.
    pub residual: f64,
}

impl StationaryDistribution {
    pub fn values(&self) -> &[f64] {
        &self.pi
    }
}

/// Power iteration from the uniform vector until the L1 residual
/// `||pi^T P - pi^T||_1` is at most `tol`.
pub fn stationary_distribution(p: &TransitionMatrix, tol: f64, max_iter: usize) -> Result<StationaryDistribution> {
    if !(tol > 0.0) {
        return Err(invalid("tolerance must be positive"));
    }
    let m = p.m();
    let mut pi = vec![1.0 / m as f64; m];
    let mut residual = f64::INFINITY;
    for iteration in 0..=max_iter {
        let next = p.left_multiply(&pi);
        residual = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).sum();
        if residual <= tol {
            let sum: f64 = next.iter().sum();
            let pi = next.into_iter().map(|v| v / sum).collect();
            return Ok(StationaryDistribution { pi, iterations: iteration, residual });
        }
        let sum: f64 = next.iter().sum();
        pi = next.into_iter().map(|v| v / sum).collect();
    }
    Err(Error::Convergence { iterations: max_iter, residual })
}

/// Ergodicity coefficient `tau_1(P) = sup ||v^T P||_1` over `||v||_1 = 1`,
/// `v^T e = 0`, via the pairwise-row form `max_{i,j} (1/2) sum_k |P_ik - P_jk|`.
pub fn ergodicity_coefficient(p: &TransitionMatrix) -> f64 {
    let m = p.m();
    let mut best: f64 = 0.0;
    for i in 0..m {
        for j in i + 1..m {
            let d: f64 = p.row(i).iter().zip(p.row(j)).map(|(a, b)| (a - b).abs()).sum();
            best = best.max(0.5 * d);
        }
    }
    best.min(1.0)
}

/// Sensitivity of the stationary distribution to one flipped comparison on
/// a rho-constrained graph: `2 / (d L (1 - rho))`.
pub fn stationary_sensitivity(d: f64, comparisons: usize, rho: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&rho) {
        return Err(invalid(format!("rho must be in [0, 1) (got {rho})")));
    }
    if !(d.is_finite() && d > 0.0) {
        return Err(invalid(format!("normalization d must be positive (got {d})")));
    }
    if comparisons < 1 {
        return Err(invalid("L must be at least 1"));
    }
    Ok(2.0 / (d * comparisons as f64 * (1.0 - rho)))
}

/// `||P - P~||_inf` where `P~` comes from the graph with one sample changed.
pub fn perturbation_norm(graph: &ComparisonGraph, flip: SampleFlip) -> Result<f64> {
    let p = build_transition(graph)?;
    let q = build_transition(&graph.with_sample(flip)?)?;
    Ok(p.inf_norm_distance(&q))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErgodicityReport {
    pub tau1: f64,
    pub rho: f64,
    /// `tau1 <= rho < 1`.
    pub constrained: bool,
    pub sensitivity: f64,
}

pub fn ergodicity_report(p: &TransitionMatrix, d: f64, comparisons: usize, rho: f64) -> Result<ErgodicityReport> {
    let sensitivity = stationary_sensitivity(d, comparisons, rho)?;
    let tau1 = ergodicity_coefficient(p);
    Ok(ErgodicityReport { tau1, rho, constrained: tau1 <= rho, sensitivity })
}
