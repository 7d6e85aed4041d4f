use std::collections::BTreeSet;

use serde::Serialize;

use super::graph::ComparisonGraph;
use super::markov::{
    build_transition, ergodicity_report, stationary_distribution, ErgodicityReport, StationaryDistribution,
    STATIONARY_MAX_ITER, STATIONARY_TOLERANCE,
};
use crate::error::{Error, Result};
use crate::mechanisms::{calibrate_approx, oneshot_select_max, CountVector, PrivacyParams};
use crate::noise::{NoiseScale, RngState};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrivateRanking {
    pub selected: BTreeSet<usize>,
    pub stationary: StationaryDistribution,
    pub ergodicity: ErgodicityReport,
    pub noise_scale: NoiseScale,
}

/// Everything the private ranking needs except the selection noise, so
/// repeated draws on the same data skip rebuilding `P` and `pi`.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedRanking {
    k: usize,
    scores: CountVector,
    stationary: StationaryDistribution,
    ergodicity: ErgodicityReport,
    noise_scale: NoiseScale,
}

impl PreparedRanking {
    /// Refuses unless the graph is connected and `tau_1(P) <= rho`: the
    /// sensitivity `2 / (d L (1 - rho))` behind the noise calibration is
    /// only valid for rho-constrained graphs.
    pub fn new(graph: &ComparisonGraph, k: usize, epsilon: f64, delta: f64, rho: f64) -> Result<Self> {
        let p = build_transition(graph)?;
        let ergodicity = ergodicity_report(&p, graph.normalization(), graph.comparisons(), rho)?;
        if !graph.is_connected() {
            return Err(Error::Disconnected);
        }
        if !ergodicity.constrained {
            return Err(Error::NotConstrained { tau1: ergodicity.tau1, rho });
        }
        let params = PrivacyParams::new(epsilon, delta, k, graph.m(), ergodicity.sensitivity)?;
        let noise_scale = calibrate_approx(&params)?;
        let stationary = stationary_distribution(&p, STATIONARY_TOLERANCE, STATIONARY_MAX_ITER)?;
        let scores = CountVector::new(stationary.pi.clone())?;
        Ok(Self { k, scores, stationary, ergodicity, noise_scale })
    }

    /// One private draw: the `k` largest noisy stationary probabilities.
    /// Only the index set is released; the noisy estimates are dropped.
    pub fn select(&self, rng: &mut RngState) -> Result<BTreeSet<usize>> {
        Ok(oneshot_select_max(&self.scores, self.k, self.noise_scale, rng)?.indices().clone())
    }

    pub fn stationary(&self) -> &StationaryDistribution {
        &self.stationary
    }

    pub fn ergodicity(&self) -> &ErgodicityReport {
        &self.ergodicity
    }

    pub fn noise_scale(&self) -> NoiseScale {
        self.noise_scale
    }
}

/// Privately report the `k` items with the largest stationary probability.
pub fn private_top_k_rank(
    graph: &ComparisonGraph,
    k: usize,
    epsilon: f64,
    delta: f64,
    rho: f64,
    rng: &mut RngState,
) -> Result<PrivateRanking> {
    let prepared = PreparedRanking::new(graph, k, epsilon, delta, rho)?;
    let selected = prepared.select(rng)?;
    let PreparedRanking { stationary, ergodicity, noise_scale, .. } = prepared;
    Ok(PrivateRanking { selected, stationary, ergodicity, noise_scale })
}
