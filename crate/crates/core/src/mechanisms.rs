//! Private top-k selection mechanisms and their noise calibration.
//!
//! Selection is min-oriented: the primitive reports the `k` smallest noisy
//! values, and the max variants negate their input. Indices are 0-based.
//!
//! Draw order is part of the contract so that runs can be replayed: the
//! oneshot mechanisms draw one selection noise per element in index order,
//! then one fresh noise per selected element in increasing index order.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::noise::{sample_gumbel, sample_laplace, NoiseScale, RngState};

/// The `m` query answers to select from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct CountVector(Vec<f64>);

impl CountVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(invalid("count vector must be non-empty"));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(invalid(format!("count {} is not finite", i + 1)));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn negated(&self) -> Self {
        Self(self.0.iter().map(|v| -v).collect())
    }

    pub fn shifted(&self, c: f64) -> Result<Self> {
        Self::new(self.0.iter().map(|v| v + c).collect())
    }

    /// Largest coordinate-wise difference, `||x - other||_inf`.
    pub fn linf_distance(&self, other: &Self) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

impl TryFrom<Vec<f64>> for CountVector {
    type Error = crate::Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

impl From<CountVector> for Vec<f64> {
    fn from(x: CountVector) -> Vec<f64> {
        x.0
    }
}

/// Parameters of an approximate-DP oneshot release.
///
/// Bounds are those under which the `8 s sqrt(k ln(m/delta)) / epsilon`
/// calibration is proven: `0 < epsilon <= 0.2`, `0 < delta <= 0.05`,
/// `m >= 2`, `1 <= k <= m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrivacyParams {
    epsilon: f64,
    delta: f64,
    k: usize,
    m: usize,
    sensitivity: f64,
}

pub const MAX_EPSILON: f64 = 0.2;
pub const MAX_DELTA: f64 = 0.05;

impl PrivacyParams {
    pub fn new(epsilon: f64, delta: f64, k: usize, m: usize, sensitivity: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon <= MAX_EPSILON) {
            return Err(invalid(format!("epsilon must be in (0, {MAX_EPSILON}] (got {epsilon})")));
        }
        if !(delta > 0.0 && delta <= MAX_DELTA) {
            return Err(invalid(format!("delta must be in (0, {MAX_DELTA}] (got {delta})")));
        }
        if m < 2 {
            return Err(invalid(format!("m must be at least 2 (got {m})")));
        }
        if k < 1 || k > m {
            return Err(invalid(format!("k must be in [1, m] = [1, {m}] (got {k})")));
        }
        if !(sensitivity.is_finite() && sensitivity > 0.0) {
            return Err(invalid(format!("sensitivity must be positive (got {sensitivity})")));
        }
        Ok(Self { epsilon, delta, k, m, sensitivity })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn sensitivity(&self) -> f64 {
        self.sensitivity
    }
}

/// Output of the oneshot mechanism: an unordered index set and independently
/// re-noised value estimates for exactly those indices.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TopKSelection {
    indices: BTreeSet<usize>,
    estimates: BTreeMap<usize, f64>,
    noise_scale: NoiseScale,
}

impl TopKSelection {
    pub fn indices(&self) -> &BTreeSet<usize> {
        &self.indices
    }

    pub fn estimates(&self) -> &BTreeMap<usize, f64> {
        &self.estimates
    }

    pub fn noise_scale(&self) -> NoiseScale {
        self.noise_scale
    }

    pub fn k(&self) -> usize {
        self.indices.len()
    }
}

/// Pure-DP calibration `lambda = 2 k s / epsilon`.
pub fn calibrate_pure(k: usize, sensitivity: f64, epsilon: f64) -> Result<NoiseScale> {
    if k < 1 {
        return Err(invalid(format!("k must be at least 1 (got {k})")));
    }
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(invalid(format!("epsilon must be positive (got {epsilon})")));
    }
    if !(sensitivity > 0.0) || !sensitivity.is_finite() {
        return Err(invalid(format!("sensitivity must be positive (got {sensitivity})")));
    }
    NoiseScale::new(2.0 * k as f64 * sensitivity / epsilon)
}

/// Approximate-DP calibration `lambda = 8 s sqrt(k ln(m / delta)) / epsilon`.
pub fn calibrate_approx(params: &PrivacyParams) -> Result<NoiseScale> {
    let ratio = params.m as f64 / params.delta;
    if ratio <= 1.0 {
        return Err(invalid(format!("m / delta must exceed 1 (got {ratio})")));
    }
    NoiseScale::new(8.0 * params.sensitivity * (params.k as f64 * ratio.ln()).sqrt() / params.epsilon)
}

fn check_k(k: usize, m: usize) -> Result<()> {
    if k < 1 || k > m {
        return Err(invalid(format!("k must be in [1, m] = [1, {m}] (got {k})")));
    }
    Ok(())
}

// Value order with ties broken by the smaller index.
fn by_value_then_index(noisy: &[f64]) -> impl Fn(&usize, &usize) -> Ordering + '_ {
    move |&a, &b| noisy[a].total_cmp(&noisy[b]).then(a.cmp(&b))
}

fn k_smallest(noisy: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..noisy.len()).collect();
    if k < order.len() {
        order.select_nth_unstable_by(k, by_value_then_index(noisy));
        order.truncate(k);
    }
    order
}

fn add_laplace(x: &CountVector, scale: NoiseScale, rng: &mut RngState) -> Vec<f64> {
    x.values().iter().map(|v| v + sample_laplace(scale, rng)).collect()
}

/// Oneshot Laplace mechanism: noise every value once, report the set of the
/// `k` smallest noisy values, and estimate each selected value with fresh noise.
pub fn oneshot_select_min(x: &CountVector, k: usize, scale: NoiseScale, rng: &mut RngState) -> Result<TopKSelection> {
    check_k(k, x.len())?;
    let noisy = add_laplace(x, scale, rng);
    let indices: BTreeSet<usize> = k_smallest(&noisy, k).into_iter().collect();
    let estimates = indices.iter().map(|&i| (i, x.values()[i] + sample_laplace(scale, rng))).collect();
    Ok(TopKSelection { indices, estimates, noise_scale: scale })
}

/// Max-oriented oneshot selection: [`oneshot_select_min`] on `-x`, with the
/// estimates mapped back to the original sign.
pub fn oneshot_select_max(x: &CountVector, k: usize, scale: NoiseScale, rng: &mut RngState) -> Result<TopKSelection> {
    let mut selection = oneshot_select_min(&x.negated(), k, scale, rng)?;
    for v in selection.estimates.values_mut() {
        *v = -*v;
    }
    Ok(selection)
}

/// Report Noisy Min: the `k = 1` oneshot mechanism. Returns `(index, estimate)`.
pub fn report_noisy_min(x: &CountVector, scale: NoiseScale, rng: &mut RngState) -> (usize, f64) {
    let selection = oneshot_select_min(x, 1, scale, rng).expect("k = 1 is always valid for a non-empty vector");
    selection.estimates.into_iter().next().expect("one index is selected")
}

/// Peeling baseline: `k` rounds of Report Noisy Min over the remaining
/// indices, each round with fresh noise at `per_round_scale`. Returns
/// `(index, estimate)` pairs in discovery order.
pub fn peeling_select(
    x: &CountVector,
    k: usize,
    per_round_scale: NoiseScale,
    rng: &mut RngState,
) -> Result<Vec<(usize, f64)>> {
    check_k(k, x.len())?;
    let mut remaining: Vec<usize> = (0..x.len()).collect();
    let mut picked = Vec::with_capacity(k);
    for _ in 0..k {
        let sub = CountVector(remaining.iter().map(|&i| x.values()[i]).collect());
        let (pos, estimate) = report_noisy_min(&sub, per_round_scale, rng);
        picked.push((remaining.remove(pos), estimate));
    }
    Ok(picked)
}

/// Oneshot Gumbel baseline: perturb every value once with Gumbel noise and
/// report the `k` smallest in order.
///
/// The Gumbel draw is subtracted, so that the ranking is distributed as
/// `k` rounds of the exponential mechanism favouring small values.
pub fn gumbel_oneshot_select(x: &CountVector, k: usize, scale: NoiseScale, rng: &mut RngState) -> Result<Vec<usize>> {
    check_k(k, x.len())?;
    let noisy: Vec<f64> = x.values().iter().map(|v| v - sample_gumbel(scale, rng)).collect();
    let mut order = k_smallest(&noisy, k);
    order.sort_by(by_value_then_index(&noisy));
    Ok(order)
}
