//! Analytic side of the oneshot mechanism: the utility lower bound, an exact
//! outcome-probability oracle, and numeric checkers for the inequalities
//! behind the approximate-DP calibration.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::mechanisms::CountVector;
use crate::noise::{laplace_cdf, laplace_sf, NoiseScale, RngState};
use crate::quadrature;

/// Regime constant: the `sqrt(k)` calibration analysis needs `k >= C0 ln(m/delta)`.
pub const C0: f64 = 3.9 * 3.9;
/// Closeness constant: `tau <= epsilon / (C1 sqrt(k ln(m/delta)))`.
pub const C1: f64 = 1.95;
/// Concentration constant in `K = (1 + c sqrt(ln(m/delta) / k)) k`.
pub const CONCENTRATION_C: f64 = 1.9;

/// Absolute tolerance for every integral in [`exact_outcome_probability`].
pub const OUTCOME_TOLERANCE: f64 = 1e-10;
/// Half-width, in units of lambda, of the integration window beyond the data.
pub const OUTCOME_WINDOW: f64 = 50.0;
/// Largest `m` accepted by the exact oracle.
pub const EXACT_MAX_M: usize = 20;
/// Largest number of k-subsets the exact oracle will enumerate.
pub const EXACT_MAX_SUBSETS: u64 = 200_000;

const MAX_PANELS: usize = 4_000;

/// Smallest gap between consecutive order statistics.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct GapStatistic(f64);

impl GapStatistic {
    pub fn new(delta: f64) -> Result<Self> {
        if delta >= 0.0 {
            Ok(Self(delta))
        } else {
            Err(invalid(format!("gap must be nonnegative (got {delta})")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Inclusion probabilities, each strictly inside (0, 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityVector(Vec<f64>);

impl ProbabilityVector {
    pub fn new(q: Vec<f64>) -> Result<Self> {
        if let Some(i) = q.iter().position(|&p| !(p > 0.0 && p < 1.0)) {
            return Err(invalid(format!("probability {} = {} is not in (0, 1)", i + 1, q[i])));
        }
        Ok(Self(q))
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

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }
}

/// Probability lower bound that the oneshot mechanism returns exactly the true
/// bottom-k set, `max(0, 1 - (m-1)(2 lambda + gap) e^{-gap/lambda} / (4 lambda))`.
pub fn utility_bound(m: usize, scale: NoiseScale, gap: GapStatistic) -> f64 {
    let lambda = scale.value();
    let d = gap.value();
    let miss = (m.saturating_sub(1)) as f64 * (2.0 * lambda + d) * (-d / lambda).exp() / (4.0 * lambda);
    (1.0 - miss).max(0.0)
}

pub fn min_gap(x: &CountVector) -> Result<GapStatistic> {
    if x.len() < 2 {
        return Err(invalid("min_gap needs at least two counts"));
    }
    let mut sorted = x.values().to_vec();
    sorted.sort_by(f64::total_cmp);
    let gap = sorted.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    GapStatistic::new(gap)
}

/// Number of k-subsets of an m-set, saturating at `u64::MAX`.
pub fn binomial(m: usize, k: usize) -> u64 {
    if k > m {
        return 0;
    }
    let k = k.min(m - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (m - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

pub(crate) fn check_exact_budget(m: usize, k: usize) -> Result<()> {
    if m > EXACT_MAX_M {
        return Err(Error::Budget(format!("exact oracle supports m <= {EXACT_MAX_M} (got {m})")));
    }
    let sets = binomial(m, k);
    if sets > EXACT_MAX_SUBSETS {
        return Err(Error::Budget(format!("C({m}, {k}) = {sets} subsets exceeds the limit of {EXACT_MAX_SUBSETS}")));
    }
    Ok(())
}

/// Probability that the oneshot mechanism with noise `scale` reports exactly
/// the index set `subset` on input `x`.
///
/// Conditions on which selected element `j` is the k-th smallest noisy value
/// and on its noise `g`; given those, every other element is independently
/// below `x_j + g` with probability `G((x_j + g - x_i) / lambda)`. Each of the
/// `k` one-dimensional integrals is split at the kinks `g = 0` and
/// `g = x_i - x_j`.
pub fn exact_outcome_probability(x: &CountVector, subset: &[usize], scale: NoiseScale) -> Result<f64> {
    let m = x.len();
    let members: BTreeSet<usize> = subset.iter().copied().collect();
    if members.len() != subset.len() || members.iter().any(|&i| i >= m) {
        return Err(invalid(format!("subset must hold distinct indices below m = {m}")));
    }
    check_exact_budget(m, members.len())?;
    let k = members.len();
    if k == 0 || k == m {
        return Ok(1.0);
    }

    let lambda = scale.value();
    // Work in units of lambda: u = g / lambda has the standard Laplace density.
    let z: Vec<f64> = x.values().iter().map(|v| v / lambda).collect();
    let in_set: Vec<bool> = (0..m).map(|i| members.contains(&i)).collect();

    let mut total = 0.0;
    for &j in &members {
        let offsets: Vec<f64> = (0..m).map(|i| z[j] - z[i]).collect();
        let integrand = |u: f64| {
            let mut p = 0.5 * (-u.abs()).exp();
            for i in 0..m {
                if i == j {
                    continue;
                }
                let t = offsets[i] + u;
                p *= if in_set[i] { laplace_cdf(t) } else { laplace_sf(t) };
            }
            p
        };
        let lo = offsets.iter().fold(0.0f64, |a, &o| a.min(-o));
        let hi = offsets.iter().fold(0.0f64, |a, &o| a.max(-o));
        let mut breaks: Vec<f64> = offsets.iter().map(|o| -o).collect();
        breaks.push(0.0);
        breaks.push(lo - OUTCOME_WINDOW);
        breaks.push(hi + OUTCOME_WINDOW);
        let r = quadrature::integrate(integrand, &breaks, OUTCOME_TOLERANCE / k as f64, MAX_PANELS)?;
        total += r.value;
    }
    Ok(total)
}

/// `|q_i - q'_i| <= tau q_i (1 - q_i)` for every coordinate.
pub fn check_tau_close(q: &ProbabilityVector, q2: &ProbabilityVector, tau: f64) -> Result<bool> {
    if q.len() != q2.len() {
        return Err(invalid(format!("length mismatch: {} vs {}", q.len(), q2.len())));
    }
    if !(tau >= 0.0) {
        return Err(invalid(format!("tau must be nonnegative (got {tau})")));
    }
    Ok(q.values().iter().zip(q2.values()).all(|(&a, &b)| (a - b).abs() <= tau * a * (1.0 - a)))
}

/// Whether `|G(z2) - G(z)| <= 2 e^{|z2 - z|} |z2 - z| G(z) (1 - G(z))` holds.
pub fn cdf_lipschitz_bound_holds(z: f64, z2: f64) -> bool {
    let d = (z2 - z).abs();
    let g = laplace_cdf(z);
    let lhs = (laplace_cdf(z2) - g).abs();
    let rhs = 2.0 * d.exp() * d * g * laplace_sf(z);
    lhs <= rhs
}

/// Include each index `i` independently with probability `q_i`.
pub fn bernoulli_subset_mechanism(q: &ProbabilityVector, rng: &mut RngState) -> BTreeSet<usize> {
    q.values().iter().enumerate().filter_map(|(i, &p)| rng.bernoulli(p).then_some(i)).collect()
}

/// Bennett's function `h(u) = (1 + u) ln(1 + u) - u`.
pub fn bennett_h(u: f64) -> f64 {
    (1.0 + u) * u.ln_1p() - u
}

/// Concentration bound `P(sum Z_i <= k) <= exp(-(1 + t) k h(t / (t + 1)))`
/// for independent Bernoulli(q_i), valid when `sum q_i >= (1 + t) k`.
pub fn poisson_binomial_tail_bound(q: &ProbabilityVector, k: usize, t: f64) -> Result<f64> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(invalid(format!("t must be positive (got {t})")));
    }
    let need = (1.0 + t) * k as f64;
    let have = q.sum();
    // Relative allowance for rounding in callers that set t from the sum.
    if have < need * (1.0 - 1e-12) {
        return Err(invalid(format!("sum of q = {have} is below (1 + t) k = {need}")));
    }
    Ok((-(1.0 + t) * k as f64 * bennett_h(t / (t + 1.0))).exp())
}

/// Exact `P(sum Z_i <= k)` for independent Bernoulli(q_i) by the O(m k)
/// count-distribution recursion, truncated above `k`.
pub fn poisson_binomial_exact_tail(q: &ProbabilityVector, k: usize) -> f64 {
    let m = q.len();
    if k >= m {
        return 1.0;
    }
    // dist[c] = P(c successes so far), c = 0..=k
    let mut dist = vec![0.0; k + 1];
    dist[0] = 1.0;
    for (n, &p) in q.values().iter().enumerate() {
        let top = k.min(n + 1);
        for c in (1..=top).rev() {
            dist[c] = dist[c] * (1.0 - p) + dist[c - 1] * p;
        }
        dist[0] *= 1.0 - p;
    }
    kahan_sum(&dist)
}

fn kahan_sum(values: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for &v in values {
        let y = v - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    sum
}

/// `k >= C0 ln(m / delta)`: the regime where the `sqrt(k)` analysis applies.
/// Below it, the pure-DP calibration already suffices.
pub fn in_sqrt_k_regime(k: usize, m: usize, delta: f64) -> bool {
    k as f64 >= C0 * (m as f64 / delta).ln()
}

/// Largest closeness `tau` under which the Bernoulli subset mechanism is
/// `(epsilon, delta/m)`-indistinguishable: `epsilon / (C1 sqrt(k ln(m/delta)))`.
pub fn max_tau(epsilon: f64, k: usize, m: usize, delta: f64) -> f64 {
    epsilon / (C1 * (k as f64 * (m as f64 / delta).ln()).sqrt())
}

/// `K = (1 + c sqrt(ln(m/delta) / k)) k`, the mass threshold above which
/// `P(sum Z_i <= k) <= delta / m`.
pub fn concentration_threshold(k: usize, m: usize, delta: f64) -> f64 {
    let k = k as f64;
    (1.0 + CONCENTRATION_C * ((m as f64 / delta).ln() / k).sqrt()) * k
}
