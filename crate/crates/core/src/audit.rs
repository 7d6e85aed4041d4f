//! Privacy certification of the oneshot mechanism on enumerable instances.
//!
//! The audited output is the selected index set only (estimates carry their
//! own Laplace-mechanism guarantee). Over that finite outcome space,
//! `(epsilon, delta)`-DP for a pair is equivalent to the hockey-stick sum
//! `sum_s max(P(s) - e^epsilon P'(s), 0) <= delta` in both directions.

use std::collections::HashMap;

use serde::Serialize;
use statrs::distribution::{Beta, ContinuousCDF};

use crate::analysis::{binomial, check_exact_budget, exact_outcome_probability, EXACT_MAX_SUBSETS, OUTCOME_TOLERANCE};
use crate::error::{invalid, Error, Result};
use crate::mechanisms::{oneshot_select_min, CountVector};
use crate::noise::{NoiseScale, RngState};

/// Upper end of the bisection bracket for epsilon-hat. A report at this
/// value means "at least this large".
pub const EPSILON_CAP: f64 = 20.0;
pub const BISECTION_TOLERANCE: f64 = 1e-4;
/// Joint confidence level of the Monte Carlo intervals.
pub const MC_CONFIDENCE: f64 = 0.99;
pub const MC_MIN_TRIALS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdjacentPair {
    x: CountVector,
    x2: CountVector,
    sensitivity: f64,
}

impl AdjacentPair {
    pub fn new(x: CountVector, x2: CountVector, sensitivity: f64) -> Result<Self> {
        if !(sensitivity > 0.0) || !sensitivity.is_finite() {
            return Err(invalid(format!("sensitivity must be positive (got {sensitivity})")));
        }
        if x.len() != x2.len() {
            return Err(invalid(format!("adjacent vectors differ in length: {} vs {}", x.len(), x2.len())));
        }
        let dist = x.linf_distance(&x2);
        // Corners are built as x + s v and may carry one rounding step.
        if dist > sensitivity * (1.0 + 4.0 * f64::EPSILON) {
            return Err(invalid(format!("||x - x'||_inf = {dist} exceeds sensitivity {sensitivity}")));
        }
        Ok(Self { x, x2, sensitivity })
    }

    pub fn x(&self) -> &CountVector {
        &self.x
    }

    pub fn x2(&self) -> &CountVector {
        &self.x2
    }

    pub fn sensitivity(&self) -> f64 {
        self.sensitivity
    }

    pub fn swapped(&self) -> Self {
        Self { x: self.x2.clone(), x2: self.x.clone(), sensitivity: self.sensitivity }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AuditMethod {
    ExactQuadrature,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    /// Certified (exact) or conservative upper (Monte Carlo) privacy loss.
    pub epsilon_hat: f64,
    /// Lower end of the Monte Carlo confidence interval; equals
    /// `epsilon_hat` for exact audits.
    pub epsilon_lower: f64,
    pub delta: f64,
    pub method: AuditMethod,
    /// Quadrature tolerance for exact audits, trial count for Monte Carlo.
    pub samples_or_tolerance: f64,
    /// Largest 99% half-width over outcome sets (Monte Carlo only, else 0).
    pub max_half_width: f64,
    pub worst_pair: AdjacentPair,
    pub worst_set: Vec<usize>,
}

impl AuditReport {
    /// Ratio `epsilon_hat / epsilon`, how much of the budget is actually spent.
    pub fn slack(&self, epsilon: f64) -> f64 {
        self.epsilon_hat / epsilon
    }
}

/// All k-subsets of `0..m` in lexicographic order.
pub fn enumerate_ksubsets(m: usize, k: usize) -> Result<Vec<Vec<usize>>> {
    if k > m {
        return Err(invalid(format!("k = {k} exceeds m = {m}")));
    }
    let count = binomial(m, k);
    if count > EXACT_MAX_SUBSETS {
        return Err(Error::Budget(format!("C({m}, {k}) = {count} exceeds {EXACT_MAX_SUBSETS}")));
    }
    let mut out = Vec::with_capacity(count as usize);
    let mut current: Vec<usize> = (0..k).collect();
    loop {
        out.push(current.clone());
        // Rightmost position that can still advance.
        let Some(pos) = (0..k).rev().find(|&p| current[p] < m - k + p) else {
            break;
        };
        current[pos] += 1;
        for p in pos + 1..k {
            current[p] = current[p - 1] + 1;
        }
    }
    Ok(out)
}

/// Hockey-stick divergence `sum_s max(p_s - e^eps q_s, 0)`.
pub fn hockey_stick(p: &[f64], q: &[f64], epsilon: f64) -> f64 {
    let scale = epsilon.exp();
    p.iter().zip(q).map(|(&a, &b)| (a - scale * b).max(0.0)).sum()
}

/// Smallest epsilon in `[0, EPSILON_CAP]` (to `BISECTION_TOLERANCE`, rounded
/// up) with both hockey-stick directions at most `delta`.
fn bisect_epsilon(p: &[f64], q: &[f64], delta: f64) -> f64 {
    let ok = |e: f64| hockey_stick(p, q, e) <= delta && hockey_stick(q, p, e) <= delta;
    if ok(0.0) {
        return 0.0;
    }
    if !ok(EPSILON_CAP) {
        return EPSILON_CAP;
    }
    let (mut lo, mut hi) = (0.0, EPSILON_CAP);
    while hi - lo > BISECTION_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

fn worst_set_index(p: &[f64], q: &[f64]) -> usize {
    let loss = |a: f64, b: f64| match (a > 0.0, b > 0.0) {
        (true, true) => (a / b).ln().abs(),
        (false, false) => 0.0,
        _ => f64::INFINITY,
    };
    (0..p.len()).max_by(|&i, &j| loss(p[i], q[i]).total_cmp(&loss(p[j], q[j])).then(j.cmp(&i))).unwrap_or(0)
}

/// Exact probability of every k-subset, in [`enumerate_ksubsets`] order.
pub fn outcome_distribution(x: &CountVector, k: usize, scale: NoiseScale) -> Result<(Vec<Vec<usize>>, Vec<f64>)> {
    check_exact_budget(x.len(), k)?;
    let sets = enumerate_ksubsets(x.len(), k)?;
    let probs = sets.iter().map(|s| exact_outcome_probability(x, s, scale)).collect::<Result<Vec<_>>>()?;
    Ok((sets, probs))
}

fn exact_report(pair: &AdjacentPair, sets: &[Vec<usize>], p: &[f64], q: &[f64], delta: f64) -> AuditReport {
    let epsilon_hat = bisect_epsilon(p, q, delta);
    AuditReport {
        epsilon_hat,
        epsilon_lower: epsilon_hat,
        delta,
        method: AuditMethod::ExactQuadrature,
        samples_or_tolerance: OUTCOME_TOLERANCE,
        max_half_width: 0.0,
        worst_pair: pair.clone(),
        worst_set: sets[worst_set_index(p, q)].clone(),
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if !(0.0..1.0).contains(&delta) {
        return Err(invalid(format!("delta must be in [0, 1) (got {delta})")));
    }
    Ok(())
}

/// Smallest epsilon for which the pair satisfies `(epsilon, delta)`-DP over
/// k-subset outcomes, computed from exact outcome probabilities.
pub fn epsilon_hat_exact(pair: &AdjacentPair, k: usize, scale: NoiseScale, delta: f64) -> Result<AuditReport> {
    check_delta(delta)?;
    let (sets, p) = outcome_distribution(pair.x(), k, scale)?;
    let (_, q) = outcome_distribution(pair.x2(), k, scale)?;
    Ok(exact_report(pair, &sets, &p, &q, delta))
}

fn set_mask(indices: impl IntoIterator<Item = usize>) -> u32 {
    indices.into_iter().fold(0u32, |acc, i| acc | (1 << i))
}

/// Two-sided Clopper–Pearson interval at level `1 - alpha`.
pub fn clopper_pearson(successes: usize, trials: usize, alpha: f64) -> (f64, f64) {
    let (x, n) = (successes as f64, trials as f64);
    let lower = if successes == 0 {
        0.0
    } else {
        Beta::new(x, n - x + 1.0).expect("positive shape parameters").inverse_cdf(alpha / 2.0)
    };
    let upper = if successes == trials {
        1.0
    } else {
        Beta::new(x + 1.0, n - x).expect("positive shape parameters").inverse_cdf(1.0 - alpha / 2.0)
    };
    (lower, upper)
}

fn empirical_distribution(
    x: &CountVector,
    k: usize,
    scale: NoiseScale,
    trials: usize,
    index: &HashMap<u32, usize>,
    rng: &mut RngState,
) -> Result<Vec<usize>> {
    let mut counts = vec![0usize; index.len()];
    for _ in 0..trials {
        let s = oneshot_select_min(x, k, scale, rng)?;
        counts[index[&set_mask(s.indices().iter().copied())]] += 1;
    }
    Ok(counts)
}

/// Sampled counterpart of [`epsilon_hat_exact`].
///
/// Each outcome frequency gets a Clopper–Pearson interval, Bonferroni
/// corrected over both inputs and all sets for joint 99% coverage.
/// `epsilon_hat` is computed on the pessimistic envelope (upper P, lower P')
/// and `epsilon_lower` on the optimistic one.
pub fn epsilon_hat_monte_carlo(
    pair: &AdjacentPair,
    k: usize,
    scale: NoiseScale,
    delta: f64,
    trials: usize,
    rng: &mut RngState,
) -> Result<AuditReport> {
    check_delta(delta)?;
    if trials < MC_MIN_TRIALS {
        return Err(invalid(format!("Monte Carlo audit needs at least {MC_MIN_TRIALS} trials (got {trials})")));
    }
    let m = pair.x().len();
    check_exact_budget(m, k)?;
    let sets = enumerate_ksubsets(m, k)?;
    let index: HashMap<u32, usize> = sets.iter().enumerate().map(|(i, s)| (set_mask(s.iter().copied()), i)).collect();

    let counts_p = empirical_distribution(pair.x(), k, scale, trials, &index, rng)?;
    let counts_q = empirical_distribution(pair.x2(), k, scale, trials, &index, rng)?;

    let alpha = (1.0 - MC_CONFIDENCE) / (2 * sets.len()) as f64;
    let interval = |c: usize| clopper_pearson(c, trials, alpha);
    let ip: Vec<(f64, f64)> = counts_p.iter().map(|&c| interval(c)).collect();
    let iq: Vec<(f64, f64)> = counts_q.iter().map(|&c| interval(c)).collect();

    let ok = |eps: f64, up: &[f64], lo: &[f64]| hockey_stick(up, lo, eps) <= delta;
    let bisect = |pu: &[f64], pl: &[f64], qu: &[f64], ql: &[f64]| {
        let both = |e: f64| ok(e, pu, ql) && ok(e, qu, pl);
        if both(0.0) {
            return 0.0;
        }
        if !both(EPSILON_CAP) {
            return EPSILON_CAP;
        }
        let (mut lo, mut hi) = (0.0, EPSILON_CAP);
        while hi - lo > BISECTION_TOLERANCE {
            let mid = 0.5 * (lo + hi);
            if both(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    };
    let (pl, pu): (Vec<f64>, Vec<f64>) = ip.iter().copied().unzip();
    let (ql, qu): (Vec<f64>, Vec<f64>) = iq.iter().copied().unzip();
    let epsilon_hat = bisect(&pu, &pl, &qu, &ql);
    // Optimistic envelope: each side moved toward the other within its interval.
    let (po, qo): (Vec<f64>, Vec<f64>) = ip
        .iter()
        .zip(&iq)
        .map(|(&(a_lo, a_hi), &(b_lo, b_hi))| {
            let lo = a_lo.max(b_lo);
            let hi = a_hi.min(b_hi);
            if lo <= hi {
                (lo, lo)
            } else if a_hi < b_lo {
                (a_hi, b_lo)
            } else {
                (a_lo, b_hi)
            }
        })
        .unzip();
    let epsilon_lower = bisect_epsilon(&po, &qo, delta).min(epsilon_hat);

    let freq_p: Vec<f64> = counts_p.iter().map(|&c| c as f64 / trials as f64).collect();
    let freq_q: Vec<f64> = counts_q.iter().map(|&c| c as f64 / trials as f64).collect();
    let max_half_width = ip.iter().chain(&iq).map(|(lo, hi)| 0.5 * (hi - lo)).fold(0.0, f64::max);

    Ok(AuditReport {
        epsilon_hat,
        epsilon_lower,
        delta,
        method: AuditMethod::MonteCarlo,
        samples_or_tolerance: trials as f64,
        max_half_width,
        worst_pair: pair.clone(),
        worst_set: sets[worst_set_index(&freq_p, &freq_q)].clone(),
    })
}

/// Adjacent inputs at the corners of the sensitivity box around `x`.
///
/// When `2^m <= limit` every corner `x + s v`, `v in {-1, +1}^m`, is returned.
/// Otherwise only structured corners: for each prefix of the ascending order
/// of `x`, the prefix shifted down and the rest up, and the reverse.
pub fn adjacent_corners(x: &CountVector, sensitivity: f64, limit: usize) -> Vec<CountVector> {
    let m = x.len();
    let v = x.values();
    let corner = |down: &dyn Fn(usize) -> bool| {
        CountVector::new((0..m).map(|i| if down(i) { v[i] - sensitivity } else { v[i] + sensitivity }).collect())
            .expect("finite shift of finite counts")
    };
    if m < usize::BITS as usize && (1usize << m) <= limit {
        return (0..1usize << m).map(|bits| corner(&|i| bits >> i & 1 == 1)).collect();
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]).then(a.cmp(&b)));
    let mut rank = vec![0; m];
    for (r, &i) in order.iter().enumerate() {
        rank[i] = r;
    }
    let mut out = Vec::with_capacity(2 * m);
    for j in 1..m {
        out.push(corner(&|i| rank[i] < j));
        out.push(corner(&|i| rank[i] >= j));
    }
    out
}

/// Worst exact epsilon-hat over the given adjacent inputs of `x`.
///
/// The distribution for `x` is computed once; corners are independent and
/// run in parallel when the `parallel` feature is on. Ties keep the first
/// corner, so the result does not depend on scheduling.
pub fn audit_corners(
    x: &CountVector,
    corners: &[CountVector],
    sensitivity: f64,
    k: usize,
    scale: NoiseScale,
    delta: f64,
) -> Result<AuditReport> {
    check_delta(delta)?;
    if corners.is_empty() {
        return Err(invalid("no adjacent inputs to audit"));
    }
    let (sets, p) = outcome_distribution(x, k, scale)?;
    let one = |x2: &CountVector| -> Result<AuditReport> {
        let pair = AdjacentPair::new(x.clone(), x2.clone(), sensitivity)?;
        let (_, q) = outcome_distribution(x2, k, scale)?;
        Ok(exact_report(&pair, &sets, &p, &q, delta))
    };
    #[cfg(feature = "parallel")]
    let reports: Vec<AuditReport> = {
        use rayon::prelude::*;
        corners.par_iter().map(one).collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let reports: Vec<AuditReport> = corners.iter().map(one).collect::<Result<_>>()?;

    Ok(reports
        .into_iter()
        .reduce(|best, r| if r.epsilon_hat > best.epsilon_hat { r } else { best })
        .expect("at least one corner"))
}

/// [`audit_corners`] over [`adjacent_corners`] of `x`.
pub fn audit_worst_case(
    x: &CountVector,
    sensitivity: f64,
    k: usize,
    scale: NoiseScale,
    delta: f64,
    corner_limit: usize,
) -> Result<AuditReport> {
    let corners = adjacent_corners(x, sensitivity, corner_limit);
    audit_corners(x, &corners, sensitivity, k, scale, delta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanisms::calibrate_pure;

    fn cv(v: &[f64]) -> CountVector {
        CountVector::new(v.to_vec()).unwrap()
    }

    fn factorial_binomial(m: usize, k: usize) -> usize {
        let f = |n: usize| (1..=n).product::<usize>();
        f(m) / (f(k) * f(m - k))
    }

    #[test]
    fn ksubsets_examples() {
        assert_eq!(enumerate_ksubsets(3, 2).unwrap(), vec![vec![0, 1], vec![0, 2], vec![1, 2]]);
        assert_eq!(enumerate_ksubsets(4, 0).unwrap(), vec![Vec::<usize>::new()]);
        for m in 0..=12 {
            for k in 0..=m {
                let sets = enumerate_ksubsets(m, k).unwrap();
                assert_eq!(sets.len(), factorial_binomial(m, k));
                assert!(sets.windows(2).all(|w| w[0] < w[1]));
            }
        }
        assert!(matches!(enumerate_ksubsets(40, 20), Err(Error::Budget(_))));
    }

    #[test]
    fn corners_enumeration() {
        let c = adjacent_corners(&cv(&[0.0, 0.0]), 1.0, 1 << 20);
        assert_eq!(c.len(), 4);
        let mut got: Vec<Vec<f64>> = c.iter().map(|v| v.values().to_vec()).collect();
        got.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(got, vec![vec![-1.0, -1.0], vec![-1.0, 1.0], vec![1.0, -1.0], vec![1.0, 1.0]]);

        let x = cv(&[0.0, 2.0, 1.0]);
        assert_eq!(adjacent_corners(&x, 0.5, 1 << 20).len(), 8);
        for c in adjacent_corners(&x, 0.5, 1 << 20).iter().chain(&adjacent_corners(&x, 0.5, 4)) {
            assert_eq!(x.linf_distance(c), 0.5);
        }
        assert_eq!(adjacent_corners(&x, 0.5, 4).len(), 4);
    }

    #[test]
    fn identical_inputs_have_zero_loss() {
        let x = cv(&[0.0, 1.0, 2.0, 2.0]);
        let pair = AdjacentPair::new(x.clone(), x.clone(), 1.0).unwrap();
        let lam = NoiseScale::new(3.0).unwrap();
        assert_eq!(epsilon_hat_exact(&pair, 2, lam, 0.0).unwrap().epsilon_hat, 0.0);

        let mut rng = RngState::from_seed(1);
        let mc = epsilon_hat_monte_carlo(&pair, 2, lam, 0.0, 20_000, &mut rng).unwrap();
        assert_eq!(mc.epsilon_lower, 0.0);
        assert!(mc.epsilon_hat >= 0.0);
    }

    #[test]
    fn pair_validation() {
        assert!(AdjacentPair::new(cv(&[0.0, 0.0]), cv(&[1.5, 0.0]), 1.0).is_err());
        assert!(AdjacentPair::new(cv(&[0.0, 0.0]), cv(&[0.0]), 1.0).is_err());
        assert!(AdjacentPair::new(cv(&[0.0]), cv(&[0.0]), 0.0).is_err());
    }

    #[test]
    fn exact_audit_is_symmetric() {
        let pair = AdjacentPair::new(cv(&[0.0, 1.0, 1.0, 2.0]), cv(&[1.0, 0.0, 2.0, 1.0]), 1.0).unwrap();
        let lam = NoiseScale::new(2.5).unwrap();
        for delta in [0.0, 0.01] {
            let a = epsilon_hat_exact(&pair, 2, lam, delta).unwrap();
            let b = epsilon_hat_exact(&pair.swapped(), 2, lam, delta).unwrap();
            assert!((a.epsilon_hat - b.epsilon_hat).abs() <= BISECTION_TOLERANCE);
        }
    }

    #[test]
    fn pure_calibration_certifies_small_instance() {
        let lam = calibrate_pure(2, 1.0, 0.5).unwrap();
        assert_eq!(lam.value(), 8.0);
        let r = audit_worst_case(&cv(&[0.0; 4]), 1.0, 2, lam, 0.0, 1 << 20).unwrap();
        assert!(r.epsilon_hat <= 0.5 + 1e-3, "{}", r.epsilon_hat);
        assert!(r.epsilon_hat > 0.0);
        assert_eq!(r.worst_set.len(), 2);
    }

    #[test]
    fn hockey_stick_basics() {
        assert_eq!(hockey_stick(&[0.5, 0.5], &[0.5, 0.5], 0.0), 0.0);
        assert!((hockey_stick(&[0.6, 0.4], &[0.4, 0.6], 0.0) - 0.2).abs() < 1e-15);
        assert_eq!(bisect_epsilon(&[0.6, 0.4], &[0.4, 0.6], 0.2), 0.0);
        let e = bisect_epsilon(&[0.6, 0.4], &[0.4, 0.6], 0.0);
        assert!(e >= 1.5f64.ln() && e <= 1.5f64.ln() + BISECTION_TOLERANCE);
    }

    #[test]
    fn clopper_pearson_edges() {
        let (lo, hi) = clopper_pearson(0, 100, 0.05);
        assert_eq!(lo, 0.0);
        assert!((hi - (1.0 - 0.025f64.powf(0.01))).abs() < 1e-9);
        let (lo, hi) = clopper_pearson(100, 100, 0.05);
        assert_eq!(hi, 1.0);
        assert!(lo > 0.95);
    }
}
