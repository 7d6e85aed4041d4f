//! Browser bindings: each export takes plain numbers/strings and returns a
//! JSON string, so the page needs no glue beyond `JSON.parse`.

use oneshot_topk::analysis::{exact_outcome_probability, utility_bound, GapStatistic};
use oneshot_topk::audit::enumerate_ksubsets;
use oneshot_topk::mechanisms::oneshot_select_min;
use oneshot_topk::ranking::{
    build_transition, ergodicity_coefficient, simulate_comparisons, PreferenceScores, PreparedRanking,
};
use oneshot_topk::{CountVector, NoiseScale, RngState};
use serde_json::json;
use wasm_bindgen::prelude::*;

/// Largest vector the exact-distribution view accepts.
pub const MAX_EXACT_ITEMS: usize = 8;

fn parse_list(text: &str) -> Result<Vec<f64>, String> {
    text.split([',', ' ', '\n'])
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse::<f64>().map_err(|_| format!("not a number: `{}`", s.trim())))
        .collect()
}

pub fn utility_curve_json(m: u32, lambda: f64, max_gap: f64, points: u32) -> Result<String, String> {
    if m < 2 {
        return Err("m must be at least 2".into());
    }
    if points < 2 || max_gap.is_nan() || max_gap <= 0.0 {
        return Err("need at least two points and a positive maximum gap".into());
    }
    let scale = NoiseScale::new(lambda).map_err(|e| e.to_string())?;
    let gaps: Vec<f64> = (0..points).map(|i| max_gap * i as f64 / (points - 1) as f64).collect();
    let p: Vec<f64> = gaps
        .iter()
        .map(|&g| utility_bound(m as usize, scale, GapStatistic::new(g).expect("nonnegative gap")))
        .collect();
    Ok(json!({ "gaps": gaps, "p": p }).to_string())
}

pub fn selection_distribution_json(x: &str, k: u32, lambda: f64, trials: u32, seed: u32) -> Result<String, String> {
    let x = CountVector::new(parse_list(x)?).map_err(|e| e.to_string())?;
    if x.len() > MAX_EXACT_ITEMS {
        return Err(format!("at most {MAX_EXACT_ITEMS} counts for the exact view"));
    }
    let k = k as usize;
    let scale = NoiseScale::new(lambda).map_err(|e| e.to_string())?;
    let sets = enumerate_ksubsets(x.len(), k).map_err(|e| e.to_string())?;
    let exact: Vec<f64> = sets
        .iter()
        .map(|s| exact_outcome_probability(&x, s, scale))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let mut counts = vec![0u32; sets.len()];
    let mut rng = RngState::new(u64::from(seed), 0);
    for _ in 0..trials {
        let picked: Vec<usize> =
            oneshot_select_min(&x, k, scale, &mut rng).map_err(|e| e.to_string())?.indices().iter().copied().collect();
        let n = sets.iter().position(|s| *s == picked).expect("selections are k-subsets");
        counts[n] += 1;
    }
    let empirical: Vec<f64> = counts.iter().map(|&c| f64::from(c) / f64::from(trials.max(1))).collect();
    let labels: Vec<Vec<usize>> = sets.iter().map(|s| s.iter().map(|i| i + 1).collect()).collect();
    Ok(json!({ "sets": labels, "exact": exact, "empirical": empirical, "trials": trials }).to_string())
}

#[allow(clippy::too_many_arguments)]
pub fn private_rank_json(
    omega: &str,
    comparisons: u32,
    k: u32,
    epsilon: f64,
    delta: f64,
    rho: f64,
    seed: u32,
) -> Result<String, String> {
    let omega = PreferenceScores::new(parse_list(omega)?).map_err(|e| e.to_string())?;
    let mut sim = RngState::new(u64::from(seed), u64::MAX);
    let graph = simulate_comparisons(&omega, 1.0, comparisons as usize, &mut sim).map_err(|e| e.to_string())?;
    let tau1 = ergodicity_coefficient(&build_transition(&graph).map_err(|e| e.to_string())?);
    let prepared = match PreparedRanking::new(&graph, k as usize, epsilon, delta, rho) {
        Ok(p) => p,
        Err(e) => return Ok(json!({ "tau1": tau1, "refused": e.to_string() }).to_string()),
    };
    let selected: Vec<usize> = prepared
        .select(&mut RngState::new(u64::from(seed), 0))
        .map_err(|e| e.to_string())?
        .into_iter()
        .map(|i| i + 1)
        .collect();
    Ok(json!({
        "tau1": tau1,
        "pi": prepared.stationary().pi,
        "sensitivity": prepared.ergodicity().sensitivity,
        "lambda": prepared.noise_scale().value(),
        "selection": selected,
    })
    .to_string())
}

/// `{gaps, p}`: the exact-recovery lower bound over `points` gaps in [0, max_gap].
#[wasm_bindgen]
pub fn utility_curve(m: u32, lambda: f64, max_gap: f64, points: u32) -> Result<String, JsError> {
    utility_curve_json(m, lambda, max_gap, points).map_err(|e| JsError::new(&e))
}

/// `{sets, exact, empirical}` for the oneshot mechanism on comma-separated counts.
#[wasm_bindgen]
pub fn selection_distribution(x: &str, k: u32, lambda: f64, trials: u32, seed: u32) -> Result<String, JsError> {
    selection_distribution_json(x, k, lambda, trials, seed).map_err(|e| JsError::new(&e))
}

/// Simulate BTL comparisons on a complete graph and release a private top-k.
/// Returns `{tau1, refused}` instead when the graph is not rho-constrained.
#[wasm_bindgen]
pub fn private_rank(
    omega: &str,
    comparisons: u32,
    k: u32,
    epsilon: f64,
    delta: f64,
    rho: f64,
    seed: u32,
) -> Result<String, JsError> {
    private_rank_json(omega, comparisons, k, epsilon, delta, rho, seed).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    fn parse(s: &str) -> Value {
        serde_json::from_str(s).unwrap()
    }

    #[test]
    fn curve_starts_at_bound_for_zero_gap() {
        let v = parse(&utility_curve_json(2, 1.0, 10.0, 11).unwrap());
        assert_eq!(v["p"][0], 0.5);
        assert_eq!(v["gaps"].as_array().unwrap().len(), 11);
        assert!(utility_curve_json(1, 1.0, 10.0, 11).is_err());
    }

    #[test]
    fn distribution_sums_to_one_and_tracks_exact() {
        let v = parse(&selection_distribution_json("0, 1, 2, 3", 2, 1.0, 20_000, 1).unwrap());
        let exact: Vec<f64> = v["exact"].as_array().unwrap().iter().map(|p| p.as_f64().unwrap()).collect();
        let emp: Vec<f64> = v["empirical"].as_array().unwrap().iter().map(|p| p.as_f64().unwrap()).collect();
        assert_eq!(exact.len(), 6);
        assert!((exact.iter().sum::<f64>() - 1.0).abs() < 1e-8);
        for (p, f) in exact.iter().zip(&emp) {
            assert!((p - f).abs() < 5.0 * (p * (1.0 - p) / 20_000.0).sqrt() + 1e-12);
        }
        assert_eq!(v["sets"][0], serde_json::json!([1, 2]));
        assert!(selection_distribution_json("1,2,x", 1, 1.0, 10, 1).is_err());
        assert!(selection_distribution_json("1,2,3,4,5,6,7,8,9", 1, 1.0, 10, 1).is_err());
    }

    #[test]
    fn rank_selects_or_refuses() {
        let v = parse(&private_rank_json("16,8,4,2,1", 100_000, 2, 0.2, 0.05, 0.8, 3).unwrap());
        assert_eq!(v["selection"], serde_json::json!([1, 2]));
        let v = parse(&private_rank_json("16,8,4,2,1", 1000, 2, 0.2, 0.05, 0.3, 3).unwrap());
        assert!(v["refused"].as_str().unwrap().contains("rho"));
    }
}
