use nalgebra::{DMatrix, DVector};
use oneshot_topk::ranking::{
    build_transition, ergodicity_coefficient, perturbation_norm, simulate_comparisons, stationary_distribution,
    stationary_sensitivity, ComparisonGraph, PreferenceScores, SampleFlip, SufficientStats, TransitionMatrix,
    STATIONARY_MAX_ITER, STATIONARY_TOLERANCE,
};
use oneshot_topk::RngState;
use proptest::prelude::*;

fn random_stochastic(m: usize, rng: &mut RngState) -> TransitionMatrix {
    let rows = (0..m)
        .map(|_| {
            // Sparse-ish rows so that tau_1 covers the whole [0, 1] range.
            let mut raw: Vec<f64> = (0..m).map(|_| if rng.uniform() < 0.3 { 0.0 } else { rng.uniform() }).collect();
            raw[(rng.uniform() * m as f64) as usize] += 1e-3;
            let s: f64 = raw.iter().sum();
            raw.iter().map(|v| v / s).collect()
        })
        .collect();
    TransitionMatrix::from_rows(rows).unwrap()
}

fn to_dmatrix(p: &TransitionMatrix) -> DMatrix<f64> {
    DMatrix::from_fn(p.m(), p.m(), |i, j| p.get(i, j))
}

/// sup ||v^T P||_1 over the polytope {||v||_1 <= 1, sum v = 0}. Its vertices
/// are where edges of the cross-polytope cross the hyperplane; the convex
/// objective is maximised at one of them. Random feasible points must not
/// exceed the vertex maximum.
fn tau1_by_optimization(p: &TransitionMatrix, rng: &mut RngState) -> f64 {
    let m = p.m();
    let pt = to_dmatrix(p).transpose();
    let objective = |v: &DVector<f64>| (&pt * v).lp_norm(1);
    let signed: Vec<DVector<f64>> = (0..2 * m)
        .map(|a| {
            let mut e = DVector::zeros(m);
            e[a % m] = if a < m { 1.0 } else { -1.0 };
            e
        })
        .collect();
    let mut best: f64 = 0.0;
    for a in 0..signed.len() {
        for b in a + 1..signed.len() {
            let (u, w) = (&signed[a], &signed[b]);
            if a % m == b % m {
                continue;
            }
            let (su, sw) = (u.sum(), w.sum());
            if su == sw {
                continue;
            }
            let t = su / (su - sw);
            let v = u * (1.0 - t) + w * t;
            best = best.max(objective(&v));
        }
    }
    for _ in 0..2000 {
        let mut v = DVector::from_fn(m, |_, _| rng.uniform() - 0.5);
        let mean = v.mean();
        v.add_scalar_mut(-mean);
        let n = v.lp_norm(1);
        if n > 0.0 {
            assert!(objective(&(v / n)) <= best + 1e-12);
        }
    }
    best
}

#[test]
fn ergodicity_coefficient_matches_optimization() {
    let mut rng = RngState::new(1, 0);
    for n in 0..100 {
        let m = 2 + n % 4;
        let p = random_stochastic(m, &mut rng);
        let formula = ergodicity_coefficient(&p);
        let oracle = tau1_by_optimization(&p, &mut rng);
        assert!((formula - oracle).abs() <= 1e-6, "{formula} vs {oracle}");
        assert!((0.0..=1.0).contains(&formula));
    }
}

/// Stationary distribution by solving (P^T - I) pi = 0 with sum pi = 1.
fn stationary_by_linear_solve(p: &TransitionMatrix) -> Vec<f64> {
    let m = p.m();
    let mut a = to_dmatrix(p).transpose() - DMatrix::identity(m, m);
    for j in 0..m {
        a[(m - 1, j)] = 1.0;
    }
    let mut b = DVector::zeros(m);
    b[m - 1] = 1.0;
    a.lu().solve(&b).unwrap().iter().copied().collect()
}

fn constrained_graph(omega: &[f64], comparisons: usize, rng: &mut RngState) -> ComparisonGraph {
    loop {
        let g = simulate_comparisons(&PreferenceScores::new(omega.to_vec()).unwrap(), 0.8, comparisons, rng).unwrap();
        if g.is_connected() && ergodicity_coefficient(&build_transition(&g).unwrap()) < 1.0 {
            return g;
        }
    }
}

#[test]
fn power_iteration_matches_linear_solve() {
    let mut rng = RngState::new(2, 0);
    for _ in 0..30 {
        let g = constrained_graph(&[5.0, 1.0, 2.0, 3.0, 0.5, 1.5], 20, &mut rng);
        let p = build_transition(&g).unwrap();
        let pi = stationary_distribution(&p, STATIONARY_TOLERANCE, STATIONARY_MAX_ITER).unwrap();
        for (a, b) in pi.values().iter().zip(stationary_by_linear_solve(&p)) {
            assert!((a - b).abs() <= 1e-10, "{a} vs {b}");
        }
    }
}

#[test]
fn stationary_perturbation_obeys_contraction_bound() {
    let mut rng = RngState::new(3, 0);
    let mut checked = 0;
    while checked < 100 {
        let g = constrained_graph(&[3.0, 1.0, 2.0, 0.7, 1.2], 4, &mut rng);
        let p = build_transition(&g).unwrap();
        let tau1 = ergodicity_coefficient(&p);
        let edge = (rng.uniform() * g.edges().len() as f64) as usize;
        let sample = (rng.uniform() * g.comparisons() as f64) as usize;
        let flip = SampleFlip { edge, sample, value: !g.edges()[edge].outcomes[sample] };
        let g2 = g.with_sample(flip).unwrap();
        let p2 = build_transition(&g2).unwrap();
        let pi = stationary_distribution(&p, STATIONARY_TOLERANCE, STATIONARY_MAX_ITER).unwrap();
        let pi2 = stationary_distribution(&p2, STATIONARY_TOLERANCE, STATIONARY_MAX_ITER).unwrap();
        let diff = pi.values().iter().zip(pi2.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let norm = perturbation_norm(&g, flip).unwrap();
        assert!(diff <= norm / (1.0 - tau1) + 1e-8, "{diff} > {norm} / (1 - {tau1})");
        let sens = stationary_sensitivity(g.normalization(), g.comparisons(), tau1).unwrap();
        assert!(diff <= sens + 1e-8);
        checked += 1;
    }
}

#[test]
fn exact_btl_rates_recover_scores() {
    let omega = [16.0, 8.0, 4.0, 2.0, 1.0, 3.0];
    let scores = PreferenceScores::new(omega.to_vec()).unwrap();
    let pairs: Vec<(usize, usize)> = (0..6).flat_map(|i| (i + 1..6).map(move |j| (i, j))).collect();
    let stats = SufficientStats::exact_btl(&scores, &pairs).unwrap();
    let p = TransitionMatrix::from_stats(&stats, 6.0).unwrap();
    let pi = stationary_distribution(&p, STATIONARY_TOLERANCE, STATIONARY_MAX_ITER).unwrap();
    let total: f64 = omega.iter().sum();
    for (a, w) in pi.values().iter().zip(omega) {
        assert!((a - w / total).abs() <= 1e-8, "{a} vs {}", w / total);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn win_rates_stay_complementary(seed in any::<u64>(), flips in prop::collection::vec((any::<u16>(), any::<u16>(), any::<bool>()), 0..8)) {
        let mut rng = RngState::new(seed, 0);
        let mut g = simulate_comparisons(&PreferenceScores::new(vec![1.0, 2.0, 3.0, 4.0]).unwrap(), 0.7, 5, &mut rng).unwrap();
        if !g.edges().is_empty() {
            for (e, s, value) in flips {
                let edge = e as usize % g.edges().len();
                let sample = s as usize % g.comparisons();
                g = g.with_sample(SampleFlip { edge, sample, value }).unwrap();
            }
        }
        let stats = g.sufficient_stats();
        for ((i, j), y) in stats.pairs() {
            prop_assert_eq!(stats.ybar(j, i).unwrap(), 1.0 - y);
        }
        let tau = ergodicity_coefficient(&build_transition(&g).unwrap());
        prop_assert!((0.0..=1.0).contains(&tau));
    }
}
