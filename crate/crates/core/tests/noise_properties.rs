use oneshot_topk::noise::{
    laplace_cdf, laplace_density, laplace_diff_density, laplace_inverse_cdf, sample_gumbel, sample_laplace,
};
use oneshot_topk::quadrature::integrate;
use oneshot_topk::{NoiseScale, RngState};
use proptest::prelude::*;

fn scale(l: f64) -> NoiseScale {
    NoiseScale::new(l).unwrap()
}

proptest! {
    #[test]
    fn inverse_cdf_round_trips(u in 1e-300f64..1.0) {
        prop_assume!(u < 1.0);
        let z = laplace_inverse_cdf(u, scale(1.0));
        prop_assert!((laplace_cdf(z) - u).abs() <= 1e-12, "u = {u}, z = {z}, cdf = {}", laplace_cdf(z));
    }

    #[test]
    fn identical_state_replays(seed in any::<u64>(), stream in any::<u64>()) {
        let mut a = RngState::new(seed, stream);
        let mut b = RngState::new(seed, stream);
        for _ in 0..64 {
            prop_assert_eq!(sample_laplace(scale(2.5), &mut a).to_bits(), sample_laplace(scale(2.5), &mut b).to_bits());
            prop_assert_eq!(sample_gumbel(scale(0.5), &mut a).to_bits(), sample_gumbel(scale(0.5), &mut b).to_bits());
        }
    }
}

/// Self-convolution of the Laplace density by quadrature, split at the kinks
/// of both factors.
fn convolved_density(z: f64, lambda: f64) -> f64 {
    let s = scale(lambda);
    let f = |g: f64| laplace_density(g, s) * laplace_density(g - z, s);
    let lo = -60.0 * lambda + z.min(0.0);
    let hi = 60.0 * lambda + z.max(0.0);
    integrate(f, &[lo, 0.0, z, hi], 1e-13, 2000).unwrap().value
}

#[test]
fn difference_density_matches_convolution() {
    for lambda in [0.3, 1.0, 4.0] {
        for step in -100..=100 {
            let z = step as f64 * 0.1 * lambda;
            let closed = laplace_diff_density(z, scale(lambda));
            let conv = convolved_density(z, lambda);
            assert!((closed - conv).abs() <= 1e-8, "lambda {lambda} z {z}: {closed} vs {conv}");
        }
    }
}

#[test]
fn difference_density_integrates_to_one() {
    for lambda in [0.3, 1.0, 4.0] {
        let s = scale(lambda);
        let total = integrate(|z| laplace_diff_density(z, s), &[-80.0 * lambda, 0.0, 80.0 * lambda], 1e-12, 1000)
            .unwrap()
            .value;
        assert!((total - 1.0).abs() <= 1e-8, "lambda {lambda}: {total}");
    }
}

#[test]
fn sampled_differences_follow_density() {
    // Histogram of X - Y against the closed form over a few bins.
    let lambda = 1.5;
    let s = scale(lambda);
    let mut rng = RngState::new(11, 0);
    let n = 400_000;
    let edges = [-6.0, -3.0, -1.0, 0.0, 1.0, 3.0, 6.0];
    let mut counts = vec![0usize; edges.len() - 1];
    for _ in 0..n {
        let d = sample_laplace(s, &mut rng) - sample_laplace(s, &mut rng);
        if let Some(b) = edges.windows(2).position(|w| d >= w[0] && d < w[1]) {
            counts[b] += 1;
        }
    }
    for (b, w) in edges.windows(2).enumerate() {
        let p = integrate(|z| laplace_diff_density(z, s), &[w[0], w[1]], 1e-12, 100).unwrap().value;
        let freq = counts[b] as f64 / n as f64;
        let se = (p * (1.0 - p) / n as f64).sqrt();
        assert!((freq - p).abs() < 5.0 * se, "bin {w:?}: {freq} vs {p}");
    }
}
