//! Laplace and Gumbel noise.
//!
//! Sampling is explicit-state: every draw takes a [`RngState`], a ChaCha8
//! stream addressed by `(seed, stream)`. Monte Carlo drivers give trial `t`
//! the stream `t`, so results do not depend on how trials are scheduled.

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Euler–Mascheroni constant, the mean of the standard Gumbel distribution.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Scale `lambda` of a Laplace (or Gumbel) distribution. Always positive and finite.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct NoiseScale(f64);

impl NoiseScale {
    pub fn new(lambda: f64) -> Result<Self> {
        if lambda.is_finite() && lambda > 0.0 {
            Ok(Self(lambda))
        } else {
            Err(invalid(format!("noise scale must be positive and finite (got {lambda})")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Multiply the scale by a positive factor.
    pub fn scaled(self, factor: f64) -> Result<Self> {
        Self::new(self.0 * factor)
    }
}

impl TryFrom<f64> for NoiseScale {
    type Error = crate::Error;

    fn try_from(lambda: f64) -> Result<Self> {
        Self::new(lambda)
    }
}

impl From<NoiseScale> for f64 {
    fn from(scale: NoiseScale) -> f64 {
        scale.0
    }
}

/// Reproducible random stream.
///
/// Two states built from the same `(seed, stream)` produce identical draw
/// sequences; distinct streams under one seed are independent.
#[derive(Debug, Clone)]
pub struct RngState {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
}

impl RngState {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { seed, stream, rng }
    }

    pub fn from_seed(seed: u64) -> Self {
        Self::new(seed, 0)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Uniform draw on the open interval (0, 1).
    pub fn uniform(&mut self) -> f64 {
        self.rng.sample(Open01)
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }
}

/// Inverse CDF of Laplace(0, `scale`) evaluated at `u` in (0, 1).
pub fn laplace_inverse_cdf(u: f64, scale: NoiseScale) -> f64 {
    let lambda = scale.value();
    if u < 0.5 {
        lambda * (2.0 * u).ln()
    } else {
        -lambda * (2.0 * (1.0 - u)).ln()
    }
}

/// One Laplace(0, `scale`) draw. Consumes exactly one uniform.
pub fn sample_laplace(scale: NoiseScale, rng: &mut RngState) -> f64 {
    laplace_inverse_cdf(rng.uniform(), scale)
}

/// CDF `G` of the standard Laplace distribution.
pub fn laplace_cdf(z: f64) -> f64 {
    if z <= 0.0 {
        0.5 * z.exp()
    } else {
        1.0 - 0.5 * (-z).exp()
    }
}

/// Survival function `1 - G(z)` of the standard Laplace distribution,
/// computed without cancellation in the upper tail.
pub fn laplace_sf(z: f64) -> f64 {
    laplace_cdf(-z)
}

/// Density of Laplace(0, `scale`).
pub fn laplace_density(z: f64, scale: NoiseScale) -> f64 {
    let lambda = scale.value();
    (-z.abs() / lambda).exp() / (2.0 * lambda)
}

/// Density of `X - Y` for independent `X, Y ~ Laplace(0, scale)`:
/// `(lambda + |z|) / (4 lambda^2) * exp(-|z| / lambda)`.
pub fn laplace_diff_density(z: f64, scale: NoiseScale) -> f64 {
    let lambda = scale.value();
    let a = z.abs();
    (lambda + a) / (4.0 * lambda * lambda) * (-a / lambda).exp()
}

/// One Gumbel(0, `scale`) draw by inverse CDF.
pub fn sample_gumbel(scale: NoiseScale, rng: &mut RngState) -> f64 {
    -scale.value() * (-rng.uniform().ln()).ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn unit() -> NoiseScale {
        NoiseScale::new(1.0).unwrap()
    }

    #[test]
    fn scale_rejects_nonpositive_and_nonfinite() {
        assert!(NoiseScale::new(0.0).is_err());
        assert!(NoiseScale::new(-1.0).is_err());
        assert!(NoiseScale::new(f64::NAN).is_err());
        assert!(NoiseScale::new(f64::INFINITY).is_err());
    }

    #[test]
    fn inverse_cdf_median_is_zero() {
        assert_eq!(laplace_inverse_cdf(0.5, unit()), 0.0);
    }

    #[test]
    fn cdf_reference_points() {
        assert_eq!(laplace_cdf(0.0), 0.5);
        assert_abs_diff_eq!(laplace_cdf(2f64.ln()), 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(laplace_cdf(-(2f64.ln())), 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(laplace_sf(40.0), 0.5 * (-40f64).exp(), epsilon = 1e-30);
    }

    #[test]
    fn diff_density_at_zero() {
        assert_eq!(laplace_diff_density(0.0, unit()), 0.25);
        for i in -50..=50 {
            let z = i as f64 * 0.37;
            assert_eq!(laplace_diff_density(z, unit()), laplace_diff_density(-z, unit()));
        }
    }

    #[test]
    fn laplace_moments() {
        let mut rng = RngState::from_seed(11);
        let n = 1_000_000;
        let mean_abs = (0..n).map(|_| sample_laplace(unit(), &mut rng).abs()).sum::<f64>() / n as f64;
        assert!((mean_abs - 1.0).abs() < 0.01, "mean |Z| = {mean_abs}");

        let two = NoiseScale::new(2.0).unwrap();
        let below = (0..n).filter(|_| sample_laplace(two, &mut rng) <= 0.0).count();
        assert!((below as f64 / n as f64 - 0.5).abs() < 0.005);
    }

    #[test]
    fn gumbel_mean_and_linearity() {
        let mut rng = RngState::from_seed(5);
        let n = 1_000_000;
        let mean = (0..n).map(|_| sample_gumbel(unit(), &mut rng)).sum::<f64>() / n as f64;
        assert!((mean - EULER_GAMMA).abs() < 0.01, "gumbel mean {mean}");

        let two = NoiseScale::new(2.0).unwrap();
        let mut a = RngState::new(9, 3);
        let mut b = RngState::new(9, 3);
        for _ in 0..100 {
            assert_eq!(sample_gumbel(two, &mut a), 2.0 * sample_gumbel(unit(), &mut b));
        }
    }

    #[test]
    fn streams_replay_and_separate() {
        let draw = |seed, stream| {
            let mut r = RngState::new(seed, stream);
            (0..16).map(|_| r.uniform()).collect::<Vec<_>>()
        };
        assert_eq!(draw(1, 0), draw(1, 0));
        assert_ne!(draw(1, 0), draw(1, 1));
        assert_ne!(draw(1, 0), draw(2, 0));
    }
}
