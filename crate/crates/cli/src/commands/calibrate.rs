use oneshot_topk::analysis::{in_sqrt_k_regime, max_tau, C0};
use oneshot_topk::mechanisms::{calibrate_approx, calibrate_pure};
use oneshot_topk::PrivacyParams;
use serde::{Deserialize, Serialize};

use super::{Ctx, Outcome};
use crate::failure::{require, CliResult};

/// Noise scales for the pure and approximate guarantees.
#[derive(Debug, Default, Clone, clap::Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Args {
    /// Number of items to select.
    #[arg(long)]
    pub k: Option<usize>,
    /// Number of items.
    #[arg(long)]
    pub m: Option<usize>,
    /// Privacy budget, in (0, 0.2].
    #[arg(long)]
    pub eps: Option<f64>,
    /// Failure probability, in (0, 0.05].
    #[arg(long)]
    pub delta: Option<f64>,
    /// Per-coordinate sensitivity [default: 1].
    #[arg(long)]
    pub sensitivity: Option<f64>,
}

pub fn run(flags: &Args, ctx: &Ctx) -> CliResult<Outcome> {
    let mut a = ctx.resolve(flags)?;
    let s = *a.sensitivity.get_or_insert(1.0);
    let k = require(a.k, "k")?;
    let m = require(a.m, "m")?;
    let eps = require(a.eps, "eps")?;
    let delta = require(a.delta, "delta")?;
    let params = PrivacyParams::new(eps, delta, k, m, s)?;
    let pure = calibrate_pure(k, s, eps)?.value();
    let approx = calibrate_approx(&params)?.value();

    let mut r = ctx.record("calibrate", &a);
    r.metric("k", k)
        .metric("m", m)
        .metric("epsilon", eps)
        .metric("delta", delta)
        .metric("sensitivity", s)
        .metric("lambda_pure", pure)
        .metric("lambda_approx", approx)
        .metric("lambda_recommended", pure.min(approx))
        .metric("regime_threshold", C0 * (m as f64 / delta).ln())
        .metric("sqrt_k_regime", in_sqrt_k_regime(k, m, delta))
        .metric("max_tau", max_tau(eps, k, m, delta));
    Ok(Outcome::ok(r))
}
