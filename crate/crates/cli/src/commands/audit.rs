use std::path::PathBuf;

use oneshot_topk::audit::{
    adjacent_corners, epsilon_hat_exact, epsilon_hat_monte_carlo, AdjacentPair, AuditMethod, AuditReport,
};
use oneshot_topk::mechanisms::{calibrate_approx, calibrate_pure};
use oneshot_topk::{NoiseScale, PrivacyParams, RngState};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{one_based, Ctx, Outcome};
use crate::failure::{require, CliResult, Failure};
use crate::input;
use crate::record::Table;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Exact,
    MonteCarlo,
}

/// Certify the privacy loss of the oneshot mechanism on every adjacent corner
/// of a counts vector. Exits 1 if the loss exceeds the target.
#[derive(Debug, Default, Clone, clap::Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Args {
    /// Counts file: one real per line, `#` comments allowed
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Inline counts instead of --input
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub x: Option<Vec<f64>>,
    /// Number of items to select
    #[arg(long)]
    pub k: Option<usize>,
    /// Target epsilon.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Target delta; 0 audits the pure guarantee [default: 0].
    #[arg(long)]
    pub delta: Option<f64>,
    /// Noise scale; overrides the calibration for (eps, delta).
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Multiplier on the noise scale, e.g. 0.1 for a negative control [default: 1].
    #[arg(long)]
    pub lambda_factor: Option<f64>,
    /// Per-coordinate sensitivity [default: 1]
    #[arg(long)]
    pub sensitivity: Option<f64>,
    /// Exact quadrature, or Monte Carlo with Clopper-Pearson intervals [default: exact]
    #[arg(long, value_enum)]
    pub method: Option<Method>,
    /// Monte Carlo trials per input [default: 100000].
    #[arg(long)]
    pub trials: Option<usize>,
    /// Corner enumeration budget; beyond it a structured subset is used [default: 4096].
    #[arg(long)]
    pub corner_limit: Option<usize>,
    /// Allowed excess of the certified epsilon over the target [default: 0.001].
    #[arg(long)]
    pub tolerance: Option<f64>,
}

pub fn run(flags: &Args, ctx: &Ctx) -> CliResult<Outcome> {
    let mut a = ctx.resolve(flags)?;
    let s = *a.sensitivity.get_or_insert(1.0);
    let delta = *a.delta.get_or_insert(0.0);
    let factor = *a.lambda_factor.get_or_insert(1.0);
    let method = *a.method.get_or_insert(Method::Exact);
    let trials = *a.trials.get_or_insert(100_000);
    let corner_limit = *a.corner_limit.get_or_insert(4096);
    let tolerance = *a.tolerance.get_or_insert(1e-3);
    let x = input::counts(a.input.as_deref(), a.x.as_deref())?;
    let k = require(a.k, "k")?;
    let eps = require(a.eps, "eps")?;
    if eps.is_nan() || eps <= 0.0 {
        return Err(Failure::invalid(format!("eps must be positive (got {eps})")));
    }

    let (base, calibration) = match a.lambda {
        Some(l) => (NoiseScale::new(l)?, "given"),
        None if delta == 0.0 => (calibrate_pure(k, s, eps)?, "pure"),
        None => (calibrate_approx(&PrivacyParams::new(eps, delta, k, x.len(), s)?)?, "approx"),
    };
    let scale = base.scaled(factor)?;

    let corners = adjacent_corners(&x, s, corner_limit);
    let reports: Vec<AuditReport> = corners
        .par_iter()
        .enumerate()
        .map(|(n, x2)| {
            let pair = AdjacentPair::new(x.clone(), x2.clone(), s)?;
            Ok(match method {
                Method::Exact => epsilon_hat_exact(&pair, k, scale, delta)?,
                Method::MonteCarlo => {
                    epsilon_hat_monte_carlo(&pair, k, scale, delta, trials, &mut RngState::new(ctx.seed, n as u64))?
                }
            })
        })
        .collect::<CliResult<_>>()?;

    let mut table = Table::new(&["corner", "x2", "epsilon_hat", "epsilon_lower"]);
    for (n, rep) in reports.iter().enumerate() {
        table.push(vec![
            json!(n),
            json!(rep.worst_pair.x2().values()),
            json!(rep.epsilon_hat),
            json!(rep.epsilon_lower),
        ]);
    }
    let worst = reports
        .iter()
        .reduce(|best, r| if r.epsilon_hat > best.epsilon_hat { r } else { best })
        .expect("at least one corner");
    let passed = worst.epsilon_hat <= eps + tolerance;

    let mut r = ctx.record("audit", &a);
    r.metric("m", x.len())
        .metric("k", k)
        .metric("epsilon", eps)
        .metric("delta", delta)
        .metric("lambda", scale.value())
        .metric("calibration", calibration)
        .metric(
            "method",
            match method {
                Method::Exact => AuditMethod::ExactQuadrature,
                Method::MonteCarlo => AuditMethod::MonteCarlo,
            },
        )
        .metric("corners", corners.len())
        .metric("corners_exhaustive", x.len() < 64 && 1u64 << x.len() <= corner_limit as u64)
        .metric("epsilon_hat", worst.epsilon_hat)
        .metric("epsilon_lower", worst.epsilon_lower)
        .metric("slack", worst.slack(eps))
        .metric("samples_or_tolerance", worst.samples_or_tolerance)
        .metric("max_half_width", worst.max_half_width)
        .metric("worst_x2", worst.worst_pair.x2().values())
        .metric("worst_set", one_based(worst.worst_set.iter().copied()))
        .metric("tolerance", tolerance)
        .metric("passed", passed);
    r.table = Some(table);
    if passed {
        Ok(Outcome::ok(r))
    } else {
        let msg = format!("audit failed: certified epsilon {} exceeds target {eps} (+{tolerance})", worst.epsilon_hat);
        Ok(Outcome::failed(r, msg))
    }
}
