use std::collections::BTreeSet;
use std::path::PathBuf;

use oneshot_topk::analysis::{min_gap, utility_bound, GapStatistic};
use oneshot_topk::audit::clopper_pearson;
use oneshot_topk::mechanisms::oneshot_select_min;
use oneshot_topk::{CountVector, NoiseScale, RngState};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Ctx, Outcome};
use crate::failure::{require, CliResult, Failure};
use crate::input;

/// Compare the exact-recovery lower bound p(gap) with simulation.
/// Without counts, uses x_i = i * gap for i = 0..m.
#[derive(Debug, Default, Clone, clap::Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Args {
    /// Number of items, with counts i * gap for i = 0..m
    #[arg(long)]
    pub m: Option<usize>,
    /// Number of items to select [default: 1]
    #[arg(long)]
    pub k: Option<usize>,
    /// Noise scale [default: 1]
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Minimum gap between sorted counts.
    #[arg(long)]
    pub gap: Option<f64>,
    /// Counts file instead of --m/--gap
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Inline counts instead of --input
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub x: Option<Vec<f64>>,
    /// Simulation trials; 0 evaluates the bound only [default: 100000].
    #[arg(long)]
    pub trials: Option<usize>,
}

fn k_smallest(x: &CountVector, k: usize) -> BTreeSet<usize> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x.values()[a].total_cmp(&x.values()[b]).then(a.cmp(&b)));
    order.into_iter().take(k).collect()
}

pub fn run(flags: &Args, ctx: &Ctx) -> CliResult<Outcome> {
    let mut a = ctx.resolve(flags)?;
    let k = *a.k.get_or_insert(1);
    let lambda = *a.lambda.get_or_insert(1.0);
    let trials = *a.trials.get_or_insert(100_000);
    let scale = NoiseScale::new(lambda)?;

    let given = if a.input.is_some() || a.x.is_some() {
        Some(input::counts(a.input.as_deref(), a.x.as_deref())?)
    } else {
        None
    };
    let (m, gap) = match &given {
        Some(x) => (x.len(), min_gap(x)?),
        None => (require(a.m, "m")?, GapStatistic::new(require(a.gap, "gap")?)?),
    };
    if m < 2 {
        return Err(Failure::invalid(format!("m must be at least 2 (got {m})")));
    }
    if k < 1 || k > m {
        return Err(Failure::invalid(format!("k must be in [1, m] = [1, {m}] (got {k})")));
    }
    let p = utility_bound(m, scale, gap);

    let mut r = ctx.record("utility", &a);
    r.metric("m", m)
        .metric("k", k)
        .metric("lambda", lambda)
        .metric("gap", gap.value())
        .metric("gap_over_lambda", gap.value() / lambda)
        .metric("p_bound", p)
        .metric("trials", trials);
    if trials == 0 {
        return Ok(Outcome::ok(r));
    }

    let x = match given {
        Some(x) => x,
        None => CountVector::new((0..m).map(|i| i as f64 * gap.value()).collect())?,
    };
    let truth = k_smallest(&x, k);
    let runs: Vec<(bool, f64)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let s = oneshot_select_min(&x, k, scale, &mut RngState::new(ctx.seed, t as u64))?;
            let err: f64 = s.estimates().iter().map(|(&i, &e)| (e - x.values()[i]).abs()).sum();
            Ok((s.indices() == &truth, err))
        })
        .collect::<CliResult<_>>()?;
    let hits = runs.iter().filter(|(h, _)| *h).count();
    let abs_err: f64 = runs.iter().map(|(_, e)| e).sum();
    let n = trials as f64;
    let freq = hits as f64 / n;
    let stderr = (p * (1.0 - p) / n).sqrt();
    let (lo, hi) = clopper_pearson(hits, trials, 0.05);
    let respected = freq >= p - 3.0 * stderr;
    r.metric("frequency", freq)
        .metric("ci95_low", lo)
        .metric("ci95_high", hi)
        .metric("stderr_at_bound", stderr)
        .metric("mean_abs_error", abs_err / (n * k as f64))
        .metric("bound_respected", respected);
    if respected {
        Ok(Outcome::ok(r))
    } else {
        Ok(Outcome::failed(
            r,
            format!("recovery frequency {freq} is below p(gap) = {p} by more than 3 standard errors"),
        ))
    }
}
