use std::collections::BTreeMap;
use std::path::PathBuf;

use oneshot_topk::mechanisms::{
    calibrate_approx, calibrate_pure, gumbel_oneshot_select, oneshot_select_max, oneshot_select_min, peeling_select,
};
use oneshot_topk::{CountVector, NoiseScale, PrivacyParams, RngState};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{one_based, set_label, Ctx, Outcome};
use crate::failure::{require, CliResult};
use crate::input;
use crate::record::Table;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mechanism {
    Oneshot,
    Peeling,
    Gumbel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Order {
    /// Select the k smallest counts.
    Min,
    /// Select the k largest counts.
    Max,
}

/// Run a top-k selection mechanism on a counts file.
#[derive(Debug, Default, Clone, clap::Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Args {
    /// Counts file: one real per line, `#` comments allowed.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Inline counts instead of --input.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub x: Option<Vec<f64>>,
    /// Number of items to select
    #[arg(long)]
    pub k: Option<usize>,
    /// Privacy budget; calibrates the noise unless --lambda is given
    #[arg(long)]
    pub eps: Option<f64>,
    /// With --eps, use the approximate calibration (oneshot only).
    #[arg(long)]
    pub delta: Option<f64>,
    /// Noise scale; overrides the calibration from --eps/--delta.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Per-coordinate sensitivity [default: 1]
    #[arg(long)]
    pub sensitivity: Option<f64>,
    /// Oneshot Laplace, or a k-round peeling / oneshot-Gumbel baseline [default: oneshot]
    #[arg(long, value_enum)]
    pub mechanism: Option<Mechanism>,
    /// Whether to select the smallest or the largest counts [default: min]
    #[arg(long, value_enum)]
    pub order: Option<Order>,
    /// Independent repetitions, trial t on stream t [default: 1].
    #[arg(long)]
    pub trials: Option<usize>,
}

/// Indices in report order with their estimates (none for Gumbel).
type Draw = (Vec<usize>, Vec<Option<f64>>);

fn draw(
    x: &CountVector,
    k: usize,
    scale: NoiseScale,
    mechanism: Mechanism,
    order: Order,
    rng: &mut RngState,
) -> CliResult<Draw> {
    let sign = if order == Order::Max { -1.0 } else { 1.0 };
    Ok(match mechanism {
        Mechanism::Oneshot => {
            let s = match order {
                Order::Min => oneshot_select_min(x, k, scale, rng)?,
                Order::Max => oneshot_select_max(x, k, scale, rng)?,
            };
            s.estimates().iter().map(|(&i, &e)| (i, Some(e))).unzip()
        }
        Mechanism::Peeling => {
            let input = if order == Order::Max { x.negated() } else { x.clone() };
            peeling_select(&input, k, scale, rng)?.into_iter().map(|(i, e)| (i, Some(sign * e))).unzip()
        }
        Mechanism::Gumbel => {
            let input = if order == Order::Max { x.negated() } else { x.clone() };
            let picked = gumbel_oneshot_select(&input, k, scale, rng)?;
            let none = vec![None; picked.len()];
            (picked, none)
        }
    })
}

pub fn run(flags: &Args, ctx: &Ctx) -> CliResult<Outcome> {
    let mut a = ctx.resolve(flags)?;
    let s = *a.sensitivity.get_or_insert(1.0);
    let mechanism = *a.mechanism.get_or_insert(Mechanism::Oneshot);
    let order = *a.order.get_or_insert(Order::Min);
    let trials = *a.trials.get_or_insert(1);
    let x = input::counts(a.input.as_deref(), a.x.as_deref())?;
    let k = require(a.k, "k")?;

    let (scale, calibration) = match a.lambda {
        Some(l) => (NoiseScale::new(l)?, "given"),
        None => {
            let eps = require(a.eps, "eps")?;
            match a.delta {
                Some(delta) if mechanism == Mechanism::Oneshot => {
                    (calibrate_approx(&PrivacyParams::new(eps, delta, k, x.len(), s)?)?, "approx")
                }
                // Baselines: k rounds at eps / k each.
                _ => (calibrate_pure(k, s, eps)?, "pure"),
            }
        }
    };
    if trials == 0 {
        return Err(crate::failure::Failure::invalid("trials must be at least 1"));
    }

    let draws: Vec<Draw> = (0..trials)
        .into_par_iter()
        .map(|t| draw(&x, k, scale, mechanism, order, &mut RngState::new(ctx.seed, t as u64)))
        .collect::<CliResult<_>>()?;

    let mut r = ctx.record("topk", &a);
    r.metric("m", x.len())
        .metric("k", k)
        .metric("lambda", scale.value())
        .metric("calibration", calibration)
        .metric("mechanism", mechanism)
        .metric("trials", trials);
    if trials == 1 {
        let (indices, estimates) = &draws[0];
        let mut table = Table::new(&["rank", "index", "estimate"]);
        for (n, (i, e)) in indices.iter().zip(estimates).enumerate() {
            table.push(vec![json!(n + 1), json!(i + 1), json!(e)]);
        }
        let mut selection = one_based(indices.iter().copied());
        if mechanism == Mechanism::Oneshot {
            selection.sort_unstable();
        }
        r.metric("selection", selection);
        r.table = Some(table);
    } else {
        let mut table = Table::new(&["trial", "selection"]);
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        for (t, (indices, _)) in draws.iter().enumerate() {
            let mut set = one_based(indices.iter().copied());
            set.sort_unstable();
            let label = set_label(&set);
            *counts.entry(label.clone()).or_default() += 1;
            table.push(vec![json!(t), json!(label)]);
        }
        let modal = counts.iter().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0))).map(|(s, _)| s.clone());
        r.metric("set_counts", counts).metric("modal_set", modal);
        r.table = Some(table);
    }
    Ok(Outcome::ok(r))
}
