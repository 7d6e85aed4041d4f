use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::PathBuf;

use oneshot_topk::analysis::{min_gap, utility_bound};
use oneshot_topk::ranking::{
    build_transition, ergodicity_report, perturbation_norm, simulate_comparisons, stationary_distribution,
    ComparisonGraph, PreferenceScores, PreparedRanking, SampleFlip, STATIONARY_MAX_ITER, STATIONARY_TOLERANCE,
};
use oneshot_topk::{CountVector, RngState};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{one_based, set_label, Ctx, Outcome};
use crate::failure::{require, CliResult, Failure};
use crate::record::Table;

/// Stream for simulating comparison data; trials use streams 0, 1, ...
const SIMULATION_STREAM: u64 = u64::MAX;

/// Private top-k ranking from pairwise comparisons: ingest or simulate,
/// build the random walk, check the ergodicity constraint, select.
#[derive(Debug, Default, Clone, clap::Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Args {
    /// Comparison file (`m=.. L=.. d=..` header, then `i j l outcome` lines).
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Simulate from these BTL scores instead of reading --input.
    #[arg(long, value_delimiter = ',')]
    pub omega: Option<Vec<f64>>,
    /// Edge probability of the simulated graph [default: 1].
    #[arg(long)]
    pub edge_prob: Option<f64>,
    /// Comparisons per edge (L) when simulating.
    #[arg(long)]
    pub comparisons: Option<usize>,
    /// Override the normalization d.
    #[arg(long)]
    pub normalization: Option<f64>,
    /// Number of items to select
    #[arg(long)]
    pub k: Option<usize>,
    /// Privacy budget, in (0, 0.2]
    #[arg(long)]
    pub eps: Option<f64>,
    /// Failure probability, in (0, 0.05]
    #[arg(long)]
    pub delta: Option<f64>,
    /// Claimed bound on the ergodicity coefficient, in [0, 1).
    #[arg(long)]
    pub rho: Option<f64>,
    /// Private draws on the same data [default: 1].
    #[arg(long)]
    pub trials: Option<usize>,
    /// Report the effect of flipping sample `i,j,l` (1-based).
    #[arg(long)]
    pub flip: Option<String>,
    /// Write the (simulated or read) comparison data here.
    #[arg(long)]
    pub save_data: Option<PathBuf>,
}

fn parse_flip(text: &str, graph: &ComparisonGraph) -> CliResult<SampleFlip> {
    let parts: Vec<usize> = text
        .split(',')
        .map(|p| p.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|_| Failure::invalid(format!("--flip expects `i,j,l`, got `{text}`")))?;
    let [i, j, l] = parts[..] else {
        return Err(Failure::invalid(format!("--flip expects `i,j,l`, got `{text}`")));
    };
    if i == 0 || j == 0 || l == 0 || l > graph.comparisons() {
        return Err(Failure::invalid(format!("--flip `{text}` is out of range")));
    }
    let edge = graph
        .edge_index(i - 1, j - 1)
        .ok_or_else(|| Failure::invalid(format!("no comparisons between items {i} and {j}")))?;
    let current = graph.edges()[edge].outcomes[l - 1];
    Ok(SampleFlip { edge, sample: l - 1, value: !current })
}

pub fn run(flags: &Args, ctx: &Ctx) -> CliResult<Outcome> {
    let mut a = ctx.resolve(flags)?;
    let edge_prob = *a.edge_prob.get_or_insert(1.0);
    let trials = *a.trials.get_or_insert(1);
    let k = require(a.k, "k")?;
    let eps = require(a.eps, "eps")?;
    let delta = require(a.delta, "delta")?;
    let rho = require(a.rho, "rho")?;
    if trials == 0 {
        return Err(Failure::invalid("trials must be at least 1"));
    }

    let omega = a.omega.clone().map(PreferenceScores::new).transpose()?;
    let mut graph = match (&a.input, &omega) {
        (Some(_), Some(_)) => return Err(Failure::invalid("give either --input or --omega, not both")),
        (Some(path), None) => {
            let file =
                File::open(path).map_err(|e| Failure::invalid(format!("cannot read {}: {e}", path.display())))?;
            ComparisonGraph::read_from(BufReader::new(file))?
        }
        (None, Some(w)) => {
            let l = require(a.comparisons, "comparisons")?;
            simulate_comparisons(w, edge_prob, l, &mut RngState::new(ctx.seed, SIMULATION_STREAM))?
        }
        (None, None) => return Err(Failure::invalid("no data: pass --input <file> or --omega w1,w2,...")),
    };
    if let Some(d) = a.normalization {
        graph = graph.with_normalization(d)?;
    }
    if let Some(path) = &a.save_data {
        graph.write_to(BufWriter::new(File::create(path)?))?;
    }

    let p = build_transition(&graph)?;
    let report = ergodicity_report(&p, graph.normalization(), graph.comparisons(), rho)?;
    let connected = graph.is_connected();
    let pi = stationary_distribution(&p, STATIONARY_TOLERANCE, STATIONARY_MAX_ITER)?;

    let mut r = ctx.record("rank", &a);
    r.metric("m", graph.m())
        .metric("comparisons", graph.comparisons())
        .metric("normalization", graph.normalization())
        .metric("max_degree", graph.max_degree())
        .metric("connected", connected)
        .metric("tau1", report.tau1)
        .metric("rho", rho)
        .metric("constrained", report.constrained)
        .metric("sensitivity", report.sensitivity)
        .metric("pi", &pi.pi)
        .metric("pi_residual", pi.residual);

    if let Some(text) = &a.flip {
        let flip = parse_flip(text, &graph)?;
        let flipped = graph.with_sample(flip)?;
        let pi2 = stationary_distribution(&build_transition(&flipped)?, STATIONARY_TOLERANCE, STATIONARY_MAX_ITER)?;
        let norm = perturbation_norm(&graph, flip)?;
        let shift = pi.pi.iter().zip(&pi2.pi).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max);
        r.metric("flip_transition_change", norm)
            .metric("flip_expected_change", 2.0 / (graph.normalization() * graph.comparisons() as f64))
            .metric("flip_pi_change", shift)
            .metric("flip_pi_bound", norm / (1.0 - report.tau1));
    }

    if !connected {
        return Ok(Outcome::failed(r, "comparison graph is disconnected; refusing to release a ranking".into()));
    }
    if !report.constrained {
        let msg = format!("ergodicity coefficient {} exceeds rho = {rho}; refusing to release a ranking", report.tau1);
        return Ok(Outcome::failed(r, msg));
    }

    let prepared = PreparedRanking::new(&graph, k, eps, delta, rho)?;
    let lambda = prepared.noise_scale();
    let gap = min_gap(&CountVector::new(pi.pi.clone())?)?;
    r.metric("k", k)
        .metric("epsilon", eps)
        .metric("delta", delta)
        .metric("lambda", lambda.value())
        .metric("pi_min_gap", gap.value())
        .metric("p_bound", utility_bound(graph.m(), lambda, gap));

    let draws: Vec<Vec<usize>> = (0..trials)
        .into_par_iter()
        .map(|t| Ok(one_based(prepared.select(&mut RngState::new(ctx.seed, t as u64))?)))
        .collect::<CliResult<_>>()?;

    if let Some(w) = &omega {
        let mut order: Vec<usize> = (0..w.len()).collect();
        order.sort_by(|&i, &j| w.values()[j].total_cmp(&w.values()[i]).then(i.cmp(&j)));
        let mut truth = one_based(order.into_iter().take(k));
        truth.sort_unstable();
        let hits = draws.iter().filter(|d| **d == truth).count();
        r.metric("true_top_k", &truth).metric("recovery_frequency", hits as f64 / trials as f64);
    }
    if trials == 1 {
        r.metric("selection", &draws[0]);
    } else {
        let mut table = Table::new(&["trial", "selection"]);
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        for (t, d) in draws.iter().enumerate() {
            let label = set_label(d);
            *counts.entry(label.clone()).or_default() += 1;
            table.push(vec![json!(t), json!(label)]);
        }
        r.metric("set_counts", counts);
        r.table = Some(table);
    }
    Ok(Outcome::ok(r))
}
