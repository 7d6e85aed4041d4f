//! Private top-k ranking from pairwise comparisons under the
//! Bradley–Terry–Luce model, via the stationary distribution of the
//! comparison random walk (rank centrality).

mod graph;
mod markov;
mod private;

pub use graph::{simulate_comparisons, ComparisonGraph, Edge, PreferenceScores, SampleFlip, SufficientStats};
pub use markov::{
    build_transition, ergodicity_coefficient, ergodicity_report, perturbation_norm, stationary_distribution,
    stationary_sensitivity, ErgodicityReport, StationaryDistribution, TransitionMatrix, STATIONARY_MAX_ITER,
    STATIONARY_TOLERANCE,
};
pub use private::{private_top_k_rank, PreparedRanking, PrivateRanking};
