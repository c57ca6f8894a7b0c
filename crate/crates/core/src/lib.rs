//! Virtual network embedding with alternative topologies.
//!
//! Every request asks for one of several functionally equivalent virtual
//! trees to be mapped onto a capacitated substrate. This crate contains the
//! problem model, the exact MILP and its aggregated LP relaxation, a revised
//! simplex and branch-and-bound backend, the GREEDY and TANTO heuristics and
//! an independent feasibility and cost validator.
//!
//! The crate is `no_std` and needs only `alloc`.

#![no_std]

extern crate alloc;

pub mod fixtures;
pub mod formulation;
pub mod greedy;
pub mod lp;
pub mod model;
pub mod tanto;
pub mod validate;

pub use formulation::{
    aggregate_requests, build_milp, build_relaxed_aggregate_lp, build_relaxed_lp, compute_rejection_penalty,
    merge_solution, restrict_problem, restrict_to_alternative, split_solution, AggregatedRequest, Aggregation, AltFlow,
    EmbeddingModel, FormulationError, FractionalSolution, OwnerFlow, PenaltyBasis, RejectionPenalty,
};
pub use greedy::{greedy_embed_all, minv_embed, GreedyOutcome, ResidualState};
pub use lp::{solve_lp, solve_milp_exact, LinearProgram, LpError, Sense, Solution, SolveOptions, Status};
pub use model::{
    Application, Catalog, Efficiency, EfficiencyMap, IntegralEmbedding, ModelError, Placement, Problem, Request,
    ResolvedRequest, SubstrateNetwork, Tier,
};
pub use tanto::{tanto, weighted_random_select, TantoError, TantoOutcome, TantoReport};
pub use validate::{
    alternative_shares, check_feasibility, rejection_rate, total_cost, CostBreakdown, LoadVector, Violation,
};
