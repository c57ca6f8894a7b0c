//! Aggregate, relax, round.
//!
//! Requests sharing an origin and an application are merged and the relaxed
//! model is solved once over the aggregates. Each aggregate's fractional
//! solution then serves as a residual budget for its members: a member of
//! normalized size `d = demand / aggregate demand` draws an alternative in
//! proportion to the residual root weights and walks every virtual link in
//! preorder, at each substrate node either placing the child there or hopping
//! along an outgoing arc drawn by weight. Every step consumes `d` from the
//! variable it used. When a variable holds less than `d` the request is
//! rejected: all of its consumption is given back and that variable is set
//! to zero for good.
//!
//! Aggregates share no variables, so they can be rounded in any order or in
//! parallel; each draws from its own random stream.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formulation::{
    aggregate_requests, build_relaxed_aggregate_lp, Aggregation, FormulationError, FractionalSolution, OwnerFlow,
};
use crate::lp::{solve_lp_with_clock, Clock, FrozenClock, LpError, SolveOptions, SolveStats, Status};
use crate::model::{IntegralEmbedding, Placement, Problem, ResolvedRequest};
use crate::validate::{fractional_cost, CostBreakdown};

/// Slack on `d <= y` comparisons, in units of the aggregate demand.
pub const RESIDUAL_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum TantoError {
    #[error(transparent)]
    Formulation(#[from] FormulationError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("relaxation ended with status {0:?}")]
    Status(Status),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Error)]
pub enum SelectError {
    #[error("no weights to select from")]
    Empty,
    #[error("weights must be finite and nonnegative")]
    BadWeight,
    #[error("all weights are zero")]
    ZeroTotal,
}

/// Draws index `k` with probability `weights[k] / sum(weights)`.
pub fn weighted_random_select<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> Result<usize, SelectError> {
    if weights.is_empty() {
        return Err(SelectError::Empty);
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(SelectError::BadWeight);
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(SelectError::ZeroTotal);
    }
    let mut draw = rng.random::<f64>() * total;
    let mut last = 0;
    for (k, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            if draw < w {
                return Ok(k);
            }
            draw -= w;
            last = k;
        }
    }
    Ok(last)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Var {
    Node { alternative: usize, vnode: usize, snode: usize },
    Link { alternative: usize, vlink: usize, arc: usize },
}

fn slot(flow: &mut OwnerFlow, var: Var) -> &mut f64 {
    match var {
        Var::Node { alternative, vnode, snode } => flow.alternatives[alternative].node_mut(vnode, snode),
        Var::Link { alternative, vlink, arc } => flow.alternatives[alternative].link_mut(vlink, arc),
    }
}

/// Why a request ended up rejected, if it did.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Embedded,
    /// No root weight left: the relaxation itself does not serve it.
    Exhausted,
    /// A variable ran short; it was zeroed.
    Rounding,
}

struct Walk<'a> {
    flow: &'a mut OwnerFlow,
    d: f64,
    consumed: Vec<(Var, f64)>,
    steps: usize,
}

impl Walk<'_> {
    fn take(&mut self, var: Var) -> bool {
        let d = self.d;
        let y = slot(self.flow, var);
        if *y + RESIDUAL_TOLERANCE < d {
            return false;
        }
        let amount = d.min(*y);
        *y -= amount;
        self.consumed.push((var, amount));
        true
    }

    /// Gives back everything consumed, then zeroes `var`.
    fn undo(&mut self, var: Var) {
        for (v, amount) in self.consumed.drain(..).rev() {
            *slot(self.flow, v) += amount;
        }
        *slot(self.flow, var) = 0.0;
    }

    fn fail_last(&mut self) {
        let last = self.consumed.last().expect("root was consumed").0;
        self.undo(last);
    }
}

/// Rounds one request against the residual `flow` of its aggregate.
/// Returns the placement, the reason for a rejection and the number of
/// walk steps taken.
pub fn embed_request<R: Rng + ?Sized>(
    problem: &Problem,
    flow: &mut OwnerFlow,
    demand: f64,
    rng: &mut R,
) -> (Placement, Outcome, usize) {
    let net = problem.substrate();
    let alts = problem.alternatives(flow.app);
    let origin = flow.origin;
    let roots: Vec<f64> =
        alts.iter().enumerate().map(|(t, alt)| flow.alternatives[t].node(alt.root, origin).max(0.0)).collect();
    if roots.iter().all(|&w| w <= RESIDUAL_TOLERANCE) {
        return (Placement::Rejected, Outcome::Exhausted, 0);
    }
    let t = weighted_random_select(&roots, rng).expect("some root weight is positive");
    let alt = &alts[t];
    let cap = 2 * net.node_count();
    let d = demand / flow.normalizer;
    let mut walk = Walk { flow, d, consumed: Vec::new(), steps: 1 };
    let root = Var::Node { alternative: t, vnode: alt.root, snode: origin };
    if !walk.take(root) {
        walk.undo(root);
        return (Placement::Rejected, Outcome::Rounding, walk.steps);
    }
    let mut nodes = vec![usize::MAX; alt.node_count()];
    let mut links = vec![Vec::new(); alt.link_count()];
    nodes[alt.root] = origin;
    for &l in &alt.preorder {
        let (i, j, _) = alt.links[l];
        let mut at = nodes[i];
        let mut link_steps = 0;
        loop {
            if link_steps == cap {
                walk.fail_last();
                return (Placement::Rejected, Outcome::Rounding, walk.steps);
            }
            link_steps += 1;
            walk.steps += 1;
            let here = walk.flow.alternatives[t].node(j, at).max(0.0);
            let out: Vec<f64> =
                net.out_arcs(at).iter().map(|&a| walk.flow.alternatives[t].link(l, a).max(0.0)).collect();
            let total = here + out.iter().sum::<f64>();
            if total <= 0.0 {
                walk.fail_last();
                return (Placement::Rejected, Outcome::Rounding, walk.steps);
            }
            if rng.random::<f64>() * total < here {
                let var = Var::Node { alternative: t, vnode: j, snode: at };
                if !walk.take(var) {
                    walk.undo(var);
                    return (Placement::Rejected, Outcome::Rounding, walk.steps);
                }
                nodes[j] = at;
                break;
            }
            let k = weighted_random_select(&out, rng).expect("outgoing weight is positive");
            let a = net.out_arcs(at)[k];
            let var = Var::Link { alternative: t, vlink: l, arc: a };
            if !walk.take(var) {
                walk.undo(var);
                return (Placement::Rejected, Outcome::Rounding, walk.steps);
            }
            links[l].push(a);
            at = net.arc_ends(a).1;
        }
    }
    (Placement::Embedded { alternative: t, nodes, links }, Outcome::Embedded, walk.steps)
}

/// Result of rounding one aggregate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateRounding {
    pub aggregate: usize,
    /// (request index, placement, outcome, steps) in processing order.
    pub requests: Vec<(usize, Placement, Outcome, usize)>,
    pub initial_nonzero: usize,
    pub residual: OwnerFlow,
}

impl AggregateRounding {
    pub fn count(&self, outcome: Outcome) -> usize {
        self.requests.iter().filter(|r| r.2 == outcome).count()
    }
}

fn nonzero(flow: &OwnerFlow) -> usize {
    flow.alternatives.iter().map(|f| f.node.iter().chain(&f.link).filter(|&&y| y > 0.0).count()).sum()
}

/// Rounds `members` (request indices) in the given order against a copy of
/// `flow`.
pub fn round_members<R: Rng + ?Sized>(
    problem: &Problem,
    aggregate: usize,
    flow: &OwnerFlow,
    members: &[usize],
    requests: &[ResolvedRequest],
    rng: &mut R,
) -> AggregateRounding {
    let mut residual = flow.clone();
    let initial_nonzero = nonzero(&residual);
    let out = members
        .iter()
        .map(|&r| {
            let (placement, outcome, steps) = embed_request(problem, &mut residual, requests[r].demand, rng);
            (r, placement, outcome, steps)
        })
        .collect();
    AggregateRounding { aggregate, requests: out, initial_nonzero, residual }
}

/// Random stream of one aggregate: the run seed with a stream id derived
/// from the aggregate's origin and application.
pub fn aggregate_rng(seed: u64, origin: usize, app: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((origin as u64) << 32) | app as u64);
    rng
}

/// The aggregated relaxation and its solution, ready for rounding.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TantoPlan {
    pub aggregation: Aggregation,
    pub fractional: FractionalSolution,
    pub psi: f64,
    pub lp_objective: f64,
    pub lp_cost: CostBreakdown,
    pub lp_stats: SolveStats,
}

pub fn plan(
    problem: &Problem,
    requests: &[ResolvedRequest],
    psi: f64,
    opts: &SolveOptions,
) -> Result<TantoPlan, TantoError> {
    plan_with_clock(problem, requests, psi, opts, &FrozenClock)
}

pub fn plan_with_clock(
    problem: &Problem,
    requests: &[ResolvedRequest],
    psi: f64,
    opts: &SolveOptions,
    clock: &dyn Clock,
) -> Result<TantoPlan, TantoError> {
    let aggregation = aggregate_requests(requests);
    let model = build_relaxed_aggregate_lp(problem, &aggregation.aggregates, psi)?;
    let sol = solve_lp_with_clock(&model.lp, opts, clock)?;
    if sol.status != Status::Optimal {
        return Err(TantoError::Status(sol.status));
    }
    let mut fractional = model.fractional(problem, &sol.values, sol.objective)?;
    for owner in &mut fractional.owners {
        for flow in &mut owner.alternatives {
            for y in flow.node.iter_mut().chain(flow.link.iter_mut()) {
                *y = y.clamp(0.0, 1.0);
            }
        }
    }
    let lp_cost = fractional_cost(problem, &fractional, psi);
    Ok(TantoPlan { aggregation, fractional, psi, lp_objective: sol.objective, lp_cost, lp_stats: sol.stats })
}

/// Rounds aggregate `k` of `plan` with its own random stream; members are
/// processed in a shuffled order.
pub fn round_aggregate(
    problem: &Problem,
    plan: &TantoPlan,
    k: usize,
    requests: &[ResolvedRequest],
    seed: u64,
) -> AggregateRounding {
    let agg = &plan.aggregation.aggregates[k];
    let mut rng = aggregate_rng(seed, agg.origin, agg.app);
    let mut members = plan.aggregation.members[k].clone();
    members.shuffle(&mut rng);
    round_members(problem, k, &plan.fractional.owners[k], &members, requests, &mut rng)
}

/// Run statistics and the bound checks derived from them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TantoReport {
    pub aggregates: usize,
    pub lp_objective: f64,
    pub lp_rejection: f64,
    pub lp_iterations: u64,
    pub rounding_rejections: usize,
    pub exhausted_rejections: usize,
    pub initial_nonzero: usize,
    pub zeroing_bound_holds: bool,
    pub rejection: f64,
    pub rejection_gap: f64,
    pub rejection_gap_bound: f64,
    pub gap_bound_holds: bool,
    pub max_steps: usize,
    pub total_steps: u64,
    pub step_bound: usize,
    pub step_bound_holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TantoOutcome {
    /// One entry per request, in request order.
    pub embeddings: Vec<IntegralEmbedding>,
    pub outcomes: Vec<Outcome>,
    pub report: TantoReport,
}

/// Collects per-aggregate roundings into embeddings and a report.
pub fn assemble(
    problem: &Problem,
    requests: &[ResolvedRequest],
    plan: &TantoPlan,
    mut rounds: Vec<AggregateRounding>,
) -> TantoOutcome {
    rounds.sort_by_key(|r| r.aggregate);
    let mut embeddings: Vec<IntegralEmbedding> = (0..requests.len()).map(IntegralEmbedding::rejected).collect();
    let mut outcomes = vec![Outcome::Exhausted; requests.len()];
    let (mut max_steps, mut total_steps) = (0, 0u64);
    let (mut rounding, mut exhausted, mut initial_nonzero) = (0, 0, 0);
    let mut rejected_demand = 0.0;
    for round in &rounds {
        initial_nonzero += round.initial_nonzero;
        for (r, placement, outcome, steps) in &round.requests {
            embeddings[*r].placement = placement.clone();
            outcomes[*r] = *outcome;
            max_steps = max_steps.max(*steps);
            total_steps += *steps as u64;
            match outcome {
                Outcome::Embedded => {}
                Outcome::Exhausted => exhausted += 1,
                Outcome::Rounding => rounding += 1,
            }
            if *outcome != Outcome::Embedded {
                rejected_demand += requests[*r].demand;
            }
        }
    }
    let net = problem.substrate();
    let largest_alternative = (0..problem.app_count())
        .flat_map(|a| problem.alternatives(a).iter().map(|t| t.element_count()))
        .max()
        .unwrap_or(0);
    let step_bound = 4 * net.node_count() * largest_alternative;
    let d_max = requests.iter().map(|r| r.demand).fold(0.0, f64::max);
    let rejection_gap_bound = plan.psi * d_max * (net.node_count() * net.arc_count() * problem.total_elements()) as f64;
    let rejection = plan.psi * rejected_demand;
    let rejection_gap = rejection - plan.lp_cost.rejection;
    let report = TantoReport {
        aggregates: plan.aggregation.aggregates.len(),
        lp_objective: plan.lp_objective,
        lp_rejection: plan.lp_cost.rejection,
        lp_iterations: plan.lp_stats.iterations,
        rounding_rejections: rounding,
        exhausted_rejections: exhausted,
        initial_nonzero,
        zeroing_bound_holds: rounding <= initial_nonzero,
        rejection,
        rejection_gap,
        rejection_gap_bound,
        gap_bound_holds: rejection_gap <= rejection_gap_bound,
        max_steps,
        total_steps,
        step_bound,
        step_bound_holds: max_steps <= step_bound,
    };
    TantoOutcome { embeddings, outcomes, report }
}

/// The whole pipeline, rounding aggregates sequentially.
pub fn tanto(
    problem: &Problem,
    requests: &[ResolvedRequest],
    psi: f64,
    opts: &SolveOptions,
    seed: u64,
) -> Result<TantoOutcome, TantoError> {
    let plan = plan(problem, requests, psi, opts)?;
    let rounds =
        (0..plan.aggregation.aggregates.len()).map(|k| round_aggregate(problem, &plan, k, requests, seed)).collect();
    Ok(assemble(problem, requests, &plan, rounds))
}
