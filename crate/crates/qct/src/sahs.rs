//! Depth-d look-ahead heuristic-search router and its policy-pruned variant.
//!
//! Each commit step builds a search tree of depth `d`: every node is the
//! routing state after some swap sequence, every edge a candidate swap. The
//! first swap on the path to the best-valued leaf is committed. The pruned
//! variant lets the policy network discard the least-promising candidate
//! swaps before a node is opened, shrinking the branching factor.

use std::time::Instant;

use rayon::prelude::*;

use crate::arch::{ArchGraph, DistanceMatrix};
use crate::circuit::{Circuit, Gate};
use crate::error::RouteError;
use crate::policy::PolicyModel;
use crate::route::{Mapping, RoutingResult};
use crate::state::{RouteState, RoutingProblem};

#[derive(Debug, Clone)]
pub struct SahsParams {
    /// Search depth d.
    pub depth: usize,
    /// Number of look-ahead layer groups scored by the heuristic.
    pub lookahead_layers: usize,
    /// Geometric decay applied per look-ahead layer.
    pub lookahead_decay: f64,
    /// Weight of the look-ahead cost against executed gates.
    pub lookahead_weight: f64,
    /// Parallelize the first expansion level.
    pub parallel: bool,
}

impl Default for SahsParams {
    fn default() -> Self {
        SahsParams {
            depth: 2,
            lookahead_layers: 2,
            lookahead_decay: 0.5,
            lookahead_weight: 0.5,
            parallel: true,
        }
    }
}

/// A node of the commit-step search tree, in its explicit form.
#[derive(Debug, Clone)]
pub struct SearchNode {
    pub mapping: Mapping,
    pub remaining: Circuit,
    pub swaps_from_root: Vec<(usize, usize)>,
    pub executed_count: usize,
}

/// Heuristic value of a node: executed gates minus the decayed layered
/// look-ahead cost of its remaining circuit. Higher is better.
pub fn node_value(n: &SearchNode, d: &DistanceMatrix, params: &SahsParams) -> f64 {
    let mut frontier = vec![0usize; n.remaining.num_qubits()];
    let mut costs = vec![0u32; params.lookahead_layers];
    for g in n.remaining.gates() {
        let layer = frontier[g.q0].max(frontier[g.q1]);
        frontier[g.q0] = layer + 1;
        frontier[g.q1] = layer + 1;
        if layer < params.lookahead_layers {
            costs[layer] += d.get(n.mapping.phys(g.q0), n.mapping.phys(g.q1)) - 1;
        }
    }
    value_from_costs(n.executed_count, &costs, params)
}

fn value_from_costs(executed: usize, layer_costs: &[u32], params: &SahsParams) -> f64 {
    let mut lookahead = 0.0;
    let mut decay = 1.0;
    for &c in layer_costs {
        lookahead += decay * c as f64;
        decay *= params.lookahead_decay;
    }
    executed as f64 - params.lookahead_weight * lookahead
}

fn state_value(state: &RouteState, p: &RoutingProblem, base_executed: usize, params: &SahsParams) -> f64 {
    let costs = state.layered_costs(p, params.lookahead_layers);
    value_from_costs(state.executed - base_executed, &costs, params)
}

/// Candidate swaps for opening a node: all edges, or the top fraction by
/// recommendation probability when pruning is active. Kept candidates stay
/// in canonical order; probability ties resolve to the earlier edge.
fn allowed_edges(
    g: &ArchGraph,
    state: &RouteState,
    p: &RoutingProblem,
    model: Option<&PolicyModel>,
    prune_count: usize,
) -> Vec<usize> {
    let num_edges = g.num_edges();
    if prune_count == 0 || model.is_none() {
        return (0..num_edges).collect();
    }
    let probs = model.unwrap().recommend(&state.remaining_gates(p), &state.mapping);
    let mut order: Vec<usize> = (0..num_edges).collect();
    order.sort_by(|&a, &b| probs[b].partial_cmp(&probs[a]).unwrap().then(a.cmp(&b)));
    let keep = (num_edges - prune_count).max(1);
    let mut kept: Vec<usize> = order[..keep].to_vec();
    kept.sort_unstable();
    kept
}

struct SubtreeBest {
    value: f64,
    first_edge: usize,
    expansions: u64,
}

/// Expand the subtree under (`state` after swapping `first_edge`) to the
/// remaining depth, returning the best leaf value seen.
fn expand_subtree(
    p: &RoutingProblem,
    g: &ArchGraph,
    root_executed: usize,
    state: &RouteState,
    first_edge: usize,
    depth: usize,
    params: &SahsParams,
    model: Option<&PolicyModel>,
    prune_count: usize,
) -> SubtreeBest {
    let (u, v) = g.edges()[first_edge];
    let mut child = state.clone();
    child.apply_swap(u, v);
    child.execute_all(p, None);
    let mut expansions = 1u64;

    let mut best = state_value(&child, p, root_executed, params);
    if depth > 1 && !child.is_done() {
        let mut frontier = vec![child];
        for _level in 1..depth {
            let mut next = Vec::with_capacity(frontier.len() * g.num_edges());
            for node in &frontier {
                for e in allowed_edges(g, node, p, model, prune_count) {
                    let (u, v) = g.edges()[e];
                    let mut c = node.clone();
                    c.apply_swap(u, v);
                    c.execute_all(p, None);
                    expansions += 1;
                    let value = state_value(&c, p, root_executed, params);
                    if value > best {
                        best = value;
                    }
                    if !c.is_done() {
                        next.push(c);
                    }
                }
            }
            frontier = next;
            if frontier.is_empty() {
                break;
            }
        }
    }
    SubtreeBest { value: best, first_edge, expansions }
}

fn route_impl(
    lc: &Circuit,
    g: &ArchGraph,
    tau_ini: &Mapping,
    params: &SahsParams,
    model: Option<&PolicyModel>,
    pruning_ratio: f64,
) -> Result<RoutingResult, RouteError> {
    if !(0.0..1.0).contains(&pruning_ratio) {
        return Err(RouteError::BadPruningRatio { ratio: pruning_ratio });
    }
    if let Some(m) = model {
        m.check_graph(g)?;
    }
    assert!(params.depth >= 1, "search depth must be at least 1");
    let start = Instant::now();
    let p = RoutingProblem::new(lc, g)?;
    let prune_count = (pruning_ratio * g.num_edges() as f64).floor() as usize;

    let mut state = p.initial_state(tau_ini);
    let mut pc = Vec::new();
    let mut swaps = 0usize;
    let mut expansions = 0u64;
    state.execute_all(&p, Some(&mut pc));

    while !state.is_done() {
        let root_executed = state.executed;
        let candidates = allowed_edges(g, &state, &p, model, prune_count);
        let evaluate = |&e: &usize| {
            expand_subtree(&p, g, root_executed, &state, e, params.depth, params, model, prune_count)
        };
        let results: Vec<SubtreeBest> = if params.parallel {
            candidates.par_iter().map(evaluate).collect()
        } else {
            candidates.iter().map(evaluate).collect()
        };
        // deterministic reduce: strict improvement, earliest edge wins ties
        let mut best: Option<&SubtreeBest> = None;
        for r in &results {
            expansions += r.expansions;
            if best.map_or(true, |b| r.value > b.value) {
                best = Some(r);
            }
        }
        let chosen = best.expect("at least one candidate swap").first_edge;
        let (u, v) = g.edges()[chosen];
        state.apply_swap(u, v);
        pc.push(Gate::swap(u, v));
        swaps += 1;
        state.execute_all(&p, Some(&mut pc));
    }

    Ok(RoutingResult {
        physical_circuit: Circuit::new(g.num_nodes(), pc).expect("router output"),
        initial_mapping: tau_ini.clone(),
        swap_count: swaps,
        elapsed: start.elapsed(),
        node_expansions: expansions,
    })
}

/// Depth-d look-ahead heuristic-search router.
pub fn sahs_route(
    lc: &Circuit,
    g: &ArchGraph,
    tau_ini: &Mapping,
    params: &SahsParams,
) -> Result<RoutingResult, RouteError> {
    route_impl(lc, g, tau_ini, params, None, 0.0)
}

/// SAHS with policy pruning: before a node is opened the model scores all
/// candidate swaps and the lowest `floor(pruning_ratio * |E|)` are
/// discarded (always keeping at least one). Ratio 0 reproduces
/// [`sahs_route`] exactly.
pub fn sahs_ann_route(
    lc: &Circuit,
    g: &ArchGraph,
    tau_ini: &Mapping,
    params: &SahsParams,
    model: &PolicyModel,
    pruning_ratio: f64,
) -> Result<RoutingResult, RouteError> {
    route_impl(lc, g, tau_ini, params, Some(model), pruning_ratio)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::random_circuit;
    use crate::fixtures::lookahead_fixture;
    use crate::route::{base_route, min_swap_brute_force, verify};

    fn grid23() -> ArchGraph {
        ArchGraph::grid(2, 3).unwrap()
    }

    #[test]
    fn executable_circuit_needs_no_swaps() {
        let g = grid23();
        let tau = Mapping::naive(6);
        let c = Circuit::new(6, vec![Gate::cnot(0, 1), Gate::cnot(2, 4)]).unwrap();
        let r = sahs_route(&c, &g, &tau, &SahsParams::default()).unwrap();
        assert_eq!(r.swap_count, 0);
    }

    #[test]
    fn node_value_ranks_by_cost_and_execution() {
        let g = grid23();
        let d = DistanceMatrix::new(&g);
        let params = SahsParams::default();
        let empty = SearchNode {
            mapping: Mapping::naive(6),
            remaining: Circuit::empty(6),
            swaps_from_root: vec![(1, 3)],
            executed_count: 3,
        };
        let busy = SearchNode {
            remaining: lookahead_fixture(),
            executed_count: 3,
            ..empty.clone()
        };
        assert!(node_value(&empty, &d, &params) > node_value(&busy, &d, &params));

        let fewer = SearchNode { executed_count: 2, ..empty.clone() };
        assert!(node_value(&empty, &d, &params) > node_value(&fewer, &d, &params));

        // cost 1 vs cost 0 at layer 0, same execution count
        let cheap = SearchNode {
            mapping: Mapping::naive(6),
            remaining: Circuit::new(6, vec![Gate::cnot(0, 1)]).unwrap(),
            swaps_from_root: vec![],
            executed_count: 0,
        };
        let costly = SearchNode {
            remaining: Circuit::new(6, vec![Gate::cnot(1, 5)]).unwrap(),
            ..cheap.clone()
        };
        assert!(node_value(&cheap, &d, &params) > node_value(&costly, &d, &params));
    }

    #[test]
    fn solves_fixture_optimally() {
        let g = grid23();
        let tau = Mapping::naive(6);
        let fix = lookahead_fixture();
        let r = sahs_route(&fix, &g, &tau, &SahsParams::default()).unwrap();
        verify(&r.physical_circuit, &fix, &g, &tau).unwrap();
        assert_eq!(r.swap_count, 2);
    }

    #[test]
    fn outputs_verify_and_respect_oracle() {
        let g = grid23();
        let tau = Mapping::naive(6);
        let params = SahsParams::default();
        let mut wins = 0usize;
        let total = 50;
        for seed in 0..total {
            let c = random_circuit(6, 5, seed).unwrap();
            let r = sahs_route(&c, &g, &tau, &params).unwrap();
            verify(&r.physical_circuit, &c, &g, &tau).unwrap();
            let optimum = min_swap_brute_force(&c, &g, &tau, 4).unwrap();
            assert!(r.swap_count >= optimum);
            let b = base_route(&c, &g, &tau).unwrap();
            if r.swap_count <= b.swap_count {
                wins += 1;
            }
        }
        assert!(wins * 2 >= total as usize, "beats BASE on only {wins}/{total}");
    }

    #[test]
    fn deeper_search_is_not_worse_on_average() {
        let g = ArchGraph::grid(4, 4).unwrap();
        let tau = Mapping::naive(16);
        let mut totals = [0usize; 2];
        for seed in 0..20 {
            let c = random_circuit(16, 30, seed).unwrap();
            for (i, depth) in [2, 3].into_iter().enumerate() {
                let params = SahsParams { depth, ..Default::default() };
                totals[i] += sahs_route(&c, &g, &tau, &params).unwrap().swap_count;
            }
        }
        assert!(totals[1] <= totals[0], "d=3 {} vs d=2 {}", totals[1], totals[0]);
    }

    #[test]
    fn zero_ratio_matches_unpruned() {
        let g = ArchGraph::grid(4, 4).unwrap();
        let tau = Mapping::naive(16);
        let model = PolicyModel::new(&g, 3, &[16], 0);
        let params = SahsParams::default();
        for seed in 0..5 {
            let c = random_circuit(16, 30, seed).unwrap();
            let plain = sahs_route(&c, &g, &tau, &params).unwrap();
            let pruned = sahs_ann_route(&c, &g, &tau, &params, &model, 0.0).unwrap();
            assert_eq!(plain.physical_circuit, pruned.physical_circuit);
        }
    }

    #[test]
    fn degenerate_ratio_keeps_one_candidate() {
        let g = ArchGraph::grid(4, 4).unwrap();
        let tau = Mapping::naive(16);
        let model = PolicyModel::new(&g, 3, &[16], 0);
        let params = SahsParams { depth: 2, ..Default::default() };
        let c = random_circuit(16, 30, 1).unwrap();
        let r = sahs_ann_route(&c, &g, &tau, &params, &model, 0.99).unwrap();
        verify(&r.physical_circuit, &c, &g, &tau).unwrap();
    }

    #[test]
    fn pruning_reduces_expansions() {
        let g = ArchGraph::grid(4, 4).unwrap();
        let tau = Mapping::naive(16);
        let model = PolicyModel::new(&g, 3, &[16], 0);
        let params = SahsParams { depth: 2, ..Default::default() };
        let c = random_circuit(16, 40, 2).unwrap();
        let full = sahs_route(&c, &g, &tau, &params).unwrap();
        let pruned = sahs_ann_route(&c, &g, &tau, &params, &model, 0.7).unwrap();
        assert!(pruned.node_expansions < full.node_expansions);
    }

    #[test]
    fn rejects_bad_ratio() {
        let g = grid23();
        let tau = Mapping::naive(6);
        let model = PolicyModel::new(&g, 3, &[8], 0);
        let c = random_circuit(6, 5, 0).unwrap();
        assert!(matches!(
            sahs_ann_route(&c, &g, &tau, &SahsParams::default(), &model, 1.0),
            Err(RouteError::BadPruningRatio { .. })
        ));
    }
}
