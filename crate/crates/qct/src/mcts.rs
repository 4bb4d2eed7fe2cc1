//! Monte Carlo tree search router and its policy-pruned variant.
//!
//! Per committed swap the router runs `n_bp` iterations of
//! selection (UCT), expansion (one child per coupling edge), simulation
//! (greedy-randomized rollout) and backpropagation, then commits the root
//! child with the best score and reroots the tree there. All randomness is
//! drawn from streams derived from (seed, decision index, iteration index),
//! so runs are reproducible and independent of timing.

use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::arch::ArchGraph;
use crate::circuit::{Circuit, Gate};
use crate::error::RouteError;
use crate::policy::PolicyModel;
use crate::route::{Mapping, RoutingResult};
use crate::state::{RouteState, RoutingProblem};

/// How the committed root child is chosen after the iteration budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecisionRule {
    /// Most-visited child (robust default).
    VisitCount,
    /// Highest mean backpropagated value.
    MeanValue,
}

#[derive(Debug, Clone)]
pub struct MctsParams {
    /// Search iterations per committed swap.
    pub n_bp: usize,
    /// UCT exploration constant.
    pub exploration_c: f64,
    /// Rollout length in swaps.
    pub sim_depth: usize,
    /// Probability of a uniformly random swap during rollout.
    pub epsilon: f64,
    /// Value subtracted per swap (tree edge or rollout step).
    pub swap_penalty: f64,
    pub decision_rule: DecisionRule,
    pub seed: u64,
}

impl Default for MctsParams {
    fn default() -> Self {
        MctsParams {
            n_bp: 20,
            exploration_c: std::f64::consts::SQRT_2,
            sim_depth: 10,
            epsilon: 0.1,
            swap_penalty: 0.3,
            decision_rule: DecisionRule::VisitCount,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MctsNode {
    state: RouteState,
    /// Coupling-edge index of the swap leading here (root: none).
    pub incoming_edge: Option<usize>,
    /// Swaps on the path from the decision root.
    depth_from_root: usize,
    pub visit_count: u64,
    pub total_value: f64,
    /// Arena ids of the children, in canonical edge order; empty until the
    /// node is expanded.
    pub children: Vec<usize>,
}

impl MctsNode {
    pub fn mean_value(&self) -> f64 {
        if self.visit_count == 0 {
            0.0
        } else {
            self.total_value / self.visit_count as f64
        }
    }
}

/// Search tree over an arena; `root` indexes into `nodes`.
pub struct MctsTree {
    nodes: Vec<MctsNode>,
    root: usize,
    pub node_expansions: u64,
}

impl MctsTree {
    fn new(root_state: RouteState) -> Self {
        MctsTree {
            nodes: vec![MctsNode {
                state: root_state,
                incoming_edge: None,
                depth_from_root: 0,
                visit_count: 0,
                total_value: 0.0,
                children: Vec::new(),
            }],
            root: 0,
            node_expansions: 0,
        }
    }

    pub fn root(&self) -> &MctsNode {
        &self.nodes[self.root]
    }

    pub fn node(&self, id: usize) -> &MctsNode {
        &self.nodes[id]
    }

    /// Create one child per coupling edge, in canonical order.
    fn expand(&mut self, id: usize, p: &RoutingProblem, g: &ArchGraph) {
        debug_assert!(self.nodes[id].children.is_empty());
        for (e, &(u, v)) in g.edges().iter().enumerate() {
            let mut state = self.nodes[id].state.clone();
            state.apply_swap(u, v);
            state.execute_all(p, None);
            let child = MctsNode {
                state,
                incoming_edge: Some(e),
                depth_from_root: self.nodes[id].depth_from_root + 1,
                visit_count: 0,
                total_value: 0.0,
                children: Vec::new(),
            };
            self.nodes.push(child);
            let cid = self.nodes.len() - 1;
            self.nodes[id].children.push(cid);
            self.node_expansions += 1;
        }
    }

    /// Drop the lowest-probability root children so UCT can never select
    /// them. Keeps at least one child; probability ties keep the earlier
    /// edge.
    fn prune_root(&mut self, probs: &[f64], prune_count: usize) {
        if prune_count == 0 {
            return;
        }
        let root = &mut self.nodes[self.root];
        let mut order: Vec<usize> = (0..root.children.len()).collect();
        order.sort_by(|&a, &b| probs[b].partial_cmp(&probs[a]).unwrap().then(a.cmp(&b)));
        let keep = root.children.len().saturating_sub(prune_count).max(1);
        let mut kept: Vec<usize> = order[..keep].iter().map(|&i| root.children[i]).collect();
        kept.sort_unstable();
        root.children = kept;
    }

    /// Walk from the root by UCT (unvisited children first, canonical order)
    /// until an unexpanded or unvisited node is reached; expand on the second
    /// arrival. Returns the path of arena ids, root first.
    fn select_and_expand(&mut self, p: &RoutingProblem, g: &ArchGraph, c: f64) -> Vec<usize> {
        let mut path = vec![self.root];
        loop {
            let id = *path.last().unwrap();
            if self.nodes[id].state.is_done() {
                return path;
            }
            if self.nodes[id].children.is_empty() {
                if self.nodes[id].visit_count == 0 && id != self.root {
                    return path; // first arrival: rollout, expand next time
                }
                self.expand(id, p, g);
            }
            let parent_visits = self.nodes[id].visit_count.max(1) as f64;
            let mut best: Option<(f64, usize)> = None;
            for &cid in &self.nodes[id].children {
                let child = &self.nodes[cid];
                if child.visit_count == 0 {
                    best = Some((f64::INFINITY, cid));
                    break;
                }
                let uct = child.mean_value()
                    + c * (parent_visits.ln() / child.visit_count as f64).sqrt();
                if best.map_or(true, |(b, _)| uct > b) {
                    best = Some((uct, cid));
                }
            }
            path.push(best.expect("expanded node has children").1);
        }
    }

    /// Make `child` (an arena id) the new root, discarding everything not
    /// reachable from it.
    fn reroot(&mut self, child: usize) {
        let mut keep = Vec::new();
        let mut remap = vec![usize::MAX; self.nodes.len()];
        let mut stack = vec![child];
        while let Some(id) = stack.pop() {
            if remap[id] != usize::MAX {
                continue;
            }
            remap[id] = keep.len();
            keep.push(id);
            stack.extend_from_slice(&self.nodes[id].children);
        }
        let mut nodes = Vec::with_capacity(keep.len());
        for &old in &keep {
            let mut n = self.nodes[old].clone();
            n.children = n.children.iter().map(|&c| remap[c]).collect();
            n.depth_from_root = 0; // recomputed lazily below
            nodes.push(n);
        }
        self.nodes = nodes;
        self.root = 0;
        self.nodes[0].incoming_edge = None;
        // recompute depths from the new root
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            let d = self.nodes[id].depth_from_root;
            let children = self.nodes[id].children.clone();
            for c in children {
                self.nodes[c].depth_from_root = d + 1;
                stack.push(c);
            }
        }
    }
}

fn iteration_rng(seed: u64, decision: u64, iteration: u64) -> ChaCha8Rng {
    // FNV-1a over the three indices keeps streams independent
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for word in [seed, decision, iteration] {
        for byte in word.to_le_bytes() {
            h ^= byte as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    ChaCha8Rng::seed_from_u64(h)
}

/// Greedy-randomized rollout: with probability `epsilon` a uniformly random
/// swap, otherwise the swap with the largest front-cost decrease (earliest
/// edge on ties). Returns `(executed, swaps_used)`.
fn rollout(
    state: &mut RouteState,
    p: &RoutingProblem,
    g: &ArchGraph,
    params: &MctsParams,
    rng: &mut ChaCha8Rng,
) -> (usize, usize) {
    let mut executed = 0;
    let mut swaps = 0;
    for _ in 0..params.sim_depth {
        if state.is_done() {
            break;
        }
        let e = if rng.random_range(0.0..1.0) < params.epsilon {
            rng.random_range(0..g.num_edges())
        } else {
            let mut best = 0;
            let mut best_cost = u32::MAX;
            for (e, &(u, v)) in g.edges().iter().enumerate() {
                let cost = state.front_cost_after_swap(p, u, v);
                if cost < best_cost {
                    best_cost = cost;
                    best = e;
                }
            }
            best
        };
        let (u, v) = g.edges()[e];
        state.apply_swap(u, v);
        executed += state.execute_all(p, None);
        swaps += 1;
    }
    (executed, swaps)
}

/// Value of a selected leaf: gates executed on the tree path plus the
/// rollout, minus the swap penalty for every swap spent, normalized by the
/// gates remaining at the decision root and clamped to [0, 1].
fn leaf_value(
    leaf: &MctsNode,
    root_executed: usize,
    root_remaining: usize,
    rollout_executed: usize,
    rollout_swaps: usize,
    params: &MctsParams,
) -> f64 {
    let path_executed = leaf.state.executed - root_executed;
    let swaps = leaf.depth_from_root + rollout_swaps;
    let raw = (path_executed + rollout_executed) as f64 - params.swap_penalty * swaps as f64;
    (raw / root_remaining.max(1) as f64).clamp(0.0, 1.0)
}

fn run_iterations(
    tree: &mut MctsTree,
    p: &RoutingProblem,
    g: &ArchGraph,
    params: &MctsParams,
    decision: u64,
) {
    let root_executed = tree.root().state.executed;
    let root_remaining = tree.root().state.remaining();
    for it in 0..params.n_bp {
        let path = tree.select_and_expand(p, g, params.exploration_c);
        let leaf_id = *path.last().unwrap();
        let mut rng = iteration_rng(params.seed, decision, it as u64);
        let (r_exec, r_swaps) = {
            let mut sim_state = tree.node(leaf_id).state.clone();
            rollout(&mut sim_state, p, g, params, &mut rng)
        };
        let value = leaf_value(
            tree.node(leaf_id),
            root_executed,
            root_remaining,
            r_exec,
            r_swaps,
            params,
        );
        for id in path {
            tree.nodes[id].visit_count += 1;
            tree.nodes[id].total_value += value;
        }
    }
}

fn best_root_child(tree: &MctsTree, rule: DecisionRule) -> usize {
    let mut best: Option<(f64, usize)> = None;
    for &cid in &tree.root().children {
        let child = tree.node(cid);
        let score = match rule {
            DecisionRule::VisitCount => child.visit_count as f64,
            DecisionRule::MeanValue => child.mean_value(),
        };
        if best.map_or(true, |(b, _)| score > b) {
            best = Some((score, cid));
        }
    }
    best.expect("root has children").1
}

fn route_impl(
    lc: &Circuit,
    g: &ArchGraph,
    tau_ini: &Mapping,
    params: &MctsParams,
    model: Option<&PolicyModel>,
    pruning_ratio: f64,
) -> Result<RoutingResult, RouteError> {
    if !(0.0..1.0).contains(&pruning_ratio) {
        return Err(RouteError::BadPruningRatio { ratio: pruning_ratio });
    }
    if let Some(m) = model {
        m.check_graph(g)?;
    }
    let start = Instant::now();
    let p = RoutingProblem::new(lc, g)?;
    let prune_count = (pruning_ratio * g.num_edges() as f64).floor() as usize;

    let mut state = p.initial_state(tau_ini);
    let mut pc = Vec::new();
    let mut swaps = 0usize;
    state.execute_all(&p, Some(&mut pc));

    let mut tree = MctsTree::new(state);
    let mut expansions = 0u64;
    let mut decision = 0u64;
    while !tree.root().state.is_done() {
        if tree.root().children.is_empty() {
            tree.expand(tree.root, &p, g);
        }
        if prune_count > 0 {
            if let Some(m) = model {
                let root = tree.root();
                let probs = m.recommend(&root.state.remaining_gates(&p), &root.state.mapping);
                let child_probs: Vec<f64> = tree
                    .root()
                    .children
                    .iter()
                    .map(|&cid| probs[tree.node(cid).incoming_edge.unwrap()])
                    .collect();
                tree.prune_root(&child_probs, prune_count);
            }
        }
        run_iterations(&mut tree, &p, g, params, decision);
        let chosen = best_root_child(&tree, params.decision_rule);
        let e = tree.node(chosen).incoming_edge.unwrap();
        let (u, v) = g.edges()[e];
        pc.push(Gate::swap(u, v));
        swaps += 1;
        // the child state already includes the swap and its executions;
        // re-derive the executed physical gates deterministically
        let mut replay = tree.root().state.clone();
        replay.apply_swap(u, v);
        replay.execute_all(&p, Some(&mut pc));
        debug_assert_eq!(replay.executed, tree.node(chosen).state.executed);
        expansions += tree.node_expansions;
        tree.reroot(chosen);
        tree.node_expansions = 0;
        decision += 1;
    }
    expansions += tree.node_expansions;

    Ok(RoutingResult {
        physical_circuit: Circuit::new(g.num_nodes(), pc).expect("router output"),
        initial_mapping: tau_ini.clone(),
        swap_count: swaps,
        elapsed: start.elapsed(),
        node_expansions: expansions,
    })
}

/// Monte Carlo tree search router. Deterministic for a fixed
/// [`MctsParams::seed`].
pub fn mcts_route(
    lc: &Circuit,
    g: &ArchGraph,
    tau_ini: &Mapping,
    params: &MctsParams,
) -> Result<RoutingResult, RouteError> {
    route_impl(lc, g, tau_ini, params, None, 0.0)
}

/// MCTS with root pruning: at every new decision root the model scores the
/// root's children and the lowest `floor(pruning_ratio * |E|)` are removed
/// before the iterations start (always keeping at least one). Ratio 0
/// reproduces [`mcts_route`] under the same seed.
pub fn mcts_ann_route(
    lc: &Circuit,
    g: &ArchGraph,
    tau_ini: &Mapping,
    params: &MctsParams,
    model: &PolicyModel,
    pruning_ratio: f64,
) -> Result<RoutingResult, RouteError> {
    route_impl(lc, g, tau_ini, params, Some(model), pruning_ratio)
}

/// Root-child visit counts after `n_bp` iterations on a fresh tree, indexed
/// by coupling edge. Used to derive training labels.
pub fn mcts_root_visits(
    lc: &Circuit,
    g: &ArchGraph,
    tau_ini: &Mapping,
    params: &MctsParams,
) -> Result<Vec<u64>, RouteError> {
    let p = RoutingProblem::new(lc, g)?;
    let mut state = p.initial_state(tau_ini);
    state.execute_all(&p, None);
    let mut tree = MctsTree::new(state);
    if !tree.root().state.is_done() {
        tree.expand(tree.root, &p, g);
        run_iterations(&mut tree, &p, g, params, 0);
    }
    let mut visits = vec![0u64; g.num_edges()];
    for &cid in &tree.root().children {
        visits[tree.node(cid).incoming_edge.unwrap()] = tree.node(cid).visit_count;
    }
    Ok(visits)
}
