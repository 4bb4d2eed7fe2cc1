//! Mappings, executability, the front-layer cost, the BASE router and its
//! ANN-boosted variants, SWAP decomposition and the correctness oracles.

use std::collections::HashSet;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::arch::{ArchGraph, DistanceMatrix};
use crate::circuit::{Circuit, Gate, GateKind};
use crate::error::{ArchError, RouteError};
use crate::policy::PolicyModel;
use crate::state::{RouteState, RoutingProblem};

/// Bijection between logical and physical qubits, always over all `|V|`
/// nodes of the target graph (logical indices beyond the circuit's qubit
/// count are padding).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mapping {
    log2phys: Vec<usize>,
    phys2log: Vec<usize>,
}

impl Mapping {
    /// The naive mapping: logical `q_i` on physical `v_i`.
    pub fn naive(num_nodes: usize) -> Self {
        Mapping { log2phys: (0..num_nodes).collect(), phys2log: (0..num_nodes).collect() }
    }

    pub fn len(&self) -> usize {
        self.log2phys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log2phys.is_empty()
    }

    /// Physical node hosting logical qubit `q`.
    #[inline]
    pub fn phys(&self, q: usize) -> usize {
        self.log2phys[q]
    }

    /// Logical qubit sitting on physical node `v`.
    #[inline]
    pub fn logical(&self, v: usize) -> usize {
        self.phys2log[v]
    }

    /// Exchange the logical occupants of physical nodes `u` and `v`.
    pub fn swap_physical(&mut self, u: usize, v: usize) {
        let a = self.phys2log[u];
        let b = self.phys2log[v];
        self.phys2log[u] = b;
        self.phys2log[v] = a;
        self.log2phys[a] = v;
        self.log2phys[b] = u;
    }
}

/// New mapping with the logical occupants of edge `(u, v)` exchanged.
pub fn apply_swap(tau: &Mapping, g: &ArchGraph, u: usize, v: usize) -> Result<Mapping, ArchError> {
    g.edge_index(u, v)?;
    let mut out = tau.clone();
    out.swap_physical(u, v);
    Ok(out)
}

/// Maximal prefix-closed executable set: repeatedly remove front-layer gates
/// whose mapped qubits are adjacent. Returns gate indices in removal order.
pub fn executable_gates(c: &Circuit, tau: &Mapping, g: &ArchGraph) -> Result<Vec<usize>, RouteError> {
    let problem = RoutingProblem::new(c, g)?;
    let mut state = problem.initial_state(tau);
    let mut order = Vec::new();
    state.execute_all_indices(&problem, &mut order);
    Ok(order)
}

/// Eq.-1 cost of `c`'s front layer under `tau`: sum over front gates of
/// mapped hop distance minus one.
pub fn cost(c: &Circuit, tau: &Mapping, d: &DistanceMatrix) -> u32 {
    c.front_layer()
        .iter()
        .map(|&i| {
            let g = c.gates()[i];
            d.get(tau.phys(g.q0), tau.phys(g.q1)) - 1
        })
        .sum()
}

/// Output of a routing run.
#[derive(Debug, Clone)]
pub struct RoutingResult {
    pub physical_circuit: Circuit,
    pub initial_mapping: Mapping,
    pub swap_count: usize,
    pub elapsed: Duration,
    /// Search-tree nodes expanded (0 for non-search routers).
    pub node_expansions: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RoutingRecord {
    pub swap_count: usize,
    pub cnot_overhead: usize,
    pub elapsed_s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_qasm_path: Option<String>,
}

impl RoutingResult {
    pub fn cnot_overhead(&self) -> usize {
        3 * self.swap_count
    }

    pub fn record(&self, output_qasm_path: Option<String>) -> RoutingRecord {
        RoutingRecord {
            swap_count: self.swap_count,
            cnot_overhead: self.cnot_overhead(),
            elapsed_s: self.elapsed.as_secs_f64(),
            output_qasm_path,
        }
    }
}

/// Pick the cost-minimizing swap in canonical edge order with a strict
/// best-so-far update, so ties resolve to the first edge found.
fn best_swap_by_cost(p: &RoutingProblem, state: &RouteState) -> (usize, usize) {
    let mut best_cost = u32::MAX;
    let mut best_edge = (0, 0);
    for &(u, v) in p.graph.edges() {
        let c = state.front_cost_after_swap(p, u, v);
        if c < best_cost {
            best_cost = c;
            best_edge = (u, v);
        }
    }
    best_edge
}

/// All swaps attaining the minimal front cost, in canonical order.
fn min_cost_swaps(p: &RoutingProblem, state: &RouteState) -> Vec<(usize, usize)> {
    let mut best_cost = u32::MAX;
    let mut ties = Vec::new();
    for &(u, v) in p.graph.edges() {
        let c = state.front_cost_after_swap(p, u, v);
        if c < best_cost {
            best_cost = c;
            ties.clear();
            ties.push((u, v));
        } else if c == best_cost {
            ties.push((u, v));
        }
    }
    ties
}

/// The baseline greedy router: commit the first swap that minimizes the
/// front-layer cost, execute whatever becomes executable, repeat.
pub fn base_route(lc: &Circuit, g: &ArchGraph, tau_ini: &Mapping) -> Result<RoutingResult, RouteError> {
    let start = Instant::now();
    let p = RoutingProblem::new(lc, g)?;
    let mut state = p.initial_state(tau_ini);
    let mut pc = Vec::new();
    let mut swaps = 0;
    state.execute_all(&p, Some(&mut pc));
    while !state.is_done() {
        let (u, v) = best_swap_by_cost(&p, &state);
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
        node_expansions: 0,
    })
}

/// Pure-policy router: at each step commit the swap with the highest
/// recommendation probability for the next `n_l` layers of the remaining
/// circuit. A livelock guard falls back to one BASE step when `n_q * |E|`
/// consecutive swaps execute nothing.
pub fn ann_qct_route(
    lc: &Circuit,
    g: &ArchGraph,
    tau_ini: &Mapping,
    model: &PolicyModel,
) -> Result<RoutingResult, RouteError> {
    let start = Instant::now();
    model.check_graph(g)?;
    let p = RoutingProblem::new(lc, g)?;
    let mut state = p.initial_state(tau_ini);
    let mut pc = Vec::new();
    let mut swaps = 0;
    let mut idle_swaps = 0usize;
    let idle_limit = g.num_nodes() * g.num_edges();
    state.execute_all(&p, Some(&mut pc));
    while !state.is_done() {
        let (u, v) = if idle_swaps >= idle_limit {
            idle_swaps = 0;
            best_swap_by_cost(&p, &state)
        } else {
            let probs = model.recommend(&state.remaining_gates(&p), &state.mapping);
            let mut best = 0usize;
            for (i, &q) in probs.iter().enumerate() {
                if q > probs[best] {
                    best = i;
                }
            }
            g.edges()[best]
        };
        state.apply_swap(u, v);
        pc.push(Gate::swap(u, v));
        swaps += 1;
        let executed = state.execute_all(&p, Some(&mut pc));
        if executed == 0 {
            idle_swaps += 1;
        } else {
            idle_swaps = 0;
        }
    }
    Ok(RoutingResult {
        physical_circuit: Circuit::new(g.num_nodes(), pc).expect("router output"),
        initial_mapping: tau_ini.clone(),
        swap_count: swaps,
        elapsed: start.elapsed(),
        node_expansions: 0,
    })
}

/// BASE with policy tie-breaking: when several swaps attain the minimal
/// front cost, the one with the highest recommendation probability wins.
pub fn base_ann_route(
    lc: &Circuit,
    g: &ArchGraph,
    tau_ini: &Mapping,
    model: &PolicyModel,
) -> Result<RoutingResult, RouteError> {
    let start = Instant::now();
    model.check_graph(g)?;
    let p = RoutingProblem::new(lc, g)?;
    let mut state = p.initial_state(tau_ini);
    let mut pc = Vec::new();
    let mut swaps = 0;
    state.execute_all(&p, Some(&mut pc));
    while !state.is_done() {
        let ties = min_cost_swaps(&p, &state);
        let (u, v) = if ties.len() == 1 {
            ties[0]
        } else {
            let probs = model.recommend(&state.remaining_gates(&p), &state.mapping);
            let mut best = ties[0];
            let mut best_p = probs[g.edge_index(best.0, best.1)?];
            for &(tu, tv) in &ties[1..] {
                let q = probs[g.edge_index(tu, tv)?];
                if q > best_p {
                    best_p = q;
                    best = (tu, tv);
                }
            }
            best
        };
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
        node_expansions: 0,
    })
}

/// Replace every SWAP by the 3-CNOT pattern CNOT(a,b) CNOT(b,a) CNOT(a,b),
/// in place in the gate sequence.
pub fn decompose_swaps(pc: &Circuit) -> Circuit {
    let mut gates = Vec::with_capacity(pc.len());
    for g in pc.gates() {
        match g.kind {
            GateKind::Cnot => gates.push(*g),
            GateKind::Swap => {
                gates.push(Gate::cnot(g.q0, g.q1));
                gates.push(Gate::cnot(g.q1, g.q0));
                gates.push(Gate::cnot(g.q0, g.q1));
            }
        }
    }
    Circuit::new(pc.num_qubits(), gates).expect("decomposition preserves validity")
}

/// Functional-equivalence oracle: checks that every two-qubit gate of `pc`
/// respects connectivity and that replaying `pc` (SWAPs update the mapping,
/// CNOTs are pulled back to logical qubits) yields a valid linearization of
/// `lc`'s dependency DAG with exactly `lc`'s gates.
pub fn verify(pc: &Circuit, lc: &Circuit, g: &ArchGraph, tau_ini: &Mapping) -> Result<(), String> {
    let dag = lc.dependency_dag();
    let mut indegree: Vec<usize> = (0..lc.len()).map(|i| dag.predecessors(i).len()).collect();
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); lc.len()];
    for i in 0..lc.len() {
        for &pred in dag.predecessors(i) {
            succ[pred].push(i);
        }
    }
    let mut executed = vec![false; lc.len()];
    let mut executed_count = 0usize;
    let mut tau = tau_ini.clone();

    for (pos, gate) in pc.gates().iter().enumerate() {
        if !g.has_edge(gate.q0, gate.q1) {
            return Err(format!(
                "connectivity: gate {pos} acts on non-adjacent physical qubits ({}, {})",
                gate.q0, gate.q1
            ));
        }
        match gate.kind {
            GateKind::Swap => tau.swap_physical(gate.q0, gate.q1),
            GateKind::Cnot => {
                let la = tau.logical(gate.q0);
                let lb = tau.logical(gate.q1);
                let want = (la.min(lb), la.max(lb));
                let found = (0..lc.len()).find(|&i| {
                    !executed[i] && indegree[i] == 0 && lc.gates()[i].pair() == want
                });
                match found {
                    Some(i) => {
                        executed[i] = true;
                        executed_count += 1;
                        for &s in &succ[i] {
                            indegree[s] -= 1;
                        }
                    }
                    None => {
                        return Err(format!(
                            "unexpected gate: physical CNOT at position {pos} pulls back to logical pair ({}, {}) which is not ready",
                            want.0, want.1
                        ));
                    }
                }
            }
        }
    }
    if executed_count != lc.len() {
        return Err(format!("missing gate: {} of {} logical gates executed", executed_count, lc.len()));
    }
    Ok(())
}

/// Ground-truth oracle: breadth-first search over swap sequences interleaved
/// with maximal execution. Intended for tiny instances only.
pub fn min_swap_brute_force(
    lc: &Circuit,
    g: &ArchGraph,
    tau_ini: &Mapping,
    bound: usize,
) -> Result<usize, RouteError> {
    let p = RoutingProblem::new(lc, g)?;
    assert!(lc.len() <= 32, "brute force is limited to 32 gates");

    let key = |state: &RouteState| -> (Vec<usize>, u32) {
        let occupants = (0..g.num_nodes()).map(|v| state.mapping.logical(v)).collect();
        (occupants, state.remaining_mask(&p))
    };

    let mut initial = p.initial_state(tau_ini);
    initial.execute_all(&p, None);
    if initial.is_done() {
        return Ok(0);
    }

    let mut frontier = vec![initial];
    let mut visited: HashSet<(Vec<usize>, u32)> = HashSet::new();
    visited.insert(key(&frontier[0]));
    for depth in 1..=bound {
        let mut next = Vec::new();
        for state in &frontier {
            for &(u, v) in g.edges() {
                let mut s = state.clone();
                s.apply_swap(u, v);
                s.execute_all(&p, None);
                if s.is_done() {
                    return Ok(depth);
                }
                let k = key(&s);
                if visited.insert(k) {
                    next.push(s);
                }
            }
        }
        frontier = next;
    }
    Err(RouteError::BoundExceeded { bound })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arch::ArchGraph;
    use crate::circuit::random_circuit;
    use crate::fixtures::lookahead_fixture;

    fn grid23() -> (ArchGraph, DistanceMatrix) {
        let g = ArchGraph::grid(2, 3).unwrap();
        let d = DistanceMatrix::new(&g);
        (g, d)
    }

    #[test]
    fn apply_swap_moves_occupants() {
        let (g, _) = grid23();
        let tau = Mapping::naive(6);
        let t1 = apply_swap(&tau, &g, 1, 3).unwrap();
        assert_eq!(t1.phys(1), 3);
        assert_eq!(t1.phys(3), 1);
        assert_eq!(t1.phys(0), 0);
        // involution
        let t2 = apply_swap(&t1, &g, 1, 3).unwrap();
        assert_eq!(t2, tau);
        // composition
        let t3 = apply_swap(&t1, &g, 3, 5).unwrap();
        assert_eq!(t3.phys(1), 5);
        // non-edge
        assert!(apply_swap(&tau, &g, 0, 5).is_err());
    }

    #[test]
    fn executable_gates_cases() {
        let (g, _) = grid23();
        let tau = Mapping::naive(6);
        let fix = lookahead_fixture();
        assert!(executable_gates(&fix, &tau, &g).unwrap().is_empty());
        assert!(executable_gates(&Circuit::empty(6), &tau, &g).unwrap().is_empty());
        let all_edges =
            Circuit::new(6, vec![Gate::cnot(0, 1), Gate::cnot(2, 3), Gate::cnot(4, 5)]).unwrap();
        assert_eq!(executable_gates(&all_edges, &tau, &g).unwrap().len(), 3);
    }

    #[test]
    fn cost_convention() {
        let (g, d) = grid23();
        let tau = Mapping::naive(6);
        let fix = lookahead_fixture();
        assert_eq!(cost(&fix, &tau, &d), 1);
        let swapped = apply_swap(&tau, &g, 1, 3).unwrap();
        assert_eq!(cost(&fix, &swapped, &d), 0);
        assert_eq!(cost(&Circuit::empty(6), &tau, &d), 0);
    }

    #[test]
    fn base_route_executable_circuit() {
        let (g, _) = grid23();
        let tau = Mapping::naive(6);
        let c = Circuit::new(6, vec![Gate::cnot(0, 1), Gate::cnot(2, 3)]).unwrap();
        let r = base_route(&c, &g, &tau).unwrap();
        assert_eq!(r.swap_count, 0);
        assert_eq!(r.physical_circuit.len(), 2);
        verify(&r.physical_circuit, &c, &g, &tau).unwrap();

        let r = base_route(&Circuit::empty(6), &g, &tau).unwrap();
        assert!(r.physical_circuit.is_empty());
    }

    #[test]
    fn base_route_first_found_tie_break() {
        // front gate (q1, q5): both (v1,v3) and (v3,v5) reach cost 0, and
        // (v1,v3) is first in canonical edge order
        let (g, _) = grid23();
        let tau = Mapping::naive(6);
        let fix = lookahead_fixture();
        let r = base_route(&fix, &g, &tau).unwrap();
        let first_swap = r
            .physical_circuit
            .gates()
            .iter()
            .find(|gate| gate.kind == GateKind::Swap)
            .unwrap();
        assert_eq!(first_swap.pair(), (1, 3));
        verify(&r.physical_circuit, &fix, &g, &tau).unwrap();
    }

    #[test]
    fn base_route_is_deterministic() {
        let g = ArchGraph::grid(4, 4).unwrap();
        let tau = Mapping::naive(16);
        for seed in 0..5 {
            let c = random_circuit(16, 60, seed).unwrap();
            let a = base_route(&c, &g, &tau).unwrap();
            let b = base_route(&c, &g, &tau).unwrap();
            assert_eq!(a.physical_circuit, b.physical_circuit);
        }
    }

    #[test]
    fn decompose_swap_patterns() {
        let c = Circuit::new(2, vec![Gate::swap(0, 1)]).unwrap();
        let d = decompose_swaps(&c);
        assert_eq!(
            d.gates(),
            &[Gate::cnot(0, 1), Gate::cnot(1, 0), Gate::cnot(0, 1)]
        );

        let c = Circuit::new(3, vec![Gate::cnot(0, 1), Gate::cnot(1, 2)]).unwrap();
        assert_eq!(decompose_swaps(&c), c);

        let mut gates = vec![Gate::cnot(0, 1); 5];
        gates.push(Gate::swap(0, 1));
        gates.push(Gate::swap(1, 2));
        let c = Circuit::new(3, gates).unwrap();
        assert_eq!(decompose_swaps(&c).len(), 11);
    }

    #[test]
    fn decompose_preserves_connectivity() {
        let (g, _) = grid23();
        let tau = Mapping::naive(6);
        let fix = lookahead_fixture();
        let r = base_route(&fix, &g, &tau).unwrap();
        let d = decompose_swaps(&r.physical_circuit);
        for gate in d.gates() {
            assert!(g.has_edge(gate.q0, gate.q1));
        }
    }

    #[test]
    fn verify_detects_tampering() {
        let (g, _) = grid23();
        let tau = Mapping::naive(6);
        let fix = lookahead_fixture();
        let r = base_route(&fix, &g, &tau).unwrap();

        // drop one CNOT
        let gates: Vec<Gate> = r
            .physical_circuit
            .gates()
            .iter()
            .copied()
            .take(r.physical_circuit.len() - 1)
            .collect();
        let truncated = Circuit::new(6, gates).unwrap();
        let err = verify(&truncated, &fix, &g, &tau).unwrap_err();
        assert!(err.contains("missing gate"), "{err}");

        // CNOT on non-adjacent qubits
        let bad = Circuit::new(6, vec![Gate::cnot(0, 5)]).unwrap();
        let err = verify(&bad, &fix, &g, &tau).unwrap_err();
        assert!(err.contains("connectivity"), "{err}");
    }

    #[test]
    fn verify_base_route_corpus() {
        let g = ArchGraph::grid(4, 4).unwrap();
        let tau = Mapping::naive(16);
        for seed in 0..100 {
            let c = random_circuit(16, 40, seed).unwrap();
            let r = base_route(&c, &g, &tau).unwrap();
            verify(&r.physical_circuit, &c, &g, &tau).unwrap();
        }
    }

    #[test]
    fn brute_force_on_fixture() {
        let (g, _) = grid23();
        let tau = Mapping::naive(6);
        assert_eq!(min_swap_brute_force(&lookahead_fixture(), &g, &tau, 4).unwrap(), 2);
        let easy = Circuit::new(6, vec![Gate::cnot(0, 1)]).unwrap();
        assert_eq!(min_swap_brute_force(&easy, &g, &tau, 4).unwrap(), 0);
    }

    #[test]
    fn routers_bounded_below_by_oracle() {
        let (g, _) = grid23();
        let tau = Mapping::naive(6);
        for seed in 100..120 {
            let c = random_circuit(6, 5, seed).unwrap();
            let optimum = min_swap_brute_force(&c, &g, &tau, 4).unwrap();
            let r = base_route(&c, &g, &tau).unwrap();
            assert!(r.swap_count >= optimum);
        }
    }
}
