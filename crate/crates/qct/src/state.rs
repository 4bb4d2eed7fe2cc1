//! Shared incremental routing state used by all routers.

use crate::arch::{ArchGraph, DistanceMatrix};
use crate::circuit::{Circuit, Gate, GateKind};
use crate::error::RouteError;
use crate::route::Mapping;

const EXECUTED: u16 = u16::MAX;

/// Immutable per-routing-run context: the logical circuit, the target graph,
/// distances and the dependency structure in CSR form.
pub(crate) struct RoutingProblem<'a> {
    pub lc: &'a Circuit,
    pub graph: &'a ArchGraph,
    pub dist: DistanceMatrix,
    succ_offsets: Vec<u32>,
    succ: Vec<u32>,
    indegree0: Vec<u16>,
}

impl<'a> RoutingProblem<'a> {
    pub fn new(lc: &'a Circuit, graph: &'a ArchGraph) -> Result<Self, RouteError> {
        if !lc.is_cnot_only() {
            return Err(RouteError::NonCnotInput);
        }
        if lc.num_qubits() > graph.num_nodes() {
            return Err(RouteError::QubitOverflow {
                num_qubits: lc.num_qubits(),
                num_nodes: graph.num_nodes(),
            });
        }
        let dag = lc.dependency_dag();
        let m = lc.len();
        let mut indegree0 = vec![0u16; m];
        let mut succ_lists: Vec<Vec<u32>> = vec![Vec::new(); m];
        for g in 0..m {
            for &p in dag.predecessors(g) {
                succ_lists[p].push(g as u32);
                indegree0[g] += 1;
            }
        }
        let mut succ_offsets = Vec::with_capacity(m + 1);
        let mut succ = Vec::new();
        succ_offsets.push(0u32);
        for list in &succ_lists {
            succ.extend_from_slice(list);
            succ_offsets.push(succ.len() as u32);
        }
        Ok(RoutingProblem { lc, graph, dist: DistanceMatrix::new(graph), succ_offsets, succ, indegree0 })
    }

    fn successors(&self, gate: usize) -> &[u32] {
        &self.succ[self.succ_offsets[gate] as usize..self.succ_offsets[gate + 1] as usize]
    }

    pub fn initial_state(&self, tau: &Mapping) -> RouteState {
        let mut ready: Vec<usize> = (0..self.lc.len()).filter(|&g| self.indegree0[g] == 0).collect();
        ready.sort_unstable();
        RouteState {
            mapping: tau.clone(),
            indegree: self.indegree0.clone(),
            ready,
            executed: 0,
        }
    }
}

/// Mutable routing state: current mapping, per-gate pending-predecessor
/// counts and the front layer (ready list, kept in ascending gate order).
#[derive(Debug, Clone)]
pub(crate) struct RouteState {
    pub mapping: Mapping,
    indegree: Vec<u16>,
    ready: Vec<usize>,
    pub executed: usize,
}

impl RouteState {
    pub fn remaining(&self) -> usize {
        self.indegree.len() - self.executed
    }

    pub fn is_done(&self) -> bool {
        self.remaining() == 0
    }

    pub fn front(&self) -> &[usize] {
        &self.ready
    }

    fn is_executable(&self, p: &RoutingProblem, gate: usize) -> bool {
        let g = p.lc.gates()[gate];
        p.graph.has_edge(self.mapping.phys(g.q0), self.mapping.phys(g.q1))
    }

    /// Execute every executable front-layer gate, recomputing the front after
    /// each removal, until none qualifies. Executed gates (mapped to physical
    /// indices) are appended to `out` in removal order. Returns the number of
    /// gates executed.
    pub fn execute_all(&mut self, p: &RoutingProblem, out: Option<&mut Vec<Gate>>) -> usize {
        self.execute_impl(p, out, None)
    }

    /// Like [`execute_all`](Self::execute_all) but records the logical gate
    /// indices instead of physical gates.
    pub fn execute_all_indices(&mut self, p: &RoutingProblem, order: &mut Vec<usize>) -> usize {
        self.execute_impl(p, None, Some(order))
    }

    fn execute_impl(
        &mut self,
        p: &RoutingProblem,
        mut out: Option<&mut Vec<Gate>>,
        mut order: Option<&mut Vec<usize>>,
    ) -> usize {
        let mut executed_now = 0;
        loop {
            let mut progressed = false;
            let mut i = 0;
            while i < self.ready.len() {
                let gate = self.ready[i];
                if self.is_executable(p, gate) {
                    self.ready.remove(i);
                    let g = p.lc.gates()[gate];
                    if let Some(out) = out.as_deref_mut() {
                        out.push(Gate {
                            kind: GateKind::Cnot,
                            q0: self.mapping.phys(g.q0),
                            q1: self.mapping.phys(g.q1),
                        });
                    }
                    if let Some(order) = order.as_deref_mut() {
                        order.push(gate);
                    }
                    self.indegree[gate] = EXECUTED;
                    self.executed += 1;
                    executed_now += 1;
                    progressed = true;
                    let mut inserted = false;
                    for &s in p.successors(gate) {
                        let s = s as usize;
                        self.indegree[s] -= 1;
                        if self.indegree[s] == 0 {
                            self.ready.push(s);
                            inserted = true;
                        }
                    }
                    if inserted {
                        self.ready.sort_unstable();
                        // restart the pass so newly ready gates are seen in order
                        i = 0;
                    }
                } else {
                    i += 1;
                }
            }
            if !progressed {
                break;
            }
        }
        executed_now
    }

    /// Eq.-1-style cost of the current front layer: per gate, hop distance of
    /// its mapped operands minus one. Executable gates contribute 0.
    pub fn front_cost(&self, p: &RoutingProblem) -> u32 {
        self.ready
            .iter()
            .map(|&gate| {
                let g = p.lc.gates()[gate];
                p.dist.get(self.mapping.phys(g.q0), self.mapping.phys(g.q1)) - 1
            })
            .sum()
    }

    /// Front cost under a hypothetical swap of edge (u, v), without mutating.
    pub fn front_cost_after_swap(&self, p: &RoutingProblem, u: usize, v: usize) -> u32 {
        let a = self.mapping.logical(u);
        let b = self.mapping.logical(v);
        self.ready
            .iter()
            .map(|&gate| {
                let g = p.lc.gates()[gate];
                let map = |q: usize| {
                    if q == a {
                        v
                    } else if q == b {
                        u
                    } else {
                        self.mapping.phys(q)
                    }
                };
                p.dist.get(map(g.q0), map(g.q1)) - 1
            })
            .sum()
    }

    pub fn apply_swap(&mut self, u: usize, v: usize) {
        self.mapping.swap_physical(u, v);
    }

    /// Bitmask of remaining gate indices; only valid for circuits with at
    /// most 32 gates (the brute-force oracle's regime).
    pub fn remaining_mask(&self, _p: &RoutingProblem) -> u32 {
        let mut mask = 0u32;
        for (gate, &deg) in self.indegree.iter().enumerate() {
            if deg != EXECUTED {
                mask |= 1 << gate;
            }
        }
        mask
    }

    /// Remaining gates in index order, as a fresh circuit over the logical
    /// qubits.
    pub fn remaining_circuit(&self, p: &RoutingProblem) -> Circuit {
        let indices: Vec<usize> =
            (0..self.indegree.len()).filter(|&g| self.indegree[g] != EXECUTED).collect();
        p.lc.subset(&indices)
    }

    /// Remaining gates in index order.
    pub fn remaining_gates(&self, p: &RoutingProblem) -> Vec<Gate> {
        (0..self.indegree.len())
            .filter(|&g| self.indegree[g] != EXECUTED)
            .map(|g| p.lc.gates()[g])
            .collect()
    }

    /// ASAP-layered Eq.-1 costs of the remaining circuit under the current
    /// mapping, truncated to `max_layers` layers.
    pub fn layered_costs(&self, p: &RoutingProblem, max_layers: usize) -> Vec<u32> {
        let mut frontier = vec![0usize; p.lc.num_qubits()];
        let mut costs = vec![0u32; max_layers];
        for (gate, &deg) in self.indegree.iter().enumerate() {
            if deg == EXECUTED {
                continue;
            }
            let g = p.lc.gates()[gate];
            let layer = frontier[g.q0].max(frontier[g.q1]);
            frontier[g.q0] = layer + 1;
            frontier[g.q1] = layer + 1;
            if layer < max_layers {
                costs[layer] += p.dist.get(self.mapping.phys(g.q0), self.mapping.phys(g.q1)) - 1;
            }
        }
        costs
    }
}
