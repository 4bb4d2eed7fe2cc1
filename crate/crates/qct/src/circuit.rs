//! Circuit representation, layering, dependency analysis and random generation.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::CircuitError;

/// Two-qubit gate kinds understood by the router.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GateKind {
    Cnot,
    Swap,
}

/// A two-qubit gate. For CNOTs `q0` is the control and `q1` the target;
/// the direction is kept for I/O but ignored by routing cost and encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Gate {
    pub kind: GateKind,
    pub q0: usize,
    pub q1: usize,
}

impl Gate {
    pub fn cnot(q0: usize, q1: usize) -> Self {
        Gate { kind: GateKind::Cnot, q0, q1 }
    }

    pub fn swap(q0: usize, q1: usize) -> Self {
        Gate { kind: GateKind::Swap, q0, q1 }
    }

    /// Unordered qubit pair, min first.
    pub fn pair(&self) -> (usize, usize) {
        if self.q0 <= self.q1 {
            (self.q0, self.q1)
        } else {
            (self.q1, self.q0)
        }
    }

    pub fn touches(&self, q: usize) -> bool {
        self.q0 == q || self.q1 == q
    }
}

/// An ordered sequence of two-qubit gates over `num_qubits` logical (or
/// physical) qubits. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Circuit {
    num_qubits: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(num_qubits: usize, gates: Vec<Gate>) -> Result<Self, CircuitError> {
        for (i, g) in gates.iter().enumerate() {
            if g.q0 == g.q1 {
                return Err(CircuitError::DegenerateGate { index: i, qubit: g.q0 });
            }
            if g.q0 >= num_qubits || g.q1 >= num_qubits {
                return Err(CircuitError::QubitOutOfRange {
                    index: i,
                    qubit: g.q0.max(g.q1),
                    num_qubits,
                });
            }
        }
        Ok(Circuit { num_qubits, gates })
    }

    pub fn empty(num_qubits: usize) -> Self {
        Circuit { num_qubits, gates: Vec::new() }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn is_cnot_only(&self) -> bool {
        self.gates.iter().all(|g| g.kind == GateKind::Cnot)
    }

    /// ASAP layer decomposition: each gate goes to the earliest layer
    /// permitted by the preceding gates on its two qubits.
    pub fn layers(&self) -> LayerDecomposition {
        let mut frontier = vec![0usize; self.num_qubits];
        let mut layers: Vec<Vec<usize>> = Vec::new();
        for (i, g) in self.gates.iter().enumerate() {
            let layer = frontier[g.q0].max(frontier[g.q1]);
            if layer == layers.len() {
                layers.push(Vec::new());
            }
            layers[layer].push(i);
            frontier[g.q0] = layer + 1;
            frontier[g.q1] = layer + 1;
        }
        LayerDecomposition { layers }
    }

    /// Gate indices with no earlier gate sharing a qubit (the front layer).
    pub fn front_layer(&self) -> Vec<usize> {
        let mut seen = vec![false; self.num_qubits];
        let mut front = Vec::new();
        for (i, g) in self.gates.iter().enumerate() {
            if !seen[g.q0] && !seen[g.q1] {
                front.push(i);
            }
            seen[g.q0] = true;
            seen[g.q1] = true;
        }
        front
    }

    /// Per-gate predecessor sets induced by shared qubits. Gate `g` precedes
    /// `h` iff they share a qubit and `g` occurs earlier.
    pub fn dependency_dag(&self) -> DependencyDag {
        let mut last_on_qubit: Vec<Option<usize>> = vec![None; self.num_qubits];
        let mut preds = Vec::with_capacity(self.gates.len());
        for (i, g) in self.gates.iter().enumerate() {
            let mut p = Vec::new();
            for q in [g.q0, g.q1] {
                if let Some(j) = last_on_qubit[q] {
                    if !p.contains(&j) {
                        p.push(j);
                    }
                }
                last_on_qubit[q] = Some(i);
            }
            preds.push(p);
        }
        DependencyDag { predecessors: preds }
    }

    /// New circuit containing the given gates in the given index order.
    pub fn subset(&self, indices: &[usize]) -> Circuit {
        Circuit {
            num_qubits: self.num_qubits,
            gates: indices.iter().map(|&i| self.gates[i]).collect(),
        }
    }
}

/// ASAP layering of a circuit; layer 0 is the front layer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerDecomposition {
    layers: Vec<Vec<usize>>,
}

impl LayerDecomposition {
    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn layer(&self, k: usize) -> &[usize] {
        &self.layers[k]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[usize]> {
        self.layers.iter().map(|v| v.as_slice())
    }
}

#[derive(Debug, Clone)]
pub struct DependencyDag {
    predecessors: Vec<Vec<usize>>,
}

impl DependencyDag {
    pub fn num_gates(&self) -> usize {
        self.predecessors.len()
    }

    pub fn predecessors(&self, gate: usize) -> &[usize] {
        &self.predecessors[gate]
    }
}

/// `n_gates` CNOTs, each on a uniformly random distinct qubit pair.
/// Deterministic for a fixed seed.
pub fn random_circuit(n_q: usize, n_gates: usize, seed: u64) -> Result<Circuit, CircuitError> {
    if n_q < 2 {
        return Err(CircuitError::TooFewQubits { num_qubits: n_q });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gates = Vec::with_capacity(n_gates);
    for _ in 0..n_gates {
        let a = rng.random_range(0..n_q);
        let mut b = rng.random_range(0..n_q - 1);
        if b >= a {
            b += 1;
        }
        gates.push(Gate::cnot(a, b));
    }
    Ok(Circuit { num_qubits: n_q, gates })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_gates() {
        assert!(Circuit::new(2, vec![Gate::cnot(0, 0)]).is_err());
        assert!(Circuit::new(2, vec![Gate::cnot(0, 2)]).is_err());
    }

    #[test]
    fn empty_circuit_has_no_layers() {
        let c = Circuit::empty(4);
        assert_eq!(c.layers().num_layers(), 0);
        assert!(c.front_layer().is_empty());
    }

    #[test]
    fn shared_qubits_force_sequencing() {
        let c = Circuit::new(2, vec![Gate::cnot(0, 1), Gate::cnot(0, 1)]).unwrap();
        let l = c.layers();
        assert_eq!(l.num_layers(), 2);
        assert_eq!(l.layer(0), &[0]);
        assert_eq!(l.layer(1), &[1]);
    }

    #[test]
    fn disjoint_gates_share_a_layer() {
        let c = Circuit::new(4, vec![Gate::cnot(0, 1), Gate::cnot(2, 3)]).unwrap();
        assert_eq!(c.layers().num_layers(), 1);
        assert_eq!(c.front_layer(), vec![0, 1]);
    }

    #[test]
    fn fig6_fixture_layers() {
        let c = crate::fixtures::lookahead_fixture();
        let l = c.layers();
        assert_eq!(l.num_layers(), 5);
        // front gate acts on (q1, q5), last layer gate on (q0, q2)
        assert_eq!(c.gates()[l.layer(0)[0]].pair(), (1, 5));
        assert_eq!(c.gates()[l.layer(4)[0]].pair(), (0, 2));
    }

    #[test]
    fn random_circuit_is_deterministic() {
        let a = random_circuit(16, 200, 7).unwrap();
        let b = random_circuit(16, 200, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 200);
        assert_eq!(a.num_qubits(), 16);
        assert!(random_circuit(1, 5, 0).is_err());
    }

    #[test]
    fn random_pairs_are_uniform() {
        // chi-squared over the C(16,2)=120 unordered pairs, 1e5 draws;
        // critical value for df=119 at alpha=0.001 is 173.6
        let n_q = 16;
        let draws = 100_000;
        let c = random_circuit(n_q, draws, 42).unwrap();
        let mut counts = vec![0usize; n_q * n_q];
        for g in c.gates() {
            let (a, b) = g.pair();
            counts[a * n_q + b] += 1;
        }
        let bins = n_q * (n_q - 1) / 2;
        let expected = draws as f64 / bins as f64;
        let chi2: f64 = (0..n_q)
            .flat_map(|a| ((a + 1)..n_q).map(move |b| (a, b)))
            .map(|(a, b)| {
                let o = counts[a * n_q + b] as f64;
                (o - expected).powi(2) / expected
            })
            .sum();
        assert!(chi2 < 173.6, "chi2 = {chi2}");
    }

    #[test]
    fn layer_sizes_sum_to_gate_count() {
        for seed in 0..5 {
            let c = random_circuit(8, 60, seed).unwrap();
            let l = c.layers();
            let total: usize = l.iter().map(|layer| layer.len()).sum();
            assert_eq!(total, c.len());
            for layer in l.iter() {
                assert!(layer.len() <= c.num_qubits() / 2);
            }
        }
    }

    #[test]
    fn layering_is_idempotent() {
        let c = random_circuit(8, 60, 3).unwrap();
        let l = c.layers();
        let flattened: Vec<usize> = l.iter().flat_map(|layer| layer.iter().copied()).collect();
        let rebuilt = c.subset(&flattened);
        let l2 = rebuilt.layers();
        assert_eq!(l.num_layers(), l2.num_layers());
        for k in 0..l.num_layers() {
            assert_eq!(l.layer(k).len(), l2.layer(k).len());
        }
    }
}
