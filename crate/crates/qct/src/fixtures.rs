//! Small hand-built circuits shared by tests, examples and docs.

use crate::circuit::{Circuit, Gate};

/// 6-qubit, 5-layer circuit used throughout the test suite together with the
/// 2x3 grid. Under the naive mapping its front gate (q1, q5) sits at distance
/// 2, the cost-0 swap candidates are (v1, v3) and (v3, v5), and the optimal
/// transformation needs exactly 2 swaps, both on (v1, v3).
pub fn lookahead_fixture() -> Circuit {
    Circuit::new(
        6,
        vec![
            Gate::cnot(1, 5),
            Gate::cnot(1, 2),
            Gate::cnot(2, 0),
            Gate::cnot(1, 0),
            Gate::cnot(0, 2),
        ],
    )
    .expect("fixture circuit")
}
