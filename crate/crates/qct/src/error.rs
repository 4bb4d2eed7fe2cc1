//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CircuitError {
    #[error("gate {index}: qubit {qubit} out of range for {num_qubits} qubits")]
    QubitOutOfRange { index: usize, qubit: usize, num_qubits: usize },
    #[error("gate {index}: both operands are qubit {qubit}")]
    DegenerateGate { index: usize, qubit: usize },
    #[error("a circuit needs at least 2 qubits, got {num_qubits}")]
    TooFewQubits { num_qubits: usize },
}

#[derive(Debug, Error)]
pub enum QasmError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: reference to undeclared register `{name}`")]
    UndeclaredRegister { line: usize, name: String },
    #[error("line {line}: qubit index {index} out of range for register of size {size}")]
    IndexOutOfRange { line: usize, index: usize, size: usize },
    #[error("line {line}: multiple qreg declarations are not supported")]
    MultipleQregs { line: usize },
    #[error("no qreg declaration found")]
    MissingQreg,
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

#[derive(Debug, Error)]
pub enum ArchError {
    #[error("grid dimensions must be positive, got {rows}x{cols}")]
    ZeroDimension { rows: usize, cols: usize },
    #[error("self-loop edge ({node}, {node})")]
    SelfLoop { node: usize },
    #[error("duplicate edge ({u}, {v})")]
    DuplicateEdge { u: usize, v: usize },
    #[error("edge ({u}, {v}) references a node >= {num_nodes}")]
    NodeOutOfRange { u: usize, v: usize, num_nodes: usize },
    #[error("architecture graph `{name}` is not connected")]
    Disconnected { name: String },
    #[error("({u}, {v}) is not an edge of the architecture graph")]
    NonEdge { u: usize, v: usize },
    #[error("failed to read topology file: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed topology file: {0}")]
    Malformed(#[from] serde_json::Error),
}

#[derive(Debug, Error)]
pub enum RouteError {
    #[error("logical circuit must contain only CNOT gates")]
    NonCnotInput,
    #[error("circuit has {num_qubits} qubits but the architecture graph only {num_nodes}")]
    QubitOverflow { num_qubits: usize, num_nodes: usize },
    #[error(transparent)]
    Arch(#[from] ArchError),
    #[error("brute-force search exceeded the swap bound {bound}")]
    BoundExceeded { bound: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("pruning ratio must be in [0, 1), got {ratio}")]
    BadPruningRatio { ratio: f64 },
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("input length {got} does not match model input dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("model was trained for `{model_arch}` (edge hash {model_hash:#x}), requested graph is `{graph_arch}` (edge hash {graph_hash:#x})")]
    GraphMismatch { model_arch: String, graph_arch: String, model_hash: u64, graph_hash: u64 },
    #[error("unsupported model format version {got}, expected {expected}")]
    VersionMismatch { expected: u32, got: u32 },
    #[error("corrupt model file: {0}")]
    Corrupt(String),
    #[error("training set is empty")]
    EmptyDataset,
    #[error("training samples have inconsistent dimensions")]
    HeterogeneousSamples,
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("circuit has {layers} layers, labeler accepts at most {max}")]
    OversizedCircuit { layers: usize, max: usize },
    #[error(transparent)]
    Route(#[from] RouteError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed dataset: {0}")]
    Malformed(String),
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("no input circuits")]
    NoInputs,
    #[error("router `{router}` is incompatible with graph `{graph}`: {reason}")]
    Incompatible { router: String, graph: String, reason: String },
    #[error("verification failed for router `{router}` on circuit {circuit}: {reason}")]
    VerificationFailed { router: String, circuit: String, reason: String },
    #[error("scaling study needs at least {min} graph sizes, got {got}")]
    TooFewSizes { min: usize, got: usize },
    #[error(transparent)]
    Route(#[from] RouteError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
