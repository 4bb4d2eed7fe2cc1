//! Circuit encoding, the fully-connected policy network, training and model
//! serialization.

mod adam;
mod train;

pub use adam::{AdamHyper, AdamState};
pub use train::{train, LossCurve, TrainHyper, TrainingSample};

use std::path::Path;

use ndarray::{Array1, Array2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::arch::ArchGraph;
use crate::circuit::{Circuit, Gate};
use crate::error::ModelError;
use crate::route::Mapping;

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Encode a circuit as `n_l` flattened symmetric 0-1 matrices of dimension
/// `n_q` x `n_q`: entry (i, j) of matrix `k` is 1 iff layer `k` holds a CNOT
/// whose operands are mapped to physical qubits i and j. Missing layers are
/// zero-padded; layers beyond `n_l` are ignored.
pub fn encode(c: &Circuit, tau: &Mapping, n_l: usize, n_q: usize) -> Result<Vec<f64>, ModelError> {
    encode_gates(c.gates(), tau, n_l, n_q)
}

/// Same as [`encode`] for a bare gate sequence (the remaining part of a
/// circuit mid-routing).
pub fn encode_gates(gates: &[Gate], tau: &Mapping, n_l: usize, n_q: usize) -> Result<Vec<f64>, ModelError> {
    let mut x = vec![0.0; n_l * n_q * n_q];
    let mut frontier = vec![0usize; tau.len().max(n_q)];
    for g in gates {
        let layer = frontier[g.q0].max(frontier[g.q1]);
        frontier[g.q0] = layer + 1;
        frontier[g.q1] = layer + 1;
        if layer >= n_l {
            continue;
        }
        let a = tau.phys(g.q0);
        let b = tau.phys(g.q1);
        if a >= n_q || b >= n_q {
            return Err(ModelError::DimensionMismatch { expected: n_q, got: a.max(b) + 1 });
        }
        x[layer * n_q * n_q + a * n_q + b] = 1.0;
        x[layer * n_q * n_q + b * n_q + a] = 1.0;
    }
    Ok(x)
}

/// Mean of squared coordinate differences.
pub fn mse_loss(pred: &[f64], label: &[f64]) -> f64 {
    assert_eq!(pred.len(), label.len(), "length mismatch");
    let n = pred.len() as f64;
    pred.iter().zip(label).map(|(p, y)| (p - y) * (p - y)).sum::<f64>() / n
}

/// Gradient of the MSE loss with respect to the pre-softmax logits:
/// 2(pred - label)/n pushed through the softmax Jacobian.
pub fn loss_gradient(pred: &[f64], label: &[f64]) -> Vec<f64> {
    assert_eq!(pred.len(), label.len(), "length mismatch");
    let n = pred.len() as f64;
    let g: Vec<f64> = pred.iter().zip(label).map(|(p, y)| 2.0 * (p - y) / n).collect();
    let dot: f64 = g.iter().zip(pred).map(|(gi, pi)| gi * pi).sum();
    pred.iter().zip(&g).map(|(p, gi)| p * (gi - dot)).collect()
}

pub(crate) fn softmax_in_place(z: &mut [f64]) {
    let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in z.iter_mut() {
        *v /= sum;
    }
}

/// Metadata binding a model to one architecture graph and encoding shape.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub format_version: u32,
    pub arch_name: String,
    pub edge_list_hash: u64,
    pub n_q: usize,
    pub n_l: usize,
    /// Dimensions input, hidden..., output (= |E|).
    pub layer_dims: Vec<usize>,
}

/// Fully-connected policy network: ReLU hidden layers, softmax output over
/// the graph's canonical edge order.
#[derive(Debug, Clone)]
pub struct PolicyModel {
    pub meta: ModelMeta,
    pub(crate) weights: Vec<Array2<f64>>,
    pub(crate) biases: Vec<Array1<f64>>,
}

pub const DEFAULT_HIDDEN: &[usize] = &[512, 256];

impl PolicyModel {
    /// Fresh model for `g`. Hidden layers are He-initialized from the seeded
    /// RNG; the output layer is zero-initialized so an untrained model
    /// recommends every swap uniformly.
    pub fn new(g: &ArchGraph, n_l: usize, hidden: &[usize], seed: u64) -> Self {
        let n_q = g.num_nodes();
        let mut dims = vec![n_l * n_q * n_q];
        dims.extend_from_slice(hidden);
        dims.push(g.num_edges());

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for l in 0..dims.len() - 1 {
            let (fan_in, fan_out) = (dims[l], dims[l + 1]);
            let last = l == dims.len() - 2;
            let std = if last { 0.0 } else { (2.0 / fan_in as f64).sqrt() };
            let w = Array2::from_shape_fn((fan_out, fan_in), |_| {
                if last { 0.0 } else { std * normal_sample(&mut rng) }
            });
            weights.push(w);
            biases.push(Array1::zeros(fan_out));
        }

        PolicyModel {
            meta: ModelMeta {
                format_version: MODEL_FORMAT_VERSION,
                arch_name: g.name().to_string(),
                edge_list_hash: g.edge_list_hash(),
                n_q,
                n_l,
                layer_dims: dims,
            },
            weights,
            biases,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.meta.layer_dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.meta.layer_dims.last().unwrap()
    }

    pub fn n_l(&self) -> usize {
        self.meta.n_l
    }

    /// Refuse to run against a graph the model was not trained for.
    pub fn check_graph(&self, g: &ArchGraph) -> Result<(), ModelError> {
        if self.meta.arch_name != g.name() || self.meta.edge_list_hash != g.edge_list_hash() {
            return Err(ModelError::GraphMismatch {
                model_arch: self.meta.arch_name.clone(),
                graph_arch: g.name().to_string(),
                model_hash: self.meta.edge_list_hash,
                graph_hash: g.edge_list_hash(),
            });
        }
        Ok(())
    }

    /// Recommendation probability distribution for an encoded circuit.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>, ModelError> {
        if x.len() != self.input_dim() {
            return Err(ModelError::DimensionMismatch { expected: self.input_dim(), got: x.len() });
        }
        let mut a = Array1::from_iter(x.iter().copied());
        for l in 0..self.weights.len() {
            let mut z = self.weights[l].dot(&a) + &self.biases[l];
            if l + 1 < self.weights.len() {
                z.mapv_inplace(|v| v.max(0.0));
            }
            a = z;
        }
        let mut out = a.to_vec();
        softmax_in_place(&mut out);
        Ok(out)
    }

    /// Score every candidate swap for the remaining gates under the current
    /// mapping. Panics only on internal dimension bugs; graph compatibility
    /// is the caller's contract (see [`check_graph`](Self::check_graph)).
    pub fn recommend(&self, remaining: &[Gate], tau: &Mapping) -> Vec<f64> {
        let x = encode_gates(remaining, tau, self.meta.n_l, self.meta.n_q)
            .expect("mapping and model dimensions already validated");
        self.forward(&x).expect("encoding has the model input dimension")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ModelError> {
        let file = ModelFile {
            meta: self.meta.clone(),
            weights: self.weights.iter().map(|w| w.iter().copied().collect()).collect(),
            biases: self.biases.iter().map(|b| b.to_vec()).collect(),
        };
        let text = serde_json::to_string(&file).expect("model serialization");
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        let text = std::fs::read_to_string(path)?;
        let file: ModelFile =
            serde_json::from_str(&text).map_err(|e| ModelError::Corrupt(e.to_string()))?;
        if file.meta.format_version != MODEL_FORMAT_VERSION {
            return Err(ModelError::VersionMismatch {
                expected: MODEL_FORMAT_VERSION,
                got: file.meta.format_version,
            });
        }
        let dims = &file.meta.layer_dims;
        if dims.len() < 2 || file.weights.len() != dims.len() - 1 || file.biases.len() != dims.len() - 1 {
            return Err(ModelError::Corrupt("layer count mismatch".into()));
        }
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for l in 0..dims.len() - 1 {
            let (fan_in, fan_out) = (dims[l], dims[l + 1]);
            if file.weights[l].len() != fan_in * fan_out || file.biases[l].len() != fan_out {
                return Err(ModelError::Corrupt(format!("layer {l} shape mismatch")));
            }
            weights.push(
                Array2::from_shape_vec((fan_out, fan_in), file.weights[l].clone())
                    .expect("shape checked above"),
            );
            biases.push(Array1::from_vec(file.biases[l].clone()));
        }
        Ok(PolicyModel { meta: file.meta, weights, biases })
    }

    /// Flattened views over all parameters, weights then biases per layer.
    pub(crate) fn param_sizes(&self) -> Vec<usize> {
        let mut sizes = Vec::new();
        for l in 0..self.weights.len() {
            sizes.push(self.weights[l].len());
            sizes.push(self.biases[l].len());
        }
        sizes
    }
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    meta: ModelMeta,
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
}

/// Box-Muller standard normal draw.
fn normal_sample(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}
