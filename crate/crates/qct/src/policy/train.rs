//! Mini-batch MSE + Adam training for the policy network.

use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{softmax_in_place, AdamHyper, AdamState, PolicyModel, DEFAULT_HIDDEN};
use crate::arch::ArchGraph;
use crate::error::ModelError;

/// One supervised example: an encoded circuit and its recommendation
/// distribution over the graph's edges.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainingSample {
    pub encoding: Vec<f64>,
    pub label: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainHyper {
    pub hidden: Vec<usize>,
    pub adam: AdamHyper,
    pub batch_size: usize,
    pub epochs: usize,
    /// Held-out fraction for the validation loss; 0 disables the split.
    pub val_fraction: f64,
}

impl Default for TrainHyper {
    fn default() -> Self {
        TrainHyper {
            hidden: DEFAULT_HIDDEN.to_vec(),
            adam: AdamHyper::default(),
            batch_size: 32,
            epochs: 100,
            val_fraction: 0.1,
        }
    }
}

/// Per-epoch (training, validation) loss; validation is NaN when no split.
pub type LossCurve = Vec<(f64, f64)>;

/// Train a fresh policy model for `g` on the given samples. Deterministic
/// for a fixed seed.
pub fn train(
    g: &ArchGraph,
    n_l: usize,
    samples: &[TrainingSample],
    hyper: &TrainHyper,
    seed: u64,
) -> Result<(PolicyModel, LossCurve), ModelError> {
    if samples.is_empty() {
        return Err(ModelError::EmptyDataset);
    }
    let mut model = PolicyModel::new(g, n_l, &hyper.hidden, seed);
    let in_dim = model.input_dim();
    let out_dim = model.output_dim();
    for s in samples {
        if s.encoding.len() != in_dim || s.label.len() != out_dim {
            return Err(ModelError::HeterogeneousSamples);
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_5eed);
    let mut indices: Vec<usize> = (0..samples.len()).collect();
    indices.shuffle(&mut rng);
    let n_val = if hyper.val_fraction > 0.0 && samples.len() >= 10 {
        ((samples.len() as f64) * hyper.val_fraction).floor() as usize
    } else {
        0
    };
    let (val_idx, train_idx) = indices.split_at(n_val);
    let val_idx = val_idx.to_vec();
    let mut train_idx = train_idx.to_vec();

    let mut opt = AdamState::new(&model.param_sizes(), hyper.adam);
    let mut curve = Vec::with_capacity(hyper.epochs);

    for _epoch in 0..hyper.epochs {
        train_idx.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        let mut seen = 0usize;
        for chunk in train_idx.chunks(hyper.batch_size.max(1)) {
            let (x, y) = gather(samples, chunk, in_dim, out_dim);
            let (loss, grad_w, grad_b) = batch_gradients(&model, &x, &y);
            epoch_loss += loss * chunk.len() as f64;
            seen += chunk.len();
            apply_step(&mut model, &mut opt, &grad_w, &grad_b);
        }
        let train_loss = epoch_loss / seen.max(1) as f64;
        let val_loss = if val_idx.is_empty() {
            f64::NAN
        } else {
            let (x, y) = gather(samples, &val_idx, in_dim, out_dim);
            batch_loss(&model, &x, &y)
        };
        curve.push((train_loss, val_loss));
    }
    Ok((model, curve))
}

fn gather(samples: &[TrainingSample], idx: &[usize], in_dim: usize, out_dim: usize) -> (Array2<f64>, Array2<f64>) {
    let mut x = Array2::zeros((idx.len(), in_dim));
    let mut y = Array2::zeros((idx.len(), out_dim));
    for (row, &i) in idx.iter().enumerate() {
        x.row_mut(row).assign(&Array1::from_vec(samples[i].encoding.clone()));
        y.row_mut(row).assign(&Array1::from_vec(samples[i].label.clone()));
    }
    (x, y)
}

/// Batched forward pass returning the softmax outputs.
fn forward_batch(model: &PolicyModel, x: &Array2<f64>) -> Array2<f64> {
    let (mut preds, _, _) = forward_caches(model, x);
    for mut row in preds.axis_iter_mut(Axis(0)) {
        softmax_in_place(row.as_slice_mut().expect("contiguous row"));
    }
    preds
}

/// Forward pass keeping pre-activations and activations for backprop.
/// Returns (final logits, per-layer pre-activations, per-layer inputs).
fn forward_caches(
    model: &PolicyModel,
    x: &Array2<f64>,
) -> (Array2<f64>, Vec<Array2<f64>>, Vec<Array2<f64>>) {
    let mut inputs = vec![x.clone()];
    let mut zs = Vec::new();
    let mut a = x.clone();
    for l in 0..model.weights.len() {
        let z = a.dot(&model.weights[l].t()) + &model.biases[l];
        zs.push(z.clone());
        if l + 1 < model.weights.len() {
            a = z.mapv(|v| v.max(0.0));
            inputs.push(a.clone());
        } else {
            a = z;
        }
    }
    (a, zs, inputs)
}

pub(crate) fn batch_loss(model: &PolicyModel, x: &Array2<f64>, y: &Array2<f64>) -> f64 {
    let preds = forward_batch(model, x);
    let n = preds.len() as f64;
    let diff = &preds - y;
    diff.mapv(|v| v * v).sum() / n
}

/// Analytic gradients of the batch-mean MSE (through the softmax) with
/// respect to every weight and bias.
pub(crate) fn batch_gradients(
    model: &PolicyModel,
    x: &Array2<f64>,
    y: &Array2<f64>,
) -> (f64, Vec<Array2<f64>>, Vec<Array1<f64>>) {
    let batch = x.nrows() as f64;
    let (logits, zs, inputs) = forward_caches(model, x);
    let mut preds = logits;
    for mut row in preds.axis_iter_mut(Axis(0)) {
        softmax_in_place(row.as_slice_mut().expect("contiguous row"));
    }
    let out_dim = preds.ncols() as f64;
    let diff = &preds - y;
    let loss = diff.mapv(|v| v * v).sum() / (batch * out_dim);

    // dL/dp, then through the softmax Jacobian row by row
    let g = diff.mapv(|v| 2.0 * v / (out_dim * batch));
    let mut dz = Array2::zeros(preds.dim());
    for row in 0..preds.nrows() {
        let p = preds.row(row);
        let gr = g.row(row);
        let d: f64 = p.iter().zip(gr.iter()).map(|(a, b)| a * b).sum();
        for j in 0..p.len() {
            dz[[row, j]] = p[j] * (gr[j] - d);
        }
    }

    let mut grad_w = vec![Array2::zeros((0, 0)); model.weights.len()];
    let mut grad_b = vec![Array1::zeros(0); model.weights.len()];
    for l in (0..model.weights.len()).rev() {
        grad_w[l] = dz.t().dot(&inputs[l]);
        grad_b[l] = dz.sum_axis(Axis(0));
        if l > 0 {
            let da = dz.dot(&model.weights[l]);
            let mask = zs[l - 1].mapv(|v| if v > 0.0 { 1.0 } else { 0.0 });
            dz = da * mask;
        }
    }
    (loss, grad_w, grad_b)
}

fn apply_step(model: &mut PolicyModel, opt: &mut AdamState, grad_w: &[Array2<f64>], grad_b: &[Array1<f64>]) {
    let layers = model.weights.len();
    let mut params: Vec<&mut [f64]> = Vec::with_capacity(2 * layers);
    let mut grads: Vec<&[f64]> = Vec::with_capacity(2 * layers);
    for (w, b) in model.weights.iter_mut().zip(model.biases.iter_mut()) {
        params.push(w.as_slice_mut().expect("contiguous weights"));
        params.push(b.as_slice_mut().expect("contiguous biases"));
    }
    for (gw, gb) in grad_w.iter().zip(grad_b) {
        grads.push(gw.as_slice().expect("contiguous gradients"));
        grads.push(gb.as_slice().expect("contiguous gradients"));
    }
    opt.step(&mut params, &grads);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arch::ArchGraph;
    use crate::circuit::random_circuit;
    use crate::policy::encode;
    use crate::route::Mapping;

    fn toy_samples(g: &ArchGraph, n_l: usize, count: usize, seed: u64) -> Vec<TrainingSample> {
        toy_samples_with(g, n_l, count, seed, false)
    }

    /// When `learnable` the label is a deterministic function of the input
    /// (so a held-out split can generalize); otherwise labels are random.
    fn toy_samples_with(
        g: &ArchGraph,
        n_l: usize,
        count: usize,
        seed: u64,
        learnable: bool,
    ) -> Vec<TrainingSample> {
        let n_q = g.num_nodes();
        let tau = Mapping::naive(n_q);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|i| {
                let c = random_circuit(n_q, 6, seed * 1000 + i as u64).unwrap();
                let encoding = encode(&c, &tau, n_l, n_q).unwrap();
                let mut label = vec![0.0; g.num_edges()];
                let hot = if learnable {
                    encoding.iter().enumerate().map(|(j, &v)| j * v as usize).sum::<usize>()
                        % g.num_edges()
                } else {
                    rand::Rng::random_range(&mut rng, 0..g.num_edges())
                };
                label[hot] = 1.0;
                TrainingSample { encoding, label }
            })
            .collect()
    }

    #[test]
    fn gradient_matches_finite_differences() {
        // 3-edge path graph, tiny network, central differences with h=1e-5
        let g = ArchGraph::grid(1, 4).unwrap();
        let mut model = PolicyModel::new(&g, 2, &[5], 7);
        // give the zero-initialized output layer some structure
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for w in &mut model.weights {
            w.mapv_inplace(|v| v + 0.05 * rand::Rng::random_range(&mut rng, -1.0..1.0));
        }
        let samples = toy_samples(&g, 2, 4, 3);
        let (x, y) = gather(&samples, &[0, 1, 2, 3], model.input_dim(), model.output_dim());
        let (_, grad_w, grad_b) = batch_gradients(&model, &x, &y);

        let h = 1e-5;
        let mut max_rel = 0.0f64;
        for l in 0..model.weights.len() {
            for idx in 0..model.weights[l].len() {
                let orig = model.weights[l].as_slice().unwrap()[idx];
                model.weights[l].as_slice_mut().unwrap()[idx] = orig + h;
                let up = batch_loss(&model, &x, &y);
                model.weights[l].as_slice_mut().unwrap()[idx] = orig - h;
                let down = batch_loss(&model, &x, &y);
                model.weights[l].as_slice_mut().unwrap()[idx] = orig;
                let numeric = (up - down) / (2.0 * h);
                let analytic = grad_w[l].as_slice().unwrap()[idx];
                let denom = numeric.abs().max(analytic.abs()).max(1e-8);
                max_rel = max_rel.max((numeric - analytic).abs() / denom);
            }
            for idx in 0..model.biases[l].len() {
                let orig = model.biases[l][idx];
                model.biases[l][idx] = orig + h;
                let up = batch_loss(&model, &x, &y);
                model.biases[l][idx] = orig - h;
                let down = batch_loss(&model, &x, &y);
                model.biases[l][idx] = orig;
                let numeric = (up - down) / (2.0 * h);
                let analytic = grad_b[l][idx];
                let denom = numeric.abs().max(analytic.abs()).max(1e-8);
                max_rel = max_rel.max((numeric - analytic).abs() / denom);
            }
        }
        assert!(max_rel <= 1e-4, "max relative error {max_rel}");
    }

    #[test]
    fn memorizes_small_dataset() {
        let g = ArchGraph::grid(2, 3).unwrap();
        let samples = toy_samples(&g, 3, 20, 5);
        let hyper = TrainHyper {
            hidden: vec![64],
            epochs: 500,
            batch_size: 8,
            val_fraction: 0.0,
            adam: AdamHyper::default(),
        };
        let (_, curve) = train(&g, 3, &samples, &hyper, 0).unwrap();
        let last = curve.last().unwrap().0;
        assert!(last < 1e-3, "final training MSE {last}");
        // non-increasing (within Adam jitter) after warmup
        for w in curve[10..].windows(2) {
            assert!(w[1].0 <= w[0].0 + 1e-3, "loss increased: {:?}", w);
        }
    }

    #[test]
    fn validation_beats_untrained() {
        let g = ArchGraph::grid(2, 3).unwrap();
        let samples = toy_samples_with(&g, 3, 200, 8, true);
        let hyper = TrainHyper { hidden: vec![64], epochs: 60, ..Default::default() };
        let (_, curve) = train(&g, 3, &samples, &hyper, 1).unwrap();
        let first_val = curve.first().unwrap().1;
        let last_val = curve.last().unwrap().1;
        assert!(last_val < first_val, "val loss {last_val} vs initial {first_val}");
    }

    #[test]
    fn training_is_deterministic() {
        let g = ArchGraph::grid(2, 3).unwrap();
        let samples = toy_samples(&g, 3, 30, 2);
        let hyper = TrainHyper { hidden: vec![32], epochs: 10, ..Default::default() };
        let (_, a) = train(&g, 3, &samples, &hyper, 4).unwrap();
        let (_, b) = train(&g, 3, &samples, &hyper, 4).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_datasets() {
        let g = ArchGraph::grid(2, 3).unwrap();
        assert!(matches!(
            train(&g, 3, &[], &TrainHyper::default(), 0),
            Err(ModelError::EmptyDataset)
        ));
        let mut samples = toy_samples(&g, 3, 3, 0);
        samples[1].encoding.pop();
        assert!(matches!(
            train(&g, 3, &samples, &TrainHyper::default(), 0),
            Err(ModelError::HeterogeneousSamples)
        ));
    }
}
