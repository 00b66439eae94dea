//! Feed-forward network: sigmoid hidden layers, 2-unit softmax output,
//! cross-entropy loss, seeded mini-batch gradient descent with early
//! stopping on validation F1.

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{Label, PairFeatureRow};
use crate::metrics::Counts;
use crate::scalar::Real;

use super::{FeatureScaler, ModelKind, ModelParams, TrainedModel};

/// Training settings. The defaults are the adopted configuration: two
/// hidden layers of ten sigmoid units.
#[derive(Debug, Clone, Copy)]
pub struct MlpConfig<T> {
    pub hidden_layers: usize,
    pub neurons_per_layer: usize,
    pub learning_rate: T,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without validation-F1 improvement before stopping.
    pub patience: usize,
    pub seed: u64,
}

impl<T: Real> Default for MlpConfig<T> {
    fn default() -> Self {
        Self {
            hidden_layers: 2,
            neurons_per_layer: 10,
            learning_rate: T::of(0.05),
            batch_size: 32,
            max_epochs: 500,
            patience: 25,
            seed: 0,
        }
    }
}

/// Dense layer parameters: `weights[out][in]` plus one bias per output unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerParams<T> {
    pub weights: Vec<Vec<T>>,
    pub biases: Vec<T>,
}

/// Full network parameters; the last layer is the softmax output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams<T> {
    pub layer_sizes: Vec<usize>,
    pub layers: Vec<LayerParams<T>>,
}

fn sigmoid<T: Real>(z: T) -> T {
    T::one() / (T::one() + (-z).exp())
}

/// Numerically stable softmax; outputs are explicitly normalized.
fn softmax<T: Real>(zs: &[T]) -> Vec<T> {
    let m = zs.iter().copied().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = zs.iter().map(|&z| (z - m).exp()).collect();
    let sum = exps.iter().copied().fold(T::zero(), |a, b| a + b);
    exps.into_iter().map(|e| e / sum).collect()
}

/// A network with forward/backward passes; the training loop and the
/// gradient checks both drive this type.
#[derive(Debug, Clone)]
pub struct Network<T> {
    pub params: MlpParams<T>,
}

/// Gradients in the same shape as the parameters.
#[derive(Debug, Clone)]
pub struct Gradients<T> {
    pub layers: Vec<LayerParams<T>>,
}

impl<T: Real> Network<T> {
    /// Uniform Xavier initialization from a seeded generator.
    pub fn init(layer_sizes: &[usize], rng: &mut impl Rng) -> Self {
        let mut layers = Vec::with_capacity(layer_sizes.len() - 1);
        for w in layer_sizes.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let r = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let weights = (0..fan_out)
                .map(|_| {
                    (0..fan_in)
                        .map(|_| T::of(rng.random_range(-r..r)))
                        .collect()
                })
                .collect();
            layers.push(LayerParams {
                weights,
                biases: vec![T::zero(); fan_out],
            });
        }
        Self {
            params: MlpParams {
                layer_sizes: layer_sizes.to_vec(),
                layers,
            },
        }
    }

    /// Activations of every layer, input included; the final entry is the
    /// softmax output.
    fn activations(&self, x: &[T]) -> Vec<Vec<T>> {
        let mut acts = vec![x.to_vec()];
        let last = self.params.layers.len() - 1;
        for (l, layer) in self.params.layers.iter().enumerate() {
            let prev = &acts[l];
            let zs: Vec<T> = layer
                .weights
                .iter()
                .zip(&layer.biases)
                .map(|(row, &b)| {
                    row.iter()
                        .zip(prev)
                        .map(|(&w, &a)| w * a)
                        .fold(b, |acc, v| acc + v)
                })
                .collect();
            let out = if l == last {
                softmax(&zs)
            } else {
                zs.into_iter().map(sigmoid).collect()
            };
            acts.push(out);
        }
        acts
    }

    /// Class probabilities `[p(non-composable), p(composable)]`.
    pub fn forward(&self, x: &[T]) -> Vec<T> {
        self.activations(x).pop().expect("output layer")
    }

    /// Mean cross-entropy over a batch; `ys` holds positive-class flags.
    pub fn loss(&self, xs: &[Vec<T>], ys: &[bool]) -> T {
        let n = T::from_usize(xs.len()).expect("batch size");
        let tiny = T::of(1e-12);
        xs.iter()
            .zip(ys)
            .map(|(x, &y)| {
                let p = self.forward(x);
                let target = if y { p[1] } else { p[0] };
                -(target.max(tiny)).ln()
            })
            .fold(T::zero(), |a, b| a + b)
            / n
    }

    /// Mean cross-entropy gradients over a batch by backpropagation.
    pub fn gradients(&self, xs: &[Vec<T>], ys: &[bool]) -> Gradients<T> {
        let mut grads = Gradients {
            layers: self
                .params
                .layers
                .iter()
                .map(|l| LayerParams {
                    weights: l.weights.iter().map(|r| vec![T::zero(); r.len()]).collect(),
                    biases: vec![T::zero(); l.biases.len()],
                })
                .collect(),
        };
        let scale = T::one() / T::from_usize(xs.len()).expect("batch size");
        let last = self.params.layers.len() - 1;
        for (x, &y) in xs.iter().zip(ys) {
            let acts = self.activations(x);
            // Softmax + cross-entropy: delta = p - onehot(y).
            let mut delta: Vec<T> = acts[last + 1].clone();
            let target = usize::from(y);
            delta[target] -= T::one();

            for l in (0..=last).rev() {
                let prev = &acts[l];
                let grad = &mut grads.layers[l];
                for (u, &d) in delta.iter().enumerate() {
                    grad.biases[u] += d * scale;
                    for (i, &a) in prev.iter().enumerate() {
                        grad.weights[u][i] += d * a * scale;
                    }
                }
                if l > 0 {
                    // Propagate through the sigmoid of the previous layer.
                    let layer = &self.params.layers[l];
                    delta = (0..prev.len())
                        .map(|i| {
                            let upstream = delta
                                .iter()
                                .enumerate()
                                .map(|(u, &d)| d * layer.weights[u][i])
                                .fold(T::zero(), |a, b| a + b);
                            upstream * prev[i] * (T::one() - prev[i])
                        })
                        .collect();
                }
            }
        }
        grads
    }

    pub fn apply(&mut self, grads: &Gradients<T>, learning_rate: T) {
        for (layer, grad) in self.params.layers.iter_mut().zip(&grads.layers) {
            for (row, grow) in layer.weights.iter_mut().zip(&grad.weights) {
                for (w, &g) in row.iter_mut().zip(grow) {
                    *w -= learning_rate * g;
                }
            }
            for (b, &g) in layer.biases.iter_mut().zip(&grad.biases) {
                *b -= learning_rate * g;
            }
        }
    }

    /// Number of scalar parameters (weights then biases, layer by layer).
    pub fn flat_len(&self) -> usize {
        self.params
            .layers
            .iter()
            .map(|l| l.weights.iter().map(Vec::len).sum::<usize>() + l.biases.len())
            .sum()
    }

    /// Adds `delta` to the parameter at a flat index; used by the
    /// finite-difference gradient checks.
    pub fn nudge(&mut self, flat_index: usize, delta: T) {
        let mut k = flat_index;
        for layer in &mut self.params.layers {
            for row in &mut layer.weights {
                if k < row.len() {
                    row[k] += delta;
                    return;
                }
                k -= row.len();
            }
            if k < layer.biases.len() {
                layer.biases[k] += delta;
                return;
            }
            k -= layer.biases.len();
        }
        panic!("flat index {flat_index} out of range");
    }

    /// Reads a gradient value by the same flat indexing as [`Self::nudge`].
    pub fn flat_gradient(grads: &Gradients<T>, flat_index: usize) -> T {
        let mut k = flat_index;
        for layer in &grads.layers {
            for row in &layer.weights {
                if k < row.len() {
                    return row[k];
                }
                k -= row.len();
            }
            if k < layer.biases.len() {
                return layer.biases[k];
            }
            k -= layer.biases.len();
        }
        panic!("flat index {flat_index} out of range");
    }
}

fn f1_against<T: Real>(net: &Network<T>, xs: &[Vec<T>], ys: &[bool]) -> T {
    let mut counts = Counts::default();
    for (x, &y) in xs.iter().zip(ys) {
        let p = net.forward(x);
        let positive = p[1] >= p[0];
        match (positive, y) {
            (true, true) => counts.tp += 1,
            (true, false) => counts.fp += 1,
            (false, true) => counts.fn_ += 1,
            (false, false) => counts.tn += 1,
        }
    }
    counts.metrics::<T>().f1
}

/// Trains the network. `validation` drives early stopping and may be empty,
/// in which case training runs to `max_epochs` (or until the training loss
/// stalls).
pub fn train_mlp<T: Real>(
    train: &[PairFeatureRow<T>],
    validation: &[PairFeatureRow<T>],
    cfg: &MlpConfig<T>,
) -> Result<TrainedModel<T>> {
    if !(2..=4).contains(&cfg.hidden_layers) {
        return Err(Error::InvalidConfig(format!(
            "hidden_layers must be 2, 3 or 4, got {}",
            cfg.hidden_layers
        )));
    }
    if cfg.batch_size == 0 || cfg.max_epochs == 0 || cfg.learning_rate <= T::zero() {
        return Err(Error::InvalidConfig(
            "batch size, epochs and learning rate must be positive".into(),
        ));
    }
    let scaler = FeatureScaler::fit(train)?;
    let xs = scaler.transform_rows(train);
    let ys: Vec<bool> = train
        .iter()
        .map(|r| r.label.map(Label::is_positive).ok_or(Error::UnlabeledRow))
        .collect::<Result<_>>()?;
    let val_xs = scaler.transform_rows(validation);
    let val_ys: Vec<bool> = validation
        .iter()
        .map(|r| r.label.map(Label::is_positive).ok_or(Error::UnlabeledRow))
        .collect::<Result<_>>()?;

    let mut layer_sizes = vec![xs[0].len()];
    layer_sizes.extend(std::iter::repeat(cfg.neurons_per_layer).take(cfg.hidden_layers));
    layer_sizes.push(2);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut net = Network::init(&layer_sizes, &mut rng);

    let mut order: Vec<usize> = (0..xs.len()).collect();
    let mut best_f1 = T::neg_infinity();
    let mut best_params = net.params.clone();
    let mut stale_epochs = 0usize;

    for epoch in 0..cfg.max_epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.batch_size) {
            let bx: Vec<Vec<T>> = chunk.iter().map(|&i| xs[i].clone()).collect();
            let by: Vec<bool> = chunk.iter().map(|&i| ys[i]).collect();
            let grads = net.gradients(&bx, &by);
            net.apply(&grads, cfg.learning_rate);
        }
        let loss = net.loss(&xs, &ys);
        if !loss.is_finite() {
            return Err(Error::TrainingDiverged { epoch });
        }
        if !val_xs.is_empty() {
            let f1 = f1_against(&net, &val_xs, &val_ys);
            if f1 > best_f1 {
                best_f1 = f1;
                best_params = net.params.clone();
                stale_epochs = 0;
            } else {
                stale_epochs += 1;
                if stale_epochs >= cfg.patience {
                    break;
                }
            }
        } else {
            best_params = net.params.clone();
        }
    }
    if !val_xs.is_empty() {
        net.params = best_params;
    }

    Ok(TrainedModel::assemble(
        ModelKind::Mlp,
        scaler,
        ModelParams::Mlp(net.params),
        Vec::new(),
    ))
}

pub fn predict<T: Real>(params: &MlpParams<T>, x: &[T]) -> Result<(Label, T)> {
    if params.layer_sizes.first() != Some(&x.len()) {
        return Err(Error::ShapeMismatch {
            expected: params.layer_sizes.first().copied().unwrap_or(0),
            got: x.len(),
        });
    }
    let net = Network {
        params: params.clone(),
    };
    let p = net.forward(x);
    Ok((Label::from_bool(p[1] >= p[0]), p[1]))
}
