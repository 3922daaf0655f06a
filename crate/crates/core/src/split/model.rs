use ndarray::{Array1, Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::SplitError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Activation {
    #[default]
    Relu,
    Identity,
}

impl Activation {
    fn apply(self, z: &Array2<f64>) -> Array2<f64> {
        match self {
            Activation::Relu => z.mapv(|v| v.max(0.0)),
            Activation::Identity => z.clone(),
        }
    }

    /// Multiplies `grad` by the activation derivative at pre-activation `z`.
    fn backprop(self, z: &Array2<f64>, grad: &mut Array2<f64>) {
        if self == Activation::Relu {
            grad.zip_mut_with(z, |g, &zv| {
                if zv <= 0.0 {
                    *g = 0.0;
                }
            });
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputLoss {
    /// Softmax over the logits, mean negative log-likelihood over the batch.
    #[default]
    SoftmaxCrossEntropy,
    /// `1/(2B) * sum (z - onehot)^2`.
    SquaredError,
}

/// Fully connected layer computing `x W + b` for row-major batches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    /// `fan_in x fan_out`.
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Dense {
    pub fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Self {
            weights: Array2::zeros((fan_in, fan_out)),
            bias: Array1::zeros(fan_out),
        }
    }

    fn uniform(fan_in: usize, fan_out: usize, rng: &mut ChaCha8Rng) -> Self {
        let bound = 1.0 / (fan_in as f64).sqrt();
        let mut draw = || rng.random_range(-bound..=bound);
        let weights = Array2::from_shape_simple_fn((fan_in, fan_out), &mut draw);
        let bias = Array1::from_shape_simple_fn(fan_out, &mut draw);
        Self { weights, bias }
    }

    pub fn fan_in(&self) -> usize {
        self.weights.nrows()
    }

    pub fn fan_out(&self) -> usize {
        self.weights.ncols()
    }

    pub fn forward(&self, x: &Array2<f64>) -> Array2<f64> {
        x.dot(&self.weights) + &self.bias
    }

    pub fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    fn apply(&mut self, grad: &LayerGrad, lr: f64) {
        self.weights.scaled_add(-lr, &grad.weights);
        self.bias.scaled_add(-lr, &grad.bias);
    }
}

/// Loss gradient with respect to one layer's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

fn dense_backward(layer: &Dense, input: &Array2<f64>, grad_out: &Array2<f64>) -> (LayerGrad, Array2<f64>) {
    let grad = LayerGrad {
        weights: input.t().dot(grad_out),
        bias: grad_out.sum_axis(Axis(0)),
    };
    (grad, grad_out.dot(&layer.weights.t()))
}

/// Client-side layers. Every client layer is hidden, so each output passes
/// through the activation, including the cut-layer output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClientModel {
    layers: Vec<Dense>,
    activation: Activation,
    #[serde(skip)]
    generation: u64,
}

// Equality is over parameters only; the generation counter is bookkeeping.
impl PartialEq for ClientModel {
    fn eq(&self, other: &Self) -> bool {
        self.layers == other.layers && self.activation == other.activation
    }
}

/// Activations retained by [`client_forward`] for the matching backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    generation: u64,
    inputs: Vec<Array2<f64>>,
    pre_activations: Vec<Array2<f64>>,
}

impl ForwardCache {
    pub fn batch_size(&self) -> usize {
        self.inputs.first().map_or(0, |x| x.nrows())
    }
}

impl ClientModel {
    pub fn new(layers: Vec<Dense>, activation: Activation) -> Self {
        Self {
            layers,
            activation,
            generation: 0,
        }
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    /// Mutable parameter access; invalidates outstanding caches.
    pub fn layers_mut(&mut self) -> &mut [Dense] {
        self.generation += 1;
        &mut self.layers
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].fan_in()
    }

    pub fn output_width(&self) -> usize {
        self.layers.last().map_or(0, Dense::fan_out)
    }

    pub fn replace_layers(&mut self, layers: Vec<Dense>) -> Result<(), SplitError> {
        check_same_shapes(&self.layers, &layers)?;
        self.layers = layers;
        self.generation += 1;
        Ok(())
    }

    /// Parameter gradients given the loss gradient at the cut layer.
    pub fn gradients(&self, cache: &ForwardCache, grad_smashed: &Array2<f64>) -> Result<Vec<LayerGrad>, SplitError> {
        if cache.generation != self.generation || cache.inputs.len() != self.layers.len() {
            return Err(SplitError::StaleCache);
        }
        let expected = (cache.batch_size(), self.output_width());
        if grad_smashed.dim() != expected {
            return Err(SplitError::Dimension {
                what: "gradient at cut layer",
                expected,
                got: grad_smashed.dim(),
            });
        }
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut g = grad_smashed.clone();
        for i in (0..self.layers.len()).rev() {
            self.activation.backprop(&cache.pre_activations[i], &mut g);
            let (lg, upstream) = dense_backward(&self.layers[i], &cache.inputs[i], &g);
            grads.push(lg);
            g = upstream;
        }
        grads.reverse();
        Ok(grads)
    }

    fn apply(&mut self, grads: &[LayerGrad], lr: f64) {
        for (layer, g) in self.layers.iter_mut().zip(grads) {
            layer.apply(g, lr);
        }
        self.generation += 1;
    }
}

/// Server-side layers: hidden layers use the activation, the last emits
/// logits into the output loss.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServerModel {
    layers: Vec<Dense>,
    activation: Activation,
    loss: OutputLoss,
}

/// Loss, server parameter gradients, and the gradient at the cut layer.
#[derive(Debug, Clone)]
pub struct ServerGradients {
    pub loss: f64,
    pub layers: Vec<LayerGrad>,
    pub grad_smashed: Array2<f64>,
}

impl ServerModel {
    pub fn new(layers: Vec<Dense>, activation: Activation, loss: OutputLoss) -> Self {
        Self {
            layers,
            activation,
            loss,
        }
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense] {
        &mut self.layers
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].fan_in()
    }

    pub fn classes(&self) -> usize {
        self.layers.last().map_or(0, Dense::fan_out)
    }

    pub fn output_loss(&self) -> OutputLoss {
        self.loss
    }

    fn check_input(&self, smashed: &Array2<f64>, labels: &[usize]) -> Result<(), SplitError> {
        if smashed.ncols() != self.input_width() {
            return Err(SplitError::Dimension {
                what: "smashed data",
                expected: (smashed.nrows(), self.input_width()),
                got: smashed.dim(),
            });
        }
        if labels.len() != smashed.nrows() {
            return Err(SplitError::Dimension {
                what: "labels",
                expected: (smashed.nrows(), 1),
                got: (labels.len(), 1),
            });
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= self.classes()) {
            return Err(SplitError::InvalidLabel {
                label: bad,
                classes: self.classes(),
            });
        }
        Ok(())
    }

    /// Output logits for a batch of smashed activations.
    pub fn logits(&self, smashed: &Array2<f64>) -> Array2<f64> {
        let last = self.layers.len() - 1;
        let mut x = smashed.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            let z = layer.forward(&x);
            x = if i == last { z } else { self.activation.apply(&z) };
        }
        x
    }

    pub fn loss(&self, smashed: &Array2<f64>, labels: &[usize]) -> Result<f64, SplitError> {
        self.check_input(smashed, labels)?;
        Ok(output_loss(self.loss, &self.logits(smashed), labels).0)
    }

    pub fn gradients(&self, smashed: &Array2<f64>, labels: &[usize]) -> Result<ServerGradients, SplitError> {
        self.check_input(smashed, labels)?;
        let last = self.layers.len() - 1;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut x = smashed.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            let z = layer.forward(&x);
            inputs.push(x);
            x = if i == last { z.clone() } else { self.activation.apply(&z) };
            pre.push(z);
        }
        let (loss, mut g) = output_loss(self.loss, &x, labels);
        let mut grads = Vec::with_capacity(self.layers.len());
        for i in (0..self.layers.len()).rev() {
            if i != last {
                self.activation.backprop(&pre[i], &mut g);
            }
            let (lg, upstream) = dense_backward(&self.layers[i], &inputs[i], &g);
            grads.push(lg);
            g = upstream;
        }
        grads.reverse();
        Ok(ServerGradients {
            loss,
            layers: grads,
            grad_smashed: g,
        })
    }

    fn apply(&mut self, grads: &[LayerGrad], lr: f64) {
        for (layer, g) in self.layers.iter_mut().zip(grads) {
            layer.apply(g, lr);
        }
    }
}

/// Returns the batch-mean loss and its gradient with respect to the logits.
fn output_loss(kind: OutputLoss, logits: &Array2<f64>, labels: &[usize]) -> (f64, Array2<f64>) {
    let b = logits.nrows() as f64;
    let mut grad = logits.clone();
    let mut total = 0.0;
    match kind {
        OutputLoss::SoftmaxCrossEntropy => {
            for (mut row, &y) in grad.rows_mut().into_iter().zip(labels) {
                let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
                row.mapv_inplace(|v| (v - max).exp());
                let sum = row.sum();
                total += sum.ln() - row[y].ln();
                row.mapv_inplace(|v| v / sum / b);
                row[y] -= 1.0 / b;
            }
        }
        OutputLoss::SquaredError => {
            for (mut row, &y) in grad.rows_mut().into_iter().zip(labels) {
                row[y] -= 1.0;
                total += 0.5 * row.iter().map(|d| d * d).sum::<f64>();
                row.mapv_inplace(|v| v / b);
            }
        }
    }
    (total / b, grad)
}

fn check_same_shapes(a: &[Dense], b: &[Dense]) -> Result<(), SplitError> {
    let same = a.len() == b.len()
        && a
            .iter()
            .zip(b)
            .all(|(x, y)| x.weights.dim() == y.weights.dim() && x.bias.len() == y.bias.len());
    if same {
        Ok(())
    } else {
        Err(SplitError::ShapeMismatch)
    }
}

/// A multi-layer perceptron cut into client and server halves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitModel {
    pub layer_sizes: Vec<usize>,
    /// Number of weight layers held by the client.
    pub split_index: usize,
    pub client: ClientModel,
    pub server: ServerModel,
}

/// Architecture and initialization options for [`build_split_model_with`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub layer_sizes: Vec<usize>,
    pub split_index: usize,
    #[serde(default)]
    pub activation: Activation,
    #[serde(default)]
    pub loss: OutputLoss,
}

impl ModelSpec {
    pub fn new(layer_sizes: Vec<usize>, split_index: usize) -> Self {
        Self {
            layer_sizes,
            split_index,
            activation: Activation::Relu,
            loss: OutputLoss::SoftmaxCrossEntropy,
        }
    }

    pub fn layer_count(&self) -> usize {
        self.layer_sizes.len().saturating_sub(1)
    }

    /// Cut that leaves roughly `fraction` of the weight layers on the
    /// client, rounded and clamped so both sides keep at least one layer.
    pub fn split_for_fraction(layer_count: usize, fraction: f64) -> usize {
        let k = (fraction * layer_count as f64).round() as usize;
        k.clamp(1, layer_count.saturating_sub(1).max(1))
    }
}

/// ReLU/softmax model with uniform `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`
/// initialization drawn from `seed`.
pub fn build_split_model(layer_sizes: &[usize], split_index: usize, seed: u64) -> Result<SplitModel, SplitError> {
    build_split_model_with(&ModelSpec::new(layer_sizes.to_vec(), split_index), seed)
}

pub fn build_split_model_with(spec: &ModelSpec, seed: u64) -> Result<SplitModel, SplitError> {
    let sizes = &spec.layer_sizes;
    let layers = spec.layer_count();
    if sizes.iter().any(|&s| s == 0) || layers < 2 {
        return Err(SplitError::InvalidArchitecture(format!(
            "need at least two layers of non-zero width, got {sizes:?}"
        )));
    }
    if spec.split_index < 1 || spec.split_index >= layers {
        return Err(SplitError::InvalidSplit {
            split: spec.split_index,
            layers,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut all: Vec<Dense> = sizes
        .windows(2)
        .map(|w| Dense::uniform(w[0], w[1], &mut rng))
        .collect();
    let server = all.split_off(spec.split_index);
    Ok(SplitModel {
        layer_sizes: sizes.clone(),
        split_index: spec.split_index,
        client: ClientModel::new(all, spec.activation),
        server: ServerModel::new(server, spec.activation, spec.loss),
    })
}

impl SplitModel {
    pub fn logits(&self, x: &Array2<f64>) -> Result<Array2<f64>, SplitError> {
        let (smashed, _) = client_forward(&self.client, x)?;
        Ok(self.server.logits(&smashed))
    }

    pub fn loss(&self, x: &Array2<f64>, labels: &[usize]) -> Result<f64, SplitError> {
        let (smashed, _) = client_forward(&self.client, x)?;
        self.server.loss(&smashed, labels)
    }

    pub fn predict(&self, x: &Array2<f64>) -> Result<Vec<usize>, SplitError> {
        let logits = self.logits(x)?;
        Ok(logits
            .rows()
            .into_iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) })
                    .0
            })
            .collect())
    }

    pub fn accuracy(&self, x: &Array2<f64>, labels: &[usize]) -> Result<f64, SplitError> {
        if labels.is_empty() {
            return Ok(0.0);
        }
        let hits = self.predict(x)?.iter().zip(labels).filter(|(p, y)| p == y).count();
        Ok(hits as f64 / labels.len() as f64)
    }

    /// One full split step: client forward, server update, client update.
    pub fn step(&mut self, x: &Array2<f64>, labels: &[usize], lr: f64) -> Result<f64, SplitError> {
        let (smashed, cache) = client_forward(&self.client, x)?;
        let (loss, grad) = server_forward_backward(&mut self.server, &smashed, labels, lr)?;
        client_backward(&mut self.client, &cache, &grad, lr)?;
        Ok(loss)
    }
}

/// Runs the client layers; the returned activations are what leaves the
/// device.
pub fn client_forward(client: &ClientModel, x: &Array2<f64>) -> Result<(Array2<f64>, ForwardCache), SplitError> {
    if x.ncols() != client.input_width() {
        return Err(SplitError::Dimension {
            what: "input batch",
            expected: (x.nrows(), client.input_width()),
            got: x.dim(),
        });
    }
    let mut inputs = Vec::with_capacity(client.layers.len());
    let mut pre = Vec::with_capacity(client.layers.len());
    let mut a = x.clone();
    for layer in &client.layers {
        let z = layer.forward(&a);
        inputs.push(a);
        a = client.activation.apply(&z);
        pre.push(z);
    }
    Ok((
        a,
        ForwardCache {
            generation: client.generation,
            inputs,
            pre_activations: pre,
        },
    ))
}

/// Computes the loss, updates the server by SGD, and returns the loss
/// gradient at the cut layer taken before the update.
pub fn server_forward_backward(
    server: &mut ServerModel,
    smashed: &Array2<f64>,
    labels: &[usize],
    lr: f64,
) -> Result<(f64, Array2<f64>), SplitError> {
    let g = server.gradients(smashed, labels)?;
    server.apply(&g.layers, lr);
    Ok((g.loss, g.grad_smashed))
}

pub fn client_backward(
    client: &mut ClientModel,
    cache: &ForwardCache,
    grad_smashed: &Array2<f64>,
    lr: f64,
) -> Result<(), SplitError> {
    let grads = client.gradients(cache, grad_smashed)?;
    client.apply(&grads, lr);
    Ok(())
}

/// Element-wise arithmetic mean of shape-identical parameter sets.
pub fn aggregate(sets: &[Vec<Dense>]) -> Result<Vec<Dense>, SplitError> {
    let (first, rest) = sets.split_first().ok_or(SplitError::EmptyAggregation)?;
    let mut acc = first.clone();
    for set in rest {
        check_same_shapes(&acc, set)?;
        for (a, l) in acc.iter_mut().zip(set) {
            a.weights += &l.weights;
            a.bias += &l.bias;
        }
    }
    let k = sets.len() as f64;
    for a in &mut acc {
        a.weights /= k;
        a.bias /= k;
    }
    Ok(acc)
}
