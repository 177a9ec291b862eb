use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, Rng};

/// Fixed map applied to the raw data vector before the first layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InputTransform {
    Identity,
    /// Natural logarithm, for strictly positive heavy-tailed data.
    Log,
    /// Logarithm followed by a canonical ordering of exchangeable data:
    /// each block of `dim` coordinates is sorted in decreasing order and the
    /// blocks are then sorted lexicographically, largest first.
    SortedLog {
        dim: usize,
    },
}

impl InputTransform {
    pub fn apply(self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        match self {
            InputTransform::Identity => out.extend_from_slice(x),
            InputTransform::Log => out.extend(x.iter().map(|v| v.max(1e-300).ln())),
            InputTransform::SortedLog { dim } => {
                let dim = dim.max(1);
                let mut blocks: Vec<Vec<f64>> = x
                    .chunks(dim)
                    .map(|b| {
                        let mut b: Vec<f64> = b.iter().map(|v| v.max(1e-300).ln()).collect();
                        b.sort_by(|a, c| c.total_cmp(a));
                        b
                    })
                    .collect();
                blocks.sort_by(|a, c| {
                    c.iter()
                        .zip(a)
                        .map(|(p, q)| p.total_cmp(q))
                        .find(|o| o.is_ne())
                        .unwrap_or(std::cmp::Ordering::Equal)
                });
                out.extend(blocks.into_iter().flatten());
            }
        }
    }

    pub fn label(self) -> String {
        match self {
            InputTransform::Identity => "identity".into(),
            InputTransform::Log => "log".into(),
            InputTransform::SortedLog { dim } => format!("sorted-log:{dim}"),
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(InputTransform::Identity),
            "log" => Ok(InputTransform::Log),
            other => other
                .strip_prefix("sorted-log:")
                .and_then(|d| d.parse().ok())
                .filter(|d| *d > 0)
                .map(|dim| InputTransform::SortedLog { dim })
                .ok_or_else(|| Error::Format(format!("unknown input transform {other:?}"))),
        }
    }
}

/// One affine layer; row `r` of `weights` holds the incoming weights of
/// output neuron `r`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Layer {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Layer {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            biases: vec![0.0; outputs],
        }
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.weights[r * self.inputs..(r + 1) * self.inputs]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.weights[r * self.inputs..(r + 1) * self.inputs]
    }

    fn affine(&self, x: &[f64], out: &mut [f64]) {
        for (r, o) in out.iter_mut().enumerate() {
            *o = self.biases[r] + dot(self.row(r), x);
        }
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn relu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

/// Subgradient of ReLU, taken as 0 at the kink.
#[inline]
fn relu_grad(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Fully connected feedforward network: affine layers with ReLU between
/// them and an optional output clip to `[-B, B]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub layers: Vec<Layer>,
    pub clip: Option<f64>,
    pub input_transform: InputTransform,
}

/// Gradient with the same shape as the network parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub layers: Vec<Layer>,
}

impl Gradient {
    pub fn zeros_like(net: &Network) -> Self {
        Gradient {
            layers: net.layers.iter().map(|l| Layer::zeros(l.inputs, l.outputs)).collect(),
        }
    }

    pub fn fill_zero(&mut self) {
        for l in &mut self.layers {
            l.weights.iter_mut().for_each(|v| *v = 0.0);
            l.biases.iter_mut().for_each(|v| *v = 0.0);
        }
    }

    pub fn scale(&mut self, s: f64) {
        for l in &mut self.layers {
            l.weights.iter_mut().for_each(|v| *v *= s);
            l.biases.iter_mut().for_each(|v| *v *= s);
        }
    }

    /// Parameters in canonical order: per layer, weights then biases.
    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(l.biases.iter()).copied())
    }
}

/// Per-sample buffers reused across forward/backward passes.
#[derive(Debug, Clone)]
pub(crate) struct Workspace {
    input: Vec<f64>,
    // pre[l]: pre-activation of layer l; post[l]: its (masked) activation
    pre: Vec<Vec<f64>>,
    post: Vec<Vec<f64>>,
    masks: Vec<Vec<f64>>,
    delta: Vec<Vec<f64>>,
}

impl Workspace {
    pub(crate) fn new(net: &Network) -> Self {
        let dims = net.layer_dims();
        let hidden = &dims[1..];
        Workspace {
            input: Vec::with_capacity(dims[0]),
            pre: hidden.iter().map(|&n| vec![0.0; n]).collect(),
            post: hidden.iter().map(|&n| vec![0.0; n]).collect(),
            masks: hidden.iter().map(|&n| vec![1.0; n]).collect(),
            delta: hidden.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }
}

impl Network {
    /// Network with all weights and biases zero.
    pub fn zeros(layer_dims: &[usize], clip: Option<f64>) -> Result<Self> {
        if layer_dims.len() < 2 || layer_dims.contains(&0) {
            return Err(Error::Config(format!("invalid layer dimensions {layer_dims:?}")));
        }
        if let Some(b) = clip {
            if !(b > 0.0) {
                return Err(Error::Config(format!("clip bound must be positive, got {b}")));
            }
        }
        Ok(Network {
            layers: layer_dims.windows(2).map(|w| Layer::zeros(w[0], w[1])).collect(),
            clip,
            input_transform: InputTransform::Identity,
        })
    }

    /// He-initialized network: weights `N(0, 2/fan_in)`, zero biases.
    pub fn init(layer_dims: &[usize], clip: Option<f64>, seed: u64) -> Result<Self> {
        let mut net = Network::zeros(layer_dims, clip)?;
        let mut rng = rng::stream(seed, "init", 0);
        let last = net.layers.len() - 1;
        for (i, layer) in net.layers.iter_mut().enumerate() {
            // a small output layer keeps early outputs inside the clip range
            let scale = if i == last && i > 0 { 0.1 } else { 1.0 };
            let sd = scale * (2.0 / layer.inputs as f64).sqrt();
            layer
                .weights
                .iter_mut()
                .for_each(|w| *w = sd * rng.sample::<f64, _>(StandardNormal));
        }
        Ok(net)
    }

    pub fn with_input_transform(mut self, t: InputTransform) -> Self {
        self.input_transform = t;
        self
    }

    /// `[D, N₁, …, N_L, p]`.
    pub fn layer_dims(&self) -> Vec<usize> {
        let mut dims = vec![self.layers[0].inputs];
        dims.extend(self.layers.iter().map(|l| l.outputs));
        dims
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map(|l| l.outputs).unwrap_or(0)
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum()
    }

    /// Number of hidden layers.
    pub fn depth(&self) -> usize {
        self.layers.len() - 1
    }

    fn clip_value(&self, y: f64) -> f64 {
        match self.clip {
            // σ(y+B) − σ(y−B) − B, evaluated without cancellation
            Some(b) => y.clamp(-b, b),
            None => y,
        }
    }

    fn clip_grad(&self, y: f64) -> f64 {
        match self.clip {
            Some(b) => relu_grad(y + b) - relu_grad(y - b),
            None => 1.0,
        }
    }

    /// Forward pass through the affine–ReLU chain and output clip.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                got: x.len(),
            });
        }
        let mut ws = Workspace::new(self);
        Ok(self.forward_ws(x, &mut ws).to_vec())
    }

    /// Pre-clip output of the last layer.
    pub fn forward_unclipped(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                got: x.len(),
            });
        }
        let mut ws = Workspace::new(self);
        self.run_layers(x, &mut ws, None);
        Ok(ws.pre.last().unwrap().clone())
    }

    /// Evaluation-mode forward pass; the result lives in the workspace.
    pub(crate) fn forward_ws<'a>(&self, x: &[f64], ws: &'a mut Workspace) -> &'a [f64] {
        self.run_layers(x, ws, None);
        let last = self.layers.len() - 1;
        for i in 0..ws.post[last].len() {
            ws.post[last][i] = self.clip_value(ws.pre[last][i]);
        }
        &ws.post[last]
    }

    fn run_layers(&self, x: &[f64], ws: &mut Workspace, dropout: Option<(f64, &mut Rng)>) {
        self.input_transform.apply(x, &mut ws.input);
        let last = self.layers.len() - 1;
        let mut dropout = dropout;
        for (l, layer) in self.layers.iter().enumerate() {
            let pre = &mut ws.pre[l];
            if l == 0 {
                layer.affine(&ws.input, pre);
            } else {
                layer.affine(&ws.post[l - 1], pre);
            }
            if l < last {
                let post = &mut ws.post[l];
                let mask = &mut ws.masks[l];
                match dropout.as_mut() {
                    Some((rate, rng)) => {
                        let keep = 1.0 - *rate;
                        for i in 0..post.len() {
                            mask[i] = if rng.random::<f64>() < keep { 1.0 / keep } else { 0.0 };
                            post[i] = relu(pre[i]) * mask[i];
                        }
                    }
                    None => {
                        for i in 0..post.len() {
                            mask[i] = 1.0;
                            post[i] = relu(pre[i]);
                        }
                    }
                }
            }
        }
    }

    /// Accumulates `scale · ∇_φ ‖f_φ(x) − θ‖²` into `grad`; returns the
    /// sample's squared error.
    pub(crate) fn accumulate_gradient(
        &self,
        x: &[f64],
        target: &[f64],
        scale: f64,
        ws: &mut Workspace,
        grad: &mut Gradient,
        dropout: Option<(f64, &mut Rng)>,
    ) -> f64 {
        self.run_layers(x, ws, dropout);
        let last = self.layers.len() - 1;
        let mut sq = 0.0;
        for i in 0..self.output_dim() {
            let y = ws.pre[last][i];
            let out = self.clip_value(y);
            ws.post[last][i] = out;
            let r = out - target[i];
            sq += r * r;
            ws.delta[last][i] = scale * 2.0 * r * self.clip_grad(y);
        }
        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let g = &mut grad.layers[l];
            let input: &[f64] = if l == 0 { &ws.input } else { &ws.post[l - 1] };
            for r in 0..layer.outputs {
                let d = ws.delta[l][r];
                if d == 0.0 {
                    continue;
                }
                g.biases[r] += d;
                let row = &mut g.weights[r * layer.inputs..(r + 1) * layer.inputs];
                for (w, a) in row.iter_mut().zip(input) {
                    *w += d * a;
                }
            }
            if l > 0 {
                let (lower, upper) = ws.delta.split_at_mut(l);
                let prev = &mut lower[l - 1];
                let cur = &upper[0];
                prev.iter_mut().for_each(|v| *v = 0.0);
                for r in 0..layer.outputs {
                    let d = cur[r];
                    if d == 0.0 {
                        continue;
                    }
                    for (p, w) in prev.iter_mut().zip(layer.row(r)) {
                        *p += d * w;
                    }
                }
                for i in 0..prev.len() {
                    prev[i] *= relu_grad(ws.pre[l - 1][i]) * ws.masks[l - 1][i];
                }
            }
        }
        sq
    }

    /// Predictions for every row of a row-major `n × D` matrix.
    pub fn predict_batch(&self, x: &[f64]) -> Result<Vec<f64>> {
        let dim = self.input_dim();
        if x.len() % dim != 0 {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: x.len() % dim,
            });
        }
        let mut ws = Workspace::new(self);
        let mut out = Vec::with_capacity(x.len() / dim * self.output_dim());
        for row in x.chunks(dim) {
            out.extend_from_slice(self.forward_ws(row, &mut ws));
        }
        Ok(out)
    }

    /// Flat parameter vector (per layer: weights then biases).
    pub fn params(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(l.biases.iter()).copied())
            .collect()
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.n_params() {
            return Err(Error::DimensionMismatch {
                expected: self.n_params(),
                got: params.len(),
            });
        }
        let mut it = params.iter().copied();
        for l in &mut self.layers {
            for w in l.weights.iter_mut().chain(l.biases.iter_mut()) {
                *w = it.next().unwrap();
            }
        }
        Ok(())
    }

    /// Applies `f(index, param, grad)` to every parameter in canonical order.
    pub(crate) fn update_with(&mut self, grad: &Gradient, mut f: impl FnMut(usize, &mut f64, f64)) {
        let mut idx = 0;
        for (l, g) in self.layers.iter_mut().zip(&grad.layers) {
            for (w, gw) in l.weights.iter_mut().zip(&g.weights) {
                f(idx, w, *gw);
                idx += 1;
            }
            for (b, gb) in l.biases.iter_mut().zip(&g.biases) {
                f(idx, b, *gb);
                idx += 1;
            }
        }
    }

    /// Hidden pre-activations of every layer for input `x` (diagnostics).
    pub fn hidden_preactivations(&self, x: &[f64]) -> Vec<f64> {
        let mut ws = Workspace::new(self);
        self.run_layers(x, &mut ws, None);
        ws.pre[..self.layers.len() - 1].iter().flatten().copied().collect()
    }
}

fn check_batch(net: &Network, xs: &[f64], targets: &[f64]) -> Result<usize> {
    let d = net.input_dim();
    let p = net.output_dim();
    let n = xs.len() / d;
    if n == 0 || xs.len() != n * d || targets.len() != n * p {
        return Err(Error::DimensionMismatch {
            expected: n * p,
            got: targets.len(),
        });
    }
    Ok(n)
}

/// Mean squared error `mean_i ‖f(x_i) − θ_i‖²` over a batch given as
/// row-major inputs and targets.
pub fn loss(net: &Network, xs: &[f64], targets: &[f64]) -> Result<f64> {
    let n = check_batch(net, xs, targets)?;
    let d = net.input_dim();
    let p = net.output_dim();
    let mut ws = Workspace::new(net);
    let mut total = 0.0;
    for i in 0..n {
        let out = net.forward_ws(&xs[i * d..(i + 1) * d], &mut ws);
        total += out
            .iter()
            .zip(&targets[i * p..(i + 1) * p])
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>();
    }
    Ok(total / n as f64)
}

/// Exact gradient of [`loss`] with respect to every weight and bias.
pub fn backward(net: &Network, xs: &[f64], targets: &[f64]) -> Result<Gradient> {
    let n = check_batch(net, xs, targets)?;
    let d = net.input_dim();
    let p = net.output_dim();
    let mut ws = Workspace::new(net);
    let mut grad = Gradient::zeros_like(net);
    let scale = 1.0 / n as f64;
    for i in 0..n {
        net.accumulate_gradient(
            &xs[i * d..(i + 1) * d],
            &targets[i * p..(i + 1) * p],
            scale,
            &mut ws,
            &mut grad,
            None,
        );
    }
    Ok(grad)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hand_net() -> Network {
        let mut net = Network::zeros(&[1, 1, 1], None).unwrap();
        net.layers[0].weights = vec![1.0];
        net.layers[0].biases = vec![-1.0];
        net.layers[1].weights = vec![2.0];
        net.layers[1].biases = vec![0.5];
        net
    }

    #[test]
    fn zero_network_outputs_zero() {
        let net = Network::zeros(&[3, 4, 2], Some(1.0)).unwrap();
        assert_eq!(net.forward(&[1.0, -2.0, 5.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn hand_evaluation() {
        assert_eq!(hand_net().forward(&[2.0]).unwrap(), vec![2.5]);
    }

    #[test]
    fn clip_identity_outside_bound() {
        let mut net = Network::zeros(&[1, 1], Some(1.0)).unwrap();
        net.layers[0].biases = vec![3.7];
        assert_eq!(net.forward(&[0.0]).unwrap(), vec![1.0]);
        net.layers[0].biases = vec![-3.7];
        assert_eq!(net.forward(&[0.0]).unwrap(), vec![-1.0]);
        net.layers[0].biases = vec![0.25];
        assert_eq!(net.forward(&[0.0]).unwrap(), vec![0.25]);
    }

    #[test]
    fn dimension_mismatch() {
        assert!(matches!(
            hand_net().forward(&[1.0, 2.0]),
            Err(Error::DimensionMismatch { expected: 1, got: 2 })
        ));
    }

    #[test]
    fn loss_examples() {
        let net = Network::zeros(&[1, 2], None).unwrap();
        assert_eq!(loss(&net, &[0.3], &[0.0, 0.0]).unwrap(), 0.0);
        let mut net = Network::zeros(&[1, 2], None).unwrap();
        net.layers[0].biases = vec![1.0, 2.0];
        assert_eq!(loss(&net, &[0.0], &[0.0, 0.0]).unwrap(), 5.0);
        let mut scalar = Network::zeros(&[1, 1], None).unwrap();
        scalar.layers[0].biases = vec![1.0];
        // residuals 1 and √3
        assert!((loss(&scalar, &[0.0, 0.0], &[0.0, 1.0 - 3f64.sqrt()]).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn zero_network_has_zero_gradient_at_zero_targets() {
        let net = Network::zeros(&[2, 3, 1], None).unwrap();
        let g = backward(&net, &[1.0, 2.0, -1.0, 0.5], &[0.0, 0.0]).unwrap();
        assert!(g.values().all(|v| v == 0.0));
    }

    #[test]
    fn duplicated_batch_gives_same_gradient() {
        let net = Network::init(&[3, 5, 2], None, 3).unwrap();
        let xs = [0.1, -0.4, 2.0, 1.5, 0.3, -0.7];
        let ts = [0.2, 0.1, -0.3, 0.9];
        let g1 = backward(&net, &xs, &ts).unwrap();
        let xs2: Vec<f64> = xs.iter().chain(xs.iter()).copied().collect();
        let ts2: Vec<f64> = ts.iter().chain(ts.iter()).copied().collect();
        let g2 = backward(&net, &xs2, &ts2).unwrap();
        for (a, b) in g1.values().zip(g2.values()) {
            assert!((a - b).abs() <= 1e-15 * a.abs().max(1.0));
        }
    }

    #[test]
    fn params_round_trip() {
        let net = Network::init(&[4, 3, 2], Some(2.0), 1).unwrap();
        let mut other = Network::zeros(&[4, 3, 2], Some(2.0)).unwrap();
        other.set_params(&net.params()).unwrap();
        assert_eq!(net, other);
    }
}
