//! Dense feedforward networks with exact reverse-mode gradients.
//!
//! Each layer computes `y = activation(W x + b)` with `W` stored row-major
//! with shape `(output_width, input_width)`. Everything is `f64`.
//!
//! Training uses plain mini-batch SGD. The descent convention is used
//! throughout: `sgd_step` subtracts `lr * grad`. Callers that want to ascend
//! negate the upstream vector they pass to [`Mlp::backward`].

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{GaacError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Activation {
    Linear,
    Tanh,
    /// ELU with alpha fixed to 1.
    Elu,
    Softplus,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Linear => z,
            Activation::Tanh => z.tanh(),
            Activation::Elu => {
                if z > 0.0 {
                    z
                } else {
                    z.exp_m1()
                }
            }
            Activation::Softplus => softplus(z),
        }
    }

    /// Derivative expressed through the pre-activation `z` and output `y`.
    #[inline]
    pub fn derivative(self, z: f64, y: f64) -> f64 {
        match self {
            Activation::Linear => 1.0,
            Activation::Tanh => 1.0 - y * y,
            Activation::Elu => {
                if z > 0.0 {
                    1.0
                } else {
                    y + 1.0
                }
            }
            Activation::Softplus => sigmoid(z),
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Activation::Linear => "linear",
            Activation::Tanh => "tanh",
            Activation::Elu => "elu",
            Activation::Softplus => "softplus",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "linear" => Some(Activation::Linear),
            "tanh" => Some(Activation::Tanh),
            "elu" => Some(Activation::Elu),
            "softplus" => Some(Activation::Softplus),
            _ => None,
        }
    }
}

/// Numerically stable `ln(1 + e^z)`.
#[inline]
pub fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerSpec {
    pub input_width: usize,
    pub output_width: usize,
    pub activation: Activation,
}

impl LayerSpec {
    pub fn new(input_width: usize, output_width: usize, activation: Activation) -> Self {
        Self {
            input_width,
            output_width,
            activation,
        }
    }

    /// Builds `[input -> h -> h ... -> output]` with `hidden_activation` on
    /// every hidden layer and `output_activation` on the last.
    pub fn chain(
        input: usize,
        hidden: &[usize],
        output: usize,
        hidden_activation: Activation,
        output_activation: Activation,
    ) -> Vec<LayerSpec> {
        let mut widths = Vec::with_capacity(hidden.len() + 2);
        widths.push(input);
        widths.extend_from_slice(hidden);
        widths.push(output);
        let last = widths.len() - 2;
        widths
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let act = if i == last {
                    output_activation
                } else {
                    hidden_activation
                };
                LayerSpec::new(w[0], w[1], act)
            })
            .collect()
    }
}

fn validate_spec(spec: &[LayerSpec]) -> Result<()> {
    if spec.is_empty() {
        return Err(GaacError::Empty("layer spec"));
    }
    for (i, l) in spec.iter().enumerate() {
        if l.input_width == 0 || l.output_width == 0 {
            return Err(GaacError::Shape(format!("layer {i} has a zero width")));
        }
    }
    for (i, pair) in spec.windows(2).enumerate() {
        if pair[0].output_width != pair[1].input_width {
            return Err(GaacError::Shape(format!(
                "layer {} outputs {} but layer {} expects {}",
                i,
                pair[0].output_width,
                i + 1,
                pair[1].input_width
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    spec: LayerSpec,
    /// Row-major, `output_width x input_width`.
    weights: Vec<f64>,
    biases: Vec<f64>,
}

impl Layer {
    pub fn spec(&self) -> LayerSpec {
        self.spec
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn biases_mut(&mut self) -> &mut [f64] {
        &mut self.biases
    }

    #[inline]
    fn affine(&self, x: &[f64], z: &mut [f64]) {
        let n_in = self.spec.input_width;
        for (o, zo) in z.iter_mut().enumerate() {
            let row = &self.weights[o * n_in..(o + 1) * n_in];
            let mut acc = self.biases[o];
            for (w, xi) in row.iter().zip(x) {
                acc += w * xi;
            }
            *zo = acc;
        }
    }
}

/// Per-layer gradients with the same shapes as the owning [`Mlp`].
#[derive(Debug, Clone, PartialEq)]
pub struct GradientBundle {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl GradientBundle {
    pub fn zeros_like(net: &Mlp) -> Self {
        Self {
            weights: net.layers.iter().map(|l| vec![0.0; l.weights.len()]).collect(),
            biases: net.layers.iter().map(|l| vec![0.0; l.biases.len()]).collect(),
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for v in self.weights.iter_mut().chain(self.biases.iter_mut()) {
            v.iter_mut().for_each(|g| *g *= factor);
        }
    }

    pub fn fill_zero(&mut self) {
        for v in self.weights.iter_mut().chain(self.biases.iter_mut()) {
            v.iter_mut().for_each(|g| *g = 0.0);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.weights
            .iter()
            .chain(self.biases.iter())
            .all(|v| v.iter().all(|g| g.is_finite()))
    }

    pub fn max_abs(&self) -> f64 {
        self.weights
            .iter()
            .chain(self.biases.iter())
            .flat_map(|v| v.iter())
            .fold(0.0f64, |m, g| m.max(g.abs()))
    }

    fn congruent_with(&self, net: &Mlp) -> bool {
        self.weights.len() == net.layers.len()
            && self.biases.len() == net.layers.len()
            && net.layers.iter().enumerate().all(|(i, l)| {
                self.weights[i].len() == l.weights.len() && self.biases[i].len() == l.biases.len()
            })
    }
}

/// Cached pre-activations and outputs of one forward pass.
#[derive(Debug, Clone)]
pub struct Trace {
    input: Vec<f64>,
    pre: Vec<Vec<f64>>,
    post: Vec<Vec<f64>>,
}

impl Trace {
    pub fn output(&self) -> &[f64] {
        self.post.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    layers: Vec<Layer>,
}

impl Mlp {
    /// Xavier/Glorot normal weights, zero biases.
    pub fn init_xavier(spec: &[LayerSpec], seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::init_xavier_with_rng(spec, &mut rng)
    }

    pub fn init_xavier_with_rng<R: Rng + ?Sized>(spec: &[LayerSpec], rng: &mut R) -> Result<Self> {
        validate_spec(spec)?;
        let layers = spec
            .iter()
            .map(|&s| {
                let std = (2.0 / (s.input_width + s.output_width) as f64).sqrt();
                let normal = Normal::new(0.0, std).expect("positive std");
                let weights = (0..s.input_width * s.output_width)
                    .map(|_| normal.sample(rng))
                    .collect();
                Layer {
                    spec: s,
                    weights,
                    biases: vec![0.0; s.output_width],
                }
            })
            .collect();
        Ok(Self { layers })
    }

    pub fn zeros(spec: &[LayerSpec]) -> Result<Self> {
        validate_spec(spec)?;
        let layers = spec
            .iter()
            .map(|&s| Layer {
                spec: s,
                weights: vec![0.0; s.input_width * s.output_width],
                biases: vec![0.0; s.output_width],
            })
            .collect();
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn spec(&self) -> Vec<LayerSpec> {
        self.layers.iter().map(|l| l.spec).collect()
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].spec.input_width
    }

    pub fn output_width(&self) -> usize {
        self.layers[self.layers.len() - 1].spec.output_width
    }

    pub fn num_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.biases.len())
            .sum()
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.biases).all(|v| v.is_finite()))
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_width() {
            return Err(GaacError::Shape(format!(
                "input has {} entries, network expects {}",
                x.len(),
                self.input_width()
            )));
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let mut cur = x.to_vec();
        for layer in &self.layers {
            let mut z = vec![0.0; layer.spec.output_width];
            layer.affine(&cur, &mut z);
            let act = layer.spec.activation;
            z.iter_mut().for_each(|v| *v = act.apply(*v));
            cur = z;
        }
        Ok(cur)
    }

    pub fn forward_trace(&self, x: &[f64]) -> Result<Trace> {
        self.check_input(x)?;
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut post: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let mut z = vec![0.0; layer.spec.output_width];
            layer.affine(post.last().map(Vec::as_slice).unwrap_or(x), &mut z);
            let act = layer.spec.activation;
            let y = z.iter().map(|&v| act.apply(v)).collect();
            pre.push(z);
            post.push(y);
        }
        Ok(Trace {
            input: x.to_vec(),
            pre,
            post,
        })
    }

    /// Gradient of `upstream · net(x)` with respect to every weight and bias.
    pub fn backward(&self, x: &[f64], upstream: &[f64]) -> Result<GradientBundle> {
        let trace = self.forward_trace(x)?;
        let mut grads = GradientBundle::zeros_like(self);
        self.accumulate_backward(&trace, upstream, &mut grads)?;
        Ok(grads)
    }

    /// Adds the gradient of `upstream · output` for a cached pass into `grads`.
    pub fn accumulate_backward(
        &self,
        trace: &Trace,
        upstream: &[f64],
        grads: &mut GradientBundle,
    ) -> Result<()> {
        if upstream.len() != self.output_width() {
            return Err(GaacError::Shape(format!(
                "upstream has {} entries, network outputs {}",
                upstream.len(),
                self.output_width()
            )));
        }
        if !grads.congruent_with(self) {
            return Err(GaacError::Shape("gradient bundle does not match network".into()));
        }
        let mut delta: Vec<f64> = upstream.to_vec();
        for li in (0..self.layers.len()).rev() {
            let layer = &self.layers[li];
            let act = layer.spec.activation;
            for (d, (&z, &y)) in delta.iter_mut().zip(trace.pre[li].iter().zip(&trace.post[li])) {
                *d *= act.derivative(z, y);
            }
            let input: &[f64] = if li == 0 {
                &trace.input
            } else {
                &trace.post[li - 1]
            };
            let n_in = layer.spec.input_width;
            let gw = &mut grads.weights[li];
            let gb = &mut grads.biases[li];
            for (o, &d) in delta.iter().enumerate() {
                gb[o] += d;
                if d != 0.0 {
                    let row = &mut gw[o * n_in..(o + 1) * n_in];
                    for (g, xi) in row.iter_mut().zip(input) {
                        *g += d * xi;
                    }
                }
            }
            if li > 0 {
                let mut next = vec![0.0; n_in];
                for (o, &d) in delta.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    let row = &layer.weights[o * n_in..(o + 1) * n_in];
                    for (n, w) in next.iter_mut().zip(row) {
                        *n += d * w;
                    }
                }
                delta = next;
            }
        }
        Ok(())
    }

    /// `weights <- weights - lr * grads`. Nothing is modified on error.
    pub fn sgd_step(&mut self, grads: &GradientBundle, lr: f64) -> Result<()> {
        if !grads.congruent_with(self) {
            return Err(GaacError::Shape("gradient bundle does not match network".into()));
        }
        if !lr.is_finite() {
            return Err(GaacError::NonFinite("learning rate"));
        }
        if !grads.is_finite() {
            return Err(GaacError::NonFinite("gradients"));
        }
        let overflow = self.layers.iter().enumerate().any(|(i, l)| {
            l.weights
                .iter()
                .zip(&grads.weights[i])
                .chain(l.biases.iter().zip(&grads.biases[i]))
                .any(|(w, g)| !(w - lr * g).is_finite())
        });
        if overflow {
            return Err(GaacError::NonFinite("updated weights"));
        }
        for (i, l) in self.layers.iter_mut().enumerate() {
            for (w, g) in l.weights.iter_mut().zip(&grads.weights[i]) {
                *w -= lr * g;
            }
            for (b, g) in l.biases.iter_mut().zip(&grads.biases[i]) {
                *b -= lr * g;
            }
        }
        Ok(())
    }

    /// Line-oriented text dump; [`Mlp::from_text`] restores it bit-exact.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "mlp {}", self.layers.len()).unwrap();
        for l in &self.layers {
            writeln!(
                out,
                "layer {} {} {}",
                l.spec.input_width,
                l.spec.output_width,
                l.spec.activation.tag()
            )
            .unwrap();
            out.push('w');
            for w in &l.weights {
                write!(out, " {w:?}").unwrap();
            }
            out.push('\n');
            out.push('b');
            for b in &l.biases {
                write!(out, " {b:?}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let parse_err = |line: usize, msg: &str| GaacError::Parse {
            line: line + 1,
            msg: msg.to_string(),
        };
        let (ln, header) = lines.next().ok_or(GaacError::Empty("network file"))?;
        let count: usize = header
            .strip_prefix("mlp ")
            .and_then(|c| c.trim().parse().ok())
            .ok_or_else(|| parse_err(ln, "expected `mlp <layers>`"))?;
        let mut layers = Vec::with_capacity(count);
        for _ in 0..count {
            let (ln, head) = lines.next().ok_or_else(|| parse_err(ln, "truncated network"))?;
            let parts: Vec<&str> = head.split_whitespace().collect();
            if parts.len() != 4 || parts[0] != "layer" {
                return Err(parse_err(ln, "expected `layer <in> <out> <activation>`"));
            }
            let input_width: usize = parts[1].parse().map_err(|_| parse_err(ln, "bad width"))?;
            let output_width: usize = parts[2].parse().map_err(|_| parse_err(ln, "bad width"))?;
            let activation =
                Activation::from_tag(parts[3]).ok_or_else(|| parse_err(ln, "unknown activation"))?;
            let mut read_row = |prefix: char, expected: usize| -> Result<Vec<f64>> {
                let (ln, row) = lines.next().ok_or_else(|| parse_err(ln, "truncated layer"))?;
                let mut it = row.split_whitespace();
                if it.next() != Some(&prefix.to_string()[..]) {
                    return Err(parse_err(ln, "unexpected row tag"));
                }
                let vals = it
                    .map(|t| t.parse::<f64>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|_| parse_err(ln, "bad number"))?;
                if vals.len() != expected {
                    return Err(parse_err(ln, "wrong number of entries"));
                }
                if vals.iter().any(|v| !v.is_finite()) {
                    return Err(GaacError::NonFinite("network file"));
                }
                Ok(vals)
            };
            let weights = read_row('w', input_width * output_width)?;
            let biases = read_row('b', output_width)?;
            layers.push(Layer {
                spec: LayerSpec::new(input_width, output_width, activation),
                weights,
                biases,
            });
        }
        let spec: Vec<LayerSpec> = layers.iter().map(|l| l.spec).collect();
        validate_spec(&spec)?;
        Ok(Self { layers })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitConfig {
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl FitConfig {
    pub fn new(lr: f64, epochs: usize, seed: u64) -> Self {
        Self {
            lr,
            epochs,
            batch_size: 64,
            seed,
        }
    }
}

/// Mini-batch SGD against an arbitrary per-sample loss.
///
/// `loss(output, target, d_output)` returns the sample loss and writes its
/// gradient with respect to the network output into `d_output`. The returned
/// history holds the mean sample loss of every epoch, measured during the pass.
pub fn fit_with_loss<F>(
    net: &mut Mlp,
    inputs: &[Vec<f64>],
    targets: &[Vec<f64>],
    cfg: &FitConfig,
    mut loss: F,
) -> Result<Vec<f64>>
where
    F: FnMut(&[f64], &[f64], &mut [f64]) -> f64,
{
    if inputs.is_empty() {
        return Err(GaacError::Empty("training set"));
    }
    if inputs.len() != targets.len() {
        return Err(GaacError::Shape(format!(
            "{} inputs but {} targets",
            inputs.len(),
            targets.len()
        )));
    }
    for x in inputs {
        net.check_input(x)?;
    }
    if cfg.batch_size == 0 {
        return Err(GaacError::InvalidArgument("batch size must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..inputs.len()).collect();
    let mut grads = GradientBundle::zeros_like(net);
    let mut d_out = vec![0.0; net.output_width()];
    let mut history = Vec::with_capacity(cfg.epochs);
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            grads.fill_zero();
            for &i in batch {
                let trace = net.forward_trace(&inputs[i])?;
                d_out.iter_mut().for_each(|d| *d = 0.0);
                total += loss(trace.output(), &targets[i], &mut d_out);
                net.accumulate_backward(&trace, &d_out, &mut grads)?;
            }
            grads.scale(1.0 / batch.len() as f64);
            net.sgd_step(&grads, cfg.lr)?;
        }
        let mean = total / inputs.len() as f64;
        if !mean.is_finite() {
            return Err(GaacError::NonFinite("training loss"));
        }
        history.push(mean);
    }
    Ok(history)
}

/// Per-sample mean squared error over output dimensions.
pub fn mse_loss(output: &[f64], target: &[f64], d_output: &mut [f64]) -> f64 {
    let k = output.len() as f64;
    let mut loss = 0.0;
    for ((d, o), t) in d_output.iter_mut().zip(output).zip(target) {
        let e = o - t;
        loss += e * e;
        *d = 2.0 * e / k;
    }
    loss / k
}

/// Fits `net` to `targets` under MSE; returns the per-epoch loss history.
pub fn mse_fit(
    net: &mut Mlp,
    inputs: &[Vec<f64>],
    targets: &[Vec<f64>],
    cfg: &FitConfig,
) -> Result<Vec<f64>> {
    if let Some(t) = targets.iter().find(|t| t.len() != net.output_width()) {
        return Err(GaacError::Shape(format!(
            "target has {} entries, network outputs {}",
            t.len(),
            net.output_width()
        )));
    }
    fit_with_loss(net, inputs, targets, cfg, mse_loss)
}

/// Mean MSE of `net` over a dataset without touching the weights.
pub fn mse_eval(net: &Mlp, inputs: &[Vec<f64>], targets: &[Vec<f64>]) -> Result<f64> {
    if inputs.is_empty() {
        return Err(GaacError::Empty("evaluation set"));
    }
    let mut scratch = vec![0.0; net.output_width()];
    let mut total = 0.0;
    for (x, t) in inputs.iter().zip(targets) {
        let y = net.forward(x)?;
        total += mse_loss(&y, t, &mut scratch);
    }
    Ok(total / inputs.len() as f64)
}
