//! Dense feed-forward network with a softmax output and cross-entropy loss.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    Logistic,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Logistic => 1.0 / (1.0 + (-z).exp()),
        }
    }

    /// Derivative expressed through the activation output `a`.
    fn derivative(self, a: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - a * a,
            Activation::Logistic => a * (1.0 - a),
        }
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            Activation::Tanh => 0,
            Activation::Logistic => 1,
        }
    }

    pub(crate) fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Activation::Tanh),
            1 => Some(Activation::Logistic),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    /// Row-major `outputs x inputs`.
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Layer {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Layer {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            biases: vec![0.0; outputs],
        }
    }

    fn forward(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.biases.iter().enumerate().map(|(o, b)| {
            let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
            b + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
        }));
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub layers: Vec<Layer>,
    pub activation: Activation,
}

/// Gradient of the mean loss, laid out like [`Network::layers`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub layers: Vec<Layer>,
}

impl Gradient {
    pub fn flatten(&self) -> Vec<f64> {
        flatten(&self.layers)
    }
}

fn flatten(layers: &[Layer]) -> Vec<f64> {
    layers
        .iter()
        .flat_map(|l| l.weights.iter().chain(&l.biases).copied())
        .collect()
}

impl Network {
    /// Glorot-uniform weights in `±sqrt(6 / (fan_in + fan_out))`, zero biases.
    pub fn new(topology: &[usize], activation: Activation, rng: &mut ChaCha8Rng) -> Self {
        let mut net = Self::zeros(topology, activation);
        for layer in &mut net.layers {
            let limit = (6.0 / (layer.inputs + layer.outputs) as f64).sqrt();
            for w in &mut layer.weights {
                *w = rng.random_range(-limit..limit);
            }
        }
        net
    }

    pub fn zeros(topology: &[usize], activation: Activation) -> Self {
        assert!(topology.len() >= 2, "topology needs input and output sizes");
        Network {
            layers: topology
                .windows(2)
                .map(|w| Layer::zeros(w[0], w[1]))
                .collect(),
            activation,
        }
    }

    pub fn topology(&self) -> Vec<usize> {
        let mut t = vec![self.input_dim()];
        t.extend(self.layers.iter().map(|l| l.outputs));
        t
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.outputs)
    }

    /// Softmax class probabilities.
    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        let mut acts = Vec::new();
        self.forward_all(x, &mut acts);
        acts.pop().unwrap()
    }

    /// Per-layer outputs; the last entry holds the softmax probabilities, the
    /// others the hidden activations.
    fn forward_all(&self, x: &[f64], acts: &mut Vec<Vec<f64>>) {
        acts.clear();
        let last = self.layers.len() - 1;
        let mut input: &[f64] = x;
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = Vec::with_capacity(layer.outputs);
            layer.forward(input, &mut z);
            if i == last {
                softmax_in_place(&mut z);
            } else {
                z.iter_mut().for_each(|v| *v = self.activation.apply(*v));
            }
            acts.push(z);
            input = acts.last().unwrap();
        }
    }

    /// Mean cross-entropy and its gradient over a batch of rows (`xs` is
    /// row-major with `input_dim` columns).
    pub fn loss_and_gradient(&self, xs: &[f64], ys: &[usize]) -> (f64, Gradient) {
        let dim = self.input_dim();
        assert_eq!(xs.len(), ys.len() * dim, "batch shape");
        let mut grad = Gradient {
            layers: self
                .layers
                .iter()
                .map(|l| Layer::zeros(l.inputs, l.outputs))
                .collect(),
        };
        let mut loss = 0.0;
        let mut acts = Vec::new();
        for (x, &y) in xs.chunks_exact(dim).zip(ys) {
            loss += self.accumulate(x, y, &mut acts, &mut grad);
        }
        let scale = 1.0 / ys.len().max(1) as f64;
        for g in &mut grad.layers {
            g.weights.iter_mut().for_each(|w| *w *= scale);
            g.biases.iter_mut().for_each(|b| *b *= scale);
        }
        (loss * scale, grad)
    }

    /// Backpropagates one example into `grad`, returning its loss.
    fn accumulate(&self, x: &[f64], y: usize, acts: &mut Vec<Vec<f64>>, grad: &mut Gradient) -> f64 {
        self.forward_all(x, acts);
        let probs = acts.last().unwrap();
        let loss = -probs[y].ln();

        let mut delta: Vec<f64> = probs.clone();
        delta[y] -= 1.0;
        for l in (0..self.layers.len()).rev() {
            let input: &[f64] = if l == 0 { x } else { &acts[l - 1] };
            let layer = &self.layers[l];
            let g = &mut grad.layers[l];
            for (o, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                g.biases[o] += d;
                let row = &mut g.weights[o * layer.inputs..(o + 1) * layer.inputs];
                row.iter_mut().zip(input).for_each(|(w, v)| *w += d * v);
            }
            if l > 0 {
                let prev = &acts[l - 1];
                let mut next = vec![0.0; layer.inputs];
                for (o, &d) in delta.iter().enumerate() {
                    let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                    next.iter_mut().zip(row).for_each(|(n, w)| *n += d * w);
                }
                for (n, &a) in next.iter_mut().zip(prev) {
                    *n *= self.activation.derivative(a);
                }
                delta = next;
            }
        }
        loss
    }

    /// Plain gradient step.
    pub fn step(&mut self, grad: &Gradient, learning_rate: f64) {
        for (layer, g) in self.layers.iter_mut().zip(&grad.layers) {
            layer
                .weights
                .iter_mut()
                .zip(&g.weights)
                .for_each(|(w, d)| *w -= learning_rate * d);
            layer
                .biases
                .iter_mut()
                .zip(&g.biases)
                .for_each(|(b, d)| *b -= learning_rate * d);
        }
    }

    pub fn params(&self) -> Vec<f64> {
        flatten(&self.layers)
    }

    pub fn set_params(&mut self, params: &[f64]) {
        let mut it = params.iter();
        for layer in &mut self.layers {
            for w in layer.weights.iter_mut().chain(layer.biases.iter_mut()) {
                *w = *it.next().expect("parameter vector too short");
            }
        }
        assert!(it.next().is_none(), "parameter vector too long");
    }
}

pub(crate) fn softmax_in_place(z: &mut [f64]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    z.iter_mut().for_each(|v| *v /= sum);
}
