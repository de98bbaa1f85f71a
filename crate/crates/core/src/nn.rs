//! A small dense feed-forward network: ReLU hidden layers, linear output,
//! mean-squared-error loss and plain stochastic gradient descent.
//!
//! Weights are `f64` and stored row-major (`out × in`). Initialization is
//! uniform in `±sqrt(6 / (fan_in + fan_out))` with zero biases.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NnError {
    #[error("invalid network spec: {0}")]
    Spec(String),
    #[error("shape mismatch: expected {expected} values, got {got}")]
    Shape { expected: usize, got: usize },
    #[error("batch is empty or inputs/targets differ in length ({inputs} vs {targets})")]
    Batch { inputs: usize, targets: usize },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub input_size: usize,
    pub hidden_size: usize,
    /// Number of hidden layers; 0 gives a single affine map.
    pub layers: usize,
    pub output_size: usize,
    pub learning_rate: f64,
}

impl MlpSpec {
    pub fn validate(&self) -> Result<(), NnError> {
        if self.input_size == 0 || self.output_size == 0 {
            return Err(NnError::Spec("input and output sizes must be at least 1".into()));
        }
        if self.layers > 0 && self.hidden_size == 0 {
            return Err(NnError::Spec("hidden size must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(NnError::Spec(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        Ok(())
    }

    /// Layer widths from input to output.
    pub fn widths(&self) -> Vec<usize> {
        let mut w = vec![self.input_size];
        w.extend(std::iter::repeat_n(self.hidden_size, self.layers));
        w.push(self.output_size);
        w
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Dense {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }

    fn random<R: Rng>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        let limit = (6.0 / (inputs + outputs) as f64).sqrt();
        let mut d = Dense::zeros(inputs, outputs);
        for w in &mut d.weights {
            *w = rng.gen_range(-limit..=limit);
        }
        d
    }

    pub fn weight(&self, row: usize, col: usize) -> f64 {
        self.weights[row * self.inputs + col]
    }

    fn apply(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for o in 0..self.outputs {
            let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
            let s: f64 = row.iter().zip(x).map(|(w, v)| w * v).sum();
            out.push(s + self.bias[o]);
        }
    }
}

/// Gradients with the same layout as the network's layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Dense>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    spec: MlpSpec,
    layers: Vec<Dense>,
}

impl Mlp {
    pub fn new(spec: MlpSpec, seed: u64) -> Result<Self, NnError> {
        spec.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = spec.widths();
        let layers = w
            .windows(2)
            .map(|p| Dense::random(p[0], p[1], &mut rng))
            .collect();
        Ok(Mlp { spec, layers })
    }

    /// Builds a network from explicit layers; shapes must chain.
    pub fn from_layers(spec: MlpSpec, layers: Vec<Dense>) -> Result<Self, NnError> {
        spec.validate()?;
        let w = spec.widths();
        if layers.len() != w.len() - 1 {
            return Err(NnError::Spec(format!(
                "expected {} layers, got {}",
                w.len() - 1,
                layers.len()
            )));
        }
        for (l, p) in layers.iter().zip(w.windows(2)) {
            if l.inputs != p[0]
                || l.outputs != p[1]
                || l.weights.len() != p[0] * p[1]
                || l.bias.len() != p[1]
            {
                return Err(NnError::Spec("layer shapes do not chain".into()));
            }
        }
        Ok(Mlp { spec, layers })
    }

    pub fn spec(&self) -> &MlpSpec {
        &self.spec
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense] {
        &mut self.layers
    }

    pub fn set_learning_rate(&mut self, lr: f64) {
        self.spec.learning_rate = lr;
    }

    /// Pre-activations and activations of every layer.
    fn trace(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.to_vec());
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let mut out = Vec::with_capacity(layer.outputs);
            layer.apply(acts.last().unwrap(), &mut out);
            if i != last {
                out.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            acts.push(out);
        }
        acts
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>, NnError> {
        if x.len() != self.spec.input_size {
            return Err(NnError::Shape {
                expected: self.spec.input_size,
                got: x.len(),
            });
        }
        Ok(self.trace(x).pop().unwrap())
    }

    fn check_batch(&self, inputs: &[Vec<f64>], targets: &[Vec<f64>]) -> Result<(), NnError> {
        if inputs.is_empty() || inputs.len() != targets.len() {
            return Err(NnError::Batch {
                inputs: inputs.len(),
                targets: targets.len(),
            });
        }
        for (x, t) in inputs.iter().zip(targets) {
            if x.len() != self.spec.input_size {
                return Err(NnError::Shape {
                    expected: self.spec.input_size,
                    got: x.len(),
                });
            }
            if t.len() != self.spec.output_size {
                return Err(NnError::Shape {
                    expected: self.spec.output_size,
                    got: t.len(),
                });
            }
        }
        Ok(())
    }

    /// Batch loss: mean over samples of the summed squared output error.
    pub fn loss(&self, inputs: &[Vec<f64>], targets: &[Vec<f64>]) -> Result<f64, NnError> {
        self.check_batch(inputs, targets)?;
        let total: f64 = inputs
            .iter()
            .zip(targets)
            .map(|(x, t)| {
                let y = self.trace(x).pop().unwrap();
                y.iter().zip(t).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
            })
            .sum();
        Ok(total / inputs.len() as f64)
    }

    /// Loss and its gradient with respect to every weight and bias.
    pub fn gradients(
        &self,
        inputs: &[Vec<f64>],
        targets: &[Vec<f64>],
    ) -> Result<(f64, Gradients), NnError> {
        self.check_batch(inputs, targets)?;
        let n = inputs.len() as f64;
        let mut grads: Vec<Dense> = self
            .layers
            .iter()
            .map(|l| Dense::zeros(l.inputs, l.outputs))
            .collect();
        let mut loss = 0.0;
        for (x, t) in inputs.iter().zip(targets) {
            let acts = self.trace(x);
            let y = acts.last().unwrap();
            let mut delta: Vec<f64> = y
                .iter()
                .zip(t)
                .map(|(a, b)| {
                    loss += (a - b) * (a - b);
                    2.0 * (a - b) / n
                })
                .collect();
            for li in (0..self.layers.len()).rev() {
                let layer = &self.layers[li];
                let input = &acts[li];
                let g = &mut grads[li];
                for o in 0..layer.outputs {
                    let d = delta[o];
                    if d == 0.0 {
                        continue;
                    }
                    g.bias[o] += d;
                    let row = &mut g.weights[o * layer.inputs..(o + 1) * layer.inputs];
                    for (gw, v) in row.iter_mut().zip(input) {
                        *gw += d * v;
                    }
                }
                if li == 0 {
                    break;
                }
                let mut prev = vec![0.0; layer.inputs];
                for o in 0..layer.outputs {
                    let d = delta[o];
                    if d == 0.0 {
                        continue;
                    }
                    let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                    for (p, w) in prev.iter_mut().zip(row) {
                        *p += d * w;
                    }
                }
                // ReLU derivative at the hidden layer feeding this one.
                for (p, a) in prev.iter_mut().zip(input) {
                    if *a <= 0.0 {
                        *p = 0.0;
                    }
                }
                delta = prev;
            }
        }
        Ok((loss / n, Gradients { layers: grads }))
    }

    pub fn apply_gradients(&mut self, grads: &Gradients, learning_rate: f64) {
        for (l, g) in self.layers.iter_mut().zip(&grads.layers) {
            for (w, d) in l.weights.iter_mut().zip(&g.weights) {
                *w -= learning_rate * d;
            }
            for (b, d) in l.bias.iter_mut().zip(&g.bias) {
                *b -= learning_rate * d;
            }
        }
    }

    /// One SGD step at the configured learning rate; returns the loss before the update.
    pub fn train_batch(&mut self, inputs: &[Vec<f64>], targets: &[Vec<f64>]) -> Result<f64, NnError> {
        let (loss, grads) = self.gradients(inputs, targets)?;
        let lr = self.spec.learning_rate;
        self.apply_gradients(&grads, lr);
        Ok(loss)
    }

    /// Flat view of all parameters, layer by layer, weights then biases.
    pub fn parameters(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.bias).copied())
            .collect()
    }

    pub fn parameter_mut(&mut self, mut index: usize) -> &mut f64 {
        for l in &mut self.layers {
            let nw = l.weights.len();
            if index < nw {
                return &mut l.weights[index];
            }
            index -= nw;
            if index < l.bias.len() {
                return &mut l.bias[index];
            }
            index -= l.bias.len();
        }
        panic!("parameter index out of range");
    }
}

impl Gradients {
    pub fn flatten(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.bias).copied())
            .collect()
    }
}

const CHECKPOINT_MAGIC: &str = "irs-mlp";
const CHECKPOINT_VERSION: u32 = 1;

/// A saved network together with the meaning of its inputs and outputs, so
/// weights can be carried over to a partition whose shape changed.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub net: Mlp,
    pub input_labels: Vec<String>,
    pub output_labels: Vec<String>,
}

impl Checkpoint {
    /// Line-oriented text; floats use the shortest exact representation.
    pub fn to_text(&self) -> String {
        let s = self.net.spec;
        let mut out = String::new();
        let _ = writeln!(out, "{CHECKPOINT_MAGIC} {CHECKPOINT_VERSION}");
        let _ = writeln!(
            out,
            "spec {} {} {} {} {}",
            s.input_size, s.hidden_size, s.layers, s.output_size, s.learning_rate
        );
        let _ = writeln!(out, "inputs {}", self.input_labels.join(" "));
        let _ = writeln!(out, "outputs {}", self.output_labels.join(" "));
        for l in &self.net.layers {
            let _ = writeln!(out, "layer {} {}", l.inputs, l.outputs);
            let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
            let _ = writeln!(out, "w {}", join(&l.weights));
            let _ = writeln!(out, "b {}", join(&l.bias));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, NnError> {
        let bad = |m: &str| NnError::Checkpoint(m.to_string());
        let mut lines = text.lines();
        let mut next = |tag: &str| -> Result<Vec<&str>, NnError> {
            let line = lines.next().ok_or_else(|| bad(&format!("missing `{tag}` line")))?;
            let mut parts = line.split(' ');
            if parts.next() != Some(tag) {
                return Err(bad(&format!("expected `{tag}` line")));
            }
            Ok(parts.filter(|p| !p.is_empty()).collect())
        };
        let header = next(CHECKPOINT_MAGIC)?;
        match header.as_slice() {
            [v] if v.parse::<u32>().ok() == Some(CHECKPOINT_VERSION) => {}
            [v] => return Err(bad(&format!("unsupported version {v}"))),
            _ => return Err(bad("malformed header")),
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad(&format!("bad number `{s}`")));
        let int = |s: &str| s.parse::<usize>().map_err(|_| bad(&format!("bad integer `{s}`")));
        let spec = next("spec")?;
        if spec.len() != 5 {
            return Err(bad("malformed spec line"));
        }
        let spec = MlpSpec {
            input_size: int(spec[0])?,
            hidden_size: int(spec[1])?,
            layers: int(spec[2])?,
            output_size: int(spec[3])?,
            learning_rate: num(spec[4])?,
        };
        let input_labels: Vec<String> = next("inputs")?.into_iter().map(String::from).collect();
        let output_labels: Vec<String> = next("outputs")?.into_iter().map(String::from).collect();
        let mut layers = Vec::new();
        for _ in 0..spec.layers + 1 {
            let dims = next("layer")?;
            if dims.len() != 2 {
                return Err(bad("malformed layer line"));
            }
            let (inputs, outputs) = (int(dims[0])?, int(dims[1])?);
            let weights = next("w")?.into_iter().map(num).collect::<Result<Vec<_>, _>>()?;
            let bias = next("b")?.into_iter().map(num).collect::<Result<Vec<_>, _>>()?;
            layers.push(Dense {
                inputs,
                outputs,
                weights,
                bias,
            });
        }
        let net = Mlp::from_layers(spec, layers).map_err(|e| bad(&e.to_string()))?;
        if input_labels.len() != spec.input_size || output_labels.len() != spec.output_size {
            return Err(bad("label count does not match the network shape"));
        }
        Ok(Checkpoint {
            net,
            input_labels,
            output_labels,
        })
    }

    /// Builds a network for a new input/output layout. Inputs and outputs are
    /// matched by label and their weights copied; hidden units are matched by
    /// position. Everything else is freshly initialized from `seed`.
    pub fn remap(
        &self,
        input_labels: &[String],
        output_labels: &[String],
        seed: u64,
    ) -> Result<Mlp, NnError> {
        let old = &self.net;
        let spec = MlpSpec {
            input_size: input_labels.len(),
            output_size: output_labels.len(),
            ..old.spec
        };
        if input_labels == self.input_labels.as_slice() && output_labels == self.output_labels.as_slice() {
            return Ok(old.clone());
        }
        let mut net = Mlp::new(spec, seed)?;
        let find = |labels: &[String], l: &String| labels.iter().position(|x| x == l);
        let in_map: Vec<Option<usize>> = input_labels.iter().map(|l| find(&self.input_labels, l)).collect();
        let out_map: Vec<Option<usize>> = output_labels.iter().map(|l| find(&self.output_labels, l)).collect();
        let last = net.layers.len() - 1;
        for (li, (new, prev)) in net.layers.iter_mut().zip(&old.layers).enumerate() {
            let col = |c: usize| -> Option<usize> {
                if li == 0 {
                    in_map[c]
                } else {
                    (c < prev.inputs).then_some(c)
                }
            };
            let row = |r: usize| -> Option<usize> {
                if li == last {
                    out_map[r]
                } else {
                    (r < prev.outputs).then_some(r)
                }
            };
            for r in 0..new.outputs {
                let Some(pr) = row(r) else { continue };
                new.bias[r] = prev.bias[pr];
                for c in 0..new.inputs {
                    if let Some(pc) = col(c) {
                        new.weights[r * new.inputs + c] = prev.weights[pr * prev.inputs + pc];
                    }
                }
            }
        }
        Ok(net)
    }
}
