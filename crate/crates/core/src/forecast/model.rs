use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::ParamVector;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Tanh,
    Relu,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Relu => z.max(0.0),
        }
    }

    /// Derivative expressed through the activation output `h`.
    fn derivative(self, z: f64, h: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - h * h,
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ModelKind {
    Linear,
    Feedforward { hidden: usize, activation: Activation },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub seed: u64,
}

impl Default for ModelSpec {
    fn default() -> Self {
        Self {
            kind: ModelKind::Feedforward {
                hidden: 16,
                activation: Activation::Tanh,
            },
            seed: 0,
        }
    }
}

/// A model with fixed input and output sizes.
///
/// Predictions are `scale * z + offset`, where `z` is the raw network output;
/// the affine map is fixed and not trained.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub spec: ModelSpec,
    pub inputs: usize,
    pub outputs: usize,
    pub scale: f64,
    pub offset: f64,
}

impl Model {
    pub fn new(spec: ModelSpec, inputs: usize, outputs: usize) -> Result<Self> {
        if inputs == 0 || outputs == 0 {
            return Err(Error::contract("model needs at least one input and one output"));
        }
        if let ModelKind::Feedforward { hidden: 0, .. } = spec.kind {
            return Err(Error::contract("hidden width must be positive"));
        }
        Ok(Self {
            spec,
            inputs,
            outputs,
            scale: 1.0,
            offset: 0.0,
        })
    }

    pub fn with_output_affine(mut self, scale: f64, offset: f64) -> Self {
        self.scale = scale;
        self.offset = offset;
        self
    }

    pub fn num_params(&self) -> usize {
        let (d, g) = (self.inputs, self.outputs);
        match self.spec.kind {
            ModelKind::Linear => g * d + g,
            ModelKind::Feedforward { hidden: h, .. } => h * d + h + g * h + g,
        }
    }

    /// Hidden weights uniform with fan-in scaling; output layer and biases
    /// zero, so a fresh model predicts `offset` everywhere.
    pub fn init(&self, seed: u64) -> ParamVector {
        let mut rng = ChaCha8Rng::seed_from_u64(self.spec.seed ^ seed.rotate_left(17));
        let mut p = Vec::with_capacity(self.num_params());
        match self.spec.kind {
            ModelKind::Linear => p.resize(self.num_params(), 0.0),
            ModelKind::Feedforward { hidden, .. } => {
                let r = 1.0 / (self.inputs as f64).sqrt();
                p.extend((0..hidden * self.inputs).map(|_| rng.gen_range(-r..r)));
                p.resize(self.num_params(), 0.0);
            }
        }
        ParamVector::new(p).expect("finite by construction")
    }

    fn check(&self, params: &[f64], x: &[f64]) -> Result<usize> {
        if params.len() != self.num_params() {
            return Err(Error::contract(format!(
                "expected {} parameters, got {}",
                self.num_params(),
                params.len()
            )));
        }
        if x.len() % self.inputs != 0 {
            return Err(Error::contract("input length is not a multiple of the input width"));
        }
        Ok(x.len() / self.inputs)
    }

    /// Predictions for `n = x.len() / inputs` rows, row-major `n x outputs`.
    pub fn forward(&self, params: &[f64], x: &[f64]) -> Result<Vec<f64>> {
        let n = self.check(params, x)?;
        let (d, g) = (self.inputs, self.outputs);
        let mut out = vec![0.0; n * g];
        match self.spec.kind {
            ModelKind::Linear => {
                let (w, b) = params.split_at(g * d);
                for (xi, oi) in x.chunks(d).zip(out.chunks_mut(g)) {
                    dense(w, b, xi, oi);
                }
            }
            ModelKind::Feedforward { hidden, activation } => {
                let (w1, rest) = params.split_at(hidden * d);
                let (b1, rest) = rest.split_at(hidden);
                let (w2, b2) = rest.split_at(g * hidden);
                let mut h = vec![0.0; hidden];
                for (xi, oi) in x.chunks(d).zip(out.chunks_mut(g)) {
                    dense(w1, b1, xi, &mut h);
                    h.iter_mut().for_each(|v| *v = activation.apply(*v));
                    dense(w2, b2, &h, oi);
                }
            }
        }
        for v in &mut out {
            *v = self.scale * *v + self.offset;
        }
        Ok(out)
    }

    /// Gradient of `sum_i dy_i * yhat_i` with respect to the parameters.
    pub fn backward(&self, params: &[f64], x: &[f64], dy: &[f64]) -> Result<Vec<f64>> {
        let n = self.check(params, x)?;
        let (d, g) = (self.inputs, self.outputs);
        if dy.len() != n * g {
            return Err(Error::contract("output gradient has the wrong length"));
        }
        let mut grad = vec![0.0; params.len()];
        let mut dz = vec![0.0; g];
        match self.spec.kind {
            ModelKind::Linear => {
                let (gw, gb) = grad.split_at_mut(g * d);
                for (xi, dyi) in x.chunks(d).zip(dy.chunks(g)) {
                    dz.iter_mut().zip(dyi).for_each(|(z, y)| *z = self.scale * y);
                    dense_backward(gw, gb, xi, &dz);
                }
            }
            ModelKind::Feedforward { hidden, activation } => {
                let (w1, rest) = params.split_at(hidden * d);
                let (b1, rest) = rest.split_at(hidden);
                let (w2, _) = rest.split_at(g * hidden);
                let (gw1, grest) = grad.split_at_mut(hidden * d);
                let (gb1, grest) = grest.split_at_mut(hidden);
                let (gw2, gb2) = grest.split_at_mut(g * hidden);
                let mut z1 = vec![0.0; hidden];
                let mut h = vec![0.0; hidden];
                let mut dh = vec![0.0; hidden];
                for (xi, dyi) in x.chunks(d).zip(dy.chunks(g)) {
                    dense(w1, b1, xi, &mut z1);
                    for (hv, &zv) in h.iter_mut().zip(&z1) {
                        *hv = activation.apply(zv);
                    }
                    dz.iter_mut().zip(dyi).for_each(|(z, y)| *z = self.scale * y);
                    dense_backward(gw2, gb2, &h, &dz);
                    for (j, dhj) in dh.iter_mut().enumerate() {
                        let back: f64 = (0..g).map(|o| w2[o * hidden + j] * dz[o]).sum();
                        *dhj = back * activation.derivative(z1[j], h[j]);
                    }
                    dense_backward(gw1, gb1, xi, &dh);
                }
            }
        }
        Ok(grad)
    }
}

/// `out = W x + b` with `W` row-major `out.len() x x.len()`.
fn dense(w: &[f64], b: &[f64], x: &[f64], out: &mut [f64]) {
    for (o, (row, bias)) in out.iter_mut().zip(w.chunks(x.len()).zip(b)) {
        *o = bias + row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
    }
}

fn dense_backward(gw: &mut [f64], gb: &mut [f64], x: &[f64], dz: &[f64]) {
    for ((row, gbias), &dzo) in gw.chunks_mut(x.len()).zip(gb.iter_mut()).zip(dz) {
        *gbias += dzo;
        for (gwv, xv) in row.iter_mut().zip(x) {
            *gwv += dzo * xv;
        }
    }
}
