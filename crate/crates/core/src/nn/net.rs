use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::dist::softmax;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Head {
    SoftmaxPolicy,
    ScalarValue,
    VectorValue,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetSpec {
    pub input_dim: usize,
    pub hidden: Vec<usize>,
    pub output_dim: usize,
    pub head: Head,
}

pub const DEFAULT_HIDDEN: [usize; 2] = [64, 64];

impl NetSpec {
    pub fn policy(input_dim: usize) -> Self {
        Self {
            input_dim,
            hidden: DEFAULT_HIDDEN.to_vec(),
            output_dim: 3,
            head: Head::SoftmaxPolicy,
        }
    }

    pub fn value(input_dim: usize) -> Self {
        Self {
            input_dim,
            hidden: DEFAULT_HIDDEN.to_vec(),
            output_dim: 1,
            head: Head::ScalarValue,
        }
    }

    pub fn vector(input_dim: usize, output_dim: usize) -> Self {
        Self {
            input_dim,
            hidden: DEFAULT_HIDDEN.to_vec(),
            output_dim,
            head: Head::VectorValue,
        }
    }

    pub fn with_hidden(mut self, hidden: Vec<usize>) -> Self {
        self.hidden = hidden;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.output_dim == 0 || self.hidden.contains(&0) {
            return Err(Error::InvalidConfig(format!("layer widths must be at least 1: {self:?}")));
        }
        match self.head {
            Head::SoftmaxPolicy if self.output_dim != 3 => Err(Error::InvalidConfig(format!(
                "policy head needs 3 outputs, got {}",
                self.output_dim
            ))),
            Head::ScalarValue if self.output_dim != 1 => Err(Error::InvalidConfig(format!(
                "scalar value head needs 1 output, got {}",
                self.output_dim
            ))),
            _ => Ok(()),
        }
    }

    /// `(n_in, n_out)` per affine layer.
    pub fn layer_dims(&self) -> Vec<(usize, usize)> {
        let mut widths = vec![self.input_dim];
        widths.extend(&self.hidden);
        widths.push(self.output_dim);
        widths.windows(2).map(|w| (w[0], w[1])).collect()
    }

    pub fn param_count(&self) -> usize {
        self.layer_dims().iter().map(|(i, o)| i * o + o).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Layer {
    n_in: usize,
    n_out: usize,
    /// Row-major `[n_out][n_in]` weights start here, followed by `n_out` biases.
    offset: usize,
}

impl Layer {
    fn bias_offset(&self) -> usize {
        self.offset + self.n_in * self.n_out
    }
}

/// Tanh multilayer perceptron over a flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseNet {
    spec: NetSpec,
    params: Vec<f64>,
    layers: Vec<Layer>,
}

/// Activations recorded by [`DenseNet::forward`] for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// Input followed by every hidden activation.
    acts: Vec<Vec<f64>>,
    /// Final affine output (logits for the policy head).
    raw: Vec<f64>,
    output: Vec<f64>,
}

impl ForwardCache {
    pub fn output(&self) -> &[f64] {
        &self.output
    }

    /// Pre-softmax logits for policy heads; equal to the output otherwise.
    pub fn raw(&self) -> &[f64] {
        &self.raw
    }
}

fn layout(spec: &NetSpec) -> Vec<Layer> {
    let mut offset = 0;
    spec.layer_dims()
        .into_iter()
        .map(|(n_in, n_out)| {
            let l = Layer { n_in, n_out, offset };
            offset += n_in * n_out + n_out;
            l
        })
        .collect()
}

/// Scaled random matrix with orthonormal rows (or columns, if taller than wide).
fn orthogonal<R: Rng + ?Sized>(rng: &mut R, n_out: usize, n_in: usize, gain: f64) -> Vec<f64> {
    let transpose = n_out > n_in;
    let (r, c) = if transpose { (n_in, n_out) } else { (n_out, n_in) };
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(r);
    while q.len() < r {
        let mut v: Vec<f64> = (0..c).map(|_| rng.sample(StandardNormal)).collect();
        for u in &q {
            let d: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(u).for_each(|(a, b)| *a -= d * b);
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-8 {
            v.iter_mut().for_each(|a| *a /= norm);
            q.push(v);
        }
    }
    let mut w = vec![0.0; n_out * n_in];
    for i in 0..n_out {
        for j in 0..n_in {
            w[i * n_in + j] = gain * if transpose { q[j][i] } else { q[i][j] };
        }
    }
    w
}

impl DenseNet {
    /// Orthogonal init: gain √2 on hidden layers, 0.01 on a policy output
    /// layer, 1 on value outputs; zero biases.
    pub fn new<R: Rng + ?Sized>(spec: NetSpec, rng: &mut R) -> Result<Self> {
        spec.validate()?;
        let layers = layout(&spec);
        let mut params = vec![0.0; spec.param_count()];
        let last = layers.len() - 1;
        for (k, l) in layers.iter().enumerate() {
            let gain = if k < last {
                2f64.sqrt()
            } else if spec.head == Head::SoftmaxPolicy {
                0.01
            } else {
                1.0
            };
            let w = orthogonal(rng, l.n_out, l.n_in, gain);
            params[l.offset..l.offset + w.len()].copy_from_slice(&w);
        }
        Ok(Self { spec, params, layers })
    }

    pub fn from_params(spec: NetSpec, params: Vec<f64>) -> Result<Self> {
        spec.validate()?;
        if params.len() != spec.param_count() {
            return Err(Error::DimensionMismatch {
                expected: spec.param_count(),
                got: params.len(),
            });
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite("network parameters".into()));
        }
        let layers = layout(&spec);
        Ok(Self { spec, params, layers })
    }

    pub fn spec(&self) -> &NetSpec {
        &self.spec
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn zero_grad(&self) -> Vec<f64> {
        vec![0.0; self.params.len()]
    }

    /// Zeroes the final layer so a policy starts exactly uniform.
    pub fn zero_output_layer(&mut self) {
        let l = *self.layers.last().expect("at least one layer");
        self.params[l.offset..l.bias_offset() + l.n_out].fill(0.0);
    }

    /// Stable hash of the parameter bits.
    pub fn checksum(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.spec.hash(&mut h);
        for p in &self.params {
            p.to_bits().hash(&mut h);
        }
        h.finish()
    }

    fn affine(&self, l: &Layer, x: &[f64]) -> Vec<f64> {
        let w = &self.params[l.offset..l.bias_offset()];
        let b = &self.params[l.bias_offset()..l.bias_offset() + l.n_out];
        w.chunks_exact(l.n_in)
            .zip(b)
            .map(|(row, bias)| bias + row.iter().zip(x).map(|(a, c)| a * c).sum::<f64>())
            .collect()
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.spec.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.spec.input_dim,
                got: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("network input".into()));
        }
        Ok(())
    }

    fn finish(&self, raw: &[f64]) -> Vec<f64> {
        match self.spec.head {
            Head::SoftmaxPolicy => softmax(raw),
            _ => raw.to_vec(),
        }
    }

    pub fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, ForwardCache)> {
        self.check_input(x)?;
        let mut acts = Vec::with_capacity(self.layers.len());
        acts.push(x.to_vec());
        let last = self.layers.len() - 1;
        for l in &self.layers[..last] {
            let mut h = self.affine(l, acts.last().expect("input pushed"));
            h.iter_mut().for_each(|v| *v = v.tanh());
            acts.push(h);
        }
        let raw = self.affine(&self.layers[last], acts.last().expect("input pushed"));
        let output = self.finish(&raw);
        Ok((
            output.clone(),
            ForwardCache { acts, raw, output },
        ))
    }

    /// Forward pass without recording a cache.
    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let mut h = x.to_vec();
        let last = self.layers.len() - 1;
        for l in &self.layers[..last] {
            h = self.affine(l, &h);
            h.iter_mut().for_each(|v| *v = v.tanh());
        }
        Ok(self.finish(&self.affine(&self.layers[last], &h)))
    }

    fn check_cache(&self, cache: &ForwardCache, grad: &[f64]) -> Result<()> {
        let shapes_match = cache.acts.len() == self.layers.len()
            && cache.acts.iter().zip(&self.layers).all(|(a, l)| a.len() == l.n_in)
            && cache.raw.len() == self.spec.output_dim;
        if !shapes_match {
            return Err(Error::InvalidInput("forward cache does not match this network".into()));
        }
        if grad.len() != self.params.len() {
            return Err(Error::DimensionMismatch {
                expected: self.params.len(),
                got: grad.len(),
            });
        }
        Ok(())
    }

    /// Accumulates into `grad` the parameter gradient of a loss whose
    /// derivative with respect to the head output is `output_grad`.
    pub fn backward(&self, cache: &ForwardCache, output_grad: &[f64], grad: &mut [f64]) -> Result<()> {
        if output_grad.len() != self.spec.output_dim {
            return Err(Error::DimensionMismatch {
                expected: self.spec.output_dim,
                got: output_grad.len(),
            });
        }
        let raw_grad = match self.spec.head {
            Head::SoftmaxPolicy => {
                let p = &cache.output;
                let dot: f64 = p.iter().zip(output_grad).map(|(a, b)| a * b).sum();
                p.iter().zip(output_grad).map(|(pi, gi)| pi * (gi - dot)).collect()
            }
            _ => output_grad.to_vec(),
        };
        self.backward_raw(cache, &raw_grad, grad)
    }

    /// Like [`backward`](Self::backward) but seeded with the gradient
    /// with respect to the final affine output (logits).
    pub fn backward_raw(&self, cache: &ForwardCache, raw_grad: &[f64], grad: &mut [f64]) -> Result<()> {
        self.check_cache(cache, grad)?;
        if raw_grad.len() != self.spec.output_dim {
            return Err(Error::DimensionMismatch {
                expected: self.spec.output_dim,
                got: raw_grad.len(),
            });
        }
        let mut delta = raw_grad.to_vec();
        for (k, l) in self.layers.iter().enumerate().rev() {
            let x = &cache.acts[k];
            let (wo, bo) = (l.offset, l.bias_offset());
            for (j, d) in delta.iter().enumerate() {
                if *d == 0.0 {
                    continue;
                }
                let row = &mut grad[wo + j * l.n_in..wo + (j + 1) * l.n_in];
                row.iter_mut().zip(x).for_each(|(g, xi)| *g += d * xi);
                grad[bo + j] += d;
            }
            if k == 0 {
                break;
            }
            let w = &self.params[wo..bo];
            let mut prev = vec![0.0; l.n_in];
            for (row, d) in w.chunks_exact(l.n_in).zip(&delta) {
                if *d != 0.0 {
                    prev.iter_mut().zip(row).for_each(|(p, wij)| *p += d * wij);
                }
            }
            // through tanh: h = tanh(a), dh/da = 1 − h²
            prev.iter_mut().zip(x).for_each(|(p, h)| *p *= 1.0 - h * h);
            delta = prev;
        }
        Ok(())
    }
}
