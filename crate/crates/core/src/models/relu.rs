use super::{check_point, Model};
use crate::error::{Error, Result};
use crate::sparse::SparseGrad;

/// Dense ReLU network with a scalar output.
///
/// Inputs pass through a fixed map `x ↦ 2x − 1` first. Hidden layers apply
/// ReLU; the output layer is linear. For each layer the flat parameter
/// vector holds the `out × in` weight matrix row-major, then the `out`
/// biases. The subgradient of ReLU at exactly zero is taken as zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ReluMlpModel {
    layer_sizes: Vec<usize>,
    /// Start of each layer's weights in `params`.
    offsets: Vec<usize>,
    params: Vec<f64>,
}

struct Trace {
    /// Layer inputs: `acts[0]` is the mapped input, `acts[l]` the output of hidden layer `l`.
    acts: Vec<Vec<f64>>,
    /// Hidden pre-activations, one per hidden layer.
    pre: Vec<Vec<f64>>,
    output: f64,
}

impl ReluMlpModel {
    pub fn from_params(layer_sizes: Vec<usize>, params: Vec<f64>) -> Result<Self> {
        super::Architecture::Relu {
            layer_sizes: layer_sizes.clone(),
        }
        .validate()?;
        let mut offsets = Vec::with_capacity(layer_sizes.len() - 1);
        let mut total = 0;
        for w in layer_sizes.windows(2) {
            offsets.push(total);
            total += w[0] * w[1] + w[1];
        }
        if params.len() != total {
            return Err(Error::SizeMismatch {
                expected: total,
                got: params.len(),
            });
        }
        Ok(Self {
            layer_sizes,
            offsets,
            params,
        })
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    /// Number of affine layers (hidden layers plus the output layer).
    pub fn depth(&self) -> usize {
        self.layer_sizes.len() - 1
    }

    /// `(weights, biases)` of layer `l`.
    fn layer(&self, l: usize) -> (&[f64], &[f64]) {
        let (fan_in, fan_out) = (self.layer_sizes[l], self.layer_sizes[l + 1]);
        let o = self.offsets[l];
        let w = &self.params[o..o + fan_in * fan_out];
        let b = &self.params[o + fan_in * fan_out..o + fan_in * fan_out + fan_out];
        (w, b)
    }

    fn affine(w: &[f64], b: &[f64], input: &[f64], out: &mut [f64]) {
        let fan_in = input.len();
        for (o, slot) in out.iter_mut().enumerate() {
            let row = &w[o * fan_in..(o + 1) * fan_in];
            let mut acc = b[o];
            for (wi, xi) in row.iter().zip(input) {
                acc += wi * xi;
            }
            *slot = acc;
        }
    }

    fn run(&self, x: &[f64]) -> Trace {
        let depth = self.depth();
        let mut acts = Vec::with_capacity(depth);
        let mut pre = Vec::with_capacity(depth - 1);
        acts.push(x.iter().map(|v| 2.0 * v - 1.0).collect::<Vec<f64>>());
        for l in 0..depth - 1 {
            let (w, b) = self.layer(l);
            let mut z = vec![0.0; self.layer_sizes[l + 1]];
            Self::affine(w, b, &acts[l], &mut z);
            acts.push(z.iter().map(|v| v.max(0.0)).collect());
            pre.push(z);
        }
        let (w, b) = self.layer(depth - 1);
        let mut out = [0.0];
        Self::affine(w, b, &acts[depth - 1], &mut out);
        Trace {
            acts,
            pre,
            output: out[0],
        }
    }

    /// Output and hidden pre-activations; used to keep finite-difference
    /// checks away from ReLU kinks.
    pub fn pre_activations(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        check_point(x, self.layer_sizes[0])?;
        Ok(self.run(x).pre)
    }

    /// Reverse sweep: adds `scale · ∂output/∂θ` into `out`.
    fn backprop(&self, trace: &Trace, scale: f64, out: &mut [f64]) {
        let depth = self.depth();
        let mut delta = vec![scale];
        for l in (0..depth).rev() {
            let (fan_in, fan_out) = (self.layer_sizes[l], self.layer_sizes[l + 1]);
            let o = self.offsets[l];
            let input = &trace.acts[l];
            {
                let (gw, gb) = out[o..o + fan_in * fan_out + fan_out].split_at_mut(fan_in * fan_out);
                for (r, d) in delta.iter().enumerate() {
                    if *d == 0.0 {
                        continue;
                    }
                    let row = &mut gw[r * fan_in..(r + 1) * fan_in];
                    for (g, a) in row.iter_mut().zip(input) {
                        *g += d * a;
                    }
                    gb[r] += d;
                }
            }
            if l > 0 {
                let (w, _) = self.layer(l);
                let pre = &trace.pre[l - 1];
                let mut next = vec![0.0; fan_in];
                for (r, d) in delta.iter().enumerate() {
                    if *d == 0.0 {
                        continue;
                    }
                    let row = &w[r * fan_in..(r + 1) * fan_in];
                    for (nx, wv) in next.iter_mut().zip(row) {
                        *nx += wv * d;
                    }
                }
                for (nx, z) in next.iter_mut().zip(pre) {
                    if *z <= 0.0 {
                        *nx = 0.0;
                    }
                }
                delta = next;
            }
        }
    }
}

impl Model for ReluMlpModel {
    fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    fn params(&self) -> &[f64] {
        &self.params
    }

    fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn forward(&self, x: &[f64]) -> Result<f64> {
        check_point(x, self.layer_sizes[0])?;
        Ok(self.run(x).output)
    }

    /// Dense gradient: every parameter index is present, zeros included.
    fn param_grad(&self, x: &[f64]) -> Result<SparseGrad> {
        check_point(x, self.layer_sizes[0])?;
        let trace = self.run(x);
        let mut dense = vec![0.0; self.params.len()];
        self.backprop(&trace, 1.0, &mut dense);
        SparseGrad::from_entries(dense.len(), dense.into_iter().enumerate().collect())
    }

    fn accumulate_grad(&self, x: &[f64], scale: &dyn Fn(f64) -> f64, out: &mut [f64]) -> Result<f64> {
        check_point(x, self.layer_sizes[0])?;
        if out.len() != self.params.len() {
            return Err(Error::SizeMismatch {
                expected: self.params.len(),
                got: out.len(),
            });
        }
        let trace = self.run(x);
        let s = scale(trace.output);
        if s != 0.0 {
            self.backprop(&trace, s, out);
        }
        Ok(trace.output)
    }
}
