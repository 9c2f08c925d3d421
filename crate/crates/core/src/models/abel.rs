use super::spline_ann::{additive_sum, windows};
use super::{check_point, Model};
use crate::error::{Error, Result};
use crate::sparse::SparseGrad;
use crate::spline::{basis_count, push_window, WINDOW};

/// Antisymmetric bounded exponential layer spline.
///
/// `A(x) = F(x) + Σ_{k=1..K} k⁻² (exp(G_k(x)) − exp(H_k(x)))` where `F`, `G_k`
/// and `H_k` are additive spline models sharing the partition number.
///
/// Parameter layout, each block `n·(4z+3)` wide and dimension-major inside:
///
/// ```text
/// [ F | G_1 | … | G_K | H_1 | … | H_K ]
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct AbelSplineModel {
    n: usize,
    z: usize,
    pairs: usize,
    params: Vec<f64>,
}

impl AbelSplineModel {
    pub fn from_params(n: usize, z: usize, pairs: usize, params: Vec<f64>) -> Result<Self> {
        if n == 0 || z == 0 || pairs == 0 {
            return Err(Error::InvalidConfig("n, z and K must be >= 1".into()));
        }
        let expected = n * basis_count(z) * (2 * pairs + 1);
        if params.len() != expected {
            return Err(Error::SizeMismatch {
                expected,
                got: params.len(),
            });
        }
        Ok(Self { n, z, pairs, params })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn z(&self) -> usize {
        self.z
    }

    /// Number of exponential pairs `K`.
    pub fn pairs(&self) -> usize {
        self.pairs
    }

    /// Width of one additive block.
    pub fn block_len(&self) -> usize {
        self.n * basis_count(self.z)
    }

    /// Scale factor `1/k²` of pair `k` (1-based).
    pub fn scale(k: usize) -> f64 {
        1.0 / (k * k) as f64
    }

    fn block(&self, b: usize) -> &[f64] {
        let w = self.block_len();
        &self.params[b * w..(b + 1) * w]
    }

    /// `F(x)`, then `exp(G_k(x))` and `exp(H_k(x))` for every pair.
    fn parts(&self, ws: &[crate::spline::BasisWindow]) -> (f64, Vec<f64>, Vec<f64>) {
        let stride = basis_count(self.z);
        let f = additive_sum(self.block(0), ws, stride);
        let eg = (1..=self.pairs)
            .map(|k| additive_sum(self.block(k), ws, stride).exp())
            .collect();
        let eh = (1..=self.pairs)
            .map(|k| additive_sum(self.block(self.pairs + k), ws, stride).exp())
            .collect();
        (f, eg, eh)
    }
}

impl Model for AbelSplineModel {
    fn input_dim(&self) -> usize {
        self.n
    }

    fn params(&self) -> &[f64] {
        &self.params
    }

    fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn forward(&self, x: &[f64]) -> Result<f64> {
        check_point(x, self.n)?;
        let ws = windows(self.z, x);
        let (f, eg, eh) = self.parts(&ws);
        let mut acc = f;
        for k in 1..=self.pairs {
            acc += Self::scale(k) * (eg[k - 1] - eh[k - 1]);
        }
        Ok(acc)
    }

    fn param_grad(&self, x: &[f64]) -> Result<SparseGrad> {
        check_point(x, self.n)?;
        let ws = windows(self.z, x);
        let (_, eg, eh) = self.parts(&ws);
        let stride = basis_count(self.z);
        let width = self.block_len();
        let mut g = SparseGrad::with_capacity(self.params.len(), WINDOW * self.n * (2 * self.pairs + 1));
        let mut push_block = |b: usize, scale: f64| {
            for (j, w) in ws.iter().enumerate() {
                push_window(&mut g, w, b * width + j * stride, scale);
            }
        };
        push_block(0, 1.0);
        for k in 1..=self.pairs {
            push_block(k, Self::scale(k) * eg[k - 1]);
        }
        for k in 1..=self.pairs {
            push_block(self.pairs + k, -Self::scale(k) * eh[k - 1]);
        }
        Ok(g)
    }
}
