use super::{check_point, Model};
use crate::error::{Error, Result};
use crate::sparse::SparseGrad;
use crate::spline::{basis_count, push_window, window_unchecked, BasisWindow, WINDOW};

/// Additive model: one z-density spline per input coordinate.
///
/// Parameters are laid out dimension-major: coefficients of coordinate `j`
/// occupy `j·(4z+3) .. (j+1)·(4z+3)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SplineAnnModel {
    n: usize,
    z: usize,
    coeffs: Vec<f64>,
}

impl SplineAnnModel {
    pub fn from_params(n: usize, z: usize, coeffs: Vec<f64>) -> Result<Self> {
        if n == 0 || z == 0 {
            return Err(Error::InvalidConfig("n and z must be >= 1".into()));
        }
        if coeffs.len() != n * basis_count(z) {
            return Err(Error::SizeMismatch {
                expected: n * basis_count(z),
                got: coeffs.len(),
            });
        }
        Ok(Self { n, z, coeffs })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn z(&self) -> usize {
        self.z
    }
}

/// Per-coordinate windows for an already validated point.
pub(crate) fn windows(z: usize, x: &[f64]) -> Vec<BasisWindow> {
    x.iter().map(|&xi| window_unchecked(z, xi)).collect()
}

/// `Σ_j f_j(x_j)` for a block of `n·(4z+3)` coefficients.
#[inline]
pub(crate) fn additive_sum(block: &[f64], windows: &[BasisWindow], stride: usize) -> f64 {
    let mut acc = 0.0;
    for (j, w) in windows.iter().enumerate() {
        acc += w.dot(&block[j * stride..(j + 1) * stride]);
    }
    acc
}

impl Model for SplineAnnModel {
    fn input_dim(&self) -> usize {
        self.n
    }

    fn params(&self) -> &[f64] {
        &self.coeffs
    }

    fn params_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    fn forward(&self, x: &[f64]) -> Result<f64> {
        check_point(x, self.n)?;
        let ws = windows(self.z, x);
        Ok(additive_sum(&self.coeffs, &ws, basis_count(self.z)))
    }

    fn param_grad(&self, x: &[f64]) -> Result<SparseGrad> {
        check_point(x, self.n)?;
        let stride = basis_count(self.z);
        let mut g = SparseGrad::with_capacity(self.coeffs.len(), WINDOW * self.n);
        for (j, w) in windows(self.z, x).iter().enumerate() {
            push_window(&mut g, w, j * stride, 1.0);
        }
        Ok(g)
    }
}
