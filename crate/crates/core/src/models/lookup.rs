use super::{check_point, Model};
use crate::error::{Error, Result};
use crate::sparse::SparseGrad;

/// Piecewise-constant model over `z^n` equal hyper-cubes.
///
/// Cell coordinates are `min(floor(x_i · z), z − 1)`, so `x_i = 1` falls in the
/// last cell. Cells are stored row-major with the first coordinate most
/// significant.
#[derive(Debug, Clone, PartialEq)]
pub struct LookupTableModel {
    n: usize,
    z: usize,
    table: Vec<f64>,
}

impl LookupTableModel {
    pub fn from_params(n: usize, z: usize, table: Vec<f64>) -> Result<Self> {
        let cells = z
            .checked_pow(n as u32)
            .ok_or_else(|| Error::InvalidConfig("lookup table too large".into()))?;
        if n == 0 || z == 0 {
            return Err(Error::InvalidConfig("n and z must be >= 1".into()));
        }
        if table.len() != cells {
            return Err(Error::SizeMismatch {
                expected: cells,
                got: table.len(),
            });
        }
        Ok(Self { n, z, table })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn z(&self) -> usize {
        self.z
    }

    /// Flat index of the cell containing `x`. `x` must already be validated.
    pub fn cell(&self, x: &[f64]) -> usize {
        let zf = self.z as f64;
        x.iter().fold(0, |acc, &xi| {
            let c = ((xi * zf).floor() as usize).min(self.z - 1);
            acc * self.z + c
        })
    }
}

impl Model for LookupTableModel {
    fn input_dim(&self) -> usize {
        self.n
    }

    fn params(&self) -> &[f64] {
        &self.table
    }

    fn params_mut(&mut self) -> &mut [f64] {
        &mut self.table
    }

    fn forward(&self, x: &[f64]) -> Result<f64> {
        check_point(x, self.n)?;
        Ok(self.table[self.cell(x)])
    }

    fn param_grad(&self, x: &[f64]) -> Result<SparseGrad> {
        check_point(x, self.n)?;
        let mut g = SparseGrad::with_capacity(self.table.len(), 1);
        g.push(self.cell(x), 1.0);
        Ok(g)
    }
}
