use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::PointSet;

/// A `side × side` grid of equal axis-aligned cells over `[0, 1]²` and the
/// order in which the cells are visited.
///
/// Cell `c` spans column `c % side` along `x₁` and row `c / side` along `x₂`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionPlan {
    side: usize,
    order: Vec<usize>,
}

impl PartitionPlan {
    /// Grid with `cells` cells (a perfect square) visited in a random order.
    pub fn shuffled<R: Rng>(cells: usize, rng: &mut R) -> Result<Self> {
        let side = (cells as f64).sqrt().round() as usize;
        if side == 0 || side * side != cells {
            return Err(Error::InvalidConfig(format!(
                "partition count must be a non-zero square, got {cells}"
            )));
        }
        let mut order: Vec<usize> = (0..cells).collect();
        order.shuffle(rng);
        Ok(Self { side, order })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn cell_count(&self) -> usize {
        self.side * self.side
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// `[lo, hi)` bounds of a cell along each axis.
    pub fn bounds(&self, cell: usize) -> [(f64, f64); 2] {
        let s = self.side as f64;
        let (col, row) = ((cell % self.side) as f64, (cell / self.side) as f64);
        [(col / s, (col + 1.0) / s), (row / s, (row + 1.0) / s)]
    }

    /// Cell containing `x`; the upper boundary `1.0` belongs to the last cell.
    pub fn cell_of(&self, x: &[f64]) -> usize {
        let s = self.side as f64;
        let idx = |v: f64| ((v * s).floor() as usize).min(self.side - 1);
        idx(x[1]) * self.side + idx(x[0])
    }

    /// `count` points uniform inside `cell`.
    pub fn sample_cell<R: Rng>(&self, cell: usize, count: usize, rng: &mut R) -> PointSet {
        let [(x0, x1), (y0, y1)] = self.bounds(cell);
        let mut out = PointSet::new(2, Vec::with_capacity(2 * count));
        while out.len() < count {
            let p = [rng.random_range(x0..x1), rng.random_range(y0..y1)];
            // rounding can land exactly on the upper edge; keep the cell strict
            if self.cell_of(&p) == cell {
                out.push(&p);
            }
        }
        out
    }
}
