use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::models::Model;

/// Values shown by the grayscale image are clamped to `[-RANGE, RANGE]`.
pub const RANGE: f64 = 1.2;

/// `R × R` samples of a 2-D function at cell-centre grid points.
///
/// `values[r * R + c]` is the value at `((c + 0.5) / R, (r + 0.5) / R)`, so
/// row 0 sits at the bottom edge `x₂ ≈ 0` and columns run along `x₁`.
#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    resolution: usize,
    values: Vec<f64>,
}

impl Heatmap {
    pub fn new(resolution: usize, values: Vec<f64>) -> Result<Self> {
        if resolution == 0 {
            return Err(Error::InvalidConfig("heatmap resolution must be >= 1".into()));
        }
        if values.len() != resolution * resolution {
            return Err(Error::SizeMismatch {
                expected: resolution * resolution,
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { resolution, values })
    }

    /// Samples `f` on the cell-centre grid.
    pub fn from_fn<F>(resolution: usize, mut f: F) -> Result<Self>
    where
        F: FnMut(&[f64]) -> Result<f64>,
    {
        let r = resolution as f64;
        let mut values = Vec::with_capacity(resolution * resolution);
        for row in 0..resolution {
            for col in 0..resolution {
                let p = [(col as f64 + 0.5) / r, (row as f64 + 0.5) / r];
                values.push(f(&p)?);
            }
        }
        Self::new(resolution, values)
    }

    pub fn render<M: Model + ?Sized>(model: &M, resolution: usize) -> Result<Self> {
        Self::from_fn(resolution, |p| model.forward(p))
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.resolution + col]
    }

    /// One line per row, row 0 first, comma-separated shortest round-trip decimals.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        for row in self.values.chunks_exact(self.resolution) {
            let line: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        Ok(())
    }

    pub fn parse_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut values = Vec::new();
        let mut rows = 0;
        for line in input.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            for cell in line.split(',') {
                values.push(
                    cell.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Parse(format!("bad heatmap value {cell:?}")))?,
                );
            }
            rows += 1;
        }
        Self::new(rows, values)
    }

    /// Binary PGM (`P5`, maxval 255). The image's top line is the last row so
    /// that `x₂` increases upwards when viewed.
    pub fn write_pgm<W: Write>(&self, mut out: W) -> Result<()> {
        let r = self.resolution;
        write!(out, "P5\n{r} {r}\n255\n")?;
        let mut bytes = Vec::with_capacity(r * r);
        for row in self.values.chunks_exact(r).rev() {
            bytes.extend(row.iter().map(|&v| gray_level(v)));
        }
        out.write_all(&bytes)?;
        Ok(())
    }
}

/// Linear map `[-1.2, 1.2] → [0, 255]` after clamping, rounded half away
/// from zero. Zero lands on 127.5 and therefore on 128.
pub fn gray_level(v: f64) -> u8 {
    let t = (v.clamp(-RANGE, RANGE) / RANGE + 1.0) * 127.5;
    t.round() as u8
}
