//! The experiment models behind one interface.
//!
//! Every model maps a point of `[0, 1]^n` to a scalar and exposes its
//! trainable parameters as one flat vector. [`Model::param_grad`] indices
//! refer to positions in that vector.

mod abel;
mod init;
mod io;
mod lookup;
mod relu;
mod spline_ann;

pub use abel::AbelSplineModel;
pub use init::{init_model, InitKind, InitSpec};
pub use io::{read_model, write_model};
pub use lookup::LookupTableModel;
pub use relu::ReluMlpModel;
pub use spline_ann::SplineAnnModel;

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::sparse::SparseGrad;

/// Uniform interface over the experiment models.
pub trait Model: Send + Sync {
    fn input_dim(&self) -> usize;

    fn params(&self) -> &[f64];

    fn params_mut(&mut self) -> &mut [f64];

    fn param_count(&self) -> usize {
        self.params().len()
    }

    fn forward(&self, x: &[f64]) -> Result<f64>;

    /// Gradient of the scalar output w.r.t. the flat parameter vector.
    fn param_grad(&self, x: &[f64]) -> Result<SparseGrad>;

    /// Evaluates the model at `x`, then adds `scale(f(x)) · ∇_θ f(x)` to `out`.
    ///
    /// Returns `f(x)`. Training uses this so that dense-gradient models can
    /// backpropagate straight into the batch buffer.
    fn accumulate_grad(&self, x: &[f64], scale: &dyn Fn(f64) -> f64, out: &mut [f64]) -> Result<f64> {
        let y = self.forward(x)?;
        let s = scale(y);
        if s != 0.0 {
            self.param_grad(x)?.axpy_into(s, out)?;
        }
        Ok(y)
    }
}

/// Validates that `x` has dimension `n` and lies in the unit cube.
pub(crate) fn check_point(x: &[f64], n: usize) -> Result<()> {
    if x.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: x.len(),
        });
    }
    for &xi in x {
        crate::spline::check_unit(xi)?;
    }
    Ok(())
}

/// Shape of a model, independent of its parameter values.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Architecture {
    Lookup { n: usize, z: usize },
    SplineAnn { n: usize, z: usize },
    Abel { n: usize, z: usize, k: usize },
    /// Layer sizes from input to output; the last entry must be 1.
    Relu { layer_sizes: Vec<usize> },
}

impl Architecture {
    pub fn input_dim(&self) -> usize {
        match self {
            Architecture::Lookup { n, .. }
            | Architecture::SplineAnn { n, .. }
            | Architecture::Abel { n, .. } => *n,
            Architecture::Relu { layer_sizes } => layer_sizes.first().copied().unwrap_or(0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        match self {
            Architecture::Lookup { n, z } | Architecture::SplineAnn { n, z } => {
                if *n == 0 || *z == 0 {
                    return bad("input dimension and partition number must be >= 1");
                }
                if let Architecture::Lookup { n, z } = self {
                    if z.checked_pow(*n as u32).is_none_or(|c| c > 1 << 28) {
                        return bad("lookup table too large");
                    }
                }
                Ok(())
            }
            Architecture::Abel { n, z, k } => {
                if *n == 0 || *z == 0 || *k == 0 {
                    return bad("input dimension, partition number and pair count must be >= 1");
                }
                Ok(())
            }
            Architecture::Relu { layer_sizes } => {
                if layer_sizes.len() < 2 {
                    return bad("a ReLU network needs at least input and output sizes");
                }
                if layer_sizes.contains(&0) {
                    return bad("layer sizes must be >= 1");
                }
                if *layer_sizes.last().unwrap() != 1 {
                    return bad("output layer must have exactly one unit");
                }
                Ok(())
            }
        }
    }

    /// Number of trainable parameters this architecture has.
    pub fn param_count(&self) -> usize {
        use crate::spline::basis_count;
        match self {
            Architecture::Lookup { n, z } => z.pow(*n as u32),
            Architecture::SplineAnn { n, z } => n * basis_count(*z),
            Architecture::Abel { n, z, k } => n * basis_count(*z) * (2 * k + 1),
            Architecture::Relu { layer_sizes } => layer_sizes
                .windows(2)
                .map(|w| w[0] * w[1] + w[1])
                .sum(),
        }
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Architecture::Lookup { n, z } => write!(f, "lookup n={n} z={z}"),
            Architecture::SplineAnn { n, z } => write!(f, "spline_ann n={n} z={z}"),
            Architecture::Abel { n, z, k } => write!(f, "abel n={n} z={z} k={k}"),
            Architecture::Relu { layer_sizes } => {
                let sizes: Vec<String> = layer_sizes.iter().map(|s| s.to_string()).collect();
                write!(f, "relu sizes={}", sizes.join(","))
            }
        }
    }
}

impl FromStr for Architecture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.split_whitespace();
        let kind = parts
            .next()
            .ok_or_else(|| Error::Parse("empty architecture".into()))?;
        let mut n = None;
        let mut z = None;
        let mut k = None;
        let mut sizes = None;
        for part in parts {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value, got {part:?}")))?;
            let num = |v: &str| {
                v.parse::<usize>()
                    .map_err(|_| Error::Parse(format!("bad integer {v:?} for {key}")))
            };
            match key {
                "n" => n = Some(num(value)?),
                "z" => z = Some(num(value)?),
                "k" => k = Some(num(value)?),
                "sizes" => {
                    sizes = Some(
                        value
                            .split(',')
                            .map(num)
                            .collect::<Result<Vec<usize>>>()?,
                    )
                }
                _ => return Err(Error::Parse(format!("unknown architecture key {key:?}"))),
            }
        }
        let need = |v: Option<usize>, name: &str| {
            v.ok_or_else(|| Error::Parse(format!("architecture {kind:?} missing {name}")))
        };
        let arch = match kind {
            "lookup" => Architecture::Lookup {
                n: need(n, "n")?,
                z: need(z, "z")?,
            },
            "spline_ann" => Architecture::SplineAnn {
                n: need(n, "n")?,
                z: need(z, "z")?,
            },
            "abel" => Architecture::Abel {
                n: need(n, "n")?,
                z: need(z, "z")?,
                k: need(k, "k")?,
            },
            "relu" => Architecture::Relu {
                layer_sizes: sizes
                    .ok_or_else(|| Error::Parse("relu architecture missing sizes".into()))?,
            },
            other => return Err(Error::Parse(format!("unknown architecture {other:?}"))),
        };
        arch.validate()?;
        Ok(arch)
    }
}

/// Any of the experiment models, dispatched statically.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyModel {
    Lookup(LookupTableModel),
    SplineAnn(SplineAnnModel),
    Abel(AbelSplineModel),
    Relu(ReluMlpModel),
}

macro_rules! dispatch {
    ($self:expr, $m:ident => $body:expr) => {
        match $self {
            AnyModel::Lookup($m) => $body,
            AnyModel::SplineAnn($m) => $body,
            AnyModel::Abel($m) => $body,
            AnyModel::Relu($m) => $body,
        }
    };
}

impl AnyModel {
    /// Builds a model from an architecture and an explicit parameter vector.
    pub fn from_params(arch: &Architecture, params: Vec<f64>) -> Result<Self> {
        arch.validate()?;
        Ok(match arch {
            Architecture::Lookup { n, z } => {
                AnyModel::Lookup(LookupTableModel::from_params(*n, *z, params)?)
            }
            Architecture::SplineAnn { n, z } => {
                AnyModel::SplineAnn(SplineAnnModel::from_params(*n, *z, params)?)
            }
            Architecture::Abel { n, z, k } => {
                AnyModel::Abel(AbelSplineModel::from_params(*n, *z, *k, params)?)
            }
            Architecture::Relu { layer_sizes } => {
                AnyModel::Relu(ReluMlpModel::from_params(layer_sizes.clone(), params)?)
            }
        })
    }

    pub fn architecture(&self) -> Architecture {
        match self {
            AnyModel::Lookup(m) => Architecture::Lookup { n: m.n(), z: m.z() },
            AnyModel::SplineAnn(m) => Architecture::SplineAnn { n: m.n(), z: m.z() },
            AnyModel::Abel(m) => Architecture::Abel {
                n: m.n(),
                z: m.z(),
                k: m.pairs(),
            },
            AnyModel::Relu(m) => Architecture::Relu {
                layer_sizes: m.layer_sizes().to_vec(),
            },
        }
    }
}

impl Model for AnyModel {
    fn input_dim(&self) -> usize {
        dispatch!(self, m => m.input_dim())
    }

    fn params(&self) -> &[f64] {
        dispatch!(self, m => m.params())
    }

    fn params_mut(&mut self) -> &mut [f64] {
        dispatch!(self, m => m.params_mut())
    }

    fn forward(&self, x: &[f64]) -> Result<f64> {
        dispatch!(self, m => m.forward(x))
    }

    fn param_grad(&self, x: &[f64]) -> Result<SparseGrad> {
        dispatch!(self, m => m.param_grad(x))
    }

    fn accumulate_grad(&self, x: &[f64], scale: &dyn Fn(f64) -> f64, out: &mut [f64]) -> Result<f64> {
        dispatch!(self, m => m.accumulate_grad(x, scale, out))
    }
}
