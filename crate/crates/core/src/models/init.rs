use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{AnyModel, Architecture};
use crate::error::{Error, Result};

/// Parameter initializer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitKind {
    /// Weights uniform on `±sqrt(6 / (fan_in + fan_out))` per layer, biases zero.
    /// Only defined for layered (ReLU) models.
    GlorotUniform,
    /// Every parameter uniform on `[low, high)`. For ReLU models biases stay zero.
    RandomUniform { low: f64, high: f64 },
}

impl InitKind {
    /// The conventional default range for `RandomUniform`.
    pub const DEFAULT_UNIFORM: InitKind = InitKind::RandomUniform {
        low: -0.05,
        high: 0.05,
    };
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitSpec {
    pub kind: InitKind,
    pub seed: u64,
}

impl InitSpec {
    pub fn new(kind: InitKind, seed: u64) -> Self {
        Self { kind, seed }
    }

    /// Initializer used for `arch` in the experiments: Glorot for ReLU
    /// networks, `RandomUniform(−0.05, 0.05)` for partition-based models.
    pub fn default_for(arch: &Architecture, seed: u64) -> Self {
        let kind = match arch {
            Architecture::Relu { .. } => InitKind::GlorotUniform,
            _ => InitKind::DEFAULT_UNIFORM,
        };
        Self { kind, seed }
    }
}

/// Builds a model with seeded parameters. The same spec always yields
/// bit-identical parameters.
pub fn init_model(spec: &InitSpec, arch: &Architecture) -> Result<AnyModel> {
    arch.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let count = arch.param_count();
    let params = match (arch, spec.kind) {
        (Architecture::Relu { layer_sizes }, kind) => {
            let mut params = Vec::with_capacity(count);
            for w in layer_sizes.windows(2) {
                let (fan_in, fan_out) = (w[0], w[1]);
                let (low, high) = match kind {
                    InitKind::GlorotUniform => {
                        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                        (-limit, limit)
                    }
                    InitKind::RandomUniform { low, high } => (low, high),
                };
                check_range(low, high)?;
                params.extend((0..fan_in * fan_out).map(|_| rng.random_range(low..high)));
                params.extend(std::iter::repeat_n(0.0, fan_out));
            }
            params
        }
        (_, InitKind::RandomUniform { low, high }) => {
            check_range(low, high)?;
            (0..count).map(|_| rng.random_range(low..high)).collect()
        }
        (_, InitKind::GlorotUniform) => {
            return Err(Error::InvalidConfig(
                "glorot_uniform needs a layered model; use random_uniform for partition models".into(),
            ))
        }
    };
    AnyModel::from_params(arch, params)
}

fn check_range(low: f64, high: f64) -> Result<()> {
    if !(low.is_finite() && high.is_finite() && low < high) {
        return Err(Error::InvalidConfig(format!(
            "invalid uniform range [{low}, {high})"
        )));
    }
    Ok(())
}
