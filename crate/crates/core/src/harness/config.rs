use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::models::Architecture;

/// Which experiment to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Perturbation,
    Regression,
    Sequential,
    Rehearsal,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Perturbation => "perturbation",
            Experiment::Regression => "regression",
            Experiment::Sequential => "sequential",
            Experiment::Rehearsal => "rehearsal",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "perturbation" => Ok(Experiment::Perturbation),
            "regression" => Ok(Experiment::Regression),
            "sequential" => Ok(Experiment::Sequential),
            "rehearsal" => Ok(Experiment::Rehearsal),
            other => Err(Error::Parse(format!("unknown experiment {other:?}"))),
        }
    }
}

/// The five experiment models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelName {
    WideRelu,
    DeepRelu,
    Abel,
    SplineAnn,
    Lookup,
}

impl ModelName {
    pub const ALL: [ModelName; 5] = [
        ModelName::WideRelu,
        ModelName::DeepRelu,
        ModelName::Abel,
        ModelName::SplineAnn,
        ModelName::Lookup,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ModelName::WideRelu => "wide_relu",
            ModelName::DeepRelu => "deep_relu",
            ModelName::Abel => "abel",
            ModelName::SplineAnn => "spline_ann",
            ModelName::Lookup => "lookup",
        }
    }

    /// Stable index used when deriving per-model seeds.
    pub fn index(&self) -> u64 {
        ModelName::ALL.iter().position(|m| m == self).unwrap() as u64
    }

    /// Two-input architecture for this model under `cfg`.
    pub fn architecture(&self, cfg: &ExperimentConfig) -> Architecture {
        const N: usize = 2;
        match self {
            ModelName::WideRelu => Architecture::Relu {
                layer_sizes: vec![N, cfg.wide_units, 1],
            },
            ModelName::DeepRelu => {
                let mut sizes = vec![N];
                sizes.extend(std::iter::repeat_n(cfg.deep_units, cfg.deep_layers));
                sizes.push(1);
                Architecture::Relu { layer_sizes: sizes }
            }
            ModelName::Abel => Architecture::Abel {
                n: N,
                z: cfg.z,
                k: cfg.k,
            },
            ModelName::SplineAnn => Architecture::SplineAnn { n: N, z: cfg.z },
            ModelName::Lookup => Architecture::Lookup { n: N, z: cfg.z },
        }
    }
}

impl fmt::Display for ModelName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelName::ALL
            .iter()
            .copied()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| {
                Error::Parse(format!(
                    "unknown model {s:?} (expected one of wide_relu, deep_relu, abel, spline_ann, lookup)"
                ))
            })
    }
}

/// Parses a comma-separated model list, keeping roster order and dropping duplicates.
pub fn parse_model_list(s: &str) -> Result<Vec<ModelName>> {
    let mut out: Vec<ModelName> = s
        .split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(str::parse)
        .collect::<Result<_>>()?;
    if out.is_empty() {
        return Err(Error::Parse("empty model list".into()));
    }
    out.sort();
    out.dedup();
    Ok(out)
}

/// Every knob of the experiments. Defaults reproduce the reference setup.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub models: Vec<ModelName>,
    pub z: usize,
    pub k: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub epochs: usize,
    pub batch: usize,
    pub lr: f64,
    pub partitions: usize,
    pub points_per_partition: usize,
    pub rehearsal_points: usize,
    pub trials: usize,
    pub mc_samples: usize,
    pub heatmap_resolution: usize,
    pub wide_units: usize,
    pub deep_layers: usize,
    pub deep_units: usize,
    pub master_seed: u64,
    /// Keys that were set explicitly, in the order they were applied.
    pub overrides: Vec<String>,
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment) -> Self {
        Self {
            experiment,
            models: ModelName::ALL.to_vec(),
            z: 20,
            k: 6,
            n_train: 16_000,
            n_test: 10_000,
            epochs: 200,
            batch: 100,
            lr: 0.001,
            partitions: 16,
            points_per_partition: 1000,
            rehearsal_points: 1000,
            trials: 100,
            mc_samples: 100_000,
            heatmap_resolution: 200,
            wide_units: 1000,
            deep_layers: 8,
            deep_units: 16,
            master_seed: 0,
            overrides: Vec::new(),
        }
    }

    /// Applies one `key=value` setting and records it as an override.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse()
                .map_err(|_| Error::Parse(format!("bad value {v:?} for {key}")))
        }
        match key {
            "models" => self.models = parse_model_list(value)?,
            "z" => self.z = num(key, value)?,
            "k" => self.k = num(key, value)?,
            "n_train" => self.n_train = num(key, value)?,
            "n_test" => self.n_test = num(key, value)?,
            "epochs" => self.epochs = num(key, value)?,
            "batch" => self.batch = num(key, value)?,
            "lr" => self.lr = num(key, value)?,
            "partitions" => self.partitions = num(key, value)?,
            "points_per_partition" => self.points_per_partition = num(key, value)?,
            "rehearsal_points" => self.rehearsal_points = num(key, value)?,
            "trials" => self.trials = num(key, value)?,
            "mc_samples" => self.mc_samples = num(key, value)?,
            "heatmap_resolution" => self.heatmap_resolution = num(key, value)?,
            "wide_units" => self.wide_units = num(key, value)?,
            "deep_layers" => self.deep_layers = num(key, value)?,
            "deep_units" => self.deep_units = num(key, value)?,
            "seed" => self.master_seed = num(key, value)?,
            other => return Err(Error::Parse(format!("unknown config key {other:?}"))),
        }
        self.overrides.retain(|k| k != key);
        self.overrides.push(key.to_string());
        Ok(())
    }

    /// Applies a `key=value` file; blank lines and `#` comments are ignored.
    pub fn apply_config_text(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key=value", lineno + 1)))?;
            self.set(key.trim(), value.trim())
                .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("z", self.z),
            ("k", self.k),
            ("n_train", self.n_train),
            ("n_test", self.n_test),
            ("epochs", self.epochs),
            ("batch", self.batch),
            ("partitions", self.partitions),
            ("points_per_partition", self.points_per_partition),
            ("trials", self.trials),
            ("mc_samples", self.mc_samples),
            ("heatmap_resolution", self.heatmap_resolution),
            ("wide_units", self.wide_units),
            ("deep_layers", self.deep_layers),
            ("deep_units", self.deep_units),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::InvalidConfig(format!("{name} must be >= 1")));
            }
        }
        let side = (self.partitions as f64).sqrt().round() as usize;
        if side * side != self.partitions {
            return Err(Error::InvalidConfig(format!(
                "partitions must be a square number, got {}",
                self.partitions
            )));
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return Err(Error::InvalidConfig("lr must be > 0".into()));
        }
        if self.models.is_empty() {
            return Err(Error::InvalidConfig("no models selected".into()));
        }
        Ok(())
    }

    /// Effective configuration as `key = value` lines; overridden keys are marked.
    pub fn manifest(&self) -> String {
        let models: Vec<&str> = self.models.iter().map(|m| m.as_str()).collect();
        let entries: Vec<(&str, String)> = vec![
            ("experiment", self.experiment.to_string()),
            ("models", models.join(",")),
            ("seed", self.master_seed.to_string()),
            ("z", self.z.to_string()),
            ("k", self.k.to_string()),
            ("n_train", self.n_train.to_string()),
            ("n_test", self.n_test.to_string()),
            ("epochs", self.epochs.to_string()),
            ("batch", self.batch.to_string()),
            ("lr", format!("{:?}", self.lr)),
            ("loss", "mae".to_string()),
            ("optimizer", "adam beta1=0.9 beta2=0.999 eps=1e-8".to_string()),
            ("partitions", self.partitions.to_string()),
            ("points_per_partition", self.points_per_partition.to_string()),
            ("rehearsal_points", self.rehearsal_points.to_string()),
            ("trials", self.trials.to_string()),
            ("mc_samples", self.mc_samples.to_string()),
            ("heatmap_resolution", self.heatmap_resolution.to_string()),
            ("wide_units", self.wide_units.to_string()),
            ("deep_layers", self.deep_layers.to_string()),
            ("deep_units", self.deep_units.to_string()),
        ];
        let mut out = String::new();
        for (k, v) in entries {
            let key_for_override = if k == "seed" { "seed" } else { k };
            let mark = if self.overrides.iter().any(|o| o == key_for_override) {
                "  # override"
            } else {
                ""
            };
            out.push_str(&format!("{k} = {v}{mark}\n"));
        }
        for m in &self.models {
            out.push_str(&format!("arch.{m} = {}\n", m.architecture(self)));
        }
        out
    }
}
