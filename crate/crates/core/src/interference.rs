//! Monte Carlo measurement of model perturbation and distal interference.
//!
//! Both quantities are L1 integrals over the unit cube of the change
//! `Δ(x) = f_after(x) − f_before(x)` caused by a training update. Distal
//! interference restricts the integral to points whose dissimilarity from the
//! training point exceeds a threshold; it is estimated with an indicator
//! against the full-domain uniform measure (no renormalization by the volume
//! of the distal set).

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::models::Model;
use crate::rng::{derive_seed, stream_rng, PointSet, Stream};
use crate::training::{train_epochs, AdamState, Dataset, LossKind, TrainConfig};

/// Coordinate-wise dissimilarity used to select distal points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DistalKind {
    /// `max_i |x_i − v_i|`
    MaxAbs,
    /// `min_i |x_i − v_i|`
    MinAbs,
}

impl fmt::Display for DistalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DistalKind::MaxAbs => "max_abs",
            DistalKind::MinAbs => "min_abs",
        })
    }
}

impl FromStr for DistalKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max_abs" => Ok(DistalKind::MaxAbs),
            "min_abs" => Ok(DistalKind::MinAbs),
            other => Err(Error::Parse(format!("unknown dissimilarity {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistalSpec {
    pub kind: DistalKind,
    pub delta: f64,
}

impl DistalSpec {
    pub fn new(kind: DistalKind, delta: f64) -> Result<Self> {
        if !(delta.is_finite() && delta > 0.0) {
            return Err(Error::InvalidConfig(format!("distal threshold must be > 0, got {delta}")));
        }
        Ok(Self { kind, delta })
    }

    /// Whether `x` belongs to the distal set of `v` (strict inequality).
    #[inline]
    pub fn is_distal(&self, x: &[f64], v: &[f64]) -> bool {
        raw_dissimilarity(x, v, self.kind) > self.delta
    }

    /// The six specs of the standard tables: both kinds at δ ∈ {0.1, 0.05, 0.01}.
    pub fn default_specs() -> Vec<DistalSpec> {
        let mut out = Vec::with_capacity(6);
        for kind in [DistalKind::MaxAbs, DistalKind::MinAbs] {
            for delta in [0.1, 0.05, 0.01] {
                out.push(DistalSpec { kind, delta });
            }
        }
        out
    }
}

#[inline]
fn raw_dissimilarity(x: &[f64], v: &[f64], kind: DistalKind) -> f64 {
    let diffs = x.iter().zip(v).map(|(a, b)| (a - b).abs());
    match kind {
        DistalKind::MaxAbs => diffs.fold(f64::NEG_INFINITY, f64::max),
        DistalKind::MinAbs => diffs.fold(f64::INFINITY, f64::min),
    }
}

pub fn dissimilarity(x: &[f64], v: &[f64], kind: DistalKind) -> Result<f64> {
    if x.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: v.len(),
            got: x.len(),
        });
    }
    if x.is_empty() {
        return Err(Error::InvalidConfig("zero-dimensional points".into()));
    }
    Ok(raw_dissimilarity(x, v, kind))
}

/// `|f_after(x) − f_before(x)|` at every sample.
pub fn abs_changes<A: Model + ?Sized, B: Model + ?Sized>(
    before: &A,
    after: &B,
    samples: &PointSet,
) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    if before.input_dim() != after.input_dim() || samples.dim() != before.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: before.input_dim(),
            got: samples.dim(),
        });
    }
    samples
        .iter()
        .map(|x| Ok((after.forward(x)? - before.forward(x)?).abs()))
        .collect()
}

/// Monte Carlo estimate of `∫ |f_after − f_before| dx` over the unit cube.
pub fn perturbation_mc<A: Model + ?Sized, B: Model + ?Sized>(
    before: &A,
    after: &B,
    samples: &PointSet,
) -> Result<f64> {
    let changes = abs_changes(before, after, samples)?;
    Ok(changes.iter().sum::<f64>() / changes.len() as f64)
}

/// A distal-interference estimate and how many samples fell in the distal set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistalEstimate {
    pub value: f64,
    pub hits: usize,
}

impl DistalEstimate {
    /// No sample landed in the distal set; `value` is then `0.0`.
    pub fn is_empty(&self) -> bool {
        self.hits == 0
    }
}

fn interference_from_changes(changes: &[f64], samples: &PointSet, v: &[f64], spec: &DistalSpec) -> DistalEstimate {
    let mut acc = 0.0;
    let mut hits = 0;
    for (c, x) in changes.iter().zip(samples.iter()) {
        if spec.is_distal(x, v) {
            acc += c;
            hits += 1;
        }
    }
    DistalEstimate {
        value: acc / changes.len() as f64,
        hits,
    }
}

/// Monte Carlo estimate of `∫_{D_v} |f_after − f_before| dx`.
pub fn distal_interference_mc<A: Model + ?Sized, B: Model + ?Sized>(
    before: &A,
    after: &B,
    v: &[f64],
    spec: &DistalSpec,
    samples: &PointSet,
) -> Result<DistalEstimate> {
    if v.len() != samples.dim() {
        return Err(Error::DimensionMismatch {
            expected: samples.dim(),
            got: v.len(),
        });
    }
    let changes = abs_changes(before, after, samples)?;
    Ok(interference_from_changes(&changes, samples, v, spec))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    /// Monte Carlo points per trial.
    pub n_samples: usize,
    pub n_trials: usize,
    pub sample_seed: u64,
    pub trial_seed: u64,
    /// Adam learning rate of the single update.
    pub lr: f64,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            n_samples: 100_000,
            n_trials: 100,
            sample_seed: 0,
            trial_seed: 0,
            lr: 0.001,
        }
    }
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 || self.n_trials == 0 {
            return Err(Error::InvalidConfig("n_samples and n_trials must be >= 1".into()));
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return Err(Error::InvalidConfig("learning rate must be > 0".into()));
        }
        Ok(())
    }
}

/// Measurements of one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub train_point: Vec<f64>,
    pub target: f64,
    pub perturbation: f64,
    /// One estimate per requested spec, in request order.
    pub interference: Vec<DistalEstimate>,
}

/// Mean and population standard deviation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Stat {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Stat { mean, std: var.sqrt() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterferenceCell {
    pub spec: DistalSpec,
    pub stat: Stat,
    /// Trials in which no sample fell in the distal set.
    pub empty_trials: usize,
}

/// Aggregate of repeated single-update trials for one model.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialReport {
    pub label: String,
    pub trials: usize,
    pub perturbation: Stat,
    pub interference: Vec<InterferenceCell>,
    pub outcomes: Vec<TrialOutcome>,
}

impl TrialReport {
    pub fn cell(&self, kind: DistalKind, delta: f64) -> Option<&InterferenceCell> {
        self.interference
            .iter()
            .find(|c| c.spec.kind == kind && c.spec.delta == delta)
    }
}

/// Runs one trial: draw `v` and a standard-normal target, take one Adam step
/// (batch of one, MAE) from a fresh model, and measure on fresh samples.
pub fn run_single_trial<M, F>(factory: &F, cfg: &McConfig, specs: &[DistalSpec], trial: u64) -> Result<TrialOutcome>
where
    M: Model + Clone,
    F: Fn(u64) -> Result<M>,
{
    let before = factory(derive_seed(cfg.trial_seed, Stream::Init, trial))?;
    let n = before.input_dim();
    let mut rng = stream_rng(cfg.trial_seed, Stream::TrialData, trial);
    let v: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let target: f64 = rng.sample(StandardNormal);

    let mut after = before.clone();
    let data = Dataset::new(PointSet::new(n, v.clone()), vec![target])?;
    let train = TrainConfig {
        epochs: 1,
        batch_size: 1,
        loss: LossKind::Mae,
        shuffle_seed: derive_seed(cfg.trial_seed, Stream::Shuffle, trial),
    };
    let mut state = AdamState::new(after.param_count(), cfg.lr);
    train_epochs(&mut after, &data, &train, &mut state)?;

    let mut srng = stream_rng(cfg.sample_seed, Stream::McSamples, trial);
    let samples = PointSet::uniform(&mut srng, n, cfg.n_samples);
    let changes = abs_changes(&before, &after, &samples)?;
    let perturbation = changes.iter().sum::<f64>() / changes.len() as f64;
    let interference = specs
        .iter()
        .map(|s| interference_from_changes(&changes, &samples, &v, s))
        .collect();
    Ok(TrialOutcome {
        train_point: v,
        target,
        perturbation,
        interference,
    })
}

/// The repeated-trial protocol. `factory` builds a freshly initialized model
/// from a seed. Trials run in parallel; results are merged by trial index.
pub fn run_interference_trials<M, F>(
    label: &str,
    factory: F,
    cfg: &McConfig,
    specs: &[DistalSpec],
) -> Result<TrialReport>
where
    M: Model + Clone,
    F: Fn(u64) -> Result<M> + Sync,
{
    cfg.validate()?;
    let outcomes = (0..cfg.n_trials as u64)
        .into_par_iter()
        .map(|t| run_single_trial(&factory, cfg, specs, t))
        .collect::<Result<Vec<_>>>()?;

    let pert: Vec<f64> = outcomes.iter().map(|o| o.perturbation).collect();
    let interference = specs
        .iter()
        .enumerate()
        .map(|(i, spec)| {
            let vals: Vec<f64> = outcomes.iter().map(|o| o.interference[i].value).collect();
            InterferenceCell {
                spec: *spec,
                stat: Stat::of(&vals),
                empty_trials: outcomes.iter().filter(|o| o.interference[i].is_empty()).count(),
            }
        })
        .collect();
    Ok(TrialReport {
        label: label.to_string(),
        trials: cfg.n_trials,
        perturbation: Stat::of(&pert),
        interference,
        outcomes,
    })
}

/// Writes reports as CSV with columns `model,metric,kind,delta,mean,std`.
///
/// Perturbation rows leave `kind` and `delta` empty. Numbers use the shortest
/// representation that round-trips, so exact zeros print as `0.0`.
pub fn write_reports_csv<W: Write>(reports: &[TrialReport], mut out: W) -> Result<()> {
    writeln!(out, "model,metric,kind,delta,mean,std")?;
    for r in reports {
        writeln!(
            out,
            "{},perturbation,,,{:?},{:?}",
            r.label, r.perturbation.mean, r.perturbation.std
        )?;
        for c in &r.interference {
            writeln!(
                out,
                "{},interference,{},{:?},{:?},{:?}",
                r.label, c.spec.kind, c.spec.delta, c.stat.mean, c.stat.std
            )?;
        }
    }
    Ok(())
}
