//! The 2-D experiments: single-update interference trials, joint regression,
//! sequential training over grid cells with and without pseudo-rehearsal,
//! and their CSV/PGM artifacts.
//!
//! Every run is a pure function of its [`ExperimentConfig`]. Seeds are
//! derived from the master seed per purpose, so all models in one run share
//! the same data, test set and trial points.

mod config;
mod heatmap;
mod partition;

use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

pub use config::{parse_model_list, Experiment, ExperimentConfig, ModelName};
pub use heatmap::{gray_level, Heatmap, RANGE as HEATMAP_RANGE};
pub use partition::PartitionPlan;

use crate::error::{Error, Result};
use crate::interference::{run_interference_trials, write_reports_csv, DistalSpec, McConfig, TrialReport};
use crate::models::{init_model, AnyModel, InitSpec, Model};
use crate::rng::{derive_seed, stream_rng, PointSet, Stream};
use crate::training::{mean_abs_error, train_epochs, AdamState, Dataset, LossKind, TrainConfig};

/// `sin(4πx₁)·sin(4πx₂)` on the unit square.
pub fn target_2d(x: &[f64]) -> Result<f64> {
    if x.len() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: x.len(),
        });
    }
    for &v in x {
        crate::spline::check_unit(v)?;
    }
    let w = 4.0 * std::f64::consts::PI;
    Ok((w * x[0]).sin() * (w * x[1]).sin())
}

/// Fresh model for `name`, initialized from `seed` with its default scheme.
pub fn build_model(name: ModelName, cfg: &ExperimentConfig, seed: u64) -> Result<AnyModel> {
    let arch = name.architecture(cfg);
    init_model(&InitSpec::default_for(&arch, seed), &arch)
}

fn init_seed(cfg: &ExperimentConfig, name: ModelName) -> u64 {
    derive_seed(cfg.master_seed, Stream::Init, name.index())
}

/// Shuffle seed for one model's training run; `task` is 0 for joint training.
fn shuffle_seed(cfg: &ExperimentConfig, name: ModelName, task: usize) -> u64 {
    derive_seed(
        derive_seed(cfg.master_seed, Stream::Shuffle, name.index()),
        Stream::Shuffle,
        task as u64,
    )
}

fn train_config(cfg: &ExperimentConfig, shuffle_seed: u64) -> TrainConfig {
    TrainConfig {
        epochs: cfg.epochs,
        batch_size: cfg.batch,
        loss: LossKind::Mae,
        shuffle_seed,
    }
}

/// Uniform test set shared by every experiment with the same master seed.
pub fn test_set(cfg: &ExperimentConfig) -> Result<Dataset> {
    let mut rng = stream_rng(cfg.master_seed, Stream::TestData, 0);
    Dataset::labeled(PointSet::uniform(&mut rng, 2, cfg.n_test), target_2d)
}

pub fn train_set(cfg: &ExperimentConfig) -> Result<Dataset> {
    let mut rng = stream_rng(cfg.master_seed, Stream::TrainData, 0);
    Dataset::labeled(PointSet::uniform(&mut rng, 2, cfg.n_train), target_2d)
}

pub fn partition_plan(cfg: &ExperimentConfig) -> Result<PartitionPlan> {
    let mut rng = stream_rng(cfg.master_seed, Stream::TaskOrder, 0);
    PartitionPlan::shuffled(cfg.partitions, &mut rng)
}

/// Mc settings of the interference experiment.
pub fn mc_config(cfg: &ExperimentConfig) -> McConfig {
    McConfig {
        n_samples: cfg.mc_samples,
        n_trials: cfg.trials,
        sample_seed: derive_seed(cfg.master_seed, Stream::McSamples, 0),
        trial_seed: derive_seed(cfg.master_seed, Stream::TrialData, 0),
        lr: cfg.lr,
    }
}

/// Effective configuration, derived seeds and (for sequential runs) the task order.
pub fn manifest(cfg: &ExperimentConfig) -> Result<String> {
    cfg.validate()?;
    let mut out = cfg.manifest();
    for m in &cfg.models {
        let _ = writeln!(out, "seed.init.{m} = {}", init_seed(cfg, *m));
    }
    match cfg.experiment {
        Experiment::Perturbation => {
            let mc = mc_config(cfg);
            let _ = writeln!(out, "seed.trials = {}", mc.trial_seed);
            let _ = writeln!(out, "seed.mc_samples = {}", mc.sample_seed);
        }
        Experiment::Regression => {
            let _ = writeln!(out, "seed.train = {}", derive_seed(cfg.master_seed, Stream::TrainData, 0));
            let _ = writeln!(out, "seed.test = {}", derive_seed(cfg.master_seed, Stream::TestData, 0));
        }
        Experiment::Sequential | Experiment::Rehearsal => {
            let plan = partition_plan(cfg)?;
            let order: Vec<String> = plan.order().iter().map(|c| c.to_string()).collect();
            let _ = writeln!(out, "task_order = {}", order.join(","));
            let _ = writeln!(out, "seed.test = {}", derive_seed(cfg.master_seed, Stream::TestData, 0));
        }
    }
    Ok(out)
}

/// Runs the single-update trials for each selected model.
pub fn run_perturbation(cfg: &ExperimentConfig) -> Result<Vec<TrialReport>> {
    cfg.validate()?;
    let mc = mc_config(cfg);
    let specs = DistalSpec::default_specs();
    cfg.models
        .iter()
        .map(|&name| run_interference_trials(name.as_str(), |seed| build_model(name, cfg, seed), &mc, &specs))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionResult {
    pub model: ModelName,
    pub train_mae: f64,
    pub test_mae: f64,
    pub heatmap: Heatmap,
}

/// Joint training on `n_train` uniform points; models run in parallel.
pub fn run_regression(cfg: &ExperimentConfig) -> Result<Vec<RegressionResult>> {
    cfg.validate()?;
    let train = train_set(cfg)?;
    let test = test_set(cfg)?;
    cfg.models
        .par_iter()
        .map(|&name| {
            let mut model = build_model(name, cfg, init_seed(cfg, name))?;
            let mut state = AdamState::new(model.param_count(), cfg.lr);
            train_epochs(&mut model, &train, &train_config(cfg, shuffle_seed(cfg, name, 0)), &mut state)?;
            Ok(RegressionResult {
                model: name,
                train_mae: mean_abs_error(&model, &train)?,
                test_mae: mean_abs_error(&model, &test)?,
                heatmap: Heatmap::render(&model, cfg.heatmap_resolution)?,
            })
        })
        .collect()
}

/// Training data of the task at position `task` in the plan's order:
/// true-target points inside the cell, followed, when `snapshot` is given,
/// by uniform rehearsal points labeled by the snapshot.
pub fn task_dataset<M: Model + ?Sized>(
    cfg: &ExperimentConfig,
    plan: &PartitionPlan,
    task: usize,
    snapshot: Option<&M>,
) -> Result<Dataset> {
    let cell = plan.order()[task];
    let mut rng = stream_rng(cfg.master_seed, Stream::TaskData, task as u64);
    let inputs = plan.sample_cell(cell, cfg.points_per_partition, &mut rng);
    let mut data = Dataset::labeled(inputs, target_2d)?;
    if let Some(snap) = snapshot {
        let mut rrng = stream_rng(cfg.master_seed, Stream::Rehearsal, task as u64);
        let u = PointSet::uniform(&mut rrng, 2, cfg.rehearsal_points);
        data.append(&Dataset::labeled(u, |p| snap.forward(p))?);
    }
    Ok(data)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaskRecord {
    pub task: usize,
    pub cell: usize,
    /// Global test MAE right after this task.
    pub test_mae: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequentialResult {
    pub model: ModelName,
    pub final_test_mae: f64,
    pub heatmap: Heatmap,
    pub trace: Vec<TaskRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequentialRun {
    pub plan: PartitionPlan,
    pub rehearsal: bool,
    pub results: Vec<SequentialResult>,
}

/// Sequential training of one model. `on_task` sees the pre-task snapshot and
/// the task's data before each task is trained.
pub fn run_sequential_model<F>(
    name: ModelName,
    cfg: &ExperimentConfig,
    plan: &PartitionPlan,
    test: &Dataset,
    rehearsal: bool,
    mut on_task: F,
) -> Result<SequentialResult>
where
    F: FnMut(usize, &AnyModel, &Dataset),
{
    let mut model = build_model(name, cfg, init_seed(cfg, name))?;
    let mut trace = Vec::with_capacity(plan.cell_count());
    for task in 0..plan.cell_count() {
        let snapshot = model.clone();
        let data = task_dataset(cfg, plan, task, rehearsal.then_some(&snapshot))?;
        on_task(task, &snapshot, &data);
        let mut state = AdamState::new(model.param_count(), cfg.lr);
        train_epochs(&mut model, &data, &train_config(cfg, shuffle_seed(cfg, name, task)), &mut state)?;
        trace.push(TaskRecord {
            task,
            cell: plan.order()[task],
            test_mae: mean_abs_error(&model, test)?,
        });
    }
    Ok(SequentialResult {
        model: name,
        final_test_mae: trace.last().map_or(f64::NAN, |r| r.test_mae),
        heatmap: Heatmap::render(&model, cfg.heatmap_resolution)?,
        trace,
    })
}

/// One task per grid cell in the seeded order; models run in parallel.
pub fn run_sequential(cfg: &ExperimentConfig, rehearsal: bool) -> Result<SequentialRun> {
    cfg.validate()?;
    let plan = partition_plan(cfg)?;
    let test = test_set(cfg)?;
    let results = cfg
        .models
        .par_iter()
        .map(|&name| run_sequential_model(name, cfg, &plan, &test, rehearsal, |_, _, _| {}))
        .collect::<Result<Vec<_>>>()?;
    Ok(SequentialRun {
        plan,
        rehearsal,
        results,
    })
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    Ok(BufWriter::new(fs::File::create(path)?))
}

/// Writes `stem.csv` and `stem.pgm`.
pub fn emit_heatmap(h: &Heatmap, dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
    let csv = dir.join(format!("{stem}.csv"));
    let pgm = dir.join(format!("{stem}.pgm"));
    let mut w = create(&csv)?;
    h.write_csv(&mut w)?;
    w.flush()?;
    let mut w = create(&pgm)?;
    h.write_pgm(&mut w)?;
    w.flush()?;
    Ok(vec![csv, pgm])
}

pub fn write_regression_csv<W: Write>(results: &[RegressionResult], mut out: W) -> Result<()> {
    writeln!(out, "model,train_mae,test_mae")?;
    for r in results {
        writeln!(out, "{},{:?},{:?}", r.model, r.train_mae, r.test_mae)?;
    }
    Ok(())
}

pub fn write_sequential_csv<W: Write>(run: &SequentialRun, mut out: W) -> Result<()> {
    writeln!(out, "model,final_test_mae")?;
    for r in &run.results {
        writeln!(out, "{},{:?}", r.model, r.final_test_mae)?;
    }
    Ok(())
}

pub fn write_trace_csv<W: Write>(run: &SequentialRun, mut out: W) -> Result<()> {
    writeln!(out, "model,task,cell,test_mae")?;
    for r in &run.results {
        for t in &r.trace {
            writeln!(out, "{},{},{},{:?}", r.model, t.task, t.cell, t.test_mae)?;
        }
    }
    Ok(())
}

/// Runs the configured experiment and writes `manifest.txt`, its CSV tables
/// and heatmaps into `dir`. Returns the written paths.
pub fn run_to_dir(cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    let manifest_text = manifest(cfg)?;
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let path = dir.join("manifest.txt");
    fs::write(&path, &manifest_text)?;
    written.push(path);

    let exp = cfg.experiment.name();
    match cfg.experiment {
        Experiment::Perturbation => {
            let reports = run_perturbation(cfg)?;
            let path = dir.join("perturbation.csv");
            let mut w = create(&path)?;
            write_reports_csv(&reports, &mut w)?;
            w.flush()?;
            written.push(path);
        }
        Experiment::Regression => {
            let results = run_regression(cfg)?;
            let path = dir.join("regression.csv");
            let mut w = create(&path)?;
            write_regression_csv(&results, &mut w)?;
            w.flush()?;
            written.push(path);
            for r in &results {
                written.extend(emit_heatmap(&r.heatmap, dir, &format!("heatmap_{exp}_{}", r.model))?);
            }
            let target = Heatmap::from_fn(cfg.heatmap_resolution, target_2d)?;
            written.extend(emit_heatmap(&target, dir, "heatmap_target")?);
        }
        Experiment::Sequential | Experiment::Rehearsal => {
            let run = run_sequential(cfg, cfg.experiment == Experiment::Rehearsal)?;
            let path = dir.join(format!("{exp}.csv"));
            let mut w = create(&path)?;
            write_sequential_csv(&run, &mut w)?;
            w.flush()?;
            written.push(path);
            let path = dir.join(format!("{exp}_trace.csv"));
            let mut w = create(&path)?;
            write_trace_csv(&run, &mut w)?;
            w.flush()?;
            written.push(path);
            for r in &run.results {
                written.extend(emit_heatmap(&r.heatmap, dir, &format!("heatmap_{exp}_{}", r.model))?);
            }
        }
    }
    Ok(written)
}
