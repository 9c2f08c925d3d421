//! Structural property checks over a grid of model sizes.
//!
//! These run inside the library so that the CLI `selftest` and the test
//! suites exercise the same code. Each check reports how many cases it
//! examined and the first violation it found.

use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::models::{AnyModel, Architecture, Model};
use crate::rng::{derive_seed, stream_rng, Stream};
use crate::sparse::SparseGrad;
use crate::spline::{basis_count, ZDensitySpline};

#[derive(Debug, Clone, PartialEq)]
pub struct PropConfig {
    pub zs: Vec<usize>,
    pub ns: Vec<usize>,
    pub ks: Vec<usize>,
    /// Random points per model instance, in addition to corners and edges.
    pub points: usize,
    /// Random (parameters, input) draws per variant for the gradient check.
    pub fd_configs: usize,
    pub seed: u64,
}

impl Default for PropConfig {
    fn default() -> Self {
        Self {
            zs: vec![1, 5, 20],
            ns: vec![1, 2, 3],
            ks: vec![1, 6],
            points: 10_000,
            fd_configs: 10,
            seed: 0,
        }
    }
}

/// Outcome of one named check.
#[derive(Debug, Clone, PartialEq)]
pub struct PropCheck {
    pub name: String,
    pub cases: usize,
    /// First violation, if any.
    pub failure: Option<String>,
}

impl PropCheck {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }
}

impl std::fmt::Display for PropCheck {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.failure {
            None => write!(f, "ok    {} ({} cases)", self.name, self.cases),
            Some(e) => write!(f, "FAIL  {} ({} cases): {e}", self.name, self.cases),
        }
    }
}

/// Collects cases for one check, remembering the first failure.
struct Tally {
    name: String,
    cases: usize,
    failure: Option<String>,
}

impl Tally {
    fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            cases: 0,
            failure: None,
        }
    }

    fn check(&mut self, ok: bool, describe: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok && self.failure.is_none() {
            self.failure = Some(describe());
        }
    }

    fn error(&mut self, e: crate::Error) {
        self.check(false, || format!("error: {e}"));
    }

    fn finish(self) -> PropCheck {
        PropCheck {
            name: self.name,
            cases: self.cases,
            failure: self.failure,
        }
    }
}

/// Random points followed by all corners and edge midpoints of the cube.
fn probe_points(rng: &mut ChaCha8Rng, n: usize, count: usize) -> Vec<Vec<f64>> {
    let mut pts: Vec<Vec<f64>> = (0..count).map(|_| (0..n).map(|_| rng.random()).collect()).collect();
    // every point of {0, 0.5, 1}^n covers corners and edge midpoints
    let total = 3usize.pow(n as u32);
    for mut code in 0..total {
        let mut p = Vec::with_capacity(n);
        for _ in 0..n {
            p.push([0.0, 0.5, 1.0][code % 3]);
            code /= 3;
        }
        pts.push(p);
    }
    pts
}

/// A partner of `x` whose every coordinate differs by more than `gap`, if one exists.
fn far_in_every_coord(rng: &mut ChaCha8Rng, x: &[f64], gap: f64) -> Option<Vec<f64>> {
    x.iter()
        .map(|&xi| {
            // admissible intervals [0, xi - gap) and (xi + gap, 1]
            let left = (xi - gap).max(0.0);
            let right = (1.0 - (xi + gap)).max(0.0);
            if left + right <= 0.0 {
                return None;
            }
            for _ in 0..64 {
                let u: f64 = rng.random::<f64>() * (left + right);
                let y = if u < left { u } else { xi + gap + (u - left) };
                if (y - xi).abs() > gap && (0.0..=1.0).contains(&y) {
                    return Some(y);
                }
            }
            None
        })
        .collect()
}

/// A partner of `x` differing by more than `gap` in at least one coordinate.
fn far_in_some_coord(rng: &mut ChaCha8Rng, x: &[f64], gap: f64) -> Option<Vec<f64>> {
    let mut y: Vec<f64> = x.iter().map(|_| rng.random()).collect();
    let axis = rng.random_range(0..x.len());
    y[axis] = far_in_every_coord(rng, &x[axis..axis + 1], gap)?[0];
    Some(y)
}

fn random_model(arch: &Architecture, rng: &mut ChaCha8Rng, half_width: f64) -> Result<AnyModel> {
    let params = (0..arch.param_count())
        .map(|_| rng.random_range(-half_width..half_width))
        .collect();
    AnyModel::from_params(arch, params)
}

fn dense_dot(a: &SparseGrad, b: &SparseGrad) -> f64 {
    a.to_dense().iter().zip(b.to_dense()).map(|(x, y)| x * y).sum()
}

/// Sparsity, gradient L1 bounds and uniform trainability for one family.
fn structural<F>(
    cfg: &PropConfig,
    family: &str,
    archs: &[Architecture],
    nnz_bound: F,
    l1_bound: impl Fn(&Architecture, f64) -> f64,
) -> Vec<PropCheck>
where
    F: Fn(&Architecture) -> (usize, usize),
{
    let mut sparsity = Tally::new(format!("{family}: gradient sparsity"));
    let mut l1 = Tally::new(format!("{family}: gradient L1 bound"));
    let mut trainable = Tally::new(format!("{family}: uniform trainability"));
    for (ai, arch) in archs.iter().enumerate() {
        let mut rng = stream_rng(cfg.seed, Stream::Init, ai as u64 + 1000 * family.len() as u64);
        let model = match random_model(arch, &mut rng, 1.0) {
            Ok(m) => m,
            Err(e) => {
                sparsity.error(e);
                continue;
            }
        };
        let mu = model.params().iter().fold(0.0f64, |a, p| a.max(p.abs()));
        let (lo, hi) = nnz_bound(arch);
        let bound = l1_bound(arch, mu);
        for x in probe_points(&mut rng, arch.input_dim(), cfg.points) {
            let g = match model.param_grad(&x) {
                Ok(g) => g,
                Err(e) => {
                    sparsity.error(e);
                    continue;
                }
            };
            let nnz = g.nnz();
            sparsity.check(lo <= nnz && nnz <= hi, || {
                format!("{arch} at {x:?}: {nnz} non-zeros, expected {lo}..={hi}")
            });
            let norm = g.l1_norm();
            l1.check(norm < bound, || format!("{arch} at {x:?}: L1 {norm} >= {bound}"));
            trainable.check(!g.is_zero(), || format!("{arch} at {x:?}: zero gradient"));
        }
    }
    vec![sparsity.finish(), l1.finish(), trainable.finish()]
}

/// Disjoint gradient support for pairs that are distal under `partner`.
fn orthogonality<P>(cfg: &PropConfig, name: &str, archs: &[Architecture], partner: P) -> PropCheck
where
    P: Fn(&mut ChaCha8Rng, &[f64], f64) -> Option<Vec<f64>>,
{
    let mut t = Tally::new(name);
    for (ai, arch) in archs.iter().enumerate() {
        let z = match arch {
            Architecture::Lookup { z, .. }
            | Architecture::SplineAnn { z, .. }
            | Architecture::Abel { z, .. } => *z,
            Architecture::Relu { .. } => continue,
        };
        let mut rng = stream_rng(cfg.seed, Stream::TrialData, ai as u64 + 7919 * name.len() as u64);
        let model = match random_model(arch, &mut rng, 1.0) {
            Ok(m) => m,
            Err(e) => {
                t.error(e);
                continue;
            }
        };
        let gap = 1.0 / z as f64;
        for x in probe_points(&mut rng, arch.input_dim(), cfg.points) {
            // with z = 1 no pair in the unit cube is that far apart
            let Some(y) = partner(&mut rng, &x, gap) else { continue };
            match (model.param_grad(&x), model.param_grad(&y)) {
                (Ok(gx), Ok(gy)) => {
                    let dot = dense_dot(&gx, &gy);
                    t.check(gx.support_disjoint(&gy) && dot.to_bits() == 0, || {
                        format!("{arch}: {x:?} and {y:?} share support (dot {dot})")
                    });
                }
                (Err(e), _) | (_, Err(e)) => t.error(e),
            }
        }
    }
    t.finish()
}

/// Checks on the single-variable z-density spline.
fn spline_1d(cfg: &PropConfig) -> Vec<PropCheck> {
    let mut sparsity = Tally::new("spline: gradient sparsity");
    let mut l1 = Tally::new("spline: gradient L1 bound");
    let mut trainable = Tally::new("spline: uniform trainability");
    let mut ortho = Tally::new("spline: distal orthogonality");
    for &z in &cfg.zs {
        let mut rng = stream_rng(cfg.seed, Stream::Init, 77 + z as u64);
        let theta = (0..basis_count(z)).map(|_| rng.random_range(-1.0..1.0)).collect();
        let s = match ZDensitySpline::new(z, theta) {
            Ok(s) => s,
            Err(e) => {
                sparsity.error(e);
                continue;
            }
        };
        let gap = 1.0 / z as f64;
        for p in probe_points(&mut rng, 1, cfg.points) {
            let x = p[0];
            let Ok(g) = s.param_grad(x) else {
                sparsity.check(false, || format!("z={z}: gradient failed at {x}"));
                continue;
            };
            sparsity.check((3..=4).contains(&g.nnz()), || format!("z={z} x={x}: nnz {}", g.nnz()));
            let norm = g.l1_norm();
            l1.check(norm < 4.0 && (norm - 1.0).abs() < 1e-12, || {
                format!("z={z} x={x}: L1 {norm}")
            });
            trainable.check(!g.is_zero(), || format!("z={z} x={x}: zero gradient"));
            if let Some(y) = far_in_every_coord(&mut rng, &p, gap) {
                match s.param_grad(y[0]) {
                    Ok(gy) => ortho.check(
                        g.support_disjoint(&gy) && dense_dot(&g, &gy).to_bits() == 0,
                        || format!("z={z}: {x} and {} share support", y[0]),
                    ),
                    Err(e) => ortho.error(e),
                }
            }
        }
    }
    vec![sparsity.finish(), l1.finish(), trainable.finish(), ortho.finish()]
}

/// ABEL gradient L1 bound `4n + 8n·exp(4μn)·π²/6` for parameters bounded by `μ`.
pub fn abel_l1_bound(n: usize, mu: f64) -> f64 {
    let n = n as f64;
    4.0 * n + 8.0 * n * (4.0 * mu * n).exp() * PI * PI / 6.0
}

/// Sparsity, L1, trainability and distal orthogonality over the size grid.
pub fn structural_suite(cfg: &PropConfig) -> Vec<PropCheck> {
    let mut lookups = Vec::new();
    let mut anns = Vec::new();
    let mut abels = Vec::new();
    for &n in &cfg.ns {
        for &z in &cfg.zs {
            lookups.push(Architecture::Lookup { n, z });
            anns.push(Architecture::SplineAnn { n, z });
            for &k in &cfg.ks {
                abels.push(Architecture::Abel { n, z, k });
            }
        }
    }
    let mut out = spline_1d(cfg);
    out.extend(structural(cfg, "lookup", &lookups, |_| (1, 1), |_, _| 1.0 + 1e-12));
    out.extend(structural(
        cfg,
        "spline_ann",
        &anns,
        |a| (1, 4 * a.input_dim()),
        |a, _| 4.0 * a.input_dim() as f64,
    ));
    out.extend(structural(
        cfg,
        "abel",
        &abels,
        |a| match a {
            Architecture::Abel { n, k, .. } => (1, 4 * n * (2 * k + 1)),
            _ => unreachable!(),
        },
        |a, mu| abel_l1_bound(a.input_dim(), mu),
    ));
    out.push(orthogonality(cfg, "lookup: max-distal orthogonality", &lookups, far_in_some_coord));
    out.push(orthogonality(cfg, "spline_ann: min-distal orthogonality", &anns, far_in_every_coord));
    out.push(orthogonality(cfg, "abel: min-distal orthogonality", &abels, far_in_every_coord));
    out
}

/// Relative error used by the gradient check, with a floor on the scale.
pub fn fd_relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-3)
}

/// Step of the central differences.
pub const FD_STEP: f64 = 1e-5;

/// Architectures covered by the gradient check, cycled over configurations.
fn fd_variants() -> Vec<(&'static str, Vec<Architecture>)> {
    vec![
        (
            "lookup",
            vec![
                Architecture::Lookup { n: 2, z: 20 },
                Architecture::Lookup { n: 3, z: 5 },
                Architecture::Lookup { n: 1, z: 1 },
            ],
        ),
        (
            "spline_ann",
            vec![
                Architecture::SplineAnn { n: 2, z: 20 },
                Architecture::SplineAnn { n: 3, z: 5 },
                Architecture::SplineAnn { n: 1, z: 1 },
            ],
        ),
        (
            "abel",
            vec![
                Architecture::Abel { n: 2, z: 20, k: 6 },
                Architecture::Abel { n: 3, z: 5, k: 1 },
                Architecture::Abel { n: 1, z: 1, k: 6 },
            ],
        ),
        (
            "wide_relu",
            vec![Architecture::Relu {
                layer_sizes: vec![2, 1000, 1],
            }],
        ),
        (
            "deep_relu",
            vec![Architecture::Relu {
                layer_sizes: vec![2, 16, 16, 16, 16, 16, 16, 16, 16, 1],
            }],
        ),
    ]
}

/// Closest distance of any ReLU pre-activation to the kink at 0.
fn kink_distance(model: &AnyModel, x: &[f64]) -> Result<f64> {
    match model {
        AnyModel::Relu(m) => Ok(m
            .pre_activations(x)?
            .iter()
            .flatten()
            .fold(f64::INFINITY, |a, p| a.min(p.abs()))),
        _ => Ok(f64::INFINITY),
    }
}

/// Compares `param_grad` and the training path `accumulate_grad` against
/// central finite differences on every parameter.
pub fn gradient_suite(cfg: &PropConfig) -> Vec<PropCheck> {
    let mut out = Vec::new();
    for (vi, (name, archs)) in fd_variants().into_iter().enumerate() {
        let mut t = Tally::new(format!("{name}: gradient vs finite differences"));
        for c in 0..cfg.fd_configs {
            let arch = &archs[c % archs.len()];
            let mut rng = stream_rng(derive_seed(cfg.seed, Stream::Init, vi as u64), Stream::TrialData, c as u64);
            if let Err(e) = fd_one(arch, &mut rng, &mut t) {
                t.error(e);
            }
        }
        out.push(t.finish());
    }
    // the 1-D spline is not a `Model`; check it directly
    let mut t = Tally::new("spline: gradient vs finite differences");
    for c in 0..cfg.fd_configs {
        let z = cfg.zs[c % cfg.zs.len()];
        let mut rng = stream_rng(cfg.seed, Stream::TrialData, 500 + c as u64);
        let theta: Vec<f64> = (0..basis_count(z)).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x: f64 = rng.random();
        let res = (|| -> Result<()> {
            let s = ZDensitySpline::new(z, theta.clone())?;
            let g = s.param_grad(x)?.to_dense();
            for (i, &gi) in g.iter().enumerate() {
                let mut hi = s.clone();
                hi.theta_mut()[i] += FD_STEP;
                let mut lo = s.clone();
                lo.theta_mut()[i] -= FD_STEP;
                let fd = (hi.forward(x)? - lo.forward(x)?) / (2.0 * FD_STEP);
                let err = fd_relative_error(gi, fd);
                t.check(err <= 1e-6, || format!("z={z} x={x} param {i}: {gi} vs {fd} (rel {err:e})"));
            }
            Ok(())
        })();
        if let Err(e) = res {
            t.error(e);
        }
    }
    out.push(t.finish());
    out
}

fn fd_one(arch: &Architecture, rng: &mut ChaCha8Rng, t: &mut Tally) -> Result<()> {
    let mut model = random_model(arch, rng, 0.5)?;
    let n = arch.input_dim();
    // keep every ReLU pre-activation away from the kink so that the
    // perturbed models stay on the same linear piece
    let mut x: Vec<f64> = (0..n).map(|_| rng.random()).collect();
    for _ in 0..1000 {
        if kink_distance(&model, &x)? > 1e-3 {
            break;
        }
        x = (0..n).map(|_| rng.random()).collect();
    }
    let g = model.param_grad(&x)?.to_dense();
    let mut acc = vec![0.0; g.len()];
    let y = model.accumulate_grad(&x, &|_| 1.0, &mut acc)?;
    t.check(y.to_bits() == model.forward(&x)?.to_bits(), || {
        format!("{arch}: accumulate_grad returned a different output")
    });
    for i in 0..g.len() {
        let orig = model.params()[i];
        model.params_mut()[i] = orig + FD_STEP;
        let up = model.forward(&x)?;
        model.params_mut()[i] = orig - FD_STEP;
        let down = model.forward(&x)?;
        model.params_mut()[i] = orig;
        let fd = (up - down) / (2.0 * FD_STEP);
        let err = fd_relative_error(g[i], fd).max(fd_relative_error(acc[i], fd));
        t.check(err <= 1e-6, || {
            format!("{arch} at {x:?}, param {i}: analytic {} / {} vs fd {fd} (rel {err:e})", g[i], acc[i])
        });
    }
    Ok(())
}

/// Everything `selftest` runs.
pub fn run_all(cfg: &PropConfig) -> Vec<PropCheck> {
    let mut out = structural_suite(cfg);
    out.extend(gradient_suite(cfg));
    out
}
