//! Fitting the robot backbone to gait shapes.
//!
//! The cost of a joint vector against a shape is the sum of point distances
//! between the backbone at `xi_k = 3k/30` and the shape point `k`, plus
//! `lambda` times the summed squared extensions. Each start is minimized by
//! reweighted least squares: the point-distance sum is majorized by a
//! weighted sum of squares at the current iterate, and the surrogate is
//! lowered with box-constrained Levenberg-Marquardt. This keeps the
//! non-smooth distance sum decreasing monotonically.

use std::io::Write;

use nalgebra::{Point3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{JointVector, ModuleConfig, RobotConfig, JOINT_COUNT};
use crate::error::{Error, Result};
use crate::gait::{gait_shape_at, CurveShape, GaitSpec, SHAPE_POINTS};
use crate::kinematics::{arc_from_lengths, Chain};
use crate::optimize::{least_squares_box, LmSettings};
use crate::pose::Pose;

/// Distances below this are floored when building majorizer weights.
const WEIGHT_FLOOR: f64 = 1e-10;
const INNER_ITERATIONS: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitOptions {
    /// Weight of the squared-extension penalty.
    pub lambda: f64,
    pub max_restarts: usize,
    /// Levenberg-Marquardt iterations per start.
    pub max_iterations: usize,
    /// A fit converges when its mean point distance is at most this (m).
    pub residual_accept: f64,
    pub seed: u64,
    /// Cold-start all cycle samples concurrently instead of warm-starting.
    pub parallel: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            max_restarts: 10,
            max_iterations: 2000,
            residual_accept: 0.01,
            seed: 0,
            parallel: false,
        }
    }
}

impl FitOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) || self.max_restarts < 1 || !(self.residual_accept > 0.0) {
            return Err(Error::InvalidArgument(
                "fit options need lambda >= 0, max_restarts >= 1, residual_accept > 0".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub q: JointVector,
    /// Mean point distance (m).
    pub residual_mean: f64,
    /// Largest point distance (m).
    pub residual_max: f64,
    /// Sum of squared extensions (m²).
    pub extension_penalty: f64,
    pub cost: f64,
    pub converged: bool,
    pub restarts_used: usize,
    /// Joint values were interpolated from neighbouring converged samples.
    pub repaired: bool,
}

fn check_count(shape: &CurveShape) -> Result<()> {
    if shape.len() != SHAPE_POINTS {
        return Err(Error::PointCountMismatch {
            shape: shape.len(),
            backbone: SHAPE_POINTS,
        });
    }
    Ok(())
}

/// Shape-matching cost with the base pose fixed at identity.
pub fn cost(q: &JointVector, shape: &CurveShape, cfg: &RobotConfig, lambda: f64) -> Result<f64> {
    check_count(shape)?;
    q.validate(cfg)?;
    let pts = Chain::new_unchecked(&Pose::identity(), q, cfg).sample(SHAPE_POINTS);
    let distance: f64 = pts
        .iter()
        .zip(&shape.points)
        .map(|(p, f)| (p - f).norm())
        .sum();
    Ok(distance + lambda * q.sum_of_squares())
}

struct Problem<'a, M> {
    model: M,
    targets: &'a [Point3<f64>],
    lower: Vec<f64>,
    upper: Vec<f64>,
    lambda: f64,
}

#[derive(Debug, Clone)]
struct Attempt {
    x: Vec<f64>,
    cost: f64,
    mean: f64,
    max: f64,
}

impl<M: Fn(&[f64], &mut Vec<Point3<f64>>)> Problem<'_, M> {
    fn distances(&self, x: &[f64], buf: &mut Vec<Point3<f64>>) -> Vec<f64> {
        (self.model)(x, buf);
        buf.iter()
            .zip(self.targets)
            .map(|(p, f)| (p - f).norm())
            .collect()
    }

    fn evaluate(&self, x: &[f64], buf: &mut Vec<Point3<f64>>) -> Attempt {
        let d = self.distances(x, buf);
        let sum: f64 = d.iter().sum();
        let penalty: f64 = x.iter().map(|v| v * v).sum();
        Attempt {
            x: x.to_vec(),
            cost: sum + self.lambda * penalty,
            mean: sum / d.len() as f64,
            max: d.iter().cloned().fold(0.0, f64::max),
        }
    }

    /// Majorize-minimize descent from `x0`.
    fn descend(&self, x0: &[f64], budget: usize) -> Attempt {
        let mut buf = Vec::with_capacity(self.targets.len());
        let mut x: Vec<f64> = x0
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&v, (&lo, &hi))| v.clamp(lo, hi))
            .collect();
        let mut best = self.evaluate(&x, &mut buf);
        let mut used = 0;
        let penalty_scale = (2.0 * self.lambda).sqrt();
        while used < budget {
            let weights: Vec<f64> = self
                .distances(&x, &mut buf)
                .iter()
                .map(|d| 1.0 / d.max(WEIGHT_FLOOR).sqrt())
                .collect();
            let settings = LmSettings {
                max_iterations: INNER_ITERATIONS.min(budget - used),
                ..LmSettings::default()
            };
            let report = least_squares_box(
                |x, r| {
                    (self.model)(x, &mut buf);
                    r.clear();
                    for ((p, f), w) in buf.iter().zip(self.targets).zip(&weights) {
                        let e: Vector3<f64> = (p - f) * *w;
                        r.extend_from_slice(e.as_slice());
                    }
                    r.extend(x.iter().map(|v| penalty_scale * v));
                },
                &mut x,
                &self.lower,
                &self.upper,
                &settings,
            );
            used += report.iterations;
            let now = self.evaluate(&x, &mut buf);
            let improvement = best.cost - now.cost;
            if now.cost < best.cost {
                best = now;
            }
            if improvement <= 1e-13 * best.cost.max(1e-12) || report.stalled {
                break;
            }
        }
        best
    }
}

struct Search {
    best: Attempt,
    restarts_used: usize,
}

fn search<M: Fn(&[f64], &mut Vec<Point3<f64>>)>(
    problem: &Problem<'_, M>,
    opts: &FitOptions,
    warm_start: Option<&[f64]>,
    rng: &mut ChaCha8Rng,
) -> Search {
    let mut best: Option<Attempt> = None;
    let mut restarts_used = 0;
    let accept = |a: &Attempt| a.mean <= opts.residual_accept;
    if let Some(w) = warm_start {
        let a = problem.descend(w, opts.max_iterations);
        if accept(&a) {
            return Search {
                best: a,
                restarts_used,
            };
        }
        best = Some(a);
    }
    while restarts_used < opts.max_restarts {
        restarts_used += 1;
        let x0: Vec<f64> = problem
            .lower
            .iter()
            .zip(&problem.upper)
            .map(|(&lo, &hi)| rng.random_range(lo..=hi))
            .collect();
        let a = problem.descend(&x0, opts.max_iterations);
        let better = best.as_ref().is_none_or(|b| a.cost < b.cost);
        let done = accept(&a);
        if better {
            best = Some(a);
        }
        if done {
            break;
        }
    }
    Search {
        best: best.expect("at least one start"),
        restarts_used,
    }
}

fn robot_problem<'a>(
    shape: &'a CurveShape,
    cfg: &'a RobotConfig,
    lambda: f64,
) -> Problem<'a, impl Fn(&[f64], &mut Vec<Point3<f64>>) + 'a> {
    let upper: Vec<f64> = (0..JOINT_COUNT).map(|i| cfg.modules[i / 3].l_max).collect();
    Problem {
        model: move |x: &[f64], out: &mut Vec<Point3<f64>>| {
            let q = JointVector::from_slice(x).expect("nine joints");
            Chain::new_unchecked(&Pose::identity(), &q, cfg).sample_into(SHAPE_POINTS, out);
        },
        targets: &shape.points,
        lower: vec![0.0; JOINT_COUNT],
        upper,
        lambda,
    }
}

fn fit_shape_with(
    shape: &CurveShape,
    cfg: &RobotConfig,
    opts: &FitOptions,
    warm_start: Option<&JointVector>,
    rng: &mut ChaCha8Rng,
) -> FitResult {
    let problem = robot_problem(shape, cfg, opts.lambda);
    let found = search(&problem, opts, warm_start.map(|w| w.as_slice()), rng);
    let q = JointVector::from_slice(&found.best.x).expect("nine joints");
    FitResult {
        q,
        residual_mean: found.best.mean,
        residual_max: found.best.max,
        extension_penalty: q.sum_of_squares(),
        cost: found.best.cost,
        converged: found.best.mean <= opts.residual_accept,
        restarts_used: found.restarts_used,
        repaired: false,
    }
}

fn sample_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Fits the full robot to `shape` within actuator bounds. Tries `warm_start`
/// first, then seeded random starts until one converges or the restart budget
/// is spent; the best start is returned either way.
pub fn fit_shape(
    shape: &CurveShape,
    cfg: &RobotConfig,
    opts: &FitOptions,
    warm_start: Option<&JointVector>,
) -> Result<FitResult> {
    opts.validate()?;
    check_count(shape)?;
    if let Some(w) = warm_start {
        w.validate(cfg)?;
    }
    Ok(fit_shape_with(
        shape,
        cfg,
        opts,
        warm_start,
        &mut sample_rng(opts.seed, 0),
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModuleFit {
    pub q: [f64; 3],
    pub residual_mean: f64,
    pub residual_max: f64,
    pub converged: bool,
}

/// Fits one module's neutral axis to `shape`, pairing point `k` of `n` with
/// `xi = k / (n - 1)`.
pub fn fit_module(
    shape: &CurveShape,
    module: &ModuleConfig,
    opts: &FitOptions,
) -> Result<ModuleFit> {
    opts.validate()?;
    module.validate()?;
    let n = shape.len();
    let problem = Problem {
        model: |x: &[f64], out: &mut Vec<Point3<f64>>| {
            let arc = arc_from_lengths([x[0], x[1], x[2]], module).expect("positive lengths");
            out.clear();
            out.extend(
                (0..n).map(|k| Point3::from(arc.pose_at(k as f64 / (n - 1) as f64).translation)),
            );
        },
        targets: &shape.points,
        lower: vec![0.0; 3],
        upper: vec![module.l_max; 3],
        lambda: opts.lambda,
    };
    let found = search(&problem, opts, None, &mut sample_rng(opts.seed, 0));
    Ok(ModuleFit {
        q: [found.best.x[0], found.best.x[1], found.best.x[2]],
        residual_mean: found.best.mean,
        residual_max: found.best.max,
        converged: found.best.mean <= opts.residual_accept,
    })
}

/// Fits every sample of one gait cycle, then replaces failed samples by
/// interpolating the nearest converged neighbours around the cycle.
pub fn fit_cycle(spec: &GaitSpec, cfg: &RobotConfig, opts: &FitOptions) -> Result<Vec<FitResult>> {
    opts.validate()?;
    let n = spec.samples_per_cycle;
    let shapes = (0..n)
        .map(|k| gait_shape_at(k as f64 / n as f64, spec, cfg))
        .collect::<Result<Vec<_>>>()?;

    let mut fits: Vec<FitResult> = if opts.parallel {
        shapes
            .par_iter()
            .enumerate()
            .map(|(k, shape)| {
                fit_shape_with(shape, cfg, opts, None, &mut sample_rng(opts.seed, k as u64))
            })
            .collect()
    } else {
        let mut out: Vec<FitResult> = Vec::with_capacity(n);
        for (k, shape) in shapes.iter().enumerate() {
            let warm = out.last().map(|f| f.q);
            let mut rng = sample_rng(opts.seed, k as u64);
            out.push(fit_shape_with(shape, cfg, opts, warm.as_ref(), &mut rng));
        }
        out
    };

    let converged: Vec<usize> = (0..n).filter(|&k| fits[k].converged).collect();
    if 2 * converged.len() < n {
        return Err(Error::TooFewConverged {
            converged: converged.len(),
            total: n,
        });
    }
    repair(&mut fits, &converged);
    Ok(fits)
}

fn repair(fits: &mut [FitResult], converged: &[usize]) {
    let n = fits.len();
    for k in 0..n {
        if fits[k].converged {
            continue;
        }
        let prev = (1..n).map(|d| (k + n - d) % n).find(|i| fits[*i].converged);
        let next = (1..n).map(|d| (k + d) % n).find(|i| fits[*i].converged);
        let (Some(p), Some(nx)) = (prev, next) else {
            continue;
        };
        let dp = ((k + n - p) % n) as f64;
        let dn = ((nx + n - k) % n) as f64;
        let w = dp / (dp + dn);
        let qp = fits[p].q;
        let qn = fits[nx].q;
        let q = JointVector(std::array::from_fn(|i| (1.0 - w) * qp.0[i] + w * qn.0[i]));
        fits[k].q = q;
        fits[k].extension_penalty = q.sum_of_squares();
        fits[k].repaired = true;
    }
    debug_assert!(converged.iter().all(|&k| !fits[k].repaired));
}

/// Per-sample diagnostics as CSV.
pub fn write_diagnostics<W: Write>(fits: &[FitResult], mut w: W) -> std::io::Result<()> {
    writeln!(w, "sample,residual_mean,residual_max,restarts,converged")?;
    for (k, f) in fits.iter().enumerate() {
        writeln!(
            w,
            "{k},{},{},{},{}",
            f.residual_mean, f.residual_max, f.restarts_used, f.converged
        )?;
    }
    Ok(())
}
