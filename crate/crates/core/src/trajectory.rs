//! Timed multi-cycle jointspace trajectories, pressure mapping, smoothing and
//! file export.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::{JointVector, RobotConfig, JOINT_COUNT};
use crate::error::{Error, Result};
use crate::fitter::FitResult;
use crate::gait::{GaitKind, GaitSpec};

/// Relative tolerance on the uniform time step.
const STEP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectorySample {
    pub t: f64,
    pub q_m: [f64; JOINT_COUNT],
    pub p_bar: [f64; JOINT_COUNT],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Trajectory {
    pub gait: GaitKind,
    pub period_s: f64,
    pub cycles: usize,
    pub amplitude_scale: f64,
    #[serde(default)]
    pub config_digest: String,
    pub samples: Vec<TrajectorySample>,
}

/// Pressures for one joint vector plus saturation flags.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PressureCommand {
    pub pressures: [f64; JOINT_COUNT],
    /// Some requested pressure exceeded `pressure_max` and was clamped.
    pub clamped: bool,
    /// Some pressure is positive but below the actuator deadzone.
    pub in_deadzone: bool,
}

pub fn pressure_map(q: &JointVector, cfg: &RobotConfig) -> PressureCommand {
    let mut clamped = false;
    let mut in_deadzone = false;
    let pressures = q.0.map(|l| {
        let p = cfg.pressure_gain * l;
        clamped |= p > cfg.pressure_max;
        let p = p.clamp(0.0, cfg.pressure_max);
        in_deadzone |= p > 0.0 && p < cfg.deadzone;
        p
    });
    PressureCommand {
        pressures,
        clamped,
        in_deadzone,
    }
}

/// Index of the sample that replaces `k` when a cycle of `n` runs backwards in time.
fn reversed_index(k: usize, n: usize) -> usize {
    (n - k) % n
}

/// Tiles one fitted cycle `cycles` times at step `period / fits.len()`.
///
/// `fits` is an inward (or serpentine) cycle; for `RollOutward` each cycle is
/// played backwards in time, sample `k` taking the value of sample `-k mod N`.
pub fn build_trajectory(
    fits: &[FitResult],
    spec: &GaitSpec,
    cfg: &RobotConfig,
    cycles: usize,
) -> Result<Trajectory> {
    if fits.is_empty() || cycles == 0 {
        return Err(Error::InvalidArgument(
            "trajectory needs at least one fit and one cycle".into(),
        ));
    }
    let n = fits.len();
    let cycle: Vec<JointVector> = (0..n)
        .map(|k| {
            let src = if spec.kind == GaitKind::RollOutward {
                reversed_index(k, n)
            } else {
                k
            };
            fits[src].q
        })
        .collect();
    Ok(tile(
        &cycle,
        spec.kind,
        spec.period,
        spec.amplitude_scale,
        cfg,
        cycles,
    ))
}

fn tile(
    cycle: &[JointVector],
    gait: GaitKind,
    period: f64,
    amplitude_scale: f64,
    cfg: &RobotConfig,
    cycles: usize,
) -> Trajectory {
    let n = cycle.len();
    let step = period / n as f64;
    let samples = (0..cycles * n)
        .map(|i| {
            let q = cycle[i % n];
            TrajectorySample {
                t: i as f64 * step,
                q_m: q.0,
                p_bar: pressure_map(&q, cfg).pressures,
            }
        })
        .collect();
    Trajectory {
        gait,
        period_s: period,
        cycles,
        amplitude_scale,
        config_digest: cfg.digest(),
        samples,
    }
}

impl Trajectory {
    pub fn samples_per_cycle(&self) -> usize {
        self.samples.len() / self.cycles.max(1)
    }

    fn cycle(&self) -> Vec<JointVector> {
        self.samples[..self.samples_per_cycle()]
            .iter()
            .map(|s| JointVector(s.q_m))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.cycles == 0
            || self.samples.is_empty()
            || !self.samples.len().is_multiple_of(self.cycles)
        {
            return Err(Error::InvalidArgument(format!(
                "{} samples do not split into {} cycles",
                self.samples.len(),
                self.cycles
            )));
        }
        if !(self.period_s > 0.0) {
            return Err(Error::InvalidArgument("period_s must be positive".into()));
        }
        let step = self.period_s / self.samples_per_cycle() as f64;
        for (i, w) in self.samples.windows(2).enumerate() {
            let dt = w[1].t - w[0].t;
            if !(dt > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "timestamps not strictly increasing at sample {}",
                    i + 1
                )));
            }
            if (dt - step).abs() > STEP_TOL * step {
                return Err(Error::InvalidArgument(format!(
                    "non-uniform time step {dt} at sample {} (expected {step})",
                    i + 1
                )));
            }
        }
        Ok(())
    }

    /// Checks `P = clamp(gain * l)` exactly and the pressure range at every sample.
    pub fn check_pressures(&self, cfg: &RobotConfig) -> bool {
        self.samples.iter().all(|s| {
            let expected = pressure_map(&JointVector(s.q_m), cfg).pressures;
            expected == s.p_bar && s.p_bar.iter().all(|p| (0.0..=cfg.pressure_max).contains(p))
        })
    }

    /// Plays every cycle backwards in time; swaps inward and outward rolling.
    pub fn reversed(&self) -> Trajectory {
        let n = self.samples_per_cycle();
        let mut out = self.clone();
        out.gait = self.gait.reversed();
        for c in 0..self.cycles {
            for k in 0..n {
                let src = &self.samples[c * n + reversed_index(k, n)];
                let dst = &mut out.samples[c * n + k];
                dst.q_m = src.q_m;
                dst.p_bar = src.p_bar;
            }
        }
        out
    }

    /// Circular moving average of each joint channel over the cycle, with
    /// pressures recomputed. `window` must be odd and no longer than a cycle.
    pub fn smooth(&self, window: usize, cfg: &RobotConfig) -> Result<Trajectory> {
        let n = self.samples_per_cycle();
        if window.is_multiple_of(2) || window > n {
            return Err(Error::InvalidArgument(format!(
                "smoothing window must be odd and at most {n}; got {window}"
            )));
        }
        if window == 1 {
            return Ok(self.clone());
        }
        let cycle = self.cycle();
        let half = (window / 2) as isize;
        let smoothed: Vec<JointVector> = (0..n as isize)
            .map(|k| {
                let mut acc = [0.0; JOINT_COUNT];
                for d in -half..=half {
                    let q = &cycle[(k + d).rem_euclid(n as isize) as usize];
                    for (a, v) in acc.iter_mut().zip(q.0) {
                        *a += v;
                    }
                }
                JointVector(acc.map(|a| a / window as f64))
            })
            .collect();
        let mut out = tile(
            &smoothed,
            self.gait,
            self.period_s,
            self.amplitude_scale,
            cfg,
            self.cycles,
        );
        out.config_digest = self.config_digest.clone();
        for (o, s) in out.samples.iter_mut().zip(&self.samples) {
            o.t = s.t;
        }
        Ok(out)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trajectory serializes")
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let traj: Trajectory = serde_json::from_str(s)?;
        traj.validate()?;
        Ok(traj)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{}", csv_header())?;
        for s in &self.samples {
            let mut fields = Vec::with_capacity(1 + 2 * JOINT_COUNT);
            fields.push(sig9(s.t));
            fields.extend(s.q_m.iter().map(|v| sig9(*v)));
            fields.extend(s.p_bar.iter().map(|v| sig9(*v)));
            writeln!(w, "{}", fields.join(","))?;
        }
        Ok(())
    }

    pub fn export(&self, path: impl AsRef<Path>, format: ExportFormat) -> Result<()> {
        let path = path.as_ref();
        let io = |e| Error::io(path, e);
        let mut file = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
        match format {
            ExportFormat::Json => {
                file.write_all(self.to_json().as_bytes()).map_err(io)?;
                file.write_all(b"\n").map_err(io)?;
            }
            ExportFormat::Csv => self.write_csv(&mut file).map_err(io)?,
        }
        file.flush().map_err(io)
    }

    /// Reads a JSON trajectory file.
    pub fn import(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let traj: Trajectory = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            message: e.to_string(),
        })?;
        traj.validate().map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            message: e.to_string(),
        })?;
        Ok(traj)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Json,
    Csv,
}

impl ExportFormat {
    pub fn from_path(path: &Path) -> Result<Self> {
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Ok(ExportFormat::Json),
            Some("csv") => Ok(ExportFormat::Csv),
            _ => Err(Error::InvalidArgument(format!(
                "cannot infer format of {}; use .json or .csv",
                path.display()
            ))),
        }
    }
}

pub fn csv_header() -> String {
    let mut cols = vec!["t_s".to_string()];
    for prefix in ["l", "p"] {
        let unit = if prefix == "l" { "m" } else { "bar" };
        for i in 1..=3 {
            for j in 1..=3 {
                cols.push(format!("{prefix}{i}{j}_{unit}"));
            }
        }
    }
    cols.join(",")
}

/// Shortest decimal form of `v` rounded to nine significant digits.
fn sig9(v: f64) -> String {
    let rounded: f64 = format!("{v:.8e}").parse().expect("float round trip");
    format!("{rounded}")
}

/// Reads CSV trajectory rows, checking the header and strictly increasing time.
pub fn read_csv_samples(path: impl AsRef<Path>) -> Result<Vec<TrajectorySample>> {
    let path = path.as_ref();
    let parse_err = |line: usize, message: String| Error::Parse {
        path: PathBuf::from(path),
        line,
        message,
    };
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    if lines.next() != Some(csv_header().as_str()) {
        return Err(parse_err(1, "unexpected header".into()));
    }
    let mut out: Vec<TrajectorySample> = Vec::new();
    for (idx, line) in lines.enumerate() {
        let lineno = idx + 2;
        if line.trim().is_empty() {
            continue;
        }
        let values = line
            .split(',')
            .enumerate()
            .map(|(col, f)| {
                f.trim().parse::<f64>().map_err(|_| {
                    parse_err(lineno, format!("field {} is not a number: '{f}'", col + 1))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        if values.len() != 1 + 2 * JOINT_COUNT {
            return Err(parse_err(
                lineno,
                format!(
                    "expected {} fields, got {}",
                    1 + 2 * JOINT_COUNT,
                    values.len()
                ),
            ));
        }
        let sample = TrajectorySample {
            t: values[0],
            q_m: std::array::from_fn(|i| values[1 + i]),
            p_bar: std::array::from_fn(|i| values[1 + JOINT_COUNT + i]),
        };
        if let Some(prev) = out.last() {
            if !(sample.t > prev.t) {
                return Err(parse_err(
                    lineno,
                    "field t_s: timestamps must increase".into(),
                ));
            }
        }
        out.push(sample);
    }
    Ok(out)
}
