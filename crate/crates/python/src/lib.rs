//! Python bindings for the softsnake toolkit.

use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use softsnake_core::config::{BasePose, JointVector, RobotConfig};
use softsnake_core::error::Error;
use softsnake_core::fitter::{self, FitOptions};
use softsnake_core::gait::{self, GaitKind, GaitSpec};
use softsnake_core::kinematics::{self, ArcParams, Chain};
use softsnake_core::locomotion;
use softsnake_core::trajectory::{self, ExportFormat};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::TooFewConverged { .. } => PyRuntimeError::new_err(e.to_string()),
        Error::Io { .. } => PyOSError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn gait_kind(name: &str) -> PyResult<GaitKind> {
    name.parse::<GaitKind>().map_err(to_py)
}

fn joints(values: Vec<f64>) -> PyResult<JointVector> {
    JointVector::from_slice(&values).map_err(to_py)
}

fn base_pose(values: Option<Vec<f64>>) -> PyResult<BasePose> {
    match values.as_deref() {
        None => Ok(BasePose::identity()),
        Some(&[x, y, z, a, b, g]) => Ok(BasePose {
            xyz: [x, y, z],
            euler: [a, b, g],
        }),
        Some(v) => Err(PyValueError::new_err(format!(
            "base pose needs 6 values (x, y, z, alpha, beta, gamma), got {}",
            v.len()
        ))),
    }
}

fn config_or_default(config: Option<PyRef<'_, PyRobotConfig>>) -> RobotConfig {
    config.map(|c| c.inner.clone()).unwrap_or_default()
}

/// Robot geometry and actuation limits.
#[pyclass(name = "RobotConfig", module = "softsnake")]
struct PyRobotConfig {
    inner: RobotConfig,
}

#[pymethods]
impl PyRobotConfig {
    /// Prototype defaults.
    #[new]
    fn new() -> Self {
        Self {
            inner: RobotConfig::default(),
        }
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        RobotConfig::from_json_str(text)
            .map(|inner| Self { inner })
            .map_err(to_py)
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        RobotConfig::load(path)
            .map(|inner| Self { inner })
            .map_err(to_py)
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    fn digest(&self) -> String {
        self.inner.digest()
    }

    /// Straight-body length at zero extension (m).
    #[getter]
    fn nominal_length(&self) -> f64 {
        self.inner.nominal_length()
    }

    /// Highest curvature every module can reach (1/m).
    #[getter]
    fn max_curvature(&self) -> f64 {
        self.inner.max_curvature()
    }

    #[getter]
    fn body_radius(&self) -> f64 {
        self.inner.body_radius
    }

    fn __repr__(&self) -> String {
        format!("RobotConfig(digest={})", &self.inner.digest()[..12])
    }
}

/// Tip position (x, y, z) in metres.
#[pyfunction]
#[pyo3(signature = (joints, config=None, base=None))]
fn chain_tip(
    joints: Vec<f64>,
    config: Option<PyRef<'_, PyRobotConfig>>,
    base: Option<Vec<f64>>,
) -> PyResult<[f64; 3]> {
    let cfg = config_or_default(config);
    let chain = Chain::new(&base_pose(base)?, &self::joints(joints)?, &cfg).map_err(to_py)?;
    let t = chain.tip().translation;
    Ok([t.x, t.y, t.z])
}

/// `n` backbone points from base to tip, each `[x, y, z]`.
#[pyfunction]
#[pyo3(signature = (joints, n=31, config=None, base=None))]
fn sample_backbone(
    joints: Vec<f64>,
    n: usize,
    config: Option<PyRef<'_, PyRobotConfig>>,
    base: Option<Vec<f64>>,
) -> PyResult<Vec<[f64; 3]>> {
    let cfg = config_or_default(config);
    let points = kinematics::sample_backbone(&base_pose(base)?, &self::joints(joints)?, &cfg, n)
        .map_err(to_py)?;
    Ok(points.iter().map(|p| [p.x, p.y, p.z]).collect())
}

/// Arc parameters `(kappa, phi, s_c)` of one module from its three length changes.
#[pyfunction]
#[pyo3(signature = (lengths, module=0, config=None))]
fn arc_from_lengths(
    lengths: [f64; 3],
    module: usize,
    config: Option<PyRef<'_, PyRobotConfig>>,
) -> PyResult<(f64, f64, f64)> {
    let cfg = config_or_default(config);
    let m = cfg
        .modules
        .get(module)
        .ok_or_else(|| PyValueError::new_err(format!("module index {module} out of range")))?;
    let arc = kinematics::arc_from_lengths(lengths, m).map_err(to_py)?;
    Ok((arc.kappa, arc.phi, arc.s_c))
}

/// Absolute actuator lengths of one module bent along the given arc.
#[pyfunction]
#[pyo3(signature = (kappa, phi, s_c, module=0, config=None))]
fn lengths_from_arc(
    kappa: f64,
    phi: f64,
    s_c: f64,
    module: usize,
    config: Option<PyRef<'_, PyRobotConfig>>,
) -> PyResult<[f64; 3]> {
    let cfg = config_or_default(config);
    let m = cfg
        .modules
        .get(module)
        .ok_or_else(|| PyValueError::new_err(format!("module index {module} out of range")))?;
    let arc = ArcParams::new(kappa, phi, s_c).map_err(to_py)?;
    kinematics::lengths_from_arc(&arc, m).map_err(to_py)
}

/// Body-frame gait shape at cycle fraction `t`, as 31 `[x, y, z]` points.
#[pyfunction]
#[pyo3(signature = (gait, t, amplitude=1.0, config=None))]
fn gait_shape(
    gait: &str,
    t: f64,
    amplitude: f64,
    config: Option<PyRef<'_, PyRobotConfig>>,
) -> PyResult<Vec<[f64; 3]>> {
    let cfg = config_or_default(config);
    let spec = GaitSpec::with_amplitude(gait_kind(gait)?, amplitude, &cfg);
    spec.validate().map_err(to_py)?;
    let shape = gait::gait_shape_at(t, &spec, &cfg).map_err(to_py)?;
    Ok(shape.points.iter().map(|p| [p.x, p.y, p.z]).collect())
}

/// Outcome of fitting one gait sample.
#[pyclass(name = "FitResult", module = "softsnake", frozen, get_all)]
struct PyFitResult {
    q: Vec<f64>,
    residual_mean: f64,
    residual_max: f64,
    converged: bool,
    restarts_used: usize,
    repaired: bool,
}

#[pymethods]
impl PyFitResult {
    fn __repr__(&self) -> String {
        format!(
            "FitResult(residual_mean={:.3e}, converged={}, repaired={})",
            self.residual_mean, self.converged, self.repaired
        )
    }
}

fn fit_options(seed: u64, parallel: bool, lambda: f64, max_restarts: usize) -> FitOptions {
    FitOptions {
        seed,
        parallel,
        lambda,
        max_restarts,
        ..FitOptions::default()
    }
}

fn fit_spec(
    kind: GaitKind,
    amplitude: f64,
    samples: usize,
    period: f64,
    cfg: &RobotConfig,
) -> PyResult<GaitSpec> {
    let mut spec = GaitSpec::with_amplitude(kind, amplitude, cfg);
    spec.samples_per_cycle = samples;
    spec.period = period;
    spec.validate().map_err(to_py)?;
    Ok(spec)
}

/// Fits every sample of one gait cycle.
#[pyfunction]
#[pyo3(signature = (gait, amplitude=1.0, samples=32, seed=0, parallel=false, lam=1.0, max_restarts=10, config=None))]
#[allow(clippy::too_many_arguments)]
fn fit_cycle(
    py: Python<'_>,
    gait: &str,
    amplitude: f64,
    samples: usize,
    seed: u64,
    parallel: bool,
    lam: f64,
    max_restarts: usize,
    config: Option<PyRef<'_, PyRobotConfig>>,
) -> PyResult<Vec<PyFitResult>> {
    let cfg = config_or_default(config);
    let spec = fit_spec(gait_kind(gait)?, amplitude, samples, 1.0, &cfg)?;
    let opts = fit_options(seed, parallel, lam, max_restarts);
    let fits = py
        .detach(|| fitter::fit_cycle(&spec, &cfg, &opts))
        .map_err(to_py)?;
    Ok(fits
        .into_iter()
        .map(|f| PyFitResult {
            q: f.q.0.to_vec(),
            residual_mean: f.residual_mean,
            residual_max: f.residual_max,
            converged: f.converged,
            restarts_used: f.restarts_used,
            repaired: f.repaired,
        })
        .collect())
}

/// Timed jointspace and pressure trajectory.
#[pyclass(name = "Trajectory", module = "softsnake")]
struct PyTrajectory {
    inner: trajectory::Trajectory,
}

#[pymethods]
impl PyTrajectory {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        trajectory::Trajectory::from_json_str(text)
            .map(|inner| Self { inner })
            .map_err(to_py)
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        trajectory::Trajectory::import(path)
            .map(|inner| Self { inner })
            .map_err(to_py)
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    /// Writes JSON or CSV depending on the file extension.
    fn export(&self, path: &str) -> PyResult<()> {
        let format = ExportFormat::from_path(std::path::Path::new(path)).map_err(to_py)?;
        self.inner.export(path, format).map_err(to_py)
    }

    /// The same motion played backwards, with the rolling direction swapped.
    fn reversed(&self) -> Self {
        Self {
            inner: self.inner.reversed(),
        }
    }

    #[getter]
    fn gait(&self) -> &'static str {
        self.inner.gait.as_str()
    }

    #[getter]
    fn period(&self) -> f64 {
        self.inner.period_s
    }

    #[getter]
    fn times(&self) -> Vec<f64> {
        self.inner.samples.iter().map(|s| s.t).collect()
    }

    #[getter]
    fn joints(&self) -> Vec<Vec<f64>> {
        self.inner.samples.iter().map(|s| s.q_m.to_vec()).collect()
    }

    #[getter]
    fn pressures(&self) -> Vec<Vec<f64>> {
        self.inner
            .samples
            .iter()
            .map(|s| s.p_bar.to_vec())
            .collect()
    }

    fn __len__(&self) -> usize {
        self.inner.samples.len()
    }

    fn __eq__(&self, other: PyRef<'_, PyTrajectory>) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!(
            "Trajectory(gait={}, samples={}, period={})",
            self.inner.gait,
            self.inner.samples.len(),
            self.inner.period_s
        )
    }
}

/// Fits a gait cycle and tiles it into a trajectory.
#[pyfunction]
#[pyo3(signature = (gait, period=1.0, cycles=1, amplitude=1.0, samples=32, seed=0, parallel=false, config=None))]
#[allow(clippy::too_many_arguments)]
fn fit_trajectory(
    py: Python<'_>,
    gait: &str,
    period: f64,
    cycles: usize,
    amplitude: f64,
    samples: usize,
    seed: u64,
    parallel: bool,
    config: Option<PyRef<'_, PyRobotConfig>>,
) -> PyResult<PyTrajectory> {
    let cfg = config_or_default(config);
    let kind = gait_kind(gait)?;
    let spec = fit_spec(kind, amplitude, samples, period, &cfg)?;
    let fit_kind = if kind == GaitKind::RollOutward {
        GaitKind::RollInward
    } else {
        kind
    };
    let opts = fit_options(seed, parallel, 1.0, 10);
    let inner = py
        .detach(|| {
            let fits = fitter::fit_cycle(
                &GaitSpec {
                    kind: fit_kind,
                    ..spec.clone()
                },
                &cfg,
                &opts,
            )?;
            trajectory::build_trajectory(&fits, &spec, &cfg, cycles)
        })
        .map_err(to_py)?;
    Ok(PyTrajectory { inner })
}

/// Pressures (bar) for nine length changes, plus clamped and deadzone flags.
#[pyfunction]
#[pyo3(signature = (joints, config=None))]
fn pressure_map(
    joints: Vec<f64>,
    config: Option<PyRef<'_, PyRobotConfig>>,
) -> PyResult<(Vec<f64>, bool, bool)> {
    let cfg = config_or_default(config);
    let cmd = trajectory::pressure_map(&self::joints(joints)?, &cfg);
    Ok((cmd.pressures.to_vec(), cmd.clamped, cmd.in_deadzone))
}

/// Predicted body speed in cm/s.
#[pyfunction]
#[pyo3(signature = (gait, pressure_bar, frequency_hz, config=None))]
fn predict_velocity(
    gait: &str,
    pressure_bar: f64,
    frequency_hz: f64,
    config: Option<PyRef<'_, PyRobotConfig>>,
) -> PyResult<f64> {
    let cfg = config_or_default(config);
    Ok(locomotion::predict_velocity(gait_kind(gait)?, &cfg, pressure_bar, frequency_hz).speed_cm_s)
}

/// Prediction-versus-measurement report as JSON; the bundled table when `table` is None.
#[pyfunction]
#[pyo3(signature = (table=None, config=None))]
fn estimate_report(
    table: Option<&str>,
    config: Option<PyRef<'_, PyRobotConfig>>,
) -> PyResult<String> {
    let cfg = config_or_default(config);
    let records = match table {
        Some(p) => locomotion::load_table(p).map_err(to_py)?,
        None => locomotion::reference_table(),
    };
    let report = locomotion::compare_with_measured(&cfg, &records).map_err(to_py)?;
    Ok(report.to_json())
}

#[pymodule]
fn softsnake(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyRobotConfig>()?;
    m.add_class::<PyFitResult>()?;
    m.add_class::<PyTrajectory>()?;
    m.add_function(wrap_pyfunction!(chain_tip, m)?)?;
    m.add_function(wrap_pyfunction!(sample_backbone, m)?)?;
    m.add_function(wrap_pyfunction!(arc_from_lengths, m)?)?;
    m.add_function(wrap_pyfunction!(lengths_from_arc, m)?)?;
    m.add_function(wrap_pyfunction!(gait_shape, m)?)?;
    m.add_function(wrap_pyfunction!(fit_cycle, m)?)?;
    m.add_function(wrap_pyfunction!(fit_trajectory, m)?)?;
    m.add_function(wrap_pyfunction!(pressure_map, m)?)?;
    m.add_function(wrap_pyfunction!(predict_velocity, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_report, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
