//! Taskspace gait shapes: the serpentine curve and the rolling arc, sampled
//! within a gait cycle and expressed in the robot body frame.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use nalgebra::{Matrix3, Point3, Vector3};
use serde::{Deserialize, Serialize};

use crate::config::RobotConfig;
use crate::error::{Error, Result};
use crate::kinematics::ArcParams;
use crate::pose::Pose;
use crate::quadrature::adaptive_simpson;

/// Points per shape: ten per module plus the base.
pub const SHAPE_POINTS: usize = 31;
pub const DEFAULT_SAMPLES_PER_CYCLE: usize = 32;
pub const QUADRATURE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GaitKind {
    Serpentine,
    RollInward,
    RollOutward,
}

impl GaitKind {
    pub const ALL: [GaitKind; 3] = [
        GaitKind::Serpentine,
        GaitKind::RollInward,
        GaitKind::RollOutward,
    ];

    pub fn is_rolling(self) -> bool {
        !matches!(self, GaitKind::Serpentine)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            GaitKind::Serpentine => "serpentine",
            GaitKind::RollInward => "roll_inward",
            GaitKind::RollOutward => "roll_outward",
        }
    }

    /// The opposite rolling direction; serpentine maps to itself.
    pub fn reversed(self) -> Self {
        match self {
            GaitKind::Serpentine => GaitKind::Serpentine,
            GaitKind::RollInward => GaitKind::RollOutward,
            GaitKind::RollOutward => GaitKind::RollInward,
        }
    }
}

impl fmt::Display for GaitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GaitKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "serpentine" => Ok(GaitKind::Serpentine),
            "roll_inward" | "roll-in" | "inward" => Ok(GaitKind::RollInward),
            "roll_outward" | "roll-out" | "outward" => Ok(GaitKind::RollOutward),
            other => Err(Error::InvalidArgument(format!("unknown gait '{other}'"))),
        }
    }
}

/// Parameters of one gait. Serpentine heading is
/// `a * cos(b * s + phase) + c * s`; rolling bends the body into an arc of
/// curvature `amplitude_scale / rolling_radius`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaitSpec {
    pub kind: GaitKind,
    /// Cycle period (s).
    pub period: f64,
    pub amplitude_scale: f64,
    /// Serpentine heading amplitude (rad).
    pub a: f64,
    /// Serpentine wavenumber (rad/m).
    pub b: f64,
    /// Serpentine heading drift (rad/m).
    pub c: f64,
    /// Rolling arc radius at unit amplitude (m).
    pub rolling_radius: f64,
    pub samples_per_cycle: usize,
    /// Curve arclength spanned by the robot (m).
    pub fit_length: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GaitSpecFile {
    kind: GaitKind,
    #[serde(default = "one")]
    period: f64,
    #[serde(default = "one")]
    amplitude_scale: f64,
    a: Option<f64>,
    b: Option<f64>,
    c: Option<f64>,
    rolling_radius: Option<f64>,
    samples_per_cycle: Option<usize>,
    fit_length: Option<f64>,
}

fn one() -> f64 {
    1.0
}

/// Curve length an extending-only body needs to bend through half a turn:
/// the nominal length plus `pi * r * amplitude_scale`.
pub fn default_fit_length(cfg: &RobotConfig, amplitude_scale: f64) -> f64 {
    cfg.nominal_length() + PI * cfg.modules[0].r * amplitude_scale
}

impl GaitSpec {
    /// Prototype defaults for `kind`: one serpentine wave over the body and a
    /// half-circle rolling arc.
    pub fn new(kind: GaitKind, cfg: &RobotConfig) -> Self {
        Self::with_amplitude(kind, 1.0, cfg)
    }

    pub fn with_amplitude(kind: GaitKind, amplitude_scale: f64, cfg: &RobotConfig) -> Self {
        let fit_length = default_fit_length(cfg, amplitude_scale);
        Self {
            kind,
            period: 1.0,
            amplitude_scale,
            a: -PI / 4.0,
            b: TAU / fit_length,
            c: 0.0,
            rolling_radius: fit_length / PI,
            samples_per_cycle: DEFAULT_SAMPLES_PER_CYCLE,
            fit_length,
        }
    }

    /// Reads a spec from JSON; omitted curve parameters take the defaults of
    /// [`GaitSpec::with_amplitude`].
    pub fn from_json_str(s: &str, cfg: &RobotConfig) -> Result<Self> {
        let f: GaitSpecFile = serde_json::from_str(s)?;
        let mut spec = Self::with_amplitude(f.kind, f.amplitude_scale, cfg);
        spec.period = f.period;
        if let Some(fl) = f.fit_length {
            spec.fit_length = fl;
            spec.b = TAU / fl;
            spec.rolling_radius = fl / PI;
        }
        spec.a = f.a.unwrap_or(spec.a);
        spec.b = f.b.unwrap_or(spec.b);
        spec.c = f.c.unwrap_or(spec.c);
        spec.rolling_radius = f.rolling_radius.unwrap_or(spec.rolling_radius);
        spec.samples_per_cycle = f.samples_per_cycle.unwrap_or(spec.samples_per_cycle);
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: impl AsRef<Path>, cfg: &RobotConfig) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text, cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.period > 0.0) {
            problems.push("period must be positive");
        }
        if !(self.amplitude_scale > 0.0 && self.amplitude_scale <= 1.0) {
            problems.push("amplitude_scale must lie in (0, 1]");
        }
        if self.samples_per_cycle < 8 {
            problems.push("samples_per_cycle must be at least 8");
        }
        if !(self.rolling_radius > 0.0) {
            problems.push("rolling_radius must be positive");
        }
        if !(self.fit_length > 0.0) {
            problems.push("fit_length must be positive");
        }
        if !self.kind.is_rolling() && !(self.b != 0.0 && self.b.is_finite()) {
            problems.push("serpentine wavenumber b must be nonzero");
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(problems.join("; ")))
        }
    }

    /// Heading amplitude after amplitude scaling.
    pub fn serpentine_amplitude(&self) -> f64 {
        self.a * self.amplitude_scale
    }

    /// Peak curvature of the gait curve (1/m).
    pub fn peak_curvature(&self) -> f64 {
        if self.kind.is_rolling() {
            self.amplitude_scale / self.rolling_radius
        } else {
            (self.serpentine_amplitude() * self.b).abs() + self.c.abs()
        }
    }

    pub fn wavelength(&self) -> f64 {
        TAU / self.b.abs()
    }

    fn heading(&self, s: f64, phase: f64) -> f64 {
        self.serpentine_amplitude() * (self.b * s + phase).cos() + self.c * s
    }
}

/// A gait shape sampled at `points`, in the robot body frame.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveShape {
    pub points: Vec<Point3<f64>>,
    pub arclengths: Vec<f64>,
    pub time_fraction: f64,
}

impl CurveShape {
    pub fn new(points: Vec<Point3<f64>>, arclengths: Vec<f64>, time_fraction: f64) -> Result<Self> {
        if points.len() != arclengths.len() || points.len() < 2 {
            return Err(Error::InvalidArgument(
                "shape needs at least two points with matching arclengths".into(),
            ));
        }
        if arclengths[0] != 0.0 || arclengths.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument(
                "shape arclengths must start at 0 and increase strictly".into(),
            ));
        }
        Ok(Self {
            points,
            arclengths,
            time_fraction,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn chord_length(&self) -> f64 {
        self.points.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
    }

    pub fn translated(&self, offset: Vector3<f64>) -> Self {
        Self {
            points: self.points.iter().map(|p| p + offset).collect(),
            ..self.clone()
        }
    }

    /// CSV with columns `s_m,x_m,y_m,z_m`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "s_m,x_m,y_m,z_m")?;
        for (s, p) in self.arclengths.iter().zip(&self.points) {
            writeln!(w, "{s},{},{},{}", p.x, p.y, p.z)?;
        }
        Ok(())
    }

    pub fn export_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
            .map_err(|e| Error::io(path, e))
    }
}

/// Planar serpentine curve position at arclength `s` (z = 0 implied).
pub fn serpentine_point(s: f64, spec: &GaitSpec, phase: f64) -> [f64; 2] {
    tangent_integral(spec, phase, 0.0, s)
}

/// Serpentine positions at increasing arclengths, integrated panel by panel.
pub fn serpentine_points(arclengths: &[f64], spec: &GaitSpec, phase: f64) -> Vec<[f64; 2]> {
    let mut out = Vec::with_capacity(arclengths.len());
    let (mut x, mut y, mut prev) = (0.0, 0.0, 0.0);
    for &s in arclengths {
        let [dx, dy] = tangent_integral(spec, phase, prev, s);
        x += dx;
        y += dy;
        prev = s;
        out.push([x, y]);
    }
    out
}

/// Integral of the unit tangent over `[lo, hi]`, split into panels of at most
/// a quarter wavelength so a periodic integrand cannot fool the error estimate.
fn tangent_integral(spec: &GaitSpec, phase: f64, lo: f64, hi: f64) -> [f64; 2] {
    let panels = (4.0 * (hi - lo).abs() / spec.wavelength()).ceil().max(1.0) as usize;
    let tol = QUADRATURE_TOL / panels as f64;
    let h = (hi - lo) / panels as f64;
    let (mut x, mut y) = (0.0, 0.0);
    for k in 0..panels {
        let a = lo + k as f64 * h;
        let b = if k + 1 == panels { hi } else { a + h };
        x += adaptive_simpson(|t| spec.heading(t, phase).cos(), a, b, tol);
        y += adaptive_simpson(|t| spec.heading(t, phase).sin(), a, b, tol);
    }
    [x, y]
}

fn frame_from(origin: [f64; 2], heading: f64) -> Pose {
    let (sh, ch) = heading.sin_cos();
    let z = Vector3::new(ch, sh, 0.0);
    let x = Vector3::new(-sh, ch, 0.0);
    let y = z.cross(&x);
    Pose::new(
        Matrix3::from_columns(&[x, y, z]),
        Vector3::new(origin[0], origin[1], 0.0),
    )
}

/// Local frame on the serpentine curve: +Z along the tangent, +X the in-plane
/// normal to the left, +Y = Z × X (world +Z).
pub fn frame_at(s: f64, spec: &GaitSpec, phase: f64) -> Pose {
    frame_from(serpentine_point(s, spec, phase), spec.heading(s, phase))
}

/// Samples of a planar arc of curvature `kappa` bent toward `phi`, generated
/// directly in the body frame. No reachability check.
pub fn rolling_arc(kappa: f64, phi: f64, length: f64, n: usize, time_fraction: f64) -> CurveShape {
    let arc = ArcParams {
        kappa,
        phi,
        s_c: length,
    };
    let arclengths: Vec<f64> = (0..n).map(|k| length * k as f64 / (n - 1) as f64).collect();
    let points = (0..n)
        .map(|k| Point3::from(arc.pose_at(k as f64 / (n - 1) as f64).translation))
        .collect();
    CurveShape {
        points,
        arclengths,
        time_fraction,
    }
}

/// Gait shape at `t_frac` of the cycle, expressed in the body frame.
///
/// Serpentine slides a window of length `fit_length` along the fixed curve,
/// advancing one wavelength per cycle. Rolling turns a fixed arc about the
/// body Z axis, once per cycle; outward rolling turns the other way.
pub fn gait_shape_at(t_frac: f64, spec: &GaitSpec, cfg: &RobotConfig) -> Result<CurveShape> {
    spec.validate()?;
    if !(0.0..1.0).contains(&t_frac) {
        return Err(Error::InvalidArgument(format!(
            "time fraction {t_frac} outside [0, 1)"
        )));
    }
    let requested = spec.peak_curvature();
    let reachable = cfg.max_curvature();
    if requested > reachable {
        return Err(Error::Unreachable {
            requested,
            reachable,
        });
    }
    Ok(shape_unchecked(t_frac, spec))
}

fn shape_unchecked(t_frac: f64, spec: &GaitSpec) -> CurveShape {
    let n = SHAPE_POINTS;
    let step = spec.fit_length / (n - 1) as f64;
    match spec.kind {
        GaitKind::Serpentine => {
            let s0 = t_frac * spec.wavelength();
            let mut abs_s = Vec::with_capacity(n + 1);
            abs_s.push(s0);
            abs_s.extend((0..n).map(|k| s0 + k as f64 * step));
            let xy = serpentine_points(&abs_s, spec, 0.0);
            let to_body = frame_from(xy[0], spec.heading(s0, 0.0)).inverse();
            let points = xy[1..]
                .iter()
                .map(|&[x, y]| to_body.transform_point(&Point3::new(x, y, 0.0)))
                .collect();
            let arclengths = (0..n).map(|k| k as f64 * step).collect();
            CurveShape {
                points,
                arclengths,
                time_fraction: t_frac,
            }
        }
        GaitKind::RollInward | GaitKind::RollOutward => {
            let sign = if spec.kind == GaitKind::RollInward {
                1.0
            } else {
                -1.0
            };
            rolling_arc(
                spec.peak_curvature(),
                sign * TAU * t_frac,
                spec.fit_length,
                n,
                t_frac,
            )
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn serpentine() -> GaitSpec {
        GaitSpec::new(GaitKind::Serpentine, &RobotConfig::default())
    }

    #[test]
    fn gait_kind_parsing() {
        assert_eq!("roll-in".parse::<GaitKind>().unwrap(), GaitKind::RollInward);
        assert_eq!(
            "roll_outward".parse::<GaitKind>().unwrap(),
            GaitKind::RollOutward
        );
        assert!("sidewinding".parse::<GaitKind>().is_err());
        assert_eq!(
            GaitKind::RollInward.reversed().reversed(),
            GaitKind::RollInward
        );
    }

    #[test]
    fn whole_wavelengths_integrate_correctly() {
        let spec = serpentine();
        let w = spec.wavelength();
        let fine: Vec<f64> = (1..=400).map(|k| 3.0 * w * k as f64 / 400.0).collect();
        let reference = *serpentine_points(&fine, &spec, 0.0).last().unwrap();
        let direct = serpentine_point(3.0 * w, &spec, 0.0);
        assert!((direct[0] - reference[0]).abs() < 1e-9);
        assert!((direct[1] - reference[1]).abs() < 1e-9);
        assert!(direct[0] < 3.0 * w);
    }

    #[test]
    fn serpentine_origin_and_slope() {
        let spec = serpentine();
        assert_eq!(serpentine_point(0.0, &spec, 0.0), [0.0, 0.0]);
        let h = 1e-6;
        let [x, y] = serpentine_point(h, &spec, 0.0);
        assert_relative_eq!(x / h, (-PI / 4.0).cos(), epsilon = 1e-6);
        assert_relative_eq!(y / h, (-PI / 4.0).sin(), epsilon = 1e-6);
    }

    #[test]
    fn frames() {
        let mut straight = serpentine();
        straight.a = 0.0;
        let f = frame_at(0.0, &straight, 0.0);
        assert_relative_eq!(f.rotation * Vector3::z(), Vector3::x(), epsilon = 1e-15);

        let f = frame_at(0.0, &serpentine(), 0.0);
        let t = f.rotation * Vector3::z();
        assert_relative_eq!(
            t,
            Vector3::new(0.5f64.sqrt(), -(0.5f64.sqrt()), 0.0),
            epsilon = 1e-12
        );
    }

    #[test]
    fn spec_validation() {
        let cfg = RobotConfig::default();
        let mut s = serpentine();
        s.amplitude_scale = 2.0;
        assert!(s.validate().is_err());
        assert!(gait_shape_at(0.0, &s, &cfg).is_err());
        let mut s = serpentine();
        s.samples_per_cycle = 4;
        assert!(s.validate().is_err());
        assert!(gait_shape_at(1.0, &serpentine(), &cfg).is_err());
    }

    #[test]
    fn spec_json_defaults_and_overrides() {
        let cfg = RobotConfig::default();
        let s = GaitSpec::from_json_str(r#"{"kind":"roll_inward","period":2.0}"#, &cfg).unwrap();
        assert_eq!(
            s,
            GaitSpec {
                period: 2.0,
                ..GaitSpec::new(GaitKind::RollInward, &cfg)
            }
        );
        let s =
            GaitSpec::from_json_str(r#"{"kind":"serpentine","a":-0.5,"fit_length":0.45}"#, &cfg)
                .unwrap();
        assert_eq!(s.a, -0.5);
        assert_relative_eq!(s.b, TAU / 0.45);
        assert!(GaitSpec::from_json_str(r#"{"kind":"serpentine","zeta":1}"#, &cfg).is_err());
    }

    #[test]
    fn unreachable_curvature_rejected() {
        let cfg = RobotConfig::default();
        let mut s = GaitSpec::new(GaitKind::RollInward, &cfg);
        s.rolling_radius = 0.01;
        assert!(matches!(
            gait_shape_at(0.0, &s, &cfg),
            Err(Error::Unreachable { .. })
        ));
    }

    #[test]
    fn rolling_periodicity_and_half_turn() {
        let cfg = RobotConfig::default();
        let spec = GaitSpec::new(GaitKind::RollInward, &cfg);
        let a = gait_shape_at(0.0, &spec, &cfg).unwrap();
        let b = gait_shape_at(1.0 - 1e-12, &spec, &cfg).unwrap();
        for (p, q) in a.points.iter().zip(&b.points) {
            assert!((p - q).norm() < 1e-10);
        }
        let half = gait_shape_at(0.5, &spec, &cfg).unwrap();
        let rz = crate::pose::rot_z(PI);
        for (p, q) in a.points.iter().zip(&half.points) {
            assert!((rz * p.coords - q.coords).norm() < 1e-12);
        }
    }

    #[test]
    fn outward_rolling_turns_the_other_way() {
        let cfg = RobotConfig::default();
        let inward = GaitSpec::new(GaitKind::RollInward, &cfg);
        let outward = GaitSpec::new(GaitKind::RollOutward, &cfg);
        let a = gait_shape_at(0.25, &inward, &cfg).unwrap();
        let b = gait_shape_at(0.75, &outward, &cfg).unwrap();
        for (p, q) in a.points.iter().zip(&b.points) {
            assert!((p - q).norm() < 1e-12);
        }
    }

    #[test]
    fn chord_length_matches_fit_length() {
        let cfg = RobotConfig::default();
        for kind in GaitKind::ALL {
            let spec = GaitSpec::new(kind, &cfg);
            for t in [0.0, 0.3, 0.55, 0.9] {
                let shape = gait_shape_at(t, &spec, &cfg).unwrap();
                assert_eq!(shape.len(), SHAPE_POINTS);
                assert_eq!(shape.arclengths[0], 0.0);
                let rel = (shape.chord_length() - spec.fit_length).abs() / spec.fit_length;
                assert!(rel < 0.005, "{kind} t={t} rel={rel}");
            }
        }
    }

    #[test]
    fn serpentine_shapes_are_planar_through_origin() {
        let cfg = RobotConfig::default();
        let spec = serpentine();
        for k in 0..spec.samples_per_cycle {
            let shape =
                gait_shape_at(k as f64 / spec.samples_per_cycle as f64, &spec, &cfg).unwrap();
            assert_eq!(shape.points[0].coords.norm(), 0.0);
            for p in &shape.points {
                assert!(p.y.abs() < 1e-9);
            }
        }
    }

    /// Body-frame points move by at most `ds * (k_max * S + min(2, k_max * S))`
    /// when the window slides by `ds`: the frame turns by `k_max * ds`, which
    /// sweeps points up to `S` away, and the tangent difference is at most 2.
    #[test]
    fn serpentine_window_shift_is_bounded() {
        let cfg = RobotConfig::default();
        for samples in [32usize, 64] {
            let spec = GaitSpec {
                samples_per_cycle: samples,
                ..serpentine()
            };
            let ds = spec.wavelength() / samples as f64;
            let ks = spec.peak_curvature() * spec.fit_length;
            let bound = ds * (ks + ks.min(2.0));
            let shapes: Vec<CurveShape> = (0..samples)
                .map(|k| gait_shape_at(k as f64 / samples as f64, &spec, &cfg).unwrap())
                .collect();
            let mut worst: f64 = 0.0;
            for k in 0..samples {
                let (a, b) = (&shapes[k], &shapes[(k + 1) % samples]);
                for (p, q) in a.points.iter().zip(&b.points) {
                    worst = worst.max((p - q).norm());
                }
            }
            assert!(
                worst > 0.0 && worst < bound,
                "samples={samples} worst={worst} bound={bound}"
            );
        }
    }

    #[test]
    fn csv_export_columns() {
        let shape = rolling_arc(5.0, 0.0, 0.45, 4, 0.0);
        let mut buf = Vec::new();
        shape.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("s_m,x_m,y_m,z_m"));
        assert_eq!(lines.count(), 4);
    }

    proptest! {
        #[test]
        fn frame_at_is_rigid(s in 0.0..2.0f64, phase in -PI..PI) {
            prop_assert!(frame_at(s, &serpentine(), phase).is_valid(1e-12));
        }

        #[test]
        fn rolling_shapes_are_isometric(t in 0.0..1.0f64) {
            let cfg = RobotConfig::default();
            let spec = GaitSpec::new(GaitKind::RollOutward, &cfg);
            let a = gait_shape_at(0.0, &spec, &cfg).unwrap();
            let b = gait_shape_at(t, &spec, &cfg).unwrap();
            for i in 0..a.len() {
                for j in 0..i {
                    let da = (a.points[i] - a.points[j]).norm();
                    let db = (b.points[i] - b.points[j]).norm();
                    prop_assert!((da - db).abs() < 1e-9);
                }
            }
        }
    }
}
