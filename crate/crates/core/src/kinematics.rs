//! Constant-curvature kinematics of one three-actuator module and of the
//! floating-base three-module chain.
//!
//! Actuator `j` of a module sits at angle `psi_j = 2*pi*(j-1)/3` around the
//! centerline. A module bent with curvature `kappa` in the plane at angle
//! `phi` with center arclength `s_c` has actuator lengths
//! `L_j = s_c * (1 - r * kappa * cos(psi_j - phi))`.

use std::f64::consts::{PI, TAU};

use nalgebra::{Point3, Vector3};

use crate::config::{BasePose, JointVector, ModuleConfig, RobotConfig, MODULE_COUNT};
use crate::error::{Error, Result};
use crate::pose::{rot_y, rot_z, Pose};

/// Below this bending angle the arc translation uses its Taylor expansion.
pub const SERIES_THRESHOLD: f64 = 1e-6;

const SQRT_3: f64 = 1.732_050_807_568_877_2;

pub fn actuator_angle(j: usize) -> f64 {
    TAU * j as f64 / 3.0
}

/// Constant-curvature state of a single module.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArcParams {
    pub kappa: f64,
    pub phi: f64,
    pub s_c: f64,
}

impl ArcParams {
    pub fn new(kappa: f64, phi: f64, s_c: f64) -> Result<Self> {
        let arc = Self { kappa, phi, s_c };
        arc.validate()?;
        Ok(arc)
    }

    pub fn straight(s_c: f64) -> Self {
        Self {
            kappa: 0.0,
            phi: 0.0,
            s_c,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kappa >= 0.0 && self.s_c > 0.0 && self.phi.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "arc requires kappa >= 0 and s_c > 0; got {self:?}"
            )))
        }
    }

    /// Pose of the neutral axis at fraction `xi` of the arc, without any
    /// mounting transform.
    pub fn pose_at(&self, xi: f64) -> Pose {
        let len = self.s_c * xi;
        let theta = self.kappa * len;
        let (radial, axial) = if theta.abs() < SERIES_THRESHOLD {
            (len * theta * 0.5, len * (1.0 - theta * theta / 6.0))
        } else {
            let half = (0.5 * theta).sin();
            (len * 2.0 * half * half / theta, len * theta.sin() / theta)
        };
        let (sp, cp) = self.phi.sin_cos();
        Pose::new(
            rot_z(self.phi) * rot_y(theta) * rot_z(-self.phi),
            Vector3::new(cp * radial, sp * radial, axial),
        )
    }
}

/// Absolute actuator lengths of a module bent along `arc`.
pub fn lengths_from_arc(arc: &ArcParams, cfg: &ModuleConfig) -> Result<[f64; 3]> {
    arc.validate()?;
    if arc.kappa * cfg.r >= 1.0 {
        return Err(Error::CurvatureTooHigh {
            kappa: arc.kappa,
            radius: cfg.r,
        });
    }
    let rk = cfg.r * arc.kappa;
    Ok(std::array::from_fn(|j| {
        arc.s_c * (1.0 - rk * (actuator_angle(j) - arc.phi).cos())
    }))
}

/// Closed-form inverse of [`lengths_from_arc`] taking length changes `q_i`.
/// Equal lengths give `kappa = 0`, `phi = 0`.
pub fn arc_from_lengths(q_i: [f64; 3], cfg: &ModuleConfig) -> Result<ArcParams> {
    let [l1, l2, l3] = q_i.map(|l| cfg.l0 + l);
    if !(l1 > 0.0 && l2 > 0.0 && l3 > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "actuator lengths must be positive; got ({l1}, {l2}, {l3})"
        )));
    }
    let sum = l1 + l2 + l3;
    let s_c = sum / 3.0;
    // L1²+L2²+L3²−L1L2−L2L3−L3L1 written as half the sum of squared differences
    let (d12, d23, d31) = (l1 - l2, l2 - l3, l3 - l1);
    let spread = 0.5 * (d12 * d12 + d23 * d23 + d31 * d31);
    if spread == 0.0 {
        return Ok(ArcParams::straight(s_c));
    }
    let kappa = 2.0 * spread.sqrt() / (cfg.r * sum);
    let phi = (SQRT_3 * (l3 - l2)).atan2(l2 + l3 - 2.0 * l1);
    Ok(ArcParams { kappa, phi, s_c })
}

/// Trailing mounting transform of a module: `Rz(sigma)` with `delta` along +Z.
pub fn mounting(cfg: &ModuleConfig) -> Pose {
    Pose::new(rot_z(cfg.sigma), Vector3::new(0.0, 0.0, cfg.delta))
}

fn check_module_joints(q_i: &[f64; 3], cfg: &ModuleConfig, offset: usize) -> Result<()> {
    for (j, &value) in q_i.iter().enumerate() {
        if !(0.0..=cfg.l_max).contains(&value) {
            return Err(Error::JointOutOfBounds {
                index: offset + j,
                value,
                max: cfg.l_max,
            });
        }
    }
    Ok(())
}

/// Pose at fraction `xi` along a module, including the mounting transform.
pub fn module_transform(q_i: [f64; 3], cfg: &ModuleConfig, xi: f64) -> Result<Pose> {
    if !(0.0..=1.0).contains(&xi) {
        return Err(Error::InvalidArgument(format!("xi = {xi} outside [0, 1]")));
    }
    check_module_joints(&q_i, cfg, 0)?;
    let arc = arc_from_lengths(q_i, cfg)?;
    Ok(arc.pose_at(xi).compose(&mounting(cfg)))
}

/// Precomputed per-module arcs for repeated evaluation along one configuration.
#[derive(Debug, Clone)]
pub struct Chain {
    base: Pose,
    arcs: [ArcParams; MODULE_COUNT],
    /// `starts[i]` is the pose at the base of module `i`; `starts[3]` is the tip.
    starts: [Pose; MODULE_COUNT + 1],
}

impl Chain {
    pub fn new(q_b: &BasePose, q: &JointVector, cfg: &RobotConfig) -> Result<Self> {
        q_b.validate()?;
        q.validate(cfg)?;
        Ok(Self::new_unchecked(&q_b.to_pose(), q, cfg))
    }

    /// Skips bound checks; `q` must still give positive actuator lengths.
    pub(crate) fn new_unchecked(base: &Pose, q: &JointVector, cfg: &RobotConfig) -> Self {
        let arcs: [ArcParams; MODULE_COUNT] = std::array::from_fn(|i| {
            arc_from_lengths(q.module(i), &cfg.modules[i]).expect("positive actuator lengths")
        });
        let mounts: [Pose; MODULE_COUNT] = std::array::from_fn(|i| mounting(&cfg.modules[i]));
        let mut starts = [*base; MODULE_COUNT + 1];
        for i in 0..MODULE_COUNT {
            starts[i + 1] = starts[i] * arcs[i].pose_at(1.0) * mounts[i];
        }
        Self {
            base: *base,
            arcs,
            starts,
        }
    }

    pub fn base(&self) -> &Pose {
        &self.base
    }

    pub fn arcs(&self) -> &[ArcParams; MODULE_COUNT] {
        &self.arcs
    }

    /// Pose at `xi_global` in `[0, 3]`.
    pub fn pose_at(&self, xi_global: f64) -> Result<Pose> {
        if !(0.0..=3.0).contains(&xi_global) {
            return Err(Error::InvalidArgument(format!(
                "xi_global = {xi_global} outside [0, 3]"
            )));
        }
        Ok(self.pose_at_unchecked(xi_global))
    }

    fn pose_at_unchecked(&self, xi_global: f64) -> Pose {
        let i = (xi_global.floor() as usize).min(MODULE_COUNT - 1);
        let local = xi_global - i as f64;
        if local >= 1.0 {
            return self.starts[i + 1];
        }
        self.starts[i] * self.arcs[i].pose_at(local)
    }

    pub fn tip(&self) -> Pose {
        self.starts[MODULE_COUNT]
    }

    pub(crate) fn sample_into(&self, n: usize, out: &mut Vec<Point3<f64>>) {
        out.clear();
        let step = 3.0 / (n - 1) as f64;
        out.extend((0..n).map(|k| {
            let xi = if k + 1 == n { 3.0 } else { k as f64 * step };
            Point3::from(self.pose_at_unchecked(xi).translation)
        }));
    }

    pub fn sample(&self, n: usize) -> Vec<Point3<f64>> {
        let mut out = Vec::with_capacity(n);
        self.sample_into(n, &mut out);
        out
    }
}

/// Pose along the body at `xi_global` in `[0, 3]`. Module `i` occupies
/// `[i, i + 1]`; its mounting transform is applied once the module is complete.
pub fn chain_transform(
    q_b: &BasePose,
    q: &JointVector,
    cfg: &RobotConfig,
    xi_global: f64,
) -> Result<Pose> {
    Chain::new(q_b, q, cfg)?.pose_at(xi_global)
}

/// `n` backbone positions at `xi_global = 3k / (n - 1)`.
pub fn sample_backbone(
    q_b: &BasePose,
    q: &JointVector,
    cfg: &RobotConfig,
    n: usize,
) -> Result<Vec<Point3<f64>>> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "backbone needs at least 2 points, got {n}"
        )));
    }
    Ok(Chain::new(q_b, q, cfg)?.sample(n))
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(TAU);
    if w > PI {
        w - TAU
    } else {
        w
    }
}
