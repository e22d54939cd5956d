//! Robot geometry, joint vectors and base poses.

use std::f64::consts::{PI, TAU};
use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::pose::{rot_x, rot_y, rot_z, Pose};

pub const MODULE_COUNT: usize = 3;
pub const JOINT_COUNT: usize = 9;

/// Geometry of one soft bending module driven by three extending actuators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModuleConfig {
    /// Unactuated actuator length (m).
    #[serde(rename = "L0")]
    pub l0: f64,
    /// Actuator offset from the module centerline (m).
    pub r: f64,
    /// Mounting rotation about the module tip +Z (rad).
    pub sigma: f64,
    /// Mounting offset along the module tip +Z (m).
    pub delta: f64,
    /// Maximum actuator extension (m).
    pub l_max: f64,
}

impl Default for ModuleConfig {
    fn default() -> Self {
        Self {
            l0: 0.15,
            r: 0.0125,
            sigma: PI / 3.0,
            delta: 0.0,
            l_max: 0.065,
        }
    }
}

impl ModuleConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.l0 > 0.0
            && self.r > 0.0
            && (0.0..TAU).contains(&self.sigma)
            && self.delta >= 0.0
            && self.l_max > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "module requires L0 > 0, r > 0, 0 <= sigma < 2pi, delta >= 0, l_max > 0; got {self:?}"
            )))
        }
    }

    /// Largest curvature any admissible actuator triple produces: one actuator
    /// fully extended, the other two relaxed.
    pub fn max_curvature(&self) -> f64 {
        2.0 * self.l_max / (self.r * (3.0 * self.l0 + self.l_max))
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRobotConfig {
    modules: Vec<ModuleConfig>,
    body_radius: f64,
    pressure_gain: f64,
    pressure_max: f64,
    deadzone: f64,
}

/// Full robot description. Loads from JSON with unknown keys rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawRobotConfig")]
pub struct RobotConfig {
    pub modules: [ModuleConfig; MODULE_COUNT],
    /// Skin radius used for rolling contact (m).
    pub body_radius: f64,
    /// Pressure per unit actuator extension (bar/m).
    pub pressure_gain: f64,
    pub pressure_max: f64,
    pub deadzone: f64,
}

impl TryFrom<RawRobotConfig> for RobotConfig {
    type Error = Error;

    fn try_from(raw: RawRobotConfig) -> Result<Self> {
        let modules: [ModuleConfig; MODULE_COUNT] =
            raw.modules.try_into().map_err(|m: Vec<ModuleConfig>| {
                Error::InvalidConfig(format!("expected exactly 3 modules, got {}", m.len()))
            })?;
        let cfg = RobotConfig {
            modules,
            body_radius: raw.body_radius,
            pressure_gain: raw.pressure_gain,
            pressure_max: raw.pressure_max,
            deadzone: raw.deadzone,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl Default for RobotConfig {
    fn default() -> Self {
        Self {
            modules: [ModuleConfig::default(); MODULE_COUNT],
            body_radius: 0.0125,
            pressure_gain: 100.0,
            pressure_max: 4.0,
            deadzone: 1.0,
        }
    }
}

impl RobotConfig {
    pub fn validate(&self) -> Result<()> {
        for m in &self.modules {
            m.validate()?;
        }
        if !(self.body_radius > 0.0) {
            return Err(Error::InvalidConfig("body_radius must be positive".into()));
        }
        if !(self.pressure_gain > 0.0) {
            return Err(Error::InvalidConfig(
                "pressure_gain must be positive".into(),
            ));
        }
        if !(self.deadzone >= 0.0 && self.pressure_max > self.deadzone) {
            return Err(Error::InvalidConfig(
                "require pressure_max > deadzone >= 0".into(),
            ));
        }
        Ok(())
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// Hex SHA-256 of the compact JSON form; stamped into trajectories.
    pub fn digest(&self) -> String {
        Sha256::digest(self.to_json().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    /// Nominal unactuated length of the whole body including mounting offsets.
    pub fn nominal_length(&self) -> f64 {
        self.modules.iter().map(|m| m.l0 + m.delta).sum()
    }

    /// Reachable curvature of the least capable module.
    pub fn max_curvature(&self) -> f64 {
        self.modules
            .iter()
            .map(ModuleConfig::max_curvature)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Actuator length changes `l_ij` in module-major order.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct JointVector(pub [f64; JOINT_COUNT]);

impl JointVector {
    pub fn zeros() -> Self {
        Self::default()
    }

    pub fn uniform(e: f64) -> Self {
        Self([e; JOINT_COUNT])
    }

    pub fn module(&self, i: usize) -> [f64; 3] {
        [self.0[3 * i], self.0[3 * i + 1], self.0[3 * i + 2]]
    }

    pub fn from_slice(v: &[f64]) -> Result<Self> {
        let arr: [f64; JOINT_COUNT] = v.try_into().map_err(|_| {
            Error::InvalidArgument(format!("expected 9 joint values, got {}", v.len()))
        })?;
        Ok(Self(arr))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Checks `0 <= l_ij <= l_max` of the owning module.
    pub fn validate(&self, cfg: &RobotConfig) -> Result<()> {
        for (index, &value) in self.0.iter().enumerate() {
            let max = cfg.modules[index / 3].l_max;
            if !(0.0..=max).contains(&value) {
                return Err(Error::JointOutOfBounds { index, value, max });
            }
        }
        Ok(())
    }

    pub fn sum_of_squares(&self) -> f64 {
        self.0.iter().map(|l| l * l).sum()
    }
}

/// Floating-base pose: translation plus XYZ Euler angles.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BasePose {
    pub xyz: [f64; 3],
    pub euler: [f64; 3],
}

impl BasePose {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn translation(x: f64, y: f64, z: f64) -> Self {
        Self {
            xyz: [x, y, z],
            euler: [0.0; 3],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.euler.iter().all(|a| (-PI..=PI).contains(a))
            && self.xyz.iter().all(|v| v.is_finite())
        {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "base Euler angles must lie in [-pi, pi]; got {:?}",
                self.euler
            )))
        }
    }

    pub fn to_pose(&self) -> Pose {
        let [a, b, g] = self.euler;
        Pose::new(rot_x(a) * rot_y(b) * rot_z(g), Vector3::from(self.xyz))
    }
}
