//! Gait synthesis for a three-module soft robotic snake.
//!
//! The crate covers constant-curvature forward kinematics of the floating-base
//! chain, serpentine and rolling gait curves, multi-start shape fitting that
//! turns gait curves into actuator-length trajectories, pressure mapping, and a
//! kinematic locomotion estimate compared against measured velocities.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod error;
pub mod fitter;
pub mod gait;
pub mod kinematics;
pub mod locomotion;
pub mod optimize;
pub mod pose;
pub mod quadrature;
pub mod trajectory;

pub use config::{BasePose, JointVector, ModuleConfig, RobotConfig};
pub use error::{Error, Result};
pub use fitter::{cost, fit_cycle, fit_module, fit_shape, FitOptions, FitResult, ModuleFit};
pub use gait::{frame_at, gait_shape_at, serpentine_point, CurveShape, GaitKind, GaitSpec};
pub use kinematics::{
    arc_from_lengths, chain_transform, lengths_from_arc, module_transform, sample_backbone,
    ArcParams, Chain,
};
pub use locomotion::{compare_with_measured, predict_velocity, EstimateReport, VelocityRecord};
pub use pose::Pose;
pub use trajectory::{
    build_trajectory, pressure_map, ExportFormat, PressureCommand, Trajectory, TrajectorySample,
};
