//! Kinematic calibration of 6-DOF serial manipulators from draw-wire
//! (cable-length) measurements.
//!
//! The crate is organised bottom-up:
//!
//! - [`kinematics`]: Denavit–Hartenberg link transforms, forward kinematics
//!   and cable-length prediction.
//! - [`error_model`]: analytic DH partials, the position and distance
//!   Jacobians, and the mean-squared cable-length objective.
//! - [`beetle`]: beetle antennae search (BAS) and its quadratic-interpolated
//!   variant (QIBAS) as a generic box-bounded minimizer.
//! - [`ekf`]: extended Kalman filter over the 24 DH deviations.
//! - [`sim`]: synthetic joint configurations, ground-truth deviations and
//!   noisy cable measurements.
//! - [`pipeline`]: train/test split, accuracy metrics, the four calibration
//!   methods and the paired method comparison.
//! - [`formats`]: robot config, dataset, ground-truth and trace file formats.
//!
//! Lengths are millimetres and angles radians throughout.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod beetle;
pub mod ekf;
pub mod error;
pub mod error_model;
pub mod formats;
pub mod kinematics;
pub mod pipeline;
pub mod sim;

pub use error::{Error, Result};
pub use error_model::{Dataset, MeasurementSample};
pub use kinematics::{
    DeviationVector, DhTable, JointLimit, JointVector, LinkParams, ParamGroup, Pose, NUM_JOINTS,
    NUM_PARAMS,
};

pub use formats::RobotConfig;
pub use pipeline::{CalibrationConfig, CalibrationResult, Comparison, Method, MetricsReport};
pub use sim::{DeviationSpec, NoiseKind, NoiseModel, Scenario};
