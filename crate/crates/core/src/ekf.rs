//! Extended Kalman filter over the DH deviation vector.
//!
//! The parameters are constants, so the state transition is the identity and
//! only the process-noise covariance inflates `P` between measurements. Each
//! cable reading is a scalar measurement linearized through the distance
//! Jacobian.

use nalgebra::{DMatrix, SMatrix, SVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::error_model::{distance_jacobian, predicted_length, Dataset};
use crate::kinematics::{apply_deviation, DeviationVector, DhTable, ParamGroup, NUM_PARAMS};

pub type Covariance<const N: usize = NUM_PARAMS> = SMatrix<f64, N, N>;
/// A scalar measurement's row of the observation matrix.
pub type ObservationRow<const N: usize = NUM_PARAMS> = SMatrix<f64, 1, N>;

/// Current estimate and its error covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct EkfState<const N: usize = NUM_PARAMS> {
    pub eta: SVector<f64, N>,
    pub covariance: Covariance<N>,
    /// Number of measurements absorbed so far.
    pub k: usize,
}

impl<const N: usize> EkfState<N> {
    pub fn new(eta: SVector<f64, N>, covariance: Covariance<N>) -> Self {
        Self {
            eta,
            covariance,
            k: 0,
        }
    }

    pub fn health(&self) -> CovarianceHealth {
        CovarianceHealth::of(&self.covariance)
    }
}

impl EkfState<NUM_PARAMS> {
    pub fn deviation(&self) -> DeviationVector {
        DeviationVector(self.eta)
    }
}

/// Symmetry and definiteness diagnostics of a covariance matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceHealth {
    /// Largest |P − Pᵀ| entry relative to the largest |P| entry.
    pub asymmetry: f64,
    pub min_eigenvalue: f64,
    pub trace: f64,
}

impl CovarianceHealth {
    pub fn of<const N: usize>(p: &Covariance<N>) -> Self {
        let scale = p.abs().max().max(f64::MIN_POSITIVE);
        let asymmetry = (p - p.transpose()).abs().max() / scale;
        let sym = (p + p.transpose()) * 0.5;
        let dense = DMatrix::from_column_slice(N, N, sym.as_slice());
        let min_eigenvalue = SymmetricEigen::new(dense).eigenvalues.min();
        Self {
            asymmetry,
            min_eigenvalue,
            trace: p.trace(),
        }
    }

    /// Symmetric within 1e-9 relative and min eigenvalue ≥ −1e-9·trace.
    pub fn is_ok(&self) -> bool {
        self.asymmetry <= 1e-9 && self.min_eigenvalue >= -1e-9 * self.trace.abs()
    }
}

/// Process noise, measurement noise and prior covariance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EkfNoiseConfig {
    pub process: Covariance,
    /// Cable-length measurement variance in mm².
    pub measurement_var: f64,
    pub initial_cov: Covariance,
}

impl Default for EkfNoiseConfig {
    fn default() -> Self {
        Self::with_measurement_sigma(0.1)
    }
}

impl EkfNoiseConfig {
    /// Default prior (1 mm² for lengths, 1e-2 rad² for angles) and
    /// process noise `1e-12·I`, with the given sensor standard deviation (mm).
    pub fn with_measurement_sigma(sigma: f64) -> Self {
        let diag = SVector::<f64, NUM_PARAMS>::from_fn(|i, _| {
            if ParamGroup::of_index(i).0.is_angular() {
                1e-2
            } else {
                1.0
            }
        });
        Self {
            process: Covariance::identity() * 1e-12,
            measurement_var: sigma * sigma,
            initial_cov: Covariance::from_diagonal(&diag),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.measurement_var > 0.0 && self.measurement_var.is_finite()) {
            return Err(Error::invalid("measurement variance must be positive"));
        }
        for (name, m) in [("process", &self.process), ("initial", &self.initial_cov)] {
            if !CovarianceHealth::of(m).is_ok() {
                return Err(Error::invalid(format!(
                    "{name} covariance must be symmetric positive semi-definite"
                )));
            }
        }
        Ok(())
    }
}

/// Time update with identity dynamics: `P ← P + Q`.
pub fn predict<const N: usize>(state: &EkfState<N>, q: &Covariance<N>) -> EkfState<N> {
    EkfState {
        eta: state.eta,
        covariance: state.covariance + q,
        k: state.k,
    }
}

/// Kalman gain `P Hᵀ (H P Hᵀ + R)⁻¹` for a scalar measurement.
pub fn gain<const N: usize>(
    p_pred: &Covariance<N>,
    h: &ObservationRow<N>,
    r: f64,
) -> Result<SVector<f64, N>> {
    let ph = p_pred * h.transpose();
    let s = (h * ph)[0] + r;
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::Numerical {
            sample: None,
            reason: format!("innovation variance {s} is not positive"),
        });
    }
    Ok(ph / s)
}

/// Measurement update: `η ← η + K (z − H η)`, `P ← (I − K H) P`, then `P`
/// is symmetrized.
pub fn update<const N: usize>(
    state: &EkfState<N>,
    z: f64,
    h: &ObservationRow<N>,
    r: f64,
) -> Result<EkfState<N>> {
    let k = gain(&state.covariance, h, r)?;
    let innovation = z - (h * state.eta)[0];
    let eta = state.eta + k * innovation;
    let mut p = state.covariance - k * (h * state.covariance);
    p = (p + p.transpose()) * 0.5;
    Ok(EkfState {
        eta,
        covariance: p,
        k: state.k + 1,
    })
}

/// One row of the per-sample filter trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EkfTraceEntry {
    pub k: usize,
    /// `z − H η` before the update (mm).
    pub innovation: f64,
    /// `H P Hᵀ + R` (mm²).
    pub innovation_variance: f64,
    /// Trace of `P` after the update.
    pub trace_p: f64,
}

#[derive(Debug, Clone)]
pub struct EkfRun {
    pub estimate: DeviationVector,
    pub covariance: Covariance,
    pub trace: Vec<EkfTraceEntry>,
}

/// Filters the dataset once, in order, starting from `η = 0` and the prior
/// covariance.
///
/// With `relinearize` the distance Jacobian and predicted cable length are
/// evaluated at the running estimate; otherwise both are frozen at `η = 0`,
/// which makes the filter an ordinary linear Kalman filter.
pub fn run_ekf(
    table: &DhTable,
    data: &Dataset,
    noise: &EkfNoiseConfig,
    relinearize: bool,
) -> Result<EkfRun> {
    run_ekf_from(table, data, noise, relinearize, &DeviationVector::zeros())
}

/// As [`run_ekf`], with the prior mean (and the frozen linearization point)
/// at `origin` instead of zero.
pub fn run_ekf_from(
    table: &DhTable,
    data: &Dataset,
    noise: &EkfNoiseConfig,
    relinearize: bool,
    origin: &DeviationVector,
) -> Result<EkfRun> {
    if data.is_empty() {
        return Err(Error::invalid("dataset is empty"));
    }
    noise.validate()?;
    let r = noise.measurement_var;
    let p0 = data.p0();
    let mut state = EkfState::new(origin.0, noise.initial_cov);
    let mut trace = Vec::with_capacity(data.len());
    let frozen = apply_deviation(table, origin);

    for (i, sample) in data.samples().iter().enumerate() {
        state = predict(&state, &noise.process);
        let lin = if relinearize { state.eta } else { origin.0 };
        let lin_table = if relinearize {
            apply_deviation(table, &DeviationVector(lin))
        } else {
            frozen.clone()
        };
        let h = distance_jacobian(&lin_table, &sample.q, p0).map_err(|e| e.at_sample(i))?;
        // Measurement expressed so that z − Hη = y − ŷ(lin) − H(η − lin).
        let z = sample.y - predicted_length(&lin_table, &sample.q, p0) + (h * lin)[0];
        let innovation = z - (h * state.eta)[0];
        let innovation_variance = (h * state.covariance * h.transpose())[0] + r;
        state = update(&state, z, &h, r).map_err(|e| e.at_sample(i))?;
        trace.push(EkfTraceEntry {
            k: state.k,
            innovation,
            innovation_variance,
            trace_p: state.covariance.trace(),
        });
    }

    Ok(EkfRun {
        estimate: state.deviation(),
        covariance: state.covariance,
        trace,
    })
}

/// Filter settings used by the calibration pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EkfConfig {
    pub noise: EkfNoiseConfig,
    pub relinearize: bool,
    /// Number of sweeps over the data. Every sweep after the first restarts
    /// from the prior covariance, centred on the previous sweep's estimate.
    pub passes: usize,
}

impl Default for EkfConfig {
    fn default() -> Self {
        Self {
            noise: EkfNoiseConfig::default(),
            relinearize: true,
            passes: 1,
        }
    }
}

/// Runs `cfg.passes` sweeps; the trace concatenates all sweeps with `k`
/// counting measurements across them, and the covariance is the last sweep's.
pub fn run_ekf_passes(table: &DhTable, data: &Dataset, cfg: &EkfConfig) -> Result<EkfRun> {
    if cfg.passes == 0 {
        return Err(Error::invalid("EKF needs at least one pass"));
    }
    let mut run = run_ekf(table, data, &cfg.noise, cfg.relinearize)?;
    for _ in 1..cfg.passes {
        let next = run_ekf_from(table, data, &cfg.noise, cfg.relinearize, &run.estimate)?;
        let offset = run.trace.len();
        run.trace.extend(next.trace.into_iter().map(|mut e| {
            e.k += offset;
            e
        }));
        run.estimate = next.estimate;
        run.covariance = next.covariance;
    }
    Ok(run)
}
