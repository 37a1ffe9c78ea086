//! Synthetic measurement campaigns with known ground truth.
//!
//! Stands in for a physical draw-wire rig: joint configurations are drawn
//! uniformly inside the joint limits, a hidden deviation vector perturbs the
//! nominal table, and cable lengths from the perturbed robot are corrupted
//! by a configurable noise model.

use std::fmt;
use std::str::FromStr;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::error_model::{predicted_length, Dataset, MeasurementSample, MIN_CABLE_LENGTH};
use crate::kinematics::{
    apply_deviation, DeviationVector, DhTable, JointVector, ParamGroup, NUM_JOINTS, NUM_PARAMS,
};

/// Additive cable-length noise. Serialized in its `KIND:PARAMS` text form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum NoiseKind {
    None,
    Gaussian {
        sigma: f64,
    },
    Uniform {
        half_width: f64,
    },
    /// Gaussian with probability `1 − outlier_prob`, otherwise Gaussian with
    /// standard deviation `outlier_scale · sigma`.
    Mixture {
        sigma: f64,
        outlier_prob: f64,
        outlier_scale: f64,
    },
}

impl NoiseKind {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            NoiseKind::None => true,
            NoiseKind::Gaussian { sigma } => sigma >= 0.0 && sigma.is_finite(),
            NoiseKind::Uniform { half_width } => half_width >= 0.0 && half_width.is_finite(),
            NoiseKind::Mixture {
                sigma,
                outlier_prob,
                outlier_scale,
            } => {
                sigma >= 0.0
                    && sigma.is_finite()
                    && (0.0..=1.0).contains(&outlier_prob)
                    && outlier_scale >= 1.0
                    && outlier_scale.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("invalid noise model {self}")))
        }
    }

    /// Nominal standard deviation of the inlier component (mm).
    pub fn sigma(&self) -> f64 {
        match *self {
            NoiseKind::None => 0.0,
            NoiseKind::Gaussian { sigma } | NoiseKind::Mixture { sigma, .. } => sigma,
            NoiseKind::Uniform { half_width } => half_width / 3f64.sqrt(),
        }
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> f64 {
        match *self {
            NoiseKind::None => 0.0,
            NoiseKind::Gaussian { sigma } => {
                sigma * rng.sample::<f64, _>(rand_distr::StandardNormal)
            }
            NoiseKind::Uniform { half_width } => {
                if half_width == 0.0 {
                    0.0
                } else {
                    rng.random_range(-half_width..=half_width)
                }
            }
            NoiseKind::Mixture {
                sigma,
                outlier_prob,
                outlier_scale,
            } => {
                let outlier = rng.random_bool(outlier_prob);
                let z: f64 = rng.sample(rand_distr::StandardNormal);
                if outlier {
                    z * sigma * outlier_scale
                } else {
                    z * sigma
                }
            }
        }
    }
}

/// `KIND:PARAMS`, e.g. `none`, `gaussian:0.1`, `uniform:0.2`, `mixture:0.1,0.05,10`.
impl FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, params) = s.split_once(':').unwrap_or((s, ""));
        let values: Vec<f64> = if params.trim().is_empty() {
            Vec::new()
        } else {
            params
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::invalid(format!("noise spec '{s}': {e}")))?
        };
        let noise = match (kind.trim().to_ascii_lowercase().as_str(), values.as_slice()) {
            ("none", []) => NoiseKind::None,
            ("gaussian", [sigma]) => NoiseKind::Gaussian { sigma: *sigma },
            ("uniform", [half_width]) => NoiseKind::Uniform {
                half_width: *half_width,
            },
            ("mixture", [sigma, p, scale]) => NoiseKind::Mixture {
                sigma: *sigma,
                outlier_prob: *p,
                outlier_scale: *scale,
            },
            _ => {
                return Err(Error::invalid(format!(
                    "noise spec '{s}': expected none, gaussian:SIGMA, uniform:HALF_WIDTH \
                     or mixture:SIGMA,OUTLIER_PROB,OUTLIER_SCALE"
                )))
            }
        };
        noise.validate()?;
        Ok(noise)
    }
}

impl TryFrom<String> for NoiseKind {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<NoiseKind> for String {
    fn from(n: NoiseKind) -> String {
        n.to_string()
    }
}

impl fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            NoiseKind::None => write!(f, "none"),
            NoiseKind::Gaussian { sigma } => write!(f, "gaussian:{sigma}"),
            NoiseKind::Uniform { half_width } => write!(f, "uniform:{half_width}"),
            NoiseKind::Mixture {
                sigma,
                outlier_prob,
                outlier_scale,
            } => write!(f, "mixture:{sigma},{outlier_prob},{outlier_scale}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub kind: NoiseKind,
    pub seed: u64,
}

/// Magnitude caps for a random ground-truth deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviationSpec {
    pub max_a: f64,
    pub max_d: f64,
    pub max_alpha: f64,
    pub max_theta: f64,
    pub seed: u64,
}

impl DeviationSpec {
    /// 1 mm on lengths and 0.01 rad on angles.
    pub fn default_caps(seed: u64) -> Self {
        Self {
            max_a: 1.0,
            max_d: 1.0,
            max_alpha: 0.01,
            max_theta: 0.01,
            seed,
        }
    }

    pub fn cap(&self, group: ParamGroup) -> f64 {
        match group {
            ParamGroup::A => self.max_a,
            ParamGroup::D => self.max_d,
            ParamGroup::Alpha => self.max_alpha,
            ParamGroup::Theta => self.max_theta,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if ParamGroup::ALL
            .iter()
            .all(|&g| self.cap(g) >= 0.0 && self.cap(g).is_finite())
        {
            Ok(())
        } else {
            Err(Error::invalid("deviation caps must be finite and >= 0"))
        }
    }
}

/// `n` configurations drawn uniformly inside the joint limits.
pub fn sample_joint_configs(n: usize, table: &DhTable, seed: u64) -> Result<Vec<JointVector>> {
    if n == 0 {
        return Err(Error::invalid("need at least one joint configuration"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dists: Vec<Uniform<f64>> = table
        .joint_limits()
        .iter()
        .map(|l| Uniform::new_inclusive(l.min, l.max).expect("validated limits"))
        .collect();
    Ok((0..n)
        .map(|_| {
            let mut q = [0.0; NUM_JOINTS];
            for (qi, dist) in q.iter_mut().zip(&dists) {
                *qi = dist.sample(&mut rng);
            }
            JointVector(q)
        })
        .collect())
}

/// Random deviation with every component uniform in `[−cap, cap]` of its group.
pub fn inject_deviation(spec: &DeviationSpec) -> Result<DeviationVector> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut delta = DeviationVector::zeros();
    for i in 0..NUM_PARAMS {
        let cap = spec.cap(ParamGroup::of_index(i).0);
        // Draw unconditionally so each component keeps its stream position.
        let u: f64 = rng.random_range(-1.0..=1.0);
        delta[i] = cap * u;
    }
    Ok(delta)
}

/// A simulated campaign together with the truth that produced it.
#[derive(Debug, Clone)]
pub struct SimulatedDataset {
    pub dataset: Dataset,
    pub true_delta: DeviationVector,
    pub noise: NoiseModel,
    /// Cable lengths before noise was added.
    pub noise_free: Vec<f64>,
}

pub fn simulate_measurements(
    nominal: &DhTable,
    true_delta: &DeviationVector,
    configs: &[JointVector],
    p0: &Vector3<f64>,
    noise: &NoiseModel,
) -> Result<SimulatedDataset> {
    noise.kind.validate()?;
    let actual = apply_deviation(nominal, true_delta);
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    let mut samples = Vec::with_capacity(configs.len());
    let mut noise_free = Vec::with_capacity(configs.len());
    for (i, q) in configs.iter().enumerate() {
        let length = predicted_length(&actual, q, p0);
        if !(length > MIN_CABLE_LENGTH) {
            return Err(Error::DegenerateGeometry {
                index: Some(i),
                distance: length,
            });
        }
        let y = (length + noise.kind.draw(&mut rng)).max(0.0);
        noise_free.push(length);
        samples.push(MeasurementSample { q: *q, y });
    }
    Ok(SimulatedDataset {
        dataset: Dataset::new(samples, *p0)?,
        true_delta: *true_delta,
        noise: *noise,
        noise_free,
    })
}

/// Everything needed to generate one synthetic campaign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub n_samples: usize,
    pub noise: NoiseKind,
    pub max_a: f64,
    pub max_d: f64,
    pub max_alpha: f64,
    pub max_theta: f64,
}

impl Default for Scenario {
    /// 120 samples, caps 1 mm / 0.01 rad, Gaussian noise with σ = 0.1 mm.
    fn default() -> Self {
        Self {
            n_samples: 120,
            noise: NoiseKind::Gaussian { sigma: 0.1 },
            max_a: 1.0,
            max_d: 1.0,
            max_alpha: 0.01,
            max_theta: 0.01,
        }
    }
}

impl Scenario {
    pub fn deviation_spec(&self, seed: u64) -> DeviationSpec {
        DeviationSpec {
            max_a: self.max_a,
            max_d: self.max_d,
            max_alpha: self.max_alpha,
            max_theta: self.max_theta,
            seed,
        }
    }

    /// Seeds of the configuration, deviation and noise streams.
    pub fn stream_seeds(seed: u64) -> [u64; 3] {
        derive_seeds(seed)
    }

    /// Generates the campaign; the three random streams (configurations,
    /// deviation, noise) are derived from `seed`.
    pub fn generate(
        &self,
        nominal: &DhTable,
        p0: &Vector3<f64>,
        seed: u64,
    ) -> Result<SimulatedDataset> {
        let [config_seed, delta_seed, noise_seed] = Self::stream_seeds(seed);
        let configs = sample_joint_configs(self.n_samples, nominal, config_seed)?;
        let delta = inject_deviation(&self.deviation_spec(delta_seed))?;
        simulate_measurements(
            nominal,
            &delta,
            &configs,
            p0,
            &NoiseModel {
                kind: self.noise,
                seed: noise_seed,
            },
        )
    }
}

/// Independent sub-seeds from one user seed.
pub fn derive_seeds<const N: usize>(seed: u64) -> [u64; N] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    std::array::from_fn(|_| rng.random())
}
