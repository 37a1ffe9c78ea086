//! Differential error model linking DH deviations to cable-length residuals.

use nalgebra::{Matrix4, SMatrix, Vector3, Vector4};

use crate::error::{Error, Result};
use crate::kinematics::{
    apply_deviation, cable_length, flange_position, link_matrix, DeviationVector, DhTable,
    JointVector, LinkParams, ParamGroup, NUM_JOINTS, NUM_PARAMS,
};

/// Below this cable length (mm) the cable direction is treated as undefined.
pub const MIN_CABLE_LENGTH: f64 = 1e-6;

/// Sensitivity of the flange position to each of the 24 deviations.
pub type PositionJacobian = SMatrix<f64, 3, NUM_PARAMS>;
/// Sensitivity of the predicted cable length to each of the 24 deviations.
pub type DistanceJacobian = SMatrix<f64, 1, NUM_PARAMS>;

/// Analytic partial derivatives of one link transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DhPartials {
    pub d_alpha: Matrix4<f64>,
    pub d_a: Matrix4<f64>,
    pub d_d: Matrix4<f64>,
    pub d_theta: Matrix4<f64>,
}

impl DhPartials {
    pub fn get(&self, group: ParamGroup) -> &Matrix4<f64> {
        match group {
            ParamGroup::A => &self.d_a,
            ParamGroup::D => &self.d_d,
            ParamGroup::Alpha => &self.d_alpha,
            ParamGroup::Theta => &self.d_theta,
        }
    }
}

pub fn dh_partials(link: &LinkParams, q: f64) -> Result<DhPartials> {
    if !link.is_finite() || !q.is_finite() {
        return Err(Error::invalid(
            "DH partials need finite parameters and joint angle",
        ));
    }
    Ok(partials(link, q))
}

#[rustfmt::skip]
fn partials(link: &LinkParams, q: f64) -> DhPartials {
    let (st, ct) = (q + link.theta_offset).sin_cos();
    let (sa, ca) = link.alpha.sin_cos();
    let a = link.a;
    DhPartials {
        d_alpha: Matrix4::new(
            0.0,  st * sa, st * ca, 0.0,
            0.0, -ct * sa, -ct * ca, 0.0,
            0.0,       ca,     -sa, 0.0,
            0.0,      0.0,     0.0, 0.0,
        ),
        d_a: Matrix4::new(
            0.0, 0.0, 0.0, ct,
            0.0, 0.0, 0.0, st,
            0.0, 0.0, 0.0, 0.0,
            0.0, 0.0, 0.0, 0.0,
        ),
        d_d: Matrix4::new(
            0.0, 0.0, 0.0, 0.0,
            0.0, 0.0, 0.0, 0.0,
            0.0, 0.0, 0.0, 1.0,
            0.0, 0.0, 0.0, 0.0,
        ),
        d_theta: Matrix4::new(
            -st, -ct * ca,  ct * sa, -a * st,
             ct, -st * ca,  st * sa,  a * ct,
            0.0,      0.0,      0.0,     0.0,
            0.0,      0.0,      0.0,     0.0,
        ),
    }
}

/// Position rows of the extended Jacobian, by the chain rule over
/// `A₁ ⋯ A₆`: `∂p/∂η = (A₁⋯A_{i−1}) ∂A_i (A_{i+1}⋯A₆) e₄`.
pub fn position_jacobian(table: &DhTable, q: &JointVector) -> Result<PositionJacobian> {
    if !q.is_finite() {
        return Err(Error::invalid("joint vector has a non-finite angle"));
    }
    let links = table.links();
    let transforms: [Matrix4<f64>; NUM_JOINTS] =
        std::array::from_fn(|i| link_matrix(&links[i], q.0[i]));

    let mut prefix = [Matrix4::identity(); NUM_JOINTS];
    for i in 1..NUM_JOINTS {
        prefix[i] = prefix[i - 1] * transforms[i - 1];
    }
    // suffix[i] = A_{i+1} ⋯ A₆ applied to the flange origin.
    let mut suffix = [Vector4::new(0.0, 0.0, 0.0, 1.0); NUM_JOINTS];
    for i in (0..NUM_JOINTS - 1).rev() {
        suffix[i] = transforms[i + 1] * suffix[i + 1];
    }

    let mut jac = PositionJacobian::zeros();
    for i in 0..NUM_JOINTS {
        let parts = partials(&links[i], q.0[i]);
        for group in ParamGroup::ALL {
            let col = prefix[i] * (parts.get(group) * suffix[i]);
            jac.fixed_view_mut::<3, 1>(0, group.index(i))
                .copy_from(&col.fixed_rows::<3>(0));
        }
    }
    Ok(jac)
}

/// Row of cable-length sensitivities, `uᵀ ∂p/∂η` with `u` the unit vector
/// from the anchor to the flange.
pub fn distance_jacobian(
    table: &DhTable,
    q: &JointVector,
    p0: &Vector3<f64>,
) -> Result<DistanceJacobian> {
    let p = flange_position(table, q);
    let u = cable_direction(&p, p0)?;
    Ok(u.transpose() * position_jacobian(table, q)?)
}

fn cable_direction(p: &Vector3<f64>, p0: &Vector3<f64>) -> Result<Vector3<f64>> {
    let diff = p - p0;
    let len = diff.norm();
    if !(len > MIN_CABLE_LENGTH) {
        return Err(Error::DegenerateGeometry {
            index: None,
            distance: len,
        });
    }
    Ok(diff / len)
}

/// One measurement: a joint configuration and the cable length read at it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementSample {
    pub q: JointVector,
    /// Measured cable length in mm.
    pub y: f64,
}

/// A set of cable-length measurements sharing one anchor point.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    samples: Vec<MeasurementSample>,
    p0: Vector3<f64>,
}

impl Dataset {
    pub fn new(samples: Vec<MeasurementSample>, p0: Vector3<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("dataset is empty"));
        }
        if !p0.iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("anchor point must be finite"));
        }
        for (i, s) in samples.iter().enumerate() {
            if !s.q.is_finite() || !s.y.is_finite() || s.y < 0.0 {
                return Err(Error::invalid(format!(
                    "sample {i}: joint angles must be finite and cable length finite and >= 0"
                )));
            }
        }
        Ok(Self { samples, p0 })
    }

    pub fn samples(&self) -> &[MeasurementSample] {
        &self.samples
    }

    pub fn p0(&self) -> &Vector3<f64> {
        &self.p0
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Checks every configuration against the table's joint limits.
    pub fn check_limits(&self, table: &DhTable) -> Result<()> {
        match self.samples.iter().position(|s| !table.within_limits(&s.q)) {
            Some(i) => Err(Error::invalid(format!(
                "sample {i} violates the joint limits"
            ))),
            None => Ok(()),
        }
    }

    pub(crate) fn subset(&self, indices: &[usize]) -> Result<Dataset> {
        Dataset::new(indices.iter().map(|&i| self.samples[i]).collect(), self.p0)
    }
}

/// Cable length predicted by `table` at configuration `q`.
pub fn predicted_length(table: &DhTable, q: &JointVector, p0: &Vector3<f64>) -> f64 {
    cable_length(&flange_position(table, q), p0)
}

/// Signed residuals `Y_i − Y'_i` under the deviated table.
pub fn residuals(table: &DhTable, delta: &DeviationVector, data: &Dataset) -> Result<Vec<f64>> {
    if data.is_empty() {
        return Err(Error::invalid("dataset is empty"));
    }
    let actual = apply_deviation(table, delta);
    Ok(data
        .samples
        .iter()
        .map(|s| s.y - predicted_length(&actual, &s.q, &data.p0))
        .collect())
}

/// Mean squared cable-length residual in mm².
pub fn objective(table: &DhTable, delta: &DeviationVector, data: &Dataset) -> Result<f64> {
    let r = residuals(table, delta, data)?;
    Ok(r.iter().map(|e| e * e).sum::<f64>() / r.len() as f64)
}
