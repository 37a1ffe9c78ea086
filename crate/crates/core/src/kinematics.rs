//! Denavit–Hartenberg forward kinematics for a 6-joint serial chain.
//!
//! Each link uses the standard (distal) convention
//! `A = Rot_z(θ) · Trans_z(d) · Trans_x(a) · Rot_x(α)` where the joint angle
//! is the commanded angle plus a calibratable offset, `θ = q + theta_offset`.

use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use nalgebra::{Matrix3, Matrix4, SVector, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const NUM_JOINTS: usize = 6;
/// Four DH deviations per joint.
pub const NUM_PARAMS: usize = 4 * NUM_JOINTS;

/// DH parameters of one link. Lengths in mm, angles in rad.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LinkParams {
    pub a: f64,
    pub d: f64,
    pub theta_offset: f64,
    pub alpha: f64,
}

impl LinkParams {
    pub const fn new(a: f64, d: f64, theta_offset: f64, alpha: f64) -> Self {
        Self {
            a,
            d,
            theta_offset,
            alpha,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.a.is_finite()
            && self.d.is_finite()
            && self.theta_offset.is_finite()
            && self.alpha.is_finite()
    }
}

/// Closed joint-angle interval in rad.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointLimit {
    pub min: f64,
    pub max: f64,
}

impl JointLimit {
    pub const fn new(min: f64, max: f64) -> Self {
        Self { min, max }
    }

    pub fn contains(&self, q: f64) -> bool {
        q >= self.min && q <= self.max
    }
}

/// Nominal kinematic description of the robot: six links and their joint limits.
#[derive(Debug, Clone, PartialEq)]
pub struct DhTable {
    links: [LinkParams; NUM_JOINTS],
    joint_limits: [JointLimit; NUM_JOINTS],
}

impl DhTable {
    pub fn new(
        links: [LinkParams; NUM_JOINTS],
        joint_limits: [JointLimit; NUM_JOINTS],
    ) -> Result<Self> {
        for (i, link) in links.iter().enumerate() {
            if !link.is_finite() {
                return Err(Error::invalid(format!(
                    "link {} has a non-finite parameter",
                    i + 1
                )));
            }
        }
        for (i, lim) in joint_limits.iter().enumerate() {
            if !(lim.min.is_finite() && lim.max.is_finite() && lim.min < lim.max) {
                return Err(Error::invalid(format!(
                    "joint {} limits must satisfy min < max (got {}, {})",
                    i + 1,
                    lim.min,
                    lim.max
                )));
            }
        }
        Ok(Self {
            links,
            joint_limits,
        })
    }

    /// Table with every parameter zero and joint limits of ±π.
    pub fn zero() -> Self {
        Self::from_links([LinkParams::default(); NUM_JOINTS])
    }

    /// Builds a table with ±π joint limits. Panics on non-finite parameters.
    pub fn from_links(links: [LinkParams; NUM_JOINTS]) -> Self {
        let lim = JointLimit::new(-std::f64::consts::PI, std::f64::consts::PI);
        Self::new(links, [lim; NUM_JOINTS]).expect("finite link parameters")
    }

    pub fn links(&self) -> &[LinkParams; NUM_JOINTS] {
        &self.links
    }

    pub fn joint_limits(&self) -> &[JointLimit; NUM_JOINTS] {
        &self.joint_limits
    }

    /// Sum of |a| and |d| over all links; bounds the distance from base to flange.
    pub fn reach(&self) -> f64 {
        self.links.iter().map(|l| l.a.abs() + l.d.abs()).sum()
    }

    pub fn within_limits(&self, q: &JointVector) -> bool {
        q.0.iter()
            .zip(&self.joint_limits)
            .all(|(&qi, lim)| lim.contains(qi))
    }
}

/// Six commanded joint angles in rad.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct JointVector(pub [f64; NUM_JOINTS]);

impl JointVector {
    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|q| q.is_finite())
    }
}

impl From<[f64; NUM_JOINTS]> for JointVector {
    fn from(q: [f64; NUM_JOINTS]) -> Self {
        Self(q)
    }
}

/// Rigid end-effector pose: rotation block and position column of the
/// flange transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub rotation: Matrix3<f64>,
    pub position: Vector3<f64>,
}

impl Pose {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            position: Vector3::zeros(),
        }
    }

    pub fn from_homogeneous(t: &Matrix4<f64>) -> Self {
        Self {
            rotation: t.fixed_view::<3, 3>(0, 0).into_owned(),
            position: t.fixed_view::<3, 1>(0, 3).into_owned(),
        }
    }

    pub fn to_homogeneous(&self) -> Matrix4<f64> {
        let mut t = Matrix4::identity();
        t.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        t.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.position);
        t
    }
}

/// Which DH parameter a deviation component corrects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ParamGroup {
    A,
    D,
    Alpha,
    Theta,
}

impl ParamGroup {
    /// Storage order inside [`DeviationVector`].
    pub const ALL: [ParamGroup; 4] = [
        ParamGroup::A,
        ParamGroup::D,
        ParamGroup::Alpha,
        ParamGroup::Theta,
    ];

    pub fn is_angular(self) -> bool {
        matches!(self, ParamGroup::Alpha | ParamGroup::Theta)
    }

    /// Flat index of this group's entry for `link` (0-based).
    pub fn index(self, link: usize) -> usize {
        debug_assert!(link < NUM_JOINTS);
        let block = match self {
            ParamGroup::A => 0,
            ParamGroup::D => 1,
            ParamGroup::Alpha => 2,
            ParamGroup::Theta => 3,
        };
        block * NUM_JOINTS + link
    }

    /// Inverse of [`ParamGroup::index`].
    pub fn of_index(index: usize) -> (ParamGroup, usize) {
        (Self::ALL[index / NUM_JOINTS], index % NUM_JOINTS)
    }

    pub fn label(self) -> &'static str {
        match self {
            ParamGroup::A => "a",
            ParamGroup::D => "d",
            ParamGroup::Alpha => "alpha",
            ParamGroup::Theta => "theta",
        }
    }
}

/// The 24 parameter corrections, ordered
/// `[Δa₁..Δa₆, Δd₁..Δd₆, Δα₁..Δα₆, Δθ₁..Δθ₆]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviationVector(pub SVector<f64, NUM_PARAMS>);

impl Default for DeviationVector {
    fn default() -> Self {
        Self::zeros()
    }
}

impl DeviationVector {
    pub fn zeros() -> Self {
        Self(SVector::zeros())
    }

    pub fn from_slice(values: &[f64]) -> Result<Self> {
        if values.len() != NUM_PARAMS {
            return Err(Error::invalid(format!(
                "deviation vector needs {NUM_PARAMS} entries, got {}",
                values.len()
            )));
        }
        Ok(Self(SVector::from_column_slice(values)))
    }

    pub fn get(&self, group: ParamGroup, link: usize) -> f64 {
        self.0[group.index(link)]
    }

    pub fn set(&mut self, group: ParamGroup, link: usize, value: f64) {
        self.0[group.index(link)] = value;
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl Index<usize> for DeviationVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for DeviationVector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

impl Add for DeviationVector {
    type Output = DeviationVector;
    fn add(self, rhs: Self) -> Self {
        Self(self.0 + rhs.0)
    }
}

impl Sub for DeviationVector {
    type Output = DeviationVector;
    fn sub(self, rhs: Self) -> Self {
        Self(self.0 - rhs.0)
    }
}

impl Mul<f64> for DeviationVector {
    type Output = DeviationVector;
    fn mul(self, rhs: f64) -> Self {
        Self(self.0 * rhs)
    }
}

impl Neg for DeviationVector {
    type Output = DeviationVector;
    fn neg(self) -> Self {
        Self(-self.0)
    }
}

/// Homogeneous transform of one link at commanded angle `q`.
pub fn link_transform(link: &LinkParams, q: f64) -> Result<Matrix4<f64>> {
    if !link.is_finite() || !q.is_finite() {
        return Err(Error::invalid(
            "link transform needs finite parameters and joint angle",
        ));
    }
    Ok(link_matrix(link, q))
}

pub(crate) fn link_matrix(link: &LinkParams, q: f64) -> Matrix4<f64> {
    let (st, ct) = (q + link.theta_offset).sin_cos();
    let (sa, ca) = link.alpha.sin_cos();
    #[rustfmt::skip]
    let m = Matrix4::new(
        ct, -st * ca,  st * sa, link.a * ct,
        st,  ct * ca, -ct * sa, link.a * st,
        0.0,      sa,       ca, link.d,
        0.0,     0.0,      0.0, 1.0,
    );
    m
}

/// Product `A₁ A₂ … A₆`, multiplied left to right.
pub fn forward_kinematics(table: &DhTable, q: &JointVector) -> Result<Pose> {
    if !q.is_finite() {
        return Err(Error::invalid("joint vector has a non-finite angle"));
    }
    Ok(Pose::from_homogeneous(&chain_transform(table, q)))
}

pub(crate) fn chain_transform(table: &DhTable, q: &JointVector) -> Matrix4<f64> {
    table
        .links
        .iter()
        .zip(q.0.iter())
        .fold(Matrix4::identity(), |acc, (link, &qi)| {
            acc * link_matrix(link, qi)
        })
}

/// Flange position only.
pub(crate) fn flange_position(table: &DhTable, q: &JointVector) -> Vector3<f64> {
    chain_transform(table, q)
        .fixed_view::<3, 1>(0, 3)
        .into_owned()
}

/// Entrywise `actual − nominal` of the two homogeneous transforms.
pub fn pose_error(actual: &Pose, nominal: &Pose) -> Matrix4<f64> {
    actual.to_homogeneous() - nominal.to_homogeneous()
}

/// Straight-line cable length between the flange and the anchor point.
pub fn cable_length(p: &Vector3<f64>, p0: &Vector3<f64>) -> f64 {
    (p - p0).norm()
}

/// Returns a copy of `nominal` with every parameter shifted by its deviation.
pub fn apply_deviation(nominal: &DhTable, delta: &DeviationVector) -> DhTable {
    let mut out = nominal.clone();
    for (i, link) in out.links.iter_mut().enumerate() {
        link.a += delta.get(ParamGroup::A, i);
        link.d += delta.get(ParamGroup::D, i);
        link.alpha += delta.get(ParamGroup::Alpha, i);
        link.theta_offset += delta.get(ParamGroup::Theta, i);
    }
    out
}
