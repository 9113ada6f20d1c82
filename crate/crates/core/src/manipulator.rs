//! Planar two-link manipulator: inertia, Jacobian, transparency metrics and the
//! projection of a task-space collision onto the 1D reflex model.
//!
//! Joint-space inertia is split into the structure block `M_bb` (links) and
//! the actuator block `M_jj` (reflected rotor inertias, diagonal). The two are
//! separated by the joint springs `K`, so a collision along a task direction
//! `u` sees `M_bb` during the plastic impact and `M_jj` during the reaction.

use nalgebra::{Matrix2, Vector2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::actuator::MotorSpec;
use crate::error::{non_negative, positive, Error, Result};
use crate::reflex::{total_impulse, CollisionParams1D, PhaseBreakdown, SensingMode, StiffnessLumping};

/// Inertial description of one link, taken about its proximal joint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkInertia {
    /// kg
    pub mass: f64,
    /// Distance from the proximal joint to the centre of mass, m.
    pub com: f64,
    /// Rotary inertia about the proximal joint axis, kg·m².
    pub inertia: f64,
}

impl LinkInertia {
    pub fn uniform_rod(mass: f64, length: f64) -> Self {
        Self {
            mass,
            com: 0.5 * length,
            inertia: mass * length * length / 3.0,
        }
    }

    pub fn point_mass(mass: f64, distance: f64) -> Self {
        Self {
            mass,
            com: distance,
            inertia: mass * distance * distance,
        }
    }

    pub fn massless() -> Self {
        Self::point_mass(0.0, 0.0)
    }
}

/// Joint actuator as seen at the joint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointActuator {
    /// `N² J_m`, kg·m².
    pub reflected_inertia: f64,
    /// Output torque limit, N·m.
    pub torque_limit: f64,
}

impl JointActuator {
    pub fn from_motor(motor: &MotorSpec) -> Self {
        Self {
            reflected_inertia: motor.reflected_inertia(),
            torque_limit: motor.output_peak_torque(),
        }
    }
}

/// Which stiffness the sensing phase sees after projection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SensingStiffness {
    /// Only the projected joint stiffness `u^T K_t u`.
    #[default]
    JointOnly,
    /// Projected joint stiffness in series with the contact stiffness.
    SeriesWithContact,
}

/// Interpretation of the torque-saturated task acceleration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccelerationMode {
    /// Largest force along `u` whose joint torques respect every limit.
    #[default]
    ScaledSaturation,
    /// `u^T J^-T sat(J^T u)` with per-joint clamping, taken literally.
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoLinkModel {
    pub l1: f64,
    pub l2: f64,
    pub links: [LinkInertia; 2],
    pub actuators: [JointActuator; 2],
    /// Diagonal joint stiffness, N·m/rad.
    pub joint_stiffness: [f64; 2],
    /// Scalar mechanical stiffness at the contact used for the reaction phase, N/m.
    pub contact_stiffness: f64,
    /// Off-diagonal block `M_bj` of the partitioned structure/actuator inertia.
    #[serde(default)]
    pub inertia_coupling: [[f64; 2]; 2],
    #[serde(default)]
    pub sensing_stiffness: SensingStiffness,
    #[serde(default)]
    pub acceleration_mode: AccelerationMode,
}

impl Default for TwoLinkModel {
    /// 150 mm links as 0.2 kg uniform rods, direct-drive Omni+ 60 mm motors at
    /// both joints, 100 N·m/rad joint stiffness and a 2e7 N/m contact.
    fn default() -> Self {
        let rod = LinkInertia::uniform_rod(0.2, 0.15);
        Self {
            l1: 0.15,
            l2: 0.15,
            links: [rod, rod],
            actuators: [JointActuator::from_motor(&MotorSpec::M2); 2],
            joint_stiffness: [100.0, 100.0],
            contact_stiffness: 2e7,
            inertia_coupling: [[0.0; 2]; 2],
            sensing_stiffness: SensingStiffness::JointOnly,
            acceleration_mode: AccelerationMode::ScaledSaturation,
        }
    }
}

impl TwoLinkModel {
    pub fn validate(&self) -> Result<()> {
        positive("l1", self.l1)?;
        positive("l2", self.l2)?;
        for link in &self.links {
            non_negative("link mass", link.mass)?;
            non_negative("link inertia", link.inertia)?;
            if !link.com.is_finite() {
                return Err(Error::domain("link com", link.com, "must be finite"));
            }
            if link.inertia < link.mass * link.com * link.com * (1.0 - 1e-12) {
                return Err(Error::InvalidModel(
                    "link inertia about the joint is below m·com² (parallel-axis bound)".into(),
                ));
            }
        }
        for act in &self.actuators {
            positive("reflected inertia", act.reflected_inertia)?;
            positive("torque limit", act.torque_limit)?;
        }
        for &k in &self.joint_stiffness {
            positive("joint stiffness", k)?;
        }
        positive("contact stiffness", self.contact_stiffness)?;
        if self.inertia_coupling.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidModel("inertia coupling must be finite".into()));
        }
        Ok(())
    }

    pub fn with_joint_motor(mut self, joint: usize, motor: &MotorSpec) -> Self {
        self.actuators[joint] = JointActuator::from_motor(motor);
        self
    }

    fn singular_tolerance(&self) -> f64 {
        1e-9 * self.l1 * self.l2
    }
}

/// Joint angles, with optional joint rates kept for trace replay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Configuration {
    pub q1: f64,
    pub q2: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qd: Option<[f64; 2]>,
}

impl Configuration {
    pub fn new(q1: f64, q2: f64) -> Self {
        Self { q1, q2, qd: None }
    }

    pub fn from_degrees(q1: f64, q2: f64) -> Self {
        Self::new(q1.to_radians(), q2.to_radians())
    }

    fn validate(&self) -> Result<()> {
        if self.q1.is_finite() && self.q2.is_finite() {
            Ok(())
        } else {
            Err(Error::domain("q", if self.q1.is_finite() { self.q2 } else { self.q1 }, "must be finite"))
        }
    }
}

/// A collision along unit direction `u` at pre-impact speed `v_0` with force threshold `f_s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContactSpec {
    pub u: [f64; 2],
    pub v_0: f64,
    pub f_s: f64,
}

impl ContactSpec {
    pub fn validate(&self) -> Result<()> {
        unit(self.u)?;
        positive("v_0", self.v_0)?;
        positive("F_s", self.f_s)?;
        Ok(())
    }
}

fn unit(u: [f64; 2]) -> Result<Vector2<f64>> {
    let v = Vector2::new(u[0], u[1]);
    let norm = v.norm();
    if (norm - 1.0).abs() <= 1e-12 {
        Ok(v)
    } else {
        Err(Error::domain("|u|", norm, "collision direction must be a unit vector"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InertiaSelector {
    /// `M_bb`
    Structure,
    /// `M_jj`
    Actuators,
    /// `M_bb + M_jj` (rigid drive train)
    Full,
}

/// Structure inertia `M_bb(q)`.
pub fn mass_matrix(model: &TwoLinkModel, q: &Configuration) -> Matrix2<f64> {
    let [a, b] = model.links;
    let cross = b.mass * model.l1 * b.com * q.q2.cos();
    let m22 = b.inertia;
    let m12 = b.inertia + cross;
    let m11 = a.inertia + b.inertia + b.mass * model.l1 * model.l1 + 2.0 * cross;
    Matrix2::new(m11, m12, m12, m22)
}

/// Diagonal reflected actuator inertia `M_jj`.
pub fn actuator_inertia(model: &TwoLinkModel) -> Matrix2<f64> {
    Matrix2::from_diagonal(&Vector2::new(
        model.actuators[0].reflected_inertia,
        model.actuators[1].reflected_inertia,
    ))
}

pub fn inertia(model: &TwoLinkModel, q: &Configuration, selector: InertiaSelector) -> Matrix2<f64> {
    match selector {
        InertiaSelector::Structure => mass_matrix(model, q),
        InertiaSelector::Actuators => actuator_inertia(model),
        InertiaSelector::Full => mass_matrix(model, q) + actuator_inertia(model),
    }
}

pub fn end_effector(model: &TwoLinkModel, q: &Configuration) -> Vector2<f64> {
    let q12 = q.q1 + q.q2;
    Vector2::new(
        model.l1 * q.q1.cos() + model.l2 * q12.cos(),
        model.l1 * q.q1.sin() + model.l2 * q12.sin(),
    )
}

/// End-effector Jacobian `d(position)/dq`.
pub fn jacobian(model: &TwoLinkModel, q: &Configuration) -> Matrix2<f64> {
    let q12 = q.q1 + q.q2;
    let (s1, c1) = q.q1.sin_cos();
    let (s12, c12) = q12.sin_cos();
    Matrix2::new(
        -model.l1 * s1 - model.l2 * s12,
        -model.l2 * s12,
        model.l1 * c1 + model.l2 * c12,
        model.l2 * c12,
    )
}

fn checked_jacobian(model: &TwoLinkModel, q: &Configuration) -> Result<(Matrix2<f64>, Matrix2<f64>)> {
    model.validate()?;
    q.validate()?;
    let j = jacobian(model, q);
    let det = j.determinant();
    let tolerance = model.singular_tolerance();
    if det.abs() <= tolerance {
        return Err(Error::SingularConfiguration { det, tolerance });
    }
    let inv = j.try_inverse().ok_or(Error::SingularConfiguration { det, tolerance })?;
    Ok((j, inv))
}

fn symmetric(m: Matrix2<f64>) -> Matrix2<f64> {
    0.5 * (m + m.transpose())
}

fn congruence(inv_j: &Matrix2<f64>, m: &Matrix2<f64>) -> Matrix2<f64> {
    symmetric(inv_j.transpose() * m * inv_j)
}

/// Generalized inertia ellipsoid matrix `J^-T M J^-1` of the rigid drive train.
pub fn gie(model: &TwoLinkModel, q: &Configuration) -> Result<Matrix2<f64>> {
    let (_, inv) = checked_jacobian(model, q)?;
    Ok(congruence(&inv, &inertia(model, q, InertiaSelector::Full)))
}

/// Dynamic manipulability ellipsoid matrix `J (M^T M)^-1 J^T`.
pub fn dme(model: &TwoLinkModel, q: &Configuration) -> Result<Matrix2<f64>> {
    model.validate()?;
    q.validate()?;
    let j = jacobian(model, q);
    let m = inertia(model, q, InertiaSelector::Full);
    let mtm_inv = (m.transpose() * m)
        .try_inverse()
        .ok_or_else(|| Error::InvalidModel("joint inertia is singular".into()))?;
    Ok(symmetric(j * mtm_inv * j.transpose()))
}

/// Directional effective mass `(u^T J M^-1 J^T u)^-1`. Returns `+inf` when the
/// direction has (numerically) no mobility.
pub fn effective_mass(
    model: &TwoLinkModel,
    q: &Configuration,
    u: [f64; 2],
    selector: InertiaSelector,
) -> Result<f64> {
    model.validate()?;
    q.validate()?;
    let u = unit(u)?;
    let j = jacobian(model, q);
    let m = inertia(model, q, selector);
    let chol = m.cholesky().ok_or_else(|| {
        Error::InvalidModel(format!("{selector:?} inertia is not positive definite"))
    })?;
    let w = j.transpose() * u;
    let mobility = w.dot(&chol.solve(&w));
    let typical = j.norm_squared() / m.trace();
    if mobility <= 1e-15 * typical {
        return Ok(f64::INFINITY);
    }
    Ok(1.0 / mobility)
}

/// Task-space stiffness matrix `J^-T K J^-1`.
pub fn task_stiffness_matrix(model: &TwoLinkModel, q: &Configuration) -> Result<Matrix2<f64>> {
    let (_, inv) = checked_jacobian(model, q)?;
    let k = Matrix2::from_diagonal(&Vector2::from(model.joint_stiffness));
    Ok(congruence(&inv, &k))
}

/// Directional task stiffness `u^T K_t u`.
pub fn task_stiffness(model: &TwoLinkModel, q: &Configuration, u: [f64; 2]) -> Result<f64> {
    let (_, inv) = checked_jacobian(model, q)?;
    let x = inv * unit(u)?;
    Ok(x[0] * x[0] * model.joint_stiffness[0] + x[1] * x[1] * model.joint_stiffness[1])
}

/// Force along `u` the actuators can apply at the end effector, N.
pub fn task_force_limit(model: &TwoLinkModel, q: &Configuration, u: [f64; 2]) -> Result<f64> {
    let (j, inv) = checked_jacobian(model, q)?;
    let u = unit(u)?;
    let w = j.transpose() * u;
    let limits = [model.actuators[0].torque_limit, model.actuators[1].torque_limit];
    Ok(match model.acceleration_mode {
        AccelerationMode::ScaledSaturation => {
            let scale = w.abs().max() * 1e-14;
            (0..2)
                .filter(|&i| w[i].abs() > scale)
                .map(|i| limits[i] / w[i].abs())
                .fold(f64::INFINITY, f64::min)
        }
        AccelerationMode::Literal => {
            let sat = Vector2::new(
                w[0].clamp(-limits[0], limits[0]),
                w[1].clamp(-limits[1], limits[1]),
            );
            (inv * u).dot(&sat)
        }
    })
}

/// Task-space acceleration capability along `u` for robot mass `m_r`.
pub fn task_acceleration(
    model: &TwoLinkModel,
    q: &Configuration,
    u: [f64; 2],
    m_r: f64,
) -> Result<f64> {
    positive("m_r", m_r)?;
    Ok(task_force_limit(model, q, u)? / m_r)
}

/// Impact mitigation factor `det(I - Λ Λ_l^-1)` of the partitioned inertia
/// `[[M_bb, M_bj], [M_jb, M_jj]]` with the contact acting on the structure block.
pub fn imf(model: &TwoLinkModel, q: &Configuration) -> Result<f64> {
    checked_jacobian(model, q)?;
    let coupling = Matrix2::new(
        model.inertia_coupling[0][0],
        model.inertia_coupling[0][1],
        model.inertia_coupling[1][0],
        model.inertia_coupling[1][1],
    );
    imf_partitioned(&mass_matrix(model, q), &coupling, &actuator_inertia(model))
}

/// IMF from the partition blocks. Free-system inertia is the Schur complement
/// `M_bb - M_bj M_jj^-1 M_jb`; the locked system keeps `M_bb`. Since
/// `I - Λ Λ_l^-1` is similar to `M_bj M_jj^-1 M_jb M_bb^-1`, the determinant is
/// `det(M_bj)² / (det M_jj · det M_bb)` and does not depend on the Jacobian.
pub fn imf_partitioned(m_bb: &Matrix2<f64>, m_bj: &Matrix2<f64>, m_jj: &Matrix2<f64>) -> Result<f64> {
    let chol_jj = m_jj
        .cholesky()
        .ok_or_else(|| Error::InvalidModel("M_jj is not positive definite".into()))?;
    if m_bb.cholesky().is_none() {
        return Err(Error::InvalidModel("M_bb is not positive definite".into()));
    }
    let transferred = m_bj * chol_jj.solve(&m_bj.transpose());
    let schur = m_bb - transferred;
    let (lo, _) = eigenvalues(&symmetric(schur));
    if lo < -1e-12 * m_bb.trace() {
        return Err(Error::InvalidModel(
            "partitioned inertia is not positive semidefinite".into(),
        ));
    }
    let det_bj = m_bj.determinant();
    Ok(det_bj * det_bj / (m_jj.determinant() * m_bb.determinant()))
}

/// Eigenvalues (ascending) of a symmetric 2×2 matrix.
pub fn eigenvalues(m: &Matrix2<f64>) -> (f64, f64) {
    let mean = 0.5 * (m[(0, 0)] + m[(1, 1)]);
    let half_diff = 0.5 * (m[(0, 0)] - m[(1, 1)]);
    let r = half_diff.hypot(m[(0, 1)]);
    (mean - r, mean + r)
}

/// Result of projecting the manipulator onto a collision direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Reduced1D {
    Params(CollisionParams1D),
    /// The direction has no mobility; the impulse is unbounded.
    Locked,
}

/// Equivalent 1D collision along `contact.u`.
pub fn reduce_to_1d(model: &TwoLinkModel, q: &Configuration, contact: &ContactSpec) -> Result<Reduced1D> {
    contact.validate()?;
    checked_jacobian(model, q)?;
    let m_f = effective_mass(model, q, contact.u, InertiaSelector::Structure)?;
    let m_r = effective_mass(model, q, contact.u, InertiaSelector::Actuators)?;
    if m_f.is_infinite() || m_r.is_infinite() {
        return Ok(Reduced1D::Locked);
    }
    let k = task_stiffness(model, q, contact.u)?;
    let f_a = task_force_limit(model, q, contact.u)?;
    let lumping = match model.sensing_stiffness {
        SensingStiffness::JointOnly => StiffnessLumping::SoftwareOnly,
        SensingStiffness::SeriesWithContact => StiffnessLumping::Series,
    };
    Ok(Reduced1D::Params(CollisionParams1D {
        m_f,
        m_r,
        k_m: model.contact_stiffness,
        k_s: k,
        sensing: SensingMode::ForceThreshold { f_s: contact.f_s },
        v_0: contact.v_0,
        f_a,
        lumping,
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointFlag {
    Ok,
    /// No mobility along `u`: infinite impulse.
    Locked,
    /// Configuration is singular; projection undefined.
    Singular,
    /// The reduced parameters were rejected (e.g. non-positive literal acceleration).
    Invalid,
}

impl PointFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            PointFlag::Ok => "ok",
            PointFlag::Locked => "locked",
            PointFlag::Singular => "singular",
            PointFlag::Invalid => "invalid",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfacePoint {
    pub theta: f64,
    pub u: [f64; 2],
    pub params: Option<CollisionParams1D>,
    pub breakdown: Option<PhaseBreakdown>,
    pub flag: PointFlag,
}

pub const SURFACE_COLUMNS: [&str; 13] = [
    "theta_rad", "ux", "uy", "m_f_kg", "m_r_kg", "k_npm", "f_a_n", "t1_s", "i1_ns", "i2_ns",
    "i3_ns", "total_ns", "flag",
];

impl SurfacePoint {
    /// Numeric cells in `SURFACE_COLUMNS` order (without the flag).
    pub fn values(&self) -> [f64; 12] {
        let nan = f64::NAN;
        let p = self.params;
        let b = self.breakdown;
        let k = p.and_then(|p| p.sensing_stiffness().ok()).unwrap_or(nan);
        [
            self.theta,
            self.u[0],
            self.u[1],
            p.map_or(nan, |p| p.m_f),
            p.map_or(nan, |p| p.m_r),
            k,
            p.map_or(nan, |p| p.f_a),
            b.map_or(nan, |b| b.t1),
            b.map_or(nan, |b| b.i_plastic),
            b.map_or(nan, |b| b.i_sensing),
            b.map_or(nan, |b| b.i_reaction),
            b.map_or(f64::INFINITY, |b| b.total),
        ]
    }

    pub fn total(&self) -> f64 {
        self.breakdown.map_or(f64::INFINITY, |b| b.total)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReflexSurface {
    pub points: Vec<SurfacePoint>,
}

/// Collision reflex surface: the total impulse for `n` equally spaced
/// directions `θ_j = 2πj/n` around the end effector.
pub fn reflex_surface(
    model: &TwoLinkModel,
    q: &Configuration,
    v_0: f64,
    f_s: f64,
    n: usize,
) -> Result<ReflexSurface> {
    if n < 8 {
        return Err(Error::domain("n", n as f64, "a surface needs at least 8 directions"));
    }
    model.validate()?;
    q.validate()?;
    positive("v_0", v_0)?;
    positive("F_s", f_s)?;

    // Opposite directions share the same quadratic forms; build them as exact negations.
    let half = if n.is_multiple_of(2) { n / 2 } else { n };
    let directions: Vec<(f64, [f64; 2])> = (0..n)
        .map(|j| {
            let theta = std::f64::consts::TAU * j as f64 / n as f64;
            let u = if j >= half {
                let (s, c) = (std::f64::consts::TAU * (j - half) as f64 / n as f64).sin_cos();
                [-c, -s]
            } else {
                let (s, c) = theta.sin_cos();
                [c, s]
            };
            (theta, u)
        })
        .collect();

    let points = directions
        .par_iter()
        .map(|&(theta, u)| surface_point(model, q, theta, u, v_0, f_s))
        .collect();
    Ok(ReflexSurface { points })
}

fn surface_point(
    model: &TwoLinkModel,
    q: &Configuration,
    theta: f64,
    u: [f64; 2],
    v_0: f64,
    f_s: f64,
) -> SurfacePoint {
    let mut point = SurfacePoint {
        theta,
        u,
        params: None,
        breakdown: None,
        flag: PointFlag::Ok,
    };
    match reduce_to_1d(model, q, &ContactSpec { u, v_0, f_s }) {
        Ok(Reduced1D::Params(p)) => {
            point.params = Some(p);
            match total_impulse(&p) {
                Ok(b) => point.breakdown = Some(b),
                Err(_) => point.flag = PointFlag::Invalid,
            }
        }
        Ok(Reduced1D::Locked) => point.flag = PointFlag::Locked,
        Err(Error::SingularConfiguration { .. }) => point.flag = PointFlag::Singular,
        Err(_) => point.flag = PointFlag::Invalid,
    }
    point
}
