//! Task-space torque controllers: PD with gravity compensation, computed
//! torque, and impedance control with a direction-shaped desired inertia.
//!
//! The free functions are stateless. [`Controller`] wraps them for use in a
//! simulation loop and owns the only piece of state, the previous Jacobian
//! used to approximate `J̇q̇` on models without a closed form.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{pseudo_inverse, Mat, NumericsError, Vector};
use crate::robot::{RobotModel, TaskPose};

/// Translational components with `|u_i|` below this are not divided by.
pub const DIRECTION_EPS: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ControlError {
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("gain matrix {which} must be {dim}x{dim} symmetric positive definite")]
    InvalidGains { which: &'static str, dim: usize },
    #[error("reduction factor {0} outside (0, 1]")]
    InvalidLambda(f64),
    #[error("direction must be a unit vector")]
    InvalidDirection,
    #[error("desired inertia cannot be shaped along this direction with positive entries")]
    DegenerateDirection,
    #[error("task-space inertia is not positive definite")]
    SingularInertia,
    #[error("lambda only applies to impedance control")]
    UnexpectedLambda,
    #[error("null-space damping must be non-negative")]
    InvalidNullDamping,
}

/// Stiffness and damping in task space.
#[derive(Debug, Clone, PartialEq)]
pub struct Gains {
    pub kp: Mat,
    pub kd: Mat,
}

fn is_spd(m: &Mat) -> bool {
    m.is_square()
        && m.iter().all(|v| v.is_finite())
        && (m - m.transpose()).amax() <= 1e-12 * m.amax().max(1.0)
        && m.clone().cholesky().is_some()
}

impl Gains {
    pub fn new(kp: Mat, kd: Mat) -> Result<Self, ControlError> {
        let dim = kp.nrows();
        if !is_spd(&kp) {
            return Err(ControlError::InvalidGains { which: "Kp", dim });
        }
        if !is_spd(&kd) || kd.nrows() != dim {
            return Err(ControlError::InvalidGains { which: "Kd", dim });
        }
        Ok(Self { kp, kd })
    }

    pub fn scalar(dim: usize, kp: f64, kd: f64) -> Result<Self, ControlError> {
        Self::new(Mat::identity(dim, dim) * kp, Mat::identity(dim, dim) * kd)
    }

    /// Diagonal `Kp` with `Kd = 2√Kp`.
    pub fn critically_damped(kp: &[f64]) -> Result<Self, ControlError> {
        let kd: Vec<f64> = kp.iter().map(|k| 2.0 * k.sqrt()).collect();
        Self::new(
            Mat::from_diagonal(&Vector::from_column_slice(kp)),
            Mat::from_diagonal(&Vector::from_vec(kd)),
        )
    }

    pub fn dim(&self) -> usize {
        self.kp.nrows()
    }
}

/// A gain as written in a scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GainSpec {
    Scalar(f64),
    Diagonal(Vec<f64>),
    Full(Vec<Vec<f64>>),
}

impl GainSpec {
    pub fn to_matrix(&self, dim: usize) -> Option<Mat> {
        match self {
            GainSpec::Scalar(k) => Some(Mat::identity(dim, dim) * *k),
            GainSpec::Diagonal(d) if d.len() == dim => {
                Some(Mat::from_diagonal(&Vector::from_column_slice(d)))
            }
            GainSpec::Full(rows) if rows.len() == dim && rows.iter().all(|r| r.len() == dim) => {
                Some(Mat::from_fn(dim, dim, |i, j| rows[i][j]))
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControllerKind {
    Pd,
    Ctm,
    Impedance,
}

/// Controller selection in a scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerSpec {
    #[serde(rename = "type")]
    pub kind: ControllerKind,
    #[serde(rename = "Kp")]
    pub kp: GainSpec,
    #[serde(rename = "Kd")]
    pub kd: GainSpec,
    /// Impedance only. Absent or 1 keeps the robot's own effective mass.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    /// Joint-velocity damping applied in the Jacobian null space, 1/s.
    /// Only acts on redundant arms.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub null_damping: f64,
}

fn is_zero(v: &f64) -> bool {
    *v == 0.0
}

impl ControllerSpec {
    pub fn new(kind: ControllerKind, kp: GainSpec, kd: GainSpec) -> Self {
        Self {
            kind,
            kp,
            kd,
            lambda: None,
            null_damping: 0.0,
        }
    }

    pub fn impedance(kp: GainSpec, kd: GainSpec, lambda: f64) -> Self {
        Self {
            lambda: Some(lambda),
            ..Self::new(ControllerKind::Impedance, kp, kd)
        }
    }

    pub fn lambda(&self) -> Option<f64> {
        match self.kind {
            ControllerKind::Impedance => Some(self.lambda.unwrap_or(1.0)),
            _ => None,
        }
    }

    pub fn gains(&self, dim: usize) -> Result<Gains, ControlError> {
        let kp = self
            .kp
            .to_matrix(dim)
            .ok_or(ControlError::InvalidGains { which: "Kp", dim })?;
        let kd = self
            .kd
            .to_matrix(dim)
            .ok_or(ControlError::InvalidGains { which: "Kd", dim })?;
        Gains::new(kp, kd)
    }
}

/// Diagonal desired task inertia, stored as its inverse.
#[derive(Debug, Clone, PartialEq)]
pub struct DesiredInertia {
    /// `γ_i`, the diagonal of `M_d⁻¹`.
    pub gamma: Vector,
    pub lambda: f64,
    /// Contact direction embedded in task coordinates.
    pub direction: Vector,
}

impl DesiredInertia {
    /// `M_d = I`.
    pub fn identity(dim: usize) -> Self {
        Self {
            gamma: Vector::from_element(dim, 1.0),
            lambda: 1.0,
            direction: Vector::zeros(dim),
        }
    }

    /// Diagonal of `M̄⁻¹` scaled by one common factor so the directional
    /// constraint still holds. Always positive; used when
    /// [`build_desired_inertia`] reports a degenerate direction.
    pub fn scaled_diagonal(mbar_inv: &Mat, direction: &Vector, lambda: f64) -> Result<Self, ControlError> {
        if !(lambda > 0.0 && lambda <= 1.0) {
            return Err(ControlError::InvalidLambda(lambda));
        }
        let n = mbar_inv.nrows();
        if direction.len() > n || (direction.norm() - 1.0).abs() > 1e-9 {
            return Err(ControlError::InvalidDirection);
        }
        let full = embed(direction, n);
        let target = full.dot(&(mbar_inv * &full)) / lambda;
        let mut gamma = mbar_inv.diagonal();
        if !(target > 0.0) || gamma.iter().any(|g| !(*g > 0.0)) {
            return Err(ControlError::SingularInertia);
        }
        let scale = target / full.component_mul(&full).dot(&gamma);
        for i in 0..direction.len() {
            gamma[i] *= scale;
        }
        Ok(Self {
            gamma,
            lambda,
            direction: full,
        })
    }

    pub fn inverse(&self) -> Mat {
        Mat::from_diagonal(&self.gamma)
    }

    pub fn matrix(&self) -> Mat {
        Mat::from_diagonal(&self.gamma.map(|g| 1.0 / g))
    }

    /// `(uᵀ M_d⁻¹ u)⁻¹` along `u` (translational, embedded as needed).
    pub fn effective_mass(&self, u: &Vector) -> f64 {
        let u = embed(u, self.gamma.len());
        1.0 / u.component_mul(&u).dot(&self.gamma)
    }
}

fn embed(u: &Vector, dim: usize) -> Vector {
    let mut full = Vector::zeros(dim);
    full.rows_mut(0, u.len()).copy_from(u);
    full
}

/// Chooses `γ` so that the directional effective mass along `u` is `λ`
/// times the value implied by `M̄⁻¹`, keeping `M_d` diagonal.
///
/// `u` holds only the translational components. Near-zero components keep
/// their `M̄⁻¹` diagonal and the others are rescaled to keep the constraint.
pub fn build_desired_inertia(
    mbar_inv: &Mat,
    u: &Vector,
    lambda: f64,
) -> Result<DesiredInertia, ControlError> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(ControlError::InvalidLambda(lambda));
    }
    let n = mbar_inv.nrows();
    let p = u.len();
    if p > n || (u.norm() - 1.0).abs() > 1e-9 {
        return Err(ControlError::InvalidDirection);
    }
    let full = embed(u, n);
    let coupled = mbar_inv * &full;
    let target = full.dot(&coupled) / lambda;
    if !(target > 0.0) {
        return Err(ControlError::SingularInertia);
    }

    let mut gamma = mbar_inv.diagonal();
    let mut shaped = 0.0;
    let mut fixed = 0.0;
    for i in 0..p {
        if u[i].abs() >= DIRECTION_EPS {
            gamma[i] = coupled[i] / (lambda * u[i]);
            shaped += u[i] * u[i] * gamma[i];
        } else {
            fixed += u[i] * u[i] * gamma[i];
        }
    }
    let scale = (target - fixed) / shaped;
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(ControlError::DegenerateDirection);
    }
    for i in 0..p {
        if u[i].abs() >= DIRECTION_EPS {
            gamma[i] *= scale;
        }
    }
    if gamma.iter().any(|g| !(*g > 0.0)) {
        return Err(ControlError::DegenerateDirection);
    }
    Ok(DesiredInertia {
        gamma,
        lambda,
        direction: full,
    })
}

/// `u = −Jᵀ K_p e − Jᵀ K_d J q̇ + G`
pub fn pd_control(model: &RobotModel, q: &Vector, qd: &Vector, r_d: &TaskPose, gains: &Gains) -> Vector {
    let j = model.jacobian(q);
    let e = model.forward_kinematics(q).error(r_d);
    let rdot = &j * qd;
    -(j.transpose() * (&gains.kp * e + &gains.kd * rdot)) + model.gravity(q)
}

#[allow(clippy::too_many_arguments)]
fn inverse_dynamics_through_task(
    model: &RobotModel,
    q: &Vector,
    qd: &Vector,
    j: &Mat,
    task_accel: Vector,
) -> Result<Vector, ControlError> {
    let y = pseudo_inverse(j)? * task_accel;
    let dynamics = model.dynamics(q, qd);
    Ok(dynamics.mass * y + dynamics.coriolis + dynamics.gravity)
}

/// `u = M y + C q̇ + G`, `y = J⁺(r̈_d − K_d ė − K_p e − J̇q̇)`
#[allow(clippy::too_many_arguments)]
pub fn ctm_control(
    model: &RobotModel,
    q: &Vector,
    qd: &Vector,
    r_d: &TaskPose,
    rd_dot: &Vector,
    rd_ddot: &Vector,
    gains: &Gains,
    jdot_qdot: &Vector,
) -> Result<Vector, ControlError> {
    let j = model.jacobian(q);
    let e = model.forward_kinematics(q).error(r_d);
    let ed = &j * qd - rd_dot;
    let a = rd_ddot - &gains.kd * ed - &gains.kp * e - jdot_qdot;
    inverse_dynamics_through_task(model, q, qd, &j, a)
}

/// `u = M y + C q̇ + G − JᵀF`, `y = J⁺ M_d⁻¹(M_d r̈_d − K_d ė − K_p e − M_d J̇q̇ + F)`
#[allow(clippy::too_many_arguments)]
pub fn impedance_control(
    model: &RobotModel,
    q: &Vector,
    qd: &Vector,
    r_d: &TaskPose,
    rd_dot: &Vector,
    rd_ddot: &Vector,
    gains: &Gains,
    desired: &DesiredInertia,
    f_ext: &Vector,
    jdot_qdot: &Vector,
) -> Result<Vector, ControlError> {
    let j = model.jacobian(q);
    let e = model.forward_kinematics(q).error(r_d);
    let ed = &j * qd - rd_dot;
    let feedback = f_ext - &gains.kd * ed - &gains.kp * e;
    let a = rd_ddot - jdot_qdot + feedback.component_mul(&desired.gamma);
    let u = inverse_dynamics_through_task(model, q, qd, &j, a)?;
    Ok(u - j.transpose() * f_ext)
}

/// Events a controller reports alongside its torque.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlEvent {
    /// The per-component construction gave a non-positive entry; the scaled
    /// diagonal was used this step.
    DegenerateDirection,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControlCommand {
    pub torques: Vector,
    pub event: Option<ControlEvent>,
    /// Effective mass the controller imposes along the contact direction.
    pub shaped_mass: Option<f64>,
}

/// Reference handed to [`Controller::command`] each step.
#[derive(Debug, Clone)]
pub struct Reference<'a> {
    pub pose: &'a TaskPose,
    pub velocity: &'a Vector,
    pub acceleration: &'a Vector,
    /// Unit translational direction toward the human.
    pub direction: &'a Vector,
}

#[derive(Debug, Clone)]
enum Law {
    Pd,
    Ctm,
    Impedance { lambda: f64 },
}

/// A controller bound to one simulation.
#[derive(Debug, Clone)]
pub struct Controller {
    law: Law,
    gains: Gains,
    null_damping: f64,
    previous_jacobian: Option<Mat>,
}

impl Controller {
    pub fn new(spec: &ControllerSpec, task_dim: usize) -> Result<Self, ControlError> {
        let law = match spec.kind {
            ControllerKind::Pd | ControllerKind::Ctm if spec.lambda.is_some() => {
                return Err(ControlError::UnexpectedLambda)
            }
            ControllerKind::Pd => Law::Pd,
            ControllerKind::Ctm => Law::Ctm,
            ControllerKind::Impedance => {
                let lambda = spec.lambda.unwrap_or(1.0);
                if !(lambda > 0.0 && lambda <= 1.0) {
                    return Err(ControlError::InvalidLambda(lambda));
                }
                Law::Impedance { lambda }
            }
        };
        if !(spec.null_damping >= 0.0) {
            return Err(ControlError::InvalidNullDamping);
        }
        Ok(Self {
            law,
            gains: spec.gains(task_dim)?,
            null_damping: spec.null_damping,
            previous_jacobian: None,
        })
    }

    pub fn gains(&self) -> &Gains {
        &self.gains
    }

    /// `J̇q̇`, analytic where available, otherwise from the Jacobian one
    /// control step ago. Zero on the first call.
    fn jdot_qdot(&mut self, model: &RobotModel, q: &Vector, qd: &Vector, dt: f64) -> Vector {
        let j = model.jacobian(q);
        let previous = self.previous_jacobian.replace(j.clone());
        if let Some(exact) = model.jacobian_dot_qdot(q, qd) {
            return exact;
        }
        match previous {
            Some(prev) if dt > 0.0 => (j - prev) / dt * qd,
            _ => Vector::zeros(model.task_dim()),
        }
    }

    pub fn command(
        &mut self,
        model: &RobotModel,
        q: &Vector,
        qd: &Vector,
        reference: &Reference<'_>,
        f_ext: &Vector,
        dt: f64,
    ) -> Result<ControlCommand, ControlError> {
        let mut command = self.task_command(model, q, qd, reference, f_ext, dt)?;
        if self.null_damping > 0.0 && model.dof() > model.task_dim() {
            let j = model.jacobian(q);
            let j_pinv = pseudo_inverse(&j)?;
            let n = model.dof();
            let damping = qd * -self.null_damping;
            command.torques += match self.law {
                // torque-level projector for the PD law, acceleration-level otherwise
                Law::Pd => (Mat::identity(n, n) - j.transpose() * j_pinv.transpose()) * damping,
                _ => model.mass_matrix(q) * ((Mat::identity(n, n) - &j_pinv * &j) * damping),
            };
        }
        Ok(command)
    }

    fn task_command(
        &mut self,
        model: &RobotModel,
        q: &Vector,
        qd: &Vector,
        reference: &Reference<'_>,
        f_ext: &Vector,
        dt: f64,
    ) -> Result<ControlCommand, ControlError> {
        match self.law {
            Law::Pd => Ok(ControlCommand {
                torques: pd_control(model, q, qd, reference.pose, &self.gains),
                event: None,
                shaped_mass: None,
            }),
            Law::Ctm => {
                let jdqd = self.jdot_qdot(model, q, qd, dt);
                let torques = ctm_control(
                    model,
                    q,
                    qd,
                    reference.pose,
                    reference.velocity,
                    reference.acceleration,
                    &self.gains,
                    &jdqd,
                )?;
                Ok(ControlCommand {
                    torques,
                    event: None,
                    shaped_mass: None,
                })
            }
            Law::Impedance { lambda } => {
                let jdqd = self.jdot_qdot(model, q, qd, dt);
                let j = model.jacobian(q);
                let chol = model
                    .mass_matrix(q)
                    .cholesky()
                    .ok_or(ControlError::SingularInertia)?;
                let mbar_inv = &j * chol.solve(&j.transpose());
                let (desired, event) =
                    match build_desired_inertia(&mbar_inv, reference.direction, lambda) {
                        Ok(d) => (d, None),
                        Err(ControlError::DegenerateDirection) => (
                            DesiredInertia::scaled_diagonal(&mbar_inv, reference.direction, lambda)?,
                            Some(ControlEvent::DegenerateDirection),
                        ),
                        Err(e) => return Err(e),
                    };
                let torques = impedance_control(
                    model,
                    q,
                    qd,
                    reference.pose,
                    reference.velocity,
                    reference.acceleration,
                    &self.gains,
                    &desired,
                    f_ext,
                    &jdqd,
                )?;
                Ok(ControlCommand {
                    torques,
                    event,
                    shaped_mass: Some(desired.effective_mass(reference.direction)),
                })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn planar() -> RobotModel {
        RobotModel::builtin("planar3r").unwrap()
    }

    #[test]
    fn desired_inertia_hand_example() {
        let u = Vector::from_vec(vec![1.0, 1.0]) / 2f64.sqrt();
        let md = build_desired_inertia(&Mat::identity(2, 2), &u, 0.5).unwrap();
        assert_relative_eq!(md.gamma[0], 2.0, epsilon = 1e-12);
        assert_relative_eq!(md.gamma[1], 2.0, epsilon = 1e-12);
        assert_relative_eq!(md.effective_mass(&u), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn desired_inertia_without_reduction_keeps_mass() {
        let mbar_inv = Mat::from_row_slice(3, 3, &[0.3, 0.05, 0.01, 0.05, 0.2, -0.02, 0.01, -0.02, 0.4]);
        let u = Vector::from_vec(vec![0.6, -0.8]);
        let md = build_desired_inertia(&mbar_inv, &u, 1.0).unwrap();
        let full = embed(&u, 3);
        assert_relative_eq!(
            md.effective_mass(&u),
            1.0 / full.dot(&(&mbar_inv * &full)),
            max_relative = 1e-12
        );
        assert_eq!(md.gamma[2], 0.4);
    }

    #[test]
    fn axis_aligned_direction_uses_rescaling() {
        let mbar_inv = Mat::from_row_slice(2, 2, &[0.5, 0.1, 0.1, 0.3]);
        let u = Vector::from_vec(vec![1.0, 0.0]);
        let md = build_desired_inertia(&mbar_inv, &u, 0.75).unwrap();
        assert_eq!(md.gamma[1], 0.3);
        assert_relative_eq!(md.effective_mass(&u), 0.75 / 0.5, max_relative = 1e-12);
    }

    #[test]
    fn opposing_coupling_is_degenerate() {
        // u_1 > 0 but the coupled sum for component 1 is negative
        let mbar_inv = Mat::from_row_slice(2, 2, &[1.0, -0.9, -0.9, 1.0]);
        let u = Vector::from_vec(vec![0.9, 0.1f64]).normalize();
        assert_eq!(
            build_desired_inertia(&mbar_inv, &u, 0.5),
            Err(ControlError::DegenerateDirection)
        );
        let fallback = DesiredInertia::scaled_diagonal(&mbar_inv, &u, 0.5).unwrap();
        assert!(fallback.gamma.iter().all(|g| *g > 0.0));
        let unreduced = 1.0 / u.dot(&(&mbar_inv * &u));
        assert_relative_eq!(fallback.effective_mass(&u), 0.5 * unreduced, max_relative = 1e-12);
    }

    #[test]
    fn desired_inertia_rejects_bad_inputs() {
        let u = Vector::from_vec(vec![1.0, 0.0]);
        assert!(build_desired_inertia(&Mat::identity(2, 2), &u, 0.0).is_err());
        assert!(build_desired_inertia(&Mat::identity(2, 2), &u, 1.5).is_err());
        assert!(build_desired_inertia(&Mat::identity(2, 2), &(u * 2.0), 0.5).is_err());
    }

    #[test]
    fn pd_at_equilibrium_returns_gravity() {
        let model = planar();
        let q = Vector::from_vec(vec![0.4, -0.3, 1.1]);
        let r = model.forward_kinematics(&q);
        let g = Gains::scalar(3, 20.0, 100.0).unwrap();
        let u = pd_control(&model, &q, &Vector::zeros(3), &r, &g);
        assert_relative_eq!(u, model.gravity(&q), epsilon = 1e-12);
    }

    #[test]
    fn pd_unit_x_error() {
        let model = planar().with_gravity(&[0.0, 0.0]).unwrap();
        let q = Vector::from_vec(vec![0.4, -0.3, 1.1]);
        let r = model.forward_kinematics(&q);
        let mut rd = r.clone();
        rd.position[0] -= 1.0;
        let g = Gains::scalar(3, 20.0, 100.0).unwrap();
        let u = pd_control(&model, &q, &Vector::zeros(3), &rd, &g);
        let expected = model.jacobian(&q).transpose() * Vector::from_vec(vec![1.0, 0.0, 0.0]) * -20.0;
        assert_relative_eq!(u, expected, epsilon = 1e-12);
    }

    #[test]
    fn ctm_and_impedance_agree_at_unit_inertia() {
        let model = planar();
        let q = Vector::from_vec(vec![2.0, -1.2, -1.0]);
        let qd = Vector::from_vec(vec![0.3, -0.2, 0.5]);
        let mut rd = model.forward_kinematics(&q);
        rd.position[0] += 0.1;
        let vel = Vector::from_vec(vec![0.2, 0.0, 0.05]);
        let acc = Vector::from_vec(vec![0.0, 0.1, 0.0]);
        let g = Gains::scalar(3, 20.0, 100.0).unwrap();
        let jdqd = model.jacobian_dot_qdot(&q, &qd).unwrap();
        let a = ctm_control(&model, &q, &qd, &rd, &vel, &acc, &g, &jdqd).unwrap();
        let b = impedance_control(
            &model,
            &q,
            &qd,
            &rd,
            &vel,
            &acc,
            &g,
            &DesiredInertia::identity(3),
            &Vector::zeros(3),
            &jdqd,
        )
        .unwrap();
        assert_relative_eq!(a, b, epsilon = 1e-10);
    }

    #[test]
    fn perfect_tracking_returns_gravity() {
        let model = RobotModel::builtin("panda").unwrap();
        let q = Vector::from_vec(vec![0.1, -0.7, 0.2, -2.2, 0.1, 1.6, 0.7]);
        let r = model.forward_kinematics(&q);
        let z6 = Vector::zeros(6);
        let z7 = Vector::zeros(7);
        let g = Gains::critically_damped(&[20.0, 20.0, 20.0, 5.0, 5.0, 5.0]).unwrap();
        let u = ctm_control(&model, &q, &z7, &r, &z6, &z6, &g, &z6).unwrap();
        assert_relative_eq!(u, model.gravity(&q), epsilon = 1e-9);
        let u = impedance_control(&model, &q, &z7, &r, &z6, &z6, &g, &DesiredInertia::identity(6), &z6, &z6)
            .unwrap();
        assert_relative_eq!(u, model.gravity(&q), epsilon = 1e-9);
    }

    #[test]
    fn gains_validation() {
        assert!(Gains::scalar(3, -1.0, 1.0).is_err());
        let asym = Mat::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 2.0]);
        assert!(Gains::new(asym, Mat::identity(2, 2)).is_err());
        assert!(Gains::new(Mat::identity(2, 2), Mat::identity(3, 3)).is_err());
        let g = Gains::critically_damped(&[4.0, 9.0]).unwrap();
        assert_eq!(g.kd.diagonal(), Vector::from_vec(vec![4.0, 6.0]));
    }

    #[test]
    fn controller_spec_json() {
        let spec: ControllerSpec =
            serde_json::from_str(r#"{"type":"impedance","Kp":20,"Kd":[1,2,3],"lambda":0.5}"#).unwrap();
        assert_eq!(spec.lambda(), Some(0.5));
        let g = spec.gains(3).unwrap();
        assert_eq!(g.kp, Mat::identity(3, 3) * 20.0);
        assert_eq!(g.kd[(2, 2)], 3.0);
        let spec: ControllerSpec =
            serde_json::from_str(r#"{"type":"pd","Kp":[[2,0],[0,2]],"Kd":1}"#).unwrap();
        assert!(spec.gains(2).is_ok());
        assert!(spec.gains(3).is_err());
        assert!(serde_json::from_str::<ControllerSpec>(r#"{"type":"lqr","Kp":1,"Kd":1}"#).is_err());
        let pd_with_lambda: ControllerSpec =
            serde_json::from_str(r#"{"type":"pd","Kp":1,"Kd":1,"lambda":0.5}"#).unwrap();
        assert_eq!(
            Controller::new(&pd_with_lambda, 3).err(),
            Some(ControlError::UnexpectedLambda)
        );
    }

    #[test]
    fn finite_difference_jdot_on_chain() {
        let model = RobotModel::builtin("panda").unwrap();
        let spec = ControllerSpec::new(ControllerKind::Ctm, GainSpec::Scalar(1.0), GainSpec::Scalar(1.0));
        let mut c = Controller::new(&spec, 6).unwrap();
        let q0 = Vector::from_vec(vec![0.1, -0.7, 0.2, -2.2, 0.1, 1.6, 0.7]);
        let qd = Vector::from_vec(vec![0.2, 0.1, -0.3, 0.2, 0.4, -0.1, 0.3]);
        let dt = 1e-6;
        assert_eq!(c.jdot_qdot(&model, &q0, &qd, dt), Vector::zeros(6));
        let q1 = &q0 + &qd * dt;
        let approx = c.jdot_qdot(&model, &q1, &qd, dt);
        let h = 1e-6;
        let exact = (model.jacobian(&(&q0 + &qd * h)) - model.jacobian(&(&q0 - &qd * h))) / (2.0 * h) * &qd;
        assert!((approx - exact).amax() < 1e-4);
    }
}
