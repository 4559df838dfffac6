use nalgebra::{Matrix3, Matrix6, Rotation3, Vector3, Vector6};
use serde::{Deserialize, Serialize};

use super::{check_limits, christoffel_coriolis, Dynamics, ModelError, TaskPose};
use crate::numerics::{skew, Mat, Vector};

/// One row of a modified Denavit-Hartenberg table.
///
/// The frame of row i is reached from row i−1 by `Rx(α) Tx(a) Rz(θ + offset) Tz(d)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DhJoint {
    pub a: f64,
    pub alpha: f64,
    pub d: f64,
    #[serde(default)]
    pub theta_offset: f64,
}

impl DhJoint {
    fn transform(&self, theta: f64) -> (Matrix3<f64>, Vector3<f64>) {
        let rx = Rotation3::from_axis_angle(&Vector3::x_axis(), self.alpha);
        let rz = Rotation3::from_axis_angle(&Vector3::z_axis(), theta + self.theta_offset);
        let rot = rx * rz;
        let trans = Vector3::new(self.a, 0.0, 0.0) + rot * Vector3::new(0.0, 0.0, self.d);
        (*rot.matrix(), trans)
    }
}

/// Inertial parameters of one link, expressed in that link's DH frame.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkInertia {
    pub mass: f64,
    pub com: Vector3<f64>,
    /// About the centre of mass.
    pub inertia: Matrix3<f64>,
}

/// Revolute serial chain in the modified DH convention.
#[derive(Debug, Clone)]
pub struct DhChain {
    pub name: String,
    pub joints: Vec<DhJoint>,
    /// Fixed transform from the last joint frame to the end-effector.
    pub flange: Option<DhJoint>,
    pub links: Vec<LinkInertia>,
    pub gravity: Vector3<f64>,
    pub torque_limits: Option<Vec<f64>>,
    pub torque_rate_limits: Option<Vec<f64>>,
}

/// World-frame placement of every joint frame and the end-effector.
struct Frames {
    rot: Vec<Matrix3<f64>>,
    pos: Vec<Vector3<f64>>,
    ee_rot: Matrix3<f64>,
    ee_pos: Vector3<f64>,
}

type Spatial = Vector6<f64>;
type SpatialInertia = Matrix6<f64>;

/// Motion cross-product operator `v×` for `v = [ω; v_O]`.
fn crm(v: &Spatial) -> Matrix6<f64> {
    let w = skew(&v.fixed_rows::<3>(0).into());
    let u = skew(&v.fixed_rows::<3>(3).into());
    let mut m = Matrix6::zeros();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(&w);
    m.fixed_view_mut::<3, 3>(3, 0).copy_from(&u);
    m.fixed_view_mut::<3, 3>(3, 3).copy_from(&w);
    m
}

/// Force cross-product operator `v×*`.
fn crf(v: &Spatial) -> Matrix6<f64> {
    -crm(v).transpose()
}

/// Roll, pitch, yaw of `R = Rz(yaw) Ry(pitch) Rx(roll)`.
pub(crate) fn rpy_from_rotation(r: &Matrix3<f64>) -> Vector3<f64> {
    let pitch = (-r[(2, 0)]).atan2((r[(0, 0)] * r[(0, 0)] + r[(1, 0)] * r[(1, 0)]).sqrt());
    let roll = r[(2, 1)].atan2(r[(2, 2)]);
    let yaw = r[(1, 0)].atan2(r[(0, 0)]);
    Vector3::new(roll, pitch, yaw)
}

/// Maps RPY rates to the world-frame angular velocity.
pub(crate) fn rpy_rate_matrix(rpy: &Vector3<f64>) -> Matrix3<f64> {
    let (sp, cp) = rpy.y.sin_cos();
    let (sy, cy) = rpy.z.sin_cos();
    Matrix3::new(cy * cp, -sy, 0.0, sy * cp, cy, 0.0, -sp, 0.0, 1.0)
}

impl DhChain {
    pub fn dof(&self) -> usize {
        self.joints.len()
    }

    pub(super) fn validate(&self) -> Result<(), ModelError> {
        let n = self.dof();
        if n == 0 || self.links.len() != n {
            return Err(ModelError::Invalid(format!(
                "chain has {n} joints but {} links",
                self.links.len()
            )));
        }
        for (i, l) in self.links.iter().enumerate() {
            if !(l.mass > 0.0) {
                return Err(ModelError::Invalid(format!("link {} mass must be positive", i + 1)));
            }
            let asym = (l.inertia - l.inertia.transpose()).abs().max();
            if asym > 1e-12 {
                return Err(ModelError::Invalid(format!("link {} inertia is not symmetric", i + 1)));
            }
            let eig = l.inertia.symmetric_eigenvalues();
            if !(eig.min() > 0.0) {
                return Err(ModelError::Invalid(format!(
                    "link {} inertia is not positive definite",
                    i + 1
                )));
            }
        }
        check_limits("torque_limits", &self.torque_limits, n)?;
        check_limits("torque_rate_limits", &self.torque_rate_limits, n)
    }

    fn frames(&self, q: &Vector) -> Frames {
        let n = self.dof();
        let mut rot = Vec::with_capacity(n);
        let mut pos = Vec::with_capacity(n);
        let mut r = Matrix3::identity();
        let mut p = Vector3::zeros();
        for (joint, &angle) in self.joints.iter().zip(q.iter()) {
            let (rl, pl) = joint.transform(angle);
            p += r * pl;
            r *= rl;
            rot.push(r);
            pos.push(p);
        }
        let (ee_rot, ee_pos) = match &self.flange {
            Some(f) => {
                let (rl, pl) = f.transform(0.0);
                (r * rl, p + r * pl)
            }
            None => (r, p),
        };
        Frames {
            rot,
            pos,
            ee_rot,
            ee_pos,
        }
    }

    /// End-effector rotation matrix and position.
    pub fn end_effector(&self, q: &Vector) -> (Matrix3<f64>, Vector3<f64>) {
        let f = self.frames(q);
        (f.ee_rot, f.ee_pos)
    }

    pub fn forward_kinematics(&self, q: &Vector) -> TaskPose {
        let f = self.frames(q);
        let rpy = rpy_from_rotation(&f.ee_rot);
        TaskPose::new(
            Vector::from_column_slice(f.ee_pos.as_slice()),
            Vector::from_column_slice(rpy.as_slice()),
        )
    }

    /// Geometric Jacobian `[v; ω]` of the end-effector.
    pub fn geometric_jacobian(&self, q: &Vector) -> Mat {
        let f = self.frames(q);
        let n = self.dof();
        let mut j = Mat::zeros(6, n);
        for i in 0..n {
            let z = f.rot[i].column(2).into_owned();
            let lin = z.cross(&(f.ee_pos - f.pos[i]));
            j.view_mut((0, i), (3, 1)).copy_from(&lin);
            j.view_mut((3, i), (3, 1)).copy_from(&z);
        }
        j
    }

    /// Jacobian of `[x, y, z, roll, pitch, yaw]`. Singular at pitch = ±π/2.
    pub fn analytic_jacobian(&self, q: &Vector) -> Mat {
        let mut j = self.geometric_jacobian(q);
        let rpy = rpy_from_rotation(&self.frames(q).ee_rot);
        let e_inv = rpy_rate_matrix(&rpy)
            .try_inverse()
            .unwrap_or_else(|| Matrix3::from_element(f64::NAN));
        let ang = e_inv * j.rows(3, 3);
        j.rows_mut(3, 3).copy_from(&ang);
        j
    }

    /// Joint motion subspaces (Plücker coordinates about the world origin)
    /// and world-frame spatial inertias of every link.
    fn spatial_terms(&self, q: &Vector) -> (Vec<Spatial>, Vec<SpatialInertia>) {
        let f = self.frames(q);
        let mut axes = Vec::with_capacity(self.dof());
        let mut inertias = Vec::with_capacity(self.dof());
        for (i, link) in self.links.iter().enumerate() {
            let z = f.rot[i].column(2).into_owned();
            let mut s = Spatial::zeros();
            s.fixed_rows_mut::<3>(0).copy_from(&z);
            s.fixed_rows_mut::<3>(3).copy_from(&f.pos[i].cross(&z));
            axes.push(s);

            let c = f.pos[i] + f.rot[i] * link.com;
            let i_com = f.rot[i] * link.inertia * f.rot[i].transpose();
            let cx = skew(&c);
            let mut sp = SpatialInertia::zeros();
            sp.fixed_view_mut::<3, 3>(0, 0)
                .copy_from(&(i_com + link.mass * cx * cx.transpose()));
            sp.fixed_view_mut::<3, 3>(0, 3).copy_from(&(link.mass * cx));
            sp.fixed_view_mut::<3, 3>(3, 0)
                .copy_from(&(link.mass * cx.transpose()));
            sp.fixed_view_mut::<3, 3>(3, 3)
                .copy_from(&(Matrix3::identity() * link.mass));
            inertias.push(sp);
        }
        (axes, inertias)
    }

    fn composite_inertias(inertias: &[SpatialInertia]) -> Vec<SpatialInertia> {
        let mut composite = inertias.to_vec();
        for i in (0..composite.len().saturating_sub(1)).rev() {
            let child = composite[i + 1];
            composite[i] += child;
        }
        composite
    }

    /// Joint-space inertia by the composite-rigid-body algorithm.
    pub fn mass_matrix(&self, q: &Vector) -> Mat {
        let (axes, inertias) = self.spatial_terms(q);
        let composite = Self::composite_inertias(&inertias);
        let n = self.dof();
        let mut m = Mat::zeros(n, n);
        for j in 0..n {
            let force = composite[j] * axes[j];
            for i in 0..=j {
                let v = axes[i].dot(&force);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    }

    /// `∂M/∂q_k` for every k, differentiating the composite-rigid-body
    /// expression `M_ij = S_iᵀ I^c_j S_j` analytically.
    pub fn mass_matrix_partials(&self, q: &Vector) -> Vec<Mat> {
        let (axes, inertias) = self.spatial_terms(q);
        let composite = Self::composite_inertias(&inertias);
        let n = self.dof();
        (0..n)
            .map(|k| {
                let sk_m = crm(&axes[k]);
                let sk_f = crf(&axes[k]);
                let mut dm = Mat::zeros(n, n);
                for j in 0..n {
                    let moving = &composite[j.max(k)];
                    let d_ic = sk_f * moving - moving * sk_m;
                    let d_sj = if k < j { sk_m * axes[j] } else { Spatial::zeros() };
                    for i in 0..=j {
                        let d_si = if k < i { sk_m * axes[i] } else { Spatial::zeros() };
                        let v = d_si.dot(&(composite[j] * axes[j]))
                            + axes[i].dot(&(d_ic * axes[j]))
                            + axes[i].dot(&(composite[j] * d_sj));
                        dm[(i, j)] = v;
                        dm[(j, i)] = v;
                    }
                }
                dm
            })
            .collect()
    }

    pub fn coriolis_matrix(&self, q: &Vector, qd: &Vector) -> Mat {
        christoffel_coriolis(&self.mass_matrix_partials(q), qd)
    }

    /// Recursive Newton-Euler inverse dynamics in world-frame spatial
    /// coordinates. `gravity` is the acceleration of gravity.
    pub fn inverse_dynamics(
        &self,
        q: &Vector,
        qd: &Vector,
        qdd: &Vector,
        gravity: &Vector3<f64>,
    ) -> Vector {
        let (axes, inertias) = self.spatial_terms(q);
        let n = self.dof();
        let mut v = Spatial::zeros();
        let mut a = Spatial::zeros();
        a.fixed_rows_mut::<3>(3).copy_from(&(-gravity));
        let mut forces = Vec::with_capacity(n);
        for i in 0..n {
            let vj = axes[i] * qd[i];
            v += vj;
            a += axes[i] * qdd[i] + crm(&v) * vj;
            forces.push(inertias[i] * a + crf(&v) * (inertias[i] * v));
        }
        let mut tau = Vector::zeros(n);
        let mut f = Spatial::zeros();
        for i in (0..n).rev() {
            f += forces[i];
            tau[i] = axes[i].dot(&f);
        }
        tau
    }

    pub fn gravity_torque(&self, q: &Vector) -> Vector {
        let zero = Vector::zeros(self.dof());
        self.inverse_dynamics(q, &zero, &zero, &self.gravity)
    }

    pub fn dynamics(&self, q: &Vector, qd: &Vector) -> Dynamics {
        let zero = Vector::zeros(self.dof());
        Dynamics {
            mass: self.mass_matrix(q),
            coriolis: self.inverse_dynamics(q, qd, &zero, &Vector3::zeros()),
            gravity: self.gravity_torque(q),
        }
    }
}
