use nalgebra::{Matrix3, Vector3};

use super::{christoffel_coriolis, check_limits, DhChain, DhJoint, LinkInertia, ModelError, TaskPose};
use crate::numerics::{wrap_angle, Mat, Vector};

/// Three uniform rods joined by revolute joints, moving in the xy-plane.
///
/// Each link's centre of mass sits at half its length. `inertias` are the
/// moments about the proximal joint (`m l²/3` for a thin rod).
#[derive(Debug, Clone)]
pub struct PlanarThreeR {
    pub name: String,
    pub lengths: [f64; 3],
    pub masses: [f64; 3],
    pub inertias: [f64; 3],
    /// Gravity in the plane of motion, m/s².
    pub gravity: [f64; 2],
    pub torque_limits: Option<Vec<f64>>,
    pub torque_rate_limits: Option<Vec<f64>>,
}

struct Angles {
    /// cumulative joint angles q1, q1+q2, q1+q2+q3
    c: [f64; 3],
    s: [f64; 3],
}

impl Angles {
    fn new(q: &Vector) -> Self {
        let a = [q[0], q[0] + q[1], q[0] + q[1] + q[2]];
        Self {
            c: a.map(f64::cos),
            s: a.map(f64::sin),
        }
    }
}

impl PlanarThreeR {
    /// Thin-rod arm with the given link lengths and masses.
    pub fn thin_rods(name: &str, lengths: [f64; 3], masses: [f64; 3]) -> Self {
        let inertias = [0, 1, 2].map(|i| masses[i] * lengths[i] * lengths[i] / 3.0);
        Self {
            name: name.to_string(),
            lengths,
            masses,
            inertias,
            gravity: [0.0, 0.0],
            torque_limits: None,
            torque_rate_limits: None,
        }
    }

    pub(super) fn validate(&self) -> Result<(), ModelError> {
        for i in 0..3 {
            let (l, m, inertia) = (self.lengths[i], self.masses[i], self.inertias[i]);
            if !(l > 0.0 && m > 0.0 && inertia > 0.0) {
                return Err(ModelError::Invalid(format!(
                    "link {} needs positive length, mass and inertia",
                    i + 1
                )));
            }
            // centroidal inertia must stay positive
            if inertia - m * l * l / 4.0 <= 0.0 {
                return Err(ModelError::Invalid(format!(
                    "link {} inertia {inertia} is below m l²/4",
                    i + 1
                )));
            }
        }
        check_limits("torque_limits", &self.torque_limits, 3)?;
        check_limits("torque_rate_limits", &self.torque_rate_limits, 3)
    }

    fn com_offsets(&self) -> [f64; 3] {
        self.lengths.map(|l| l / 2.0)
    }

    pub fn forward_kinematics(&self, q: &Vector) -> TaskPose {
        let a = Angles::new(q);
        let l = self.lengths;
        let x = l[0] * a.c[0] + l[1] * a.c[1] + l[2] * a.c[2];
        let y = l[0] * a.s[0] + l[1] * a.s[1] + l[2] * a.s[2];
        TaskPose::new(
            Vector::from_vec(vec![x, y]),
            Vector::from_element(1, wrap_angle(q[0] + q[1] + q[2])),
        )
    }

    pub fn jacobian(&self, q: &Vector) -> Mat {
        let a = Angles::new(q);
        let l = self.lengths;
        let mut j = Mat::zeros(3, 3);
        for col in 0..3 {
            for i in col..3 {
                j[(0, col)] -= l[i] * a.s[i];
                j[(1, col)] += l[i] * a.c[i];
            }
            j[(2, col)] = 1.0;
        }
        j
    }

    pub fn jacobian_dot_qdot(&self, q: &Vector, qd: &Vector) -> Vector {
        let a = Angles::new(q);
        let l = self.lengths;
        let w = [qd[0], qd[0] + qd[1], qd[0] + qd[1] + qd[2]];
        let mut out = Vector::zeros(3);
        for i in 0..3 {
            out[0] -= l[i] * a.c[i] * w[i] * w[i];
            out[1] -= l[i] * a.s[i] * w[i] * w[i];
        }
        out
    }

    /// Coefficients of cos q2, cos q3 and cos(q2+q3) in the inertia matrix.
    fn coupling(&self) -> (f64, f64, f64) {
        let [l1, l2, _] = self.lengths;
        let [_, m2, m3] = self.masses;
        let lc = self.com_offsets();
        (m2 * l1 * lc[1] + m3 * l1 * l2, m3 * l2 * lc[2], m3 * l1 * lc[2])
    }

    pub fn mass_matrix(&self, q: &Vector) -> Mat {
        let [i1, i2, i3] = self.inertias;
        let [l1, l2, _] = self.lengths;
        let [_, m2, m3] = self.masses;
        let (a, b, d) = self.coupling();
        let (c2, c3, c23) = (q[1].cos(), q[2].cos(), (q[1] + q[2]).cos());
        let m11 = i1 + i2 + i3 + (m2 + m3) * l1 * l1 + m3 * l2 * l2
            + 2.0 * a * c2
            + 2.0 * b * c3
            + 2.0 * d * c23;
        let m12 = i2 + i3 + m3 * l2 * l2 + a * c2 + 2.0 * b * c3 + d * c23;
        let m13 = i3 + b * c3 + d * c23;
        let m22 = i2 + i3 + m3 * l2 * l2 + 2.0 * b * c3;
        let m23 = i3 + b * c3;
        let m33 = i3;
        Mat::from_row_slice(3, 3, &[m11, m12, m13, m12, m22, m23, m13, m23, m33])
    }

    /// `∂M/∂qᵢ` for i = 1..3.
    fn mass_matrix_partials(&self, q: &Vector) -> [Mat; 3] {
        let (a, b, d) = self.coupling();
        let (s2, s3, s23) = (q[1].sin(), q[2].sin(), (q[1] + q[2]).sin());
        let sym = |m11: f64, m12: f64, m13: f64, m22: f64, m23: f64| {
            Mat::from_row_slice(3, 3, &[m11, m12, m13, m12, m22, m23, m13, m23, 0.0])
        };
        let dq2 = sym(
            -2.0 * a * s2 - 2.0 * d * s23,
            -a * s2 - d * s23,
            -d * s23,
            0.0,
            0.0,
        );
        let dq3 = sym(
            -2.0 * b * s3 - 2.0 * d * s23,
            -2.0 * b * s3 - d * s23,
            -b * s3 - d * s23,
            -2.0 * b * s3,
            -b * s3,
        );
        [Mat::zeros(3, 3), dq2, dq3]
    }

    pub fn coriolis_matrix(&self, q: &Vector, qd: &Vector) -> Mat {
        christoffel_coriolis(&self.mass_matrix_partials(q), qd)
    }

    pub fn gravity_torque(&self, q: &Vector) -> Vector {
        let a = Angles::new(q);
        let l = self.lengths;
        let lc = self.com_offsets();
        let g = self.gravity;
        let mut tau = Vector::zeros(3);
        // G_j = −Σ_i m_i g · ∂p_ci/∂q_j
        for i in 0..3 {
            for j in 0..=i {
                let mut dx = 0.0;
                let mut dy = 0.0;
                for k in j..=i {
                    let reach = if k == i { lc[k] } else { l[k] };
                    dx -= reach * a.s[k];
                    dy += reach * a.c[k];
                }
                tau[j] -= self.masses[i] * (g[0] * dx + g[1] * dy);
            }
        }
        tau
    }

    /// The same arm expressed as a modified-DH chain rotating about z.
    ///
    /// The rod's axial inertia is set to a small positive value so the link
    /// tensors stay positive definite; it never enters planar motion.
    pub fn to_dh_chain(&self) -> DhChain {
        let row = |a: f64| DhJoint {
            a,
            alpha: 0.0,
            d: 0.0,
            theta_offset: 0.0,
        };
        let lc = self.com_offsets();
        let links = (0..3)
            .map(|i| {
                let centroidal = self.inertias[i] - self.masses[i] * lc[i] * lc[i];
                LinkInertia {
                    mass: self.masses[i],
                    com: Vector3::new(lc[i], 0.0, 0.0),
                    inertia: Matrix3::from_diagonal(&Vector3::new(
                        1e-3 * centroidal,
                        centroidal,
                        centroidal,
                    )),
                }
            })
            .collect();
        DhChain {
            name: format!("{}-mdh", self.name),
            joints: vec![row(0.0), row(self.lengths[0]), row(self.lengths[1])],
            flange: Some(row(self.lengths[2])),
            links,
            gravity: Vector3::new(self.gravity[0], self.gravity[1], 0.0),
            torque_limits: self.torque_limits.clone(),
            torque_rate_limits: self.torque_rate_limits.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::robot::RobotModel;
    use approx::assert_relative_eq;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, SQRT_2};

    fn table2() -> PlanarThreeR {
        match RobotModel::builtin("planar3r").unwrap() {
            RobotModel::Planar(p) => p.clone(),
            _ => unreachable!(),
        }
    }

    fn v(x: &[f64]) -> Vector {
        Vector::from_column_slice(x)
    }

    #[test]
    fn table2_inertias_are_thin_rod_values() {
        let m = table2();
        for i in 0..3 {
            let expected = m.masses[i] * m.lengths[i].powi(2) / 3.0;
            assert_relative_eq!(m.inertias[i], expected, max_relative = 1e-12);
        }
        assert_eq!(m.masses, [8.0, 5.0, 5.0]);
        assert_eq!(m.lengths, [2.0, 2.0, 2.0]);
    }

    #[test]
    fn initial_pose_of_the_study() {
        let m = table2();
        let pose = m.forward_kinematics(&v(&[3.0 * PI / 4.0, -FRAC_PI_2, -FRAC_PI_2]));
        assert_relative_eq!(pose.position[0], SQRT_2, epsilon = 1e-12);
        assert_relative_eq!(pose.position[1], SQRT_2, epsilon = 1e-12);
        assert_relative_eq!(pose.orientation[0], -FRAC_PI_4, epsilon = 1e-12);
    }

    #[test]
    fn fully_extended_pose() {
        let pose = table2().forward_kinematics(&v(&[0.0, 0.0, 0.0]));
        assert_eq!(pose.to_vector().as_slice(), &[6.0, 0.0, 0.0]);
    }

    #[test]
    fn jacobian_at_zero() {
        let j = table2().jacobian(&v(&[0.0, 0.0, 0.0]));
        // consistent with the tip kinematics (full third link)
        assert_eq!(j.row(1).iter().copied().collect::<Vec<_>>(), vec![6.0, 4.0, 2.0]);
        assert_eq!(j.row(2).iter().copied().collect::<Vec<_>>(), vec![1.0, 1.0, 1.0]);
        let rd = j * v(&[1.0, 0.0, 0.0]);
        assert_eq!(rd.as_slice(), &[0.0, 6.0, 1.0]);
    }

    #[test]
    fn jacobian_determinant_is_l1_l2_sin_q2() {
        let m = table2();
        for q2 in [-2.0, -FRAC_PI_2, -0.3, 0.4, 1.9] {
            let q = v(&[0.7, q2, -1.1]);
            assert_relative_eq!(m.jacobian(&q).determinant(), 4.0 * q2.sin(), epsilon = 1e-12);
        }
    }

    #[test]
    fn zero_velocity_has_no_coriolis_and_no_gravity_when_disabled() {
        let mut m = table2();
        m.gravity = [0.0, 0.0];
        let q = v(&[0.0, 0.0, 0.0]);
        let c = m.coriolis_matrix(&q, &v(&[0.0, 0.0, 0.0])) * v(&[0.0, 0.0, 0.0]);
        assert_eq!(c.norm(), 0.0);
        assert_eq!(m.gravity_torque(&q).norm(), 0.0);
    }

    #[test]
    fn gravity_matches_potential_energy_gradient() {
        let mut m = table2();
        m.gravity = [0.0, -9.81];
        let potential = |q: &Vector| {
            let a = Angles::new(q);
            let (l, lc) = (m.lengths, m.com_offsets());
            let y = [
                lc[0] * a.s[0],
                l[0] * a.s[0] + lc[1] * a.s[1],
                l[0] * a.s[0] + l[1] * a.s[1] + lc[2] * a.s[2],
            ];
            (0..3).map(|i| m.masses[i] * 9.81 * y[i]).sum::<f64>()
        };
        let q = v(&[0.3, -1.2, 0.8]);
        let g = m.gravity_torque(&q);
        let h = 1e-6;
        for j in 0..3 {
            let mut qp = q.clone();
            let mut qm = q.clone();
            qp[j] += h;
            qm[j] -= h;
            let fd = (potential(&qp) - potential(&qm)) / (2.0 * h);
            assert_relative_eq!(g[j], fd, epsilon = 1e-6);
        }
    }
}
