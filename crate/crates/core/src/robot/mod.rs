//! Serial manipulator models: kinematics, dynamics and the model file format.
//!
//! Two model families are supported. [`PlanarThreeR`] is a closed-form
//! three-link arm moving in a plane (task coordinates `[x, y, θ]`), and
//! [`DhChain`] is a generic revolute chain in the modified Denavit-Hartenberg
//! convention (task coordinates `[x, y, z, roll, pitch, yaw]`, extrinsic ZYX).

mod dh;
pub mod ik;
mod planar;

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use dh::{DhChain, DhJoint, LinkInertia};
pub use planar::PlanarThreeR;

use crate::numerics::{wrap_angle, Mat, Vector};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid robot model: {0}")]
    Invalid(String),
    #[error("cannot read model file {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("cannot parse model file: {0}")]
    Parse(#[from] serde_json::Error),
}

/// Which task coordinates a model exposes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskSpace {
    /// `[x, y, θ]`
    Planar,
    /// `[x, y, z, roll, pitch, yaw]`
    Spatial,
}

impl TaskSpace {
    pub fn position_dim(self) -> usize {
        match self {
            TaskSpace::Planar => 2,
            TaskSpace::Spatial => 3,
        }
    }

    pub fn orientation_dim(self) -> usize {
        match self {
            TaskSpace::Planar => 1,
            TaskSpace::Spatial => 3,
        }
    }

    pub fn dim(self) -> usize {
        self.position_dim() + self.orientation_dim()
    }

    /// Column names of the task coordinates, translational first.
    pub fn coordinate_names(self) -> &'static [&'static str] {
        match self {
            TaskSpace::Planar => &["x", "y", "theta"],
            TaskSpace::Spatial => &["x", "y", "z", "roll", "pitch", "yaw"],
        }
    }
}

/// End-effector pose in task coordinates. Angles are kept in (−π, π].
#[derive(Debug, Clone, PartialEq)]
pub struct TaskPose {
    pub position: Vector,
    pub orientation: Vector,
}

impl TaskPose {
    pub fn new(position: Vector, orientation: Vector) -> Self {
        let orientation = orientation.map(wrap_angle);
        Self {
            position,
            orientation,
        }
    }

    /// Splits a flat `[position.., angles..]` slice.
    pub fn from_slice(space: TaskSpace, values: &[f64]) -> Result<Self, ModelError> {
        if values.len() != space.dim() {
            return Err(ModelError::Invalid(format!(
                "task pose needs {} values, got {}",
                space.dim(),
                values.len()
            )));
        }
        let p = space.position_dim();
        Ok(Self::new(
            Vector::from_column_slice(&values[..p]),
            Vector::from_column_slice(&values[p..]),
        ))
    }

    pub fn space(&self) -> TaskSpace {
        if self.position.len() == 2 {
            TaskSpace::Planar
        } else {
            TaskSpace::Spatial
        }
    }

    pub fn to_vector(&self) -> Vector {
        let mut v = Vector::zeros(self.position.len() + self.orientation.len());
        v.rows_mut(0, self.position.len()).copy_from(&self.position);
        v.rows_mut(self.position.len(), self.orientation.len())
            .copy_from(&self.orientation);
        v
    }

    /// `self − other` with wrapped angular components.
    pub fn error(&self, other: &TaskPose) -> Vector {
        let mut e = self.to_vector() - other.to_vector();
        for i in self.position.len()..e.len() {
            e[i] = wrap_angle(e[i]);
        }
        e
    }
}

/// Joint-space dynamics terms of `M(q)q̈ + C(q,q̇)q̇ + G(q) = u + JᵀF`.
#[derive(Debug, Clone)]
pub struct Dynamics {
    pub mass: Mat,
    pub coriolis: Vector,
    pub gravity: Vector,
}

/// A loaded robot. Immutable after construction.
#[derive(Debug, Clone)]
pub enum RobotModel {
    Planar(PlanarThreeR),
    Chain(DhChain),
}

impl RobotModel {
    pub fn name(&self) -> &str {
        match self {
            RobotModel::Planar(m) => &m.name,
            RobotModel::Chain(m) => &m.name,
        }
    }

    pub fn dof(&self) -> usize {
        match self {
            RobotModel::Planar(_) => 3,
            RobotModel::Chain(m) => m.dof(),
        }
    }

    pub fn space(&self) -> TaskSpace {
        match self {
            RobotModel::Planar(_) => TaskSpace::Planar,
            RobotModel::Chain(_) => TaskSpace::Spatial,
        }
    }

    pub fn task_dim(&self) -> usize {
        self.space().dim()
    }

    pub fn forward_kinematics(&self, q: &Vector) -> TaskPose {
        match self {
            RobotModel::Planar(m) => m.forward_kinematics(q),
            RobotModel::Chain(m) => m.forward_kinematics(q),
        }
    }

    /// Task Jacobian, translational rows first.
    pub fn jacobian(&self, q: &Vector) -> Mat {
        match self {
            RobotModel::Planar(m) => m.jacobian(q),
            RobotModel::Chain(m) => m.analytic_jacobian(q),
        }
    }

    /// `J̇(q, q̇) q̇` when the model has a closed form for it.
    pub fn jacobian_dot_qdot(&self, q: &Vector, qd: &Vector) -> Option<Vector> {
        match self {
            RobotModel::Planar(m) => Some(m.jacobian_dot_qdot(q, qd)),
            RobotModel::Chain(_) => None,
        }
    }

    pub fn mass_matrix(&self, q: &Vector) -> Mat {
        match self {
            RobotModel::Planar(m) => m.mass_matrix(q),
            RobotModel::Chain(m) => m.mass_matrix(q),
        }
    }

    /// `C(q, q̇)` built from Christoffel symbols of `M(q)`.
    pub fn coriolis_matrix(&self, q: &Vector, qd: &Vector) -> Mat {
        match self {
            RobotModel::Planar(m) => m.coriolis_matrix(q, qd),
            RobotModel::Chain(m) => m.coriolis_matrix(q, qd),
        }
    }

    pub fn gravity(&self, q: &Vector) -> Vector {
        match self {
            RobotModel::Planar(m) => m.gravity_torque(q),
            RobotModel::Chain(m) => m.gravity_torque(q),
        }
    }

    pub fn dynamics(&self, q: &Vector, qd: &Vector) -> Dynamics {
        match self {
            RobotModel::Planar(m) => Dynamics {
                mass: m.mass_matrix(q),
                coriolis: m.coriolis_matrix(q, qd) * qd,
                gravity: m.gravity_torque(q),
            },
            RobotModel::Chain(m) => m.dynamics(q, qd),
        }
    }

    pub fn task_velocity(&self, q: &Vector, qd: &Vector) -> Vector {
        self.jacobian(q) * qd
    }

    /// Sum of all moving link masses.
    pub fn total_mass(&self) -> f64 {
        match self {
            RobotModel::Planar(m) => m.masses.iter().sum(),
            RobotModel::Chain(m) => m.links.iter().map(|l| l.mass).sum(),
        }
    }

    pub fn torque_limits(&self) -> Option<&[f64]> {
        match self {
            RobotModel::Planar(m) => m.torque_limits.as_deref(),
            RobotModel::Chain(m) => m.torque_limits.as_deref(),
        }
    }

    pub fn torque_rate_limits(&self) -> Option<&[f64]> {
        match self {
            RobotModel::Planar(m) => m.torque_rate_limits.as_deref(),
            RobotModel::Chain(m) => m.torque_rate_limits.as_deref(),
        }
    }

    /// Replaces the gravity vector (2 components for planar, 3 for chains).
    pub fn with_gravity(mut self, g: &[f64]) -> Result<Self, ModelError> {
        match &mut self {
            RobotModel::Planar(m) if g.len() == 2 => m.gravity = [g[0], g[1]],
            RobotModel::Chain(m) if g.len() == 3 => {
                m.gravity = nalgebra::Vector3::new(g[0], g[1], g[2])
            }
            _ => {
                return Err(ModelError::Invalid(format!(
                    "gravity with {} components does not fit model {}",
                    g.len(),
                    self.name()
                )))
            }
        }
        Ok(self)
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let file: ModelFile = serde_json::from_str(text)?;
        file.into_model()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ModelError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    /// Models shipped with the crate, addressable by name.
    pub fn builtin(name: &str) -> Option<Self> {
        let text = match name {
            "planar3r" => PLANAR3R_JSON,
            "panda" => PANDA_JSON,
            _ => return None,
        };
        Some(Self::from_json(text).expect("shipped model files are valid"))
    }

    pub fn builtin_names() -> &'static [&'static str] {
        &["planar3r", "panda"]
    }
}

pub const PLANAR3R_JSON: &str = include_str!("../../../../models/planar3r.json");
pub const PANDA_JSON: &str = include_str!("../../../../models/panda.json");

/// On-disk model description.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "convention")]
pub enum ModelFile {
    #[serde(rename = "planar3r")]
    Planar3r {
        name: String,
        joints: Vec<PlanarJointRow>,
        links: Vec<PlanarLinkRow>,
        #[serde(default)]
        gravity: Option<[f64; 2]>,
        #[serde(default)]
        torque_limits: Option<Vec<f64>>,
        #[serde(default)]
        torque_rate_limits: Option<Vec<f64>>,
    },
    #[serde(rename = "mdh")]
    Mdh {
        name: String,
        joints: Vec<DhJoint>,
        #[serde(default)]
        flange: Option<DhJoint>,
        links: Vec<LinkInertiaRow>,
        #[serde(default)]
        gravity: Option<[f64; 3]>,
        #[serde(default)]
        torque_limits: Option<Vec<f64>>,
        #[serde(default)]
        torque_rate_limits: Option<Vec<f64>>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlanarJointRow {
    pub length: f64,
}

/// Planar link: mass and moment of inertia about the proximal joint.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlanarLinkRow {
    pub mass: f64,
    pub inertia: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinkInertiaRow {
    pub mass: f64,
    pub com: [f64; 3],
    /// Rotational inertia about the centre of mass, in link-frame axes.
    pub inertia: [[f64; 3]; 3],
}

impl ModelFile {
    pub fn into_model(self) -> Result<RobotModel, ModelError> {
        match self {
            ModelFile::Planar3r {
                name,
                joints,
                links,
                gravity,
                torque_limits,
                torque_rate_limits,
            } => {
                if joints.len() != 3 || links.len() != 3 {
                    return Err(ModelError::Invalid(
                        "planar3r models need exactly 3 joints and 3 links".into(),
                    ));
                }
                let m = PlanarThreeR {
                    name,
                    lengths: [joints[0].length, joints[1].length, joints[2].length],
                    masses: [links[0].mass, links[1].mass, links[2].mass],
                    inertias: [links[0].inertia, links[1].inertia, links[2].inertia],
                    gravity: gravity.unwrap_or([0.0, 0.0]),
                    torque_limits,
                    torque_rate_limits,
                };
                m.validate()?;
                Ok(RobotModel::Planar(m))
            }
            ModelFile::Mdh {
                name,
                joints,
                flange,
                links,
                gravity,
                torque_limits,
                torque_rate_limits,
            } => {
                let links = links
                    .into_iter()
                    .map(|l| LinkInertia {
                        mass: l.mass,
                        com: nalgebra::Vector3::from(l.com),
                        inertia: nalgebra::Matrix3::from_fn(|r, c| l.inertia[r][c]),
                    })
                    .collect();
                let g = gravity.unwrap_or([0.0, 0.0, 0.0]);
                let m = DhChain {
                    name,
                    joints,
                    flange,
                    links,
                    gravity: nalgebra::Vector3::new(g[0], g[1], g[2]),
                    torque_limits,
                    torque_rate_limits,
                };
                m.validate()?;
                Ok(RobotModel::Chain(m))
            }
        }
    }
}

/// Christoffel-symbol Coriolis matrix from the partial derivatives
/// `dm[i] = ∂M/∂qᵢ`.
pub(crate) fn christoffel_coriolis(dm: &[Mat], qd: &Vector) -> Mat {
    let n = qd.len();
    Mat::from_fn(n, n, |k, j| {
        (0..n)
            .map(|i| 0.5 * (dm[i][(k, j)] + dm[j][(k, i)] - dm[k][(i, j)]) * qd[i])
            .sum()
    })
}

pub(crate) fn check_limits(
    what: &str,
    limits: &Option<Vec<f64>>,
    dof: usize,
) -> Result<(), ModelError> {
    if let Some(l) = limits {
        if l.len() != dof {
            return Err(ModelError::Invalid(format!(
                "{what} has {} entries, expected {dof}",
                l.len()
            )));
        }
        if l.iter().any(|v| !(*v > 0.0)) {
            return Err(ModelError::Invalid(format!("{what} must be positive")));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_models_load() {
        let p = RobotModel::builtin("planar3r").unwrap();
        assert_eq!(p.dof(), 3);
        assert_eq!(p.task_dim(), 3);
        let panda = RobotModel::builtin("panda").unwrap();
        assert_eq!(panda.dof(), 7);
        assert_eq!(panda.task_dim(), 6);
        assert_eq!(
            panda.torque_limits().unwrap(),
            &[87.0, 87.0, 87.0, 87.0, 12.0, 12.0, 12.0]
        );
        assert_eq!(panda.torque_rate_limits().unwrap(), &[1000.0; 7]);
        assert!(RobotModel::builtin("nope").is_none());
    }

    #[test]
    fn task_pose_error_wraps_angles() {
        let a = TaskPose::from_slice(TaskSpace::Planar, &[1.0, 2.0, 3.0]).unwrap();
        let b = TaskPose::from_slice(TaskSpace::Planar, &[0.5, 2.0, -3.0]).unwrap();
        let e = a.error(&b);
        assert!((e[0] - 0.5).abs() < 1e-15);
        assert!((e[2] - (6.0 - 2.0 * std::f64::consts::PI)).abs() < 1e-12);
        assert!(TaskPose::from_slice(TaskSpace::Spatial, &[1.0, 2.0]).is_err());
    }

    #[test]
    fn rejects_bad_models() {
        let bad = r#"{"convention":"planar3r","name":"x","joints":[{"length":1}],"links":[]}"#;
        assert!(RobotModel::from_json(bad).is_err());
        let neg = r#"{"convention":"planar3r","name":"x",
            "joints":[{"length":1},{"length":1},{"length":-1}],
            "links":[{"mass":1,"inertia":0.4},{"mass":1,"inertia":0.4},{"mass":1,"inertia":0.4}]}"#;
        assert!(RobotModel::from_json(neg).is_err());
    }
}
