//! Power-and-force-limiting computations.
//!
//! The body-region table, the two-body reduced mass, the maximum safe
//! relative speed `F_max / √(μ k)`, and three ways to obtain the robot's
//! effective mass. [`simulate_impact_1d`] integrates the underlying
//! spring-contact model and closes the loop on the speed formula.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{rk4_step, Mat, Vector};
use crate::robot::RobotModel;

pub const BODY_MODEL_JSON: &str = include_str!("../../../data/iso_ts_15066_body.json");

/// Mobility below which a direction counts as structurally immobile.
pub const MOBILITY_EPS: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SafetyError {
    #[error("unknown body region {0:?}")]
    UnknownRegion(String),
    #[error("masses must be positive (got {0})")]
    NonPositiveMass(f64),
    #[error("robot cannot move along the requested direction (mobility {0:e})")]
    SingularInertia(f64),
    #[error("direction must be a unit vector with {expected} components")]
    InvalidDirection { expected: usize },
    #[error("reduction factor {0} outside [0, 1)")]
    InvalidLambda(f64),
    #[error("payload must be non-negative (got {0})")]
    InvalidPayload(f64),
}

/// One row of the body model. `k` is kept in N/mm as tabulated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BodyRegion {
    pub name: String,
    /// Maximum permissible transient force, N.
    pub f_max: f64,
    /// Effective spring constant, N/mm.
    pub k: f64,
    /// Effective mass of the body region, kg.
    pub m_h: f64,
}

impl BodyRegion {
    /// Spring constant in N/m.
    pub fn stiffness(&self) -> f64 {
        self.k * 1000.0
    }
}

#[derive(Deserialize)]
struct BodyTable {
    regions: Vec<BodyRegion>,
}

/// The twelve body regions, in table order.
pub fn body_regions() -> &'static [BodyRegion] {
    static TABLE: OnceLock<Vec<BodyRegion>> = OnceLock::new();
    TABLE.get_or_init(|| {
        serde_json::from_str::<BodyTable>(BODY_MODEL_JSON)
            .expect("shipped body table is valid")
            .regions
    })
}

fn normalise(name: &str) -> String {
    name.trim()
        .to_ascii_lowercase()
        .replace(['_', '-'], " ")
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

/// Looks a region up by name. Case, underscores and hyphens are ignored.
pub fn body_region(name: &str) -> Result<BodyRegion, SafetyError> {
    let key = normalise(name);
    body_regions()
        .iter()
        .find(|r| r.name == key)
        .cloned()
        .ok_or_else(|| SafetyError::UnknownRegion(name.to_string()))
}

/// `(1/m_H + 1/m_R)⁻¹`
pub fn reduced_mass(m_h: f64, m_r: f64) -> Result<f64, SafetyError> {
    for m in [m_h, m_r] {
        if !(m > 0.0) {
            return Err(SafetyError::NonPositiveMass(m));
        }
    }
    Ok(1.0 / (1.0 / m_h + 1.0 / m_r))
}

/// Maximum relative speed toward `region` for a robot of effective mass `m_r`.
pub fn v_rel_max(region: &BodyRegion, m_r: f64) -> Result<f64, SafetyError> {
    let mu = reduced_mass(region.m_h, m_r)?;
    Ok(region.f_max / (mu * region.stiffness()).sqrt())
}

/// How the robot's effective mass is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum EffectiveMassMethod {
    /// Half the moving mass plus payload; configuration independent.
    IsoConservative {
        #[serde(default)]
        payload: f64,
    },
    /// `(uᵀ J_v M⁻¹ J_vᵀ u)⁻¹`
    OperationalSpace,
    /// `λ` times the operational-space value.
    Reduced { lambda: f64 },
}

impl EffectiveMassMethod {
    pub fn validate(&self) -> Result<(), SafetyError> {
        match *self {
            EffectiveMassMethod::IsoConservative { payload } if !(payload >= 0.0) => {
                Err(SafetyError::InvalidPayload(payload))
            }
            EffectiveMassMethod::Reduced { lambda } if !(0.0..1.0).contains(&lambda) => {
                Err(SafetyError::InvalidLambda(lambda))
            }
            _ => Ok(()),
        }
    }
}

/// Task-space mobility `J M⁻¹ Jᵀ`, the inverse operational-space inertia.
pub fn task_mobility(model: &RobotModel, q: &Vector) -> Option<Mat> {
    let j = model.jacobian(q);
    let chol = model.mass_matrix(q).cholesky()?;
    let minv_jt = chol.solve(&j.transpose());
    Some(&j * minv_jt)
}

fn check_direction(model: &RobotModel, u: &Vector) -> Result<(), SafetyError> {
    let expected = model.space().position_dim();
    if u.len() != expected || (u.norm() - 1.0).abs() > 1e-9 {
        return Err(SafetyError::InvalidDirection { expected });
    }
    Ok(())
}

/// `uᵀ J_v M⁻¹ J_vᵀ u` for an explicit translational Jacobian and joint inertia.
pub fn mobility_along(jv: &Mat, mass: &Mat, u: &Vector) -> Result<f64, SafetyError> {
    let chol = mass
        .clone()
        .cholesky()
        .ok_or(SafetyError::SingularInertia(0.0))?;
    let jtu = jv.transpose() * u;
    let mobility = jtu.dot(&chol.solve(&jtu));
    if !(mobility > MOBILITY_EPS) {
        return Err(SafetyError::SingularInertia(mobility));
    }
    Ok(mobility)
}

/// Translational mobility of `model` at `q` along unit direction `u`.
pub fn directional_mobility(model: &RobotModel, q: &Vector, u: &Vector) -> Result<f64, SafetyError> {
    check_direction(model, u)?;
    let p = model.space().position_dim();
    let jv = model.jacobian(q).rows(0, p).into_owned();
    mobility_along(&jv, &model.mass_matrix(q), u)
}

/// Effective mass of the robot at `q` along the translational unit vector `u`.
pub fn effective_mass(
    method: EffectiveMassMethod,
    model: &RobotModel,
    q: &Vector,
    u: &Vector,
) -> Result<f64, SafetyError> {
    method.validate()?;
    match method {
        EffectiveMassMethod::IsoConservative { payload } => {
            Ok(model.total_mass() / 2.0 + payload)
        }
        EffectiveMassMethod::OperationalSpace => Ok(1.0 / directional_mobility(model, q, u)?),
        EffectiveMassMethod::Reduced { lambda } => {
            Ok(lambda / directional_mobility(model, q, u)?)
        }
    }
}

/// Peak force when a point mass `mu` at speed `v` compresses a linear
/// spring `k` (N/m). Integrated numerically up to maximum compression.
pub fn simulate_impact_1d(v: f64, mu: f64, k: f64) -> f64 {
    let omega = (k / mu).sqrt();
    let quarter_period = std::f64::consts::FRAC_PI_2 / omega;
    let steps = 20_000;
    let dt = quarter_period / steps as f64;
    let deriv = |s: &Vector| Vector::from_vec(vec![s[1], -k / mu * s[0]]);
    let mut state = Vector::from_vec(vec![0.0, v]);
    let mut peak: f64 = 0.0;
    for _ in 0..(2 * steps) {
        state = rk4_step(&state, deriv, dt).expect("finite spring dynamics");
        if state[0] <= peak {
            break;
        }
        peak = state[0];
    }
    k * peak
}
