//! Damped least-squares inverse kinematics.
//!
//! Used to turn task-space start poses into initial joint vectors and to
//! place the arm on grid points for workspace maps. Deterministic for a
//! given seed.

use thiserror::Error;

use super::{RobotModel, TaskPose};
use crate::numerics::{Mat, Vector};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IkError {
    #[error("inverse kinematics did not converge (residual {residual:e} after {iterations} iterations)")]
    NotConverged { residual: f64, iterations: usize },
}

#[derive(Debug, Clone, Copy)]
pub struct IkOptions {
    pub max_iterations: usize,
    pub tolerance: f64,
    pub damping: f64,
    /// Largest joint update per iteration, rad.
    pub max_step: f64,
}

impl Default for IkOptions {
    fn default() -> Self {
        Self {
            max_iterations: 2000,
            tolerance: 1e-10,
            damping: 1e-2,
            max_step: 0.2,
        }
    }
}

fn dls_step(j: &Mat, err: &Vector, damping: f64, max_step: f64) -> Vector {
    let rows = j.nrows();
    let gram = j * j.transpose() + Mat::identity(rows, rows) * (damping * damping);
    let sol = gram
        .lu()
        .solve(err)
        .unwrap_or_else(|| Vector::zeros(rows));
    let mut dq = j.transpose() * sol;
    let largest = dq.amax();
    if largest > max_step {
        dq *= max_step / largest;
    }
    dq
}

/// Full-pose inverse kinematics from `seed`.
pub fn solve_pose(
    model: &RobotModel,
    target: &TaskPose,
    seed: &Vector,
    opts: IkOptions,
) -> Result<Vector, IkError> {
    let mut q = seed.clone();
    let mut residual = f64::INFINITY;
    for it in 0..opts.max_iterations {
        let err = target.error(&model.forward_kinematics(&q));
        residual = err.amax();
        if residual < opts.tolerance {
            return Ok(q);
        }
        let j = model.jacobian(&q);
        q += dls_step(&j, &err, opts.damping * residual.min(1.0), opts.max_step);
        if it == opts.max_iterations - 1 {
            break;
        }
    }
    Err(IkError::NotConverged {
        residual,
        iterations: opts.max_iterations,
    })
}

/// Position-only inverse kinematics; orientation is left free.
pub fn solve_position(
    model: &RobotModel,
    target: &Vector,
    seed: &Vector,
    opts: IkOptions,
) -> Result<Vector, IkError> {
    let p = model.space().position_dim();
    let mut q = seed.clone();
    let mut residual = f64::INFINITY;
    for _ in 0..opts.max_iterations {
        let err = target - model.forward_kinematics(&q).position;
        residual = err.amax();
        if residual < opts.tolerance {
            return Ok(q);
        }
        let j = model.jacobian(&q).rows(0, p).into_owned();
        q += dls_step(&j, &err, opts.damping * residual.min(1.0), opts.max_step);
    }
    Err(IkError::NotConverged {
        residual,
        iterations: opts.max_iterations,
    })
}
