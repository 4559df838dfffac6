//! Online reference generation at the speed the body model allows.
//!
//! Each step the planner looks from the end effector toward the human,
//! asks the safety model how fast the robot may approach along that line,
//! projects the answer onto the path toward the goal, and advances an
//! integrated reference by that speed.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{wrap_angle, Vector};
use crate::robot::{RobotModel, TaskPose};
use crate::safety::{effective_mass, v_rel_max, BodyRegion, EffectiveMassMethod, SafetyError};

pub const GOAL_TOLERANCE: f64 = 1e-3;
pub const HUMAN_EPS: f64 = 1e-6;
pub const DEFAULT_V_FLOOR: f64 = 0.05;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error(transparent)]
    Safety(#[from] SafetyError),
    #[error("end effector coincides with the human position")]
    AtHuman,
    #[error("start and goal must share the robot's task space")]
    SpaceMismatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WaypointStatus {
    Cruising,
    /// Receding from the human; speed raised to the floor.
    Clamped,
    AtGoal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Waypoint {
    pub r_d: TaskPose,
    pub rd_dot: Vector,
    pub rd_ddot: Vector,
    /// Signed projected speed along the path.
    pub v_max: f64,
    /// `|v_rel,max|` toward the human.
    pub v_rel_cap: f64,
    pub effective_mass: f64,
    /// Unit vector from the end effector toward the human.
    pub toward_human: Vector,
    pub status: WaypointStatus,
}

/// Planner state carried between steps.
#[derive(Debug, Clone)]
pub struct PlanState {
    pub human: Vector,
    pub region: BodyRegion,
    pub mass_method: EffectiveMassMethod,
    pub start: TaskPose,
    pub goal: TaskPose,
    pub v_floor: f64,
    /// Commands this path speed instead of the cap when set.
    pub fixed_speed: Option<f64>,
    reference: TaskPose,
}

impl PlanState {
    pub fn new(
        human: Vector,
        region: BodyRegion,
        mass_method: EffectiveMassMethod,
        start: TaskPose,
        goal: TaskPose,
    ) -> Result<Self, PlanError> {
        if start.space() != goal.space() || human.len() != start.position.len() {
            return Err(PlanError::SpaceMismatch);
        }
        mass_method.validate()?;
        Ok(Self {
            human,
            region,
            mass_method,
            reference: start.clone(),
            start,
            goal,
            v_floor: DEFAULT_V_FLOOR,
            fixed_speed: None,
        })
    }

    /// The reference the next waypoint will carry.
    pub fn reference(&self) -> &TaskPose {
        &self.reference
    }

    fn path_length(&self) -> f64 {
        (&self.goal.position - &self.start.position).norm()
    }

    /// Orientation change start→goal, shortest way round.
    fn orientation_span(&self) -> Vector {
        (&self.goal.orientation - &self.start.orientation).map(wrap_angle)
    }
}

/// Produces the waypoint for the current step and advances the reference.
pub fn plan_step(
    state: &mut PlanState,
    model: &RobotModel,
    q: &Vector,
    dt: f64,
) -> Result<Waypoint, PlanError> {
    let x = model.forward_kinematics(q).position;
    let to_human = &state.human - &x;
    let distance = to_human.norm();
    if distance <= HUMAN_EPS {
        return Err(PlanError::AtHuman);
    }
    let w = to_human / distance;
    let m_eff = effective_mass(state.mass_method, model, q, &w)?;
    let cap = v_rel_max(&state.region, m_eff)?;

    let task_dim = model.task_dim();
    let p = state.reference.position.len();
    let to_goal = &state.goal.position - &state.reference.position;
    let remaining = to_goal.norm();
    if remaining < GOAL_TOLERANCE {
        state.reference = state.goal.clone();
        return Ok(Waypoint {
            r_d: state.goal.clone(),
            rd_dot: Vector::zeros(task_dim),
            rd_ddot: Vector::zeros(task_dim),
            v_max: 0.0,
            v_rel_cap: cap,
            effective_mass: m_eff,
            toward_human: w,
            status: WaypointStatus::AtGoal,
        });
    }
    let d = to_goal / remaining;
    let projection = w.dot(&d);
    let v_max = cap * projection;
    let (mut speed, status) = match state.fixed_speed {
        Some(v) => (v, WaypointStatus::Cruising),
        None if projection < 0.0 => (v_max.max(state.v_floor), WaypointStatus::Clamped),
        None => (v_max, WaypointStatus::Cruising),
    };
    speed = speed.min(remaining / dt);

    let length = state.path_length();
    let span = state.orientation_span();
    let mut rd_dot = Vector::zeros(task_dim);
    rd_dot.rows_mut(0, p).copy_from(&(&d * speed));
    rd_dot.rows_mut(p, task_dim - p).copy_from(&(&span * (speed / length)));

    let waypoint = Waypoint {
        r_d: state.reference.clone(),
        rd_dot,
        rd_ddot: Vector::zeros(task_dim),
        v_max,
        v_rel_cap: cap,
        effective_mass: m_eff,
        toward_human: w,
        status,
    };

    let position = &state.reference.position + &d * (speed * dt);
    let fraction = 1.0 - (&state.goal.position - &position).norm() / length;
    let orientation = &state.start.orientation + &span * fraction;
    state.reference = TaskPose::new(position, orientation);
    Ok(waypoint)
}
