//! Scenario files: everything needed to reproduce one simulation run.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::controllers::{ControlError, Controller, ControllerSpec};
use crate::numerics::Vector;
use crate::planner::{PlanError, PlanState, DEFAULT_V_FLOOR};
use crate::robot::ik::{solve_pose, IkError, IkOptions};
use crate::robot::{ModelError, RobotModel, TaskPose};
use crate::safety::{body_region, EffectiveMassMethod, SafetyError};

pub const DEFAULT_DT: f64 = 1e-3;
pub const MAX_DT: f64 = 0.01;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid scenario JSON at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Control(#[from] ControlError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Safety(#[from] SafetyError),
    #[error("start pose: {0}")]
    Ik(#[from] IkError),
    #[error("bad override {0:?}: expected key=value")]
    Override(String),
    #[error("{0}")]
    Invalid(String),
}

impl From<serde_json::Error> for ScenarioError {
    fn from(e: serde_json::Error) -> Self {
        ScenarioError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }
}

fn default_radius() -> f64 {
    0.1
}

fn default_fraction() -> f64 {
    0.95
}

fn default_hold() -> f64 {
    0.2
}

fn default_v_floor() -> f64 {
    DEFAULT_V_FLOOR
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HumanSpec {
    pub position: Vec<f64>,
    pub region: String,
    #[serde(default = "default_radius")]
    pub radius: f64,
}

/// Settling: the coordinate stays within `(1 − fraction)·|goal|` of its
/// goal value for `hold` seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SettlingSpec {
    #[serde(default)]
    pub coordinate: usize,
    #[serde(default = "default_fraction")]
    pub fraction: f64,
    #[serde(default = "default_hold")]
    pub hold: f64,
}

impl Default for SettlingSpec {
    fn default() -> Self {
        Self {
            coordinate: 0,
            fraction: default_fraction(),
            hold: default_hold(),
        }
    }
}

/// What tracking errors are measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorReference {
    /// The planner's instantaneous setpoint.
    #[default]
    Setpoint,
    /// The final goal pose.
    Goal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub label: Option<String>,
    /// Builtin model name or path to a model file.
    pub robot: String,
    pub controller: ControllerSpec,
    pub human: HumanSpec,
    /// Defaults to `reduced` for impedance control with `lambda < 1`,
    /// otherwise `operational_space`.
    #[serde(default)]
    pub mass_method: Option<EffectiveMassMethod>,
    #[serde(default)]
    pub q0: Option<Vec<f64>>,
    #[serde(default)]
    pub start_pose: Option<Vec<f64>>,
    #[serde(default)]
    pub q_seed: Option<Vec<f64>>,
    pub goal: Vec<f64>,
    #[serde(default)]
    pub dt: Option<f64>,
    pub t_max: f64,
    #[serde(default)]
    pub settling: SettlingSpec,
    #[serde(default)]
    pub contact_check: bool,
    #[serde(default = "default_v_floor")]
    pub v_floor: f64,
    /// Path speed commanded regardless of the safety cap.
    #[serde(default)]
    pub fixed_speed: Option<f64>,
    #[serde(default)]
    pub error_reference: ErrorReference,
    #[serde(default)]
    pub gravity: Option<Vec<f64>>,
    /// Stop once the settling criterion (including hold) is met.
    #[serde(default)]
    pub stop_when_settled: bool,
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

/// A scenario with its model loaded and start configuration solved.
#[derive(Debug, Clone)]
pub struct Setup {
    pub label: String,
    pub model: RobotModel,
    pub controller: Controller,
    pub plan: PlanState,
    pub q0: Vector,
    pub dt: f64,
    pub steps: usize,
    pub settling: SettlingSpec,
    pub contact_radius: Option<f64>,
    pub error_reference: ErrorReference,
    pub stop_when_settled: bool,
}

fn override_path(key: &str) -> Vec<String> {
    match key {
        "lambda" => vec!["controller".into(), "lambda".into()],
        "Kp" | "kp" => vec!["controller".into(), "Kp".into()],
        "Kd" | "kd" => vec!["controller".into(), "Kd".into()],
        "region" => vec!["human".into(), "region".into()],
        other => other.split('.').map(str::to_string).collect(),
    }
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let scenario: Scenario = serde_json::from_str(text)?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ScenarioError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut scenario = Self::from_json(&text)?;
        scenario.base_dir = path.parent().map(Path::to_path_buf);
        if scenario.label.is_none() {
            scenario.label = path.file_stem().map(|s| s.to_string_lossy().into_owned());
        }
        Ok(scenario)
    }

    fn validate(&self) -> Result<(), ScenarioError> {
        let invalid = |m: &str| Err(ScenarioError::Invalid(m.to_string()));
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt <= MAX_DT) {
                return invalid("dt must lie in (0, 0.01]");
            }
        }
        if !(self.t_max > 0.0) {
            return invalid("t_max must be positive");
        }
        if !(self.settling.fraction > 0.0 && self.settling.fraction < 1.0) {
            return invalid("settling.fraction must lie in (0, 1)");
        }
        if !(self.settling.hold >= 0.0) {
            return invalid("settling.hold must be non-negative");
        }
        if !(self.human.radius > 0.0) {
            return invalid("human.radius must be positive");
        }
        if self.q0.is_none() && self.start_pose.is_none() {
            return invalid("either q0 or start_pose is required");
        }
        if self.q0.is_some() && self.start_pose.is_some() {
            return invalid("q0 and start_pose are mutually exclusive");
        }
        if !(self.v_floor >= 0.0) {
            return invalid("v_floor must be non-negative");
        }
        Ok(())
    }

    /// Applies `key=value`. Values are parsed as JSON, falling back to a
    /// string. `lambda`, `Kp`, `Kd` and `region` are shorthands; other keys
    /// are dotted paths into the document.
    pub fn apply_override(&mut self, assignment: &str) -> Result<(), ScenarioError> {
        let (key, raw) = assignment
            .split_once('=')
            .filter(|(k, _)| !k.trim().is_empty())
            .ok_or_else(|| ScenarioError::Override(assignment.to_string()))?;
        let value: Value =
            serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.trim().to_string()));
        let mut doc = serde_json::to_value(&*self).expect("scenario serialises");
        let mut slot = &mut doc;
        let path = override_path(key.trim());
        for (i, part) in path.iter().enumerate() {
            let obj = slot
                .as_object_mut()
                .ok_or_else(|| ScenarioError::Override(assignment.to_string()))?;
            if i + 1 == path.len() {
                obj.insert(part.clone(), value);
                break;
            }
            slot = obj.entry(part.clone()).or_insert_with(|| Value::Object(Default::default()));
        }
        let mut updated: Scenario = serde_json::from_value(doc)?;
        updated.validate()?;
        updated.base_dir = self.base_dir.take();
        *self = updated;
        Ok(())
    }

    pub fn label(&self) -> String {
        self.label.clone().unwrap_or_else(|| "run".to_string())
    }

    pub fn effective_dt(&self) -> f64 {
        self.dt.unwrap_or(DEFAULT_DT)
    }

    pub fn mass_method(&self) -> EffectiveMassMethod {
        if let Some(m) = self.mass_method {
            return m;
        }
        match self.controller.lambda() {
            Some(lambda) if lambda < 1.0 => EffectiveMassMethod::Reduced { lambda },
            _ => EffectiveMassMethod::OperationalSpace,
        }
    }

    pub fn load_model(&self) -> Result<RobotModel, ScenarioError> {
        let model = match RobotModel::builtin(&self.robot) {
            Some(m) => m,
            None => {
                let direct = PathBuf::from(&self.robot);
                let path = match &self.base_dir {
                    Some(dir) if direct.is_relative() && dir.join(&direct).exists() => dir.join(&direct),
                    _ => direct,
                };
                RobotModel::load(path)?
            }
        };
        match &self.gravity {
            Some(g) => Ok(model.with_gravity(g)?),
            None => Ok(model),
        }
    }

    /// Loads the model, solves the start configuration and builds the
    /// controller and planner.
    pub fn setup(&self) -> Result<Setup, ScenarioError> {
        let model = self.load_model()?;
        let space = model.space();
        let n = model.dof();
        let q0 = match (&self.q0, &self.start_pose) {
            (Some(q0), _) => {
                if q0.len() != n {
                    return Err(ScenarioError::Invalid(format!("q0 needs {n} entries")));
                }
                Vector::from_column_slice(q0)
            }
            (None, Some(pose)) => {
                let target = TaskPose::from_slice(space, pose)?;
                let seed = match &self.q_seed {
                    Some(s) if s.len() == n => Vector::from_column_slice(s),
                    Some(_) => return Err(ScenarioError::Invalid(format!("q_seed needs {n} entries"))),
                    None => Vector::zeros(n),
                };
                solve_pose(&model, &target, &seed, IkOptions::default())?
            }
            (None, None) => unreachable!("validated"),
        };
        let goal = TaskPose::from_slice(space, &self.goal)?;
        if self.settling.coordinate >= space.dim() {
            return Err(ScenarioError::Invalid(format!(
                "settling.coordinate must be below {}",
                space.dim()
            )));
        }
        if self.human.position.len() != space.position_dim() {
            return Err(ScenarioError::Invalid(format!(
                "human.position needs {} entries",
                space.position_dim()
            )));
        }
        let region = body_region(&self.human.region)?;
        let mut plan = PlanState::new(
            Vector::from_column_slice(&self.human.position),
            region,
            self.mass_method(),
            model.forward_kinematics(&q0),
            goal,
        )?;
        plan.v_floor = self.v_floor;
        plan.fixed_speed = self.fixed_speed;
        let controller = Controller::new(&self.controller, model.task_dim())?;
        let dt = self.effective_dt();
        Ok(Setup {
            label: self.label(),
            model,
            controller,
            plan,
            q0,
            dt,
            steps: (self.t_max / dt).round() as usize,
            settling: self.settling,
            contact_radius: self.contact_check.then_some(self.human.radius),
            error_reference: self.error_reference,
            stop_when_settled: self.stop_when_settled,
        })
    }
}
