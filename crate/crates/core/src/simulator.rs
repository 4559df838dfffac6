//! Fixed-step closed-loop simulation.
//!
//! Per step: planner, controller, torque saturation, then one RK4 step of
//! the rigid-body dynamics with the torque held constant. With contact
//! enabled the human is a free point mass behind a linear spring shell.

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::controllers::{ControlError, ControlEvent, Reference};
use crate::numerics::{rk4_step, NumericsError, Vector};
use crate::planner::{plan_step, PlanError, WaypointStatus};
use crate::robot::{RobotModel, TaskSpace};
use crate::safety::BodyRegion;
use crate::scenario::{ErrorReference, Scenario, ScenarioError, SettlingSpec, Setup};

/// State norm beyond which a run is declared divergent.
pub const DIVERGENCE_LIMIT: f64 = 1e6;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("step {step}: {source}")]
    Control { step: usize, source: ControlError },
    #[error("step {step}: {source}")]
    Plan { step: usize, source: PlanError },
    #[error("step {step}: numerical divergence")]
    NumericalDivergence { step: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Event {
    DegenerateDirection,
    SpeedClamped,
    Contact,
}

impl Event {
    pub fn as_str(self) -> &'static str {
        match self {
            Event::DegenerateDirection => "degenerate_direction",
            Event::SpeedClamped => "speed_clamped",
            Event::Contact => "contact",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub t: f64,
    pub q: Vector,
    pub qd: Vector,
    pub pose: Vector,
    pub pose_velocity: Vector,
    pub setpoint: Vector,
    /// Velocity component toward the human, m/s.
    pub v_rel: f64,
    pub v_cap: f64,
    /// Commanded translational reference speed, m/s.
    pub v_command: f64,
    pub tau_command: Vector,
    pub tau: Vector,
    /// Effective mass used for the cap along the human direction.
    pub m_eff: f64,
    /// Magnitude of the contact force, N.
    pub contact_force: f64,
    pub events: Vec<Event>,
}

#[derive(Debug, Clone)]
pub struct TrajectoryLog {
    pub label: String,
    pub space: TaskSpace,
    pub dof: usize,
    pub dt: f64,
    pub goal: Vector,
    pub settling: SettlingSpec,
    pub error_reference: ErrorReference,
    pub records: Vec<Record>,
}

impl TrajectoryLog {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn csv_header(&self) -> Vec<String> {
        let n = self.dof;
        let mut h = vec!["t".to_string()];
        h.extend((1..=n).map(|i| format!("q{i}")));
        h.extend((1..=n).map(|i| format!("qd{i}")));
        let names = self.space.coordinate_names();
        h.extend(names.iter().map(|s| s.to_string()));
        h.push("v_rel".into());
        h.push("v_cap".into());
        h.extend((1..=n).map(|i| format!("tau{i}")));
        h.push("m_eff".into());
        h.push("event".into());
        h.extend(names.iter().map(|s| format!("{s}_d")));
        h.push("v_command".into());
        h.push("f_contact".into());
        h
    }

    /// Writes the log as CSV. Torques are the post-saturation values. The
    /// setpoint, commanded speed and contact force follow the event column.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.csv_header())?;
        for r in &self.records {
            let mut row: Vec<String> = Vec::with_capacity(3 * self.dof + 20);
            row.push(r.t.to_string());
            row.extend(r.q.iter().map(f64::to_string));
            row.extend(r.qd.iter().map(f64::to_string));
            row.extend(r.pose.iter().map(f64::to_string));
            row.push(r.v_rel.to_string());
            row.push(r.v_cap.to_string());
            row.extend(r.tau.iter().map(f64::to_string));
            row.push(r.m_eff.to_string());
            row.push(
                r.events
                    .iter()
                    .map(|e| e.as_str())
                    .collect::<Vec<_>>()
                    .join("|"),
            );
            row.extend(r.setpoint.iter().map(f64::to_string));
            row.push(r.v_command.to_string());
            row.push(r.contact_force.to_string());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Magnitude clamp, then rate clamp against the previous applied torque.
pub fn saturate(model: &RobotModel, command: &Vector, previous: &Vector, dt: f64) -> Vector {
    let mut tau = command.clone();
    if let Some(limits) = model.torque_limits() {
        for (t, l) in tau.iter_mut().zip(limits) {
            *t = t.clamp(-l, *l);
        }
    }
    if let Some(rates) = model.torque_rate_limits() {
        for ((t, p), r) in tau.iter_mut().zip(previous.iter()).zip(rates) {
            *t = t.clamp(p - r * dt, p + r * dt);
        }
    }
    tau
}

struct Contact {
    radius: f64,
    stiffness: f64,
    human_mass: f64,
}

impl Contact {
    /// Force on the robot end effector for a human centred at `centre`.
    fn force(&self, ee: &Vector, centre: &Vector) -> Vector {
        let offset = centre - ee;
        let distance = offset.norm();
        let penetration = self.radius - distance;
        if penetration <= 0.0 || distance == 0.0 {
            return Vector::zeros(ee.len());
        }
        -offset / distance * (self.stiffness * penetration)
    }
}

/// Loads, sets up and runs a scenario.
pub fn run(scenario: &Scenario) -> Result<TrajectoryLog, SimError> {
    let setup = scenario.setup()?;
    run_setup(setup)
}

pub fn run_setup(setup: Setup) -> Result<TrajectoryLog, SimError> {
    let Setup {
        label,
        model,
        mut controller,
        mut plan,
        q0,
        dt,
        steps,
        settling,
        contact_radius,
        error_reference,
        stop_when_settled,
    } = setup;
    let n = model.dof();
    let p = model.space().position_dim();
    let task_dim = model.task_dim();
    let contact = contact_radius.map(|radius| Contact {
        radius,
        stiffness: plan.region.stiffness(),
        human_mass: plan.region.m_h,
    });

    let mut q = q0.clone();
    let mut qd = Vector::zeros(n);
    let mut human_pos = plan.human.clone();
    let mut human_vel = Vector::zeros(p);
    let mut previous_tau = model.gravity(&q0);
    let goal = plan.goal.to_vector();
    let hold_steps = (settling.hold / dt).round() as usize;
    let mut inside_since: Option<usize> = None;
    let mut records = Vec::with_capacity(steps);

    for step in 0..steps {
        let t = step as f64 * dt;
        let waypoint = plan_step(&mut plan, &model, &q, dt).map_err(|source| SimError::Plan { step, source })?;
        let pose = model.forward_kinematics(&q);
        let pose_velocity = model.task_velocity(&q, &qd);

        let mut f_task = Vector::zeros(task_dim);
        let mut contact_force = 0.0;
        if let Some(c) = &contact {
            let f = c.force(&pose.position, &human_pos);
            contact_force = f.norm();
            f_task.rows_mut(0, p).copy_from(&f);
        }

        let reference = Reference {
            pose: &waypoint.r_d,
            velocity: &waypoint.rd_dot,
            acceleration: &waypoint.rd_ddot,
            direction: &waypoint.toward_human,
        };
        let command = controller
            .command(&model, &q, &qd, &reference, &f_task, dt)
            .map_err(|source| SimError::Control { step, source })?;
        let tau = saturate(&model, &command.torques, &previous_tau, dt);

        let mut events = Vec::new();
        if command.event == Some(ControlEvent::DegenerateDirection) {
            events.push(Event::DegenerateDirection);
        }
        if waypoint.status == WaypointStatus::Clamped {
            events.push(Event::SpeedClamped);
        }
        if contact_force > 0.0 {
            events.push(Event::Contact);
        }

        let v_rel = pose_velocity.rows(0, p).dot(&waypoint.toward_human);
        records.push(Record {
            t,
            q: q.clone(),
            qd: qd.clone(),
            pose: pose.to_vector(),
            pose_velocity,
            setpoint: waypoint.r_d.to_vector(),
            v_rel,
            v_cap: waypoint.v_rel_cap,
            v_command: waypoint.rd_dot.rows(0, p).norm(),
            tau_command: command.torques,
            tau: tau.clone(),
            m_eff: waypoint.effective_mass,
            contact_force,
            events,
        });

        let mut state = Vector::zeros(2 * n + 2 * p);
        state.rows_mut(0, n).copy_from(&q);
        state.rows_mut(n, n).copy_from(&qd);
        state.rows_mut(2 * n, p).copy_from(&human_pos);
        state.rows_mut(2 * n + p, p).copy_from(&human_vel);
        let deriv = |s: &Vector| {
            let q = s.rows(0, n).into_owned();
            let qd = s.rows(n, n).into_owned();
            let mut out = Vector::zeros(s.len());
            out.rows_mut(0, n).copy_from(&qd);
            let dynamics = model.dynamics(&q, &qd);
            let mut rhs = &tau - dynamics.coriolis - dynamics.gravity;
            if let Some(c) = &contact {
                let hp = s.rows(2 * n, p).into_owned();
                let f = c.force(&model.forward_kinematics(&q).position, &hp);
                if f.norm() > 0.0 {
                    let jv = model.jacobian(&q).rows(0, p).into_owned();
                    rhs += jv.transpose() * &f;
                    out.rows_mut(2 * n + p, p).copy_from(&(-&f / c.human_mass));
                }
                out.rows_mut(2 * n, p).copy_from(&s.rows(2 * n + p, p));
            }
            match dynamics.mass.cholesky() {
                Some(chol) => out.rows_mut(n, n).copy_from(&chol.solve(&rhs)),
                None => out.fill(f64::NAN),
            }
            out
        };
        let next = match rk4_step(&state, deriv, dt) {
            Ok(s) => s,
            Err(NumericsError::NonFiniteDerivative) => {
                return Err(SimError::NumericalDivergence { step })
            }
            Err(_) => return Err(SimError::NumericalDivergence { step }),
        };
        if !next.iter().all(|v| v.is_finite()) || next.norm() > DIVERGENCE_LIMIT {
            return Err(SimError::NumericalDivergence { step });
        }
        q = next.rows(0, n).into_owned();
        qd = next.rows(n, n).into_owned();
        human_pos = next.rows(2 * n, p).into_owned();
        human_vel = next.rows(2 * n + p, p).into_owned();
        previous_tau = tau;

        if stop_when_settled {
            let c = settling.coordinate;
            let inside = within_band(records.last().unwrap().pose[c], goal[c], settling.fraction);
            inside_since = match (inside, inside_since) {
                (true, None) => Some(step),
                (true, s) => s,
                (false, _) => None,
            };
            if matches!(inside_since, Some(s) if step + 1 - s > hold_steps) {
                break;
            }
        }
    }

    Ok(TrajectoryLog {
        label,
        space: model.space(),
        dof: n,
        dt,
        goal,
        settling,
        error_reference,
        records,
    })
}

pub(crate) fn within_band(value: f64, goal: f64, fraction: f64) -> bool {
    (value - goal).abs() <= (1.0 - fraction) * goal.abs()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TorqueReport {
    pub max_abs: Vec<f64>,
    pub max_rate: Vec<f64>,
    /// Zero-based joint indices that exceed a limit.
    pub violations: Vec<usize>,
}

impl TorqueReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Peak torque and torque rate per joint against the model's limits.
pub fn check_torque_limits(log: &TrajectoryLog, model: &RobotModel) -> TorqueReport {
    let n = log.dof;
    let mut max_abs = vec![0.0f64; n];
    let mut max_rate = vec![0.0f64; n];
    for (i, r) in log.records.iter().enumerate() {
        for j in 0..n {
            max_abs[j] = max_abs[j].max(r.tau[j].abs());
            if i > 0 {
                let rate = (r.tau[j] - log.records[i - 1].tau[j]).abs() / log.dt;
                max_rate[j] = max_rate[j].max(rate);
            }
        }
    }
    let mut violations = Vec::new();
    for j in 0..n {
        // one part in 1e9 absorbs rounding in the clamp arithmetic
        let over_abs = model
            .torque_limits()
            .is_some_and(|l| max_abs[j] > l[j] * (1.0 + 1e-9));
        let over_rate = model
            .torque_rate_limits()
            .is_some_and(|l| max_rate[j] > l[j] * (1.0 + 1e-9));
        if over_abs || over_rate {
            violations.push(j);
        }
    }
    TorqueReport {
        max_abs,
        max_rate,
        violations,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContactReport {
    pub peak_force: f64,
    pub time: f64,
    /// Relative speed and effective mass on the step contact began.
    pub impact_speed: f64,
    pub impact_mass: f64,
    /// `true` when the peak stays at or below the region's force limit.
    pub within_limit: bool,
}

/// Peak contact force in a log recorded with contact enabled.
pub fn contact_probe(log: &TrajectoryLog, region: &BodyRegion) -> Option<ContactReport> {
    let first = log.records.iter().position(|r| r.contact_force > 0.0)?;
    let onset = &log.records[first.saturating_sub(1)];
    let peak = log
        .records
        .iter()
        .max_by(|a, b| a.contact_force.total_cmp(&b.contact_force))?;
    Some(ContactReport {
        peak_force: peak.contact_force,
        time: peak.t,
        impact_speed: onset.v_rel,
        impact_mass: onset.m_eff,
        within_limit: peak.contact_force <= region.f_max,
    })
}
