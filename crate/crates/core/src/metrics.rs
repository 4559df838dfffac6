//! Run metrics and comparison tables.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{wrap_angle, Vector};
use crate::robot::TaskSpace;
use crate::scenario::ErrorReference;
use crate::simulator::{within_band, TrajectoryLog};

/// Relative slack on the speed cap before a step counts as a violation.
pub const CAP_TOLERANCE: f64 = 0.02;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("log has no records")]
    EmptyLog,
    #[error("runs disagree on task dimension ({0} vs {1})")]
    DimensionMismatch(usize, usize),
    #[error("comparison needs at least one run")]
    NoRuns,
}

/// Mean of `|r − reference|` per task coordinate, angles wrapped.
pub fn mean_abs_error_against(log: &TrajectoryLog, reference: ErrorReference) -> Result<Vector, MetricsError> {
    if log.is_empty() {
        return Err(MetricsError::EmptyLog);
    }
    let p = log.space.position_dim();
    let mut sum = Vector::zeros(log.goal.len());
    for r in &log.records {
        let target = match reference {
            ErrorReference::Setpoint => &r.setpoint,
            ErrorReference::Goal => &log.goal,
        };
        for i in 0..sum.len() {
            let e = r.pose[i] - target[i];
            sum[i] += if i < p { e.abs() } else { wrap_angle(e).abs() };
        }
    }
    Ok(sum / log.len() as f64)
}

/// [`mean_abs_error_against`] with the reference the log was recorded for.
pub fn mean_abs_error(log: &TrajectoryLog) -> Result<Vector, MetricsError> {
    mean_abs_error_against(log, log.error_reference)
}

/// `Σ_steps Σ_joints |τ| dt`, N·m·s.
pub fn control_effort(log: &TrajectoryLog) -> Result<f64, MetricsError> {
    if log.is_empty() {
        return Err(MetricsError::EmptyLog);
    }
    Ok(log
        .records
        .iter()
        .map(|r| r.tau.iter().map(|t| t.abs()).sum::<f64>())
        .sum::<f64>()
        * log.dt)
}

/// First time the settling coordinate enters its band around the goal and
/// stays there for the hold window. `None` if it never does within the log.
pub fn settling_time(log: &TrajectoryLog) -> Option<f64> {
    let s = log.settling;
    let goal = log.goal[s.coordinate];
    let hold = (s.hold / log.dt).round() as usize;
    let mut start: Option<usize> = None;
    for (i, r) in log.records.iter().enumerate() {
        if within_band(r.pose[s.coordinate], goal, s.fraction) {
            let first = *start.get_or_insert(i);
            if i + 1 - first >= hold.max(1) {
                return Some(log.records[first].t);
            }
        } else {
            start = None;
        }
    }
    None
}

pub fn peak_v_rel(log: &TrajectoryLog) -> f64 {
    log.records.iter().map(|r| r.v_rel).fold(0.0, f64::max)
}

/// Steps where the speed toward the human exceeds the cap by more than 2 %.
pub fn cap_violations(log: &TrajectoryLog) -> usize {
    log.records
        .iter()
        .filter(|r| r.v_rel > (1.0 + CAP_TOLERANCE) * r.v_cap)
        .count()
}

/// Largest relative gap between the end effector's speed along the path and
/// the commanded path speed, over steps at or after `from` (s) where the
/// reference is still moving. `None` if no step qualifies.
pub fn cruise_tracking_error(log: &TrajectoryLog, from: f64) -> Option<f64> {
    let p = log.space.position_dim();
    let goal = log.goal.rows(0, p);
    log.records
        .iter()
        .filter(|r| r.t >= from && r.v_command > 0.0)
        .filter_map(|r| {
            let to_goal = goal - r.setpoint.rows(0, p);
            let norm = to_goal.norm();
            // the last step before arrival commands a tiny remainder
            (norm > r.v_command * log.dt).then(|| {
                let speed = r.pose_velocity.rows(0, p).dot(&to_goal) / norm;
                (speed - r.v_command).abs() / r.v_command
            })
        })
        .reduce(f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub label: String,
    pub settling_time_s: Option<f64>,
    pub mean_abs_error: Vec<f64>,
    #[serde(rename = "control_effort_Nms")]
    pub control_effort_nms: f64,
    pub peak_v_rel: f64,
    pub cap_violations: usize,
}

impl RunMetrics {
    pub fn from_log(log: &TrajectoryLog) -> Result<Self, MetricsError> {
        Ok(Self {
            label: log.label.clone(),
            settling_time_s: settling_time(log),
            mean_abs_error: mean_abs_error(log)?.iter().copied().collect(),
            control_effort_nms: control_effort(log)?,
            peak_v_rel: peak_v_rel(log),
            cap_violations: cap_violations(log),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub coordinates: Vec<String>,
    pub rows: Vec<RunMetrics>,
}

/// Lines runs up into one table; all must share a task dimension.
pub fn comparison_table(runs: &[RunMetrics]) -> Result<ComparisonTable, MetricsError> {
    let first = runs.first().ok_or(MetricsError::NoRuns)?;
    let dim = first.mean_abs_error.len();
    for r in runs {
        if r.mean_abs_error.len() != dim {
            return Err(MetricsError::DimensionMismatch(dim, r.mean_abs_error.len()));
        }
    }
    let coordinates = match dim {
        3 => TaskSpace::Planar.coordinate_names().iter().map(|s| s.to_string()).collect(),
        6 => TaskSpace::Spatial.coordinate_names().iter().map(|s| s.to_string()).collect(),
        _ => (1..=dim).map(|i| format!("r{i}")).collect(),
    };
    Ok(ComparisonTable {
        coordinates,
        rows: runs.to_vec(),
    })
}

impl ComparisonTable {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("table serialises")
    }

    pub fn to_text(&self) -> String {
        let label_width = self.rows.iter().map(|r| r.label.len()).max().unwrap_or(0).max(5);
        let mut out = String::new();
        let _ = write!(out, "{:<label_width$}  {:>10}  {:>12}", "run", "settling_s", "effort_Nms");
        for c in &self.coordinates {
            let _ = write!(out, "  {:>10}", format!("e_{c}"));
        }
        let _ = writeln!(out, "  {:>10}  {:>8}", "peak_v", "cap_viol");
        for r in &self.rows {
            let settling = r
                .settling_time_s
                .map(|t| format!("{t:.4}"))
                .unwrap_or_else(|| "-".into());
            let _ = write!(
                out,
                "{:<label_width$}  {:>10}  {:>12.1}",
                r.label, settling, r.control_effort_nms
            );
            for e in &r.mean_abs_error {
                let _ = write!(out, "  {e:>10.4}");
            }
            let _ = writeln!(out, "  {:>10.4}  {:>8}", r.peak_v_rel, r.cap_violations);
        }
        out
    }
}
