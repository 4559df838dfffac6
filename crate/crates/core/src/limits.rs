//! Workspace maps of effective mass and permitted approach speed.

use std::io::Write;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::numerics::Vector;
use crate::robot::ik::{solve_position, IkOptions};
use crate::robot::RobotModel;
use crate::safety::{effective_mass, v_rel_max, BodyRegion, EffectiveMassMethod, SafetyError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LimitsError {
    #[error("grid spec is empty")]
    EmptyGrid,
    #[error("bad grid axis '{0}' (expected START:END:N with N >= 1)")]
    BadAxis(String),
    #[error("grid has {got} axes, model needs {expected}")]
    AxisCount { got: usize, expected: usize },
    #[error(transparent)]
    Safety(#[from] SafetyError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridAxis {
    pub start: f64,
    pub end: f64,
    pub count: usize,
}

impl GridAxis {
    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let step = (self.end - self.start) / (self.count - 1) as f64;
        (0..self.count).map(|i| self.start + step * i as f64).collect()
    }
}

impl FromStr for GridAxis {
    type Err = LimitsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || LimitsError::BadAxis(s.to_string());
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        let [a, b, n] = parts[..] else { return Err(bad()) };
        let start: f64 = a.parse().map_err(|_| bad())?;
        let end: f64 = b.parse().map_err(|_| bad())?;
        let count: usize = n.parse().map_err(|_| bad())?;
        if count == 0 || !start.is_finite() || !end.is_finite() {
            return Err(bad());
        }
        Ok(GridAxis { start, end, count })
    }
}

/// Parses `X0:X1:N,Y0:Y1:N[,Z0:Z1:N]`.
pub fn parse_grid(spec: &str) -> Result<Vec<GridAxis>, LimitsError> {
    if spec.trim().is_empty() {
        return Err(LimitsError::EmptyGrid);
    }
    spec.split(',').map(str::parse).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitPoint {
    pub position: Vec<f64>,
    /// `None` where inverse kinematics found no configuration.
    pub effective_mass: Option<f64>,
    pub v_rel_max: Option<f64>,
}

/// A non-singular starting configuration for grid IK.
pub fn default_seed(model: &RobotModel) -> Vector {
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
    match model.name() {
        "panda" => Vector::from_vec(vec![0.0, -FRAC_PI_4, 0.0, -3.0 * FRAC_PI_4, 0.0, FRAC_PI_2, FRAC_PI_4]),
        _ => Vector::from_element(model.dof(), 0.5),
    }
}

/// Evaluates the speed limit at every grid point along `direction`. Points
/// are visited in row-major order and each IK solve starts from the last
/// solution.
pub fn limits_grid(
    model: &RobotModel,
    region: &BodyRegion,
    method: EffectiveMassMethod,
    axes: &[GridAxis],
    direction: &Vector,
    seed: &Vector,
) -> Result<Vec<LimitPoint>, LimitsError> {
    let p = model.space().position_dim();
    if axes.len() != p {
        return Err(LimitsError::AxisCount {
            got: axes.len(),
            expected: p,
        });
    }
    method.validate()?;
    let u = direction.normalize();
    let values: Vec<Vec<f64>> = axes.iter().map(GridAxis::values).collect();
    let total: usize = values.iter().map(Vec::len).product();
    let mut q = seed.clone();
    let mut out = Vec::with_capacity(total);
    let opts = IkOptions {
        max_iterations: 300,
        tolerance: 1e-8,
        ..IkOptions::default()
    };
    for flat in 0..total {
        let mut rest = flat;
        let mut position = vec![0.0; p];
        for axis in (0..p).rev() {
            position[axis] = values[axis][rest % values[axis].len()];
            rest /= values[axis].len();
        }
        let target = Vector::from_column_slice(&position);
        let solved = solve_position(model, &target, &q, opts)
            .or_else(|_| solve_position(model, &target, seed, opts));
        let point = match solved {
            Ok(sol) => {
                q = sol;
                let m = effective_mass(method, model, &q, &u)?;
                LimitPoint {
                    position,
                    effective_mass: Some(m),
                    v_rel_max: Some(v_rel_max(region, m)?),
                }
            }
            Err(_) => LimitPoint {
                position,
                effective_mass: None,
                v_rel_max: None,
            },
        };
        out.push(point);
    }
    Ok(out)
}

/// CSV with one column per position axis, then `m_eff` and `v_rel_max`.
/// Unreachable points leave the last two empty.
pub fn write_limits_csv<W: Write>(points: &[LimitPoint], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let dim = points.first().map_or(0, |p| p.position.len());
    let mut header: Vec<&str> = ["x", "y", "z"][..dim].to_vec();
    header.extend(["m_eff", "v_rel_max"]);
    w.write_record(&header)?;
    for p in points {
        let mut row: Vec<String> = p.position.iter().map(|v| v.to_string()).collect();
        row.push(p.effective_mass.map(|v| v.to_string()).unwrap_or_default());
        row.push(p.v_rel_max.map(|v| v.to_string()).unwrap_or_default());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
