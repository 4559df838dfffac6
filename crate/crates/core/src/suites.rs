//! The two four-controller comparison studies and on-disk run outputs.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde_json::json;
use thiserror::Error;

use crate::metrics::{comparison_table, ComparisonTable, MetricsError, RunMetrics};
use crate::scenario::{Scenario, ScenarioError};
use crate::simulator::{run, SimError, TrajectoryLog};

const SCENARIOS_3R: [(&str, &str); 4] = [
    ("3r_pd", include_str!("../../../scenarios/3r_pd.json")),
    ("3r_ctm", include_str!("../../../scenarios/3r_ctm.json")),
    ("3r_imp1", include_str!("../../../scenarios/3r_imp1.json")),
    ("3r_imp2", include_str!("../../../scenarios/3r_imp2.json")),
];

const SCENARIOS_PANDA: [(&str, &str); 4] = [
    ("panda_pd", include_str!("../../../scenarios/panda_pd.json")),
    ("panda_ctm", include_str!("../../../scenarios/panda_ctm.json")),
    ("panda_imp1", include_str!("../../../scenarios/panda_imp1.json")),
    ("panda_imp2", include_str!("../../../scenarios/panda_imp2.json")),
];

#[derive(Debug, Error)]
pub enum SuiteError {
    #[error("unknown suite '{0}' (available: 3r, panda)")]
    Unknown(String),
    #[error("scenario {label}: {source}")]
    Scenario {
        label: String,
        #[source]
        source: ScenarioError,
    },
    #[error("run {label}: {source}")]
    Run {
        label: String,
        #[source]
        source: SimError,
    },
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("writing {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    ThreeR,
    Panda,
}

impl Suite {
    pub const ALL: [Suite; 2] = [Suite::ThreeR, Suite::Panda];

    pub fn name(self) -> &'static str {
        match self {
            Suite::ThreeR => "3r",
            Suite::Panda => "panda",
        }
    }

    /// The shipped scenarios in table order: PD, CTM, IMP₁, IMP₂.
    pub fn scenarios(self) -> Vec<Scenario> {
        let table = match self {
            Suite::ThreeR => &SCENARIOS_3R,
            Suite::Panda => &SCENARIOS_PANDA,
        };
        table
            .iter()
            .map(|(label, text)| {
                let mut s = Scenario::from_json(text).expect("shipped scenarios are valid");
                s.label.get_or_insert_with(|| label.to_string());
                s
            })
            .collect()
    }
}

impl std::str::FromStr for Suite {
    type Err = SuiteError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| SuiteError::Unknown(s.to_string()))
    }
}

#[derive(Debug)]
pub struct SuiteRun {
    pub scenario: Scenario,
    pub log: TrajectoryLog,
    pub metrics: RunMetrics,
}

#[derive(Debug)]
pub struct SuiteResult {
    pub suite: Suite,
    pub runs: Vec<SuiteRun>,
    pub table: ComparisonTable,
}

/// Runs every scenario on its own thread and returns them in input order.
pub fn run_all(scenarios: Vec<Scenario>) -> Result<Vec<SuiteRun>, SuiteError> {
    let results: Vec<Result<SuiteRun, SuiteError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = scenarios
            .into_iter()
            .map(|scenario| {
                scope.spawn(move || {
                    let log = run(&scenario).map_err(|source| SuiteError::Run {
                        label: scenario.label(),
                        source,
                    })?;
                    let metrics = RunMetrics::from_log(&log)?;
                    Ok(SuiteRun {
                        scenario,
                        log,
                        metrics,
                    })
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("simulation thread panicked"))
            .collect()
    });
    results.into_iter().collect()
}

/// Runs a suite. `dt` replaces the step of scenarios that leave it unset.
pub fn run_suite(suite: Suite, dt: Option<f64>) -> Result<SuiteResult, SuiteError> {
    let mut scenarios = suite.scenarios();
    if let Some(dt) = dt {
        for s in scenarios.iter_mut().filter(|s| s.dt.is_none()) {
            s.apply_override(&format!("dt={dt}")).map_err(|source| SuiteError::Scenario {
                label: s.label(),
                source,
            })?;
        }
    }
    let runs = run_all(scenarios)?;
    let metrics: Vec<RunMetrics> = runs.iter().map(|r| r.metrics.clone()).collect();
    let table = comparison_table(&metrics)?;
    Ok(SuiteResult { suite, runs, table })
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), SuiteError> {
    fs::write(path, contents).map_err(|source| SuiteError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes `trajectory.csv`, `metrics.json` and `meta.json` into `dir`.
/// Only `meta.json` carries a timestamp.
pub fn write_run(dir: &Path, scenario: &Scenario, log: &TrajectoryLog, metrics: &RunMetrics) -> Result<(), SuiteError> {
    let io = |source| SuiteError::Io {
        path: dir.to_path_buf(),
        source,
    };
    fs::create_dir_all(dir).map_err(io)?;
    let csv_path = dir.join("trajectory.csv");
    let file = fs::File::create(&csv_path).map_err(|source| SuiteError::Io {
        path: csv_path.clone(),
        source,
    })?;
    log.write_csv(std::io::BufWriter::new(file))
        .map_err(|e| SuiteError::Io {
            path: csv_path,
            source: e.into(),
        })?;
    let metrics_json = serde_json::to_string_pretty(metrics).expect("metrics serialise");
    write_file(&dir.join("metrics.json"), metrics_json + "\n")?;
    let created = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let meta = json!({
        "scenario": scenario,
        "dt": log.dt,
        "steps": log.len(),
        "settling": log.settling,
        "metrics": metrics,
        "created_unix_s": created,
    });
    write_file(
        &dir.join("meta.json"),
        serde_json::to_string_pretty(&meta).expect("meta serialises") + "\n",
    )
}

/// Writes one directory per run plus `comparison.json` and `comparison.txt`.
pub fn write_suite(out: &Path, result: &SuiteResult) -> Result<(), SuiteError> {
    for run in &result.runs {
        write_run(&out.join(&run.metrics.label), &run.scenario, &run.log, &run.metrics)?;
    }
    write_file(&out.join("comparison.json"), result.table.to_json() + "\n")?;
    write_file(&out.join("comparison.txt"), result.table.to_text())
}
