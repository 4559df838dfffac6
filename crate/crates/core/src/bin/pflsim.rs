use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use pflsim::limits::{default_seed, limits_grid, parse_grid, write_limits_csv};
use pflsim::metrics::RunMetrics;
use pflsim::numerics::Vector;
use pflsim::robot::RobotModel;
use pflsim::safety::{body_region, EffectiveMassMethod};
use pflsim::scenario::Scenario;
use pflsim::simulator::run_setup;
use pflsim::suites::{run_suite, write_run, write_suite, Suite, SuiteError};

#[derive(Parser)]
#[command(name = "pflsim", version, about = "Power-and-force-limited manipulator simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario file.
    Run {
        scenario: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// KEY=VALUE, repeatable (e.g. lambda=0.5, Kp=[20,20,5], settling.hold=0.5).
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Run a four-controller comparison study (3r or panda).
    Suite {
        name: String,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Map effective mass and permitted speed over a workspace grid.
    Limits {
        /// Builtin model name or model file.
        model: String,
        #[arg(long)]
        region: String,
        /// iso_conservative, operational_space or reduced.
        #[arg(long)]
        method: String,
        /// X0:X1:N,Y0:Y1:N[,Z0:Z1:N]
        #[arg(long, allow_hyphen_values = true)]
        grid: String,
        /// Approach direction; defaults to +x.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        direction: Option<Vec<f64>>,
        #[arg(long, default_value_t = 0.0)]
        payload: f64,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        seed: Option<Vec<f64>>,
        /// Output CSV; stdout when absent.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

enum Failure {
    Usage(String),
    Simulation(String),
}

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

fn env_dt() -> Result<Option<f64>, Failure> {
    match std::env::var("PFLSIM_DT") {
        Ok(v) => v
            .trim()
            .parse::<f64>()
            .map(Some)
            .map_err(|_| Failure::Usage(format!("PFLSIM_DT is not a number: {v}"))),
        Err(_) => Ok(None),
    }
}

fn cmd_run(path: PathBuf, out: Option<PathBuf>, overrides: Vec<String>) -> Result<(), Failure> {
    let mut scenario = Scenario::load(&path).map_err(usage)?;
    if let (Some(dt), None) = (env_dt()?, scenario.dt) {
        scenario.apply_override(&format!("dt={dt}")).map_err(usage)?;
    }
    for o in &overrides {
        scenario.apply_override(o).map_err(usage)?;
    }
    let setup = scenario.setup().map_err(usage)?;
    let log = run_setup(setup).map_err(|e| Failure::Simulation(e.to_string()))?;
    let metrics = RunMetrics::from_log(&log).map_err(|e| Failure::Simulation(e.to_string()))?;
    let dir = out.unwrap_or_else(|| PathBuf::from("runs").join(scenario.label()));
    write_run(&dir, &scenario, &log, &metrics).map_err(|e| Failure::Simulation(e.to_string()))?;
    println!("{}", serde_json::to_string_pretty(&metrics).expect("metrics serialise"));
    eprintln!("wrote {}", dir.display());
    Ok(())
}

fn cmd_suite(name: String, out: Option<PathBuf>) -> Result<(), Failure> {
    let suite: Suite = name.parse().map_err(usage)?;
    let result = run_suite(suite, env_dt()?).map_err(|e| match e {
        SuiteError::Scenario { .. } => usage(e),
        e => Failure::Simulation(e.to_string()),
    })?;
    let dir = out.unwrap_or_else(|| PathBuf::from("runs").join(suite.name()));
    write_suite(&dir, &result).map_err(|e| Failure::Simulation(e.to_string()))?;
    print!("{}", result.table.to_text());
    eprintln!("wrote {}", dir.display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_limits(
    model: String,
    region: String,
    method: String,
    grid: String,
    direction: Option<Vec<f64>>,
    payload: f64,
    lambda: Option<f64>,
    seed: Option<Vec<f64>>,
    out: Option<PathBuf>,
) -> Result<(), Failure> {
    let model = match RobotModel::builtin(&model) {
        Some(m) => m,
        None => RobotModel::load(&model).map_err(usage)?,
    };
    let region = body_region(&region).map_err(usage)?;
    let method = match method.to_ascii_lowercase().replace('-', "_").as_str() {
        "iso_conservative" | "iso" => EffectiveMassMethod::IsoConservative { payload },
        "operational_space" | "operational" => EffectiveMassMethod::OperationalSpace,
        "reduced" => EffectiveMassMethod::Reduced {
            lambda: lambda.ok_or_else(|| usage("--method reduced needs --lambda"))?,
        },
        other => return Err(usage(format!("unknown method '{other}'"))),
    };
    let axes = parse_grid(&grid).map_err(usage)?;
    let p = model.space().position_dim();
    let direction = match direction {
        Some(d) if d.len() == p && d.iter().any(|v| *v != 0.0) => Vector::from_vec(d),
        Some(_) => return Err(usage(format!("--direction needs {p} components, not all zero"))),
        None => {
            let mut d = Vector::zeros(p);
            d[0] = 1.0;
            d
        }
    };
    let seed = match seed {
        Some(s) if s.len() == model.dof() => Vector::from_vec(s),
        Some(_) => return Err(usage(format!("--seed needs {} entries", model.dof()))),
        None => default_seed(&model),
    };
    let points = limits_grid(&model, &region, method, &axes, &direction, &seed).map_err(usage)?;
    let written = match out {
        Some(path) => std::fs::File::create(&path)
            .map_err(csv::Error::from)
            .and_then(|f| write_limits_csv(&points, f)),
        None => write_limits_csv(&points, std::io::stdout().lock()),
    };
    written.map_err(|e| Failure::Simulation(e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { scenario, out, overrides } => cmd_run(scenario, out, overrides),
        Command::Suite { name, out } => cmd_suite(name, out),
        Command::Limits {
            model,
            region,
            method,
            grid,
            direction,
            payload,
            lambda,
            seed,
            out,
        } => cmd_limits(model, region, method, grid, direction, payload, lambda, seed, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Simulation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
