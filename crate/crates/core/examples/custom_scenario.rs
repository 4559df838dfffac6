//! Builds a scenario in code, tweaks it with overrides, runs it and writes
//! the usual output files.
//!
//! `cargo run --release --example custom_scenario [out_dir]`

use pflsim::metrics::{cruise_tracking_error, RunMetrics};
use pflsim::scenario::Scenario;
use pflsim::simulator::run;
use pflsim::suites::write_run;

fn main() {
    let mut scenario = Scenario::from_json(
        r#"{
            "label": "3r_chest_ctm",
            "robot": "planar3r",
            "controller": {"type": "ctm", "Kp": 20, "Kd": 100},
            "human": {"position": [6.0, 3.0], "region": "chest"},
            "q0": [2.356194490192345, -1.5707963267948966, -1.5707963267948966],
            "goal": [4.5, 2.0, 0.0],
            "t_max": 10.0,
            "dt": 0.002
        }"#,
    )
    .unwrap();
    for o in ["controller.type=impedance", "lambda=0.6", "label=3r_chest_imp"] {
        scenario.apply_override(o).unwrap();
    }
    let log = run(&scenario).expect("run completes");
    let metrics = RunMetrics::from_log(&log).unwrap();
    println!("{}", serde_json::to_string_pretty(&metrics).unwrap());
    if let Some(gap) = cruise_tracking_error(&log, 1.0) {
        println!("worst cruise speed gap after 1 s: {:.2} %", 100.0 * gap);
    }
    if let Some(dir) = std::env::args().nth(1) {
        write_run(dir.as_ref(), &scenario, &log, &metrics).unwrap();
        println!("wrote {dir}");
    }
}
