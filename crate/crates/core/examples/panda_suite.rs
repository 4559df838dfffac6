//! The seven-joint arm comparison near a human face, with the torque limit
//! check for every run.
//!
//! `cargo run --release --example panda_suite [out_dir]`

use pflsim::robot::RobotModel;
use pflsim::simulator::check_torque_limits;
use pflsim::suites::{run_suite, write_suite, Suite};

fn main() {
    let result = run_suite(Suite::Panda, None).expect("suite runs");
    print!("{}", result.table.to_text());
    let model = RobotModel::builtin("panda").unwrap();
    for run in &result.runs {
        let report = check_torque_limits(&run.log, &model);
        println!(
            "{:<11} torque limits {}  max|tau| {:.1?}  max rate {:.0?}",
            run.metrics.label,
            if report.passed() { "ok" } else { "VIOLATED" },
            report.max_abs,
            report.max_rate
        );
    }
    if let Some(dir) = std::env::args().nth(1) {
        write_suite(dir.as_ref(), &result).expect("outputs written");
        println!("wrote {dir}");
    }
}
