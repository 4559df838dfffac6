//! The planar three-link comparison: PD, computed torque and two impedance
//! reductions driving toward a goal beside a human abdomen.
//!
//! `cargo run --release --example three_r_suite [out_dir]`

use pflsim::suites::{run_suite, write_suite, Suite};

fn main() {
    let started = std::time::Instant::now();
    let result = run_suite(Suite::ThreeR, None).expect("suite runs");
    print!("{}", result.table.to_text());
    println!("({:.2} s)", started.elapsed().as_secs_f64());
    if let Some(dir) = std::env::args().nth(1) {
        write_suite(dir.as_ref(), &result).expect("outputs written");
        println!("wrote {dir}");
    }
}
