//! Drives the end effector into a spring-backed human and compares the
//! simulated peak force with the region limit and with the 1D impact model.
//!
//! `cargo run --release --example contact_probe [speed_m_s]`

use pflsim::safety::{body_region, reduced_mass, simulate_impact_1d};
use pflsim::scenario::Scenario;
use pflsim::simulator::{contact_probe, run};

const SCENARIO: &str = include_str!("../../../scenarios/3r_contact.json");

fn probe(scenario: &Scenario) {
    let region = body_region(&scenario.human.region).unwrap();
    let log = run(scenario).expect("run completes");
    let Some(report) = contact_probe(&log, &region) else {
        println!("{}: no contact", scenario.label());
        return;
    };
    let mu = reduced_mass(region.m_h, report.impact_mass).unwrap();
    let oracle = simulate_impact_1d(report.impact_speed, mu, region.stiffness());
    println!(
        "{}: impact at {:.3} m/s with {:.3} kg, peak {:.1} N at t = {:.3} s (limit {:.0} N, 1D model {:.1} N)",
        scenario.label(),
        report.impact_speed,
        report.impact_mass,
        report.peak_force,
        report.time,
        region.f_max,
        oracle
    );
}

fn main() {
    let capped = Scenario::from_json(SCENARIO).unwrap();
    probe(&capped);
    let speed: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2.0);
    let mut fast = capped.clone();
    fast.apply_override(&format!("fixed_speed={speed}")).unwrap();
    fast.label = Some(format!("fixed {speed} m/s"));
    probe(&fast);
}
