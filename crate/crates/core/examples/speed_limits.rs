//! Permitted approach speed per body region, checked against a simulated
//! spring impact at that speed.
//!
//! `cargo run --example speed_limits [robot_mass_kg]`

use pflsim::safety::{body_regions, reduced_mass, simulate_impact_1d, v_rel_max};

fn main() {
    let m_r: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(9.0);
    println!("robot effective mass {m_r} kg");
    println!("{:<30} {:>7} {:>8} {:>6} {:>10} {:>12}", "region", "F_max", "k N/mm", "m_H", "v_max m/s", "impact N");
    for region in body_regions() {
        let v = v_rel_max(region, m_r).unwrap();
        let mu = reduced_mass(region.m_h, m_r).unwrap();
        let peak = simulate_impact_1d(v, mu, region.stiffness());
        println!(
            "{:<30} {:>7.0} {:>8.0} {:>6.1} {:>10.4} {:>12.2}",
            region.name, region.f_max, region.k, region.m_h, v, peak
        );
    }
}
