//! Effective mass of both arms along a few approach directions, by each method.
//!
//! `cargo run --example effective_mass`

use pflsim::limits::default_seed;
use pflsim::numerics::Vector;
use pflsim::robot::RobotModel;
use pflsim::safety::{effective_mass, EffectiveMassMethod};

fn main() {
    let methods = [
        ("iso_conservative", EffectiveMassMethod::IsoConservative { payload: 0.0 }),
        ("operational_space", EffectiveMassMethod::OperationalSpace),
        ("reduced(0.5)", EffectiveMassMethod::Reduced { lambda: 0.5 }),
    ];
    let q_3r = Vector::from_vec(vec![
        3.0 * std::f64::consts::FRAC_PI_4,
        -std::f64::consts::FRAC_PI_2,
        -std::f64::consts::FRAC_PI_2,
    ]);
    let planar = RobotModel::builtin("planar3r").unwrap();
    let panda = RobotModel::builtin("panda").unwrap();
    let cases = [
        (&planar, q_3r, vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]]),
        (
            &panda,
            default_seed(&panda),
            vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]],
        ),
    ];
    for (model, q, directions) in cases {
        println!("{} (total mass {:.2} kg) at q = {:.3?}", model.name(), model.total_mass(), q.as_slice());
        for d in directions {
            let u = Vector::from_vec(d).normalize();
            print!("  u = {:<22}", format!("{:.3?}", u.as_slice()));
            for (name, method) in methods {
                let m = effective_mass(method, model, &q, &u).unwrap();
                print!("  {name} {m:7.3} kg");
            }
            println!();
        }
    }
}
