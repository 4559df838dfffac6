//! Shaping a diagonal desired inertia so the robot's apparent mass along a
//! contact direction drops to a chosen fraction.
//!
//! `cargo run --example desired_inertia`

use pflsim::controllers::build_desired_inertia;
use pflsim::numerics::Vector;
use pflsim::robot::RobotModel;
use pflsim::safety::task_mobility;

fn main() {
    let model = RobotModel::builtin("planar3r").unwrap();
    let q = Vector::from_vec(vec![2.0, -1.2, -0.9]);
    let mbar_inv = task_mobility(&model, &q).expect("non-singular configuration");
    let u = Vector::from_vec(vec![0.8, 0.6]);
    let full = Vector::from_vec(vec![0.8, 0.6, 0.0]);
    let unreduced = 1.0 / full.dot(&(&mbar_inv * &full));
    println!("M̄⁻¹ =\n{mbar_inv:.4}");
    println!("unreduced effective mass along {:?}: {unreduced:.4} kg", u.as_slice());
    for lambda in [1.0, 0.75, 0.5, 0.25] {
        let md = build_desired_inertia(&mbar_inv, &u, lambda).unwrap();
        let achieved = md.effective_mass(&u);
        println!(
            "lambda {lambda:4.2}: gamma = {:.4?}  effective mass {achieved:.4} kg (ratio {:.12})",
            md.gamma.as_slice(),
            achieved / unreduced
        );
    }
    // one component vanishes: it keeps its M̄⁻¹ entry
    let axis = Vector::from_vec(vec![1.0, 0.0]);
    let md = build_desired_inertia(&mbar_inv, &axis, 0.5).unwrap();
    println!("along x only: gamma = {:.4?}", md.gamma.as_slice());
}
