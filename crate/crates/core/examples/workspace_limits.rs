//! Maps the permitted approach speed over part of the planar workspace and
//! prints it as a coarse table.
//!
//! `cargo run --release --example workspace_limits`

use pflsim::limits::{default_seed, limits_grid, parse_grid};
use pflsim::numerics::Vector;
use pflsim::robot::RobotModel;
use pflsim::safety::{body_region, EffectiveMassMethod};

fn main() {
    let model = RobotModel::builtin("planar3r").unwrap();
    let region = body_region("abdomen").unwrap();
    let axes = parse_grid("1:5:9,-1:3:5").unwrap();
    let u = Vector::from_vec(vec![1.0, 0.0]);
    let points = limits_grid(
        &model,
        &region,
        EffectiveMassMethod::OperationalSpace,
        &axes,
        &u,
        &default_seed(&model),
    )
    .unwrap();
    println!("v_rel,max (m/s) toward +x, abdomen; rows are y, columns x");
    let xs = axes[0].values();
    print!("{:>6}", "");
    for x in &xs {
        print!("{x:>7.1}");
    }
    println!();
    for (j, y) in axes[1].values().iter().enumerate().rev() {
        print!("{y:>6.1}");
        for i in 0..xs.len() {
            let p = &points[i * axes[1].count + j];
            match p.v_rel_max {
                Some(v) => print!("{v:>7.3}"),
                None => print!("{:>7}", "-"),
            }
        }
        println!();
    }
}
