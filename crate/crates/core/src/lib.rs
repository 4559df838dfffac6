pub mod numerics;
pub mod robot;
pub mod safety;
pub mod controllers;
pub mod planner;
pub mod scenario;
pub mod simulator;
pub mod metrics;
pub mod suites;
pub mod limits;
