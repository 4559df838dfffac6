use pflsim::metrics::RunMetrics;
use pflsim::safety::{body_region, reduced_mass, simulate_impact_1d};
use pflsim::scenario::Scenario;
use pflsim::simulator::{contact_probe, run};
use pflsim::suites::Suite;

fn load(name: &str) -> Scenario {
    let path = format!("{}/../../scenarios/{name}", env!("CARGO_MANIFEST_DIR"));
    Scenario::from_json(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn every_shipped_file_sets_up() {
    let dir = format!("{}/../../scenarios", env!("CARGO_MANIFEST_DIR"));
    let mut count = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let s = Scenario::from_json(&std::fs::read_to_string(&path).unwrap())
            .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        s.setup().unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        count += 1;
    }
    assert_eq!(count, 9);
}

#[test]
fn nominal_three_r_runs_never_touch_the_human() {
    for mut s in Suite::ThreeR.scenarios() {
        s.contact_check = true;
        let log = run(&s).unwrap();
        assert!(log.records.iter().all(|r| r.contact_force == 0.0), "{}", s.label());
    }
}

#[test]
fn halving_the_step_barely_moves_settling() {
    for label in ["3r_ctm.json", "3r_imp2.json"] {
        let coarse = load(label);
        let mut fine = coarse.clone();
        fine.apply_override(&format!("dt={}", coarse.setup().unwrap().dt / 2.0)).unwrap();
        let a = RunMetrics::from_log(&run(&coarse).unwrap()).unwrap().settling_time_s.unwrap();
        let b = RunMetrics::from_log(&run(&fine).unwrap()).unwrap().settling_time_s.unwrap();
        assert!((a - b).abs() / a < 5e-3, "{label}: {a} vs {b}");
    }
}

#[test]
fn contact_peak_tracks_the_impact_model() {
    let capped = load("3r_contact.json");
    let mut fast = capped.clone();
    fast.apply_override("fixed_speed=2.0").unwrap();
    let region = body_region("abdomen").unwrap();
    let mut peaks = Vec::new();
    for s in [capped, fast] {
        let log = run(&s).unwrap();
        let report = contact_probe(&log, &region).expect("the goal lies inside the human");
        let mu = reduced_mass(region.m_h, report.impact_mass).unwrap();
        let model = simulate_impact_1d(report.impact_speed, mu, region.stiffness());
        // the controller keeps pushing after impact, the 1D model does not
        assert!(report.peak_force >= model, "{}: {} < {model}", s.label(), report.peak_force);
        assert!(report.peak_force <= 1.2 * model, "{}: {} vs {model}", s.label(), report.peak_force);
        peaks.push(report.peak_force);
    }
    assert!(peaks[1] > 3.0 * region.f_max);
    assert!(peaks[0] < peaks[1]);
}
