//! Scenario generation, JSON Lines round trip, and a custom scenario spec.

use rfs_extent::io::{read_scenario_log, write_scenario_log};
use rfs_extent::simulation::{builtin_scenario, generate, ScenarioSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let log = generate(&builtin_scenario(2)?)?;
    let mut buf = Vec::new();
    write_scenario_log(&mut buf, &log)?;
    let back = read_scenario_log(buf.as_slice())?;
    assert_eq!(back, log);
    let n_meas: usize = log.steps.iter().map(|s| s.z.len()).sum();
    println!("scenario 2: {} steps, {n_meas} measurements, {} bytes, bit-exact round trip", log.steps.len(), buf.len());
    let first = String::from_utf8(buf)?;
    println!("first line: {}...", &first[..first.find("\"Z\"").unwrap_or(120).min(160)]);

    let spec: ScenarioSpec = serde_json::from_str(
        r#"{
  "steps": 10, "seed": 9,
  "motion": {"model": "constant_velocity", "period": 1.0, "accel_std": 0.1},
  "p_d": 0.95,
  "clutter": {"rate": 5.0, "lower": [-200.0, -200.0], "upper": [200.0, 200.0]},
  "targets": [
    {"birth": 1, "death": 10, "extent": [[9.0, 0.0], [0.0, 4.0]],
     "path": {"waypoints": [{"k": 1, "position": [-50.0, 0.0]}, {"k": 10, "position": [50.0, 0.0]}]}}
  ]
}"#,
    )?;
    spec.validate()?;
    let custom = generate(&spec)?;
    for s in custom.steps.iter().step_by(3) {
        let x = &s.truth[0].x;
        println!("k={:>2} target at ({:6.1}, {:5.1}), {} measurements", s.k, x[0], x[1], s.z.len());
    }
    Ok(())
}
