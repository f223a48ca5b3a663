//! GGIW-GLMB filter on built-in scenario 3 with cardinality and OSPA per step.

use rfs_extent::cli::{run_filter, FilterKind, TrackerConfig};
use rfs_extent::metrics::{evaluate_run, OspaConfig};
use rfs_extent::simulation::{builtin_scenario, generate};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = builtin_scenario(3)?;
    let log = generate(&spec)?;
    let cfg = TrackerConfig::from_scenario(&spec);
    let run = run_filter(FilterKind::Glmb, &cfg, &log)?;
    let m = evaluate_run(&log.steps, &run.records, &OspaConfig::default())?;
    for (i, rec) in run.records.iter().enumerate().step_by(5) {
        let labels: Vec<String> = rec.est.iter().map(|e| e.label.to_string()).collect();
        println!(
            "k={:>2} truth {} est {} [{}] ospa {:.2}",
            rec.k,
            log.steps[i].truth.len(),
            rec.est.len(),
            labels.join(", "),
            m.ospa[i]
        );
    }
    let mean = m.ospa.iter().sum::<f64>() / m.ospa.len() as f64;
    let t = run.step_seconds.iter().sum::<f64>() / run.step_seconds.len() as f64;
    println!("mean OSPA {mean:.2}, mean step time {:.1} ms", t * 1e3);
    Ok(())
}
