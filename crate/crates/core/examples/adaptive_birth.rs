//! Adaptive birth: tracks are initiated from measurement clusters that no
//! existing track explains, without prior knowledge of birth locations.

use rfs_extent::cli::{run_filter, FilterKind, TrackerConfig};
use rfs_extent::metrics::{evaluate_run, OspaConfig};
use rfs_extent::simulation::{builtin_scenario, generate};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = builtin_scenario(2)?;
    let log = generate(&spec)?;
    let cfg = TrackerConfig::from_scenario(&spec);
    for kind in [FilterKind::Lmb, FilterKind::LmbAb] {
        let run = run_filter(kind, &cfg, &log)?;
        let m = evaluate_run(&log.steps, &run.records, &OspaConfig::default())?;
        let tail = &m.ospa[m.ospa.len() - 20..];
        let first = run
            .records
            .iter()
            .find(|r| !r.est.is_empty())
            .map_or(0, |r| r.k);
        let labels: std::collections::BTreeSet<String> = run
            .records
            .iter()
            .flat_map(|r| r.est.iter().map(|e| e.label.to_string()))
            .collect();
        println!(
            "{:>6}: first report at k={first}, labels {labels:?}, final-20 mean OSPA {:.2}",
            kind.name(),
            tail.iter().sum::<f64>() / 20.0
        );
    }
    Ok(())
}
