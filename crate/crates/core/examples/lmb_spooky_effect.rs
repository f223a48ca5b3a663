//! Two well-separated targets; one is forced to go undetected. The LMB
//! existence of the other track is identical with and without the misses.

use rfs_extent::cli::{run_filter, FilterKind, TrackerConfig};
use rfs_extent::simulation::{builtin_scenario, generate};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = builtin_scenario(3)?;
    let cfg = TrackerConfig::from_scenario(&spec);
    let with_miss = run_filter(FilterKind::Lmb, &cfg, &generate(&spec)?)?;
    let detected = run_filter(FilterKind::Lmb, &cfg, &generate(&spec.without_forced_misses())?)?;
    let misses = &spec.targets[0].forced_misses;
    println!("forced misses of target 0 at steps {misses:?}");
    for k in [19, 20, 21, 39, 40, 41, 42] {
        let at = |run: &rfs_extent::cli::FilterRun| -> Vec<String> {
            run.existence
                .iter()
                .filter(|e| e.0 == k && e.2 > 0.5)
                .map(|(_, l, r)| format!("{l}: {r:.6}"))
                .collect()
        };
        println!("k={k}: with misses {:?} | counterfactual {:?}", at(&with_miss), at(&detected));
    }
    Ok(())
}
