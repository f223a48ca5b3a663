//! Monte Carlo sweep of a built-in scenario with per-step error summaries.
//!
//! `cargo run --release --example monte_carlo -- [scenario] [filter] [runs]`

use rfs_extent::cli::{monte_carlo, FilterKind, McSettings, TrackerConfig};
use rfs_extent::metrics::OspaConfig;
use rfs_extent::simulation::builtin_scenario;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let id: u32 = args.first().map_or(Ok(1), |s| s.parse())?;
    let filter: FilterKind = args.get(1).map_or("lmb", String::as_str).parse()?;
    let runs: usize = args.get(2).map_or(Ok(4), |s| s.parse())?;
    let spec = builtin_scenario(id)?;
    let settings = McSettings {
        runs,
        config: TrackerConfig::from_scenario(&spec),
        spec,
        filter,
        seed_base: 100,
        jobs: std::thread::available_parallelism().map_or(1, |n| n.get()),
        ospa: OspaConfig::default(),
    };
    let out = monte_carlo(&settings)?;
    let t = &out.table;
    let n = t.k.len() as f64;
    let abs_card: f64 = out
        .runs
        .iter()
        .flat_map(|r| r.card_err.iter().map(|e| e.abs()))
        .sum::<f64>()
        / (n * runs as f64);
    println!("scenario {id}, {} filter, {runs} runs", filter.name());
    println!("mean |card err| {abs_card:.3}");
    println!("mean OSPA       {:.3}", t.ospa.0.iter().sum::<f64>() / n);
    let times: Vec<f64> = out.step_seconds.iter().flatten().copied().collect();
    let mean_t = times.iter().sum::<f64>() / times.len() as f64;
    let max_t = times.iter().copied().fold(0.0, f64::max);
    println!("per-step time   {mean_t:.4} s mean, {max_t:.4} s max");
    for i in (0..t.k.len()).step_by(10) {
        println!("k={:>3} card {:+.2} ospa {:.2}", t.k[i], t.card_err.0[i], t.ospa.0[i]);
    }
    Ok(())
}
