//! Ranked data association: Murty's k-best assignments and ranked survivor
//! subsets.

use nalgebra::dmatrix;
use rfs_extent::assignment::{k_shortest_paths, murty, AssignCostMatrix, Choice};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // Three tracks, two measurement groups; costs are negative log evidences.
    let costs = AssignCostMatrix::new(
        dmatrix![1.0, 6.0; 5.5, 0.5; 4.0, f64::INFINITY],
        vec![3.0, 3.0, 2.0],
    )?;
    println!("best 5 track-to-group assignments:");
    for a in murty(&costs.to_matrix(), 5) {
        let labels: Vec<String> = costs
            .decode(&a)
            .iter()
            .map(|c| match c {
                Choice::Group(j) => format!("g{j}"),
                Choice::Missed => "miss".into(),
            })
            .collect();
        println!("  cost {:6.3}  {}", a.cost, labels.join(" "));
    }

    let p_s: f64 = 0.95;
    let survival = vec![(-p_s.ln(), -(1.0 - p_s).ln()); 4];
    println!("best 6 survivor subsets of 4 tracks with p_S = {p_s}:");
    for s in k_shortest_paths(&survival, 6) {
        let bits: String = s.survives.iter().map(|b| if *b { '1' } else { '0' }).collect();
        println!("  {bits}  weight {:.5}", (-s.cost).exp());
    }
    Ok(())
}
