//! OSPA on hand-made sets, with the positional and the extended base distance.

use nalgebra::{dmatrix, dvector};
use rfs_extent::metrics::{euclidean, extended_base_distance, ospa, ExtendedState, DEFAULT_EXTENDED_WEIGHTS};

fn main() {
    let truth = vec![dvector![0.0, 0.0], dvector![100.0, 0.0]];
    let est = vec![dvector![3.0, 4.0], dvector![100.0, 2.0], dvector![500.0, 500.0]];
    for (c, p) in [(100.0, 1.0), (100.0, 2.0), (20.0, 1.0)] {
        println!("c={c:>5} p={p}: {:.3}", ospa(&truth, &est, c, p, euclidean));
    }

    let a = ExtendedState { position: dvector![0.0, 0.0], extent: dmatrix![25.0, 0.0; 0.0, 4.0], rate: 10.0 };
    let b = ExtendedState { position: dvector![1.0, 1.0], extent: dmatrix![4.0, 0.0; 0.0, 25.0], rate: 12.0 };
    let base = |x: &ExtendedState, y: &ExtendedState| extended_base_distance(x, y, DEFAULT_EXTENDED_WEIGHTS);
    println!("extended base distance {:.3}", base(&a, &b));
    println!("extended OSPA {:.3}", ospa(&[a], &[b], 100.0, 1.0, base));
}
