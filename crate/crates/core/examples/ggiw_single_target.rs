//! One GGIW density through prediction, a detection and a misdetection.

use nalgebra::{dvector, DMatrix, DVector};
use rfs_extent::ggiw::{log_evidence_misdetect, predict_ggiw, update_ggiw, GgiwParams, MotionModel};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = MotionModel::singer(1.0, 1.0, 0.1, 1.25, 5.0)?;
    let prior = GgiwParams::new(
        10.0,
        1.0,
        dvector![0.0, 0.0, 5.0, 0.0, 0.0, 0.0],
        DMatrix::from_diagonal(&dvector![100.0, 6.25, 1.0]),
        10.0,
        DMatrix::identity(2, 2) * 100.0,
    )?;
    let predicted = predict_ggiw(&prior, &model)?;
    println!(
        "predicted: rate {:.3} (alpha {:.3}), dof {:.5}",
        predicted.rate_mean(),
        predicted.alpha,
        predicted.dof
    );

    let group: Vec<DVector<f64>> = [[4.0, 1.0], [6.5, -2.0], [5.5, 3.0], [3.0, -0.5], [7.0, 0.5]]
        .iter()
        .map(|p| DVector::from_row_slice(p))
        .collect();
    let h = model.observation_row();
    let (post, log_ev) = update_ggiw(&predicted, &group, &h)?;
    let extent = post.extent_estimate().matrix;
    println!("after {} points: position {:?}, log evidence {log_ev:.4}", group.len(), post.position().as_slice());
    println!("extent estimate [[{:.2}, {:.2}], [{:.2}, {:.2}]]", extent[(0, 0)], extent[(0, 1)], extent[(1, 0)], extent[(1, 1)]);
    println!("rate estimate {:.3}", post.rate_mean());

    for literal in [true, false] {
        println!(
            "misdetection log factor (literal = {literal}): {:.4}",
            log_evidence_misdetect(&post, 0.9, literal)
        );
    }
    Ok(())
}
