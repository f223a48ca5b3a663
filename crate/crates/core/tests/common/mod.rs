#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rfs_extent::ggiw::{GgiwParams, MotionModel};
use rfs_extent::glmb::{GlmbFilterConfig, UNLIMITED};
use rfs_extent::likelihood::{ClutterModel, SensorModel};
use rfs_extent::partitioning::PartitionConfig;

pub fn random_spd(rng: &mut ChaCha8Rng, d: usize, lo: f64, hi: f64) -> DMatrix<f64> {
    let a = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
    let q = a.qr().q();
    let diag = DVector::from_fn(d, |_, _| rng.random_range(lo..hi));
    &q * DMatrix::from_diagonal(&diag) * q.transpose()
}

/// Random 2-D Singer-order GGIW density centred near `centre`.
pub fn random_ggiw(rng: &mut ChaCha8Rng, centre: [f64; 2]) -> GgiwParams {
    let mut mean = DVector::zeros(6);
    mean[0] = centre[0] + rng.random_range(-3.0..3.0);
    mean[1] = centre[1] + rng.random_range(-3.0..3.0);
    for i in 2..6 {
        mean[i] = rng.random_range(-1.0..1.0);
    }
    GgiwParams::new(
        rng.random_range(2.0..30.0),
        rng.random_range(0.3..3.0),
        mean,
        random_spd(rng, 3, 0.2, 5.0),
        rng.random_range(7.0..25.0),
        random_spd(rng, 2, 5.0, 60.0),
    )
    .unwrap()
}

/// Exhaustive, untruncated, ungated GLMB settings.
pub fn exact_config(rng: &mut ChaCha8Rng) -> GlmbFilterConfig {
    let motion = MotionModel::singer(1.0, 1.0, 0.1, 1.25, 5.0).unwrap();
    let sensor = SensorModel {
        p_d: rng.random_range(0.3..0.99),
        literal_misdetect: rng.random_bool(0.5),
        clutter: ClutterModel::new(
            rng.random_range(0.5..10.0),
            vec![-40.0, -40.0],
            vec![40.0, 40.0],
        )
        .unwrap(),
        observation: motion.observation_row(),
    };
    let mut cfg = GlmbFilterConfig::new(motion, sensor);
    cfg.partition = PartitionConfig::exhaustive();
    cfg.n_predict = UNLIMITED;
    cfg.n_update = UNLIMITED;
    cfg.max_components = UNLIMITED;
    cfg.gate_quantile = None;
    cfg
}

pub fn params_close(a: &GgiwParams, b: &GgiwParams, tol: f64) -> bool {
    let rel = |x: f64, y: f64| (x - y).abs() <= tol * x.abs().max(y.abs()).max(1.0);
    rel(a.alpha, b.alpha)
        && rel(a.beta, b.beta)
        && rel(a.dof, b.dof)
        && a.mean.iter().zip(b.mean.iter()).all(|(x, y)| rel(*x, *y))
        && a.cov.iter().zip(b.cov.iter()).all(|(x, y)| rel(*x, *y))
        && a.scale.iter().zip(b.scale.iter()).all(|(x, y)| rel(*x, *y))
}

/// All injective row-to-column maps with finite cost, costs summed in row order.
pub fn brute_force_assignments(cost: &DMatrix<f64>) -> Vec<(Vec<usize>, f64)> {
    fn rec(
        cost: &DMatrix<f64>,
        row: usize,
        used: &mut Vec<bool>,
        cols: &mut Vec<usize>,
        out: &mut Vec<(Vec<usize>, f64)>,
    ) {
        if row == cost.nrows() {
            let c: f64 = cols.iter().enumerate().map(|(i, &j)| cost[(i, j)]).sum();
            if c.is_finite() {
                out.push((cols.clone(), c));
            }
            return;
        }
        for j in 0..cost.ncols() {
            if !used[j] && cost[(row, j)].is_finite() {
                used[j] = true;
                cols.push(j);
                rec(cost, row + 1, used, cols, out);
                cols.pop();
                used[j] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(cost, 0, &mut vec![false; cost.ncols()], &mut Vec::new(), &mut out);
    out.sort_by(|a, b| a.1.total_cmp(&b.1));
    out
}

/// Every survivor subset with its cost summed in row order, ascending.
pub fn brute_force_subsets(costs: &[(f64, f64)]) -> Vec<(Vec<bool>, f64)> {
    let n = costs.len();
    let mut out: Vec<(Vec<bool>, f64)> = (0u32..1 << n)
        .map(|mask| {
            let s: Vec<bool> = (0..n).map(|i| mask >> i & 1 == 1).collect();
            let c = s
                .iter()
                .zip(costs)
                .map(|(on, (a, b))| if *on { *a } else { *b })
                .sum();
            (s, c)
        })
        .collect();
    out.sort_by(|a, b| a.1.total_cmp(&b.1));
    out
}
