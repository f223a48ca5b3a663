//! OSPA distance, cardinality error and Monte Carlo aggregation.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::assignment::hungarian;
use crate::error::{Error, Result};
use crate::io::EstimateRecord;
use crate::simulation::StepRecord;

/// OSPA distance between two finite sets under the base distance `base`.
///
/// Base distances are cut off at `c`; unmatched points cost `c` each.
pub fn ospa<T>(x: &[T], y: &[T], c: f64, p: f64, base: impl Fn(&T, &T) -> f64) -> f64 {
    let (small, large, flip) = if x.len() <= y.len() {
        (x, y, false)
    } else {
        (y, x, true)
    };
    let (m, n) = (small.len(), large.len());
    if n == 0 {
        return 0.0;
    }
    if m == 0 {
        return c;
    }
    let cost = DMatrix::from_fn(m, n, |i, j| {
        let d = if flip {
            base(&large[j], &small[i])
        } else {
            base(&small[i], &large[j])
        };
        d.min(c).powf(p)
    });
    let matched = hungarian(&cost)
        .expect("finite cost matrix with no more rows than columns")
        .cost;
    let total = matched + c.powf(p) * (n - m) as f64;
    (total / n as f64).powf(1.0 / p).min(c)
}

/// Euclidean distance between position vectors.
pub fn euclidean(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).norm()
}

/// Position, extent and measurement rate of one target.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedState {
    pub position: DVector<f64>,
    pub extent: DMatrix<f64>,
    pub rate: f64,
}

fn sqrt_psd(m: &DMatrix<f64>) -> DMatrix<f64> {
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let roots = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.transpose()
}

/// Gaussian-Wasserstein distance between two extents:
/// `sqrt(tr(A + B - 2 (A^½ B A^½)^½))`.
pub fn gaussian_wasserstein(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let ra = sqrt_psd(a);
    let cross = sqrt_psd(&(&ra * b * &ra));
    (a.trace() + b.trace() - 2.0 * cross.trace()).max(0.0).sqrt()
}

/// Default weights of centroid, extent and rate terms.
pub const DEFAULT_EXTENDED_WEIGHTS: [f64; 3] = [1.0, 1.0, 0.1];

/// Weighted sum of centroid distance, Gaussian-Wasserstein extent distance
/// and absolute rate difference.
pub fn extended_base_distance(a: &ExtendedState, b: &ExtendedState, weights: [f64; 3]) -> f64 {
    weights[0] * euclidean(&a.position, &b.position)
        + weights[1] * gaussian_wasserstein(&a.extent, &b.extent)
        + weights[2] * (a.rate - b.rate).abs()
}

/// Per-step mean and population standard deviation over runs.
pub fn aggregate(runs: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<f64>)> {
    let Some(first) = runs.first() else {
        return Ok((Vec::new(), Vec::new()));
    };
    let len = first.len();
    if let Some((i, r)) = runs.iter().enumerate().find(|(_, r)| r.len() != len) {
        return Err(Error::LengthMismatch(format!(
            "run {i} has {} steps, expected {len}",
            r.len()
        )));
    }
    let n = runs.len() as f64;
    let mut mean = vec![0.0; len];
    let mut std = vec![0.0; len];
    for k in 0..len {
        let m = runs.iter().map(|r| r[k]).sum::<f64>() / n;
        let v = runs.iter().map(|r| (r[k] - m).powi(2)).sum::<f64>() / n;
        mean[k] = m;
        std[k] = v.sqrt();
    }
    Ok((mean, std))
}

/// OSPA settings used by [`evaluate_run`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OspaConfig {
    pub cutoff: f64,
    pub order: f64,
    /// Also compute OSPA under [`extended_base_distance`].
    pub extended: bool,
    pub weights: [f64; 3],
}

impl Default for OspaConfig {
    fn default() -> Self {
        Self {
            cutoff: 100.0,
            order: 1.0,
            extended: false,
            weights: DEFAULT_EXTENDED_WEIGHTS,
        }
    }
}

/// Per-step metric series of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    pub k: Vec<u32>,
    /// `|n̂ - n|` per step.
    pub card_err: Vec<f64>,
    pub ospa: Vec<f64>,
    pub ospa_ext: Option<Vec<f64>>,
}

/// Compares estimates with truth step by step.
pub fn evaluate_run(
    truth: &[StepRecord],
    est: &[EstimateRecord],
    cfg: &OspaConfig,
) -> Result<RunMetrics> {
    if truth.len() != est.len() {
        return Err(Error::LengthMismatch(format!(
            "truth has {} steps, estimates {}",
            truth.len(),
            est.len()
        )));
    }
    let mut out = RunMetrics {
        k: Vec::with_capacity(truth.len()),
        card_err: Vec::with_capacity(truth.len()),
        ospa: Vec::with_capacity(truth.len()),
        ospa_ext: cfg.extended.then(Vec::new),
    };
    for (t, e) in truth.iter().zip(est) {
        if t.k != e.k {
            return Err(Error::LengthMismatch(format!(
                "truth step {} paired with estimate step {}",
                t.k, e.k
            )));
        }
        let tp: Vec<DVector<f64>> = t.truth.iter().map(|r| r.position()).collect();
        let ep: Vec<DVector<f64>> = e.est.iter().map(|r| r.position()).collect();
        out.k.push(t.k);
        out.card_err.push((tp.len() as f64 - ep.len() as f64).abs());
        out.ospa.push(ospa(&ep, &tp, cfg.cutoff, cfg.order, euclidean));
        if let Some(ext) = &mut out.ospa_ext {
            let ts: Vec<ExtendedState> = t
                .truth
                .iter()
                .map(|r| ExtendedState {
                    position: r.position(),
                    extent: r.extent(),
                    rate: r.gamma,
                })
                .collect();
            let es: Vec<ExtendedState> = e
                .est
                .iter()
                .map(|r| ExtendedState {
                    position: r.position(),
                    extent: crate::simulation::matrix_from_rows(&r.chi),
                    rate: r.gamma,
                })
                .collect();
            ext.push(ospa(&es, &ts, cfg.cutoff, cfg.order, |a, b| {
                extended_base_distance(a, b, cfg.weights)
            }));
        }
    }
    Ok(out)
}

/// Aggregated metrics table.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsTable {
    pub k: Vec<u32>,
    pub card_err: (Vec<f64>, Vec<f64>),
    pub ospa: (Vec<f64>, Vec<f64>),
    pub ospa_ext: Option<(Vec<f64>, Vec<f64>)>,
}

impl MetricsTable {
    pub fn from_runs(runs: &[RunMetrics]) -> Result<Self> {
        let first = runs
            .first()
            .ok_or_else(|| Error::LengthMismatch("no runs to aggregate".into()))?;
        let col = |f: &dyn Fn(&RunMetrics) -> Vec<f64>| -> Vec<Vec<f64>> { runs.iter().map(f).collect() };
        let ospa_ext = if runs.iter().all(|r| r.ospa_ext.is_some()) {
            Some(aggregate(&col(&|r| r.ospa_ext.clone().unwrap_or_default()))?)
        } else {
            None
        };
        Ok(Self {
            k: first.k.clone(),
            card_err: aggregate(&col(&|r| r.card_err.clone()))?,
            ospa: aggregate(&col(&|r| r.ospa.clone()))?,
            ospa_ext,
        })
    }

    /// CSV with header `k,card_err_mean,card_err_std,ospa_mean,ospa_std` and,
    /// for extended tables, `ospa_ext_mean,ospa_ext_std`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("k,card_err_mean,card_err_std,ospa_mean,ospa_std");
        if self.ospa_ext.is_some() {
            s.push_str(",ospa_ext_mean,ospa_ext_std");
        }
        s.push('\n');
        for (i, k) in self.k.iter().enumerate() {
            write!(
                s,
                "{k},{},{},{},{}",
                self.card_err.0[i], self.card_err.1[i], self.ospa.0[i], self.ospa.1[i]
            )
            .unwrap();
            if let Some((m, d)) = &self.ospa_ext {
                write!(s, ",{},{}", m[i], d[i]).unwrap();
            }
            s.push('\n');
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::dvector;

    fn p(x: f64) -> DVector<f64> {
        dvector![x]
    }

    #[test]
    fn ospa_examples() {
        let x = vec![dvector![1.0, 2.0], dvector![-3.0, 0.5]];
        assert_eq!(ospa(&x, &x, 100.0, 1.0, euclidean), 0.0);
        assert_eq!(ospa(&[], &[p(5.0)], 100.0, 1.0, euclidean), 100.0);
        assert_eq!(ospa::<DVector<f64>>(&[], &[], 100.0, 1.0, euclidean), 0.0);
        assert_eq!(ospa(&[p(0.0)], &[p(10.0)], 100.0, 1.0, euclidean), 10.0);
        // One matched pair at distance 2, one unmatched point.
        assert_relative_eq!(
            ospa(&[p(0.0)], &[p(2.0), p(50.0)], 10.0, 1.0, euclidean),
            (2.0 + 10.0) / 2.0
        );
        assert_relative_eq!(
            ospa(&[p(0.0)], &[p(3.0)], 10.0, 2.0, euclidean),
            3.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn gaussian_wasserstein_commuting_case() {
        let a = DMatrix::identity(2, 2) * 4.0;
        let b = DMatrix::identity(2, 2);
        assert_relative_eq!(gaussian_wasserstein(&a, &b), 2f64.sqrt(), epsilon = 1e-12);
        assert_relative_eq!(gaussian_wasserstein(&a, &a), 0.0, epsilon = 1e-7);
    }

    #[test]
    fn extended_distance_terms() {
        let s = ExtendedState {
            position: dvector![1.0, 2.0],
            extent: DMatrix::identity(2, 2) * 3.0,
            rate: 10.0,
        };
        assert_relative_eq!(extended_base_distance(&s, &s, DEFAULT_EXTENDED_WEIGHTS), 0.0, epsilon = 1e-7);
        let mut t = s.clone();
        t.rate = 20.0;
        assert_relative_eq!(extended_base_distance(&s, &t, DEFAULT_EXTENDED_WEIGHTS), 1.0, epsilon = 1e-7);
        t.position = dvector![4.0, 6.0];
        assert_relative_eq!(
            extended_base_distance(&s, &t, DEFAULT_EXTENDED_WEIGHTS),
            extended_base_distance(&t, &s, DEFAULT_EXTENDED_WEIGHTS),
            epsilon = 1e-12
        );
    }

    #[test]
    fn aggregate_examples() {
        let (m, s) = aggregate(&[vec![1.0, 2.0, 3.0]]).unwrap();
        assert_eq!(m, vec![1.0, 2.0, 3.0]);
        assert_eq!(s, vec![0.0; 3]);
        let (m, s) = aggregate(&[vec![0.0], vec![2.0]]).unwrap();
        assert_eq!((m[0], s[0]), (1.0, 1.0));
        assert!(matches!(
            aggregate(&[vec![0.0], vec![1.0, 2.0]]),
            Err(Error::LengthMismatch(_))
        ));
    }

    #[test]
    fn csv_layout() {
        let run = RunMetrics {
            k: vec![1, 2],
            card_err: vec![0.0, 1.0],
            ospa: vec![0.5, 100.0],
            ospa_ext: Some(vec![1.0, 2.0]),
        };
        let t = MetricsTable::from_runs(&[run.clone()]).unwrap();
        let csv = t.to_csv();
        assert!(csv.starts_with("k,card_err_mean,card_err_std,ospa_mean,ospa_std,ospa_ext_mean,ospa_ext_std\n"));
        assert_eq!(csv.lines().nth(2), Some("2,1,0,100,0,2,0"));
        assert!(!csv.contains('\r'));
        let plain = MetricsTable::from_runs(&[RunMetrics { ospa_ext: None, ..run }]).unwrap();
        assert!(plain.to_csv().starts_with("k,card_err_mean,card_err_std,ospa_mean,ospa_std\n"));
    }
}
