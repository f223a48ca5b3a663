//! Measurement partitioning, track gating and adaptive-birth candidates.

use log::warn;
use nalgebra::{DMatrix, DVector};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::likelihood::{all_partitions, Partition};
use crate::ggiw::GgiwMixture;
use crate::rfs::{Label, LmbDensity};

/// Largest scan for which exhaustive partitioning is allowed.
pub const EXHAUSTIVE_MAX_MEASUREMENTS: usize = 10;

/// Settings of [`feasible_partitions`].
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionConfig {
    /// Number of distance thresholds, taken at uniform quantiles.
    pub n_thresholds: usize,
    /// Pairwise distances above this value do not contribute thresholds.
    pub max_distance: f64,
    pub em_refine: bool,
    /// Smallest group that EM refinement tries to split.
    pub em_min_group: usize,
    pub max_partitions: usize,
    /// Enumerate every partition instead of distance clustering.
    pub exhaustive: bool,
}

impl Default for PartitionConfig {
    fn default() -> Self {
        Self {
            n_thresholds: 10,
            max_distance: 20.0,
            em_refine: false,
            em_min_group: 8,
            max_partitions: 50,
            exhaustive: false,
        }
    }
}

impl PartitionConfig {
    pub fn exhaustive() -> Self {
        Self {
            exhaustive: true,
            max_partitions: usize::MAX,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_thresholds == 0 || self.max_partitions == 0 {
            return Err(Error::InvalidConfig(
                "threshold count and partition cap must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

fn distance(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).norm()
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }

    fn labels(&mut self) -> Vec<usize> {
        (0..self.parent.len()).map(|i| self.find(i)).collect()
    }
}

fn groups_from_roots(roots: &[usize]) -> Vec<Vec<usize>> {
    let mut map = std::collections::BTreeMap::<usize, Vec<usize>>::new();
    for (i, &r) in roots.iter().enumerate() {
        map.entry(r).or_default().push(i);
    }
    map.into_values().collect()
}

/// Single-linkage clustering: points closer than or at `threshold` share a group.
pub fn single_linkage(z: &[DVector<f64>], threshold: f64) -> Partition {
    let n = z.len();
    let mut uf = UnionFind::new(n);
    for i in 0..n {
        for j in i + 1..n {
            if distance(&z[i], &z[j]) <= threshold {
                uf.union(i, j);
            }
        }
    }
    Partition::new(groups_from_roots(&uf.labels()))
}

/// Thresholds at uniform quantiles of the pairwise distances up to
/// `max_distance`, ascending and distinct.
pub fn distance_thresholds(z: &[DVector<f64>], cfg: &PartitionConfig) -> Vec<f64> {
    let mut d: Vec<f64> = Vec::new();
    for i in 0..z.len() {
        for j in i + 1..z.len() {
            let dist = distance(&z[i], &z[j]);
            if dist <= cfg.max_distance {
                d.push(dist);
            }
        }
    }
    if d.is_empty() {
        return Vec::new();
    }
    d.sort_by(f64::total_cmp);
    let n = cfg.n_thresholds;
    let mut out: Vec<f64> = (0..n)
        .map(|i| {
            let pos = if n == 1 {
                d.len() - 1
            } else {
                i * (d.len() - 1) / (n - 1)
            };
            d[pos]
        })
        .collect();
    out.dedup();
    out
}

/// Splits one group in two with a few iterations of 2-component Gaussian EM.
fn em_split(points: &[&DVector<f64>]) -> Option<(Vec<usize>, Vec<usize>)> {
    let n = points.len();
    let dim = points[0].len();
    let (mut a, mut b, mut best) = (0, 0, -1.0);
    for i in 0..n {
        for j in i + 1..n {
            let dist = distance(points[i], points[j]);
            if dist > best {
                (a, b, best) = (i, j, dist);
            }
        }
    }
    if best <= 0.0 {
        return None;
    }
    let mut means = [points[a].clone(), points[b].clone()];
    let spread = (best / 4.0).powi(2);
    let mut covs = [
        DMatrix::identity(dim, dim) * spread,
        DMatrix::identity(dim, dim) * spread,
    ];
    let mut weights = [0.5f64, 0.5];
    let mut resp = vec![[0.5, 0.5]; n];
    for _ in 0..10 {
        for (p, r) in points.iter().zip(resp.iter_mut()) {
            let mut ll = [0.0f64; 2];
            for k in 0..2 {
                let chol = covs[k].clone().cholesky()?;
                let e = *p - &means[k];
                let maha = e.dot(&chol.solve(&e));
                let log_det = 2.0 * chol.l().diagonal().iter().map(|x| x.ln()).sum::<f64>();
                ll[k] = weights[k].ln() - 0.5 * (maha + log_det);
            }
            let m = ll[0].max(ll[1]);
            let s = (ll[0] - m).exp() + (ll[1] - m).exp();
            *r = [(ll[0] - m).exp() / s, (ll[1] - m).exp() / s];
        }
        for k in 0..2 {
            let nk: f64 = resp.iter().map(|r| r[k]).sum();
            if nk < 1e-9 {
                return None;
            }
            weights[k] = nk / n as f64;
            let mut mean = DVector::zeros(dim);
            for (p, r) in points.iter().zip(&resp) {
                mean += *p * r[k];
            }
            mean /= nk;
            let mut cov = DMatrix::identity(dim, dim) * 1e-6;
            for (p, r) in points.iter().zip(&resp) {
                let e = *p - &mean;
                cov += &e * e.transpose() * (r[k] / nk);
            }
            means[k] = mean;
            covs[k] = cov;
        }
    }
    let (left, right): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| resp[i][0] >= resp[i][1]);
    (!left.is_empty() && !right.is_empty()).then_some((left, right))
}

/// Candidate partitions of a scan.
///
/// Distance clustering at each threshold yields one partition. The one-group
/// partition is always present and the all-singletons partition is added for
/// scans of at most four points. Output is free of duplicates and ordered from
/// fine to coarse.
pub fn feasible_partitions(z: &[DVector<f64>], cfg: &PartitionConfig) -> Vec<Partition> {
    let n = z.len();
    if n == 0 {
        return vec![Partition::empty()];
    }
    if cfg.exhaustive {
        if n > EXHAUSTIVE_MAX_MEASUREMENTS {
            warn!("exhaustive partitioning refused for {n} measurements; using distance clustering");
        } else {
            let mut all = all_partitions(n);
            all.truncate(cfg.max_partitions);
            return all;
        }
    }
    let mut out: Vec<Partition> = Vec::new();
    let push = |p: Partition, out: &mut Vec<Partition>| {
        if !out.contains(&p) {
            out.push(p);
        }
    };
    if n <= 4 {
        push(Partition::singletons(n), &mut out);
    }
    for delta in distance_thresholds(z, cfg) {
        push(single_linkage(z, delta), &mut out);
    }
    if cfg.em_refine {
        let base = out.clone();
        for p in &base {
            for (gi, g) in p.groups().iter().enumerate() {
                if g.len() < cfg.em_min_group {
                    continue;
                }
                let pts: Vec<&DVector<f64>> = g.iter().map(|&i| &z[i]).collect();
                if let Some((l, r)) = em_split(&pts) {
                    let mut groups: Vec<Vec<usize>> = p
                        .groups()
                        .iter()
                        .enumerate()
                        .filter(|(k, _)| *k != gi)
                        .map(|(_, g)| g.clone())
                        .collect();
                    groups.push(l.iter().map(|&i| g[i]).collect());
                    groups.push(r.iter().map(|&i| g[i]).collect());
                    push(Partition::new(groups), &mut out);
                }
            }
        }
    }
    push(Partition::one_group(n), &mut out);
    if out.len() > cfg.max_partitions {
        // Keep the coarsest partition when truncating.
        let coarse = out.pop().expect("non-empty");
        out.truncate(cfg.max_partitions - 1);
        out.push(coarse);
    }
    out
}

/// Tracks and measurements that must be updated jointly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrackGroup {
    pub labels: Vec<Label>,
    /// Indices into the scan.
    pub measurements: Vec<usize>,
}

/// Result of [`cluster_tracks`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrackClustering {
    pub groups: Vec<TrackGroup>,
    /// Measurements gated by no track.
    pub residual: Vec<usize>,
}

/// Squared Mahalanobis distance from each measurement to the nearest
/// component of `density`, or `None` outside the gate.
///
/// The gate covariance of a component is `E[χ]·(hᵀPh) + E[χ]` and the
/// threshold the `gate_quantile` point of a chi-squared law with `d` degrees
/// of freedom.
pub fn gate_distances(
    density: &GgiwMixture,
    z: &[DVector<f64>],
    gate_quantile: f64,
    h: &DVector<f64>,
) -> Result<Vec<Option<f64>>> {
    let mut row = vec![None; z.len()];
    for (_, p) in density.components() {
        let d = p.dim();
        let threshold = ChiSquared::new(d as f64)
            .map_err(|e| Error::InvalidConfig(e.to_string()))?
            .inverse_cdf(gate_quantile);
        let extent = p.extent_estimate().matrix;
        let spread = h.dot(&(&p.cov * h));
        let cov = &extent * spread + &extent;
        let chol = cov.cholesky().ok_or_else(|| {
            Error::Precondition("gating covariance not positive definite".into())
        })?;
        let centroid = p.predicted_centroid(h);
        for (j, zj) in z.iter().enumerate() {
            if zj.len() != d {
                return Err(Error::DimensionMismatch("measurement dimension".into()));
            }
            let e = zj - &centroid;
            let m2 = e.dot(&chol.solve(&e));
            if m2 <= threshold {
                row[j] = Some(row[j].map_or(m2, |old: f64| old.min(m2)));
            }
        }
    }
    Ok(row)
}

fn gate_matrix(
    tracks: &LmbDensity,
    z: &[DVector<f64>],
    gate_quantile: f64,
    h: &DVector<f64>,
) -> Result<Vec<Vec<Option<f64>>>> {
    tracks
        .tracks()
        .iter()
        .map(|t| gate_distances(&t.density, z, gate_quantile, h))
        .collect()
}

fn components(
    n_tracks: usize,
    n_meas: usize,
    edges: &[(usize, usize)],
) -> (Vec<Vec<usize>>, Vec<Vec<usize>>) {
    let mut uf = UnionFind::new(n_tracks + n_meas);
    for &(t, m) in edges {
        uf.union(t, n_tracks + m);
    }
    let roots = uf.labels();
    let mut by_root = std::collections::BTreeMap::<usize, (Vec<usize>, Vec<usize>)>::new();
    for t in 0..n_tracks {
        by_root.entry(roots[t]).or_default().0.push(t);
    }
    for &(_, m) in edges {
        let e = by_root.entry(roots[n_tracks + m]).or_default();
        if !e.1.contains(&m) {
            e.1.push(m);
        }
    }
    let mut ts = Vec::new();
    let mut ms = Vec::new();
    for (_, (t, mut m)) in by_root {
        m.sort_unstable();
        ts.push(t);
        ms.push(m);
    }
    (ts, ms)
}

/// Splits tracks and measurements into independent groups.
///
/// Groups are connected components of the bipartite gating graph; a track
/// without gated measurements forms a group of its own. Components with more
/// than `cap` tracks are split by dropping their weakest gating links, never a
/// measurement's best link.
pub fn cluster_tracks(
    tracks: &LmbDensity,
    z: &[DVector<f64>],
    gate_quantile: f64,
    h: &DVector<f64>,
    cap: usize,
) -> Result<TrackClustering> {
    if !(gate_quantile > 0.0 && gate_quantile < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "gate quantile {gate_quantile} outside (0, 1)"
        )));
    }
    let gates = gate_matrix(tracks, z, gate_quantile, h)?;
    let n_tracks = tracks.len();
    let mut edges: Vec<(usize, usize, f64)> = Vec::new();
    for (t, row) in gates.iter().enumerate() {
        for (m, g) in row.iter().enumerate() {
            if let Some(d2) = g {
                edges.push((t, m, *d2));
            }
        }
    }
    let gated: Vec<bool> = (0..z.len())
        .map(|m| edges.iter().any(|e| e.1 == m))
        .collect();
    let residual: Vec<usize> = (0..z.len()).filter(|&m| !gated[m]).collect();

    let plain = |edges: &[(usize, usize, f64)]| -> Vec<(usize, usize)> {
        edges.iter().map(|e| (e.0, e.1)).collect()
    };
    let (mut ts, mut ms) = components(n_tracks, z.len(), &plain(&edges));
    if ts.iter().any(|t| t.len() > cap) {
        warn!("track group exceeds the cap of {cap} tracks; splitting at weak gating links");
        let mut best = vec![(usize::MAX, f64::INFINITY); z.len()];
        for &(t, m, d2) in &edges {
            if d2 < best[m].1 {
                best[m] = (t, d2);
            }
        }
        let mut removable: Vec<usize> = (0..edges.len())
            .filter(|&i| best[edges[i].1].0 != edges[i].0)
            .collect();
        removable.sort_by(|&a, &b| edges[b].2.total_cmp(&edges[a].2));
        let mut alive = vec![true; edges.len()];
        for i in removable {
            alive[i] = false;
            let kept: Vec<(usize, usize, f64)> = edges
                .iter()
                .zip(&alive)
                .filter(|(_, a)| **a)
                .map(|(e, _)| *e)
                .collect();
            (ts, ms) = components(n_tracks, z.len(), &plain(&kept));
            if ts.iter().all(|t| t.len() <= cap) {
                break;
            }
        }
    }
    let labels = tracks.labels();
    let groups = ts
        .into_iter()
        .zip(ms)
        .filter(|(t, _)| !t.is_empty())
        .map(|(t, m)| TrackGroup {
            labels: t.into_iter().map(|i| labels[i]).collect(),
            measurements: m,
        })
        .collect();
    Ok(TrackClustering { groups, residual })
}

/// Settings of [`birth_candidates`].
#[derive(Debug, Clone, PartialEq)]
pub struct BirthConfig {
    /// Single-linkage threshold for residual clustering.
    pub distance: f64,
    /// A cluster must contain more than this many measurements.
    pub min_cluster: usize,
    /// Prior inverse-Wishart degrees of freedom of a newborn track.
    pub dof: f64,
    /// Expected number of measurements per detected target.
    pub expected_count: f64,
    pub max_existence: f64,
    /// Added to the diagonal of the sample covariance.
    pub extent_floor: f64,
}

impl BirthConfig {
    /// Defaults derived from the birth prior: the clustering distance is four
    /// times the expected extent radius.
    pub fn from_prior(dof: f64, scale: &DMatrix<f64>, alpha: f64, beta: f64) -> Self {
        let d = scale.nrows() as f64;
        let denom = (dof - 2.0 * d - 2.0).max(1e-9);
        let radius = (scale.trace() / d / denom).sqrt();
        Self {
            distance: 4.0 * radius,
            min_cluster: 4,
            dof,
            expected_count: alpha / beta,
            max_existence: 0.1,
            extent_floor: 0.1,
        }
    }
}

/// A residual cluster proposed as a new track.
#[derive(Debug, Clone, PartialEq)]
pub struct BirthCandidate {
    pub position: DVector<f64>,
    /// Inverse-Wishart scale whose mean matches the cluster spread.
    pub scale: DMatrix<f64>,
    pub size: usize,
    pub existence: f64,
    /// Scan indices of the cluster members.
    pub members: Vec<usize>,
}

/// Birth candidates from the residual measurements `residual` of scan `z`.
pub fn birth_candidates(
    z: &[DVector<f64>],
    residual: &[usize],
    cfg: &BirthConfig,
) -> Vec<BirthCandidate> {
    if residual.is_empty() {
        return Vec::new();
    }
    let pts: Vec<DVector<f64>> = residual.iter().map(|&i| z[i].clone()).collect();
    let d = pts[0].len();
    let df = d as f64;
    let mut out = Vec::new();
    for group in single_linkage(&pts, cfg.distance).groups() {
        let n = group.len();
        if n <= cfg.min_cluster {
            continue;
        }
        let mut mean = DVector::zeros(d);
        for &i in group {
            mean += &pts[i];
        }
        mean /= n as f64;
        let mut cov = DMatrix::zeros(d, d);
        for &i in group {
            let e = &pts[i] - &mean;
            cov += &e * e.transpose();
        }
        cov /= (n - 1) as f64;
        cov += DMatrix::identity(d, d) * cfg.extent_floor;
        out.push(BirthCandidate {
            position: mean,
            scale: cov * (cfg.dof - 2.0 * df - 2.0),
            size: n,
            existence: cfg.max_existence.min(n as f64 / cfg.expected_count),
            members: group.iter().map(|&i| residual[i]).collect(),
        });
    }
    out
}
