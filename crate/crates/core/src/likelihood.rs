//! Extended multi-target measurement likelihood.
//!
//! A scan is explained by partitioning it into groups, assigning each group to
//! at most one track, and attributing the remaining measurements to Poisson
//! clutter. Everything here works in the log domain.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ggiw::{log_sum_exp, update_ggiw, GgiwMixture, GgiwParams};
use crate::rfs::Label;

/// Floor applied to `log κ(z)` inside filters so that regions of zero clutter
/// intensity do not produce `∞ - ∞`.
pub const LOG_INTENSITY_FLOOR: f64 = -700.0;

/// Poisson clutter, uniform over an axis-aligned box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClutterModel {
    /// Mean number of clutter measurements per scan.
    pub rate: f64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl ClutterModel {
    pub fn new(rate: f64, lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let c = Self { rate, lower, upper };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rate >= 0.0 && self.rate.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "clutter rate must be finite and non-negative, got {}",
                self.rate
            )));
        }
        if self.lower.len() != self.upper.len() || self.lower.is_empty() {
            return Err(Error::DimensionMismatch("clutter region bounds".into()));
        }
        if !(self.volume() > 0.0 && self.volume().is_finite()) {
            return Err(Error::InvalidConfig("clutter region has no volume".into()));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn volume(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| u - l)
            .product()
    }

    pub fn contains(&self, z: &DVector<f64>) -> bool {
        z.len() == self.dim()
            && z
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(x, (l, u))| *l <= *x && *x <= *u)
    }

    /// `log κ(z)`; `-inf` outside the region.
    pub fn log_intensity(&self, z: &DVector<f64>) -> f64 {
        if self.contains(z) {
            (self.rate / self.volume()).ln()
        } else {
            f64::NEG_INFINITY
        }
    }

    /// `log κ(z)` clamped below at [`LOG_INTENSITY_FLOOR`].
    pub fn log_intensity_floored(&self, z: &DVector<f64>) -> f64 {
        self.log_intensity(z).max(LOG_INTENSITY_FLOOR)
    }
}

/// Detection and clutter settings shared by the likelihood and the filters.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorModel {
    pub p_d: f64,
    /// Misdetection factor `1 - p_D` when set, otherwise the Poisson
    /// zero-count probability is folded in.
    pub literal_misdetect: bool,
    pub clutter: ClutterModel,
    /// Observation row `H`, of length equal to the motion-model order.
    pub observation: DVector<f64>,
}

impl SensorModel {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p_d) {
            return Err(Error::InvalidConfig(format!(
                "detection probability {} outside [0, 1]",
                self.p_d
            )));
        }
        self.clutter.validate()
    }
}

/// A grouping of measurement indices `0..n`.
///
/// Stored canonically: indices ascending within each group and groups ordered
/// by their smallest index.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Partition {
    groups: Vec<Vec<usize>>,
}

impl Partition {
    /// Builds a canonical partition from arbitrary groups.
    pub fn new(mut groups: Vec<Vec<usize>>) -> Self {
        for g in &mut groups {
            g.sort_unstable();
        }
        groups.retain(|g| !g.is_empty());
        groups.sort();
        Self { groups }
    }

    /// Partition from a per-measurement group id.
    pub fn from_assignment(ids: &[usize]) -> Self {
        let n_groups = ids.iter().map(|&i| i + 1).max().unwrap_or(0);
        let mut groups = vec![Vec::new(); n_groups];
        for (z, &g) in ids.iter().enumerate() {
            groups[g].push(z);
        }
        Self::new(groups)
    }

    pub fn empty() -> Self {
        Self { groups: Vec::new() }
    }

    pub fn one_group(n: usize) -> Self {
        Self::new(vec![(0..n).collect()])
    }

    pub fn singletons(n: usize) -> Self {
        Self::new((0..n).map(|i| vec![i]).collect())
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    /// Checks disjointness, coverage of `0..n` and non-empty groups.
    pub fn validate(&self, n: usize) -> Result<()> {
        let mut seen = vec![false; n];
        for g in &self.groups {
            if g.is_empty() {
                return Err(Error::Precondition("empty group in partition".into()));
            }
            for &i in g {
                if i >= n || seen[i] {
                    return Err(Error::Precondition(format!(
                        "measurement {i} out of range or repeated"
                    )));
                }
                seen[i] = true;
            }
        }
        if seen.iter().all(|&s| s) {
            Ok(())
        } else {
            Err(Error::Precondition("partition does not cover the scan".into()))
        }
    }

    /// Measurements of group `g`.
    pub fn gather<'a>(&self, g: usize, z: &'a [DVector<f64>]) -> Vec<&'a DVector<f64>> {
        self.groups[g].iter().map(|&i| &z[i]).collect()
    }

    pub fn group_points(&self, g: usize, z: &[DVector<f64>]) -> Vec<DVector<f64>> {
        self.groups[g].iter().map(|&i| z[i].clone()).collect()
    }
}

/// Every partition of `0..n`, enumerated by restricted-growth strings.
pub fn all_partitions(n: usize) -> Vec<Partition> {
    if n == 0 {
        return vec![Partition::empty()];
    }
    let mut out = Vec::new();
    let mut a = vec![0usize; n];
    let mut maxes = vec![0usize; n];
    loop {
        out.push(Partition::from_assignment(&a));
        // Advance the rightmost position that may still grow.
        let mut i = n - 1;
        loop {
            if i == 0 {
                return out;
            }
            if a[i] <= maxes[i - 1] {
                a[i] += 1;
                break;
            }
            i -= 1;
        }
        let m = maxes[i - 1].max(a[i]);
        maxes[i] = m;
        for j in i + 1..n {
            a[j] = 0;
            maxes[j] = m;
        }
    }
}

/// Per-label choice of a partition group, or `None` for a misdetection.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AssociationMap {
    entries: Vec<(Label, Option<usize>)>,
}

impl AssociationMap {
    pub fn new(mut entries: Vec<(Label, Option<usize>)>) -> Result<Self> {
        entries.sort_by_key(|e| e.0);
        if entries.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::Precondition("duplicate label in association".into()));
        }
        let mut used: Vec<usize> = entries.iter().filter_map(|e| e.1).collect();
        used.sort_unstable();
        if used.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Precondition(
                "a group may be assigned to at most one label".into(),
            ));
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[(Label, Option<usize>)] {
        &self.entries
    }

    pub fn get(&self, label: Label) -> Option<Option<usize>> {
        self.entries
            .binary_search_by_key(&label, |e| e.0)
            .ok()
            .map(|i| self.entries[i].1)
    }

    /// Groups not assigned to any label, i.e. clutter groups.
    pub fn clutter_groups(&self, partition: &Partition) -> Vec<usize> {
        (0..partition.len())
            .filter(|g| !self.entries.iter().any(|e| e.1 == Some(*g)))
            .collect()
    }
}

/// `log g_C(Z) = -λ_c + Σ log κ(z)`.
pub fn log_clutter_density(z: &[DVector<f64>], clutter: &ClutterModel) -> f64 {
    -clutter.rate + z.iter().map(|p| clutter.log_intensity(p)).sum::<f64>()
}

/// Detection term of one track and one group:
/// `log p_D + log η_γ + log η_{x,χ} - Σ_{z∈W} log κ(z)`.
pub fn log_group_pseudolikelihood(
    track: &GgiwParams,
    group: &[DVector<f64>],
    p_d: f64,
    clutter: &ClutterModel,
    h: &DVector<f64>,
) -> Result<(GgiwParams, f64)> {
    let (post, log_ev) = update_ggiw(track, group, h)?;
    let log_kappa: f64 = group.iter().map(|z| clutter.log_intensity(z)).sum();
    Ok((post, p_d.ln() + log_ev - log_kappa))
}

/// One `(partition, association)` term of the exhaustive likelihood.
#[derive(Debug, Clone)]
pub struct LikelihoodTerm {
    pub partition: Partition,
    pub association: AssociationMap,
    /// Log of the term including the clutter factor `g_C(Z)`.
    pub log_value: f64,
    /// Posterior density per input track, in input order.
    pub posteriors: Vec<GgiwMixture>,
}

const BRUTE_FORCE_MAX_MEASUREMENTS: usize = 6;
const BRUTE_FORCE_MAX_TRACKS: usize = 3;

/// Every term of the exhaustive likelihood, one per distinct explanation of
/// the scan.
///
/// An explanation gives each track a non-empty measurement set or a
/// misdetection and leaves the rest to clutter. It is enumerated as a
/// partition together with an association leaving at most one group
/// unassigned, which visits every explanation exactly once.
pub fn brute_force_terms(
    tracks: &[(Label, GgiwMixture)],
    z: &[DVector<f64>],
    sensor: &SensorModel,
) -> Result<Vec<LikelihoodTerm>> {
    if z.len() > BRUTE_FORCE_MAX_MEASUREMENTS || tracks.len() > BRUTE_FORCE_MAX_TRACKS {
        return Err(Error::TooLarge(format!(
            "{} measurements and {} tracks exceed the exhaustive limits ({}, {})",
            z.len(),
            tracks.len(),
            BRUTE_FORCE_MAX_MEASUREMENTS,
            BRUTE_FORCE_MAX_TRACKS
        )));
    }
    let h = &sensor.observation;
    let log_gc = log_clutter_density(z, &sensor.clutter);
    let misses: Vec<(GgiwMixture, f64)> = tracks
        .iter()
        .map(|(_, m)| m.misdetect(sensor.p_d, sensor.literal_misdetect))
        .collect();

    let mut terms = Vec::new();
    for partition in all_partitions(z.len()) {
        let n_groups = partition.len();
        if n_groups > tracks.len() + 1 {
            continue;
        }
        let mut detections = Vec::with_capacity(tracks.len());
        for (_, mix) in tracks {
            let mut row = Vec::with_capacity(n_groups);
            for g in 0..n_groups {
                let pts = partition.group_points(g, z);
                let (post, log_ev) = mix.update(&pts, h)?;
                let log_kappa: f64 = pts.iter().map(|p| sensor.clutter.log_intensity(p)).sum();
                row.push((post, sensor.p_d.ln() + log_ev - log_kappa));
            }
            detections.push(row);
        }

        // Odometer over choices in {miss, 0, .., n_groups-1} per track.
        let mut choice = vec![0usize; tracks.len()];
        loop {
            let assoc: Vec<Option<usize>> =
                choice.iter().map(|&c| c.checked_sub(1)).collect();
            let mut used = vec![false; n_groups];
            let mut injective = true;
            for g in assoc.iter().flatten() {
                injective &= !std::mem::replace(&mut used[*g], true);
            }
            let unassigned = used.iter().filter(|u| !**u).count();
            if injective && unassigned <= 1 {
                let mut log_value = log_gc;
                let mut posteriors = Vec::with_capacity(tracks.len());
                for (t, a) in assoc.iter().enumerate() {
                    match a {
                        Some(g) => {
                            let (post, lp) = &detections[t][*g];
                            log_value += lp;
                            posteriors.push(post.clone());
                        }
                        None => {
                            log_value += misses[t].1;
                            posteriors.push(misses[t].0.clone());
                        }
                    }
                }
                let association = AssociationMap::new(
                    tracks.iter().map(|t| t.0).zip(assoc.iter().copied()).collect(),
                )?;
                terms.push(LikelihoodTerm {
                    partition: partition.clone(),
                    association,
                    log_value,
                    posteriors,
                });
            }
            let mut i = 0;
            loop {
                if i == choice.len() {
                    break;
                }
                choice[i] += 1;
                if choice[i] <= n_groups {
                    break;
                }
                choice[i] = 0;
                i += 1;
            }
            if i == choice.len() {
                break;
            }
        }
    }
    Ok(terms)
}

/// Exhaustive `log g(Z | X)`.
pub fn brute_force_likelihood(
    tracks: &[(Label, GgiwParams)],
    z: &[DVector<f64>],
    sensor: &SensorModel,
) -> Result<f64> {
    let mixtures: Vec<(Label, GgiwMixture)> = tracks
        .iter()
        .map(|(l, p)| (*l, GgiwMixture::single(p.clone())))
        .collect();
    let terms = brute_force_terms(&mixtures, z, sensor)?;
    Ok(log_sum_exp(terms.iter().map(|t| t.log_value)))
}
