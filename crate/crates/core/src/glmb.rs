//! GGIW-GLMB filter: ranked survival prediction and partition/assignment update.

use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use log::warn;
use nalgebra::{DMatrix, DVector};

use crate::assignment::{k_shortest_paths, murty, AssignCostMatrix, Choice};
use crate::error::{Error, Result};
use crate::ggiw::{log_sum_exp, GgiwMixture, MotionModel};
use crate::likelihood::{Partition, SensorModel};
use crate::assignment::hungarian;
use crate::partitioning::{feasible_partitions, gate_distances, PartitionConfig};
use crate::rfs::{
    extract_estimates, lmb_to_glmb, normalize_glmb, prune_glmb, Estimate, GlmbComponent,
    GlmbDensity, Label, LmbDensity, LmbTrack, Track, DEFAULT_SUBSET_CAP,
};

/// Budget value meaning "no truncation".
pub const UNLIMITED: usize = usize::MAX;

/// Birth tracks appended at every step, labelled `(k, i)`.
#[derive(Debug, Clone, Default)]
pub struct StaticBirth {
    /// `(existence, density)` per birth track.
    pub tracks: Vec<(f64, GgiwMixture)>,
}

impl StaticBirth {
    pub fn at_step(&self, k: u32) -> LmbDensity {
        LmbDensity::new(
            self.tracks
                .iter()
                .enumerate()
                .map(|(i, (r, d))| LmbTrack {
                    label: Label::new(k, i as u32),
                    existence: *r,
                    density: Arc::new(d.clone()),
                })
                .collect(),
        )
        .expect("birth labels are distinct by construction")
    }
}

/// Settings of the GLMB recursion.
#[derive(Debug, Clone)]
pub struct GlmbFilterConfig {
    pub motion: MotionModel,
    pub sensor: SensorModel,
    pub p_s: f64,
    /// Survivor hypotheses generated per unit of prior weight.
    pub n_predict: usize,
    /// Posterior hypotheses requested from ranked assignment per update.
    pub n_update: usize,
    pub max_components: usize,
    pub partition: PartitionConfig,
    /// Chi-squared gate quantile for track-to-group pairings; `None` pairs
    /// every track with every group.
    pub gate_quantile: Option<f64>,
    pub birth: StaticBirth,
    /// Largest birth set expanded into label subsets.
    pub subset_cap: usize,
}

impl GlmbFilterConfig {
    pub fn new(motion: MotionModel, sensor: SensorModel) -> Self {
        Self {
            motion,
            sensor,
            p_s: 0.99,
            n_predict: 1000,
            n_update: 1000,
            max_components: 1000,
            partition: PartitionConfig::default(),
            gate_quantile: Some(0.99),
            birth: StaticBirth::default(),
            subset_cap: DEFAULT_SUBSET_CAP,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.motion.validate()?;
        self.sensor.validate()?;
        self.partition.validate()?;
        if !(0.0..=1.0).contains(&self.p_s) {
            return Err(Error::InvalidConfig(format!(
                "survival probability {} outside [0, 1]",
                self.p_s
            )));
        }
        if let Some(q) = self.gate_quantile {
            if !(q > 0.0 && q < 1.0) {
                return Err(Error::InvalidConfig(format!("gate quantile {q} outside (0, 1)")));
            }
        }
        if self.n_predict == 0 || self.n_update == 0 || self.max_components == 0 {
            return Err(Error::InvalidConfig("component budgets must be at least 1".into()));
        }
        if self.sensor.observation.len() != self.motion.order() {
            return Err(Error::DimensionMismatch(
                "observation row and motion model order differ".into(),
            ));
        }
        Ok(())
    }
}

fn ptr_key(d: &Arc<GgiwMixture>) -> usize {
    Arc::as_ptr(d) as usize
}

/// Survivor hypotheses for a component of weight `w`: `⌈N·w⌉`, at least one.
fn predict_budget(weight: f64, budget: usize) -> usize {
    if budget == UNLIMITED {
        UNLIMITED
    } else {
        ((budget as f64 * weight).ceil() as usize).max(1)
    }
}

/// GLMB prediction: ranked survivor subsets per hypothesis, multiplied by the
/// birth density.
pub fn predict_glmb(
    posterior: &GlmbDensity,
    birth: &LmbDensity,
    cfg: &GlmbFilterConfig,
) -> Result<GlmbDensity> {
    let mut predicted: HashMap<usize, Arc<GgiwMixture>> = HashMap::new();
    let mut survivors: Vec<GlmbComponent> = Vec::new();
    let mut index: HashMap<Vec<(Label, usize)>, usize> = HashMap::new();
    let log_s = cfg.p_s.ln();
    let log_q = (1.0 - cfg.p_s).ln();

    for comp in posterior.components() {
        let mut moved = Vec::with_capacity(comp.tracks.len());
        for t in &comp.tracks {
            let key = ptr_key(&t.density);
            let density = match predicted.get(&key) {
                Some(d) => Arc::clone(d),
                None => {
                    let d = Arc::new(t.density.predict(&cfg.motion)?);
                    predicted.insert(key, Arc::clone(&d));
                    d
                }
            };
            moved.push(Track {
                label: t.label,
                density,
            });
        }
        let costs = vec![(-log_s, -log_q); moved.len()];
        let k = predict_budget(comp.weight(), cfg.n_predict);
        for path in k_shortest_paths(&costs, k) {
            let tracks: Vec<Track> = moved
                .iter()
                .zip(&path.survives)
                .filter(|(_, s)| **s)
                .map(|(t, _)| t.clone())
                .collect();
            let candidate = GlmbComponent {
                log_weight: comp.log_weight - path.cost,
                tracks,
            };
            let key: Vec<(Label, usize)> = candidate
                .tracks
                .iter()
                .map(|t| (t.label, ptr_key(&t.density)))
                .collect();
            match index.get(&key) {
                Some(&i) => {
                    let w = &mut survivors[i].log_weight;
                    *w = log_sum_exp([*w, candidate.log_weight].into_iter());
                }
                None => {
                    index.insert(key, survivors.len());
                    survivors.push(candidate);
                }
            }
        }
    }
    if survivors.is_empty() {
        survivors.push(GlmbComponent {
            log_weight: 0.0,
            tracks: Vec::new(),
        });
    }

    let births = lmb_to_glmb(birth, &birth.labels(), cfg.subset_cap)?;
    let birth_labels: HashSet<Label> = birth.labels().into_iter().collect();
    let mut out = Vec::with_capacity(survivors.len() * births.len());
    for s in &survivors {
        if let Some(t) = s.tracks.iter().find(|t| birth_labels.contains(&t.label)) {
            return Err(Error::LabelCollision(t.label.to_string()));
        }
        for b in births.components() {
            let mut tracks = s.tracks.clone();
            tracks.extend(b.tracks.iter().cloned());
            tracks.sort_by_key(|t| t.label);
            out.push(GlmbComponent {
                log_weight: s.log_weight + b.log_weight,
                tracks,
            });
        }
    }
    Ok(prune_glmb(&normalize_glmb(out)?, cfg.max_components))
}

/// Splits a ranked-assignment budget across `(hypothesis, partition)` pairs.
///
/// Each pair receives `⌊N·s⌋` solutions, `s` being the softmax share of its
/// score, and the `N` best-scoring pairs receive at least one. The result is
/// non-decreasing in `N` for every pair.
pub fn allocate(scores: &[f64], budget: usize) -> Vec<usize> {
    if budget == UNLIMITED {
        return scores
            .iter()
            .map(|s| if *s == f64::NEG_INFINITY { 0 } else { UNLIMITED })
            .collect();
    }
    let total = log_sum_exp(scores.iter().copied());
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut out = vec![0; scores.len()];
    for (rank, &i) in order.iter().enumerate() {
        if scores[i] == f64::NEG_INFINITY || !total.is_finite() {
            continue;
        }
        let share = (scores[i] - total).exp();
        let k = (budget as f64 * share).floor() as usize;
        out[i] = if rank < budget { k.max(1) } else { k };
    }
    out
}

/// Measurements inside the clutter region; others are dropped with a warning.
pub fn admissible_measurements(z: &[DVector<f64>], sensor: &SensorModel) -> Vec<DVector<f64>> {
    let kept: Vec<DVector<f64>> = z
        .iter()
        .filter(|p| sensor.clutter.contains(p))
        .cloned()
        .collect();
    if kept.len() < z.len() {
        warn!(
            "dropped {} measurement(s) outside the surveillance region",
            z.len() - kept.len()
        );
    }
    kept
}

type Detection = (Arc<GgiwMixture>, f64);

/// Distinct groups over all partitions, and each partition's groups as
/// indices into that list.
fn intern_groups(partitions: &[Partition]) -> (Vec<Vec<usize>>, Vec<Vec<usize>>) {
    let mut index: HashMap<&[usize], usize> = HashMap::new();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let ids = partitions
        .iter()
        .map(|p| {
            p.groups()
                .iter()
                .map(|g| {
                    *index.entry(g.as_slice()).or_insert_with(|| {
                        groups.push(g.clone());
                        groups.len() - 1
                    })
                })
                .collect()
        })
        .collect();
    (groups, ids)
}

/// Memoised per-track gates and evidences for one scan, keyed by density
/// identity and interned group.
struct EvidenceCache<'a> {
    z: &'a [DVector<f64>],
    sensor: &'a SensorModel,
    quantile: Option<f64>,
    groups: &'a [Vec<usize>],
    gates: HashMap<usize, Arc<Vec<bool>>>,
    detect: HashMap<(usize, usize), Detection>,
    miss: HashMap<usize, Detection>,
}

impl<'a> EvidenceCache<'a> {
    fn new(
        z: &'a [DVector<f64>],
        sensor: &'a SensorModel,
        quantile: Option<f64>,
        groups: &'a [Vec<usize>],
    ) -> Self {
        Self {
            z,
            sensor,
            quantile,
            groups,
            gates: HashMap::new(),
            detect: HashMap::new(),
            miss: HashMap::new(),
        }
    }

    /// Per group: whether any of its points lies inside the gate of `density`.
    fn gates(&mut self, density: &Arc<GgiwMixture>) -> Result<Arc<Vec<bool>>> {
        let key = ptr_key(density);
        if let Some(g) = self.gates.get(&key) {
            return Ok(Arc::clone(g));
        }
        let open = match self.quantile {
            None => vec![true; self.groups.len()],
            Some(q) => {
                let points = gate_distances(density, self.z, q, &self.sensor.observation)?;
                self.groups
                    .iter()
                    .map(|g| g.iter().any(|&i| points[i].is_some()))
                    .collect()
            }
        };
        let open = Arc::new(open);
        self.gates.insert(key, Arc::clone(&open));
        Ok(open)
    }

    fn detection(&mut self, density: &Arc<GgiwMixture>, group: usize) -> Result<Detection> {
        let key = (ptr_key(density), group);
        if let Some(hit) = self.detect.get(&key) {
            return Ok(hit.clone());
        }
        let pts: Vec<DVector<f64>> = self.groups[group].iter().map(|&i| self.z[i].clone()).collect();
        let entry = if self.sensor.p_d > 0.0 {
            let (post, log_ev) = density.update(&pts, &self.sensor.observation)?;
            let log_kappa: f64 = pts
                .iter()
                .map(|p| self.sensor.clutter.log_intensity_floored(p))
                .sum();
            (Arc::new(post), self.sensor.p_d.ln() + log_ev - log_kappa)
        } else {
            (Arc::clone(density), f64::NEG_INFINITY)
        };
        self.detect.insert(key, entry.clone());
        Ok(entry)
    }

    fn misdetection(&mut self, density: &Arc<GgiwMixture>) -> Detection {
        let key = ptr_key(density);
        if let Some(hit) = self.miss.get(&key) {
            return hit.clone();
        }
        let (post, log_q) = density.misdetect(self.sensor.p_d, self.sensor.literal_misdetect);
        let post = if self.sensor.literal_misdetect {
            Arc::clone(density)
        } else {
            Arc::new(post)
        };
        self.miss.insert(key, (Arc::clone(&post), log_q));
        (post, log_q)
    }
}

/// Unnormalised posterior hypotheses.
///
/// Log-weights equal the prior log-weight plus the log pseudo-likelihood of
/// the explanation, omitting the common clutter factor `g_C(Z)`. Each distinct
/// explanation of the scan appears once per prior hypothesis even if several
/// partitions produce it.
pub fn update_glmb_hypotheses(
    predicted: &GlmbDensity,
    z: &[DVector<f64>],
    cfg: &GlmbFilterConfig,
) -> Result<Vec<GlmbComponent>> {
    let partitions = feasible_partitions(z, &cfg.partition);
    let (groups, part_ids) = intern_groups(&partitions);
    let mut cache = EvidenceCache::new(z, &cfg.sensor, cfg.gate_quantile, &groups);

    struct Pair {
        component: usize,
        /// Interned ids of the groups inside some track's gate.
        columns: Vec<usize>,
        costs: AssignCostMatrix,
        detections: Vec<Vec<Option<Detection>>>,
        misses: Vec<Detection>,
    }
    let mut pairs = Vec::new();
    let mut scores = Vec::new();
    let mut distinct: HashSet<(usize, Vec<usize>)> = HashSet::new();
    for (ci, comp) in predicted.components().iter().enumerate() {
        let n = comp.tracks.len();
        let mut misses = Vec::with_capacity(n);
        let mut gates = Vec::with_capacity(n);
        for t in &comp.tracks {
            misses.push(cache.misdetection(&t.density));
            gates.push(cache.gates(&t.density)?);
        }
        for ids in &part_ids {
            // Groups outside every gate are clutter in all explanations, so
            // partitions agreeing on the gated groups yield the same set.
            let columns: Vec<usize> = ids
                .iter()
                .copied()
                .filter(|&g| gates.iter().any(|open| open[g]))
                .collect();
            if !distinct.insert((ci, columns.clone())) {
                continue;
            }
            let mut detections = Vec::with_capacity(n);
            let mut d = DMatrix::from_element(n, columns.len(), f64::INFINITY);
            for (i, t) in comp.tracks.iter().enumerate() {
                let mut row = Vec::with_capacity(columns.len());
                for (c, &g) in columns.iter().enumerate() {
                    if gates[i][g] {
                        let det = cache.detection(&t.density, g)?;
                        d[(i, c)] = -det.1;
                        row.push(Some(det));
                    } else {
                        row.push(None);
                    }
                }
                detections.push(row);
            }
            let costs = AssignCostMatrix::new(d, misses.iter().map(|m| -m.1).collect())?;
            let best = if columns.is_empty() {
                costs.misdetect.iter().sum()
            } else {
                hungarian(&costs.to_matrix()).map_or(f64::INFINITY, |a| a.cost)
            };
            scores.push(comp.log_weight - best);
            pairs.push(Pair {
                component: ci,
                columns,
                costs,
                detections,
                misses: misses.clone(),
            });
        }
    }

    let budgets = allocate(&scores, cfg.n_update);
    let mut seen: HashSet<(usize, Vec<Option<usize>>)> = HashSet::new();
    let mut out = Vec::new();
    for (pair, &k) in pairs.iter().zip(&budgets) {
        if k == 0 {
            continue;
        }
        let comp = &predicted.components()[pair.component];
        for sol in murty(&pair.costs.to_matrix(), k) {
            let choices = pair.costs.decode(&sol);
            let explanation: Vec<Option<usize>> = choices
                .iter()
                .map(|c| match c {
                    Choice::Group(j) => Some(pair.columns[*j]),
                    Choice::Missed => None,
                })
                .collect();
            if !seen.insert((pair.component, explanation)) {
                continue;
            }
            let tracks = comp
                .tracks
                .iter()
                .zip(&choices)
                .enumerate()
                .map(|(i, (t, c))| Track {
                    label: t.label,
                    density: match c {
                        Choice::Group(j) => Arc::clone(
                            &pair.detections[i][*j]
                                .as_ref()
                                .expect("assignment respects the gate")
                                .0,
                        ),
                        Choice::Missed => Arc::clone(&pair.misses[i].0),
                    },
                })
                .collect();
            out.push(GlmbComponent {
                log_weight: comp.log_weight - sol.cost,
                tracks,
            });
        }
    }
    Ok(out)
}

/// GLMB measurement update, normalised and pruned.
pub fn update_glmb(
    predicted: &GlmbDensity,
    z: &[DVector<f64>],
    cfg: &GlmbFilterConfig,
) -> Result<GlmbDensity> {
    let z = admissible_measurements(z, &cfg.sensor);
    let raw = update_glmb_hypotheses(predicted, &z, cfg)?;
    Ok(prune_glmb(&normalize_glmb(raw)?, cfg.max_components))
}

/// One predict/update cycle followed by estimate extraction.
pub fn step_glmb(
    state: &GlmbDensity,
    z: &[DVector<f64>],
    birth: &LmbDensity,
    cfg: &GlmbFilterConfig,
) -> Result<(GlmbDensity, Vec<Estimate>)> {
    let predicted = predict_glmb(state, birth, cfg)?;
    let posterior = update_glmb(&predicted, z, cfg)?;
    let estimates = extract_estimates(&posterior);
    Ok((posterior, estimates))
}

/// A running GLMB filter.
#[derive(Debug, Clone)]
pub struct GlmbFilter {
    config: GlmbFilterConfig,
    density: GlmbDensity,
    step: u32,
}

impl GlmbFilter {
    pub fn new(config: GlmbFilterConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            density: GlmbDensity::empty(),
            step: 0,
        })
    }

    pub fn config(&self) -> &GlmbFilterConfig {
        &self.config
    }

    pub fn density(&self) -> &GlmbDensity {
        &self.density
    }

    /// Index of the last processed scan; the first scan is step 1.
    pub fn step_index(&self) -> u32 {
        self.step
    }

    pub fn step(&mut self, z: &[DVector<f64>]) -> Result<Vec<Estimate>> {
        let k = self.step + 1;
        let birth = self.config.birth.at_step(k);
        let (density, estimates) = step_glmb(&self.density, z, &birth, &self.config)?;
        self.density = density;
        self.step = k;
        Ok(estimates)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ggiw::GgiwParams;
    use crate::likelihood::{brute_force_likelihood, log_clutter_density, ClutterModel};
    use approx::assert_relative_eq;
    use nalgebra::dvector;

    fn params(x: f64, y: f64) -> GgiwParams {
        GgiwParams::new(
            10.0,
            1.0,
            dvector![x, y, 0.0, 0.0, 0.0, 0.0],
            DMatrix::from_diagonal(&dvector![4.0, 1.0, 1.0]),
            10.0,
            DMatrix::identity(2, 2) * 4.0,
        )
        .unwrap()
    }

    fn config(p_d: f64) -> GlmbFilterConfig {
        let motion = MotionModel::singer(1.0, 1.0, 0.1, 1.25, 5.0).unwrap();
        let sensor = SensorModel {
            p_d,
            literal_misdetect: true,
            clutter: ClutterModel::new(5.0, vec![-50.0, -50.0], vec![50.0, 50.0]).unwrap(),
            observation: dvector![1.0, 0.0, 0.0],
        };
        let mut cfg = GlmbFilterConfig::new(motion, sensor);
        cfg.gate_quantile = None;
        cfg
    }

    fn single(label: Label, p: GgiwParams) -> GlmbDensity {
        normalize_glmb(vec![GlmbComponent {
            log_weight: 0.0,
            tracks: vec![Track {
                label,
                density: Arc::new(GgiwMixture::single(p)),
            }],
        }])
        .unwrap()
    }

    fn weights_by_cardinality(g: &GlmbDensity) -> Vec<(usize, f64)> {
        let mut v: Vec<(usize, f64)> = g
            .components()
            .iter()
            .map(|c| (c.cardinality(), c.weight()))
            .collect();
        v.sort_by(|a, b| b.1.total_cmp(&a.1));
        v
    }

    #[test]
    fn predict_empty_with_birth() {
        let cfg = config(0.9);
        let birth = StaticBirth {
            tracks: vec![(0.03, GgiwMixture::single(params(0.0, 0.0)))],
        };
        let g = predict_glmb(&GlmbDensity::empty(), &birth.at_step(1), &cfg).unwrap();
        let w = weights_by_cardinality(&g);
        assert_eq!(w.len(), 2);
        assert_eq!(w[0].0, 0);
        assert_relative_eq!(w[0].1, 0.97, epsilon = 1e-12);
        assert_relative_eq!(w[1].1, 0.03, epsilon = 1e-12);
        assert_eq!(g.components()[1].tracks[0].label, Label::new(1, 0));
    }

    #[test]
    fn predict_single_track_survival() {
        let mut cfg = config(0.9);
        cfg.n_predict = 2;
        let g = predict_glmb(&single(Label::new(0, 0), params(0.0, 0.0)), &LmbDensity::default(), &cfg)
            .unwrap();
        let w = weights_by_cardinality(&g);
        assert_eq!(w.len(), 2);
        assert_relative_eq!(w[0].1, 0.99, epsilon = 1e-12);
        assert_eq!(w[0].0, 1);
        assert_relative_eq!(w[1].1, 0.01, epsilon = 1e-12);
        // The density was predicted.
        let t = &g.components()[0].tracks[0];
        assert_relative_eq!(t.density.dominant().alpha, 8.0, epsilon = 1e-12);
    }

    #[test]
    fn predict_two_tracks_subset_weights() {
        let mut cfg = config(0.9);
        cfg.p_s = 0.9;
        cfg.n_predict = 4;
        let g = normalize_glmb(vec![GlmbComponent {
            log_weight: 0.0,
            tracks: vec![
                Track { label: Label::new(0, 0), density: Arc::new(GgiwMixture::single(params(0.0, 0.0))) },
                Track { label: Label::new(0, 1), density: Arc::new(GgiwMixture::single(params(9.0, 0.0))) },
            ],
        }])
        .unwrap();
        let p = predict_glmb(&g, &LmbDensity::default(), &cfg).unwrap();
        let w: Vec<f64> = weights_by_cardinality(&p).iter().map(|x| x.1).collect();
        for (a, b) in w.iter().zip([0.81, 0.09, 0.09, 0.01]) {
            assert_relative_eq!(*a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn predict_rejects_label_collision() {
        let cfg = config(0.9);
        let birth = StaticBirth {
            tracks: vec![(0.1, GgiwMixture::single(params(0.0, 0.0)))],
        };
        let g = single(Label::new(1, 0), params(0.0, 0.0));
        assert!(matches!(
            predict_glmb(&g, &birth.at_step(1), &cfg),
            Err(Error::LabelCollision(_))
        ));
    }

    #[test]
    fn empty_scan_reweights_by_misdetection() {
        let cfg = config(0.8);
        let prior = normalize_glmb(vec![
            GlmbComponent { log_weight: 0.5f64.ln(), tracks: vec![] },
            GlmbComponent {
                log_weight: 0.5f64.ln(),
                tracks: vec![Track {
                    label: Label::new(0, 0),
                    density: Arc::new(GgiwMixture::single(params(0.0, 0.0))),
                }],
            },
        ])
        .unwrap();
        let post = update_glmb(&prior, &[], &cfg).unwrap();
        assert_eq!(post.len(), 2);
        assert_relative_eq!(post.cardinality()[1], 0.2 / 1.2, epsilon = 1e-12);
        let c = post.components().iter().find(|c| c.cardinality() == 1).unwrap();
        assert!(Arc::ptr_eq(&c.tracks[0].density, &prior.components()[1].tracks[0].density));
    }

    #[test]
    fn detect_versus_miss_ratio() {
        let mut cfg = config(0.8);
        cfg.partition = PartitionConfig::exhaustive();
        cfg.n_update = UNLIMITED;
        let p = params(1.0, 2.0);
        let prior = single(Label::new(0, 0), p.clone());
        let z = vec![
            dvector![1.0, 2.0],
            dvector![2.0, 2.5],
            dvector![0.2, 1.0],
            dvector![1.5, 3.0],
            dvector![0.5, 2.0],
        ];
        let raw = update_glmb_hypotheses(&prior, &z, &cfg).unwrap();
        let kappa = (5.0f64 / 10000.0).ln();
        let (_, log_ev) = crate::ggiw::update_ggiw(&p, &z, &cfg.sensor.observation).unwrap();
        let miss = raw.iter().find(|c| {
            c.tracks.len() == 1 && Arc::ptr_eq(&c.tracks[0].density, &prior.components()[0].tracks[0].density)
        });
        let miss = miss.unwrap().log_weight;
        let all = raw
            .iter()
            .find(|c| c.tracks.len() == 1 && c.tracks[0].density.dominant().alpha == 15.0)
            .unwrap()
            .log_weight;
        assert_relative_eq!(all - miss, 0.8f64.ln() + log_ev - 5.0 * kappa - 0.2f64.ln(), max_relative = 1e-12);

        // Total weight matches the exhaustive likelihood.
        let total = log_sum_exp(raw.iter().map(|c| c.log_weight));
        let oracle = brute_force_likelihood(&[(Label::new(0, 0), p)], &z, &cfg.sensor).unwrap()
            - log_clutter_density(&z, &cfg.sensor.clutter);
        assert_relative_eq!(total, oracle, max_relative = 1e-9);
    }

    #[test]
    fn zero_detection_probability_is_weight_neutral() {
        let mut cfg = config(0.0);
        cfg.sensor.p_d = 0.0;
        let prior = single(Label::new(0, 0), params(0.0, 0.0));
        let post = update_glmb(&prior, &[dvector![1.0, 1.0], dvector![10.0, -3.0]], &cfg).unwrap();
        assert_eq!(post.len(), 1);
        assert_relative_eq!(post.components()[0].weight(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn allocation_is_monotone() {
        let scores = [-1.0, -3.0, -0.5, f64::NEG_INFINITY, -8.0];
        let mut prev = vec![0; scores.len()];
        for n in 1..60 {
            let a = allocate(&scores, n);
            assert_eq!(a[3], 0);
            for (x, y) in a.iter().zip(&prev) {
                assert!(x >= y);
            }
            prev = a;
        }
        assert_eq!(allocate(&scores, 1), vec![0, 0, 1, 0, 0]);
    }

    #[test]
    fn out_of_region_points_are_dropped() {
        let cfg = config(0.9);
        let z = vec![dvector![0.0, 0.0], dvector![500.0, 0.0]];
        assert_eq!(admissible_measurements(&z, &cfg.sensor).len(), 1);
    }

    #[test]
    fn misses_drive_cardinality_to_zero() {
        let mut cfg = config(0.8);
        cfg.sensor.clutter.rate = 1.0;
        let mut f = GlmbFilter::new(cfg).unwrap();
        f.density = single(Label::new(0, 0), params(0.0, 0.0));
        let mut cards = Vec::new();
        for _ in 0..10 {
            f.step(&[]).unwrap();
            cards.push(f.density().map_cardinality());
        }
        // Existence odds drop below one after the third consecutive miss.
        assert_eq!(cards[..2], [1, 1]);
        assert!(cards[2..].iter().all(|&c| c == 0));
    }
}
