//! Labelled multi-target densities: GLMB and LMB.
//!
//! A GLMB is stored as a list of hypotheses, each a log-weight and a set of
//! labelled tracks with their own GGIW mixtures. Track densities are shared
//! through `Arc` so that hypotheses differing only in a few tracks do not copy
//! the rest; pointer identity is also what the filters use for caching.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::ggiw::{log_sum_exp, reduce_mixture, GgiwMixture, ReductionConfig};

/// Track label: the step at which the track was born and an index within it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Label {
    pub birth_step: u32,
    pub index: u32,
}

impl Label {
    pub const fn new(birth_step: u32, index: u32) -> Self {
        Self { birth_step, index }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.birth_step, self.index)
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let (b, i) = s
            .split_once('.')
            .ok_or_else(|| format!("label {s:?} is not of the form birth.index"))?;
        Ok(Label {
            birth_step: b.parse().map_err(|_| format!("bad birth step in {s:?}"))?,
            index: i.parse().map_err(|_| format!("bad index in {s:?}"))?,
        })
    }
}

impl Serialize for Label {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Label {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A labelled track inside a GLMB hypothesis.
#[derive(Debug, Clone)]
pub struct Track {
    pub label: Label,
    pub density: Arc<GgiwMixture>,
}

/// One GLMB hypothesis.
#[derive(Debug, Clone)]
pub struct GlmbComponent {
    pub log_weight: f64,
    /// Sorted by label, labels distinct.
    pub tracks: Vec<Track>,
}

impl GlmbComponent {
    pub fn new(log_weight: f64, mut tracks: Vec<Track>) -> Result<Self> {
        tracks.sort_by_key(|t| t.label);
        if tracks.windows(2).any(|w| w[0].label == w[1].label) {
            return Err(Error::Precondition("duplicate label within a hypothesis".into()));
        }
        Ok(Self { log_weight, tracks })
    }

    pub fn labels(&self) -> impl Iterator<Item = Label> + '_ {
        self.tracks.iter().map(|t| t.label)
    }

    pub fn cardinality(&self) -> usize {
        self.tracks.len()
    }

    pub fn weight(&self) -> f64 {
        self.log_weight.exp()
    }
}

/// Normalised GLMB density with its cardinality distribution.
#[derive(Debug, Clone)]
pub struct GlmbDensity {
    components: Vec<GlmbComponent>,
    cardinality: Vec<f64>,
}

impl GlmbDensity {
    /// The density with a single, empty hypothesis.
    pub fn empty() -> Self {
        Self {
            components: vec![GlmbComponent {
                log_weight: 0.0,
                tracks: Vec::new(),
            }],
            cardinality: vec![1.0],
        }
    }

    pub fn components(&self) -> &[GlmbComponent] {
        &self.components
    }

    pub fn into_components(self) -> Vec<GlmbComponent> {
        self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// `cardinality()[n]` is the probability of exactly `n` targets.
    pub fn cardinality(&self) -> &[f64] {
        &self.cardinality
    }

    pub fn expected_cardinality(&self) -> f64 {
        self.cardinality
            .iter()
            .enumerate()
            .map(|(n, p)| n as f64 * p)
            .sum()
    }

    /// Most probable cardinality; ties go to the smaller count.
    pub fn map_cardinality(&self) -> usize {
        let mut best = 0;
        for (n, &p) in self.cardinality.iter().enumerate() {
            if p > self.cardinality[best] {
                best = n;
            }
        }
        best
    }
}

fn cardinality_distribution(components: &[GlmbComponent]) -> Vec<f64> {
    let max_n = components.iter().map(|c| c.cardinality()).max().unwrap_or(0);
    let mut dist = vec![0.0; max_n + 1];
    for c in components {
        dist[c.cardinality()] += c.weight();
    }
    dist
}

/// Log-sum-exp normalisation of raw hypothesis weights.
pub fn normalize_glmb(mut components: Vec<GlmbComponent>) -> Result<GlmbDensity> {
    let total = log_sum_exp(components.iter().map(|c| c.log_weight));
    if !total.is_finite() {
        return Err(Error::EmptyPosterior);
    }
    for c in &mut components {
        c.log_weight -= total;
    }
    let cardinality = cardinality_distribution(&components);
    Ok(GlmbDensity {
        components,
        cardinality,
    })
}

fn weight_order(components: &[GlmbComponent]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..components.len()).collect();
    order.sort_by(|&a, &b| {
        components[b]
            .log_weight
            .partial_cmp(&components[a].log_weight)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    order
}

/// Keeps the `max_components` heaviest hypotheses and renormalises.
pub fn prune_glmb(g: &GlmbDensity, max_components: usize) -> GlmbDensity {
    let m = max_components.max(1);
    if g.len() <= m {
        return g.clone();
    }
    let order = weight_order(&g.components);
    let kept: Vec<GlmbComponent> = order[..m]
        .iter()
        .map(|&i| g.components[i].clone())
        .collect();
    normalize_glmb(kept).expect("top hypotheses carry positive weight")
}

/// A labelled state estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub label: Label,
    /// Kinematic mean.
    pub mean: DVector<f64>,
    pub extent: DMatrix<f64>,
    /// Mean measurement rate.
    pub rate: f64,
    /// Existence probability, reported by LMB filters.
    pub existence: Option<f64>,
}

impl Estimate {
    pub fn from_mixture(label: Label, density: &GgiwMixture, existence: Option<f64>) -> Self {
        let p = density.dominant();
        Self {
            label,
            mean: p.mean.clone(),
            extent: p.extent_estimate().matrix,
            rate: p.rate_mean(),
            existence,
        }
    }
}

/// MAP-cardinality estimate: the heaviest hypothesis with the most probable
/// number of targets. Equal weights go to the lowest label sequence.
pub fn extract_estimates(g: &GlmbDensity) -> Vec<Estimate> {
    let n = g.map_cardinality();
    let mut best: Option<&GlmbComponent> = None;
    for c in g.components.iter().filter(|c| c.cardinality() == n) {
        best = match best {
            None => Some(c),
            Some(b) => {
                if c.log_weight > b.log_weight
                    || (c.log_weight == b.log_weight && c.labels().lt(b.labels()))
                {
                    Some(c)
                } else {
                    Some(b)
                }
            }
        };
    }
    best.map(|c| {
        c.tracks
            .iter()
            .map(|t| Estimate::from_mixture(t.label, &t.density, None))
            .collect()
    })
    .unwrap_or_default()
}

/// A labelled Bernoulli track.
#[derive(Debug, Clone)]
pub struct LmbTrack {
    pub label: Label,
    pub existence: f64,
    pub density: Arc<GgiwMixture>,
}

/// LMB density; tracks are kept sorted by label.
#[derive(Debug, Clone, Default)]
pub struct LmbDensity {
    tracks: Vec<LmbTrack>,
}

impl LmbDensity {
    pub fn new(mut tracks: Vec<LmbTrack>) -> Result<Self> {
        tracks.sort_by_key(|t| t.label);
        if let Some(w) = tracks.windows(2).find(|w| w[0].label == w[1].label) {
            return Err(Error::LabelCollision(w[0].label.to_string()));
        }
        if let Some(t) = tracks.iter().find(|t| !(0.0..=1.0).contains(&t.existence)) {
            return Err(Error::Precondition(format!(
                "existence {} of track {} outside [0,1]",
                t.existence, t.label
            )));
        }
        Ok(Self { tracks })
    }

    pub fn tracks(&self) -> &[LmbTrack] {
        &self.tracks
    }

    pub fn into_tracks(self) -> Vec<LmbTrack> {
        self.tracks
    }

    pub fn len(&self) -> usize {
        self.tracks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tracks.is_empty()
    }

    pub fn get(&self, label: Label) -> Option<&LmbTrack> {
        self.tracks
            .binary_search_by_key(&label, |t| t.label)
            .ok()
            .map(|i| &self.tracks[i])
    }

    pub fn labels(&self) -> Vec<Label> {
        self.tracks.iter().map(|t| t.label).collect()
    }

    pub fn expected_cardinality(&self) -> f64 {
        self.tracks.iter().map(|t| t.existence).sum()
    }
}

/// Default bound on the number of tracks expanded by [`lmb_to_glmb`].
pub const DEFAULT_SUBSET_CAP: usize = 15;

/// Expands the given tracks of an LMB into a GLMB over all label subsets.
pub fn lmb_to_glmb(lmb: &LmbDensity, labels: &[Label], cap: usize) -> Result<GlmbDensity> {
    if labels.len() > cap {
        return Err(Error::TooLarge(format!(
            "{} tracks exceed the subset-enumeration cap of {}",
            labels.len(),
            cap
        )));
    }
    let mut tracks = Vec::with_capacity(labels.len());
    for &l in labels {
        let t = lmb
            .get(l)
            .ok_or_else(|| Error::Precondition(format!("label {l} not in LMB density")))?;
        tracks.push(t);
    }
    tracks.sort_by_key(|t| t.label);
    let n = tracks.len();
    let mut components = Vec::with_capacity(1 << n);
    for mask in 0u64..(1u64 << n) {
        let mut log_weight = 0.0;
        let mut members = Vec::new();
        for (i, t) in tracks.iter().enumerate() {
            if mask & (1 << i) != 0 {
                log_weight += t.existence.ln();
                members.push(Track {
                    label: t.label,
                    density: Arc::clone(&t.density),
                });
            } else {
                log_weight += (1.0 - t.existence).ln();
            }
        }
        components.push(GlmbComponent {
            log_weight,
            tracks: members,
        });
    }
    normalize_glmb(components)
}

/// LMB approximation matching the first moment of a GLMB.
pub fn glmb_to_lmb(g: &GlmbDensity, reduction: &ReductionConfig) -> LmbDensity {
    struct Acc {
        existence: f64,
        parts: Vec<(f64, Arc<GgiwMixture>)>,
        index: HashMap<usize, usize>,
    }
    let mut per_label: std::collections::BTreeMap<Label, Acc> = Default::default();
    for c in &g.components {
        let w = c.weight();
        for t in &c.tracks {
            let acc = per_label.entry(t.label).or_insert_with(|| Acc {
                existence: 0.0,
                parts: Vec::new(),
                index: HashMap::new(),
            });
            acc.existence += w;
            let key = Arc::as_ptr(&t.density) as usize;
            match acc.index.get(&key) {
                Some(&i) => acc.parts[i].0 += w,
                None => {
                    acc.index.insert(key, acc.parts.len());
                    acc.parts.push((w, Arc::clone(&t.density)));
                }
            }
        }
    }

    let tracks = per_label
        .into_iter()
        .map(|(label, acc)| {
            let density = if acc.parts.len() == 1 {
                Arc::clone(&acc.parts[0].1)
            } else {
                let uniform = !(acc.existence > 0.0);
                let mut comps = Vec::new();
                for (w, mix) in &acc.parts {
                    let share = if uniform { 1.0 } else { *w / acc.existence };
                    for (cw, p) in mix.components() {
                        comps.push((share * cw, p.clone()));
                    }
                }
                let mix = GgiwMixture::from_unnormalized(comps)
                    .unwrap_or_else(|_| (*acc.parts[0].1).clone());
                Arc::new(reduce_mixture(&mix, reduction))
            };
            LmbTrack {
                label,
                existence: acc.existence.clamp(0.0, 1.0),
                density,
            }
        })
        .collect();
    LmbDensity { tracks }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ggiw::GgiwParams;
    use approx::assert_relative_eq;

    fn mixture(x: f64) -> Arc<GgiwMixture> {
        Arc::new(GgiwMixture::single(
            GgiwParams::new(
                10.0,
                1.0,
                DVector::from_vec(vec![x, 0.0]),
                DMatrix::identity(1, 1),
                10.0,
                DMatrix::identity(2, 2) * 100.0,
            )
            .unwrap(),
        ))
    }

    fn comp(log_weight: f64, labels: &[Label]) -> GlmbComponent {
        GlmbComponent::new(
            log_weight,
            labels
                .iter()
                .map(|&label| Track {
                    label,
                    density: mixture(label.index as f64),
                })
                .collect(),
        )
        .unwrap()
    }

    const A: Label = Label::new(0, 0);
    const B: Label = Label::new(0, 1);

    #[test]
    fn label_string_round_trip() {
        let l = Label::new(12, 3);
        assert_eq!(l.to_string(), "12.3");
        assert_eq!("12.3".parse::<Label>().unwrap(), l);
        assert!("12".parse::<Label>().is_err());
        assert!(Label::new(1, 5) < Label::new(2, 0));
    }

    #[test]
    fn normalize_examples() {
        let g = normalize_glmb(vec![comp(0.0, &[]), comp(0.0, &[A])]).unwrap();
        assert_relative_eq!(g.components()[0].weight(), 0.5);
        assert_relative_eq!(g.components()[1].weight(), 0.5);
        assert_eq!(g.cardinality(), &[0.5, 0.5]);

        let g = normalize_glmb(vec![comp(-3.0, &[A])]).unwrap();
        assert_eq!(g.components()[0].weight(), 1.0);

        let g = normalize_glmb(vec![comp(0.0, &[]), comp(f64::NEG_INFINITY, &[A])]).unwrap();
        assert_eq!(g.components()[0].weight(), 1.0);
        assert_eq!(g.components()[1].weight(), 0.0);

        assert!(matches!(
            normalize_glmb(vec![comp(f64::NEG_INFINITY, &[A])]),
            Err(Error::EmptyPosterior)
        ));
    }

    #[test]
    fn duplicate_labels_rejected() {
        assert!(GlmbComponent::new(
            0.0,
            vec![
                Track { label: A, density: mixture(0.0) },
                Track { label: A, density: mixture(1.0) },
            ]
        )
        .is_err());
    }

    #[test]
    fn prune_examples() {
        let g = normalize_glmb(vec![
            comp(0.7f64.ln(), &[A]),
            comp(0.2f64.ln(), &[B]),
            comp(0.1f64.ln(), &[]),
        ])
        .unwrap();
        assert_eq!(prune_glmb(&g, 5).len(), 3);
        let p = prune_glmb(&g, 2);
        assert_eq!(p.len(), 2);
        assert_relative_eq!(p.components()[0].weight(), 7.0 / 9.0, epsilon = 1e-12);
        assert_relative_eq!(p.components()[1].weight(), 2.0 / 9.0, epsilon = 1e-12);
        let p = prune_glmb(&g, 1);
        assert_eq!(p.components()[0].weight(), 1.0);
        assert_eq!(p.components()[0].labels().collect::<Vec<_>>(), vec![A]);
    }

    #[test]
    fn extract_map_cardinality_and_tie_break() {
        let g = normalize_glmb(vec![
            comp(0.3f64.ln(), &[B]),
            comp(0.3f64.ln(), &[A]),
            comp(0.4f64.ln(), &[]),
        ])
        .unwrap();
        let est = extract_estimates(&g);
        assert_eq!(est.len(), 1);
        assert_eq!(est[0].label, A);

        let g = normalize_glmb(vec![comp(0.9f64.ln(), &[]), comp(0.1f64.ln(), &[A])]).unwrap();
        assert!(extract_estimates(&g).is_empty());

        let g = normalize_glmb(vec![comp(0.0, &[A, B])]).unwrap();
        let est = extract_estimates(&g);
        assert_eq!(est.iter().map(|e| e.label).collect::<Vec<_>>(), vec![A, B]);
        assert_relative_eq!(est[0].rate, 10.0);
        assert_relative_eq!(est[0].extent[(0, 0)], 25.0);
    }

    fn lmb(rs: &[f64]) -> LmbDensity {
        LmbDensity::new(
            rs.iter()
                .enumerate()
                .map(|(i, &r)| LmbTrack {
                    label: Label::new(0, i as u32),
                    existence: r,
                    density: mixture(i as f64),
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn lmb_to_glmb_examples() {
        let l = lmb(&[0.5]);
        let g = lmb_to_glmb(&l, &l.labels(), DEFAULT_SUBSET_CAP).unwrap();
        assert_eq!(g.len(), 2);
        assert_relative_eq!(g.components()[0].weight(), 0.5);
        assert_relative_eq!(g.components()[1].weight(), 0.5);

        let l = lmb(&[0.5, 0.5]);
        let g = lmb_to_glmb(&l, &l.labels(), DEFAULT_SUBSET_CAP).unwrap();
        assert_eq!(g.len(), 4);
        for c in g.components() {
            assert_relative_eq!(c.weight(), 0.25, epsilon = 1e-15);
        }

        let l = lmb(&[1.0]);
        let g = lmb_to_glmb(&l, &l.labels(), DEFAULT_SUBSET_CAP).unwrap();
        assert_eq!(g.components()[0].weight(), 0.0);
        assert_eq!(g.components()[1].weight(), 1.0);
    }

    #[test]
    fn lmb_to_glmb_cap() {
        let l = lmb(&[0.5; 4]);
        assert!(matches!(lmb_to_glmb(&l, &l.labels(), 3), Err(Error::TooLarge(_))));
    }

    #[test]
    fn lmb_to_glmb_product_form_exhaustive() {
        let rs = [0.9, 0.35, 0.6, 0.05];
        let l = lmb(&rs);
        let g = lmb_to_glmb(&l, &l.labels(), DEFAULT_SUBSET_CAP).unwrap();
        assert_eq!(g.len(), 16);
        for c in g.components() {
            let set: Vec<u32> = c.labels().map(|l| l.index).collect();
            let direct: f64 = rs
                .iter()
                .enumerate()
                .map(|(i, r)| if set.contains(&(i as u32)) { *r } else { 1.0 - r })
                .product();
            assert_relative_eq!(c.weight(), direct, max_relative = 1e-12);
        }
    }

    #[test]
    fn glmb_to_lmb_examples() {
        let g = normalize_glmb(vec![comp(0.0, &[A])]).unwrap();
        let l = glmb_to_lmb(&g, &ReductionConfig::default());
        assert_eq!(l.tracks()[0].existence, 1.0);
        assert!(Arc::ptr_eq(&l.tracks()[0].density, &g.components()[0].tracks[0].density));

        let g = normalize_glmb(vec![comp(0.4f64.ln(), &[]), comp(0.6f64.ln(), &[A])]).unwrap();
        let l = glmb_to_lmb(&g, &ReductionConfig::default());
        assert_relative_eq!(l.tracks()[0].existence, 0.6, epsilon = 1e-15);
    }

    #[test]
    fn lmb_glmb_round_trip() {
        let rs = [0.9, 0.35, 0.6, 1.0, 0.0];
        let l = lmb(&rs);
        let g = lmb_to_glmb(&l, &l.labels(), DEFAULT_SUBSET_CAP).unwrap();
        let back = glmb_to_lmb(&g, &ReductionConfig::default());
        assert_eq!(back.len(), rs.len());
        for (t, r) in back.tracks().iter().zip(rs) {
            assert!((t.existence - r).abs() < 1e-12);
        }
        assert!((back.expected_cardinality() - g.expected_cardinality()).abs() < 1e-9);
    }

    #[test]
    fn lmb_rejects_collisions_and_bad_existence() {
        let t = LmbTrack {
            label: A,
            existence: 0.5,
            density: mixture(0.0),
        };
        assert!(matches!(
            LmbDensity::new(vec![t.clone(), t.clone()]),
            Err(Error::LabelCollision(_))
        ));
        let mut bad = t;
        bad.existence = 1.5;
        assert!(LmbDensity::new(vec![bad]).is_err());
    }
}
