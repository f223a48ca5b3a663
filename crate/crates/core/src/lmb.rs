//! GGIW-LMB filter: independent per-group GLMB updates with optional adaptive
//! birth from unexplained measurement clusters.

use std::collections::HashSet;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::ggiw::{GgiwMixture, GgiwParams, ReductionConfig};
use crate::glmb::{admissible_measurements, update_glmb, GlmbFilterConfig};
use crate::partitioning::{birth_candidates, cluster_tracks, BirthConfig};
use crate::rfs::{glmb_to_lmb, lmb_to_glmb, Estimate, Label, LmbDensity, LmbTrack};

/// Prior of tracks born from measurement clusters.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveBirth {
    pub clustering: BirthConfig,
    pub alpha: f64,
    pub beta: f64,
    /// Kinematic covariance factor `P₀`.
    pub cov: DMatrix<f64>,
    pub dof: f64,
}

impl AdaptiveBirth {
    /// Clustering defaults derived from the given prior extent scale.
    pub fn new(alpha: f64, beta: f64, cov: DMatrix<f64>, dof: f64, scale: &DMatrix<f64>) -> Self {
        Self {
            clustering: BirthConfig::from_prior(dof, scale, alpha, beta),
            alpha,
            beta,
            cov,
            dof,
        }
    }
}

/// Settings of the LMB recursion.
#[derive(Debug, Clone)]
pub struct LmbFilterConfig {
    /// Models, budgets and static birth shared with the GLMB update.
    pub glmb: GlmbFilterConfig,
    pub gate_quantile: f64,
    pub reduction: ReductionConfig,
    pub delete_threshold: f64,
    pub report_threshold: f64,
    /// A previously reported track stays reported above this existence.
    pub keep_threshold: f64,
    pub adaptive_birth: Option<AdaptiveBirth>,
}

impl LmbFilterConfig {
    pub fn new(glmb: GlmbFilterConfig) -> Self {
        Self {
            glmb,
            gate_quantile: 0.99,
            reduction: ReductionConfig::default(),
            delete_threshold: 1e-3,
            report_threshold: 0.5,
            keep_threshold: 0.4,
            adaptive_birth: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.glmb.validate()?;
        if !(self.gate_quantile > 0.0 && self.gate_quantile < 1.0) {
            return Err(Error::InvalidConfig("gate quantile outside (0, 1)".into()));
        }
        if !(self.keep_threshold <= self.report_threshold) {
            return Err(Error::InvalidConfig(
                "keep threshold must not exceed the report threshold".into(),
            ));
        }
        Ok(())
    }
}

/// Survival prediction: `r₊ = p_S·r`, densities predicted, births appended.
pub fn predict_lmb(
    posterior: &LmbDensity,
    birth: &LmbDensity,
    cfg: &LmbFilterConfig,
) -> Result<LmbDensity> {
    let mut tracks = Vec::with_capacity(posterior.len() + birth.len());
    for t in posterior.tracks() {
        tracks.push(LmbTrack {
            label: t.label,
            existence: cfg.glmb.p_s * t.existence,
            density: Arc::new(t.density.predict(&cfg.glmb.motion)?),
        });
    }
    tracks.extend(birth.tracks().iter().cloned());
    LmbDensity::new(tracks)
}

fn newborn(candidate_pos: &DVector<f64>, scale: DMatrix<f64>, ab: &AdaptiveBirth) -> Result<GgiwMixture> {
    let s = ab.cov.nrows();
    let d = candidate_pos.len();
    let mut mean = DVector::zeros(s * d);
    mean.rows_mut(0, d).copy_from(candidate_pos);
    let p = GgiwParams::new(ab.alpha, ab.beta, mean, ab.cov.clone(), ab.dof, scale)?;
    Ok(GgiwMixture::single(p))
}

/// Measurement update at step `k`.
///
/// Tracks are split into independent groups by gating; each group is
/// expanded into a GLMB, updated with its own measurements and approximated
/// back to an LMB. Tracks whose existence drops below the deletion threshold
/// are removed.
pub fn update_lmb(
    predicted: &LmbDensity,
    z: &[DVector<f64>],
    cfg: &LmbFilterConfig,
    k: u32,
) -> Result<LmbDensity> {
    let z = admissible_measurements(z, &cfg.glmb.sensor);
    let h = &cfg.glmb.sensor.observation;
    let clustering = cluster_tracks(predicted, &z, cfg.gate_quantile, h, cfg.glmb.subset_cap)?;

    let mut tracks = Vec::with_capacity(predicted.len());
    for group in &clustering.groups {
        let zg: Vec<DVector<f64>> = group.measurements.iter().map(|&i| z[i].clone()).collect();
        let prior = lmb_to_glmb(predicted, &group.labels, cfg.glmb.subset_cap)?;
        let post = update_glmb(&prior, &zg, &cfg.glmb)?;
        let approx = glmb_to_lmb(&post, &cfg.reduction);
        for &l in &group.labels {
            match approx.get(l) {
                Some(t) => tracks.push(t.clone()),
                // Absent from every retained hypothesis.
                None => {
                    let t = predicted.get(l).expect("group labels come from the prior");
                    tracks.push(LmbTrack {
                        label: l,
                        existence: 0.0,
                        density: Arc::clone(&t.density),
                    });
                }
            }
        }
    }

    if let Some(ab) = &cfg.adaptive_birth {
        let first_index = predicted
            .labels()
            .iter()
            .filter(|l| l.birth_step == k)
            .map(|l| l.index + 1)
            .max()
            .unwrap_or(0);
        for (j, c) in birth_candidates(&z, &clustering.residual, &ab.clustering)
            .into_iter()
            .enumerate()
        {
            tracks.push(LmbTrack {
                label: Label::new(k, first_index + j as u32),
                existence: c.existence,
                density: Arc::new(newborn(&c.position, c.scale, ab)?),
            });
        }
    }

    tracks.retain(|t| t.existence >= cfg.delete_threshold);
    for t in &mut tracks {
        t.existence = t.existence.clamp(0.0, 1.0);
    }
    LmbDensity::new(tracks)
}

/// Tracks reported at this step, given the labels reported at the previous one.
pub fn report(lmb: &LmbDensity, previous: &HashSet<Label>, cfg: &LmbFilterConfig) -> Vec<Estimate> {
    lmb.tracks()
        .iter()
        .filter(|t| {
            t.existence > cfg.report_threshold
                || (previous.contains(&t.label) && t.existence > cfg.keep_threshold)
        })
        .map(|t| Estimate::from_mixture(t.label, &t.density, Some(t.existence)))
        .collect()
}

/// One predict/update cycle at step `k` followed by reporting.
pub fn step_lmb(
    state: &LmbDensity,
    z: &[DVector<f64>],
    birth: &LmbDensity,
    cfg: &LmbFilterConfig,
    k: u32,
    previous: &HashSet<Label>,
) -> Result<(LmbDensity, Vec<Estimate>)> {
    let predicted = predict_lmb(state, birth, cfg)?;
    let posterior = update_lmb(&predicted, z, cfg, k)?;
    let estimates = report(&posterior, previous, cfg);
    Ok((posterior, estimates))
}

/// A running LMB filter.
#[derive(Debug, Clone)]
pub struct LmbFilter {
    config: LmbFilterConfig,
    density: LmbDensity,
    reported: HashSet<Label>,
    step: u32,
}

impl LmbFilter {
    pub fn new(config: LmbFilterConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            density: LmbDensity::default(),
            reported: HashSet::new(),
            step: 0,
        })
    }

    pub fn config(&self) -> &LmbFilterConfig {
        &self.config
    }

    pub fn density(&self) -> &LmbDensity {
        &self.density
    }

    /// Replaces the current density, e.g. to start from a known track set.
    pub fn set_density(&mut self, density: LmbDensity) {
        self.density = density;
    }

    pub fn step_index(&self) -> u32 {
        self.step
    }

    pub fn step(&mut self, z: &[DVector<f64>]) -> Result<Vec<Estimate>> {
        let k = self.step + 1;
        let birth = self.config.glmb.birth.at_step(k);
        let (density, estimates) =
            step_lmb(&self.density, z, &birth, &self.config, k, &self.reported)?;
        self.density = density;
        self.reported = estimates.iter().map(|e| e.label).collect();
        self.step = k;
        Ok(estimates)
    }
}
