//! Gamma Gaussian inverse-Wishart (GGIW) single extended-target densities.
//!
//! A GGIW density factorises into a gamma density on the Poisson measurement
//! rate, a Gaussian on the kinematic state whose covariance is `P ⊗ χ`, and an
//! inverse-Wishart density on the extent matrix `χ`. The kinematic mean is a
//! flat vector of `s` consecutive `d`-blocks (position, velocity, ...).
//!
//! The inverse-Wishart uses the convention in which the density has the factor
//! `|V|^{(v-d-1)/2} / |χ|^{v/2}`, so `v > 2d` and the mean is `V / (v - 2d - 2)`.

use nalgebra::{DMatrix, DVector};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Offset above `2d` at which the degrees of freedom are clamped by prediction.
pub const DOF_FLOOR_EPS: f64 = 1e-6;

/// Parameters `(α, β, m, P, v, V)` of one GGIW density.
#[derive(Debug, Clone, PartialEq)]
pub struct GgiwParams {
    /// Gamma shape.
    pub alpha: f64,
    /// Gamma inverse scale.
    pub beta: f64,
    /// Kinematic mean, `s` blocks of length `d`.
    pub mean: DVector<f64>,
    /// `s × s` kinematic covariance factor.
    pub cov: DMatrix<f64>,
    /// Inverse-Wishart degrees of freedom.
    pub dof: f64,
    /// `d × d` inverse-Wishart scale matrix.
    pub scale: DMatrix<f64>,
}

impl GgiwParams {
    pub fn new(
        alpha: f64,
        beta: f64,
        mean: DVector<f64>,
        cov: DMatrix<f64>,
        dof: f64,
        scale: DMatrix<f64>,
    ) -> Result<Self> {
        let p = Self {
            alpha,
            beta,
            mean,
            cov,
            dof,
            scale,
        };
        p.validate()?;
        Ok(p)
    }

    /// Checks every structural and positivity invariant.
    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        let s = self.order();
        if self.scale.ncols() != d || d == 0 {
            return Err(Error::DimensionMismatch("extent scale must be square".into()));
        }
        if self.cov.ncols() != s || s == 0 {
            return Err(Error::DimensionMismatch("kinematic covariance must be square".into()));
        }
        if self.mean.len() != s * d {
            return Err(Error::DimensionMismatch(format!(
                "mean has length {}, expected {}",
                self.mean.len(),
                s * d
            )));
        }
        if !(self.alpha > 0.0 && self.beta > 0.0) {
            return Err(Error::Precondition("gamma parameters must be positive".into()));
        }
        if !(self.dof > 2.0 * d as f64) {
            return Err(Error::Precondition(format!(
                "degrees of freedom {} must exceed {}",
                self.dof,
                2 * d
            )));
        }
        if self.scale.clone().cholesky().is_none() {
            return Err(Error::Precondition("extent scale is not positive definite".into()));
        }
        let eig = self.cov.clone().symmetric_eigenvalues();
        let tol = 1e-9 * eig.amax().max(1.0);
        if eig.iter().any(|&e| e < -tol) {
            return Err(Error::Precondition(
                "kinematic covariance is not positive semidefinite".into(),
            ));
        }
        Ok(())
    }

    /// Extent dimension `d`.
    pub fn dim(&self) -> usize {
        self.scale.nrows()
    }

    /// Motion-model order `s`.
    pub fn order(&self) -> usize {
        self.cov.nrows()
    }

    /// Kinematic mean as an `s × d` matrix whose rows are the blocks.
    pub fn mean_blocks(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.order(), self.dim(), self.mean.as_slice())
    }

    fn set_mean_blocks(&mut self, blocks: &DMatrix<f64>) {
        let (s, d) = blocks.shape();
        for i in 0..s {
            for j in 0..d {
                self.mean[i * d + j] = blocks[(i, j)];
            }
        }
    }

    /// Position block of the kinematic mean.
    pub fn position(&self) -> DVector<f64> {
        self.mean.rows(0, self.dim()).into_owned()
    }

    /// Predicted measurement centroid `(H ⊗ I_d) m`.
    pub fn predicted_centroid(&self, h: &DVector<f64>) -> DVector<f64> {
        let blocks = self.mean_blocks();
        (h.transpose() * blocks).transpose()
    }

    /// Posterior mean of the measurement rate.
    pub fn rate_mean(&self) -> f64 {
        self.alpha / self.beta
    }

    pub fn extent_estimate(&self) -> ExtentEstimate {
        extent_point_estimate(self)
    }
}

/// Single-target motion and forgetting model.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionModel {
    /// `s × s` transition matrix.
    pub transition: DMatrix<f64>,
    /// `s × s` process-noise factor; the full noise is `Q ⊗ χ`.
    pub noise: DMatrix<f64>,
    /// Sampling period `T` in seconds.
    pub period: f64,
    /// Gamma forgetting factor `μ > 1`.
    pub forgetting: f64,
    /// Extent decay constant `τ` in seconds.
    pub extent_decay: f64,
}

impl MotionModel {
    pub fn new(
        transition: DMatrix<f64>,
        noise: DMatrix<f64>,
        period: f64,
        forgetting: f64,
        extent_decay: f64,
    ) -> Result<Self> {
        let m = Self {
            transition,
            noise,
            period,
            forgetting,
            extent_decay,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let s = self.transition.nrows();
        if self.transition.ncols() != s || self.noise.shape() != (s, s) {
            return Err(Error::DimensionMismatch(
                "transition and noise must be square and equal-sized".into(),
            ));
        }
        if !(self.forgetting > 1.0 && self.extent_decay > 0.0 && self.period > 0.0) {
            return Err(Error::Precondition(
                "require forgetting > 1, extent decay > 0 and period > 0".into(),
            ));
        }
        Ok(())
    }

    /// Third-order model with exponentially correlated acceleration.
    ///
    /// `maneuver_time` is the acceleration correlation time and `accel_std`
    /// the scalar acceleration standard deviation.
    pub fn singer(
        period: f64,
        maneuver_time: f64,
        accel_std: f64,
        forgetting: f64,
        extent_decay: f64,
    ) -> Result<Self> {
        let t = period;
        let decay = (-t / maneuver_time).exp();
        #[rustfmt::skip]
        let f = DMatrix::from_row_slice(3, 3, &[
            1.0, t,   0.5 * t * t,
            0.0, 1.0, t,
            0.0, 0.0, decay,
        ]);
        let mut q = DMatrix::zeros(3, 3);
        q[(2, 2)] = accel_std * accel_std * (1.0 - (-2.0 * t / maneuver_time).exp());
        Self::new(f, q, period, forgetting, extent_decay)
    }

    /// Second-order constant-velocity model with white acceleration noise.
    pub fn constant_velocity(
        period: f64,
        accel_std: f64,
        forgetting: f64,
        extent_decay: f64,
    ) -> Result<Self> {
        let t = period;
        let f = DMatrix::from_row_slice(2, 2, &[1.0, t, 0.0, 1.0]);
        let s2 = accel_std * accel_std;
        #[rustfmt::skip]
        let q = DMatrix::from_row_slice(2, 2, &[
            s2 * t.powi(4) / 4.0, s2 * t.powi(3) / 2.0,
            s2 * t.powi(3) / 2.0, s2 * t * t,
        ]);
        Self::new(f, q, period, forgetting, extent_decay)
    }

    /// Motion-model order `s`.
    pub fn order(&self) -> usize {
        self.transition.nrows()
    }

    /// Observation row `H = [1, 0, …, 0]` selecting the position block.
    pub fn observation_row(&self) -> DVector<f64> {
        let mut h = DVector::zeros(self.order());
        h[0] = 1.0;
        h
    }
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let t = m.transpose();
    *m += t;
    *m *= 0.5;
}

/// Time update of a single GGIW density.
pub fn predict_ggiw(prior: &GgiwParams, model: &MotionModel) -> Result<GgiwParams> {
    let s = prior.order();
    if model.order() != s {
        return Err(Error::DimensionMismatch(format!(
            "motion model order {} does not match density order {}",
            model.order(),
            s
        )));
    }
    let d = prior.dim() as f64;
    let mut out = prior.clone();

    let blocks = &model.transition * prior.mean_blocks();
    out.set_mean_blocks(&blocks);
    out.cov = &model.transition * &prior.cov * model.transition.transpose() + &model.noise;
    symmetrize(&mut out.cov);

    out.alpha = prior.alpha / model.forgetting;
    out.beta = prior.beta / model.forgetting;

    let floor = 2.0 * d + DOF_FLOOR_EPS;
    let mut dof = (-model.period / model.extent_decay).exp() * prior.dof;
    if dof <= 2.0 * d {
        dof = floor;
    }
    out.dof = dof;
    out.scale = &prior.scale * ((dof - d - 1.0) / (prior.dof - d - 1.0));
    Ok(out)
}

/// `ln Γ_d(a)`, the log multivariate gamma function.
pub fn ln_multivariate_gamma(d: usize, a: f64) -> f64 {
    let df = d as f64;
    let mut acc = df * (df - 1.0) / 4.0 * std::f64::consts::PI.ln();
    for j in 1..=d {
        acc += ln_gamma(a + (1.0 - j as f64) / 2.0);
    }
    acc
}

/// Log of the negative-binomial rate evidence `η_γ` for `n` measurements.
pub fn log_eta_gamma(alpha: f64, beta: f64, n: usize) -> f64 {
    let nf = n as f64;
    let alpha_w = alpha + nf;
    let beta_w = beta + 1.0;
    ln_gamma(alpha_w) - ln_gamma(alpha) + alpha * beta.ln()
        - alpha_w * beta_w.ln()
        - ln_gamma(nf + 1.0)
}

fn ln_det_spd(m: &DMatrix<f64>) -> Result<f64> {
    let chol = m
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Precondition("matrix is not positive definite".into()))?;
    Ok(2.0 * chol.l_dirty().diagonal().iter().map(|x| x.ln()).sum::<f64>())
}

/// Measurement update of a single GGIW density with a non-empty group.
///
/// Returns the posterior parameters and `log η_γ + log η_{x,χ}`.
pub fn update_ggiw(
    prior: &GgiwParams,
    group: &[DVector<f64>],
    h: &DVector<f64>,
) -> Result<(GgiwParams, f64)> {
    let n = group.len();
    if n == 0 {
        return Err(Error::Precondition(
            "measurement update requires at least one measurement".into(),
        ));
    }
    let d = prior.dim();
    let s = prior.order();
    if h.len() != s {
        return Err(Error::DimensionMismatch("observation row length".into()));
    }
    if let Some(w) = group.iter().find(|w| w.len() != d) {
        return Err(Error::DimensionMismatch(format!(
            "measurement of length {} in a {}-dimensional extent model",
            w.len(),
            d
        )));
    }
    let nf = n as f64;

    let mut centroid = DVector::zeros(d);
    for w in group {
        centroid += w;
    }
    centroid /= nf;
    let mut scatter = DMatrix::zeros(d, d);
    for w in group {
        let e = w - &centroid;
        scatter += &e * e.transpose();
    }

    let blocks = prior.mean_blocks();
    let innov = &centroid - (h.transpose() * &blocks).transpose();
    let ph = &prior.cov * h;
    let innov_factor = h.dot(&ph) + 1.0 / nf;
    let gain = &ph / innov_factor;
    let innov_mat = (&innov * innov.transpose()) / innov_factor;

    let mut post = prior.clone();
    post.alpha = prior.alpha + nf;
    post.beta = prior.beta + 1.0;
    let new_blocks = blocks + &gain * innov.transpose();
    post.set_mean_blocks(&new_blocks);
    post.cov = &prior.cov - (&gain * gain.transpose()) * innov_factor;
    symmetrize(&mut post.cov);
    post.dof = prior.dof + nf;
    post.scale = &prior.scale + innov_mat + scatter;
    symmetrize(&mut post.scale);

    let df = d as f64;
    let log_eta_rate = log_eta_gamma(prior.alpha, prior.beta, n);
    let log_eta_kin = -df / 2.0 * (nf * std::f64::consts::PI.ln() + nf.ln())
        + prior.dof / 2.0 * ln_det_spd(&prior.scale)?
        - post.dof / 2.0 * ln_det_spd(&post.scale)?
        + ln_multivariate_gamma(d, post.dof / 2.0)
        - ln_multivariate_gamma(d, prior.dof / 2.0)
        - df / 2.0 * innov_factor.ln();

    Ok((post, log_eta_rate + log_eta_kin))
}

/// Log misdetection factor of a track.
///
/// `literal` gives `log(1 - p_D)`; otherwise the probability that a detected
/// target produced no measurements, `(β/(β+1))^α`, is folded in.
pub fn log_evidence_misdetect(prior: &GgiwParams, p_d: f64, literal: bool) -> f64 {
    if literal {
        (1.0 - p_d).ln()
    } else {
        let zero_count = prior.alpha * (prior.beta / (prior.beta + 1.0)).ln();
        (1.0 - p_d + p_d * zero_count.exp()).ln()
    }
}

/// Point estimate of a target extent.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtentEstimate {
    pub matrix: DMatrix<f64>,
    /// Set when the inverse-Wishart mean does not exist and `V / v` was used.
    pub degraded: bool,
}

pub fn extent_point_estimate(params: &GgiwParams) -> ExtentEstimate {
    let d = params.dim() as f64;
    let denom = params.dof - 2.0 * d - 2.0;
    if denom > 0.0 {
        ExtentEstimate {
            matrix: &params.scale / denom,
            degraded: false,
        }
    } else {
        ExtentEstimate {
            matrix: &params.scale / params.dof,
            degraded: true,
        }
    }
}

/// Weighted mixture of GGIW densities.
#[derive(Debug, Clone, PartialEq)]
pub struct GgiwMixture {
    components: Vec<(f64, GgiwParams)>,
}

impl GgiwMixture {
    /// Builds a mixture, checking weights sum to one.
    pub fn new(components: Vec<(f64, GgiwParams)>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::Precondition("mixture must be non-empty".into()));
        }
        let total: f64 = components.iter().map(|(w, _)| w).sum();
        if (total - 1.0).abs() > 1e-9 || components.iter().any(|(w, _)| !(*w > 0.0 && *w <= 1.0 + 1e-12)) {
            return Err(Error::Precondition(format!(
                "mixture weights must lie in (0,1] and sum to 1 (sum = {total})"
            )));
        }
        Ok(Self { components })
    }

    pub fn single(params: GgiwParams) -> Self {
        Self {
            components: vec![(1.0, params)],
        }
    }

    /// Normalises non-negative weights; zero-weight entries are dropped.
    pub fn from_unnormalized(components: Vec<(f64, GgiwParams)>) -> Result<Self> {
        let total: f64 = components.iter().map(|(w, _)| w).sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::Precondition("mixture weights must have positive sum".into()));
        }
        let components = components
            .into_iter()
            .filter(|(w, _)| *w > 0.0)
            .map(|(w, p)| (w / total, p))
            .collect();
        Ok(Self { components })
    }

    /// Normalises log-domain weights.
    pub fn from_log_weights(components: Vec<(f64, GgiwParams)>) -> Result<Self> {
        let max = components
            .iter()
            .map(|(w, _)| *w)
            .fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return Err(Error::Precondition("mixture log-weights are all -inf".into()));
        }
        Self::from_unnormalized(
            components
                .into_iter()
                .map(|(w, p)| ((w - max).exp(), p))
                .collect(),
        )
    }

    pub fn components(&self) -> &[(f64, GgiwParams)] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// The highest-weight component (first on ties).
    pub fn dominant(&self) -> &GgiwParams {
        let mut best = &self.components[0];
        for c in &self.components[1..] {
            if c.0 > best.0 {
                best = c;
            }
        }
        &best.1
    }

    pub fn map(&self, f: impl Fn(&GgiwParams) -> Result<GgiwParams>) -> Result<Self> {
        Ok(Self {
            components: self
                .components
                .iter()
                .map(|(w, p)| Ok((*w, f(p)?)))
                .collect::<Result<_>>()?,
        })
    }

    /// Predicts every component.
    pub fn predict(&self, model: &MotionModel) -> Result<Self> {
        self.map(|p| predict_ggiw(p, model))
    }

    /// Updates every component with `group` and returns the posterior mixture
    /// together with the log evidence of the whole mixture.
    pub fn update(&self, group: &[DVector<f64>], h: &DVector<f64>) -> Result<(Self, f64)> {
        let mut parts = Vec::with_capacity(self.components.len());
        for (w, p) in &self.components {
            let (post, ev) = update_ggiw(p, group, h)?;
            parts.push((w.ln() + ev, post));
        }
        let log_ev = log_sum_exp(parts.iter().map(|(w, _)| *w));
        Ok((Self::from_log_weights(parts)?, log_ev))
    }

    /// Misdetection reweighting; returns the posterior and its log evidence.
    pub fn misdetect(&self, p_d: f64, literal: bool) -> (Self, f64) {
        if literal || self.components.len() == 1 {
            let ev = log_evidence_misdetect(self.dominant(), p_d, literal);
            return (self.clone(), ev);
        }
        let parts: Vec<(f64, GgiwParams)> = self
            .components
            .iter()
            .map(|(w, p)| (w.ln() + log_evidence_misdetect(p, p_d, false), p.clone()))
            .collect();
        let log_ev = log_sum_exp(parts.iter().map(|(w, _)| *w));
        match Self::from_log_weights(parts) {
            Ok(m) => (m, log_ev),
            Err(_) => (self.clone(), log_ev),
        }
    }
}

/// Numerically stable `log Σ exp(x_i)`; `-inf` for an empty or all `-inf` input.
pub fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + values.map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Pruning and merging settings for [`reduce_mixture`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReductionConfig {
    pub prune_threshold: f64,
    /// Squared Mahalanobis distance below which kinematic means are merged.
    pub merge_gate: f64,
    pub max_components: usize,
}

impl Default for ReductionConfig {
    fn default() -> Self {
        Self {
            prune_threshold: 1e-3,
            merge_gate: 1.0,
            max_components: 10,
        }
    }
}

fn kinematic_mahalanobis(
    anchor: &GgiwParams,
    anchor_extent_inv: &DMatrix<f64>,
    anchor_cov_inv: &DMatrix<f64>,
    other: &GgiwParams,
) -> f64 {
    let delta = other.mean_blocks() - anchor.mean_blocks();
    (anchor_cov_inv * &delta * anchor_extent_inv * delta.transpose()).trace()
}

fn spd_inverse(m: &DMatrix<f64>) -> DMatrix<f64> {
    m.clone()
        .cholesky()
        .map(|c| c.inverse())
        .unwrap_or_else(|| m.clone().pseudo_inverse(1e-12).unwrap_or_else(|_| DMatrix::zeros(m.nrows(), m.ncols())))
}

/// Prunes, merges and caps a mixture, then renormalises it.
pub fn reduce_mixture(mix: &GgiwMixture, cfg: &ReductionConfig) -> GgiwMixture {
    if mix.len() == 1 {
        return mix.clone();
    }
    let mut order: Vec<usize> = (0..mix.len()).collect();
    order.sort_by(|&a, &b| {
        mix.components[b]
            .0
            .partial_cmp(&mix.components[a].0)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut remaining: Vec<usize> = order
        .iter()
        .copied()
        .filter(|&i| mix.components[i].0 >= cfg.prune_threshold)
        .collect();
    if remaining.is_empty() {
        remaining.push(order[0]);
    }

    let mut merged: Vec<(f64, GgiwParams)> = Vec::new();
    while let Some(&lead) = remaining.first() {
        let anchor = &mix.components[lead].1;
        let extent_inv = spd_inverse(&anchor.extent_estimate().matrix);
        let cov_inv = spd_inverse(&anchor.cov);
        let (cluster, rest): (Vec<usize>, Vec<usize>) = remaining.iter().partition(|&&j| {
            j == lead
                || kinematic_mahalanobis(anchor, &extent_inv, &cov_inv, &mix.components[j].1)
                    <= cfg.merge_gate
        });
        remaining = rest;
        merged.push(merge_cluster(mix, &cluster, &extent_inv));
    }
    merged.truncate(cfg.max_components.max(1));
    GgiwMixture::from_unnormalized(merged).expect("reduced mixture keeps positive weight")
}

fn merge_cluster(mix: &GgiwMixture, cluster: &[usize], extent_inv: &DMatrix<f64>) -> (f64, GgiwParams) {
    let total: f64 = cluster.iter().map(|&j| mix.components[j].0).sum();
    let first = &mix.components[cluster[0]].1;
    if cluster.iter().all(|&j| &mix.components[j].1 == first) {
        return (total, first.clone());
    }
    let d = first.dim() as f64;
    let mut out = first.clone();
    let mut mean = DVector::zeros(first.mean.len());
    let (mut alpha, mut beta, mut dof) = (0.0, 0.0, 0.0);
    let mut scale = DMatrix::zeros(first.dim(), first.dim());
    for &j in cluster {
        let (w, p) = &mix.components[j];
        let f = w / total;
        mean += &p.mean * f;
        alpha += f * p.alpha;
        beta += f * p.beta;
        dof += f * p.dof;
        scale += &p.scale * f;
    }
    out.mean = mean;
    let merged_blocks = out.mean_blocks();
    let mut cov = DMatrix::zeros(first.order(), first.order());
    for &j in cluster {
        let (w, p) = &mix.components[j];
        let delta = p.mean_blocks() - &merged_blocks;
        let spread = &delta * extent_inv * delta.transpose() / d;
        cov += (&p.cov + spread) * (w / total);
    }
    symmetrize(&mut cov);
    out.cov = cov;
    out.alpha = alpha;
    out.beta = beta;
    out.dof = dof;
    out.scale = scale;
    (total, out)
}
