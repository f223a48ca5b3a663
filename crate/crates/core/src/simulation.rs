//! Ground truth and measurement generation.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ggiw::MotionModel;
use crate::likelihood::ClutterModel;
use crate::rfs::Label;

/// Truth-side motion model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum MotionSpec {
    /// Position, velocity and exponentially correlated acceleration.
    Singer {
        period: f64,
        maneuver_time: f64,
        accel_std: f64,
    },
    ConstantVelocity { period: f64, accel_std: f64 },
}

impl MotionSpec {
    pub fn period(&self) -> f64 {
        match self {
            Self::Singer { period, .. } | Self::ConstantVelocity { period, .. } => *period,
        }
    }

    pub fn order(&self) -> usize {
        match self {
            Self::Singer { .. } => 3,
            Self::ConstantVelocity { .. } => 2,
        }
    }

    /// The filter-side model with the given forgetting factor and extent decay.
    pub fn model(&self, forgetting: f64, extent_decay: f64) -> Result<MotionModel> {
        match *self {
            Self::Singer {
                period,
                maneuver_time,
                accel_std,
            } => MotionModel::singer(period, maneuver_time, accel_std, forgetting, extent_decay),
            Self::ConstantVelocity { period, accel_std } => {
                MotionModel::constant_velocity(period, accel_std, forgetting, extent_decay)
            }
        }
    }
}

/// A position the target passes through at step `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Waypoint {
    pub k: u32,
    pub position: Vec<f64>,
}

/// How a target's kinematic state evolves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetPath {
    /// Piecewise-linear motion through the waypoints; acceleration is zero.
    Waypoints(Vec<Waypoint>),
    /// Full kinematic state at the birth step, propagated with the motion
    /// model and, if enabled, process noise.
    Initial(Vec<f64>),
}

fn default_rate() -> f64 {
    10.0
}

/// One ground-truth target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSpec {
    /// First step the target exists.
    pub birth: u32,
    /// Last step the target exists.
    pub death: u32,
    pub path: TargetPath,
    pub extent: Vec<Vec<f64>>,
    #[serde(default = "default_rate")]
    pub rate: f64,
    /// Overrides the scenario detection probability for this target.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_d: Option<f64>,
    /// Steps at which the target is never detected.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub forced_misses: Vec<u32>,
}

/// A complete scenario description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub steps: u32,
    pub seed: u64,
    pub motion: MotionSpec,
    #[serde(default)]
    pub process_noise: bool,
    /// Detection probability; also the value assumed by filters.
    pub p_d: f64,
    pub clutter: ClutterModel,
    pub targets: Vec<TargetSpec>,
}

/// Ground truth of one live target at one step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthRecord {
    pub label: Label,
    pub x: Vec<f64>,
    pub chi: Vec<Vec<f64>>,
    pub gamma: f64,
}

impl TruthRecord {
    pub fn position(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.x[..self.chi.len()])
    }

    pub fn extent(&self) -> DMatrix<f64> {
        matrix_from_rows(&self.chi)
    }
}

/// Truth and measurements of one scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub k: u32,
    pub truth: Vec<TruthRecord>,
    #[serde(rename = "Z")]
    pub z: Vec<Vec<f64>>,
}

impl StepRecord {
    pub fn measurements(&self) -> Vec<DVector<f64>> {
        self.z.iter().map(|p| DVector::from_column_slice(p)).collect()
    }
}

/// A generated scenario, one record per step.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScenarioLog {
    pub steps: Vec<StepRecord>,
}

impl ScenarioLog {
    /// Position of every target when first seen, in order of appearance.
    pub fn first_positions(&self) -> Vec<(Label, DVector<f64>)> {
        let mut seen = std::collections::BTreeSet::new();
        let mut out = Vec::new();
        for s in &self.steps {
            for t in &s.truth {
                if seen.insert(t.label) {
                    out.push((t.label, t.position()));
                }
            }
        }
        out
    }
}

pub(crate) fn matrix_from_rows(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let n = rows.len();
    DMatrix::from_fn(n, rows.first().map_or(0, Vec::len), |i, j| rows[i][j])
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidScenario(msg));
        if self.steps == 0 {
            return bad("scenario has no steps".into());
        }
        if !(0.0..=1.0).contains(&self.p_d) {
            return bad(format!("detection probability {} outside [0, 1]", self.p_d));
        }
        self.clutter
            .validate()
            .map_err(|e| Error::InvalidScenario(e.to_string()))?;
        let d = self.clutter.dim();
        let s = self.motion.order();
        if self.motion.period() <= 0.0 {
            return bad("period must be positive".into());
        }
        for (i, t) in self.targets.iter().enumerate() {
            if !(t.birth >= 1 && t.birth <= t.death && t.death <= self.steps) {
                return bad(format!("target {i}: need 1 <= birth <= death <= steps"));
            }
            if !(t.rate > 0.0) {
                return bad(format!("target {i}: rate must be positive"));
            }
            if let Some(p) = t.p_d {
                if !(0.0..=1.0).contains(&p) {
                    return bad(format!("target {i}: detection probability outside [0, 1]"));
                }
            }
            if t.extent.len() != d || t.extent.iter().any(|r| r.len() != d) {
                return bad(format!("target {i}: extent must be {d}x{d}"));
            }
            if matrix_from_rows(&t.extent).cholesky().is_none() {
                return bad(format!("target {i}: extent is not positive definite"));
            }
            match &t.path {
                TargetPath::Initial(x) => {
                    if x.len() != s * d {
                        return bad(format!("target {i}: initial state needs {} entries", s * d));
                    }
                }
                TargetPath::Waypoints(w) => {
                    if w.is_empty() || w.iter().any(|p| p.position.len() != d) {
                        return bad(format!("target {i}: waypoints need {d}-dimensional positions"));
                    }
                    if w.windows(2).any(|p| p[0].k >= p[1].k) {
                        return bad(format!("target {i}: waypoint steps must increase"));
                    }
                    if w.len() > 1 && (w[0].k > t.birth || w[w.len() - 1].k < t.death) {
                        return bad(format!("target {i}: waypoints must span its lifetime"));
                    }
                }
            }
        }
        Ok(())
    }

    /// The same scenario without forced misses.
    pub fn without_forced_misses(&self) -> Self {
        let mut s = self.clone();
        for t in &mut s.targets {
            t.forced_misses.clear();
        }
        s
    }
}

/// Kinematic state `[position, velocity, 0, ..]` at step `k` on a waypoint path.
fn waypoint_state(w: &[Waypoint], k: u32, order: usize, period: f64) -> Vec<f64> {
    let d = w[0].position.len();
    let seg = w
        .windows(2)
        .position(|p| k <= p[1].k)
        .unwrap_or(w.len().saturating_sub(2));
    let mut x = vec![0.0; order * d];
    if w.len() == 1 {
        x[..d].copy_from_slice(&w[0].position);
        return x;
    }
    let (a, b) = (&w[seg], &w[seg + 1]);
    let span = (b.k - a.k) as f64;
    let frac = (k as f64 - a.k as f64) / span;
    for j in 0..d {
        let delta = b.position[j] - a.position[j];
        x[j] = a.position[j] + frac * delta;
        if order > 1 {
            x[d + j] = delta / (span * period);
        }
    }
    x
}

fn poisson(rng: &mut ChaCha8Rng, mean: f64) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("positive Poisson mean").sample(rng) as usize
}

/// Generates truth and measurements for steps `1..=steps`.
///
/// Random draws do not depend on detection outcomes, so changing detection
/// settings leaves all other data of the log unchanged.
pub fn generate(spec: &ScenarioSpec) -> Result<ScenarioLog> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let d = spec.clutter.dim();
    let s = spec.motion.order();
    let model = spec.motion.model(2.0, 1.0)?;
    let f = model.transition.kronecker(&DMatrix::<f64>::identity(d, d));

    let chols: Vec<DMatrix<f64>> = spec
        .targets
        .iter()
        .map(|t| {
            matrix_from_rows(&t.extent)
                .cholesky()
                .expect("validated extent")
                .l()
        })
        .collect();
    let noise_chols: Vec<Option<DMatrix<f64>>> = spec
        .targets
        .iter()
        .map(|t| {
            let q = model.noise.kronecker(&matrix_from_rows(&t.extent));
            nalgebra::linalg::Cholesky::new(q.clone() + DMatrix::identity(s * d, s * d) * 1e-12)
                .map(|c| c.l())
        })
        .collect();
    let mut states: Vec<Option<DVector<f64>>> = vec![None; spec.targets.len()];

    let mut steps = Vec::with_capacity(spec.steps as usize);
    for k in 1..=spec.steps {
        let mut truth = Vec::new();
        let mut z = Vec::new();
        for (i, t) in spec.targets.iter().enumerate() {
            if k < t.birth || k > t.death {
                continue;
            }
            let x = match &t.path {
                TargetPath::Waypoints(w) => {
                    DVector::from_vec(waypoint_state(w, k, s, spec.motion.period()))
                }
                TargetPath::Initial(x0) => {
                    let next = match &states[i] {
                        None => DVector::from_column_slice(x0),
                        Some(prev) => {
                            let mut nx = &f * prev;
                            if spec.process_noise {
                                if let Some(l) = &noise_chols[i] {
                                    let e = DVector::from_fn(s * d, |_, _| {
                                        rng.sample::<f64, _>(StandardNormal)
                                    });
                                    nx += l * e;
                                }
                            }
                            nx
                        }
                    };
                    states[i] = Some(next.clone());
                    next
                }
            };

            let p_d = t.p_d.unwrap_or(spec.p_d);
            let u: f64 = rng.random();
            let n = poisson(&mut rng, t.rate);
            let detected = u < p_d && !t.forced_misses.contains(&k);
            let centre = x.rows(0, d).into_owned();
            for _ in 0..n {
                let e = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
                let p = &centre + &chols[i] * e;
                if detected {
                    z.push(p.iter().copied().collect::<Vec<f64>>());
                }
            }
            truth.push(TruthRecord {
                label: Label::new(t.birth, i as u32),
                x: x.iter().copied().collect(),
                chi: t.extent.clone(),
                gamma: t.rate,
            });
        }
        let n_clutter = poisson(&mut rng, spec.clutter.rate);
        for _ in 0..n_clutter {
            let p: Vec<f64> = spec
                .clutter
                .lower
                .iter()
                .zip(&spec.clutter.upper)
                .map(|(l, u)| rng.random_range(*l..*u))
                .collect();
            z.push(p);
        }
        steps.push(StepRecord { k, truth, z });
    }
    Ok(ScenarioLog { steps })
}

fn polar(radius: f64, degrees: f64) -> Vec<f64> {
    let a = degrees.to_radians();
    vec![radius * a.cos(), radius * a.sin()]
}

fn waypoints(points: &[(u32, Vec<f64>)]) -> TargetPath {
    TargetPath::Waypoints(
        points
            .iter()
            .map(|(k, p)| Waypoint {
                k: *k,
                position: p.clone(),
            })
            .collect(),
    )
}

fn target(birth: u32, death: u32, path: TargetPath, extent: [[f64; 2]; 2]) -> TargetSpec {
    TargetSpec {
        birth,
        death,
        path,
        extent: extent.iter().map(|r| r.to_vec()).collect(),
        rate: 10.0,
        p_d: None,
        forced_misses: Vec::new(),
    }
}

/// Radial path from the origin at `speed` m/s along `heading` degrees.
fn radial(birth: u32, death: u32, speed: f64, heading: f64, extent: [[f64; 2]; 2]) -> TargetSpec {
    let dist = speed * (death - birth) as f64;
    target(
        birth,
        death,
        waypoints(&[(birth, vec![0.0, 0.0]), (death, polar(dist, heading))]),
        extent,
    )
}

fn surveillance_region(rate: f64) -> ClutterModel {
    ClutterModel {
        rate,
        lower: vec![-1000.0, -1000.0],
        upper: vec![1000.0, 1000.0],
    }
}

const SINGER: MotionSpec = MotionSpec::Singer {
    period: 1.0,
    maneuver_time: 1.0,
    accel_std: 0.1,
};

/// Minimum gap between the two targets of scenario 2 while they run in
/// parallel.
pub const SCENARIO2_GAP: f64 = 20.0;

/// Built-in scenarios.
///
/// 1. Four targets leaving the origin at different times, 200 steps,
///    `p_D = 0.8`, 30 clutter points per scan.
/// 2. Two targets that approach, travel in parallel [`SCENARIO2_GAP`] apart
///    and separate, 100 steps, `p_D = 0.98`, 10 clutter points per scan.
/// 3. Two targets 1.2 km apart, 50 steps, filter `p_D = 0.9`, 10 clutter
///    points per scan. Both targets are always detected except target 1 at
///    steps 20, 40 and 41.
pub fn builtin_scenario(id: u32) -> Result<ScenarioSpec> {
    match id {
        1 => Ok(ScenarioSpec {
            steps: 200,
            seed: 1,
            motion: SINGER,
            process_noise: false,
            p_d: 0.8,
            clutter: surveillance_region(30.0),
            targets: vec![
                radial(1, 200, 4.0, 45.0, [[20.0, 6.0], [6.0, 12.0]]),
                radial(20, 150, 4.0, 160.0, [[16.0, 0.0], [0.0, 16.0]]),
                radial(40, 200, 4.5, 260.0, [[9.0, -3.0], [-3.0, 20.0]]),
                radial(70, 180, 3.5, 330.0, [[25.0, 0.0], [0.0, 9.0]]),
            ],
        }),
        2 => {
            let g = SCENARIO2_GAP / 2.0;
            let side = |sign: f64| {
                waypoints(&[
                    (1, vec![-450.0, sign * 150.0]),
                    (30, vec![-160.0, sign * g]),
                    (70, vec![240.0, sign * g]),
                    (100, vec![500.0, sign * 170.0]),
                ])
            };
            Ok(ScenarioSpec {
                steps: 100,
                seed: 2,
                motion: SINGER,
                process_noise: false,
                p_d: 0.98,
                clutter: surveillance_region(10.0),
                targets: vec![
                    target(1, 100, side(1.0), [[16.0, 0.0], [0.0, 6.0]]),
                    target(1, 100, side(-1.0), [[16.0, 0.0], [0.0, 6.0]]),
                ],
            })
        }
        3 => {
            let mut first = target(
                1,
                50,
                waypoints(&[(1, vec![-600.0, -100.0]), (50, vec![-600.0, 100.0])]),
                [[16.0, 0.0], [0.0, 9.0]],
            );
            first.p_d = Some(1.0);
            first.forced_misses = vec![20, 40, 41];
            let mut second = target(
                1,
                50,
                waypoints(&[(1, vec![600.0, 100.0]), (50, vec![600.0, -100.0])]),
                [[9.0, 0.0], [0.0, 16.0]],
            );
            second.p_d = Some(1.0);
            Ok(ScenarioSpec {
                steps: 50,
                seed: 3,
                motion: SINGER,
                process_noise: false,
                p_d: 0.9,
                clutter: surveillance_region(10.0),
                targets: vec![first, second],
            })
        }
        other => Err(Error::InvalidScenario(format!(
            "unknown built-in scenario {other}"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_target(rate: f64, p_d: f64, clutter: f64, steps: u32) -> ScenarioSpec {
        ScenarioSpec {
            steps,
            seed: 11,
            motion: SINGER,
            process_noise: false,
            p_d,
            clutter: surveillance_region(clutter),
            targets: vec![TargetSpec {
                rate,
                ..target(1, steps, waypoints(&[(1, vec![0.0, 0.0])]), [[4.0, 0.0], [0.0, 4.0]])
            }],
        }
    }

    #[test]
    fn builtin_parameters() {
        let s1 = builtin_scenario(1).unwrap();
        assert_eq!(s1.steps, 200);
        assert_eq!(s1.p_d, 0.8);
        assert_eq!(s1.clutter.rate, 30.0);
        assert_eq!(builtin_scenario(2).unwrap().p_d, 0.98);
        let s3 = builtin_scenario(3).unwrap();
        assert_eq!(s3.steps, 50);
        assert_eq!(s3.targets[0].forced_misses, vec![20, 40, 41]);
        assert!(builtin_scenario(9).is_err());
        for id in 1..=3 {
            builtin_scenario(id).unwrap().validate().unwrap();
        }
    }

    #[test]
    fn scenario3_forced_misses() {
        let log = generate(&builtin_scenario(3).unwrap()).unwrap();
        assert_eq!(log.steps.len(), 50);
        for step in &log.steps {
            let c = step.truth[0].position();
            let near_first = step
                .z
                .iter()
                .filter(|p| (DVector::from_column_slice(p) - &c).norm() < 30.0)
                .count();
            if [20, 40, 41].contains(&step.k) {
                assert_eq!(near_first, 0, "step {}", step.k);
            } else {
                assert!(near_first > 0, "step {}", step.k);
            }
        }
        let counter = generate(&builtin_scenario(3).unwrap().without_forced_misses()).unwrap();
        for (a, b) in log.steps.iter().zip(&counter.steps) {
            assert_eq!(a.truth, b.truth);
            if ![20, 40, 41].contains(&a.k) {
                assert_eq!(a.z, b.z);
            } else {
                assert!(b.z.len() > a.z.len());
            }
        }
    }

    #[test]
    fn silent_scenario_is_empty() {
        let log = generate(&single_target(10.0, 0.0, 0.0, 20)).unwrap();
        assert!(log.steps.iter().all(|s| s.z.is_empty()));
        assert!(log.steps.iter().all(|s| s.truth.len() == 1));
    }

    #[test]
    fn detection_counts_are_poisson() {
        let steps = 10_000;
        let log = generate(&single_target(10.0, 1.0, 0.0, steps)).unwrap();
        let counts: Vec<f64> = log.steps.iter().map(|s| s.z.len() as f64).collect();
        let mean = counts.iter().sum::<f64>() / steps as f64;
        assert!((mean - 10.0).abs() < 3.0 * (10.0f64 / steps as f64).sqrt(), "{mean}");
    }

    #[test]
    fn clutter_counts_are_poisson() {
        let steps = 1000;
        let log = generate(&single_target(10.0, 0.0, 30.0, steps)).unwrap();
        let mean = log.steps.iter().map(|s| s.z.len() as f64).sum::<f64>() / steps as f64;
        assert!((mean - 30.0).abs() < 3.0 * (30.0f64 / steps as f64).sqrt(), "{mean}");
        let region = surveillance_region(30.0);
        for s in &log.steps {
            for p in &s.z {
                assert!(region.contains(&DVector::from_column_slice(p)));
            }
        }
    }

    #[test]
    fn same_seed_same_log() {
        let spec = builtin_scenario(1).unwrap();
        assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
        let mut other = spec.clone();
        other.seed += 1;
        assert_ne!(generate(&spec).unwrap(), generate(&other).unwrap());
    }

    #[test]
    fn truth_labels_and_margins() {
        for id in 1..=3 {
            let spec = builtin_scenario(id).unwrap();
            let log = generate(&spec).unwrap();
            let firsts = log.first_positions();
            assert_eq!(firsts.len(), spec.targets.len());
            for s in &log.steps {
                for t in &s.truth {
                    let p = t.position();
                    assert!(p.iter().all(|v| v.abs() < 900.0));
                }
            }
        }
    }

    #[test]
    fn waypoint_velocity() {
        let w = vec![
            Waypoint { k: 1, position: vec![0.0, 0.0] },
            Waypoint { k: 11, position: vec![10.0, -20.0] },
        ];
        let x = waypoint_state(&w, 6, 3, 1.0);
        assert_eq!(x, vec![5.0, -10.0, 1.0, -2.0, 0.0, 0.0]);
    }

    #[test]
    fn initial_state_propagation() {
        let mut spec = single_target(5.0, 1.0, 0.0, 4);
        spec.targets[0].path = TargetPath::Initial(vec![0.0, 0.0, 1.0, 2.0, 0.0, 0.0]);
        let log = generate(&spec).unwrap();
        assert_eq!(log.steps[3].truth[0].x[..2], [3.0, 6.0]);
    }

    #[test]
    fn spec_json_round_trip() {
        let spec = builtin_scenario(3).unwrap();
        let json = serde_json::to_string(&spec).unwrap();
        let back: ScenarioSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(spec, back);
        assert!(serde_json::from_str::<ScenarioSpec>(&json.replace("\"steps\"", "\"stepz\"")).is_err());
    }
}
