//! Classification loss, initial point layouts, per-stage refinement and the
//! multi-stage training objective.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geom::{self, Vec3};
use crate::matching::{Matcher, WeightFn};
use crate::types::{ClassId, LabeledPointSet, SceneConfig};

/// Probabilities are clamped to this floor before taking the log.
pub const PROB_FLOOR: f64 = 1e-12;

/// Per-class focal weights and focusing parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassWeights {
    weights: Vec<f64>,
    gamma: f64,
}

impl ClassWeights {
    pub fn new(weights: Vec<f64>, gamma: f64) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidParameter("class weights must not be empty"));
        }
        if weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidParameter("class weights must be positive"));
        }
        if !(gamma >= 0.0) || !gamma.is_finite() {
            return Err(Error::InvalidParameter("gamma must be non-negative"));
        }
        Ok(Self { weights, gamma })
    }

    /// All-ones weights, `gamma = 2`.
    pub fn uniform(num_classes: usize) -> Self {
        Self::new(alloc::vec![1.0; num_classes.max(1)], 2.0).expect("uniform weights are valid")
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn num_classes(&self) -> usize {
        self.weights.len()
    }
}

/// Row-major `rows x num_classes` class probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassScores {
    num_classes: usize,
    data: Vec<f64>,
}

impl ClassScores {
    pub fn new(num_classes: usize, data: Vec<f64>) -> Result<Self> {
        if num_classes == 0 {
            return Err(Error::InvalidParameter("scores need at least one class"));
        }
        if data.len() % num_classes != 0 {
            return Err(Error::ShapeMismatch("score buffer is not a whole number of rows"));
        }
        Ok(Self { num_classes, data })
    }

    /// Scores with probability 1 on the given class of each row.
    pub fn one_hot(num_classes: usize, targets: &[ClassId]) -> Result<Self> {
        let mut data = alloc::vec![0.0; targets.len() * num_classes];
        for (r, &t) in targets.iter().enumerate() {
            if t as usize >= num_classes {
                return Err(Error::InvalidClassId(t));
            }
            data[r * num_classes + t as usize] = 1.0;
        }
        Self::new(num_classes, data)
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn rows(&self) -> usize {
        self.data.len() / self.num_classes
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.num_classes..(r + 1) * self.num_classes]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

/// Mean over rows of `w[t] · (1 − p_t)^γ · (−ln p_t)`.
pub fn focal_loss_reweighted(scores: &ClassScores, targets: &[ClassId], w: &ClassWeights) -> Result<f64> {
    if scores.rows() != targets.len() {
        return Err(Error::LengthMismatch {
            expected: scores.rows(),
            found: targets.len(),
        });
    }
    if w.num_classes() != scores.num_classes() {
        return Err(Error::LengthMismatch {
            expected: scores.num_classes(),
            found: w.num_classes(),
        });
    }
    if targets.is_empty() {
        return Err(Error::EmptySet);
    }
    for (i, p) in scores.data().iter().enumerate() {
        if !(0.0..=1.0).contains(p) {
            return Err(Error::ProbabilityOutOfRange {
                row: i / scores.num_classes(),
                class: i % scores.num_classes(),
            });
        }
    }
    let mut sum = 0.0;
    for (r, &t) in targets.iter().enumerate() {
        let t = t as usize;
        if t >= scores.num_classes() {
            return Err(Error::InvalidClassId(t as ClassId));
        }
        let p_t = scores.row(r)[t];
        let modulator = if w.gamma == 0.0 {
            1.0
        } else {
            libm::pow(1.0 - p_t, w.gamma)
        };
        sum += w.weights[t] * modulator * -libm::log(p_t.max(PROB_FLOOR));
    }
    Ok(sum / targets.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitStrategy {
    /// Pillar centers of an even BEV grid at mid height, x fastest.
    Grid,
    /// I.i.d. uniform in the region of interest.
    Random,
}

pub fn init_points(strategy: InitStrategy, cfg: &SceneConfig, count: usize) -> Result<LabeledPointSet> {
    if count == 0 {
        return Err(Error::InvalidParameter("count must be at least 1"));
    }
    let (lo, hi) = (cfg.roi_min(), cfg.roi_max());
    let positions = match strategy {
        InitStrategy::Grid => {
            let (small, large) = bev_factors(count).ok_or(Error::CountNotRepresentable(count))?;
            // The longer ROI side gets the larger count.
            let (nx, ny) = if hi[0] - lo[0] >= hi[1] - lo[1] {
                (large, small)
            } else {
                (small, large)
            };
            let dx = (hi[0] - lo[0]) / nx as f64;
            let dy = (hi[1] - lo[1]) / ny as f64;
            let z = 0.5 * (lo[2] + hi[2]);
            let mut out = Vec::with_capacity(count);
            for j in 0..ny {
                for i in 0..nx {
                    out.push([lo[0] + (i as f64 + 0.5) * dx, lo[1] + (j as f64 + 0.5) * dy, z]);
                }
            }
            out
        }
        InitStrategy::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed());
            (0..count)
                .map(|_| {
                    [
                        rng.random_range(lo[0]..hi[0]),
                        rng.random_range(lo[1]..hi[1]),
                        rng.random_range(lo[2]..hi[2]),
                    ]
                })
                .collect()
        }
    };
    Ok(LabeledPointSet::new(positions))
}

/// Largest divisor `a <= sqrt(count)` with `b = count / a`, accepted when
/// `b <= 2a`.
fn bev_factors(count: usize) -> Option<(usize, usize)> {
    let mut a = libm::sqrt(count as f64) as usize;
    while a * a > count {
        a -= 1;
    }
    while (a + 1) * (a + 1) <= count {
        a += 1;
    }
    while a > 0 && count % a != 0 {
        a -= 1;
    }
    let b = count / a;
    (b <= 2 * a).then_some((a, b))
}

/// `Q x R x 3` positions, query-major.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryPoints {
    query_count: usize,
    points_per_query: usize,
    positions: Vec<Vec3>,
}

impl QueryPoints {
    pub fn new(query_count: usize, points_per_query: usize, positions: Vec<Vec3>) -> Result<Self> {
        if query_count == 0 || points_per_query == 0 {
            return Err(Error::ShapeMismatch("query and point counts must be positive"));
        }
        if positions.len() != query_count * points_per_query {
            return Err(Error::LengthMismatch {
                expected: query_count * points_per_query,
                found: positions.len(),
            });
        }
        Ok(Self {
            query_count,
            points_per_query,
            positions,
        })
    }

    pub fn query_count(&self) -> usize {
        self.query_count
    }

    pub fn points_per_query(&self) -> usize {
        self.points_per_query
    }

    pub fn positions(&self) -> &[Vec3] {
        &self.positions
    }

    pub fn query(&self, q: usize) -> &[Vec3] {
        &self.positions[q * self.points_per_query..(q + 1) * self.points_per_query]
    }

    pub fn into_positions(self) -> Vec<Vec3> {
        self.positions
    }
}

/// Next-stage positions: each query's previous mean, repeated `R_i` times,
/// plus the predicted offsets.
pub fn refine_points(prev: &QueryPoints, offsets: &QueryPoints) -> Result<QueryPoints> {
    if prev.query_count != offsets.query_count {
        return Err(Error::ShapeMismatch(
            "previous points and offsets disagree on query count",
        ));
    }
    if prev.points_per_query > offsets.points_per_query {
        return Err(Error::ScheduleViolation(
            "points per query must not decrease between stages",
        ));
    }
    let mut out = Vec::with_capacity(offsets.positions.len());
    for q in 0..prev.query_count {
        let m = geom::mean(prev.query(q));
        out.extend(offsets.query(q).iter().map(|d| geom::add(m, *d)));
    }
    QueryPoints::new(prev.query_count, offsets.points_per_query, out)
}

/// Positions (and, after stage 0, class probabilities) emitted at one stage.
#[derive(Debug, Clone, PartialEq)]
pub struct StagePrediction {
    stage_index: usize,
    points: QueryPoints,
    class_scores: Option<ClassScores>,
}

impl StagePrediction {
    pub fn initial(points: QueryPoints) -> Self {
        Self {
            stage_index: 0,
            points,
            class_scores: None,
        }
    }

    pub fn decoder(stage_index: usize, points: QueryPoints, class_scores: ClassScores) -> Result<Self> {
        if stage_index == 0 {
            return Err(Error::ScheduleViolation("stage 0 carries positions only"));
        }
        if class_scores.rows() != points.positions().len() {
            return Err(Error::LengthMismatch {
                expected: points.positions().len(),
                found: class_scores.rows(),
            });
        }
        for (i, p) in class_scores.data().iter().enumerate() {
            if !(0.0..=1.0).contains(p) {
                return Err(Error::ProbabilityOutOfRange {
                    row: i / class_scores.num_classes(),
                    class: i % class_scores.num_classes(),
                });
            }
        }
        Ok(Self {
            stage_index,
            points,
            class_scores: Some(class_scores),
        })
    }

    pub fn stage_index(&self) -> usize {
        self.stage_index
    }

    pub fn points(&self) -> &QueryPoints {
        &self.points
    }

    pub fn class_scores(&self) -> Option<&ClassScores> {
        self.class_scores.as_ref()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TermKind {
    Chamfer,
    Focal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossTerm {
    pub stage: usize,
    pub kind: TermKind,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossBreakdown {
    /// Stage 0 Chamfer, then Chamfer and focal for each decoder stage.
    pub terms: Vec<LossTerm>,
    /// Sum of `terms` in order.
    pub total: f64,
}

/// `CD_R(P_0, G) + Σ_i [CD_R(P_i, G) + Focal_R(C_i, Ĉ_i)]`, where `Ĉ_i` comes
/// from nearest-neighbor label assignment.
pub fn total_loss(
    stages: &[StagePrediction],
    gt: &LabeledPointSet,
    w: &WeightFn,
    cw: &ClassWeights,
) -> Result<LossBreakdown> {
    total_loss_with(&Matcher::default(), stages, gt, w, cw)
}

pub fn total_loss_with(
    matcher: &Matcher,
    stages: &[StagePrediction],
    gt: &LabeledPointSet,
    w: &WeightFn,
    cw: &ClassWeights,
) -> Result<LossBreakdown> {
    let first = stages.first().ok_or(Error::ScheduleViolation("stage 0 is missing"))?;
    if first.stage_index != 0 || first.class_scores.is_some() {
        return Err(Error::ScheduleViolation(
            "the first stage must be stage 0 without class scores",
        ));
    }
    if !gt.is_labeled() {
        return Err(Error::MissingLabels);
    }
    for (i, pair) in stages.windows(2).enumerate() {
        let (prev, next) = (&pair[0], &pair[1]);
        if next.stage_index != i + 1 {
            return Err(Error::ScheduleViolation("stages must be consecutive starting at 0"));
        }
        if next.points.query_count != prev.points.query_count {
            return Err(Error::ScheduleViolation("query count changes between stages"));
        }
        if next.points.points_per_query < prev.points.points_per_query {
            return Err(Error::ScheduleViolation(
                "points per query must not decrease between stages",
            ));
        }
    }

    let mut terms = Vec::with_capacity(2 * stages.len() - 1);
    for stage in stages {
        let pred = LabeledPointSet::new(stage.points.positions.clone());
        let cd = matcher.chamfer(&pred, gt, w)?.cd_value;
        terms.push(LossTerm {
            stage: stage.stage_index,
            kind: TermKind::Chamfer,
            value: cd,
        });
        if let Some(scores) = &stage.class_scores {
            let targets = matcher.assign_labels(&pred, gt)?;
            terms.push(LossTerm {
                stage: stage.stage_index,
                kind: TermKind::Focal,
                value: focal_loss_reweighted(scores, &targets, cw)?,
            });
        }
    }
    let mut total = 0.0;
    for t in &terms {
        total += t.value;
    }
    Ok(LossBreakdown { terms, total })
}
