//! Timing comparison of one-to-one assignment against nearest-neighbor
//! matching, with power-law fits and report output.

mod fit;
mod report;

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sparse_occ_core::matching::{hungarian_match, reweighted_sum, DenseCost, Metric, NnIndex, WeightFn};
use sparse_occ_core::{ClassId, LabeledPointSet, Vec3};
use thiserror::Error;

use crate::config::{DEFAULT_ROI_MAX, DEFAULT_ROI_MIN};
use crate::mem;

pub use fit::{fit_power_law, fit_scaling_exponents, ScalingFit};
pub use report::{emit_report, render_svg, write_csv, BenchReport, HostInfo};

pub const DEFAULT_HUNGARIAN_CUTOFF: usize = 20_000;
pub const MIN_REPEATS: usize = 5;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("invalid bench parameters: {0}")]
    InvalidParameters(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Core(#[from] sparse_occ_core::Error),
    #[error("thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

pub type Result<T, E = BenchError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Hungarian,
    Chamfer,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Hungarian => "hungarian",
            Method::Chamfer => "chamfer",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub method: Method,
    pub n_points: usize,
    /// Median wall time over `repeats`; `None` when skipped.
    pub wall_time_ms: Option<f64>,
    /// Median time spent building the cost matrix, included in
    /// `wall_time_ms`. Hungarian only.
    pub cost_matrix_ms: Option<f64>,
    /// Largest heap growth seen in any repeat; `None` when unavailable.
    pub peak_extra_memory: Option<u64>,
    pub repeats: usize,
    pub seed: u64,
    pub threads: usize,
    pub skipped: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub sizes: Vec<usize>,
    pub repeats: usize,
    pub seed: u64,
    /// Hungarian runs above this size are recorded as skipped.
    pub hungarian_cutoff: usize,
    /// Worker threads for the timed sections.
    pub threads: usize,
}

impl BenchConfig {
    pub fn new(sizes: Vec<usize>, repeats: usize, seed: u64) -> Self {
        Self {
            sizes,
            repeats,
            seed,
            hungarian_cutoff: DEFAULT_HUNGARIAN_CUTOFF,
            threads: 1,
        }
    }

    fn check(&self) -> Result<()> {
        let bad = |m: &str| Err(BenchError::InvalidParameters(m.into()));
        if self.sizes.is_empty() {
            return bad("no sizes given");
        }
        if self.sizes.contains(&0) {
            return bad("sizes must be at least 1");
        }
        if self.sizes.windows(2).any(|w| w[0] >= w[1]) {
            return bad("sizes must be strictly ascending");
        }
        if self.repeats < MIN_REPEATS {
            return bad("at least 5 repeats are required");
        }
        if self.threads == 0 {
            return bad("threads must be at least 1");
        }
        Ok(())
    }
}

/// Predicted and ground-truth point sets of equal size, uniform over the
/// default region of interest. Ground truth carries uniform semantic labels.
pub fn bench_inputs(n: usize, seed: u64) -> (LabeledPointSet, LabeledPointSet) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(n as u64);
    let draw = |count: usize, rng: &mut ChaCha8Rng| -> Vec<Vec3> {
        (0..count)
            .map(|_| core::array::from_fn(|a| rng.random_range(DEFAULT_ROI_MIN[a]..DEFAULT_ROI_MAX[a])))
            .collect()
    };
    let pred = draw(n, &mut rng);
    let gt = draw(n, &mut rng);
    let classes = (0..n).map(|_| rng.random_range(0..17) as ClassId).collect();
    (
        LabeledPointSet::new(pred),
        LabeledPointSet::labeled(gt, classes).expect("lengths agree"),
    )
}

/// Output of one nearest-neighbor pipeline run.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    pub cd_value: f64,
    pub labels: Vec<ClassId>,
}

/// Builds both indices, evaluates the re-weighted Chamfer distance and
/// assigns labels by L2 nearest neighbor. Queries run on the ambient rayon
/// pool.
pub fn chamfer_pipeline(pred: &LabeledPointSet, gt: &LabeledPointSet, w: &WeightFn) -> Result<PipelineOutput> {
    let classes = gt.classes().ok_or(sparse_occ_core::Error::MissingLabels)?;
    let (p, g) = (pred.positions(), gt.positions());
    let gt_index = NnIndex::build_auto(g)?;
    let pred_index = NnIndex::build_auto(p)?;
    let per_pred: Vec<_> = p.par_iter().map(|&q| gt_index.nearest(q, Metric::L1)).collect();
    let per_gt: Vec<_> = g.par_iter().map(|&q| pred_index.nearest(q, Metric::L1)).collect();
    let cd_value = reweighted_sum(&per_pred, &per_gt, w);
    let labels = p
        .par_iter()
        .map(|&q| classes[gt_index.nearest(q, Metric::L2).index])
        .collect();
    Ok(PipelineOutput { cd_value, labels })
}

/// Labels each prediction with the class of its one-to-one L1 partner.
pub fn hungarian_labels(pred: &LabeledPointSet, gt: &LabeledPointSet) -> Result<Vec<ClassId>> {
    let classes = gt.classes().ok_or(sparse_occ_core::Error::MissingLabels)?;
    let cost = DenseCost::pairwise(pred.positions(), gt.positions(), Metric::L1);
    let a = hungarian_match(&cost)?;
    Ok(a.row_to_col(pred.len())
        .into_iter()
        .map(|c| classes[c.expect("square problem")])
        .collect())
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

fn ms(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1e3
}

fn max_peak(acc: Option<u64>, sample: Option<u64>) -> Option<u64> {
    match (acc, sample) {
        (Some(a), Some(b)) => Some(a.max(b)),
        (a, b) => a.or(b),
    }
}

/// Times both methods at each size. Inputs depend only on `seed` and `n`.
pub fn run_matching_bench(cfg: &BenchConfig) -> Result<Vec<BenchRecord>> {
    run_matching_bench_with(cfg, |_| {})
}

/// As [`run_matching_bench`], calling `progress` after each record.
pub fn run_matching_bench_with(cfg: &BenchConfig, mut progress: impl FnMut(&BenchRecord)) -> Result<Vec<BenchRecord>> {
    cfg.check()?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cfg.threads).build()?;
    let w = WeightFn::default();
    let mut records = Vec::with_capacity(2 * cfg.sizes.len());
    for &n in &cfg.sizes {
        let (pred, gt) = bench_inputs(n, cfg.seed);
        let base = BenchRecord {
            method: Method::Hungarian,
            n_points: n,
            wall_time_ms: None,
            cost_matrix_ms: None,
            peak_extra_memory: None,
            repeats: cfg.repeats,
            seed: cfg.seed,
            threads: cfg.threads,
            skipped: false,
        };

        let hungarian = if n > cfg.hungarian_cutoff {
            BenchRecord {
                skipped: true,
                ..base.clone()
            }
        } else {
            let (mut total, mut build, mut peak) = (Vec::new(), Vec::new(), None);
            for _ in 0..cfg.repeats {
                mem::reset_peak();
                let (t_total, t_build) = pool.install(|| -> Result<(f64, f64)> {
                    let t0 = Instant::now();
                    let cost = DenseCost::pairwise(pred.positions(), gt.positions(), Metric::L1);
                    let t_build = ms(t0);
                    std::hint::black_box(hungarian_match(&cost)?);
                    Ok((ms(t0), t_build))
                })?;
                peak = max_peak(peak, mem::peak_extra_bytes());
                total.push(t_total);
                build.push(t_build);
            }
            BenchRecord {
                wall_time_ms: Some(median(total)),
                cost_matrix_ms: Some(median(build)),
                peak_extra_memory: peak,
                ..base.clone()
            }
        };
        progress(&hungarian);
        records.push(hungarian);

        let (mut total, mut peak) = (Vec::new(), None);
        for _ in 0..cfg.repeats {
            mem::reset_peak();
            let t = pool.install(|| -> Result<f64> {
                let t0 = Instant::now();
                std::hint::black_box(chamfer_pipeline(&pred, &gt, &w)?);
                Ok(ms(t0))
            })?;
            peak = max_peak(peak, mem::peak_extra_bytes());
            total.push(t);
        }
        let chamfer = BenchRecord {
            method: Method::Chamfer,
            wall_time_ms: Some(median(total)),
            peak_extra_memory: peak,
            ..base
        };
        progress(&chamfer);
        records.push(chamfer);
    }
    Ok(records)
}

/// Hungarian median time over Chamfer median time at each size where both
/// ran.
pub fn speed_ratios(records: &[BenchRecord]) -> Vec<(usize, f64)> {
    let time = |m: Method, n: usize| {
        records
            .iter()
            .find(|r| r.method == m && r.n_points == n && !r.skipped)
            .and_then(|r| r.wall_time_ms)
    };
    let mut sizes: Vec<usize> = records.iter().map(|r| r.n_points).collect();
    sizes.dedup();
    sizes
        .into_iter()
        .filter_map(|n| Some((n, time(Method::Hungarian, n)? / time(Method::Chamfer, n)?)))
        .collect()
}
