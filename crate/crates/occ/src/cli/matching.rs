use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Result};
use clap::{ArgAction, Args, ValueEnum};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sparse_occ_core::matching::{hungarian_match_points, Matcher, Metric, WeightFn};
use sparse_occ_core::{ClassTaxonomy, LabeledPointSet};

use super::{read_points, write_json, GlobalArgs};

#[derive(Debug, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct MatchArgs {
    /// Predicted points (`OPS1` or `.csv`).
    #[arg(long)]
    pub pred: PathBuf,
    /// Ground-truth points (`OPS1` or `.csv`).
    #[arg(long)]
    pub gt: PathBuf,
    /// Step weight as `threshold,high,low`.
    #[arg(long, action = ArgAction::Set, value_delimiter = ',', default_values_t = [0.2, 5.0, 1.0])]
    pub reweight: Vec<f64>,
    /// Compare the analytic gradient with central differences.
    #[arg(long)]
    pub grad: bool,
    /// Prediction points checked by `--grad`, drawn with `--seed`.
    #[arg(long, default_value_t = 64)]
    pub grad_points: usize,
    /// Finite-difference step for `--grad`, meters.
    #[arg(long, default_value_t = 1e-4)]
    pub grad_step: f64,
    /// Also solve the one-to-one assignment.
    #[arg(long)]
    pub hungarian: bool,
    /// Point distance used as the `--hungarian` cost.
    #[arg(long, value_enum, default_value_t = CostMetric::L1)]
    pub hungarian_metric: CostMetric,
    /// Nearest-neighbor grid cell size, meters; sized from the data when
    /// omitted.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cell_size: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CostMetric {
    L1,
    L2,
}

impl From<CostMetric> for Metric {
    fn from(m: CostMetric) -> Self {
        match m {
            CostMetric::L1 => Metric::L1,
            CostMetric::L2 => Metric::L2,
        }
    }
}

#[derive(Debug, Serialize)]
struct GradCheck {
    checked_points: usize,
    step: f64,
    max_relative_error: f64,
}

#[derive(Debug, Serialize)]
struct HungarianSummary {
    total_cost: f64,
    pairs: usize,
    time_ms: f64,
}

#[derive(Debug, Serialize)]
struct MatchSummary {
    pred_points: usize,
    gt_points: usize,
    cd: f64,
    cd_r: f64,
    /// Share of predictions whose own class equals the assigned class.
    agreement: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    grad_check: Option<GradCheck>,
    #[serde(skip_serializing_if = "Option::is_none")]
    hungarian: Option<HungarianSummary>,
}

pub fn run(args: &MatchArgs, global: &GlobalArgs, out: &mut dyn Write) -> Result<()> {
    let taxonomy = ClassTaxonomy::occ3d();
    let pred = read_points(&args.pred, &taxonomy)?;
    let gt = read_points(&args.gt, &taxonomy)?;
    let [threshold, high, low] = args.reweight[..] else {
        bail!("--reweight takes exactly three values: threshold,high,low");
    };
    let w = WeightFn::new(threshold, high, low);
    let matcher = args.cell_size.map_or_else(Matcher::default, Matcher::with_cell_size);

    let cd = matcher.chamfer(&pred, &gt, &WeightFn::unit())?.cd_value;
    let cd_r = matcher.chamfer(&pred, &gt, &w)?.cd_value;
    writeln!(out, "pred_points {}", pred.len())?;
    writeln!(out, "gt_points {}", gt.len())?;
    writeln!(out, "cd {cd:.9}")?;
    writeln!(out, "cd_r {cd_r:.9}")?;

    let agreement = match (pred.classes(), gt.is_labeled()) {
        (Some(own), true) => {
            let assigned = matcher.assign_labels(&pred, &gt)?;
            let same = own.iter().zip(&assigned).filter(|(a, b)| a == b).count();
            Some(same as f64 / pred.len() as f64)
        }
        _ => None,
    };
    match agreement {
        Some(a) => writeln!(out, "agreement {:.4}%", 100.0 * a)?,
        None => writeln!(out, "agreement n/a (both sets need labels)")?,
    }

    let grad_check = if args.grad {
        let g = gradient_check(&matcher, &pred, &gt, &w, args.grad_points, args.grad_step, global.seed)?;
        writeln!(out, "grad_checked_points {}", g.checked_points)?;
        writeln!(out, "grad_max_relative_error {:.3e}", g.max_relative_error)?;
        Some(g)
    } else {
        None
    };

    let hungarian = if args.hungarian {
        let t0 = Instant::now();
        let a = hungarian_match_points(pred.positions(), gt.positions(), args.hungarian_metric.into())?;
        let h = HungarianSummary {
            total_cost: a.total_cost,
            pairs: a.pairs.len(),
            time_ms: t0.elapsed().as_secs_f64() * 1e3,
        };
        writeln!(out, "hungarian_cost {:.9}", h.total_cost)?;
        writeln!(out, "hungarian_pairs {}", h.pairs)?;
        writeln!(out, "hungarian_ms {:.3}", h.time_ms)?;
        Some(h)
    } else {
        None
    };

    if let Some(path) = &global.out {
        let summary = MatchSummary {
            pred_points: pred.len(),
            gt_points: gt.len(),
            cd,
            cd_r,
            agreement,
            grad_check,
            hungarian,
        };
        write_json(path, &summary)?;
    }
    Ok(())
}

/// Central differences of the re-weighted distance at a seeded subset of
/// predictions, compared component-wise with the analytic gradient.
fn gradient_check(
    matcher: &Matcher,
    pred: &LabeledPointSet,
    gt: &LabeledPointSet,
    w: &WeightFn,
    points: usize,
    h: f64,
    seed: u64,
) -> Result<GradCheck> {
    if !(h > 0.0) {
        bail!("--grad-step must be positive");
    }
    let analytic = matcher.gradient(pred, gt, w)?;
    let n = pred.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = sample(&mut rng, n, points.min(n)).into_vec();
    chosen.sort_unstable();

    let mut work = pred.positions().to_vec();
    let eval = |work: &[[f64; 3]]| -> Result<f64> {
        Ok(matcher.chamfer(&LabeledPointSet::new(work.to_vec()), gt, w)?.cd_value)
    };
    let mut max_err: f64 = 0.0;
    for &i in &chosen {
        for a in 0..3 {
            let x = work[i][a];
            work[i][a] = x + h;
            let up = eval(&work)?;
            work[i][a] = x - h;
            let down = eval(&work)?;
            work[i][a] = x;
            let numeric = (up - down) / (2.0 * h);
            let exact = analytic[i][a];
            let err = (exact - numeric).abs() / exact.abs().max(numeric.abs()).max(1e-6);
            max_err = max_err.max(err);
        }
    }
    Ok(GradCheck {
        checked_points: chosen.len(),
        step: h,
        max_relative_error: max_err,
    })
}
