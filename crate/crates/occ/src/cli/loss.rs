use std::io::Write;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use clap::{ArgAction, Args};
use serde::Serialize;
use sparse_occ_core::losses::{total_loss, ClassWeights, QueryPoints, StagePrediction, TermKind};
use sparse_occ_core::matching::WeightFn;
use sparse_occ_core::{ClassTaxonomy, StageSchedule};

use super::{read_points, write_json, GlobalArgs};
use crate::config::{load_json, ClassWeightsDesc};
use crate::formats;

#[derive(Debug, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct LossArgs {
    /// Directory with `stage_0.ops` .. `stage_K.ops` and `stage_1.scrs` ..
    /// `stage_K.scrs`.
    #[arg(long)]
    pub stages: PathBuf,
    /// Ground-truth points (`OPS1` or `.csv`).
    #[arg(long)]
    pub gt: PathBuf,
    /// Built-in schedule: opus-t, opus-s, opus-m or opus-l.
    #[arg(long, default_value = "opus-m")]
    pub schedule: String,
    /// Custom points per query for every stage, initial stage first;
    /// replaces the built-in schedule.
    #[arg(long, action = ArgAction::Set, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub points_per_stage: Vec<usize>,
    /// Query count for `--points-per-stage`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub queries: Option<usize>,
    /// JSON `{"gamma": .., "weights": [..]}`; uniform weights with gamma 2
    /// when omitted.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub class_weights: Option<PathBuf>,
    /// Step weight as `threshold,high,low`.
    #[arg(long, action = ArgAction::Set, value_delimiter = ',', default_values_t = [0.2, 5.0, 1.0])]
    pub reweight: Vec<f64>,
}

#[derive(Debug, Serialize)]
struct TermRow {
    stage: usize,
    kind: &'static str,
    value: f64,
}

#[derive(Debug, Serialize)]
struct LossSummary {
    terms: Vec<TermRow>,
    total: f64,
}

fn schedule(args: &LossArgs) -> Result<StageSchedule> {
    if args.points_per_stage.is_empty() {
        if args.queries.is_some() {
            bail!("--queries needs --points-per-stage");
        }
        return StageSchedule::by_name(&args.schedule).ok_or_else(|| anyhow!("unknown schedule `{}`", args.schedule));
    }
    let q = args
        .queries
        .ok_or_else(|| anyhow!("--points-per-stage needs --queries"))?;
    // The sample count does not enter the loss.
    Ok(StageSchedule::new(q, args.points_per_stage.clone(), 1)?)
}

pub fn run(args: &LossArgs, global: &GlobalArgs, out: &mut dyn Write) -> Result<()> {
    let taxonomy = ClassTaxonomy::occ3d();
    let schedule = schedule(args)?;
    let [threshold, high, low] = args.reweight[..] else {
        bail!("--reweight takes exactly three values: threshold,high,low");
    };
    let w = WeightFn::new(threshold, high, low);
    let cw = match &args.class_weights {
        Some(path) => load_json::<ClassWeightsDesc>(path)?.build()?,
        None => ClassWeights::uniform(usize::from(taxonomy.num_semantic())),
    };
    let gt = read_points(&args.gt, &taxonomy)?;

    let q = schedule.query_count();
    let mut stages = Vec::with_capacity(schedule.points_per_stage().len());
    for (i, &r) in schedule.points_per_stage().iter().enumerate() {
        let ops = args.stages.join(format!("stage_{i}.ops"));
        if !ops.exists() {
            bail!("missing stage file {}", ops.display());
        }
        let positions = read_points(&ops, &taxonomy)?.into_parts().0;
        let points = QueryPoints::new(q, r, positions).with_context(|| format!("stage {i} in {}", ops.display()))?;
        let stage = if i == 0 {
            StagePrediction::initial(points)
        } else {
            let scrs = args.stages.join(format!("stage_{i}.scrs"));
            if !scrs.exists() {
                bail!("missing stage file {}", scrs.display());
            }
            let scores = formats::read_scores(&scrs).with_context(|| format!("reading {}", scrs.display()))?;
            StagePrediction::decoder(i, points, scores).with_context(|| format!("stage {i}"))?
        };
        stages.push(stage);
    }

    let breakdown = total_loss(&stages, &gt, &w, &cw)?;
    let terms: Vec<TermRow> = breakdown
        .terms
        .iter()
        .map(|t| TermRow {
            stage: t.stage,
            kind: match t.kind {
                TermKind::Chamfer => "chamfer",
                TermKind::Focal => "focal",
            },
            value: t.value,
        })
        .collect();
    for t in &terms {
        writeln!(out, "stage {} {} {:.9}", t.stage, t.kind, t.value)?;
    }
    writeln!(out, "terms {}", terms.len())?;
    writeln!(out, "total {:.9}", breakdown.total)?;
    if let Some(path) = &global.out {
        write_json(
            path,
            &LossSummary {
                terms,
                total: breakdown.total,
            },
        )?;
    }
    Ok(())
}
