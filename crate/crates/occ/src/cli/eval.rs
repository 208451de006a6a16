use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{ArgAction, Args, ValueEnum};
use serde::Serialize;
use sparse_occ_core::metrics::{miou, rayiou, visibility_mask, voxelize, RaySet};
use sparse_occ_core::{ClassTaxonomy, SceneConfig, VoxelGrid};

use super::{read_points, write_json, GlobalArgs};
use crate::config::load_cameras;
use crate::formats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RayPreset {
    /// 32 rings x 360 azimuths, -30 to +10 degrees elevation.
    Lidar32,
    /// 16 x 16 frustum around +x, +-45 by +-20 degrees.
    Grid16,
}

#[derive(Debug, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct EvalArgs {
    /// Predicted grid (`OVG1`) or point set (`OPS1`/`.csv`, voxelized onto
    /// the ground-truth grid).
    #[arg(long)]
    pub pred: PathBuf,
    /// Ground-truth grid (`OVG1`).
    #[arg(long)]
    pub gt: PathBuf,
    #[arg(long, value_enum, default_value_t = RayPreset::Lidar32)]
    pub rays: RayPreset,
    /// Ray origin `x,y,z`; defaults to the footprint center 1 m above the
    /// grid floor.
    #[arg(long, action = ArgAction::Set, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub ray_origin: Vec<f64>,
    /// Ray length, meters; defaults to the grid diagonal.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub range: Option<f64>,
    /// Depth tolerances, meters.
    #[arg(long, action = ArgAction::Set, value_delimiter = ',', default_values_t = [1.0, 2.0, 4.0])]
    pub thresholds: Vec<f64>,
    /// JSON camera list; restricts mIoU to voxels they can see.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vis_mask: Option<PathBuf>,
    /// Pixel stride for `--vis-mask` rays.
    #[arg(long, default_value_t = 1)]
    pub vis_stride: usize,
}

#[derive(Debug, Serialize)]
struct ClassRow {
    class_id: u16,
    name: Option<String>,
    iou: Option<f64>,
}

#[derive(Debug, Serialize)]
struct ThresholdRow {
    threshold: f64,
    rayiou: f64,
}

#[derive(Debug, Serialize)]
struct EvalSummary {
    per_class: Vec<ClassRow>,
    miou: f64,
    evaluated_voxels: u64,
    dropped_points: Option<usize>,
    rayiou: Vec<ThresholdRow>,
    rayiou_mean: f64,
    rays: usize,
    monotone: bool,
}

fn load_pred(
    path: &std::path::Path,
    gt: &VoxelGrid,
    taxonomy: &ClassTaxonomy,
    seed: u64,
) -> Result<(VoxelGrid, Option<usize>)> {
    let is_grid = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("ovg"));
    if is_grid {
        let grid = formats::read_grid(path, taxonomy).with_context(|| format!("reading {}", path.display()))?;
        return Ok((grid, None));
    }
    let points = read_points(path, taxonomy)?;
    let cfg = SceneConfig::new(gt.origin(), gt.extent_max(), gt.voxel_size(), taxonomy.clone(), seed)?;
    let v = voxelize(&points, &cfg)?;
    Ok((v.grid, Some(v.dropped)))
}

pub fn run(args: &EvalArgs, global: &GlobalArgs, out: &mut dyn Write) -> Result<()> {
    let taxonomy = ClassTaxonomy::occ3d();
    let gt = formats::read_grid(&args.gt, &taxonomy).with_context(|| format!("reading {}", args.gt.display()))?;
    let (pred, dropped) = load_pred(&args.pred, &gt, &taxonomy, global.seed)?;

    let (lo, hi) = (gt.origin(), gt.extent_max());
    let origin = match args.ray_origin[..] {
        [] => [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1]), (lo[2] + 1.0).min(hi[2])],
        [x, y, z] => [x, y, z],
        _ => bail!("--ray-origin takes three values: x,y,z"),
    };
    let range = args
        .range
        .unwrap_or_else(|| ((hi[0] - lo[0]).powi(2) + (hi[1] - lo[1]).powi(2) + (hi[2] - lo[2]).powi(2)).sqrt());
    if !(range > 0.0) {
        bail!("--range must be positive");
    }
    let rays = match args.rays {
        RayPreset::Lidar32 => RaySet::lidar32(origin, range),
        RayPreset::Grid16 => RaySet::grid16(origin, range),
    };

    let mask = match &args.vis_mask {
        Some(path) => {
            let cams = load_cameras(path)?;
            Some(visibility_mask(&gt, &cams, args.vis_stride, range, taxonomy.free_id())?)
        }
        None => None,
    };
    let voxel = miou(&pred, &gt, mask.as_ref(), &taxonomy)?;
    let ray = rayiou(&pred, &gt, &rays, &args.thresholds, &taxonomy)?;

    let per_class: Vec<ClassRow> = voxel
        .per_class
        .iter()
        .map(|c| ClassRow {
            class_id: c.class_id,
            name: taxonomy.name(c.class_id).map(str::to_string),
            iou: c.iou,
        })
        .collect();
    for c in &per_class {
        let label = c.name.clone().unwrap_or_else(|| c.class_id.to_string());
        match c.iou {
            Some(v) => writeln!(out, "iou {label} {v:.6}")?,
            None => writeln!(out, "iou {label} n/a")?,
        }
    }
    writeln!(out, "miou {:.6}", voxel.miou)?;
    writeln!(out, "evaluated_voxels {}", voxel.evaluated_voxels)?;
    if let Some(d) = dropped {
        writeln!(out, "dropped_points {d}")?;
    }

    // Monotone in the threshold when thresholds are listed in ascending order.
    let mut sorted: Vec<_> = ray.per_threshold.iter().collect();
    sorted.sort_by(|a, b| a.threshold.total_cmp(&b.threshold));
    let monotone = sorted.windows(2).all(|w| w[0].score <= w[1].score);
    let rows: Vec<ThresholdRow> = ray
        .per_threshold
        .iter()
        .map(|t| ThresholdRow {
            threshold: t.threshold,
            rayiou: t.score,
        })
        .collect();
    for r in &rows {
        writeln!(out, "rayiou@{} {:.6}", r.threshold, r.rayiou)?;
    }
    writeln!(out, "rayiou_mean {:.6}", ray.mean)?;
    writeln!(out, "rays {}", ray.rays)?;
    writeln!(out, "monotone {monotone}")?;

    if let Some(path) = &global.out {
        write_json(
            path,
            &EvalSummary {
                per_class,
                miou: voxel.miou,
                evaluated_voxels: voxel.evaluated_voxels,
                dropped_points: dropped,
                rayiou: rows,
                rayiou_mean: ray.mean,
                rays: ray.rays,
                monotone,
            },
        )?;
    }
    Ok(())
}
