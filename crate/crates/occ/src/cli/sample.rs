use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{ArgAction, Args};
use serde::Serialize;
use sparse_occ_core::sampling::{
    aggregate_features, compute_sample_points, default_sigma_min, project_and_mask, SampleContext,
};
use sparse_occ_core::Vec3;

use super::{write_json, GlobalArgs};
use crate::config::{load_json, CameraDesc, SampleQuery, DEFAULT_VOXEL_SIZE};
use crate::formats;

#[derive(Debug, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct SampleArgs {
    /// JSON query: points, offsets, optional weights and sigma_min, cameras.
    #[arg(long)]
    pub query: PathBuf,
    /// One `FMAP` feature map per camera, in camera order.
    #[arg(long, action = ArgAction::Set, value_delimiter = ',', required = true)]
    pub fmaps: Vec<PathBuf>,
    /// Voxel size used for the default spread floor (half a voxel).
    #[arg(long, default_value_t = DEFAULT_VOXEL_SIZE)]
    pub voxel_size: f64,
}

#[derive(Debug, Serialize)]
struct SampleSummary {
    sample_points: Vec<Vec3>,
    /// Visibility per sample, one flag per camera.
    visible: Vec<Vec<bool>>,
    visible_pairs: usize,
    feature: Vec<f64>,
}

pub fn run(args: &SampleArgs, global: &GlobalArgs, out: &mut dyn Write) -> Result<()> {
    let desc: SampleQuery = load_json(&args.query)?;
    let cams = desc.cameras.iter().map(CameraDesc::build).collect::<Result<Vec<_>>>()?;
    if cams.len() != args.fmaps.len() {
        bail!("{} cameras but {} feature maps", cams.len(), args.fmaps.len());
    }
    let fms = args
        .fmaps
        .iter()
        .map(|p| formats::read_fmap(p).with_context(|| format!("reading {}", p.display())))
        .collect::<Result<Vec<_>>>()?;
    let s = desc.offsets.len();
    let weights = desc.weights.clone().unwrap_or_else(|| vec![1.0; s * cams.len()]);
    let ctx = SampleContext::from_points(&desc.points, desc.offsets.clone(), weights)?;
    let sigma_min = desc.sigma_min.unwrap_or_else(|| default_sigma_min(args.voxel_size));
    let samples = compute_sample_points(&ctx, sigma_min);
    let proj = project_and_mask(&samples, &cams);
    let feature = aggregate_features(&fms, &proj, &ctx.weights)?;

    let visible: Vec<Vec<bool>> = (0..samples.len())
        .map(|i| (0..cams.len()).map(|m| proj.is_visible(i, m)).collect())
        .collect();
    for (i, p) in samples.iter().enumerate() {
        let flags: String = visible[i].iter().map(|&v| if v { '1' } else { '0' }).collect();
        writeln!(out, "sample {i} {:.6} {:.6} {:.6} visible {flags}", p[0], p[1], p[2])?;
    }
    writeln!(out, "visible_pairs {}", proj.visible_count())?;
    let values: Vec<String> = feature.iter().map(|v| format!("{v:.9}")).collect();
    writeln!(out, "feature {}", values.join(" "))?;

    if let Some(path) = &global.out {
        write_json(
            path,
            &SampleSummary {
                sample_points: samples,
                visible,
                visible_pairs: proj.visible_count(),
                feature,
            },
        )?;
    }
    Ok(())
}
