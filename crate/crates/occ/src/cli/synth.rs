use std::io::Write;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use serde::Serialize;
use sparse_occ_core::synth::{generate_scene, perturb, PerturbParams};

use super::{write_points, GlobalArgs};
use crate::config::{load_json, SceneDesc};
use crate::formats;

#[derive(Debug, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct SynthArgs {
    /// JSON scene description.
    #[arg(long)]
    pub primitives: PathBuf,
    /// Where to write the `OVG1` grid.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<PathBuf>,
    /// Where to write a perturbed copy of the points (seeded with seed + 1).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pred: Option<PathBuf>,
    /// Gaussian jitter for `--pred`, meters.
    #[arg(long, default_value_t = 0.0)]
    pub noise_std: f64,
    /// Fraction of points dropped for `--pred`.
    #[arg(long, default_value_t = 0.0)]
    pub drop_frac: f64,
    /// Fraction of surviving labels flipped for `--pred`.
    #[arg(long, default_value_t = 0.0)]
    pub flip_frac: f64,
}

pub fn run(args: &SynthArgs, global: &GlobalArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let desc: SceneDesc = load_json(&args.primitives)?;
    let cfg = desc.scene_config(global.seed)?;
    let scene = generate_scene(&desc.primitives(), &cfg).context("generating scene")?;
    let taxonomy = cfg.taxonomy();

    writeln!(out, "primitives {}", desc.primitives.len())?;
    writeln!(out, "dims {:?}", cfg.dims())?;
    writeln!(out, "occupied_voxels {}", scene.grid.occupied_count(taxonomy.free_id()))?;
    writeln!(out, "points {}", scene.points.len())?;

    if let Some(path) = &global.out {
        write_points(path, &scene.points, taxonomy)?;
    } else {
        writeln!(err, "no --out given; points not written")?;
    }
    if let Some(path) = &args.grid {
        formats::write_grid(path, &scene.grid, taxonomy).with_context(|| format!("writing {}", path.display()))?;
    }
    if let Some(path) = &args.pred {
        let params = PerturbParams {
            noise_std: args.noise_std,
            drop_frac: args.drop_frac,
            class_flip_frac: args.flip_frac,
        };
        let pred = perturb(&scene.points, &params, taxonomy, global.seed.wrapping_add(1))?;
        write_points(path, &pred, taxonomy)?;
        writeln!(out, "pred_points {}", pred.len())?;
    }
    Ok(())
}
