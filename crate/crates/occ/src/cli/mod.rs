//! The `sparse-occ` command line.
//!
//! Every run echoes its resolved configuration to stderr as one JSON object
//! prefixed with `config: `. Saving that object to a file and passing it via
//! `--config` reproduces the run; flags given on the command line override
//! values from the file.

mod bench;
mod eval;
mod loss;
mod matching;
mod sample;
mod synth;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{Map, Value};
use sparse_occ_core::{ClassTaxonomy, LabeledPointSet};

use crate::formats;

#[derive(Debug, Parser, Serialize)]
#[command(
    name = "sparse-occ",
    version,
    about = "Sparse occupancy matching, losses and metrics",
    args_override_self = true
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct GlobalArgs {
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; defaults to all cores (bench timing stays
    /// single-threaded unless `--parallel` is given).
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    /// Primary output file of the subcommand.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// JSON object of flag values, applied before command-line flags.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Generate a synthetic scene (points to `--out`, grid to `--grid`).
    Synth(synth::SynthArgs),
    /// Chamfer distances, label agreement and optional checks between two
    /// point sets.
    Match(matching::MatchArgs),
    /// Multi-stage training loss for a directory of stage predictions.
    Loss(loss::LossArgs),
    /// Voxel mIoU and RayIoU of a prediction against a ground-truth grid.
    Eval(eval::EvalArgs),
    /// Time one-to-one assignment against nearest-neighbor matching.
    Bench(bench::BenchArgs),
    /// Place sample points for one query and aggregate image features.
    Sample(sample::SampleArgs),
}

const SUBCOMMANDS: [&str; 6] = ["synth", "match", "loss", "eval", "bench", "sample"];
const VALUE_FLAGS: [&str; 4] = ["--seed", "--threads", "--out", "--config"];

/// Rewrites `argv` so that values from a `--config` file come first and
/// command-line flags override them.
pub fn expand_config(argv: Vec<OsString>) -> Result<Vec<OsString>> {
    let Some(path) = find_config(&argv) else {
        return Ok(argv);
    };
    let text = std::fs::read_to_string(&path).with_context(|| format!("reading config {}", path.display()))?;
    let value: Value = serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
    let Value::Object(map) = value else {
        bail!("config {} must hold a JSON object", path.display());
    };

    let mut rest: Vec<OsString> = argv.iter().skip(1).cloned().collect();
    let position = subcommand_position(&rest);
    let command = match (position, map.get("command")) {
        (Some(i), file) => {
            let cmd = rest.remove(i);
            if let Some(Value::String(f)) = file {
                if cmd.to_str() != Some(f.as_str()) {
                    bail!(
                        "config {} is for `{f}`, not `{}`",
                        path.display(),
                        cmd.to_string_lossy()
                    );
                }
            }
            cmd
        }
        (None, Some(Value::String(f))) => OsString::from(f),
        (None, _) => bail!("no subcommand given"),
    };
    let mut out = vec![argv[0].clone(), command];
    out.extend(config_flags(&map)?);
    out.extend(rest);
    Ok(out)
}

fn find_config(argv: &[OsString]) -> Option<PathBuf> {
    let mut found = None;
    let mut it = argv.iter().skip(1);
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            found = it.next().map(PathBuf::from);
        } else if let Some(v) = s.strip_prefix("--config=") {
            found = Some(PathBuf::from(v));
        }
    }
    found
}

fn subcommand_position(args: &[OsString]) -> Option<usize> {
    let mut i = 0;
    while i < args.len() {
        let s = args[i].to_string_lossy();
        if SUBCOMMANDS.contains(&s.as_ref()) {
            return Some(i);
        }
        i += if VALUE_FLAGS.contains(&s.as_ref()) { 2 } else { 1 };
    }
    None
}

fn config_flags(map: &Map<String, Value>) -> Result<Vec<OsString>> {
    let mut out = Vec::new();
    for (key, value) in map {
        if key == "command" || key == "config" {
            continue;
        }
        let flag = format!("--{key}");
        let scalar = |v: &Value| -> Result<String> {
            Ok(match v {
                Value::String(s) => s.clone(),
                Value::Number(n) => n.to_string(),
                Value::Bool(b) => b.to_string(),
                other => bail!("config key `{key}` has unsupported value {other}"),
            })
        };
        match value {
            Value::Null | Value::Bool(false) => {}
            Value::Bool(true) => out.push(flag.into()),
            Value::Array(items) => {
                if !items.is_empty() {
                    let joined = items.iter().map(scalar).collect::<Result<Vec<_>>>()?.join(",");
                    out.push(flag.into());
                    out.push(joined.into());
                }
            }
            v => {
                out.push(flag.into());
                out.push(scalar(v)?.into());
            }
        }
    }
    Ok(out)
}

/// The resolved configuration as a flat JSON object.
pub fn resolved_config(cli: &Cli) -> Result<Value> {
    let mut map = Map::new();
    for part in [serde_json::to_value(&cli.command)?, serde_json::to_value(&cli.global)?] {
        if let Value::Object(m) = part {
            map.extend(m);
        }
    }
    Ok(Value::Object(map))
}

/// Parses `argv`, echoes the resolved configuration to `err` and runs the
/// subcommand, writing data to `out`.
pub fn run(argv: Vec<OsString>, out: &mut (dyn Write + Send), err: &mut (dyn Write + Send)) -> Result<()> {
    let argv = expand_config(argv)?;
    let cli = Cli::try_parse_from(argv)?;
    writeln!(err, "config: {}", serde_json::to_string(&resolved_config(&cli)?)?)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.global.threads {
        if t == 0 {
            bail!("--threads must be at least 1");
        }
        pool = pool.num_threads(t);
    }
    let pool = pool.build()?;
    pool.install(|| match &cli.command {
        Command::Synth(a) => synth::run(a, &cli.global, out, err),
        Command::Match(a) => matching::run(a, &cli.global, out),
        Command::Loss(a) => loss::run(a, &cli.global, out),
        Command::Eval(a) => eval::run(a, &cli.global, out),
        Command::Bench(a) => bench::run(a, &cli.global, out, err),
        Command::Sample(a) => sample::run(a, &cli.global, out),
    })
}

fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

/// Reads a point set from `.csv` or `OPS1`, depending on the extension.
pub(crate) fn read_points(path: &Path, taxonomy: &ClassTaxonomy) -> Result<LabeledPointSet> {
    let set = if is_csv(path) {
        formats::read_csv(path, taxonomy)
    } else {
        formats::read_ops(path, taxonomy)
    };
    set.with_context(|| format!("reading {}", path.display()))
}

pub(crate) fn write_points(path: &Path, set: &LabeledPointSet, taxonomy: &ClassTaxonomy) -> Result<()> {
    let done = if is_csv(path) {
        formats::write_csv(path, set, taxonomy)
    } else {
        formats::write_ops(path, set, taxonomy)
    };
    done.with_context(|| format!("writing {}", path.display()))
}

pub(crate) fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}
