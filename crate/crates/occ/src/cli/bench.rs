use std::io::Write;

use anyhow::Result;
use clap::{ArgAction, Args};
use serde::Serialize;

use super::GlobalArgs;
use crate::bench::{
    emit_report, fit_scaling_exponents, run_matching_bench_with, speed_ratios, BenchConfig, BenchRecord, BenchReport,
    HostInfo, DEFAULT_HUNGARIAN_CUTOFF,
};

#[derive(Debug, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct BenchArgs {
    /// Point counts, ascending.
    #[arg(long, action = ArgAction::Set, value_delimiter = ',', default_values_t = [100, 1000, 10000])]
    pub sizes: Vec<usize>,
    /// Timed runs per method and size; the median is reported.
    #[arg(long, default_value_t = 5)]
    pub repeats: usize,
    /// Sizes above this skip the one-to-one assignment.
    #[arg(long, default_value_t = DEFAULT_HUNGARIAN_CUTOFF)]
    pub hungarian_cutoff: usize,
    /// Time with `--threads` workers instead of one.
    #[arg(long)]
    pub parallel: bool,
}

fn fmt_ms(v: Option<f64>) -> String {
    v.map_or_else(|| "skipped".into(), |t| format!("{t:.3}"))
}

fn print_record(out: &mut dyn Write, r: &BenchRecord) -> std::io::Result<()> {
    writeln!(
        out,
        "{:<10} n={:<7} wall_ms={:<12} cost_matrix_ms={:<10} peak_extra_bytes={}",
        r.method.as_str(),
        r.n_points,
        fmt_ms(r.wall_time_ms),
        r.cost_matrix_ms.map_or_else(|| "-".into(), |t| format!("{t:.3}")),
        r.peak_extra_memory
            .map_or_else(|| "unavailable".into(), |b| b.to_string()),
    )
}

pub fn run(args: &BenchArgs, global: &GlobalArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let threads = if args.parallel {
        global.threads.unwrap_or_else(rayon::current_num_threads)
    } else {
        1
    };
    let cfg = BenchConfig {
        hungarian_cutoff: args.hungarian_cutoff,
        threads,
        ..BenchConfig::new(args.sizes.clone(), args.repeats, global.seed)
    };
    let mut io_result = Ok(());
    let records = run_matching_bench_with(&cfg, |r| {
        if io_result.is_ok() {
            io_result = print_record(out, r).and_then(|_| out.flush());
        }
    })?;
    io_result?;
    for (n, ratio) in speed_ratios(&records) {
        writeln!(out, "ratio n={n} hungarian/chamfer={ratio:.1}")?;
    }
    let fits = match fit_scaling_exponents(&records) {
        Ok(fits) => fits,
        Err(e) => {
            writeln!(err, "no scaling fit: {e}")?;
            Vec::new()
        }
    };
    for f in &fits {
        writeln!(
            out,
            "fit {} alpha={:.3} r2={:.4}",
            f.method.as_str(),
            f.alpha,
            f.r_squared
        )?;
    }
    if let Some(path) = &global.out {
        let report = BenchReport {
            records,
            fits,
            host: HostInfo::detect(),
        };
        let written = emit_report(&report, path)?;
        for p in written {
            writeln!(err, "wrote {}", p.display())?;
        }
    }
    Ok(())
}
