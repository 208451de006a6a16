//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test --release -p sparse-occ --test acceptance`; pass
//! criterion numbers after `--` to run a subset.

use std::fmt::Debug;
use std::process::{Command, ExitCode};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sparse_occ::bench::{bench_inputs, fit_scaling_exponents, run_matching_bench, speed_ratios, BenchConfig, Method};
use sparse_occ::formats::{
    decode_grid, decode_ops, encode_grid, encode_ops, read_grid, read_ops, write_grid, write_ops, FormatError,
};
use sparse_occ_core::losses::{
    init_points, total_loss, ClassScores, ClassWeights, InitStrategy, QueryPoints, StagePrediction, TermKind,
};
use sparse_occ_core::matching::{
    chamfer_distance, hungarian_match, hungarian_match_points, DenseCost, Matcher, Metric, WeightFn,
};
use sparse_occ_core::metrics::{miou, rayiou, visibility_mask, voxelize, RaySet};
use sparse_occ_core::sampling::{
    aggregate_features, bilinear, compute_sample_points, project_and_mask, CameraModel, FeatureMap, SampleContext,
};
use sparse_occ_core::synth::{generate_scene, perturb, PerturbParams, PrimitiveKind, ScenePrimitive};
use sparse_occ_core::{oracle, ClassId, ClassTaxonomy, LabeledPointSet, SceneConfig, StageSchedule, Vec3, VoxelGrid};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn lib<T, E: Debug>(r: Result<T, E>) -> Result<T, String> {
    r.map_err(|e| format!("{e:?}"))
}

fn uniform_points(rng: &mut ChaCha8Rng, n: usize, extent: f64) -> Vec<Vec3> {
    (0..n)
        .map(|_| std::array::from_fn(|_| rng.random_range(-extent..extent)))
        .collect()
}

fn labeled(rng: &mut ChaCha8Rng, pos: Vec<Vec3>) -> LabeledPointSet {
    let classes = (0..pos.len()).map(|_| rng.random_range(0..17)).collect();
    LabeledPointSet::labeled(pos, classes).unwrap()
}

fn looking_along_x(fx: f64, cx: f64, cy: f64, center: Vec3, w: usize, h: usize) -> CameraModel {
    CameraModel::pinhole(
        fx,
        fx,
        cx,
        cy,
        [[0.0, -1.0, 0.0], [0.0, 0.0, -1.0], [1.0, 0.0, 0.0]],
        center,
        w,
        h,
    )
    .unwrap()
}

fn pool(threads: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap()
}

const SCENE_MIN: Vec3 = [-8.0, -8.0, -2.0];
const SCENE_MAX: Vec3 = [8.0, 8.0, 2.8];

fn scene_config(seed: u64) -> SceneConfig {
    SceneConfig::new(SCENE_MIN, SCENE_MAX, 0.4, ClassTaxonomy::occ3d(), seed).unwrap()
}

/// A ground slab plus 3 to 8 random primitives.
fn random_primitives(rng: &mut ChaCha8Rng) -> Vec<ScenePrimitive> {
    let mut prims = vec![ScenePrimitive::new(
        PrimitiveKind::PlaneSlab,
        [0.0, 0.0, -1.8],
        [1.0, 1.0, 0.4],
        11,
        15.0,
    )];
    for _ in 0..rng.random_range(3..=8) {
        let kind = [PrimitiveKind::Box, PrimitiveKind::SphereShell][rng.random_range(0..2)];
        let center = [
            rng.random_range(-6.0..6.0),
            rng.random_range(-6.0..6.0),
            rng.random_range(-1.0..1.8),
        ];
        let extents = [
            rng.random_range(0.8..3.0),
            rng.random_range(0.8..3.0),
            rng.random_range(0.4..1.6),
        ];
        prims.push(ScenePrimitive::new(
            kind,
            center,
            extents,
            rng.random_range(0..17),
            15.0,
        ));
    }
    prims
}

struct EvalScene {
    gt: VoxelGrid,
    pred: VoxelGrid,
    rays: RaySet,
}

fn random_eval_scene(seed: u64) -> Result<EvalScene, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = scene_config(seed);
    let tax = ClassTaxonomy::occ3d();
    let scene = lib(generate_scene(&random_primitives(&mut rng), &cfg))?;
    let params = PerturbParams {
        noise_std: rng.random_range(0.05..0.8),
        drop_frac: rng.random_range(0.0..0.5),
        class_flip_frac: rng.random_range(0.0..0.3),
    };
    let pred_points = lib(perturb(&scene.points, &params, &tax, seed ^ 0x5eed))?;
    let pred = lib(voxelize(&pred_points, &cfg))?.grid;
    let origin = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), -1.0];
    let rays = if seed % 2 == 0 {
        RaySet::lidar32(origin, 24.0)
    } else {
        RaySet::grid16(origin, 24.0)
    };
    Ok(EvalScene {
        gt: scene.grid,
        pred,
        rays,
    })
}

// Matching-speed ratio at n = 10 000.
fn criterion_1() -> Outcome {
    let start = Instant::now();
    let records = lib(run_matching_bench(&BenchConfig::new(vec![100, 1000, 10_000], 5, 1)))?;
    let elapsed = start.elapsed().as_secs_f64();
    let ratio = speed_ratios(&records)
        .into_iter()
        .find(|&(n, _)| n == 10_000)
        .map(|(_, r)| r)
        .ok_or("no ratio at n = 10000")?;
    let time = |m: Method| {
        records
            .iter()
            .find(|r| r.method == m && r.n_points == 10_000)
            .and_then(|r| r.wall_time_ms)
            .unwrap_or(f64::NAN)
    };
    let detail = format!(
        "hungarian {:.1} ms, chamfer {:.3} ms, ratio {ratio:.0}x, bench {elapsed:.0} s",
        time(Method::Hungarian),
        time(Method::Chamfer)
    );
    ensure(ratio >= 100.0, || format!("ratio below 100x: {detail}"))?;
    ensure(elapsed <= 300.0, || format!("bench exceeded 5 min: {detail}"))?;
    Ok(detail)
}

// Log-log scaling exponents.
fn criterion_2() -> Outcome {
    let records = lib(run_matching_bench(&BenchConfig::new(
        vec![500, 1000, 2000, 4000, 8000],
        5,
        2,
    )))?;
    let fits = lib(fit_scaling_exponents(&records))?;
    let fit = |m: Method| {
        fits.iter()
            .find(|f| f.method == m)
            .ok_or(format!("no fit for {}", m.as_str()))
    };
    let (h, c) = (fit(Method::Hungarian)?, fit(Method::Chamfer)?);
    let detail = format!(
        "hungarian alpha {:.3} (r2 {:.4}), chamfer alpha {:.3} (r2 {:.4})",
        h.alpha, h.r_squared, c.alpha, c.r_squared
    );
    ensure(h.alpha >= 2.5, || format!("hungarian exponent below 2.5: {detail}"))?;
    ensure(c.alpha <= 2.3, || format!("chamfer exponent above 2.3: {detail}"))?;
    ensure(h.r_squared >= 0.98 && c.r_squared >= 0.98, || {
        format!("poor fit: {detail}")
    })?;
    Ok(detail)
}

// Assignment cost against exhaustive permutations.
fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for case in 0..200 {
        let small = rng.random_range(1..=7);
        let large = small + rng.random_range(0..=3);
        let (rows, cols) = if rng.random_bool(0.5) {
            (small, large)
        } else {
            (large, small)
        };
        let style = case % 3;
        let cost = DenseCost::from_fn(rows, cols, |_, _| match style {
            0 => rng.random_range(0.0..1.0),
            1 => f64::from(rng.random_range(0..4)),
            _ => rng.random_range(-1e6..1e6),
        });
        let got = lib(hungarian_match(&cost))?;
        let best = oracle::permutation_min_cost(&cost);
        ensure(got.total_cost == best, || {
            format!("case {case} ({rows}x{cols}): {} vs {best}", got.total_cost)
        })?;
        ensure(got.pairs.len() == small, || {
            format!("case {case}: {} pairs", got.pairs.len())
        })?;
    }
    Ok("200 matrices equal the permutation minimum".into())
}

// Accelerated Chamfer and labels against brute force.
fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let matcher = Matcher::default();
    let w = WeightFn::default();
    let mut worst = 0.0f64;
    for case in 0..200 {
        let cap = if case < 10 { 2000 } else { rng.random_range(1..=2000) };
        let (np, ng) = (rng.random_range(1..=cap), rng.random_range(1..=cap));
        let extent = [0.5, 5.0, 50.0][case % 3];
        let pred = LabeledPointSet::new(uniform_points(&mut rng, np, extent));
        let gt_pos = uniform_points(&mut rng, ng, extent);
        let gt = labeled(&mut rng, gt_pos);

        let cd = lib(matcher.chamfer(&pred, &gt, &w))?.cd_value;
        let brute = oracle::brute_chamfer(pred.positions(), gt.positions(), &w);
        let err = (cd - brute).abs();
        worst = worst.max(err);
        ensure(err <= 1e-9, || format!("case {case}: CD_R {cd} vs brute {brute}"))?;

        let unit = lib(matcher.chamfer(&pred, &gt, &WeightFn::unit()))?.cd_value;
        let plain = lib(chamfer_distance(&pred, &gt))?.cd_value;
        ensure(unit == plain, || {
            format!("case {case}: unit-weight {unit} vs CD {plain}")
        })?;
        let brute_plain = oracle::brute_chamfer(pred.positions(), gt.positions(), &WeightFn::unit());
        ensure((plain - brute_plain).abs() <= 1e-9, || {
            format!("case {case}: CD {plain} vs brute {brute_plain}")
        })?;

        let labels = lib(matcher.assign_labels(&pred, &gt))?;
        ensure(labels == oracle::brute_assign_labels(pred.positions(), &gt), || {
            format!("case {case}: labels differ")
        })?;
    }
    Ok(format!("200 instances, max |CD_R - brute| {worst:.2e}"))
}

// Analytic gradient against central differences.
fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let matcher = Matcher::default();
    let w = WeightFn::default();
    let (mut accepted, mut redrawn, mut worst) = (0, 0, 0.0f64);
    while accepted < 100 {
        let extent = rng.random_range(0.5..3.0);
        let (np, ng) = (rng.random_range(2..=120), rng.random_range(2..=120));
        let pred = uniform_points(&mut rng, np, extent);
        let gt = uniform_points(&mut rng, ng, extent);
        if !oracle::has_clean_margins(&pred, &gt, &w, 1e-3) {
            redrawn += 1;
            continue;
        }
        let analytic = lib(matcher.gradient(
            &LabeledPointSet::new(pred.clone()),
            &LabeledPointSet::new(gt.clone()),
            &w,
        ))?;
        let numeric = oracle::finite_difference_gradient(&pred, &gt, &w, 1e-4);
        let err = oracle::max_relative_error(&analytic, &numeric);
        worst = worst.max(err);
        ensure(err < 1e-4, || format!("instance {accepted}: relative error {err:.3e}"))?;
        accepted += 1;
    }
    Ok(format!(
        "100 instances ({redrawn} redrawn for margins), max relative error {worst:.2e}"
    ))
}

fn random_scores(rng: &mut ChaCha8Rng, rows: usize, classes: usize) -> ClassScores {
    let mut data = Vec::with_capacity(rows * classes);
    for _ in 0..rows {
        let raw: Vec<f64> = (0..classes).map(|_| rng.random_range(0.01..1.0)).collect();
        let sum: f64 = raw.iter().sum();
        data.extend(raw.iter().map(|v| v / sum));
    }
    ClassScores::new(classes, data).unwrap()
}

/// Stage 0 Chamfer plus Chamfer and focal terms for every decoder stage,
/// from brute-force matching and a direct focal formula.
fn recomputed_loss(
    stages: &[(Vec<Vec3>, Option<ClassScores>)],
    gt: &LabeledPointSet,
    w: &WeightFn,
    cw: &[f64],
) -> (usize, f64) {
    let (mut terms, mut sum) = (0, 0.0);
    for (points, scores) in stages {
        sum += oracle::brute_chamfer(points, gt.positions(), w);
        terms += 1;
        if let Some(scores) = scores {
            let targets = oracle::brute_assign_labels(points, gt);
            let mut focal = 0.0;
            for (r, &t) in targets.iter().enumerate() {
                let p = scores.row(r)[t as usize];
                focal += cw[t as usize] * (1.0 - p).powi(2) * -p.ln();
            }
            sum += focal / targets.len() as f64;
            terms += 1;
        }
    }
    (terms, sum)
}

fn stage_predictions(
    schedule: &StageSchedule,
    stages: &[(Vec<Vec3>, Option<ClassScores>)],
) -> Result<Vec<StagePrediction>, String> {
    let q = schedule.query_count();
    stages
        .iter()
        .zip(schedule.points_per_stage())
        .enumerate()
        .map(|(i, ((pts, scores), &r))| {
            let qp = lib(QueryPoints::new(q, r, pts.clone()))?;
            match scores {
                None => Ok(StagePrediction::initial(qp)),
                Some(s) => lib(StagePrediction::decoder(i, qp, s.clone())),
            }
        })
        .collect()
}

// Seven-stage loss against the independent 13-term sum.
fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let w = WeightFn::default();
    let mut worst = 0.0f64;
    for case in 0..41 {
        let schedule = if case == 40 {
            StageSchedule::opus_m()
        } else {
            lib(StageSchedule::new(
                rng.random_range(4..=40),
                vec![1, 1, 2, 4, 8, 16, 32],
                1,
            ))?
        };
        let ng = rng.random_range(20..=400);
        let gt_pos = uniform_points(&mut rng, ng, 4.0);
        let gt = labeled(&mut rng, gt_pos);
        let cw: Vec<f64> = (0..17).map(|_| rng.random_range(0.5..2.0)).collect();
        let weights = lib(ClassWeights::new(cw.clone(), 2.0))?;
        let q = schedule.query_count();
        let stages: Vec<_> = schedule
            .points_per_stage()
            .iter()
            .enumerate()
            .map(|(i, &r)| {
                let pts = uniform_points(&mut rng, q * r, 4.5);
                let scores = (i > 0).then(|| random_scores(&mut rng, q * r, 17));
                (pts, scores)
            })
            .collect();
        let got = lib(total_loss(&stage_predictions(&schedule, &stages)?, &gt, &w, &weights))?;
        let (terms, expected) = recomputed_loss(&stages, &gt, &w, &cw);
        ensure(terms == 13 && got.terms.len() == 13, || {
            format!("case {case}: {} terms", got.terms.len())
        })?;
        let kinds = got.terms.iter().filter(|t| t.kind == TermKind::Focal).count();
        ensure(kinds == 6, || format!("case {case}: {kinds} focal terms"))?;
        let err = (got.total - expected).abs();
        worst = worst.max(err);
        ensure(err <= 1e-9, || {
            format!("case {case}: total {} vs recomputed {expected}", got.total)
        })?;
    }

    // Perfect stages reproduce the ground truth with one-hot scores.
    let n = 30;
    let gt_pos = uniform_points(&mut rng, n, 4.0);
    let gt = labeled(&mut rng, gt_pos);
    let classes = gt.classes().unwrap().to_vec();
    let schedule = lib(StageSchedule::new(n, vec![1, 1, 2, 4, 8, 16, 32], 1))?;
    let stages: Vec<_> = schedule
        .points_per_stage()
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            let idx: Vec<usize> = (0..n * r).map(|k| k % n).collect();
            let pts = idx.iter().map(|&j| gt.positions()[j]).collect();
            let labels: Vec<ClassId> = idx.iter().map(|&j| classes[j]).collect();
            (pts, (i > 0).then(|| ClassScores::one_hot(17, &labels).unwrap()))
        })
        .collect();
    let perfect = lib(total_loss(
        &stage_predictions(&schedule, &stages)?,
        &gt,
        &w,
        &lib(ClassWeights::new(vec![1.0; 17], 2.0))?,
    ))?;
    ensure(perfect.total == 0.0, || {
        format!("perfect prediction total {}", perfect.total)
    })?;
    Ok(format!(
        "41 cases, max |total - recomputed| {worst:.2e}; perfect total 0"
    ))
}

// RayIoU ordering, the depth-offset slab and identity scores.
fn criterion_7() -> Outcome {
    let tax = ClassTaxonomy::occ3d();
    let thresholds = [1.0, 2.0, 4.0];
    let mut mean_scores = [0.0; 3];
    for seed in 0..50 {
        let scene = random_eval_scene(700 + seed)?;
        let r = lib(rayiou(&scene.pred, &scene.gt, &scene.rays, &thresholds, &tax))?;
        let s: Vec<f64> = r.per_threshold.iter().map(|t| t.score).collect();
        ensure(s[0] <= s[1] && s[1] <= s[2], || {
            format!("scene {seed}: {s:?} not ordered")
        })?;
        for (m, v) in mean_scores.iter_mut().zip(&s) {
            *m += v / 50.0;
        }

        let same = lib(rayiou(&scene.gt, &scene.gt, &scene.rays, &thresholds, &tax))?;
        ensure(same.per_threshold.iter().all(|t| t.score == 1.0), || {
            format!("scene {seed}: pred = gt RayIoU {same:?}")
        })?;
        let m = lib(miou(&scene.gt, &scene.gt, None, &tax))?.miou;
        ensure(m == 1.0, || format!("scene {seed}: pred = gt mIoU {m}"))?;
    }

    let (pred, gt, rays) = oracle::depth_offset_slab_scene(1.5, 8);
    let slab = lib(rayiou(&pred, &gt, &rays, &thresholds, &tax))?;
    let pattern: Vec<f64> = slab.per_threshold.iter().map(|t| t.score).collect();
    ensure(pattern == [0.0, 1.0, 1.0], || format!("slab pattern {pattern:?}"))?;
    Ok(format!(
        "50 scenes ordered (mean {:.3} / {:.3} / {:.3}); slab {pattern:?}; identity scores 1",
        mean_scores[0], mean_scores[1], mean_scores[2]
    ))
}

// Bilinear sampling and feature aggregation.
fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    // Small integer coefficients and dyadic coordinates keep every step exact.
    for case in 0..100 {
        let (w, h, ch) = (
            rng.random_range(2..=20),
            rng.random_range(2..=20),
            rng.random_range(1..=4),
        );
        let coef: Vec<[f64; 3]> = (0..ch)
            .map(|_| std::array::from_fn(|_| f64::from(rng.random_range(-8i32..=8))))
            .collect();
        let field = |x: f64, y: f64, c: usize| coef[c][0] + coef[c][1] * x + coef[c][2] * y;
        let fm = lib(FeatureMap::from_fn(w, h, ch, |x, y, c| field(x as f64, y as f64, c)))?;
        for _ in 0..20 {
            let u = f64::from(rng.random_range(0..=8 * (w as u32 - 1))) / 8.0;
            let v = f64::from(rng.random_range(0..=8 * (h as u32 - 1))) / 8.0;
            let got = lib(bilinear(&fm, [u, v]))?;
            for (c, g) in got.iter().enumerate() {
                ensure(*g == field(u, v, c), || {
                    format!("case {case}: B({u}, {v})[{c}] = {g}, field {}", field(u, v, c))
                })?;
            }
        }
    }

    // Two cameras on the x axis, one looking +x from the origin and one
    // looking +x from x = 3; affine fields `a + b u + c v` per camera.
    let cams = [
        looking_along_x(20.0, 31.5, 23.5, [0.0; 3], 64, 48),
        looking_along_x(10.0, 15.5, 11.5, [3.0, 0.0, 0.0], 32, 24),
    ];
    let fields = [
        [[1.0, 0.5, -0.25], [2.0, 0.0, 1.0]],
        [[-3.0, 1.5, 0.75], [0.5, -0.125, 0.0]],
    ];
    let fms: Vec<FeatureMap> = (0..2)
        .map(|m| {
            let (w, h) = (cams[m].width(), cams[m].height());
            FeatureMap::from_fn(w, h, 2, |x, y, c| {
                let [a, b, d] = fields[m][c];
                a + b * x as f64 + d * y as f64
            })
            .unwrap()
        })
        .collect();
    let mut worst = 0.0f64;
    for case in 0..50 {
        let mean = [
            rng.random_range(3.5..9.0),
            rng.random_range(-0.5..0.5),
            rng.random_range(-0.5..0.5),
        ];
        let std = [
            rng.random_range(0.0..2.0),
            rng.random_range(0.0..0.4),
            rng.random_range(0.0..0.3),
        ];
        let offsets: Vec<Vec3> = (0..rng.random_range(1..=6))
            .map(|_| {
                [
                    rng.random_range(-2.0..2.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                ]
            })
            .collect();
        let weights: Vec<f64> = (0..2 * offsets.len()).map(|_| rng.random_range(0.0..2.0)).collect();
        let ctx = lib(SampleContext::new(mean, std, offsets.clone(), weights.clone()))?;
        let samples = compute_sample_points(&ctx, 0.0);
        let got = lib(aggregate_features(&fms, &project_and_mask(&samples, &cams), &weights))?;

        // Pinhole projection written out per camera: depth x - c_x,
        // u = cx - f y / depth, v = cy - f z / depth.
        let intrinsics = [(20.0, 31.5, 23.5, 0.0, 63.0, 47.0), (10.0, 15.5, 11.5, 3.0, 31.0, 23.0)];
        let (mut acc, mut visible) = ([0.0; 2], 0usize);
        for (s, o) in offsets.iter().enumerate() {
            let p: Vec3 = std::array::from_fn(|k| mean[k] + o[k] * std[k]);
            for (m, &(f, cx, cy, x0, umax, vmax)) in intrinsics.iter().enumerate() {
                let depth = p[0] - x0;
                if depth <= 0.0 {
                    continue;
                }
                let (u, v) = (cx - f * p[1] / depth, cy - f * p[2] / depth);
                if !(0.0..=umax).contains(&u) || !(0.0..=vmax).contains(&v) {
                    continue;
                }
                visible += 1;
                for c in 0..2 {
                    let [a, b, d] = fields[m][c];
                    acc[c] += weights[s * 2 + m] * (a + b * u + d * v);
                }
            }
        }
        let expected: Vec<f64> = if visible == 0 {
            vec![0.0; 2]
        } else {
            acc.iter().map(|v| v / visible as f64).collect()
        };
        for c in 0..2 {
            let err = (got[c] - expected[c]).abs();
            worst = worst.max(err);
            ensure(err <= 1e-9, || {
                format!("case {case}: feature {got:?} vs closed form {expected:?}")
            })?;
        }
    }

    // Every sample behind both cameras.
    let ctx = lib(SampleContext::new(
        [-4.0, 0.0, 0.0],
        [0.5; 3],
        vec![[0.0; 3], [1.0, 1.0, 1.0], [-1.0, 0.0, 2.0]],
        vec![1.0; 6],
    ))?;
    let samples = compute_sample_points(&ctx, 0.2);
    let proj = project_and_mask(&samples, &cams);
    let zero = lib(aggregate_features(&fms, &proj, &ctx.weights))?;
    ensure(proj.visible_count() == 0 && zero == [0.0, 0.0], || {
        format!("zero visibility gave {zero:?}")
    })?;
    Ok(format!(
        "affine fields exact; 2-camera closed forms within {worst:.2e}; zero visibility gives 0"
    ))
}

fn f32_points(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec3> {
    (0..n)
        .map(|_| std::array::from_fn(|_| f64::from(rng.random_range(-100.0f32..100.0))))
        .collect()
}

fn bits(points: &[Vec3]) -> Vec<[u64; 3]> {
    points.iter().map(|p| p.map(f64::to_bits)).collect()
}

// File round trips and corruption errors.
fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let tax = ClassTaxonomy::occ3d();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    for case in 0..100 {
        let n = if case == 0 { 0 } else { rng.random_range(1..=500) };
        let pos = f32_points(&mut rng, n);
        let set = if case % 2 == 0 {
            let classes = (0..n).map(|_| rng.random_range(0..17)).collect();
            LabeledPointSet::labeled(pos, classes).unwrap()
        } else {
            LabeledPointSet::new(pos)
        };
        let path = dir.path().join(format!("p{case}.ops"));
        lib(write_ops(&path, &set, &tax))?;
        let back = lib(read_ops(&path, &tax))?;
        ensure(
            bits(back.positions()) == bits(set.positions()) && back.classes() == set.classes(),
            || format!("case {case}: OPS1 round trip changed the set"),
        )?;
        let bytes = std::fs::read(&path).map_err(|e| e.to_string())?;
        ensure(lib(encode_ops(&back, &tax))? == bytes, || {
            format!("case {case}: OPS1 rewrite differs")
        })?;

        let mut bad = bytes.clone();
        bad[0] ^= 0xff;
        ensure(
            matches!(decode_ops(&bad, &tax), Err(FormatError::BadMagic { .. })),
            || format!("case {case}: corrupt OPS1 magic"),
        )?;
        let cut = rng.random_range(0..bytes.len());
        ensure(
            matches!(decode_ops(&bytes[..cut], &tax), Err(FormatError::TruncatedFile { .. })),
            || format!("case {case}: OPS1 truncated at {cut}"),
        )?;

        let dims = [
            rng.random_range(1..=12),
            rng.random_range(1..=12),
            rng.random_range(1..=6),
        ];
        let labels = (0..dims.iter().product()).map(|_| rng.random_range(0..=17)).collect();
        let origin: Vec3 = std::array::from_fn(|_| f64::from(rng.random_range(-50.0f32..50.0)));
        let vs = [0.5, 0.25, 0.125, f64::from(rng.random_range(0.05f32..2.0))][case % 4];
        let grid = lib(VoxelGrid::new(origin, vs, dims, labels))?;
        let path = dir.path().join(format!("g{case}.ovg"));
        lib(write_grid(&path, &grid, &tax))?;
        let back = lib(read_grid(&path, &tax))?;
        ensure(
            back.origin().map(f64::to_bits) == grid.origin().map(f64::to_bits)
                && back.voxel_size().to_bits() == grid.voxel_size().to_bits()
                && back.dims() == grid.dims()
                && back.labels() == grid.labels(),
            || format!("case {case}: OVG1 round trip changed the grid"),
        )?;
        let bytes = std::fs::read(&path).map_err(|e| e.to_string())?;
        ensure(lib(encode_grid(&back, &tax))? == bytes, || {
            format!("case {case}: OVG1 rewrite differs")
        })?;
        let mut bad = bytes.clone();
        bad[3] ^= 0x20;
        ensure(
            matches!(decode_grid(&bad, &tax), Err(FormatError::BadMagic { .. })),
            || format!("case {case}: corrupt OVG1 magic"),
        )?;
        let cut = rng.random_range(0..bytes.len());
        ensure(
            matches!(decode_grid(&bytes[..cut], &tax), Err(FormatError::TruncatedFile { .. })),
            || format!("case {case}: OVG1 truncated at {cut}"),
        )?;
    }
    Ok("100 OPS1 and 100 OVG1 files round trip bit-identically; corruption detected".into())
}

/// Every generator and non-timing output, debug-formatted.
fn library_outputs() -> Result<Vec<String>, String> {
    let tax = ClassTaxonomy::occ3d();
    let mut out = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let cfg = scene_config(10);
    let scene = lib(generate_scene(&random_primitives(&mut rng), &cfg))?;
    let params = PerturbParams {
        noise_std: 0.3,
        drop_frac: 0.2,
        class_flip_frac: 0.1,
    };
    let pred_points = lib(perturb(&scene.points, &params, &tax, 11))?;
    let pred_grid = lib(voxelize(&pred_points, &cfg))?;
    out.push(format!("{:?}", lib(encode_ops(&scene.points, &tax))?));
    out.push(format!("{:?}", lib(encode_grid(&scene.grid, &tax))?));
    out.push(format!("{:?}", pred_points));
    out.push(format!("{:?} {}", pred_grid.grid.labels(), pred_grid.dropped));
    out.push(format!("{:?}", lib(init_points(InitStrategy::Random, &cfg, 2000))?));
    out.push(format!("{:?}", lib(init_points(InitStrategy::Grid, &cfg, 2000))?));

    let (bp, bg) = bench_inputs(4000, 10);
    let matcher = Matcher::default();
    let w = WeightFn::default();
    let report = lib(matcher.chamfer(&bp, &bg, &w))?;
    out.push(format!(
        "{:?} {:?} {:?}",
        report.cd_value, report.per_pred_nn, report.per_gt_nn
    ));
    out.push(format!("{:?}", lib(matcher.gradient(&bp, &bg, &w))?));
    out.push(format!("{:?}", lib(matcher.assign_labels(&bp, &bg))?));
    let (hp, hg) = bench_inputs(300, 10);
    let a = lib(hungarian_match_points(hp.positions(), hg.positions(), Metric::L1))?;
    out.push(format!("{:?} {:?}", a.pairs, a.total_cost));

    let schedule = lib(StageSchedule::new(16, vec![1, 1, 2, 4, 8, 16, 32], 1))?;
    let stages: Vec<_> = schedule
        .points_per_stage()
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            let pts = uniform_points(&mut rng, 16 * r, 8.0);
            (pts, (i > 0).then(|| random_scores(&mut rng, 16 * r, 17)))
        })
        .collect();
    let loss = lib(total_loss(
        &stage_predictions(&schedule, &stages)?,
        &scene.points,
        &w,
        &ClassWeights::uniform(17),
    ))?;
    out.push(format!("{:?}", loss));

    let cams = [looking_along_x(200.0, 159.5, 119.5, [-7.5, 0.0, 0.5], 320, 240)];
    let mask = lib(visibility_mask(&scene.grid, &cams, 2, 30.0, tax.free_id()))?;
    out.push(format!("{:?}", mask.bits()));
    out.push(format!(
        "{:?}",
        lib(miou(&pred_grid.grid, &scene.grid, Some(&mask), &tax))?
    ));
    let rays = RaySet::lidar32([0.0, 0.0, -1.0], 24.0);
    out.push(format!(
        "{:?}",
        lib(rayiou(&pred_grid.grid, &scene.grid, &rays, &[1.0, 2.0, 4.0], &tax))?
    ));

    let fm = lib(FeatureMap::from_fn(320, 240, 3, |x, y, c| {
        ((x * 7 + y * 3 + c) % 11) as f64 * 0.1
    }))?;
    let offsets = uniform_points(&mut rng, 64, 1.5);
    let ctx = lib(SampleContext::from_points(
        &uniform_points(&mut rng, 32, 2.0),
        offsets,
        vec![0.5; 64],
    ))?;
    let samples = compute_sample_points(&ctx, 0.2);
    out.push(format!(
        "{:?}",
        lib(aggregate_features(
            &[fm],
            &project_and_mask(&samples, &cams),
            &ctx.weights
        ))?
    ));
    Ok(out)
}

fn cli_outputs(threads: &str) -> Result<Vec<Vec<u8>>, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    let scene = path("scene.json");
    std::fs::write(
        &scene,
        r#"{"roi_min": [-8, -8, -2], "roi_max": [8, 8, 2.8], "voxel_size": 0.4, "primitives": [
            {"kind": "plane_slab", "center": [0, 0, -1.8], "extents": [1, 1, 0.4], "class_id": 11},
            {"kind": "box", "center": [3, 1, 0], "extents": [2, 3, 2.4], "class_id": 3},
            {"kind": "sphere_shell", "center": [-3, -3, 0.4], "extents": [3, 3, 2.4], "class_id": 7}]}"#,
    )
    .map_err(|e| e.to_string())?;
    let runs: [Vec<String>; 3] = [
        vec![
            "synth".into(),
            "--primitives".into(),
            scene,
            "--out".into(),
            path("gt.ops"),
            "--grid".into(),
            path("gt.ovg"),
            "--pred".into(),
            path("pred.ops"),
            "--noise-std".into(),
            "0.3".into(),
            "--drop-frac".into(),
            "0.2".into(),
            "--flip-frac".into(),
            "0.1".into(),
        ],
        vec![
            "match".into(),
            "--pred".into(),
            path("pred.ops"),
            "--gt".into(),
            path("gt.ops"),
            "--grad".into(),
        ],
        vec![
            "eval".into(),
            "--pred".into(),
            path("pred.ops"),
            "--gt".into(),
            path("gt.ovg"),
        ],
    ];
    let mut out = Vec::new();
    for args in runs {
        let res = Command::new(env!("CARGO_BIN_EXE_sparse-occ"))
            .args(["--seed", "5", "--threads", threads])
            .args(&args)
            .output()
            .map_err(|e| e.to_string())?;
        ensure(res.status.success(), || {
            format!("{args:?}: {}", String::from_utf8_lossy(&res.stderr))
        })?;
        out.push(res.stdout);
    }
    for f in ["gt.ops", "gt.ovg", "pred.ops"] {
        out.push(std::fs::read(path(f)).map_err(|e| e.to_string())?);
    }
    Ok(out)
}

// Bit-identical outputs across runs and thread counts.
fn criterion_10() -> Outcome {
    let reference = pool(1).install(library_outputs)?;
    for threads in [4, 4, 2] {
        let again = pool(threads).install(library_outputs)?;
        if let Some(i) = (0..reference.len()).find(|&i| reference[i] != again[i]) {
            return Err(format!("library output {i} differs with {threads} threads"));
        }
    }
    let cli = cli_outputs("1")?;
    for threads in ["4", "4"] {
        ensure(cli_outputs(threads)? == cli, || {
            format!("CLI output differs with --threads {threads}")
        })?;
    }
    Ok(format!(
        "{} library outputs and {} CLI outputs identical across 1, 2 and 4 threads",
        reference.len(),
        cli.len()
    ))
}

fn main() -> ExitCode {
    let criteria: [(u32, fn() -> Outcome); 10] = [
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
        (10, criterion_10),
        (1, criterion_1),
        (2, criterion_2),
    ];
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (id, check) in criteria {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let result = check();
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {id}: PASS ({detail}; {secs:.1} s)"),
            Err(why) => {
                failed += 1;
                println!("criterion {id}: FAIL ({why}; {secs:.1} s)");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
