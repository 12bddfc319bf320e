//! Acceptance criteria, run in order. Each prints one PASS or FAIL line; the
//! process exits non-zero when any criterion fails.

#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use hyperchange::autograd::Graph;
use hyperchange::detect::{
    confusion_counts, diff_rx, kmeans2_threshold, roc_auc, rx_score, BinaryChangeMap, ChangeScoreMap, Label, LabelMap,
    RX_RIDGE,
};
use hyperchange::io::{read_mask, read_scores, HsiCube};
use hyperchange::model::Ablation;
use hyperchange::training::{focal_of_cosine, focal_value};
use hyperchange::Tensor;
use hyperchange_cli::{run_command, Command, Overrides, PipelineConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::gradient_suite::{run_suite, TOLERANCE};
use support::oracles::{exhaustive_two_means, pairwise_auc};
use support::stop_gradient::{one_step, Targets};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn gradient_suite() -> Outcome {
    let start = Instant::now();
    let results = run_suite();
    let elapsed = start.elapsed();
    let worst = results.iter().max_by(|a, b| a.worst.total_cmp(&b.worst)).unwrap();
    let failing: Vec<&str> = results.iter().filter(|r| !(r.worst <= TOLERANCE)).map(|r| r.name.as_str()).collect();
    let pass = failing.is_empty() && elapsed < Duration::from_secs(60);
    outcome(
        pass,
        format!(
            "{} cases, worst relative error {:.2e} ({} / {}), {:.1}s, failing {:?}",
            results.len(),
            worst.worst,
            worst.name,
            worst.worst_tensor,
            elapsed.as_secs_f64(),
            failing
        ),
    )
}

fn focal_algebra() -> Outcome {
    let grid: Vec<f64> = (0..=1000).map(|i| -1.0 + 2.0 * i as f64 / 1000.0).collect();
    let mut g = Graph::<f64>::new();
    let c = g.param(Tensor::image(1, grid.len(), 1, grid.clone()).unwrap());
    let l = focal_of_cosine(&mut g, c).unwrap();
    let total = g.sum(l);
    g.backward(total).unwrap();
    let values = g.value(l).data().to_vec();
    let slopes = g.grad(c).unwrap().data().to_vec();

    let ends = focal_value(1.0f64) == -1.0 && focal_value(-1.0f64) == 3.0 && values[1000] == -1.0 && values[0] == 3.0;
    let monotone = values.windows(2).all(|w| w[1] <= w[0]);
    let emphasis = grid.iter().zip(&slopes).all(|(&c, &d)| (d.abs() > 1.0) == (c < 0.5));
    outcome(
        ends && monotone && emphasis,
        format!("L(1) = {}, L(-1) = {}, monotone {monotone}, |dL/dc| > 1 exactly below 0.5: {emphasis}", values[1000], values[0]),
    )
}

fn stop_gradient_guard() -> Outcome {
    let stopped = one_step(Targets::Stopped);
    let live = one_step(Targets::Live);
    let none = one_step(Targets::AllStopped);
    let pass = stopped.offset_bits_unchanged
        && !stopped.offset_has_gradient
        && stopped.encoder_changed
        && !live.offset_bits_unchanged
        && !none.any_parameter_changed;
    outcome(
        pass,
        format!(
            "stopped path unchanged {}, live control changed {}, encoder updated {}, fully stopped step inert {}",
            stopped.offset_bits_unchanged, !live.offset_bits_unchanged, stopped.encoder_changed, !none.any_parameter_changed
        ),
    )
}

fn metric_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.random_range(2..=200);
        // Coarse scores so that ties occur.
        let mut scores: Vec<f64> = (0..n).map(|_| (rng.random_range(0.0..1.0f64) * 20.0).floor()).collect();
        let mut changed: Vec<bool> = (0..n).map(|_| rng.random_bool(0.3)).collect();
        changed[0] = true;
        changed[1] = false;
        if rng.random_bool(0.5) {
            scores.iter_mut().for_each(|s| *s += rng.random_range(0.0..1e-3));
        }
        let labels = changed.iter().map(|&c| if c { Label::Changed } else { Label::Unchanged }).collect();
        let auc = roc_auc(&ChangeScoreMap::new(1, n, scores.clone()).unwrap(), &LabelMap::new(1, n, labels).unwrap())
            .unwrap()
            .auc;
        worst = worst.max((auc - pairwise_auc(&scores, &changed)).abs());
    }

    let mut pred = Vec::new();
    let mut truth = Vec::new();
    for (p, t, k) in [(true, true, 40), (false, false, 40), (true, false, 10), (false, true, 10)] {
        pred.extend(std::iter::repeat_n(p, k));
        truth.extend(std::iter::repeat_n(if t { Label::Changed } else { Label::Unchanged }, k));
    }
    let map = BinaryChangeMap { height: 1, width: 100, changed: pred };
    let counts = confusion_counts(&map, &LabelMap::new(1, 100, truth).unwrap()).unwrap();
    let m = counts.metrics();
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12;
    let hand = close(m.oa, 0.8) && close(m.kappa, 0.6) && close(m.f1, 0.8);
    outcome(
        worst <= 1e-12 && hand,
        format!("max |AUC - pairwise| over 100 instances {worst:.1e}; OA {} Kappa {} F1 {}", m.oa, m.kappa, m.f1),
    )
}

fn detector_oracles() -> Outcome {
    let cross = [1.0, 0.0, -1.0, 0.0, 0.0, 1.0, 0.0, -1.0];
    let rx: f64 = rx_score(&cross, 2, &[1.0, 0.0]).unwrap();
    // The ridge shrinks the exact value 2 by a relative factor of about RX_RIDGE.
    let rx_ok = (rx - 2.0).abs() <= 4.0 * RX_RIDGE;

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let cube = HsiCube::new(9, 7, 5, (0..9 * 7 * 5).map(|_| rng.random_range(-3.0..3.0)).collect()).unwrap();
    let zeros = diff_rx(&cube, &cube).unwrap().scores.iter().all(|&s| s == 0.0);

    let mut agree = 0;
    for _ in 0..50 {
        let n_lo = rng.random_range(2..100);
        let n_hi = rng.random_range(2..100);
        let (m_lo, s_lo) = (rng.random_range(-5.0..5.0), rng.random_range(0.1..1.0));
        let gap = rng.random_range(8.0..20.0);
        let s_hi = rng.random_range(0.1..1.0);
        let gauss = |rng: &mut ChaCha8Rng| {
            // Box-Muller.
            let (u, v): (f64, f64) = (rng.random_range(f64::EPSILON..1.0), rng.random_range(0.0..1.0));
            (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
        };
        let mut values: Vec<f64> = (0..n_lo).map(|_| m_lo + s_lo * gauss(&mut rng)).collect();
        values.extend((0..n_hi).map(|_| m_lo + gap + s_hi * gauss(&mut rng)));
        let got = kmeans2_threshold(&ChangeScoreMap::new(1, values.len(), values.clone()).unwrap());
        agree += usize::from(got.changed == exhaustive_two_means(&values));
    }
    outcome(
        rx_ok && zeros && agree == 50,
        format!("rx cross (1,0) = {rx:.9}; diff_rx identical all zero {zeros}; kmeans agrees with exhaustive on {agree}/50"),
    )
}

/// The small synthetic anomalous-change scene, trained for 50 epochs at n = 16.
fn scene_config(out: &Path, seed: u64, ablation: Ablation) -> PipelineConfig {
    let mut cfg = PipelineConfig::default();
    cfg.synth.height = 64;
    cfg.synth.width = 64;
    cfg.synth.bands = 16;
    cfg.synth.noise_amplitude = 10.0;
    cfg.synth.blur_sigma = 5.0;
    cfg.synth.offset_x = 1;
    cfg.synth.offset_y = 1;
    cfg.synth.anomaly_count = 6;
    cfg.synth.anomaly_size = 3;
    cfg.train.epochs = 50;
    cfg.train.model.n = 16;
    cfg.resolve(&Overrides { out: Some(out.to_path_buf()), seed: Some(seed), ablation: Some(ablation), ..Overrides::default() })
        .unwrap()
}

/// Feature-space and raw Diff-RX AUCs of one pipeline run.
fn run_scene(cfg: &PipelineConfig) -> (f64, f64) {
    run_command(Command::Pipeline, cfg).unwrap();
    let layout = cfg.layout();
    let truth = read_mask(layout.synth_truth()).unwrap();
    let auc = |p: PathBuf| {
        let s: ChangeScoreMap<f64> = read_scores(p).unwrap();
        roc_auc(&s, &truth).unwrap().auc
    };
    (auc(layout.detect_scores()), auc(layout.predetect_scores()))
}

fn end_to_end(root: &Path) -> Outcome {
    let start = Instant::now();
    let (feature, raw) = run_scene(&scene_config(&root.join("e2e"), 0, Ablation::Full));
    let elapsed = start.elapsed();
    let pass = feature > raw && feature >= 0.90 && elapsed <= Duration::from_secs(15 * 60);
    outcome(
        pass,
        format!(
            "feature Diff-RX AUC {feature:.4} vs raw {raw:.4} (exceeds raw: {}, >= 0.90: {}), {:.1}s",
            feature > raw,
            feature >= 0.90,
            elapsed.as_secs_f64()
        ),
    )
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

fn ablation_ordering(root: &Path) -> Outcome {
    let mut medians = Vec::new();
    let mut detail = Vec::new();
    for ablation in [Ablation::Full, Ablation::BaseSsa, Ablation::Base] {
        let aucs: Vec<f64> = (0..3u64)
            .map(|seed| run_scene(&scene_config(&root.join(format!("{}-{seed}", ablation.name())), seed, ablation)).0)
            .collect();
        detail.push(format!("{} {:.4} {:.4} {:.4}", ablation.name(), aucs[0], aucs[1], aucs[2]));
        medians.push(median(aucs));
    }
    let (full, ssa, base) = (medians[0], medians[1], medians[2]);
    outcome(
        full >= ssa && ssa >= base - 0.02,
        format!("medians full {full:.4}, base_ssa {ssa:.4}, base {base:.4} [{}]", detail.join("; ")),
    )
}

fn files(root: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else if path.file_name().unwrap() != "effective_config.json" {
                out.push((path.strip_prefix(root).unwrap().to_path_buf(), fs::read(&path).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn determinism(root: &Path) -> Outcome {
    let a = scene_config(&root.join("rerun-a"), 0, Ablation::Full);
    let b = scene_config(&root.join("rerun-b"), 0, Ablation::Full);
    run_command(Command::Pipeline, &a).unwrap();
    run_command(Command::Pipeline, &b).unwrap();
    let (fa, fb) = (files(&a.out), files(&b.out));
    let names: Vec<String> = fa.iter().map(|(p, _)| p.display().to_string()).collect();
    let required = ["train/checkpoint.hcube", "detect/scores.hcube", "evaluate/metrics.csv"];
    let covered = required.iter().all(|r| names.iter().any(|n| n == r));
    let differing: Vec<String> =
        fa.iter().zip(&fb).filter(|(x, y)| x != y).map(|(x, _)| x.0.display().to_string()).collect();
    outcome(
        covered && fa.len() == fb.len() && differing.is_empty(),
        format!("{} output files compared, differing {differing:?}", fa.len()),
    )
}

fn main() -> ExitCode {
    let tmp = tempfile::TempDir::new().unwrap();
    let root = tmp.path();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("gradient suite", Box::new(gradient_suite)),
        ("focal-loss algebra", Box::new(focal_algebra)),
        ("stop-gradient guard", Box::new(stop_gradient_guard)),
        ("metric oracles", Box::new(metric_oracles)),
        ("detector oracles", Box::new(detector_oracles)),
        ("synthetic end-to-end", Box::new(|| end_to_end(root))),
        ("ablation ordering", Box::new(|| ablation_ordering(root))),
        ("determinism", Box::new(|| determinism(root))),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        failed += usize::from(!o.pass);
        println!("criterion {} {name}: {} ({})", i + 1, if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
