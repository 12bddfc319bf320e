use std::path::{Path, PathBuf};

use hyperchange::detect::{
    confusion_counts, cosine_distance_map, cva_magnitude, diff_rx, kmeans2_threshold, roc_auc, separability_stats,
    ChangeScoreMap, FiveNumber,
};
use hyperchange::io::{
    read_binary_map, read_hcube, read_mask, read_pseudo_mask, read_scores, synth_bitemporal, write_binary_map,
    write_hcube, write_mask, write_pseudo_mask, write_score_pgm, write_scores, HsiCube,
};
use hyperchange::model::{load_checkpoint, save_checkpoint};
use hyperchange::training::{build_pseudo_mask, train_with, PseudoMask};

use crate::config::{PipelineConfig, Task};
use crate::error::{CliError, CliResult};
use crate::tiles::{mask_rows, stitch_masks, stitch_scores, strips};

fn prepare_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|source| CliError::Output { path: dir.display().to_string(), source })
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|source| CliError::Output { path: path.display().to_string(), source })
}

/// Creates the command's output directory and records the configuration it runs with.
fn start(cfg: &PipelineConfig, command: &str) -> CliResult<PathBuf> {
    start_in(cfg, cfg.layout().dir(command))
}

fn start_in(cfg: &PipelineConfig, dir: PathBuf) -> CliResult<PathBuf> {
    prepare_dir(&dir)?;
    let json = serde_json::to_string_pretty(cfg).map_err(|e| CliError::config(e.to_string()))?;
    write_text(&dir.join("effective_config.json"), &(json + "\n"))?;
    Ok(dir)
}

fn existing(field: &str, path: PathBuf) -> CliResult<PathBuf> {
    if path.is_file() {
        Ok(path)
    } else {
        Err(CliError::config(format!("{field}: no such file {}", path.display())))
    }
}

fn input_paths(cfg: &PipelineConfig) -> CliResult<(PathBuf, PathBuf)> {
    let layout = cfg.layout();
    let x1 = cfg.x1.clone().unwrap_or_else(|| layout.synth_x1());
    let x2 = cfg.x2.clone().unwrap_or_else(|| layout.synth_x2());
    Ok((existing("x1", x1)?, existing("x2", x2)?))
}

fn truth_path(cfg: &PipelineConfig) -> PathBuf {
    cfg.truth.clone().unwrap_or_else(|| cfg.layout().synth_truth())
}

/// Both images, each min-max normalized per band.
fn load_pair(cfg: &PipelineConfig) -> CliResult<(HsiCube<f64>, HsiCube<f64>)> {
    let (p1, p2) = input_paths(cfg)?;
    let x1: HsiCube<f64> = read_hcube(&p1)?;
    let x2: HsiCube<f64> = read_hcube(&p2)?;
    if !x1.same_shape(&x2) {
        return Err(CliError::config(format!(
            "x1/x2: shapes differ ({}x{}x{} vs {}x{}x{})",
            x1.height, x1.width, x1.bands, x2.height, x2.width, x2.bands
        )));
    }
    Ok((x1.normalize(), x2.normalize()))
}

fn csv_writer(path: &Path) -> CliResult<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

fn csv_error(path: &Path) -> impl Fn(csv::Error) -> CliError + '_ {
    move |e| CliError::config(format!("{}: {e}", path.display()))
}

fn write_rows<R: serde::Serialize>(path: &Path, header: &[&str], rows: impl IntoIterator<Item = R>) -> CliResult<()> {
    let mut w = csv_writer(path)?;
    w.write_record(header).map_err(csv_error(path))?;
    for row in rows {
        w.serialize(row).map_err(csv_error(path))?;
    }
    w.flush().map_err(|source| CliError::Output { path: path.display().to_string(), source })
}

pub fn cmd_synth(cfg: &PipelineConfig) -> CliResult<()> {
    let scene = synth_bitemporal::<f64>(&cfg.synth)?;
    let layout = cfg.layout();
    start(cfg, "synth")?;
    write_hcube(&scene.x1, layout.synth_x1())?;
    write_hcube(&scene.x2, layout.synth_x2())?;
    write_mask(&scene.truth, layout.synth_truth())?;
    eprintln!(
        "synth: {}x{}x{} pair with {} changed pixels",
        scene.x1.height,
        scene.x1.width,
        scene.x1.bands,
        scene.truth.labels.iter().filter(|&&l| l == hyperchange::detect::Label::Changed).count()
    );
    Ok(())
}

pub fn cmd_predetect(cfg: &PipelineConfig) -> CliResult<()> {
    let (x1, x2) = load_pair(cfg)?;
    let dir = start(cfg, "predetect")?;
    let mut scores = Vec::new();
    let mut masks = Vec::new();
    for rows in strips(x1.height, cfg.tile)? {
        let (a, b) = (x1.rows(rows.clone()), x2.rows(rows));
        let s = match cfg.task {
            Task::Hacd => diff_rx(&a, &b)?,
            Task::Hbcd => cva_magnitude(&a, &b)?,
        };
        masks.push(build_pseudo_mask(&s, cfg.train.mask_size)?);
        scores.push(s);
    }
    let scores = stitch_scores(scores)?;
    let mask = stitch_masks(&masks)?;
    let layout = cfg.layout();
    write_scores(&scores, layout.predetect_scores())?;
    write_score_pgm(&scores, dir.join("scores.pgm"))?;
    write_pseudo_mask(&mask, layout.mask())?;
    eprintln!("predetect: selected {} of {} pixels ({:.2}%)", mask.count(), scores.len(), 100.0 * mask.ratio());
    Ok(())
}

pub fn cmd_train(cfg: &PipelineConfig) -> CliResult<()> {
    let (x1, x2) = load_pair(cfg)?;
    let layout = cfg.layout();
    let mask = read_pseudo_mask(existing("mask", layout.mask())?)?;
    if (mask.height(), mask.width()) != (x1.height, x1.width) {
        return Err(CliError::config(format!(
            "mask: {}x{} mask for {}x{} images",
            mask.height(),
            mask.width(),
            x1.height,
            x1.width
        )));
    }
    start(cfg, "train")?;
    let parts = strips(x1.height, cfg.tile)?;
    let tiles = parts.len();
    for (k, rows) in parts.into_iter().enumerate() {
        let tile_mask: PseudoMask = mask_rows(&mask, rows.clone())?;
        let (a, b) = (x1.rows(rows.clone()), x2.rows(rows));
        let epochs = cfg.train.epochs;
        let (net, report) = train_with(&a, &b, &tile_mask, &cfg.train, |r| {
            if r.epoch == 1 || r.epoch % 10 == 0 || r.epoch == epochs {
                eprintln!("train: tile {}/{tiles} epoch {}/{epochs} lr {:.5} loss {:.6}", k + 1, r.epoch, r.lr, r.loss);
            }
        })?;
        save_checkpoint(&net, layout.checkpoint(k, tiles))?;
        let path = layout.loss_csv(k, tiles);
        write_rows(&path, &["epoch", "lr", "loss"], report.trajectory())?;
    }
    Ok(())
}

pub fn cmd_detect(cfg: &PipelineConfig) -> CliResult<()> {
    let (x1, x2) = load_pair(cfg)?;
    let layout = cfg.layout();
    let parts = strips(x1.height, cfg.tile)?;
    let tiles = parts.len();
    let model = cfg.train.model_for(x1.bands);
    let mut scores = Vec::new();
    for (k, rows) in parts.into_iter().enumerate() {
        let path = existing("checkpoint", layout.checkpoint(k, tiles))?;
        let mut net = load_checkpoint::<f64>(&model, &path)
            .map_err(|e| CliError::config(format!("checkpoint {}: {e}", path.display())))?;
        let f1 = net.features(&x1.rows(rows.clone()))?;
        let f2 = net.features(&x2.rows(rows))?;
        scores.push(match cfg.task {
            Task::Hacd => diff_rx(&f1, &f2)?,
            Task::Hbcd => cosine_distance_map(&f1, &f2)?,
        });
    }
    let scores: ChangeScoreMap<f64> = stitch_scores(scores)?;
    let dir = start(cfg, "detect")?;
    write_scores(&scores, layout.detect_scores())?;
    write_score_pgm(&scores, dir.join("scores.pgm"))?;
    if cfg.task == Task::Hbcd {
        let map = kmeans2_threshold(&scores);
        write_binary_map(&map, layout.detect_map())?;
        eprintln!("detect: {} of {} pixels changed", map.changed_count(), scores.len());
    }
    Ok(())
}

fn five_rows(prefix: &str, f: &FiveNumber) -> Vec<(String, f64)> {
    [("min", f.min), ("q25", f.q25), ("median", f.median), ("q75", f.q75), ("max", f.max)]
        .into_iter()
        .map(|(k, v)| (format!("{prefix}_{k}"), v))
        .collect()
}

pub fn cmd_evaluate(cfg: &PipelineConfig) -> CliResult<()> {
    let layout = cfg.layout();
    let truth = read_mask(existing("truth", truth_path(cfg))?)?;
    let mut metrics: Vec<(String, f64)> = Vec::new();
    let single_class = |e: hyperchange::Error| CliError::config(format!("truth: {e}"));
    match cfg.task {
        Task::Hacd => {
            let scores: ChangeScoreMap<f64> = read_scores(existing("scores", layout.detect_scores())?)?;
            let roc = roc_auc(&scores, &truth).map_err(single_class)?;
            let sep = separability_stats(&scores, &truth).map_err(single_class)?;
            metrics.push(("auc".into(), roc.auc));
            metrics.extend(five_rows("change", &sep.change));
            metrics.extend(five_rows("background", &sep.background));
            start(cfg, "evaluate")?;
            let rows = roc.thresholds.iter().zip(&roc.points).map(|(&t, &(fa, pd))| (t, fa, pd));
            write_rows(&layout.roc(), &["threshold", "false_alarm_rate", "detection_probability"], rows)?;
            eprintln!("evaluate: auc {:.4}", roc.auc);
        }
        Task::Hbcd => {
            let map = read_binary_map(existing("map", layout.detect_map())?)?;
            let counts = confusion_counts(&map, &truth).map_err(single_class)?;
            let m = counts.metrics();
            metrics.extend([
                ("oa".to_string(), m.oa),
                ("kappa".into(), m.kappa),
                ("f1".into(), m.f1),
                ("precision".into(), m.precision),
                ("recall".into(), m.recall),
                ("tp".into(), counts.tp as f64),
                ("tn".into(), counts.tn as f64),
                ("fp".into(), counts.fp as f64),
                ("fn".into(), counts.fn_ as f64),
            ]);
            start(cfg, "evaluate")?;
            eprintln!("evaluate: oa {:.4} kappa {:.4} f1 {:.4}", m.oa, m.kappa, m.f1);
        }
    }
    write_rows(&layout.metrics(), &["metric", "value"], metrics)
}

/// synth (when no inputs are configured), predetect, train, detect, and
/// evaluate (when a reference map is available).
pub fn cmd_pipeline(cfg: &PipelineConfig) -> CliResult<()> {
    start_in(cfg, cfg.out.clone())?;
    if cfg.x1.is_none() {
        cmd_synth(cfg)?;
    }
    cmd_predetect(cfg)?;
    cmd_train(cfg)?;
    cmd_detect(cfg)?;
    if truth_path(cfg).is_file() {
        cmd_evaluate(cfg)?;
    }
    Ok(())
}
