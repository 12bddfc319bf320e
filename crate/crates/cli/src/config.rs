use std::path::{Path, PathBuf};

use hyperchange::io::SynthConfig;
use hyperchange::model::{Ablation, ModelConfig};
use hyperchange::training::{Predetector, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    /// Anomalous change detection: Diff-RX scores, judged by ROC/AUC.
    #[default]
    Hacd,
    /// Binary change detection: cosine distance thresholded by 2-means.
    Hbcd,
}

impl Task {
    pub fn predetector(self) -> Predetector {
        match self {
            Task::Hacd => Predetector::DiffRx,
            Task::Hbcd => Predetector::Cva,
        }
    }
}

/// Everything a command needs. Unset input paths fall back to the files an
/// earlier command wrote under `out`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub task: Task,
    pub x1: Option<PathBuf>,
    pub x2: Option<PathBuf>,
    pub truth: Option<PathBuf>,
    pub out: PathBuf,
    /// When set, overrides `train.ablation`.
    pub ablation: Option<Ablation>,
    /// Number of horizontal strips processed independently; 1 keeps the whole image.
    pub tile: usize,
    pub train: TrainConfig,
    pub synth: SynthConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            task: Task::Hacd,
            x1: None,
            x2: None,
            truth: None,
            out: PathBuf::from("hyperchange-out"),
            ablation: None,
            tile: 1,
            // Sized for the default 64x64 synthetic scene.
            train: TrainConfig {
                mask_size: 200,
                model: ModelConfig { n: 16, ..ModelConfig::default() },
                ..TrainConfig::default()
            },
            synth: SynthConfig::default(),
        }
    }
}

/// Command-line values that take precedence over the config file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub ablation: Option<Ablation>,
    pub task: Option<Task>,
    pub tile: Option<usize>,
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::config(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Applies overrides and settles the derived fields, so the result is
    /// exactly what the commands run with.
    pub fn resolve(mut self, o: &Overrides) -> CliResult<Self> {
        if let Some(out) = &o.out {
            self.out = out.clone();
        }
        if let Some(seed) = o.seed {
            self.train.seed = seed;
            self.synth.seed = seed;
        }
        if let Some(task) = o.task {
            self.task = task;
        }
        if let Some(tile) = o.tile {
            self.tile = tile;
        }
        if let Some(a) = o.ablation.or(self.ablation) {
            self.train.ablation = a;
        }
        self.ablation = Some(self.train.ablation);
        self.train.predetector = self.task.predetector();
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.tile == 0 {
            return Err(CliError::config("tile: must be at least 1"));
        }
        if self.x1.is_some() != self.x2.is_some() {
            return Err(CliError::config("x1/x2: give both input images or neither"));
        }
        for (field, path) in [("x1", &self.x1), ("x2", &self.x2), ("truth", &self.truth)] {
            if let Some(p) = path {
                if !p.is_file() {
                    return Err(CliError::config(format!("{field}: no such file {}", p.display())));
                }
            }
        }
        self.train.validate().map_err(|e| CliError::config(e.to_string()))
    }

    pub fn layout(&self) -> Layout {
        Layout { root: self.out.clone() }
    }
}

/// Where each command writes, one subdirectory per command.
#[derive(Clone, Debug)]
pub struct Layout {
    pub root: PathBuf,
}

impl Layout {
    pub fn dir(&self, command: &str) -> PathBuf {
        self.root.join(command)
    }

    pub fn synth_x1(&self) -> PathBuf {
        self.dir("synth").join("x1.hcube")
    }

    pub fn synth_x2(&self) -> PathBuf {
        self.dir("synth").join("x2.hcube")
    }

    pub fn synth_truth(&self) -> PathBuf {
        self.dir("synth").join("truth.pgm")
    }

    pub fn mask(&self) -> PathBuf {
        self.dir("predetect").join("mask.pgm")
    }

    pub fn predetect_scores(&self) -> PathBuf {
        self.dir("predetect").join("scores.hcube")
    }

    pub fn checkpoint(&self, tile: usize, tiles: usize) -> PathBuf {
        let name = if tiles == 1 { "checkpoint.hcube".to_string() } else { format!("checkpoint_tile{tile}.hcube") };
        self.dir("train").join(name)
    }

    pub fn loss_csv(&self, tile: usize, tiles: usize) -> PathBuf {
        let name = if tiles == 1 { "loss.csv".to_string() } else { format!("loss_tile{tile}.csv") };
        self.dir("train").join(name)
    }

    pub fn detect_scores(&self) -> PathBuf {
        self.dir("detect").join("scores.hcube")
    }

    pub fn detect_map(&self) -> PathBuf {
        self.dir("detect").join("map.pgm")
    }

    pub fn metrics(&self) -> PathBuf {
        self.dir("evaluate").join("metrics.csv")
    }

    pub fn roc(&self) -> PathBuf {
        self.dir("evaluate").join("roc.csv")
    }
}
