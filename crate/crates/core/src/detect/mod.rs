//! Classical change detectors, thresholding and evaluation metrics.

mod kmeans;
mod maps;
mod metrics;
mod rx;
mod scores;

pub use kmeans::{kmeans2, kmeans2_threshold, Kmeans2};
pub use maps::{BinaryChangeMap, ChangeScoreMap, Label, LabelMap};
pub use metrics::{
    confusion_counts, confusion_metrics, roc_auc, separability_stats, BinaryMetrics, ConfusionCounts,
    FiveNumber, RocCurve, SeparabilityStats,
};
pub use rx::{diff_rx, rx_score, RxModel, RX_RIDGE, RX_RIDGE_FLOOR};
pub use scores::{cosine_distance_map, cva_magnitude};
