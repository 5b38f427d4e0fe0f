//! Privacy-accuracy evaluation: a linear inspector, distortion metrics,
//! parameter sweeps and image montages.

mod classifier;
mod metrics;
mod montage;
mod sweep;

pub use classifier::{evaluate, train_classifier, LinearClassifier, TrainSettings};
pub use metrics::{distortion, image_mse, psnr_from_mse, spearman, Distortion};
pub use montage::{montage, write_montage, SEPARATOR};
pub use sweep::{
    cell_seed, sweep, sweep_with_classifier, CellStatus, SweepCell, SweepResult, SweepSettings,
    CSV_HEADER,
};
