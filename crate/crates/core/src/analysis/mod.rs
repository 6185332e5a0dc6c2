//! Post-processing of scans and trajectories.

mod average;
mod fit;
mod stft;

pub use average::{average_trace, moving_average};
pub use fit::{fit_model, fit_objective, FitBounds, FitOptions, FitResult, FOLD_WEIGHT};
pub use stft::{
    dominant_frequency, stft, DominantFrequency, Series, Spectrogram, StftOptions, WindowFunction,
    DEFAULT_HOP, DEFAULT_WINDOW_LEN, PEAK_TO_MEDIAN,
};
