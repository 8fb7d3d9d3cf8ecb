//! From raw (value, derivative) series to scaled, aligned training windows.

mod fnn;
mod io;
mod savgol;
mod scale;
mod windows;

pub use fnn::{false_nearest_neighbors, false_neighbor_fraction, FnnConfig, FnnResult};
pub use io::{read_series_csv, read_two_column_csv, write_two_column_csv, CsvOptions};
pub use savgol::{derivative_weights, savitzky_golay_derivative, SavGolSpec};
pub use scale::{apply_scale, fit_scale, fit_scale_values, unscale, ScaleParams};
pub use windows::{
    build_windows, build_windows_from, split_train_test, train_count, EmbeddingSpec, WindowedDataset,
};
