use serde::{Deserialize, Serialize};

use crate::dynamics::Series;
use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// Window geometry: `dim` past values spaced `lag` samples apart predict the
/// next `horizon` samples.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbeddingSpec {
    #[serde(rename = "D")]
    pub dim: usize,
    #[serde(rename = "T")]
    pub lag: usize,
    #[serde(rename = "H")]
    pub horizon: usize,
}

impl Default for EmbeddingSpec {
    fn default() -> Self {
        Self {
            dim: 5,
            lag: 1,
            horizon: 10,
        }
    }
}

impl EmbeddingSpec {
    pub fn new(dim: usize, lag: usize, horizon: usize) -> Result<Self> {
        let s = Self { dim, lag, horizon };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim < 2 || self.lag < 1 || self.horizon < 1 {
            return Err(Error::Parameter(format!(
                "embedding needs D >= 2, T >= 1, H >= 1 (got D={}, T={}, H={})",
                self.dim, self.lag, self.horizon
            )));
        }
        Ok(())
    }

    /// Samples spanned by the input window, minus one: `(D-1)·T`.
    pub fn input_extent(&self) -> usize {
        (self.dim - 1) * self.lag
    }

    /// Minimum series length that yields one window.
    pub fn min_len(&self) -> usize {
        self.input_extent() + self.horizon + 1
    }

    /// Index `M` of the last window for a series of `len` samples, if any.
    pub fn last_window(&self, len: usize) -> Option<usize> {
        (len >= self.min_len()).then(|| len - 1 - self.input_extent() - self.horizon)
    }

    /// Highest sample index touched by window `t` (its last target).
    pub fn last_index_of_window(&self, t: usize) -> usize {
        t + self.input_extent() + self.horizon
    }
}

/// Aligned windows for both streams. Row `r` is window `t = origin + r`:
///
/// * `x[r][j]  = x_{t + jT}`,            j < D
/// * `xd[r][j] = x'_{t + jT}`,           j < D-1
/// * `y[r][k-1]  = x_{t + (D-1)T + k}`,  1 <= k <= H
/// * `yd[r][k-1] = x'_{t + (D-2)T + k}`, 1 <= k <= H
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowedDataset {
    pub spec: EmbeddingSpec,
    /// Window index of the first row in the source series.
    pub origin: usize,
    #[serde(rename = "X")]
    pub x: Matrix,
    #[serde(rename = "Xd")]
    pub xd: Matrix,
    #[serde(rename = "Y")]
    pub y: Matrix,
    #[serde(rename = "Yd")]
    pub yd: Matrix,
}

impl WindowedDataset {
    pub fn len(&self) -> usize {
        self.x.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Consecutive rows `range` as a dataset of their own.
    pub fn slice(&self, range: std::ops::Range<usize>) -> WindowedDataset {
        WindowedDataset {
            spec: self.spec,
            origin: self.origin + range.start,
            x: self.x.slice_rows(range.clone()),
            xd: self.xd.slice_rows(range.clone()),
            y: self.y.slice_rows(range.clone()),
            yd: self.yd.slice_rows(range),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        let n = self.len();
        let (d, h) = (self.spec.dim, self.spec.horizon);
        let checks = [
            ("X", &self.x, d),
            ("Xd", &self.xd, d - 1),
            ("Y", &self.y, h),
            ("Yd", &self.yd, h),
        ];
        for (name, m, cols) in checks {
            if m.rows() != n || m.cols() != cols {
                return Err(Error::shape(
                    "WindowedDataset",
                    format!("{name} {n}x{cols}"),
                    format!("{}x{}", m.rows(), m.cols()),
                ));
            }
        }
        Ok(())
    }
}

pub fn build_windows(values: &Series, diffs: &Series, spec: &EmbeddingSpec) -> Result<WindowedDataset> {
    build_windows_from(&values.values, &diffs.values, spec)
}

pub fn build_windows_from(values: &[f64], diffs: &[f64], spec: &EmbeddingSpec) -> Result<WindowedDataset> {
    spec.validate()?;
    if values.len() != diffs.len() {
        return Err(Error::shape("build_windows series lengths", values.len(), diffs.len()));
    }
    let Some(m) = spec.last_window(values.len()) else {
        return Err(Error::Parameter(format!(
            "series of length {} is too short: D={}, T={}, H={} need at least {} samples",
            values.len(),
            spec.dim,
            spec.lag,
            spec.horizon,
            spec.min_len()
        )));
    };
    let (d, lag, h) = (spec.dim, spec.lag, spec.horizon);
    let rows = m + 1;
    let mut x = Vec::with_capacity(rows * d);
    let mut xd = Vec::with_capacity(rows * (d - 1));
    let mut y = Vec::with_capacity(rows * h);
    let mut yd = Vec::with_capacity(rows * h);
    for t in 0..rows {
        x.extend((0..d).map(|j| values[t + j * lag]));
        xd.extend((0..d - 1).map(|j| diffs[t + j * lag]));
        y.extend((1..=h).map(|k| values[t + (d - 1) * lag + k]));
        yd.extend((1..=h).map(|k| diffs[t + (d - 2) * lag + k]));
    }
    Ok(WindowedDataset {
        spec: *spec,
        origin: 0,
        x: Matrix::from_vec(rows, d, x)?,
        xd: Matrix::from_vec(rows, d - 1, xd)?,
        y: Matrix::from_vec(rows, h, y)?,
        yd: Matrix::from_vec(rows, h, yd)?,
    })
}

/// Number of training windows for a chronological split of `n_windows`.
pub fn train_count(n_windows: usize, train_frac: f64) -> Result<usize> {
    if !(train_frac > 0.0 && train_frac < 1.0) {
        return Err(Error::Parameter(format!("train fraction {train_frac} not in (0, 1)")));
    }
    let n_train = (n_windows as f64 * train_frac).floor() as usize;
    if n_train == 0 || n_train >= n_windows {
        return Err(Error::Parameter(format!(
            "splitting {n_windows} windows at {train_frac} leaves an empty partition"
        )));
    }
    Ok(n_train)
}

/// Chronological split: the first `floor(n·train_frac)` windows train.
pub fn split_train_test(ds: &WindowedDataset, train_frac: f64) -> Result<(WindowedDataset, WindowedDataset)> {
    let n = ds.len();
    let n_train = train_count(n, train_frac)?;
    Ok((ds.slice(0..n_train), ds.slice(n_train..n)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ramp(n: usize) -> (Series, Series) {
        let v = Series::new("v", (0..n).map(|i| i as f64).collect(), 1.0).unwrap();
        let d = Series::new("d", (0..n).map(|i| 1000.0 + i as f64).collect(), 1.0).unwrap();
        (v, d)
    }

    #[test]
    fn window_count_follows_last_index_formula() {
        // N = 20 (21 samples): M = 20 - 4 - 10 = 6.
        let (v, d) = ramp(21);
        let ds = build_windows(&v, &d, &EmbeddingSpec::default()).unwrap();
        assert_eq!(ds.len(), 7);
        ds.validate().unwrap();
    }

    #[test]
    fn first_window_alignment() {
        let (v, d) = ramp(21);
        let ds = build_windows(&v, &d, &EmbeddingSpec::default()).unwrap();
        assert_eq!(ds.x.row(0), &[0.0, 1.0, 2.0, 3.0, 4.0]);
        assert_eq!(ds.y.row(0), &(5..15).map(|i| i as f64).collect::<Vec<_>>()[..]);
        assert_eq!(ds.xd.row(0).len(), 4);
        for k in 1..=10 {
            assert_eq!(ds.yd.get(0, k - 1), 1000.0 + (3 + k) as f64);
        }
    }

    #[test]
    fn too_short_reports_minimum() {
        let (v, d) = ramp(14);
        let err = build_windows(&v, &d, &EmbeddingSpec::default()).unwrap_err();
        assert!(err.to_string().contains("at least 15"), "{err}");
    }

    #[test]
    fn mismatched_lengths_rejected() {
        let (v, _) = ramp(30);
        let (_, d) = ramp(29);
        assert!(build_windows(&v, &d, &EmbeddingSpec::default()).is_err());
    }

    #[test]
    fn split_counts() {
        let (v, d) = ramp(24);
        let ds = build_windows(&v, &d, &EmbeddingSpec::default()).unwrap();
        assert_eq!(ds.len(), 10);
        let (tr, te) = split_train_test(&ds, 0.6).unwrap();
        assert_eq!((tr.len(), te.len()), (6, 4));
        assert_eq!(te.origin, 6);
        // Every training window precedes every test window.
        assert!(tr.x.get(tr.len() - 1, 0) < te.x.get(0, 0));

        let (v, d) = ramp(21);
        let ds = build_windows(&v, &d, &EmbeddingSpec::default()).unwrap();
        let (tr, te) = split_train_test(&ds, 0.6).unwrap();
        assert_eq!((tr.len(), te.len()), (4, 3));
    }

    #[test]
    fn split_rejects_empty_partitions() {
        let (v, d) = ramp(16);
        let ds = build_windows(&v, &d, &EmbeddingSpec::default()).unwrap();
        assert_eq!(ds.len(), 2);
        assert!(split_train_test(&ds, 0.4).is_err());
        assert!(split_train_test(&ds, 1.0).is_err());
        assert!(split_train_test(&ds, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn windows_reconstruct_series_without_lookahead(
            len in 12usize..80,
            dim in 2usize..6,
            lag in 1usize..4,
            horizon in 1usize..6,
        ) {
            let spec = EmbeddingSpec::new(dim, lag, horizon).unwrap();
            prop_assume!(len >= spec.min_len());
            let vals: Vec<f64> = (0..len).map(|i| (i as f64 * 0.37).sin() + i as f64).collect();
            let difs: Vec<f64> = (0..len).map(|i| -(i as f64) - 0.5).collect();
            let ds = build_windows_from(&vals, &difs, &spec).unwrap();
            let m = len - 1 - (dim - 1) * lag - horizon;
            prop_assert_eq!(ds.len(), m + 1);
            let n = len - 1;
            for t in 0..ds.len() {
                for j in 0..dim {
                    prop_assert_eq!(ds.x.get(t, j).to_bits(), vals[t + j * lag].to_bits());
                }
                for j in 0..dim - 1 {
                    prop_assert_eq!(ds.xd.get(t, j).to_bits(), difs[t + j * lag].to_bits());
                }
                for k in 1..=horizon {
                    prop_assert_eq!(ds.y.get(t, k - 1).to_bits(), vals[t + (dim - 1) * lag + k].to_bits());
                    let di = t + (dim - 2) * lag + k;
                    prop_assert!(di <= n - lag);
                    prop_assert_eq!(ds.yd.get(t, k - 1).to_bits(), difs[di].to_bits());
                }
                // `vals` is strictly increasing, so values order like indices:
                // every input precedes every target.
                let max_in = ds.x.row(t).iter().cloned().fold(f64::MIN, f64::max);
                let min_out = ds.y.row(t).iter().cloned().fold(f64::MAX, f64::min);
                prop_assert!(max_in < min_out);
            }
        }
    }
}
