use serde::{Deserialize, Serialize};

use crate::dynamics::Series;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SavGolSpec {
    /// Odd number of samples in each local fit.
    pub window: usize,
    pub polyorder: usize,
    /// Sample spacing. When `None`, the series' own `dt` is used.
    #[serde(default)]
    pub dt: Option<f64>,
}

impl Default for SavGolSpec {
    fn default() -> Self {
        Self {
            window: 5,
            polyorder: 3,
            dt: None,
        }
    }
}

impl SavGolSpec {
    pub fn validate(&self) -> Result<()> {
        if self.window % 2 == 0 {
            return Err(Error::Parameter(format!("Savitzky-Golay window {} must be odd", self.window)));
        }
        if self.polyorder < 1 || self.polyorder >= self.window {
            return Err(Error::Parameter(format!(
                "Savitzky-Golay needs window > polyorder >= 1 (window {}, polyorder {})",
                self.window, self.polyorder
            )));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0) {
                return Err(Error::Parameter(format!("Savitzky-Golay dt must be positive, got {dt}")));
            }
        }
        Ok(())
    }
}

/// Convolution weights giving the first derivative (per sample) of the local
/// least-squares polynomial at the window centre. `weights[k]` multiplies the
/// sample at offset `k - window/2`.
pub fn derivative_weights(window: usize, polyorder: usize) -> Result<Vec<f64>> {
    SavGolSpec {
        window,
        polyorder,
        dt: None,
    }
    .validate()?;
    let half = (window / 2) as i64;
    let cols = polyorder + 1;
    // Vandermonde rows A[i][j] = (i - half)^j.
    let design: Vec<Vec<f64>> = (-half..=half)
        .map(|o| (0..cols).map(|j| (o as f64).powi(j as i32)).collect())
        .collect();
    let mut normal = vec![vec![0.0; cols]; cols];
    for row in &design {
        for a in 0..cols {
            for b in 0..cols {
                normal[a][b] += row[a] * row[b];
            }
        }
    }
    // The fitted polynomial's slope at 0 is its linear coefficient, i.e.
    // e1ᵀ (AᵀA)⁻¹ Aᵀ y. Solve (AᵀA) z = e1 and project.
    let mut rhs = vec![0.0; cols];
    rhs[1] = 1.0;
    let z = solve(normal, rhs)?;
    Ok(design
        .iter()
        .map(|row| row.iter().zip(&z).map(|(a, b)| a * b).sum())
        .collect())
}

/// Gaussian elimination with partial pivoting.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap_or(col);
        if a[pivot][col].abs() < 1e-300 {
            return Err(Error::Numeric("singular Savitzky-Golay normal matrix".into()));
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let tail: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    Ok(x)
}

/// Smoothed first derivative of `series`, in value units per time unit.
///
/// Both ends are mirror-padded by `window/2` samples (reflection about the end
/// sample, which is not repeated), so the output has the input's length.
pub fn savitzky_golay_derivative(series: &Series, spec: &SavGolSpec) -> Result<Series> {
    spec.validate()?;
    let n = series.len();
    if n < spec.window {
        return Err(Error::Parameter(format!(
            "series of length {n} is shorter than the Savitzky-Golay window {}",
            spec.window
        )));
    }
    let dt = spec.dt.unwrap_or(series.dt);
    let weights = derivative_weights(spec.window, spec.polyorder)?;
    let half = spec.window / 2;
    let x = &series.values;
    let at = |i: isize| -> f64 {
        let last = n as isize - 1;
        let j = if i < 0 {
            -i
        } else if i > last {
            2 * last - i
        } else {
            i
        };
        x[j as usize]
    };
    let out = (0..n as isize)
        .map(|c| {
            weights
                .iter()
                .enumerate()
                .map(|(k, w)| w * at(c + k as isize - half as isize))
                .sum::<f64>()
                / dt
        })
        .collect();
    Series::derivative(format!("{}_savgol_diff", series.name), out, series.dt, series)
}
