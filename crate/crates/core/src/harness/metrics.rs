use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::numerics::{Matrix, Vector};

use super::config::CiMethod;

/// RMSE of each column (horizon step) over all rows.
pub fn rmse_per_step(predictions: &Matrix, targets: &Matrix) -> Result<Vector> {
    if predictions.rows() != targets.rows() || predictions.cols() != targets.cols() {
        return Err(Error::shape(
            "rmse_per_step",
            format!("{}x{}", targets.rows(), targets.cols()),
            format!("{}x{}", predictions.rows(), predictions.cols()),
        ));
    }
    if predictions.rows() == 0 {
        return Err(Error::Parameter("rmse over zero windows".into()));
    }
    let (n, h) = (predictions.rows(), predictions.cols());
    let mut sums = vec![0.0; h];
    for (p, t) in predictions.row_iter().zip(targets.row_iter()) {
        for k in 0..h {
            let e = p[k] - t[k];
            sums[k] += e * e;
        }
    }
    Ok(Vector::from_vec(sums.into_iter().map(|s| (s / n as f64).sqrt()).collect()))
}

/// Horizon-level summary: `sqrt(Σ_k MSE_k)`, the root of the summed per-step
/// mean squared errors. Equals `sqrt(H)` times the pooled RMSE.
pub fn summed_rmse(per_step: &Vector) -> f64 {
    per_step.as_slice().iter().map(|r| r * r).sum::<f64>().sqrt()
}

/// RMSE over every entry of every step.
pub fn pooled_rmse(per_step: &Vector) -> f64 {
    let h = per_step.len().max(1) as f64;
    (per_step.as_slice().iter().map(|r| r * r).sum::<f64>() / h).sqrt()
}

/// Summary of one metric across runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation; `None` with fewer than two runs.
    pub sd: Option<f64>,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub min: f64,
    pub max: f64,
}

/// Mean, spread and 95% interval of `values`, which must be non-empty.
pub fn aggregate(values: &[f64], ci: CiMethod) -> Result<Aggregate> {
    if values.is_empty() {
        return Err(Error::Parameter("aggregate of zero values".into()));
    }
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let sd = (n > 1).then(|| {
        let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
        (ss / (n - 1) as f64).sqrt()
    });
    let half = match sd {
        None => 0.0,
        Some(sd) => critical_value(ci, n) * sd / (n as f64).sqrt(),
    };
    Ok(Aggregate {
        n,
        mean,
        sd,
        ci_lo: mean - half,
        ci_hi: mean + half,
        min: values.iter().cloned().fold(f64::INFINITY, f64::min),
        max: values.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    })
}

fn critical_value(ci: CiMethod, n: usize) -> f64 {
    match ci {
        CiMethod::Normal => 1.96,
        CiMethod::StudentT => StudentsT::new(0.0, 1.0, (n - 1) as f64)
            .map(|t| t.inverse_cdf(0.975))
            .unwrap_or(f64::NAN),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Flat loops over the raw numbers, no matrix helpers.
    fn oracle(pred: &[Vec<f64>], target: &[Vec<f64>]) -> Vec<f64> {
        let h = pred[0].len();
        let mut out = Vec::new();
        for k in 0..h {
            let mut s = 0.0;
            for r in 0..pred.len() {
                s += (pred[r][k] - target[r][k]).powi(2);
            }
            out.push((s / pred.len() as f64).sqrt());
        }
        out
    }

    #[test]
    fn exact_predictions_score_zero() {
        let m = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(rmse_per_step(&m, &m).unwrap().as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn two_by_two_case() {
        let p = Matrix::from_rows(&[vec![3.0, 4.0], vec![0.0, 0.0]]).unwrap();
        let t = Matrix::zeros(2, 2);
        let got = rmse_per_step(&p, &t).unwrap();
        assert!((got[0] - 4.5f64.sqrt()).abs() < 1e-15);
        assert!((got[1] - 8.0f64.sqrt()).abs() < 1e-15);
        let o = oracle(&[vec![3.0, 4.0], vec![0.0, 0.0]], &[vec![0.0; 2], vec![0.0; 2]]);
        assert_eq!(got.as_slice(), o.as_slice());
    }

    #[test]
    fn shape_mismatch() {
        assert!(rmse_per_step(&Matrix::zeros(2, 3), &Matrix::zeros(2, 2)).is_err());
    }

    #[test]
    fn summed_and_pooled() {
        let v = Vector::from_vec(vec![3.0, 4.0]);
        assert!((summed_rmse(&v) - 5.0).abs() < 1e-15);
        assert!((pooled_rmse(&v) - 12.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn single_run_has_null_sd_and_zero_width() {
        let a = aggregate(&[0.25], CiMethod::Normal).unwrap();
        assert_eq!(a.sd, None);
        assert_eq!((a.ci_lo, a.mean, a.ci_hi), (0.25, 0.25, 0.25));
    }

    #[test]
    fn normal_and_student_intervals() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let a = aggregate(&xs, CiMethod::Normal).unwrap();
        let sd = (5.0f64 / 3.0).sqrt();
        assert!((a.sd.unwrap() - sd).abs() < 1e-15);
        assert!((a.ci_hi - 2.5 - 1.96 * sd / 2.0).abs() < 1e-12);
        let t = aggregate(&xs, CiMethod::StudentT).unwrap();
        // t_{0.975, 3} = 3.182446305...
        assert!((t.ci_hi - 2.5 - 3.182446305284263 * sd / 2.0).abs() < 1e-9);
        assert_eq!((a.min, a.max), (1.0, 4.0));
    }

    proptest! {
        #[test]
        fn constant_offset_gives_offset(c in -5.0f64..5.0, rows in 1usize..6, cols in 1usize..5) {
            let t = Matrix::from_vec(rows, cols, (0..rows * cols).map(|i| i as f64 * 0.3).collect()).unwrap();
            let p = Matrix::from_vec(rows, cols, t.as_slice().iter().map(|v| v + c).collect()).unwrap();
            for r in rmse_per_step(&p, &t).unwrap().as_slice() {
                prop_assert!((r - c.abs()).abs() < 1e-12);
            }
        }

        #[test]
        fn mean_matches_plain_average(xs in proptest::collection::vec(-10.0f64..10.0, 1..40)) {
            let a = aggregate(&xs, CiMethod::Normal).unwrap();
            let plain = xs.iter().sum::<f64>() / xs.len() as f64;
            prop_assert!((a.mean - plain).abs() < 1e-12);
            prop_assert!(a.ci_lo <= a.mean && a.mean <= a.ci_hi);
        }
    }
}
