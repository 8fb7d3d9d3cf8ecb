use serde::{Deserialize, Serialize};

use crate::dynamics::Series;
use crate::error::{Error, Result};

/// Affine min-max map from `[data_min, data_max]` onto `[target_lo, target_hi]`.
///
/// Inputs outside the fitted range extrapolate along the same line.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleParams {
    pub data_min: f64,
    pub data_max: f64,
    pub target_lo: f64,
    pub target_hi: f64,
}

impl ScaleParams {
    pub fn new(data_min: f64, data_max: f64, target_lo: f64, target_hi: f64) -> Result<Self> {
        if !(data_max > data_min) {
            return Err(Error::DegenerateRange(data_min));
        }
        if !(target_hi > target_lo) {
            return Err(Error::Parameter(format!("target range [{target_lo}, {target_hi}] is empty")));
        }
        Ok(Self {
            data_min,
            data_max,
            target_lo,
            target_hi,
        })
    }

    /// Output units per input unit.
    pub fn gain(&self) -> f64 {
        (self.target_hi - self.target_lo) / (self.data_max - self.data_min)
    }

    pub fn scale(&self, x: f64) -> f64 {
        self.target_lo + (x - self.data_min) * self.gain()
    }

    pub fn unscale(&self, y: f64) -> f64 {
        self.data_min + (y - self.target_lo) / self.gain()
    }

    pub fn scale_slice(&self, xs: &[f64]) -> Vec<f64> {
        xs.iter().map(|&x| self.scale(x)).collect()
    }

    pub fn unscale_slice(&self, ys: &[f64]) -> Vec<f64> {
        ys.iter().map(|&y| self.unscale(y)).collect()
    }
}

pub fn fit_scale_values(values: &[f64], target_lo: f64, target_hi: f64) -> Result<ScaleParams> {
    if values.is_empty() {
        return Err(Error::Parameter("cannot fit a scale to an empty series".into()));
    }
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    ScaleParams::new(lo, hi, target_lo, target_hi)
}

pub fn fit_scale(series: &Series, target_lo: f64, target_hi: f64) -> Result<ScaleParams> {
    fit_scale_values(&series.values, target_lo, target_hi)
}

pub fn apply_scale(params: &ScaleParams, series: &Series) -> Series {
    Series {
        values: params.scale_slice(&series.values),
        ..series.clone()
    }
}

pub fn unscale(params: &ScaleParams, series: &Series) -> Series {
    Series {
        values: params.unscale_slice(&series.values),
        ..series.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Rng;

    #[test]
    fn midpoint_and_endpoints() {
        let s = Series::new("s", vec![0.0, 3.0, 10.0], 1.0).unwrap();
        let p = fit_scale(&s, -0.5, 0.5).unwrap();
        assert_eq!(p.scale(5.0), 0.0);
        assert_eq!(p.scale(0.0), -0.5);
        assert_eq!(p.scale(10.0), 0.5);
        let got = apply_scale(&p, &s).values;
        for (g, e) in got.iter().zip([-0.5, -0.2, 0.5]) {
            assert!((g - e).abs() < 1e-15, "{got:?}");
        }
    }

    #[test]
    fn constant_series_is_degenerate() {
        let s = Series::new("s", vec![2.0; 5], 1.0).unwrap();
        assert!(matches!(fit_scale(&s, -0.5, 0.5), Err(Error::DegenerateRange(_))));
    }

    #[test]
    fn extrapolates_affinely() {
        let p = ScaleParams::new(0.0, 10.0, -0.5, 0.5).unwrap();
        assert!((p.scale(20.0) - 1.5).abs() < 1e-15);
        assert!((p.scale(-10.0) + 1.5).abs() < 1e-15);
    }

    #[test]
    fn roundtrip_identity() {
        let p = ScaleParams::new(-3.7, 41.2, -0.5, 0.5).unwrap();
        let mut rng = Rng::new(11);
        for _ in 0..1000 {
            let x = rng.uniform(-100.0, 100.0);
            let back = p.unscale(p.scale(x));
            assert!((back - x).abs() <= 1e-12 * x.abs().max(1.0), "{x} -> {back}");
        }
        let s = Series::new("s", vec![1.0, 2.0, 5.0], 0.5).unwrap();
        let r = unscale(&p, &apply_scale(&p, &s));
        assert_eq!(r.dt, 0.5);
        for (a, b) in r.values.iter().zip(&s.values) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
