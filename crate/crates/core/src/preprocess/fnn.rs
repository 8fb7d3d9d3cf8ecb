use serde::{Deserialize, Serialize};

use crate::dynamics::Series;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FnnConfig {
    /// Delay between embedding coordinates, in samples.
    pub lag: usize,
    pub d_max: usize,
    /// A neighbour is false when the extra coordinate separates the pair by
    /// more than `rtol` times their distance in the smaller embedding.
    pub rtol: f64,
    /// Fraction of false neighbours below which a dimension is accepted.
    pub threshold: f64,
    /// Candidates closer than this many samples in time are not neighbours.
    pub theiler: usize,
}

impl Default for FnnConfig {
    fn default() -> Self {
        Self {
            lag: 1,
            d_max: 10,
            rtol: 10.0,
            threshold: 0.01,
            theiler: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FnnResult {
    /// Selected embedding dimension.
    pub dimension: usize,
    /// `fractions[d - 1]` is the false-neighbour fraction at dimension `d`.
    pub fractions: Vec<f64>,
    /// False when no dimension up to `d_max` got below the threshold; the
    /// dimension is then `d_max`.
    pub converged: bool,
}

/// False-neighbour fraction when going from dimension `dim` to `dim + 1`.
pub fn false_neighbor_fraction(values: &[f64], dim: usize, cfg: &FnnConfig) -> Result<f64> {
    let lag = cfg.lag;
    if dim == 0 || lag == 0 {
        return Err(Error::Parameter("FNN needs dimension >= 1 and lag >= 1".into()));
    }
    let extent = dim * lag;
    if values.len() <= extent + 1 {
        return Err(Error::Parameter(format!(
            "series of length {} too short for dimension {dim} at lag {lag}",
            values.len()
        )));
    }
    let n_points = values.len() - extent;
    let dist2 = |i: usize, j: usize| -> f64 {
        (0..dim)
            .map(|k| {
                let d = values[i + k * lag] - values[j + k * lag];
                d * d
            })
            .sum()
    };

    let (mut tested, mut false_count) = (0usize, 0usize);
    for i in 0..n_points {
        let mut best: Option<(usize, f64)> = None;
        for j in 0..n_points {
            if i.abs_diff(j) <= cfg.theiler || i == j {
                continue;
            }
            let d = dist2(i, j);
            if best.map_or(true, |(_, b)| d < b) {
                best = Some((j, d));
            }
        }
        let Some((j, d2)) = best else { continue };
        let r = d2.sqrt();
        // Exact duplicates carry no distance ratio.
        if r == 0.0 {
            continue;
        }
        tested += 1;
        let extra = (values[i + extent] - values[j + extent]).abs();
        if extra / r > cfg.rtol {
            false_count += 1;
        }
    }
    if tested == 0 {
        return Err(Error::Parameter("no neighbour pairs available for FNN".into()));
    }
    Ok(false_count as f64 / tested as f64)
}

/// Smallest embedding dimension whose false-neighbour fraction falls below
/// the threshold.
pub fn false_nearest_neighbors(series: &Series, cfg: &FnnConfig) -> Result<FnnResult> {
    if cfg.d_max == 0 || cfg.lag == 0 {
        return Err(Error::Parameter("FNN needs d_max >= 1 and lag >= 1".into()));
    }
    let needed = cfg.d_max * cfg.lag + 2;
    if series.len() < needed {
        return Err(Error::Parameter(format!(
            "FNN up to dimension {} at lag {} needs at least {needed} samples, got {}",
            cfg.d_max,
            cfg.lag,
            series.len()
        )));
    }
    let mut fractions = Vec::with_capacity(cfg.d_max);
    for dim in 1..=cfg.d_max {
        let f = false_neighbor_fraction(&series.values, dim, cfg)?;
        fractions.push(f);
        if f < cfg.threshold {
            return Ok(FnnResult {
                dimension: dim,
                fractions,
                converged: true,
            });
        }
    }
    log::warn!(
        "false-neighbour fraction never fell below {} up to dimension {}",
        cfg.threshold,
        cfg.d_max
    );
    Ok(FnnResult {
        dimension: cfg.d_max,
        fractions,
        converged: false,
    })
}
