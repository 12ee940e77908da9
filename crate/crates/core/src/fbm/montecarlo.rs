//! Monte-Carlo checks of delayed areas and volumes built from exact fBm samples.
//!
//! Sample `i` uses seed `seed + i`; samples run on the current rayon pool and are
//! reduced in index order, so results do not depend on the number of workers.

use rayon::prelude::*;

use super::{check_hurst, expected_diag_area, ls_slope, FbmSampler};
use crate::error::{Error, Result};
use crate::increments::Grid;
use crate::lift::DelayedLift;

/// Result of comparing the sample mean of a delayed diagonal area with its closed form.
#[derive(Debug, Clone, PartialEq)]
pub struct AreaValidation {
    pub hurst: f64,
    pub v1: f64,
    pub tau: f64,
    pub samples: usize,
    pub cells: usize,
    pub mean: f64,
    pub stderr: f64,
    pub closed_form: f64,
    /// `|mean - closed_form| / stderr`.
    pub z: f64,
}

fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Grid of step `h` covering `[lo, hi]` with `t = 0` as a grid point.
fn grid_around_origin(h: f64, lo: f64, hi: f64) -> Result<Grid> {
    let back = (-lo / h).round().max(0.0) as usize;
    let fwd = (hi / h).round() as usize;
    Grid::new(-(back as f64) * h, h, back + fwd)
}

/// Averages `(𝐁²_{0,τ}(v1, 0))^{11}` over `samples` one-dimensional fBm paths on `cells`
/// cells of `[0, τ]` and compares with [`expected_diag_area`].
pub fn mc_validate_area(
    hurst: f64,
    v1: f64,
    samples: usize,
    cells: usize,
    tau: f64,
    seed: u64,
) -> Result<AreaValidation> {
    check_hurst(hurst)?;
    if samples < 2 {
        return Err(Error::InvalidArgument("at least two samples are required".into()));
    }
    if cells == 0 || !(tau > 0.0) {
        return Err(Error::InvalidArgument("the span and cell count must be positive".into()));
    }
    let h = tau / cells as f64;
    let k = Grid::new(0.0, h, cells)?.cells_in(v1)?;
    let grid = grid_around_origin(h, (-v1).min(0.0), tau + (-v1).max(0.0))?;
    let sampler = FbmSampler::new(hurst, grid)?;
    let origin = grid.index_of(0.0).expect("origin on grid");

    let values: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|i| -> Result<f64> {
            let path = sampler.sample_path(1, seed.wrapping_add(i as u64))?;
            let lift = DelayedLift::with_families(path, &[k], &[])?;
            Ok(lift.area_span(k, 0, origin, origin + cells)?[0])
        })
        .collect::<Result<_>>()?;

    let (mean, stderr) = mean_stderr(&values);
    let closed_form = expected_diag_area(v1, tau, hurst);
    Ok(AreaValidation {
        hurst,
        v1,
        tau,
        samples,
        cells,
        mean,
        stderr,
        closed_form,
        z: (mean - closed_form).abs() / stderr,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalingLevel {
    /// `𝐁²(v1, v2)`.
    Area,
    /// `𝐁³(v1, v2)`.
    Volume,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingReport {
    pub level: ScalingLevel,
    pub hurst: f64,
    pub v1: f64,
    pub v2: f64,
    pub samples: usize,
    pub taus: Vec<f64>,
    /// Sample mean of the squared Frobenius norm at each span.
    pub moments: Vec<f64>,
    pub stderrs: Vec<f64>,
    /// Least-squares slope of `log moment` against `log τ`.
    pub slope: f64,
}

/// Estimates the exponent `α` in `E|𝐁_{0,τ}|² ∝ τ^α` for two-dimensional fBm.
///
/// One grid of step `min(taus) / cells_per_min_tau` serves every span; each sample is
/// lifted once and the spans are read off a single fold from the origin.
pub fn mc_scaling_exponent(
    level: ScalingLevel,
    hurst: f64,
    (v1, v2): (f64, f64),
    taus: &[f64],
    samples: usize,
    cells_per_min_tau: usize,
    seed: u64,
) -> Result<ScalingReport> {
    check_hurst(hurst)?;
    if taus.len() < 2 || taus.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::InvalidArgument("need at least two positive spans".into()));
    }
    if samples < 2 || cells_per_min_tau == 0 {
        return Err(Error::InvalidArgument("need at least two samples and one cell".into()));
    }
    let tau_min = taus.iter().cloned().fold(f64::INFINITY, f64::min);
    let tau_max = taus.iter().cloned().fold(0.0, f64::max);
    let h = tau_min / cells_per_min_tau as f64;
    let probe = Grid::new(0.0, h, 1)?;
    let (k1, k2) = (probe.cells_in(v1)?, probe.cells_in(v2)?);
    let ends: Vec<usize> = taus
        .iter()
        .map(|&t| probe.cells_in(t).map(|k| k as usize))
        .collect::<Result<_>>()?;
    if level == ScalingLevel::Volume && k1 + k2 < 0 {
        return Err(Error::InadmissiblePair { v1: k1, v2: k2 });
    }
    let back = 0.0_f64.max(v2).max(v1 + v2);
    let fwd = 0.0_f64.min(v2).min(v1 + v2);
    let grid = grid_around_origin(h, -back, tau_max - fwd)?;
    let sampler = FbmSampler::new(hurst, grid)?;
    let origin = grid.index_of(0.0).expect("origin on grid");
    let d = 2;

    let per_sample: Vec<Vec<f64>> = (0..samples)
        .into_par_iter()
        .map(|i| -> Result<Vec<f64>> {
            let path = sampler.sample_path(d, seed.wrapping_add(i as u64))?;
            let (spans, width) = match level {
                ScalingLevel::Area => {
                    let lift = DelayedLift::with_families(path, &[k1], &[])?;
                    (lift.area_spans_from(k1, k2, origin)?, d * d)
                }
                ScalingLevel::Volume => {
                    let lift = DelayedLift::with_families(path, &[], &[(k1, k2)])?;
                    (lift.volume_spans_from(k1, k2, origin)?, d * d * d)
                }
            };
            ends.iter()
                .map(|&m| {
                    let span = spans.get(m * width..(m + 1) * width).ok_or(Error::OutOfRange {
                        index: (origin + m) as i64,
                        lo: origin as i64,
                        hi: (origin + spans.len() / width - 1) as i64,
                    })?;
                    Ok(span.iter().map(|v| v * v).sum())
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let mut moments = Vec::with_capacity(taus.len());
    let mut stderrs = Vec::with_capacity(taus.len());
    for j in 0..taus.len() {
        let column: Vec<f64> = per_sample.iter().map(|row| row[j]).collect();
        let (m, s) = mean_stderr(&column);
        moments.push(m);
        stderrs.push(s);
    }
    let logs_t: Vec<f64> = taus.iter().map(|t| t.ln()).collect();
    let logs_m: Vec<f64> = moments.iter().map(|m| m.ln()).collect();
    Ok(ScalingReport {
        level,
        hurst,
        v1,
        v2,
        samples,
        taus: taus.to_vec(),
        moments,
        stderrs,
        slope: ls_slope(&logs_t, &logs_m),
    })
}
