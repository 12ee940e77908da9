//! Fractional Brownian motion: covariance, exact sampling on a grid containing
//! `t = 0`, closed-form means of delayed diagonal areas, and Monte-Carlo checks.

mod montecarlo;
mod sampler;

pub use montecarlo::{
    mc_scaling_exponent, mc_validate_area, AreaValidation, ScalingLevel, ScalingReport,
};
pub use sampler::{fgn_autocov, sample_fbm, FbmSampler, FbmSpec};

use crate::error::{Error, Result};

/// Hurst parameters accepted by the sampler and the solvers: `1/4 < H < 1`.
pub fn check_hurst(hurst: f64) -> Result<()> {
    if hurst > 0.25 && hurst < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidHurst(hurst))
    }
}

/// `R_H(s, t) = ½ (|t|^{2H} + |s|^{2H} - |t - s|^{2H})`.
pub fn cov(s: f64, t: f64, hurst: f64) -> f64 {
    let p = 2.0 * hurst;
    0.5 * (t.abs().powf(p) + s.abs().powf(p) - (t - s).abs().powf(p))
}

/// Mean of a diagonal entry of the delayed area `𝐁²_{0,τ}(v, 0)`, i.e. of
/// `∫_0^τ (B_{w-v} - B_{-v}) ∘ dB_w` for one fBm component.
pub fn expected_diag_area(v: f64, tau: f64, hurst: f64) -> f64 {
    let p = 2.0 * hurst;
    if v == 0.0 {
        0.5 * tau.powf(p)
    } else if v > 0.0 {
        -hurst * v.powf(p - 1.0) * tau + 0.5 * ((tau + v).powf(p) - v.powf(p))
    } else {
        let w = -v;
        hurst * w.powf(p - 1.0) * tau + 0.5 * ((tau + v).abs().powf(p) - w.powf(p))
    }
}

/// Least-squares slope of `ys` against `xs`.
pub fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn covariance_special_values() {
        for h in [0.3, 0.5, 0.8] {
            assert!((cov(1.0, 1.0, h) - 1.0).abs() < 1e-15);
            assert_eq!(cov(0.7, 0.0, h), 0.0);
        }
        assert!((cov(0.3, 0.8, 0.5) - 0.3).abs() < 1e-15);
        assert!((cov(1.7, 0.4, 0.5) - 0.4).abs() < 1e-15);
    }

    #[test]
    fn hurst_range() {
        assert!(check_hurst(0.25).is_err());
        assert!(check_hurst(1.0).is_err());
        assert!(check_hurst(0.2).is_err());
        assert!(check_hurst(0.26).is_ok());
    }

    #[test]
    fn diagonal_area_means() {
        assert_eq!(expected_diag_area(0.0, 1.0, 0.35), 0.5);
        // values computed independently from the three formulas
        let pos = -0.35 * 0.25_f64.powf(-0.3) * 0.5 + 0.5 * (0.75_f64.powf(0.7) - 0.25_f64.powf(0.7));
        assert!((expected_diag_area(0.25, 0.5, 0.35) - pos).abs() < 1e-15);
        assert!((expected_diag_area(0.25, 0.5, 0.35) - -0.045_913_085_864_612_76).abs() < 1e-12);
        let neg = 0.35 * 0.25_f64.powf(-0.3) * 0.5;
        assert!((expected_diag_area(-0.25, 0.5, 0.35) - neg).abs() < 1e-15);
        assert!((expected_diag_area(-0.25, 0.5, 0.35) - 0.265_250_399_139_319_64).abs() < 1e-12);
    }
}
