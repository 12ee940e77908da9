use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

use super::check_hurst;
use crate::error::{Error, Result};
use crate::increments::{Grid, Path1};

/// Relative size of negative circulant eigenvalues that are clipped to zero.
const EIGEN_CLIP: f64 = 1e-10;

/// Autocovariance of fractional Gaussian noise with step `h` at lag `k`.
pub fn fgn_autocov(k: usize, h: f64, hurst: f64) -> f64 {
    let k = k as f64;
    let p = 2.0 * hurst;
    0.5 * h.powf(p) * ((k + 1.0).powf(p) - 2.0 * k.powf(p) + (k - 1.0).abs().powf(p))
}

/// Parameters of one fBm sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FbmSpec {
    pub hurst: f64,
    pub dim: usize,
    pub grid: Grid,
    pub seed: u64,
}

enum Method {
    /// Square roots of the circulant eigenvalues divided by the embedding size.
    Circulant { scale: Vec<f64>, fft: Arc<dyn Fft<f64>> },
    /// Lower Cholesky factor of the Toeplitz covariance of the noise.
    Cholesky(DMatrix<f64>),
}

/// Reusable exact sampler of fractional Gaussian noise on a fixed grid.
///
/// Noise is generated by circulant embedding of the stationary increment covariance;
/// each complex FFT yields two independent components (real and imaginary parts).
/// When the embedding has significantly negative eigenvalues the full covariance is
/// factorized instead.
pub struct FbmSampler {
    hurst: f64,
    grid: Grid,
    origin: usize,
    method: Method,
}

impl std::fmt::Debug for FbmSampler {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FbmSampler")
            .field("hurst", &self.hurst)
            .field("grid", &self.grid)
            .field("circulant", &self.uses_circulant())
            .finish()
    }
}

impl FbmSampler {
    pub fn new(hurst: f64, grid: Grid) -> Result<Self> {
        check_hurst(hurst)?;
        let origin = grid
            .index_of(0.0)
            .ok_or_else(|| Error::InvalidGrid("fBm grids must contain t = 0".into()))?;
        let method = match circulant(hurst, &grid) {
            Some(m) => m,
            None => cholesky(hurst, &grid)?,
        };
        Ok(Self {
            hurst,
            grid,
            origin,
            method,
        })
    }

    /// Forces the covariance-factorization path (used to cross-check the embedding).
    pub fn new_cholesky(hurst: f64, grid: Grid) -> Result<Self> {
        check_hurst(hurst)?;
        let origin = grid
            .index_of(0.0)
            .ok_or_else(|| Error::InvalidGrid("fBm grids must contain t = 0".into()))?;
        Ok(Self {
            hurst,
            grid,
            origin,
            method: cholesky(hurst, &grid)?,
        })
    }

    pub fn uses_circulant(&self) -> bool {
        matches!(self.method, Method::Circulant { .. })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn hurst(&self) -> f64 {
        self.hurst
    }

    /// `dim` independent fBm components, each pinned to zero at `t = 0`.
    pub fn sample(&self, dim: usize, seed: u64) -> Result<Vec<Path1>> {
        if dim == 0 {
            return Err(Error::InvalidArgument("fBm dimension must be at least 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = self.grid.n();
        let mut noises: Vec<Vec<f64>> = Vec::with_capacity(dim);
        match &self.method {
            Method::Circulant { scale, fft } => {
                let m = scale.len();
                while noises.len() < dim {
                    let mut buf: Vec<Complex<f64>> = scale
                        .iter()
                        .map(|s| {
                            let re: f64 = StandardNormal.sample(&mut rng);
                            let im: f64 = StandardNormal.sample(&mut rng);
                            Complex::new(s * re, s * im)
                        })
                        .collect();
                    debug_assert_eq!(buf.len(), m);
                    fft.process(&mut buf);
                    noises.push(buf[..n].iter().map(|c| c.re).collect());
                    if noises.len() < dim {
                        noises.push(buf[..n].iter().map(|c| c.im).collect());
                    }
                }
            }
            Method::Cholesky(l) => {
                for _ in 0..dim {
                    let z = DVector::from_iterator(n, (0..n).map(|_| StandardNormal.sample(&mut rng)));
                    noises.push((l * z).iter().copied().collect());
                }
            }
        }
        noises
            .into_iter()
            .map(|noise| self.cumulate(&noise))
            .collect()
    }

    /// Samples and stacks the components into one `dim`-dimensional path.
    pub fn sample_path(&self, dim: usize, seed: u64) -> Result<Path1> {
        Path1::stack(&self.sample(dim, seed)?)
    }

    fn cumulate(&self, noise: &[f64]) -> Result<Path1> {
        let mut values = Vec::with_capacity(noise.len() + 1);
        let mut acc = 0.0;
        values.push(0.0);
        for z in noise {
            acc += z;
            values.push(acc);
        }
        let pin = values[self.origin];
        values.iter_mut().for_each(|v| *v -= pin);
        Path1::new(self.grid, 1, values)
    }
}

fn circulant(hurst: f64, grid: &Grid) -> Option<Method> {
    let (n, h) = (grid.n(), grid.h());
    let m = 2 * n;
    let mut row: Vec<Complex<f64>> = (0..m)
        .map(|j| {
            let lag = if j <= n { j } else { m - j };
            Complex::new(fgn_autocov(lag, h, hurst), 0.0)
        })
        .collect();
    let fft = FftPlanner::new().plan_fft_forward(m);
    fft.process(&mut row);
    let top = row.iter().fold(0.0_f64, |a, c| a.max(c.re.abs()));
    if row.iter().any(|c| c.re < -EIGEN_CLIP * top) {
        return None;
    }
    let scale = row
        .iter()
        .map(|c| (c.re.max(0.0) / m as f64).sqrt())
        .collect();
    Some(Method::Circulant { scale, fft })
}

fn cholesky(hurst: f64, grid: &Grid) -> Result<Method> {
    let (n, h) = (grid.n(), grid.h());
    let cov = DMatrix::from_fn(n, n, |i, j| fgn_autocov(i.abs_diff(j), h, hurst));
    let chol = cov.cholesky().ok_or(Error::EmbeddingFailed)?;
    Ok(Method::Cholesky(chol.l()))
}

/// Exact sample of `spec.dim` independent fBm components on `spec.grid`.
pub fn sample_fbm(spec: &FbmSpec) -> Result<Vec<Path1>> {
    FbmSampler::new(spec.hurst, spec.grid)?.sample(spec.dim, spec.seed)
}
