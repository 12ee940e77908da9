//! Discrete increments on a uniform grid: the coboundary `δ`, Hölder-type
//! norms, telescoping sums over the finest cells, and the discrete inverse of `δ`.

mod grid;
mod inc;

pub use grid::{Grid, Path1};
pub use inc::{Inc2, Inc3};

use crate::error::{Error, Result};

/// Largest cell count for which `Inc2`/`Inc3` may be stored densely.
pub const DENSE_LIMIT: usize = 512;

/// Relative tolerance used when checking that a 2-increment is closed.
pub const CLOSED_TOL: f64 = 1e-10;

pub(crate) fn euclid(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `(δg)_{st} = g_t - g_s` at every pair of grid points.
pub fn delta1(g: &Path1) -> Result<Inc2> {
    Inc2::from_fn(*g.grid(), &[g.dim()], |i, j, out| g.increment_into(i, j, out))
}

/// `(δh)_{sut} = h_{st} - h_{su} - h_{ut}` at every ordered triple.
pub fn delta2(h: &Inc2) -> Result<Inc3> {
    Inc3::from_fn(*h.grid(), h.shape(), |i, j, k, out| {
        let (st, su, ut) = (h.get(i, k), h.get(i, j), h.get(j, k));
        for (c, o) in out.iter_mut().enumerate() {
            *o = st[c] - su[c] - ut[c];
        }
    })
}

/// Supremum over grid pairs of `norm(i, j) / |t_j - t_i|^mu`.
pub fn holder_sup(grid: &Grid, mu: f64, mut norm: impl FnMut(usize, usize) -> f64) -> f64 {
    let mut best = 0.0_f64;
    for i in 0..grid.len() {
        for j in i + 1..grid.len() {
            let dt = (j - i) as f64 * grid.h();
            best = best.max(norm(i, j) / dt.powf(mu));
        }
    }
    best
}

/// Discrete `μ`-Hölder norm of a 1-increment (Euclidean norm of each entry).
pub fn holder_norm2(f: &Inc2, mu: f64) -> f64 {
    holder_sup(f.grid(), mu, |i, j| euclid(f.get(i, j)))
}

/// Discrete `μ`-Hölder norm of a path, computed from its increments without dense storage.
pub fn holder_norm_path(g: &Path1, mu: f64) -> f64 {
    let mut buf = vec![0.0; g.dim()];
    holder_sup(g.grid(), mu, |i, j| {
        g.increment_into(i, j, &mut buf);
        euclid(&buf)
    })
}

/// `sup |h_{sut}| / (|u - s|^gamma |t - u|^rho)` over ordered grid triples.
pub fn holder_norm3(h: &Inc3, gamma: f64, rho: f64) -> f64 {
    let grid = h.grid();
    let len = grid.len();
    let mut best = 0.0_f64;
    for i in 0..len {
        for j in i + 1..len {
            let left = ((j - i) as f64 * grid.h()).powf(gamma);
            for k in j + 1..len {
                let right = ((k - j) as f64 * grid.h()).powf(rho);
                best = best.max(euclid(h.get(i, j, k)) / (left * right));
            }
        }
    }
    best
}

/// The computable surrogate `‖h‖_{μ/2, μ/2}` for the `μ`-norm of a 2-increment (an upper bound).
pub fn holder_norm3_surrogate(h: &Inc3, mu: f64) -> f64 {
    holder_norm3(h, mu / 2.0, mu / 2.0)
}

/// Finest-partition Riemann sum: `S(g)_{t_i t_j} = Σ_{k=i}^{j-1} g_{t_k t_{k+1}}`.
pub fn sew(germ: &Inc2) -> Result<Inc2> {
    let grid = *germ.grid();
    let w = germ.width();
    let mut out = Inc2::zeros(grid, germ.shape())?;
    let mut acc = vec![0.0; w];
    for i in 0..grid.len() {
        acc.iter_mut().for_each(|a| *a = 0.0);
        for j in i + 1..grid.len() {
            for (a, c) in acc.iter_mut().zip(germ.get(j - 1, j)) {
                *a += c;
            }
            out.get_mut(i, j).copy_from_slice(&acc);
        }
    }
    Ok(out)
}

/// Discrete inverse of `δ` on closed 2-increments, normalized by zero values on every cell.
///
/// Fails with [`Error::NotClosed`] when `δ` of the result differs from `h` by more
/// than [`CLOSED_TOL`] times the largest entry of `h`.
pub fn lambda_grid(h: &Inc3) -> Result<Inc2> {
    let grid = *h.grid();
    let w = h.width();
    let mut g = Inc2::zeros(grid, h.shape())?;
    let len = grid.len();
    for i in 0..len {
        for j in i + 2..len {
            // g_{i,j} = g_{i,j-1} + g_{j-1,j} + h_{i,j-1,j}, and g_{j-1,j} = 0
            let prev = g.get(i, j - 1).to_vec();
            let hv = h.get(i, j - 1, j);
            for (c, o) in g.get_mut(i, j).iter_mut().enumerate() {
                *o = prev[c] + hv[c];
            }
        }
    }

    let scale = h.max_abs();
    let tolerance = CLOSED_TOL * scale;
    let mut residual = 0.0_f64;
    for i in 0..len {
        for j in i + 1..len {
            for k in j + 1..len {
                let (st, su, ut, hv) = (g.get(i, k), g.get(i, j), g.get(j, k), h.get(i, j, k));
                for c in 0..w {
                    residual = residual.max((st[c] - su[c] - ut[c] - hv[c]).abs());
                }
            }
        }
    }
    if residual > tolerance {
        return Err(Error::NotClosed { residual, tolerance });
    }
    Ok(g)
}
