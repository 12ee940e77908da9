//! Independent reference computations shared by the integration suites.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rough_core::increments::{Grid, Path1};

/// Three-point Gauss–Legendre rule on `[a, b]`, exact for degree ≤ 5.
pub fn gauss3(a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
    let (m, r) = (0.5 * (a + b), 0.5 * (b - a));
    let z = (0.6f64).sqrt();
    r * (5.0 * f(m - r * z) + 8.0 * f(m) + 5.0 * f(m + r * z)) / 9.0
}

/// Piecewise-linear interpolant of a path, evaluated pointwise.
pub struct Interp<'a> {
    pub path: &'a Path1,
}

impl Interp<'_> {
    fn cell(&self, t: f64) -> (usize, f64) {
        let g = self.path.grid();
        let u = (t - g.t0()) / g.h();
        let c = (u.floor().max(0.0) as usize).min(g.n() - 1);
        (c, u - c as f64)
    }

    pub fn value(&self, t: f64, i: usize) -> f64 {
        let (c, f) = self.cell(t);
        let (a, b) = (self.path.at(c)[i], self.path.at(c + 1)[i]);
        a + f * (b - a)
    }

    /// Slope on the cell containing `t` (callers keep `t` off the breakpoints).
    pub fn slope(&self, t: f64, i: usize) -> f64 {
        let (c, _) = self.cell(t);
        (self.path.at(c + 1)[i] - self.path.at(c)[i]) / self.path.grid().h()
    }
}

/// Subintervals per grid cell used by the quadrature references.
pub const SUB: usize = 16;

fn nodes(a: f64, b: f64, h: f64) -> Vec<(f64, f64)> {
    let m = (((b - a) / h).round() as usize * SUB).max(1);
    let w = (b - a) / m as f64;
    (0..m).map(|i| (a + i as f64 * w, a + (i + 1) as f64 * w)).collect()
}

/// `∫_a^b (X(u - v1 - v2) - X(a - v1 - v2))^i dX^j(u - v2)` by quadrature.
pub fn area_quad(x: &Path1, v1: f64, v2: f64, a: f64, b: f64, i: usize, j: usize) -> f64 {
    let p = Interp { path: x };
    let base = p.value(a - v1 - v2, i);
    nodes(a, b, x.grid().h())
        .into_iter()
        .map(|(l, r)| gauss3(l, r, |u| (p.value(u - v1 - v2, i) - base) * p.slope(u - v2, j)))
        .sum()
}

/// `∫_a^b 𝐱²_{a,w}(v1, v2)^{ij} dX^k(w)` by nested quadrature.
pub fn volume_quad(x: &Path1, v1: f64, v2: f64, a: f64, b: f64, ijk: (usize, usize, usize)) -> f64 {
    let (i, j, k) = ijk;
    let p = Interp { path: x };
    let mut done = 0.0;
    let mut total = 0.0;
    for (l, r) in nodes(a, b, x.grid().h()) {
        total += gauss3(l, r, |w| {
            let partial = done + area_quad_piece(&p, v1, v2, a, l, w, i, j);
            partial * p.slope(w, k)
        });
        done += area_quad_piece(&p, v1, v2, a, l, r, i, j);
    }
    total
}

fn area_quad_piece(p: &Interp, v1: f64, v2: f64, a: f64, l: f64, r: f64, i: usize, j: usize) -> f64 {
    let base = p.value(a - v1 - v2, i);
    gauss3(l, r, |u| (p.value(u - v1 - v2, i) - base) * p.slope(u - v2, j))
}

/// Gaussian random walk on `grid` with the given seed.
pub fn random_path(grid: Grid, dim: usize, seed: u64) -> Path1 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = vec![0.0; grid.len() * dim];
    for p in 1..grid.len() {
        for i in 0..dim {
            let step: f64 = rng.random_range(-1.0..1.0);
            values[p * dim + i] = values[(p - 1) * dim + i] + step * grid.h().sqrt();
        }
    }
    Path1::new(grid, dim, values).unwrap()
}

/// Classical RK4 for `y' = f(t, y_t, y_{t-r}) ` with constant history `y0`, on `m` steps
/// over `[0, t_end]`. Delayed values between grid points use cubic Hermite interpolation.
pub fn rk4_delay(f: impl Fn(f64, f64, f64) -> f64, r: f64, y0: f64, t_end: f64, m: usize) -> Vec<f64> {
    let h = t_end / m as f64;
    let k = (r / h).round() as i64;
    let mut y = vec![y0];
    let mut dy: Vec<f64> = Vec::new();
    let past = |y: &[f64], dy: &[f64], idx: i64, frac: f64| -> f64 {
        if idx < 0 {
            return y0;
        }
        let i = idx as usize;
        if frac == 0.0 {
            return y[i];
        }
        let s = frac;
        let h00 = 2.0 * s * s * s - 3.0 * s * s + 1.0;
        let h10 = s * s * s - 2.0 * s * s + s;
        let h01 = -2.0 * s * s * s + 3.0 * s * s;
        let h11 = s * s * s - s * s;
        h00 * y[i] + h10 * h * dy[i] + h01 * y[i + 1] + h11 * h * dy[i + 1]
    };
    for i in 0..m {
        let t = i as f64 * h;
        let base = i as i64 - k;
        let (d0, dm, d1) = (past(&y, &dy, base, 0.0), past(&y, &dy, base, 0.5), past(&y, &dy, base + 1, 0.0));
        let k1 = f(t, y[i], d0);
        dy.push(k1);
        let k2 = f(t + 0.5 * h, y[i] + 0.5 * h * k1, dm);
        let k3 = f(t + 0.5 * h, y[i] + 0.5 * h * k2, dm);
        let k4 = f(t + h, y[i] + h * k3, d1);
        y.push(y[i] + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
    }
    y
}

/// Classical RK4 for `y' = f(t, y)` on `m` steps over `[0, t_end]`.
pub fn rk4(f: impl Fn(f64, &[f64], &mut [f64]), y0: &[f64], t_end: f64, m: usize) -> Vec<Vec<f64>> {
    let h = t_end / m as f64;
    let l = y0.len();
    let mut out = vec![y0.to_vec()];
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (vec![0.0; l], vec![0.0; l], vec![0.0; l], vec![0.0; l], vec![0.0; l]);
    for i in 0..m {
        let t = i as f64 * h;
        let y = out[i].clone();
        f(t, &y, &mut k1);
        for c in 0..l {
            tmp[c] = y[c] + 0.5 * h * k1[c];
        }
        f(t + 0.5 * h, &tmp, &mut k2);
        for c in 0..l {
            tmp[c] = y[c] + 0.5 * h * k2[c];
        }
        f(t + 0.5 * h, &tmp, &mut k3);
        for c in 0..l {
            tmp[c] = y[c] + h * k3[c];
        }
        f(t + h, &tmp, &mut k4);
        out.push((0..l).map(|c| y[c] + h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c])).collect());
    }
    out
}

/// Least-squares slope of `log err` against `log h`.
pub fn empirical_order(hs: &[f64], errs: &[f64]) -> f64 {
    let xs: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    rough_core::fbm::ls_slope(&xs, &ys)
}
