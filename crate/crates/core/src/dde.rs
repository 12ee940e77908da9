//! Delay equations `dy_t = σ(y_t, y_{t-r_1}, …, y_{t-r_q}) dx_t` with `y = ξ` on `[-r_q, 0]`.
//!
//! The solver marches the doubly delayed germ
//! `m δx + Σ ζ^{(1,i)} 𝐱²(r_i) + Σ ζ^{(2,i,j)} 𝐱³(r_j, r_i) + Σ ζ^{(3,i,j)} 𝐱³(r_j - r_i, r_i)`
//! over the cells of `[0, T]`. Coefficients are assembled from the already computed
//! history; the initial segment carries no controlled structure, so every coefficient
//! read at a negative time is zero.

use crate::controlled::{add_area_term, add_volume_term, germ_surrogate};
use crate::error::{Error, Result};
use crate::field::DelayVectorField;
use crate::increments::{euclid, holder_norm_path, holder_sup, Grid, Path1};
use crate::lift::DelayedLift;
use crate::sde::{path_distance, refinement, Method, SolveReport, DEFAULT_GAMMA, KAPPA_FACTOR};

/// Positive, strictly increasing delays `r_1 < … < r_q` in time units.
#[derive(Debug, Clone, PartialEq)]
pub struct DelaySpec {
    delays: Vec<f64>,
}

impl DelaySpec {
    pub fn new(delays: Vec<f64>) -> Result<Self> {
        if delays.is_empty() {
            return Err(Error::InvalidArgument("at least one delay is required".into()));
        }
        if delays.iter().any(|r| !(r.is_finite() && *r > 0.0)) || delays.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(format!(
                "delays must be positive and strictly increasing, got {delays:?}"
            )));
        }
        Ok(Self { delays })
    }

    pub fn q(&self) -> usize {
        self.delays.len()
    }

    pub fn delays(&self) -> &[f64] {
        &self.delays
    }

    pub fn max(&self) -> f64 {
        *self.delays.last().expect("non-empty")
    }

    /// Delays in cells of `grid`, with `r_0 = 0` first.
    pub fn cells(&self, grid: &Grid) -> Result<Vec<i64>> {
        let mut out = vec![0];
        for &r in &self.delays {
            out.push(grid.cells_in(r)?);
        }
        Ok(out)
    }
}

/// The prescribed solution on `[-r_q, 0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialSegment {
    xi: Path1,
}

impl InitialSegment {
    /// `xi` must end at `t = 0`.
    pub fn new(xi: Path1) -> Result<Self> {
        let g = xi.grid();
        if g.end().abs() > 1e-9 * g.h() {
            return Err(Error::InvalidGrid(format!(
                "initial segment ends at {} instead of 0",
                g.end()
            )));
        }
        Ok(Self { xi })
    }

    /// `ξ ≡ value` on `[-cells·h, 0]`.
    pub fn constant(value: &[f64], h: f64, cells: usize) -> Result<Self> {
        let grid = Grid::new(-(cells as f64) * h, h, cells)?;
        Self::new(Path1::constant(grid, value)?)
    }

    pub fn from_fn(h: f64, cells: usize, dim: usize, f: impl FnMut(f64, &mut [f64])) -> Result<Self> {
        let grid = Grid::new(-(cells as f64) * h, h, cells)?;
        Self::new(Path1::from_fn(grid, dim, f)?)
    }

    pub fn xi(&self) -> &Path1 {
        &self.xi
    }

    /// `sup |ξ| + ‖δξ‖_μ`.
    pub fn norm(&self, mu: f64) -> f64 {
        self.xi.sup_norm() + holder_norm_path(&self.xi, mu)
    }
}

/// Coefficient families of the doubly delayed germ at one grid time.
///
/// `zeta1[i]` (`n×d×d`, `0 ≤ i ≤ q`) multiplies `𝐱²(r_i)`; `zeta2[(i-1)q + (j-1)]`
/// (`n×d×d×d`, `1 ≤ i, j ≤ q`) multiplies `𝐱³(r_j, r_i)` and is `None` when it vanishes
/// identically because `t - r_i - r_j < 0`; `zeta3[i(q+1) + j]` multiplies
/// `𝐱³(r_j - r_i, r_i)`. Layouts follow the controlled-path conventions.
#[derive(Debug, Clone, PartialEq)]
pub struct DoublyDelayedCoefficients {
    pub m: Vec<f64>,
    pub zeta1: Vec<Vec<f64>>,
    pub zeta2: Vec<Option<Vec<f64>>>,
    pub zeta3: Vec<Vec<f64>>,
}

/// Solution values and first-level coefficients on the grid of a delayed lift.
///
/// Points are global indices of the lift grid; values are known from `origin - r_q`,
/// coefficients from `origin` (earlier coefficients are zero).
#[derive(Debug, Clone)]
pub struct History {
    n: usize,
    d: usize,
    delays: Vec<i64>,
    first: usize,
    origin: usize,
    y: Vec<f64>,
    zeta1: Vec<f64>,
    z1: Vec<f64>,
}

impl History {
    /// Starts from the initial segment, which must sit on the lift grid before the origin.
    pub fn new(xi: &InitialSegment, dlift: &DelayedLift) -> Result<Self> {
        let delays = dlift.delays().to_vec();
        let rq = *delays.last().expect("contains zero");
        let (xg, lg) = (xi.xi().grid(), dlift.grid());
        if (xg.h() - lg.h()).abs() > 1e-12 * lg.h() || xg.n() as i64 != rq {
            return Err(Error::InvalidGrid(format!(
                "initial segment has {} cells of {}, lift needs {rq} cells of {}",
                xg.n(),
                xg.h(),
                lg.h()
            )));
        }
        let origin = dlift.origin();
        Ok(Self {
            n: xi.xi().dim(),
            d: dlift.dim(),
            first: origin - rq as usize,
            origin,
            delays,
            y: xi.xi().values().to_vec(),
            zeta1: Vec::new(),
            z1: Vec::new(),
        })
    }

    pub fn q(&self) -> usize {
        self.delays.len() - 1
    }

    /// One past the last global point with a known value.
    pub fn end(&self) -> usize {
        self.first + self.y.len() / self.n
    }

    pub fn y(&self, g: i64) -> Result<&[f64]> {
        if g < self.first as i64 || g >= self.end() as i64 {
            return Err(Error::HistoryGap { index: g });
        }
        let p = g as usize - self.first;
        Ok(&self.y[p * self.n..(p + 1) * self.n])
    }

    fn coeff_slot(&self, g: i64) -> Result<Option<usize>> {
        if g < self.origin as i64 {
            return Ok(None);
        }
        let p = g as usize - self.origin;
        if p >= self.zeta1.len() / (self.n * self.d) {
            return Err(Error::HistoryGap { index: g });
        }
        Ok(Some(p))
    }

    /// `ζ¹ = σ(y, 𝔰(y))` at `g`, `None` before the origin.
    pub fn zeta1(&self, g: i64) -> Result<Option<&[f64]>> {
        let w = self.n * self.d;
        Ok(self.coeff_slot(g)?.map(|p| &self.zeta1[p * w..(p + 1) * w]))
    }

    /// `ζ^{(1,slot)}` at `g`, `None` before the origin.
    pub fn z1(&self, g: i64, slot: usize) -> Result<Option<&[f64]>> {
        let w = self.n * self.d * self.d;
        let q1 = self.delays.len();
        Ok(self
            .coeff_slot(g)?
            .map(|p| &self.z1[(p * q1 + slot) * w..(p * q1 + slot + 1) * w]))
    }

    fn push_coefficients(&mut self, c: &DoublyDelayedCoefficients) {
        self.zeta1.extend_from_slice(&c.m);
        for z in &c.zeta1 {
            self.z1.extend_from_slice(z);
        }
    }

    fn push_value(&mut self, y: &[f64]) {
        self.y.extend_from_slice(y);
    }
}

fn check_field<F: DelayVectorField + ?Sized>(sigma: &F, dlift: &DelayedLift, n: usize) -> Result<()> {
    let q = dlift.delays().len() - 1;
    if sigma.delay_count() != q || sigma.driver_dim() != dlift.dim() || sigma.state_dim() != n {
        return Err(Error::DimensionMismatch(format!(
            "field has n={}, d={}, q={}; problem has n={n}, d={}, q={q}",
            sigma.state_dim(),
            sigma.driver_dim(),
            sigma.delay_count(),
            dlift.dim()
        )));
    }
    Ok(())
}

/// `out[a·d·d + k₁·d + k₂] += Σ_m jac[a·N + slot·n + m] · t[(m·d + k₁)·d + k₂]`
/// where `t` is an `n×d×d` coefficient.
fn add_jac_times(jac: &[f64], big_n: usize, slot: usize, n: usize, d: usize, t: &[f64], out: &mut [f64]) {
    let dd = d * d;
    for a in 0..n * d {
        let row = &jac[a * big_n + slot * n..a * big_n + (slot + 1) * n];
        for (m, &j) in row.iter().enumerate() {
            if j == 0.0 {
                continue;
            }
            let src = &t[m * dd..(m + 1) * dd];
            for (o, v) in out[a * dd..(a + 1) * dd].iter_mut().zip(src) {
                *o += j * v;
            }
        }
    }
}

/// Coefficients of the solution's germ at global point `g`, using the history strictly
/// before `g` and the value `y_g`.
pub fn t_sigma_coeffs<F: DelayVectorField + ?Sized>(
    sigma: &F,
    history: &History,
    g: usize,
) -> Result<DoublyDelayedCoefficients> {
    let (n, d, q) = (history.n, history.d, history.q());
    let q1 = q + 1;
    let big_n = n * q1;
    let delays = &history.delays;
    let g = g as i64;

    let mut w = Vec::with_capacity(big_n);
    for &k in delays {
        w.extend_from_slice(history.y(g - k)?);
    }
    let mut m = vec![0.0; n * d];
    let mut jac = vec![0.0; n * d * big_n];
    let mut hess = vec![0.0; n * d * big_n * big_n];
    sigma.eval(&w, &mut m);
    sigma.jacobian(&w, &mut jac);
    sigma.hessian(&w, &mut hess);

    // ζ¹ at every delayed slot; the current one is m itself.
    let mut slot_zeta1: Vec<Option<&[f64]>> = Vec::with_capacity(q1);
    slot_zeta1.push(Some(&m));
    for &k in &delays[1..] {
        slot_zeta1.push(history.zeta1(g - k)?);
    }

    let dd = d * d;
    let mut zeta1 = vec![vec![0.0; n * d * d]; q1];
    for (s, z) in zeta1.iter_mut().enumerate() {
        if let Some(src) = slot_zeta1[s] {
            for a in 0..n * d {
                for mm in 0..n {
                    let j = jac[a * big_n + s * n + mm];
                    if j == 0.0 {
                        continue;
                    }
                    for k in 0..d {
                        z[a * d + k] += j * src[mm * d + k];
                    }
                }
            }
        }
    }

    let mut zeta2 = Vec::with_capacity(q * q);
    for i in 1..q1 {
        for j in 1..q1 {
            let at = g - delays[i];
            let src = if at - delays[j] >= history.origin as i64 {
                history.z1(at, j)?
            } else {
                None
            };
            zeta2.push(src.map(|t| {
                let mut out = vec![0.0; n * d * dd];
                add_jac_times(&jac, big_n, i, n, d, t, &mut out);
                out
            }));
        }
    }

    let mut zeta3 = Vec::with_capacity(q1 * q1);
    for i in 0..q1 {
        for j in 0..q1 {
            let mut out = vec![0.0; n * d * dd];
            if let (Some(zi), Some(zj)) = (slot_zeta1[i], slot_zeta1[j]) {
                for a in 0..n * d {
                    for mm in 0..n {
                        for p in 0..n {
                            let hv = hess[(a * big_n + i * n + mm) * big_n + j * n + p];
                            if hv == 0.0 {
                                continue;
                            }
                            for k1 in 0..d {
                                let left = hv * zi[mm * d + k1];
                                for k2 in 0..d {
                                    out[(a * d + k1) * d + k2] += left * zj[p * d + k2];
                                }
                            }
                        }
                    }
                }
            }
            if i == j {
                let at = g - delays[i];
                let y2 = if i == 0 { Some(zeta1[0].as_slice()) } else { history.z1(at, 0)? };
                if let Some(t) = y2 {
                    add_jac_times(&jac, big_n, i, n, d, t, &mut out);
                }
            }
            if i == 0 && j != 0 {
                add_jac_times(&jac, big_n, 0, n, d, &zeta1[j], &mut out);
            }
            zeta3.push(out);
        }
    }

    Ok(DoublyDelayedCoefficients { m, zeta1, zeta2, zeta3 })
}

/// Adds the germ over global cell `c` to `out`.
pub fn add_delayed_cell_germ(
    coeffs: &DoublyDelayedCoefficients,
    dlift: &DelayedLift,
    c: usize,
    out: &mut [f64],
) -> Result<()> {
    let d = dlift.dim();
    let delays = dlift.delays();
    let q1 = delays.len();
    let q = q1 - 1;
    let dx = dlift.x().increment(c, c + 1);
    let c = c as i64;
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for j in 0..d {
            acc += coeffs.m[i * d + j] * dx[j];
        }
        *o += acc;
    }
    for (i, z) in coeffs.zeta1.iter().enumerate() {
        add_area_term(z, dlift.area_family(delays[i])?.cell(c)?, d, out);
    }
    for i in 1..q1 {
        for j in 1..q1 {
            if let Some(z) = &coeffs.zeta2[(i - 1) * q + (j - 1)] {
                add_volume_term(z, dlift.volume_family(delays[j], delays[i])?.cell(c)?, d, out);
            }
        }
    }
    for i in 0..q1 {
        for j in 0..q1 {
            let fam = dlift.volume_family(delays[j] - delays[i], delays[i])?;
            add_volume_term(&coeffs.zeta3[i * q1 + j], fam.cell(c)?, d, out);
        }
    }
    Ok(())
}

/// Germ `Ξ_{s,t}` for `t = s, s+1, …` (stride `n`) with coefficients taken at `s`.
fn delayed_germ_row(coeffs: &DoublyDelayedCoefficients, dlift: &DelayedLift, s: usize, n: usize) -> Result<Vec<f64>> {
    let d = dlift.dim();
    let delays = dlift.delays();
    let q1 = delays.len();
    let q = q1 - 1;
    let len = dlift.grid().n() - s + 1;
    let mut row = vec![0.0; len * n];
    let x = dlift.x();
    let mut dx = vec![0.0; d];
    for t in s..=dlift.grid().n() {
        x.increment_into(s, t, &mut dx);
        let out = &mut row[(t - s) * n..(t - s + 1) * n];
        for (i, o) in out.iter_mut().enumerate() {
            for j in 0..d {
                *o += coeffs.m[i * d + j] * dx[j];
            }
        }
    }
    let mut add = |spans: Vec<f64>, width: usize, z: &[f64], area: bool| {
        for (p, span) in spans.chunks(width).enumerate().take(len) {
            let out = &mut row[p * n..(p + 1) * n];
            if area {
                add_area_term(z, span, d, out);
            } else {
                add_volume_term(z, span, d, out);
            }
        }
    };
    for (i, z) in coeffs.zeta1.iter().enumerate() {
        add(dlift.area_spans_from(delays[i], 0, s)?, d * d, z, true);
    }
    for i in 1..q1 {
        for j in 1..q1 {
            if let Some(z) = &coeffs.zeta2[(i - 1) * q + (j - 1)] {
                add(dlift.volume_spans_from(delays[j], delays[i], s)?, d * d * d, z, false);
            }
        }
    }
    for i in 0..q1 {
        for j in 0..q1 {
            let spans = dlift.volume_spans_from(delays[j] - delays[i], delays[i], s)?;
            add(spans, d * d * d, &coeffs.zeta3[i * q1 + j], false);
        }
    }
    Ok(row)
}

/// Sums the cell germs of `coeffs` (one entry per cell, starting at global cell `first`)
/// from `start`. Returns the path on the covered points.
pub fn delayed_integrate(
    coeffs: &[DoublyDelayedCoefficients],
    dlift: &DelayedLift,
    first: usize,
    start: &[f64],
) -> Result<Path1> {
    if first + coeffs.len() > dlift.grid().n() {
        return Err(Error::OutOfRange {
            index: (first + coeffs.len()) as i64,
            lo: 0,
            hi: dlift.grid().n() as i64,
        });
    }
    let mut y = start.to_vec();
    let mut values = y.clone();
    for (p, c) in coeffs.iter().enumerate() {
        add_delayed_cell_germ(c, dlift, first + p, &mut y)?;
        values.extend_from_slice(&y);
    }
    Path1::new(dlift.grid().sub(first, coeffs.len())?, start.len(), values)
}

/// Solution with the coefficients used on every cell of `[0, T]`.
#[derive(Debug, Clone)]
pub struct DdeSolution {
    pub report: SolveReport,
    pub coefficients: Vec<DoublyDelayedCoefficients>,
}

fn march<F: DelayVectorField + ?Sized>(
    xi: &InitialSegment,
    sigma: &F,
    dlift: &DelayedLift,
) -> Result<(Path1, Vec<DoublyDelayedCoefficients>)> {
    let n = xi.xi().dim();
    check_field(sigma, dlift, n)?;
    let mut history = History::new(xi, dlift)?;
    let (origin, cells) = (dlift.origin(), dlift.grid().n());
    let mut coeffs = Vec::with_capacity(cells - origin);
    for g in origin..cells {
        let c = t_sigma_coeffs(sigma, &history, g)?;
        let mut y = history.y(g as i64)?.to_vec();
        add_delayed_cell_germ(&c, dlift, g, &mut y)?;
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { step: g - origin + 1 });
        }
        history.push_coefficients(&c);
        history.push_value(&y);
        coeffs.push(c);
    }
    let rq = *dlift.delays().last().expect("contains zero") as usize;
    let grid = dlift.grid().sub(origin - rq, cells - origin + rq)?;
    Ok((Path1::new(grid, n, history.y)?, coeffs))
}

/// Surrogate `(2κ, 2κ)` norm of `δΞ` for the delayed germ over `[0, T]`.
pub fn delayed_germ_residual(coeffs: &[DoublyDelayedCoefficients], dlift: &DelayedLift, n: usize, kappa: f64) -> f64 {
    let origin = dlift.origin();
    let cells = dlift.grid().n() - origin;
    germ_surrogate(cells, dlift.grid().h(), n, 4.0 * kappa, |s| {
        if s == cells {
            return vec![0.0; n];
        }
        delayed_germ_row(&coeffs[s], dlift, origin + s, n).expect("families checked by the march")
    })
}

/// Solves the delay equation; the solution path starts at `-r_q` and repeats `ξ` there.
pub fn solve_dde<F: DelayVectorField + ?Sized>(xi: &InitialSegment, sigma: &F, dlift: &DelayedLift) -> Result<SolveReport> {
    Ok(solve_dde_with(xi, sigma, dlift, DEFAULT_GAMMA)?.report)
}

/// [`solve_dde`] with the driver regularity used by the diagnostics, keeping the coefficients.
pub fn solve_dde_with<F: DelayVectorField + ?Sized>(
    xi: &InitialSegment,
    sigma: &F,
    dlift: &DelayedLift,
    gamma: f64,
) -> Result<DdeSolution> {
    let (y, coefficients) = march(xi, sigma, dlift)?;
    let germ_residual = delayed_germ_residual(&coefficients, dlift, y.dim(), KAPPA_FACTOR * gamma);
    Ok(DdeSolution {
        report: SolveReport {
            steps: coefficients.len(),
            y,
            germ_residual,
            method: Method::Step3,
            picard_iters: None,
            windows: None,
            derivatives: sigma.derivatives(),
        },
        coefficients,
    })
}

/// Distances between two delay problems and their solutions.
#[derive(Debug, Clone, PartialEq)]
pub struct DdeContinuityReport {
    pub solution_distance: f64,
    /// Sum of all input distances below.
    pub input_distance: f64,
    pub initial: f64,
    pub path: f64,
    pub areas: f64,
    pub volumes: f64,
}

fn spans_distance(a: &[f64], b: &[f64], width: usize, h: f64, mu: f64) -> f64 {
    let mut best = 0.0_f64;
    let mut diff = vec![0.0; width];
    for (p, (u, v)) in a.chunks(width).zip(b.chunks(width)).enumerate().skip(1) {
        for (o, (x, y)) in diff.iter_mut().zip(u.iter().zip(v)) {
            *o = x - y;
        }
        best = best.max(euclid(&diff) / (p as f64 * h).powf(mu));
    }
    best
}

/// Hölder distances of every stored family over spans starting at or after the origin.
fn family_distances(a: &DelayedLift, b: &DelayedLift, gamma: f64) -> Result<(f64, f64)> {
    let (d, h) = (a.dim(), a.grid().h());
    let (mut areas, mut volumes) = (0.0, 0.0);
    for k in a.area_shifts() {
        let mut best = 0.0_f64;
        for s in a.origin()..a.grid().n() {
            let (u, v) = (a.area_spans_from(k, 0, s)?, b.area_spans_from(k, 0, s)?);
            best = best.max(spans_distance(&u, &v, d * d, h, 2.0 * gamma));
        }
        areas += best;
    }
    for (k1, k2) in a.volume_pairs() {
        let mut best = 0.0_f64;
        for s in a.origin()..a.grid().n() {
            let (u, v) = (a.volume_spans_from(k1, k2, s)?, b.volume_spans_from(k1, k2, s)?);
            best = best.max(spans_distance(&u, &v, d * d * d, h, 3.0 * gamma));
        }
        volumes += best;
    }
    Ok((areas, volumes))
}

/// Solves two delay problems with the same delays and compares them.
///
/// `dlift2` (with `xi2`) may live on a refinement of the grid of `dlift1`; its solution is
/// then read on the coarse points and its inputs are compared after coarsening.
pub fn dde_continuity_probe<F: DelayVectorField + ?Sized>(
    xi1: &InitialSegment,
    xi2: &InitialSegment,
    sigma: &F,
    dlift1: &DelayedLift,
    dlift2: &DelayedLift,
    gamma: f64,
) -> Result<DdeContinuityReport> {
    let factor = if dlift1.grid() == dlift2.grid() {
        1
    } else {
        refinement(dlift1.grid(), dlift2.grid())?
    };
    let (y1, _) = march(xi1, sigma, dlift1)?;
    let (fine, _) = march(xi2, sigma, dlift2)?;
    let fine = fine.coarsen(factor)?;
    let y2 = Path1::new(*y1.grid(), y1.dim(), fine.values().to_vec())?;
    let solution_distance = path_distance(&y1, &y2, KAPPA_FACTOR * gamma)?;

    let coarse2;
    let dlift2 = if factor == 1 {
        dlift2
    } else {
        coarse2 = dlift2.coarsen(factor)?;
        &coarse2
    };
    if dlift1.delays() != dlift2.delays() || dlift1.grid().n() != dlift2.grid().n() {
        return Err(Error::DimensionMismatch("lifts differ in grid or delays".into()));
    }
    let xi2 = xi2.xi().coarsen(factor)?;
    let xi2 = Path1::new(*xi1.xi().grid(), xi2.dim(), xi2.values().to_vec())?;
    let dxi = xi1.xi().combine(1.0, &xi2, -1.0)?;
    let initial = dxi.sup_norm() + holder_norm_path(&dxi, 3.0 * gamma);
    let x2 = Path1::new(*dlift1.grid(), dlift1.dim(), dlift2.x().values().to_vec())?;
    let dx = dlift1.x().combine(1.0, &x2, -1.0)?;
    let mut buf = vec![0.0; dx.dim()];
    let path = holder_sup(dx.grid(), gamma, |i, j| {
        dx.increment_into(i, j, &mut buf);
        euclid(&buf)
    });
    let (areas, volumes) = family_distances(dlift1, dlift2, gamma)?;
    Ok(DdeContinuityReport {
        solution_distance,
        input_distance: initial + path + areas + volumes,
        initial,
        path,
        areas,
        volumes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{Constant, DelayLinear};
    use crate::field::IgnoreDelays;

    fn smooth_lift(delays: &[f64], n_after: usize, h: f64) -> DelayedLift {
        let before = (delays.last().unwrap() / h).round() as usize;
        let grid = Grid::new(-(before as f64) * h, h, before + n_after).unwrap();
        let x = Path1::from_fn(grid, 1, |t, o| o[0] = t.sin()).unwrap();
        DelayedLift::new(x, delays).unwrap()
    }

    #[test]
    fn constant_field_moves_with_the_driver() {
        let dlift = smooth_lift(&[0.25], 32, 1.0 / 32.0);
        let xi = InitialSegment::constant(&[0.5], 1.0 / 32.0, 8).unwrap();
        let sigma = IgnoreDelays {
            field: Constant { l: 1, d: 1, matrix: vec![2.0] },
            q: 1,
        };
        let y = solve_dde(&xi, &sigma, &dlift).unwrap().y;
        assert_eq!(y.grid().len(), 41);
        for p in 0..8 {
            assert_eq!(y.at(p)[0], 0.5);
        }
        assert!((y.last()[0] - (0.5 + 2.0 * 1f64.sin())).abs() < 1e-14);
    }

    #[test]
    fn delay_slot_coefficient_uses_delayed_history() {
        // σ(w0, w1) = w1: ζ^{(1,1)}_t = σ(y_{t-r}) = y_{t-2r} once t ≥ r, zero before.
        let h = 1.0 / 16.0;
        let dlift = smooth_lift(&[0.25], 32, h);
        let xi = InitialSegment::constant(&[1.0], h, 4).unwrap();
        let sigma = DelayLinear { n: 1, d: 1, q: 1, alpha: 0.0, beta: 1.0 };
        let sol = solve_dde_with(&xi, &sigma, &dlift, 0.9).unwrap();
        let y = &sol.report.y;
        for (p, c) in sol.coefficients.iter().enumerate() {
            assert_eq!(c.zeta1[0][0], 0.0);
            let want = if p >= 4 { y.at(p - 4)[0] } else { 0.0 };
            assert_eq!(c.zeta1[1][0], want);
            assert_eq!(c.m[0], y.at(p)[0]);
        }
    }

    #[test]
    fn rejects_mismatched_initial_segment() {
        let dlift = smooth_lift(&[0.25], 16, 1.0 / 16.0);
        let xi = InitialSegment::constant(&[1.0], 1.0 / 16.0, 3).unwrap();
        let sigma = DelayLinear { n: 1, d: 1, q: 1, alpha: 1.0, beta: 1.0 };
        assert!(matches!(solve_dde(&xi, &sigma, &dlift), Err(Error::InvalidGrid(_))));
        assert!(DelaySpec::new(vec![0.5, 0.25]).is_err());
        assert!(DelaySpec::new(vec![]).is_err());
    }
}
