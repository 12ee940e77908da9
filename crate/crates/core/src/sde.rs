//! Rough differential equations `dy = σ(y) dx` on a level-3 lift.
//!
//! The explicit scheme adds, on every cell, the third-order germ of the integrand
//! `σ(y)` whose coefficients come from composing `σ` with the solution's own
//! controlled structure (`ζ¹ = σ(y)`, `ζ² = ∂σ σ`). A Picard iteration of
//! `z ↦ ∫ σ(z) dx` on shrinking windows is provided as an independent route.

use crate::controlled::{add_germ, germ_surrogate, ControlledPath};
use crate::error::{Error, Result};
use crate::field::{Derivatives, VectorField};
use crate::increments::{euclid, holder_sup, Grid, Path1};
use crate::lift::{Level3, RoughLift3};

/// Default regularity assumed by the diagnostics when none is given.
pub const DEFAULT_GAMMA: f64 = 1.0 / 3.0;
/// Diagnostics use `κ = KAPPA_FACTOR · γ`.
pub const KAPPA_FACTOR: f64 = 0.95;
/// Smallest Picard window, in cells.
pub const MIN_WINDOW: usize = 4;
/// Consecutive growths of the iterate change that trigger a window halving.
const GROWTH_LIMIT: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Step3,
    Picard,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Step3 => "step3",
            Method::Picard => "picard",
        })
    }
}

/// Solution path plus diagnostics.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub y: Path1,
    /// Surrogate `(2κ, 2κ)` norm of `δΞ` for the solution's germ.
    pub germ_residual: f64,
    pub steps: usize,
    pub method: Method,
    pub picard_iters: Option<usize>,
    pub windows: Option<usize>,
    pub derivatives: Derivatives,
}

impl SolveReport {
    /// Flat `key=value` lines.
    pub fn to_key_value(&self) -> String {
        let last = self.y.last();
        let mut out = String::new();
        out.push_str(&format!("method={}\n", self.method));
        out.push_str(&format!("steps={}\n", self.steps));
        out.push_str(&format!("germ_residual={:.16e}\n", self.germ_residual));
        out.push_str(&format!(
            "picard_iters={}\n",
            self.picard_iters.map_or("none".into(), |k| k.to_string())
        ));
        if let Some(w) = self.windows {
            out.push_str(&format!("windows={w}\n"));
        }
        out.push_str(&format!("derivatives={}\n", self.derivatives));
        out.push_str(&format!("t_end={:.16e}\n", self.y.grid().end()));
        for (i, v) in last.iter().enumerate() {
            out.push_str(&format!("y{}_end={:.16e}\n", i + 1, v));
        }
        out
    }
}

/// Germ coefficients of the solution at state `y`: `σ`, `c¹^{ijk} = ∂_mσ^{ij} σ^{mk}` and
/// `c²^{ijk₁k₂} = ∂_mσ^{ij} c¹^{mk₁k₂} + ∂_{mp}σ^{ij} σ^{mk₁} σ^{pk₂}`.
#[derive(Debug, Clone)]
pub struct StepCoefficients {
    pub sigma: Vec<f64>,
    pub c1: Vec<f64>,
    pub c2: Vec<f64>,
    jac: Vec<f64>,
    hess: Vec<f64>,
}

impl StepCoefficients {
    pub fn new(l: usize, d: usize) -> Self {
        Self {
            sigma: vec![0.0; l * d],
            c1: vec![0.0; l * d * d],
            c2: vec![0.0; l * d * d * d],
            jac: vec![0.0; l * d * l],
            hess: vec![0.0; l * d * l * l],
        }
    }

    pub fn update<F: VectorField + ?Sized>(&mut self, sigma: &F, y: &[f64]) {
        let (l, d) = (sigma.state_dim(), sigma.driver_dim());
        sigma.eval(y, &mut self.sigma);
        sigma.jacobian(y, &mut self.jac);
        sigma.hessian(y, &mut self.hess);
        let (s, jac, hess) = (&self.sigma, &self.jac, &self.hess);
        for a in 0..l * d {
            for k in 0..d {
                let mut acc = 0.0;
                for m in 0..l {
                    acc += jac[a * l + m] * s[m * d + k];
                }
                self.c1[a * d + k] = acc;
            }
        }
        for a in 0..l * d {
            for k1 in 0..d {
                for k2 in 0..d {
                    let mut acc = 0.0;
                    for m in 0..l {
                        acc += jac[a * l + m] * self.c1[(m * d + k1) * d + k2];
                        let smk = s[m * d + k1];
                        for p in 0..l {
                            acc += hess[(a * l + m) * l + p] * smk * s[p * d + k2];
                        }
                    }
                    self.c2[(a * d + k1) * d + k2] = acc;
                }
            }
        }
    }
}

fn check_dims<F: VectorField + ?Sized>(a: &[f64], sigma: &F, d: usize) -> Result<()> {
    if a.len() != sigma.state_dim() || d != sigma.driver_dim() {
        return Err(Error::DimensionMismatch(format!(
            "field maps ℝ^{} to ℝ^{}×{}, got state {} and driver {d}",
            sigma.state_dim(),
            sigma.state_dim(),
            sigma.driver_dim(),
            a.len()
        )));
    }
    Ok(())
}

/// Increment of the solution over one span starting at state `y`.
pub fn step3<F: VectorField + ?Sized>(
    y: &[f64],
    sigma: &F,
    dx: &[f64],
    x2: &[f64],
    x3: &[f64],
) -> Result<Vec<f64>> {
    let d = dx.len();
    check_dims(y, sigma, d)?;
    if x2.len() != d * d || x3.len() != d * d * d {
        return Err(Error::DimensionMismatch("area or volume has the wrong size".into()));
    }
    let mut coeffs = StepCoefficients::new(y.len(), d);
    coeffs.update(sigma, y);
    let span = Level3 {
        dx: dx.to_vec(),
        area: x2.to_vec(),
        volume: x3.to_vec(),
    };
    let mut out = vec![0.0; y.len()];
    add_germ(&coeffs.sigma, &coeffs.c1, &coeffs.c2, &span, &mut out);
    Ok(out)
}

/// Marches the germ over every cell of `lift` from `a`.
pub fn march<F: VectorField + ?Sized>(a: &[f64], sigma: &F, lift: &RoughLift3) -> Result<Path1> {
    let (l, d, n) = (a.len(), lift.dim(), lift.n());
    check_dims(a, sigma, d)?;
    let mut values = Vec::with_capacity((n + 1) * l);
    let mut y = a.to_vec();
    values.extend_from_slice(&y);
    let mut coeffs = StepCoefficients::new(l, d);
    let mut span = Level3::zero(d);
    for c in 0..n {
        let cell = lift.cell(c);
        cell.dx_into(&mut span.dx);
        span.area.copy_from_slice(cell.area);
        span.volume.copy_from_slice(cell.volume);
        coeffs.update(sigma, &y);
        add_germ(&coeffs.sigma, &coeffs.c1, &coeffs.c2, &span, &mut y);
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { step: c + 1 });
        }
        values.extend_from_slice(&y);
    }
    Path1::new(*lift.grid(), l, values)
}

/// Diagnostic: surrogate norm of `δΞ` for the solution germ, at exponent `4κ`.
pub fn solution_germ_residual<F: VectorField + ?Sized>(y: &Path1, sigma: &F, lift: &RoughLift3, kappa: f64) -> f64 {
    let (l, d) = (y.dim(), lift.dim());
    germ_surrogate(lift.n(), lift.grid().h(), l, 4.0 * kappa, |s| {
        let mut coeffs = StepCoefficients::new(l, d);
        coeffs.update(sigma, y.at(s));
        let mut row = Vec::with_capacity((lift.n() - s + 1) * l);
        let mut buf = vec![0.0; l];
        lift.for_each_span_from(s, |_, span| {
            buf.iter_mut().for_each(|v| *v = 0.0);
            add_germ(&coeffs.sigma, &coeffs.c1, &coeffs.c2, span, &mut buf);
            row.extend_from_slice(&buf);
        });
        row
    })
}

/// Solves `δy = ∫ σ(y) dx`, `y_0 = a`, by the explicit third-order march.
pub fn solve_sde<F: VectorField + ?Sized>(a: &[f64], sigma: &F, lift: &RoughLift3) -> Result<SolveReport> {
    solve_sde_with(a, sigma, lift, DEFAULT_GAMMA)
}

/// [`solve_sde`] with the driver regularity `gamma` used by the diagnostics.
pub fn solve_sde_with<F: VectorField + ?Sized>(
    a: &[f64],
    sigma: &F,
    lift: &RoughLift3,
    gamma: f64,
) -> Result<SolveReport> {
    let y = march(a, sigma, lift)?;
    let germ_residual = solution_germ_residual(&y, sigma, lift, KAPPA_FACTOR * gamma);
    Ok(SolveReport {
        y,
        germ_residual,
        steps: lift.n(),
        method: Method::Step3,
        picard_iters: None,
        windows: None,
        derivatives: sigma.derivatives(),
    })
}

fn sup_distance(a: &Path1, b: &Path1) -> f64 {
    crate::tensor::max_diff(a.values(), b.values())
}

enum WindowOutcome {
    Converged(Path1, usize),
    Diverging(usize),
}

fn picard_window<F: VectorField + ?Sized>(
    a: &[f64],
    sigma: &F,
    lift: &RoughLift3,
    tol: f64,
    max_iter: usize,
    kappa: f64,
) -> Result<WindowOutcome> {
    let mut z = ControlledPath::constant(a, lift, kappa)?;
    let mut last = f64::INFINITY;
    let mut growth = 0;
    for iter in 1..=max_iter {
        let next = z.compose(sigma)?.integrate(a)?;
        if next.z.values().iter().any(|v| !v.is_finite()) {
            return Ok(WindowOutcome::Diverging(iter));
        }
        let dist = sup_distance(&next.z, &z.z);
        if dist < tol {
            return Ok(WindowOutcome::Converged(next.z, iter));
        }
        growth = if dist > last { growth + 1 } else { 0 };
        if growth >= GROWTH_LIMIT {
            return Ok(WindowOutcome::Diverging(iter));
        }
        last = dist;
        z = next;
    }
    Err(Error::NoConvergence {
        max_iter,
        distance: last,
    })
}

/// Fixed point of `z ↦ a + ∫ σ(z) dx`, started from the constant path `a`.
///
/// The iteration runs on windows of the grid, starting with the whole interval; a
/// window is halved when the change between iterates grows three times in a row,
/// down to [`MIN_WINDOW`] cells. Each window restarts from the end value of the
/// previous one. `max_iter` applies per window.
pub fn picard_solve<F: VectorField + ?Sized>(
    a: &[f64],
    sigma: &F,
    lift: &RoughLift3,
    tol: f64,
    max_iter: usize,
) -> Result<SolveReport> {
    if !(tol > 0.0) || max_iter == 0 {
        return Err(Error::InvalidArgument("tolerance and iteration cap must be positive".into()));
    }
    check_dims(a, sigma, lift.dim())?;
    let kappa = KAPPA_FACTOR * DEFAULT_GAMMA;
    let n = lift.n();
    let l = a.len();
    let mut window = n;
    let mut start = 0;
    let mut state = a.to_vec();
    let mut values = a.to_vec();
    let mut iters = 0;
    let mut windows = 0;
    while start < n {
        let cells = window.min(n - start);
        let sub = lift.restrict(start, cells)?;
        match picard_window(&state, sigma, &sub, tol, max_iter, kappa)? {
            WindowOutcome::Converged(z, k) => {
                iters += k;
                windows += 1;
                values.extend_from_slice(&z.values()[l..]);
                state = z.last().to_vec();
                start += cells;
            }
            WindowOutcome::Diverging(k) => {
                iters += k;
                if window / 2 < MIN_WINDOW {
                    return Err(Error::NoConvergence {
                        max_iter,
                        distance: f64::INFINITY,
                    });
                }
                window /= 2;
            }
        }
    }
    let y = Path1::new(*lift.grid(), l, values)?;
    let germ_residual = solution_germ_residual(&y, sigma, lift, kappa);
    Ok(SolveReport {
        y,
        germ_residual,
        steps: n,
        method: Method::Picard,
        picard_iters: Some(iters),
        windows: Some(windows),
        derivatives: sigma.derivatives(),
    })
}

/// Discrete Hölder distances between two lifts on the same grid:
/// `(‖δx₁ - δx₂‖_γ, ‖𝐱²₁ - 𝐱²₂‖_{2γ}, ‖𝐱³₁ - 𝐱³₂‖_{3γ})`.
pub fn lift_distance(a: &RoughLift3, b: &RoughLift3, gamma: f64) -> Result<(f64, f64, f64)> {
    if a.n() != b.n() || a.dim() != b.dim() {
        return Err(Error::DimensionMismatch("lifts differ in cell count or dimension".into()));
    }
    let grid = *a.grid();
    let (mut dx, mut area, mut vol) = (0.0_f64, 0.0_f64, 0.0_f64);
    let diff = |p: &[f64], q: &[f64]| -> f64 {
        p.iter().zip(q).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt()
    };
    for s in 0..grid.n() {
        let mut rows: Vec<Level3> = Vec::with_capacity(grid.n() - s + 1);
        a.for_each_span_from(s, |_, span| rows.push(span.clone()));
        b.for_each_span_from(s, |t, span| {
            if t > s {
                let other = &rows[t - s];
                let dt = (t - s) as f64 * grid.h();
                dx = dx.max(diff(&other.dx, &span.dx) / dt.powf(gamma));
                area = area.max(diff(&other.area, &span.area) / dt.powf(2.0 * gamma));
                vol = vol.max(diff(&other.volume, &span.volume) / dt.powf(3.0 * gamma));
            }
        });
    }
    Ok((dx, area, vol))
}

/// Distance between two solutions: `κ`-Hölder norm of the difference plus the gap at the start.
pub fn path_distance(a: &Path1, b: &Path1, kappa: f64) -> Result<f64> {
    let diff = a.combine(1.0, b, -1.0)?;
    let mut buf = vec![0.0; diff.dim()];
    let seminorm = holder_sup(diff.grid(), kappa, |i, j| {
        diff.increment_into(i, j, &mut buf);
        euclid(&buf)
    });
    Ok(seminorm + euclid(diff.at(0)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuityReport {
    pub solution_distance: f64,
    /// Sum of the three lift distances.
    pub input_distance: f64,
    pub path: f64,
    pub area: f64,
    pub volume: f64,
}

/// Number of fine cells per coarse cell when `fine` refines `coarse` on the same interval.
pub(crate) fn refinement(coarse: &Grid, fine: &Grid) -> Result<usize> {
    let same = |a: f64, b: f64| (a - b).abs() <= 1e-9 * coarse.h();
    if !fine.n().is_multiple_of(coarse.n()) || !same(coarse.t0(), fine.t0()) || !same(coarse.end(), fine.end()) {
        return Err(Error::DimensionMismatch(format!(
            "grid with {} cells does not refine the grid with {} cells",
            fine.n(),
            coarse.n()
        )));
    }
    Ok(fine.n() / coarse.n())
}

/// Solves on two lifts and compares the solutions with the inputs.
///
/// `lift2` may live on a refinement of the grid of `lift1`; its solution is then read on
/// the coarse points and its lift is compared after coarsening.
pub fn continuity_probe<F: VectorField + ?Sized>(
    a: &[f64],
    sigma: &F,
    lift1: &RoughLift3,
    lift2: &RoughLift3,
    gamma: f64,
) -> Result<ContinuityReport> {
    let kappa = KAPPA_FACTOR * gamma;
    let factor = if lift1.grid() == lift2.grid() { 1 } else { refinement(lift1.grid(), lift2.grid())? };
    let y1 = march(a, sigma, lift1)?;
    let fine = march(a, sigma, lift2)?.coarsen(factor)?;
    let y2 = Path1::new(*y1.grid(), y1.dim(), fine.values().to_vec())?;
    let (path, area, volume) = if factor == 1 {
        lift_distance(lift1, lift2, gamma)?
    } else {
        lift_distance(lift1, &lift2.coarsen(factor)?, gamma)?
    };
    Ok(ContinuityReport {
        solution_distance: path_distance(&y1, &y2, kappa)?,
        input_distance: path + area + volume,
        path,
        area,
        volume,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{Constant, Linear, Zero};

    #[test]
    fn truncated_exponential_step() {
        let f = Linear { l: 1, d: 1, lambda: 1.0 };
        let inc = step3(&[1.0], &f, &[0.1], &[0.005], &[0.1f64.powi(3) / 6.0]).unwrap();
        assert!((inc[0] - (0.1 + 0.005 + 0.001 / 6.0)).abs() < 1e-16);
        let z = step3(&[1.0], &Zero { l: 1, d: 1 }, &[0.1], &[0.005], &[1e-3]).unwrap();
        assert_eq!(z[0], 0.0);
        let c = Constant { l: 1, d: 2, matrix: vec![2.0, -1.0] };
        let inc = step3(&[0.3], &c, &[0.1, 0.4], &[0.0, 1.0, 2.0, 0.0], &[1.0; 8]).unwrap();
        assert_eq!(inc[0], 2.0 * 0.1 - 0.4);
    }
}
