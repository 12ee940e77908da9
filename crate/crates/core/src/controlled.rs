//! Paths controlled by a level-3 lift: remainders, the controlled semi-norm,
//! composition with smooth maps, and integration by sewing the third-order germ.
//!
//! A path `z` with values in `ℝ^l` is controlled by `x ∈ ℝ^d` through
//! `δz^i = ζ¹^{ij} δx^j + ζ²^{ijk} 𝐱²^{kj} + r^i` and `δζ¹^{ij} = ζ²^{ijk} δx^k + ρ^{ij}`.
//! `ζ¹` is stored as `i*d + j`, `ζ²` as `(i*d + j)*d + k`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::field::VectorField;
use crate::increments::{euclid, Inc2, Path1};
use crate::lift::{Level3, RoughLift3};

const GERM_SEED: u64 = 0x6e57_1d0e;
/// Above this many triples the germ diagnostic samples instead of enumerating.
pub const GERM_EXHAUSTIVE_LIMIT: usize = 1_000_000;
pub const GERM_SAMPLE_SIZE: usize = 10_000;

/// Adds the third-order germ over one span to `out`:
/// `Ξ^i = m^{ij} δx^j + μ¹^{ijk} 𝐱²^{kj} + μ²^{ijk₁k₂} 𝐱³^{k₂k₁j}`.
///
/// `m` is `l×d`, `mu1` is `l×d×d`, `mu2` is `l×d×d×d`; any of the higher terms may be empty.
pub fn add_germ(m: &[f64], mu1: &[f64], mu2: &[f64], span: &Level3, out: &mut [f64]) {
    let d = span.dim();
    let l = out.len();
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for j in 0..d {
            acc += m[i * d + j] * span.dx[j];
        }
        if !mu1.is_empty() {
            for j in 0..d {
                for k in 0..d {
                    acc += mu1[(i * d + j) * d + k] * span.area[k * d + j];
                }
            }
        }
        if !mu2.is_empty() {
            for j in 0..d {
                for k1 in 0..d {
                    for k2 in 0..d {
                        acc += mu2[((i * d + j) * d + k1) * d + k2] * span.volume[(k2 * d + k1) * d + j];
                    }
                }
            }
        }
        *o += acc;
    }
    debug_assert_eq!(out.len(), l);
}

/// `out^i += μ¹^{ijk} a^{kj}` for one (possibly delayed) area `a`.
pub fn add_area_term(mu1: &[f64], area: &[f64], d: usize, out: &mut [f64]) {
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for j in 0..d {
            for k in 0..d {
                acc += mu1[(i * d + j) * d + k] * area[k * d + j];
            }
        }
        *o += acc;
    }
}

/// `out^i += μ²^{ijk₁k₂} v^{k₂k₁j}` for one (possibly delayed) volume `v`.
pub fn add_volume_term(mu2: &[f64], volume: &[f64], d: usize, out: &mut [f64]) {
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for j in 0..d {
            for k1 in 0..d {
                for k2 in 0..d {
                    acc += mu2[((i * d + j) * d + k1) * d + k2] * volume[(k2 * d + k1) * d + j];
                }
            }
        }
        *o += acc;
    }
}

/// A path with its first- and second-order coefficients along a lift.
#[derive(Debug, Clone)]
pub struct ControlledPath<'a> {
    pub z: Path1,
    pub zeta1: Path1,
    pub zeta2: Path1,
    pub lift: &'a RoughLift3,
    /// Hölder exponent used by the diagnostics.
    pub kappa: f64,
}

/// The seven parts of the controlled semi-norm and their sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlledNorm {
    pub z: f64,
    pub zeta1_sup: f64,
    pub zeta1: f64,
    pub zeta2_sup: f64,
    pub zeta2: f64,
    pub rho: f64,
    pub r: f64,
}

impl ControlledNorm {
    pub fn total(&self) -> f64 {
        self.z + self.zeta1_sup + self.zeta1 + self.zeta2_sup + self.zeta2 + self.rho + self.r
    }
}

impl<'a> ControlledPath<'a> {
    pub fn new(z: Path1, zeta1: Path1, zeta2: Path1, lift: &'a RoughLift3, kappa: f64) -> Result<Self> {
        let (l, d) = (z.dim(), lift.dim());
        for (name, p, want) in [("ζ¹", &zeta1, l * d), ("ζ²", &zeta2, l * d * d)] {
            if p.dim() != want {
                return Err(Error::DimensionMismatch(format!(
                    "{name} has dimension {} but {want} is required",
                    p.dim()
                )));
            }
        }
        for p in [&z, &zeta1, &zeta2] {
            if p.grid() != lift.grid() {
                return Err(Error::DimensionMismatch("controlled path and lift grids differ".into()));
            }
        }
        if !(kappa > 0.0) {
            return Err(Error::InvalidArgument(format!("κ must be positive, got {kappa}")));
        }
        Ok(Self {
            z,
            zeta1,
            zeta2,
            lift,
            kappa,
        })
    }

    /// `x` itself, with `ζ¹ = Id` and `ζ² = 0`.
    pub fn driver(lift: &'a RoughLift3, kappa: f64) -> Result<Self> {
        let d = lift.dim();
        let grid = *lift.grid();
        let mut eye = vec![0.0; d * d];
        (0..d).for_each(|i| eye[i * d + i] = 1.0);
        Self::new(
            lift.x().clone(),
            Path1::constant(grid, &eye)?,
            Path1::constant(grid, &vec![0.0; d * d * d])?,
            lift,
            kappa,
        )
    }

    /// The constant path `a` with zero coefficients.
    pub fn constant(a: &[f64], lift: &'a RoughLift3, kappa: f64) -> Result<Self> {
        let (l, d) = (a.len(), lift.dim());
        let grid = *lift.grid();
        Self::new(
            Path1::constant(grid, a)?,
            Path1::constant(grid, &vec![0.0; l * d])?,
            Path1::constant(grid, &vec![0.0; l * d * d])?,
            lift,
            kappa,
        )
    }

    pub fn dim(&self) -> usize {
        self.z.dim()
    }

    /// All coefficients multiplied by `lambda`.
    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        let s = |p: &Path1| p.combine(lambda, p, 0.0);
        Self::new(s(&self.z)?, s(&self.zeta1)?, s(&self.zeta2)?, self.lift, self.kappa)
    }

    fn remainders_at(&self, s: usize, t: usize, span: &Level3, r: &mut [f64], rho: &mut [f64]) {
        let (l, d) = (self.dim(), self.lift.dim());
        let (zs, zt) = (self.z.at(s), self.z.at(t));
        let (z1s, z1t) = (self.zeta1.at(s), self.zeta1.at(t));
        let z2s = self.zeta2.at(s);
        for i in 0..l {
            let mut acc = zt[i] - zs[i];
            for j in 0..d {
                acc -= z1s[i * d + j] * span.dx[j];
                for k in 0..d {
                    acc -= z2s[(i * d + j) * d + k] * span.area[k * d + j];
                }
            }
            r[i] = acc;
            for j in 0..d {
                let mut a = z1t[i * d + j] - z1s[i * d + j];
                for k in 0..d {
                    a -= z2s[(i * d + j) * d + k] * span.dx[k];
                }
                rho[i * d + j] = a;
            }
        }
    }

    /// Remainders `r` (shape `l`) and `ρ` (shape `l×d`) at every grid pair.
    pub fn remainders(&self) -> Result<(Inc2, Inc2)> {
        let (l, d) = (self.dim(), self.lift.dim());
        let grid = *self.lift.grid();
        let mut r = Inc2::zeros(grid, &[l])?;
        let mut rho = Inc2::zeros(grid, &[l, d])?;
        let (mut rb, mut pb) = (vec![0.0; l], vec![0.0; l * d]);
        for s in 0..grid.n() {
            self.lift.for_each_span_from(s, |t, span| {
                if t > s {
                    self.remainders_at(s, t, span, &mut rb, &mut pb);
                    r.get_mut(s, t).copy_from_slice(&rb);
                    rho.get_mut(s, t).copy_from_slice(&pb);
                }
            });
        }
        Ok((r, rho))
    }

    /// The seven discrete norms of the controlled decomposition (no dense storage).
    pub fn norm_parts(&self) -> ControlledNorm {
        let (l, d) = (self.dim(), self.lift.dim());
        let grid = *self.lift.grid();
        let k = self.kappa;
        let sup = |p: &Path1| (0..grid.len()).fold(0.0_f64, |m, i| m.max(euclid(p.at(i))));
        let mut out = ControlledNorm {
            z: crate::increments::holder_norm_path(&self.z, k),
            zeta1_sup: sup(&self.zeta1),
            zeta1: crate::increments::holder_norm_path(&self.zeta1, k),
            zeta2_sup: sup(&self.zeta2),
            zeta2: crate::increments::holder_norm_path(&self.zeta2, k),
            rho: 0.0,
            r: 0.0,
        };
        let (mut rb, mut pb) = (vec![0.0; l], vec![0.0; l * d]);
        for s in 0..grid.n() {
            self.lift.for_each_span_from(s, |t, span| {
                if t > s {
                    self.remainders_at(s, t, span, &mut rb, &mut pb);
                    let dt = (t - s) as f64 * grid.h();
                    out.r = out.r.max(euclid(&rb) / dt.powf(3.0 * k));
                    out.rho = out.rho.max(euclid(&pb) / dt.powf(2.0 * k));
                }
            });
        }
        out
    }

    pub fn controlled_norm(&self) -> f64 {
        self.norm_parts().total()
    }

    /// `φ(z)` with `ζ̂¹ = ∂φ ζ¹` and `ζ̂² = ∂φ ζ² + ∂²φ (ζ¹ ⊗ ζ¹)`.
    ///
    /// `phi` is read as a map `ℝ^l → ℝ^{o}`, `o = phi.state_dim() * phi.driver_dim()`.
    pub fn compose<F: VectorField + ?Sized>(&self, phi: &F) -> Result<ControlledPath<'a>> {
        let (l, d) = (self.dim(), self.lift.dim());
        if phi.state_dim() != l {
            return Err(Error::DimensionMismatch(format!(
                "map expects dimension {} but the path has {l}",
                phi.state_dim()
            )));
        }
        let o = phi.state_dim() * phi.driver_dim();
        let grid = *self.lift.grid();
        let len = grid.len();
        let mut z = Vec::with_capacity(len * o);
        let mut zeta1 = Vec::with_capacity(len * o * d);
        let mut zeta2 = Vec::with_capacity(len * o * d * d);
        let (mut val, mut jac, mut hess) = (vec![0.0; o], vec![0.0; o * l], vec![0.0; o * l * l]);
        let (mut z1, mut z2) = (vec![0.0; o * d], vec![0.0; o * d * d]);
        for p in 0..len {
            let (y, a1, a2) = (self.z.at(p), self.zeta1.at(p), self.zeta2.at(p));
            phi.eval(y, &mut val);
            phi.jacobian(y, &mut jac);
            phi.hessian(y, &mut hess);
            compose_coefficients(l, d, &jac, &hess, a1, a2, &mut z1, &mut z2);
            z.extend_from_slice(&val);
            zeta1.extend_from_slice(&z1);
            zeta2.extend_from_slice(&z2);
        }
        ControlledPath::new(
            Path1::new(grid, o, z)?,
            Path1::new(grid, o * d, zeta1)?,
            Path1::new(grid, o * d * d, zeta2)?,
            self.lift,
            self.kappa,
        )
    }

    /// `∫ m dx` for this path read as an `l'×d` matrix-valued integrand, started at `start`.
    ///
    /// The increment over each cell is the germ with `m`, `μ¹ = ζ¹`, `μ² = ζ²`; the
    /// result carries `ζ¹ = m` and `ζ² = μ¹`.
    pub fn integrate(&self, start: &[f64]) -> Result<ControlledPath<'a>> {
        let d = self.lift.dim();
        let l = self.dim() / d;
        if l * d != self.dim() || start.len() != l {
            return Err(Error::DimensionMismatch(format!(
                "integrand of dimension {} cannot be read as {}×{d}",
                self.dim(),
                start.len()
            )));
        }
        let grid = *self.lift.grid();
        let mut z = Vec::with_capacity(grid.len() * l);
        let mut state = start.to_vec();
        z.extend_from_slice(&state);
        for c in 0..grid.n() {
            let span = self.lift.span(c, c + 1);
            add_germ(self.z.at(c), self.zeta1.at(c), self.zeta2.at(c), &span, &mut state);
            z.extend_from_slice(&state);
        }
        let zeta2 = self.zeta1.clone();
        ControlledPath::new(Path1::new(grid, l, z)?, self.z.clone(), zeta2, self.lift, self.kappa)
    }

    /// Sum of germs over the sub-grid with every `factor`-th point: the Riemann sum on a
    /// coarser partition. Returns the total increment over the whole grid.
    pub fn riemann_sum(&self, factor: usize) -> Result<Vec<f64>> {
        let d = self.lift.dim();
        let l = self.dim() / d;
        let n = self.lift.n();
        if factor == 0 || !n.is_multiple_of(factor) {
            return Err(Error::InvalidArgument(format!("{n} cells cannot be split by {factor}")));
        }
        let mut total = vec![0.0; l];
        for c in (0..n).step_by(factor) {
            let span = self.lift.span(c, c + factor);
            add_germ(self.z.at(c), self.zeta1.at(c), self.zeta2.at(c), &span, &mut total);
        }
        Ok(total)
    }

    /// Surrogate `(μ/2, μ/2)` norm of `δΞ` for the germ of this integrand.
    pub fn germ_residual(&self, mu: f64) -> f64 {
        let d = self.lift.dim();
        let l = self.dim() / d;
        let lift = self.lift;
        germ_surrogate(lift.n(), lift.grid().h(), l, mu, |s| {
            let mut row = Vec::with_capacity((lift.n() - s + 1) * l);
            let mut buf = vec![0.0; l];
            lift.for_each_span_from(s, |_, span| {
                buf.iter_mut().for_each(|v| *v = 0.0);
                add_germ(self.z.at(s), self.zeta1.at(s), self.zeta2.at(s), span, &mut buf);
                row.extend_from_slice(&buf);
            });
            row
        })
    }
}

/// `ζ̂¹^{aj} = ∂_iφ^a ζ¹^{ij}` and `ζ̂²^{ajk} = ∂_iφ^a ζ²^{ijk} + ∂_{i₁i₂}φ^a ζ¹^{i₁j} ζ¹^{i₂k}`.
#[allow(clippy::too_many_arguments)]
pub fn compose_coefficients(
    l: usize,
    d: usize,
    jac: &[f64],
    hess: &[f64],
    zeta1: &[f64],
    zeta2: &[f64],
    out1: &mut [f64],
    out2: &mut [f64],
) {
    let o = jac.len() / l;
    for a in 0..o {
        for j in 0..d {
            let mut acc = 0.0;
            for i in 0..l {
                acc += jac[a * l + i] * zeta1[i * d + j];
            }
            out1[a * d + j] = acc;
            for k in 0..d {
                let mut acc = 0.0;
                for i in 0..l {
                    acc += jac[a * l + i] * zeta2[(i * d + j) * d + k];
                }
                for i1 in 0..l {
                    let z1 = zeta1[i1 * d + j];
                    if z1 == 0.0 {
                        continue;
                    }
                    for i2 in 0..l {
                        acc += hess[(a * l + i1) * l + i2] * z1 * zeta1[i2 * d + k];
                    }
                }
                out2[(a * d + j) * d + k] = acc;
            }
        }
    }
}

/// `sup |(δΞ)_{sut}| / (|u - s|^{μ/2} |t - u|^{μ/2})` for a germ given row by row:
/// `row(s)` lists `Ξ_{s,t}` (width `l`) for `t = s, s + 1, …, n`.
///
/// All triples are visited when there are at most [`GERM_EXHAUSTIVE_LIMIT`];
/// otherwise [`GERM_SAMPLE_SIZE`] seeded random triples built on 64 start points.
pub fn germ_surrogate(n: usize, h: f64, l: usize, mu: f64, row: impl Fn(usize) -> Vec<f64>) -> f64 {
    let len = n + 1;
    let triples = len * (len - 1) * len.saturating_sub(2) / 6;
    let half = mu / 2.0;
    let mut best = 0.0_f64;
    let mut diff = vec![0.0; l];
    let mut check = |rows: &[Option<Vec<f64>>], s: usize, u: usize, t: usize| {
        let (Some(rs), Some(ru)) = (&rows[s], &rows[u]) else {
            return;
        };
        for c in 0..l {
            diff[c] = rs[(t - s) * l + c] - rs[(u - s) * l + c] - ru[(t - u) * l + c];
        }
        let w = (((u - s) as f64) * h).powf(half) * (((t - u) as f64) * h).powf(half);
        best = best.max(euclid(&diff) / w);
    };
    if triples <= GERM_EXHAUSTIVE_LIMIT {
        let rows: Vec<Option<Vec<f64>>> = (0..len).map(|s| Some(row(s))).collect();
        for s in 0..len {
            for u in s + 1..len {
                for t in u + 1..len {
                    check(&rows, s, u, t);
                }
            }
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(GERM_SEED);
        let mut starts: Vec<usize> = (0..64).map(|_| rng.random_range(0..n - 1)).collect();
        starts.sort_unstable();
        starts.dedup();
        let mut rows: Vec<Option<Vec<f64>>> = vec![None; len];
        for &s in &starts {
            rows[s] = Some(row(s));
        }
        for _ in 0..GERM_SAMPLE_SIZE {
            let a = starts[rng.random_range(0..starts.len())];
            let b = starts[rng.random_range(0..starts.len())];
            let (s, u) = (a.min(b), a.max(b));
            if s == u {
                continue;
            }
            let t = rng.random_range(u + 1..len);
            check(&rows, s, u, t);
        }
    }
    best
}
