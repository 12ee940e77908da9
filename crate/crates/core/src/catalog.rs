//! Built-in coefficient fields with analytic derivatives, addressable by name.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::field::{DelayVectorField, IgnoreDelays, VectorField};

/// Names accepted by [`vector_field`].
pub const FIELD_NAMES: &[&str] = &["zero", "constant", "linear", "rotation", "polynomial", "sine"];
/// Names accepted by [`delay_vector_field`] in addition to [`FIELD_NAMES`].
pub const DELAY_FIELD_NAMES: &[&str] = &["delay-linear", "delay-feedback"];

fn zeroed(out: &mut [f64]) {
    out.iter_mut().for_each(|v| *v = 0.0);
}

/// `σ ≡ 0`.
#[derive(Debug, Clone)]
pub struct Zero {
    pub l: usize,
    pub d: usize,
}

impl VectorField for Zero {
    fn state_dim(&self) -> usize {
        self.l
    }
    fn driver_dim(&self) -> usize {
        self.d
    }
    fn eval(&self, _: &[f64], out: &mut [f64]) {
        zeroed(out)
    }
    fn jacobian(&self, _: &[f64], out: &mut [f64]) {
        zeroed(out)
    }
    fn hessian(&self, _: &[f64], out: &mut [f64]) {
        zeroed(out)
    }
    fn name(&self) -> String {
        "zero".into()
    }
}

/// `σ ≡ C` for a fixed `l×d` matrix.
#[derive(Debug, Clone)]
pub struct Constant {
    pub l: usize,
    pub d: usize,
    pub matrix: Vec<f64>,
}

impl VectorField for Constant {
    fn state_dim(&self) -> usize {
        self.l
    }
    fn driver_dim(&self) -> usize {
        self.d
    }
    fn eval(&self, _: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.matrix)
    }
    fn jacobian(&self, _: &[f64], out: &mut [f64]) {
        zeroed(out)
    }
    fn hessian(&self, _: &[f64], out: &mut [f64]) {
        zeroed(out)
    }
    fn name(&self) -> String {
        "constant".into()
    }
}

/// `σ^{ij}(y) = λ y^i` for every driver coordinate `j`.
#[derive(Debug, Clone)]
pub struct Linear {
    pub l: usize,
    pub d: usize,
    pub lambda: f64,
}

impl VectorField for Linear {
    fn state_dim(&self) -> usize {
        self.l
    }
    fn driver_dim(&self) -> usize {
        self.d
    }
    fn eval(&self, y: &[f64], out: &mut [f64]) {
        for i in 0..self.l {
            for j in 0..self.d {
                out[i * self.d + j] = self.lambda * y[i];
            }
        }
    }
    fn jacobian(&self, _: &[f64], out: &mut [f64]) {
        zeroed(out);
        let l = self.l;
        for i in 0..l {
            for j in 0..self.d {
                out[(i * self.d + j) * l + i] = self.lambda;
            }
        }
    }
    fn hessian(&self, _: &[f64], out: &mut [f64]) {
        zeroed(out)
    }
    fn name(&self) -> String {
        "linear".into()
    }
}

/// Planar rotation: `σ^{·j}(y) = ω_j J y` with `J = [[0, -1], [1, 0]]`.
#[derive(Debug, Clone)]
pub struct Rotation {
    pub omegas: Vec<f64>,
}

impl VectorField for Rotation {
    fn state_dim(&self) -> usize {
        2
    }
    fn driver_dim(&self) -> usize {
        self.omegas.len()
    }
    fn eval(&self, y: &[f64], out: &mut [f64]) {
        let d = self.omegas.len();
        for (j, w) in self.omegas.iter().enumerate() {
            out[j] = -w * y[1];
            out[d + j] = w * y[0];
        }
    }
    fn jacobian(&self, _: &[f64], out: &mut [f64]) {
        zeroed(out);
        let d = self.omegas.len();
        for (j, w) in self.omegas.iter().enumerate() {
            out[j * 2 + 1] = -w;
            out[(d + j) * 2] = *w;
        }
    }
    fn hessian(&self, _: &[f64], out: &mut [f64]) {
        zeroed(out)
    }
    fn name(&self) -> String {
        "rotation".into()
    }
}

/// `σ^{ij}(y) = c0 + c1 y^k + c2 (y^k)²` with `k = (i + j) mod l`.
#[derive(Debug, Clone)]
pub struct Polynomial {
    pub l: usize,
    pub d: usize,
    pub c: [f64; 3],
}

impl VectorField for Polynomial {
    fn state_dim(&self) -> usize {
        self.l
    }
    fn driver_dim(&self) -> usize {
        self.d
    }
    fn eval(&self, y: &[f64], out: &mut [f64]) {
        for i in 0..self.l {
            for j in 0..self.d {
                let z = y[(i + j) % self.l];
                out[i * self.d + j] = self.c[0] + self.c[1] * z + self.c[2] * z * z;
            }
        }
    }
    fn jacobian(&self, y: &[f64], out: &mut [f64]) {
        zeroed(out);
        let l = self.l;
        for i in 0..l {
            for j in 0..self.d {
                let k = (i + j) % l;
                out[(i * self.d + j) * l + k] = self.c[1] + 2.0 * self.c[2] * y[k];
            }
        }
    }
    fn hessian(&self, _: &[f64], out: &mut [f64]) {
        zeroed(out);
        let l = self.l;
        for i in 0..l {
            for j in 0..self.d {
                let k = (i + j) % l;
                out[((i * self.d + j) * l + k) * l + k] = 2.0 * self.c[2];
            }
        }
    }
    fn name(&self) -> String {
        "polynomial".into()
    }
}

/// `σ^{ij}(y) = a sin(ω y^k + j)` with `k = (i + j) mod l`.
#[derive(Debug, Clone)]
pub struct Sine {
    pub l: usize,
    pub d: usize,
    pub amplitude: f64,
    pub omega: f64,
}

impl VectorField for Sine {
    fn state_dim(&self) -> usize {
        self.l
    }
    fn driver_dim(&self) -> usize {
        self.d
    }
    fn eval(&self, y: &[f64], out: &mut [f64]) {
        for i in 0..self.l {
            for j in 0..self.d {
                let z = y[(i + j) % self.l];
                out[i * self.d + j] = self.amplitude * (self.omega * z + j as f64).sin();
            }
        }
    }
    fn jacobian(&self, y: &[f64], out: &mut [f64]) {
        zeroed(out);
        let l = self.l;
        for i in 0..l {
            for j in 0..self.d {
                let k = (i + j) % l;
                out[(i * self.d + j) * l + k] =
                    self.amplitude * self.omega * (self.omega * y[k] + j as f64).cos();
            }
        }
    }
    fn hessian(&self, y: &[f64], out: &mut [f64]) {
        zeroed(out);
        let l = self.l;
        for i in 0..l {
            for j in 0..self.d {
                let k = (i + j) % l;
                out[((i * self.d + j) * l + k) * l + k] =
                    -self.amplitude * self.omega * self.omega * (self.omega * y[k] + j as f64).sin();
            }
        }
    }
    fn name(&self) -> String {
        "sine".into()
    }
}

/// `σ^{ij}(w) = α w_0^i + β Σ_{s=1}^q w_s^i` for every driver coordinate `j`.
#[derive(Debug, Clone)]
pub struct DelayLinear {
    pub n: usize,
    pub d: usize,
    pub q: usize,
    pub alpha: f64,
    pub beta: f64,
}

impl DelayVectorField for DelayLinear {
    fn state_dim(&self) -> usize {
        self.n
    }
    fn driver_dim(&self) -> usize {
        self.d
    }
    fn delay_count(&self) -> usize {
        self.q
    }
    fn eval(&self, w: &[f64], out: &mut [f64]) {
        for i in 0..self.n {
            let delayed: f64 = (1..=self.q).map(|s| w[s * self.n + i]).sum();
            for j in 0..self.d {
                out[i * self.d + j] = self.alpha * w[i] + self.beta * delayed;
            }
        }
    }
    fn jacobian(&self, _: &[f64], out: &mut [f64]) {
        zeroed(out);
        let k = self.input_dim();
        for i in 0..self.n {
            for j in 0..self.d {
                let row = (i * self.d + j) * k;
                out[row + i] = self.alpha;
                for s in 1..=self.q {
                    out[row + s * self.n + i] = self.beta;
                }
            }
        }
    }
    fn hessian(&self, _: &[f64], out: &mut [f64]) {
        zeroed(out)
    }
    fn name(&self) -> String {
        "delay-linear".into()
    }
}

/// `σ^{ij}(w) = α w_0^i cos(w_q^i) + β sin(w_q^i)`: nonlinear coupling of the current
/// state with the longest delay.
#[derive(Debug, Clone)]
pub struct DelayFeedback {
    pub n: usize,
    pub d: usize,
    pub q: usize,
    pub alpha: f64,
    pub beta: f64,
}

impl DelayVectorField for DelayFeedback {
    fn state_dim(&self) -> usize {
        self.n
    }
    fn driver_dim(&self) -> usize {
        self.d
    }
    fn delay_count(&self) -> usize {
        self.q
    }
    fn eval(&self, w: &[f64], out: &mut [f64]) {
        for i in 0..self.n {
            let (y, z) = (w[i], w[self.q * self.n + i]);
            for j in 0..self.d {
                out[i * self.d + j] = self.alpha * y * z.cos() + self.beta * z.sin();
            }
        }
    }
    fn jacobian(&self, w: &[f64], out: &mut [f64]) {
        zeroed(out);
        let k = self.input_dim();
        for i in 0..self.n {
            let (yi, zi) = (i, self.q * self.n + i);
            let (y, z) = (w[yi], w[zi]);
            for j in 0..self.d {
                let row = (i * self.d + j) * k;
                out[row + yi] += self.alpha * z.cos();
                out[row + zi] += -self.alpha * y * z.sin() + self.beta * z.cos();
            }
        }
    }
    fn hessian(&self, w: &[f64], out: &mut [f64]) {
        zeroed(out);
        let k = self.input_dim();
        for i in 0..self.n {
            let (yi, zi) = (i, self.q * self.n + i);
            let (y, z) = (w[yi], w[zi]);
            for j in 0..self.d {
                let row = (i * self.d + j) * k;
                let cross = -self.alpha * z.sin();
                out[(row + yi) * k + zi] += cross;
                out[(row + zi) * k + yi] += cross;
                out[(row + zi) * k + zi] += -self.alpha * y * z.cos() - self.beta * z.sin();
            }
        }
    }
    fn name(&self) -> String {
        "delay-feedback".into()
    }
}

fn param(params: &BTreeMap<String, f64>, key: &str, default: f64) -> f64 {
    params.get(key).copied().unwrap_or(default)
}

/// Looks up a catalog field. Parameters (with defaults): `constant`: `c` (1.0) or
/// entries `c<i>_<j>`; `linear`: `lambda` (1.0); `rotation`: `omega` (1.0) or
/// `omega<j>`; `polynomial`: `c0` (0.5), `c1` (1.0), `c2` (0.25); `sine`:
/// `amplitude` (1.0), `omega` (1.0).
pub fn vector_field(
    name: &str,
    l: usize,
    d: usize,
    params: &BTreeMap<String, f64>,
) -> Result<Box<dyn VectorField>> {
    if l == 0 || d == 0 {
        return Err(Error::InvalidArgument("field dimensions must be positive".into()));
    }
    Ok(match name {
        "zero" => Box::new(Zero { l, d }),
        "constant" => {
            let c = param(params, "c", 1.0);
            let matrix = (0..l * d)
                .map(|ij| param(params, &format!("c{}_{}", ij / d, ij % d), c))
                .collect();
            Box::new(Constant { l, d, matrix })
        }
        "linear" => Box::new(Linear {
            l,
            d,
            lambda: param(params, "lambda", 1.0),
        }),
        "rotation" => {
            if l != 2 {
                return Err(Error::InvalidArgument("the rotation field needs state dimension 2".into()));
            }
            let omega = param(params, "omega", 1.0);
            Box::new(Rotation {
                omegas: (0..d).map(|j| param(params, &format!("omega{j}"), omega)).collect(),
            })
        }
        "polynomial" => Box::new(Polynomial {
            l,
            d,
            c: [
                param(params, "c0", 0.5),
                param(params, "c1", 1.0),
                param(params, "c2", 0.25),
            ],
        }),
        "sine" => Box::new(Sine {
            l,
            d,
            amplitude: param(params, "amplitude", 1.0),
            omega: param(params, "omega", 1.0),
        }),
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown vector field '{other}' (expected one of {})",
                FIELD_NAMES.join(", ")
            )))
        }
    })
}

/// Looks up a delay field; plain catalog names ignore the delayed slots.
/// `delay-linear` and `delay-feedback` take `alpha` (0.0 / 0.5) and `beta` (1.0 / 1.0).
pub fn delay_vector_field(
    name: &str,
    n: usize,
    d: usize,
    q: usize,
    params: &BTreeMap<String, f64>,
) -> Result<Box<dyn DelayVectorField>> {
    if q == 0 {
        return Err(Error::InvalidArgument("a delay field needs at least one delay".into()));
    }
    Ok(match name {
        "delay-linear" => Box::new(DelayLinear {
            n,
            d,
            q,
            alpha: param(params, "alpha", 0.0),
            beta: param(params, "beta", 1.0),
        }),
        "delay-feedback" => Box::new(DelayFeedback {
            n,
            d,
            q,
            alpha: param(params, "alpha", 0.5),
            beta: param(params, "beta", 1.0),
        }),
        other if FIELD_NAMES.contains(&other) => {
            Box::new(IgnoreDelays::new(vector_field(other, n, d, params)?, q))
        }
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown vector field '{other}' (expected one of {}, {})",
                FIELD_NAMES.join(", "),
                DELAY_FIELD_NAMES.join(", ")
            )))
        }
    })
}
