//! Coefficient fields `σ` with first and second partial derivatives.
//!
//! Layouts (row-major, `l` state dimension, `d` driver dimension):
//! * value `σ^{ij}` at `i*d + j`;
//! * Jacobian `∂_m σ^{ij}` at `(i*d + j)*l + m`;
//! * Hessian `∂_{mp} σ^{ij}` at `((i*d + j)*l + m)*l + p`.
//!
//! Delay fields take the stacked argument `w = (w_0, …, w_q)` of length `n(q+1)` and
//! use the same layouts with `l` replaced by `n(q+1)`; slot `s` coordinate `m` is
//! input index `s*n + m`.

/// How the derivatives of a field are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Derivatives {
    Analytic,
    FiniteDifference,
}

impl std::fmt::Display for Derivatives {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Derivatives::Analytic => "analytic",
            Derivatives::FiniteDifference => "finite-difference",
        })
    }
}

/// Step of the central finite differences used by the fallback wrappers.
pub const FD_STEP: f64 = 1e-5;

/// `σ : ℝ^l → ℝ^{l×d}`.
pub trait VectorField: Send + Sync {
    fn state_dim(&self) -> usize;
    fn driver_dim(&self) -> usize;
    fn eval(&self, y: &[f64], out: &mut [f64]);
    fn jacobian(&self, y: &[f64], out: &mut [f64]);
    fn hessian(&self, y: &[f64], out: &mut [f64]);

    fn derivatives(&self) -> Derivatives {
        Derivatives::Analytic
    }

    fn name(&self) -> String {
        "custom".into()
    }
}

/// `σ : (ℝ^n)^{q+1} → ℝ^{n×d}` evaluated at `(y_t, y_{t-r_1}, …, y_{t-r_q})`.
pub trait DelayVectorField: Send + Sync {
    fn state_dim(&self) -> usize;
    fn driver_dim(&self) -> usize;
    /// Number of delayed slots `q`.
    fn delay_count(&self) -> usize;
    fn eval(&self, w: &[f64], out: &mut [f64]);
    fn jacobian(&self, w: &[f64], out: &mut [f64]);
    fn hessian(&self, w: &[f64], out: &mut [f64]);

    fn derivatives(&self) -> Derivatives {
        Derivatives::Analytic
    }

    fn name(&self) -> String {
        "custom".into()
    }

    fn input_dim(&self) -> usize {
        self.state_dim() * (self.delay_count() + 1)
    }
}

impl<F: VectorField + ?Sized> VectorField for &F {
    fn state_dim(&self) -> usize {
        (**self).state_dim()
    }
    fn driver_dim(&self) -> usize {
        (**self).driver_dim()
    }
    fn eval(&self, y: &[f64], out: &mut [f64]) {
        (**self).eval(y, out)
    }
    fn jacobian(&self, y: &[f64], out: &mut [f64]) {
        (**self).jacobian(y, out)
    }
    fn hessian(&self, y: &[f64], out: &mut [f64]) {
        (**self).hessian(y, out)
    }
    fn derivatives(&self) -> Derivatives {
        (**self).derivatives()
    }
    fn name(&self) -> String {
        (**self).name()
    }
}

impl<F: VectorField + ?Sized> VectorField for Box<F> {
    fn state_dim(&self) -> usize {
        (**self).state_dim()
    }
    fn driver_dim(&self) -> usize {
        (**self).driver_dim()
    }
    fn eval(&self, y: &[f64], out: &mut [f64]) {
        (**self).eval(y, out)
    }
    fn jacobian(&self, y: &[f64], out: &mut [f64]) {
        (**self).jacobian(y, out)
    }
    fn hessian(&self, y: &[f64], out: &mut [f64]) {
        (**self).hessian(y, out)
    }
    fn derivatives(&self) -> Derivatives {
        (**self).derivatives()
    }
    fn name(&self) -> String {
        (**self).name()
    }
}

impl<F: DelayVectorField + ?Sized> DelayVectorField for Box<F> {
    fn state_dim(&self) -> usize {
        (**self).state_dim()
    }
    fn driver_dim(&self) -> usize {
        (**self).driver_dim()
    }
    fn delay_count(&self) -> usize {
        (**self).delay_count()
    }
    fn eval(&self, w: &[f64], out: &mut [f64]) {
        (**self).eval(w, out)
    }
    fn jacobian(&self, w: &[f64], out: &mut [f64]) {
        (**self).jacobian(w, out)
    }
    fn hessian(&self, w: &[f64], out: &mut [f64]) {
        (**self).hessian(w, out)
    }
    fn derivatives(&self) -> Derivatives {
        (**self).derivatives()
    }
    fn name(&self) -> String {
        (**self).name()
    }
}

/// A plain field viewed as a delay field that ignores its `q` delayed slots.
#[derive(Debug, Clone)]
pub struct IgnoreDelays<F> {
    pub field: F,
    pub q: usize,
}

impl<F: VectorField> IgnoreDelays<F> {
    pub fn new(field: F, q: usize) -> Self {
        Self { field, q }
    }
}

impl<F: VectorField> DelayVectorField for IgnoreDelays<F> {
    fn state_dim(&self) -> usize {
        self.field.state_dim()
    }
    fn driver_dim(&self) -> usize {
        self.field.driver_dim()
    }
    fn delay_count(&self) -> usize {
        self.q
    }
    fn eval(&self, w: &[f64], out: &mut [f64]) {
        self.field.eval(&w[..self.state_dim()], out)
    }
    fn jacobian(&self, w: &[f64], out: &mut [f64]) {
        let (l, d, big) = (self.state_dim(), self.driver_dim(), self.input_dim());
        let mut inner = vec![0.0; l * d * l];
        self.field.jacobian(&w[..l], &mut inner);
        out.iter_mut().for_each(|v| *v = 0.0);
        for ij in 0..l * d {
            out[ij * big..ij * big + l].copy_from_slice(&inner[ij * l..(ij + 1) * l]);
        }
    }
    fn hessian(&self, w: &[f64], out: &mut [f64]) {
        let (l, d, big) = (self.state_dim(), self.driver_dim(), self.input_dim());
        let mut inner = vec![0.0; l * d * l * l];
        self.field.hessian(&w[..l], &mut inner);
        out.iter_mut().for_each(|v| *v = 0.0);
        for ij in 0..l * d {
            for m in 0..l {
                let src = (ij * l + m) * l;
                let dst = (ij * big + m) * big;
                out[dst..dst + l].copy_from_slice(&inner[src..src + l]);
            }
        }
    }
    fn derivatives(&self) -> Derivatives {
        self.field.derivatives()
    }
    fn name(&self) -> String {
        self.field.name()
    }
}

/// Central-difference Jacobian of `f : ℝ^k → ℝ^o`, layout `[o_index * k + m]`.
pub fn fd_jacobian(f: impl Fn(&[f64], &mut [f64]), k: usize, o: usize, y: &[f64], out: &mut [f64]) {
    let mut probe = y.to_vec();
    let (mut plus, mut minus) = (vec![0.0; o], vec![0.0; o]);
    for m in 0..k {
        probe[m] = y[m] + FD_STEP;
        f(&probe, &mut plus);
        probe[m] = y[m] - FD_STEP;
        f(&probe, &mut minus);
        probe[m] = y[m];
        for a in 0..o {
            out[a * k + m] = (plus[a] - minus[a]) / (2.0 * FD_STEP);
        }
    }
}

/// Central-difference Hessian of `f : ℝ^k → ℝ^o`, layout `[(o_index * k + m) * k + p]`.
pub fn fd_hessian(f: impl Fn(&[f64], &mut [f64]), k: usize, o: usize, y: &[f64], out: &mut [f64]) {
    let mut probe = y.to_vec();
    let mut buf = vec![0.0; o];
    let h = FD_STEP;
    let mut corner = |dm: f64, dp: f64, m: usize, p: usize, probe: &mut Vec<f64>| -> Vec<f64> {
        probe[m] += dm;
        probe[p] += dp;
        f(probe, &mut buf);
        probe[m] = y[m];
        probe[p] = y[p];
        buf.clone()
    };
    for m in 0..k {
        for p in 0..k {
            let pp = corner(h, h, m, p, &mut probe);
            let pm = corner(h, -h, m, p, &mut probe);
            let mp = corner(-h, h, m, p, &mut probe);
            let mm = corner(-h, -h, m, p, &mut probe);
            for a in 0..o {
                out[(a * k + m) * k + p] = (pp[a] - pm[a] - mp[a] + mm[a]) / (4.0 * h * h);
            }
        }
    }
}

/// A field given only by its values; derivatives come from central differences.
pub struct FiniteDifference<E> {
    l: usize,
    d: usize,
    eval: E,
    name: String,
}

impl<E: Fn(&[f64], &mut [f64]) + Send + Sync> FiniteDifference<E> {
    pub fn new(l: usize, d: usize, name: impl Into<String>, eval: E) -> Self {
        Self {
            l,
            d,
            eval,
            name: name.into(),
        }
    }
}

impl<E: Fn(&[f64], &mut [f64]) + Send + Sync> VectorField for FiniteDifference<E> {
    fn state_dim(&self) -> usize {
        self.l
    }
    fn driver_dim(&self) -> usize {
        self.d
    }
    fn eval(&self, y: &[f64], out: &mut [f64]) {
        (self.eval)(y, out)
    }
    fn jacobian(&self, y: &[f64], out: &mut [f64]) {
        fd_jacobian(&self.eval, self.l, self.l * self.d, y, out)
    }
    fn hessian(&self, y: &[f64], out: &mut [f64]) {
        fd_hessian(&self.eval, self.l, self.l * self.d, y, out)
    }
    fn derivatives(&self) -> Derivatives {
        Derivatives::FiniteDifference
    }
    fn name(&self) -> String {
        self.name.clone()
    }
}

/// Delay analogue of [`FiniteDifference`].
pub struct DelayFiniteDifference<E> {
    n: usize,
    d: usize,
    q: usize,
    eval: E,
    name: String,
}

impl<E: Fn(&[f64], &mut [f64]) + Send + Sync> DelayFiniteDifference<E> {
    pub fn new(n: usize, d: usize, q: usize, name: impl Into<String>, eval: E) -> Self {
        Self {
            n,
            d,
            q,
            eval,
            name: name.into(),
        }
    }
}

impl<E: Fn(&[f64], &mut [f64]) + Send + Sync> DelayVectorField for DelayFiniteDifference<E> {
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
        (self.eval)(w, out)
    }
    fn jacobian(&self, w: &[f64], out: &mut [f64]) {
        fd_jacobian(&self.eval, self.input_dim(), self.n * self.d, w, out)
    }
    fn hessian(&self, w: &[f64], out: &mut [f64]) {
        fd_hessian(&self.eval, self.input_dim(), self.n * self.d, w, out)
    }
    fn derivatives(&self) -> Derivatives {
        Derivatives::FiniteDifference
    }
    fn name(&self) -> String {
        self.name.clone()
    }
}

fn relative_gap(analytic: &[f64], numeric: &[f64]) -> f64 {
    let scale = numeric.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    crate::tensor::max_diff(analytic, numeric) / scale
}

/// Largest gap between the supplied and finite-difference derivatives at `probes`,
/// relative to `max(1, |finite difference|)`; returns `(jacobian gap, hessian gap)`.
pub fn check_derivatives<F: VectorField + ?Sized>(field: &F, probes: &[Vec<f64>]) -> (f64, f64) {
    let (l, d) = (field.state_dim(), field.driver_dim());
    let f = |y: &[f64], out: &mut [f64]| field.eval(y, out);
    let (mut gj, mut gh) = (0.0_f64, 0.0_f64);
    for y in probes {
        let (mut a, mut b) = (vec![0.0; l * d * l], vec![0.0; l * d * l]);
        field.jacobian(y, &mut a);
        fd_jacobian(f, l, l * d, y, &mut b);
        gj = gj.max(relative_gap(&a, &b));
        let (mut a, mut b) = (vec![0.0; l * d * l * l], vec![0.0; l * d * l * l]);
        field.hessian(y, &mut a);
        // differentiate the supplied Jacobian once more: less round-off than second differences
        let jac = |z: &[f64], out: &mut [f64]| field.jacobian(z, out);
        fd_jacobian(jac, l, l * d * l, y, &mut b);
        gh = gh.max(relative_gap(&a, &b));
    }
    (gj, gh)
}

/// Delay analogue of [`check_derivatives`].
pub fn check_delay_derivatives<F: DelayVectorField + ?Sized>(field: &F, probes: &[Vec<f64>]) -> (f64, f64) {
    let (n, d, k) = (field.state_dim(), field.driver_dim(), field.input_dim());
    let f = |w: &[f64], out: &mut [f64]| field.eval(w, out);
    let (mut gj, mut gh) = (0.0_f64, 0.0_f64);
    for w in probes {
        let (mut a, mut b) = (vec![0.0; n * d * k], vec![0.0; n * d * k]);
        field.jacobian(w, &mut a);
        fd_jacobian(f, k, n * d, w, &mut b);
        gj = gj.max(relative_gap(&a, &b));
        let (mut a, mut b) = (vec![0.0; n * d * k * k], vec![0.0; n * d * k * k]);
        field.hessian(w, &mut a);
        let jac = |z: &[f64], out: &mut [f64]| field.jacobian(z, out);
        fd_jacobian(jac, k, n * d * k, w, &mut b);
        gh = gh.max(relative_gap(&a, &b));
    }
    (gj, gh)
}
