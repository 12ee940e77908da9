//! Flat row-major tensor helpers for `d`, `d×d` and `d×d×d` slots.
//!
//! A `d×d` tensor `a` stores `a^{ij}` at `i*d + j`; a `d×d×d` tensor stores
//! `v^{ijk}` at `(i*d + j)*d + k`.

/// `½ a ⊗ b`, the area of one linear segment (with `a = b`) or of two aligned segments.
#[inline]
pub fn cell_area(a: &[f64], b: &[f64], out: &mut [f64]) {
    let d = a.len();
    for i in 0..d {
        for j in 0..d {
            out[i * d + j] = 0.5 * a[i] * b[j];
        }
    }
}

/// `(1/6) a ⊗ b ⊗ c`, the volume of three aligned linear segments.
#[inline]
pub fn cell_volume(a: &[f64], b: &[f64], c: &[f64], out: &mut [f64]) {
    let d = a.len();
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                out[(i * d + j) * d + k] = a[i] * b[j] * c[k] / 6.0;
            }
        }
    }
}

/// `out += a ⊗ b` for vectors.
#[inline]
pub fn add_outer(out: &mut [f64], a: &[f64], b: &[f64]) {
    let d = b.len();
    for (i, ai) in a.iter().enumerate() {
        for (j, bj) in b.iter().enumerate() {
            out[i * d + j] += ai * bj;
        }
    }
}

/// `out^{ijk} += m^{ij} b^k` for a `d×d` tensor `m`.
#[inline]
pub fn add_matrix_vector(out: &mut [f64], m: &[f64], b: &[f64]) {
    let d = b.len();
    for (ij, mij) in m.iter().enumerate() {
        for (k, bk) in b.iter().enumerate() {
            out[ij * d + k] += mij * bk;
        }
    }
}

/// `out^{ijk} += a^i m^{jk}` for a `d×d` tensor `m`.
#[inline]
pub fn add_vector_matrix(out: &mut [f64], a: &[f64], m: &[f64]) {
    let dd = m.len();
    for (i, ai) in a.iter().enumerate() {
        for (jk, mjk) in m.iter().enumerate() {
            out[i * dd + jk] += ai * mjk;
        }
    }
}

/// Transpose of a square `d×d` tensor.
pub fn transpose(m: &[f64], d: usize) -> Vec<f64> {
    let mut t = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            t[j * d + i] = m[i * d + j];
        }
    }
    t
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Largest entrywise `|a - b|`.
pub fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
}
