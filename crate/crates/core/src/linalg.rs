//! Small dense complex linear-algebra helpers shared by the precoders.

use nalgebra::{Complex, DMatrix};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;

/// Matrices whose 1-norm condition number exceeds this are treated as singular.
pub const MAX_CONDITION: f64 = 1e12;

/// Circularly-symmetric complex Gaussian with the given total variance.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> C64 {
    let scale = (0.5 * variance).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(scale * re, scale * im)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// `(A + A^H) / 2`
pub fn hermitian_part(a: &CMat) -> CMat {
    (a + a.adjoint()).scale(0.5)
}

pub fn frobenius_sq(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

fn norm1(a: &CMat) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn is_hermitian(a: &CMat) -> bool {
    let scale = norm1(a).max(f64::MIN_POSITIVE);
    let n = a.nrows();
    for j in 0..n {
        for i in 0..=j {
            if (a[(i, j)] - a[(j, i)].conj()).norm() > 1e-12 * scale {
                return false;
            }
        }
    }
    true
}

/// Inverts a square matrix, failing with `SingularStage` when the 1-norm
/// condition number exceeds [`MAX_CONDITION`]. Hermitian inputs go through
/// Cholesky first; anything else (or a failed Cholesky) through LU.
pub fn invert_guarded(a: &CMat, what: &'static str) -> Result<CMat> {
    assert!(a.is_square());
    let inv = if is_hermitian(a) {
        a.clone().cholesky().map(|c| c.inverse())
    } else {
        None
    };
    let inv = match inv {
        Some(inv) => inv,
        None => a.clone().lu().try_inverse().ok_or(Error::SingularStage {
            what,
            cond: f64::INFINITY,
        })?,
    };
    let cond = norm1(a) * norm1(&inv);
    if !cond.is_finite() || cond > MAX_CONDITION {
        return Err(Error::SingularStage { what, cond });
    }
    Ok(inv)
}

/// Multiplies column `k` of `m` by `scale[k]` in place.
pub fn scale_columns(m: &mut CMat, scale: &[f64]) {
    assert_eq!(m.ncols(), scale.len());
    for (mut col, &s) in m.column_iter_mut().zip(scale) {
        col *= C64::new(s, 0.0);
    }
}

/// Adds `w^H w` to the Hermitian accumulator `acc`. Only the upper triangle is
/// computed; the lower one is mirrored.
pub fn add_gram(acc: &mut CMat, w: &CMat) {
    let k = w.ncols();
    assert_eq!(acc.shape(), (k, k));
    for j in 0..k {
        let wj = w.column(j);
        for i in 0..=j {
            let wi = w.column(i);
            let mut s = C64::new(0.0, 0.0);
            for (a, b) in wi.iter().zip(wj.iter()) {
                s += a.conj() * b;
            }
            acc[(i, j)] += s;
        }
    }
    for j in 0..k {
        for i in (j + 1)..k {
            acc[(i, j)] = acc[(j, i)].conj();
        }
    }
}

/// Stacks equally wide blocks vertically.
pub fn vstack(blocks: &[CMat]) -> CMat {
    let cols = blocks.first().map_or(0, |b| b.ncols());
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = CMat::zeros(rows, cols);
    let mut r = 0;
    for b in blocks {
        assert_eq!(b.ncols(), cols);
        out.view_mut((r, 0), b.shape()).copy_from(b);
        r += b.nrows();
    }
    out
}

/// Splits `m` into consecutive row blocks of `block_rows` rows.
pub fn split_rows(m: &CMat, block_rows: usize) -> Vec<CMat> {
    assert_eq!(m.nrows() % block_rows, 0);
    (0..m.nrows() / block_rows)
        .map(|l| m.rows(l * block_rows, block_rows).into_owned())
        .collect()
}
