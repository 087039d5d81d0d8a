//! Small dense linear algebra: tangent and horizontal bases of the
//! configuration manifold, characteristic polynomials, quadratic roots.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::geom::{Configuration, TangentVector};

/// Orthonormal basis of the null space of `rows` (each of length `dim`).
pub fn null_space(rows: &[Vec<f64>], dim: usize) -> Vec<Vec<f64>> {
    let m = DMatrix::from_fn(dim, dim, |i, j| rows.get(i).map_or(0.0, |r| r[j]));
    let svd = m.svd(false, true);
    let vt = svd.v_t.expect("requested right singular vectors");
    let top = svd.singular_values.max().max(f64::MIN_POSITIVE);
    let mut out = Vec::new();
    for (k, s) in svd.singular_values.iter().enumerate() {
        if *s <= 1e-10 * top {
            out.push(vt.row(k).iter().cloned().collect());
        }
    }
    out
}

fn constraint_rows(rho: &Configuration, vertical: bool) -> Vec<Vec<f64>> {
    let n = rho.len();
    let dim = 3 * n;
    let mut rows = Vec::new();
    for (i, p) in rho.edges().iter().enumerate() {
        let mut row = vec![0.0; dim];
        for k in 0..3 {
            row[3 * i + k] = p[k];
        }
        rows.push(row);
    }
    for k in 0..3 {
        let mut row = vec![0.0; dim];
        for i in 0..n {
            row[3 * i + k] = 1.0;
        }
        rows.push(row);
    }
    if vertical {
        for v in crate::geom::VerticalFrame::at(rho).v {
            rows.push(flatten(&v));
        }
    }
    rows
}

pub fn flatten(v: &TangentVector) -> Vec<f64> {
    v.v.iter().flat_map(|x| [x.x, x.y, x.z]).collect()
}

pub fn unflatten(x: &[f64]) -> TangentVector {
    TangentVector::new(
        x.chunks(3)
            .map(|c| crate::geom::Vec3::new(c[0], c[1], c[2]))
            .collect(),
    )
}

/// Orthonormal basis of the tangent space of the closed-polygon manifold
/// (dimension 2n-3 at non-collinear configurations).
pub fn tangent_basis(rho: &Configuration) -> Vec<TangentVector> {
    null_space(&constraint_rows(rho, false), 3 * rho.len())
        .iter()
        .map(|x| unflatten(x))
        .collect()
}

/// Orthonormal basis of the tangent vectors orthogonal to the SO(3) orbit,
/// a model of the tangent space of the polygon space (dimension 2n-6).
pub fn horizontal_basis(rho: &Configuration) -> Vec<TangentVector> {
    null_space(&constraint_rows(rho, true), 3 * rho.len())
        .iter()
        .map(|x| unflatten(x))
        .collect()
}

/// Coefficients of det(X I - M), highest degree first (leading 1), by the
/// Faddeev-LeVerrier recursion.
pub fn char_poly(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    let mut coeffs = vec![1.0];
    let mut acc = DMatrix::<f64>::zeros(n, n);
    let id = DMatrix::<f64>::identity(n, n);
    for k in 1..=n {
        acc = m * &acc + &id * coeffs[k - 1];
        let c = -(m * &acc).trace() / k as f64;
        coeffs.push(c);
    }
    coeffs
}

/// Roots of y^2 + p y + q, real part ascending for real pairs.
pub fn quadratic_roots(p: f64, q: f64) -> [Complex64; 2] {
    let disc = p * p - 4.0 * q;
    if disc >= 0.0 {
        let s = disc.sqrt();
        let big = -0.5 * (p + p.signum() * s);
        if big == 0.0 {
            return [Complex64::new(0.0, 0.0); 2];
        }
        let (a, b) = (big, q / big);
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        [Complex64::new(lo, 0.0), Complex64::new(hi, 0.0)]
    } else {
        let re = -0.5 * p;
        let im = 0.5 * (-disc).sqrt();
        [Complex64::new(re, -im), Complex64::new(re, im)]
    }
}
