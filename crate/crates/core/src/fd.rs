//! Finite differences along Newton-retracted curves on the constraint
//! manifold. These never touch the analytic vector fields or matrices, so
//! they serve as an independent check of them.

use nalgebra::DMatrix;

use crate::error::Result;
use crate::geom::{Configuration, TangentVector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdOptions {
    /// Base step as a fraction of the shortest edge.
    pub rel_step: f64,
    /// Number of Richardson extrapolation levels (step halvings).
    pub levels: usize,
}

impl Default for FdOptions {
    fn default() -> Self {
        Self {
            rel_step: 0.03,
            levels: 3,
        }
    }
}

fn shortest(rho: &Configuration) -> f64 {
    rho.lengths().iter().cloned().fold(f64::INFINITY, f64::min)
}

fn raw_point(rho: &Configuration, terms: &[(&TangentVector, f64)]) -> Vec<crate::geom::Vec3> {
    let mut raw = rho.edges().to_vec();
    for (v, s) in terms {
        for (p, d) in raw.iter_mut().zip(&v.v) {
            *p += d * *s;
        }
    }
    raw
}

/// Central first derivative of `f` along the retracted curve through `rho`
/// with initial velocity `dir`, at absolute step `h`.
pub fn directional_derivative<F>(f: &F, rho: &Configuration, dir: &TangentVector, h: f64) -> Result<f64>
where
    F: Fn(&Configuration) -> f64,
{
    let plus = rho.retract(&raw_point(rho, &[(dir, h)]))?;
    let minus = rho.retract(&raw_point(rho, &[(dir, -h)]))?;
    Ok((f(&plus) - f(&minus)) / (2.0 * h))
}

fn richardson(mut t: Vec<f64>) -> f64 {
    // t[m] uses step h/2^m with error series in h^2.
    let mut factor = 4.0;
    while t.len() > 1 {
        t = t
            .windows(2)
            .map(|w| (factor * w[1] - w[0]) / (factor - 1.0))
            .collect();
        factor *= 4.0;
    }
    t[0]
}

/// Hessian of `f` in the chart x -> retract(rho + sum x_a dirs_a), by the
/// polarization stencil with Richardson extrapolation. At a critical point
/// of `f` this is the intrinsic Hessian expressed in the basis `dirs`.
pub fn hessian<F>(f: &F, rho: &Configuration, dirs: &[TangentVector], opts: FdOptions) -> Result<DMatrix<f64>>
where
    F: Fn(&Configuration) -> f64,
{
    let k = dirs.len();
    let base = opts.rel_step * shortest(rho);
    let steps: Vec<f64> = dirs.iter().map(|d| base / d.norm().max(f64::MIN_POSITIVE)).collect();
    let f0 = f(rho);
    let mut out = DMatrix::zeros(k, k);
    let eval = |terms: &[(&TangentVector, f64)]| -> Result<f64> { Ok(f(&rho.retract(&raw_point(rho, terms))?)) };
    for a in 0..k {
        for b in a..k {
            let mut levels = Vec::with_capacity(opts.levels + 1);
            for m in 0..=opts.levels {
                let scale = 0.5f64.powi(m as i32);
                let (ha, hb) = (steps[a] * scale, steps[b] * scale);
                let v = if a == b {
                    let pp = eval(&[(&dirs[a], 2.0 * ha)])?;
                    let mm = eval(&[(&dirs[a], -2.0 * ha)])?;
                    (pp - 2.0 * f0 + mm) / (4.0 * ha * ha)
                } else {
                    let pp = eval(&[(&dirs[a], ha), (&dirs[b], hb)])?;
                    let pm = eval(&[(&dirs[a], ha), (&dirs[b], -hb)])?;
                    let mp = eval(&[(&dirs[a], -ha), (&dirs[b], hb)])?;
                    let mm = eval(&[(&dirs[a], -ha), (&dirs[b], -hb)])?;
                    (pp - pm - mp + mm) / (4.0 * ha * hb)
                };
                levels.push(v);
            }
            let v = richardson(levels);
            out[(a, b)] = v;
            out[(b, a)] = v;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn richardson_removes_quadratic_error() {
        // g(h) = 1 + h^2 + h^4 sampled at h, h/2, h/4.
        let t: Vec<f64> = [1.0, 0.5, 0.25].iter().map(|h: &f64| 1.0 + h * h + h.powi(4)).collect();
        assert!((richardson(t) - 1.0).abs() < 1e-14);
    }
}
