//! The transition point P and the times t- < t+ at which it passes from
//! elliptic-elliptic to focus-focus and back.

use nalgebra::{DMatrix, Matrix4};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fd::{self, FdOptions};
use crate::geom::{build_transition_point, symplectic_form, Configuration, TangentVector, TheoremHypotheses};
use crate::linalg::{char_poly, quadratic_roots};
use crate::singularities::{classify_rank0_with, default_probes, ser_roots, SingularityType, Thresholds};

/// Hessians of ell_45^2/2, ell_34^2/2, ell_12^2/2 and the inverse of the
/// symplectic matrix at P, in the basis W_1..W_4 of [`transition_basis`].
#[derive(Debug, Clone, PartialEq)]
pub struct PMatrices {
    pub hess_h0: Matrix4<f64>,
    pub hess_h1: Matrix4<f64>,
    pub hess_j: Matrix4<f64>,
    pub omega_inv: Matrix4<f64>,
}

impl PMatrices {
    /// t Hess(H_1) + (1 - t) Hess(H_0).
    pub fn hess_h(&self, t: f64) -> Matrix4<f64> {
        self.hess_h1 * t + self.hess_h0 * (1.0 - t)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        [
            (self.hess_h0 - other.hess_h0).abs().max(),
            (self.hess_h1 - other.hess_h1).abs().max(),
            (self.hess_j - other.hess_j).abs().max(),
            (self.omega_inv - other.omega_inv).abs().max(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Closed-form matrices at P.
pub fn analytic_matrices(h: &TheoremHypotheses) -> PMatrices {
    let [_, _, r3, r4, r5] = h.r();
    let j = h.j;
    #[rustfmt::skip]
    let hess_h0 = Matrix4::new(
        0.0, 0.0, 0.0, 0.0,
        0.0, r5 / r4, 0.0, 0.0,
        0.0, 0.0, r5 / r4, 1.0 - r5 / r4,
        0.0, 0.0, 1.0 - r5 / r4, r5 / r4 + r4 / r5 - 2.0,
    );
    #[rustfmt::skip]
    let hess_h1 = Matrix4::new(
        -r4 / r3, 1.0, 0.0, 0.0,
        1.0, -r3 / r4, 0.0, 0.0,
        0.0, 0.0, -2.0 - r4 / r3 - r3 / r4, 1.0 + r3 / r4,
        0.0, 0.0, 1.0 + r3 / r4, -r3 / r4,
    );
    #[rustfmt::skip]
    let hess_j = Matrix4::new(
        1.0 - j / r3, 1.0, 0.0, 0.0,
        1.0, 1.0 - j / r4, 0.0, 0.0,
        0.0, 0.0, -j * (1.0 / r3 + 1.0 / r4), j / r4,
        0.0, 0.0, j / r4, j * (1.0 / r5 - 1.0 / r4),
    );
    #[rustfmt::skip]
    let omega_inv = Matrix4::new(
        0.0, 0.0, -r3, -r3,
        0.0, 0.0, 0.0, -r4,
        r3, 0.0, 0.0, 0.0,
        r3, r4, 0.0, 0.0,
    );
    PMatrices {
        hess_h0,
        hess_h1,
        hess_j,
        omega_inv,
    }
}

/// W_1 = dz_1 - dz_3, W_2 = dz_1 - dz_4, W_3 = dy_3 - dy_4, W_4 = dy_4 - dy_5,
/// tangent at P and transverse to the rotation orbit.
pub fn transition_basis() -> [TangentVector; 4] {
    let mut w = [(); 4].map(|_| TangentVector::zeros(5));
    w[0].v[0].z = 1.0;
    w[0].v[2].z = -1.0;
    w[1].v[0].z = 1.0;
    w[1].v[3].z = -1.0;
    w[2].v[2].y = 1.0;
    w[2].v[3].y = -1.0;
    w[3].v[3].y = 1.0;
    w[3].v[4].y = -1.0;
    w
}

fn to_matrix4(m: &DMatrix<f64>) -> Matrix4<f64> {
    Matrix4::from_fn(|a, b| m[(a, b)])
}

/// Matrix of the symplectic form at P in the W basis, entry (a, b) =
/// omega(W_b, W_a).
pub fn numeric_omega(h: &TheoremHypotheses) -> Result<Matrix4<f64>> {
    let p = build_transition_point(h)?;
    let w = transition_basis();
    Ok(Matrix4::from_fn(|a, b| symplectic_form(&p, &w[b], &w[a])))
}

/// The same matrices by finite differences along retracted curves and by
/// direct evaluation of the symplectic form.
pub fn numeric_matrices(h: &TheoremHypotheses, opts: FdOptions) -> Result<PMatrices> {
    let p = build_transition_point(h)?;
    let w = transition_basis();
    let half_sq = |a: usize, b: usize| move |q: &Configuration| 0.5 * (q.edge(a) + q.edge(b)).norm_squared();
    let hess = |f: &dyn Fn(&Configuration) -> f64| -> Result<Matrix4<f64>> {
        fd::hessian(&f, &p, &w, opts)
            .map(|m| to_matrix4(&m))
            .map_err(|e| Error::NumericalFailure(e.to_string()))
    };
    let hess_h0 = hess(&half_sq(3, 4))?;
    let hess_h1 = hess(&half_sq(2, 3))?;
    let hess_j = hess(&half_sq(0, 1))?;
    let omega_inv = numeric_omega(h)?
        .try_inverse()
        .ok_or_else(|| Error::NumericalFailure("symplectic matrix at P is singular".into()))?;
    Ok(PMatrices {
        hess_h0,
        hess_h1,
        hess_j,
        omega_inv,
    })
}

/// Closed-form coefficients (A(t), B(t)) of chi(X) = X^2 + A X + B.
pub fn chi_coefficients(h: &TheoremHypotheses, t: f64) -> (f64, f64) {
    let q = QuadraticData::new(h);
    (q.a_at(t), q.b_at(t))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChiNumeric {
    pub a: f64,
    pub b: f64,
    /// Largest relative size of the odd characteristic coefficients.
    pub odd_residual: f64,
}

/// Quadratic part of the characteristic polynomial of
/// Omega^{-1}(nu Hess J + mu Hess H_t).
pub fn chi_from_matrices(m: &PMatrices, t: f64, nu: f64, mu: f64) -> ChiNumeric {
    let a = m.omega_inv * (m.hess_j * nu + m.hess_h(t) * mu);
    let cp = char_poly(&DMatrix::from_fn(4, 4, |i, k| a[(i, k)]));
    let unit = cp[2].abs().max(cp[4].abs().sqrt()).max(f64::MIN_POSITIVE).sqrt();
    ChiNumeric {
        a: cp[2],
        b: cp[4],
        odd_residual: (cp[1].abs() / unit).max(cp[3].abs() / unit.powi(3)),
    }
}

/// Polynomial data of the transition: A(t), B(t) = j^2 g(t)^2 and the
/// quadratic factor f(t) = a t^2 + b t + c of A^2 - 4B.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadraticData {
    /// A(t) coefficients, highest degree first.
    pub a_coeffs: [f64; 3],
    /// g(t) coefficients, highest degree first.
    pub g_coeffs: [f64; 3],
    pub j: f64,
    /// (a, b, c).
    pub f_coeffs: [f64; 3],
    /// Linear prefactor (r3 + r5) t + 2 r3 + 3 r4 - 3 r5, highest first.
    pub l_coeffs: [f64; 2],
    pub delta: f64,
    pub t_minus: f64,
    pub t_plus: f64,
}

fn horner(c: &[f64], t: f64) -> f64 {
    c.iter().fold(0.0, |acc, x| acc * t + x)
}

impl QuadraticData {
    pub fn new(h: &TheoremHypotheses) -> Self {
        let [_, _, r3, r4, r5] = h.r();
        let j = h.j;
        let a_coeffs = [
            (r3 + r5).powi(2) + 2.0 * r4 * j,
            2.0 * (r3 * j + (r5 - r4) * (r4 - 2.0 * r5)),
            2.0 * r3 * (r3 + 3.0 * r4 - 3.0 * r5) + 5.0 * (r4 - r5).powi(2),
        ];
        let g_coeffs = [-r4, r3 + r4 + r5, r3 + 2.0 * r4 - 2.0 * r5];
        let half_b = r3 * r4 + r3 * r5 + 2.0 * r4 * r4 - 3.0 * r4 * r5 + r5 * r5;
        let fa = (r3 + r5).powi(2) + 4.0 * r4 * j;
        let f_coeffs = [fa, -2.0 * half_b, (r4 - r5).powi(2)];
        let delta = 16.0 * r3 * r4 * r5 * j;
        let root = 2.0 * (r3 * r4 * r5 * j).sqrt();
        Self {
            a_coeffs,
            g_coeffs,
            j,
            f_coeffs,
            l_coeffs: [r3 + r5, 2.0 * r3 + 3.0 * r4 - 3.0 * r5],
            delta,
            t_minus: (half_b - root) / fa,
            t_plus: (half_b + root) / fa,
        }
    }

    pub fn a_at(&self, t: f64) -> f64 {
        horner(&self.a_coeffs, t)
    }

    pub fn b_at(&self, t: f64) -> f64 {
        self.j * self.j * horner(&self.g_coeffs, t).powi(2)
    }

    pub fn disc_at(&self, t: f64) -> f64 {
        self.a_at(t).powi(2) - 4.0 * self.b_at(t)
    }

    pub fn f_at(&self, t: f64) -> f64 {
        horner(&self.f_coeffs, t)
    }

    /// Right-hand side of the factorization of A^2 - 4B.
    pub fn factored_at(&self, t: f64) -> f64 {
        horner(&self.l_coeffs, t).powi(2) * self.f_at(t)
    }

    /// Discriminant b^2 - 4ac computed from the coefficients.
    pub fn delta_from_coeffs(&self) -> f64 {
        let [a, b, c] = self.f_coeffs;
        b * b - 4.0 * a * c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FactorizationReport {
    pub f_coeffs: [f64; 3],
    pub samples: usize,
    /// max |(A^2 - 4B) - l^2 f| / max(A^2, 4B) over the samples.
    pub max_relative_residual: f64,
}

/// Checks A^2 - 4B = l(t)^2 f(t) by direct evaluation at equispaced t.
pub fn factored_f(h: &TheoremHypotheses, samples: usize) -> FactorizationReport {
    let q = QuadraticData::new(h);
    let n = samples.max(2);
    let worst = (0..n)
        .map(|k| {
            let t = k as f64 / (n - 1) as f64;
            let denom = q.a_at(t).powi(2).max(4.0 * q.b_at(t));
            (q.disc_at(t) - q.factored_at(t)).abs() / denom
        })
        .fold(0.0, f64::max);
    FactorizationReport {
        f_coeffs: q.f_coeffs,
        samples: n,
        max_relative_residual: worst,
    }
}

/// Closed-form transition times, checked as roots of f inside (0, 1).
pub fn transition_times(h: &TheoremHypotheses) -> Result<(f64, f64)> {
    let q = QuadraticData::new(h);
    let big = q.f_coeffs.iter().map(|x| x.abs()).fold(0.0, f64::max);
    for t in [q.t_minus, q.t_plus] {
        let r = q.f_at(t).abs();
        if r > 1e-10 * big {
            return Err(Error::NumericalFailure(format!("f({t}) = {r:e}")));
        }
    }
    if !(0.0 < q.t_minus && q.t_minus < q.t_plus && q.t_plus < 1.0) {
        return Err(Error::HypothesisViolation(format!(
            "transition times ({}, {}) not ordered in (0, 1)",
            q.t_minus, q.t_plus
        )));
    }
    Ok((q.t_minus, q.t_plus))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub t: f64,
    /// Formula channel: sign of A^2 - 4B, Degenerate inside the window.
    #[serde(rename = "type")]
    pub kind: SingularityType,
    /// Eigen channel: classify_rank0 at P; None inside the window.
    pub eigen_kind: Option<SingularityType>,
    pub a: f64,
    pub b: f64,
    pub disc: f64,
    #[serde(serialize_with = "ser_roots")]
    pub roots: [Complex64; 2],
}

impl SweepRow {
    pub fn channels_agree(&self) -> bool {
        self.eigen_kind.is_none_or(|k| k == self.kind)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    /// Half-width of the window around t- and t+ where the formula channel
    /// reports Degenerate and the eigen channel is suppressed.
    pub window: f64,
    pub thresholds: Thresholds,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            window: 1e-6,
            thresholds: Thresholds::default(),
        }
    }
}

fn formula_type(a: f64, b: f64, disc: f64) -> SingularityType {
    if disc < 0.0 {
        SingularityType::FocusFocus
    } else if a > 0.0 && b > 0.0 {
        SingularityType::EllipticElliptic
    } else if b < 0.0 {
        SingularityType::EllipticHyperbolic
    } else {
        SingularityType::HyperbolicHyperbolic
    }
}

/// Equispaced values start, ..., stop.
pub fn linspace(start: f64, stop: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..count)
            .map(|k| {
                if k + 1 == count {
                    stop
                } else {
                    start + (stop - start) * k as f64 / (count - 1) as f64
                }
            })
            .collect(),
    }
}

/// Classifies P at `num_t` equispaced t in [0, 1] by both channels.
pub fn sweep(h: &TheoremHypotheses, num_t: usize) -> Result<Vec<SweepRow>> {
    if num_t < 3 {
        return Err(Error::ContractViolation(format!("num_t = {num_t} < 3")));
    }
    sweep_at(h, &linspace(0.0, 1.0, num_t), &SweepOptions::default())
}

/// Sweep at the given t values; rows are returned in input order.
pub fn sweep_at(h: &TheoremHypotheses, ts: &[f64], opts: &SweepOptions) -> Result<Vec<SweepRow>> {
    if let Some(t) = ts.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        return Err(Error::ContractViolation(format!("t = {t} outside [0, 1]")));
    }
    let q = QuadraticData::new(h);
    let p = build_transition_point(h)?;
    let probes = default_probes();
    let row = |t: f64| -> Result<SweepRow> {
        let (a, b) = (q.a_at(t), q.b_at(t));
        let disc = q.disc_at(t);
        let near = (t - q.t_minus).abs() < opts.window || (t - q.t_plus).abs() < opts.window;
        let (kind, eigen_kind) = if near {
            (SingularityType::Degenerate, None)
        } else {
            let r = classify_rank0_with(&p, t, &probes, &opts.thresholds)?;
            (formula_type(a, b, disc), Some(r.kind))
        };
        Ok(SweepRow {
            t,
            kind,
            eigen_kind,
            a,
            b,
            disc,
            roots: quadratic_roots(a, b),
        })
    };
    crate::parallel::install(|| ts.par_iter().map(|t| row(*t)).collect())
}

/// Number of adjacent row pairs whose types differ, ignoring Degenerate rows.
pub fn count_type_changes(kinds: &[SingularityType]) -> usize {
    let k: Vec<_> = kinds.iter().filter(|k| **k != SingularityType::Degenerate).collect();
    k.windows(2).filter(|w| w[0] != w[1]).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::random_hypotheses;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn reference() -> TheoremHypotheses {
        TheoremHypotheses::from_slice(&[3.0, 1.0, 4.0, 2.0, 3.0]).unwrap()
    }

    #[test]
    fn analytic_reference_entries() {
        let m = analytic_matrices(&reference());
        #[rustfmt::skip]
        let j = Matrix4::new(
            0.25, 1.0, 0.0, 0.0,
            1.0, -0.5, 0.0, 0.0,
            0.0, 0.0, -2.25, 1.5,
            0.0, 0.0, 1.5, -0.5,
        );
        assert_abs_diff_eq!(m.hess_j, j, epsilon = 1e-15);
        #[rustfmt::skip]
        let w = Matrix4::new(
            0.0, 0.0, -4.0, -4.0,
            0.0, 0.0, 0.0, -2.0,
            4.0, 0.0, 0.0, 0.0,
            4.0, 2.0, 0.0, 0.0,
        );
        assert_abs_diff_eq!(m.omega_inv, w, epsilon = 1e-15);
        assert_eq!(m.hess_h0[(1, 1)], 1.5);
        assert_eq!(m.hess_h1[(2, 2)], -4.5);
    }

    #[test]
    fn numeric_matches_analytic() {
        let h = reference();
        let a = analytic_matrices(&h);
        let n = numeric_matrices(&h, FdOptions::default()).unwrap();
        assert!(a.max_abs_diff(&n) < 1e-5, "{}", a.max_abs_diff(&n));
        let om = numeric_omega(&h).unwrap();
        assert!((om + om.transpose()).abs().max() < 1e-10);
        assert!((n.hess_j - n.hess_j.transpose()).abs().max() < 1e-7);
    }

    #[test]
    fn reference_closed_forms() {
        let h = reference();
        let q = QuadraticData::new(&h);
        assert_eq!(chi_coefficients(&h, 0.0), (13.0, 36.0));
        assert_eq!(q.disc_at(0.0), 25.0);
        assert_eq!(q.factored_at(0.0), 25.0);
        assert_eq!(q.f_coeffs, [73.0, -38.0, 1.0]);
        assert_eq!(q.delta, 1152.0);
        assert_eq!(q.delta_from_coeffs(), 1152.0);
        let (tm, tp) = transition_times(&h).unwrap();
        let s = 2f64.sqrt();
        assert!((tm - (19.0 - 12.0 * s) / 73.0).abs() <= 1e-12 * tm);
        assert!((tp - (19.0 + 12.0 * s) / 73.0).abs() <= 1e-12 * tp);
    }

    #[test]
    fn numeric_chi_reproduces_closed_form() {
        let h = reference();
        let m = numeric_matrices(&h, FdOptions::default()).unwrap();
        for t in linspace(0.0, 1.0, 21) {
            let c = chi_from_matrices(&m, t, 1.0, 1.0);
            let (a, b) = chi_coefficients(&h, t);
            assert!((c.a - a).abs() <= 1e-7 * a, "t={t}");
            assert!((c.b - b).abs() <= 1e-7 * b, "t={t}");
            assert!(c.odd_residual < 1e-8);
        }
    }

    #[test]
    fn analytic_chi_is_exact() {
        let h = reference();
        let m = analytic_matrices(&h);
        for t in [0.0, 0.3, 1.0] {
            let c = chi_from_matrices(&m, t, 1.0, 1.0);
            let (a, b) = chi_coefficients(&h, t);
            assert!((c.a - a).abs() < 1e-12 * a && (c.b - b).abs() < 1e-12 * b);
        }
    }

    #[test]
    fn reference_sweep() {
        let h = reference();
        let rows = sweep(&h, 101).unwrap();
        assert_eq!(rows[0].kind, SingularityType::EllipticElliptic);
        assert_eq!(rows[25].kind, SingularityType::FocusFocus);
        assert_eq!(rows[100].kind, SingularityType::EllipticElliptic);
        let kinds: Vec<_> = rows.iter().map(|r| r.kind).collect();
        assert_eq!(count_type_changes(&kinds), 2);
        assert!(rows.iter().all(|r| r.channels_agree()));
    }

    #[test]
    fn window_suppresses_eigen_channel() {
        let h = reference();
        let (tm, tp) = transition_times(&h).unwrap();
        let rows = sweep_at(&h, &[tm, tp, 0.5 * (tm + tp)], &SweepOptions::default()).unwrap();
        assert_eq!(rows[0].kind, SingularityType::Degenerate);
        assert_eq!(rows[1].kind, SingularityType::Degenerate);
        assert!(rows[0].eigen_kind.is_none());
        assert_eq!(rows[2].eigen_kind, Some(SingularityType::FocusFocus));
    }

    #[test]
    fn small_sweeps_are_rejected() {
        assert!(sweep(&reference(), 2).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn closed_form_structure(seed in any::<u64>()) {
            let h = random_hypotheses(&mut ChaCha8Rng::seed_from_u64(seed));
            let q = QuadraticData::new(&h);
            let [_, _, r3, r4, r5] = h.r();
            prop_assert!((q.delta_from_coeffs() - 16.0 * r3 * r4 * r5 * h.j).abs() <= 1e-9 * q.delta);
            let rep = factored_f(&h, 101);
            prop_assert!(rep.max_relative_residual <= 1e-9);
            let (tm, tp) = transition_times(&h).unwrap();
            prop_assert!(0.0 < tm && tm < tp && tp < 1.0);
            for t in linspace(0.0, 1.0, 41) {
                prop_assert!(q.a_at(t) > 0.0);
                prop_assert!(q.b_at(t) > 0.0);
            }
            let kinds: Vec<_> = linspace(0.0, 1.0, 401)
                .iter()
                .map(|t| formula_type(q.a_at(*t), q.b_at(*t), q.disc_at(*t)))
                .collect();
            prop_assert_eq!(count_type_changes(&kinds), 2);
        }

        #[test]
        fn transition_times_are_scale_invariant(seed in any::<u64>()) {
            let h = random_hypotheses(&mut ChaCha8Rng::seed_from_u64(seed));
            let (tm, tp) = transition_times(&h).unwrap();
            for lambda in [0.1, 7.0] {
                let (sm, sp) = transition_times(&h.scaled(lambda).unwrap()).unwrap();
                prop_assert!((sm - tm).abs() <= 1e-12 && (sp - tp).abs() <= 1e-12);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(8))]

        #[test]
        fn numeric_matrices_match_for_random_tuples(seed in any::<u64>()) {
            let h = random_hypotheses(&mut ChaCha8Rng::seed_from_u64(seed));
            let a = analytic_matrices(&h);
            let n = numeric_matrices(&h, FdOptions::default()).unwrap();
            prop_assert!(a.max_abs_diff(&n) < 1e-5);
            for t in [0.0, 0.5, 1.0] {
                let c = chi_from_matrices(&n, t, 1.0, 1.0);
                let (ca, cb) = chi_coefficients(&h, t);
                prop_assert!((c.a - ca).abs() <= 1e-7 * ca);
                prop_assert!((c.b - cb).abs() <= 1e-7 * cb);
            }
        }
    }
}
