//! Reduction by the bending circle action of ell_12: the two-sphere lemma,
//! the identification of reduced pentagon spaces with 4-gon spaces, and the
//! reduced Hessian at rank-1 singular points.
//!
//! Hessians here are those of the half-normalised Hamiltonian H_t / 2.

use nalgebra::{DMatrix, Matrix2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fd::{self, FdOptions};
use crate::geom::{gauge_fix, random_rotation, Configuration, TangentVector, Vec3};
use crate::linalg::horizontal_basis;
use crate::singularities::StarSolution;

/// Image of a pentagon in the reduced space at level c = ell_12: the gauge
/// fixed 4-gon with edges (rho_1 + rho_2, rho_3, rho_4, rho_5).
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedPoint {
    pub c: f64,
    pub quad: Configuration,
}

pub fn reduce_point(rho: &Configuration) -> Result<ReducedPoint> {
    if rho.len() != 5 {
        return Err(Error::ContractViolation(format!(
            "reduction needs 5 edges, got {}",
            rho.len()
        )));
    }
    let e = rho.edges();
    let first = e[0] + e[1];
    let c = first.norm();
    let total: f64 = rho.lengths().iter().sum();
    if c < 1e-8 * total {
        return Err(Error::VanishingMoment(c));
    }
    let r = rho.lengths();
    let quad = Configuration::derived(&[c, r[2], r[3], r[4]], vec![first, e[2], e[3], e[4]])?;
    Ok(ReducedPoint {
        c,
        quad: gauge_fix(&quad),
    })
}

/// Lifts a reduced 4-gon back to a pentagon, splitting the first edge into
/// edges of lengths r1 and r2; `angle` moves along the circle orbit.
pub fn lift_reduced(q: &ReducedPoint, r1: f64, r2: f64, angle: f64) -> Result<Configuration> {
    let e = q.quad.edges();
    let d = e[0];
    let c = d.norm();
    if c > r1 + r2 + 1e-12 * (r1 + r2) || c < (r1 - r2).abs() - 1e-12 * (r1 + r2) {
        return Err(Error::LevelOutOfRange(c));
    }
    let u = d / c;
    let x = (c * c + r1 * r1 - r2 * r2) / (2.0 * c);
    let y = (r1 * r1 - x * x).max(0.0).sqrt();
    let p = {
        let a = if u.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
        (a - u * u.dot(&a)).normalize()
    };
    let w = u.cross(&p);
    let rho1 = u * x + (p * angle.cos() + w * angle.sin()) * y;
    let rho2 = d - rho1;
    let r = q.quad.lengths();
    Configuration::derived(&[r1, r2, r[1], r[2], r[3]], vec![rho1, rho2, e[1], e[2], e[3]])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TwoSphereBranch {
    /// Regular level: quotient by the circle action.
    Interior,
    /// c = r1 + r2, every point fixed.
    UpperBoundary,
    /// c = |r1 - r2|, every point fixed.
    LowerBoundary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwoSphereReport {
    pub branch: TwoSphereBranch,
    pub samples: usize,
    /// Largest |pullback of the reduced form - restricted product form|.
    pub max_discrepancy: f64,
    /// Largest deviation of either side from (rho_1 + rho_2) . (e_i x e_j)
    /// on the interior branch, or of the section from the level set on the
    /// boundary branches.
    pub max_closed_form_discrepancy: f64,
}

fn area_form(u: &Vec3, v: &Vec3, w: &Vec3, r: f64) -> f64 {
    u.dot(&v.cross(w)) / (r * r)
}

fn random_unit<R: Rng>(rng: &mut R) -> Vec3 {
    random_rotation(rng) * Vec3::z()
}

/// Compares the reduced symplectic form of S^2_c with the product form on
/// the level set |rho_1 + rho_2| = c in S^2_{r1} x S^2_{r2}. Boundary
/// levels use the section rho -> (s1 r1/c rho, s2 r2/c rho).
pub fn two_sphere_reduction_check(
    r1: f64,
    r2: f64,
    c: f64,
    samples: usize,
    seed: u64,
) -> Result<TwoSphereReport> {
    if !(r1 > 0.0 && r2 > 0.0 && r1.is_finite() && r2.is_finite()) {
        return Err(Error::InvalidLengths(format!("radii {r1}, {r2}")));
    }
    let tol = 1e-12 * (r1 + r2);
    let (lo, hi) = ((r1 - r2).abs(), r1 + r2);
    if !(c >= lo - tol && c <= hi + tol) || c <= 0.0 {
        return Err(Error::LevelOutOfRange(c));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let branch = if (c - hi).abs() <= tol {
        TwoSphereBranch::UpperBoundary
    } else if (c - lo).abs() <= tol {
        TwoSphereBranch::LowerBoundary
    } else {
        TwoSphereBranch::Interior
    };
    let mut worst = 0.0f64;
    let mut worst_closed = 0.0f64;
    let basis = [Vec3::x(), Vec3::y(), Vec3::z()];
    for _ in 0..samples {
        match branch {
            TwoSphereBranch::Interior => {
                let x = (c * c + r1 * r1 - r2 * r2) / (2.0 * c);
                let y = (r1 * r1 - x * x).max(0.0).sqrt();
                let rot = random_rotation(&mut rng);
                let rho1 = rot * Vec3::new(x, y, 0.0);
                let rho2 = rot * Vec3::new(c - x, -y, 0.0);
                let s = rho1 + rho2;
                // Tangent vectors of the level set: infinitesimal rotations
                // of the pair, plus random combinations of them.
                let coeffs: Vec<Vec3> = (0..2)
                    .map(|_| Vec3::from_fn(|_, _| rng.random_range(-1.0..1.0)))
                    .collect();
                let mut gens: Vec<Vec3> = basis.to_vec();
                gens.extend(coeffs);
                for a in 0..gens.len() {
                    for b in a + 1..gens.len() {
                        let (ea, eb) = (gens[a], gens[b]);
                        let reduced = area_form(&s, &s.cross(&ea), &s.cross(&eb), c);
                        let product = area_form(&rho1, &rho1.cross(&ea), &rho1.cross(&eb), r1)
                            + area_form(&rho2, &rho2.cross(&ea), &rho2.cross(&eb), r2);
                        let closed = s.dot(&ea.cross(&eb));
                        worst = worst.max((reduced - product).abs());
                        worst_closed = worst_closed
                            .max((reduced - closed).abs())
                            .max((product - closed).abs());
                    }
                }
            }
            _ => {
                let (s1, s2) = if branch == TwoSphereBranch::UpperBoundary {
                    (1.0, 1.0)
                } else if r1 >= r2 {
                    (1.0, -1.0)
                } else {
                    (-1.0, 1.0)
                };
                let rho = random_unit(&mut rng) * c;
                let pair = (rho * (s1 * r1 / c), rho * (s2 * r2 / c));
                let v = rho.cross(&Vec3::from_fn(|_, _| rng.random_range(-1.0..1.0)));
                let w = rho.cross(&Vec3::from_fn(|_, _| rng.random_range(-1.0..1.0)));
                let (v1, v2) = (v * (s1 * r1 / c), v * (s2 * r2 / c));
                let (w1, w2) = (w * (s1 * r1 / c), w * (s2 * r2 / c));
                let pulled = area_form(&pair.0, &v1, &w1, r1) + area_form(&pair.1, &v2, &w2, r2);
                let reduced = area_form(&rho, &v, &w, c);
                worst = worst.max((pulled - reduced).abs());
                let on_level = ((pair.0 + pair.1).norm() - c)
                    .abs()
                    .max((pair.0.norm() - r1).abs())
                    .max((pair.1.norm() - r2).abs())
                    .max((pair.0 + pair.1 - rho).amax());
                worst_closed = worst_closed.max(on_level);
            }
        }
    }
    Ok(TwoSphereReport {
        branch,
        samples,
        max_discrepancy: worst,
        max_closed_form_discrepancy: worst_closed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ReducedHessianCase {
    /// b_4 != 0.
    Generic,
    /// b_4 = 0, which forces t = 1/2.
    MiddleEdgeOnAxis,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReducedHessianData {
    pub case: ReducedHessianCase,
    pub a: f64,
    /// t b_5 / ((1 - t) b_3); None in the b_4 = 0 case.
    pub k: Option<f64>,
    pub x: f64,
    pub y: f64,
    pub a_entry: f64,
    pub b_entry: f64,
    /// The same diagonal entries through K; equal to the above on valid input.
    pub a_entry_via_k: Option<f64>,
    pub b_entry_via_k: Option<f64>,
}

fn axis_tol(star: &StarSolution) -> f64 {
    1e-9 * star.scale()
}

/// The two tangent vectors of the reduced 4-gon in which the reduced
/// Hessian is diagonal. Edge order: (c,0,0), rho_3, rho_4, rho_5.
pub fn diagonalizing_basis(star: &StarSolution) -> (ReducedHessianCase, [TangentVector; 2]) {
    let [a3, b3, _a4, b4, a5, b5] = star.coords;
    let case = if b4.abs() <= axis_tol(star) {
        ReducedHessianCase::MiddleEdgeOnAxis
    } else {
        ReducedHessianCase::Generic
    };
    let mut w1 = TangentVector::zeros(4);
    match case {
        ReducedHessianCase::Generic => {
            w1.v[1].z = 1.0;
            w1.v[3].z = -1.0;
        }
        ReducedHessianCase::MiddleEdgeOnAxis => {
            w1.v[0].z = 1.0;
            w1.v[1].z = -1.0;
        }
    }
    let mut w2 = TangentVector::zeros(4);
    w2.v[0] = Vec3::new(0.0, a5 * b3 - a3 * b5, 0.0);
    w2.v[1] = Vec3::new(-b3 * b5, a3 * b5, 0.0);
    w2.v[3] = Vec3::new(b3 * b5, -a5 * b3, 0.0);
    (case, [w1, w2])
}

/// Closed-form reduced Hessian of H_t / 2 at a rank-1 singular 4-gon, in
/// the basis of [`diagonalizing_basis`].
pub fn reduced_hessian_rank1(
    q: &ReducedPoint,
    t: f64,
    star: &StarSolution,
) -> Result<(Matrix2<f64>, ReducedHessianData)> {
    let scale = star.scale();
    if (q.c - star.c).abs() > 1e-9 * scale {
        return Err(Error::NotSingular(format!(
            "reduced level {} differs from the star level {}",
            q.c, star.c
        )));
    }
    if (t - star.t).abs() > 1e-12 {
        return Err(Error::NotSingular(format!(
            "star solution is for t = {}, not {t}",
            star.t
        )));
    }
    let sq = star.quad()?;
    let mirror = sq.rotated(&nalgebra::Matrix3::from_diagonal(&Vec3::new(1.0, -1.0, 1.0)));
    if gauge_fix(&sq).max_diff(&q.quad) > 1e-8 * scale
        && gauge_fix(&mirror).max_diff(&q.quad) > 1e-8 * scale
    {
        return Err(Error::NotSingular("star solution does not represent q".into()));
    }
    let res = star.residual();
    if res > 1e-9 * scale * scale {
        return Err(Error::NotSingular(format!("star residual {res:e}")));
    }
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::ContractViolation(format!("t = {t} outside (0, 1)")));
    }
    let [a3, b3, _a4, b4, a5, b5] = star.coords;
    let a = star.a;
    let c = star.c;
    if b3.abs() <= axis_tol(star) || b5.abs() <= axis_tol(star) {
        return Err(Error::ContractViolation("b3 or b5 vanishes".into()));
    }
    let x = a * b3 / t;
    let y = a * b5 / (1.0 - t);
    let cross = a3 * b5 - a5 * b3;
    let (case, _) = diagonalizing_basis(star);
    let data = match case {
        ReducedHessianCase::Generic => {
            let k = t * b5 / ((1.0 - t) * b3);
            if (k + 1.0).abs() < 1e-12 {
                return Err(Error::ContractViolation("K = -1".into()));
            }
            let a_entry = -t * b4 / b3 - (1.0 - t) * b4 / b5;
            let b_entry = (a / c) * cross * cross
                - (t / b3) * (a3 * a3 + b3 * b3) * b4 * b5 * b5
                - ((1.0 - t) / b5) * (a5 * a5 + b5 * b5) * b3 * b3 * b4;
            let pre = -a / (c * k);
            ReducedHessianData {
                case,
                a,
                k: Some(k),
                x,
                y,
                a_entry,
                b_entry,
                a_entry_via_k: Some(pre * (k + 1.0).powi(2)),
                b_entry_via_k: Some(
                    pre * ((k * a3 * b5 + a5 * b3).powi(2) + (k + 1.0).powi(2) * (b3 * b5).powi(2)),
                ),
            }
        }
        ReducedHessianCase::MiddleEdgeOnAxis => {
            if (t - 0.5).abs() > 1e-9 {
                return Err(Error::ContractViolation(format!(
                    "b4 = 0 requires t = 1/2, got {t}"
                )));
            }
            ReducedHessianData {
                case,
                a,
                k: None,
                x,
                y,
                a_entry: a / c,
                b_entry: (a / c) * cross * cross,
                a_entry_via_k: None,
                b_entry_via_k: None,
            }
        }
    };
    let m = Matrix2::new(data.a_entry, 0.0, 0.0, data.b_entry);
    Ok((m, data))
}

/// H_t / 2 on a reduced 4-gon: edges 1, 2, 3 carry rho_3, rho_4, rho_5.
pub fn reduced_half_h(quad: &Configuration, t: f64) -> f64 {
    let e = quad.edges();
    0.5 * (t * (e[1] + e[2]).norm_squared() + (1.0 - t) * (e[2] + e[3]).norm_squared())
}

/// Finite-difference Hessian of H_t / 2 on the reduced 4-gon along `dirs`.
pub fn reduced_hessian_fd(
    quad: &Configuration,
    t: f64,
    dirs: &[TangentVector],
    opts: FdOptions,
) -> Result<DMatrix<f64>> {
    fd::hessian(&|q: &Configuration| reduced_half_h(q, t), quad, dirs, opts)
}

/// Finite-difference reduced Hessian in an orthonormal chart orthogonal to
/// the residual rotation orbit.
pub fn reduced_hessian_fd_orthonormal(quad: &Configuration, t: f64, opts: FdOptions) -> Result<DMatrix<f64>> {
    let basis = horizontal_basis(quad);
    if basis.len() != 2 {
        return Err(Error::NumericalFailure(format!(
            "reduced tangent space has dimension {}",
            basis.len()
        )));
    }
    reduced_hessian_fd(quad, t, &basis, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{build_transition_point, sample_configuration, TheoremHypotheses};
    use crate::hamiltonians::{bending_rotate, IndexSet};
    use crate::singularities::solve_star;
    use proptest::prelude::*;

    fn reference() -> TheoremHypotheses {
        TheoremHypotheses::from_slice(&[3.0, 1.0, 4.0, 2.0, 3.0]).unwrap()
    }

    #[test]
    fn transition_point_reduces_to_collinear_quad() {
        let p = build_transition_point(&reference()).unwrap();
        let q = reduce_point(&p).unwrap();
        assert!((q.c - 3.0).abs() < 1e-14);
        let expect = [
            Vec3::new(3.0, 0.0, 0.0),
            Vec3::new(-4.0, 0.0, 0.0),
            Vec3::new(-2.0, 0.0, 0.0),
            Vec3::new(3.0, 0.0, 0.0),
        ];
        for (a, b) in q.quad.edges().iter().zip(&expect) {
            assert!((a - b).amax() < 1e-13);
        }
    }

    #[test]
    fn vanishing_moment_is_rejected() {
        let c = Configuration::from_edges(vec![
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(-1.0, 0.0, 0.0),
            Vec3::new(3.0, 0.0, 0.0),
            Vec3::new(0.0, 4.0, 0.0),
            Vec3::new(-3.0, -4.0, 0.0),
        ])
        .unwrap();
        assert!(matches!(reduce_point(&c), Err(Error::VanishingMoment(_))));
    }

    #[test]
    fn lift_then_reduce_roundtrip() {
        let c = sample_configuration(reference().lengths(), 17).unwrap();
        let q = reduce_point(&c).unwrap();
        let lifted = lift_reduced(&q, 3.0, 1.0, 0.7).unwrap();
        assert!(reduce_point(&lifted).unwrap().quad.max_diff(&q.quad) < 1e-10);
    }

    #[test]
    fn two_sphere_examples() {
        for c in [2.5, 4.0, 2.0] {
            let rep = two_sphere_reduction_check(3.0, 1.0, c, 100, 1).unwrap();
            assert!(rep.max_discrepancy <= 1e-10, "{rep:?}");
            assert!(rep.max_closed_form_discrepancy <= 1e-10, "{rep:?}");
        }
        assert_eq!(
            two_sphere_reduction_check(3.0, 1.0, 4.0, 1, 0).unwrap().branch,
            TwoSphereBranch::UpperBoundary
        );
        assert_eq!(
            two_sphere_reduction_check(3.0, 1.0, 2.0, 1, 0).unwrap().branch,
            TwoSphereBranch::LowerBoundary
        );
        assert_eq!(
            two_sphere_reduction_check(3.0, 1.0, 5.0, 1, 0),
            Err(Error::LevelOutOfRange(5.0))
        );
    }

    #[test]
    fn two_sphere_lower_boundary_with_shorter_first_radius() {
        let rep = two_sphere_reduction_check(1.0, 2.5, 1.5, 50, 3).unwrap();
        assert_eq!(rep.branch, TwoSphereBranch::LowerBoundary);
        assert!(rep.max_discrepancy <= 1e-10 && rep.max_closed_form_discrepancy <= 1e-10);
    }

    fn reference_star(c: f64, t: f64) -> StarSolution {
        solve_star(c, 4.0, 2.0, 3.0, t, 720).unwrap().remove(0)
    }

    #[test]
    fn analytic_matches_finite_differences_at_reference_level() {
        let star = reference_star(2.7, 0.4);
        let quad = star.quad().unwrap();
        let q = ReducedPoint { c: 2.7, quad: gauge_fix(&quad) };
        let (m, data) = reduced_hessian_rank1(&q, 0.4, &star).unwrap();
        assert_eq!(data.case, ReducedHessianCase::Generic);
        assert!(m.determinant() > 0.0);
        let (_, basis) = diagonalizing_basis(&star);
        let num = reduced_hessian_fd(&quad, 0.4, &basis, FdOptions::default()).unwrap();
        let norm = m.abs().max();
        for i in 0..2 {
            for j in 0..2 {
                assert!((num[(i, j)] - m[(i, j)]).abs() <= 1e-5 * norm, "{num} vs {m}");
            }
        }
        let (ak, bk) = (data.a_entry_via_k.unwrap(), data.b_entry_via_k.unwrap());
        assert!((ak - data.a_entry).abs() < 1e-10 * norm);
        assert!((bk - data.b_entry).abs() < 1e-10 * norm);
        let k = data.k.unwrap();
        assert!((k - data.y / data.x).abs() < 1e-12 * k.abs().max(1.0));
    }

    #[test]
    fn middle_edge_on_axis_case() {
        // At t = 1/2 and c = 3.9 a solution has rho_4 along the axis.
        let sols = solve_star(3.9, 4.0, 2.0, 3.0, 0.5, 720).unwrap();
        let star = sols
            .into_iter()
            .find(|s| s.coords[3].abs() < 1e-9)
            .expect("solution with b4 = 0");
        let quad = star.quad().unwrap();
        let q = ReducedPoint { c: 3.9, quad: gauge_fix(&quad) };
        let (m, data) = reduced_hessian_rank1(&q, 0.5, &star).unwrap();
        assert_eq!(data.case, ReducedHessianCase::MiddleEdgeOnAxis);
        let [a3, b3, _, _, a5, b5] = star.coords;
        let ac = star.a / 3.9;
        assert!((m[(0, 0)] - ac).abs() < 1e-14);
        assert!((m[(1, 1)] - ac * (a3 * b5 - a5 * b3).powi(2)).abs() < 1e-12);
        let (_, basis) = diagonalizing_basis(&star);
        let num = reduced_hessian_fd(&quad, 0.5, &basis, FdOptions::default()).unwrap();
        let norm = m.abs().max();
        for i in 0..2 {
            for j in 0..2 {
                assert!((num[(i, j)] - m[(i, j)]).abs() <= 1e-5 * norm, "{num} vs {m}");
            }
        }
    }

    #[test]
    fn mismatched_star_is_not_singular() {
        let star = reference_star(2.7, 0.4);
        let p = build_transition_point(&reference()).unwrap();
        let q = reduce_point(&p).unwrap();
        assert!(matches!(
            reduced_hessian_rank1(&q, 0.4, &star),
            Err(Error::NotSingular(_))
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn reduction_collapses_orbits(seed in any::<u64>(), theta in -6.0f64..6.0) {
            let c = sample_configuration(reference().lengths(), seed).unwrap();
            let q = reduce_point(&c).unwrap();
            let bent = bending_rotate(&c, &IndexSet::new(5, &[1, 2]).unwrap(), theta).unwrap();
            prop_assert!(reduce_point(&bent).unwrap().quad.max_diff(&q.quad) < 1e-10);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rot = random_rotation(&mut rng);
            prop_assert!(reduce_point(&c.rotated(&rot)).unwrap().quad.max_diff(&q.quad) < 1e-10);
            let e = q.quad.edges();
            prop_assert!((e[0] - Vec3::new(q.c, 0.0, 0.0)).amax() < 1e-12);
            let lens = [q.c, 4.0, 2.0, 3.0];
            for (v, l) in e.iter().zip(lens) {
                prop_assert!((v.norm() - l).abs() < 1e-12 * l);
            }
        }

        #[test]
        fn two_sphere_random_levels(r1 in 0.5f64..5.0, r2 in 0.5f64..5.0, u in 0.0f64..1.0, seed in any::<u64>()) {
            let c = (r1 - r2).abs() + u * (2.0 * r1.min(r2));
            prop_assume!(c > 1e-3);
            let rep = two_sphere_reduction_check(r1, r2, c, 5, seed).unwrap();
            prop_assert!(rep.max_discrepancy <= 1e-10);
        }
    }
}
