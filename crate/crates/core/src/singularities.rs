//! Detection and classification of singular points of (J, H_t) with
//! J = ell_12 and H_t = t ell_34^2 + (1 - t) ell_45^2.

use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fd::{self, FdOptions};
use crate::geom::{gauge_fix, Configuration, Vec3};
use crate::hamiltonians::{family_h, IndexSet, Observable};
use crate::linalg::{char_poly, horizontal_basis, quadratic_roots, tangent_basis};
use crate::reduction::{reduce_point, reduced_hessian_fd_orthonormal};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum SingularityType {
    Regular,
    EllipticElliptic,
    FocusFocus,
    EllipticHyperbolic,
    HyperbolicHyperbolic,
    EllipticRegular,
    HyperbolicRegular,
    Degenerate,
}

impl SingularityType {
    /// Types allowed in a semitoric system.
    pub fn is_admissible(self) -> bool {
        matches!(
            self,
            Self::Regular | Self::EllipticElliptic | Self::FocusFocus | Self::EllipticRegular
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Regular => "Regular",
            Self::EllipticElliptic => "EllipticElliptic",
            Self::FocusFocus => "FocusFocus",
            Self::EllipticHyperbolic => "EllipticHyperbolic",
            Self::HyperbolicHyperbolic => "HyperbolicHyperbolic",
            Self::EllipticRegular => "EllipticRegular",
            Self::HyperbolicRegular => "HyperbolicRegular",
            Self::Degenerate => "Degenerate",
        }
    }
}

impl std::fmt::Display for SingularityType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Classification thresholds. All are relative to the natural scale of the
/// quantity they bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thresholds {
    /// Singular values of (dJ, dH_t / scale) below this count as zero.
    pub rank: f64,
    /// Root-margin and root-size threshold below which a probe is degenerate.
    pub degenerate: f64,
    /// Distance of ell_12 from J_min or J_max (times scale) on a fixed surface.
    pub fixed_surface: f64,
    /// Residual of the singular-point criterion (times scale^2).
    pub witness: f64,
    /// Equality tolerance of the local-model rule.
    pub local_model: f64,
    #[serde(skip)]
    pub fd: FdOptions,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            rank: 1e-8,
            degenerate: 1e-7,
            fixed_surface: 1e-9,
            witness: 1e-9,
            local_model: 1e-12,
            fd: FdOptions::default(),
        }
    }
}

fn check_pentagon(rho: &Configuration) -> Result<()> {
    if rho.len() == 5 {
        Ok(())
    } else {
        Err(Error::ContractViolation(format!(
            "expected a pentagon, got {} edges",
            rho.len()
        )))
    }
}

fn j_set() -> IndexSet {
    IndexSet::new(5, &[1, 2]).unwrap()
}

/// Singular values of the differentials (dJ, dH_t / scale) restricted to the
/// tangent space; vertical directions contribute nothing since both
/// functions are rotation invariant.
pub fn differential_singular_values(rho: &Configuration, t: f64) -> Result<[f64; 2]> {
    check_pentagon(rho)?;
    let scale = rho.scale();
    let total: f64 = rho.lengths().iter().sum();
    let mu = rho.edge(0) + rho.edge(1);
    let l = mu.norm();
    let dj = Observable::EllSquared(j_set()).gradient(rho)?.scale(0.5 / l.max(1e-8 * total));
    let dh = Observable::Family(t).gradient(rho)?.scale(1.0 / scale);
    let basis = tangent_basis(rho);
    let m = DMatrix::from_fn(2, basis.len(), |i, k| {
        if i == 0 {
            dj.dot(&basis[k])
        } else {
            dh.dot(&basis[k])
        }
    });
    let sv = m.singular_values();
    Ok([sv[0].max(sv[1]), sv[0].min(sv[1])])
}

/// Numerical rank of span(dJ, dH_t) on the polygon space.
pub fn rank_at(rho: &Configuration, t: f64) -> Result<usize> {
    rank_with(rho, t, &Thresholds::default())
}

pub fn rank_with(rho: &Configuration, t: f64, th: &Thresholds) -> Result<usize> {
    let sv = differential_singular_values(rho, t)?;
    Ok(sv.iter().filter(|s| **s > th.rank).count())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SingularWitness {
    pub a: f64,
    pub residual: f64,
}

/// Singular-point criterion for H_t: in the gauge rho_1 = (r_1, 0, 0), find
/// a with (a,0,0) x rho_i = 0 for the first n-3 edges, (a,0,0) x rho_{n-2} =
/// t rho_{n-1} x rho_{n-2} and (a,0,0) x rho_n = (1-t) rho_{n-1} x rho_n.
/// Solved by least squares; a witness is returned when the relative
/// residual is at most `tol`. The witness may have a = 0.
pub fn detect_singular(rho: &Configuration, t: f64, tol: f64) -> Option<SingularWitness> {
    let n = rho.len();
    if n < 4 {
        return None;
    }
    let g = gauge_fix(rho);
    let e = g.edges();
    let ex = Vec3::x();
    let mut lhs: Vec<Vec3> = Vec::with_capacity(n - 1);
    let mut rhs: Vec<Vec3> = Vec::with_capacity(n - 1);
    for p in &e[..n - 3] {
        lhs.push(ex.cross(p));
        rhs.push(Vec3::zeros());
    }
    lhs.push(ex.cross(&e[n - 3]));
    rhs.push(e[n - 2].cross(&e[n - 3]) * t);
    lhs.push(ex.cross(&e[n - 1]));
    rhs.push(e[n - 2].cross(&e[n - 1]) * (1.0 - t));
    let aa: f64 = lhs.iter().map(|v| v.norm_squared()).sum();
    let ab: f64 = lhs.iter().zip(&rhs).map(|(u, v)| u.dot(v)).sum();
    let a = if aa > 0.0 { ab / aa } else { 0.0 };
    let residual = lhs
        .iter()
        .zip(&rhs)
        .map(|(u, v)| (u * a - v).norm_squared())
        .sum::<f64>()
        .sqrt();
    let s = g.scale();
    let rel = residual / (s * s);
    (rel <= tol).then_some(SingularWitness { a, residual: rel })
}

/// Planar singular 4-gon of the reduced space: edges (c,0,0), (a_3,b_3,0),
/// (a_4,b_4,0), (a_5,b_5,0) solving a b_3 = t(a_4 b_3 - a_3 b_4) and
/// a b_5 = (1-t)(a_4 b_5 - a_5 b_4).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StarSolution {
    pub a: f64,
    pub coords: [f64; 6],
    pub t: f64,
    pub c: f64,
}

impl StarSolution {
    fn edges(&self) -> [Vec3; 4] {
        let [a3, b3, a4, b4, a5, b5] = self.coords;
        [
            Vec3::new(self.c, 0.0, 0.0),
            Vec3::new(a3, b3, 0.0),
            Vec3::new(a4, b4, 0.0),
            Vec3::new(a5, b5, 0.0),
        ]
    }

    pub fn lengths(&self) -> [f64; 4] {
        let e = self.edges();
        [e[0].norm(), e[1].norm(), e[2].norm(), e[3].norm()]
    }

    pub fn scale(&self) -> f64 {
        self.lengths().iter().cloned().fold(0.0, f64::max)
    }

    pub fn quad(&self) -> Result<Configuration> {
        Configuration::from_edges(self.edges().to_vec())
    }

    /// Largest residual of the two star equations.
    pub fn residual(&self) -> f64 {
        let [a3, b3, a4, b4, a5, b5] = self.coords;
        let t = self.t;
        let e1 = self.a * b3 - t * (a4 * b3 - a3 * b4);
        let e2 = self.a * b5 - (1.0 - t) * (a4 * b5 - a5 * b4);
        e1.abs().max(e2.abs())
    }

    /// Reflection b -> -b.
    pub fn mirrored(&self) -> Self {
        let [a3, b3, a4, b4, a5, b5] = self.coords;
        Self {
            coords: [a3, -b3, a4, -b4, a5, -b5],
            ..self.clone()
        }
    }
}

/// Planar 4-gon with rho_3 at angle phi and elbow branch sigma.
fn planar(c: f64, r3: f64, r4: f64, r5: f64, phi: f64, sigma: f64) -> Option<[Vec3; 3]> {
    let rho3 = Vec3::new(r3 * phi.cos(), r3 * phi.sin(), 0.0);
    let s = Vec3::new(c, 0.0, 0.0) + rho3;
    let d = s.norm();
    let slack = 1e-13 * (c + r3 + r4 + r5);
    if d < (r4 - r5).abs() - slack || d > r4 + r5 + slack || d == 0.0 {
        return None;
    }
    let u = s / d;
    let perp = Vec3::new(-u.y, u.x, 0.0);
    let x = (d * d + r4 * r4 - r5 * r5) / (2.0 * d);
    let y = (r4 * r4 - x * x).max(0.0).sqrt();
    let rho4 = -u * x + perp * (sigma * y);
    let rho5 = -s - rho4;
    Some([rho3, rho4, rho5])
}

fn star_function(e: &[Vec3; 3], t: f64) -> f64 {
    let (a3, b3, a4, b4, a5, b5) = (e[0].x, e[0].y, e[1].x, e[1].y, e[2].x, e[2].y);
    t * (a4 * b3 - a3 * b4) * b5 - (1.0 - t) * (a4 * b5 - a5 * b4) * b3
}

/// Planar singular points of H_t on the 4-gon space with edges
/// (c, r3, r4, r5), found by sign changes on a grid in the angle of rho_3
/// (turning points of the elbow inserted) and bisection refinement.
/// Only solutions with a != 0 and b_3 b_5 != 0 are returned.
pub fn solve_star(c: f64, r3: f64, r4: f64, r5: f64, t: f64, grid: usize) -> Result<Vec<StarSolution>> {
    for x in [c, r3, r4, r5] {
        if !(x.is_finite() && x > 0.0) {
            return Err(Error::InvalidLengths(format!("length {x}")));
        }
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::ContractViolation(format!("t = {t} outside [0, 1]")));
    }
    if grid < 8 {
        return Err(Error::ContractViolation("grid must have at least 8 points".into()));
    }
    let quad_lengths = crate::geom::SideLengths::new(&[c, r3, r4, r5])?;
    if !quad_lengths.is_nonempty() {
        return Err(Error::EmptySpace);
    }
    let scale = [c, r3, r4, r5].iter().cloned().fold(0.0, f64::max);
    let tau = std::f64::consts::TAU;
    let mut phis: Vec<f64> = (0..grid).map(|k| tau * k as f64 / grid as f64).collect();
    for d in [r4 + r5, (r4 - r5).abs()] {
        let cosp = (d * d - c * c - r3 * r3) / (2.0 * c * r3);
        if cosp.abs() <= 1.0 {
            let p = cosp.acos();
            phis.push(p);
            phis.push(tau - p);
        }
    }
    phis.sort_by(|a, b| a.partial_cmp(b).unwrap());
    phis.push(tau);

    let mut out: Vec<StarSolution> = Vec::new();
    let push = |phi: f64, sigma: f64, out: &mut Vec<StarSolution>| {
        let Some(e) = planar(c, r3, r4, r5, phi, sigma) else {
            return;
        };
        let (a3, b3, a4, b4, a5, b5) = (e[0].x, e[0].y, e[1].x, e[1].y, e[2].x, e[2].y);
        let axis = 1e-9 * scale;
        if b3.abs() <= axis || b5.abs() <= axis {
            return;
        }
        let a = if b3.abs() >= b5.abs() {
            t * (a4 * b3 - a3 * b4) / b3
        } else {
            (1.0 - t) * (a4 * b5 - a5 * b4) / b5
        };
        if a.abs() <= 1e-12 * scale {
            return;
        }
        let s = StarSolution {
            a,
            coords: [a3, b3, a4, b4, a5, b5],
            t,
            c,
        };
        if s.residual() > 1e-10 * scale * scale {
            return;
        }
        let dup = out.iter().any(|o| {
            o.coords
                .iter()
                .zip(&s.coords)
                .all(|(x, y)| (x - y).abs() <= 1e-7 * scale)
        });
        if !dup {
            out.push(s);
        }
    };

    for sigma in [1.0, -1.0] {
        let vals: Vec<Option<f64>> = phis
            .iter()
            .map(|p| planar(c, r3, r4, r5, *p, sigma).map(|e| star_function(&e, t)))
            .collect();
        for k in 0..phis.len() - 1 {
            let (Some(g0), Some(g1)) = (vals[k], vals[k + 1]) else {
                continue;
            };
            if g0 == 0.0 {
                push(phis[k], sigma, &mut out);
                continue;
            }
            if g0.signum() == g1.signum() || g1 == 0.0 {
                continue;
            }
            let (mut lo, mut hi, mut glo) = (phis[k], phis[k + 1], g0);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                let Some(e) = planar(c, r3, r4, r5, mid, sigma) else {
                    break;
                };
                let gm = star_function(&e, t);
                if gm == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if gm.signum() == glo.signum() {
                    lo = mid;
                    glo = gm;
                } else {
                    hi = mid;
                }
            }
            push(0.5 * (lo + hi), sigma, &mut out);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Rank0Report {
    pub kind: SingularityType,
    /// The probe (nu, mu) that decided the type, or the first probe tried
    /// when every probe was degenerate.
    pub probe: (f64, f64),
    /// Roots of the characteristic quadratic chi(Y) = Y^2 + c_2 Y + c_4.
    #[serde(serialize_with = "ser_roots")]
    pub roots: [Complex64; 2],
    pub chi: (f64, f64),
    /// Largest relative size of the odd characteristic coefficients.
    pub odd_residual: f64,
    /// |c_2^2 - 4 c_4| / max(c_2^2, |c_4|).
    pub distinct_margin: f64,
    /// |c_4| / max(c_2^2, |c_4|).
    pub root_margin: f64,
}

pub(crate) fn ser_roots<S: serde::Serializer>(r: &[Complex64; 2], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(2))?;
    for z in r {
        seq.serialize_element(&[z.re, z.im])?;
    }
    seq.end()
}

/// Probe schedule: four fixed pairs followed by eight seeded random pairs.
pub fn default_probes() -> Vec<(f64, f64)> {
    let mut probes = vec![(0.0, 1.0), (1.0, 1.0), (1.0, -1.0), (1.0, 0.9)];
    let mut rng = ChaCha8Rng::seed_from_u64(0x9e37_79b9);
    for _ in 0..8 {
        probes.push((rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    }
    probes
}

/// Matrices of Omega and of the Hessians of J^2/2 and H_t/2 in an
/// orthonormal basis of the horizontal tangent space at a rank-0 point.
pub struct QuotientMatrices {
    pub omega: DMatrix<f64>,
    pub hess_j: DMatrix<f64>,
    pub hess_h: DMatrix<f64>,
}

pub fn quotient_matrices(rho: &Configuration, t: f64, opts: FdOptions) -> Result<QuotientMatrices> {
    let basis = horizontal_basis(rho);
    if basis.len() != 4 {
        return Err(Error::NumericalFailure(format!(
            "quotient tangent space has dimension {}",
            basis.len()
        )));
    }
    let omega = DMatrix::from_fn(4, 4, |a, b| crate::geom::symplectic_form(rho, &basis[b], &basis[a]));
    let hess_j = fd::hessian(
        &|q: &Configuration| 0.5 * (q.edge(0) + q.edge(1)).norm_squared(),
        rho,
        &basis,
        opts,
    )?;
    let hess_h = fd::hessian(&|q: &Configuration| 0.5 * family_h(q, t), rho, &basis, opts)?;
    Ok(QuotientMatrices { omega, hess_j, hess_h })
}

struct ProbeOutcome {
    kind: SingularityType,
    roots: [Complex64; 2],
    chi: (f64, f64),
    odd: f64,
    distinct: f64,
    root: f64,
}

fn evaluate_probe(m: &QuotientMatrices, omega_inv: &DMatrix<f64>, nu: f64, mu: f64, tol: f64) -> ProbeOutcome {
    let a = omega_inv * (&m.hess_j * nu + &m.hess_h * mu);
    let cp = char_poly(&a);
    let (c1, c2, c3, c4) = (cp[1], cp[2], cp[3], cp[4]);
    let s = c2 * c2;
    let big = s.max(c4.abs()).max(f64::MIN_POSITIVE);
    let unit = big.sqrt().sqrt();
    let odd = (c1.abs() / unit).max(c3.abs() / unit.powi(3));
    let disc = c2 * c2 - 4.0 * c4;
    let distinct = disc.abs() / big;
    let root = c4.abs() / big;
    let roots = quadratic_roots(c2, c4);
    let kind = if distinct <= tol || root <= tol {
        SingularityType::Degenerate
    } else if disc < 0.0 {
        SingularityType::FocusFocus
    } else {
        let neg = roots.iter().filter(|z| z.re < 0.0).count();
        match neg {
            2 => SingularityType::EllipticElliptic,
            1 => SingularityType::EllipticHyperbolic,
            _ => SingularityType::HyperbolicHyperbolic,
        }
    };
    ProbeOutcome {
        kind,
        roots,
        chi: (c2, c4),
        odd,
        distinct,
        root,
    }
}

/// Classifies a rank-0 point by the roots of the characteristic quadratic
/// of Omega^{-1}(nu Hess J + mu Hess H_t), trying probes in order.
pub fn classify_rank0(rho: &Configuration, t: f64, probes: &[(f64, f64)]) -> Result<Rank0Report> {
    classify_rank0_with(rho, t, probes, &Thresholds::default())
}

pub fn classify_rank0_with(
    rho: &Configuration,
    t: f64,
    probes: &[(f64, f64)],
    th: &Thresholds,
) -> Result<Rank0Report> {
    let rank = rank_with(rho, t, th)?;
    if rank != 0 {
        return Err(Error::NotRankZero(rank));
    }
    if probes.is_empty() {
        return Err(Error::ContractViolation("no probes given".into()));
    }
    let m = quotient_matrices(rho, t, th.fd)?;
    let omega_inv = m
        .omega
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::NumericalFailure("symplectic matrix is singular".into()))?;
    let mut first: Option<Rank0Report> = None;
    for &(nu, mu) in probes {
        let o = evaluate_probe(&m, &omega_inv, nu, mu, th.degenerate);
        let report = Rank0Report {
            kind: o.kind,
            probe: (nu, mu),
            roots: o.roots,
            chi: o.chi,
            odd_residual: o.odd,
            distinct_margin: o.distinct,
            root_margin: o.root,
        };
        if o.kind != SingularityType::Degenerate {
            return Ok(report);
        }
        first.get_or_insert(report);
    }
    Ok(first.unwrap())
}

/// Whether ell_12 sits at |r1 - r2| or r1 + r2, the fixed surfaces of the
/// circle action.
pub fn on_fixed_surface(rho: &Configuration, tol: f64) -> bool {
    let r = rho.lengths();
    let l = (rho.edge(0) + rho.edge(1)).norm();
    let s = rho.scale();
    (l - (r[0] - r[1]).abs()).abs() <= tol * s || (l - (r[0] + r[1])).abs() <= tol * s
}

fn det_type(h: &DMatrix<f64>, tol: f64, pos: SingularityType, neg: SingularityType) -> (SingularityType, f64) {
    let m = Matrix2::new(h[(0, 0)], h[(0, 1)], h[(1, 0)], h[(1, 1)]);
    let det = m.determinant();
    let norm = m.abs().max().powi(2).max(f64::MIN_POSITIVE);
    let kind = if det.abs() <= tol * norm {
        SingularityType::Degenerate
    } else if det > 0.0 {
        pos
    } else {
        neg
    };
    (kind, det)
}

/// Rank-1 points off the fixed surfaces are classified by the determinant
/// of the reduced Hessian; on the fixed surfaces they are elliptic-regular.
pub fn classify_rank1(rho: &Configuration, t: f64) -> Result<SingularityType> {
    classify_rank1_with(rho, t, &Thresholds::default()).map(|(k, _)| k)
}

pub fn classify_rank1_with(rho: &Configuration, t: f64, th: &Thresholds) -> Result<(SingularityType, Option<f64>)> {
    let rank = rank_with(rho, t, th)?;
    if rank != 1 {
        return Err(Error::NotRankOne(rank));
    }
    if on_fixed_surface(rho, th.fixed_surface) {
        return Ok((SingularityType::EllipticRegular, None));
    }
    let q = reduce_point(rho)?;
    let h = reduced_hessian_fd_orthonormal(&q.quad, t, th.fd)?;
    let (kind, det) = det_type(
        &h,
        th.degenerate,
        SingularityType::EllipticRegular,
        SingularityType::HyperbolicRegular,
    );
    Ok((kind, Some(det)))
}

/// Rank-0 points on a fixed surface: elliptic-elliptic iff the Hessian of
/// H_t restricted to the surface is definite.
pub fn classify_fixed_surface_rank0(rho: &Configuration, t: f64) -> Result<SingularityType> {
    classify_fixed_surface_rank0_with(rho, t, &Thresholds::default()).map(|(k, _)| k)
}

pub fn classify_fixed_surface_rank0_with(
    rho: &Configuration,
    t: f64,
    th: &Thresholds,
) -> Result<(SingularityType, f64)> {
    check_pentagon(rho)?;
    if !on_fixed_surface(rho, th.fixed_surface) {
        return Err(Error::NotOnFixedSurface);
    }
    let rank = rank_with(rho, t, th)?;
    if rank != 0 {
        return Err(Error::NotRankZero(rank));
    }
    // On the surface rho_1 and rho_2 are parallel, so the surface is the
    // 4-gon space with first edge rho_1 + rho_2.
    let q = reduce_point(rho)?;
    let h = reduced_hessian_fd_orthonormal(&q.quad, t, th.fd)?;
    Ok(det_type(
        &h,
        th.degenerate,
        SingularityType::EllipticElliptic,
        SingularityType::EllipticHyperbolic,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SingularityReport {
    pub rank: usize,
    #[serde(rename = "type")]
    pub kind: SingularityType,
    pub t: f64,
    pub probe: Option<(f64, f64)>,
    #[serde(serialize_with = "ser_opt_roots")]
    pub roots: Option<[Complex64; 2]>,
    pub residuals: Residuals,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Residuals {
    pub differential_singular_values: [f64; 2],
    pub odd_coefficients: Option<f64>,
    pub distinct_margin: Option<f64>,
    pub root_margin: Option<f64>,
    pub hessian_det: Option<f64>,
    pub witness: Option<f64>,
}

fn ser_opt_roots<S: serde::Serializer>(r: &Option<[Complex64; 2]>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match r {
        Some(r) => ser_roots(r, s),
        None => s.serialize_none(),
    }
}

/// Rank, type and supporting data for any pentagon configuration.
pub fn classify_point(rho: &Configuration, t: f64, th: &Thresholds) -> Result<SingularityReport> {
    let sv = differential_singular_values(rho, t)?;
    let rank = sv.iter().filter(|s| **s > th.rank).count();
    let mut residuals = Residuals {
        differential_singular_values: sv,
        witness: detect_singular(rho, t, th.witness).map(|w| w.residual),
        ..Default::default()
    };
    let mut report = SingularityReport {
        rank,
        kind: SingularityType::Regular,
        t,
        probe: None,
        roots: None,
        residuals: Residuals::default(),
    };
    match rank {
        0 if on_fixed_surface(rho, th.fixed_surface) => {
            let (kind, det) = classify_fixed_surface_rank0_with(rho, t, th)?;
            report.kind = kind;
            residuals.hessian_det = Some(det);
        }
        0 => {
            let r = classify_rank0_with(rho, t, &default_probes(), th)?;
            report.kind = r.kind;
            report.probe = Some(r.probe);
            report.roots = Some(r.roots);
            residuals.odd_coefficients = Some(r.odd_residual);
            residuals.distinct_margin = Some(r.distinct_margin);
            residuals.root_margin = Some(r.root_margin);
        }
        1 => {
            let (kind, det) = classify_rank1_with(rho, t, th)?;
            report.kind = kind;
            residuals.hessian_det = det;
        }
        _ => {}
    }
    report.residuals = residuals;
    Ok(report)
}

/// Coefficients of the rank-0 local model
/// mu1 Re(e^{i psi} z1 z2) + mu2 |z1|^2 + mu3 |z2|^2 and of the toric
/// endpoint nu2 |z1|^2 + nu3 |z2|^2, with J = eps (|z1|^2 - |z2|^2) / 2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LocalModelParams {
    pub mu1: f64,
    pub mu2: f64,
    pub mu3: f64,
    pub psi: f64,
    pub nu2: f64,
    pub nu3: f64,
    pub eps: i8,
}

impl LocalModelParams {
    pub fn new(mu1: f64, mu2: f64, mu3: f64) -> Self {
        Self {
            mu1,
            mu2,
            mu3,
            psi: 0.0,
            nu2: 0.0,
            nu3: 0.0,
            eps: 1,
        }
    }
}

/// Focus-focus iff |mu2 + mu3| < |mu1|, elliptic-elliptic iff greater,
/// degenerate at equality (relative tolerance `tol`).
pub fn classify_local_model(p: &LocalModelParams, tol: f64) -> Result<SingularityType> {
    let s = (p.mu2 + p.mu3).abs();
    let m = p.mu1.abs();
    if s == 0.0 && m == 0.0 {
        return Err(Error::NotIntegrable("mu1 = mu2 + mu3 = 0".into()));
    }
    let kind = if (s - m).abs() <= tol * s.max(m) {
        SingularityType::Degenerate
    } else if s < m {
        SingularityType::FocusFocus
    } else {
        SingularityType::EllipticElliptic
    };
    Ok(kind)
}

/// The sign function (t(mu2+mu3) + (1-t)(nu2+nu3))^2 - (t mu1)^2 of the
/// interpolated local model.
pub fn local_model_f(mu1: f64, mu2: f64, mu3: f64, nu2: f64, nu3: f64, t: f64) -> f64 {
    let lin = t * (mu2 + mu3) + (1.0 - t) * (nu2 + nu3);
    lin * lin - (t * mu1).powi(2)
}

/// Roots in (0, 1) of [`local_model_f`], ascending. The function factors
/// as (s_nu + t(s_mu - s_nu - |mu1|)) (s_nu + t(s_mu - s_nu + |mu1|)).
pub fn local_transition_times(mu1: f64, mu2: f64, mu3: f64, nu2: f64, nu3: f64) -> Result<(f64, f64)> {
    let s_mu = mu2 + mu3;
    let s_nu = nu2 + nu3;
    if !(mu1 != 0.0 && s_mu * s_mu > mu1 * mu1) {
        return Err(Error::HypothesisViolation("need (mu2 + mu3)^2 > mu1^2 > 0".into()));
    }
    if !(s_nu > 0.0) {
        return Err(Error::HypothesisViolation("need nu2 + nu3 > 0".into()));
    }
    if !(s_mu < 0.0) {
        return Err(Error::HypothesisViolation("need mu2 + mu3 < 0".into()));
    }
    let m = mu1.abs();
    let t_minus = s_nu / (s_nu - s_mu + m);
    let t_plus = s_nu / (s_nu - s_mu - m);
    Ok((t_minus, t_plus))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{
        assemble_from_diagonals, build_transition_point, random_rotation, sample_configuration,
        TheoremHypotheses,
    };
    use crate::reduction::{lift_reduced, ReducedPoint};
    use proptest::prelude::*;

    fn reference() -> TheoremHypotheses {
        TheoremHypotheses::from_slice(&[3.0, 1.0, 4.0, 2.0, 3.0]).unwrap()
    }

    fn p() -> Configuration {
        build_transition_point(&reference()).unwrap()
    }

    fn t_minus() -> f64 {
        (19.0 - 12.0 * 2f64.sqrt()) / 73.0
    }

    #[test]
    fn rank_examples() {
        for t in [0.0, 0.3, 1.0] {
            assert_eq!(rank_at(&p(), t).unwrap(), 0);
        }
        let c = sample_configuration(reference().lengths(), 21).unwrap();
        assert_eq!(rank_at(&c, 0.3).unwrap(), 2);
    }

    #[test]
    fn rank_one_on_fixed_surface() {
        let c = assemble_from_diagonals(reference().lengths(), &[4.0, 3.3], &[0.0, 1.1]).unwrap();
        assert_eq!(rank_at(&c, 0.3).unwrap(), 1);
        assert_eq!(classify_rank1(&c, 0.3).unwrap(), SingularityType::EllipticRegular);
    }

    #[test]
    fn witness_at_transition_point() {
        for t in [0.0, 0.4, 1.0] {
            let w = detect_singular(&p(), t, 1e-9).expect("witness");
            assert!(w.a.abs() < 1e-12);
        }
    }

    #[test]
    fn no_witness_at_generic_point() {
        let c = sample_configuration(reference().lengths(), 3).unwrap();
        assert!(detect_singular(&c, 0.3, 1e-9).is_none());
    }

    #[test]
    fn star_solutions_reference() {
        let sols = solve_star(2.7, 4.0, 2.0, 3.0, 0.4, 720).unwrap();
        assert!(!sols.is_empty());
        for s in &sols {
            assert!(s.residual() <= 1e-10);
            assert!(s.coords[1].abs() > 1e-9 && s.coords[5].abs() > 1e-9);
            assert!(s.coords[3].abs() > 1e-9);
            assert!(s.a != 0.0);
            let m = s.mirrored();
            let found = sols.iter().any(|o| {
                (o.a - m.a).abs() < 1e-9
                    && o.coords.iter().zip(&m.coords).all(|(x, y)| (x - y).abs() < 1e-8)
            });
            assert!(found, "mirror of {s:?} missing");
        }
    }

    #[test]
    fn star_solutions_are_rank_one_elliptic_regular() {
        let sols = solve_star(2.7, 4.0, 2.0, 3.0, 0.4, 720).unwrap();
        for s in &sols {
            let q = ReducedPoint { c: 2.7, quad: s.quad().unwrap() };
            let rho = lift_reduced(&q, 3.0, 1.0, 0.3).unwrap();
            assert_eq!(rank_at(&rho, 0.4).unwrap(), 1);
            assert_eq!(classify_rank1(&rho, 0.4).unwrap(), SingularityType::EllipticRegular);
        }
    }

    #[test]
    fn rank_one_at_critical_level() {
        let h = reference();
        let sols = solve_star(h.j, 4.0, 2.0, 3.0, 0.6, 720).unwrap();
        assert!(!sols.is_empty());
        for s in &sols {
            let q = ReducedPoint { c: h.j, quad: s.quad().unwrap() };
            let rho = lift_reduced(&q, 3.0, 1.0, 1.0).unwrap();
            assert_eq!(classify_rank1(&rho, 0.6).unwrap(), SingularityType::EllipticRegular);
        }
    }

    #[test]
    fn rank0_examples() {
        let probes = default_probes();
        assert_eq!(classify_rank0(&p(), 0.0, &probes).unwrap().kind, SingularityType::EllipticElliptic);
        assert_eq!(classify_rank0(&p(), 0.25, &probes).unwrap().kind, SingularityType::FocusFocus);
        assert_eq!(classify_rank0(&p(), t_minus(), &probes).unwrap().kind, SingularityType::Degenerate);
        let c = sample_configuration(reference().lengths(), 1).unwrap();
        assert!(matches!(classify_rank0(&c, 0.2, &probes), Err(Error::NotRankZero(2))));
    }

    #[test]
    fn rank0_unit_probe_reproduces_closed_form_quadratic() {
        let r = classify_rank0(&p(), 0.0, &[(1.0, 1.0)]).unwrap();
        assert!((r.chi.0 - 13.0).abs() < 1e-6 && (r.chi.1 - 36.0).abs() < 1e-6, "{:?}", r.chi);
        assert!(r.odd_residual < 1e-8);
    }

    #[test]
    fn probe_independence_away_from_transitions() {
        for t in [0.0, 0.1, 0.25, 0.4, 0.6, 0.9, 1.0] {
            let a = classify_rank0(&p(), t, &[(1.0, 1.0)]).unwrap().kind;
            let b = classify_rank0(&p(), t, &[(1.0, 0.9)]).unwrap().kind;
            assert_eq!(a, b, "t = {t}");
        }
    }

    fn corner(c: f64, pair: usize, signs: (f64, f64)) -> Configuration {
        // Fixed-surface pentagon with rho_1 + rho_2 = (c,0,0) and the pair
        // (rho_3, rho_4) or (rho_4, rho_5) collinear with the given signs.
        let h = reference();
        let [r1, r2, r3, r4, r5] = h.r();
        let (other, la, lb) = if pair == 34 { (r5, r3, r4) } else { (r3, r4, r5) };
        let inner = signs.0 * la + signs.1 * lb;
        let x = (c * c + inner * inner - other * other) / (2.0 * c);
        let y = (inner * inner - x * x).max(0.0).sqrt();
        let first = Vec3::new(c, 0.0, 0.0);
        let u = -Vec3::new(x, y, 0.0) / inner;
        let (ea, eb) = (u * (signs.0 * la), u * (signs.1 * lb));
        let edges = if pair == 34 {
            vec![first, ea, eb, -first - ea - eb]
        } else {
            vec![first, -first - ea - eb, ea, eb]
        };
        let q = ReducedPoint {
            c,
            quad: Configuration::from_edges(edges).unwrap(),
        };
        lift_reduced(&q, r1, r2, 0.0).unwrap()
    }

    #[test]
    fn delzant_corner_is_elliptic_elliptic() {
        let rho = corner(4.0, 34, (1.0, 1.0));
        assert!(((rho.edge(2) + rho.edge(3)).norm() - 6.0).abs() < 1e-12);
        assert_eq!(classify_fixed_surface_rank0(&rho, 1.0).unwrap(), SingularityType::EllipticElliptic);
    }

    #[test]
    fn surface_extrema_at_t0_are_elliptic_elliptic() {
        for (c, signs) in [(2.0, (1.0, 1.0)), (4.0, (1.0, 1.0)), (4.0, (-1.0, 1.0))] {
            let rho = corner(c, 45, signs);
            let inner = signs.0 * 2.0 + signs.1 * 3.0;
            assert!(((rho.edge(3) + rho.edge(4)).norm() - inner).abs() < 1e-12);
            assert_eq!(
                classify_fixed_surface_rank0(&rho, 0.0).unwrap(),
                SingularityType::EllipticElliptic,
                "corner ({c}, {inner})"
            );
        }
    }

    #[test]
    fn surface_critical_points_at_half() {
        let h = reference();
        let sols = solve_star(h.j_min, 4.0, 2.0, 3.0, 0.5, 720).unwrap();
        assert!(!sols.is_empty());
        for s in &sols {
            let q = ReducedPoint { c: h.j_min, quad: s.quad().unwrap() };
            let rho = lift_reduced(&q, 3.0, 1.0, 0.0).unwrap();
            let (kind, det) = classify_fixed_surface_rank0_with(&rho, 0.5, &Thresholds::default()).unwrap();
            assert!(det.abs() > 1e-6);
            assert_eq!(kind, SingularityType::EllipticElliptic);
        }
    }

    #[test]
    fn off_surface_is_rejected() {
        assert_eq!(classify_fixed_surface_rank0(&p(), 0.2), Err(Error::NotOnFixedSurface));
    }

    #[test]
    fn local_model_examples() {
        let tol = 1e-12;
        let k = |m1, s| classify_local_model(&LocalModelParams::new(m1, s, 0.0), tol).unwrap();
        assert_eq!(k(2.0, 1.0), SingularityType::FocusFocus);
        assert_eq!(k(1.0, 3.0), SingularityType::EllipticElliptic);
        assert_eq!(k(1.0, 1.0), SingularityType::Degenerate);
        assert!(matches!(
            classify_local_model(&LocalModelParams::new(0.0, 1.0, -1.0), tol),
            Err(Error::NotIntegrable(_))
        ));
    }

    #[test]
    fn local_transition_example() {
        let (a, b) = local_transition_times(1.0, -1.0, -1.0, 1.0, 1.0).unwrap();
        assert!((a - 0.4).abs() < 1e-12 && (b - 2.0 / 3.0).abs() < 1e-12);
        assert!(local_transition_times(1.0, 1.0, 1.0, 1.0, 1.0).is_err());
        assert!(local_transition_times(3.0, -1.0, -1.0, 1.0, 1.0).is_err());
        assert!(local_transition_times(1.0, -1.0, -1.0, -1.0, 0.5).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn local_transition_times_are_roots(
            mu1 in 0.1f64..3.0, extra in 0.1f64..3.0, split in 0.0f64..1.0,
            nu2 in 0.0f64..3.0, nu3 in 0.05f64..3.0, sign in any::<bool>()
        ) {
            let s = -(mu1 + extra);
            let (mu2, mu3) = (s * split, s * (1.0 - split));
            let m1 = if sign { mu1 } else { -mu1 };
            let (a, b) = local_transition_times(m1, mu2, mu3, nu2, nu3).unwrap();
            prop_assert!(0.0 < a && a < b && b < 1.0);
            let scale = (mu1 + extra + nu2 + nu3).powi(2);
            prop_assert!(local_model_f(m1, mu2, mu3, nu2, nu3, a).abs() <= 1e-12 * scale);
            prop_assert!(local_model_f(m1, mu2, mu3, nu2, nu3, b).abs() <= 1e-12 * scale);
            prop_assert!(local_model_f(m1, mu2, mu3, nu2, nu3, 0.0) > 0.0);
            prop_assert!(local_model_f(m1, mu2, mu3, nu2, nu3, 0.5 * (a + b)) < 0.0);
        }

        #[test]
        fn local_model_invariances(mu1 in -3.0f64..3.0, mu2 in -3.0f64..3.0, mu3 in -3.0f64..3.0, psi in -3.0f64..3.0) {
            prop_assume!(mu1 != 0.0 || mu2 + mu3 != 0.0);
            let base = LocalModelParams::new(mu1, mu2, mu3);
            let k = classify_local_model(&base, 1e-12).unwrap();
            let turned = LocalModelParams { psi, ..base };
            let flipped = LocalModelParams { mu1: -mu1, ..base };
            prop_assert_eq!(classify_local_model(&turned, 1e-12).unwrap(), k);
            prop_assert_eq!(classify_local_model(&flipped, 1e-12).unwrap(), k);
        }

        #[test]
        fn rank0_is_gauge_invariant(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rot = random_rotation(&mut rng);
            let probes = default_probes();
            for t in [0.0, 0.25, 0.8] {
                let k = classify_rank0(&p(), t, &probes).unwrap().kind;
                prop_assert_eq!(classify_rank0(&p().rotated(&rot), t, &probes).unwrap().kind, k);
            }
        }

        #[test]
        fn generic_points_are_regular(seed in any::<u64>(), t in 0.0f64..1.0) {
            let c = sample_configuration(reference().lengths(), seed).unwrap();
            prop_assert_eq!(rank_at(&c, t).unwrap(), 2);
            prop_assert!(detect_singular(&c, t, 1e-9).is_none());
        }
    }
}
