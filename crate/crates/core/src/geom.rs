//! Side lengths, closed polygon configurations, tangent vectors, the SO(3)
//! vertical frame, the product symplectic form and configuration sampling.

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;

pub const MIN_EDGES: usize = 4;
pub const MAX_EDGES: usize = 12;
/// Relative tolerance on radii and closure at construction.
pub const CONSTRUCTION_TOL: f64 = 1e-12;
/// Relative tolerance on radii and closure after arithmetic.
pub const ARITHMETIC_TOL: f64 = 1e-10;
const SAMPLING_BUDGET: usize = 10_000;

/// Validated side lengths of an n-gon, 4 <= n <= 12.
#[derive(Debug, Clone, PartialEq)]
pub struct SideLengths {
    r: Vec<f64>,
}

/// Flags reported by [`validate_side_lengths`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LengthFlags {
    pub generic: bool,
    pub nonempty: bool,
    pub theorem_hypotheses_ok: bool,
}

impl SideLengths {
    pub fn new(r: &[f64]) -> Result<Self> {
        if r.len() < MIN_EDGES || r.len() > MAX_EDGES {
            return Err(Error::UnsupportedSize(r.len()));
        }
        if let Some(bad) = r.iter().find(|x| !x.is_finite() || **x <= 0.0) {
            return Err(Error::InvalidLengths(format!(
                "entry {bad} is not a positive finite real"
            )));
        }
        Ok(Self { r: r.to_vec() })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.r
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.r.iter().sum()
    }

    pub fn min(&self) -> f64 {
        self.r.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        let r: Vec<f64> = self.r.iter().map(|x| x * lambda).collect();
        Self::new(&r)
    }

    /// No signed sum of the lengths vanishes (exhaustive over all sign vectors).
    pub fn is_generic(&self) -> bool {
        let n = self.r.len();
        let tol = CONSTRUCTION_TOL * self.total();
        // Fixing the sign of the first edge halves the enumeration.
        (0u32..(1 << (n - 1))).all(|mask| {
            let mut s = self.r[0];
            for (k, x) in self.r[1..].iter().enumerate() {
                if mask & (1 << k) != 0 {
                    s += x;
                } else {
                    s -= x;
                }
            }
            s.abs() > tol
        })
    }

    /// Polygon inequality: the longest edge is at most the sum of the others.
    pub fn is_nonempty(&self) -> bool {
        let total = self.total();
        self.r.iter().all(|x| *x <= total - *x)
    }

    pub fn flags(&self) -> LengthFlags {
        LengthFlags {
            generic: self.is_generic(),
            nonempty: self.is_nonempty(),
            theorem_hypotheses_ok: TheoremHypotheses::new(self.clone()).is_ok(),
        }
    }
}

pub fn validate_side_lengths(r: &[f64]) -> Result<(SideLengths, LengthFlags)> {
    let lengths = SideLengths::new(r)?;
    let flags = lengths.flags();
    Ok((lengths, flags))
}

/// Pentagon side lengths satisfying the inequalities under which the
/// transition family is semitoric away from its two transition times.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoremHypotheses {
    lengths: SideLengths,
    pub j: f64,
    pub j_min: f64,
    pub j_max: f64,
}

impl TheoremHypotheses {
    pub fn new(lengths: SideLengths) -> Result<Self> {
        if lengths.len() != 5 {
            return Err(Error::HypothesisViolation(format!(
                "needs 5 edges, got {}",
                lengths.len()
            )));
        }
        let [r1, r2, r3, r4, r5] = lengths.as_slice().try_into().unwrap();
        let mut failed = Vec::new();
        if !(0.5 * r5 <= r4 && r4 < r5 && r5 < r3) {
            failed.push("r5/2 <= r4 < r5 < r3");
        }
        if !((r1 + r2 - r3).abs() < r5 - r4) {
            failed.push("|r1 + r2 - r3| < r5 - r4");
        }
        let d = (r1 - r2).abs();
        if !((r3 - r4 - r5).abs() < d && d < r3 + r4 - r5) {
            failed.push("|r3 - r4 - r5| < |r1 - r2| < r3 + r4 - r5");
        }
        if !failed.is_empty() {
            return Err(Error::HypothesisViolation(failed.join("; ")));
        }
        Ok(Self {
            lengths,
            j: r3 + r4 - r5,
            j_min: d,
            j_max: r1 + r2,
        })
    }

    pub fn from_slice(r: &[f64]) -> Result<Self> {
        Self::new(SideLengths::new(r)?)
    }

    pub fn lengths(&self) -> &SideLengths {
        &self.lengths
    }

    pub fn r(&self) -> [f64; 5] {
        self.lengths.as_slice().try_into().unwrap()
    }

    /// Largest edge length, used to set absolute tolerances.
    pub fn scale(&self) -> f64 {
        self.r().iter().cloned().fold(0.0, f64::max)
    }

    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        Self::new(self.lengths.scaled(lambda)?)
    }
}

/// Draws a hypothesis-satisfying tuple with lengths in roughly [1, 10],
/// keeping every inequality away from equality by a relative margin.
pub fn random_hypotheses<R: Rng>(rng: &mut R) -> TheoremHypotheses {
    let mut within = |lo: f64, hi: f64| lo + (hi - lo) * rng.random_range(0.1..0.9);
    loop {
        let r5 = within(1.0, 5.0);
        let r4 = within(0.5 * r5, r5);
        let r3 = within(r5, 2.5 * r5);
        let j = r3 + r4 - r5;
        let sum12 = within(r3 - (r5 - r4), r3 + (r5 - r4));
        let diff12 = within((r3 - r4 - r5).abs(), j);
        let (r1, r2) = if within(0.0, 1.0) < 0.5 {
            (0.5 * (sum12 + diff12), 0.5 * (sum12 - diff12))
        } else {
            (0.5 * (sum12 - diff12), 0.5 * (sum12 + diff12))
        };
        if let Ok(h) = TheoremHypotheses::from_slice(&[r1, r2, r3, r4, r5]) {
            return h;
        }
    }
}

/// Edge vectors of a closed polygon in 3-space.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    r: Vec<f64>,
    rho: Vec<Vec3>,
}

impl Configuration {
    /// Checks radii and closure at construction tolerance.
    pub fn new(lengths: &SideLengths, rho: Vec<Vec3>) -> Result<Self> {
        Self::with_tolerance(lengths.as_slice(), rho, CONSTRUCTION_TOL)
    }

    pub fn with_tolerance(r: &[f64], rho: Vec<Vec3>, tol: f64) -> Result<Self> {
        if r.len() != rho.len() {
            return Err(Error::ContractViolation(format!(
                "{} lengths for {} edges",
                r.len(),
                rho.len()
            )));
        }
        let c = Self {
            r: r.to_vec(),
            rho,
        };
        let (radius, closure) = c.residuals();
        if radius > tol || closure > tol {
            return Err(Error::ContractViolation(format!(
                "radius residual {radius:e}, closure residual {closure:e}"
            )));
        }
        Ok(c)
    }

    /// Builds from edges produced by exact-on-paper arithmetic; verified at
    /// the after-arithmetic tolerance.
    pub(crate) fn derived(r: &[f64], rho: Vec<Vec3>) -> Result<Self> {
        Self::with_tolerance(r, rho, ARITHMETIC_TOL)
    }

    /// Edge vectors whose lengths define the configuration.
    pub fn from_edges(rho: Vec<Vec3>) -> Result<Self> {
        let r: Vec<f64> = rho.iter().map(|v| v.norm()).collect();
        SideLengths::new(&r)?;
        Self::with_tolerance(&r, rho, CONSTRUCTION_TOL)
    }

    /// Maximum relative radius error and relative closure defect.
    pub fn residuals(&self) -> (f64, f64) {
        let radius = self
            .r
            .iter()
            .zip(&self.rho)
            .map(|(r, v)| (v.norm() - r).abs() / r)
            .fold(0.0, f64::max);
        let closure = self.rho.iter().sum::<Vec3>().norm() / self.r.iter().sum::<f64>();
        (radius, closure)
    }

    pub fn edges(&self) -> &[Vec3] {
        &self.rho
    }

    pub fn edge(&self, i: usize) -> Vec3 {
        self.rho[i]
    }

    pub fn lengths(&self) -> &[f64] {
        &self.r
    }

    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    pub fn scale(&self) -> f64 {
        self.r.iter().cloned().fold(0.0, f64::max)
    }

    pub fn rotated(&self, rot: &Matrix3<f64>) -> Self {
        Self {
            r: self.r.clone(),
            rho: self.rho.iter().map(|v| rot * v).collect(),
        }
    }

    pub(crate) fn with_edges(&self, rho: Vec<Vec3>) -> Self {
        Self {
            r: self.r.clone(),
            rho,
        }
    }

    /// Largest componentwise difference from another configuration.
    pub fn max_diff(&self, other: &Self) -> f64 {
        self.rho
            .iter()
            .zip(&other.rho)
            .map(|(a, b)| (a - b).amax())
            .fold(0.0, f64::max)
    }

    /// Projects a displaced configuration back onto the constraint manifold:
    /// normalise each edge to its sphere, then restore closure by a Newton
    /// correction in the tangent planes of the spheres.
    pub fn retract(&self, raw: &[Vec3]) -> Result<Self> {
        retract(&self.r, raw)
    }

    pub fn displaced(&self, v: &TangentVector, h: f64) -> Result<Self> {
        let raw: Vec<Vec3> = self.rho.iter().zip(&v.v).map(|(p, d)| p + d * h).collect();
        self.retract(&raw)
    }
}

pub fn retract(r: &[f64], raw: &[Vec3]) -> Result<Configuration> {
    let total: f64 = r.iter().sum();
    let base: Vec<Vec3> = raw
        .iter()
        .zip(r)
        .map(|(v, ri)| {
            let n = v.norm();
            if n == 0.0 {
                Err(Error::NumericalFailure("zero edge in retraction".into()))
            } else {
                Ok(v * (ri / n))
            }
        })
        .collect::<Result<_>>()?;
    let proj: Vec<Matrix3<f64>> = base
        .iter()
        .zip(r)
        .map(|(p, ri)| Matrix3::identity() - p * p.transpose() / (ri * ri))
        .collect();
    let mut lambda = Vec3::zeros();
    let mut rho = base.clone();
    for _ in 0..50 {
        let mut f = Vec3::zeros();
        let mut jac = Matrix3::zeros();
        for i in 0..r.len() {
            let u = base[i] + proj[i] * lambda;
            let nu = u.norm();
            let uh = u / nu;
            rho[i] = uh * r[i];
            f += rho[i];
            jac += (Matrix3::identity() - uh * uh.transpose()) * proj[i] * (r[i] / nu);
        }
        if f.norm() < 1e-15 * total {
            return Ok(Configuration {
                r: r.to_vec(),
                rho,
            });
        }
        let step = jac
            .lu()
            .solve(&(-f))
            .ok_or_else(|| Error::NumericalFailure("singular retraction Jacobian".into()))?;
        lambda += step;
    }
    let defect = rho.iter().sum::<Vec3>().norm();
    if defect < 1e-13 * total {
        Ok(Configuration {
            r: r.to_vec(),
            rho,
        })
    } else {
        Err(Error::NumericalFailure(format!(
            "retraction did not converge (defect {defect:e})"
        )))
    }
}

/// n vectors with v_i orthogonal to rho_i and zero sum.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    pub v: Vec<Vec3>,
}

impl TangentVector {
    pub fn new(v: Vec<Vec3>) -> Self {
        Self { v }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            v: vec![Vec3::zeros(); n],
        }
    }

    /// Unit vector along axis `k` on edge `i`.
    pub fn basis(n: usize, i: usize, k: usize) -> Self {
        let mut t = Self::zeros(n);
        t.v[i][k] = 1.0;
        t
    }

    /// Largest of the relative tangency and closure residuals.
    pub fn tangency_residual(&self, rho: &Configuration) -> f64 {
        let norm = self.norm().max(f64::MIN_POSITIVE);
        let radial = self
            .v
            .iter()
            .zip(rho.edges())
            .zip(rho.lengths())
            .map(|((v, p), r)| v.dot(p).abs() / r)
            .fold(0.0, f64::max);
        let closure = self.v.iter().sum::<Vec3>().norm();
        radial.max(closure) / norm
    }

    pub fn is_tangent_at(&self, rho: &Configuration, tol: f64) -> bool {
        self.tangency_residual(rho) <= tol
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.v.iter().zip(&other.v).map(|(a, b)| a.dot(b)).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            v: self.v.iter().map(|x| x * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            v: self.v.iter().zip(&other.v).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn amax(&self) -> f64 {
        self.v.iter().map(|x| x.amax()).fold(0.0, f64::max)
    }
}

/// Infinitesimal generators of the diagonal SO(3) action: V_k = e_k x rho_i.
#[derive(Debug, Clone, PartialEq)]
pub struct VerticalFrame {
    pub v: [TangentVector; 3],
}

impl VerticalFrame {
    pub fn at(rho: &Configuration) -> Self {
        let gen = |k: usize| {
            let e = Vec3::ith(k, 1.0);
            TangentVector::new(rho.edges().iter().map(|p| e.cross(p)).collect())
        };
        Self {
            v: [gen(0), gen(1), gen(2)],
        }
    }

    pub fn rank(&self, tol: f64) -> usize {
        let n = self.v[0].v.len();
        let m = nalgebra::DMatrix::from_fn(3, 3 * n, |k, c| self.v[k].v[c / 3][c % 3]);
        let sv = m.singular_values();
        let top = sv.max();
        sv.iter().filter(|s| **s > tol * top.max(f64::MIN_POSITIVE)).count()
    }
}

/// omega(u, w) = sum_i rho_i . (u_i x w_i) / r_i^2.
pub fn symplectic_form(rho: &Configuration, u: &TangentVector, w: &TangentVector) -> f64 {
    rho.edges()
        .iter()
        .zip(rho.lengths())
        .zip(u.v.iter().zip(&w.v))
        .map(|((p, r), (a, b))| p.dot(&a.cross(b)) / (r * r))
        .sum()
}

/// Canonical representative of the SO(3)-orbit: rho_1 along +x and the
/// first edge not parallel to rho_1 in the upper half of the xy-plane.
pub fn gauge_fix(rho: &Configuration) -> Configuration {
    let e1 = rho.edge(0).normalize();
    let tol = 1e-12;
    let pivot = rho
        .edges()
        .iter()
        .skip(1)
        .map(|v| v - e1 * e1.dot(v))
        .find(|w| w.norm() > tol * rho.scale());
    let e2 = match pivot {
        Some(w) => w.normalize(),
        None => {
            // Collinear polygon: any completion of the frame works.
            let a = if e1.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
            (a - e1 * e1.dot(&a)).normalize()
        }
    };
    let e3 = e1.cross(&e2);
    let frame = Matrix3::from_rows(&[e1.transpose(), e2.transpose(), e3.transpose()]);
    rho.rotated(&frame)
}

fn triangle_apex(d: f64, a: f64, b: f64) -> (f64, f64) {
    // Apex of a triangle with base d along +x and sides a (from origin), b.
    let x = (d * d + a * a - b * b) / (2.0 * d);
    (x, (a * a - x * x).max(0.0).sqrt())
}

fn unit_perp(v: &Vec3) -> Vec3 {
    let a = if v.x.abs() < 0.9 * v.norm() {
        Vec3::x()
    } else {
        Vec3::y()
    };
    (a - v * (v.dot(&a) / v.norm_squared())).normalize()
}

/// Assembles a polygon from fan-diagonal lengths d_k = |rho_1 + ... + rho_{k+1}|
/// (k = 1..n-3) and bending angles (n-3 of them).
///
/// The first angle rotates rho_1 about the first diagonal, the intermediate
/// angles are dihedral angles between consecutive fan triangles, and the last
/// angle rotates rho_{n-1} about the last diagonal. For n = 4 the single angle
/// rotates rho_1.
pub fn assemble_from_diagonals(
    lengths: &SideLengths,
    diagonals: &[f64],
    angles: &[f64],
) -> Result<Configuration> {
    let r = lengths.as_slice();
    let n = r.len();
    if diagonals.len() != n - 3 || angles.len() != n - 3 {
        return Err(Error::ContractViolation(format!(
            "expected {} diagonals and angles",
            n - 3
        )));
    }
    let total = lengths.total();
    let slack = 1e-12 * total;
    let mut prev = r[0];
    for (k, d) in diagonals.iter().enumerate() {
        let next_edge = r[k + 1];
        if *d <= 0.0 || *d < (prev - next_edge).abs() - slack || *d > prev + next_edge + slack {
            return Err(Error::ContractViolation(format!("diagonal {} infeasible", k + 1)));
        }
        prev = *d;
    }
    let last = diagonals[n - 4];
    if last < (r[n - 2] - r[n - 1]).abs() - slack || last > r[n - 2] + r[n - 1] + slack {
        return Err(Error::ContractViolation("final triangle infeasible".into()));
    }

    // Spine of diagonals.
    let mut diag = vec![Vec3::new(diagonals[0], 0.0, 0.0)];
    let mut perp = vec![Vec3::y()];
    for k in 1..n - 3 {
        let dk = diag[k - 1];
        let uk = dk.normalize();
        let (x, y) = triangle_apex(dk.norm(), diagonals[k], r[k + 1]);
        let w = if k == 1 {
            perp[0]
        } else {
            let phi = angles[k - 1];
            perp[k - 1] * phi.cos() + uk.cross(&perp[k - 1]) * phi.sin()
        };
        let next = uk * x + w * y;
        let nu = next.normalize();
        let away = dk - nu * nu.dot(&dk);
        let p = if away.norm() > 1e-12 * total {
            away.normalize()
        } else {
            unit_perp(&next)
        };
        diag.push(next);
        perp.push(p);
    }

    let mut rho = vec![Vec3::zeros(); n];
    // First apex.
    let d1 = diag[0];
    let (x1, y1) = triangle_apex(d1.norm(), r[0], r[1]);
    let th = angles[0];
    rho[0] = Vec3::new(x1, y1 * th.cos(), y1 * th.sin());
    rho[1] = d1 - rho[0];
    for k in 1..n - 3 {
        rho[k + 1] = diag[k] - diag[k - 1];
    }
    // Closing apex.
    let dl = diag[n - 4];
    let ul = dl.normalize();
    let (xl, yl) = triangle_apex(dl.norm(), r[n - 2], r[n - 1]);
    let pl = perp[n - 4];
    let phi = if n == 4 { 0.0 } else { angles[n - 4] };
    let w = pl * phi.cos() + ul.cross(&pl) * phi.sin();
    rho[n - 2] = -ul * xl + w * yl;
    rho[n - 1] = -dl - rho[n - 2];
    Configuration::derived(r, rho)
}

/// Feasible interval for the k-th fan diagonal given the previous one.
fn diagonal_interval(r: &[f64], k: usize, prev: f64) -> (f64, f64) {
    let rest = &r[k + 2..];
    let sum: f64 = rest.iter().sum();
    let max = rest.iter().cloned().fold(0.0, f64::max);
    let lo = (prev - r[k + 1]).abs().max(2.0 * max - sum).max(0.0);
    let hi = (prev + r[k + 1]).min(sum);
    (lo, hi)
}

/// Maps a point of the unit cube [0,1)^{2n-6} to a configuration: the first
/// n-3 coordinates pick diagonals uniformly in their feasible intervals, the
/// rest pick bending angles. Returns None when an interval is empty.
pub fn configuration_from_unit_cube(lengths: &SideLengths, u: &[f64]) -> Option<Configuration> {
    let r = lengths.as_slice();
    let n = r.len();
    let m = n - 3;
    let mut diags = Vec::with_capacity(m);
    let mut prev = r[0];
    for k in 0..m {
        let (lo, hi) = diagonal_interval(r, k, prev);
        if hi < lo || hi <= 0.0 {
            return None;
        }
        let d = (lo + (hi - lo) * u[k]).max(1e-300);
        diags.push(d);
        prev = d;
    }
    let angles: Vec<f64> = u[m..2 * m]
        .iter()
        .map(|x| std::f64::consts::TAU * x)
        .collect();
    assemble_from_diagonals(lengths, &diags, &angles).ok()
}

/// Seeded sample in diagonal-and-bending coordinates (heuristic coverage, not
/// Liouville-uniform).
pub fn sample_configuration(lengths: &SideLengths, seed: u64) -> Result<Configuration> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_with_rng(lengths, &mut rng)
}

pub fn sample_with_rng<R: Rng>(lengths: &SideLengths, rng: &mut R) -> Result<Configuration> {
    if !lengths.is_nonempty() {
        return Err(Error::EmptySpace);
    }
    let dim = 2 * (lengths.len() - 3);
    for _ in 0..SAMPLING_BUDGET {
        let u: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
        if let Some(c) = configuration_from_unit_cube(lengths, &u) {
            return Ok(c);
        }
    }
    Err(Error::SamplingFailed(SAMPLING_BUDGET))
}

const PRIMES: [u64; 18] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61,
];

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut x = 0.0;
    while i > 0 {
        x += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    x
}

/// `count` samples from a randomly shifted Halton sequence in the same
/// coordinates; the shift is drawn from `seed`. Low-discrepancy points cover
/// the momentum image far more evenly than independent draws.
pub fn sample_batch(lengths: &SideLengths, count: usize, seed: u64) -> Result<Vec<Configuration>> {
    if !lengths.is_nonempty() {
        return Err(Error::EmptySpace);
    }
    let dim = 2 * (lengths.len() - 3);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
    let mut out = Vec::with_capacity(count);
    let mut misses = 0usize;
    let mut i = 1u64;
    while out.len() < count {
        let u: Vec<f64> = (0..dim)
            .map(|k| (radical_inverse(i, PRIMES[k]) + shift[k]).fract())
            .collect();
        i += 1;
        match configuration_from_unit_cube(lengths, &u) {
            Some(c) => out.push(c),
            None => {
                misses += 1;
                if misses > SAMPLING_BUDGET.max(count) {
                    return Err(Error::SamplingFailed(misses));
                }
            }
        }
    }
    Ok(out)
}

/// The planar transition pentagon: edges 3, 4, 5 collinear along the x-axis
/// and the triangle of edges 1, 2 above them.
pub fn build_transition_point(h: &TheoremHypotheses) -> Result<Configuration> {
    let [r1, r2, r3, r4, r5] = h.r();
    let j = h.j;
    let radicand = ((r1 + j).powi(2) - r2 * r2) * (r2 * r2 - (r1 - j).powi(2));
    if radicand < 0.0 {
        return Err(Error::HypothesisViolation(format!(
            "negative radicand {radicand:e}"
        )));
    }
    let s = radicand.sqrt() / (2.0 * j);
    let rho = vec![
        Vec3::new((r1 * r1 - r2 * r2 + j * j) / (2.0 * j), s, 0.0),
        Vec3::new((r2 * r2 - r1 * r1 + j * j) / (2.0 * j), -s, 0.0),
        Vec3::new(-r3, 0.0, 0.0),
        Vec3::new(-r4, 0.0, 0.0),
        Vec3::new(r5, 0.0, 0.0),
    ];
    Configuration::derived(h.lengths().as_slice(), rho)
}

/// A uniformly random rotation (via a random unit quaternion).
pub fn random_rotation<R: Rng>(rng: &mut R) -> Matrix3<f64> {
    loop {
        let q = nalgebra::Vector4::from_fn(|_, _| rng.random_range(-1.0..1.0));
        let n = q.norm();
        if n > 1e-3 && n <= 1.0 {
            let q = nalgebra::Quaternion::new(q[0], q[1], q[2], q[3]);
            return *nalgebra::UnitQuaternion::from_quaternion(q)
                .to_rotation_matrix()
                .matrix();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn reference() -> TheoremHypotheses {
        TheoremHypotheses::from_slice(&[3.0, 1.0, 4.0, 2.0, 3.0]).unwrap()
    }

    fn random_tangent(rho: &Configuration, rng: &mut ChaCha8Rng) -> TangentVector {
        // Project a random ambient vector onto the tangent space.
        let basis = crate::linalg::tangent_basis(rho);
        let mut t = TangentVector::zeros(rho.len());
        for b in &basis {
            t = t.add(&b.scale(rng.random_range(-1.0..1.0)));
        }
        t
    }

    #[test]
    fn reference_flags() {
        let (_, f) = validate_side_lengths(&[3.0, 1.0, 4.0, 2.0, 3.0]).unwrap();
        assert_eq!(
            f,
            LengthFlags {
                generic: true,
                nonempty: true,
                theorem_hypotheses_ok: true
            }
        );
    }

    #[test]
    fn square_is_not_generic() {
        let (_, f) = validate_side_lengths(&[1.0; 4]).unwrap();
        assert!(!f.generic);
        assert!(f.nonempty);
    }

    #[test]
    fn long_edge_is_empty() {
        let (_, f) = validate_side_lengths(&[10.0, 1.0, 1.0, 1.0, 1.0]).unwrap();
        assert!(!f.nonempty);
    }

    #[test]
    fn invalid_entries_rejected() {
        assert!(matches!(
            validate_side_lengths(&[1.0, -1.0, 1.0, 1.0]),
            Err(Error::InvalidLengths(_))
        ));
        assert!(matches!(
            validate_side_lengths(&[1.0, f64::NAN, 1.0, 1.0]),
            Err(Error::InvalidLengths(_))
        ));
        assert!(matches!(
            validate_side_lengths(&[1.0; 13]),
            Err(Error::UnsupportedSize(13))
        ));
        assert!(matches!(
            validate_side_lengths(&[1.0; 3]),
            Err(Error::UnsupportedSize(3))
        ));
    }

    #[test]
    fn hypotheses_reject_r4_above_r5() {
        let err = TheoremHypotheses::from_slice(&[3.0, 1.0, 4.0, 3.5, 3.0]).unwrap_err();
        assert!(matches!(err, Error::HypothesisViolation(_)));
    }

    #[test]
    fn transition_point_reference() {
        let p = build_transition_point(&reference()).unwrap();
        let s = 35f64.sqrt() / 6.0;
        let expected = [
            Vec3::new(17.0 / 6.0, s, 0.0),
            Vec3::new(1.0 / 6.0, -s, 0.0),
            Vec3::new(-4.0, 0.0, 0.0),
            Vec3::new(-2.0, 0.0, 0.0),
            Vec3::new(3.0, 0.0, 0.0),
        ];
        for (a, b) in p.edges().iter().zip(&expected) {
            assert_abs_diff_eq!((a - b).amax(), 0.0, epsilon = 1e-14);
        }
        assert_abs_diff_eq!(p.edge(0).norm(), 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(p.edge(1).norm(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn transition_point_diagonals() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let h = random_hypotheses(&mut rng);
            let p = build_transition_point(&h).unwrap();
            let [_, _, r3, r4, r5] = h.r();
            assert_abs_diff_eq!((p.edge(0) + p.edge(1)).norm(), h.j, epsilon = 1e-12);
            assert_abs_diff_eq!((p.edge(2) + p.edge(3)).norm(), r3 + r4, epsilon = 1e-12);
            assert_abs_diff_eq!((p.edge(3) + p.edge(4)).norm(), r5 - r4, epsilon = 1e-12);
        }
    }

    #[test]
    fn sampler_respects_invariants_and_covers_diagonal_range() {
        let h = reference();
        let c = sample_configuration(h.lengths(), 5).unwrap();
        let (radius, closure) = c.residuals();
        assert!(radius < ARITHMETIC_TOL && closure < ARITHMETIC_TOL);

        let batch = sample_batch(h.lengths(), 100_000, 3).unwrap();
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for c in &batch {
            let d = (c.edge(0) + c.edge(1)).norm();
            lo = lo.min(d);
            hi = hi.max(d);
        }
        assert!(lo >= 2.0 - 1e-12 && hi <= 4.0 + 1e-12);
        assert!(lo <= 2.01 && hi >= 3.99);
    }

    #[test]
    fn sampler_rejects_empty_space() {
        let l = SideLengths::new(&[10.0, 1.0, 1.0, 1.0, 1.0]).unwrap();
        assert_eq!(sample_configuration(&l, 0), Err(Error::EmptySpace));
        assert_eq!(sample_batch(&l, 10, 0).unwrap_err(), Error::EmptySpace);
    }

    #[test]
    fn sampler_handles_other_sizes() {
        for r in [
            vec![1.0, 1.5, 2.0, 1.2],
            vec![1.0, 2.0, 1.5, 1.1, 0.9, 1.3],
            vec![1.0; 7],
        ] {
            let l = SideLengths::new(&r).unwrap();
            for seed in 0..20 {
                let c = sample_configuration(&l, seed).unwrap();
                let (radius, closure) = c.residuals();
                assert!(radius < ARITHMETIC_TOL && closure < ARITHMETIC_TOL);
            }
        }
    }

    #[test]
    fn form_of_vertical_vectors_matches_second_summation() {
        let p = build_transition_point(&reference()).unwrap();
        let fr = VerticalFrame::at(&p);
        let direct = symplectic_form(&p, &fr.v[0], &fr.v[1]);
        // Components of e_1 x p and e_2 x p written out by hand.
        let mut alt = 0.0;
        for (i, e) in p.edges().iter().enumerate() {
            let r2 = p.lengths()[i].powi(2);
            let u = [0.0, -e.z, e.y];
            let w = [e.z, 0.0, -e.x];
            let c = [
                u[1] * w[2] - u[2] * w[1],
                u[2] * w[0] - u[0] * w[2],
                u[0] * w[1] - u[1] * w[0],
            ];
            alt += (e.x * c[0] + e.y * c[1] + e.z * c[2]) / r2;
        }
        assert_abs_diff_eq!(direct, alt, epsilon = 1e-13);
    }

    #[test]
    fn gauge_fix_reference_point() {
        let p = build_transition_point(&reference()).unwrap();
        let g = gauge_fix(&p);
        assert_abs_diff_eq!((g.edge(0) - Vec3::new(3.0, 0.0, 0.0)).amax(), 0.0, epsilon = 1e-14);
        // Rotation about z by minus the angle of rho_1, then a half-turn about
        // x if rho_2 ends up below the axis.
        let ang = p.edge(0).y.atan2(p.edge(0).x);
        let rot = nalgebra::Rotation3::from_axis_angle(&Vec3::z_axis(), -ang);
        let mut expect = p.rotated(rot.matrix());
        if expect.edge(1).y < 0.0 {
            let flip = Matrix3::from_diagonal(&Vec3::new(1.0, -1.0, -1.0));
            expect = expect.rotated(&flip);
        }
        assert!(g.max_diff(&expect) < 1e-13);
        assert!(g.edge(1).y >= 0.0);
    }

    #[test]
    fn gauge_fix_identity_on_fixed() {
        let p = gauge_fix(&build_transition_point(&reference()).unwrap());
        assert!(gauge_fix(&p).max_diff(&p) < 1e-14);
    }

    #[test]
    fn retraction_fixes_points_on_manifold() {
        let h = reference();
        let c = sample_configuration(h.lengths(), 9).unwrap();
        let back = c.retract(c.edges()).unwrap();
        assert!(back.max_diff(&c) < 1e-13);
    }

    #[test]
    fn vertical_frame_rank_three_on_generic_points() {
        let h = reference();
        let c = sample_configuration(h.lengths(), 1).unwrap();
        assert_eq!(VerticalFrame::at(&c).rank(1e-10), 3);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn vertical_frame_is_tangent(seed in any::<u64>()) {
            let c = sample_configuration(reference().lengths(), seed).unwrap();
            for v in &VerticalFrame::at(&c).v {
                prop_assert!(v.is_tangent_at(&c, ARITHMETIC_TOL));
            }
        }

        #[test]
        fn form_is_bilinear_and_antisymmetric(seed in any::<u64>(), alpha in -3.0f64..3.0) {
            let c = sample_configuration(reference().lengths(), seed).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
            let u = random_tangent(&c, &mut rng);
            let u2 = random_tangent(&c, &mut rng);
            let w = random_tangent(&c, &mut rng);
            let lhs = symplectic_form(&c, &u.scale(alpha).add(&u2), &w);
            let rhs = alpha * symplectic_form(&c, &u, &w) + symplectic_form(&c, &u2, &w);
            prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs()));
            prop_assert!(symplectic_form(&c, &u, &u).abs() < 1e-12);
            let fw = symplectic_form(&c, &u, &w);
            let bw = symplectic_form(&c, &w, &u);
            prop_assert!((fw + bw).abs() < 1e-12 * (1.0 + fw.abs()));
        }

        #[test]
        fn gauge_fix_is_rotation_invariant_and_idempotent(seed in any::<u64>()) {
            let c = sample_configuration(reference().lengths(), seed).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
            let rot = random_rotation(&mut rng);
            let g = gauge_fix(&c);
            prop_assert!(gauge_fix(&c.rotated(&rot)).max_diff(&g) < 1e-10);
            prop_assert!(gauge_fix(&g).max_diff(&g) < 1e-12);
        }

        #[test]
        fn retraction_lands_on_manifold(seed in any::<u64>(), h in 1e-4f64..0.3) {
            let c = sample_configuration(reference().lengths(), seed).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let noise: Vec<Vec3> = c.edges().iter()
                .map(|p| p + Vec3::from_fn(|_, _| rng.random_range(-h..h)))
                .collect();
            let back = c.retract(&noise).unwrap();
            let (radius, closure) = back.residuals();
            prop_assert!(radius < 1e-13 && closure < 1e-13);
        }

        #[test]
        fn random_hypotheses_are_valid(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let h = random_hypotheses(&mut rng);
            prop_assert!(h.lengths().flags().theorem_hypotheses_ok);
        }
    }
}
