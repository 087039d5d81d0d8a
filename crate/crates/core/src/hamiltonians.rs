//! Bending Hamiltonians, their vector fields, Poisson brackets and flows.
//!
//! Vector fields follow the convention df = omega(X_f, .). With it the
//! field of ell_I^2 is 2 mu_I x rho_i on the edges of I (mu_I the resultant
//! of those edges) and the field of ell_I is that divided by 2 ell_I.

use nalgebra::Rotation3;
use nalgebra::Unit;

use crate::error::{Error, Result};
use crate::geom::{symplectic_form, Configuration, TangentVector, Vec3};

/// Nonempty proper subset of the edge indices, stored 0-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IndexSet {
    n: usize,
    members: Vec<usize>,
}

impl IndexSet {
    /// Builds from 1-based edge labels.
    pub fn new(n: usize, labels: &[usize]) -> Result<Self> {
        let mut members: Vec<usize> = Vec::with_capacity(labels.len());
        for &l in labels {
            if l == 0 || l > n {
                return Err(Error::ContractViolation(format!("edge label {l} outside 1..={n}")));
            }
            if !members.contains(&(l - 1)) {
                members.push(l - 1);
            }
        }
        members.sort_unstable();
        if members.is_empty() || members.len() == n {
            return Err(Error::ContractViolation(
                "index set must be a nonempty proper subset".into(),
            ));
        }
        Ok(Self { n, members })
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn contains(&self, i: usize) -> bool {
        self.members.binary_search(&i).is_ok()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn complement(&self) -> Self {
        Self {
            n: self.n,
            members: (0..self.n).filter(|i| !self.contains(*i)).collect(),
        }
    }

    pub fn labels(&self) -> Vec<usize> {
        self.members.iter().map(|i| i + 1).collect()
    }
}

/// Mixing parameter t of H_t = t ell_34^2 + (1-t) ell_45^2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilyParams {
    t: f64,
}

impl FamilyParams {
    pub fn new(t: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&t) {
            Ok(Self { t })
        } else {
            Err(Error::ContractViolation(format!("t = {t} outside [0, 1]")))
        }
    }

    pub fn t(&self) -> f64 {
        self.t
    }
}

/// Functions with closed-form Hamiltonian vector fields.
#[derive(Debug, Clone, PartialEq)]
pub enum Observable {
    EllSquared(IndexSet),
    Ell(IndexSet),
    /// t ell_34^2 + (1 - t) ell_45^2 on pentagons.
    Family(f64),
}

fn pentagon_sets() -> (IndexSet, IndexSet) {
    (
        IndexSet::new(5, &[3, 4]).unwrap(),
        IndexSet::new(5, &[4, 5]).unwrap(),
    )
}

fn check_size(rho: &Configuration, i: &IndexSet) -> Result<()> {
    if rho.len() != i.n() {
        return Err(Error::ContractViolation(format!(
            "index set for {} edges used on {} edges",
            i.n(),
            rho.len()
        )));
    }
    Ok(())
}

fn check_pentagon(rho: &Configuration) -> Result<()> {
    if rho.len() != 5 {
        return Err(Error::ContractViolation(format!(
            "family Hamiltonian needs 5 edges, got {}",
            rho.len()
        )));
    }
    Ok(())
}

/// Resultant of the edges in I.
pub fn resultant(rho: &Configuration, i: &IndexSet) -> Vec3 {
    i.members().iter().map(|k| rho.edge(*k)).sum()
}

pub fn ell(rho: &Configuration, i: &IndexSet) -> f64 {
    resultant(rho, i).norm()
}

pub fn ell_sq(rho: &Configuration, i: &IndexSet) -> f64 {
    resultant(rho, i).norm_squared()
}

fn ell_pair(rho: &Configuration, a: usize, b: usize) -> f64 {
    (rho.edge(a) + rho.edge(b)).norm_squared()
}

/// H_t = t ell_34^2 + (1 - t) ell_45^2.
pub fn family_h(rho: &Configuration, t: f64) -> f64 {
    t * ell_pair(rho, 2, 3) + (1.0 - t) * ell_pair(rho, 3, 4)
}

fn moment_guard(rho: &Configuration, value: f64) -> Result<()> {
    let total: f64 = rho.lengths().iter().sum();
    if value <= 1e-8 * total {
        Err(Error::VanishingMoment(value))
    } else {
        Ok(())
    }
}

impl Observable {
    pub fn value(&self, rho: &Configuration) -> Result<f64> {
        match self {
            Self::EllSquared(i) => {
                check_size(rho, i)?;
                Ok(ell_sq(rho, i))
            }
            Self::Ell(i) => {
                check_size(rho, i)?;
                Ok(ell(rho, i))
            }
            Self::Family(t) => {
                check_pentagon(rho)?;
                Ok(family_h(rho, *t))
            }
        }
    }

    /// Ambient gradient (one 3-vector per edge).
    pub fn gradient(&self, rho: &Configuration) -> Result<TangentVector> {
        match self {
            Self::EllSquared(i) => {
                check_size(rho, i)?;
                let mu = resultant(rho, i);
                Ok(masked(rho.len(), i, |_| mu * 2.0))
            }
            Self::Ell(i) => {
                check_size(rho, i)?;
                let mu = resultant(rho, i);
                moment_guard(rho, mu.norm())?;
                let u = mu / mu.norm();
                Ok(masked(rho.len(), i, |_| u))
            }
            Self::Family(t) => {
                check_pentagon(rho)?;
                let (a, b) = pentagon_sets();
                let ga = Self::EllSquared(a).gradient(rho)?;
                let gb = Self::EllSquared(b).gradient(rho)?;
                Ok(ga.scale(*t).add(&gb.scale(1.0 - t)))
            }
        }
    }
}

fn masked(n: usize, i: &IndexSet, f: impl Fn(usize) -> Vec3) -> TangentVector {
    TangentVector::new(
        (0..n)
            .map(|k| if i.contains(k) { f(k) } else { Vec3::zeros() })
            .collect(),
    )
}

/// X_f with df = omega(X_f, .).
pub fn hamiltonian_vector_field(rho: &Configuration, f: &Observable) -> Result<TangentVector> {
    match f {
        Observable::EllSquared(i) => {
            check_size(rho, i)?;
            let mu = resultant(rho, i);
            Ok(masked(rho.len(), i, |k| mu.cross(&rho.edge(k)) * 2.0))
        }
        Observable::Ell(i) => {
            check_size(rho, i)?;
            let mu = resultant(rho, i);
            let l = mu.norm();
            moment_guard(rho, l)?;
            Ok(masked(rho.len(), i, |k| mu.cross(&rho.edge(k)) / l))
        }
        Observable::Family(t) => {
            check_pentagon(rho)?;
            let (a, b) = pentagon_sets();
            let xa = hamiltonian_vector_field(rho, &Observable::EllSquared(a))?;
            let xb = hamiltonian_vector_field(rho, &Observable::EllSquared(b))?;
            Ok(xa.scale(*t).add(&xb.scale(1.0 - t)))
        }
    }
}

/// {f, g} = omega(X_f, X_g).
pub fn poisson_bracket(rho: &Configuration, f: &Observable, g: &Observable) -> Result<f64> {
    let xf = hamiltonian_vector_field(rho, f)?;
    let xg = hamiltonian_vector_field(rho, g)?;
    Ok(symplectic_form(rho, &xf, &xg))
}

/// Rotates the edges of I about their resultant by `theta` (the bending
/// flow of ell_I at time theta, period 2 pi).
pub fn bending_rotate(rho: &Configuration, i: &IndexSet, theta: f64) -> Result<Configuration> {
    check_size(rho, i)?;
    let mu = resultant(rho, i);
    let l = mu.norm();
    moment_guard(rho, l)?;
    let rot = Rotation3::from_axis_angle(&Unit::new_unchecked(mu / l), theta);
    let edges = rho
        .edges()
        .iter()
        .enumerate()
        .map(|(k, p)| if i.contains(k) { rot * p } else { *p })
        .collect();
    Ok(rho.with_edges(edges))
}
