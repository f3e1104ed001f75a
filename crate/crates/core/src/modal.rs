//! Observables as orthogonal eigenspace decompositions, their order, commutants,
//! true-atom sets and the determinate sublattice of a state.

use std::collections::BTreeSet;

use num_rational::BigRational;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{generate_sublattice, Subspace};
use crate::linalg::{ExactMatrix, GaussianRational};

/// A self-adjoint observable, known only through its eigenspaces.
#[derive(Clone, Debug)]
pub struct Observable {
    pub name: String,
    eigenspaces: Vec<Subspace>,
    projectors: Vec<ExactMatrix>,
    pub labels: Option<Vec<BigRational>>,
}

impl Observable {
    pub fn new(
        name: impl Into<String>,
        eigenspaces: Vec<Subspace>,
        labels: Option<Vec<BigRational>>,
    ) -> Result<Self> {
        let name = name.into();
        let bad = |reason: &str| Error::InvalidObservable {
            observable: name.clone(),
            reason: reason.into(),
        };
        let Some(first) = eigenspaces.first() else {
            return Err(bad("no eigenspaces"));
        };
        let n = first.ambient();
        if eigenspaces.len() > n {
            return Err(bad("more eigenspaces than the dimension"));
        }
        for r in &eigenspaces {
            if r.ambient() != n {
                return Err(Error::AmbientMismatch(n, r.ambient()));
            }
            if r.is_zero() {
                return Err(bad("zero eigenspace"));
            }
        }
        for i in 0..eigenspaces.len() {
            for j in i + 1..eigenspaces.len() {
                if !eigenspaces[i].is_orthogonal_to(&eigenspaces[j]) {
                    return Err(Error::OrthogonalityViolation(i, j, name.clone()));
                }
            }
        }
        let total = eigenspaces
            .iter()
            .fold(Subspace::zero(n), |acc, r| acc.join(r));
        if !total.is_full() {
            return Err(bad("eigenspaces do not span the whole space"));
        }
        if let Some(l) = &labels {
            if l.len() != eigenspaces.len() {
                return Err(bad("label count differs from eigenspace count"));
            }
            let distinct: BTreeSet<&BigRational> = l.iter().collect();
            if distinct.len() != l.len() {
                return Err(bad("eigenvalue labels are not distinct"));
            }
        }
        let projectors = eigenspaces.iter().map(Subspace::projector).collect();
        Ok(Self {
            name,
            eigenspaces,
            projectors,
            labels,
        })
    }

    /// The coarsest observable, with the whole space as its only eigenspace.
    pub fn trivial(name: impl Into<String>, n: usize) -> Self {
        Self::new(name, vec![Subspace::full(n)], None).expect("whole space is valid")
    }

    pub fn dimension(&self) -> usize {
        self.eigenspaces[0].ambient()
    }

    pub fn eigenspaces(&self) -> &[Subspace] {
        &self.eigenspaces
    }

    pub fn projectors(&self) -> &[ExactMatrix] {
        &self.projectors
    }

    pub fn is_nondegenerate(&self) -> bool {
        self.eigenspaces.iter().all(Subspace::is_ray)
    }

    /// Equality as decompositions, ignoring order and labels.
    pub fn same_decomposition(&self, other: &Observable) -> bool {
        let a: BTreeSet<&Subspace> = self.eigenspaces.iter().collect();
        let b: BTreeSet<&Subspace> = other.eigenspaces.iter().collect();
        a == b
    }

    pub fn eigenspace_index(&self, r: &Subspace) -> Option<usize> {
        self.eigenspaces.iter().position(|x| x == r)
    }

    /// Checks that `matrix` acts as the scalar label on every eigenspace.
    pub fn validate_matrix(&self, matrix: &ExactMatrix) -> Result<()> {
        let bad = |reason: String| Error::InvalidObservable {
            observable: self.name.clone(),
            reason,
        };
        let Some(labels) = &self.labels else {
            return Err(bad("matrix given without eigenvalue labels".into()));
        };
        let n = self.dimension();
        if matrix.rows() != n || matrix.cols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: matrix.rows(),
            });
        }
        if matrix.conj_transpose() != *matrix {
            return Err(bad("matrix is not self-adjoint".into()));
        }
        for (k, (r, lambda)) in self.eigenspaces.iter().zip(labels).enumerate() {
            let lambda = GaussianRational::new(lambda.clone(), BigRational::from_integer(0.into()));
            for v in r.basis() {
                let image = matrix.mul_vec(v)?;
                let scaled: Vec<GaussianRational> = v.iter().map(|x| x * &lambda).collect();
                if image != scaled {
                    return Err(bad(format!(
                        "matrix is not scalar {} on eigenspace {k}",
                        lambda
                    )));
                }
            }
        }
        Ok(())
    }
}

/// `rho <= rho'`: every eigenspace of `rho` is a join of eigenspaces of `rho'`.
pub fn observable_leq(rho: &Observable, rho_prime: &Observable) -> bool {
    let n = rho.dimension();
    rho.eigenspaces().iter().all(|r| {
        let joined = rho_prime
            .eigenspaces()
            .iter()
            .filter(|q| q.leq(r))
            .fold(Subspace::zero(n), |acc, q| acc.join(q));
        joined == *r
    })
}

/// `F` commutes with every eigenprojector of the observable.
pub fn in_commutant(op: &ExactMatrix, rho: &Observable) -> bool {
    first_noncommuting(op, rho).is_none()
}

/// Index of the first eigenspace whose projector fails to commute with `op`.
pub fn first_noncommuting(op: &ExactMatrix, rho: &Observable) -> Option<usize> {
    rho.projectors().iter().position(|p| {
        let a = op.mul(p).expect("square operators");
        let b = p.mul(op).expect("square operators");
        a != b
    })
}

/// The nonzero projections of a state onto the eigenspaces of an observable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrueAtomSet {
    atoms: Vec<Subspace>,
    eigenspace_of: Vec<usize>,
    ambient: usize,
}

impl TrueAtomSet {
    pub fn atoms(&self) -> &[Subspace] {
        &self.atoms
    }

    pub fn eigenspace_of(&self) -> &[usize] {
        &self.eigenspace_of
    }

    /// The atom lying in eigenspace `r`, if the state has a component there.
    pub fn atom_in(&self, r: usize) -> Option<&Subspace> {
        self.eigenspace_of
            .iter()
            .position(|&k| k == r)
            .map(|k| &self.atoms[k])
    }

    /// The atoms together with the zero subspace.
    pub fn augmented(&self) -> BTreeSet<Subspace> {
        let mut s: BTreeSet<Subspace> = self.atoms.iter().cloned().collect();
        s.insert(Subspace::zero(self.ambient));
        s
    }

    /// The orthocomplement of the join of all atoms.
    pub fn remainder(&self) -> Subspace {
        self.atoms
            .iter()
            .fold(Subspace::zero(self.ambient), |acc, a| acc.join(a))
            .ortho()
    }
}

pub fn compute_atoms(e: &Subspace, rho: &Observable) -> TrueAtomSet {
    let mut atoms = Vec::new();
    let mut eigenspace_of = Vec::new();
    for (k, r) in rho.eigenspaces().iter().enumerate() {
        let a = e.project_onto(r);
        if !a.is_zero() {
            atoms.push(a);
            eigenspace_of.push(k);
        }
    }
    TrueAtomSet {
        atoms,
        eigenspace_of,
        ambient: e.ambient(),
    }
}

/// `P` belongs to D(e,R) when every atom lies in `P` or in its orthocomplement.
pub fn in_determinate_sublattice(p: &Subspace, atoms: &TrueAtomSet) -> bool {
    let perp = p.ortho();
    atoms.atoms().iter().all(|a| a.leq(p) || a.leq(&perp))
}

/// Enumerates D(e,R) as the lattice generated by the atoms and the remainder
/// block, optionally split further by rays declared inside the remainder.
pub fn enumerate_determinate_sublattice(
    atoms: &TrueAtomSet,
    remainder_rays: &[Subspace],
    cap: usize,
) -> Result<Vec<Subspace>> {
    let mut seeds: Vec<Subspace> = atoms.atoms().to_vec();
    let rem = atoms.remainder();
    if !rem.is_zero() {
        seeds.push(rem.clone());
    }
    for (k, ray) in remainder_rays.iter().enumerate() {
        if !ray.leq(&rem) {
            return Err(Error::Validation {
                field: format!("remainder_rays[{k}]"),
                reason: "ray is not inside the remainder block".into(),
            });
        }
        seeds.push(ray.clone());
    }
    if seeds.is_empty() {
        seeds.push(Subspace::zero(atoms.ambient));
    }
    generate_sublattice(&seeds, cap)
}

/// Truth value of `P` under the valuation that makes the atom `e_r` true.
pub fn atom_truth(e_r: &Subspace, p: &Subspace) -> bool {
    e_r.leq(p)
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct AtomEqualityWitness {
    pub ray: String,
    pub coarse: String,
    pub fine: String,
}

/// For `rho <= rho'`, every ray `e` satisfies `|A(e,rho)| <= |A(e,rho')|`, with equality
/// exactly when the two augmented atom sets agree. Returns a failing ray, if any.
pub fn atom_count_monotone(
    rays: &[Subspace],
    rho: &Observable,
    rho_prime: &Observable,
) -> Option<AtomEqualityWitness> {
    for e in rays {
        let a = compute_atoms(e, rho);
        let b = compute_atoms(e, rho_prime);
        let sets_equal = a.augmented() == b.augmented();
        let counts_equal = a.atoms().len() == b.atoms().len();
        if a.atoms().len() > b.atoms().len() || sets_equal != counts_equal {
            return Some(AtomEqualityWitness {
                ray: e.to_string(),
                coarse: a.atoms().len().to_string(),
                fine: b.atoms().len().to_string(),
            });
        }
    }
    None
}

/// Along a chain `rho <= rho' <= rho''`, equal atom sets at both ends force
/// equality in the middle. Returns a failing ray, if any.
pub fn atom_chain_squeeze(
    rays: &[Subspace],
    rho: &Observable,
    mid: &Observable,
    top: &Observable,
) -> Option<String> {
    for e in rays {
        let a = compute_atoms(e, rho).augmented();
        let b = compute_atoms(e, mid).augmented();
        let c = compute_atoms(e, top).augmented();
        if a == c && (a != b || b != c) {
            return Some(e.to_string());
        }
    }
    None
}
