//! Subspaces of C^n in canonical form and the orthomodular lattice operations.

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::{ExactMatrix, GaussianRational, Vector};

/// A subspace stored by the rows of its reduced row echelon basis.
///
/// Two subspaces are equal exactly when the canonical bases coincide.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Subspace {
    ambient: usize,
    basis: Vec<Vector>,
}

impl Subspace {
    pub fn zero(ambient: usize) -> Self {
        Self {
            ambient,
            basis: Vec::new(),
        }
    }

    pub fn full(ambient: usize) -> Self {
        Self {
            ambient,
            basis: ExactMatrix::identity(ambient).row_vectors(),
        }
    }

    /// The span of `vectors`, which may be dependent or zero.
    pub fn span(ambient: usize, vectors: &[Vector]) -> Result<Self> {
        for v in vectors {
            if v.len() != ambient {
                return Err(Error::DimensionMismatch {
                    expected: ambient,
                    found: v.len(),
                });
            }
        }
        Ok(Self::span_unchecked(ambient, vectors.to_vec()))
    }

    fn span_unchecked(ambient: usize, vectors: Vec<Vector>) -> Self {
        if vectors.is_empty() {
            return Self::zero(ambient);
        }
        let m = ExactMatrix::from_rows(vectors, ambient).expect("lengths checked");
        let (r, pivots) = m.rref();
        Self {
            ambient,
            basis: (0..pivots.len()).map(|k| r.row(k).to_vec()).collect(),
        }
    }

    pub fn ray(v: &[GaussianRational]) -> Result<Self> {
        let s = Self::span(v.len(), &[v.to_vec()])?;
        if s.dim() != 1 {
            return Err(Error::Validation {
                field: "ray".into(),
                reason: "zero vector does not span a ray".into(),
            });
        }
        Ok(s)
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Vector] {
        &self.basis
    }

    pub fn is_zero(&self) -> bool {
        self.basis.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.basis.len() == self.ambient
    }

    pub fn is_ray(&self) -> bool {
        self.basis.len() == 1
    }

    pub fn contains_vector(&self, v: &[GaussianRational]) -> bool {
        let mut rows = self.basis.clone();
        rows.push(v.to_vec());
        Self::span_unchecked(self.ambient, rows).dim() == self.dim()
    }

    fn same_ambient(&self, other: &Subspace) -> Result<()> {
        if self.ambient != other.ambient {
            return Err(Error::AmbientMismatch(self.ambient, other.ambient));
        }
        Ok(())
    }

    pub fn join(&self, other: &Subspace) -> Subspace {
        self.try_join(other).expect("same ambient")
    }

    pub fn try_join(&self, other: &Subspace) -> Result<Subspace> {
        self.same_ambient(other)?;
        let mut rows = self.basis.clone();
        rows.extend(other.basis.iter().cloned());
        Ok(Self::span_unchecked(self.ambient, rows))
    }

    pub fn meet(&self, other: &Subspace) -> Subspace {
        self.try_meet(other).expect("same ambient")
    }

    /// Intersection, from the kernel of `[P^T | -Q^T]`.
    pub fn try_meet(&self, other: &Subspace) -> Result<Subspace> {
        self.same_ambient(other)?;
        if self.is_zero() || other.is_zero() {
            return Ok(Self::zero(self.ambient));
        }
        let (p, q) = (self.dim(), other.dim());
        let mut m = ExactMatrix::zeros(self.ambient, p + q);
        for (j, v) in self.basis.iter().enumerate() {
            for (i, x) in v.iter().enumerate() {
                m.set(i, j, x.clone());
            }
        }
        for (j, v) in other.basis.iter().enumerate() {
            for (i, x) in v.iter().enumerate() {
                m.set(i, p + j, -x);
            }
        }
        let vectors = m
            .kernel_basis()
            .into_iter()
            .map(|coeffs| combine(&self.basis, &coeffs[..p], self.ambient))
            .collect();
        Ok(Self::span_unchecked(self.ambient, vectors))
    }

    /// Orthocomplement under the standard Hermitian inner product.
    pub fn ortho(&self) -> Subspace {
        if self.is_zero() {
            return Self::full(self.ambient);
        }
        let conj_rows: Vec<Vector> = self
            .basis
            .iter()
            .map(|v| v.iter().map(GaussianRational::conj).collect())
            .collect();
        let m = ExactMatrix::from_rows(conj_rows, self.ambient).expect("lengths checked");
        Self::span_unchecked(self.ambient, m.kernel_basis())
    }

    pub fn leq(&self, other: &Subspace) -> bool {
        self.try_leq(other).expect("same ambient")
    }

    pub fn try_leq(&self, other: &Subspace) -> Result<bool> {
        self.same_ambient(other)?;
        if self.dim() > other.dim() {
            return Ok(false);
        }
        Ok(self.join(other).dim() == other.dim())
    }

    /// `F(P)`, the image of the subspace under the operator.
    pub fn apply(&self, op: &ExactMatrix) -> Subspace {
        self.try_apply(op).expect("operator matches ambient")
    }

    pub fn try_apply(&self, op: &ExactMatrix) -> Result<Subspace> {
        if op.cols() != self.ambient || op.rows() != self.ambient {
            return Err(Error::DimensionMismatch {
                expected: self.ambient,
                found: op.cols(),
            });
        }
        let images = self
            .basis
            .iter()
            .map(|v| op.mul_vec(v))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::span_unchecked(self.ambient, images))
    }

    /// `e_r = (e or r-perp) and r`, the component of `self` along `r`.
    pub fn project_onto(&self, r: &Subspace) -> Subspace {
        self.join(&r.ortho()).meet(r)
    }

    /// Orthogonal projector onto the subspace, `V (V* V)^-1 V*`.
    pub fn projector(&self) -> ExactMatrix {
        let n = self.ambient;
        if self.is_zero() {
            return ExactMatrix::zeros(n, n);
        }
        let vt = ExactMatrix::from_rows(self.basis.clone(), n).expect("lengths checked");
        let v = vt.transpose();
        let vstar = v.conj_transpose();
        let gram = vstar.mul(&v).expect("shapes agree");
        let ginv = gram.inverse().expect("basis is independent");
        v.mul(&ginv)
            .and_then(|m| m.mul(&vstar))
            .expect("shapes agree")
    }

    pub fn is_orthogonal_to(&self, other: &Subspace) -> bool {
        self.leq(&other.ortho())
    }
}

fn combine(basis: &[Vector], coeffs: &[GaussianRational], n: usize) -> Vector {
    let mut out = vec![GaussianRational::zero(); n];
    for (v, c) in basis.iter().zip(coeffs) {
        if c.is_zero() {
            continue;
        }
        for (o, x) in out.iter_mut().zip(v) {
            *o = &*o + &(c * x);
        }
    }
    out
}

impl fmt::Display for Subspace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "{{0}}");
        }
        write!(f, "span(")?;
        for (k, v) in self.basis.iter().enumerate() {
            if k > 0 {
                write!(f, "; ")?;
            }
            let parts: Vec<String> = v.iter().map(ToString::to_string).collect();
            write!(f, "[{}]", parts.join(", "))?;
        }
        write!(f, ")")
    }
}

/// Closes `seeds` under meet, join and orthocomplement.
///
/// Fails with `LatticeCapExceeded` once more than `cap` distinct subspaces appear.
pub fn generate_sublattice(seeds: &[Subspace], cap: usize) -> Result<Vec<Subspace>> {
    let Some(first) = seeds.first() else {
        return Ok(Vec::new());
    };
    let n = first.ambient();
    let mut seen: HashSet<Subspace> = HashSet::new();
    let mut all: Vec<Subspace> = Vec::new();
    let mut push = |s: Subspace, all: &mut Vec<Subspace>| -> Result<()> {
        s.same_ambient(first)?;
        if seen.insert(s.clone()) {
            all.push(s);
            if all.len() > cap {
                return Err(Error::LatticeCapExceeded(cap));
            }
        }
        Ok(())
    };
    push(Subspace::zero(n), &mut all)?;
    push(Subspace::full(n), &mut all)?;
    for s in seeds {
        push(s.clone(), &mut all)?;
    }
    let mut done = 0;
    while done < all.len() {
        let cur = all[done].clone();
        push(cur.ortho(), &mut all)?;
        for k in 0..=done {
            let other = all[k].clone();
            push(cur.meet(&other), &mut all)?;
            push(cur.join(&other), &mut all)?;
        }
        done += 1;
    }
    let sorted: BTreeSet<Subspace> = all.into_iter().collect();
    Ok(sorted.into_iter().collect())
}
