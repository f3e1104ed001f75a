//! Sub-presheaves of the sieve presheaf and the semi-classifier property:
//! characteristic maps exist, factor through the sub-presheaf, pull truth back to
//! the subobject and are the only such maps.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::Subspace;
use crate::site::FiniteSite;

use super::presheaf::{characteristic, Presheaf, PropositionUniverse};
use super::sieve::{enumerate_sieves, Sieve, StageHeyting};
use super::valuation::bottom_annihilator;

/// A sub-presheaf of the sieve presheaf, given by stage-wise membership.
pub trait SubClassifier {
    fn contains(&self, site: &FiniteSite, obj: usize, s: &Sieve) -> bool;

    /// The stage at `obj` as an explicit list.
    fn stage(&self, site: &FiniteSite, obj: usize, cap: usize) -> Result<Vec<Sieve>> {
        Ok(enumerate_sieves(site, obj, cap)?
            .into_iter()
            .filter(|s| self.contains(site, obj, s))
            .collect())
    }

    /// Stages, sieves and arrows whose pullback leaves the sub-presheaf.
    fn stability_defects(&self, site: &FiniteSite, cap: usize) -> Result<Vec<(usize, usize)>> {
        let mut bad = Vec::new();
        for o in 0..site.objects().len() {
            for s in self.stage(site, o, cap)? {
                for &m in site.out(o) {
                    let p = s.pullback(site, m);
                    if !self.contains(site, p.base(), &p) {
                        bad.push((o, m));
                    }
                }
            }
        }
        Ok(bad)
    }
}

/// Every sieve.
pub struct FullOmega;

impl SubClassifier for FullOmega {
    fn contains(&self, _: &FiniteSite, _: usize, _: &Sieve) -> bool {
        true
    }

    fn stage(&self, site: &FiniteSite, obj: usize, cap: usize) -> Result<Vec<Sieve>> {
        enumerate_sieves(site, obj, cap)
    }
}

/// Sieves containing the annihilator of `e'_r` at each object `e'`.
pub struct DeltaOmega {
    floors: Vec<Sieve>,
}

impl DeltaOmega {
    /// Uses `e'_r`, the projection of each object's ray onto `r`.
    pub fn for_eigenspace(site: &FiniteSite, r: &Subspace) -> Self {
        let floors = (0..site.objects().len())
            .map(|o| bottom_annihilator(site, o, &site.object_ray(o).project_onto(r)))
            .collect();
        Self { floors }
    }

    pub fn floor(&self, obj: usize) -> &Sieve {
        &self.floors[obj]
    }

    pub fn heyting(&self, site: &FiniteSite, obj: usize, cap: usize) -> Result<StageHeyting> {
        StageHeyting::above(site, &self.floors[obj], cap)
    }
}

impl SubClassifier for DeltaOmega {
    fn contains(&self, _: &FiniteSite, obj: usize, s: &Sieve) -> bool {
        s.base() == obj && self.floors[obj].leq(s)
    }
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct SemiClassifierReport {
    pub objects: usize,
    pub elements: usize,
    /// `chi(x)` outside the sub-presheaf.
    pub factorization_failures: usize,
    /// Arrows along which `chi` fails to commute with restriction.
    pub naturality_failures: usize,
    /// Objects where `{x : chi(x) = top}` differs from the subobject.
    pub pullback_failures: usize,
    /// Elements with other than exactly one admissible classifying sieve.
    pub uniqueness_failures: usize,
    pub enumerated_stages: usize,
    pub pointwise_stages: usize,
}

impl SemiClassifierReport {
    pub fn passed(&self) -> bool {
        self.factorization_failures == 0
            && self.naturality_failures == 0
            && self.pullback_failures == 0
            && self.uniqueness_failures == 0
    }

    pub fn mode(&self) -> &'static str {
        if self.pointwise_stages == 0 {
            "enumerated"
        } else {
            "forced-pointwise"
        }
    }
}

/// Checks the characteristic map of `inner` in `outer` against `target`.
///
/// Uniqueness scans the stage for sieves `s` with `Omega(m)(s) = top` exactly
/// when `M(m)x` lands in `N`; a stage beyond `cap` is handled pointwise, since
/// that condition pins down membership of every arrow.
pub fn check_semiclassifier(
    site: &FiniteSite,
    universe: &PropositionUniverse,
    inner: &Presheaf,
    outer: &Presheaf,
    target: &dyn SubClassifier,
    cap: usize,
) -> Result<SemiClassifierReport> {
    inner.validate_sub(site, universe, outer)?;
    let mut report = SemiClassifierReport {
        objects: site.objects().len(),
        elements: 0,
        factorization_failures: 0,
        naturality_failures: 0,
        pullback_failures: 0,
        uniqueness_failures: 0,
        enumerated_stages: 0,
        pointwise_stages: 0,
    };
    for o in 0..site.objects().len() {
        let stage = match target.stage(site, o, cap) {
            Ok(s) => {
                report.enumerated_stages += 1;
                Some(s)
            }
            Err(Error::EnumerationExceeded(_)) => {
                report.pointwise_stages += 1;
                None
            }
            Err(e) => return Err(e),
        };
        let mut true_at = std::collections::BTreeSet::new();
        for &x in outer.members(o) {
            report.elements += 1;
            let chi = characteristic(site, universe, inner, o, x);
            if !target.contains(site, o, &chi) {
                report.factorization_failures += 1;
            }
            for &m in site.out(o) {
                let a = site.arrow(m);
                let lhs = chi.pullback(site, m);
                let rhs = characteristic(site, universe, inner, a.cod, universe.act(a.op, x));
                if lhs != rhs {
                    report.naturality_failures += 1;
                }
            }
            if chi.is_top(site) {
                true_at.insert(x);
            }
            let pins = |s: &Sieve| {
                site.out(o).iter().all(|&m| {
                    let a = site.arrow(m);
                    s.pullback(site, m).is_top(site) == inner.contains(a.cod, universe.act(a.op, x))
                })
            };
            let unique = match &stage {
                Some(list) => {
                    let hits: Vec<&Sieve> = list.iter().filter(|s| pins(s)).collect();
                    hits.len() == 1 && *hits[0] == chi
                }
                None => target.contains(site, o, &chi) && pins(&chi),
            };
            if !unique {
                report.uniqueness_failures += 1;
            }
        }
        if true_at != *inner.members(o) {
            report.pullback_failures += 1;
        }
    }
    Ok(report)
}
