//! Translation between sieves on a plain site and sieves on the extended site:
//! lifting, the sharp and flat maps, natural sieves and projective subobjects.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::error::Result;
use crate::lattice::Subspace;
use crate::site::{ExtendedSite, FiniteSite, ObjectKey, PlainSite};
use crate::topos::{
    enumerate_sieves, valuation, Presheaf, PropositionUniverse, Sieve, SubClassifier,
};

/// `{H . G : G in s same-level, H out of cod G}`, the naturalization of `s`.
pub fn natural_closure(ext: &ExtendedSite, s: &Sieve) -> Sieve {
    let site = ext.site();
    let gens = s.arrows().iter().copied().filter(|&m| ext.is_same_level(m));
    Sieve::generated(site, s.base(), gens)
}

pub fn is_natural(ext: &ExtendedSite, s: &Sieve) -> bool {
    natural_closure(ext, s) == *s
}

/// The natural sieves, as a sub-presheaf of the sieve presheaf of the extended site.
pub struct NaturalOmega<'a> {
    pub ext: &'a ExtendedSite,
}

impl SubClassifier for NaturalOmega<'_> {
    fn contains(&self, _: &FiniteSite, _: usize, s: &Sieve) -> bool {
        is_natural(self.ext, s)
    }
}

/// Links the stage `(e,rho)` of an extended site with the stage `e` of the plain
/// site for `rho`.
pub struct Bridge<'a> {
    ext: &'a ExtendedSite,
    plain: PlainSite,
    ext_obj: usize,
    plain_obj: usize,
    to_ext: BTreeMap<usize, usize>,
    to_plain: BTreeMap<usize, usize>,
}

impl<'a> Bridge<'a> {
    pub fn new(ext: &'a ExtendedSite, ext_obj: usize) -> Self {
        let key = ext.site().object(ext_obj);
        let plain = ext.restrict_to_rho(key.rho);
        Self::with_plain(ext, ext_obj, plain)
    }

    /// Reuses an already restricted plain site for the object's observable.
    pub fn with_plain(ext: &'a ExtendedSite, ext_obj: usize, plain: PlainSite) -> Self {
        let key = ext.site().object(ext_obj);
        let plain_obj = plain
            .site()
            .find_object(key)
            .expect("restricted site keeps object keys");
        let mut to_ext = BTreeMap::new();
        let mut to_plain = BTreeMap::new();
        for &m in plain.site().out(plain_obj) {
            let a = plain.site().arrow(m);
            let cod = ext
                .site()
                .find_object(plain.site().object(a.cod))
                .expect("same objects");
            let lifted = ext
                .site()
                .find_arrow(ext_obj, cod, a.op)
                .expect("same-level arrows are shared");
            to_ext.insert(m, lifted);
            to_plain.insert(lifted, m);
        }
        Self {
            ext,
            plain,
            ext_obj,
            plain_obj,
            to_ext,
            to_plain,
        }
    }

    pub fn plain(&self) -> &PlainSite {
        &self.plain
    }

    pub fn plain_obj(&self) -> usize {
        self.plain_obj
    }

    pub fn ext_obj(&self) -> usize {
        self.ext_obj
    }

    /// The same-level arrows matching a plain sieve; not a sieve in general.
    pub fn lift(&self, s: &Sieve) -> BTreeSet<usize> {
        s.arrows().iter().map(|m| self.to_ext[m]).collect()
    }

    pub fn sharp(&self, s: &Sieve) -> Sieve {
        Sieve::generated(self.ext.site(), self.ext_obj, self.lift(s))
    }

    /// `{F : F at the same level lies in s}`.
    pub fn flat(&self, s: &Sieve) -> Sieve {
        let arrows: BTreeSet<usize> = s
            .arrows()
            .iter()
            .filter_map(|m| self.to_plain.get(m).copied())
            .collect();
        Sieve::new(self.plain.site(), self.plain_obj, arrows).expect("flat of a sieve is a sieve")
    }

    pub fn natural(&self, s: &Sieve) -> Sieve {
        self.sharp(&self.flat(s))
    }

    /// Implication transported from the plain stage.
    pub fn natural_implies(&self, a: &Sieve, b: &Sieve) -> Sieve {
        self.sharp(&self.flat(a).implies(self.plain.site(), &self.flat(b)))
    }

    /// Runs every bridge law on this stage.
    pub fn audit(&self, cap: usize) -> Result<BridgeAudit> {
        let ext_site = self.ext.site();
        let plain_site = self.plain.site();
        let plain_stage = enumerate_sieves(plain_site, self.plain_obj, cap)?;
        let images: Vec<Sieve> = plain_stage.iter().map(|s| self.sharp(s)).collect();
        let mut a = BridgeAudit {
            object: ext_site.object(self.ext_obj),
            plain_sieves: plain_stage.len(),
            natural_sieves: images.iter().collect::<BTreeSet<_>>().len(),
            ..BridgeAudit::default()
        };
        for (s, img) in plain_stage.iter().zip(&images) {
            let lifted = self.lift(s);
            if !lifted.is_subset(img.arrows())
                || !crate::topos::sieve::is_closed(ext_site, img.arrows())
            {
                a.sharp_not_least_sieve += 1;
            }
            if self.flat(img) != *s {
                a.flat_sharp_failures += 1;
            }
            if !is_natural(self.ext, img) {
                a.image_not_natural += 1;
            }
            if self.natural(img) != *img {
                a.image_not_natural += 1;
            }
        }
        for (i, s) in plain_stage.iter().enumerate() {
            for (j, t) in plain_stage.iter().enumerate() {
                let (si, tj) = (&images[i], &images[j]);
                if s.leq(t) != si.leq(tj) {
                    a.order_failures += 1;
                }
                if self.sharp(&s.join(t)) != si.join(tj) || self.sharp(&s.meet(t)) != si.meet(tj) {
                    a.lattice_failures += 1;
                }
                let nat = self.natural_implies(si, tj);
                if self.flat(&nat) != s.implies(plain_site, t) {
                    a.implication_transport_failures += 1;
                }
                let plain_imp = si.implies(ext_site, tj);
                if !nat.leq(&plain_imp) {
                    a.implication_order_failures += 1;
                } else if nat != plain_imp {
                    a.implication_strict_pairs += 1;
                }
                if !is_natural(self.ext, &plain_imp) {
                    a.implication_leaves_natural += 1;
                }
                // relative pseudocomplement inside the natural sieves
                let fits: Vec<&Sieve> = images.iter().filter(|x| x.meet(si).leq(tj)).collect();
                let best = fits.iter().find(|g| fits.iter().all(|x| x.leq(g))).copied();
                if best != Some(&nat) {
                    a.implication_not_greatest += 1;
                }
            }
        }
        let top_plain = Sieve::top(plain_site, self.plain_obj);
        if self.sharp(&top_plain) != Sieve::top(ext_site, self.ext_obj)
            || !self.sharp(&Sieve::empty(self.plain_obj)).is_empty()
        {
            a.bound_failures += 1;
        }
        for s in &images {
            for &m in ext_site.out(self.ext_obj) {
                let level = self.ext.same_level(m).expect("same-level companion exists");
                if s.contains(m) != s.contains(level) {
                    a.companion_failures += 1;
                }
            }
        }
        match enumerate_sieves(ext_site, self.ext_obj, cap) {
            Ok(all) => {
                a.extended_sieves = Some(all.len());
                let fixed: BTreeSet<&Sieve> =
                    all.iter().filter(|s| is_natural(self.ext, s)).collect();
                let image_set: BTreeSet<&Sieve> = images.iter().collect();
                if fixed != image_set {
                    a.fixpoint_mismatch = true;
                }
                for s in &all {
                    if !self.natural(s).leq(s) || self.natural(&self.natural(s)) != self.natural(s)
                    {
                        a.natural_map_failures += 1;
                    }
                    if self.natural(s) != natural_closure(self.ext, s) {
                        a.natural_map_failures += 1;
                    }
                }
            }
            Err(crate::Error::EnumerationExceeded(_)) => a.extended_sieves = None,
            Err(e) => return Err(e),
        }
        Ok(a)
    }
}

#[derive(Clone, Debug, Default, Serialize, PartialEq, Eq)]
pub struct BridgeAudit {
    pub object: ObjectKey,
    pub plain_sieves: usize,
    pub natural_sieves: usize,
    /// `None` when the full stage exceeded the enumeration cap.
    pub extended_sieves: Option<usize>,
    pub sharp_not_least_sieve: usize,
    pub flat_sharp_failures: usize,
    pub image_not_natural: usize,
    pub order_failures: usize,
    pub lattice_failures: usize,
    pub bound_failures: usize,
    pub implication_transport_failures: usize,
    pub implication_order_failures: usize,
    pub implication_not_greatest: usize,
    pub implication_strict_pairs: usize,
    pub implication_leaves_natural: usize,
    pub companion_failures: usize,
    pub natural_map_failures: usize,
    pub fixpoint_mismatch: bool,
}

impl BridgeAudit {
    pub fn passed(&self) -> bool {
        self.sharp_not_least_sieve == 0
            && self.flat_sharp_failures == 0
            && self.image_not_natural == 0
            && self.order_failures == 0
            && self.lattice_failures == 0
            && self.bound_failures == 0
            && self.implication_transport_failures == 0
            && self.implication_order_failures == 0
            && self.implication_not_greatest == 0
            && self.companion_failures == 0
            && self.natural_map_failures == 0
            && !self.fixpoint_mismatch
            && self.plain_sieves == self.natural_sieves
    }
}

/// A stage, an element and an arrow showing that `inner` is not projective:
/// `M(F)x` lands in `N` one level up while the same-level `M(F)x` does not.
#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct ProjectivityWitness {
    pub object: usize,
    pub element: usize,
    pub arrow: usize,
}

pub fn projectivity_witnesses(
    ext: &ExtendedSite,
    universe: &PropositionUniverse,
    inner: &Presheaf,
    outer: &Presheaf,
) -> Vec<ProjectivityWitness> {
    let site = ext.site();
    let mut out = Vec::new();
    for o in 0..site.objects().len() {
        for &x in outer.members(o) {
            for &m in site.out(o) {
                let a = site.arrow(m);
                let y = universe.act(a.op, x);
                if !inner.contains(a.cod, y) {
                    continue;
                }
                let level = ext.same_level(m).expect("same-level companion exists");
                if !inner.contains(site.arrow(level).cod, y) {
                    out.push(ProjectivityWitness {
                        object: o,
                        element: x,
                        arrow: m,
                    });
                }
            }
        }
    }
    out
}

/// Pairs `(object, element)` where naturality of the characteristic sieve and
/// absence of a projectivity witness disagree.
pub fn projectivity_biconditional_failures(
    ext: &ExtendedSite,
    universe: &PropositionUniverse,
    inner: &Presheaf,
    outer: &Presheaf,
) -> Vec<(usize, usize)> {
    let witnesses: BTreeSet<(usize, usize)> = projectivity_witnesses(ext, universe, inner, outer)
        .into_iter()
        .map(|w| (w.object, w.element))
        .collect();
    let site = ext.site();
    let mut bad = Vec::new();
    for o in 0..site.objects().len() {
        for &x in outer.members(o) {
            let chi = crate::topos::characteristic(site, universe, inner, o, x);
            if is_natural(ext, &chi) == witnesses.contains(&(o, x)) {
                bad.push((o, x));
            }
        }
    }
    bad
}

/// One proposition's extended valuation compared with the plain one.
#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct EquivalenceRow {
    pub proposition: String,
    pub extended_size: usize,
    pub plain_size: usize,
    /// `flat` of the extended valuation equals the plain valuation.
    pub flat_matches: bool,
    /// `flat` of the naturalized extended valuation equals the plain valuation.
    pub natural_flat_matches: bool,
    /// `sharp` of the plain valuation equals the naturalized extended valuation.
    pub sharp_matches: bool,
    /// The extended valuation is itself natural.
    pub extended_natural: bool,
    /// The valuation on the down-set equals the one on the whole site.
    pub restriction_invariant: bool,
}

impl EquivalenceRow {
    pub fn passed(&self) -> bool {
        self.flat_matches
            && self.natural_flat_matches
            && self.sharp_matches
            && self.extended_natural
            && self.restriction_invariant
    }
}

/// Compares valuations at `(e,rho)` for eigenspace `r` of `rho` over `props`.
pub fn equivalence_rows(
    ext: &ExtendedSite,
    obj: usize,
    r: &Subspace,
    props: &[Subspace],
) -> Vec<EquivalenceRow> {
    let bridge = Bridge::new(ext, obj);
    let (down, down_obj) = ext.restrict_down(obj);
    let down_site = down.site();
    let site = ext.site();
    props
        .iter()
        .map(|p| {
            let local = valuation(down_site, down_obj, r, p);
            let mapped: BTreeSet<usize> = local
                .arrows()
                .iter()
                .map(|&m| {
                    let sig = down_site.signature(m);
                    let cod = site.find_object(sig.cod).expect("down-set objects exist");
                    site.find_arrow(obj, cod, sig.op)
                        .expect("down-set arrows exist")
                })
                .collect();
            let full = valuation(site, obj, r, p);
            let ext_val = Sieve::new(site, obj, mapped).expect("valuation is a sieve");
            let plain_val = valuation(bridge.plain().site(), bridge.plain_obj(), r, p);
            EquivalenceRow {
                proposition: p.to_string(),
                extended_size: ext_val.len(),
                plain_size: plain_val.len(),
                flat_matches: bridge.flat(&ext_val) == plain_val,
                natural_flat_matches: bridge.flat(&natural_closure(ext, &ext_val)) == plain_val,
                sharp_matches: bridge.sharp(&plain_val) == natural_closure(ext, &ext_val),
                extended_natural: is_natural(ext, &ext_val),
                restriction_invariant: full == ext_val,
            }
        })
        .collect()
}
