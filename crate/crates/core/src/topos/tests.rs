use std::collections::BTreeSet;

use super::sieve::is_closed;
use super::*;
use crate::fixtures::*;
use crate::lattice::Subspace;
use crate::site::{FiniteSite, PlainSite};

fn qubit_site() -> PlainSite {
    PlainSite::build(&qubit_r(), qubit_monoid(), &[ray(&["1", "1"])], 128).unwrap()
}

fn arrow(site: &FiniteSite, obj: usize, op: &str) -> usize {
    *site
        .out(obj)
        .iter()
        .find(|&&m| site.monoid().name(site.arrow(m).op) == op)
        .unwrap()
}

fn sieve(site: &FiniteSite, obj: usize, ops: &[&str]) -> Sieve {
    Sieve::new(site, obj, ops.iter().map(|o| arrow(site, obj, o)).collect()).unwrap()
}

/// Every subset of the arrows out of `obj` that is closed.
fn brute_force_sieves(site: &FiniteSite, obj: usize) -> BTreeSet<BTreeSet<usize>> {
    let out = site.out(obj);
    let mut all = BTreeSet::new();
    for mask in 0u32..(1 << out.len()) {
        let s: BTreeSet<usize> = (0..out.len())
            .filter(|k| mask & (1 << k) != 0)
            .map(|k| out[k])
            .collect();
        if is_closed(site, &s) {
            all.insert(s);
        }
    }
    all
}

#[test]
fn enumeration_matches_brute_force() {
    let p = qubit_site();
    let site = p.site();
    for o in 0..site.objects().len() {
        let fast: BTreeSet<BTreeSet<usize>> = enumerate_sieves(site, o, 4096)
            .unwrap()
            .into_iter()
            .map(|s| s.arrows().clone())
            .collect();
        assert_eq!(fast, brute_force_sieves(site, o));
    }
    let e = p.object_of_ray(&ray(&["1", "1"])).unwrap();
    assert_eq!(enumerate_sieves(site, e, 4096).unwrap().len(), 5);
}

#[test]
fn enumeration_cap() {
    let p = qubit_site();
    let e = p.object_of_ray(&ray(&["1", "1"])).unwrap();
    assert!(matches!(
        enumerate_sieves(p.site(), e, 3),
        Err(crate::Error::EnumerationExceeded(3))
    ));
}

#[test]
fn eigenray_sieves() {
    let p = PlainSite::build(&qubit_r(), qubit_monoid(), &[ray(&["1", "0"])], 128).unwrap();
    let all = enumerate_sieves(p.site(), 0, 64).unwrap();
    let names: Vec<Vec<&str>> = all
        .iter()
        .map(|s| {
            s.arrows()
                .iter()
                .map(|&m| p.site().monoid().name(p.site().arrow(m).op))
                .collect()
        })
        .collect();
    assert_eq!(names, vec![vec![], vec!["p1"], vec!["I", "p1"]]);
}

#[test]
fn implication_example() {
    let p = qubit_site();
    let site = p.site();
    let e = p.object_of_ray(&ray(&["1", "1"])).unwrap();
    let s1 = sieve(site, e, &["p1"]);
    let s2 = sieve(site, e, &["p2"]);
    assert_eq!(s1.implies(site, &s2), s2);
}

#[test]
fn pullback_example() {
    let p = qubit_site();
    let site = p.site();
    let e = p.object_of_ray(&ray(&["1", "1"])).unwrap();
    let m = arrow(site, e, "p1");
    let s = sieve(site, e, &["p1"]);
    let back = s.pullback(site, m);
    assert!(back.is_top(site));
    assert_eq!(back.base(), site.arrow(m).cod);
}

#[test]
fn heyting_audit_on_every_stage() {
    let p = qubit_site();
    for o in 0..p.site().objects().len() {
        let h = StageHeyting::omega(p.site(), o, 4096).unwrap();
        let audit = h.audit(p.site(), 1 << 20);
        assert!(audit.passed(), "{audit:?}");
        assert!(audit.exhaustive);
    }
}

#[test]
fn sampled_audit_is_flagged() {
    let p = qubit_site();
    let e = p.object_of_ray(&ray(&["1", "1"])).unwrap();
    let audit = StageHeyting::omega(p.site(), e, 4096)
        .unwrap()
        .audit(p.site(), 10);
    assert!(!audit.exhaustive);
    assert_eq!(audit.triples_checked, 10);
    assert!(audit.passed());
}

#[test]
fn qubit_valuations() {
    let p = qubit_site();
    let site = p.site();
    let e = p.object_of_ray(&ray(&["1", "1"])).unwrap();
    let r1 = ray(&["1", "0"]);
    assert_eq!(
        valuation(site, e, &r1, &ray(&["1", "1"])),
        sieve(site, e, &["p1", "p2"])
    );
    assert_eq!(
        valuation(site, e, &r1, &ray(&["0", "1"])),
        sieve(site, e, &["p2"])
    );
    assert_eq!(valuation(site, e, &r1, &r1), Sieve::top(site, e));
    let floor = bottom_annihilator(site, e, &r1);
    assert_eq!(floor, sieve(site, e, &["p2"]));
    assert_eq!(valuation(site, e, &r1, &Subspace::zero(2)), floor);
}

#[test]
fn restricted_stage_is_a_chain() {
    let p = qubit_site();
    let site = p.site();
    let e = p.object_of_ray(&ray(&["1", "1"])).unwrap();
    let d = DeltaOmega::for_eigenspace(site, &ray(&["1", "0"]));
    let h = d.heyting(site, e, 4096).unwrap();
    let expect = vec![
        sieve(site, e, &["p2"]),
        sieve(site, e, &["p1", "p2"]),
        Sieve::top(site, e),
    ];
    assert_eq!(h.elements, expect);
    assert!(h.audit(site, 1 << 20).passed());
    assert!(d.stability_defects(site, 4096).unwrap().is_empty());
}

#[test]
fn annihilator_empty_at_eigenray() {
    let p = PlainSite::build(&qubit_r(), qubit_monoid(), &[ray(&["1", "0"])], 128).unwrap();
    assert!(bottom_annihilator(p.site(), 0, &ray(&["1", "0"])).is_empty());
}

fn qubit_universe(p: &PlainSite) -> PropositionUniverse {
    PropositionUniverse::build(
        p.site().monoid(),
        &[
            ray(&["1", "1"]),
            ray(&["1", "0"]),
            ray(&["0", "1"]),
            ray(&["1", "-1"]),
        ],
        512,
    )
    .unwrap()
}

#[test]
fn universe_tables() {
    let p = qubit_site();
    let u = qubit_universe(&p);
    assert_eq!(u.len(), 6);
    assert!(u.functoriality_defects(p.site().monoid()).is_empty());
    assert!(u.monotonicity_defects(p.site().monoid()).is_empty());
    let a = u.id(&ray(&["1", "1"])).unwrap();
    let b = u.id(&ray(&["1", "-1"])).unwrap();
    assert_eq!(u.meet(a, b), u.zero());
}

#[test]
fn characteristic_matches_valuation() {
    let p = qubit_site();
    let site = p.site();
    let u = qubit_universe(&p);
    let r1 = ray(&["1", "0"]);
    let sigma = GlobalElement::by_projection(site, &u, &r1).unwrap();
    assert!(sigma.naturality_defects(site, &u).is_empty());
    let t = sigma.up_set(&u);
    let l = Presheaf::full(site, &u);
    t.validate_sub(site, &u, &l).unwrap();
    assert!(t.filter_defects(&u).is_empty());
    for o in 0..site.objects().len() {
        for (k, prop) in u.props().iter().enumerate() {
            assert_eq!(
                characteristic(site, &u, &t, o, k),
                valuation(site, o, &r1, prop)
            );
        }
    }
    let e = p.object_of_ray(&ray(&["1", "1"])).unwrap();
    let x = u.id(&ray(&["0", "1"])).unwrap();
    assert_eq!(characteristic(site, &u, &t, e, x), sieve(site, e, &["p2"]));
}

#[test]
fn transported_element_agrees_with_projection() {
    let p = qubit_site();
    let e = p.object_of_ray(&ray(&["1", "1"])).unwrap();
    let (down, base) = p.restrict_down(e);
    let u = qubit_universe(&p);
    let r1 = ray(&["1", "0"]);
    let moved = GlobalElement::by_transport(down.site(), &u, base, &r1).unwrap();
    let projected = GlobalElement::by_projection(down.site(), &u, &r1).unwrap();
    assert_eq!(moved, projected);
}

#[test]
fn semiclassifier_for_true_subobject() {
    let p = qubit_site();
    let site = p.site();
    let u = qubit_universe(&p);
    let r1 = ray(&["1", "0"]);
    let t = GlobalElement::by_projection(site, &u, &r1)
        .unwrap()
        .up_set(&u);
    let l = Presheaf::full(site, &u);
    let d = DeltaOmega::for_eigenspace(site, &r1);
    let rep = check_semiclassifier(site, &u, &t, &l, &d, 4096).unwrap();
    assert!(rep.passed(), "{rep:?}");
    assert_eq!(rep.mode(), "enumerated");
    let forced = check_semiclassifier(site, &u, &t, &l, &d, 1).unwrap();
    assert!(forced.passed());
    assert_eq!(forced.mode(), "forced-pointwise");
}

#[test]
fn non_closed_subobject_is_rejected() {
    let p = qubit_site();
    let site = p.site();
    let u = qubit_universe(&p);
    let mut members = vec![BTreeSet::new(); site.objects().len()];
    let e = p.object_of_ray(&ray(&["1", "1"])).unwrap();
    members[e].insert(u.id(&ray(&["1", "1"])).unwrap());
    let bad = Presheaf::new(members);
    let l = Presheaf::full(site, &u);
    assert!(matches!(
        bad.validate_sub(site, &u, &l),
        Err(crate::Error::NotSubPresheaf(_))
    ));
}

#[test]
fn valuation_conditions_on_qubit() {
    let p = qubit_site();
    let u = qubit_universe(&p);
    let e = p.object_of_ray(&ray(&["1", "1"])).unwrap();
    let rep = valuation_conditions(p.site(), e, &ray(&["1", "0"]), u.props());
    assert_eq!(rep.monotone_failures, 0);
    assert_eq!(rep.exclusivity_failures, 0);
    assert!(rep.unit_holds);
    assert!(!rep.null_is_bottom_of_omega);
    assert!(rep.null_is_bottom_of_restricted);
    assert_eq!(rep.null_value_size, 1);
}
