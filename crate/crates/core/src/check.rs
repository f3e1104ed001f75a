//! Orchestration: builds the sites of each run and evaluates every law as a
//! report row, and produces per-proposition valuation reports.

use std::collections::BTreeSet;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::bridge::{
    equivalence_rows, is_natural, natural_closure, projectivity_biconditional_failures,
    projectivity_witnesses, Bridge, NaturalOmega,
};
use crate::error::{Error, Result};
use crate::lattice::{generate_sublattice, Subspace};
use crate::modal::{
    atom_chain_squeeze, atom_count_monotone, atom_truth, compute_atoms,
    enumerate_determinate_sublattice, in_commutant, in_determinate_sublattice, observable_leq,
    Observable, TrueAtomSet,
};
use crate::report::{CheckReport, CheckRow, Status};
use crate::scenario::{Rule, RunSpec, Scenario};
use crate::site::{ExtendedSite, FiniteSite, OperatorMonoid, PlainSite, SiteDump};
use crate::topos::{
    bottom_annihilator, characteristic, check_semiclassifier, valuation_conditions, valuation, DeltaOmega,
    FullOmega, GlobalElement, Presheaf, PropositionUniverse, SemiClassifierReport, Sieve,
    StageHeyting, SubClassifier,
};

/// Heyting audits check every triple up to this many, then sample this many.
pub const TRIPLE_BUDGET: usize = 200_000;

pub fn close_monoid(s: &Scenario) -> Result<Arc<OperatorMonoid>> {
    Ok(Arc::new(OperatorMonoid::close(
        &s.generators,
        s.dimension,
        s.caps.monoid,
    )?))
}

/// Everything one run needs: its sites, the proposition universe and the atoms.
pub struct RunContext<'s> {
    pub scenario: &'s Scenario,
    pub spec: &'s RunSpec,
    pub state: Subspace,
    pub observable: &'s Observable,
    pub r: Subspace,
    pub e_r: Subspace,
    pub atoms: TrueAtomSet,
    pub plain: PlainSite,
    pub base: usize,
    pub ext: Option<ExtendedSite>,
    pub ext_rho: usize,
    pub ext_base: usize,
    pub universe: PropositionUniverse,
}

impl<'s> RunContext<'s> {
    pub fn build(s: &'s Scenario, spec: &'s RunSpec, monoid: Arc<OperatorMonoid>) -> Result<Self> {
        let state = s.states[spec.state].1.clone();
        let observable = &s.observables[spec.observable];
        let r = observable.eigenspaces()[spec.eigenspace].clone();
        let e_r = state.project_onto(&r);
        if e_r.is_zero() {
            return Err(Error::ZeroProjection);
        }
        let atoms = compute_atoms(&state, observable);
        let plain = PlainSite::build_filtered(
            observable,
            monoid.clone(),
            std::slice::from_ref(&state),
            s.caps.orbit,
        )?;
        let base = plain.object_of_ray(&state).expect("seed is an object");
        let (ext, ext_rho, ext_base) = if spec.extended.is_empty() {
            (None, 0, 0)
        } else {
            let obs: Vec<Observable> = spec
                .extended
                .iter()
                .map(|&k| s.observables[k].clone())
                .collect();
            let ext = ExtendedSite::build(
                &obs,
                monoid.clone(),
                std::slice::from_ref(&state),
                s.caps.orbit,
            )?;
            let rho = spec
                .extended
                .iter()
                .position(|&k| k == spec.observable)
                .expect("validated on load");
            let b = ext.find_object(&state, rho).expect("seed is an object");
            (Some(ext), rho, b)
        };
        let mut seeds: Vec<Subspace> = s.propositions.iter().map(|(_, p)| p.clone()).collect();
        let mut rays: Vec<Subspace> = plain.site().rays().to_vec();
        if let Some(x) = &ext {
            rays.extend(x.site().rays().iter().cloned());
        }
        for ray in &rays {
            seeds.push(ray.clone());
            for o in &s.observables {
                for q in o.eigenspaces() {
                    seeds.push(ray.project_onto(q));
                }
            }
        }
        let universe = PropositionUniverse::build(&monoid, &seeds, s.caps.lattice)?;
        Ok(Self {
            scenario: s,
            spec,
            state,
            observable,
            r,
            e_r,
            atoms,
            plain,
            base,
            ext,
            ext_rho,
            ext_base,
            universe,
        })
    }

    pub fn prop_name(&self, p: &Subspace) -> String {
        self.scenario
            .propositions
            .iter()
            .find(|(_, q)| q == p)
            .map(|(n, _)| n.clone())
            .unwrap_or_else(|| p.to_string())
    }

    fn scope(&self) -> String {
        format!("{}/{}", self.scenario.name, self.spec.name)
    }

    fn determinate(&self) -> Result<Vec<Subspace>> {
        let rem = self.atoms.remainder();
        let rays: Vec<Subspace> = self
            .scenario
            .remainder_rays
            .iter()
            .filter(|x| x.leq(&rem))
            .cloned()
            .collect();
        enumerate_determinate_sublattice(&self.atoms, &rays, self.scenario.caps.lattice)
    }

    /// The declared sub-presheaf as member sets over the extended site.
    fn subobject(&self, ext: &ExtendedSite, rules: &dyn Fn(usize) -> Rule) -> Presheaf {
        let u = &self.universe;
        let site = ext.site();
        Presheaf::new(
            (0..site.objects().len())
                .map(|o| {
                    let key = site.object(o);
                    match rules(key.rho) {
                        Rule::All => (0..u.len()).collect(),
                        Rule::None => BTreeSet::new(),
                        Rule::RayFilter => {
                            let e = site.object_ray(o);
                            (0..u.len()).filter(|&p| e.leq(u.get(p))).collect()
                        }
                    }
                })
                .collect(),
        )
    }
}

struct Rows {
    scope: String,
    rows: Vec<CheckRow>,
}

impl Rows {
    fn new(scope: String) -> Self {
        Self {
            scope,
            rows: Vec::new(),
        }
    }

    fn push(&mut self, law: &str, ok: bool, mode: &str, detail: impl Into<String>) {
        self.rows.push(CheckRow {
            law: law.to_string(),
            scope: self.scope.clone(),
            status: if ok { Status::Pass } else { Status::Fail },
            mode: mode.to_string(),
            detail: detail.into(),
        });
    }

    fn skip(&mut self, law: &str, detail: impl Into<String>) {
        self.rows.push(CheckRow {
            law: law.to_string(),
            scope: self.scope.clone(),
            status: Status::Skipped,
            mode: "cap-bound".to_string(),
            detail: detail.into(),
        });
    }

    fn defects<T: std::fmt::Debug>(&mut self, law: &str, bad: &[T], what: &str) {
        let detail = match bad.first() {
            None => format!("{what}: no defects"),
            Some(first) => format!("{what}: {} defects, first {first:?}", bad.len()),
        };
        self.push(law, bad.is_empty(), "exhaustive", detail);
    }
}

fn is_cap(e: &Error) -> bool {
    matches!(
        e,
        Error::EnumerationExceeded(_) | Error::LatticeCapExceeded(_) | Error::OrbitExceeded(_)
    )
}

/// Runs every law over the scenario. Construction failures are errors; caps hit
/// while auditing become skipped or sampled rows.
pub fn run_check(s: &Scenario) -> Result<CheckReport> {
    let monoid = close_monoid(s)?;
    let mut rows = scenario_rows(s, &monoid);
    let per_run: Vec<Result<Vec<CheckRow>>> = s
        .runs
        .par_iter()
        .map(|spec| {
            let ctx = RunContext::build(s, spec, monoid.clone())?;
            run_rows(&ctx)
        })
        .collect();
    for r in per_run {
        rows.extend(r?);
    }
    Ok(CheckReport::new(&s.name, s.caps, rows))
}

fn scenario_rows(s: &Scenario, monoid: &OperatorMonoid) -> Vec<CheckRow> {
    let mut out = Rows::new(s.name.clone());
    let mut bad = monoid.associativity_defects();
    for k in 0..monoid.len() {
        if monoid.product(0, k) != k || monoid.product(k, 0) != k {
            bad.push((0, k, k));
        }
    }
    out.defects("monoid-laws", &bad, &format!("{} elements", monoid.len()));

    let obs = &s.observables;
    let mut order_bad = Vec::new();
    for (a, x) in obs.iter().enumerate() {
        if !observable_leq(x, x) {
            order_bad.push(format!("{} not reflexive", x.name));
        }
        for (b, y) in obs.iter().enumerate() {
            if a != b && observable_leq(x, y) && observable_leq(y, x) && !x.same_decomposition(y) {
                order_bad.push(format!("{} and {} not antisymmetric", x.name, y.name));
            }
            for z in obs {
                if observable_leq(x, y) && observable_leq(y, z) && !observable_leq(x, z) {
                    order_bad.push(format!("{} {} {} not transitive", x.name, y.name, z.name));
                }
            }
        }
    }
    out.defects(
        "observable-order",
        &order_bad,
        &format!("{} observables", obs.len()),
    );

    let mut com_bad = Vec::new();
    for x in obs {
        for y in obs {
            if !observable_leq(x, y) {
                continue;
            }
            for (k, op) in monoid.elements().iter().enumerate() {
                if in_commutant(op, y) && !in_commutant(op, x) {
                    com_bad.push((x.name.clone(), y.name.clone(), k));
                }
            }
        }
    }
    out.defects(
        "commutant-antitone",
        &com_bad,
        "finer observables have smaller commutants",
    );

    let mut seeds: Vec<Subspace> = Vec::new();
    for o in obs {
        seeds.extend(o.eigenspaces().iter().cloned());
        if o.eigenspaces().len() > 1 {
            for (_, e) in &s.states {
                seeds.extend(compute_atoms(e, o).atoms().iter().cloned());
            }
        }
    }
    match generate_sublattice(&seeds, s.caps.lattice) {
        Ok(l) => {
            let bad = lattice_law_defects(&l);
            out.defects(
                "lattice-laws",
                &bad,
                &format!("{} generated subspaces", l.len()),
            );
        }
        Err(e) => out.skip("lattice-laws", e.to_string()),
    }
    out.rows
}

/// Orthomodular lattice identities over every pair, and associativity over
/// every triple, of a family of subspaces closed under join, meet and ortho.
pub fn lattice_law_defects(l: &[Subspace]) -> Vec<String> {
    let mut bad = Vec::new();
    let Some(first) = l.first() else {
        return bad;
    };
    let n = first.ambient();
    let index = |x: &Subspace| l.iter().position(|y| y == x);
    let (Some(zero), Some(full)) = (index(&Subspace::zero(n)), index(&Subspace::full(n))) else {
        return vec!["family lacks a bound".into()];
    };
    let mut ortho = Vec::with_capacity(l.len());
    for p in l {
        match index(&p.ortho()) {
            Some(k) => ortho.push(k),
            None => return vec![format!("not closed under ortho at {p}")],
        }
    }
    let k = l.len();
    let mut join = vec![0; k * k];
    let mut meet = vec![0; k * k];
    for (i, p) in l.iter().enumerate() {
        for (j, q) in l.iter().enumerate() {
            match (index(&p.join(q)), index(&p.meet(q))) {
                (Some(a), Some(b)) => {
                    join[i * k + j] = a;
                    meet[i * k + j] = b;
                }
                _ => return vec![format!("not closed at {p}, {q}")],
            }
        }
    }
    let j = |a: usize, b: usize| join[a * k + b];
    let m = |a: usize, b: usize| meet[a * k + b];
    for p in 0..k {
        let pp = ortho[p];
        if ortho[pp] != p {
            bad.push(format!("ortho not involutive at {}", l[p]));
        }
        if m(p, pp) != zero || j(p, pp) != full {
            bad.push(format!("complement fails at {}", l[p]));
        }
        for q in 0..k {
            let (x, y) = (&l[p], &l[q]);
            if j(p, q) != j(q, p) || m(p, q) != m(q, p) {
                bad.push(format!("commutativity fails at {x}, {y}"));
            }
            if j(p, m(p, q)) != p || m(p, j(p, q)) != p {
                bad.push(format!("absorption fails at {x}, {y}"));
            }
            if ortho[j(p, q)] != m(pp, ortho[q]) {
                bad.push(format!("De Morgan fails at {x}, {y}"));
            }
            let le = x.leq(y);
            if le != (m(p, q) == p) {
                bad.push(format!("order disagrees with meet at {x}, {y}"));
            }
            if le {
                if !l[ortho[q]].leq(&l[pp]) {
                    bad.push(format!("ortho not antitone at {x}, {y}"));
                }
                if j(p, m(q, pp)) != q {
                    bad.push(format!("orthomodular law fails at {x}, {y}"));
                }
            }
            for (r, z) in l.iter().enumerate() {
                if j(j(p, q), r) != j(p, j(q, r)) || m(m(p, q), r) != m(p, m(q, r)) {
                    bad.push(format!("associativity fails at {x}, {y}, {z}"));
                }
            }
        }
    }
    bad
}

fn run_rows(ctx: &RunContext) -> Result<Vec<CheckRow>> {
    let mut out = Rows::new(ctx.scope());
    determinate_rows(ctx, &mut out);
    plain_rows(ctx, &mut out)?;
    if let Some(ext) = &ctx.ext {
        extended_rows(ctx, ext, &mut out)?;
    }
    Ok(out.rows)
}

fn determinate_rows(ctx: &RunContext, out: &mut Rows) {
    let atoms = ctx.atoms.atoms();
    let mut bad = Vec::new();
    for (i, a) in atoms.iter().enumerate() {
        for b in &atoms[i + 1..] {
            if !a.is_orthogonal_to(b) {
                bad.push(format!("{a} not orthogonal to {b}"));
            }
        }
    }
    let joined = atoms
        .iter()
        .fold(Subspace::zero(ctx.scenario.dimension), |acc, a| acc.join(a));
    if !ctx.state.leq(&joined) {
        bad.push("state not below the join of its atoms".into());
    }
    if ctx.atoms.atom_in(ctx.spec.eigenspace) != Some(&ctx.e_r) {
        bad.push("chosen atom missing".into());
    }
    out.defects("true-atoms", &bad, &format!("{} atoms", atoms.len()));

    let d = match ctx.determinate() {
        Ok(d) => d,
        Err(e) => {
            out.skip("determinate-sublattice", e.to_string());
            return;
        }
    };
    let outside: Vec<String> = d
        .iter()
        .filter(|p| !in_determinate_sublattice(p, &ctx.atoms))
        .map(ToString::to_string)
        .collect();
    out.defects(
        "determinate-sublattice",
        &outside,
        &format!("{} elements", d.len()),
    );

    let mut hom_bad = Vec::new();
    for a in atoms {
        let v = |p: &Subspace| atom_truth(a, p);
        let n = ctx.scenario.dimension;
        if v(&Subspace::zero(n)) || !v(&Subspace::full(n)) {
            hom_bad.push(format!("bounds fail for atom {a}"));
        }
        if atoms.iter().filter(|b| v(b)).count() != 1 {
            hom_bad.push(format!("atom {a}: not exactly one true atom"));
        }
        for p in &d {
            if v(p) == v(&p.ortho()) {
                hom_bad.push(format!("atom {a}: complement fails at {p}"));
            }
            for q in &d {
                if v(&p.meet(q)) != (v(p) && v(q)) || v(&p.join(q)) != (v(p) || v(q)) {
                    hom_bad.push(format!("atom {a}: not a homomorphism at {p}, {q}"));
                }
            }
        }
    }
    out.defects(
        "two-valued-homomorphism",
        &hom_bad,
        &format!("{} atom choices over {} elements", atoms.len(), d.len()),
    );

    let site = ctx.plain.site();
    let mut truth_bad = Vec::new();
    let mut converse = 0;
    for p in &d {
        let top = valuation(site, ctx.base, &ctx.r, p).is_top(site);
        if atom_truth(&ctx.e_r, p) && !top {
            truth_bad.push(p.to_string());
        }
        if top && !atom_truth(&ctx.e_r, p) {
            converse += 1;
        }
    }
    out.defects(
        "determinate-truth",
        &truth_bad,
        &format!("true determinate propositions are top; {converse} top values without a true bit"),
    );
}

fn plain_rows(ctx: &RunContext, out: &mut Rows) -> Result<()> {
    let site = ctx.plain.site();
    let u = &ctx.universe;
    let cap = ctx.scenario.caps.sieve_enum;
    let monoid = site.monoid();

    let mut bad: Vec<String> = Vec::new();
    bad.extend(
        site.identity_defects()
            .iter()
            .map(|d| format!("identity {d}")),
    );
    bad.extend(
        site.composition_defects()
            .iter()
            .map(|d| format!("composite {d:?}")),
    );
    bad.extend(
        site.associativity_defects()
            .iter()
            .map(|d| format!("associativity {d:?}")),
    );
    bad.extend(
        ctx.plain
            .hom_partition_defects()
            .iter()
            .map(|d| format!("hom {d:?}")),
    );
    out.defects(
        "plain-site-laws",
        &bad,
        &format!(
            "{} objects, {} arrows",
            site.objects().len(),
            site.arrows().len()
        ),
    );

    let mut proj_bad = Vec::new();
    let mut rays: Vec<&Subspace> = site.rays().iter().collect();
    if let Some(x) = &ctx.ext {
        rays.extend(x.site().rays().iter());
    }
    for e in &rays {
        for o in &ctx.scenario.observables {
            for (q, pq) in o.eigenspaces().iter().zip(o.projectors()) {
                if e.project_onto(q) != e.apply(pq) {
                    proj_bad.push(format!("{e} on {q}"));
                }
            }
        }
    }
    out.defects(
        "projection-agreement",
        &proj_bad,
        "lattice projection equals projector image",
    );

    let mut act_bad: Vec<String> = Vec::new();
    act_bad.extend(
        u.functoriality_defects(monoid)
            .iter()
            .map(|d| format!("functoriality {d:?}")),
    );
    act_bad.extend(
        u.monotonicity_defects(monoid)
            .iter()
            .map(|d| format!("monotonicity {d:?}")),
    );
    out.defects(
        "action-laws",
        &act_bad,
        &format!("{} propositions", u.len()),
    );

    let mut nat_bad = Vec::new();
    for q in ctx.observable.eigenspaces() {
        let sigma = GlobalElement::by_projection(site, u, q)?;
        nat_bad.extend(
            sigma
                .naturality_defects(site, u)
                .into_iter()
                .map(|m| (q.to_string(), m)),
        );
    }
    out.defects(
        "state-naturality",
        &nat_bad,
        "projected state is a global element",
    );

    let atom_sheaf = Presheaf::new(
        (0..site.objects().len())
            .map(|o| {
                compute_atoms(site.object_ray(o), ctx.observable)
                    .augmented()
                    .iter()
                    .map(|a| u.require(a))
                    .collect::<Result<BTreeSet<usize>>>()
            })
            .collect::<Result<Vec<_>>>()?,
    );
    let witness = atom_sheaf.closure_witness(site, u);
    out.push(
        "atom-presheaf",
        witness.is_none(),
        "exhaustive",
        match witness {
            None => "atom sets are carried into atom sets".to_string(),
            Some((m, x)) => format!("arrow {m} moves {} out", u.get(x)),
        },
    );

    let sigma = GlobalElement::by_projection(site, u, &ctx.r)?;
    let t = sigma.up_set(u);
    let l = Presheaf::full(site, u);
    let mut filt: Vec<String> = Vec::new();
    if let Err(e) = t.validate_sub(site, u, &l) {
        filt.push(e.to_string());
    }
    filt.extend(
        t.filter_defects(u)
            .iter()
            .map(|(o, d)| format!("object {o}: {d}")),
    );
    out.defects(
        "true-subobject-filter",
        &filt,
        "up-closed and meet-closed at every object",
    );

    let mut oracle_bad = Vec::new();
    let mut floor_bad = Vec::new();
    for o in 0..site.objects().len() {
        let floor = bottom_annihilator(site, o, &site.object_ray(o).project_onto(&ctx.r));
        for (k, p) in u.props().iter().enumerate() {
            let v = valuation(site, o, &ctx.r, p);
            if characteristic(site, u, &t, o, k) != v {
                oracle_bad.push((o, ctx.prop_name(p)));
            }
            if !floor.leq(&v) {
                floor_bad.push((o, ctx.prop_name(p)));
            }
        }
    }
    let count = format!("{} stages x {} propositions", site.objects().len(), u.len());
    out.defects("valuation-oracle", &oracle_bad, &count);
    out.defects("annihilator-floor", &floor_bad, &count);

    let (down, down_base) = ctx.plain.restrict_down(ctx.base);
    let mut down_bad = Vec::new();
    let moved = GlobalElement::by_transport(down.site(), u, down_base, &ctx.e_r);
    let projected = GlobalElement::by_projection(down.site(), u, &ctx.r)?;
    if moved.as_ref().ok() != Some(&projected) {
        down_bad.push("transported state differs from projected state".to_string());
    }
    for p in u.props() {
        let local: BTreeSet<_> = valuation(down.site(), down_base, &ctx.r, p)
            .arrows()
            .iter()
            .map(|&m| down.site().signature(m))
            .collect();
        let full: BTreeSet<_> = valuation(site, ctx.base, &ctx.r, p)
            .arrows()
            .iter()
            .map(|&m| site.signature(m))
            .collect();
        if local != full {
            down_bad.push(ctx.prop_name(p));
        }
    }
    out.defects(
        "down-set-invariance",
        &down_bad,
        &format!(
            "{} of {} objects reachable",
            down.site().objects().len(),
            site.objects().len()
        ),
    );

    let conditions = valuation_conditions(site, ctx.base, &ctx.r, u.props());
    out.push(
        "valuation-monotone",
        conditions.monotone_failures == 0,
        "exhaustive",
        format!("{} pairs violate", conditions.monotone_failures),
    );
    out.push(
        "valuation-exclusivity",
        conditions.exclusivity_failures == 0,
        "exhaustive",
        format!("{} pairs violate", conditions.exclusivity_failures),
    );
    out.push(
        "valuation-unit",
        conditions.unit_holds,
        "exhaustive",
        "value of the whole space is top",
    );
    let floor = bottom_annihilator(site, ctx.base, &ctx.e_r);
    // the verdict is reproduced when the null value is exactly the annihilator
    out.push(
        "null-in-omega",
        conditions.null_is_bottom_of_restricted && conditions.null_is_bottom_of_omega == floor.is_empty(),
        "exhaustive",
        if conditions.null_is_bottom_of_omega {
            "null value is the empty sieve".to_string()
        } else {
            format!(
                "condition fails as expected: null value has {} arrows, bottom has none",
                conditions.null_value_size
            )
        },
    );
    out.push(
        "null-in-restricted",
        conditions.null_is_bottom_of_restricted,
        "exhaustive",
        "null value is the bottom of the restricted classifier",
    );

    let mut audit_rows = |law: &str, stages: Vec<Result<StageHeyting>>| {
        let mut failures = Vec::new();
        let mut sampled = 0;
        let mut skipped = 0;
        let mut sizes = Vec::new();
        for st in stages {
            match st {
                Ok(h) => {
                    let a = h.audit(site, TRIPLE_BUDGET);
                    sizes.push(a.elements);
                    if !a.exhaustive {
                        sampled += 1;
                    }
                    failures.extend(
                        a.failures
                            .into_iter()
                            .map(|f| format!("stage {}: {f}", h.base)),
                    );
                }
                Err(e) if is_cap(&e) => skipped += 1,
                Err(e) => failures.push(e.to_string()),
            }
        }
        let mode = if sampled > 0 || skipped > 0 {
            "sampled"
        } else {
            "exhaustive"
        };
        let detail = format!(
            "stage sizes {sizes:?}; {sampled} sampled, {skipped} beyond cap; {}",
            failures
                .first()
                .cloned()
                .unwrap_or_else(|| "no defects".into())
        );
        out.push(law, failures.is_empty(), mode, detail);
    };
    let n = site.objects().len();
    audit_rows(
        "omega-heyting",
        (0..n).map(|o| StageHeyting::omega(site, o, cap)).collect(),
    );
    let delta = DeltaOmega::for_eigenspace(site, &ctx.r);
    audit_rows(
        "restricted-heyting",
        (0..n).map(|o| delta.heyting(site, o, cap)).collect(),
    );

    match delta.stability_defects(site, cap) {
        Ok(bad) => out.defects(
            "restricted-stability",
            &bad,
            "pullbacks stay above the annihilator",
        ),
        Err(e) => out.skip("restricted-stability", e.to_string()),
    }
    let omega_size = crate::topos::enumerate_sieves(site, ctx.base, cap).map(|v| v.len());
    let delta_size = delta.stage(site, ctx.base, cap).map(|v| v.len());
    out.push(
        "restricted-bottom",
        floor.is_empty() || floor != Sieve::empty(ctx.base),
        "exhaustive",
        format!(
            "annihilator has {} arrows; stage sizes {:?} and {:?}",
            floor.len(),
            omega_size.ok(),
            delta_size.ok()
        ),
    );

    semi_row(
        out,
        "semiclassifier-omega",
        check_semiclassifier(site, u, &t, &l, &FullOmega, cap),
    );
    semi_row(
        out,
        "semiclassifier-restricted",
        check_semiclassifier(site, u, &t, &l, &delta, cap),
    );
    Ok(())
}

fn semi_row(out: &mut Rows, law: &str, rep: Result<SemiClassifierReport>) {
    match rep {
        Ok(r) => out.push(
            law,
            r.passed(),
            r.mode(),
            format!(
                "{} elements over {} objects; failures: factor {}, natural {}, pullback {}, unique {}",
                r.elements,
                r.objects,
                r.factorization_failures,
                r.naturality_failures,
                r.pullback_failures,
                r.uniqueness_failures
            ),
        ),
        Err(e) => out.push(law, false, "exhaustive", e.to_string()),
    }
}

fn extended_rows(ctx: &RunContext, ext: &ExtendedSite, out: &mut Rows) -> Result<()> {
    let site = ext.site();
    let u = &ctx.universe;
    let cap = ctx.scenario.caps.sieve_enum;

    let mut bad: Vec<String> = Vec::new();
    bad.extend(
        site.identity_defects()
            .iter()
            .map(|d| format!("identity {d}")),
    );
    bad.extend(
        site.composition_defects()
            .iter()
            .map(|d| format!("composite {d:?}")),
    );
    bad.extend(
        site.associativity_defects()
            .iter()
            .map(|d| format!("associativity {d:?}")),
    );
    out.defects(
        "extended-site-laws",
        &bad,
        &format!(
            "{} objects, {} arrows",
            site.objects().len(),
            site.arrows().len()
        ),
    );

    let mut emb = Vec::new();
    for rho in 0..ext.observables().len() {
        emb.extend(ext.embedding_defects(rho)?.into_iter().map(|t| (rho, t)));
    }
    out.defects(
        "level-embedding",
        &emb,
        "each level equals its independently built plain site",
    );

    let (unreached, skipped) = ext.reachability();
    out.defects(
        "level-reachability",
        &unreached,
        &format!("{skipped} object-level pairs skipped for missing projectors"),
    );

    let rays = site.rays();
    let obs = &ctx.scenario.observables;
    let mut b1 = Vec::new();
    let mut b2 = Vec::new();
    let mut chains = 0;
    for a in obs {
        for b in obs {
            if !observable_leq(a, b) {
                continue;
            }
            if let Some(w) = atom_count_monotone(rays, a, b) {
                b1.push(format!("{} <= {}: {w:?}", a.name, b.name));
            }
            for c in obs {
                if observable_leq(b, c) {
                    chains += 1;
                    if let Some(w) = atom_chain_squeeze(rays, a, b, c) {
                        b2.push(format!("{} <= {} <= {}: {w}", a.name, b.name, c.name));
                    }
                }
            }
        }
    }
    out.defects("atom-count-monotone", &b1, &format!("{} rays", rays.len()));
    out.defects(
        "atom-chain-squeeze",
        &b2,
        &format!("{chains} chains over {} rays", rays.len()),
    );

    let mut audits = Vec::new();
    let plains: Vec<PlainSite> = (0..ext.observables().len())
        .map(|k| ext.restrict_to_rho(k))
        .collect();
    let mut beyond = 0;
    for o in 0..site.objects().len() {
        let b = Bridge::with_plain(ext, o, plains[site.object(o).rho].clone());
        match b.audit(cap) {
            Ok(a) => audits.push(a),
            Err(e) if is_cap(&e) => beyond += 1,
            Err(e) => return Err(e),
        }
    }
    let mode = if beyond > 0 { "sampled" } else { "exhaustive" };
    let sum =
        |f: &dyn Fn(&crate::bridge::BridgeAudit) -> usize| audits.iter().map(f).sum::<usize>();
    let stages = format!("{} stages audited, {beyond} beyond cap", audits.len());
    let mut law = |name: &str, failures: usize, extra: String| {
        out.push(
            name,
            failures == 0,
            mode,
            format!("{stages}; {failures} failures{extra}"),
        );
    };
    law(
        "flat-sharp-identity",
        sum(&|a| a.flat_sharp_failures),
        String::new(),
    );
    law(
        "sharp-least-sieve",
        sum(&|a| a.sharp_not_least_sieve),
        String::new(),
    );
    law(
        "natural-map",
        sum(&|a| a.natural_map_failures + a.image_not_natural),
        String::new(),
    );
    law(
        "fixpoints-are-image",
        audits.iter().filter(|a| a.fixpoint_mismatch).count(),
        format!(
            "; extended stage sizes {:?}",
            audits.iter().map(|a| a.extended_sieves).collect::<Vec<_>>()
        ),
    );
    law(
        "bridge-lattice",
        sum(&|a| a.order_failures + a.lattice_failures + a.bound_failures),
        String::new(),
    );
    law(
        "stage-isomorphism",
        audits
            .iter()
            .filter(|a| a.plain_sieves != a.natural_sieves)
            .count(),
        format!(
            "; natural stage sizes {:?}",
            audits.iter().map(|a| a.natural_sieves).collect::<Vec<_>>()
        ),
    );
    law(
        "natural-implication",
        sum(&|a| a.implication_transport_failures + a.implication_not_greatest),
        String::new(),
    );
    law(
        "implication-order",
        sum(&|a| a.implication_order_failures),
        format!(
            "; {} strict pairs, {} plain implications leave the natural sieves",
            sum(&|a| a.implication_strict_pairs),
            sum(&|a| a.implication_leaves_natural)
        ),
    );
    law(
        "natural-companion",
        sum(&|a| a.companion_failures),
        String::new(),
    );

    let nat = NaturalOmega { ext };
    match nat.stability_defects(site, cap) {
        Ok(bad) => out.defects(
            "natural-stability",
            &bad,
            "pullbacks of natural sieves are natural",
        ),
        Err(e) => out.skip("natural-stability", e.to_string()),
    }

    let (down, down_base) = ext.restrict_down(ctx.ext_base);
    let dsite = down.site();
    let sigma = GlobalElement::by_transport(dsite, u, down_base, &ctx.e_r);
    match &sigma {
        Ok(g) => {
            let bad = g.naturality_defects(dsite, u);
            out.defects(
                "extended-state-naturality",
                &bad,
                &format!("{} objects below the stage", dsite.objects().len()),
            );
        }
        Err(e) => out.push(
            "extended-state-naturality",
            false,
            "exhaustive",
            e.to_string(),
        ),
    }
    let t = sigma.map(|g| g.up_set(u));
    let l_down = Presheaf::full(dsite, u);
    if let Ok(t) = &t {
        let w = projectivity_witnesses(&down, u, t, &l_down);
        out.push(
            "projective-subobject",
            w.is_empty(),
            "exhaustive",
            format!("true subobject below the stage: {} witnesses", w.len()),
        );
        let bic = projectivity_biconditional_failures(&down, u, t, &l_down);
        out.defects(
            "projectivity-biconditional",
            &bic,
            "true subobject below the stage",
        );
        semi_row(
            out,
            "semiclassifier-natural",
            check_semiclassifier(dsite, u, t, &l_down, &NaturalOmega { ext: &down }, cap),
        );
        let mut mismatch = Vec::new();
        for o in 0..dsite.objects().len() {
            for (k, p) in u.props().iter().enumerate() {
                let chi = characteristic(dsite, u, t, o, k);
                if chi != valuation(dsite, o, &ctx.r, p) || !is_natural(&down, &chi) {
                    mismatch.push((o, ctx.prop_name(p)));
                }
                if natural_closure(&down, &chi) != chi {
                    mismatch.push((o, "not fixed".into()));
                }
            }
        }
        out.defects(
            "natural-characteristic",
            &mismatch,
            "characteristic map equals the extended valuation and is natural",
        );
    }

    let l = Presheaf::full(site, u);
    for spec in &ctx.scenario.subobjects {
        let rules = |rho: usize| spec.rule(ctx.spec.extended[rho]);
        let n = ctx.subobject(ext, &rules);
        let law_name = format!("projective-subobject:{}", spec.name);
        if let Err(e) = n.validate_sub(site, u, &l) {
            out.push(&law_name, false, "exhaustive", e.to_string());
            continue;
        }
        let w = projectivity_witnesses(ext, u, &n, &l);
        let detail = match w.first() {
            None => "projective".to_string(),
            Some(x) => {
                let a = site.arrow(x.arrow);
                format!(
                    "{} witnesses; first at {}, element {}, arrow {} to {}",
                    w.len(),
                    object_label(ext, x.object),
                    u.get(x.element),
                    site.monoid().name(a.op),
                    object_label(ext, a.cod)
                )
            }
        };
        out.push(&law_name, w.is_empty(), "exhaustive", detail);
        let bic = projectivity_biconditional_failures(ext, u, &n, &l);
        out.defects(
            &format!("projectivity-biconditional:{}", spec.name),
            &bic,
            "detectors agree",
        );
    }

    // every object paired with every eigenspace its ray is not orthogonal to
    let per_object: Vec<(usize, Vec<String>)> = (0..site.objects().len())
        .into_par_iter()
        .map(|o| {
            let key = site.object(o);
            let mut checked = 0;
            let mut failing = Vec::new();
            for q in ext.observables()[key.rho].eigenspaces() {
                if site.object_ray(o).project_onto(q).is_zero() {
                    continue;
                }
                for row in equivalence_rows(ext, o, q, u.props()) {
                    checked += 1;
                    if !row.passed() {
                        failing.push(format!(
                            "{} on {q}: {}",
                            object_label(ext, o),
                            row.proposition
                        ));
                    }
                }
            }
            (checked, failing)
        })
        .collect();
    let checked: usize = per_object.iter().map(|(c, _)| c).sum();
    let failing: Vec<String> = per_object.into_iter().flat_map(|(_, f)| f).collect();
    out.defects(
        "valuation-equivalence",
        &failing,
        &format!("{checked} stage-eigenspace-proposition triples"),
    );
    Ok(())
}

fn object_label(ext: &ExtendedSite, o: usize) -> String {
    let key = ext.site().object(o);
    format!("ray {} at {}", key.ray, ext.observables()[key.rho].name)
}

/// One arrow of a reported sieve.
#[derive(Clone, Debug, Serialize, PartialEq, Eq, PartialOrd, Ord)]
pub struct ArrowEntry {
    pub op: usize,
    pub op_name: String,
    pub cod_ray: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cod_observable: Option<String>,
}

fn arrows_of(site: &FiniteSite, s: &Sieve, names: Option<&[String]>) -> Vec<ArrowEntry> {
    let mut v: Vec<ArrowEntry> = s
        .arrows()
        .iter()
        .map(|&m| {
            let a = site.arrow(m);
            let cod = site.object(a.cod);
            ArrowEntry {
                op: a.op,
                op_name: site.monoid().name(a.op).to_string(),
                cod_ray: cod.ray,
                cod_observable: names.map(|n| n[cod.rho].clone()),
            }
        })
        .collect();
    v.sort();
    v
}

#[derive(Clone, Debug, Serialize)]
pub struct ExtendedValue {
    pub sieve: Vec<ArrowEntry>,
    pub natural_image: Vec<ArrowEntry>,
    pub flat_image: Vec<ArrowEntry>,
    pub sharp_of_plain: Vec<ArrowEntry>,
    pub flat_matches: bool,
    pub natural_flat_matches: bool,
    pub sharp_matches: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct PropositionValue {
    pub name: String,
    pub subspace: String,
    pub sieve: Vec<ArrowEntry>,
    pub is_top: bool,
    pub is_bottom_annihilator: bool,
    pub in_restricted: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub determinate_value: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extended: Option<ExtendedValue>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ValuationReport {
    pub scenario: String,
    pub run: String,
    pub state: String,
    pub observable: String,
    pub eigenspace: usize,
    pub true_atom: String,
    pub rays: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub extended_rays: Vec<String>,
    pub operators: Vec<String>,
    pub annihilator: Vec<ArrowEntry>,
    pub propositions: Vec<PropositionValue>,
}

/// Values of the run's selected propositions; "all" selects every declared one.
pub fn run_valuate(s: &Scenario, run: &str) -> Result<ValuationReport> {
    let spec = s
        .run(run)
        .ok_or_else(|| crate::error::invalid("run", format!("unknown run `{run}`")))?;
    let monoid = close_monoid(s)?;
    let ctx = RunContext::build(s, spec, monoid.clone())?;
    let site = ctx.plain.site();
    let floor = bottom_annihilator(site, ctx.base, &ctx.e_r);
    let d = ctx.determinate().ok();
    let selected: Vec<usize> = spec
        .propositions
        .clone()
        .unwrap_or_else(|| (0..s.propositions.len()).collect());
    let bridge = ctx.ext.as_ref().map(|x| Bridge::new(x, ctx.ext_base));
    let names = ctx.ext.as_ref().map(|x| x.observable_names());
    let propositions = selected
        .par_iter()
        .map(|&k| {
            let (name, p) = &s.propositions[k];
            let v = valuation(site, ctx.base, &ctx.r, p);
            let in_d = d
                .as_ref()
                .map(|d| d.contains(p))
                .unwrap_or_else(|| in_determinate_sublattice(p, &ctx.atoms));
            let extended = match (&ctx.ext, &bridge) {
                (Some(x), Some(b)) => {
                    let xs = x.site();
                    let big = valuation(xs, ctx.ext_base, &ctx.r, p);
                    let nat = natural_closure(x, &big);
                    let flat = b.flat(&big);
                    let plain_v = valuation(b.plain().site(), b.plain_obj(), &ctx.r, p);
                    let sharp = b.sharp(&plain_v);
                    Some(ExtendedValue {
                        sieve: arrows_of(xs, &big, names.as_deref()),
                        natural_image: arrows_of(xs, &nat, names.as_deref()),
                        flat_image: arrows_of(b.plain().site(), &flat, None),
                        sharp_of_plain: arrows_of(xs, &sharp, names.as_deref()),
                        flat_matches: flat == plain_v,
                        natural_flat_matches: b.flat(&nat) == plain_v,
                        sharp_matches: sharp == nat,
                    })
                }
                _ => None,
            };
            PropositionValue {
                name: name.clone(),
                subspace: p.to_string(),
                sieve: arrows_of(site, &v, None),
                is_top: v.is_top(site),
                is_bottom_annihilator: v == floor,
                in_restricted: floor.leq(&v),
                determinate_value: in_d.then(|| atom_truth(&ctx.e_r, p)),
                extended,
            }
        })
        .collect();
    Ok(ValuationReport {
        scenario: s.name.clone(),
        run: spec.name.clone(),
        state: s.states[spec.state].0.clone(),
        observable: ctx.observable.name.clone(),
        eigenspace: spec.eigenspace,
        true_atom: ctx.e_r.to_string(),
        rays: site.rays().iter().map(ToString::to_string).collect(),
        extended_rays: ctx
            .ext
            .as_ref()
            .map(|x| x.site().rays().iter().map(ToString::to_string).collect())
            .unwrap_or_default(),
        operators: (0..monoid.len())
            .map(|k| monoid.name(k).to_string())
            .collect(),
        annihilator: arrows_of(site, &floor, None),
        propositions,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct RunDump {
    pub run: String,
    pub plain: SiteDump,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extended: Option<SiteDump>,
}

pub fn dump_sites(s: &Scenario) -> Result<Vec<RunDump>> {
    let monoid = close_monoid(s)?;
    s.runs
        .iter()
        .map(|spec| {
            let ctx = RunContext::build(s, spec, monoid.clone())?;
            Ok(RunDump {
                run: spec.name.clone(),
                plain: ctx
                    .plain
                    .site()
                    .dump(std::slice::from_ref(&ctx.observable.name)),
                extended: ctx
                    .ext
                    .as_ref()
                    .map(|x| x.site().dump(&x.observable_names())),
            })
        })
        .collect()
}
