//! Acceptance suite: one line per criterion, exit status nonzero on any failure.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use qtopos::bridge::{is_natural, natural_closure, projectivity_witnesses, Bridge, NaturalOmega};
use qtopos::check::{close_monoid, run_check, RunContext};
use qtopos::lattice::Subspace;
use qtopos::linalg::{ExactMatrix, Vector};
use qtopos::modal::{enumerate_determinate_sublattice, observable_leq, Observable};
use qtopos::scenario::{Rule, Scenario};
use qtopos::site::{ExtendedSite, FiniteSite, ObjectKey};
use qtopos::topos::{
    bottom_annihilator, characteristic, check_semiclassifier, enumerate_sieves, valuation_conditions,
    valuation, DeltaOmega, GlobalElement, Presheaf, Sieve, SubClassifier,
};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

const BUNDLED: [&str; 3] = ["qubit", "qutrit", "ququart"];

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn load(name: &str) -> Scenario {
    Scenario::load(&root().join("scenarios").join(format!("{name}.json")))
        .expect("bundled scenario loads")
}

fn load_fixture(name: &str) -> Scenario {
    Scenario::load(
        &PathBuf::from(env!("CARGO_MANIFEST_DIR"))
            .join("tests/fixtures")
            .join(format!("{name}.json")),
    )
    .expect("fixture loads")
}

fn ensure(ok: bool, what: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(what())
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// Calls `f` with the context of every run of `s`.
fn each_run(
    s: &Scenario,
    mut f: impl FnMut(&RunContext) -> Result<(), String>,
) -> Result<usize, String> {
    let monoid = close_monoid(s).map_err(err)?;
    for spec in &s.runs {
        let ctx = RunContext::build(s, spec, monoid.clone()).map_err(err)?;
        f(&ctx).map_err(|e| format!("{}/{}: {e}", s.name, spec.name))?;
    }
    Ok(s.runs.len())
}

/// `a <= p` by rank: adding the basis of `a` to that of `p` does not grow it.
fn below(a: &Subspace, p: &Subspace) -> bool {
    let n = p.ambient();
    let mut rows: Vec<Vector> = p.basis().to_vec();
    let before = if rows.is_empty() {
        0
    } else {
        ExactMatrix::from_rows(rows.clone(), n).unwrap().rank()
    };
    rows.extend(a.basis().iter().cloned());
    if rows.is_empty() {
        return true;
    }
    ExactMatrix::from_rows(rows, n).unwrap().rank() == before
}

/// `op` kills the subspace.
fn kills(op: &ExactMatrix, s: &Subspace) -> bool {
    s.basis()
        .iter()
        .all(|v| op.mul_vec(v).unwrap().iter().all(|x| x.is_zero()))
}

/// Nonzero projections of the state vector by the eigenprojectors.
fn atoms_by_projectors(e: &Subspace, rho: &Observable) -> BTreeSet<Subspace> {
    rho.projectors()
        .iter()
        .filter_map(|p| {
            let w = p.mul_vec(&e.basis()[0]).unwrap();
            Subspace::ray(&w).ok()
        })
        .collect()
}

/// Every closed subset of arrows out of `obj`, by exhaustive subset scan.
fn brute_sieves(site: &FiniteSite, obj: usize) -> BTreeSet<BTreeSet<usize>> {
    let out = site.out(obj);
    assert!(out.len() < 20, "stage too large for brute force");
    let mut all = BTreeSet::new();
    for mask in 0u32..(1 << out.len()) {
        let s: BTreeSet<usize> = (0..out.len())
            .filter(|k| mask & (1 << k) != 0)
            .map(|k| out[k])
            .collect();
        let closed = s.iter().all(|&m| {
            site.out(site.arrow(m).cod)
                .iter()
                .all(|&n| site.compose(m, n).is_none_or(|c| s.contains(&c)))
        });
        if closed {
            all.insert(s);
        }
    }
    all
}

fn op_names(site: &FiniteSite, s: &Sieve) -> Vec<String> {
    s.arrows()
        .iter()
        .map(|&m| site.monoid().name(site.arrow(m).op).to_string())
        .collect()
}

fn criterion_1() -> Check {
    let s = load("qutrit");
    let monoid = close_monoid(&s).map_err(err)?;
    let ctx = RunContext::build(&s, s.run("first").unwrap(), monoid).map_err(err)?;
    let start = Instant::now();
    let d = enumerate_determinate_sublattice(&ctx.atoms, &[], s.caps.lattice).map_err(err)?;
    // D is the Boolean algebra on the blocks {e1}, {(0,1,1)} and {(0,1,-1)}
    let blocks: Vec<Vector> = [["1", "0", "0"], ["0", "1", "1"], ["0", "1", "-1"]]
        .iter()
        .map(|b| b.iter().map(|x| x.parse().unwrap()).collect())
        .collect();
    let oracle: BTreeSet<Subspace> = (0..8u32)
        .map(|mask| {
            let vs: Vec<Vector> = (0..3)
                .filter(|k| mask & (1 << k) != 0)
                .map(|k| blocks[k].clone())
                .collect();
            Subspace::span(3, &vs).unwrap()
        })
        .collect();
    ensure(d.len() == 8, || format!("{} elements", d.len()))?;
    ensure(d.iter().cloned().collect::<BTreeSet<_>>() == oracle, || {
        "elements differ from the block algebra".into()
    })?;
    let atoms = ctx.atoms.atoms();
    ensure(atoms.len() == 2, || format!("{} atoms", atoms.len()))?;
    let mut pairs = 0;
    for a in atoms {
        let v = |p: &Subspace| below(a, p);
        ensure(!v(&Subspace::zero(3)) && v(&Subspace::full(3)), || {
            "bounds".into()
        })?;
        for p in &d {
            ensure(v(p) != v(&p.ortho()), || format!("complement at {p}"))?;
            for q in &d {
                pairs += 1;
                ensure(v(&p.meet(q)) == (v(p) && v(q)), || {
                    format!("meet at {p}, {q}")
                })?;
                ensure(v(&p.join(q)) == (v(p) || v(q)), || {
                    format!("join at {p}, {q}")
                })?;
            }
        }
    }
    let took = start.elapsed();
    ensure(took < Duration::from_secs(1), || format!("took {took:?}"))?;
    Ok(format!(
        "8 elements; {} atom choices, {pairs} pairs; {took:.0?}",
        atoms.len()
    ))
}

fn criterion_2() -> Check {
    let start = Instant::now();
    let s = load("qubit");
    let monoid = close_monoid(&s).map_err(err)?;
    let names: BTreeSet<&str> = (0..monoid.len()).map(|k| monoid.name(k)).collect();
    ensure(names == BTreeSet::from(["0", "I", "p1", "p2"]), || {
        format!("monoid {names:?}")
    })?;
    let ctx = RunContext::build(&s, s.run("up").unwrap(), monoid).map_err(err)?;
    let site = ctx.plain.site();
    let omega = enumerate_sieves(site, ctx.base, s.caps.sieve_enum).map_err(err)?;
    let oracle = brute_sieves(site, ctx.base);
    ensure(omega.len() == 5 && oracle.len() == 5, || {
        format!("{} sieves, oracle {}", omega.len(), oracle.len())
    })?;
    ensure(
        omega
            .iter()
            .map(|x| x.arrows().clone())
            .collect::<BTreeSet<_>>()
            == oracle,
        || "enumeration differs from subset scan".into(),
    )?;
    let delta = DeltaOmega::for_eigenspace(site, &ctx.r);
    let stage = delta
        .stage(site, ctx.base, s.caps.sieve_enum)
        .map_err(err)?;
    ensure(stage.len() == 3, || {
        format!("{} restricted sieves", stage.len())
    })?;
    let mut sorted = stage.clone();
    sorted.sort_by_key(|x| x.len());
    ensure(sorted.windows(2).all(|w| w[0].leq(&w[1])), || {
        "not a chain".into()
    })?;
    ensure(op_names(site, &sorted[0]) == ["p2"], || {
        format!("bottom {:?}", op_names(site, &sorted[0]))
    })?;
    let killed: BTreeSet<usize> = site
        .out(ctx.base)
        .iter()
        .copied()
        .filter(|&m| kills(site.operator(m), &ctx.e_r))
        .collect();
    ensure(*sorted[0].arrows() == killed, || {
        "bottom is not the annihilator".into()
    })?;
    ensure(
        bottom_annihilator(site, ctx.base, &ctx.e_r) == sorted[0],
        || "annihilator mismatch".into(),
    )?;
    let took = start.elapsed();
    ensure(took < Duration::from_secs(1), || format!("took {took:?}"))?;
    Ok(format!(
        "5 sieves, restricted chain of 3 with bottom {{p2}}; {took:.0?}"
    ))
}

fn criterion_3() -> Check {
    let mut runs = 0;
    let mut pairs = 0;
    for name in BUNDLED {
        runs += each_run(&load(name), |ctx| {
            let site = ctx.plain.site();
            let props = ctx.universe.props();
            let conditions = valuation_conditions(site, ctx.base, &ctx.r, props);
            pairs += props.len() * props.len();
            ensure(conditions.monotone_failures == 0, || "monotonicity".into())?;
            ensure(conditions.exclusivity_failures == 0, || "exclusivity".into())?;
            ensure(conditions.unit_holds, || "unit".into())?;
            let null = valuation(
                site,
                ctx.base,
                &ctx.r,
                &Subspace::zero(ctx.scenario.dimension),
            );
            let killed: BTreeSet<usize> = site
                .out(ctx.base)
                .iter()
                .copied()
                .filter(|&m| kills(site.operator(m), &ctx.e_r))
                .collect();
            ensure(*null.arrows() == killed, || {
                "null value is not the annihilator".into()
            })?;
            ensure(!killed.is_empty(), || "annihilator is empty".into())?;
            ensure(!conditions.null_is_bottom_of_omega, || {
                "null condition unexpectedly holds in the full classifier".into()
            })?;
            let delta = DeltaOmega::for_eigenspace(site, &ctx.r);
            let h = delta
                .heyting(site, ctx.base, ctx.scenario.caps.sieve_enum)
                .map_err(err)?;
            ensure(h.bottom == null && conditions.null_is_bottom_of_restricted, || {
                "null value is not the restricted bottom".into()
            })
        })?;
    }
    Ok(format!(
        "{runs} runs, {pairs} proposition pairs; null verdicts reproduced"
    ))
}

fn scenarios_with_degenerate() -> Vec<Scenario> {
    let mut v: Vec<Scenario> = BUNDLED.iter().map(|n| load(n)).collect();
    v.push(load_fixture("degenerate"));
    v.push(load_fixture("adversarial"));
    v
}

fn criterion_4() -> Check {
    let mut compared = 0;
    for s in scenarios_with_degenerate() {
        each_run(&s, |ctx| {
            let site = ctx.plain.site();
            let u = &ctx.universe;
            let t = GlobalElement::by_projection(site, u, &ctx.r)
                .map_err(err)?
                .up_set(u);
            for o in 0..site.objects().len() {
                for (k, p) in u.props().iter().enumerate() {
                    compared += 1;
                    ensure(
                        characteristic(site, u, &t, o, k) == valuation(site, o, &ctx.r, p),
                        || format!("object {o}, proposition {p}"),
                    )?;
                }
            }
            if let Some(ext) = &ctx.ext {
                let (down, b) = ext.restrict_down(ctx.ext_base);
                let ds = down.site();
                let t = GlobalElement::by_transport(ds, u, b, &ctx.e_r)
                    .map_err(err)?
                    .up_set(u);
                for o in 0..ds.objects().len() {
                    for (k, p) in u.props().iter().enumerate() {
                        compared += 1;
                        ensure(
                            characteristic(ds, u, &t, o, k) == valuation(ds, o, &ctx.r, p),
                            || format!("extended object {o}, proposition {p}"),
                        )?;
                    }
                }
            }
            Ok(())
        })?;
    }
    Ok(format!("{compared} stage-proposition pairs agree"))
}

fn reachable(site: &FiniteSite, from: usize) -> BTreeSet<ObjectKey> {
    let mut seen = BTreeSet::from([from]);
    let mut queue = VecDeque::from([from]);
    while let Some(o) = queue.pop_front() {
        for &m in site.out(o) {
            let c = site.arrow(m).cod;
            if seen.insert(c) {
                queue.push_back(c);
            }
        }
    }
    seen.into_iter().map(|o| site.object(o)).collect()
}

fn criterion_5() -> Check {
    let mut compared = 0;
    for s in scenarios_with_degenerate() {
        each_run(&s, |ctx| {
            let site = ctx.plain.site();
            let (down, b) = ctx.plain.restrict_down(ctx.base);
            let ds = down.site();
            let keys: BTreeSet<ObjectKey> = ds.objects().iter().copied().collect();
            ensure(keys == reachable(site, ctx.base), || {
                "down-set differs from reachable objects".into()
            })?;
            for p in ctx.universe.props() {
                compared += 1;
                let sig = |site: &FiniteSite, v: Sieve| -> BTreeSet<_> {
                    v.arrows().iter().map(|&m| site.signature(m)).collect()
                };
                let local = sig(ds, valuation(ds, b, &ctx.r, p));
                let full = sig(site, valuation(site, ctx.base, &ctx.r, p));
                ensure(local == full, || format!("proposition {p}"))?;
            }
            Ok(())
        })?;
    }
    Ok(format!("{compared} valuations equal on the down-set"))
}

/// Intersection of every extended sieve containing the lifted arrows.
fn sharp_oracle(ext: &ExtendedSite, obj: usize, lifted: &BTreeSet<usize>, all: &[Sieve]) -> Sieve {
    let site = ext.site();
    all.iter()
        .filter(|x| lifted.is_subset(x.arrows()))
        .fold(Sieve::top(site, obj), |acc, x| acc.meet(x))
}

fn criterion_6() -> Check {
    let start = Instant::now();
    let s = load("qubit");
    let monoid = close_monoid(&s).map_err(err)?;
    let ctx = RunContext::build(&s, s.run("up").unwrap(), monoid).map_err(err)?;
    let ext = ctx.ext.as_ref().ok_or("no extended site")?;
    let site = ext.site();
    let cap = s.caps.sieve_enum;
    let mut pairs = 0;
    let coarse = ext.find_object(&ctx.state, 0).ok_or("no coarse object")?;
    for o in 0..site.objects().len() {
        let b = Bridge::new(ext, o);
        let ps = b.plain().site();
        let plain = enumerate_sieves(ps, b.plain_obj(), cap).map_err(err)?;
        let all = enumerate_sieves(site, o, cap).map_err(err)?;
        let (pt, pb) = (Sieve::top(ps, b.plain_obj()), Sieve::empty(b.plain_obj()));
        let (xt, xb) = (Sieve::top(site, o), Sieve::empty(o));
        for p in &plain {
            ensure(b.flat(&b.sharp(p)) == *p, || {
                format!("flat of sharp at object {o}")
            })?;
            ensure(b.sharp(p) == sharp_oracle(ext, o, &b.lift(p), &all), || {
                "sharp differs from intersection".into()
            })?;
            for q in &plain {
                pairs += 1;
                ensure(b.sharp(&p.join(q)) == b.sharp(p).join(&b.sharp(q)), || {
                    "sharp of join".into()
                })?;
                ensure(b.sharp(&p.meet(q)) == b.sharp(p).meet(&b.sharp(q)), || {
                    "sharp of meet".into()
                })?;
                ensure(p.leq(q) == b.sharp(p).leq(&b.sharp(q)), || {
                    "sharp order".into()
                })?;
            }
        }
        ensure(b.sharp(&pt) == xt && b.sharp(&pb) == xb, || {
            "sharp bounds".into()
        })?;
        ensure(b.flat(&xt) == pt && b.flat(&xb) == pb, || {
            "flat bounds".into()
        })?;
        let mut fixed = BTreeSet::new();
        let mut image = BTreeSet::new();
        for x in &all {
            let n = b.natural(x);
            ensure(n.leq(x), || "natural map is not deflationary".into())?;
            image.insert(n.arrows().clone());
            if n == *x {
                fixed.insert(x.arrows().clone());
            }
            for y in &all {
                pairs += 1;
                ensure(b.flat(&x.join(y)) == b.flat(x).join(&b.flat(y)), || {
                    "flat of join".into()
                })?;
                ensure(b.flat(&x.meet(y)) == b.flat(x).meet(&b.flat(y)), || {
                    "flat of meet".into()
                })?;
            }
        }
        ensure(fixed == image, || {
            format!("fixpoints differ from image at object {o}")
        })?;
        ensure(fixed.len() == plain.len(), || {
            format!("{} fixpoints vs {} plain sieves", fixed.len(), plain.len())
        })?;
        if o == coarse {
            ensure(fixed.len() == 5, || {
                format!("{} fixpoints at the coarse stage", fixed.len())
            })?;
        }
        let fixed: Vec<Sieve> = all
            .iter()
            .filter(|x| fixed.contains(x.arrows()))
            .cloned()
            .collect();
        for x in &fixed {
            for y in &fixed {
                let imp = b.natural_implies(x, y);
                ensure(b.flat(&imp) == b.flat(x).implies(ps, &b.flat(y)), || {
                    "implication transport".into()
                })?;
                let greatest = fixed
                    .iter()
                    .filter(|z| z.meet(x).leq(y))
                    .all(|z| z.leq(&imp));
                ensure(greatest && imp.meet(x).leq(y), || {
                    "transported implication is not the relative pseudocomplement".into()
                })?;
            }
        }
        ensure(b.audit(cap).map_err(err)?.passed(), || {
            format!("bridge audit at object {o}")
        })?;
    }
    let took = start.elapsed();
    ensure(took < Duration::from_secs(10), || format!("took {took:?}"))?;
    Ok(format!(
        "{} stages, {pairs} pairs; {took:.0?}",
        site.objects().len()
    ))
}

/// Stage-wise membership sets for a declared subobject.
fn declared(ctx: &RunContext, ext: &ExtendedSite, rules: &BTreeMap<usize, Rule>) -> Presheaf {
    let site = ext.site();
    let u = &ctx.universe;
    Presheaf::new(
        (0..site.objects().len())
            .map(|o| {
                let key = site.object(o);
                let global = ctx.spec.extended[key.rho];
                match rules.get(&global).copied().unwrap_or(Rule::All) {
                    Rule::All => (0..u.len()).collect(),
                    Rule::None => BTreeSet::new(),
                    Rule::RayFilter => (0..u.len())
                        .filter(|&p| below(site.object_ray(o), u.get(p)))
                        .collect(),
                }
            })
            .collect(),
    )
}

/// `(object, element)` pairs violating the transport condition between levels.
fn transport_violations(
    ext: &ExtendedSite,
    ctx: &RunContext,
    n: &Presheaf,
    m: &Presheaf,
) -> BTreeSet<(usize, usize)> {
    let site = ext.site();
    let u = &ctx.universe;
    let mut bad = BTreeSet::new();
    for o in 0..site.objects().len() {
        let rho = site.object(o).rho;
        for &x in m.members(o) {
            for &a in site.out(o) {
                let arrow = site.arrow(a);
                let y = u.act(arrow.op, x);
                let same = site.find_object(ObjectKey {
                    ray: site.object(arrow.cod).ray,
                    rho,
                });
                if let Some(c) = same {
                    if n.contains(arrow.cod, y) && !n.contains(c, y) {
                        bad.insert((o, x));
                    }
                }
            }
        }
    }
    bad
}

fn criterion_7() -> Check {
    let mut projective = 0;
    let mut non_projective = 0;
    let mut pairs = 0;
    for s in [load_fixture("adversarial"), load("qubit")] {
        each_run(&s, |ctx| {
            let ext = ctx.ext.as_ref().ok_or("no extended site")?;
            let u = &ctx.universe;
            let mut cases: Vec<(String, ExtendedSite, Presheaf, Presheaf)> = Vec::new();
            for sub in &s.subobjects {
                let n = declared(ctx, ext, &sub.rules);
                cases.push((
                    sub.name.clone(),
                    ext.clone(),
                    n,
                    Presheaf::full(ext.site(), u),
                ));
            }
            let (down, b) = ext.restrict_down(ctx.ext_base);
            let t = GlobalElement::by_transport(down.site(), u, b, &ctx.e_r)
                .map_err(err)?
                .up_set(u);
            let l = Presheaf::full(down.site(), u);
            cases.push(("true".into(), down, t, l));
            for (name, x, n, m) in &cases {
                n.validate_sub(x.site(), u, m).map_err(err)?;
                let violations = transport_violations(x, ctx, n, m);
                let mut non_natural = BTreeSet::new();
                for o in 0..x.site().objects().len() {
                    for &e in m.members(o) {
                        pairs += 1;
                        if !is_natural(x, &characteristic(x.site(), u, n, o, e)) {
                            non_natural.insert((o, e));
                        }
                    }
                }
                ensure(violations == non_natural, || {
                    format!("{name}: detectors disagree")
                })?;
                let lib: BTreeSet<(usize, usize)> = projectivity_witnesses(x, u, n, m)
                    .iter()
                    .map(|w| (w.object, w.element))
                    .collect();
                ensure(lib == violations, || {
                    format!("{name}: witnesses differ from oracle")
                })?;
                if violations.is_empty() {
                    projective += 1;
                } else {
                    non_projective += 1;
                }
            }
            Ok(())
        })?;
    }
    ensure(projective > 0 && non_projective > 0, || {
        format!("{projective} projective, {non_projective} not")
    })?;
    Ok(format!(
        "{pairs} pairs; {projective} projective and {non_projective} non-projective subobjects"
    ))
}

fn criterion_8() -> Check {
    let mut rows = 0;
    for name in BUNDLED {
        each_run(&load(name), |ctx| {
            let Some(ext) = &ctx.ext else {
                return Ok(());
            };
            let site = ext.site();
            for o in 0..site.objects().len() {
                let b = Bridge::new(ext, o);
                let rho = &ext.observables()[site.object(o).rho];
                for q in rho.eigenspaces() {
                    if site.object_ray(o).project_onto(q).is_zero() {
                        continue;
                    }
                    for p in ctx.universe.props() {
                        rows += 1;
                        let big = valuation(site, o, q, p);
                        let plain = valuation(b.plain().site(), b.plain_obj(), q, p);
                        ensure(b.flat(&big) == plain, || {
                            format!("outer square at object {o}, {p}")
                        })?;
                        ensure(b.flat(&natural_closure(ext, &big)) == plain, || {
                            format!("left square at object {o}, {p}")
                        })?;
                        ensure(b.sharp(&plain) == natural_closure(ext, &big), || {
                            format!("sharp square at object {o}, {p}")
                        })?;
                    }
                }
            }
            Ok(())
        })?;
    }
    Ok(format!("{rows} stage-eigenspace-proposition rows agree"))
}

/// Stage elements other than the characteristic value that still satisfy the
/// pullback condition at `(o, x)`; any such sieve breaks uniqueness.
fn surviving_mutants(
    site: &FiniteSite,
    ctx: &RunContext,
    n: &Presheaf,
    stage: &[Sieve],
    o: usize,
    x: usize,
    chi: &Sieve,
) -> usize {
    let u = &ctx.universe;
    stage
        .iter()
        .filter(|s| *s != chi)
        .filter(|s| {
            site.out(o).iter().all(|&m| {
                let a = site.arrow(m);
                s.pullback(site, m).is_top(site) == n.contains(a.cod, u.act(a.op, x))
            })
        })
        .count()
}

fn criterion_9() -> Check {
    let mut killed = 0;
    let mut chains = 0;
    let mut natural = 0;
    for name in BUNDLED {
        let s = load(name);
        each_run(&s, |ctx| {
            let cap = s.caps.sieve_enum;
            let u = &ctx.universe;
            let site = ctx.plain.site();
            let t = GlobalElement::by_projection(site, u, &ctx.r)
                .map_err(err)?
                .up_set(u);
            let l = Presheaf::full(site, u);
            let delta = DeltaOmega::for_eigenspace(site, &ctx.r);
            let rep = check_semiclassifier(site, u, &t, &l, &delta, cap).map_err(err)?;
            ensure(rep.passed(), || format!("restricted classifier {rep:?}"))?;
            for o in 0..site.objects().len() {
                let stage = delta.stage(site, o, cap).map_err(err)?;
                for &x in l.members(o) {
                    let chi = characteristic(site, u, &t, o, x);
                    ensure(
                        surviving_mutants(site, ctx, &t, &stage, o, x, &chi) == 0,
                        || "a perturbed map survives".into(),
                    )?;
                    killed += stage.len() - 1;
                }
            }
            let Some(ext) = &ctx.ext else {
                return Ok(());
            };
            let (down, b) = ext.restrict_down(ctx.ext_base);
            let ds = down.site();
            let t = GlobalElement::by_transport(ds, u, b, &ctx.e_r)
                .map_err(err)?
                .up_set(u);
            let l = Presheaf::full(ds, u);
            let nat = NaturalOmega { ext: &down };
            let rep = check_semiclassifier(ds, u, &t, &l, &nat, cap).map_err(err)?;
            ensure(rep.passed(), || format!("natural classifier {rep:?}"))?;
            for o in 0..ds.objects().len() {
                let stage = nat.stage(ds, o, cap).map_err(err)?;
                for &x in l.members(o) {
                    let chi = characteristic(ds, u, &t, o, x);
                    ensure(
                        surviving_mutants(ds, ctx, &t, &stage, o, x, &chi) == 0,
                        || "a perturbed map survives".into(),
                    )?;
                    killed += stage.len() - 1;
                }
            }

            let site = ext.site();
            let obs = &s.observables;
            for e in site.rays() {
                for a in obs {
                    for c in obs.iter().filter(|c| observable_leq(a, c)) {
                        let (x, z) = (atoms_by_projectors(e, a), atoms_by_projectors(e, c));
                        ensure(x.len() <= z.len(), || format!("atom count drops at {e}"))?;
                        for m in obs
                            .iter()
                            .filter(|m| observable_leq(a, m) && observable_leq(m, c))
                        {
                            chains += 1;
                            if x == z {
                                ensure(atoms_by_projectors(e, m) == x, || {
                                    format!("chain not squeezed at {e}")
                                })?;
                            }
                        }
                    }
                }
            }
            for o in 0..site.objects().len() {
                for sv in enumerate_sieves(site, o, cap).map_err(err)? {
                    if !is_natural(ext, &sv) {
                        continue;
                    }
                    natural += 1;
                    let rho = site.object(o).rho;
                    for &m in sv.arrows() {
                        let a = site.arrow(m);
                        let same = site
                            .find_object(ObjectKey {
                                ray: site.object(a.cod).ray,
                                rho,
                            })
                            .and_then(|c| site.find_arrow(o, c, a.op));
                        ensure(same.is_some_and(|k| sv.contains(k)), || {
                            format!("companion missing at object {o}")
                        })?;
                    }
                }
            }
            Ok(())
        })?;
    }
    Ok(format!("semi-classifiers pass, {killed} perturbations rejected; {chains} atom chains; {natural} natural sieves closed"))
}

fn criterion_10() -> Check {
    let start = Instant::now();
    let scenarios: Vec<Scenario> = BUNDLED.iter().map(|n| load(n)).collect();
    let render = |threads: usize| -> Result<Vec<(String, String)>, String> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(err)?;
        pool.install(|| {
            scenarios
                .iter()
                .map(|s| {
                    let rep = run_check(s).map_err(err)?;
                    ensure(rep.ok(), || format!("{} has failing rows", s.name))?;
                    Ok((
                        serde_json::to_string_pretty(&rep).map_err(err)?,
                        rep.to_text(),
                    ))
                })
                .collect()
        })
    };
    let first = render(1)?;
    let took = start.elapsed();
    let second = render(4)?;
    ensure(first == second, || "reports differ between runs".into())?;
    ensure(took < Duration::from_secs(60), || {
        format!("full check took {took:?}")
    })?;
    let bytes: usize = first.iter().map(|(j, _)| j.len()).sum();
    Ok(format!(
        "all green in {took:.1?}; {bytes} report bytes identical across runs and thread counts"
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        (
            "determinate sublattice and two-valued homomorphisms",
            criterion_1,
        ),
        ("sieve census at the qubit state", criterion_2),
        ("valuation conditions and the null proposition", criterion_3),
        ("characteristic map equals valuation", criterion_4),
        ("down-set restriction", criterion_5),
        ("flat, sharp and natural maps", criterion_6),
        ("projectivity detectors agree", criterion_7),
        ("plain and extended valuations agree", criterion_8),
        (
            "semi-classifiers, atom chains, natural companions",
            criterion_9,
        ),
        ("determinism and running time", criterion_10),
    ];
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", k + 1),
            Err(e) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {e}", k + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
