//! The proposition universe, presheaves of propositions and global elements.

use std::collections::{BTreeSet, HashMap};

use crate::error::{Error, Result};
use crate::lattice::Subspace;
use crate::site::{FiniteSite, OperatorMonoid};

use super::sieve::Sieve;

/// A finite set of subspaces closed under the monoid action and under meets,
/// with precomputed action, order and meet tables.
#[derive(Clone, Debug)]
pub struct PropositionUniverse {
    props: Vec<Subspace>,
    index: HashMap<Subspace, usize>,
    action: Vec<Vec<usize>>,
    leq: Vec<Vec<bool>>,
    meet: Vec<Vec<usize>>,
}

impl PropositionUniverse {
    pub fn build(monoid: &OperatorMonoid, seeds: &[Subspace], cap: usize) -> Result<Self> {
        let n = monoid.dim();
        let mut props: Vec<Subspace> = Vec::new();
        let mut index: HashMap<Subspace, usize> = HashMap::new();
        let mut meets: HashMap<(usize, usize), usize> = HashMap::new();
        let mut insert = |s: Subspace, props: &mut Vec<Subspace>| -> Result<usize> {
            if s.ambient() != n {
                return Err(Error::AmbientMismatch(n, s.ambient()));
            }
            if let Some(&k) = index.get(&s) {
                return Ok(k);
            }
            if props.len() == cap {
                return Err(Error::LatticeCapExceeded(cap));
            }
            index.insert(s.clone(), props.len());
            props.push(s);
            Ok(props.len() - 1)
        };
        insert(Subspace::zero(n), &mut props)?;
        insert(Subspace::full(n), &mut props)?;
        for s in seeds {
            insert(s.clone(), &mut props)?;
        }
        let mut done = 0;
        while done < props.len() {
            let cur = props[done].clone();
            for op in monoid.elements() {
                insert(cur.apply(op), &mut props)?;
            }
            for k in 0..=done {
                let m = cur.meet(&props[k]);
                let id = insert(m, &mut props)?;
                meets.insert((done, k), id);
                meets.insert((k, done), id);
            }
            done += 1;
        }
        let len = props.len();
        let mut index = HashMap::new();
        for (k, p) in props.iter().enumerate() {
            index.insert(p.clone(), k);
        }
        let action = monoid
            .elements()
            .iter()
            .map(|op| props.iter().map(|p| index[&p.apply(op)]).collect())
            .collect();
        let leq = props
            .iter()
            .map(|p| props.iter().map(|q| p.leq(q)).collect())
            .collect();
        let meet = (0..len)
            .map(|a| (0..len).map(|b| meets[&(a, b)]).collect())
            .collect();
        Ok(Self {
            props,
            index,
            action,
            leq,
            meet,
        })
    }

    pub fn len(&self) -> usize {
        self.props.len()
    }

    pub fn is_empty(&self) -> bool {
        self.props.is_empty()
    }

    pub fn props(&self) -> &[Subspace] {
        &self.props
    }

    pub fn get(&self, k: usize) -> &Subspace {
        &self.props[k]
    }

    pub fn id(&self, s: &Subspace) -> Option<usize> {
        self.index.get(s).copied()
    }

    pub fn require(&self, s: &Subspace) -> Result<usize> {
        self.id(s)
            .ok_or_else(|| Error::UnknownObject(format!("{s} is not in the proposition universe")))
    }

    pub fn zero(&self) -> usize {
        0
    }

    pub fn full(&self) -> usize {
        1
    }

    /// Index of `F(P)` for monoid element `op`.
    pub fn act(&self, op: usize, p: usize) -> usize {
        self.action[op][p]
    }

    pub fn leq(&self, p: usize, q: usize) -> bool {
        self.leq[p][q]
    }

    pub fn meet(&self, p: usize, q: usize) -> usize {
        self.meet[p][q]
    }

    /// Pairs of monoid elements and propositions where acting by a product
    /// differs from acting in sequence, or the identity moves something.
    pub fn functoriality_defects(&self, monoid: &OperatorMonoid) -> Vec<(usize, usize, usize)> {
        let mut bad = Vec::new();
        for p in 0..self.len() {
            if self.act(monoid.identity(), p) != p {
                bad.push((monoid.identity(), monoid.identity(), p));
            }
            for a in 0..monoid.len() {
                for b in 0..monoid.len() {
                    if self.act(monoid.product(a, b), p) != self.act(a, self.act(b, p)) {
                        bad.push((a, b, p));
                    }
                }
            }
        }
        bad
    }

    /// `P <= Q` implies `F(P) <= F(Q)`; returns failing triples.
    pub fn monotonicity_defects(&self, monoid: &OperatorMonoid) -> Vec<(usize, usize, usize)> {
        let mut bad = Vec::new();
        for op in 0..monoid.len() {
            for p in 0..self.len() {
                for q in 0..self.len() {
                    if self.leq(p, q) && !self.leq(self.act(op, p), self.act(op, q)) {
                        bad.push((op, p, q));
                    }
                }
            }
        }
        bad
    }
}

/// A presheaf whose elements at each object are propositions and whose
/// restriction along an arrow is the action of its operator.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Presheaf {
    members: Vec<BTreeSet<usize>>,
}

impl Presheaf {
    pub fn new(members: Vec<BTreeSet<usize>>) -> Self {
        Self { members }
    }

    /// The presheaf of all propositions.
    pub fn full(site: &FiniteSite, universe: &PropositionUniverse) -> Self {
        let all: BTreeSet<usize> = (0..universe.len()).collect();
        Self::new(vec![all; site.objects().len()])
    }

    pub fn members(&self, obj: usize) -> &BTreeSet<usize> {
        &self.members[obj]
    }

    pub fn contains(&self, obj: usize, p: usize) -> bool {
        self.members[obj].contains(&p)
    }

    /// An arrow and an element it carries outside the presheaf.
    pub fn closure_witness(
        &self,
        site: &FiniteSite,
        universe: &PropositionUniverse,
    ) -> Option<(usize, usize)> {
        for (m, a) in site.arrows().iter().enumerate() {
            for &x in &self.members[a.dom] {
                if !self.contains(a.cod, universe.act(a.op, x)) {
                    return Some((m, x));
                }
            }
        }
        None
    }

    /// Checks that `self` is a sub-presheaf of `outer`.
    pub fn validate_sub(
        &self,
        site: &FiniteSite,
        universe: &PropositionUniverse,
        outer: &Presheaf,
    ) -> Result<()> {
        if self.members.len() != site.objects().len() || outer.members.len() != site.objects().len()
        {
            return Err(Error::NotSubPresheaf(
                "object count differs from the site".into(),
            ));
        }
        for o in 0..self.members.len() {
            if !self.members[o].is_subset(&outer.members[o]) {
                return Err(Error::NotSubPresheaf(format!(
                    "not contained at object {o}"
                )));
            }
        }
        for (name, p) in [("inner", self), ("outer", outer)] {
            if let Some((m, x)) = p.closure_witness(site, universe) {
                return Err(Error::NotSubPresheaf(format!(
                    "{name} presheaf not closed along arrow {m} at {}",
                    universe.get(x)
                )));
            }
        }
        Ok(())
    }

    /// Objects where the members fail to be an up-set or to be closed under meets.
    pub fn filter_defects(&self, universe: &PropositionUniverse) -> Vec<(usize, String)> {
        let mut bad = Vec::new();
        for (o, mem) in self.members.iter().enumerate() {
            for &p in mem {
                for q in 0..universe.len() {
                    if universe.leq(p, q) && !mem.contains(&q) {
                        bad.push((o, format!("not upward closed at {}", universe.get(q))));
                    }
                }
                for &q in mem {
                    if !mem.contains(&universe.meet(p, q)) {
                        bad.push((o, format!("not closed under meet at {}", universe.get(p))));
                    }
                }
            }
        }
        bad
    }
}

/// A choice of one proposition per object.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GlobalElement {
    pub values: Vec<usize>,
}

impl GlobalElement {
    /// `sigma(e') = e'_r` at every object.
    pub fn by_projection(
        site: &FiniteSite,
        universe: &PropositionUniverse,
        r: &Subspace,
    ) -> Result<Self> {
        let values = (0..site.objects().len())
            .map(|o| universe.require(&site.object_ray(o).project_onto(r)))
            .collect::<Result<_>>()?;
        Ok(Self { values })
    }

    /// `sigma(e') = F(e_r)` for an arrow `F: base -> e'`; every object must be
    /// reachable from `base`, and all arrows must agree.
    pub fn by_transport(
        site: &FiniteSite,
        universe: &PropositionUniverse,
        base: usize,
        e_r: &Subspace,
    ) -> Result<Self> {
        let start = universe.require(e_r)?;
        let mut values: Vec<Option<usize>> = vec![None; site.objects().len()];
        for &m in site.out(base) {
            let a = site.arrow(m);
            let v = universe.act(a.op, start);
            match values[a.cod] {
                None => values[a.cod] = Some(v),
                Some(w) if w != v => {
                    return Err(Error::Validation {
                        field: "global element".into(),
                        reason: format!("arrows into object {} disagree", a.cod),
                    })
                }
                _ => {}
            }
        }
        let values = values
            .into_iter()
            .enumerate()
            .map(|(o, v)| {
                v.ok_or_else(|| Error::UnknownObject(format!("object {o} is unreachable")))
            })
            .collect::<Result<_>>()?;
        Ok(Self { values })
    }

    /// Arrows along which the element fails to be natural.
    pub fn naturality_defects(
        &self,
        site: &FiniteSite,
        universe: &PropositionUniverse,
    ) -> Vec<usize> {
        site.arrows()
            .iter()
            .enumerate()
            .filter(|(_, a)| universe.act(a.op, self.values[a.dom]) != self.values[a.cod])
            .map(|(m, _)| m)
            .collect()
    }

    /// The sub-presheaf of propositions above the global element.
    pub fn up_set(&self, universe: &PropositionUniverse) -> Presheaf {
        Presheaf::new(
            self.values
                .iter()
                .map(|&s| {
                    (0..universe.len())
                        .filter(|&p| universe.leq(s, p))
                        .collect()
                })
                .collect(),
        )
    }
}

/// `chi(x) = {m out of obj : M(m) x in N(cod m)}`.
pub fn characteristic(
    site: &FiniteSite,
    universe: &PropositionUniverse,
    inner: &Presheaf,
    obj: usize,
    x: usize,
) -> Sieve {
    let arrows = site
        .out(obj)
        .iter()
        .copied()
        .filter(|&m| {
            let a = site.arrow(m);
            inner.contains(a.cod, universe.act(a.op, x))
        })
        .collect();
    Sieve::from_closed(obj, arrows)
}
