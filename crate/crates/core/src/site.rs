//! Operator monoids and the finite categories built from them: the plain site of
//! rays for a single observable and the extended site of (ray, observable) pairs.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::Subspace;
use crate::linalg::ExactMatrix;
use crate::modal::{compute_atoms, in_commutant, observable_leq, Observable};

/// The monoid generated by a set of operators, with its full product table.
#[derive(Clone, Debug)]
pub struct OperatorMonoid {
    dim: usize,
    elements: Vec<ExactMatrix>,
    names: Vec<String>,
    index: HashMap<ExactMatrix, usize>,
    product: Vec<Vec<usize>>,
}

impl OperatorMonoid {
    /// Closes `generators` and the identity under multiplication.
    pub fn close(generators: &[(String, ExactMatrix)], dim: usize, cap: usize) -> Result<Self> {
        for (name, g) in generators {
            if g.rows() != dim || g.cols() != dim {
                return Err(Error::Validation {
                    field: format!("generators.{name}"),
                    reason: format!("expected a {dim}x{dim} matrix"),
                });
            }
        }
        let mut elements = vec![ExactMatrix::identity(dim)];
        let mut names = vec!["I".to_string()];
        let mut index = HashMap::new();
        index.insert(elements[0].clone(), 0);
        let mut queue = VecDeque::from([0usize]);
        while let Some(cur) = queue.pop_front() {
            for (gname, g) in generators {
                let m = g.mul(&elements[cur])?;
                if index.contains_key(&m) {
                    continue;
                }
                if elements.len() == cap {
                    return Err(Error::ClosureExceeded(cap));
                }
                let name = if m.is_zero() {
                    "0".to_string()
                } else if cur == 0 {
                    gname.clone()
                } else {
                    format!("{gname}*{}", names[cur])
                };
                index.insert(m.clone(), elements.len());
                queue.push_back(elements.len());
                elements.push(m);
                names.push(name);
            }
        }
        let mut product = vec![vec![0; elements.len()]; elements.len()];
        for (a, row) in product.iter_mut().enumerate() {
            for (b, slot) in row.iter_mut().enumerate() {
                let m = elements[a].mul(&elements[b])?;
                *slot = *index
                    .get(&m)
                    .expect("products of generated elements stay in the monoid");
            }
        }
        Ok(Self {
            dim,
            elements,
            names,
            index,
            product,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn identity(&self) -> usize {
        0
    }

    pub fn element(&self, k: usize) -> &ExactMatrix {
        &self.elements[k]
    }

    pub fn elements(&self) -> &[ExactMatrix] {
        &self.elements
    }

    pub fn name(&self, k: usize) -> &str {
        &self.names[k]
    }

    pub fn index_of(&self, m: &ExactMatrix) -> Option<usize> {
        self.index.get(m).copied()
    }

    pub fn zero(&self) -> Option<usize> {
        self.index_of(&ExactMatrix::zeros(self.dim, self.dim))
    }

    /// Index of `elements[a] * elements[b]`.
    pub fn product(&self, a: usize, b: usize) -> usize {
        self.product[a][b]
    }

    pub fn product_table(&self) -> &[Vec<usize>] {
        &self.product
    }

    /// Triples violating associativity of the product table.
    pub fn associativity_defects(&self) -> Vec<(usize, usize, usize)> {
        let n = self.len();
        let mut bad = Vec::new();
        for a in 0..n {
            for b in 0..n {
                let ab = self.product[a][b];
                for c in 0..n {
                    if self.product[ab][c] != self.product[a][self.product[b][c]] {
                        bad.push((a, b, c));
                    }
                }
            }
        }
        bad
    }
}

/// An object of a site: a ray together with the index of an observable.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct ObjectKey {
    pub ray: usize,
    pub rho: usize,
}

/// An arrow `dom -> cod` labelled by a monoid element.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Arrow {
    pub dom: usize,
    pub cod: usize,
    pub op: usize,
}

/// Identifies an arrow independently of object and arrow numbering.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct ArrowSig {
    pub op: usize,
    pub cod: ObjectKey,
}

/// A finite category whose arrows are labelled by operators and compose by
/// operator product.
#[derive(Clone, Debug)]
pub struct FiniteSite {
    monoid: Arc<OperatorMonoid>,
    rays: Arc<Vec<Subspace>>,
    objects: Vec<ObjectKey>,
    object_index: HashMap<ObjectKey, usize>,
    arrows: Vec<Arrow>,
    out: Vec<Vec<usize>>,
    lookup: HashMap<(usize, usize, usize), usize>,
    identity: Vec<usize>,
}

impl FiniteSite {
    fn assemble(
        monoid: Arc<OperatorMonoid>,
        rays: Arc<Vec<Subspace>>,
        mut objects: Vec<ObjectKey>,
        triples: Vec<(ObjectKey, ObjectKey, usize)>,
    ) -> Result<Self> {
        objects.sort();
        objects.dedup();
        let object_index: HashMap<ObjectKey, usize> =
            objects.iter().enumerate().map(|(k, o)| (*o, k)).collect();
        let mut arrows: Vec<Arrow> = triples
            .into_iter()
            .map(|(d, c, op)| {
                let dom = *object_index
                    .get(&d)
                    .ok_or_else(|| Error::UnknownObject(format!("{d:?}")))?;
                let cod = *object_index
                    .get(&c)
                    .ok_or_else(|| Error::UnknownObject(format!("{c:?}")))?;
                Ok(Arrow { dom, cod, op })
            })
            .collect::<Result<_>>()?;
        arrows.sort_by_key(|a| (a.dom, a.op, a.cod));
        arrows.dedup();
        let mut out = vec![Vec::new(); objects.len()];
        let mut lookup = HashMap::new();
        for (k, a) in arrows.iter().enumerate() {
            out[a.dom].push(k);
            lookup.insert((a.dom, a.cod, a.op), k);
        }
        let id_op = monoid.identity();
        let identity = (0..objects.len())
            .map(|o| {
                lookup
                    .get(&(o, o, id_op))
                    .copied()
                    .ok_or_else(|| Error::Validation {
                        field: "site".into(),
                        reason: format!("object {:?} has no identity arrow", objects[o]),
                    })
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            monoid,
            rays,
            objects,
            object_index,
            arrows,
            out,
            lookup,
            identity,
        })
    }

    pub fn monoid(&self) -> &OperatorMonoid {
        &self.monoid
    }

    pub fn monoid_arc(&self) -> Arc<OperatorMonoid> {
        self.monoid.clone()
    }

    pub fn rays(&self) -> &[Subspace] {
        &self.rays
    }

    pub fn objects(&self) -> &[ObjectKey] {
        &self.objects
    }

    pub fn object(&self, k: usize) -> ObjectKey {
        self.objects[k]
    }

    pub fn object_ray(&self, k: usize) -> &Subspace {
        &self.rays[self.objects[k].ray]
    }

    pub fn find_object(&self, key: ObjectKey) -> Option<usize> {
        self.object_index.get(&key).copied()
    }

    pub fn arrows(&self) -> &[Arrow] {
        &self.arrows
    }

    pub fn arrow(&self, k: usize) -> Arrow {
        self.arrows[k]
    }

    pub fn operator(&self, arrow: usize) -> &ExactMatrix {
        self.monoid.element(self.arrows[arrow].op)
    }

    /// Arrows with domain `obj`, ordered by operator then codomain.
    pub fn out(&self, obj: usize) -> &[usize] {
        &self.out[obj]
    }

    pub fn identity(&self, obj: usize) -> usize {
        self.identity[obj]
    }

    pub fn find_arrow(&self, dom: usize, cod: usize, op: usize) -> Option<usize> {
        self.lookup.get(&(dom, cod, op)).copied()
    }

    /// `then . first`, defined when the codomain of `first` is the domain of `then`.
    pub fn compose(&self, first: usize, then: usize) -> Option<usize> {
        let (f, g) = (self.arrows[first], self.arrows[then]);
        if f.cod != g.dom {
            return None;
        }
        let op = self.monoid.product(g.op, f.op);
        self.find_arrow(f.dom, g.cod, op)
    }

    pub fn signature(&self, arrow: usize) -> ArrowSig {
        let a = self.arrows[arrow];
        ArrowSig {
            op: a.op,
            cod: self.objects[a.cod],
        }
    }

    /// Composable pairs whose composite is missing from the site.
    pub fn composition_defects(&self) -> Vec<(usize, usize)> {
        let mut bad = Vec::new();
        for (f, a) in self.arrows.iter().enumerate() {
            for &g in &self.out[a.cod] {
                if self.compose(f, g).is_none() {
                    bad.push((f, g));
                }
            }
        }
        bad
    }

    /// Composable triples on which the two bracketings disagree.
    pub fn associativity_defects(&self) -> Vec<(usize, usize, usize)> {
        let mut bad = Vec::new();
        for (f, a) in self.arrows.iter().enumerate() {
            for &g in &self.out[a.cod] {
                for &h in &self.out[self.arrows[g].cod] {
                    let left = self.compose(f, g).and_then(|fg| self.compose(fg, h));
                    let right = self.compose(g, h).and_then(|gh| self.compose(f, gh));
                    if left != right {
                        bad.push((f, g, h));
                    }
                }
            }
        }
        bad
    }

    /// Arrows on which an identity fails to act as a unit.
    pub fn identity_defects(&self) -> Vec<usize> {
        (0..self.arrows.len())
            .filter(|&f| {
                let a = self.arrows[f];
                self.compose(self.identity[a.dom], f) != Some(f)
                    || self.compose(f, self.identity[a.cod]) != Some(f)
            })
            .collect()
    }

    /// The full subcategory on the objects reachable from `obj`, with `obj` mapped
    /// to its new index.
    pub fn restrict_down(&self, obj: usize) -> (FiniteSite, usize) {
        let keep: BTreeSet<usize> = self.out[obj].iter().map(|&m| self.arrows[m].cod).collect();
        let objects: Vec<ObjectKey> = keep.iter().map(|&o| self.objects[o]).collect();
        let triples = self
            .arrows
            .iter()
            .filter(|a| keep.contains(&a.dom))
            .map(|a| (self.objects[a.dom], self.objects[a.cod], a.op))
            .collect();
        let site = FiniteSite::assemble(self.monoid.clone(), self.rays.clone(), objects, triples)
            .expect("subcategory of a valid site");
        let new_obj = site.find_object(self.objects[obj]).expect("base is kept");
        (site, new_obj)
    }

    pub fn dump(&self, observable_names: &[String]) -> SiteDump {
        SiteDump {
            rays: self.rays.iter().map(ToString::to_string).collect(),
            objects: self
                .objects
                .iter()
                .map(|o| DumpObject {
                    ray: o.ray,
                    observable: observable_names.get(o.rho).cloned().unwrap_or_default(),
                })
                .collect(),
            operators: (0..self.monoid.len())
                .map(|k| DumpOperator {
                    name: self.monoid.name(k).to_string(),
                    matrix: self
                        .monoid
                        .element(k)
                        .row_vectors()
                        .iter()
                        .map(|r| r.iter().map(ToString::to_string).collect())
                        .collect(),
                })
                .collect(),
            arrows: self.arrows.clone(),
            product: self.monoid.product_table().to_vec(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DumpObject {
    pub ray: usize,
    pub observable: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct DumpOperator {
    pub name: String,
    pub matrix: Vec<Vec<String>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SiteDump {
    pub rays: Vec<String>,
    pub objects: Vec<DumpObject>,
    pub operators: Vec<DumpOperator>,
    pub arrows: Vec<Arrow>,
    pub product: Vec<Vec<usize>>,
}

/// Orbit of `seeds` under the nonzero images of `ops`, in discovery order.
fn orbit(
    monoid: &OperatorMonoid,
    ops: &[usize],
    seeds: &[Subspace],
    cap: usize,
) -> Result<Vec<Subspace>> {
    let mut rays: Vec<Subspace> = Vec::new();
    let mut seen: HashMap<Subspace, usize> = HashMap::new();
    let mut queue = VecDeque::new();
    for s in seeds {
        if !s.is_ray() {
            return Err(Error::Validation {
                field: "seeds".into(),
                reason: format!("{s} is not a ray"),
            });
        }
        if s.ambient() != monoid.dim() {
            return Err(Error::AmbientMismatch(monoid.dim(), s.ambient()));
        }
        if !seen.contains_key(s) {
            if rays.len() == cap {
                return Err(Error::OrbitExceeded(cap));
            }
            seen.insert(s.clone(), rays.len());
            queue.push_back(rays.len());
            rays.push(s.clone());
        }
    }
    while let Some(k) = queue.pop_front() {
        for &op in ops {
            let img = rays[k].apply(monoid.element(op));
            if img.is_zero() || seen.contains_key(&img) {
                continue;
            }
            if rays.len() == cap {
                return Err(Error::OrbitExceeded(cap));
            }
            seen.insert(img.clone(), rays.len());
            queue.push_back(rays.len());
            rays.push(img);
        }
    }
    Ok(rays)
}

/// The site of rays for one observable: `Hom(e,e') = {F : Fe = e' != 0}` with `F`
/// ranging over the commutant part of the monoid.
#[derive(Clone, Debug)]
pub struct PlainSite {
    pub observable: Observable,
    allowed: Vec<usize>,
    site: FiniteSite,
}

impl PlainSite {
    /// Fails with `NotInCommutant` if any monoid element leaves the commutant.
    pub fn build(
        observable: &Observable,
        monoid: Arc<OperatorMonoid>,
        seeds: &[Subspace],
        orbit_cap: usize,
    ) -> Result<Self> {
        if let Some(bad) = (0..monoid.len()).find(|&k| !in_commutant(monoid.element(k), observable))
        {
            return Err(Error::NotInCommutant(bad));
        }
        Self::build_filtered(observable, monoid, seeds, orbit_cap)
    }

    /// Uses only the monoid elements that commute with the observable.
    pub fn build_filtered(
        observable: &Observable,
        monoid: Arc<OperatorMonoid>,
        seeds: &[Subspace],
        orbit_cap: usize,
    ) -> Result<Self> {
        if observable.dimension() != monoid.dim() {
            return Err(Error::AmbientMismatch(monoid.dim(), observable.dimension()));
        }
        let allowed: Vec<usize> = (0..monoid.len())
            .filter(|&k| in_commutant(monoid.element(k), observable))
            .collect();
        let rays = orbit(&monoid, &allowed, seeds, orbit_cap)?;
        let objects: Vec<ObjectKey> = (0..rays.len())
            .map(|ray| ObjectKey { ray, rho: 0 })
            .collect();
        let index: HashMap<&Subspace, usize> =
            rays.iter().enumerate().map(|(k, r)| (r, k)).collect();
        let mut triples = Vec::new();
        for (k, e) in rays.iter().enumerate() {
            for &op in &allowed {
                let img = e.apply(monoid.element(op));
                if img.is_zero() {
                    continue;
                }
                let cod = index[&img];
                triples.push((objects[k], objects[cod], op));
            }
        }
        let site = FiniteSite::assemble(monoid, Arc::new(rays), objects, triples)?;
        Ok(Self {
            observable: observable.clone(),
            allowed,
            site,
        })
    }

    pub fn site(&self) -> &FiniteSite {
        &self.site
    }

    pub fn allowed_ops(&self) -> &[usize] {
        &self.allowed
    }

    pub fn object_of_ray(&self, ray: &Subspace) -> Option<usize> {
        let k = self.site.rays().iter().position(|r| r == ray)?;
        self.site.objects().iter().position(|o| o.ray == k)
    }

    /// Operators of the arrows `e -> e'`.
    pub fn hom(&self, e: usize, e_prime: usize) -> Vec<usize> {
        self.site
            .out(e)
            .iter()
            .map(|&m| self.site.arrow(m))
            .filter(|a| a.cod == e_prime)
            .map(|a| a.op)
            .collect()
    }

    /// Operator/ray-level description of every arrow, for comparing sites.
    pub fn arrow_triples(&self) -> BTreeSet<(usize, usize, usize)> {
        triples_by_ray(&self.site, |_| true)
    }

    pub fn restrict_down(&self, obj: usize) -> (PlainSite, usize) {
        let (site, o) = self.site.restrict_down(obj);
        (
            PlainSite {
                observable: self.observable.clone(),
                allowed: self.allowed.clone(),
                site,
            },
            o,
        )
    }

    /// Each operator out of an object reaches exactly one codomain.
    pub fn hom_partition_defects(&self) -> Vec<(usize, usize)> {
        let mut bad = Vec::new();
        for o in 0..self.site.objects().len() {
            let mut cods: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
            for &m in self.site.out(o) {
                let a = self.site.arrow(m);
                cods.entry(a.op).or_default().insert(a.cod);
            }
            for (op, c) in cods {
                if c.len() != 1 {
                    bad.push((o, op));
                }
            }
        }
        bad
    }
}

fn triples_by_ray(
    site: &FiniteSite,
    keep: impl Fn(&Arrow) -> bool,
) -> BTreeSet<(usize, usize, usize)> {
    site.arrows()
        .iter()
        .filter(|a| keep(a))
        .map(|a| (site.object(a.dom).ray, a.op, site.object(a.cod).ray))
        .collect()
}

/// The site of pairs `(e, rho)`: an arrow `(e,rho) -> (Fe,rho')` exists when
/// `rho <= rho'`, `F` commutes with `rho`, `Fe != 0` and the augmented atom sets
/// of `Fe` under `rho` and `rho'` agree.
#[derive(Clone, Debug)]
pub struct ExtendedSite {
    observables: Vec<Observable>,
    order: Vec<Vec<bool>>,
    commutant: Vec<Vec<bool>>,
    same_atoms: Vec<Vec<Vec<bool>>>,
    site: FiniteSite,
}

impl ExtendedSite {
    pub fn build(
        observables: &[Observable],
        monoid: Arc<OperatorMonoid>,
        seeds: &[Subspace],
        orbit_cap: usize,
    ) -> Result<Self> {
        if observables.is_empty() {
            return Err(Error::Validation {
                field: "extended".into(),
                reason: "no observables".into(),
            });
        }
        for (i, a) in observables.iter().enumerate() {
            if a.dimension() != monoid.dim() {
                return Err(Error::AmbientMismatch(monoid.dim(), a.dimension()));
            }
            for b in &observables[i + 1..] {
                if a.same_decomposition(b) {
                    return Err(Error::Validation {
                        field: "extended".into(),
                        reason: format!("`{}` and `{}` are the same decomposition", a.name, b.name),
                    });
                }
            }
        }
        let k = observables.len();
        let order: Vec<Vec<bool>> = (0..k)
            .map(|a| {
                (0..k)
                    .map(|b| observable_leq(&observables[a], &observables[b]))
                    .collect()
            })
            .collect();
        let commutant: Vec<Vec<bool>> = observables
            .iter()
            .map(|rho| {
                (0..monoid.len())
                    .map(|op| in_commutant(monoid.element(op), rho))
                    .collect()
            })
            .collect();
        let usable: Vec<usize> = (0..monoid.len())
            .filter(|&op| commutant.iter().any(|c| c[op]))
            .collect();
        let rays = orbit(&monoid, &usable, seeds, orbit_cap)?;
        let atoms: Vec<Vec<_>> = rays
            .iter()
            .map(|e| {
                observables
                    .iter()
                    .map(|rho| compute_atoms(e, rho).augmented())
                    .collect()
            })
            .collect();
        let same_atoms: Vec<Vec<Vec<bool>>> = atoms
            .iter()
            .map(|per| {
                (0..k)
                    .map(|a| (0..k).map(|b| per[a] == per[b]).collect())
                    .collect()
            })
            .collect();
        let index: HashMap<&Subspace, usize> =
            rays.iter().enumerate().map(|(i, r)| (r, i)).collect();
        let mut objects = Vec::new();
        for ray in 0..rays.len() {
            for rho in 0..k {
                objects.push(ObjectKey { ray, rho });
            }
        }
        let mut triples = Vec::new();
        for &dom in &objects {
            for (op, &commutes) in commutant[dom.rho].iter().enumerate() {
                if !commutes {
                    continue;
                }
                let img = rays[dom.ray].apply(monoid.element(op));
                if img.is_zero() {
                    continue;
                }
                let cod_ray = index[&img];
                for rho2 in 0..k {
                    if order[dom.rho][rho2] && same_atoms[cod_ray][dom.rho][rho2] {
                        triples.push((
                            dom,
                            ObjectKey {
                                ray: cod_ray,
                                rho: rho2,
                            },
                            op,
                        ));
                    }
                }
            }
        }
        let site = FiniteSite::assemble(monoid, Arc::new(rays), objects, triples)?;
        Ok(Self {
            observables: observables.to_vec(),
            order,
            commutant,
            same_atoms,
            site,
        })
    }

    pub fn site(&self) -> &FiniteSite {
        &self.site
    }

    pub fn observables(&self) -> &[Observable] {
        &self.observables
    }

    pub fn observable_names(&self) -> Vec<String> {
        self.observables.iter().map(|o| o.name.clone()).collect()
    }

    pub fn observable_index(&self, name: &str) -> Option<usize> {
        self.observables.iter().position(|o| o.name == name)
    }

    pub fn leq(&self, a: usize, b: usize) -> bool {
        self.order[a][b]
    }

    pub fn commutes(&self, rho: usize, op: usize) -> bool {
        self.commutant[rho][op]
    }

    pub fn find_object(&self, ray: &Subspace, rho: usize) -> Option<usize> {
        let r = self.site.rays().iter().position(|x| x == ray)?;
        self.site.find_object(ObjectKey { ray: r, rho })
    }

    /// Membership in the larger category whose arrows skip the atom condition.
    pub fn is_coarse_arrow(&self, dom: usize, op: usize, cod_rho: usize) -> bool {
        let d = self.site.object(dom);
        self.order[d.rho][cod_rho]
            && self.commutant[d.rho][op]
            && !self.site.rays()[d.ray]
                .apply(self.site.monoid().element(op))
                .is_zero()
    }

    /// The arrow `(e,rho) -> (e',rho)` with the same operator as `arrow`.
    pub fn same_level(&self, arrow: usize) -> Option<usize> {
        let a = self.site.arrow(arrow);
        let rho = self.site.object(a.dom).rho;
        let cod = self.site.find_object(ObjectKey {
            ray: self.site.object(a.cod).ray,
            rho,
        })?;
        self.site.find_arrow(a.dom, cod, a.op)
    }

    pub fn is_same_level(&self, arrow: usize) -> bool {
        let a = self.site.arrow(arrow);
        self.site.object(a.dom).rho == self.site.object(a.cod).rho
    }

    pub fn restrict_down(&self, obj: usize) -> (ExtendedSite, usize) {
        let (site, o) = self.site.restrict_down(obj);
        (
            ExtendedSite {
                observables: self.observables.clone(),
                order: self.order.clone(),
                commutant: self.commutant.clone(),
                same_atoms: self.same_atoms.clone(),
                site,
            },
            o,
        )
    }

    /// The plain site for observable `rho` carried by the same-level arrows.
    pub fn restrict_to_rho(&self, rho: usize) -> PlainSite {
        let objects: Vec<ObjectKey> = self
            .site
            .objects()
            .iter()
            .filter(|o| o.rho == rho)
            .copied()
            .collect();
        let triples = self
            .site
            .arrows()
            .iter()
            .filter(|a| self.site.object(a.dom).rho == rho && self.site.object(a.cod).rho == rho)
            .map(|a| (self.site.object(a.dom), self.site.object(a.cod), a.op))
            .collect();
        let site = FiniteSite::assemble(
            self.site.monoid_arc(),
            Arc::new(self.site.rays().to_vec()),
            objects,
            triples,
        )
        .expect("same-level arrows form a subcategory");
        PlainSite {
            observable: self.observables[rho].clone(),
            allowed: (0..self.site.monoid().len())
                .filter(|&op| self.commutant[rho][op])
                .collect(),
            site,
        }
    }

    /// Compares the same-level part for `rho` with an independently built plain
    /// site on the same rays. Returns the symmetric difference of arrow triples.
    pub fn embedding_defects(&self, rho: usize) -> Result<Vec<(usize, usize, usize)>> {
        let restricted = self.restrict_to_rho(rho);
        let fresh = PlainSite::build_filtered(
            &self.observables[rho],
            self.site.monoid_arc(),
            self.site.rays(),
            self.site.rays().len().max(1),
        )?;
        if fresh.site().rays() != self.site.rays() {
            return Ok(vec![(usize::MAX, usize::MAX, usize::MAX)]);
        }
        let a = restricted.arrow_triples();
        let b = fresh.arrow_triples();
        Ok(a.symmetric_difference(&b).copied().collect())
    }

    /// Objects `(e,rho)` that fail to reach level `rho'` although every
    /// eigenprojector of `rho'` lies in the monoid. Levels whose projectors are
    /// missing are skipped and counted.
    pub fn reachability(&self) -> (Vec<(usize, usize)>, usize) {
        let monoid = self.site.monoid();
        let k = self.observables.len();
        let mut bad = Vec::new();
        let mut skipped = 0;
        let complete: Vec<bool> = self
            .observables
            .iter()
            .map(|o| o.projectors().iter().all(|p| monoid.index_of(p).is_some()))
            .collect();
        for o in 0..self.site.objects().len() {
            let rho = self.site.object(o).rho;
            for (rho2, &ok) in complete.iter().enumerate().take(k) {
                if !self.order[rho][rho2] {
                    continue;
                }
                if !ok {
                    skipped += 1;
                    continue;
                }
                let reaches = self
                    .site
                    .out(o)
                    .iter()
                    .any(|&m| self.site.object(self.site.arrow(m).cod).rho == rho2);
                if !reaches {
                    bad.push((o, rho2));
                }
            }
        }
        (bad, skipped)
    }
}
