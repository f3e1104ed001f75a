//! Sieves on a finite site and the Heyting algebra they form at each stage.

use std::collections::{BTreeSet, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::site::FiniteSite;

/// A set of arrows out of `base`, closed under postcomposition.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Sieve {
    base: usize,
    arrows: BTreeSet<usize>,
}

impl Sieve {
    pub fn empty(base: usize) -> Self {
        Self {
            base,
            arrows: BTreeSet::new(),
        }
    }

    pub fn top(site: &FiniteSite, base: usize) -> Self {
        Self {
            base,
            arrows: site.out(base).iter().copied().collect(),
        }
    }

    /// Validates domain and closure.
    pub fn new(site: &FiniteSite, base: usize, arrows: BTreeSet<usize>) -> Result<Self> {
        if let Some(&m) = arrows.iter().find(|&&m| site.arrow(m).dom != base) {
            return Err(Error::NotASieve(format!(
                "arrow {m} does not start at object {base}"
            )));
        }
        if !is_closed(site, &arrows) {
            return Err(Error::NotASieve("not closed under postcomposition".into()));
        }
        Ok(Self { base, arrows })
    }

    pub(crate) fn from_closed(base: usize, arrows: BTreeSet<usize>) -> Self {
        Self { base, arrows }
    }

    /// The sieve generated by one arrow: every composite `h . m`.
    pub fn principal(site: &FiniteSite, m: usize) -> Self {
        let a = site.arrow(m);
        let arrows = site
            .out(a.cod)
            .iter()
            .map(|&h| {
                site.compose(m, h)
                    .expect("composites exist in a valid site")
            })
            .collect();
        Self {
            base: a.dom,
            arrows,
        }
    }

    /// The smallest sieve containing `gens`, all of which start at `base`.
    pub fn generated(
        site: &FiniteSite,
        base: usize,
        gens: impl IntoIterator<Item = usize>,
    ) -> Self {
        let mut s = Self::empty(base);
        for m in gens {
            debug_assert_eq!(site.arrow(m).dom, base);
            s.arrows.extend(Self::principal(site, m).arrows);
        }
        s
    }

    pub fn base(&self) -> usize {
        self.base
    }

    pub fn arrows(&self) -> &BTreeSet<usize> {
        &self.arrows
    }

    pub fn len(&self) -> usize {
        self.arrows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arrows.is_empty()
    }

    pub fn contains(&self, m: usize) -> bool {
        self.arrows.contains(&m)
    }

    pub fn is_top(&self, site: &FiniteSite) -> bool {
        self.arrows.len() == site.out(self.base).len()
    }

    pub fn leq(&self, other: &Sieve) -> bool {
        self.arrows.is_subset(&other.arrows)
    }

    pub fn join(&self, other: &Sieve) -> Sieve {
        Sieve::from_closed(
            self.base,
            self.arrows.union(&other.arrows).copied().collect(),
        )
    }

    pub fn meet(&self, other: &Sieve) -> Sieve {
        Sieve::from_closed(
            self.base,
            self.arrows.intersection(&other.arrows).copied().collect(),
        )
    }

    /// `{m : for all h, h.m in self implies h.m in other}`.
    pub fn implies(&self, site: &FiniteSite, other: &Sieve) -> Sieve {
        let arrows = site
            .out(self.base)
            .iter()
            .copied()
            .filter(|&m| {
                let cod = site.arrow(m).cod;
                site.out(cod).iter().all(|&h| {
                    let hm = site.compose(m, h).expect("composites exist");
                    !self.contains(hm) || other.contains(hm)
                })
            })
            .collect();
        Sieve::from_closed(self.base, arrows)
    }

    /// The restriction along `m`: `{m' : m'.m in self}`, a sieve on `cod m`.
    pub fn pullback(&self, site: &FiniteSite, m: usize) -> Sieve {
        debug_assert_eq!(site.arrow(m).dom, self.base);
        let cod = site.arrow(m).cod;
        let arrows = site
            .out(cod)
            .iter()
            .copied()
            .filter(|&h| self.contains(site.compose(m, h).expect("composites exist")))
            .collect();
        Sieve::from_closed(cod, arrows)
    }
}

pub fn is_closed(site: &FiniteSite, arrows: &BTreeSet<usize>) -> bool {
    arrows.iter().all(|&m| {
        let cod = site.arrow(m).cod;
        site.out(cod).iter().all(|&h| {
            site.compose(m, h)
                .map(|hm| arrows.contains(&hm))
                .unwrap_or(false)
        })
    })
}

/// Every sieve on `base`, as unions of principal sieves, in (size, arrows) order.
pub fn enumerate_sieves(site: &FiniteSite, base: usize, cap: usize) -> Result<Vec<Sieve>> {
    let mut principals: Vec<Sieve> = site
        .out(base)
        .iter()
        .map(|&m| Sieve::principal(site, m))
        .collect();
    principals.sort();
    principals.dedup();
    let empty = Sieve::empty(base);
    let mut seen: HashSet<Sieve> = HashSet::from([empty.clone()]);
    let mut stack = vec![empty];
    while let Some(s) = stack.pop() {
        for p in &principals {
            if p.leq(&s) {
                continue;
            }
            let t = s.join(p);
            if seen.insert(t.clone()) {
                if seen.len() > cap {
                    return Err(Error::EnumerationExceeded(cap));
                }
                stack.push(t);
            }
        }
    }
    let mut all: Vec<Sieve> = seen.into_iter().collect();
    all.sort_by(|a, b| (a.len(), &a.arrows).cmp(&(b.len(), &b.arrows)));
    Ok(all)
}

/// One stage of a sub-object of the subobject classifier, with its bounds.
#[derive(Clone, Debug)]
pub struct StageHeyting {
    pub base: usize,
    pub bottom: Sieve,
    pub top: Sieve,
    pub elements: Vec<Sieve>,
}

impl StageHeyting {
    /// All sieves at `base`.
    pub fn omega(site: &FiniteSite, base: usize, cap: usize) -> Result<Self> {
        Ok(Self {
            base,
            bottom: Sieve::empty(base),
            top: Sieve::top(site, base),
            elements: enumerate_sieves(site, base, cap)?,
        })
    }

    /// The sieves at `base` containing `floor`.
    pub fn above(site: &FiniteSite, floor: &Sieve, cap: usize) -> Result<Self> {
        let base = floor.base();
        let elements = enumerate_sieves(site, base, cap)?
            .into_iter()
            .filter(|s| floor.leq(s))
            .collect();
        Ok(Self {
            base,
            bottom: floor.clone(),
            top: Sieve::top(site, base),
            elements,
        })
    }

    pub fn contains(&self, s: &Sieve) -> bool {
        s.base() == self.base && self.bottom.leq(s)
    }

    /// Checks closure and the Heyting identities. Triples are checked
    /// exhaustively up to `triple_budget`, beyond that on a seeded sample.
    pub fn audit(&self, site: &FiniteSite, triple_budget: usize) -> HeytingAudit {
        let els = &self.elements;
        let n = els.len();
        let mut failures = Vec::new();
        let member: HashSet<&Sieve> = els.iter().collect();
        if !member.contains(&self.bottom) || !member.contains(&self.top) {
            failures.push("bounds missing from stage".to_string());
        }
        for a in els {
            if !self.bottom.leq(a) || !a.leq(&self.top) {
                failures.push("element outside bounds".to_string());
            }
            if a.join(&self.bottom) != *a || a.meet(&self.top) != *a {
                failures.push("bound identity fails".to_string());
            }
            for b in els {
                for (op, v) in [
                    ("join", a.join(b)),
                    ("meet", a.meet(b)),
                    ("implies", a.implies(site, b)),
                ] {
                    if !member.contains(&v) {
                        failures.push(format!("{op} leaves the stage"));
                    }
                }
            }
        }
        let total = n * n * n;
        let exhaustive = total <= triple_budget;
        let mut check = |a: &Sieve, b: &Sieve, c: &Sieve| {
            if a.meet(&b.join(c)) != a.meet(b).join(&a.meet(c)) {
                failures.push("distributivity fails".to_string());
            }
            let imp = a.implies(site, b);
            if c.leq(&imp) != c.meet(a).leq(b) {
                failures.push("implication is not the right adjoint of meet".to_string());
            }
        };
        let checked = if exhaustive {
            for a in els {
                for b in els {
                    for c in els {
                        check(a, b, c);
                    }
                }
            }
            total
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0f5e);
            for _ in 0..triple_budget {
                let (i, j, k) = (
                    rng.gen_range(0..n),
                    rng.gen_range(0..n),
                    rng.gen_range(0..n),
                );
                check(&els[i], &els[j], &els[k]);
            }
            triple_budget
        };
        failures.sort();
        failures.dedup();
        HeytingAudit {
            elements: n,
            triples_checked: checked,
            exhaustive,
            failures,
        }
    }
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct HeytingAudit {
    pub elements: usize,
    pub triples_checked: usize,
    pub exhaustive: bool,
    pub failures: Vec<String>,
}

impl HeytingAudit {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}
