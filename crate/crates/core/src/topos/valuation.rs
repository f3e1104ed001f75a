//! Truth values of propositions as sieves, and the conditions they satisfy.

use serde::Serialize;

use crate::lattice::Subspace;
use crate::site::FiniteSite;

use super::sieve::Sieve;

/// `V(P) = {F : F(P) >= (cod F)_r}`, evaluated directly from the operators.
///
/// On a plain site this is the valuation for eigenspace `r`; on an extended site
/// with `r` an eigenspace of the base observable it is the extended valuation.
pub fn valuation(site: &FiniteSite, obj: usize, r: &Subspace, p: &Subspace) -> Sieve {
    let arrows = site
        .out(obj)
        .iter()
        .copied()
        .filter(|&m| {
            let target = site.object_ray(site.arrow(m).cod).project_onto(r);
            target.leq(&p.apply(site.operator(m)))
        })
        .collect();
    Sieve::from_closed(obj, arrows)
}

/// Arrows whose operator annihilates `e_r`.
pub fn bottom_annihilator(site: &FiniteSite, obj: usize, e_r: &Subspace) -> Sieve {
    let arrows = site
        .out(obj)
        .iter()
        .copied()
        .filter(|&m| e_r.apply(site.operator(m)).is_zero())
        .collect();
    Sieve::from_closed(obj, arrows)
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct ValuationConditions {
    pub propositions: usize,
    pub monotone_failures: usize,
    pub exclusivity_failures: usize,
    pub unit_holds: bool,
    /// Size of `V({0})`, which equals the annihilator of `e_r`.
    pub null_value_size: usize,
    pub null_is_bottom_of_omega: bool,
    pub null_is_bottom_of_restricted: bool,
}

/// Monotonicity, exclusivity, unit and null conditions over `props`.
pub fn valuation_conditions(site: &FiniteSite, obj: usize, r: &Subspace, props: &[Subspace]) -> ValuationConditions {
    let n = site.object_ray(obj).ambient();
    let values: Vec<Sieve> = props.iter().map(|p| valuation(site, obj, r, p)).collect();
    let mut monotone_failures = 0;
    let mut exclusivity_failures = 0;
    for (i, p) in props.iter().enumerate() {
        for (j, q) in props.iter().enumerate() {
            if p.leq(q) && !values[i].leq(&values[j]) {
                monotone_failures += 1;
            }
            if p.meet(q).is_zero() && values[i].is_top(site) && values[j].is_top(site) {
                exclusivity_failures += 1;
            }
        }
    }
    let e_r = site.object_ray(obj).project_onto(r);
    let annihilator = bottom_annihilator(site, obj, &e_r);
    let null = valuation(site, obj, r, &Subspace::zero(n));
    ValuationConditions {
        propositions: props.len(),
        monotone_failures,
        exclusivity_failures,
        unit_holds: valuation(site, obj, r, &Subspace::full(n)).is_top(site),
        null_value_size: null.len(),
        null_is_bottom_of_omega: null.is_empty(),
        null_is_bottom_of_restricted: null == annihilator,
    }
}
