//! Sieves, presheaves of propositions, valuations and classifier checks.

pub mod classifier;
pub mod presheaf;
pub mod sieve;
pub mod valuation;

pub use classifier::{
    check_semiclassifier, DeltaOmega, FullOmega, SemiClassifierReport, SubClassifier,
};
pub use presheaf::{characteristic, GlobalElement, Presheaf, PropositionUniverse};
pub use sieve::{enumerate_sieves, HeytingAudit, Sieve, StageHeyting};
pub use valuation::{bottom_annihilator, valuation_conditions, valuation, ValuationConditions};

#[cfg(test)]
mod tests;
