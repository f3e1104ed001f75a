//! Exact construction of finite operator sites over C^n and of the truth values
//! that quantum propositions take in their presheaf toposes.

pub mod bridge;
pub mod check;
pub mod error;
pub mod lattice;
pub mod linalg;
pub mod modal;
pub mod report;
pub mod scenario;
pub mod site;

pub use error::{Error, Result};
pub mod topos;

#[cfg(test)]
pub(crate) mod fixtures;
