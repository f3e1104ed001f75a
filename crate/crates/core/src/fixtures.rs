//! Small hand-built configurations shared by unit tests.

use std::sync::Arc;

use crate::lattice::Subspace;
use crate::linalg::{ExactMatrix, Vector};
use crate::modal::Observable;
use crate::site::OperatorMonoid;

pub fn v(xs: &[&str]) -> Vector {
    xs.iter().map(|s| s.parse().unwrap()).collect()
}

pub fn ray(xs: &[&str]) -> Subspace {
    Subspace::ray(&v(xs)).unwrap()
}

pub fn diag(xs: &[&str]) -> ExactMatrix {
    ExactMatrix::diagonal(&v(xs))
}

pub fn qubit_monoid() -> Arc<OperatorMonoid> {
    Arc::new(
        OperatorMonoid::close(
            &[
                ("p1".into(), diag(&["1", "0"])),
                ("p2".into(), diag(&["0", "1"])),
            ],
            2,
            256,
        )
        .unwrap(),
    )
}

pub fn qubit_r() -> Observable {
    Observable::new("R", vec![ray(&["1", "0"]), ray(&["0", "1"])], None).unwrap()
}

pub fn qubit_trivial() -> Observable {
    Observable::trivial("t", 2)
}
