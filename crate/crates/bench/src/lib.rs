//! Fixtures shared by the benchmarks.

use alab_core::{Boundary, Ensemble, FiniteVolume, FreeOperator, Measure};

/// `d = 1` chain of `sites` sites, adjacency background, uniform(0,1) couplings.
pub fn chain(sites: usize) -> Ensemble {
    Ensemble::new(
        FiniteVolume::new(vec![sites]).expect("positive side"),
        FreeOperator::adjacency(Boundary::Simple),
        vec![Measure::uniform(0.0, 1.0).expect("valid law")],
    )
    .expect("one shared law")
}
