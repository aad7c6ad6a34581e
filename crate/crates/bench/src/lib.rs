//! Fixtures shared by the criterion benches.

use mee_core::lyap::AleProblem;
use mee_core::sim::ode::OdeOptions;
use mee_core::sim::plants::{lin2d, lin2d_probing};
use mee_core::sim::{simulate_closed_loop, DecentralizedPlant, SampleSpec, TrajectoryDataset};
use mee_core::SymMatrix;
use nalgebra::DMatrix;

/// Deterministic dense matrix with entries in `[-1, 1]`.
pub fn dense(n: usize, seed: u64) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| ((seed as f64 + 1.0) * (1.0 + i as f64) * (0.37 + j as f64)).sin())
}

/// ALE with a Hurwitz drift and identity cost.
pub fn ale(n: usize) -> AleProblem {
    let a = dense(n, 7) * 0.3 - DMatrix::identity(n, n) * (n as f64);
    AleProblem::new(a, SymMatrix::identity(n)).expect("square")
}

/// The benchmark plant with its closed-loop data from `K0 = 0`.
pub fn lin2d_dataset() -> (DecentralizedPlant, TrajectoryDataset) {
    let plant = lin2d();
    let ds = simulate_closed_loop(
        &plant,
        &DMatrix::zeros(2, 2),
        &lin2d_probing(),
        &[-0.215, 0.035],
        0.5,
        &SampleSpec::uniform(0.1, 5),
        &OdeOptions::default(),
    )
    .expect("lin2d simulates");
    (plant, ds)
}
