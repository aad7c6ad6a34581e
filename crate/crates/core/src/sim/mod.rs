//! Decentralized plants, closed-loop simulation with integral accumulators,
//! and the δ / I data operators built from sampled trajectories.

mod dataset;
pub mod ode;
mod ops;
pub mod plants;
mod probe;

use std::fmt::Debug;
use std::ops::Range;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::lyap::CareProblem;
use crate::skron::SymMatrix;

pub use dataset::{
    delta_matrix, integral_matrix, simulate_closed_loop, IntegrandPair, LoopData, SampleSpec, TrajectoryDataset,
};
pub use ops::{
    evaluate_lqr_cost, right_skron, transform_delta, transform_integral, transform_integral_cross,
};
pub use probe::{ProbingSignal, Sinusoid};

/// Control-affine drift and input map `ẋ = f(x) + g(x)u`.
pub trait Dynamics: Send + Sync + Debug {
    fn n(&self) -> usize;
    fn m(&self) -> usize;
    fn drift(&self, x: &DVector<f64>) -> DVector<f64>;
    fn input_map(&self, x: &DVector<f64>) -> DMatrix<f64>;
}

#[derive(Clone, Debug)]
pub struct LinearDynamics {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
}

impl Dynamics for LinearDynamics {
    fn n(&self) -> usize {
        self.a.nrows()
    }
    fn m(&self) -> usize {
        self.b.ncols()
    }
    fn drift(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.a * x
    }
    fn input_map(&self, _x: &DVector<f64>) -> DMatrix<f64> {
        self.b.clone()
    }
}

/// `x ↦ S f(S⁻¹x)`, `x ↦ S g(S⁻¹x)`.
#[derive(Clone, Debug)]
pub struct ModulatedDynamics {
    inner: Arc<dyn Dynamics>,
    s: DMatrix<f64>,
    s_inv: DMatrix<f64>,
}

impl ModulatedDynamics {
    pub fn new(inner: Arc<dyn Dynamics>, s: DMatrix<f64>) -> Result<Self> {
        if s.shape() != (inner.n(), inner.n()) {
            return Err(Error::shape(format!("modulation {:?} for n = {}", s.shape(), inner.n())));
        }
        let s_inv = s.clone().try_inverse().ok_or(Error::SingularModulation(0))?;
        Ok(Self { inner, s, s_inv })
    }
}

impl Dynamics for ModulatedDynamics {
    fn n(&self) -> usize {
        self.inner.n()
    }
    fn m(&self) -> usize {
        self.inner.m()
    }
    fn drift(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.s * self.inner.drift(&(&self.s_inv * x))
    }
    fn input_map(&self, x: &DVector<f64>) -> DMatrix<f64> {
        &self.s * self.inner.input_map(&(&self.s_inv * x))
    }
}

/// State and control dimensions of each loop; loops occupy consecutive
/// coordinate blocks.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoopPartition {
    pub state_dims: Vec<usize>,
    pub control_dims: Vec<usize>,
}

impl LoopPartition {
    pub fn new(state_dims: Vec<usize>, control_dims: Vec<usize>) -> Result<Self> {
        if state_dims.is_empty() || state_dims.len() != control_dims.len() {
            return Err(Error::shape(format!(
                "partition with {} state blocks and {} control blocks",
                state_dims.len(),
                control_dims.len()
            )));
        }
        if state_dims.iter().chain(&control_dims).any(|&d| d == 0) {
            return Err(Error::ZeroDimension);
        }
        Ok(Self { state_dims, control_dims })
    }

    pub fn single(n: usize, m: usize) -> Result<Self> {
        Self::new(vec![n], vec![m])
    }

    pub fn loops(&self) -> usize {
        self.state_dims.len()
    }

    pub fn n(&self) -> usize {
        self.state_dims.iter().sum()
    }

    pub fn m(&self) -> usize {
        self.control_dims.iter().sum()
    }

    pub fn states(&self, j: usize) -> Range<usize> {
        let start: usize = self.state_dims[..j].iter().sum();
        start..start + self.state_dims[j]
    }

    pub fn controls(&self, j: usize) -> Range<usize> {
        let start: usize = self.control_dims[..j].iter().sum();
        start..start + self.control_dims[j]
    }

    /// Assembles a block-diagonal matrix from per-loop square blocks sized by
    /// the state partition.
    pub fn state_block_diag(&self, blocks: &[DMatrix<f64>]) -> Result<DMatrix<f64>> {
        if blocks.len() != self.loops() || blocks.iter().zip(&self.state_dims).any(|(b, &d)| b.shape() != (d, d)) {
            return Err(Error::shape("blocks do not match the state partition"));
        }
        Ok(linalg::block_diag(blocks))
    }
}

fn block(m: &DMatrix<f64>, rows: Range<usize>, cols: Range<usize>) -> DMatrix<f64> {
    m.view((rows.start, cols.start), (rows.len(), cols.len())).into_owned()
}

fn off_block_max(m: &DMatrix<f64>, rows: &[Range<usize>], cols: &[Range<usize>]) -> f64 {
    let mut worst = 0.0f64;
    for (i, ri) in rows.iter().enumerate() {
        for (j, cj) in cols.iter().enumerate() {
            if i != j {
                worst = worst.max(block(m, ri.clone(), cj.clone()).amax());
            }
        }
    }
    worst
}

/// Affine plant with its linearization at the origin, block-diagonal LQR
/// weights and an N-loop partition.
#[derive(Clone, Debug)]
pub struct DecentralizedPlant {
    dynamics: Arc<dyn Dynamics>,
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub q: SymMatrix,
    pub r: SymMatrix,
    pub partition: LoopPartition,
}

impl DecentralizedPlant {
    /// Validates `f(0) = 0`, the linearization against central differences
    /// of `f` and against `g(0)`, the partition tiling, block-diagonal
    /// weights, `Q_j ≥ 0` and `R_j > 0`.
    pub fn new(
        dynamics: Arc<dyn Dynamics>,
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        q: SymMatrix,
        r: SymMatrix,
        partition: LoopPartition,
    ) -> Result<Self> {
        let (n, m) = (dynamics.n(), dynamics.m());
        if a.shape() != (n, n) || b.shape() != (n, m) || q.n() != n || r.n() != m {
            return Err(Error::shape(format!(
                "plant with n = {n}, m = {m} but A {:?}, B {:?}, Q {}x{}, R {}x{}",
                a.shape(),
                b.shape(),
                q.n(),
                q.n(),
                r.n(),
                r.n()
            )));
        }
        if partition.n() != n || partition.m() != m {
            return Err(Error::shape(format!(
                "partition covers {}x{} but plant is {n}x{m}",
                partition.n(),
                partition.m()
            )));
        }
        let origin = DVector::zeros(n);
        let f0 = dynamics.drift(&origin).amax();
        if f0 > 1e-12 {
            return Err(Error::Config(format!("f(0) has magnitude {f0:e}")));
        }
        let g0 = (dynamics.input_map(&origin) - &b).amax();
        if g0 > 1e-12 {
            return Err(Error::Config(format!("g(0) differs from B by {g0:e}")));
        }
        let jac = finite_difference_jacobian(dynamics.as_ref(), &origin);
        let lin = (&jac - &a).amax();
        if lin > 1e-6 * a.amax().max(1.0) {
            return Err(Error::Config(format!("A differs from the Jacobian of f at 0 by {lin:e}")));
        }
        let srows: Vec<_> = (0..partition.loops()).map(|j| partition.states(j)).collect();
        let crows: Vec<_> = (0..partition.loops()).map(|j| partition.controls(j)).collect();
        if off_block_max(&q, &srows, &srows) > 0.0 || off_block_max(&r, &crows, &crows) > 0.0 {
            return Err(Error::Config("Q and R must be block diagonal over the loop partition".into()));
        }
        for j in 0..partition.loops() {
            if !linalg::is_psd(&block(&q, srows[j].clone(), srows[j].clone()), -1e-10) {
                return Err(Error::NotDefinite(format!("Q block of loop {j} is not positive semidefinite")));
            }
            if !linalg::is_pd(&block(&r, crows[j].clone(), crows[j].clone())) {
                return Err(Error::NotDefinite(format!("R block of loop {j} is not positive definite")));
            }
        }
        Ok(Self { dynamics, a, b, q, r, partition })
    }

    pub fn linear(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        q: SymMatrix,
        r: SymMatrix,
        partition: LoopPartition,
    ) -> Result<Self> {
        let dynamics = Arc::new(LinearDynamics { a: a.clone(), b: b.clone() });
        Self::new(dynamics, a, b, q, r, partition)
    }

    pub fn with_partition(&self, partition: LoopPartition) -> Result<Self> {
        Self::new(self.dynamics.clone(), self.a.clone(), self.b.clone(), self.q.clone(), self.r.clone(), partition)
    }

    pub fn dynamics(&self) -> &Arc<dyn Dynamics> {
        &self.dynamics
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn m(&self) -> usize {
        self.b.ncols()
    }

    pub fn loops(&self) -> usize {
        self.partition.loops()
    }

    pub fn a_block(&self, j: usize) -> DMatrix<f64> {
        block(&self.a, self.partition.states(j), self.partition.states(j))
    }

    pub fn b_block(&self, j: usize) -> DMatrix<f64> {
        block(&self.b, self.partition.states(j), self.partition.controls(j))
    }

    pub fn q_block(&self, j: usize) -> SymMatrix {
        SymMatrix::try_new(block(&self.q, self.partition.states(j), self.partition.states(j)), 0.0)
            .expect("diagonal block of a symmetric matrix")
    }

    pub fn r_block(&self, j: usize) -> SymMatrix {
        SymMatrix::try_new(block(&self.r, self.partition.controls(j), self.partition.controls(j)), 0.0)
            .expect("diagonal block of a symmetric matrix")
    }

    /// LQR problem `(A_jj, B_jj, Q_j, R_j)` of loop `j`.
    pub fn loop_care(&self, j: usize) -> Result<CareProblem> {
        CareProblem::new(self.a_block(j), self.b_block(j), self.q_block(j), self.r_block(j))
    }

    pub fn care(&self) -> Result<CareProblem> {
        CareProblem::new(self.a.clone(), self.b.clone(), self.q.clone(), self.r.clone())
    }

    /// Gain block `K_jj` of a full `m × n` gain.
    pub fn gain_block(&self, k: &DMatrix<f64>, j: usize) -> DMatrix<f64> {
        block(k, self.partition.controls(j), self.partition.states(j))
    }

    /// Block-diagonal `m × n` gain from per-loop gains.
    pub fn assemble_gain(&self, blocks: &[DMatrix<f64>]) -> Result<DMatrix<f64>> {
        if blocks.len() != self.loops() {
            return Err(Error::shape("one gain block per loop expected"));
        }
        let mut k = DMatrix::zeros(self.m(), self.n());
        for (j, kj) in blocks.iter().enumerate() {
            let (rows, cols) = (self.partition.controls(j), self.partition.states(j));
            if kj.shape() != (rows.len(), cols.len()) {
                return Err(Error::shape(format!("gain block {j} has shape {:?}", kj.shape())));
            }
            k.view_mut((rows.start, cols.start), (rows.len(), cols.len())).copy_from(kj);
        }
        Ok(k)
    }
}

fn finite_difference_jacobian(d: &dyn Dynamics, x: &DVector<f64>) -> DMatrix<f64> {
    let n = x.len();
    let h = 1e-5;
    let mut jac = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[i] += h;
        xm[i] -= h;
        jac.set_column(i, &((d.drift(&xp) - d.drift(&xm)) / (2.0 * h)));
    }
    jac
}
