//! Kleinman's policy iteration: alternate the ALE
//! `(A − BK_i)ᵀP_i + P_i(A − BK_i) + Q + K_iᵀRK_i = 0` with `K_{i+1} = R⁻¹BᵀP_i`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{spectral_abscissa, sym_eigenvalues};
use crate::lyap::{solve_ale_svec, solve_care_reference, AleProblem, CareProblem, HURWITZ_MARGIN};
use crate::skron::SymMatrix;

/// Eigenvalue floor for the PSD ordering checks.
pub const ORDER_FLOOR: f64 = -1e-8;
/// `final_gap` at or below which a run counts as converged.
pub const CONVERGED_GAP: f64 = 1e-6;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KleinmanIterate {
    /// Gain `K_i` that defined this step's closed loop.
    pub k: DMatrix<f64>,
    pub p: SymMatrix,
    pub ale_residual: f64,
    /// Spectral abscissa of `A − BK_i`.
    pub hurwitz_margin: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KleinmanRun {
    pub loop_index: usize,
    pub iterates: Vec<KleinmanIterate>,
    /// `K_{i*} = R⁻¹BᵀP_{i*−1}`, or `K0` when no iteration ran.
    pub final_gain: DMatrix<f64>,
    pub converged: bool,
    pub final_gap: f64,
}

impl KleinmanRun {
    pub fn gains(&self) -> Vec<DMatrix<f64>> {
        let mut out: Vec<_> = self.iterates.iter().map(|it| it.k.clone()).collect();
        out.push(self.final_gain.clone());
        out
    }

    pub fn with_loop(mut self, j: usize) -> Self {
        self.loop_index = j;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StopRule {
    Iterations(usize),
    /// Stop once `‖K_i − K*‖_F ≤ tol` or after `max_iter` steps.
    Gap { tol: f64, max_iter: usize },
}

fn step(c: &CareProblem, k: &DMatrix<f64>, iteration: usize) -> Result<KleinmanIterate> {
    if k.shape() != (c.m(), c.n()) {
        return Err(Error::shape(format!("gain {:?} for a {}x{} plant", k.shape(), c.n(), c.m())));
    }
    let closed = &c.a - &c.b * k;
    let abscissa = spectral_abscissa(&closed)?;
    if abscissa >= -HURWITZ_MARGIN {
        return Err(Error::LostStability { iteration, abscissa });
    }
    let qi = SymMatrix::try_new(&*c.q + k.transpose() * &*c.r * k, 1e-9)?;
    let ale = AleProblem::new(closed, qi)?;
    let p = solve_ale_svec(&ale)?;
    let ale_residual = ale.residual(&p).norm();
    Ok(KleinmanIterate { k: k.clone(), p, ale_residual, hurwitz_margin: abscissa })
}

/// Runs policy iteration under `rule`, measuring gaps against `k_star`.
pub fn kleinman_run(
    c: &CareProblem,
    k0: &DMatrix<f64>,
    rule: StopRule,
    k_star: &DMatrix<f64>,
) -> Result<KleinmanRun> {
    let (max_iter, tol) = match rule {
        StopRule::Iterations(n) => (n, None),
        StopRule::Gap { tol, max_iter } => (max_iter, Some(tol)),
    };
    let mut k = k0.clone();
    let mut iterates = Vec::with_capacity(max_iter);
    for i in 0..max_iter {
        if let Some(t) = tol {
            if (&k - k_star).norm() <= t {
                break;
            }
        }
        let it = step(c, &k, i)?;
        k = c.gain(&it.p);
        iterates.push(it);
    }
    let final_gap = (&k - k_star).norm();
    Ok(KleinmanRun {
        loop_index: 0,
        iterates,
        final_gain: k,
        converged: final_gap <= tol.unwrap_or(CONVERGED_GAP),
        final_gap,
    })
}

/// `i_star` Kleinman steps from `k0`, with the gap measured against the
/// Hamiltonian-subspace reference.
pub fn kleinman_iterate(c: &CareProblem, k0: &DMatrix<f64>, i_star: usize) -> Result<KleinmanRun> {
    let reference = solve_care_reference(c)?;
    kleinman_run(c, k0, StopRule::Iterations(i_star), &reference.k)
}

/// Smallest eigenvalue over all differences `P_i − P_{i+1}` and `P_{i+1} − P*`.
pub fn monotonicity_margin(run: &KleinmanRun, p_star: &SymMatrix) -> f64 {
    let ps: Vec<&DMatrix<f64>> = run.iterates.iter().map(|it| &*it.p).collect();
    let min_eig = |m: DMatrix<f64>| sym_eigenvalues(&m).first().copied().unwrap_or(0.0);
    let mut worst = f64::INFINITY;
    for (i, p) in ps.iter().enumerate() {
        worst = worst.min(min_eig(*p - &**p_star));
        if let Some(next) = ps.get(i + 1) {
            worst = worst.min(min_eig(*p - *next));
        }
    }
    worst
}

pub fn verify_monotonicity(run: &KleinmanRun, p_star: &SymMatrix) -> bool {
    monotonicity_margin(run, p_star) >= ORDER_FLOOR
}
