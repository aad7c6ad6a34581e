//! State modulation `x̃ = Sx` with block-diagonal `S`: transformed plants and
//! regressions, recovery of original-coordinate iterates, and the
//! invariance checks tying both data paths together.

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::eirl::{learn_loop, LearningRecord, LoopOperators, RegressionProblem};
use crate::error::{Error, Result};
use crate::kleinman::{kleinman_run, StopRule};
use crate::linalg;
use crate::lyap::CareProblem;
use crate::sim::ode::OdeOptions;
use crate::sim::{
    right_skron, simulate_closed_loop, DecentralizedPlant, LoopPartition, ModulatedDynamics, ProbingSignal,
    SampleSpec, TrajectoryDataset,
};
use crate::skron::{sym_project, SymMatrix};

/// Condition number above which a modulation block is rejected.
pub const MAX_MODULATION_COND: f64 = 1e12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModulationSpec {
    pub blocks: Vec<DMatrix<f64>>,
}

impl ModulationSpec {
    pub fn new(blocks: Vec<DMatrix<f64>>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::ZeroDimension);
        }
        for (j, b) in blocks.iter().enumerate() {
            if !b.is_square() || b.nrows() == 0 {
                return Err(Error::shape(format!("modulation block {j} is {:?}", b.shape())));
            }
            if !(linalg::condition_number(b) < MAX_MODULATION_COND) {
                return Err(Error::SingularModulation(j));
            }
        }
        Ok(Self { blocks })
    }

    pub fn identity(partition: &LoopPartition) -> Self {
        Self { blocks: partition.state_dims.iter().map(|&d| DMatrix::identity(d, d)).collect() }
    }

    /// Per-loop diagonal scalings.
    pub fn diagonal(entries: &[Vec<f64>]) -> Result<Self> {
        Self::new(entries.iter().map(|d| linalg::diag(d)).collect())
    }

    /// Accepts a full `n × n` matrix only if it is block diagonal over `partition`.
    pub fn from_full(s: &DMatrix<f64>, partition: &LoopPartition) -> Result<Self> {
        if s.shape() != (partition.n(), partition.n()) {
            return Err(Error::shape(format!("modulation {:?} for n = {}", s.shape(), partition.n())));
        }
        let mut blocks = Vec::new();
        for j in 0..partition.loops() {
            let rj = partition.states(j);
            for i in 0..partition.loops() {
                let ri = partition.states(i);
                let view = s.view((ri.start, rj.start), (ri.len(), rj.len()));
                if i != j && view.amax() != 0.0 {
                    return Err(Error::Config(format!(
                        "modulation couples loops {i} and {j}; only block-diagonal S is supported"
                    )));
                }
            }
            blocks.push(s.view((rj.start, rj.start), (rj.len(), rj.len())).into_owned());
        }
        Self::new(blocks)
    }

    pub fn assembled(&self) -> DMatrix<f64> {
        linalg::block_diag(&self.blocks)
    }

    pub fn block(&self, j: usize) -> &DMatrix<f64> {
        &self.blocks[j]
    }

    pub fn check_partition(&self, partition: &LoopPartition) -> Result<()> {
        let dims: Vec<usize> = self.blocks.iter().map(|b| b.nrows()).collect();
        if dims != partition.state_dims {
            return Err(Error::shape(format!(
                "modulation blocks {dims:?} do not match loop state dims {:?}",
                partition.state_dims
            )));
        }
        Ok(())
    }

    pub fn modulate_plant(&self, plant: &DecentralizedPlant) -> Result<DecentralizedPlant> {
        modulate_problem(plant, self)
    }
}

fn inverse(s: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    s.clone().try_inverse().ok_or(Error::SingularModulation(0))
}

/// `(SAS⁻¹, SB, S⁻ᵀQS⁻¹, R)` with dynamics `S∘f∘S⁻¹`, `S∘g∘S⁻¹`.
pub fn modulate_problem(plant: &DecentralizedPlant, spec: &ModulationSpec) -> Result<DecentralizedPlant> {
    spec.check_partition(&plant.partition)?;
    let s = spec.assembled();
    let s_inv = inverse(&s)?;
    let dynamics = Arc::new(ModulatedDynamics::new(plant.dynamics().clone(), s.clone())?);
    let q = plant.q.congruence(&s_inv);
    DecentralizedPlant::new(
        dynamics,
        &s * &plant.a * &s_inv,
        &s * &plant.b,
        q,
        plant.r.clone(),
        plant.partition.clone(),
    )
}

pub fn modulate_care(c: &CareProblem, s: &DMatrix<f64>) -> Result<CareProblem> {
    let s_inv = inverse(s)?;
    CareProblem::new(s * &c.a * &s_inv, s * &c.b, c.q.congruence(&s_inv), c.r.clone())
}

/// `Ã = A (S_j ⊗ₛ S_j)ᵀ`, `b̃ = b`.
pub fn modulated_regression(r: &RegressionProblem, s: &DMatrix<f64>) -> Result<RegressionProblem> {
    if linalg::condition_number(s) >= MAX_MODULATION_COND {
        return Err(Error::SingularModulation(r.loop_index));
    }
    Ok(RegressionProblem { a_mat: right_skron(&r.a_mat, s, s)?, ..r.clone() })
}

/// `P = SᵀP̃S`, `K = K̃S`.
pub fn back_transform(p_mod: &SymMatrix, k_mod: &DMatrix<f64>, s: &DMatrix<f64>) -> (SymMatrix, DMatrix<f64>) {
    (p_mod.congruence(s), k_mod * s)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvarianceReport {
    pub holds: bool,
    pub max_dev_p: f64,
    pub max_dev_k: f64,
}

/// Kleinman in original and modulated coordinates must satisfy
/// `P_i = SᵀP̃_iS`, `K_i = K̃_iS` at every step (to 1e−8, relative to the
/// iterate size).
pub fn verify_ale_modulation_invariance(
    c: &CareProblem,
    s: &DMatrix<f64>,
    k0: &DMatrix<f64>,
    i_star: usize,
) -> Result<InvarianceReport> {
    let s_inv = inverse(s)?;
    let cm = modulate_care(c, s)?;
    let zero_ref = DMatrix::zeros(c.m(), c.n());
    let run = kleinman_run(c, k0, StopRule::Iterations(i_star), &zero_ref)?;
    let run_m = kleinman_run(&cm, &(k0 * &s_inv), StopRule::Iterations(i_star), &zero_ref)?;
    let mut max_dev_p = 0.0f64;
    let mut max_dev_k = 0.0f64;
    for (a, b) in run.iterates.iter().zip(&run_m.iterates) {
        let (p, k) = back_transform(&b.p, &b.k, s);
        max_dev_p = max_dev_p.max((&*p - &*a.p).norm() / a.p.norm().max(1.0));
        max_dev_k = max_dev_k.max((&k - &a.k).norm() / a.k.norm().max(1.0));
    }
    let kf = &run_m.final_gain * s;
    max_dev_k = max_dev_k.max((&kf - &run.final_gain).norm() / run.final_gain.norm().max(1.0));
    Ok(InvarianceReport { holds: max_dev_p <= 1e-8 && max_dev_k <= 1e-8, max_dev_p, max_dev_k })
}

/// Algebraic path: original data, regressors right-multiplied per loop.
pub fn run_mee_algebraic(
    plant: &DecentralizedPlant,
    spec: &ModulationSpec,
    k0: &DMatrix<f64>,
    ds: &TrajectoryDataset,
    i_star: usize,
) -> Result<Vec<LearningRecord>> {
    spec.check_partition(&plant.partition)?;
    (0..plant.loops())
        .map(|j| {
            let ops = LoopOperators::from_dataset(ds, j)?;
            learn_loop(plant, &ops, &plant.gain_block(k0, j), j, i_star, Some(spec.block(j)))
        })
        .collect()
}

/// Physical path inputs: the experiment to repeat on the modulated plant.
#[derive(Clone, Debug)]
pub struct Experiment<'a> {
    pub probing: &'a ProbingSignal,
    pub x0: &'a [f64],
    pub horizon: f64,
    pub samples: &'a SampleSpec,
    pub opts: &'a OdeOptions,
}

/// Physical path: simulate `x̃ = Sx` under `K̃0 = K0S⁻¹`, learn in modulated
/// coordinates, then map every iterate back.
pub fn run_mee_physical(
    plant: &DecentralizedPlant,
    spec: &ModulationSpec,
    k0: &DMatrix<f64>,
    exp: &Experiment<'_>,
    i_star: usize,
) -> Result<(Vec<LearningRecord>, TrajectoryDataset)> {
    let mplant = modulate_problem(plant, spec)?;
    let s = spec.assembled();
    let s_inv = inverse(&s)?;
    let k0_mod = k0 * &s_inv;
    let x0_mod: Vec<f64> = (&s * linalg::dvec(exp.x0)).iter().copied().collect();
    let ds = simulate_closed_loop(&mplant, &k0_mod, exp.probing, &x0_mod, exp.horizon, exp.samples, exp.opts)?;
    let mut records = Vec::with_capacity(plant.loops());
    for j in 0..plant.loops() {
        let ops = LoopOperators::from_dataset(&ds, j)?;
        let learned = learn_loop(&mplant, &ops, &mplant.gain_block(&k0_mod, j), j, i_star, None)?;
        records.push(back_transform_record(plant, &learned, spec.block(j), i_star)?);
    }
    Ok((records, ds))
}

/// Maps a record learned in modulated coordinates back to the original
/// coordinates and recomputes its gaps there.
fn back_transform_record(
    plant: &DecentralizedPlant,
    rec: &LearningRecord,
    s: &DMatrix<f64>,
    i_star: usize,
) -> Result<LearningRecord> {
    let care = plant.loop_care(rec.loop_index)?;
    let reference = crate::lyap::solve_care_reference(&care)?;
    let k0 = rec.iterations.first().map_or(rec.final_gain.clone() * s, |it| &it.k * s);
    let kleinman = kleinman_run(&care, &k0, StopRule::Iterations(i_star), &reference.k)?;
    let gains = kleinman.gains();
    let iterations = rec
        .iterations
        .iter()
        .enumerate()
        .map(|(i, it)| {
            let (p, k) = back_transform(&it.p, &it.k, s);
            let next = rec.iterations.get(i + 1).map_or(&rec.final_gain, |n| &n.k) * s;
            crate::eirl::IterationRecord {
                gap_p: (&*p - &*kleinman.iterates[i].p).norm(),
                gap_k: (&next - &gains[i + 1]).norm(),
                p: sym_project(&p).expect("congruence of a symmetric matrix"),
                k,
                ..it.clone()
            }
        })
        .collect();
    let final_gain = &rec.final_gain * s;
    let final_gap = (&final_gain - &reference.k).norm();
    Ok(LearningRecord { loop_index: rec.loop_index, iterations, final_gain, final_gap })
}
