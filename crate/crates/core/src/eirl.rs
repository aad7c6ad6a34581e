//! Data-driven policy iteration: per loop, the regression
//! `A_i svec(P_i) = b_i` built from one fixed trajectory dataset reproduces
//! the Kleinman iterates of that loop's linearization.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kleinman::{kleinman_run, StopRule};
use crate::linalg::{self, spectral_abscissa};
use crate::lyap::{solve_care_reference, HURWITZ_MARGIN};
use crate::sim::{delta_matrix, integral_matrix, right_skron, DecentralizedPlant, IntegrandPair, TrajectoryDataset};
use crate::skron::{nbar, smat, svec, SvecVector, SymMatrix};

/// Relative singular-value floor for the full-column-rank requirement.
pub const RANK_TOL: f64 = 1e-10;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RegressionProblem {
    pub loop_index: usize,
    pub iteration: usize,
    pub a_mat: DMatrix<f64>,
    pub b_vec: DVector<f64>,
    pub k: DMatrix<f64>,
}

/// The δ and I matrices of one loop; they do not change across iterations.
#[derive(Clone, Debug)]
pub struct LoopOperators {
    pub delta: DMatrix<f64>,
    pub ixx: DMatrix<f64>,
    pub ixgu: DMatrix<f64>,
    pub ixw: DMatrix<f64>,
}

impl LoopOperators {
    pub fn from_dataset(ds: &TrajectoryDataset, j: usize) -> Result<Self> {
        Ok(Self {
            delta: delta_matrix(ds, j)?,
            ixx: integral_matrix(ds, j, IntegrandPair::XX)?,
            ixgu: integral_matrix(ds, j, IntegrandPair::XGu)?,
            ixw: integral_matrix(ds, j, IntegrandPair::XW)?,
        })
    }

    /// `δ − 2[I_xx (I ⊗ₛ B_jj K)ᵀ + I_{x,gu} + I_{x,w}]` and
    /// `−I_xx svec(Q_j + KᵀR_jK)`.
    pub fn assemble(
        &self,
        plant: &DecentralizedPlant,
        k: &DMatrix<f64>,
        j: usize,
        iteration: usize,
    ) -> Result<RegressionProblem> {
        let (bjj, qj, rj) = (plant.b_block(j), plant.q_block(j), plant.r_block(j));
        if k.shape() != (bjj.ncols(), bjj.nrows()) {
            return Err(Error::shape(format!(
                "gain {:?} for loop {j} with n_j = {}, m_j = {}",
                k.shape(),
                bjj.nrows(),
                bjj.ncols()
            )));
        }
        if self.delta.ncols() != nbar(bjj.nrows()) {
            return Err(Error::shape(format!("loop {j} operators have {} columns", self.delta.ncols())));
        }
        let nj = bjj.nrows();
        let coupling = right_skron(&self.ixx, &DMatrix::identity(nj, nj), &(&bjj * k))?;
        let a_mat = &self.delta - (coupling + &self.ixgu + &self.ixw) * 2.0;
        let qi = SymMatrix::try_new(&*qj + k.transpose() * &*rj * k, 1e-9)?;
        let b_vec = -(&self.ixx * svec(&qi).values());
        Ok(RegressionProblem { loop_index: j, iteration, a_mat, b_vec, k: k.clone() })
    }
}

pub fn assemble_regression(
    ds: &TrajectoryDataset,
    plant: &DecentralizedPlant,
    k: &DMatrix<f64>,
    j: usize,
) -> Result<RegressionProblem> {
    LoopOperators::from_dataset(ds, j)?.assemble(plant, k, j, 0)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RegressionSolution {
    pub p: SymMatrix,
    pub kappa: f64,
    pub residual: f64,
    pub singular_values: Vec<f64>,
}

/// Minimum-norm least squares by SVD; `κ = σ_max/σ_min` of the regressor.
pub fn solve_regression(r: &RegressionProblem) -> Result<RegressionSolution> {
    let (l, cols) = r.a_mat.shape();
    if l < cols {
        return Err(Error::TooFewSamples { got: l, needed: cols });
    }
    let svd = r.a_mat.clone().svd(true, true);
    let mut sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    let (smax, smin) = (sv[0], sv[sv.len() - 1]);
    if !(smin > RANK_TOL * smax) {
        return Err(Error::RankDeficient(sv));
    }
    let x = svd.solve(&r.b_vec, 0.0).map_err(|e| Error::Shape(e.to_string()))?;
    let residual = (&r.a_mat * &x - &r.b_vec).norm();
    let p = crate::skron::sym_project(smat(&SvecVector::new(x))?.as_matrix())?;
    Ok(RegressionSolution { p, kappa: smax / smin, residual, singular_values: sv })
}

/// `K_{i+1,j} = R_j⁻¹ B_jjᵀ P_{i,j}`.
pub fn update_gain(p: &SymMatrix, plant: &DecentralizedPlant, j: usize) -> Result<DMatrix<f64>> {
    let rj = plant.r_block(j).into_matrix();
    let chol = rj.cholesky().ok_or_else(|| Error::NotDefinite(format!("R block of loop {j}")))?;
    Ok(chol.solve(&(plant.b_block(j).transpose() * &**p)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Gain `K_i` defining the regression.
    pub k: DMatrix<f64>,
    pub p: SymMatrix,
    pub kappa: f64,
    pub residual: f64,
    /// `‖P_i − P_i^{Kleinman}‖_F`
    pub gap_p: f64,
    /// `‖K_{i+1} − K_{i+1}^{Kleinman}‖_F`
    pub gap_k: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearningRecord {
    pub loop_index: usize,
    pub iterations: Vec<IterationRecord>,
    pub final_gain: DMatrix<f64>,
    /// `‖K_{i*} − K*_j‖_F` against the Hamiltonian reference.
    pub final_gap: f64,
}

impl LearningRecord {
    pub fn max_kappa(&self) -> f64 {
        self.iterations.iter().map(|it| it.kappa).fold(f64::NAN, f64::max)
    }

    pub fn min_kappa(&self) -> f64 {
        self.iterations.iter().map(|it| it.kappa).fold(f64::NAN, f64::min)
    }

    pub fn max_gap_p(&self) -> f64 {
        self.iterations.iter().map(|it| it.gap_p).fold(0.0, f64::max)
    }

    pub fn max_gap_k(&self) -> f64 {
        self.iterations.iter().map(|it| it.gap_k).fold(0.0, f64::max)
    }

    pub fn gains(&self) -> Vec<DMatrix<f64>> {
        let mut out: Vec<_> = self.iterations.iter().map(|it| it.k.clone()).collect();
        out.push(self.final_gain.clone());
        out
    }

    /// `iteration,kappa,residual,gap_p,gap_k` rows.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Serde(e.to_string());
        w.write_record(["iteration", "kappa", "residual", "gap_p", "gap_k"]).map_err(io)?;
        for it in &self.iterations {
            w.write_record([
                it.iteration.to_string(),
                format!("{:e}", it.kappa),
                format!("{:e}", it.residual),
                format!("{:e}", it.gap_p),
                format!("{:e}", it.gap_k),
            ])
            .map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Serde(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Serde(e.to_string()))
    }
}

/// Learns loop `j` from its operators. With `modulation = Some(S_j)` each
/// regressor is right-multiplied by `(S_j ⊗ₛ S_j)ᵀ` and the iterates are
/// carried in modulated coordinates, then mapped back with
/// `P = S_jᵀ P̃ S_j`, `K = K̃ S_j` for recording.
pub fn learn_loop(
    plant: &DecentralizedPlant,
    ops: &LoopOperators,
    k0: &DMatrix<f64>,
    j: usize,
    i_star: usize,
    modulation: Option<&DMatrix<f64>>,
) -> Result<LearningRecord> {
    let care = plant.loop_care(j)?;
    let abscissa = spectral_abscissa(&(&care.a - &care.b * k0))?;
    if abscissa >= -HURWITZ_MARGIN {
        return Err(Error::NotHurwitz(abscissa));
    }
    let reference = solve_care_reference(&care)?;
    let kleinman = kleinman_run(&care, k0, StopRule::Iterations(i_star), &reference.k)?;
    let kleinman_gains = kleinman.gains();

    let (s, s_inv) = match modulation {
        Some(s) => {
            let inv = s.clone().try_inverse().ok_or(Error::SingularModulation(j))?;
            (s.clone(), inv)
        }
        None => (DMatrix::identity(k0.ncols(), k0.ncols()), DMatrix::identity(k0.ncols(), k0.ncols())),
    };
    let b_mod = &s * plant.b_block(j);
    let r_chol = plant.r_block(j).into_matrix().cholesky().ok_or_else(|| Error::NotDefinite("R".into()))?;

    let mut k_mod = k0 * &s_inv;
    let mut iterations = Vec::with_capacity(i_star);
    for i in 0..i_star {
        let k = &k_mod * &s;
        let mut problem = ops.assemble(plant, &k, j, i)?;
        if modulation.is_some() {
            problem.a_mat = right_skron(&problem.a_mat, &s, &s)?;
        }
        let sol = solve_regression(&problem)?;
        k_mod = r_chol.solve(&(b_mod.transpose() * &*sol.p));
        let p = sol.p.congruence(&s);
        let k_next = &k_mod * &s;
        iterations.push(IterationRecord {
            iteration: i,
            gap_p: (&*p - &*kleinman.iterates[i].p).norm(),
            gap_k: (&k_next - &kleinman_gains[i + 1]).norm(),
            k,
            p,
            kappa: sol.kappa,
            residual: sol.residual,
        });
    }
    let final_gain = &k_mod * &s;
    let final_gap = (&final_gain - &reference.k).norm();
    Ok(LearningRecord { loop_index: j, iterations, final_gain, final_gap })
}

/// `i_star` iterations per loop on one dataset, one record per loop.
pub fn run_eirl(
    plant: &DecentralizedPlant,
    k0: &DMatrix<f64>,
    ds: &TrajectoryDataset,
    i_star: usize,
) -> Result<Vec<LearningRecord>> {
    (0..plant.loops())
        .map(|j| learn_loop(plant, &LoopOperators::from_dataset(ds, j)?, &plant.gain_block(k0, j), j, i_star, None))
        .collect()
}

/// Smallest singular value over largest for the `I_xx` matrix of each loop:
/// the full-column-rank certificate required before learning.
pub fn rank_certificate(ds: &TrajectoryDataset, j: usize) -> Result<f64> {
    let sv = linalg::singular_values(&integral_matrix(ds, j, IntegrandPair::XX)?);
    Ok(sv.last().copied().unwrap_or(0.0) / sv[0].max(f64::MIN_POSITIVE))
}
