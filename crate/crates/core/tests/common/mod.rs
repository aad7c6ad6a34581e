#![allow(dead_code)]

use mee_core::linalg::{block_diag, spectral_abscissa};
use mee_core::sim::{DecentralizedPlant, LoopPartition, ProbingSignal, Sinusoid};
use mee_core::SymMatrix;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
}

/// Random matrix shifted so its spectral abscissa is `-margin`.
pub fn hurwitz(rng: &mut ChaCha8Rng, n: usize, margin: f64) -> DMatrix<f64> {
    let m = uniform(rng, n, n);
    let alpha = spectral_abscissa(&m).unwrap();
    m - DMatrix::identity(n, n) * (alpha + margin)
}

pub fn spd(rng: &mut ChaCha8Rng, n: usize) -> SymMatrix {
    let l = uniform(rng, n, n);
    SymMatrix::try_new(&l * l.transpose() + DMatrix::identity(n, n) * 0.5, 1e-12).unwrap()
}

/// Well-conditioned random matrix: orthogonal-ish factor times a diagonal in [0.2, 5].
pub fn well_conditioned(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let q = uniform(rng, n, n).qr().q();
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(n, |_, _| rng.random_range(0.2..5.0)));
    q * d
}

/// Linear plant with Hurwitz diagonal blocks, weak off-block coupling, and
/// a block-diagonal input matrix, so `K0 = 0` is stabilizing per loop.
pub fn random_linear_plant(rng: &mut ChaCha8Rng, dims: &[usize]) -> DecentralizedPlant {
    let blocks: Vec<_> = dims.iter().map(|&d| { let margin = rng.random_range(0.3..1.0); hurwitz(rng, d, margin) }).collect();
    let mut a = block_diag(&blocks);
    let n = a.nrows();
    let part = LoopPartition::new(dims.to_vec(), vec![1; dims.len()]).unwrap();
    for j in 0..dims.len() {
        for i in 0..dims.len() {
            if i != j {
                let (ri, rj) = (part.states(i), part.states(j));
                for r in ri.clone() {
                    for c in rj.clone() {
                        a[(r, c)] = 0.05 * rng.random_range(-1.0..1.0);
                    }
                }
            }
        }
    }
    let mut b = DMatrix::zeros(n, dims.len());
    for j in 0..dims.len() {
        for r in part.states(j) {
            b[(r, j)] = rng.random_range(-1.0..1.0);
        }
        b[(part.states(j).start, j)] = 1.0;
    }
    let q = block_diag(&dims.iter().map(|&d| spd(rng, d).into_matrix()).collect::<Vec<_>>());
    let r = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(dims.len(), |_, _| rng.random_range(0.5..2.0)));
    DecentralizedPlant::linear(
        a,
        b,
        SymMatrix::try_new(q, 0.0).unwrap(),
        SymMatrix::try_new(r, 0.0).unwrap(),
        part,
    )
    .unwrap()
}

pub fn random_probing(rng: &mut ChaCha8Rng, m: usize) -> ProbingSignal {
    ProbingSignal::new(
        (0..m)
            .map(|_| {
                (0..3)
                    .map(|_| Sinusoid {
                        amplitude: rng.random_range(0.3..1.0),
                        frequency: rng.random_range(0.2..4.0),
                        phase: rng.random_range(0.0..std::f64::consts::TAU),
                    })
                    .collect()
            })
            .collect(),
    )
    .unwrap()
}

/// Largest deviations between the two MEE data paths.
#[derive(Debug, Clone, Copy)]
pub struct DualPathDeviation {
    /// Relative regressor deviation, algebraic vs physical, over all loops.
    pub regressor: f64,
    /// Relative target deviation between physical and original-coordinate data.
    pub target: f64,
    /// Relative final-gain deviation between the two paths.
    pub gain: f64,
    /// Relative final-gain deviation between modulated and unmodulated runs.
    pub gain_vs_plain: f64,
    /// True when the algebraic path leaves every target vector bitwise unchanged.
    pub target_bitwise: bool,
}

fn rel(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax() / b.amax().max(1.0)
}

/// Runs the algebraic and physical MEE paths from one experiment and
/// compares regressors on the first iteration and learned gains.
pub fn dual_path(
    plant: &DecentralizedPlant,
    spec: &mee_core::mee::ModulationSpec,
    probing: &ProbingSignal,
    x0: &[f64],
    samples: &mee_core::sim::SampleSpec,
    horizon: f64,
    i_star: usize,
) -> DualPathDeviation {
    use mee_core::eirl::{run_eirl, LoopOperators};
    use mee_core::mee::{modulate_problem, modulated_regression, run_mee_algebraic, run_mee_physical, Experiment};
    use mee_core::sim::{ode::OdeOptions, simulate_closed_loop};

    let opts = OdeOptions::default();
    let k0 = DMatrix::zeros(plant.m(), plant.n());
    let ds = simulate_closed_loop(plant, &k0, probing, x0, horizon, samples, &opts).unwrap();
    let exp = Experiment { probing, x0, horizon, samples, opts: &opts };
    let (phys, ds_mod) = run_mee_physical(plant, spec, &k0, &exp, i_star).unwrap();
    let alg = run_mee_algebraic(plant, spec, &k0, &ds, i_star).unwrap();
    let plain = run_eirl(plant, &k0, &ds, i_star).unwrap();
    let mplant = modulate_problem(plant, spec).unwrap();

    let mut dev = DualPathDeviation { regressor: 0.0, target: 0.0, gain: 0.0, gain_vs_plain: 0.0, target_bitwise: true };
    for j in 0..plant.loops() {
        let s = spec.block(j);
        let k = plant.gain_block(&k0, j);
        let r = LoopOperators::from_dataset(&ds, j).unwrap().assemble(plant, &k, j, 0).unwrap();
        let r_alg = modulated_regression(&r, s).unwrap();
        let k_mod = &k * s.clone().try_inverse().unwrap();
        let r_phys = LoopOperators::from_dataset(&ds_mod, j).unwrap().assemble(&mplant, &k_mod, j, 0).unwrap();
        dev.regressor = dev.regressor.max(rel(&r_phys.a_mat, &r_alg.a_mat));
        let (bp, b) = (DMatrix::from_column_slice(r.b_vec.len(), 1, r_phys.b_vec.as_slice()), DMatrix::from_column_slice(r.b_vec.len(), 1, r.b_vec.as_slice()));
        dev.target = dev.target.max(rel(&bp, &b));
        dev.target_bitwise &= r_alg.b_vec.iter().zip(r.b_vec.iter()).all(|(x, y)| x.to_bits() == y.to_bits());
        dev.gain = dev.gain.max(rel(&phys[j].final_gain, &alg[j].final_gain));
        dev.gain_vs_plain = dev.gain_vs_plain.max(rel(&alg[j].final_gain, &plain[j].final_gain));
    }
    dev
}

/// Random CARE with `‖P*‖_F ≤ 100` and a stabilizing initial gain `2K*`.
pub fn fuzz_care_problem(r: &mut ChaCha8Rng, case: usize) -> (mee_core::lyap::CareProblem, DMatrix<f64>) {
    use mee_core::lyap::{solve_care_reference, CareProblem};
    let n = 2 + case % 4;
    let m = 1 + case % 3;
    loop {
        let a = uniform(r, n, n);
        let c = CareProblem::new(a, uniform(r, n, m), spd(r, n), spd(r, m)).unwrap();
        let Ok(sol) = solve_care_reference(&c) else { continue };
        // the PSD floor is absolute, so keep ‖P*‖ moderate
        if sol.p.norm() > 100.0 {
            continue;
        }
        let k0 = &sol.k * 2.0;
        if spectral_abscissa(&(&c.a - &c.b * &k0)).unwrap() < -1e-3 {
            return (c, k0);
        }
    }
}

/// Diagonalizable `A` with real spectrum; even cases force `λ1 + λ2 = 0`.
pub fn solvability_case(r: &mut ChaCha8Rng, case: usize) -> DMatrix<f64> {
    let n = 2 + case % 3;
    let mut eig: Vec<f64> = (0..n).map(|_| r.random_range(-2.0..2.0)).collect();
    if case.is_multiple_of(2) {
        eig[1] = -eig[0];
    }
    let v = uniform(r, n, n) + DMatrix::identity(n, n) * 2.0;
    &v * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(eig)) * v.clone().try_inverse().unwrap()
}
