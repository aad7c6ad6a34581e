mod common;

use common::{random_linear_plant, random_probing, rng};
use mee_core::eirl::{
    assemble_regression, rank_certificate, run_eirl, solve_regression, update_gain, LoopOperators,
    RegressionProblem,
};
use mee_core::kleinman::kleinman_iterate;
use mee_core::linalg::{diag, spectral_abscissa};
use mee_core::sim::ode::OdeOptions;
use mee_core::sim::plants::{lin2d, lin2d_probing};
use mee_core::sim::{simulate_closed_loop, LoopPartition, ProbingSignal, SampleSpec, TrajectoryDataset};
use mee_core::{svec, Error, SymMatrix};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

const X0: [f64; 2] = [-0.215, 0.035];

fn lin2d_data(plant: &mee_core::sim::DecentralizedPlant) -> TrajectoryDataset {
    simulate_closed_loop(
        plant,
        &DMatrix::zeros(2, 2),
        &lin2d_probing(),
        &X0,
        0.5,
        &SampleSpec::uniform(0.1, 5),
        &OdeOptions::default(),
    )
    .unwrap()
}

#[test]
fn kleinman_iterates_satisfy_every_regression() {
    let plant = lin2d();
    let ds = lin2d_data(&plant);
    let run = kleinman_iterate(&plant.care().unwrap(), &DMatrix::zeros(2, 2), 5).unwrap();
    let ops = LoopOperators::from_dataset(&ds, 0).unwrap();
    for (i, it) in run.iterates.iter().enumerate() {
        let r = ops.assemble(&plant, &it.k, 0, i).unwrap();
        let lhs = &r.a_mat * svec(&it.p).values();
        let err = (&lhs - &r.b_vec).amax() / r.b_vec.amax().max(1.0);
        assert!(err <= 1e-8, "iteration {i}: {err:e}");
    }
}

#[test]
fn free_response_identity() {
    // d = 0, x0 ≠ 0, K0 = 0: A_mat svec(P_0) = b with P_0 the open-loop ALE solution
    let plant = lin2d();
    let ds = simulate_closed_loop(
        &plant,
        &DMatrix::zeros(2, 2),
        &ProbingSignal::zero(2),
        &[1.0, -2.0],
        2.0,
        &SampleSpec::uniform(0.4, 5),
        &OdeOptions::default(),
    )
    .unwrap();
    let r = assemble_regression(&ds, &plant, &DMatrix::zeros(2, 2), 0).unwrap();
    let p0 = diag(&[0.5, 5.0]);
    let lhs = &r.a_mat * svec(&SymMatrix::try_new(p0, 0.0).unwrap()).values();
    assert!((lhs - &r.b_vec).amax() <= 1e-8);
}

#[test]
fn zero_trajectory_gives_zero_system() {
    let plant = lin2d();
    let ds = simulate_closed_loop(
        &plant,
        &DMatrix::zeros(2, 2),
        &ProbingSignal::zero(2),
        &[0.0, 0.0],
        1.0,
        &SampleSpec::uniform(0.1, 5),
        &OdeOptions::default(),
    )
    .unwrap();
    let r = assemble_regression(&ds, &plant, &DMatrix::zeros(2, 2), 0).unwrap();
    assert_eq!(r.a_mat.amax(), 0.0);
    assert_eq!(r.b_vec.amax(), 0.0);
    assert!(matches!(solve_regression(&r), Err(Error::RankDeficient(_))));
}

#[test]
fn exactly_determined_system() {
    let a = DMatrix::from_row_slice(3, 3, &[2.0, 0.1, 0.0, 0.3, 1.0, -0.2, 0.0, 0.5, 3.0]);
    let p = SymMatrix::try_new(DMatrix::from_row_slice(2, 2, &[1.0, 0.25, 0.25, -2.0]), 0.0).unwrap();
    let b = &a * svec(&p).values();
    let r = RegressionProblem { loop_index: 0, iteration: 0, a_mat: a, b_vec: b, k: DMatrix::zeros(2, 2) };
    let sol = solve_regression(&r).unwrap();
    assert!(sol.residual < 1e-12);
    assert!((&*sol.p - &*p).amax() < 1e-12);
}

#[test]
fn scalar_loops_have_unit_conditioning() {
    let r = RegressionProblem {
        loop_index: 0,
        iteration: 0,
        a_mat: DMatrix::from_column_slice(4, 1, &[0.3, -1.7, 2.2, 1e-3]),
        b_vec: DVector::from_column_slice(&[1.0, 2.0, 3.0, 4.0]),
        k: DMatrix::zeros(1, 1),
    };
    assert_eq!(solve_regression(&r).unwrap().kappa, 1.0);
}

#[test]
fn too_few_rows_rejected() {
    let r = RegressionProblem {
        loop_index: 0,
        iteration: 0,
        a_mat: DMatrix::identity(2, 3),
        b_vec: DVector::zeros(2),
        k: DMatrix::zeros(2, 2),
    };
    assert!(matches!(solve_regression(&r), Err(Error::TooFewSamples { got: 2, needed: 3 })));
}

#[test]
fn gain_update_examples() {
    let plant = lin2d();
    assert_eq!(update_gain(&SymMatrix::zeros(2), &plant, 0).unwrap().amax(), 0.0);
    let unit = mee_core::sim::DecentralizedPlant::linear(
        diag(&[-1.0, -2.0]),
        DMatrix::identity(2, 2),
        SymMatrix::identity(2),
        SymMatrix::identity(2),
        LoopPartition::single(2, 2).unwrap(),
    )
    .unwrap();
    let p = SymMatrix::try_new(DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 2.0]), 0.0).unwrap();
    assert!((update_gain(&p, &unit, 0).unwrap() - &*p).amax() < 1e-15);
}

#[test]
fn lin2d_joint_and_decentralized_runs() {
    let plant = lin2d();
    let recs = run_eirl(&plant, &DMatrix::zeros(2, 2), &lin2d_data(&plant), 5).unwrap();
    assert!(recs[0].final_gap <= 1e-6);
    assert!(recs[0].max_gap_p() <= 1e-6);
    assert!(recs[0].iterations.iter().all(|it| it.kappa >= 1.0));

    let split = plant.with_partition(LoopPartition::new(vec![1, 1], vec![1, 1]).unwrap()).unwrap();
    let recs = run_eirl(&split, &DMatrix::zeros(2, 2), &lin2d_data(&split), 5).unwrap();
    assert!((recs[0].final_gain[(0, 0)] - (2f64.sqrt() - 1.0)).abs() < 1e-6);
    for r in &recs {
        assert!(r.final_gap <= 1e-6);
        assert!(r.iterations.iter().all(|it| it.kappa == 1.0));
    }
    let csv = recs[0].to_csv().unwrap();
    assert!(csv.starts_with("iteration,kappa,residual,gap_p,gap_k\n"));
    assert_eq!(csv.lines().count(), 6);
}

#[test]
fn reruns_are_bit_identical() {
    let plant = lin2d();
    let ds = lin2d_data(&plant);
    let a = run_eirl(&plant, &DMatrix::zeros(2, 2), &ds, 5).unwrap();
    let b = run_eirl(&plant, &DMatrix::zeros(2, 2), &ds, 5).unwrap();
    assert_eq!(a, b);
}

#[test]
fn equivalence_on_random_linear_plants() {
    let mut r = rng(71);
    for case in 0..15 {
        let dims: Vec<usize> = if case % 2 == 0 { vec![2, 1] } else { vec![3] };
        let plant = random_linear_plant(&mut r, &dims);
        let probing = random_probing(&mut r, plant.m());
        let x0: Vec<f64> = (0..plant.n()).map(|_| r.random_range(-1.0..1.0)).collect();
        let l = 12;
        let ds = simulate_closed_loop(
            &plant,
            &DMatrix::zeros(plant.m(), plant.n()),
            &probing,
            &x0,
            l as f64 * 0.3,
            &SampleSpec::uniform(0.3, l),
            &OdeOptions::default(),
        )
        .unwrap();
        for j in 0..plant.loops() {
            assert!(rank_certificate(&ds, j).unwrap() > 1e-8);
        }
        let recs = run_eirl(&plant, &DMatrix::zeros(plant.m(), plant.n()), &ds, 6).unwrap();
        for rec in &recs {
            let scale = rec.iterations.iter().map(|it| it.p.norm()).fold(1.0, f64::max);
            assert!(rec.max_gap_p() <= 1e-6 * scale, "case {case} loop {}: {:e}", rec.loop_index, rec.max_gap_p());
            assert!(rec.max_gap_k() <= 1e-6 * scale);
            let care = plant.loop_care(rec.loop_index).unwrap();
            for it in &rec.iterations {
                assert!(spectral_abscissa(&(&care.a - &care.b * &it.k)).unwrap() < 0.0);
            }
        }
    }
}
