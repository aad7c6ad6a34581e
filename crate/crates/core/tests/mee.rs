mod common;

use common::{dual_path, random_linear_plant, random_probing, rng, spd, well_conditioned, hurwitz};
use mee_core::lyap::{solve_care_reference, CareProblem};
use mee_core::mee::{back_transform, modulate_care, verify_ale_modulation_invariance, ModulationSpec};
use mee_core::sim::plants::{lin2d, lin2d_probing};
use mee_core::sim::{LoopPartition, SampleSpec};
use mee_core::Error;
use nalgebra::DMatrix;
use rand::Rng;

#[test]
fn lin2d_paths_agree() {
    let plant = lin2d();
    let spec = ModulationSpec::diagonal(&[vec![1.0, 10.0]]).unwrap();
    let d = dual_path(&plant, &spec, &lin2d_probing(), &[-0.215, 0.035], &SampleSpec::uniform(0.1, 5), 0.5, 5);
    assert!(d.regressor <= 1e-9, "{d:?}");
    assert!(d.target <= 1e-9, "{d:?}");
    assert!(d.target_bitwise);
    assert!(d.gain <= 1e-8, "{d:?}");
    assert!(d.gain_vs_plain <= 1e-8, "{d:?}");
}

#[test]
fn fuzzed_paths_agree() {
    let mut r = rng(2024);
    let layouts: [&[usize]; 4] = [&[2, 1], &[1, 2], &[3], &[2, 2]];
    for case in 0..25 {
        let dims = layouts[case % layouts.len()];
        let plant = random_linear_plant(&mut r, dims);
        let blocks = dims.iter().map(|&d| well_conditioned(&mut r, d)).collect();
        let spec = ModulationSpec::new(blocks).unwrap();
        let probing = random_probing(&mut r, plant.m());
        let x0: Vec<f64> = (0..plant.n()).map(|_| r.random_range(-1.0..1.0)).collect();
        let l = 14;
        let d = dual_path(&plant, &spec, &probing, &x0, &SampleSpec::uniform(0.3, l), 0.3 * l as f64, 5);
        assert!(d.regressor <= 1e-9, "case {case}: {d:?}");
        assert!(d.target <= 1e-9, "case {case}: {d:?}");
        assert!(d.target_bitwise);
        assert!(d.gain <= 1e-8, "case {case}: {d:?}");
        assert!(d.gain_vs_plain <= 1e-8, "case {case}: {d:?}");
    }
}

#[test]
fn ale_iterates_invariant_under_modulation() {
    let mut r = rng(99);
    for case in 0..30 {
        let n = 1 + case % 4;
        let m = 1 + case % 2;
        let c = CareProblem::new(hurwitz(&mut r, n, 0.5), common::uniform(&mut r, n, m), spd(&mut r, n), spd(&mut r, m)).unwrap();
        let s = well_conditioned(&mut r, n);
        let rep = verify_ale_modulation_invariance(&c, &s, &DMatrix::zeros(m, n), 6).unwrap();
        assert!(rep.holds, "case {case}: {rep:?}");
    }
}

#[test]
fn modulated_care_back_transforms_to_original() {
    let mut r = rng(5);
    let c = CareProblem::new(hurwitz(&mut r, 3, 0.2), common::uniform(&mut r, 3, 2), spd(&mut r, 3), spd(&mut r, 2)).unwrap();
    let s = well_conditioned(&mut r, 3);
    let orig = solve_care_reference(&c).unwrap();
    let modded = solve_care_reference(&modulate_care(&c, &s).unwrap()).unwrap();
    let (p, k) = back_transform(&modded.p, &modded.k, &s);
    assert!((&*p - &*orig.p).amax() <= 1e-8 * orig.p.amax().max(1.0));
    assert!((k - &orig.k).amax() <= 1e-8 * orig.k.amax().max(1.0));
}

#[test]
fn modulation_input_validation() {
    let part = LoopPartition::new(vec![1, 1], vec![1, 1]).unwrap();
    let coupled = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
    assert!(matches!(ModulationSpec::from_full(&coupled, &part), Err(Error::Config(_))));
    assert!(matches!(ModulationSpec::diagonal(&[vec![1.0, 0.0]]), Err(Error::SingularModulation(0))));
    let ok = ModulationSpec::from_full(&DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 10.0]), &part).unwrap();
    assert_eq!(ok.blocks.len(), 2);
    let spec = ModulationSpec::diagonal(&[vec![1.0, 10.0]]).unwrap();
    assert!(spec.check_partition(&part).is_err());
}
