mod common;

use common::{hurwitz, rng, solvability_case, spd, uniform};
use mee_core::kleinman::{kleinman_run, StopRule};
use mee_core::linalg::{condition_number, is_pd, min_sym_eigenvalue};
use mee_core::lyap::{
    ale_unique_solvable, is_hurwitz, solve_ale_integral, solve_ale_svec, solve_care_reference, AleProblem,
    CareProblem,
};
use mee_core::{skron_sum, SymMatrix};
use nalgebra::DMatrix;
use rand::Rng;

#[test]
fn svec_solver_matches_integral_oracle() {
    let mut r = rng(101);
    for case in 0..30 {
        let n = 1 + case % 5;
        let margin = r.random_range(0.2..1.0);
        let a = hurwitz(&mut r, n, margin);
        let p = AleProblem::new(a, spd(&mut r, n)).unwrap();
        let fast = solve_ale_svec(&p).unwrap();
        let slow = solve_ale_integral(&p, 1e5, 1e-12).unwrap();
        let err = (&*fast - &*slow).norm() / fast.norm().max(1.0);
        assert!(err < 1e-8, "case {case}: {err:e}");
        assert!(is_pd(&fast));
        assert!(p.residual(&fast).norm() <= 1e-9 * p.q.norm().max(1.0));
    }
}

#[test]
fn psd_cost_with_detectable_pair_gives_pd_solution() {
    let mut r = rng(5);
    for _ in 0..20 {
        let a = hurwitz(&mut r, 3, 0.5);
        let c = uniform(&mut r, 1, 3);
        let q = SymMatrix::try_new(c.transpose() * &c, 1e-14).unwrap();
        let p = solve_ale_svec(&AleProblem::new(a, q).unwrap()).unwrap();
        // stable A makes every pair detectable; generic c makes P definite
        assert!(min_sym_eigenvalue(&p) > 0.0);
    }
}

#[test]
fn solvability_predicate_agrees_with_operator_conditioning() {
    let mut r = rng(17);
    for case in 0..60 {
        let a = solvability_case(&mut r, case);
        let invertible = condition_number(&skron_sum(&a, &a).unwrap()) < 1e12;
        assert_eq!(ale_unique_solvable(&a).unwrap(), invertible, "case {case}");
    }
}

#[test]
fn care_reference_on_random_stabilizable_triples() {
    let mut r = rng(23);
    for case in 0..30 {
        let n = 2 + case % 4;
        let m = 1 + case % 2;
        let a = uniform(&mut r, n, n) * 1.5;
        let c = CareProblem::new(a, uniform(&mut r, n, m), spd(&mut r, n), spd(&mut r, m)).unwrap();
        let sol = solve_care_reference(&c).unwrap();
        assert!(c.residual(&sol.p).norm() <= 1e-8 * sol.p.norm().max(1.0));
        assert!(is_hurwitz(&(&c.a - &c.b * &sol.k)).unwrap());
        assert!(is_pd(&sol.p));
        // Kleinman from a stabilizing gain reaches the same point
        let k0 = if is_hurwitz(&c.a).unwrap() { DMatrix::zeros(m, n) } else { sol.k.clone() * 1.5 };
        if !is_hurwitz(&(&c.a - &c.b * &k0)).unwrap() {
            continue;
        }
        let run = kleinman_run(&c, &k0, StopRule::Gap { tol: 1e-10, max_iter: 60 }, &sol.k).unwrap();
        let last = run.iterates.last().map(|it| &it.p).unwrap();
        assert!((&**last - &*sol.p).norm() <= 1e-8 * sol.p.norm().max(1.0), "case {case}");
    }
}
