//! Numerical checks of the algebraic and spectral identities of `⊗ₛ`.
//!
//! Each check returns the worst deviation it saw alongside the verdict so the
//! property suite and the CLI can report margins, not just booleans.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{skron, skron_sum};
use crate::error::Result;
use crate::linalg::{eigenvalues, multiset_distance};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CheckOutcome {
    pub passed: bool,
    pub deviation: f64,
}

impl CheckOutcome {
    fn within(deviation: f64, tol: f64) -> Self {
        Self { passed: deviation <= tol, deviation }
    }
}

fn binomial(k: u32, i: u32) -> f64 {
    (0..i).fold(1.0, |acc, t| acc * f64::from(k - t) / f64::from(t + 1))
}

/// `(A ⊗ₛ I)^k` against `2^{-k} Σ C(k,i) A^{k-i} ⊗ₛ A^i`, tolerance `1e-10`
/// scaled by the size of the left-hand side.
pub fn skron_pow_identity_check(a: &DMatrix<f64>, k: u32) -> Result<CheckOutcome> {
    let n = a.nrows();
    let id = DMatrix::identity(n, n);
    let base = skron(a, &id)?;
    let mut lhs = DMatrix::identity(base.nrows(), base.ncols());
    for _ in 0..k {
        lhs = &lhs * &base;
    }
    let powers: Vec<DMatrix<f64>> = std::iter::successors(Some(id.clone()), |p| Some(p * a))
        .take(k as usize + 1)
        .collect();
    let mut rhs = DMatrix::zeros(base.nrows(), base.ncols());
    for i in 0..=k {
        rhs += skron(&powers[(k - i) as usize], &powers[i as usize])? * binomial(k, i);
    }
    rhs /= 2f64.powi(k as i32);
    let dev = (&lhs - &rhs).amax() / lhs.amax().max(1.0);
    Ok(CheckOutcome::within(dev, 1e-10))
}

/// `exp(A ⊕ₛ A) = exp(A) ⊗ₛ exp(A)` to relative tolerance `1e-9`.
pub fn skron_exp_identity_check(a: &DMatrix<f64>) -> Result<CheckOutcome> {
    let (lhs, rhs) = exp_sides(a, a)?;
    let dev = (&lhs - &rhs).amax() / lhs.amax().max(1.0);
    Ok(CheckOutcome::within(dev, 1e-9))
}

/// Both sides of the exponential identity for a general pair `(A, B)`:
/// `(exp(A ⊕ₛ B), exp(A) ⊗ₛ exp(B))`. They differ unless `A = B` in general.
pub fn exp_sides(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let lhs = skron_sum(a, b)?.exp();
    let rhs = skron(&a.exp(), &b.exp())?;
    Ok((lhs, rhs))
}

fn pairwise(ev: &[Complex64], op: impl Fn(Complex64, Complex64) -> Complex64) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(ev.len() * (ev.len() + 1) / 2);
    for i in 0..ev.len() {
        for j in i..ev.len() {
            out.push(op(ev[i], ev[j]));
        }
    }
    out
}

fn spectrum_outcome(expected: &[Complex64], actual: &[Complex64], rel_tol: f64) -> CheckOutcome {
    let scale = expected.iter().chain(actual).map(|z| z.norm()).fold(1.0, f64::max);
    let dev = multiset_distance(expected, actual).map_or(f64::INFINITY, |d| d / scale);
    CheckOutcome::within(dev, rel_tol)
}

/// `σ(A ⊗ₛ A) = {λ_i λ_j : i ≤ j}` as multisets, relative tolerance `1e-8`.
pub fn spectrum_check_skron(a: &DMatrix<f64>) -> Result<CheckOutcome> {
    let ev = eigenvalues(a)?;
    let expected = pairwise(&ev, |x, y| x * y);
    let actual = eigenvalues(&skron(a, a)?)?;
    Ok(spectrum_outcome(&expected, &actual, 1e-8))
}

/// `σ(A ⊕ₛ A) = {λ_i + λ_j : i ≤ j}` as multisets, relative tolerance `1e-8`.
pub fn spectrum_check_skron_sum(a: &DMatrix<f64>) -> Result<CheckOutcome> {
    let ev = eigenvalues(a)?;
    let expected = pairwise(&ev, |x, y| x + y);
    let actual = eigenvalues(&skron_sum(a, a)?)?;
    Ok(spectrum_outcome(&expected, &actual, 1e-8))
}

/// Spectrum of `A ⊗ₛ B` for a simultaneously diagonalizable pair
/// `A = V diag(λ) V⁻¹`, `B = V diag(μ) V⁻¹`: `{(λ_i μ_j + λ_j μ_i)/2 : i ≤ j}`.
pub fn spectrum_check_simultaneous(v: &DMatrix<f64>, lambda: &[f64], mu: &[f64]) -> Result<CheckOutcome> {
    let vinv = v
        .clone()
        .try_inverse()
        .ok_or_else(|| crate::error::Error::shape("eigenvector matrix is singular"))?;
    let a = v * crate::linalg::diag(lambda) * &vinv;
    let b = v * crate::linalg::diag(mu) * &vinv;
    let n = lambda.len();
    let mut expected = Vec::new();
    for i in 0..n {
        for j in i..n {
            expected.push(Complex64::new(0.5 * (lambda[i] * mu[j] + lambda[j] * mu[i]), 0.0));
        }
    }
    let actual = eigenvalues(&skron(&a, &b)?)?;
    Ok(spectrum_outcome(&expected, &actual, 1e-8))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{diag, parse_matrix};
    use std::f64::consts::E;

    #[test]
    fn pow_trivial_orders() {
        let a = parse_matrix("0.2 1.0 -0.3; 0.5 -0.7 0.1; 0.0 0.4 0.9").unwrap();
        assert!(skron_pow_identity_check(&a, 0).unwrap().passed);
        assert!(skron_pow_identity_check(&a, 1).unwrap().passed);
        assert!(skron_pow_identity_check(&a, 4).unwrap().passed);
    }

    #[test]
    fn exp_counterexample() {
        let a = diag(&[1.0, -1.0]);
        let (lhs, rhs) = exp_sides(&a, &DMatrix::identity(2, 2)).unwrap();
        assert!((lhs - diag(&[E * E, E, 1.0])).amax() < 1e-12);
        assert!((rhs - diag(&[E * E, (E * E + 1.0) / 2.0, 1.0])).amax() < 1e-12);
        let zero = DMatrix::zeros(2, 2);
        let (l0, r0) = exp_sides(&zero, &zero).unwrap();
        assert_eq!(l0, DMatrix::identity(3, 3));
        assert_eq!(r0, DMatrix::identity(3, 3));
    }

    #[test]
    fn spectrum_of_reflection() {
        let a = diag(&[1.0, -1.0]);
        assert!(spectrum_check_skron(&a).unwrap().passed);
        let ev = eigenvalues(&skron(&a, &a).unwrap()).unwrap();
        let want = [Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0), Complex64::new(1.0, 0.0)];
        assert!(crate::linalg::multisets_match(&want, &ev, 1e-14));
        assert!(spectrum_check_skron(&DMatrix::identity(3, 3)).unwrap().passed);
    }

    #[test]
    fn spectrum_with_complex_pairs() {
        // rotation block plus a real mode: eigenvalues 0.3±1.2i, -0.8, 0.5±0.4i
        let a = parse_matrix(
            "0.3 -1.2 0 0 0; 1.2 0.3 0 0 0; 0 0 -0.8 0 0; 0 0 0 0.5 0.4; 0 0 0 -0.4 0.5",
        )
        .unwrap();
        let t = parse_matrix(
            "1 0.2 0 0.1 0; 0 1 0.3 0 0; 0.1 0 1 0 0.2; 0 0 0 1 0.3; 0.2 0 0.1 0 1",
        )
        .unwrap();
        let m = &t * a * t.clone().try_inverse().unwrap();
        assert!(spectrum_check_skron(&m).unwrap().passed);
        assert!(spectrum_check_skron_sum(&m).unwrap().passed);
    }
}
