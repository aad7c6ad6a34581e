//! Randomized property suite over the symmetric Kronecker identities.
//!
//! Drives `mee check-algebra` and the algebra acceptance criterion. Every
//! property is checked against either the dense `W (A ⊗ B) Wᵀ` route or an
//! algebraic identity; the tally keeps the worst deviation per property.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::checks::{
    exp_sides, skron_exp_identity_check, skron_pow_identity_check, spectrum_check_simultaneous,
    spectrum_check_skron, spectrum_check_skron_sum,
};
use super::{skron, skron_entry, skron_sum, skron_vec, svec, sym_project, SymBasis, SymMatrix};
use crate::error::Result;
use crate::linalg::{diag, frobenius_inner, max_asymmetry, min_sym_eigenvalue};

#[derive(Clone, Debug, Default, Serialize)]
pub struct PropertyTally {
    pub checked: usize,
    pub failed: usize,
    pub worst: f64,
}

impl PropertyTally {
    fn record(&mut self, deviation: f64, tol: f64) {
        self.checked += 1;
        if !(deviation <= tol) {
            self.failed += 1;
        }
        if deviation.is_nan() || deviation > self.worst {
            self.worst = deviation;
        }
    }

    fn record_bool(&mut self, ok: bool) {
        self.record(if ok { 0.0 } else { 1.0 }, 0.5);
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub cases: usize,
    pub seed: u64,
    pub properties: BTreeMap<&'static str, PropertyTally>,
    #[serde(skip)]
    pub elapsed: Duration,
}

impl SuiteReport {
    pub fn all_passed(&self) -> bool {
        self.properties.values().all(|t| t.failed == 0 && t.checked > 0)
    }
}

struct Gen(ChaCha8Rng);

impl Gen {
    fn dim(&mut self, lo: usize, hi: usize) -> usize {
        self.0.random_range(lo..=hi)
    }

    fn mat(&mut self, r: usize, c: usize) -> DMatrix<f64> {
        DMatrix::from_fn(r, c, |_, _| self.0.random_range(-1.0..1.0))
    }

    fn scalar(&mut self) -> f64 {
        self.0.random_range(-2.0..2.0)
    }

    fn spd(&mut self, n: usize) -> DMatrix<f64> {
        let m = self.mat(n, n);
        &m * m.transpose() + DMatrix::identity(n, n) * 0.1
    }

    fn symmetric(&mut self, n: usize) -> SymMatrix {
        SymMatrix::from_upper(&self.mat(n, n)).expect("square")
    }

    fn well_conditioned(&mut self, n: usize) -> DMatrix<f64> {
        self.mat(n, n) * 0.5 + DMatrix::identity(n, n) * 1.5
    }
}

fn rel(diff: f64, scale: f64) -> f64 {
    diff / scale.max(1.0)
}

/// Runs `cases` randomized rounds; each round draws fresh dimensions and
/// matrices and touches every property once.
pub fn run_algebra_suite(cases: usize, seed: u64) -> Result<SuiteReport> {
    let start = Instant::now();
    let mut g = Gen(ChaCha8Rng::seed_from_u64(seed));
    let mut props: BTreeMap<&'static str, PropertyTally> = BTreeMap::new();
    macro_rules! rec {
        ($name:expr, $dev:expr, $tol:expr) => {
            props.entry($name).or_default().record($dev, $tol)
        };
    }
    macro_rules! rec_bool {
        ($name:expr, $ok:expr) => {
            props.entry($name).or_default().record_bool($ok)
        };
    }

    counterexamples(&mut |name, dev| rec!(name, dev, 1e-12))?;

    for _ in 0..cases {
        let m = g.dim(1, 4);
        let n = g.dim(1, 4);
        let sq = g.dim(1, 5);
        let (a, b, c, d) = (g.mat(m, n), g.mat(m, n), g.mat(n, sq), g.mat(n, sq));

        // isometry and basis structure
        let (sa, sb) = (g.symmetric(sq), g.symmetric(sq));
        let dev = (svec(&sa).values().dot(svec(&sb).values()) - frobenius_inner(&sa, &sb)).abs();
        rec!("isometry", dev, 1e-12);
        let basis = SymBasis::new(sq)?;
        let nb = basis.w.nrows();
        let gram = &basis.w * basis.w.transpose();
        let cm = g.mat(sq, sq);
        let projected = basis.w.transpose() * &basis.w * DVector::from_column_slice(cm.as_slice());
        let want = sym_project(&cm)?;
        let dev = (gram - DMatrix::identity(nb, nb)).amax()
            + (projected - DVector::from_column_slice(want.as_slice())).amax();
        rec!("basis projector", dev, 1e-12);

        // production route against the dense Kronecker route and the entry identity
        let ab = skron(&a, &b)?;
        let wm = SymBasis::new(m)?.w;
        let wn = SymBasis::new(n)?.w;
        let dense = &wm * a.kronecker(&b) * wn.transpose();
        rec!("dense kronecker oracle", (&ab - &dense).amax(), 1e-12);
        let mut worst: f64 = 0.0;
        for i in 0..ab.nrows() {
            for j in 0..ab.ncols() {
                worst = worst.max((ab[(i, j)] - skron_entry(&a, &b, i, j)?).abs());
            }
        }
        rec!("indexing identity", worst, 1e-12);

        // 1S, 2S
        let alpha = g.scalar();
        let c2 = g.mat(m, n);
        let lhs = skron(&(&a * alpha + &b), &c2)?;
        let rhs = skron(&a, &c2)? * alpha + skron(&b, &c2)?;
        rec!("bilinearity", rel((lhs - rhs).amax(), ab.amax()), 1e-12);
        rec!("symmetry", (&ab - skron(&b, &a)?).amax(), 1e-14);

        // 3S
        let csq = g.mat(n, n);
        let pc = sym_project(&csq)?;
        let lhs = &ab * svec(&pc).values();
        let rhs = svec(&sym_project(&(&b * &*pc * a.transpose()))?).into_values();
        rec!("mixed vector product", rel((lhs - rhs).amax(), ab.amax()), 1e-10);

        // 4S
        rec!("transpose", (ab.transpose() - skron(&a.transpose(), &b.transpose())?).amax(), 1e-14);

        // 6S a, b, c
        let lhs = &ab * skron(&c, &d)?;
        let rhs = (skron(&(&a * &c), &(&b * &d))? + skron(&(&a * &d), &(&b * &c))?) * 0.5;
        let mut dev = rel((lhs - rhs).amax(), ab.amax());
        let lhs = &ab * skron(&c, &c)?;
        dev = dev.max(rel((lhs - skron(&(&a * &c), &(&b * &c))?).amax(), ab.amax()));
        let left = g.mat(sq, m);
        let lhs = skron(&left, &left)? * &ab;
        dev = dev.max(rel((lhs - skron(&(&left * &a), &(&left * &b))?).amax(), ab.amax()));
        rec!("mixed product", dev, 1e-10);

        // square-only properties
        let s = g.mat(sq, sq);
        let inv_src = g.well_conditioned(sq);
        let inv = inv_src.clone().try_inverse().expect("diagonally dominated");
        let prod = skron(&inv_src, &inv_src)? * skron(&inv, &inv)?;
        rec!("inverse", (prod - DMatrix::identity(nb, nb)).amax(), 1e-8);

        rec!("spectrum of A skron A", spectrum_check_skron(&s)?.deviation, 1e-8);
        rec!("spectrum of A skronsum A", spectrum_check_skron_sum(&s)?.deviation, 1e-8);

        // 7Sb and the simultaneously diagonalizable Kronecker sum case
        let v = g.well_conditioned(sq);
        let lam: Vec<f64> = (0..sq).map(|_| g.scalar()).collect();
        let mu: Vec<f64> = (0..sq).map(|_| g.scalar()).collect();
        rec!("simultaneous spectrum", spectrum_check_simultaneous(&v, &lam, &mu)?.deviation, 1e-8);
        let vinv = v.clone().try_inverse().expect("diagonally dominated");
        let a_sd = &v * diag(&lam) * &vinv;
        let b_sd = &v * diag(&mu) * &vinv;
        let sum = skron_sum(&a_sd, &b_sd)?;
        let mut dev: f64 = 0.0;
        for i in 0..sq {
            for j in i..sq {
                let x = v.column(i);
                let y = v.column(j);
                let xy = skron_vec(x.as_slice(), y.as_slice());
                // shared eigenvector pair (Lemma-style statement)
                let want = 0.5 * (lam[i] + mu[i] + lam[j] + mu[j]);
                dev = dev.max((&sum * &xy - &xy * want).amax() / xy.amax().max(1e-300));
                let prod = skron(&a_sd, &b_sd)?;
                let want = 0.5 * (lam[i] * mu[j] + lam[j] * mu[i]);
                dev = dev.max((&prod * &xy - &xy * want).amax() / xy.amax().max(1e-300));
            }
        }
        rec!("shared eigenvectors", dev, 1e-8);

        // 8S
        let sym = g.symmetric(sq);
        let id = DMatrix::identity(sq, sq);
        let sym_ok = max_asymmetry(&skron(&sym, &id)?) < 1e-14;
        let nonsym_ok = sq == 1 || max_asymmetry(&s) < 1e-3 || max_asymmetry(&skron(&s, &id)?) > 1e-6;
        rec_bool!("symmetry of A skron I", sym_ok && nonsym_ok);

        // 9S
        let (pa, pb) = (g.spd(sq), g.spd(sq));
        rec_bool!("positive definiteness", min_sym_eigenvalue(&skron(&pa, &pb)?) > 0.0);

        // 10S, fuzzed including single-entry matrices
        let z = DMatrix::zeros(m, n);
        let mut e1 = DMatrix::zeros(m, n);
        e1[(g.dim(0, m - 1), g.dim(0, n - 1))] = 1.0;
        let mut e2 = DMatrix::zeros(m, n);
        e2[(g.dim(0, m - 1), g.dim(0, n - 1))] = 1.0;
        let zero_ok = skron(&z, &a)?.amax() == 0.0
            && ab.amax() > 0.0
            && skron(&e1, &e2)?.amax() > 0.0
            && skron(&e1, &a)?.amax() > 0.0;
        rec_bool!("zero law", zero_ok);

        // 11S
        let det_l = skron(&s, &s)?.determinant();
        let det_r = s.determinant().powi(sq as i32 + 1);
        rec!("determinant", (det_l - det_r).abs() / det_l.abs().max(det_r.abs()).max(1e-6), 1e-8);

        // 12S
        let da = diag(&(0..sq).map(|_| g.scalar()).collect::<Vec<_>>());
        let db = diag(&(0..sq).map(|_| g.scalar()).collect::<Vec<_>>());
        let dd = skron(&da, &db)?;
        let off = &dd - DMatrix::from_diagonal(&dd.diagonal());
        rec_bool!("diagonality", off.amax() == 0.0);

        // 13S: exact pair, and perturbed pairs that must miss the identity
        let lambda = g.scalar() + 3.0;
        let exact = skron(&(&id * lambda), &(&id / lambda))?;
        let exact_ok = (exact - DMatrix::identity(nb, nb)).amax() < 1e-14;
        let mut bump = DMatrix::zeros(sq, sq);
        bump[(g.dim(0, sq - 1), g.dim(0, sq - 1))] = 1e-3;
        let near = skron(&(&id * lambda + bump), &(&id / lambda))?;
        let near_ok = (near - DMatrix::identity(nb, nb)).amax() > 1e-6;
        rec_bool!("identity law", exact_ok && near_ok);

        // 14S testable core
        rec!("kernel", (skron(&(-&s), &(-&s))? - skron(&s, &s)?).amax(), 0.0);

        // power and exponential identities
        let k = g.dim(0, 5) as u32;
        rec!("binomial power", skron_pow_identity_check(&s, k)?.deviation, 1e-10);
        rec!("exponential", skron_exp_identity_check(&s)?.deviation, 1e-9);
    }

    Ok(SuiteReport { cases, seed, properties: props, elapsed: start.elapsed() })
}

/// The three published counterexamples, reproduced to `1e-12`.
fn counterexamples(rec: &mut dyn FnMut(&'static str, f64)) -> Result<()> {
    use std::f64::consts::E;
    let a = diag(&[1.0, -1.0]);
    let i2 = DMatrix::identity(2, 2);
    rec("counterexample: singular product", (skron(&a, &i2)? - diag(&[1.0, 0.0, -1.0])).amax());
    let mut e21 = DMatrix::zeros(2, 2);
    e21[(1, 0)] = 1.0;
    rec("counterexample: diagonal product", (skron(&e21, &e21.transpose())? - diag(&[0.0, 0.5, 0.0])).amax());
    let (lhs, rhs) = exp_sides(&a, &i2)?;
    let dev = (lhs - diag(&[E * E, E, 1.0])).amax() + (rhs - diag(&[E * E, (E * E + 1.0) / 2.0, 1.0])).amax();
    rec("counterexample: exponential", dev);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_run_passes() {
        let r = run_algebra_suite(25, 7).unwrap();
        for (name, t) in &r.properties {
            assert_eq!(t.failed, 0, "{name}: worst {}", t.worst);
        }
        assert!(r.all_passed());
    }
}
