//! Algebraic Lyapunov equations `AᵀP + PA + Q = 0`, controllability and
//! observability tests, and an invariant-subspace Riccati solver that serves
//! as the reference for policy iteration.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, eigenvalues, spectral_abscissa};
use crate::quad;
use crate::skron::{skron_sum, smat, svec, SvecVector, SymMatrix};

/// Margin on the spectral abscissa below which a matrix counts as Hurwitz.
pub const HURWITZ_MARGIN: f64 = 1e-10;
const SOLVABILITY_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct AleProblem {
    pub a: DMatrix<f64>,
    pub q: SymMatrix,
}

impl AleProblem {
    pub fn new(a: DMatrix<f64>, q: SymMatrix) -> Result<Self> {
        if !a.is_square() || a.nrows() != q.n() {
            return Err(Error::shape(format!("ALE with A {:?} and Q {}x{}", a.shape(), q.n(), q.n())));
        }
        Ok(Self { a, q })
    }

    pub fn residual(&self, p: &DMatrix<f64>) -> DMatrix<f64> {
        self.a.transpose() * p + p * &self.a + &*self.q
    }
}

pub fn is_hurwitz(a: &DMatrix<f64>) -> Result<bool> {
    Ok(spectral_abscissa(a)? < -HURWITZ_MARGIN)
}

fn zero_sum_pair(a: &DMatrix<f64>) -> Result<Option<(Complex64, Complex64)>> {
    let ev = eigenvalues(a)?;
    for (i, x) in ev.iter().enumerate() {
        for y in &ev[i..] {
            if (x + y).norm() <= SOLVABILITY_TOL {
                return Ok(Some((*x, *y)));
            }
        }
    }
    Ok(None)
}

/// The ALE has a unique solution iff no two eigenvalues of `A` sum to zero.
pub fn ale_unique_solvable(a: &DMatrix<f64>) -> Result<bool> {
    Ok(zero_sum_pair(a)?.is_none())
}

/// Solves `(A ⊕ₛ A)ᵀ svec(P) = −svec(Q)` by LU with partial pivoting.
pub fn solve_ale_svec(p: &AleProblem) -> Result<SymMatrix> {
    if let Some((x, y)) = zero_sum_pair(&p.a)? {
        return Err(Error::SingularLyapunov(x.to_string(), y.to_string()));
    }
    let op = skron_sum(&p.a, &p.a)?.transpose();
    let rhs: DVector<f64> = -svec(&p.q).into_values();
    let sol = op
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::SingularLyapunov("(numerically)".into(), "(numerically)".into()))?;
    smat(&SvecVector::new(sol))
}

/// `P = ∫₀^∞ e^{Aᵀt} Q e^{At} dt` by adaptive quadrature.
///
/// The half-line is cut into chunks of length `h`; the chunk integral `J` is
/// computed once and propagated by `Φ = e^{Ah}` (term `k` is `Φᵏᵀ J Φᵏ`).
/// Stops when the geometric tail estimate falls below `tol`, or fails once
/// `horizon` is exceeded.
pub fn solve_ale_integral(p: &AleProblem, horizon: f64, tol: f64) -> Result<SymMatrix> {
    let abscissa = spectral_abscissa(&p.a)?;
    if abscissa >= -1e-8 {
        return Err(Error::NotHurwitz(abscissa));
    }
    let n = p.a.nrows();
    let h = (0.5 / p.a.norm().max(1e-3)).min(1.0 / -abscissa);
    let at = p.a.transpose();
    let integrand = |t: f64| {
        let e = (&p.a * t).exp();
        (&at * t).exp() * &*p.q * e
    };
    let chunk = quad::integrate(&integrand, 0.0, h, tol * 1e-3);
    let phi = (&p.a * h).exp();

    let mut total = DMatrix::zeros(n, n);
    let mut prop = DMatrix::identity(n, n);
    let mut prev_norm = f64::INFINITY;
    let mut t = 0.0;
    while t < horizon {
        let term = prop.transpose() * &chunk * &prop;
        let norm = term.norm();
        total += &term;
        t += h;
        prop = &prop * &phi;
        let prev_finite = prev_norm.is_finite();
        let ratio = norm / prev_norm;
        prev_norm = norm;
        if norm == 0.0 || (prev_finite && ratio < 1.0 && norm * ratio / (1.0 - ratio) < tol) {
            return SymMatrix::try_new(total, 1e-8);
        }
    }
    Err(Error::Quadrature { tol, horizon })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CareProblem {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub q: SymMatrix,
    pub r: SymMatrix,
}

impl CareProblem {
    /// Validates shapes, `R > 0` (Cholesky) and `Q ≥ 0` (eigenvalues ≥ −1e−10).
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, q: SymMatrix, r: SymMatrix) -> Result<Self> {
        let n = a.nrows();
        if !a.is_square() || b.nrows() != n || q.n() != n || r.n() != b.ncols() {
            return Err(Error::shape(format!(
                "CARE with A {:?}, B {:?}, Q {}x{}, R {}x{}",
                a.shape(),
                b.shape(),
                q.n(),
                q.n(),
                r.n(),
                r.n()
            )));
        }
        if !linalg::is_pd(&r) {
            return Err(Error::NotDefinite("R is not positive definite".into()));
        }
        if !linalg::is_psd(&q, -1e-10) {
            return Err(Error::NotDefinite("Q is not positive semidefinite".into()));
        }
        Ok(Self { a, b, q, r })
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn m(&self) -> usize {
        self.b.ncols()
    }

    /// `R⁻¹ Bᵀ P`.
    pub fn gain(&self, p: &DMatrix<f64>) -> DMatrix<f64> {
        let chol = self.r.clone().into_matrix().cholesky().expect("R > 0 checked at construction");
        chol.solve(&(self.b.transpose() * p))
    }

    pub fn residual(&self, p: &DMatrix<f64>) -> DMatrix<f64> {
        let k = self.gain(p);
        self.a.transpose() * p + p * &self.a - p * &self.b * k + &*self.q
    }
}

fn full_rank(m: &DMatrix<Complex64>) -> bool {
    let rows = m.nrows();
    let sv = m.singular_values();
    let smax = sv.iter().copied().fold(0.0, f64::max);
    sv.iter().filter(|&&s| s > 1e-10 * smax).count() == rows.min(m.ncols()) && smax > 0.0
}

/// PBH tests at every eigenvalue with nonnegative real part:
/// stabilizable iff `[A − λI, B]` has full row rank, detectable iff
/// `[A − λI; Q^{1/2}]` has full column rank.
pub fn check_stabilizable_detectable(c: &CareProblem) -> Result<(bool, bool)> {
    let n = c.n();
    let qh = linalg::psd_sqrt(&c.q);
    let to_c = |m: &DMatrix<f64>| m.map(|v| Complex64::new(v, 0.0));
    let (ac, bc, qc) = (to_c(&c.a), to_c(&c.b), to_c(&qh));
    let mut stab = true;
    let mut det = true;
    for lam in eigenvalues(&c.a)? {
        if lam.re < -HURWITZ_MARGIN {
            continue;
        }
        let shifted = &ac - DMatrix::<Complex64>::identity(n, n) * lam;
        let mut wide = DMatrix::zeros(n, n + c.m());
        wide.view_mut((0, 0), (n, n)).copy_from(&shifted);
        wide.view_mut((0, n), (n, c.m())).copy_from(&bc);
        stab &= full_rank(&wide);
        let mut tall = DMatrix::zeros(2 * n, n);
        tall.view_mut((0, 0), (n, n)).copy_from(&shifted);
        tall.view_mut((n, 0), (n, n)).copy_from(&qc);
        det &= full_rank(&tall);
    }
    Ok((stab, det))
}

#[derive(Clone, Debug)]
pub struct CareSolution {
    pub p: SymMatrix,
    pub k: DMatrix<f64>,
    pub residual: f64,
}

/// Matrix sign function by scaled Newton iteration.
fn matrix_sign(h: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let dim = h.nrows() as f64;
    let mut z = h.clone();
    let mut scale = true;
    for _ in 0..100 {
        let inv = z.clone().try_inverse().ok_or_else(|| {
            Error::Riccati("Hamiltonian has eigenvalues on the imaginary axis".into())
        })?;
        let c = if scale {
            let d = z.determinant().abs();
            if d > 0.0 && d.is_finite() {
                d.powf(-1.0 / dim)
            } else {
                1.0
            }
        } else {
            1.0
        };
        let next = (&z * c + inv / c) * 0.5;
        let change = (&next - &z).norm() / next.norm();
        z = next;
        if change < 1e-2 {
            scale = false;
        }
        if change < 1e-13 {
            return Ok(z);
        }
    }
    Err(Error::Riccati("sign iteration did not converge".into()))
}

/// Stabilizing CARE solution from the stable invariant subspace of the
/// Hamiltonian `[[A, −BR⁻¹Bᵀ], [−Q, −Aᵀ]]`, located with the matrix sign
/// function: `(sign(H) + I)` annihilates `[I; P]`.
pub fn solve_care_reference(c: &CareProblem) -> Result<CareSolution> {
    let (stab, det) = check_stabilizable_detectable(c)?;
    if !stab {
        return Err(Error::NotStabilizable);
    }
    if !det {
        return Err(Error::NotDetectable);
    }
    let n = c.n();
    let g = &c.b * c.gain(&DMatrix::identity(n, n));
    let g = (&g + g.transpose()) * 0.5;
    let mut ham = DMatrix::zeros(2 * n, 2 * n);
    ham.view_mut((0, 0), (n, n)).copy_from(&c.a);
    ham.view_mut((0, n), (n, n)).copy_from(&(-&g));
    ham.view_mut((n, 0), (n, n)).copy_from(&(-&*c.q));
    ham.view_mut((n, n), (n, n)).copy_from(&(-c.a.transpose()));

    let w = matrix_sign(&ham)?;
    let id = DMatrix::<f64>::identity(n, n);
    let mut lhs = DMatrix::zeros(2 * n, n);
    lhs.view_mut((0, 0), (n, n)).copy_from(&w.view((0, n), (n, n)));
    lhs.view_mut((n, 0), (n, n)).copy_from(&(w.view((n, n), (n, n)) + &id));
    let mut rhs = DMatrix::zeros(2 * n, n);
    rhs.view_mut((0, 0), (n, n)).copy_from(&(-(w.view((0, 0), (n, n)) + &id)));
    rhs.view_mut((n, 0), (n, n)).copy_from(&(-w.view((n, 0), (n, n))));

    let sv = linalg::singular_values(&lhs);
    if sv.last().copied().unwrap_or(0.0) <= 1e-12 * sv[0] {
        return Err(Error::Riccati("stable subspace is not a graph over the state coordinates".into()));
    }
    let p = lhs
        .svd(true, true)
        .solve(&rhs, 0.0)
        .map_err(|e| Error::Riccati(e.to_string()))?;
    let p = crate::skron::sym_project(&p)?;
    let k = c.gain(&p);
    let res = c.residual(&p).norm();
    let scale = c.q.norm().max((c.a.transpose() * &*p).norm()).max(1.0);
    if res > 1e-8 * scale {
        return Err(Error::Riccati(format!("residual {res:e} too large")));
    }
    if !is_hurwitz(&(&c.a - &c.b * &k))? {
        return Err(Error::Riccati("closed loop is not Hurwitz".into()));
    }
    Ok(CareSolution { p, k, residual: res })
}
