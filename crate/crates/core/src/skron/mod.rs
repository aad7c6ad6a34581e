//! Symmetric Kronecker product and sum on rectangular matrices.
//!
//! Every vectorization in the crate goes through [`IndexScheme`], which
//! enumerates the upper triangle row by row:
//! `(0,0), (0,1), …, (0,n-1), (1,1), …, (n-1,n-1)`.
//! Indices are zero-based throughout.

pub mod checks;
pub mod suite;

use std::f64::consts::FRAC_1_SQRT_2;
use std::ops::Deref;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `n(n+1)/2`, the dimension of the space of symmetric `n×n` matrices.
pub const fn nbar(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Inverse of [`nbar`]; `None` when `len` is not triangular.
pub fn triangular_root(len: usize) -> Option<usize> {
    let n = (((8 * len + 1) as f64).sqrt() as usize).saturating_sub(1) / 2;
    (n..=n + 1).find(|&k| nbar(k) == len)
}

/// Sum, row and column indexing maps for the symmetric basis of dimension `n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexScheme {
    n: usize,
    sums: Vec<usize>,
    pairs: Vec<(usize, usize)>,
}

impl IndexScheme {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::ZeroDimension);
        }
        let sums = (0..=n).map(|p| (0..p).map(|i| n - i).sum()).collect();
        let pairs = (0..n).flat_map(|r| (r..n).map(move |c| (r, c))).collect();
        Ok(Self { n, sums, pairs })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nbar(&self) -> usize {
        self.pairs.len()
    }

    /// Number of basis elements contributed by the first `p` rows.
    pub fn s(&self, p: usize) -> usize {
        self.sums[p]
    }

    /// Row of the `j`-th basis element.
    pub fn row(&self, j: usize) -> usize {
        self.pairs[j].0
    }

    /// Column of the `j`-th basis element (always `>= row(j)`).
    pub fn col(&self, j: usize) -> usize {
        self.pairs[j].1
    }

    pub fn pair(&self, j: usize) -> (usize, usize) {
        self.pairs[j]
    }

    /// Position of the entry `(r, c)` (order irrelevant) in the enumeration.
    pub fn index_of(&self, r: usize, c: usize) -> usize {
        let (r, c) = if r <= c { (r, c) } else { (c, r) };
        self.sums[r] + (c - r)
    }

    pub fn pairs(&self) -> impl ExactSizeIterator<Item = (usize, usize)> + '_ {
        self.pairs.iter().copied()
    }
}

/// Orthonormal basis of the symmetric matrices and the matrix `W` whose rows
/// are the vectorized basis elements.
#[derive(Clone, Debug)]
pub struct SymBasis {
    pub scheme: IndexScheme,
    pub elements: Vec<DMatrix<f64>>,
    pub w: DMatrix<f64>,
}

impl SymBasis {
    pub fn new(n: usize) -> Result<Self> {
        let scheme = IndexScheme::new(n)?;
        let elements: Vec<DMatrix<f64>> = scheme
            .pairs()
            .map(|(r, c)| {
                let mut e = DMatrix::zeros(n, n);
                if r == c {
                    e[(r, r)] = 1.0;
                } else {
                    e[(r, c)] = FRAC_1_SQRT_2;
                    e[(c, r)] = FRAC_1_SQRT_2;
                }
                e
            })
            .collect();
        let mut w = DMatrix::zeros(elements.len(), n * n);
        for (j, e) in elements.iter().enumerate() {
            // elements are symmetric, so row- and column-major vec agree
            for (k, v) in e.iter().enumerate() {
                w[(j, k)] = *v;
            }
        }
        Ok(Self { scheme, elements, w })
    }
}

/// A real symmetric matrix. Construction mirrors one triangle, so the
/// stored entries are exactly symmetric.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DMatrix<f64>", into = "DMatrix<f64>")]
pub struct SymMatrix(DMatrix<f64>);

impl SymMatrix {
    /// Builds from the upper triangle of `m`, ignoring the strict lower part.
    pub fn from_upper(m: &DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::shape(format!("{}x{} is not square", m.nrows(), m.ncols())));
        }
        let mut out = m.clone();
        for c in 0..m.ncols() {
            for r in c + 1..m.nrows() {
                out[(r, c)] = m[(c, r)];
            }
        }
        Ok(Self(out))
    }

    /// Accepts `m` when its asymmetry is within `tol * max(1, max|m|)` and
    /// stores its symmetric part.
    pub fn try_new(m: DMatrix<f64>, tol: f64) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::shape(format!("{}x{} is not square", m.nrows(), m.ncols())));
        }
        let asym = crate::linalg::max_asymmetry(&m);
        if asym > tol * m.amax().max(1.0) {
            return Err(Error::NotSymmetric(asym));
        }
        Ok(sym_project(&m).expect("square checked"))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn zeros(n: usize) -> Self {
        Self(DMatrix::zeros(n, n))
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        Self(crate::linalg::diag(d))
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    /// Congruence `Tᵀ · self · T`, which stays symmetric.
    pub fn congruence(&self, t: &DMatrix<f64>) -> Self {
        Self::from_upper(&(t.transpose() * &self.0 * t)).expect("square")
    }
}

impl Deref for SymMatrix {
    type Target = DMatrix<f64>;
    fn deref(&self) -> &DMatrix<f64> {
        &self.0
    }
}

impl TryFrom<DMatrix<f64>> for SymMatrix {
    type Error = Error;
    fn try_from(m: DMatrix<f64>) -> Result<Self> {
        Self::try_new(m, 0.0)
    }
}

impl From<SymMatrix> for DMatrix<f64> {
    fn from(s: SymMatrix) -> Self {
        s.0
    }
}

/// Coordinates of a symmetric matrix in the orthonormal basis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvecVector(DVector<f64>);

impl SvecVector {
    pub fn new(values: DVector<f64>) -> Self {
        Self(values)
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn into_values(self) -> DVector<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

fn offdiag_scale(r: usize, c: usize) -> f64 {
    if r == c {
        1.0
    } else {
        std::f64::consts::SQRT_2
    }
}

/// Symmetric vectorization; off-diagonal entries carry a factor `√2`.
pub fn svec(p: &SymMatrix) -> SvecVector {
    SvecVector(svec_upper(p))
}

/// [`svec`] applied to the upper triangle of an arbitrary square matrix.
pub(crate) fn svec_upper(p: &DMatrix<f64>) -> DVector<f64> {
    let n = p.nrows();
    let scheme = IndexScheme::new(n.max(1)).expect("n >= 1");
    if n == 0 {
        return DVector::zeros(0);
    }
    DVector::from_iterator(scheme.nbar(), scheme.pairs().map(|(r, c)| p[(r, c)] * offdiag_scale(r, c)))
}

/// Inverse of [`svec`].
pub fn smat(v: &SvecVector) -> Result<SymMatrix> {
    let n = triangular_root(v.len()).filter(|&n| n > 0).ok_or(Error::NotTriangular(v.len()))?;
    let scheme = IndexScheme::new(n)?;
    let mut m = DMatrix::zeros(n, n);
    for (j, (r, c)) in scheme.pairs().enumerate() {
        let x = v.0[j] / offdiag_scale(r, c);
        m[(r, c)] = x;
        m[(c, r)] = x;
    }
    Ok(SymMatrix(m))
}

/// Orthogonal projection `(A + Aᵀ)/2` onto the symmetric matrices.
pub fn sym_project(a: &DMatrix<f64>) -> Result<SymMatrix> {
    if !a.is_square() {
        return Err(Error::shape(format!("{}x{} is not square", a.nrows(), a.ncols())));
    }
    let mut out = (a + a.transpose()) * 0.5;
    // exact symmetry regardless of rounding order
    for c in 0..out.ncols() {
        for r in c + 1..out.nrows() {
            out[(r, c)] = out[(c, r)];
        }
    }
    Ok(SymMatrix(out))
}

/// Product of the two basis normalizations, kept exact in each case.
fn pair_weight(row_diag: bool, col_diag: bool) -> f64 {
    match (row_diag, col_diag) {
        (true, true) => 0.25,
        (false, false) => 0.5,
        _ => 0.5 * FRAC_1_SQRT_2,
    }
}

/// Symmetric Kronecker product of two `m×n` matrices, an `m̄×n̄` matrix.
///
/// Computed entrywise from the basis representation, never forming `A ⊗ B`:
/// `(A ⊗ₛ B)_{ij} = α_i β_j (a_{rq} b_{cp} + a_{rp} b_{cq} + a_{cq} b_{rp} + a_{cp} b_{rq})`
/// with `(r,c)` the pair of row `i`, `(p,q)` the pair of column `j`.
pub fn skron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if a.shape() != b.shape() {
        return Err(Error::shape(format!("skron of {:?} and {:?}", a.shape(), b.shape())));
    }
    let rows = IndexScheme::new(a.nrows())?;
    let cols = IndexScheme::new(a.ncols())?;
    let mut out = DMatrix::zeros(rows.nbar(), cols.nbar());
    for (j, (p, q)) in cols.pairs().enumerate() {
        for (i, (r, c)) in rows.pairs().enumerate() {
            out[(i, j)] = pair_weight(r == c, p == q)
                * (a[(r, q)] * b[(c, p)] + a[(r, p)] * b[(c, q)] + a[(c, q)] * b[(r, p)] + a[(c, p)] * b[(r, q)]);
        }
    }
    Ok(out)
}

/// One entry of `A ⊗ₛ B` by the four-case indexing identity.
///
/// Kept as a separate code path from [`skron`] so each can check the other.
pub fn skron_entry(a: &DMatrix<f64>, b: &DMatrix<f64>, i: usize, j: usize) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::shape(format!("skron of {:?} and {:?}", a.shape(), b.shape())));
    }
    let rows = IndexScheme::new(a.nrows())?;
    let cols = IndexScheme::new(a.ncols())?;
    if i >= rows.nbar() {
        return Err(Error::IndexOutOfRange { index: i, bound: rows.nbar() });
    }
    if j >= cols.nbar() {
        return Err(Error::IndexOutOfRange { index: j, bound: cols.nbar() });
    }
    let (ri, ci) = rows.pair(i);
    let (rj, cj) = cols.pair(j);
    let h = FRAC_1_SQRT_2;
    let v = match (ri == ci, rj == cj) {
        (true, true) => a[(ri, rj)] * b[(ri, rj)],
        (true, false) => h * (a[(ri, rj)] * b[(ri, cj)] + a[(ri, cj)] * b[(ri, rj)]),
        (false, true) => h * (a[(ri, rj)] * b[(ci, rj)] + a[(ci, rj)] * b[(ri, rj)]),
        (false, false) => {
            0.5 * (a[(ri, rj)] * b[(ci, cj)]
                + a[(ri, cj)] * b[(ci, rj)]
                + a[(ci, rj)] * b[(ri, cj)]
                + a[(ci, cj)] * b[(ri, rj)])
        }
    };
    Ok(v)
}

/// Symmetric Kronecker sum `A ⊗ₛ I + I ⊗ₛ B = (A + B) ⊗ₛ I`.
pub fn skron_sum(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !a.is_square() || a.shape() != b.shape() {
        return Err(Error::shape(format!("skron_sum of {:?} and {:?}", a.shape(), b.shape())));
    }
    skron(&(a + b), &DMatrix::identity(a.nrows(), a.nrows()))
}

/// `x ⊗ₛ y` for column vectors, i.e. `svec(π(x yᵀ))`.
pub fn skron_vec(x: &[f64], y: &[f64]) -> DVector<f64> {
    let mut out = DVector::zeros(nbar(x.len()));
    skron_vec_into(x, y, out.as_mut_slice());
    out
}

/// Allocation-free [`skron_vec`]; `out` must have length `nbar(x.len())`.
pub fn skron_vec_into(x: &[f64], y: &[f64], out: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    let n = x.len();
    let mut k = 0;
    for r in 0..n {
        out[k] = x[r] * y[r];
        k += 1;
        for c in r + 1..n {
            out[k] = (x[r] * y[c] + x[c] * y[r]) * FRAC_1_SQRT_2;
            k += 1;
        }
    }
}
