//! Dense helpers shared by every module: spectra, definiteness tests,
//! multiset comparison and the plain-text matrix literal format.

use nalgebra::{DMatrix, DVector, Schur};
use num_complex::Complex64;

use crate::error::{Error, Result};

const SCHUR_MAX_ITER: usize = 100_000;

/// Eigenvalues of a real square matrix via the real Schur form.
pub fn eigenvalues(a: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    if a.nrows() != a.ncols() {
        return Err(Error::shape("eigenvalues need a square matrix"));
    }
    if a.nrows() == 0 {
        return Ok(Vec::new());
    }
    let schur = Schur::try_new(a.clone(), f64::EPSILON, SCHUR_MAX_ITER).ok_or(Error::EigenFailure)?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}

/// Largest real part over the spectrum.
pub fn spectral_abscissa(a: &DMatrix<f64>) -> Result<f64> {
    Ok(eigenvalues(a)?
        .iter()
        .map(|l| l.re)
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Ascending eigenvalues of the symmetric part of `a`.
pub fn sym_eigenvalues(a: &DMatrix<f64>) -> Vec<f64> {
    let s = (a + a.transpose()) * 0.5;
    let mut ev: Vec<f64> = s.symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

pub fn min_sym_eigenvalue(a: &DMatrix<f64>) -> f64 {
    sym_eigenvalues(a).first().copied().unwrap_or(0.0)
}

/// PSD up to a floor on the smallest eigenvalue (e.g. `-1e-8`).
pub fn is_psd(a: &DMatrix<f64>, floor: f64) -> bool {
    min_sym_eigenvalue(a) >= floor
}

pub fn is_pd(a: &DMatrix<f64>) -> bool {
    a.nrows() == a.ncols() && a.clone().cholesky().is_some()
}

pub fn max_asymmetry(a: &DMatrix<f64>) -> f64 {
    (a - a.transpose()).amax()
}

/// Singular values in descending order.
pub fn singular_values(a: &DMatrix<f64>) -> Vec<f64> {
    let mut sv: Vec<f64> = a.singular_values().iter().copied().collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    sv
}

/// 2-norm condition number `σ_max / σ_min` (infinite when rank deficient).
pub fn condition_number(a: &DMatrix<f64>) -> f64 {
    let sv = singular_values(a);
    match (sv.first(), sv.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        _ => f64::INFINITY,
    }
}

/// Symmetric PSD square root (negative eigenvalues clamped to zero).
pub fn psd_sqrt(a: &DMatrix<f64>) -> DMatrix<f64> {
    let s = (a + a.transpose()) * 0.5;
    let eig = s.symmetric_eigen();
    let d = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&d) * eig.eigenvectors.transpose()
}

pub fn block_diag(blocks: &[DMatrix<f64>]) -> DMatrix<f64> {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.view_mut((r, c), b.shape()).copy_from(b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}

pub fn frobenius_inner(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.component_mul(b).sum()
}

/// Compare two eigenvalue multisets without assuming any ordering.
///
/// Both lists are sorted lexicographically by (re, im); each expected value is
/// then matched greedily to the nearest unused actual value. Returns the
/// largest matching distance, or `None` when lengths differ.
pub fn multiset_distance(expected: &[Complex64], actual: &[Complex64]) -> Option<f64> {
    if expected.len() != actual.len() {
        return None;
    }
    let key = |a: &Complex64, b: &Complex64| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im));
    let mut exp = expected.to_vec();
    exp.sort_by(key);
    let mut act = actual.to_vec();
    act.sort_by(key);
    let mut used = vec![false; act.len()];
    let mut worst: f64 = 0.0;
    for e in &exp {
        let (idx, dist) = act
            .iter()
            .enumerate()
            .filter(|(i, _)| !used[*i])
            .map(|(i, a)| (i, (a - e).norm()))
            .min_by(|x, y| x.1.total_cmp(&y.1))?;
        used[idx] = true;
        worst = worst.max(dist);
    }
    Some(worst)
}

/// True when the multisets agree to `rel_tol * max(1, max |λ|)`.
pub fn multisets_match(expected: &[Complex64], actual: &[Complex64], rel_tol: f64) -> bool {
    let scale = expected
        .iter()
        .chain(actual)
        .map(|z| z.norm())
        .fold(1.0, f64::max);
    matches!(multiset_distance(expected, actual), Some(d) if d <= rel_tol * scale)
}

/// Parse the repo-wide matrix literal: rows separated by `;` or newlines,
/// entries by whitespace or commas. `"1 2; 3 4"` is a 2×2 matrix.
pub fn parse_matrix(text: &str) -> Result<DMatrix<f64>> {
    let rows: Vec<Vec<f64>> = text
        .split([';', '\n'])
        .map(str::trim)
        .filter(|r| !r.is_empty())
        .map(|r| {
            r.split(|c: char| c.is_whitespace() || c == ',')
                .filter(|t| !t.is_empty())
                .map(|t| {
                    t.parse::<f64>()
                        .map_err(|e| Error::Config(format!("bad matrix entry {t:?}: {e}")))
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Config("ragged matrix literal".into()));
    }
    Ok(DMatrix::from_row_iterator(rows.len(), ncols, rows.into_iter().flatten()))
}

pub fn format_matrix(m: &DMatrix<f64>) -> String {
    m.row_iter()
        .map(|r| r.iter().map(|v| format!("{v:e}")).collect::<Vec<_>>().join(" "))
        .collect::<Vec<_>>()
        .join("; ")
}

pub fn dvec(values: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(values)
}

pub fn diag(values: &[f64]) -> DMatrix<f64> {
    DMatrix::from_diagonal(&dvec(values))
}
