use nalgebra::{DMatrix, DVector};

use super::ode::{integrate, OdeOptions};
use super::DecentralizedPlant;
use crate::error::{Error, Result};
use crate::skron::skron;

/// `M (A ⊗ₛ B)ᵀ`.
pub fn right_skron(m: &DMatrix<f64>, a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let t = skron(a, b)?;
    if m.ncols() != t.ncols() {
        return Err(Error::shape(format!("{} columns against a {:?} symmetric product", m.ncols(), t.shape())));
    }
    Ok(m * t.transpose())
}

/// `δ_{Sx,Sy} = δ_{x,y} (S ⊗ₛ S)ᵀ`.
pub fn transform_delta(delta: &DMatrix<f64>, s: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    right_skron(delta, s, s)
}

/// `I_{Sx,Sy} = I_{x,y} (S ⊗ₛ S)ᵀ`.
pub fn transform_integral(integral: &DMatrix<f64>, s: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    right_skron(integral, s, s)
}

/// `I_{Ax,Bx} = I_{x,x} (A ⊗ₛ B)ᵀ`.
pub fn transform_integral_cross(ixx: &DMatrix<f64>, a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    right_skron(ixx, a, b)
}

/// `∫₀^∞ (xᵀQx + uᵀRu) dτ` under `u = −Kx` on the full plant, integrated in
/// unit chunks until the geometric tail estimate drops below `tol` or `horizon`
/// is reached.
pub fn evaluate_lqr_cost(plant: &DecentralizedPlant, k: &DMatrix<f64>, x0: &[f64], horizon: f64, tol: f64) -> Result<f64> {
    let n = plant.n();
    if k.shape() != (plant.m(), n) || x0.len() != n {
        return Err(Error::shape("gain or initial state does not match the plant"));
    }
    let dynamics = plant.dynamics().clone();
    let (q, r) = (plant.q.as_matrix().clone(), plant.r.as_matrix().clone());
    let rhs = |_t: f64, z: &DVector<f64>| {
        let x = z.rows(0, n).into_owned();
        let u = -(k * &x);
        let dx = dynamics.drift(&x) + dynamics.input_map(&x) * &u;
        let mut dz = DVector::zeros(n + 1);
        dz.rows_mut(0, n).copy_from(&dx);
        dz[n] = x.dot(&(&q * &x)) + u.dot(&(&r * &u));
        dz
    };
    let mut z = DVector::zeros(n + 1);
    z.rows_mut(0, n).copy_from_slice(x0);
    if z.amax() == 0.0 {
        return Ok(0.0);
    }
    let opts = OdeOptions::default();
    let mut t = 0.0;
    let mut prev_inc = f64::INFINITY;
    while t < horizon {
        let next = (t + 1.0).min(horizon);
        let before = z[n];
        z = integrate(rhs, t, z, &[next], n, &opts)?.pop().expect("one output");
        t = next;
        let inc = z[n] - before;
        let ratio = inc / prev_inc;
        if prev_inc.is_finite() && ratio < 1.0 && inc * ratio / (1.0 - ratio) < tol {
            return Ok(z[n]);
        }
        prev_inc = inc;
    }
    Err(Error::Quadrature { tol, horizon })
}
