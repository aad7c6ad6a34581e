//! Adaptive Gauss–Kronrod (7/15) quadrature for matrix-valued integrands.

use nalgebra::DMatrix;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
// Gauss weights for the odd-indexed Kronrod nodes 1, 3, 5, 7
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> DMatrix<f64>>(f: &F, a: f64, b: f64) -> (DMatrix<f64>, f64) {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let center = f(mid);
    let mut kron = &center * WGK[7];
    let mut gauss = &center * WG[3];
    for k in 0..7 {
        let dx = half * XGK[k];
        let pair = f(mid - dx) + f(mid + dx);
        kron += &pair * WGK[k];
        if k % 2 == 1 {
            gauss += &pair * WG[k / 2];
        }
    }
    kron *= half;
    gauss *= half;
    let err = (&kron - &gauss).norm();
    (kron, err)
}

/// Integrates `f` over `[a, b]` until the Kronrod–Gauss difference on every
/// subinterval is below its length-proportional share of `tol`.
pub fn integrate<F: Fn(f64) -> DMatrix<f64>>(f: &F, a: f64, b: f64, tol: f64) -> DMatrix<f64> {
    fn recurse<F: Fn(f64) -> DMatrix<f64>>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> DMatrix<f64> {
        let (val, err) = gk15(f, a, b);
        if err <= tol || depth == 0 {
            return val;
        }
        let mid = 0.5 * (a + b);
        recurse(f, a, mid, 0.5 * tol, depth - 1) + recurse(f, mid, b, 0.5 * tol, depth - 1)
    }
    recurse(f, a, b, tol, 30)
}
