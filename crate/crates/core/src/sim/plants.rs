//! Stock plants: the diagonal two-state benchmark and a weakly coupled
//! nonlinear two-loop system.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{DecentralizedPlant, Dynamics, LoopPartition, ProbingSignal, Sinusoid};
use crate::linalg::diag;
use crate::skron::SymMatrix;

/// `A = diag(−1, −0.1)`, `B = I`, `Q = I`, `R = diag(1, 10)`, treated as one loop.
pub fn lin2d() -> DecentralizedPlant {
    DecentralizedPlant::linear(
        diag(&[-1.0, -0.1]),
        DMatrix::identity(2, 2),
        SymMatrix::identity(2),
        SymMatrix::from_diagonal(&[1.0, 10.0]),
        LoopPartition::single(2, 2).expect("nonzero dims"),
    )
    .expect("lin2d is well formed")
}

/// `d₁ = cos t`, `d₂ = 0.1 cos(0.1 t)`.
pub fn lin2d_probing() -> ProbingSignal {
    ProbingSignal { channels: vec![vec![Sinusoid::cos(1.0, 1.0)], vec![Sinusoid::cos(0.1, 0.1)]] }
}

/// Loop 1 is the scalar `x₁`; loop 2 is a fast state `x₂` feeding a slow
/// state `x₃` through a gain of 0.1, so `x₃` runs about ten times smaller:
///
/// ```text
/// ẋ₁ = −2x₁ − 0.5c x₁³ + ε x₁x₂ + u₁
/// ẋ₂ = −x₂ − 0.2c x₂³ + 0.05ε x₁² + u₂
/// ẋ₃ = 0.1x₂ − 0.1x₃
/// ```
///
/// with cubic strength `c` and coupling `ε`. Neither term enters the
/// linearization.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Synthetic2Loop {
    pub cubic: f64,
    pub coupling: f64,
}

impl Synthetic2Loop {
    pub fn a() -> DMatrix<f64> {
        DMatrix::from_row_slice(3, 3, &[-2.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.1, -0.1])
    }

    pub fn b() -> DMatrix<f64> {
        DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0])
    }

    pub fn plant(self) -> DecentralizedPlant {
        DecentralizedPlant::new(
            Arc::new(self),
            Self::a(),
            Self::b(),
            SymMatrix::identity(3),
            SymMatrix::identity(2),
            LoopPartition::new(vec![1, 2], vec![1, 1]).expect("nonzero dims"),
        )
        .expect("synthetic plant is well formed")
    }

    /// Two tones per channel, scaled by `amplitude`.
    pub fn probing(amplitude: f64) -> ProbingSignal {
        ProbingSignal {
            channels: vec![
                vec![Sinusoid::cos(amplitude, 2.0), Sinusoid::cos(0.5 * amplitude, 5.0)],
                vec![Sinusoid::cos(amplitude, 1.0), Sinusoid { amplitude: 0.5 * amplitude, frequency: 0.3, phase: 1.0 }],
            ],
        }
    }
}

impl Dynamics for Synthetic2Loop {
    fn n(&self) -> usize {
        3
    }
    fn m(&self) -> usize {
        2
    }
    fn drift(&self, x: &DVector<f64>) -> DVector<f64> {
        let (x1, x2, x3) = (x[0], x[1], x[2]);
        let (c, e) = (self.cubic, self.coupling);
        DVector::from_column_slice(&[
            -2.0 * x1 - 0.5 * c * x1.powi(3) + e * x1 * x2,
            -x2 - 0.2 * c * x2.powi(3) + 0.05 * e * x1 * x1,
            0.1 * x2 - 0.1 * x3,
        ])
    }
    fn input_map(&self, _x: &DVector<f64>) -> DMatrix<f64> {
        Self::b()
    }
}
