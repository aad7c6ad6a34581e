use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sinusoid {
    pub amplitude: f64,
    /// rad/s
    pub frequency: f64,
    /// rad
    #[serde(default)]
    pub phase: f64,
}

impl Sinusoid {
    pub fn cos(amplitude: f64, frequency: f64) -> Self {
        Self { amplitude, frequency, phase: 0.0 }
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.amplitude * (self.frequency * t + self.phase).cos()
    }
}

/// Additive exploration input: one sum of sinusoids per control channel.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ProbingSignal {
    pub channels: Vec<Vec<Sinusoid>>,
}

impl ProbingSignal {
    pub fn new(channels: Vec<Vec<Sinusoid>>) -> Result<Self> {
        for s in channels.iter().flatten() {
            if !(s.amplitude.is_finite() && s.frequency.is_finite() && s.phase.is_finite()) {
                return Err(Error::Config(format!("non-finite probing term {s:?}")));
            }
        }
        Ok(Self { channels })
    }

    pub fn zero(m: usize) -> Self {
        Self { channels: vec![Vec::new(); m] }
    }

    pub fn m(&self) -> usize {
        self.channels.len()
    }

    pub fn eval(&self, t: f64) -> DVector<f64> {
        DVector::from_iterator(self.m(), self.channels.iter().map(|ch| ch.iter().map(|s| s.eval(t)).sum()))
    }

    /// Upper bound `Σ|amplitude|` on channel `i`.
    pub fn bound(&self, i: usize) -> f64 {
        self.channels[i].iter().map(|s| s.amplitude.abs()).sum()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let channels = self
            .channels
            .iter()
            .map(|ch| ch.iter().map(|s| Sinusoid { amplitude: s.amplitude * factor, ..*s }).collect())
            .collect();
        Self { channels }
    }
}
