use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::ode::{integrate, OdeOptions};
use super::{DecentralizedPlant, ProbingSignal};
use crate::error::{Error, Result};
use crate::linalg::spectral_abscissa;
use crate::lyap::HURWITZ_MARGIN;
use crate::skron::{nbar, skron_vec, skron_vec_into};

/// Sample instants, shared by every loop or given per loop.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleSpec {
    /// `t_k = t0 + k·ts`, `k = 0..=l`.
    Uniform { t0: f64, ts: f64, l: usize },
    Shared(Vec<f64>),
    PerLoop(Vec<Vec<f64>>),
}

impl SampleSpec {
    pub fn uniform(ts: f64, l: usize) -> Self {
        Self::Uniform { t0: 0.0, ts, l }
    }

    fn resolve(&self, loops: usize) -> Result<Vec<Vec<f64>>> {
        let per_loop = match self {
            Self::Uniform { t0, ts, l } => {
                if !(*ts > 0.0 && ts.is_finite() && t0.is_finite()) {
                    return Err(Error::Config(format!("sample period {ts} must be positive")));
                }
                vec![(0..=*l).map(|k| t0 + k as f64 * ts).collect(); loops]
            }
            Self::Shared(t) => vec![t.clone(); loops],
            Self::PerLoop(t) => {
                if t.len() != loops {
                    return Err(Error::Config(format!("{} sample schedules for {loops} loops", t.len())));
                }
                t.clone()
            }
        };
        for times in &per_loop {
            if times.len() < 2 {
                return Err(Error::TooFewSamples { got: times.len().saturating_sub(1), needed: 1 });
            }
            if times.windows(2).any(|w| !(w[1] > w[0])) || times[0] < 0.0 {
                return Err(Error::Config("sample instants must be nonnegative and strictly increasing".into()));
            }
        }
        Ok(per_loop)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntegrandPair {
    /// `x_j ⊗ₛ x_j`
    XX,
    /// `x_j ⊗ₛ g_j(x)u`
    XGu,
    /// `x_j ⊗ₛ w_j`, `w_j = f_j(x) − A_jj x_j`
    XW,
}

/// Samples of one loop: instants `t_0..t_l`, states `x_j(t_k)`, and running
/// integrals from time 0 of each integrand family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoopData {
    pub loop_index: usize,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub acc_xx: Vec<Vec<f64>>,
    pub acc_xgu: Vec<Vec<f64>>,
    pub acc_xw: Vec<Vec<f64>>,
}

impl LoopData {
    pub fn samples(&self) -> usize {
        self.times.len() - 1
    }

    pub fn n(&self) -> usize {
        self.states.first().map_or(0, Vec::len)
    }

    fn accumulator(&self, pair: IntegrandPair) -> &[Vec<f64>] {
        match pair {
            IntegrandPair::XX => &self.acc_xx,
            IntegrandPair::XGu => &self.acc_xgu,
            IntegrandPair::XW => &self.acc_xw,
        }
    }
}

/// Immutable record of one closed-loop run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryDataset {
    pub loops: Vec<LoopData>,
    pub k0: DMatrix<f64>,
    pub probing: ProbingSignal,
    pub x0: Vec<f64>,
    pub horizon: f64,
}

impl TrajectoryDataset {
    pub fn loop_data(&self, j: usize) -> Result<&LoopData> {
        self.loops.get(j).ok_or(Error::IndexOutOfRange { index: j, bound: self.loops.len() })
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Serde(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Serde(e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|source| Error::Io { path: path.to_path_buf(), source })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        Self::from_json(&text)
    }
}

/// Integrates `ẋ = f(x) + g(x)u`, `u = −K0x + d(t)`, from `x(0) = x0`, with
/// every loop's three integrand families appended to the ODE state.
pub fn simulate_closed_loop(
    plant: &DecentralizedPlant,
    k0: &DMatrix<f64>,
    probing: &ProbingSignal,
    x0: &[f64],
    horizon: f64,
    samples: &SampleSpec,
    opts: &OdeOptions,
) -> Result<TrajectoryDataset> {
    let (n, m) = (plant.n(), plant.m());
    if k0.shape() != (m, n) {
        return Err(Error::shape(format!("K0 is {:?}, expected {m}x{n}", k0.shape())));
    }
    if probing.m() != m {
        return Err(Error::shape(format!("probing has {} channels for {m} inputs", probing.m())));
    }
    if x0.len() != n {
        return Err(Error::shape(format!("x0 has length {}, expected {n}", x0.len())));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::Config(format!("horizon {horizon} must be positive")));
    }
    let abscissa = spectral_abscissa(&(&plant.a - &plant.b * k0))?;
    if abscissa >= -HURWITZ_MARGIN {
        return Err(Error::NotHurwitz(abscissa));
    }
    let schedules = samples.resolve(plant.loops())?;
    if schedules.iter().flatten().any(|&t| t > horizon) {
        return Err(Error::Config(format!("sample instants exceed the horizon {horizon}")));
    }

    let part = &plant.partition;
    let nbars: Vec<usize> = part.state_dims.iter().map(|&d| nbar(d)).collect();
    let offsets: Vec<usize> = nbars
        .iter()
        .scan(n, |off, &nb| {
            let here = *off;
            *off += 3 * nb;
            Some(here)
        })
        .collect();
    let dim = n + 3 * nbars.iter().sum::<usize>();
    let a_blocks: Vec<DMatrix<f64>> = (0..plant.loops()).map(|j| plant.a_block(j)).collect();
    let dynamics = plant.dynamics().clone();

    let rhs = |t: f64, z: &DVector<f64>| {
        let x = z.rows(0, n).into_owned();
        let u = -(k0 * &x) + probing.eval(t);
        let f = dynamics.drift(&x);
        let gu = dynamics.input_map(&x) * u;
        let mut dz = DVector::zeros(dim);
        dz.rows_mut(0, n).copy_from(&(&f + &gu));
        for j in 0..part.loops() {
            let rows = part.states(j);
            let xj = x.rows(rows.start, rows.len());
            let w = f.rows(rows.start, rows.len()) - &a_blocks[j] * xj;
            let (off, nb) = (offsets[j], nbars[j]);
            let xs = xj.as_slice();
            skron_vec_into(xs, xs, &mut dz.as_mut_slice()[off..off + nb]);
            skron_vec_into(xs, &gu.as_slice()[rows.clone()], &mut dz.as_mut_slice()[off + nb..off + 2 * nb]);
            skron_vec_into(xs, w.as_slice(), &mut dz.as_mut_slice()[off + 2 * nb..off + 3 * nb]);
        }
        dz
    };

    let mut union: Vec<f64> = schedules.iter().flatten().copied().collect();
    union.sort_by(f64::total_cmp);
    union.dedup();
    let mut z0 = DVector::zeros(dim);
    z0.rows_mut(0, n).copy_from_slice(x0);
    let states = integrate(rhs, 0.0, z0, &union, n, opts)?;
    let at = |t: f64| &states[union.binary_search_by(|u| u.total_cmp(&t)).expect("instant in union")];

    let loops = schedules
        .into_iter()
        .enumerate()
        .map(|(j, times)| {
            let rows = part.states(j);
            let (off, nb) = (offsets[j], nbars[j]);
            let pick = |start: usize, len: usize| -> Vec<Vec<f64>> {
                times.iter().map(|&t| at(t).as_slice()[start..start + len].to_vec()).collect()
            };
            LoopData {
                loop_index: j,
                states: pick(rows.start, rows.len()),
                acc_xx: pick(off, nb),
                acc_xgu: pick(off + nb, nb),
                acc_xw: pick(off + 2 * nb, nb),
                times,
            }
        })
        .collect();
    Ok(TrajectoryDataset { loops, k0: k0.clone(), probing: probing.clone(), x0: x0.to_vec(), horizon })
}

/// Row `k`: `(x(t_k) + x(t_{k−1})) ⊗ₛ (x(t_k) − x(t_{k−1}))`.
pub fn delta_matrix(ds: &TrajectoryDataset, j: usize) -> Result<DMatrix<f64>> {
    let data = ds.loop_data(j)?;
    let (l, nj) = (data.samples(), data.n());
    let mut out = DMatrix::zeros(l, nbar(nj));
    for k in 1..=l {
        let (cur, prev) = (&data.states[k], &data.states[k - 1]);
        let sum: Vec<f64> = cur.iter().zip(prev).map(|(a, b)| a + b).collect();
        let diff: Vec<f64> = cur.iter().zip(prev).map(|(a, b)| a - b).collect();
        out.set_row(k - 1, &skron_vec(&sum, &diff).transpose());
    }
    Ok(out)
}

/// Row `k`: accumulator difference over `[t_{k−1}, t_k]`.
pub fn integral_matrix(ds: &TrajectoryDataset, j: usize, pair: IntegrandPair) -> Result<DMatrix<f64>> {
    let data = ds.loop_data(j)?;
    let acc = data.accumulator(pair);
    let nb = nbar(data.n());
    if acc.len() != data.times.len() || acc.iter().any(|row| row.len() != nb) {
        return Err(Error::Config(format!("integrand {pair:?} was not accumulated for loop {j}")));
    }
    let l = data.samples();
    Ok(DMatrix::from_fn(l, nb, |k, c| acc[k + 1][c] - acc[k][c]))
}
