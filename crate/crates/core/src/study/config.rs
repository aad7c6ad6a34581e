use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mee::ModulationSpec;
use crate::sim::plants::{lin2d, lin2d_probing, Synthetic2Loop};
use crate::sim::{DecentralizedPlant, LoopPartition, Sinusoid};
use crate::skron::{nbar, SymMatrix};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PlantConfig {
    Lin2d,
    Synthetic2loop {
        cubic: f64,
        coupling: f64,
    },
    /// `ẋ = Ax + Bu` with weights `Q`, `R` (rows of numbers) and the loop
    /// partition used by decentralized variants.
    Linear {
        a: Vec<Vec<f64>>,
        b: Vec<Vec<f64>>,
        q: Vec<Vec<f64>>,
        r: Vec<Vec<f64>>,
        state_dims: Vec<usize>,
        control_dims: Vec<usize>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Sample period, seconds.
    pub ts: f64,
    /// Samples per loop.
    pub l: usize,
    /// First sample instant, seconds.
    #[serde(default)]
    pub t0: f64,
    pub i_star: usize,
    pub x0: Vec<f64>,
    /// Initial gain rows; zero when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k0: Option<Vec<Vec<f64>>>,
    /// Per control channel; frequencies in rad/s, phases in rad.
    pub probing: Vec<Vec<Sinusoid>>,
    #[serde(default = "default_rtol")]
    pub rtol: f64,
    #[serde(default = "default_atol")]
    pub atol: f64,
}

fn default_rtol() -> f64 {
    1e-10
}

fn default_atol() -> f64 {
    1e-12
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// One loop over the whole state.
    Joint,
    /// One loop per partition block.
    Decentralized,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataPath {
    /// Right-multiply regressors built from the original data.
    #[default]
    Algebraic,
    /// Simulate the modulated plant.
    Physical,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModulationConfig {
    /// Diagonal entries per loop.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagonal: Option<Vec<Vec<f64>>>,
    /// Full square blocks per loop.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blocks: Option<Vec<Vec<Vec<f64>>>>,
}

impl ModulationConfig {
    pub fn diagonal(entries: Vec<Vec<f64>>) -> Self {
        Self { diagonal: Some(entries), blocks: None }
    }

    pub fn resolve(&self) -> Result<ModulationSpec> {
        match (&self.diagonal, &self.blocks) {
            (Some(d), None) => ModulationSpec::diagonal(d),
            (None, Some(b)) => ModulationSpec::new(b.iter().map(|rows| rows_to_matrix(rows)).collect::<Result<_>>()?),
            _ => Err(Error::Config("modulation needs exactly one of `diagonal` or `blocks`".into())),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariantConfig {
    pub name: String,
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modulation: Option<ModulationConfig>,
    #[serde(default)]
    pub path: DataPath,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Bound on `‖K_{i*} − K*‖_F` per loop.
    pub gap: f64,
    /// Bound on `max_i ‖P_i − P_i^{Kleinman}‖_F` per loop.
    pub equivalence: f64,
    /// Relative bound on gain differences between modulated and plain runs.
    pub invariance: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { gap: 1e-6, equivalence: 1e-6, invariance: 1e-8 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub name: String,
    pub plant: PlantConfig,
    pub experiment: ExperimentConfig,
    pub variants: Vec<VariantConfig>,
    #[serde(default)]
    pub tolerances: Tolerances,
}

pub(crate) fn rows_to_matrix(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if nrows == 0 || ncols == 0 {
        return Err(Error::ZeroDimension);
    }
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Config("ragged matrix rows".into()));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

fn sym(rows: &[Vec<f64>], what: &str) -> Result<SymMatrix> {
    SymMatrix::try_new(rows_to_matrix(rows)?, 1e-12).map_err(|e| Error::Config(format!("{what}: {e}")))
}

fn variant(name: &str, mode: Mode, modulation: Option<Vec<Vec<f64>>>) -> VariantConfig {
    VariantConfig {
        name: name.into(),
        mode,
        modulation: modulation.map(ModulationConfig::diagonal),
        path: DataPath::Algebraic,
    }
}

impl StudyConfig {
    /// The benchmark: `Ts = 0.1 s`, `l = 5`, `i* = 5`, `K0 = 0`,
    /// `d = (cos t, 0.1 cos 0.1t)`. The initial state is not part of the
    /// benchmark description; `(−0.215, 0.035)` is the value used here.
    pub fn lin2d() -> Self {
        Self {
            name: "lin2d".into(),
            plant: PlantConfig::Lin2d,
            experiment: ExperimentConfig {
                ts: 0.1,
                l: 5,
                t0: 0.0,
                i_star: 5,
                x0: vec![-0.215, 0.035],
                k0: None,
                probing: lin2d_probing().channels,
                rtol: default_rtol(),
                atol: default_atol(),
            },
            variants: vec![
                variant("EIRL", Mode::Joint, None),
                variant("EIRL w/ MEE", Mode::Joint, Some(vec![vec![1.0, 10.0]])),
                variant("dEIRL", Mode::Decentralized, None),
                variant("dEIRL w/ MEE", Mode::Decentralized, Some(vec![vec![1.0], vec![10.0]])),
            ],
            tolerances: Tolerances::default(),
        }
    }

    pub fn synthetic2loop() -> Self {
        Self {
            name: "synthetic2loop".into(),
            plant: PlantConfig::Synthetic2loop { cubic: 1.0, coupling: 0.5 },
            experiment: ExperimentConfig {
                ts: 0.5,
                l: 5,
                t0: 0.0,
                i_star: 8,
                x0: vec![0.0; 3],
                k0: None,
                probing: Synthetic2Loop::probing(0.1).channels,
                rtol: default_rtol(),
                atol: default_atol(),
            },
            variants: vec![
                variant("dEIRL", Mode::Decentralized, None),
                variant("dEIRL w/ MEE", Mode::Decentralized, Some(vec![vec![1.0], vec![1.0, 10.0]])),
            ],
            tolerances: Tolerances::default(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Serde(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        Self::from_toml_str(&text)
    }

    /// The plant with its decentralized partition.
    pub fn build_plant(&self) -> Result<DecentralizedPlant> {
        match &self.plant {
            PlantConfig::Lin2d => lin2d().with_partition(LoopPartition::new(vec![1, 1], vec![1, 1])?),
            PlantConfig::Synthetic2loop { cubic, coupling } => {
                if !(cubic.is_finite() && coupling.is_finite()) {
                    return Err(Error::Config("synthetic plant coefficients must be finite".into()));
                }
                Ok(Synthetic2Loop { cubic: *cubic, coupling: *coupling }.plant())
            }
            PlantConfig::Linear { a, b, q, r, state_dims, control_dims } => DecentralizedPlant::linear(
                rows_to_matrix(a)?,
                rows_to_matrix(b)?,
                sym(q, "Q")?,
                sym(r, "R")?,
                LoopPartition::new(state_dims.clone(), control_dims.clone())?,
            ),
        }
    }

    pub fn plant_for(&self, mode: Mode) -> Result<DecentralizedPlant> {
        let plant = self.build_plant()?;
        match mode {
            Mode::Decentralized => Ok(plant),
            Mode::Joint => plant.with_partition(LoopPartition::single(plant.n(), plant.m())?),
        }
    }

    pub fn k0(&self, n: usize, m: usize) -> Result<DMatrix<f64>> {
        match &self.experiment.k0 {
            None => Ok(DMatrix::zeros(m, n)),
            Some(rows) => {
                let k = rows_to_matrix(rows)?;
                if k.shape() != (m, n) {
                    return Err(Error::Config(format!("K0 is {:?}, expected {m}x{n}", k.shape())));
                }
                Ok(k)
            }
        }
    }

    pub fn horizon(&self) -> f64 {
        self.experiment.t0 + self.experiment.l as f64 * self.experiment.ts
    }

    /// All cross-checks that can fail before any simulation runs.
    pub fn validate(&self) -> Result<()> {
        let e = &self.experiment;
        if !(e.ts > 0.0 && e.ts.is_finite()) || !(e.t0 >= 0.0 && e.t0.is_finite()) {
            return Err(Error::Config("ts must be positive and t0 nonnegative".into()));
        }
        if !(e.rtol > 0.0 && e.atol > 0.0) {
            return Err(Error::Config("solver tolerances must be positive".into()));
        }
        if self.variants.is_empty() {
            return Err(Error::Config("no variants configured".into()));
        }
        let plant = self.build_plant()?;
        let (n, m) = (plant.n(), plant.m());
        if e.x0.len() != n {
            return Err(Error::Config(format!("x0 has {} entries for n = {n}", e.x0.len())));
        }
        if e.probing.len() != m {
            return Err(Error::Config(format!("probing has {} channels for m = {m}", e.probing.len())));
        }
        crate::sim::ProbingSignal::new(e.probing.clone())?;
        self.k0(n, m)?;
        for v in &self.variants {
            let p = self.plant_for(v.mode)?;
            for &d in &p.partition.state_dims {
                if e.l < nbar(d) {
                    return Err(Error::TooFewSamples { got: e.l, needed: nbar(d) });
                }
            }
            if let Some(mc) = &v.modulation {
                mc.resolve()?.check_partition(&p.partition)?;
            }
        }
        Ok(())
    }
}
