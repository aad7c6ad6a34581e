//! Study runners: configuration, the four-variant benchmark, the synthetic
//! two-loop study, and report emission.

mod config;
mod report;

use std::time::Instant;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::eirl::{run_eirl, LearningRecord};
use crate::error::{Error, Result};
use crate::mee::{run_mee_algebraic, run_mee_physical, Experiment, ModulationSpec};
use crate::sim::ode::OdeOptions;
use crate::sim::{simulate_closed_loop, DecentralizedPlant, ProbingSignal, SampleSpec, TrajectoryDataset};
use crate::skron::nbar;

pub use config::{
    DataPath, ExperimentConfig, Mode, ModulationConfig, PlantConfig, StudyConfig, Tolerances, VariantConfig,
};
pub use report::{emit_report, series_csv, table_csv, EmittedFiles};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariantReport {
    pub name: String,
    pub mode: Mode,
    pub modulation: Option<ModulationSpec>,
    pub records: Vec<LearningRecord>,
    pub elapsed_ms: f64,
}

impl VariantReport {
    pub fn peak_kappa(&self) -> f64 {
        self.records.iter().map(LearningRecord::max_kappa).fold(f64::NAN, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub config: StudyConfig,
    pub variants: Vec<VariantReport>,
    pub checks: Vec<CheckResult>,
    pub elapsed_ms: f64,
}

impl StudyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn variant(&self, name: &str) -> Option<&VariantReport> {
        self.variants.iter().find(|v| v.name == name)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Serde(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Serde(e.to_string()))
    }
}

fn check(name: String, passed: bool, detail: String) -> CheckResult {
    CheckResult { name, passed, detail }
}

fn simulate(config: &StudyConfig, plant: &DecentralizedPlant) -> Result<TrajectoryDataset> {
    let e = &config.experiment;
    let k0 = config.k0(plant.n(), plant.m())?;
    simulate_closed_loop(
        plant,
        &k0,
        &ProbingSignal::new(e.probing.clone())?,
        &e.x0,
        config.horizon(),
        &SampleSpec::Uniform { t0: e.t0, ts: e.ts, l: e.l },
        &OdeOptions { rtol: e.rtol, atol: e.atol, ..OdeOptions::default() },
    )
}

fn run_variant(config: &StudyConfig, v: &VariantConfig, cache: &mut Vec<(Mode, TrajectoryDataset)>) -> Result<VariantReport> {
    let start = Instant::now();
    let plant = config.plant_for(v.mode)?;
    let k0 = config.k0(plant.n(), plant.m())?;
    let i_star = config.experiment.i_star;
    let modulation = v.modulation.as_ref().map(ModulationConfig::resolve).transpose()?;
    let dataset = |cache: &mut Vec<(Mode, TrajectoryDataset)>| -> Result<TrajectoryDataset> {
        if let Some((_, ds)) = cache.iter().find(|(m, _)| *m == v.mode) {
            return Ok(ds.clone());
        }
        let ds = simulate(config, &plant)?;
        cache.push((v.mode, ds.clone()));
        Ok(ds)
    };
    let records = match (&modulation, v.path) {
        (None, _) => run_eirl(&plant, &k0, &dataset(cache)?, i_star)?,
        (Some(spec), DataPath::Algebraic) => run_mee_algebraic(&plant, spec, &k0, &dataset(cache)?, i_star)?,
        (Some(spec), DataPath::Physical) => {
            let e = &config.experiment;
            let probing = ProbingSignal::new(e.probing.clone())?;
            let samples = SampleSpec::Uniform { t0: e.t0, ts: e.ts, l: e.l };
            let opts = OdeOptions { rtol: e.rtol, atol: e.atol, ..OdeOptions::default() };
            let exp = Experiment { probing: &probing, x0: &e.x0, horizon: config.horizon(), samples: &samples, opts: &opts };
            run_mee_physical(&plant, spec, &k0, &exp, i_star)?.0
        }
    };
    Ok(VariantReport {
        name: v.name.clone(),
        mode: v.mode,
        modulation,
        records,
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

fn max_rel_gain_dev(a: &[DMatrix<f64>], b: &[DMatrix<f64>]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm() / x.norm().max(1.0)).fold(0.0, f64::max)
}

fn variant_checks(config: &StudyConfig, variants: &[VariantReport]) -> Result<Vec<CheckResult>> {
    let tol = &config.tolerances;
    let mut out = Vec::new();
    for v in variants {
        for r in &v.records {
            let j = r.loop_index + 1;
            let nb = nbar(r.final_gain.ncols());
            out.push(check(
                format!("{} loop {j}: final gain gap", v.name),
                r.final_gap <= tol.gap,
                format!("{:.3e} <= {:.1e}", r.final_gap, tol.gap),
            ));
            out.push(check(
                format!("{} loop {j}: Kleinman equivalence", v.name),
                r.max_gap_p() <= tol.equivalence,
                format!("max ‖P_i − P_i^K‖ = {:.3e} <= {:.1e}", r.max_gap_p(), tol.equivalence),
            ));
            let kappa_ok = r.iterations.iter().all(|it| it.kappa >= 1.0 && (nb > 1 || it.kappa == 1.0));
            out.push(check(
                format!("{} loop {j}: conditioning bounds", v.name),
                kappa_ok,
                format!("κ in [{:.4}, {:.4}], nbar = {nb}", r.min_kappa(), r.max_kappa()),
            ));
        }
    }
    for v in variants.iter().filter(|v| v.modulation.is_some()) {
        let Some(base) = variants.iter().find(|b| b.modulation.is_none() && b.mode == v.mode) else {
            continue;
        };
        for (r, rb) in v.records.iter().zip(&base.records) {
            let j = r.loop_index + 1;
            let dev = max_rel_gain_dev(&rb.gains(), &r.gains());
            out.push(check(
                format!("{} loop {j}: gains match {}", v.name, base.name),
                dev <= tol.invariance,
                format!("{dev:.3e} <= {:.1e}", tol.invariance),
            ));
            if nbar(r.final_gain.ncols()) > 1 {
                out.push(check(
                    format!("{} loop {j}: peak κ below {}", v.name, base.name),
                    r.max_kappa() < rb.max_kappa(),
                    format!("{:.2} vs {:.2}", r.max_kappa(), rb.max_kappa()),
                ));
            }
        }
    }
    Ok(out)
}

/// Validates, simulates once per loop structure, and runs every variant.
pub fn run_study(config: &StudyConfig) -> Result<StudyReport> {
    config.validate()?;
    let start = Instant::now();
    let mut cache = Vec::new();
    let variants = config.variants.iter().map(|v| run_variant(config, v, &mut cache)).collect::<Result<Vec<_>>>()?;
    let checks = variant_checks(config, &variants)?;
    Ok(StudyReport { config: config.clone(), variants, checks, elapsed_ms: start.elapsed().as_secs_f64() * 1e3 })
}

pub fn run_study_lin2d(config: &StudyConfig) -> Result<StudyReport> {
    if config.plant != PlantConfig::Lin2d {
        return Err(Error::Config("lin2d study needs plant kind = \"lin2d\"".into()));
    }
    run_study(config)
}

pub fn run_study_synthetic2loop(config: &StudyConfig) -> Result<StudyReport> {
    if !matches!(config.plant, PlantConfig::Synthetic2loop { .. }) {
        return Err(Error::Config("synthetic study needs plant kind = \"synthetic2loop\"".into()));
    }
    run_study(config)
}
