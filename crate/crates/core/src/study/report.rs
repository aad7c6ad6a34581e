use std::path::{Path, PathBuf};

use super::StudyReport;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EmittedFiles {
    pub table: PathBuf,
    pub series: PathBuf,
    pub json: PathBuf,
}

fn csv_err(e: impl std::fmt::Display) -> Error {
    Error::Serde(e.to_string())
}

fn non_empty(report: &StudyReport) -> Result<()> {
    if report.variants.is_empty() || report.variants.iter().any(|v| v.records.is_empty()) {
        return Err(Error::EmptyReport);
    }
    Ok(())
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    String::from_utf8(w.into_inner().map_err(csv_err)?).map_err(csv_err)
}

/// `algorithm,loop,max_kappa,min_kappa` with κ to two decimals.
pub fn table_csv(report: &StudyReport) -> Result<String> {
    non_empty(report)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["algorithm", "loop", "max_kappa", "min_kappa"]).map_err(csv_err)?;
    for v in &report.variants {
        for r in &v.records {
            w.write_record([
                v.name.clone(),
                (r.loop_index + 1).to_string(),
                format!("{:.2}", r.max_kappa()),
                format!("{:.2}", r.min_kappa()),
            ])
            .map_err(csv_err)?;
        }
    }
    finish(w)
}

/// `algorithm,loop,iteration,kappa` at full precision.
pub fn series_csv(report: &StudyReport) -> Result<String> {
    non_empty(report)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["algorithm", "loop", "iteration", "kappa"]).map_err(csv_err)?;
    for v in &report.variants {
        for r in &v.records {
            for it in &r.iterations {
                w.write_record([
                    v.name.clone(),
                    (r.loop_index + 1).to_string(),
                    it.iteration.to_string(),
                    format!("{:?}", it.kappa),
                ])
                .map_err(csv_err)?;
            }
        }
    }
    finish(w)
}

/// Writes `table.csv`, `kappa_series.csv` and `report.json` into `dir`.
pub fn emit_report(report: &StudyReport, dir: &Path) -> Result<EmittedFiles> {
    let table = table_csv(report)?;
    let series = series_csv(report)?;
    let json = report.to_json()?;
    std::fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.to_path_buf(), source })?;
    let files = EmittedFiles {
        table: dir.join("table.csv"),
        series: dir.join("kappa_series.csv"),
        json: dir.join("report.json"),
    };
    for (path, body) in [(&files.table, table), (&files.series, series), (&files.json, json)] {
        std::fs::write(path, body).map_err(|source| Error::Io { path: path.clone(), source })?;
    }
    Ok(files)
}
