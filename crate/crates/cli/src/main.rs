use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use mee_core::skron::suite::run_algebra_suite;
use mee_core::study::{emit_report, run_study, DataPath, Mode, ModulationConfig, StudyConfig, StudyReport};

#[derive(Parser)]
#[command(name = "mee", version, about = "Conditioning and convergence studies for integral RL with state modulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Randomized property run over the symmetric Kronecker algebra.
    CheckAlgebra {
        #[arg(long, default_value_t = 1000)]
        cases: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Run a study and print its conditioning table and checks.
    Run(RunArgs),
    /// Print a built-in study configuration as TOML.
    Config { study: Builtin },
}

#[derive(Clone, Copy, ValueEnum)]
enum Builtin {
    Lin2d,
    Synthetic2loop,
}

#[derive(Clone, Copy, ValueEnum)]
enum StudyName {
    Lin2d,
    Synthetic2loop,
    Custom,
}

#[derive(Clone, Copy, ValueEnum)]
enum PathArg {
    Algebraic,
    Physical,
}

#[derive(clap::Args)]
struct RunArgs {
    study: StudyName,
    /// TOML study configuration; required for `custom`.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory for table.csv, kappa_series.csv and report.json.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Diagonal modulation for every modulated variant, loops separated by
    /// `;` (e.g. `1;10`); joint variants use all entries. `none` drops them.
    #[arg(long)]
    modulation: Option<String>,
    /// Data path used by modulated variants.
    #[arg(long, value_enum)]
    path: Option<PathArg>,
    #[arg(long)]
    i_star: Option<usize>,
    #[arg(long)]
    gap: Option<f64>,
    #[arg(long)]
    equivalence: Option<f64>,
    #[arg(long)]
    invariance: Option<f64>,
}

/// `"1;1,10"` → `[[1], [1, 10]]`; `None` for `none`.
fn parse_modulation(text: &str) -> Result<Option<Vec<Vec<f64>>>> {
    if text.trim().eq_ignore_ascii_case("none") {
        return Ok(None);
    }
    let groups = text
        .split(';')
        .map(|g| {
            g.split(',')
                .map(|x| x.trim().parse::<f64>().with_context(|| format!("bad modulation entry {x:?}")))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Some(groups))
}

fn apply_overrides(cfg: &mut StudyConfig, args: &RunArgs) -> Result<()> {
    if let Some(text) = &args.modulation {
        match parse_modulation(text)? {
            None => cfg.variants.retain(|v| v.modulation.is_none()),
            Some(groups) => {
                let joint = vec![groups.concat()];
                for v in cfg.variants.iter_mut().filter(|v| v.modulation.is_some()) {
                    let entries = match v.mode {
                        Mode::Joint => joint.clone(),
                        Mode::Decentralized => groups.clone(),
                    };
                    v.modulation = Some(ModulationConfig::diagonal(entries));
                }
            }
        }
    }
    if let Some(p) = args.path {
        let path = match p {
            PathArg::Algebraic => DataPath::Algebraic,
            PathArg::Physical => DataPath::Physical,
        };
        for v in cfg.variants.iter_mut().filter(|v| v.modulation.is_some()) {
            v.path = path;
        }
    }
    if let Some(i) = args.i_star {
        cfg.experiment.i_star = i;
    }
    let tol = &mut cfg.tolerances;
    for (slot, value) in [(&mut tol.gap, args.gap), (&mut tol.equivalence, args.equivalence), (&mut tol.invariance, args.invariance)] {
        if let Some(v) = value {
            if !(v > 0.0 && v.is_finite()) {
                bail!("tolerances must be positive and finite, got {v}");
            }
            *slot = v;
        }
    }
    Ok(())
}

fn print_report(rep: &StudyReport) {
    println!("study {} ({:.1} ms)", rep.config.name, rep.elapsed_ms);
    let w = rep.variants.iter().map(|v| v.name.chars().count()).max().unwrap_or(0).max(9);
    println!("{:<w$} {:>4} {:>10} {:>10} {:>12}", "algorithm", "loop", "max κ", "min κ", "final gap");
    for v in &rep.variants {
        for r in &v.records {
            println!(
                "{:<w$} {:>4} {:>10.2} {:>10.2} {:>12.3e}",
                v.name,
                r.loop_index + 1,
                r.max_kappa(),
                r.min_kappa(),
                r.final_gap
            );
        }
    }
    for c in &rep.checks {
        println!("[{}] {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
}

fn run(args: &RunArgs) -> Result<bool> {
    let mut cfg = match (args.study, &args.config) {
        (StudyName::Custom, Some(p)) => StudyConfig::load(p)?,
        (StudyName::Custom, None) => bail!("`run custom` needs --config <path>"),
        (_, Some(_)) => bail!("--config only applies to `run custom`"),
        (StudyName::Lin2d, None) => StudyConfig::lin2d(),
        (StudyName::Synthetic2loop, None) => StudyConfig::synthetic2loop(),
    };
    apply_overrides(&mut cfg, args)?;
    let rep = run_study(&cfg)?;
    print_report(&rep);
    if let Some(dir) = &args.out {
        let files = emit_report(&rep, dir)?;
        println!("wrote {}, {}, {}", files.table.display(), files.series.display(), files.json.display());
    }
    Ok(rep.all_passed())
}

fn check_algebra(cases: usize, seed: u64) -> Result<bool> {
    let rep = run_algebra_suite(cases, seed)?;
    for (name, t) in &rep.properties {
        let tag = if t.failed == 0 && t.checked > 0 { "PASS" } else { "FAIL" };
        println!("[{tag}] {name}: {} checked, {} failed, worst {:.2e}", t.checked, t.failed, t.worst);
    }
    println!("{cases} cases, seed {seed}, {:.2} s", rep.elapsed.as_secs_f64());
    Ok(rep.all_passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::CheckAlgebra { cases, seed } => check_algebra(*cases, *seed),
        Command::Run(args) => run(args),
        Command::Config { study } => {
            let cfg = match study {
                Builtin::Lin2d => StudyConfig::lin2d(),
                Builtin::Synthetic2loop => StudyConfig::synthetic2loop(),
            };
            cfg.to_toml().map(|t| print!("{t}")).map(|_| true).map_err(Into::into)
        }
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
