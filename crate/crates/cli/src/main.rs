use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use savsim_core::metrics::{check_odometers, performance_from_parts};
use savsim_core::{
    engine::{read_trip_outcomes, SimulationSummary},
    validate_scenario, write_scenario, EventLog,
};

use savsim_cli::batch::{prepare_all, CityRecord, CityRun};
use savsim_cli::output::{create_dir, write_csv, write_json, write_performance, write_selection, write_urbanform};
use savsim_cli::regress::{coefficient_rows, moran_rows};
use savsim_cli::{
    fit_bundle, load_inputs, run_batch, run_sweep, run_threshold_study, CityInput, Family, PipelineConfig,
    RegressionBundle, SweepOutcome, ThresholdStudy,
};

#[derive(Parser, Debug)]
#[command(name = "savsim", version, about = "Shared automated vehicle fleet simulation and city comparison")]
struct Cli {
    /// Master seed; every city and cell seed is derived from it.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Output directory.
    #[arg(long, global = true, env = "SAVSIM_OUT", default_value = "savsim-out")]
    out: PathBuf,
    /// Worker threads (defaults to one per core).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// JSON run configuration; missing fields take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug, Clone)]
struct Rates {
    /// Willingness to share, overriding the configuration.
    #[arg(long)]
    ws: Option<f64>,
    /// Market penetration, overriding the configuration.
    #[arg(long)]
    mp: Option<f64>,
}

#[derive(clap::Args, Debug, Clone)]
struct GenArgs {
    #[arg(long, value_enum)]
    family: Option<Family>,
    #[arg(long)]
    count: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate synthetic cities into <out>/cities.
    Gen(GenArgs),
    /// Check scenarios against the data-model invariants.
    Validate { paths: Vec<PathBuf> },
    /// Simulate cities and write per-city results and event logs.
    Simulate {
        paths: Vec<PathBuf>,
        #[command(flatten)]
        rates: Rates,
    },
    /// Recompute performance measures from written simulation outputs.
    Metrics { paths: Vec<PathBuf> },
    /// Urban-form measures of the aligned zones of each city.
    Urbanform { paths: Vec<PathBuf> },
    /// Boundary alignment, intra-city trip share and city selection.
    Align { paths: Vec<PathBuf> },
    /// Fit the three performance models from a batch file.
    Regress {
        /// Batch file written by `simulate` (default <out>/batch.json).
        #[arg(long)]
        batch: Option<PathBuf>,
    },
    /// Re-simulate and refit over the WS and MP sweep.
    Sweep { paths: Vec<PathBuf> },
    /// Refit the models over the intra-city share thresholds.
    Thresholds {
        #[arg(long)]
        batch: Option<PathBuf>,
    },
    /// Every stage; generates cities when no paths are given.
    Pipeline {
        paths: Vec<PathBuf>,
        #[command(flatten)]
        generate: GenArgs,
        /// Also write per-city event logs and trip outcomes.
        #[arg(long)]
        logs: bool,
    },
}

/// Contents of `batch.json`.
#[derive(Debug, Serialize, Deserialize)]
struct BatchFile {
    seed: u64,
    config: PipelineConfig,
    records: Vec<CityRecord>,
}

#[derive(Serialize)]
struct ErrorReport {
    error: String,
    causes: Vec<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let report = ErrorReport {
                error: e.to_string(),
                causes: e.chain().skip(1).map(|c| c.to_string()).collect(),
            };
            eprintln!("{}", serde_json::to_string(&report).expect("error report serializes"));
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring worker threads")?;
    }
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    let out = cli.out.clone();
    let seed = cli.seed;
    match cli.command {
        Command::Gen(g) => {
            apply_gen(&mut cfg, &g)?;
            let dirs = generate(&cfg, seed, &out.join("cities"))?;
            print_json(&dirs)
        }
        Command::Validate { paths } => validate(&inputs(&paths)?),
        Command::Simulate { paths, rates } => {
            if let Some(ws) = rates.ws {
                cfg.sim.ws = ws;
            }
            if let Some(mp) = rates.mp {
                cfg.sim.mp = mp;
            }
            cfg.validate()?;
            let runs = simulate(&cfg, seed, &inputs(&paths)?, &out, true)?;
            print_summary(&runs)
        }
        Command::Metrics { paths } => metrics(&paths, &out),
        Command::Urbanform { paths } => {
            let recs = prepared_records(&cfg, &inputs(&paths)?);
            create_dir(&out)?;
            write_urbanform(&out.join("urbanform.csv"), &recs)?;
            print_errors(&recs)
        }
        Command::Align { paths } => {
            let recs = prepared_records(&cfg, &inputs(&paths)?);
            create_dir(&out)?;
            write_selection(&out.join("selection.csv"), &recs)?;
            print_errors(&recs)
        }
        Command::Regress { batch } => {
            let b = read_batch(batch.as_deref(), &out)?;
            let bundle = fit_bundle(&b.records, &b.config.analysis, b.seed, (b.config.sim.ws, b.config.sim.mp, 0));
            write_regression(&bundle, &out)?;
            print_json(&model_summary(&bundle))
        }
        Command::Sweep { paths } => {
            cfg.validate()?;
            let prepared: Vec<_> = prepare_all(&inputs(&paths)?, &cfg.analysis).into_iter().filter_map(|p| p.ok()).collect();
            let outcome = run_sweep(&prepared, &cfg.sim, &cfg.sweep, &cfg.analysis, seed)?;
            write_sweep(&outcome, &out.join("sweep"))?;
            print_json(&serde_json::json!({"cells": outcome.bundles.len(), "comparisons": outcome.comparisons.len()}))
        }
        Command::Thresholds { batch } => {
            let b = read_batch(batch.as_deref(), &out)?;
            let study = run_threshold_study(&b.records, &b.config.sweep.share_thresholds, &b.config.analysis, b.seed);
            write_thresholds(&study, &out.join("thresholds"))?;
            print_json(&serde_json::json!({"rows": study.rows.len(), "coefficients": study.coefficients.len()}))
        }
        Command::Pipeline { paths, generate: g, logs } => {
            apply_gen(&mut cfg, &g)?;
            cfg.validate()?;
            let paths = if paths.is_empty() {
                generate(&cfg, seed, &out.join("cities"))?;
                vec![out.join("cities")]
            } else {
                paths
            };
            pipeline(&cfg, seed, &inputs(&paths)?, &out, logs)
        }
    }
}

fn inputs(paths: &[PathBuf]) -> Result<Vec<CityInput>> {
    if paths.is_empty() {
        bail!("no scenario paths given");
    }
    load_inputs(paths)
}

fn apply_gen(cfg: &mut PipelineConfig, g: &GenArgs) -> Result<()> {
    if let Some(f) = g.family {
        cfg.generate.family = f;
    }
    if let Some(n) = g.count {
        cfg.generate.count = n;
    }
    cfg.generate.validate()
}

fn print_json<T: Serialize + ?Sized>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn generate(cfg: &PipelineConfig, seed: u64, dir: &Path) -> Result<Vec<String>> {
    let cities = cfg.generate.generate(seed)?;
    create_dir(dir)?;
    for s in &cities {
        write_scenario(s, &dir.join(&s.name))?;
    }
    Ok(cities.into_iter().map(|s| s.name).collect())
}

#[derive(Serialize)]
struct ValidationOut {
    city: String,
    load_error: Option<String>,
    violations: Vec<savsim_core::scenario::Violation>,
}

fn validate(inputs: &[CityInput]) -> Result<()> {
    let rows: Vec<ValidationOut> = inputs
        .iter()
        .map(|c| match &c.scenario {
            Ok(s) => ValidationOut {
                city: c.name.clone(),
                load_error: None,
                violations: validate_scenario(s).violations,
            },
            Err(e) => ValidationOut {
                city: c.name.clone(),
                load_error: Some(e.clone()),
                violations: Vec::new(),
            },
        })
        .collect();
    print_json(&rows)?;
    let bad = rows.iter().filter(|r| r.load_error.is_some() || !r.violations.is_empty()).count();
    if bad > 0 {
        bail!("{bad} of {} scenarios failed validation", rows.len());
    }
    Ok(())
}

fn prepared_records(cfg: &PipelineConfig, inputs: &[CityInput]) -> Vec<CityRecord> {
    prepare_all(inputs, &cfg.analysis)
        .into_iter()
        .map(|p| p.map_or_else(|rec| rec, |c| c.record))
        .collect()
}

fn print_errors(recs: &[CityRecord]) -> Result<()> {
    let errors: Vec<_> = recs
        .iter()
        .filter_map(|r| r.error.as_ref().map(|e| serde_json::json!({"city": r.city, "error": e})))
        .collect();
    print_json(&serde_json::json!({"cities": recs.len(), "errors": errors}))
}

fn print_summary(runs: &[CityRun]) -> Result<()> {
    let rows: Vec<_> = runs
        .iter()
        .map(|r| {
            let p = r.record.performance.as_ref();
            serde_json::json!({
                "city": r.record.city,
                "served_trips_per_sav": p.and_then(|p| p.served_trips_per_sav),
                "pct_pooled_trips": p.and_then(|p| p.pct_pooled_trips),
                "pct_extra_vmt": p.and_then(|p| p.pct_extra_vmt),
                "error": r.record.error,
            })
        })
        .collect();
    print_json(&rows)
}

/// Runs the batch and writes its tables into `out`; event logs go to
/// `out/sim/<city>` when `logs` is set.
fn simulate(cfg: &PipelineConfig, seed: u64, inputs: &[CityInput], out: &Path, logs: bool) -> Result<Vec<CityRun>> {
    let (runs, _) = run_batch(inputs, &cfg.sim, &cfg.analysis, seed, logs);
    write_batch(cfg, seed, &runs, out)?;
    Ok(runs)
}

fn write_batch(cfg: &PipelineConfig, seed: u64, runs: &[CityRun], out: &Path) -> Result<()> {
    create_dir(out)?;
    let records: Vec<CityRecord> = runs.iter().map(|r| r.record.clone()).collect();
    for r in runs {
        if let Some(result) = &r.result {
            result.write_outputs(&out.join("sim").join(&r.record.city))?;
        }
    }
    write_performance(&out.join("performance.csv"), &records)?;
    write_urbanform(&out.join("urbanform.csv"), &records)?;
    write_selection(&out.join("selection.csv"), &records)?;
    write_json(
        &out.join("batch.json"),
        &BatchFile {
            seed,
            config: cfg.clone(),
            records,
        },
    )
}

fn read_batch(path: Option<&Path>, out: &Path) -> Result<BatchFile> {
    let path = path.map_or_else(|| out.join("batch.json"), Path::to_path_buf);
    let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Directories holding `simresult.json`, directly or one level down.
fn sim_dirs(paths: &[PathBuf]) -> Result<Vec<PathBuf>> {
    if paths.is_empty() {
        bail!("no simulation output paths given");
    }
    let mut out = Vec::new();
    for p in paths {
        if p.join("simresult.json").exists() {
            out.push(p.clone());
            continue;
        }
        let mut found: Vec<PathBuf> = std::fs::read_dir(p)
            .with_context(|| format!("reading {}", p.display()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|d| d.join("simresult.json").exists())
            .collect();
        if found.is_empty() {
            bail!("no simulation outputs under {}", p.display());
        }
        found.sort();
        out.extend(found);
    }
    Ok(out)
}

fn recompute(dir: &Path) -> Result<CityRecord> {
    let path = dir.join("simresult.json");
    let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let summary: SimulationSummary = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let day2 = EventLog::read_jsonl(&dir.join("eventlog.jsonl"))?.filter_day(2);
    let trips = read_trip_outcomes(&dir.join("trips_out.csv"))?;
    check_odometers(&day2, &summary.vehicles)?;
    let perf = performance_from_parts(&summary.city, summary.fleet_size, &day2, &trips)?;
    Ok(CityRecord {
        ws: summary.config.ws,
        mp: summary.config.mp,
        seed: Some(summary.seed),
        performance: Some(perf),
        ..CityRecord::new(&summary.city)
    })
}

fn metrics(paths: &[PathBuf], out: &Path) -> Result<()> {
    let dirs = sim_dirs(paths)?;
    let records: Vec<CityRecord> = dirs
        .par_iter()
        .map(|d| {
            recompute(d).unwrap_or_else(|e| CityRecord {
                error: Some(format!("{e:#}")),
                ..CityRecord::new(&d.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned()))
            })
        })
        .collect();
    create_dir(out)?;
    write_performance(&out.join("metrics.csv"), &records)?;
    print_errors(&records)
}

fn model_summary(bundle: &RegressionBundle) -> serde_json::Value {
    let models: Vec<_> = bundle
        .models
        .iter()
        .map(|m| {
            serde_json::json!({
                "response": m.response,
                "n": m.cities.len(),
                "selected": m.regression.as_ref().map(|r| r.selected.clone()),
                "adj_r2": m.regression.as_ref().map(|r| r.fit.adj_r2),
                "error": m.error,
            })
        })
        .collect();
    serde_json::json!({"cities": bundle.cities.len(), "models": models, "error": bundle.error})
}

fn write_regression(bundle: &RegressionBundle, out: &Path) -> Result<()> {
    create_dir(out)?;
    write_json(&out.join("regression.json"), bundle)?;
    write_csv(&out.join("coefficients.csv"), &coefficient_rows(bundle))?;
    write_csv(&out.join("morans.csv"), &moran_rows(bundle))
}

fn write_sweep(outcome: &SweepOutcome, out: &Path) -> Result<()> {
    create_dir(out)?;
    write_performance(&out.join("performance.csv"), &outcome.records)?;
    write_json(&out.join("regression.json"), &outcome.bundles)?;
    let coefs: Vec<_> = outcome.bundles.iter().flat_map(coefficient_rows).collect();
    write_csv(&out.join("coefficients.csv"), &coefs)?;
    let morans: Vec<_> = outcome.bundles.iter().flat_map(moran_rows).collect();
    write_csv(&out.join("morans.csv"), &morans)?;
    write_csv(&out.join("ttests.csv"), &outcome.comparisons)
}

fn write_thresholds(study: &ThresholdStudy, out: &Path) -> Result<()> {
    create_dir(out)?;
    write_json(&out.join("thresholds.json"), study)?;
    write_csv(&out.join("rmse.csv"), &study.rows)?;
    write_csv(&out.join("coefficients.csv"), &study.coefficients)
}

fn pipeline(cfg: &PipelineConfig, seed: u64, inputs: &[CityInput], out: &Path, logs: bool) -> Result<()> {
    let (runs, prepared) = run_batch(inputs, &cfg.sim, &cfg.analysis, seed, logs);
    let batch_dir = out.join("batch");
    write_batch(cfg, seed, &runs, &batch_dir)?;
    let records: Vec<CityRecord> = runs.into_iter().map(|r| r.record).collect();

    let bundle = fit_bundle(&records, &cfg.analysis, seed, (cfg.sim.ws, cfg.sim.mp, 0));
    write_regression(&bundle, &out.join("regress"))?;

    let outcome = run_sweep(&prepared, &cfg.sim, &cfg.sweep, &cfg.analysis, seed)?;
    write_sweep(&outcome, &out.join("sweep"))?;

    let study = run_threshold_study(&records, &cfg.sweep.share_thresholds, &cfg.analysis, seed);
    write_thresholds(&study, &out.join("thresholds"))?;

    print_json(&serde_json::json!({
        "cities": records.len(),
        "errors": records.iter().filter(|r| r.error.is_some()).count(),
        "regression": model_summary(&bundle),
        "sweep_cells": outcome.bundles.len(),
        "comparisons": outcome.comparisons.len(),
        "threshold_rows": study.rows.len(),
    }))
}
