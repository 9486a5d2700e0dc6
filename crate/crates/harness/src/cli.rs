//! Command-line entry point.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage error. Failures print a
//! JSON line `{"error":{"kind":..,"message":..}}` on stderr.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use drivebench_core::catalog::{builtin, BUILTIN_SUITES};
use drivebench_core::control::StopPolicy;
use drivebench_core::episode::{run_episode, ControllerKind, EpisodeSpec};
use drivebench_core::metrics::{expected_ds, optimal_stop_distance, EpisodeResult, StopModel};
use rayon::prelude::*;

use crate::catalog_io::{export_catalog, load_catalog};
use crate::config::{HarnessConfig, CONFIG_ENV};
use crate::dataset::{build_index, draw_epoch, read_index, write_index};
use crate::episode_io::{read_results, write_episode, write_results, EpisodeHeader, ResultsHeader, FORMAT_VERSION, RESULTS_FORMAT};
use crate::error::{HarnessError, Result};
use crate::fsutil::{to_json_pretty, write_atomic};
use crate::report::{ds_curve_svg, write_report};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "drivebench", version, about = "Closed-loop driving benchmark harness")]
pub struct Cli {
    /// JSON config file; unset fields take their defaults.
    #[arg(long, global = true, env = CONFIG_ENV)]
    pub config: Option<PathBuf>,
    /// Episodes run concurrently. Output is identical for any value.
    #[arg(long, global = true, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    pub jobs: u32,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Drive the expert over a route library and record episodes.
    Collect {
        #[command(flatten)]
        catalog: CatalogArgs,
        /// Dataset directory; episodes go to `<out>/episodes`.
        #[arg(long, default_value = "dataset")]
        out: PathBuf,
    },
    /// Build `index/buckets.json` and `index/stats.json` for a dataset.
    Index {
        #[arg(long, default_value = "dataset")]
        data: PathBuf,
    },
    /// Draw one epoch of sample ids from the bucket index.
    Sample {
        #[arg(long, default_value = "dataset")]
        data: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Explicit epoch length; otherwise the configured fraction of the dataset.
        #[arg(long)]
        epoch_size: Option<usize>,
        #[arg(long)]
        epoch_fraction: Option<f64>,
        /// Defaults to `<data>/index/epoch.json`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Closed-loop evaluation of one controller.
    Evaluate {
        #[command(flatten)]
        catalog: CatalogArgs,
        /// semi-disentangled, entangled or expert-direct.
        #[arg(long)]
        controller: ControllerKind,
        /// Stop each route after this many meters once driving straight.
        #[arg(long, value_name = "METERS")]
        early_stop: Option<f64>,
        #[arg(long, default_value = "results.jsonl")]
        out: PathBuf,
    },
    /// Write `report.csv` and `summary.csv` from result files.
    Report {
        #[arg(long, required = true, num_args = 1..)]
        results: Vec<PathBuf>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// With `--p` and `--L`, also plot `ds_curve.svg`.
        #[arg(long, requires_all = ["p", "length"])]
        lambda: Option<f64>,
        #[arg(long, requires_all = ["lambda", "length"])]
        p: Option<f64>,
        #[arg(long = "L", id = "length", requires_all = ["lambda", "p"])]
        length: Option<f64>,
    },
    /// Expected DS and the optimal stop distance of the Poisson model.
    Stopcurve {
        /// Infractions per km.
        #[arg(long)]
        lambda: f64,
        /// Mean penalty coefficient.
        #[arg(long)]
        p: f64,
        /// Route length in km.
        #[arg(long = "L")]
        length: f64,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Write the effective configuration (file plus defaults) and its digest.
    Config {
        #[arg(long)]
        out: PathBuf,
    },
    /// Write built-in suites as `routes/<suite>.json` and `scenarios/<suite>.json`.
    Catalog {
        /// Suite name, or all.
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct CatalogArgs {
    /// Built-in suite or route library file.
    #[arg(long)]
    pub routes: Option<String>,
    /// Scenario catalog file.
    #[arg(long)]
    pub scenarios: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Parses `argv` (program name first) and runs it.
pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            if !e.use_stderr() {
                let _ = e.print();
                return EXIT_OK;
            }
            let message = e.kind().to_string();
            let _ = e.print();
            error_line("usage", &message);
            return EXIT_USAGE;
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            error_line(e.kind(), &e.to_string());
            EXIT_RUNTIME
        }
    }
}

fn error_line(kind: &str, message: &str) {
    eprintln!("{}", serde_json::json!({ "error": { "kind": kind, "message": message } }));
}

fn load_config(path: Option<&Path>) -> Result<HarnessConfig> {
    match path {
        Some(p) => HarnessConfig::load(p),
        None => Ok(HarnessConfig::default()),
    }
}

fn apply_catalog_args(cfg: &mut HarnessConfig, args: &CatalogArgs) {
    if let Some(r) = &args.routes {
        cfg.routes = r.clone();
        cfg.scenarios = None;
    }
    if let Some(s) = &args.scenarios {
        cfg.scenarios = Some(s.clone());
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
}

fn pool(jobs: u32) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new().num_threads(jobs as usize).build().map_err(|e| HarnessError::Config(e.to_string()))
}

fn resolved_specs(cfg: &HarnessConfig) -> Result<(String, Vec<EpisodeSpec>)> {
    let catalog = load_catalog(&cfg.routes, cfg.scenarios.as_deref())?;
    let mut specs = catalog.episode_specs()?;
    for s in &mut specs {
        s.seed = cfg.episode_seed(s.seed);
    }
    Ok((catalog.name, specs))
}

fn execute(cli: Cli) -> Result<()> {
    let mut cfg = load_config(cli.config.as_deref())?;
    match cli.command {
        Command::Collect { catalog, out } => {
            apply_catalog_args(&mut cfg, &catalog);
            cfg.validate()?;
            collect(&cfg, &out, cli.jobs)
        }
        Command::Index { data } => {
            cfg.validate()?;
            let start = Instant::now();
            let (index, stats) = pool(cli.jobs)?.install(|| build_index(&data.join("episodes"), &cfg.buckets, &cfg.digest()))?;
            write_index(&data, &index, &stats)?;
            eprintln!("indexed {} samples from {} episodes in {:.1?}", stats.samples, stats.episodes, start.elapsed());
            Ok(())
        }
        Command::Sample { data, seed, epoch_size, epoch_fraction, out } => {
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(f) = epoch_fraction {
                cfg.epoch_fraction = f;
            }
            cfg.validate()?;
            let index = read_index(&data)?;
            let epoch = draw_epoch(&index, &cfg.bucket_weights, epoch_size, cfg.epoch_fraction, cfg.seed, &cfg.digest())?;
            let out = out.unwrap_or_else(|| data.join("index").join("epoch.json"));
            write_atomic(&out, to_json_pretty(&epoch).as_bytes())?;
            eprintln!("wrote {} ids to {}", epoch.ids.len(), out.display());
            Ok(())
        }
        Command::Evaluate { catalog, controller, early_stop, out } => {
            apply_catalog_args(&mut cfg, &catalog);
            if let Some(m) = early_stop {
                cfg.run.early_stop = Some(StopPolicy::new(m));
            }
            cfg.validate()?;
            evaluate(&cfg, controller, &out, cli.jobs)
        }
        Command::Report { results, out, lambda, p, length } => {
            let sets = results.iter().map(|r| read_results(r)).collect::<Result<Vec<_>>>()?;
            let curve = match (lambda, p, length) {
                (Some(lambda), Some(p), Some(route_length)) => {
                    let threshold = sets.iter().find_map(|(h, _)| h.early_stop).map(|m| m / 1000.0);
                    Some((StopModel { lambda, p, route_length }, threshold))
                }
                _ => None,
            };
            write_report(&out, &sets, curve)?;
            eprintln!("wrote report for {} result files to {}", sets.len(), out.display());
            Ok(())
        }
        Command::Stopcurve { lambda, p, length, svg } => {
            let model = StopModel { lambda, p, route_length: length };
            model.validate()?;
            let d = optimal_stop_distance(&model);
            println!("d* = {d}");
            println!("expected_ds(d*) = {}", expected_ds(&model, d));
            println!("expected_ds(L) = {}", expected_ds(&model, length));
            if let Some(path) = svg {
                write_atomic(&path, ds_curve_svg(&model, None, &cfg.digest())?.as_bytes())?;
            }
            Ok(())
        }
        Command::Config { out } => {
            cfg.validate()?;
            write_atomic(&out, to_json_pretty(&cfg).as_bytes())?;
            eprintln!("config digest {}", cfg.digest());
            Ok(())
        }
        Command::Catalog { suite, out } => {
            let names: Vec<&str> = if suite == "all" { BUILTIN_SUITES.to_vec() } else { vec![suite.as_str()] };
            for name in names {
                let catalog = builtin(name).ok_or_else(|| HarnessError::Config(format!("unknown suite '{name}'")))?;
                export_catalog(&catalog, &out)?;
            }
            Ok(())
        }
    }
}

/// Records expert episodes into `<out>/episodes/<id>.jsonl`.
pub fn collect(cfg: &HarnessConfig, out: &Path, jobs: u32) -> Result<()> {
    let start = Instant::now();
    let digest = cfg.digest();
    let (suite, specs) = resolved_specs(cfg)?;
    let dir = out.join("episodes");
    let counts = pool(jobs)?.install(|| {
        specs
            .par_iter()
            .map(|spec| {
                let outcome = run_episode(spec, ControllerKind::ExpertDirect, &cfg.run, true)?;
                let scenario = spec.scenarios.first().map(|s| s.kind.as_str().to_string());
                let header =
                    EpisodeHeader::new(&spec.id, scenario, spec.seed, &digest, ControllerKind::ExpertDirect.as_str(), outcome.records.len());
                write_episode(&dir.join(format!("{}.jsonl", spec.id)), &header, &outcome.records)?;
                Ok(outcome.records.len())
            })
            .collect::<Result<Vec<usize>>>()
    })?;
    eprintln!(
        "collected {} episodes ({} samples) from suite '{suite}' in {:.1?}",
        counts.len(),
        counts.iter().sum::<usize>(),
        start.elapsed()
    );
    Ok(())
}

/// Runs every catalog episode under `kind`, in catalog order.
pub fn evaluate_results(cfg: &HarnessConfig, kind: ControllerKind, jobs: u32) -> Result<(String, Vec<EpisodeResult>)> {
    let (suite, specs) = resolved_specs(cfg)?;
    let results = pool(jobs)?.install(|| {
        specs.par_iter().map(|spec| Ok(run_episode(spec, kind, &cfg.run, false)?.result)).collect::<Result<Vec<_>>>()
    })?;
    Ok((suite, results))
}

pub fn evaluate(cfg: &HarnessConfig, kind: ControllerKind, out: &Path, jobs: u32) -> Result<()> {
    let start = Instant::now();
    let (suite, results) = evaluate_results(cfg, kind, jobs)?;
    let header = ResultsHeader {
        format: RESULTS_FORMAT.into(),
        version: FORMAT_VERSION,
        config_digest: cfg.digest(),
        controller: kind.as_str().into(),
        suite: suite.clone(),
        early_stop: cfg.run.early_stop.map(|p| p.distance_threshold),
    };
    write_results(out, &header, &results)?;
    let mean = results.iter().map(|r| r.ds).sum::<f64>() / results.len().max(1) as f64;
    eprintln!("evaluated {} episodes of '{suite}' with {kind}: mean DS {mean:.2} in {:.1?}", results.len(), start.elapsed());
    Ok(())
}
