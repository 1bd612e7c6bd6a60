use std::collections::BTreeSet;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use densam::emergence::{
    beta_search as search, brute_force_minima_with, classify_emergence_with, EnumerationOptions,
};
use densam::genbench::{
    csv_bytes, fraction_std_error, run_sweep, summarize, support_fraction_mc, ExperimentConfig,
    Generator, Sidecar, SweepRows,
};
use densam::kernels::kernel_moments;
use densam::patterns::{read_points_csv, GridPlacement};
use densam::retrieval::{
    gradient_descent_with, lsr_fixed_point, single_step_retrieve, DescentOptions, LrSchedule,
};
use densam::{EnergySpec, Error, KernelId, PatternSet};
use serde::Serialize;
use serde_json::json;

use crate::manifest::{OutputFile, RunManifest};
use crate::{
    BetaSearchArgs, EnergyArgs, EnumerateArgs, GenerateCommand, KernelsArgs, Mode, RetrieveArgs,
    SupportArgs, SweepArgs,
};

pub const EXIT_INPUT: u8 = 2;
pub const EXIT_DOMAIN: u8 = 3;
pub const EXIT_MISMATCH: u8 = 4;
pub const EXIT_TOTAL_FAILURE: u8 = 5;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn input(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::UnsupportedStart
            | Error::AmbiguousBasin(_)
            | Error::IterationCap(_)
            | Error::TooManyPatterns { .. }
            | Error::NeighborhoodBlowup { .. } => EXIT_DOMAIN,
            _ => EXIT_INPUT,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::input(e.to_string())
    }
}

fn load_patterns(path: &Path) -> Result<PatternSet, Failure> {
    PatternSet::read_csv(path).map_err(|e| Failure {
        message: format!("{}: {e}", path.display()),
        ..Failure::from(e)
    })
}

fn energy(args: &EnergyArgs, kernel: KernelId) -> Result<(PatternSet, EnergySpec), Failure> {
    let patterns = load_patterns(&args.patterns)?;
    let spec = EnergySpec::new(kernel, args.beta, args.epsilon)?;
    Ok((patterns, spec))
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> Result<(), Failure> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| Failure::input(e.to_string()))?;
    text.push('\n');
    match out {
        Some(path) => fs::write(path, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

pub fn retrieve(a: RetrieveArgs) -> Result<(), Failure> {
    let (patterns, spec) = energy(&a.energy, a.kernel)?;
    let queries = read_points_csv(&a.query)?;
    let mut results = Vec::with_capacity(queries.len());
    for (i, q) in queries.iter().enumerate() {
        let at = |e: Error| Failure {
            message: format!("query {i}: {e}"),
            ..Failure::from(e)
        };
        let value = match a.mode {
            Mode::Gd => {
                let opts = DescentOptions {
                    precondition: a.precondition,
                    ..DescentOptions::new(a.steps, LrSchedule::constant(a.lr))
                };
                let r = gradient_descent_with(q, &patterns, &spec, &opts).map_err(at)?;
                json!({ "query": i, "point": r.point, "steps": r.steps, "converged": r.converged })
            }
            Mode::Single => {
                let p = single_step_retrieve(q, &patterns, &spec).map_err(at)?;
                json!({ "query": i, "point": p })
            }
            Mode::FixedPoint => {
                let fp = lsr_fixed_point(q, &patterns, &spec).map_err(at)?;
                json!({
                    "query": i,
                    "point": fp.point,
                    "subset": fp.subset,
                    "iterations": fp.iterations,
                    "cycle_detected": fp.cycle_detected,
                })
            }
        };
        results.push(value);
    }
    emit(&results, a.out.as_deref())
}

pub fn enumerate(a: EnumerateArgs) -> Result<(), Failure> {
    let (patterns, spec) = energy(&a.energy, KernelId::Epanechnikov)?;
    let opts = EnumerationOptions::with_delta(a.delta);
    let report = classify_emergence_with(&patterns, &spec, &opts)?;
    emit(&report, a.out.as_deref())?;
    if !a.oracle {
        return Ok(());
    }
    let oracle_opts = EnumerationOptions::with_delta(a.oracle_delta.unwrap_or(a.delta));
    let brute = brute_force_minima_with(&patterns, &spec, &oracle_opts)?;
    let found: BTreeSet<&[usize]> = report
        .memories
        .iter()
        .map(|m| m.subset.as_slice())
        .collect();
    let expected: BTreeSet<&[usize]> = brute.iter().map(|m| m.subset.as_slice()).collect();
    if found == expected {
        return Ok(());
    }
    let mut diff = String::from("pruned and exhaustive enumeration disagree");
    for s in found.difference(&expected) {
        diff.push_str(&format!("\n  only pruned:     {s:?}"));
    }
    for s in expected.difference(&found) {
        diff.push_str(&format!("\n  only exhaustive: {s:?}"));
    }
    Err(Failure {
        code: EXIT_MISMATCH,
        message: diff,
    })
}

pub fn beta_search(a: BetaSearchArgs) -> Result<(), Failure> {
    let patterns = load_patterns(&a.patterns)?;
    let result = search(&patterns, a.target_k, a.n_max)?;
    emit(&result, None)
}

pub fn kernels(a: KernelsArgs) -> Result<(), Failure> {
    let rows: Vec<_> = KernelId::ALL
        .iter()
        .map(|&k| (k, kernel_moments(k)))
        .collect();
    if a.json {
        let table: Vec<_> = rows
            .iter()
            .map(|(k, m)| json!({ "kernel": k, "mu_k": m.mu_k, "sigma_k": m.sigma_k, "efficiency": m.efficiency }))
            .collect();
        return emit(&table, None);
    }
    let mut out = std::io::stdout().lock();
    writeln!(
        out,
        "{:<14}{:>12}{:>12}{:>12}",
        "kernel", "mu_k", "sigma_k", "efficiency"
    )?;
    for (k, m) in rows {
        writeln!(
            out,
            "{:<14}{:>12.6}{:>12.6}{:>12.6}",
            k.name(),
            m.mu_k,
            m.sigma_k,
            m.efficiency
        )?;
    }
    Ok(())
}

pub fn support_fraction(a: SupportArgs) -> Result<(), Failure> {
    if a.samples == 0 {
        return Err(Failure::input("--samples must be at least 1"));
    }
    let (patterns, spec) = energy(&a.energy, KernelId::Epanechnikov)?;
    let fraction = support_fraction_mc(&patterns, &spec, a.samples, a.seed)?;
    emit(
        &json!({
            "fraction": fraction,
            "std_error": fraction_std_error(fraction, a.samples),
            "samples": a.samples,
            "seed": a.seed,
        }),
        None,
    )
}

pub fn generate(g: GenerateCommand) -> Result<(), Failure> {
    let (generator, seed, out) = match g {
        GenerateCommand::Uniform { m, d, seed, out } => (Generator::Uniform { m, d }, seed, out),
        GenerateCommand::Grid {
            points_per_dim,
            d,
            corners,
            out,
        } => {
            let placement = if corners {
                GridPlacement::Corners
            } else {
                GridPlacement::Centers
            };
            let generator = Generator::Grid {
                points_per_dim,
                d,
                placement,
            };
            (generator, 0, out)
        }
        GenerateCommand::Mixture {
            m,
            d,
            k,
            sigma,
            seed,
            out,
        } => (Generator::Mixture { m, d, k, sigma }, seed, out),
    };
    let patterns = generator.patterns(seed)?;
    match out {
        Some(path) => patterns.write_csv(path)?,
        None => patterns.write_csv_to(std::io::stdout().lock())?,
    }
    Ok(())
}

fn load_config(path: &Path) -> Result<ExperimentConfig, Failure> {
    let text =
        fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    let mut cfg = ExperimentConfig::from_json(&text)
        .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    // Pattern files are resolved against the config's directory.
    if let Generator::File { path: p } = &mut cfg.generator {
        if p.is_relative() {
            if let Some(dir) = path.parent() {
                *p = dir.join(&*p);
            }
        }
    }
    Ok(cfg)
}

fn or_default(configured: &Option<PathBuf>, dir: &Path, name: &str) -> PathBuf {
    configured.clone().unwrap_or_else(|| dir.join(name))
}

pub fn sweep(a: SweepArgs) -> Result<(), Failure> {
    let cfg = load_config(&a.config)?;
    fs::create_dir_all(&a.out_dir)?;
    let start = Instant::now();
    let rows = run_sweep(&cfg)?;
    let wall_clock_seconds = start.elapsed().as_secs_f64();

    if let SweepRows::Metrics(metrics) = &rows {
        for r in metrics.iter().filter(|r| !r.is_ok()) {
            eprintln!(
                "densam: cell seed={} index={} beta={}: {}",
                r.seed, r.ladder_index, r.beta, r.status
            );
        }
    }

    let mut outputs = Vec::new();
    let csv_path = or_default(&cfg.output.csv, &a.out_dir, "rows.csv");
    let table = OutputFile::write(&csv_path, &rows.csv_bytes()?)?;
    let csv_sha256 = table.sha256.clone();
    outputs.push(table);

    let mut summary_sha256 = None;
    if let SweepRows::Metrics(metrics) = &rows {
        let path = or_default(&cfg.output.summary_csv, &a.out_dir, "summary.csv");
        let summary = OutputFile::write(&path, &csv_bytes(&summarize(metrics))?)?;
        summary_sha256 = Some(summary.sha256.clone());
        outputs.push(summary);
    }

    let sidecar = Sidecar {
        config: cfg.clone(),
        library_version: densam::VERSION.to_string(),
        csv_sha256,
        summary_sha256,
        rows: rows.len(),
        cells_ok: rows.cells_ok(),
    };
    let sidecar_path = or_default(&cfg.output.sidecar, &a.out_dir, "sidecar.json");
    let mut text =
        serde_json::to_string_pretty(&sidecar).map_err(|e| Failure::input(e.to_string()))?;
    text.push('\n');
    outputs.push(OutputFile::write(&sidecar_path, text.as_bytes())?);

    let failed = rows.is_empty() || rows.cells_ok() == 0;
    let manifest = RunManifest {
        command: "sweep".into(),
        seeds: cfg.seeds.clone(),
        config: cfg,
        library_version: densam::VERSION.to_string(),
        wall_clock_seconds,
        cells: rows.len(),
        cells_ok: rows.cells_ok(),
        outputs,
        exit_status: if failed { EXIT_TOTAL_FAILURE } else { 0 },
    };
    manifest.write_atomic(&a.out_dir.join("manifest.json"))?;
    if failed {
        return Err(Failure {
            code: EXIT_TOTAL_FAILURE,
            message: format!("no cell succeeded ({} cells)", rows.len()),
        });
    }
    Ok(())
}
