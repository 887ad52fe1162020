//! Commands behind the `capflow` binary: run one config, check one config,
//! or sweep a config template over a grid of overrides.
//!
//! Every command writes plain files (CSV and JSON) and returns an exit code.
//! Nothing here depends on the environment except [`resolve_output_dir`].

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use capflow::classify::ClassificationResult;
use capflow::monitors::{TheoremBounds, Violation};
use capflow::scenarios::{self, ValidationReport};
use capflow::{parse_config, ConfigError, Ledger, LedgerRow, Profile, SimConfig, Status, Verdict};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 1;
pub const EXIT_GUARDED: u8 = 2;

/// Environment variable that replaces `output.dir` of every config.
pub const OUT_ENV: &str = "CAPFLOW_OUT";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Config {
        path: PathBuf,
        #[source]
        source: ConfigError,
    },
    #[error("grid: {0}")]
    Grid(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    fn io(path: &Path, source: io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn exit_code(&self) -> u8 {
        EXIT_CONFIG
    }
}

pub fn exit_code(status: Status) -> u8 {
    if status.is_guarded_stop() {
        EXIT_GUARDED
    } else {
        EXIT_OK
    }
}

pub fn load_config(path: &Path) -> Result<SimConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_config(&text).map_err(|source| CliError::Config {
        path: path.to_path_buf(),
        source,
    })
}

/// `env` when set and non-empty, else the configured directory.
pub fn resolve_output_dir(configured: &Path, env: Option<std::ffi::OsString>) -> PathBuf {
    match env {
        Some(dir) if !dir.is_empty() => PathBuf::from(dir),
        _ => configured.to_path_buf(),
    }
}

/// Contents of `summary.json`.
#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub status: Status,
    pub exit_code: u8,
    pub verdict: Verdict,
    pub t_final: f64,
    pub steps: usize,
    pub classification: ClassificationResult,
    pub bounds: TheoremBounds,
    pub violations: Vec<Violation>,
    /// Seconds; the only field that differs between identical runs.
    pub wall_time: f64,
    /// File name of the final profile, relative to the run directory.
    pub final_profile: String,
    pub config: SimConfig,
    /// The same config as TOML, accepted by `simulate --config` as is.
    pub config_toml: String,
}

pub fn profile_file_name(step: usize) -> String {
    format!("profile_{step:04}.csv")
}

/// Two columns `z, rho`, 17 significant digits.
pub fn write_profile(path: &Path, p: &Profile) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["z", "rho"])?;
    for (z, r) in p.grid().nodes().zip(p.rho()) {
        w.write_record([format!("{z:.16e}"), format!("{r:.16e}")])?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn read_profile(path: &Path, n: u32) -> Result<Profile, CliError> {
    let mut r = csv::Reader::from_path(path)?;
    let mut z = Vec::new();
    let mut rho = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let parse = |i: usize| -> Result<f64, CliError> {
            rec.get(i)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| CliError::Grid(format!("{}: bad profile row", path.display())))
        };
        z.push(parse(0)?);
        rho.push(parse(1)?);
    }
    let d = z.last().copied().unwrap_or(0.0);
    let grid = capflow::Grid::new(d, rho.len())
        .map_err(|e| CliError::Grid(format!("{}: {e}", path.display())))?;
    Profile::new(grid, n, rho).map_err(|e| CliError::Grid(format!("{}: {e}", path.display())))
}

pub fn write_timeseries(path: &Path, ledger: &Ledger) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(LedgerRow::COLUMNS)?;
    for row in ledger.rows() {
        w.write_record(row.values().iter().map(|x| format!("{x:.16e}")))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Runs `cfg` and writes its outputs into `dir`.
pub fn simulate(cfg: &SimConfig, dir: &Path) -> Result<Summary, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let p0 = scenarios::build(&cfg.scenario).map_err(|e| CliError::Config {
        path: dir.to_path_buf(),
        source: e.into(),
    })?;
    let every = cfg.output.snapshots_every;
    let mut write_err = None;
    let start = Instant::now();
    let out = capflow::run_profile(p0, cfg.law, &cfg.stepper, &cfg.tolerances, |step, _, p| {
        if every > 0 && step % every == 0 && write_err.is_none() {
            if let Err(e) = write_profile(&dir.join(profile_file_name(step)), p) {
                write_err = Some(e);
            }
        }
    });
    let wall_time = start.elapsed().as_secs_f64();
    if let Some(e) = write_err {
        return Err(e);
    }

    write_profile(&dir.join(profile_file_name(0)), &out.initial)?;
    let final_profile = profile_file_name(out.steps);
    write_profile(&dir.join(&final_profile), &out.outcome.profile)?;
    if cfg.output.csv {
        write_timeseries(&dir.join("timeseries.csv"), &out.ledger)?;
    }

    let status = out.outcome.status;
    let summary = Summary {
        status,
        exit_code: exit_code(status),
        verdict: out.classification.verdict,
        t_final: out.outcome.t,
        steps: out.steps,
        classification: out.classification,
        bounds: out.bounds,
        violations: out.ledger.violations().to_vec(),
        wall_time,
        final_profile,
        config: cfg.clone(),
        config_toml: cfg.to_toml(),
    };
    if cfg.output.json_summary {
        let path = dir.join("summary.json");
        let f = File::create(&path).map_err(|e| CliError::io(&path, e))?;
        let mut w = BufWriter::new(f);
        serde_json::to_writer_pretty(&mut w, &summary)?;
        writeln!(w).and_then(|_| w.flush()).map_err(|e| CliError::io(&path, e))?;
    }
    Ok(summary)
}

pub fn validate(cfg: &SimConfig) -> Result<ValidationReport, ConfigError> {
    let p = scenarios::build(&cfg.scenario)?;
    Ok(scenarios::validate(&p))
}

/// Ordered override keys and the values each one takes.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    axes: Vec<(String, Vec<toml::Value>)>,
}

impl SweepGrid {
    /// A TOML table of dotted config paths to arrays, e.g.
    /// `"scenario.epsilon" = [0.01, 0.02]`.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let table: toml::Table = text.parse().map_err(|e| CliError::Grid(format!("{e}")))?;
        let mut axes = Vec::new();
        for (key, value) in table {
            match value {
                toml::Value::Array(values) if !values.is_empty() => axes.push((key, values)),
                _ => {
                    return Err(CliError::Grid(format!(
                        "`{key}` must map to a non-empty array"
                    )))
                }
            }
        }
        if axes.is_empty() {
            return Err(CliError::Grid("no parameters to sweep".into()));
        }
        Ok(Self { axes })
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.axes.iter().map(|(k, _)| k.as_str())
    }

    /// Cartesian product over keys in sorted order, last key varying fastest.
    pub fn points(&self) -> Vec<Vec<&toml::Value>> {
        let mut points: Vec<Vec<&toml::Value>> = vec![Vec::new()];
        for (_, values) in &self.axes {
            points = points
                .into_iter()
                .flat_map(|prefix| {
                    values.iter().map(move |v| {
                        let mut p = prefix.clone();
                        p.push(v);
                        p
                    })
                })
                .collect();
        }
        points
    }
}

fn set_path(table: &mut toml::Table, path: &str, value: toml::Value) -> Result<(), CliError> {
    let mut parts = path.split('.').peekable();
    let mut cur = table;
    while let Some(part) = parts.next() {
        if parts.peek().is_none() {
            cur.insert(part.to_string(), value);
            return Ok(());
        }
        cur = cur
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| CliError::Grid(format!("`{path}`: `{part}` is not a table")))?;
    }
    Err(CliError::Grid("empty parameter path".into()))
}

/// Template config text with every `(key, value)` applied.
pub fn apply_overrides(template: &str, overrides: &[(&str, &toml::Value)]) -> Result<String, CliError> {
    let mut table: toml::Table = template.parse().map_err(|e| CliError::Grid(format!("{e}")))?;
    for (key, value) in overrides {
        set_path(&mut table, key, (*value).clone())?;
    }
    Ok(toml::to_string(&table).expect("table serializes"))
}

#[derive(Debug, Clone)]
pub struct SweepRun {
    pub index: usize,
    pub dir: PathBuf,
    pub overrides: Vec<String>,
    pub outcome: Result<Summary, String>,
}

impl SweepRun {
    pub fn exit_code(&self) -> u8 {
        match &self.outcome {
            Ok(s) => s.exit_code,
            Err(_) => EXIT_CONFIG,
        }
    }
}

pub fn run_dir_name(index: usize) -> String {
    format!("run_{index:04}")
}

/// Runs the template once per grid point, each in `base/run_XXXX`, and
/// writes `base/sweep.csv`. All configs are checked before any run starts.
pub fn sweep(template: &str, grid: &SweepGrid, base: &Path) -> Result<Vec<SweepRun>, CliError> {
    let keys: Vec<&str> = grid.keys().collect();
    let mut jobs = Vec::new();
    for (index, point) in grid.points().into_iter().enumerate() {
        let overrides: Vec<(&str, &toml::Value)> = keys.iter().copied().zip(point).collect();
        let text = apply_overrides(template, &overrides)?;
        let dir = base.join(run_dir_name(index));
        let mut cfg = parse_config(&text).map_err(|source| CliError::Config {
            path: dir.clone(),
            source,
        })?;
        cfg.output.dir = dir.clone();
        let shown = overrides.iter().map(|(_, v)| v.to_string()).collect();
        jobs.push((index, dir, shown, cfg));
    }
    fs::create_dir_all(base).map_err(|e| CliError::io(base, e))?;

    let runs: Vec<SweepRun> = jobs
        .into_par_iter()
        .map(|(index, dir, overrides, cfg)| SweepRun {
            index,
            outcome: simulate(&cfg, &dir).map_err(|e| e.to_string()),
            dir,
            overrides,
        })
        .collect();

    let mut w = csv::Writer::from_path(base.join("sweep.csv"))?;
    let mut header = vec!["run".to_string()];
    header.extend(keys.iter().map(|k| k.to_string()));
    header.extend(
        ["status", "verdict", "limit_radius", "predicted_radius", "H_spread", "violations", "exit_code"]
            .map(String::from),
    );
    w.write_record(&header)?;
    for run in &runs {
        let mut rec = vec![run_dir_name(run.index)];
        rec.extend(run.overrides.iter().cloned());
        match &run.outcome {
            Ok(s) => rec.extend([
                format!("{:?}", s.status),
                format!("{:?}", s.verdict),
                s.classification
                    .limit_radius
                    .map_or_else(String::new, |r| format!("{r:.16e}")),
                format!("{:.16e}", s.classification.predicted_radius),
                format!("{:.16e}", s.classification.h_spread),
                s.violations.len().to_string(),
                s.exit_code.to_string(),
            ]),
            Err(e) => rec.extend([
                format!("Error: {e}"),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                EXIT_CONFIG.to_string(),
            ]),
        }
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| CliError::io(base, e))?;
    Ok(runs)
}

/// Worst exit code over a sweep: config errors, then guarded stops.
pub fn sweep_exit_code(runs: &[SweepRun]) -> u8 {
    let codes: Vec<u8> = runs.iter().map(SweepRun::exit_code).collect();
    if codes.contains(&EXIT_CONFIG) {
        EXIT_CONFIG
    } else {
        codes.into_iter().max().unwrap_or(EXIT_OK)
    }
}
