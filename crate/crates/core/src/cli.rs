//! Command-line front end: configuration loading, CSV tables and run
//! manifests.
//!
//! A scenario is a flat JSON object whose keys are the fields of
//! [`ScenarioConfig`]; unknown keys are rejected. Command-line flags
//! override file keys. Every command writes its CSV files and a
//! `<command>.manifest.json` into the output directory.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::channel::ChannelKind;
use crate::error::{Error, Result};
use crate::montecarlo::{
    empirical_cdf, empirical_pdf, fit_quantile_targets, sweep_rho, sweep_snr, Execution, QuantileEntry, Receiver,
    Scenario, ScenarioConfig, TABLE1_LEVEL, TABLE1_TARGETS,
};
use crate::receivers::PowerSplit;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(
    name = "mimocap",
    version,
    about = "MIMO ZF/MMSE capacity under correlated Nakagami-m fading"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Ergodic capacity and quantile versus SNR
    SweepSnr(CommonArgs),
    /// Ergodic capacity versus correlation coefficient (both ends), at the first grid SNR
    SweepRho(CommonArgs),
    /// Capacity ECDF and histogram at the first grid SNR
    Cdf(CommonArgs),
    /// Search the SNR grid for the best match to the reference F(x)=0.8 capacity table
    Table1(CommonArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::SweepSnr(_) => "sweep-snr",
            Command::SweepRho(_) => "sweep-rho",
            Command::Cdf(_) => "cdf",
            Command::Table1(_) => "table1",
        }
    }

    pub fn args(&self) -> &CommonArgs {
        match self {
            Command::SweepSnr(a) | Command::SweepRho(a) | Command::Cdf(a) | Command::Table1(a) => a,
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Scenario file (JSON object)
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Take the scenario from a previous run's manifest
    #[arg(long, value_name = "PATH", conflicts_with = "config")]
    pub from_manifest: Option<PathBuf>,
    /// Output directory
    #[arg(long, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,
    /// Run trials on a single thread
    #[arg(long)]
    pub serial: bool,
    #[command(flatten)]
    pub overrides: Overrides,
}

/// Per-field overrides applied on top of the file configuration.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub nt: Option<usize>,
    #[arg(long)]
    pub nr: Option<usize>,
    #[arg(long)]
    pub m: Option<f64>,
    #[arg(long)]
    pub rho_tx: Option<f64>,
    #[arg(long)]
    pub rho_rx: Option<f64>,
    /// Comma-separated SNR grid in dB
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub snr_db: Option<Vec<f64>>,
    /// Comma-separated correlation grid
    #[arg(long, value_delimiter = ',')]
    pub rho_grid: Option<Vec<f64>>,
    #[arg(long, value_parser = parse_kind)]
    pub kind: Option<ChannelKind>,
    #[arg(long, value_parser = parse_power_split)]
    pub power_split: Option<PowerSplit>,
    #[arg(long)]
    pub cdf_level: Option<f64>,
}

fn parse_kind(s: &str) -> std::result::Result<ChannelKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_power_split(s: &str) -> std::result::Result<PowerSplit, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ScenarioConfig) {
        macro_rules! set {
            ($($field:ident),*) => {$(
                if let Some(v) = &self.$field {
                    cfg.$field = v.clone();
                }
            )*};
        }
        // A per-end flag refines a file-level shorthand rather than dropping it.
        if self.rho_tx.is_some() || self.rho_rx.is_some() {
            if let Some(rho) = cfg.rho.take() {
                cfg.rho_tx = rho;
                cfg.rho_rx = rho;
            }
        }
        set!(
            seed,
            trials,
            nt,
            nr,
            m,
            rho_tx,
            rho_rx,
            rho_grid,
            kind,
            power_split,
            cdf_level
        );
        if let Some(grid) = &self.snr_db {
            cfg.snr_db_grid = grid.clone();
        }
    }
}

/// Where a scenario comes from.
#[derive(Debug, Clone, Copy)]
pub enum ConfigSource<'a> {
    Defaults,
    Json(&'a str),
    File(&'a Path),
    Manifest(&'a Path),
}

/// Parses, overrides and validates a scenario. The returned config is
/// normalized and is what manifests echo.
pub fn parse_config(source: ConfigSource<'_>, overrides: &Overrides) -> Result<(ScenarioConfig, Vec<String>)> {
    load_config(source, overrides)?.normalized()
}

/// Parses and applies overrides without validating.
fn load_config(source: ConfigSource<'_>, overrides: &Overrides) -> Result<ScenarioConfig> {
    let mut cfg = match source {
        ConfigSource::Defaults => ScenarioConfig::default(),
        ConfigSource::Json(text) => parse_json(text)?,
        ConfigSource::File(path) => parse_json(&read(path)?)?,
        ConfigSource::Manifest(path) => {
            let manifest: RunManifest =
                serde_json::from_str(&read(path)?).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
            manifest.config
        }
    };
    overrides.apply(&mut cfg);
    Ok(cfg)
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn parse_json(text: &str) -> Result<ScenarioConfig> {
    if text.trim().is_empty() {
        return Ok(ScenarioConfig::default());
    }
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

/// Rejected-draw count for one grid point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridRejections {
    pub grid_point: f64,
    pub rejected_draws: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table1Summary {
    pub best_snr_db: f64,
    pub objective: f64,
    pub rows: Vec<Table1SummaryRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table1SummaryRow {
    pub row_id: u32,
    pub receiver: Receiver,
    pub nt: usize,
    pub nr: usize,
    pub quantile_p080: f64,
    pub target: f64,
    pub relative_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub seed: u64,
    pub config: ScenarioConfig,
    pub outputs: Vec<String>,
    pub rejected_draws: Vec<GridRejections>,
    pub warnings: Vec<String>,
    #[serde(default)]
    pub notes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table1: Option<Table1Summary>,
    pub wall_clock_seconds: f64,
}

/// Column name for the quantile at `level`, e.g. `quantile_p080` for 0.8.
pub fn quantile_header(level: f64) -> String {
    let pct = level * 100.0;
    if (pct - pct.round()).abs() < 1e-9 {
        format!("quantile_p{:03}", pct.round() as u32)
    } else {
        format!("quantile_p{}", level.to_string().replace('.', "_"))
    }
}

/// Newline-terminated CSV with shortest round-trip number formatting.
struct Csv {
    text: String,
}

impl Csv {
    fn new(header: &str) -> Self {
        Self {
            text: format!("{header}\n"),
        }
    }

    fn row(&mut self, fields: &[&dyn std::fmt::Display]) {
        for (i, f) in fields.iter().enumerate() {
            if i > 0 {
                self.text.push(',');
            }
            write!(self.text, "{f}").expect("writing to a String");
        }
        self.text.push('\n');
    }

    fn write(&self, dir: &Path, name: &str, outputs: &mut Vec<String>) -> Result<()> {
        fs::write(dir.join(name), &self.text)?;
        outputs.push(name.to_string());
        Ok(())
    }
}

pub const SWEEP_SNR_CSV: &str = "sweep-snr.csv";
pub const SWEEP_RHO_CSV: &str = "sweep-rho.csv";
pub const TABLE1_CSV: &str = "table1.csv";
pub const TABLE1_BEST_CSV: &str = "table1_best.csv";
pub const TABLE1_HEADER: &str = "candidate_snr_db,row_id,receiver,nt,nr,quantile_p080,target,relative_error";

pub fn cdf_csv_name(receiver: Receiver) -> String {
    format!("cdf_{receiver}.csv")
}

pub fn pdf_csv_name(receiver: Receiver) -> String {
    format!("pdf_{receiver}.csv")
}

pub fn manifest_name(command: &str) -> String {
    format!("{command}.manifest.json")
}

struct Run<'a> {
    command: &'a str,
    scenario: Scenario,
    out: &'a Path,
    started: Instant,
    outputs: Vec<String>,
    rejected: Vec<GridRejections>,
    notes: Vec<String>,
    table1: Option<Table1Summary>,
}

impl<'a> Run<'a> {
    fn new(command: &'a str, cfg: &ScenarioConfig, out: &'a Path, execution: Execution) -> Result<Self> {
        let scenario = Scenario::new(cfg)?.with_execution(execution);
        fs::create_dir_all(out)?;
        Ok(Self {
            command,
            scenario,
            out,
            started: Instant::now(),
            outputs: Vec::new(),
            rejected: Vec::new(),
            notes: Vec::new(),
            table1: None,
        })
    }

    fn finish(self, mut warnings: Vec<String>) -> Result<RunManifest> {
        warnings.extend(self.scenario.warnings().iter().cloned());
        warnings.dedup();
        let cfg = self.scenario.config().clone();
        let manifest = RunManifest {
            command: self.command.to_string(),
            tool_version: TOOL_VERSION.to_string(),
            seed: cfg.seed,
            config: cfg,
            outputs: self.outputs,
            rejected_draws: self.rejected,
            warnings,
            notes: self.notes,
            table1: self.table1,
            wall_clock_seconds: self.started.elapsed().as_secs_f64(),
        };
        let json = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Io(e.to_string()))?;
        fs::write(self.out.join(manifest_name(self.command)), json + "\n")?;
        Ok(manifest)
    }

    fn first_snr(&self) -> f64 {
        self.scenario.config().snr_db_grid[0]
    }
}

pub fn cmd_sweep_snr(cfg: &ScenarioConfig, out: &Path, execution: Execution) -> Result<RunManifest> {
    let mut run = Run::new("sweep-snr", cfg, out, execution)?;
    let rows = sweep_snr(&run.scenario)?;
    let level = run.scenario.config().cdf_level;
    let mut csv = Csv::new(&format!(
        "snr_db,receiver,ergodic_capacity_bps_hz,stderr,{}",
        quantile_header(level)
    ));
    for r in &rows {
        csv.row(&[&r.snr_db, &r.receiver, &r.ergodic_capacity, &r.stderr, &r.quantile]);
        if r.receiver == Receiver::Zf {
            run.rejected.push(GridRejections {
                grid_point: r.snr_db,
                rejected_draws: r.rejected_draws,
            });
        }
    }
    csv.write(out, SWEEP_SNR_CSV, &mut run.outputs)?;
    run.finish(Vec::new())
}

pub fn cmd_sweep_rho(cfg: &ScenarioConfig, out: &Path, execution: Execution) -> Result<RunManifest> {
    let mut run = Run::new("sweep-rho", cfg, out, execution)?;
    let snr_db = run.first_snr();
    run.notes
        .push(format!("correlation applied at both ends; SNR {snr_db} dB"));
    let rows = sweep_rho(&run.scenario, snr_db)?;
    let mut csv = Csv::new("rho,receiver,ergodic_capacity_bps_hz,stderr");
    for r in &rows {
        csv.row(&[&r.rho, &r.receiver, &r.ergodic_capacity, &r.stderr]);
        if r.receiver == Receiver::Zf {
            run.rejected.push(GridRejections {
                grid_point: r.rho,
                rejected_draws: r.rejected_draws,
            });
        }
    }
    csv.write(out, SWEEP_RHO_CSV, &mut run.outputs)?;
    run.finish(Vec::new())
}

pub fn cmd_cdf(cfg: &ScenarioConfig, out: &Path, execution: Execution) -> Result<RunManifest> {
    let mut run = Run::new("cdf", cfg, out, execution)?;
    let snr_db = run.first_snr();
    run.notes.push(format!("SNR {snr_db} dB"));
    let point = run
        .scenario
        .simulate_snr_points(&[snr_db])?
        .pop()
        .expect("one SNR point requested");
    let (points, bins) = (run.scenario.config().cdf_points, run.scenario.config().pdf_bins);
    for receiver in [Receiver::Zf, Receiver::Mmse] {
        let samples = point.samples(receiver);
        let mut csv = Csv::new("capacity_bps_hz,F");
        for (x, f) in empirical_cdf(samples, points)? {
            csv.row(&[&x, &f]);
        }
        csv.write(out, &cdf_csv_name(receiver), &mut run.outputs)?;
        let mut csv = Csv::new("bin_center_bps_hz,density");
        for (x, d) in empirical_pdf(samples, bins)? {
            csv.row(&[&x, &d]);
        }
        csv.write(out, &pdf_csv_name(receiver), &mut run.outputs)?;
    }
    run.rejected.push(GridRejections {
        grid_point: snr_db,
        rejected_draws: point.zf.rejected_draws,
    });
    run.finish(Vec::new())
}

fn table1_row(csv: &mut Csv, e: &QuantileEntry) {
    csv.row(&[
        &e.candidate_snr_db,
        &e.row_id,
        &e.receiver,
        &e.nt,
        &e.nr,
        &e.quantile,
        &e.target,
        &e.relative_error,
    ]);
}

pub fn cmd_table1(cfg: &ScenarioConfig, out: &Path, execution: Execution) -> Result<RunManifest> {
    let mut run = Run::new("table1", cfg, out, execution)?;
    let mut warnings = Vec::new();
    if cfg.nt != ScenarioConfig::default().nt || cfg.nr != ScenarioConfig::default().nr {
        warnings.push("nt/nr are ignored: each table row fixes its own antenna counts".to_string());
    }
    let fit = fit_quantile_targets(run.scenario.config(), &TABLE1_TARGETS, TABLE1_LEVEL, execution)?;
    let mut csv = Csv::new(TABLE1_HEADER);
    for e in &fit.candidates {
        table1_row(&mut csv, e);
    }
    csv.write(out, TABLE1_CSV, &mut run.outputs)?;
    let mut best = Csv::new(TABLE1_HEADER);
    for e in &fit.best {
        table1_row(&mut best, e);
    }
    best.write(out, TABLE1_BEST_CSV, &mut run.outputs)?;

    let grid = &run.scenario.config().snr_db_grid;
    let (lo, hi) = grid
        .iter()
        .fold((f64::MAX, f64::MIN), |(a, b), &x| (a.min(x), b.max(x)));
    if fit.best_snr_db == lo || fit.best_snr_db == hi {
        warnings.push(format!(
            "best-fit SNR {} dB lies on the edge of the search grid",
            fit.best_snr_db
        ));
    }
    run.notes.push(
        "the reference table does not state its operating SNR; it is recovered here as the grid SNR \
         minimizing the summed squared relative error, so absolute capacities are reported with their \
         relative errors and only 8x8/4x4 ratios are meaningful comparisons"
            .to_string(),
    );
    run.rejected.push(GridRejections {
        grid_point: fit.best_snr_db,
        rejected_draws: fit.rejected_draws,
    });
    run.table1 = Some(Table1Summary {
        best_snr_db: fit.best_snr_db,
        objective: fit.objective,
        rows: fit
            .best
            .iter()
            .map(|e| Table1SummaryRow {
                row_id: e.row_id,
                receiver: e.receiver,
                nt: e.nt,
                nr: e.nr,
                quantile_p080: e.quantile,
                target: e.target,
                relative_error: e.relative_error,
            })
            .collect(),
    });
    run.finish(warnings)
}

/// Loads the configuration for `command` and runs it.
pub fn run_command(command: &Command) -> Result<RunManifest> {
    let args = command.args();
    let source = match (&args.config, &args.from_manifest) {
        (Some(p), _) => ConfigSource::File(p),
        (None, Some(p)) => ConfigSource::Manifest(p),
        (None, None) => ConfigSource::Defaults,
    };
    // Validated up front so bad input fails before any output is written;
    // the commands normalize again and carry the warnings into the manifest.
    let cfg = load_config(source, &args.overrides)?;
    cfg.normalized()?;
    let execution = if args.serial {
        Execution::Serial
    } else {
        Execution::Parallel
    };
    let manifest = match command {
        Command::SweepSnr(_) => cmd_sweep_snr(&cfg, &args.out, execution),
        Command::SweepRho(_) => cmd_sweep_rho(&cfg, &args.out, execution),
        Command::Cdf(_) => cmd_cdf(&cfg, &args.out, execution),
        Command::Table1(_) => cmd_table1(&cfg, &args.out, execution),
    }?;
    Ok(manifest)
}

/// Process exit status for an error: 1 for bad input, 2 for runtime failures.
pub fn exit_code(err: &Error) -> i32 {
    if err.is_user_error() {
        1
    } else {
        2
    }
}
