//! Batch front end: `hawking <energy|solve|foliate|smallsphere|check> --config run.json`.
//!
//! Every command writes `<out>/<command>.json` and/or `<out>/<command>.csv`. JSON output is an
//! envelope carrying the tool version and config hashes around the result; CSV output starts
//! with a `#` line carrying the same. Exit codes: 0 ok, 2 configuration error, 3 numerical
//! failure.

pub mod check;
pub mod config;

#[cfg(test)]
mod tests;

use crate::background_geometry::{InitialDataSet, KFieldSpec, PresetSpec};
use crate::error::GeomError;
use crate::functionals::{hawking_energy, EnergyReport};
use crate::reduction_solver::{
    foliate_streaming, solve_critical, trace_row, CriticalSurfaceSolution, Guess, TRACE_CSV_HEADER,
};
use crate::smallsphere::{comparison_report, default_directions, SpacetimeCurvatureAtPoint};
use crate::surface::geodesic_sphere;
use clap::{Parser, Subcommand};
use config::{GridConfig, OutputFormat, RunConfig};
use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use std::ffi::OsString;
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const TOOL_NAME: &str = "hawking";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Random surfaces drawn by `check` for the rescaling identity.
const CHECK_SAMPLES: usize = 5;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl From<GeomError> for CliError {
    fn from(e: GeomError) -> Self {
        match e {
            GeomError::UnknownPreset(_) | GeomError::InvalidParams(_) => CliError::Config(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("cannot write {}: {e}", path.display()))
}

#[derive(Parser, Debug)]
#[command(name = TOOL_NAME, version, about = "Hawking energy, critical spheres and small-sphere expansions")]
struct Args {
    #[command(subcommand)]
    command: Command,
    /// Run configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<OutputFormat>,
    /// Quadrature grid as NθxNφ; overrides the config.
    #[arg(long, global = true)]
    grid: Option<String>,
    /// Seed for the randomized checks.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Hawking energy of geodesic spheres.
    Energy,
    /// Area-constrained critical spheres at independent radii.
    Solve,
    /// Continuation of critical spheres in r.
    Foliate,
    /// Geodesic spheres against light cuts.
    Smallsphere,
    /// Invariant suite.
    Check,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Energy => "energy",
            Command::Solve => "solve",
            Command::Foliate => "foliate",
            Command::Smallsphere => "smallsphere",
            Command::Check => "check",
        }
    }
}

#[derive(Serialize, Deserialize)]
pub struct Envelope<T> {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config_sha256: String,
    pub setup_sha256: String,
    /// `complete` or `partial`.
    pub status: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub result: T,
}

/// Leaves solved so far by an interrupted `foliate`.
#[derive(Serialize, Deserialize)]
pub struct PartialTrace {
    pub solutions: Vec<CriticalSurfaceSolution>,
}

struct Emitter {
    dir: PathBuf,
    format: OutputFormat,
    command: &'static str,
    config_sha256: String,
    setup_sha256: String,
}

impl Emitter {
    fn path(&self, ext: &str) -> PathBuf {
        self.dir.join(format!("{}.{ext}", self.command))
    }

    fn json<T: Serialize>(&self, result: &T, error: Option<&CliError>) -> Result<(), CliError> {
        if !self.format.json() {
            return Ok(());
        }
        let envelope = Envelope {
            tool: TOOL_NAME.into(),
            version: TOOL_VERSION.into(),
            command: self.command.into(),
            config_sha256: self.config_sha256.clone(),
            setup_sha256: self.setup_sha256.clone(),
            status: if error.is_some() { "partial" } else { "complete" }.into(),
            error: error.map(|e| e.to_string()),
            result,
        };
        let path = self.path("json");
        let mut text = serde_json::to_string_pretty(&envelope).map_err(|e| io_error(&path, e))?;
        text.push('\n');
        std::fs::write(&path, text).map_err(|e| io_error(&path, e))
    }

    /// CSV file with the provenance line already written.
    fn csv(&self) -> Result<Option<csv::Writer<File>>, CliError> {
        if !self.format.csv() {
            return Ok(None);
        }
        let path = self.path("csv");
        let mut file = File::create(&path).map_err(|e| io_error(&path, e))?;
        writeln!(
            file,
            "# tool={TOOL_NAME} version={TOOL_VERSION} command={} config_sha256={}",
            self.command, self.config_sha256
        )
        .map_err(|e| io_error(&path, e))?;
        Ok(Some(csv::Writer::from_writer(file)))
    }

    fn csv_rows(&self, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
        let path = self.path("csv");
        if let Some(mut w) = self.csv()? {
            w.write_record(header).map_err(|e| io_error(&path, e))?;
            for row in rows {
                w.write_record(row).map_err(|e| io_error(&path, e))?;
            }
            w.flush().map_err(|e| io_error(&path, e))?;
        }
        Ok(())
    }
}

fn num(v: f64) -> String {
    format!("{v:.17e}")
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&args) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("{TOOL_NAME}: {e}");
            e.exit_code()
        }
    }
}

fn effective_config(args: &Args) -> Result<Option<RunConfig>, CliError> {
    let mut config = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None if args.command == Command::Check => return Ok(None),
        None => return Err(CliError::Config("--config is required".into())),
    };
    if let Some(grid) = &args.grid {
        config.grid = GridConfig::parse(grid)?;
    }
    if let Some(format) = args.format {
        config.output.format = format;
    }
    if let Some(out) = &args.out {
        config.output.dir = Some(out.clone());
    }
    config.validate()?;
    Ok(Some(config))
}

fn execute(args: &Args) -> Result<(), CliError> {
    let config = effective_config(args)?;
    let config = match config {
        Some(c) => c,
        None => default_check_config(args)?,
    };
    let ds = config.data_set()?;
    let dir = config.output.dir.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir).map_err(|e| io_error(&dir, e))?;
    let emitter = Emitter {
        dir,
        format: config.output.format,
        command: args.command.name(),
        config_sha256: config.hash(),
        setup_sha256: config.setup_hash(),
    };
    match args.command {
        Command::Energy => cmd_energy(&config, &ds, &emitter),
        Command::Solve => cmd_solve(&config, &ds, &emitter),
        Command::Foliate => cmd_foliate(&config, &ds, &emitter),
        Command::Smallsphere => cmd_smallsphere(&config, &ds, &emitter),
        Command::Check => cmd_check(&config, &ds, &emitter, args.seed),
    }
}

/// `check` without a config runs on a conformal background with a non-constant `k`.
fn default_check_config(args: &Args) -> Result<RunConfig, CliError> {
    let k = Matrix3::new(0.2, 0.05, 0.0, 0.05, -0.1, 0.0, 0.0, 0.0, 0.1);
    let mut config = RunConfig {
        preset: PresetSpec::ConformalQuadratic { epsilon: 0.03, k: KFieldSpec::constant(k), chart_radius: 1.0 },
        point: [0.1, -0.05, 0.02],
        grid: GridConfig::default(),
        finite_difference_step: None,
        solver: Default::default(),
        energy: None,
        solve: None,
        foliate: None,
        smallsphere: None,
        output: Default::default(),
    };
    if let Some(grid) = &args.grid {
        config.grid = GridConfig::parse(grid)?;
    }
    config.output.format = args.format.unwrap_or_default();
    config.output.dir = args.out.clone();
    config.validate()?;
    Ok(config)
}

fn section<'a, T>(value: &'a Option<T>, name: &str) -> Result<&'a T, CliError> {
    value.as_ref().ok_or_else(|| CliError::Config(format!("config has no `{name}` section")))
}

#[derive(Serialize, Deserialize)]
pub struct EnergyRow {
    pub r: f64,
    #[serde(flatten)]
    pub report: EnergyReport,
}

const ENERGY_CSV_HEADER: [&str; 7] =
    ["r", "area", "willmore", "hawking_functional", "hawking_energy", "integral_h_sq", "integral_p_sq"];

fn cmd_energy(config: &RunConfig, ds: &InitialDataSet, out: &Emitter) -> Result<(), CliError> {
    let section = section(&config.energy, "energy")?;
    let grid = config.grid.build();
    let offset = Vector3::from(section.center_offset);
    let rows = section
        .radii
        .iter()
        .map(|&r| {
            let surface = geodesic_sphere(ds, &config.base_point(), &offset, r, &grid)?;
            Ok(EnergyRow { r, report: hawking_energy(&surface) })
        })
        .collect::<Result<Vec<_>, GeomError>>()?;
    out.json(&rows, None)?;
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|row| {
            let e = &row.report;
            [row.r, e.area, e.willmore_value, e.hawking_functional_value, e.hawking_energy, e.integral_h_sq, e.integral_p_sq]
                .map(num)
                .to_vec()
        })
        .collect();
    out.csv_rows(&ENERGY_CSV_HEADER, &table)
}

fn cmd_solve(config: &RunConfig, ds: &InitialDataSet, out: &Emitter) -> Result<(), CliError> {
    let section = section(&config.solve, "solve")?;
    let grid = config.grid.build();
    let p = config.base_point();
    let guess = Guess::leading_order(ds, &p)?;
    let options = config.solver.options();
    let mut solutions = vec![];
    let mut failure = None;
    for &r in &section.radii {
        match solve_critical(ds, &p, r, &guess, &options, &grid) {
            Ok(s) => solutions.push(s),
            Err(e) => {
                failure = Some(CliError::from(e));
                break;
            }
        }
    }
    out.json(&solutions, failure.as_ref())?;
    let rows: Vec<Vec<String>> = solutions.iter().map(|s| trace_row(s, None)).collect();
    out.csv_rows(&TRACE_CSV_HEADER, &rows)?;
    failure.map_or(Ok(()), Err)
}

fn load_resume(path: &Path, config: &RunConfig) -> Result<Vec<CriticalSurfaceSolution>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let envelope: Envelope<PartialTrace> =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    if envelope.setup_sha256 != config.setup_hash() {
        return Err(CliError::Config(format!(
            "{} was produced with a different preset, point, grid or solver setting",
            path.display()
        )));
    }
    Ok(envelope.result.solutions)
}

fn cmd_foliate(config: &RunConfig, ds: &InitialDataSet, out: &Emitter) -> Result<(), CliError> {
    let section = section(&config.foliate, "foliate")?;
    let start = match &section.resume_from {
        Some(path) => load_resume(path, config)?,
        None => vec![],
    };
    let grid = config.grid.build();
    let csv_path = out.path("csv");
    let mut stream = out.csv()?;
    let mut stream_error = None;
    let mut leaves = start.clone();
    if let Some(w) = stream.as_mut() {
        let written = w
            .write_record(TRACE_CSV_HEADER)
            .and_then(|_| start.iter().try_for_each(|s| w.write_record(trace_row(s, None))))
            .and_then(|_| w.flush().map_err(csv::Error::from));
        written.map_err(|e| io_error(&csv_path, e))?;
    }
    let result = foliate_streaming(
        ds,
        &config.base_point(),
        (section.r_min, section.r_max),
        section.steps,
        &config.solver.options(),
        &grid,
        (!start.is_empty()).then_some(start),
        |leaf| {
            leaves.push(leaf.clone());
            if let Some(w) = stream.as_mut() {
                if let Err(e) = w.write_record(trace_row(leaf, None)).and_then(|_| w.flush().map_err(csv::Error::from)) {
                    stream_error.get_or_insert(e);
                }
            }
        },
    );
    drop(stream);
    if let Some(e) = stream_error {
        return Err(io_error(&csv_path, e));
    }
    match result {
        Ok(trace) => {
            out.json(&trace, None)?;
            if let Some(w) = out.csv()? {
                let mut w = w.into_inner().map_err(|e| io_error(&csv_path, e.error()))?;
                trace.write_csv(&mut w).map_err(|e| io_error(&csv_path, e))?;
            }
            Ok(())
        }
        Err(e) => {
            let err = CliError::from(e);
            out.json(&PartialTrace { solutions: leaves }, Some(&err))?;
            Err(err)
        }
    }
}

fn cmd_smallsphere(config: &RunConfig, ds: &InitialDataSet, out: &Emitter) -> Result<(), CliError> {
    let section = section(&config.smallsphere, "smallsphere")?;
    let electric = Matrix3::from_fn(|i, j| section.electric[i][j]);
    let stc = SpacetimeCurvatureAtPoint::from_data_set(ds, &config.base_point(), &electric)?;
    let directions = match &section.directions {
        Some(list) => list.iter().map(|d| Vector3::from(*d).normalize()).collect(),
        None => default_directions(),
    };
    let report = comparison_report(&stc, &section.l_values, &directions);
    for row in &report.rows {
        if let Some(w) = &row.warning {
            eprintln!("{TOOL_NAME}: warning: l = {}: {w}", row.l);
        }
    }
    out.json(&report, None)?;
    if let Some(w) = out.csv()? {
        let path = out.path("csv");
        let mut file = w.into_inner().map_err(|e| io_error(&path, e.error()))?;
        report.write_csv(&mut file).map_err(|e| io_error(&path, e))?;
    }
    Ok(())
}

fn cmd_check(config: &RunConfig, ds: &InitialDataSet, out: &Emitter, seed: u64) -> Result<(), CliError> {
    let grid = config.grid.build();
    let outcomes = check::run_checks(ds, &config.base_point(), &grid, seed, CHECK_SAMPLES)?;
    for o in &outcomes {
        eprintln!("{} {} ({:.3e} <= {:.1e})", if o.passed { "PASS" } else { "FAIL" }, o.name, o.value, o.threshold);
    }
    let failed: Vec<&str> = outcomes.iter().filter(|o| !o.passed).map(|o| o.name.as_str()).collect();
    let error = (!failed.is_empty()).then(|| CliError::Numerical(format!("checks failed: {}", failed.join(", "))));
    out.json(&outcomes, error.as_ref())?;
    let rows: Vec<Vec<String>> = outcomes
        .iter()
        .map(|o| vec![o.name.clone(), o.passed.to_string(), num(o.value), num(o.threshold)])
        .collect();
    out.csv_rows(&["check", "passed", "value", "threshold"], &rows)?;
    error.map_or(Ok(()), Err)
}
