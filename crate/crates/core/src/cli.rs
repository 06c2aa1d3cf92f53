//! The `llm-energy` command line.
//!
//! [`run`] parses arguments, executes one subcommand and writes the result
//! to the given streams. Exit codes: 0 on success, 1 on usage errors, 2 on
//! data errors (unreadable files, malformed inputs, failed fits).

use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::data;
use crate::error::{ConfigError, FitError, InvalidInput, TraceError};
use crate::estimator::{
    compare_models, fleet_extrapolate, led_equivalent_minutes, ComponentPowers, EnergyBreakdown,
    EnergySource, Estimator, WorkloadSpec, DEFAULT_LED_WATTS,
};
use crate::phase_model::{
    consistency_report, eval_decode_energy, eval_prefill_energy, fit_decode_energy,
    fit_decode_latency, fit_prefill_energy, fit_prefill_latency, synth_generate, PhaseCoefficients,
    SynthPlan, SynthSource,
};
use crate::roofline::HardwareProfile;
use crate::trace::{
    aggregate_decompositions, aggregate_records, decompose, decomposition_samples, histogram,
    parse_records, write_records, Bins, Component, IngestOptions, RunKind, RunRecord, SchemaMap,
    TraceFormat, TracePhase,
};
use crate::xformer::ModelSpec;

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
}

macro_rules! data_err {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Data(e.to_string())
            }
        }
    )*};
}
data_err!(
    ConfigError,
    FitError,
    InvalidInput,
    TraceError,
    std::io::Error,
    serde_json::Error
);

type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Table,
    Json,
    Delimited,
}

#[derive(Debug, Parser)]
#[command(
    name = "llm-energy",
    version,
    about = "Latency and energy estimates for transformer LLM inference",
    arg_required_else_help = true
)]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Table)]
    format: OutputFormat,
    /// Phase coefficient file (defaults to the bundled reference values).
    #[arg(long, global = true, value_name = "FILE")]
    coeffs: Option<PathBuf>,
    /// Hardware profile file (defaults to the bundled H100 FP32 profile).
    #[arg(long, global = true, value_name = "FILE")]
    hw: Option<PathBuf>,
    /// Model spec file or bundled model name; selects the analytic source.
    #[arg(long, global = true, value_name = "FILE|NAME")]
    model: Option<String>,
    /// Measurement trace file.
    #[arg(long, global = true, value_name = "FILE")]
    trace: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct TraceOpts {
    /// Trace format; guessed from the extension when omitted.
    #[arg(long, value_name = "delimited|line-json")]
    trace_format: Option<String>,
    /// Column renames, `external = "field"` per line.
    #[arg(long, value_name = "FILE")]
    schema: Option<PathBuf>,
    /// Runs to drop at the start of each (prompt, run kind) group.
    #[arg(long, default_value_t = 0)]
    drop_first: usize,
}

#[derive(Debug, Args)]
struct Interaction {
    /// Prompt tokens.
    #[arg(short = 's', long = "input-tokens")]
    s: Option<u64>,
    /// Decode tokens.
    #[arg(short = 'g', long = "output-tokens")]
    g: Option<u64>,
    /// Workload file with `[[entry]]` tables or a `[parametric]` table.
    #[arg(long, value_name = "FILE", conflicts_with_all = ["s", "g"])]
    workload: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Energy of one interaction or the mean over a workload.
    Predict {
        #[command(flatten)]
        at: Interaction,
        /// Host CPU power in W, for a per-component split.
        #[arg(long)]
        cpu_w: Option<f64>,
        /// Host RAM power in W, for a per-component split.
        #[arg(long)]
        ram_w: Option<f64>,
        /// Lamp power for the LED-minutes equivalent.
        #[arg(long, default_value_t = DEFAULT_LED_WATTS)]
        led_watts: f64,
    },
    /// Fit all four phase polynomials from a trace.
    Fit {
        #[command(flatten)]
        trace: TraceOpts,
        /// Energy component the energy fits use.
        #[arg(long, default_value = "gpu")]
        component: String,
        /// Write the fitted coefficients here.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Per-prompt phase decomposition of a trace.
    Decompose {
        #[command(flatten)]
        trace: TraceOpts,
    },
    /// Mean, deviation and range of energy per component.
    Stats {
        #[command(flatten)]
        trace: TraceOpts,
        /// prefill | decode | full
        #[arg(long, default_value = "full")]
        phase: String,
        #[arg(long, default_value_t = DEFAULT_LED_WATTS)]
        led_watts: f64,
    },
    /// Histogram of per-run energies.
    Hist {
        #[command(flatten)]
        trace: TraceOpts,
        /// prefill | decode | full
        #[arg(long, default_value = "full")]
        phase: String,
        /// gpu | cpu | ram | total
        #[arg(long, default_value = "gpu")]
        component: String,
        #[arg(long, default_value_t = 20, conflicts_with = "edges")]
        bins: usize,
        /// Explicit comma-separated bin edges.
        #[arg(long, value_delimiter = ',')]
        edges: Option<Vec<f64>>,
    },
    /// Analytic energy of several models on one workload.
    Compare {
        #[command(flatten)]
        at: Interaction,
        /// Model files or bundled names; defaults to the bundled Qwen family.
        #[arg(long = "models", value_delimiter = ',')]
        models: Vec<String>,
        /// Generation lengths of the size x length grid.
        #[arg(long, value_delimiter = ',', default_value = "16,32,64,128,256")]
        grid_g: Vec<u64>,
    },
    /// Scale a per-interaction energy to a fleet.
    Extrapolate {
        /// Energy per interaction in Wh; predicted from -s/-g when omitted.
        #[arg(long)]
        wh: Option<f64>,
        #[command(flatten)]
        at: Interaction,
        /// Interactions per day.
        #[arg(long)]
        per_day: f64,
    },
    /// Write a synthetic trace generated from the coefficients.
    Synth {
        /// Trace file to write.
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
        /// Also write the (s, g) plan as a workload file.
        #[arg(long, value_name = "FILE")]
        workload_out: Option<PathBuf>,
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "100,250,500,1000,2000,4000"
        )]
        s_values: Vec<u64>,
        #[arg(long, value_delimiter = ',', default_value = "16,32,64,128,256")]
        g_values: Vec<u64>,
        /// Runs of each kind per prompt.
        #[arg(long, default_value_t = 3)]
        runs: usize,
        /// Relative noise on every latency and energy.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_name = "delimited|line-json")]
        trace_format: Option<String>,
    },
}

/// One result table: a header row and cells.
#[derive(Debug, Clone)]
struct Table {
    name: String,
    header: Vec<String>,
    rows: Vec<Vec<Cell>>,
}

#[derive(Debug, Clone)]
enum Cell {
    Text(String),
    Int(u64),
    Num(f64),
}

impl Cell {
    fn table_text(&self) -> String {
        match self {
            Cell::Text(s) => s.clone(),
            Cell::Int(i) => i.to_string(),
            Cell::Num(v) => sig4(*v),
        }
    }

    fn full_text(&self) -> String {
        match self {
            Cell::Text(s) => s.clone(),
            Cell::Int(i) => i.to_string(),
            Cell::Num(v) => v.to_string(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Text(s) => json!(s),
            Cell::Int(i) => json!(i),
            Cell::Num(v) => json!(v),
        }
    }

    fn numeric(&self) -> bool {
        !matches!(self, Cell::Text(_))
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}
impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}
impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}
impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}
impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}
impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Text(v.to_string())
    }
}

macro_rules! row {
    ($($x:expr),* $(,)?) => { vec![$(Cell::from($x)),*] };
}

impl Table {
    fn new(name: &str, header: &[&str]) -> Self {
        Table {
            name: name.to_string(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

/// Four significant digits, fixed-point for moderate magnitudes.
fn sig4(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return v.to_string();
    }
    let mag = v.abs().log10().floor() as i32;
    if (-3..6).contains(&mag) {
        format!("{:.*}", (3 - mag).max(0) as usize, v)
    } else {
        format!("{v:.3e}")
    }
}

#[derive(Debug, Default)]
struct Report {
    tables: Vec<Table>,
    notes: Vec<String>,
}

impl Report {
    fn table(t: Table) -> Self {
        Report {
            tables: vec![t],
            notes: Vec::new(),
        }
    }

    fn render(
        &self,
        fmt: OutputFormat,
        out: &mut dyn Write,
        err: &mut dyn Write,
    ) -> std::io::Result<()> {
        match fmt {
            OutputFormat::Table => {
                let multi = self.tables.len() > 1;
                for (k, t) in self.tables.iter().enumerate() {
                    if k > 0 {
                        writeln!(out)?;
                    }
                    if multi {
                        writeln!(out, "[{}]", t.name)?;
                    }
                    let cells: Vec<Vec<String>> = t
                        .rows
                        .iter()
                        .map(|r| r.iter().map(Cell::table_text).collect())
                        .collect();
                    let widths: Vec<usize> = (0..t.header.len())
                        .map(|j| {
                            cells
                                .iter()
                                .map(|r| r[j].len())
                                .chain(std::iter::once(t.header[j].len()))
                                .max()
                                .unwrap_or(0)
                        })
                        .collect();
                    let numeric: Vec<bool> = (0..t.header.len())
                        .map(|j| !t.rows.is_empty() && t.rows.iter().all(|r| r[j].numeric()))
                        .collect();
                    let line = |vals: &[String]| {
                        vals.iter()
                            .enumerate()
                            .map(|(j, v)| {
                                if numeric[j] {
                                    format!("{v:>w$}", w = widths[j])
                                } else {
                                    format!("{v:<w$}", w = widths[j])
                                }
                            })
                            .collect::<Vec<_>>()
                            .join("  ")
                            .trim_end()
                            .to_string()
                    };
                    writeln!(out, "{}", line(&t.header))?;
                    for r in &cells {
                        writeln!(out, "{}", line(r))?;
                    }
                }
                for n in &self.notes {
                    writeln!(out, "note: {n}")?;
                }
            }
            OutputFormat::Delimited => {
                for (k, t) in self.tables.iter().enumerate() {
                    if k > 0 {
                        writeln!(out)?;
                    }
                    writeln!(out, "{}", t.header.join(","))?;
                    for r in &t.rows {
                        let vals: Vec<String> = r.iter().map(Cell::full_text).collect();
                        writeln!(out, "{}", vals.join(","))?;
                    }
                }
                for n in &self.notes {
                    writeln!(err, "note: {n}")?;
                }
            }
            OutputFormat::Json => {
                let mut obj = Map::new();
                for t in &self.tables {
                    let rows: Vec<Value> = t
                        .rows
                        .iter()
                        .map(|r| {
                            let m: Map<String, Value> = t
                                .header
                                .iter()
                                .cloned()
                                .zip(r.iter().map(Cell::json))
                                .collect();
                            Value::Object(m)
                        })
                        .collect();
                    obj.insert(t.name.clone(), Value::Array(rows));
                }
                obj.insert("notes".into(), json!(self.notes));
                writeln!(
                    out,
                    "{}",
                    serde_json::to_string_pretty(&Value::Object(obj))?
                )?;
            }
        }
        Ok(())
    }
}

/// Runs the command line `args` (including the program name) and returns
/// the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    0
                }
                _ => {
                    let _ = write!(err, "{}", e.render());
                    1
                }
            };
        }
    };
    let fmt = cli.format;
    match dispatch(&cli) {
        Ok(report) => match report.render(fmt, out, err) {
            Ok(()) => 0,
            Err(e) => {
                let _ = writeln!(err, "error: {e}");
                2
            }
        },
        Err(CliError::Usage(m)) => {
            let _ = writeln!(err, "error: {m}\n");
            let _ = write!(
                err,
                "{}",
                <Cli as clap::CommandFactory>::command().render_usage()
            );
            let _ = writeln!(err);
            1
        }
        Err(CliError::Data(m)) => {
            let _ = writeln!(err, "error: {m}");
            2
        }
    }
}

fn dispatch(cli: &Cli) -> CliResult<Report> {
    match &cli.command {
        Command::Predict {
            at,
            cpu_w,
            ram_w,
            led_watts,
        } => predict(cli, at, *cpu_w, *ram_w, *led_watts),
        Command::Fit {
            trace,
            component,
            out,
        } => fit(cli, trace, component, out.as_deref()),
        Command::Decompose { trace } => decompose_cmd(cli, trace),
        Command::Stats {
            trace,
            phase,
            led_watts,
        } => stats(cli, trace, phase, *led_watts),
        Command::Hist {
            trace,
            phase,
            component,
            bins,
            edges,
        } => hist(cli, trace, phase, component, *bins, edges.as_deref()),
        Command::Compare { at, models, grid_g } => compare(cli, at, models, grid_g),
        Command::Extrapolate { wh, at, per_day } => extrapolate(cli, *wh, at, *per_day),
        Command::Synth {
            out,
            workload_out,
            s_values,
            g_values,
            runs,
            noise,
            seed,
            trace_format,
        } => synth(
            cli,
            out,
            workload_out.as_deref(),
            s_values,
            g_values,
            *runs,
            *noise,
            *seed,
            trace_format.as_deref(),
        ),
    }
}

fn load_coeffs(cli: &Cli) -> CliResult<PhaseCoefficients> {
    Ok(match &cli.coeffs {
        Some(p) => PhaseCoefficients::from_kv_file(p)
            .map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?,
        None => PhaseCoefficients::reference(),
    })
}

fn load_hw(cli: &Cli) -> CliResult<HardwareProfile> {
    Ok(match &cli.hw {
        Some(p) => HardwareProfile::from_kv_file(p)
            .map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?,
        None => HardwareProfile::h100_sxm_fp32(),
    })
}

fn load_model(arg: &str) -> CliResult<ModelSpec> {
    let path = Path::new(arg);
    if path.exists() {
        return ModelSpec::from_kv_file(path).map_err(|e| CliError::Data(format!("{arg}: {e}")));
    }
    data::bundled_model(arg).ok_or_else(|| {
        let names: Vec<String> = data::bundled_models()
            .iter()
            .map(|m| m.name().to_string())
            .collect();
        CliError::Data(format!(
            "no model file `{arg}` and no bundled model of that name (bundled: {})",
            names.join(", ")
        ))
    })
}

fn source(cli: &Cli) -> CliResult<EnergySource> {
    match &cli.model {
        Some(m) => {
            if cli.coeffs.is_some() {
                return Err(CliError::Usage(
                    "--model selects the analytic source; drop --coeffs or --model".into(),
                ));
            }
            Ok(EnergySource::Analytic {
                model: load_model(m)?,
                hw: load_hw(cli)?,
            })
        }
        None => Ok(EnergySource::Fitted(load_coeffs(cli)?)),
    }
}

fn workload(at: &Interaction) -> CliResult<WorkloadSpec> {
    match (&at.workload, at.s, at.g) {
        (Some(p), _, _) => WorkloadSpec::from_kv_file(p)
            .map_err(|e| CliError::Data(format!("{}: {e}", p.display()))),
        (None, Some(s), Some(g)) => Ok(WorkloadSpec::single(s, g)),
        _ => Err(CliError::Usage("give -s and -g, or --workload FILE".into())),
    }
}

fn load_trace(cli: &Cli, opts: &TraceOpts) -> CliResult<(Vec<RunRecord>, Vec<String>)> {
    let path = cli
        .trace
        .as_ref()
        .ok_or_else(|| CliError::Usage("this command needs --trace FILE".into()))?;
    let format = match &opts.trace_format {
        Some(f) => f.parse::<TraceFormat>()?,
        None => TraceFormat::from_path(path),
    };
    let schema = match &opts.schema {
        Some(p) => SchemaMap::from_kv_str(&std::fs::read_to_string(p)?)?,
        None => SchemaMap::new(),
    };
    let file = File::open(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let parsed = parse_records(
        BufReader::new(file),
        format,
        &IngestOptions {
            schema,
            drop_first: opts.drop_first,
        },
    )?;
    let notes = parsed
        .errors
        .iter()
        .map(|e| format!("{}: skipped {e}", path.display()))
        .collect();
    Ok((parsed.records, notes))
}

fn parse_enum<T: std::str::FromStr<Err = String>>(s: &str) -> CliResult<T> {
    s.parse::<T>().map_err(CliError::Usage)
}

fn breakdown_table(name: &str, b: &EnergyBreakdown, led_watts: f64) -> CliResult<Table> {
    let mut t = Table::new(name, &["quantity", "value", "unit"]);
    t.push(row!["prefill_energy", b.prefill_wh, "Wh"]);
    t.push(row!["decode_energy", b.decode_wh, "Wh"]);
    t.push(row!["total_energy", b.total_wh, "Wh"]);
    t.push(row!["prefill_latency", b.prefill_s, "s"]);
    t.push(row!["decode_latency", b.decode_s, "s"]);
    if let Some(c) = &b.components {
        t.push(row!["gpu_energy", c.gpu_wh, "Wh"]);
        t.push(row!["cpu_energy", c.cpu_wh, "Wh"]);
        t.push(row!["ram_energy", c.ram_wh, "Wh"]);
        t.push(row!["all_components_energy", c.total(), "Wh"]);
    }
    let led = led_equivalent_minutes(b.total_wh.max(0.0), led_watts)?;
    t.push(row!["led_equivalent", led, "min"]);
    t.push(row!["source", b.provenance.to_string(), ""]);
    Ok(t)
}

fn predict(
    cli: &Cli,
    at: &Interaction,
    cpu_w: Option<f64>,
    ram_w: Option<f64>,
    led_watts: f64,
) -> CliResult<Report> {
    let wl = workload(at)?;
    let mut est = Estimator::new(source(cli)?);
    if cpu_w.is_some() || ram_w.is_some() {
        est = est.with_component_powers(ComponentPowers {
            cpu_w: cpu_w.unwrap_or(0.0),
            ram_w: ram_w.unwrap_or(0.0),
        });
    }
    let w = est.workload(&wl)?;
    let mut report = Report::table(breakdown_table("breakdown", &w.mean, led_watts)?);
    if w.rows.len() > 1 {
        let mut t = Table::new(
            "entries",
            &["s", "g", "weight", "prefill_wh", "decode_wh", "total_wh"],
        );
        for (e, b) in &w.rows {
            t.push(row![
                e.s,
                e.g,
                e.weight,
                b.prefill_wh,
                b.decode_wh,
                b.total_wh
            ]);
        }
        report.tables.push(t);
    }
    report.notes = w.mean.warnings.clone();
    Ok(report)
}

fn fit(cli: &Cli, opts: &TraceOpts, component: &str, out: Option<&Path>) -> CliResult<Report> {
    let component: Component = parse_enum(component)?;
    let (records, mut notes) = load_trace(cli, opts)?;
    let d = decompose(&records);
    for m in &d.missing {
        notes.push(format!("prompt {} has no {} runs", m.prompt_id, m.missing));
    }
    let samples = decomposition_samples(&d, |e| component.of(e));
    let pl = fit_prefill_latency(&samples)?;
    let dl = fit_decode_latency(&samples)?;
    let pe = fit_prefill_energy(&samples)?;
    let de = fit_decode_energy(&samples)?;
    let coeffs = PhaseCoefficients {
        prefill_latency: pl.coeffs,
        decode_latency: dl.coeffs,
        prefill_energy: pe.coeffs,
        decode_energy: de.coeffs,
    };
    if let Some(p) = out {
        std::fs::write(p, coeffs.to_kv_string())
            .map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?;
    }

    let mut ct = Table::new("coefficients", &["polynomial", "name", "value"]);
    let c = &coeffs;
    for (poly, name, v) in [
        ("prefill_latency", "alpha", c.prefill_latency.alpha),
        ("prefill_latency", "beta", c.prefill_latency.beta),
        ("prefill_latency", "gamma", c.prefill_latency.gamma),
        ("decode_latency", "eta", c.decode_latency.eta),
        ("decode_latency", "theta", c.decode_latency.theta),
        ("decode_latency", "phi", c.decode_latency.phi),
        ("decode_latency", "rho", c.decode_latency.rho),
        ("prefill_energy", "a", c.prefill_energy.a),
        ("prefill_energy", "b", c.prefill_energy.b),
        ("decode_energy", "c", c.decode_energy.c),
        ("decode_energy", "d", c.decode_energy.d),
        ("decode_energy", "g_intercept", c.decode_energy.g_intercept),
    ] {
        ct.push(row![poly, name, v]);
    }
    let mut qt = Table::new(
        "quality",
        &["polynomial", "samples", "r_squared", "condition", "valid"],
    );
    let n_prefill = samples.iter().filter(|x| x.g == 0).count();
    let n_decode = samples.len() - n_prefill;
    qt.push(row![
        "prefill_latency",
        n_prefill,
        pl.fit.r_squared,
        pl.fit.condition_estimate,
        pl.valid
    ]);
    qt.push(row![
        "decode_latency",
        n_decode,
        dl.fit.r_squared,
        dl.fit.condition_estimate,
        dl.valid
    ]);
    qt.push(row![
        "prefill_energy",
        n_prefill,
        pe.fit.r_squared,
        pe.fit.condition_estimate,
        pe.valid
    ]);
    qt.push(row![
        "decode_energy",
        n_decode,
        de.fit.r_squared,
        de.fit.condition_estimate,
        de.valid
    ]);

    let hw = load_hw(cli)?;
    let mut kt = Table::new(
        "consistency",
        &[
            "pair",
            "energy_coeff",
            "power_derived",
            "deviation",
            "flagged",
        ],
    );
    for p in &consistency_report(&coeffs, &hw).pairs {
        kt.push(row![
            p.pair.clone(),
            p.energy_coeff,
            p.power_derived,
            p.relative_deviation,
            p.flagged
        ]);
    }
    Ok(Report {
        tables: vec![ct, qt, kt],
        notes,
    })
}

fn decompose_cmd(cli: &Cli, opts: &TraceOpts) -> CliResult<Report> {
    let (records, mut notes) = load_trace(cli, opts)?;
    let d = decompose(&records);
    let mut t = Table::new(
        "prompts",
        &[
            "prompt_id",
            "input_tokens",
            "decode_tokens",
            "n_prefill_runs",
            "n_full_runs",
            "prefill_gpu_wh",
            "prefill_cpu_wh",
            "prefill_ram_wh",
            "decode_gpu_wh",
            "decode_cpu_wh",
            "decode_ram_wh",
            "prefill_latency_s",
            "decode_latency_s",
            "flags",
        ],
    );
    for p in &d.prompts {
        let flags: Vec<String> = p
            .flags
            .iter()
            .map(|f| {
                serde_json::to_value(f)
                    .ok()
                    .and_then(|v| v.as_str().map(String::from))
                    .unwrap_or_default()
            })
            .collect();
        t.push(row![
            p.prompt_id.clone(),
            p.input_tokens,
            p.decode_tokens,
            p.n_prefill_runs,
            p.n_full_runs,
            p.prefill.gpu,
            p.prefill.cpu,
            p.prefill.ram,
            p.decode.gpu,
            p.decode.cpu,
            p.decode.ram,
            p.prefill_latency_s,
            p.decode_latency_s,
            flags.join(";"),
        ]);
    }
    for m in &d.missing {
        notes.push(format!("prompt {} has no {} runs", m.prompt_id, m.missing));
    }
    Ok(Report {
        tables: vec![t],
        notes,
    })
}

fn phase_values(records: &[RunRecord], phase: TracePhase, component: Component) -> Vec<f64> {
    match phase {
        TracePhase::Prefill | TracePhase::Full => {
            let kind = if phase == TracePhase::Prefill {
                RunKind::PrefillOnly
            } else {
                RunKind::Full
            };
            records
                .iter()
                .filter(|r| r.run_kind == kind)
                .map(|r| component.of(&r.energy()))
                .collect()
        }
        TracePhase::Decode => decompose(records)
            .prompts
            .iter()
            .map(|p| component.of(&p.decode))
            .collect(),
    }
}

fn stats(cli: &Cli, opts: &TraceOpts, phase: &str, led_watts: f64) -> CliResult<Report> {
    let phase: TracePhase = parse_enum(phase)?;
    let (records, notes) = load_trace(cli, opts)?;
    let s = match phase {
        TracePhase::Prefill => aggregate_records(&records, RunKind::PrefillOnly)?,
        TracePhase::Full => aggregate_records(&records, RunKind::Full)?,
        TracePhase::Decode => aggregate_decompositions(&decompose(&records), TracePhase::Decode)?,
    };
    let mut t = Table::new(
        "stats",
        &[
            "component",
            "mean_wh",
            "std_wh",
            "count",
            "min_wh",
            "max_wh",
        ],
    );
    for (name, x) in [("gpu", &s.gpu), ("cpu", &s.cpu), ("ram", &s.ram)] {
        t.push(row![name, x.mean, x.std, x.count, x.min, x.max]);
    }
    let mut tt = Table::new("total", &["quantity", "value", "unit"]);
    tt.push(row!["total_mean", s.total_mean, "Wh"]);
    tt.push(row![
        "led_equivalent",
        led_equivalent_minutes(s.total_mean.max(0.0), led_watts)?,
        "min"
    ]);
    Ok(Report {
        tables: vec![t, tt],
        notes,
    })
}

fn hist(
    cli: &Cli,
    opts: &TraceOpts,
    phase: &str,
    component: &str,
    bins: usize,
    edges: Option<&[f64]>,
) -> CliResult<Report> {
    let phase: TracePhase = parse_enum(phase)?;
    let component: Component = parse_enum(component)?;
    let (records, mut notes) = load_trace(cli, opts)?;
    let values = phase_values(&records, phase, component);
    let spec = match edges {
        Some(e) => Bins::Edges(e.to_vec()),
        None => Bins::Count(bins),
    };
    let h = histogram(&values, &spec)?;
    let mut t = Table::new("histogram", &["bin_left_edge", "count"]);
    for (e, c) in h.edges.iter().zip(&h.counts) {
        t.push(row![*e, *c]);
    }
    notes.push(format!(
        "mean {} median {} right_skewed {}",
        h.mean, h.median, h.right_skewed
    ));
    Ok(Report {
        tables: vec![t],
        notes,
    })
}

fn compare(cli: &Cli, at: &Interaction, models: &[String], grid_g: &[u64]) -> CliResult<Report> {
    let wl = workload(at)?;
    let mut specs = models
        .iter()
        .map(|m| load_model(m))
        .collect::<CliResult<Vec<_>>>()?;
    if let Some(m) = &cli.model {
        specs.push(load_model(m)?);
    }
    if specs.is_empty() {
        specs = data::qwen_family();
    }
    let hw = load_hw(cli)?;
    let c = compare_models(&specs, &hw, &wl, grid_g)?;
    let mut t = Table::new(
        "models",
        &["name", "n_params", "mean_total_wh", "wh_per_token"],
    );
    for r in &c.rows {
        t.push(row![
            r.name.clone(),
            r.n_params,
            r.mean_total_wh,
            r.wh_per_token
        ]);
    }
    let mut gt = Table::new("grid", &["name", "n_params", "s", "g", "total_wh"]);
    for p in &c.grid {
        gt.push(row![p.name.clone(), p.n_params, p.s, p.g, p.total_wh]);
    }
    Ok(Report {
        tables: vec![t, gt],
        notes: Vec::new(),
    })
}

fn extrapolate(cli: &Cli, wh: Option<f64>, at: &Interaction, per_day: f64) -> CliResult<Report> {
    let (wh, notes) = match wh {
        Some(w) => (w, Vec::new()),
        None => {
            let w = Estimator::new(source(cli)?).workload(&workload(at)?)?;
            (w.mean.total_wh, w.mean.warnings)
        }
    };
    let f = fleet_extrapolate(wh, per_day)?;
    let mut t = Table::new("fleet", &["quantity", "value", "unit"]);
    t.push(row!["per_interaction", wh, "Wh"]);
    t.push(row!["interactions", per_day, "1/day"]);
    t.push(row!["daily", f.kwh_per_day, "kWh/day"]);
    t.push(row!["yearly", f.mwh_per_year, "MWh/yr"]);
    Ok(Report {
        tables: vec![t],
        notes,
    })
}

#[allow(clippy::too_many_arguments)]
fn synth(
    cli: &Cli,
    out: &Path,
    workload_out: Option<&Path>,
    s_values: &[u64],
    g_values: &[u64],
    runs: usize,
    noise: f64,
    seed: u64,
    trace_format: Option<&str>,
) -> CliResult<Report> {
    if runs == 0 || s_values.is_empty() || g_values.is_empty() {
        return Err(CliError::Usage(
            "need --runs >= 1 and nonempty s/g lists".into(),
        ));
    }
    if s_values.contains(&0) || g_values.contains(&0) {
        return Err(CliError::Usage("s and g values must be >= 1".into()));
    }
    if !(noise.is_finite() && noise >= 0.0) {
        return Err(CliError::Usage("--noise must be finite and >= 0".into()));
    }
    let coeffs = load_coeffs(cli)?;
    let src = SynthSource::from(coeffs);
    let format = match trace_format {
        Some(f) => f.parse::<TraceFormat>()?,
        None => TraceFormat::from_path(out),
    };

    // every prompt gets `runs` prefill-only and `runs` full generations;
    // a full run is its prompt's prefill plus an independent decode draw
    let plan = SynthPlan::grid(s_values, g_values);
    let mut prefill_plan = Vec::new();
    let mut decode_plan = Vec::new();
    for &(s, g) in &plan.points {
        for _ in 0..runs {
            prefill_plan.push((s, 0));
            decode_plan.push((s, 0));
            decode_plan.push((s, g));
        }
    }
    let prefill = synth_generate(
        &src,
        &SynthPlan {
            points: prefill_plan,
        },
        noise,
        seed,
    );
    let full_parts = synth_generate(
        &src,
        &SynthPlan {
            points: decode_plan,
        },
        noise,
        seed.wrapping_add(1),
    );

    let mut records = Vec::new();
    for (k, &(s, g)) in plan.points.iter().enumerate() {
        let id = format!("s{s}-g{g}");
        let base = RunRecord {
            prompt_id: id,
            run_kind: RunKind::PrefillOnly,
            input_tokens: s,
            output_tokens: 1,
            latency_s: 0.0,
            gpu_wh: 0.0,
            cpu_wh: 0.0,
            ram_wh: 0.0,
            model_id: "synthetic".into(),
            precision: "fp32".into(),
            batch: 1,
        };
        for r in 0..runs {
            let p = &prefill[k * runs + r];
            records.push(RunRecord {
                latency_s: p.t,
                gpu_wh: p.energy_wh.unwrap_or(0.0),
                ..base.clone()
            });
        }
        for r in 0..runs {
            let pp = &full_parts[2 * (k * runs + r)];
            let dd = &full_parts[2 * (k * runs + r) + 1];
            records.push(RunRecord {
                run_kind: RunKind::Full,
                output_tokens: g + 1,
                latency_s: pp.t + dd.t,
                gpu_wh: pp.energy_wh.unwrap_or(0.0) + dd.energy_wh.unwrap_or(0.0),
                ..base.clone()
            });
        }
    }
    if let Some(bad) = records.iter().find(|r| r.validate().is_err()) {
        return Err(CliError::Data(format!(
            "coefficients give an invalid run for prompt {}: {}",
            bad.prompt_id,
            bad.validate().unwrap_err()
        )));
    }
    let file = File::create(out).map_err(|e| CliError::Data(format!("{}: {e}", out.display())))?;
    write_records(&records, format, std::io::BufWriter::new(file))?;

    if let Some(p) = workload_out {
        let mut text = String::new();
        for &(s, g) in &plan.points {
            text += &format!("[[entry]]\ns = {s}\ng = {g}\n\n");
        }
        std::fs::write(p, text).map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?;
    }

    let mean_wh = plan
        .points
        .iter()
        .map(|&(s, g)| {
            eval_prefill_energy(&coeffs.prefill_energy, s)
                + eval_decode_energy(&coeffs.decode_energy, s, g).value
        })
        .sum::<f64>()
        / plan.points.len() as f64;
    let mut t = Table::new("synth", &["quantity", "value"]);
    t.push(row!["prompts", plan.points.len()]);
    t.push(row!["records", records.len()]);
    t.push(row!["mean_interaction_wh", mean_wh]);
    Ok(Report::table(t))
}
