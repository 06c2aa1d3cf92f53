//! Measurement traces: ingestion, phase decomposition and statistics.
//!
//! A trace is a sequence of [`RunRecord`]s, one per measured generation.
//! Two on-disk formats carry the same fields under the same names:
//!
//! - `delimited`: comma-separated UTF-8 with a header row;
//! - `line-json`: one JSON object per line.
//!
//! External traces with different column names can be read through a
//! [`SchemaMap`].

mod decompose;
mod stats;

pub use decompose::{
    decompose, decomposition_samples, records_to_samples, samples_to_records, ComponentEnergy,
    Decomposition, DecompositionFlag, MissingKind, PromptDecomposition,
};
pub use stats::{
    aggregate_decompositions, aggregate_records, histogram, write_histogram, Bins, Component,
    EnergyStats, Histogram, Summary, TracePhase,
};

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, InvalidInput, LineError, TraceError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunKind {
    /// Generation constrained to a single output token.
    #[serde(alias = "prefill-only", alias = "PrefillOnly", alias = "prefill")]
    PrefillOnly,
    #[serde(alias = "Full")]
    Full,
}

impl fmt::Display for RunKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RunKind::PrefillOnly => "prefill_only",
            RunKind::Full => "full",
        })
    }
}

impl FromStr for RunKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "prefill_only" | "prefill-only" | "PrefillOnly" | "prefill" => Ok(RunKind::PrefillOnly),
            "full" | "Full" => Ok(RunKind::Full),
            other => Err(format!("unknown run_kind `{other}`")),
        }
    }
}

/// One measured generation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunRecord {
    pub prompt_id: String,
    pub run_kind: RunKind,
    pub input_tokens: u64,
    pub output_tokens: u64,
    pub latency_s: f64,
    pub gpu_wh: f64,
    pub cpu_wh: f64,
    pub ram_wh: f64,
    pub model_id: String,
    pub precision: String,
    pub batch: u64,
}

/// Column names, in on-disk order.
pub const FIELDS: [&str; 11] = [
    "prompt_id",
    "run_kind",
    "input_tokens",
    "output_tokens",
    "latency_s",
    "gpu_wh",
    "cpu_wh",
    "ram_wh",
    "model_id",
    "precision",
    "batch",
];

impl RunRecord {
    pub fn validate(&self) -> Result<(), InvalidInput> {
        if self.input_tokens < 1 {
            return Err(InvalidInput::field("input_tokens", "must be >= 1"));
        }
        if self.output_tokens < 1 {
            return Err(InvalidInput::field("output_tokens", "must be >= 1"));
        }
        if self.run_kind == RunKind::PrefillOnly && self.output_tokens != 1 {
            return Err(InvalidInput::field(
                "output_tokens",
                format!(
                    "prefill_only runs produce exactly 1 token, got {}",
                    self.output_tokens
                ),
            ));
        }
        if !(self.latency_s.is_finite() && self.latency_s > 0.0) {
            return Err(InvalidInput::field("latency_s", "must be finite and > 0"));
        }
        for (field, v) in [
            ("gpu_wh", self.gpu_wh),
            ("cpu_wh", self.cpu_wh),
            ("ram_wh", self.ram_wh),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(InvalidInput::field(
                    field,
                    format!("must be finite and >= 0, got {v}"),
                ));
            }
        }
        Ok(())
    }

    pub fn energy(&self) -> ComponentEnergy {
        ComponentEnergy {
            gpu: self.gpu_wh,
            cpu: self.cpu_wh,
            ram: self.ram_wh,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceFormat {
    Delimited,
    LineJson,
}

impl FromStr for TraceFormat {
    type Err = TraceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "delimited" | "csv" => Ok(TraceFormat::Delimited),
            "line-json" | "jsonl" | "ndjson" => Ok(TraceFormat::LineJson),
            other => Err(TraceError::UnknownFormat(other.to_string())),
        }
    }
}

impl TraceFormat {
    /// Guesses from a file extension, defaulting to delimited.
    pub fn from_path(path: &std::path::Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("ndjson") | Some("json") => TraceFormat::LineJson,
            _ => TraceFormat::Delimited,
        }
    }
}

/// Renames external column names to [`RunRecord`] field names.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SchemaMap {
    aliases: HashMap<String, String>,
}

impl SchemaMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn alias(mut self, external: impl Into<String>, field: &str) -> Result<Self, InvalidInput> {
        if !FIELDS.contains(&field) {
            return Err(InvalidInput::field(
                "schema",
                format!("unknown field `{field}`"),
            ));
        }
        self.aliases.insert(external.into(), field.to_string());
        Ok(self)
    }

    /// Parses `external_name = "field_name"` lines.
    pub fn from_kv_str(text: &str) -> Result<Self, ConfigError> {
        let table: HashMap<String, String> = toml::from_str(text)?;
        let mut map = SchemaMap::new();
        for (k, v) in table {
            map = map.alias(k, &v)?;
        }
        Ok(map)
    }

    fn resolve<'a>(&'a self, name: &'a str) -> &'a str {
        self.aliases.get(name).map(String::as_str).unwrap_or(name)
    }
}

#[derive(Debug, Clone, Default)]
pub struct IngestOptions {
    pub schema: SchemaMap,
    /// Runs to discard at the start of every (prompt, run kind) group, for
    /// traces that still contain warmup runs.
    pub drop_first: usize,
}

/// Records parsed from a stream plus every malformed line.
#[derive(Debug, Clone, Default)]
pub struct ParsedTrace {
    pub records: Vec<RunRecord>,
    pub errors: Vec<LineError>,
}

pub fn parse_records<R: BufRead>(
    reader: R,
    format: TraceFormat,
    options: &IngestOptions,
) -> Result<ParsedTrace, TraceError> {
    let mut parsed = match format {
        TraceFormat::Delimited => parse_delimited(reader, &options.schema)?,
        TraceFormat::LineJson => parse_line_json(reader, &options.schema)?,
    };
    if options.drop_first > 0 {
        parsed.records = drop_first_runs(parsed.records, options.drop_first);
    }
    Ok(parsed)
}

/// Parses a trace held in memory.
pub fn parse_str(
    text: &str,
    format: TraceFormat,
    options: &IngestOptions,
) -> Result<ParsedTrace, TraceError> {
    parse_records(text.as_bytes(), format, options)
}

fn drop_first_runs(records: Vec<RunRecord>, k: usize) -> Vec<RunRecord> {
    let mut seen: HashMap<(String, RunKind), usize> = HashMap::new();
    records
        .into_iter()
        .filter(|r| {
            let n = seen.entry((r.prompt_id.clone(), r.run_kind)).or_insert(0);
            *n += 1;
            *n > k
        })
        .collect()
}

fn parse_delimited<R: BufRead>(reader: R, schema: &SchemaMap) -> Result<ParsedTrace, TraceError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut rows = rdr.records();

    let header = match rows.next() {
        None => return Err(TraceError::EmptyInput),
        Some(Err(e)) => return Err(TraceError::Io(std::io::Error::other(e.to_string()))),
        Some(Ok(h)) => h,
    };
    let names: Vec<&str> = header.iter().map(|h| schema.resolve(h)).collect();
    let columns: Vec<Option<usize>> = FIELDS
        .iter()
        .map(|f| names.iter().position(|n| n == f))
        .collect();

    let mut out = ParsedTrace::default();
    let missing: Vec<&str> = FIELDS
        .iter()
        .zip(&columns)
        .filter(|(_, c)| c.is_none())
        .map(|(f, _)| *f)
        .collect();

    let mut saw_row = false;
    for row in rows {
        saw_row = true;
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
                out.errors.push(LineError {
                    line,
                    message: e.to_string(),
                });
                continue;
            }
        };
        let line = row.position().map(|p| p.line() as usize).unwrap_or(0);
        if row.len() == 1 && row.get(0) == Some("") {
            continue;
        }
        if !missing.is_empty() {
            out.errors.push(LineError {
                line,
                message: format!("header lacks column(s): {}", missing.join(", ")),
            });
            continue;
        }
        if row.len() != header.len() {
            out.errors.push(LineError {
                line,
                message: format!("expected {} fields, found {}", header.len(), row.len()),
            });
            continue;
        }
        let get = |i: usize| row.get(columns[i].expect("checked above")).unwrap_or("");
        match record_from_fields(get) {
            Ok(r) => out.records.push(r),
            Err(message) => out.errors.push(LineError { line, message }),
        }
    }
    if !saw_row {
        return Err(TraceError::EmptyInput);
    }
    Ok(out)
}

fn record_from_fields<'a>(get: impl Fn(usize) -> &'a str) -> Result<RunRecord, String> {
    fn num<T: FromStr>(name: &str, v: &str) -> Result<T, String> {
        v.parse::<T>()
            .map_err(|_| format!("{name}: cannot parse `{v}`"))
    }
    let record = RunRecord {
        prompt_id: get(0).to_string(),
        run_kind: get(1).parse()?,
        input_tokens: num("input_tokens", get(2))?,
        output_tokens: num("output_tokens", get(3))?,
        latency_s: num("latency_s", get(4))?,
        gpu_wh: num("gpu_wh", get(5))?,
        cpu_wh: num("cpu_wh", get(6))?,
        ram_wh: num("ram_wh", get(7))?,
        model_id: get(8).to_string(),
        precision: get(9).to_string(),
        batch: num("batch", get(10))?,
    };
    if record.prompt_id.is_empty() {
        return Err("prompt_id: empty".into());
    }
    record.validate().map_err(|e| e.to_string())?;
    Ok(record)
}

fn parse_line_json<R: BufRead>(reader: R, schema: &SchemaMap) -> Result<ParsedTrace, TraceError> {
    let mut out = ParsedTrace::default();
    let mut saw_line = false;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        saw_line = true;
        let parsed = serde_json::from_str::<serde_json::Map<String, serde_json::Value>>(&line)
            .map_err(|e| e.to_string())
            .and_then(|obj| {
                let renamed: serde_json::Map<_, _> = obj
                    .into_iter()
                    .map(|(k, v)| (schema.resolve(&k).to_string(), v))
                    .collect();
                serde_json::from_value::<RunRecord>(serde_json::Value::Object(renamed))
                    .map_err(|e| e.to_string())
            })
            .and_then(|r| r.validate().map(|_| r).map_err(|e| e.to_string()));
        match parsed {
            Ok(r) => out.records.push(r),
            Err(message) => out.errors.push(LineError {
                line: lineno,
                message,
            }),
        }
    }
    if !saw_line {
        return Err(TraceError::EmptyInput);
    }
    Ok(out)
}

/// Shortest round-trip representation, padded to at least six significant
/// digits.
fn fmt_real(v: f64) -> String {
    let short = format!("{v:e}");
    let mantissa = short.split('e').next().unwrap_or("");
    let digits = mantissa.chars().filter(|c| c.is_ascii_digit()).count();
    if digits >= 6 || v == 0.0 {
        short
    } else {
        format!("{v:.5e}")
    }
}

pub fn write_records<W: Write>(
    records: &[RunRecord],
    format: TraceFormat,
    mut w: W,
) -> Result<(), TraceError> {
    match format {
        TraceFormat::Delimited => {
            let mut wtr = csv::Writer::from_writer(&mut w);
            let io = |e: csv::Error| TraceError::Io(std::io::Error::other(e.to_string()));
            wtr.write_record(FIELDS).map_err(io)?;
            for r in records {
                wtr.write_record([
                    r.prompt_id.clone(),
                    r.run_kind.to_string(),
                    r.input_tokens.to_string(),
                    r.output_tokens.to_string(),
                    fmt_real(r.latency_s),
                    fmt_real(r.gpu_wh),
                    fmt_real(r.cpu_wh),
                    fmt_real(r.ram_wh),
                    r.model_id.clone(),
                    r.precision.clone(),
                    r.batch.to_string(),
                ])
                .map_err(io)?;
            }
            wtr.flush()?;
        }
        TraceFormat::LineJson => {
            for r in records {
                serde_json::to_writer(&mut w, r)
                    .map_err(|e| TraceError::Io(std::io::Error::other(e.to_string())))?;
                w.write_all(b"\n")?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const HEADER: &str = "prompt_id,run_kind,input_tokens,output_tokens,latency_s,gpu_wh,cpu_wh,ram_wh,model_id,precision,batch\n";

    fn good_line(id: &str) -> String {
        format!("{id},full,120,40,1.5,0.1,0.01,0.005,llama,fp32,1\n")
    }

    #[test]
    fn empty_input() {
        let opts = IngestOptions::default();
        assert!(matches!(
            parse_str("", TraceFormat::Delimited, &opts),
            Err(TraceError::EmptyInput)
        ));
        assert!(matches!(
            parse_str(HEADER, TraceFormat::Delimited, &opts),
            Err(TraceError::EmptyInput)
        ));
        assert!(matches!(
            parse_str("\n\n", TraceFormat::LineJson, &opts),
            Err(TraceError::EmptyInput)
        ));
    }

    #[test]
    fn unknown_format() {
        assert!(matches!(
            "parquet".parse::<TraceFormat>(),
            Err(TraceError::UnknownFormat(_))
        ));
    }

    #[test]
    fn one_good_line() {
        let text = format!("{HEADER}{}", good_line("p1"));
        let t = parse_str(&text, TraceFormat::Delimited, &IngestOptions::default()).unwrap();
        assert_eq!(t.records.len(), 1);
        assert!(t.errors.is_empty());
        assert_eq!(t.records[0].output_tokens, 40);
    }

    #[test]
    fn bad_lines_are_located() {
        let text = format!(
            "{HEADER}{}{}p3,full,abc,40,1.5,0.1,0.01,0.005,llama,fp32,1\n{}",
            good_line("p1"),
            good_line("p2"),
            good_line("p4")
        );
        let t = parse_str(&text, TraceFormat::Delimited, &IngestOptions::default()).unwrap();
        assert_eq!(t.records.len(), 3);
        assert_eq!(t.errors.len(), 1);
        assert_eq!(t.errors[0].line, 4);
        let ids: Vec<_> = t.records.iter().map(|r| r.prompt_id.as_str()).collect();
        assert_eq!(ids, ["p1", "p2", "p4"]);
    }

    #[test]
    fn invariant_violations_are_line_errors() {
        let text = format!(
            "{HEADER}p1,prefill_only,10,3,0.1,0.01,0,0,m,fp32,1\np2,full,10,3,0,0.01,0,0,m,fp32,1\np3,full,10,3,0.1,-1,0,0,m,fp32,1\nshort,row\n"
        );
        let t = parse_str(&text, TraceFormat::Delimited, &IngestOptions::default()).unwrap();
        assert!(t.records.is_empty());
        assert_eq!(
            t.errors.iter().map(|e| e.line).collect::<Vec<_>>(),
            [2, 3, 4, 5]
        );
    }

    #[test]
    fn line_json_and_schema_mapping() {
        let text = "{\"id\":\"a\",\"run_kind\":\"full\",\"input_tokens\":5,\"output_tokens\":2,\"latency_s\":0.5,\"gpu_energy\":0.1,\"cpu_wh\":0,\"ram_wh\":0,\"model_id\":\"m\",\"precision\":\"fp32\",\"batch\":1}\nnot json\n";
        let schema = SchemaMap::new()
            .alias("id", "prompt_id")
            .unwrap()
            .alias("gpu_energy", "gpu_wh")
            .unwrap();
        let opts = IngestOptions {
            schema,
            drop_first: 0,
        };
        let t = parse_str(text, TraceFormat::LineJson, &opts).unwrap();
        assert_eq!(t.records.len(), 1);
        assert_eq!(t.records[0].gpu_wh, 0.1);
        assert_eq!(t.errors[0].line, 2);

        let csv = "id,run_kind,input_tokens,output_tokens,latency_s,gpu_energy,cpu_wh,ram_wh,model_id,precision,batch,extra\na,full,5,2,0.5,0.1,0,0,m,fp32,1,zzz\n";
        let schema =
            SchemaMap::from_kv_str("id = \"prompt_id\"\ngpu_energy = \"gpu_wh\"\n").unwrap();
        let opts = IngestOptions {
            schema,
            drop_first: 0,
        };
        let t = parse_str(csv, TraceFormat::Delimited, &opts).unwrap();
        assert_eq!(t.records.len(), 1, "{:?}", t.errors);
        assert!(SchemaMap::new().alias("x", "nope").is_err());
    }

    #[test]
    fn missing_column_reported_per_line() {
        let text = "prompt_id,run_kind\np,full\n";
        let t = parse_str(text, TraceFormat::Delimited, &IngestOptions::default()).unwrap();
        assert!(t.records.is_empty());
        assert!(t.errors[0].message.contains("input_tokens"));
    }

    #[test]
    fn drop_first_per_group() {
        let mut text = HEADER.to_string();
        for i in 0..3 {
            text += &format!("p,full,10,5,{}.5,0.1,0,0,m,fp32,1\n", i + 1);
            text += "p,prefill_only,10,1,0.2,0.05,0,0,m,fp32,1\n";
        }
        let opts = IngestOptions {
            drop_first: 2,
            ..Default::default()
        };
        let t = parse_str(&text, TraceFormat::Delimited, &opts).unwrap();
        assert_eq!(t.records.len(), 2);
        assert_eq!(t.records[0].latency_s, 3.5);
    }

    #[test]
    fn writer_pads_significant_digits() {
        assert_eq!(fmt_real(0.202), "2.02000e-1");
        assert_eq!(fmt_real(0.123456789), "1.23456789e-1");
        assert_eq!(fmt_real(0.0), "0e0");
    }

    fn record() -> impl Strategy<Value = RunRecord> {
        (
            "[a-z0-9_]{1,8}",
            any::<bool>(),
            1u64..100_000,
            1u64..4096,
            1e-6f64..1e3,
            0.0f64..10.0,
            0.0f64..1.0,
            0.0f64..1.0,
        )
            .prop_map(|(id, prefill, s, out, lat, gpu, cpu, ram)| RunRecord {
                prompt_id: id,
                run_kind: if prefill {
                    RunKind::PrefillOnly
                } else {
                    RunKind::Full
                },
                input_tokens: s,
                output_tokens: if prefill { 1 } else { out },
                latency_s: lat,
                gpu_wh: gpu,
                cpu_wh: cpu,
                ram_wh: ram,
                model_id: "m".into(),
                precision: "fp32".into(),
                batch: 1,
            })
    }

    proptest! {
        #[test]
        fn serialize_parse_roundtrip(records in proptest::collection::vec(record(), 1..30), json in any::<bool>()) {
            let fmt = if json { TraceFormat::LineJson } else { TraceFormat::Delimited };
            let mut buf = Vec::new();
            write_records(&records, fmt, &mut buf).unwrap();
            let back = parse_records(&buf[..], fmt, &IngestOptions::default()).unwrap();
            prop_assert!(back.errors.is_empty());
            prop_assert_eq!(&back.records, &records);
            let mut buf2 = Vec::new();
            write_records(&back.records, fmt, &mut buf2).unwrap();
            prop_assert_eq!(buf, buf2);
        }
    }
}
