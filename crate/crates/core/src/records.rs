//! On-disk record formats.
//!
//! Sweep CSV: header `axis_1,...,axis_m,observable,mean,stderr,n_realizations,seed`,
//! one row per (cell, observable), floats with 17 significant digits.
//! Sweep JSON: `{"metadata": {...}, "axes": [...], "records": [...]}` with each
//! record's coordinates keyed by axis name.
//! Trace CSV: `time,qubit,expectation,running_min_Z`.
//! Scaling CSV: `L,mean_lifetime,stderr,n_samples,n_censored,seed`; the fit
//! sidecar is `prefactor,rate,r_squared,n_points`.

use std::collections::HashSet;
use std::io::{Read, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::model::BOND_SAMPLING;
use crate::observables::TraceRow;
use crate::scaling::{LogLinearFit, ScalingPoint};
use crate::sweep::{format_coordinate, format_float, AxisValue, ObservableId, Parameter, SweepRecord};

pub const RECORD_COLUMNS: [&str; 5] = ["observable", "mean", "stderr", "n_realizations", "seed"];
pub const TRACE_COLUMNS: [&str; 4] = ["time", "qubit", "expectation", "running_min_Z"];
pub const SCALING_COLUMNS: [&str; 6] = ["L", "mean_lifetime", "stderr", "n_samples", "n_censored", "seed"];
pub const FIT_COLUMNS: [&str; 4] = ["prefactor", "rate", "r_squared", "n_points"];

/// Records read back from disk together with their axis layout.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordTable {
    pub axes: Vec<Parameter>,
    pub records: Vec<SweepRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metadata {
    pub version: String,
    pub command: String,
    /// How bond couplings were drawn; see [`BOND_SAMPLING`].
    pub bond_sampling: String,
    pub config: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
}

impl Metadata {
    pub fn new(command: &str, config: &impl Serialize, timestamp: bool) -> Self {
        Metadata {
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            bond_sampling: BOND_SAMPLING.to_string(),
            config: serde_json::to_value(config).unwrap_or(Value::Null),
            timestamp: timestamp.then(unix_timestamp),
        }
    }
}

fn unix_timestamp() -> String {
    let secs = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    format!("unix:{secs}")
}

fn csv_err(origin: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::io(origin, source),
        other => Error::Schema {
            path: origin.to_path_buf(),
            message: format!("{other:?}"),
        },
    }
}

fn schema(origin: &Path, message: impl Into<String>) -> Error {
    Error::Schema {
        path: origin.to_path_buf(),
        message: message.into(),
    }
}

pub fn sweep_header(axes: &[Parameter]) -> Vec<String> {
    axes.iter()
        .map(|p| p.name().to_string())
        .chain(RECORD_COLUMNS.iter().map(|c| c.to_string()))
        .collect()
}

fn record_row(record: &SweepRecord) -> Vec<String> {
    record
        .coordinates
        .iter()
        .map(|(p, v)| format_coordinate(*p, v))
        .chain([
            record.observable.to_string(),
            format_float(record.mean),
            format_float(record.stderr),
            record.n_realizations.to_string(),
            record.seed.to_string(),
        ])
        .collect()
}

/// Write sweep records as CSV, with the header row when `header` is set.
pub fn write_sweep_csv<W: Write>(
    out: W,
    axes: &[Parameter],
    records: &[SweepRecord],
    header: bool,
) -> Result<()> {
    let origin = Path::new("<output>");
    let mut w = csv::Writer::from_writer(out);
    if header {
        w.write_record(sweep_header(axes)).map_err(|e| csv_err(origin, e))?;
    }
    for r in records {
        w.write_record(record_row(r)).map_err(|e| csv_err(origin, e))?;
    }
    w.flush().map_err(|e| Error::io(origin, e))
}

fn parse_f64(origin: &Path, row: usize, column: &str, s: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| schema(origin, format!("row {row}: column {column}: not a number: {s:?}")))
}

fn parse_u64(origin: &Path, row: usize, column: &str, s: &str) -> Result<u64> {
    s.trim()
        .parse()
        .map_err(|_| schema(origin, format!("row {row}: column {column}: not an integer: {s:?}")))
}

fn parse_coordinate(origin: &Path, row: usize, p: Parameter, s: &str) -> Result<AxisValue> {
    if p == Parameter::InitialState {
        if s.is_empty() || !s.chars().all(|c| c == '0' || c == '1') {
            return Err(schema(origin, format!("row {row}: column {p}: not a bit string: {s:?}")));
        }
        Ok(AxisValue::Text(s.to_string()))
    } else {
        parse_f64(origin, row, p.name(), s).map(AxisValue::Number)
    }
}

fn check_record(origin: &Path, row: usize, r: &SweepRecord) -> Result<()> {
    if r.n_realizations < 1 {
        return Err(schema(origin, format!("row {row}: n_realizations must be >= 1")));
    }
    if r.stderr.is_nan() || r.stderr < 0.0 {
        return Err(schema(origin, format!("row {row}: stderr must be >= 0")));
    }
    if !r.mean.is_finite() {
        return Err(schema(origin, format!("row {row}: mean is not finite")));
    }
    Ok(())
}

/// Parse the axis names out of a sweep CSV header.
pub fn parse_sweep_header(origin: &Path, header: &csv::StringRecord) -> Result<Vec<Parameter>> {
    let cols: Vec<&str> = header.iter().collect();
    if cols.len() < RECORD_COLUMNS.len() || cols[cols.len() - RECORD_COLUMNS.len()..] != RECORD_COLUMNS {
        return Err(schema(
            origin,
            format!(
                "header must end with {}, got {}",
                RECORD_COLUMNS.join(","),
                cols.join(",")
            ),
        ));
    }
    cols[..cols.len() - RECORD_COLUMNS.len()]
        .iter()
        .map(|c| {
            c.parse::<Parameter>()
                .map_err(|_| schema(origin, format!("unknown axis column {c:?}")))
        })
        .collect()
}

pub fn read_sweep_csv<R: Read>(input: R, origin: &Path) -> Result<RecordTable> {
    let mut rd = csv::Reader::from_reader(input);
    let header = rd.headers().map_err(|e| csv_err(origin, e))?.clone();
    let axes = parse_sweep_header(origin, &header)?;
    let m = axes.len();
    let mut records = Vec::new();
    for (i, row) in rd.records().enumerate() {
        let row = row.map_err(|e| csv_err(origin, e))?;
        let line = i + 2;
        if row.len() != m + RECORD_COLUMNS.len() {
            return Err(schema(origin, format!("row {line}: expected {} fields, got {}", m + 5, row.len())));
        }
        let coordinates = axes
            .iter()
            .enumerate()
            .map(|(a, &p)| Ok((p, parse_coordinate(origin, line, p, &row[a])?)))
            .collect::<Result<Vec<_>>>()?;
        let observable: ObservableId = row[m]
            .parse()
            .map_err(|_| schema(origin, format!("row {line}: column observable: unknown id {:?}", &row[m])))?;
        let record = SweepRecord {
            coordinates,
            observable,
            mean: parse_f64(origin, line, "mean", &row[m + 1])?,
            stderr: parse_f64(origin, line, "stderr", &row[m + 2])?,
            n_realizations: parse_u64(origin, line, "n_realizations", &row[m + 3])?,
            seed: parse_u64(origin, line, "seed", &row[m + 4])?,
        };
        check_record(origin, line, &record)?;
        records.push(record);
    }
    Ok(RecordTable { axes, records })
}

pub fn read_sweep_csv_file(path: &Path) -> Result<RecordTable> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_sweep_csv(f, path)
}

fn coordinate_json(value: &AxisValue) -> Value {
    match value {
        AxisValue::Number(x) => json!(x),
        AxisValue::Text(s) => json!(s),
    }
}

/// Sweep records plus metadata as a JSON document.
pub fn sweep_json(axes: &[Parameter], records: &[SweepRecord], metadata: &Metadata) -> Value {
    let recs: Vec<Value> = records
        .iter()
        .map(|r| {
            let coords: Map<String, Value> = r
                .coordinates
                .iter()
                .map(|(p, v)| (p.name().to_string(), coordinate_json(v)))
                .collect();
            json!({
                "coordinates": coords,
                "observable": r.observable.to_string(),
                "mean": r.mean,
                "stderr": r.stderr,
                "n_realizations": r.n_realizations,
                "seed": r.seed,
            })
        })
        .collect();
    json!({
        "metadata": metadata,
        "axes": axes.iter().map(|p| p.name()).collect::<Vec<_>>(),
        "records": recs,
    })
}

pub fn write_json<W: Write>(mut out: W, value: &Value) -> Result<()> {
    let origin = Path::new("<output>");
    serde_json::to_writer_pretty(&mut out, value)
        .map_err(|e| Error::io(origin, std::io::Error::other(e)))?;
    out.write_all(b"\n").map_err(|e| Error::io(origin, e))
}

pub fn read_sweep_json<R: Read>(input: R, origin: &Path) -> Result<RecordTable> {
    let doc: Value = serde_json::from_reader(input).map_err(|e| schema(origin, e.to_string()))?;
    let axes = doc
        .get("axes")
        .and_then(Value::as_array)
        .ok_or_else(|| schema(origin, "missing \"axes\" array"))?
        .iter()
        .map(|a| {
            a.as_str()
                .and_then(|s| s.parse::<Parameter>().ok())
                .ok_or_else(|| schema(origin, format!("bad axis entry {a}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let rows = doc
        .get("records")
        .and_then(Value::as_array)
        .ok_or_else(|| schema(origin, "missing \"records\" array"))?;
    let mut records = Vec::with_capacity(rows.len());
    for (i, r) in rows.iter().enumerate() {
        let field = |k: &str| r.get(k).ok_or_else(|| schema(origin, format!("record {i}: missing {k}")));
        let coords = field("coordinates")?
            .as_object()
            .ok_or_else(|| schema(origin, format!("record {i}: coordinates must be an object")))?;
        let coordinates = axes
            .iter()
            .map(|&p| {
                let v = coords
                    .get(p.name())
                    .ok_or_else(|| schema(origin, format!("record {i}: missing coordinate {p}")))?;
                match v {
                    Value::Number(n) => Ok((p, AxisValue::Number(n.as_f64().unwrap_or(f64::NAN)))),
                    Value::String(s) => parse_coordinate(origin, i, p, s).map(|v| (p, v)),
                    other => Err(schema(origin, format!("record {i}: bad coordinate {other}"))),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let num = |k: &str| {
            field(k)?
                .as_f64()
                .ok_or_else(|| schema(origin, format!("record {i}: {k} must be a number")))
        };
        let int = |k: &str| {
            field(k)?
                .as_u64()
                .ok_or_else(|| schema(origin, format!("record {i}: {k} must be an integer")))
        };
        let observable = field("observable")?
            .as_str()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| schema(origin, format!("record {i}: bad observable")))?;
        let record = SweepRecord {
            coordinates,
            observable,
            mean: num("mean")?,
            stderr: num("stderr")?,
            n_realizations: int("n_realizations")?,
            seed: int("seed")?,
        };
        check_record(origin, i, &record)?;
        records.push(record);
    }
    Ok(RecordTable { axes, records })
}

/// Formatted coordinates of cells in an existing CSV whose rows cover every
/// observable in `observables`. Used to resume interrupted campaigns.
pub fn completed_cells(
    path: &Path,
    axes: &[Parameter],
    observables: &[ObservableId],
) -> Result<HashSet<Vec<String>>> {
    let table = read_sweep_csv_file(path)?;
    if table.axes != axes {
        return Err(schema(
            path,
            format!(
                "cannot resume: file axes {:?} differ from configured axes {:?}",
                table.axes.iter().map(|p| p.name()).collect::<Vec<_>>(),
                axes.iter().map(|p| p.name()).collect::<Vec<_>>()
            ),
        ));
    }
    let mut seen: std::collections::HashMap<Vec<String>, HashSet<ObservableId>> = Default::default();
    for r in &table.records {
        seen.entry(cell_key(&r.coordinates)).or_default().insert(r.observable);
    }
    Ok(seen
        .into_iter()
        .filter(|(_, obs)| observables.iter().all(|o| obs.contains(o)))
        .map(|(k, _)| k)
        .collect())
}

pub fn cell_key(coordinates: &[(Parameter, AxisValue)]) -> Vec<String> {
    coordinates.iter().map(|(p, v)| format_coordinate(*p, v)).collect()
}

pub fn write_trace_csv<W: Write>(out: W, rows: &[TraceRow]) -> Result<()> {
    let origin = Path::new("<output>");
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_COLUMNS).map_err(|e| csv_err(origin, e))?;
    for r in rows {
        w.write_record([
            format_float(r.time),
            r.qubit.to_string(),
            format_float(r.expectation),
            format_float(r.running_min_z),
        ])
        .map_err(|e| csv_err(origin, e))?;
    }
    w.flush().map_err(|e| Error::io(origin, e))
}

/// Parse a trace CSV back into rows; `period` is recovered as the row's
/// position in its qubit's sequence.
pub fn read_trace_csv<R: Read>(input: R, origin: &Path) -> Result<Vec<TraceRow>> {
    let mut rd = csv::Reader::from_reader(input);
    let header = rd.headers().map_err(|e| csv_err(origin, e))?.clone();
    if header.iter().ne(TRACE_COLUMNS) {
        return Err(schema(origin, format!("trace header must be {}", TRACE_COLUMNS.join(","))));
    }
    let mut counts: std::collections::HashMap<usize, u64> = Default::default();
    let mut rows = Vec::new();
    for (i, row) in rd.records().enumerate() {
        let row = row.map_err(|e| csv_err(origin, e))?;
        let line = i + 2;
        let qubit = parse_u64(origin, line, "qubit", &row[1])? as usize;
        let period = counts.entry(qubit).or_default();
        rows.push(TraceRow {
            period: *period,
            time: parse_f64(origin, line, "time", &row[0])?,
            qubit,
            expectation: parse_f64(origin, line, "expectation", &row[2])?,
            running_min_z: parse_f64(origin, line, "running_min_Z", &row[3])?,
        });
        *period += 1;
    }
    Ok(rows)
}

pub fn trace_json(rows: &[TraceRow], metadata: &Metadata) -> Value {
    json!({ "metadata": metadata, "trace": rows })
}

pub fn write_scaling_csv<W: Write>(out: W, points: &[ScalingPoint]) -> Result<()> {
    let origin = Path::new("<output>");
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SCALING_COLUMNS).map_err(|e| csv_err(origin, e))?;
    for p in points {
        w.write_record([
            p.n_qubits.to_string(),
            format_float(p.mean_lifetime),
            format_float(p.stderr),
            p.n_samples.to_string(),
            p.n_censored.to_string(),
            p.seed.to_string(),
        ])
        .map_err(|e| csv_err(origin, e))?;
    }
    w.flush().map_err(|e| Error::io(origin, e))
}

pub fn read_scaling_csv<R: Read>(input: R, origin: &Path) -> Result<Vec<ScalingPoint>> {
    let mut rd = csv::Reader::from_reader(input);
    let header = rd.headers().map_err(|e| csv_err(origin, e))?.clone();
    if header.iter().ne(SCALING_COLUMNS) {
        return Err(schema(origin, format!("scaling header must be {}", SCALING_COLUMNS.join(","))));
    }
    let mut points = Vec::new();
    for (i, row) in rd.records().enumerate() {
        let row = row.map_err(|e| csv_err(origin, e))?;
        let line = i + 2;
        points.push(ScalingPoint {
            n_qubits: parse_u64(origin, line, "L", &row[0])? as usize,
            mean_lifetime: parse_f64(origin, line, "mean_lifetime", &row[1])?,
            stderr: parse_f64(origin, line, "stderr", &row[2])?,
            n_samples: parse_u64(origin, line, "n_samples", &row[3])?,
            n_censored: parse_u64(origin, line, "n_censored", &row[4])?,
            seed: parse_u64(origin, line, "seed", &row[5])?,
        });
    }
    Ok(points)
}

pub fn write_fit_csv<W: Write>(out: W, fit: &LogLinearFit) -> Result<()> {
    let origin = Path::new("<output>");
    let mut w = csv::Writer::from_writer(out);
    w.write_record(FIT_COLUMNS).map_err(|e| csv_err(origin, e))?;
    w.write_record([
        format_float(fit.prefactor),
        format_float(fit.rate),
        format_float(fit.r_squared),
        fit.n_points.to_string(),
    ])
    .map_err(|e| csv_err(origin, e))?;
    w.flush().map_err(|e| Error::io(origin, e))
}

pub fn read_fit_csv<R: Read>(input: R, origin: &Path) -> Result<LogLinearFit> {
    let mut rd = csv::Reader::from_reader(input);
    let header = rd.headers().map_err(|e| csv_err(origin, e))?.clone();
    if header.iter().ne(FIT_COLUMNS) {
        return Err(schema(origin, format!("fit header must be {}", FIT_COLUMNS.join(","))));
    }
    let row = rd
        .records()
        .next()
        .ok_or_else(|| schema(origin, "fit file has no data row"))?
        .map_err(|e| csv_err(origin, e))?;
    Ok(LogLinearFit {
        prefactor: parse_f64(origin, 2, "prefactor", &row[0])?,
        rate: parse_f64(origin, 2, "rate", &row[1])?,
        r_squared: parse_f64(origin, 2, "r_squared", &row[2])?,
        n_points: parse_u64(origin, 2, "n_points", &row[3])? as usize,
    })
}

pub fn scaling_json(points: &[ScalingPoint], fit: Option<&LogLinearFit>, metadata: &Metadata) -> Value {
    json!({ "metadata": metadata, "points": points, "fit": fit })
}
