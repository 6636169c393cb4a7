//! Trace records and result tables on disk.
//!
//! Binary trace file: a sequence of records, each
//!
//! ```text
//! magic        8 bytes  "BEAMTRC\0"
//! format       u32      1
//! tool version 16 bytes UTF-8, zero padded
//! family       u8       1 thermal, 2 laser, 3 jittered, 4 kspace product, 5 periodic thermal
//! nu, gamma, jitter band, jitter corr time, dt    f64 x 5
//! n, master seed, trace index, settle             u64 x 4
//! filter count u32, then (centre, fwhm) f64 pairs
//! payload      n x (re f64, im f64)
//! ```
//!
//! All integers and floats little-endian.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::fieldgen::{BeamFamily, BeamModelSpec, FieldTrace};
use crate::num::Complex;
use crate::photonics::FilterSpec;

pub const TOOL_NAME: &str = env!("CARGO_PKG_NAME");
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

const MAGIC: &[u8; 8] = b"BEAMTRC\0";
const FORMAT_VERSION: u32 = 1;

pub fn write_trace<W: Write>(w: &mut W, t: &FieldTrace<f64>) -> std::io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    let mut version = [0u8; 16];
    let v = TOOL_VERSION.as_bytes();
    version[..v.len().min(16)].copy_from_slice(&v[..v.len().min(16)]);
    w.write_all(&version)?;
    w.write_all(&[t.model.family.code()])?;
    for x in [
        t.model.nu,
        t.model.gamma,
        t.model.jitter_band,
        t.model.jitter_corr_time,
        t.dt,
    ] {
        w.write_all(&x.to_le_bytes())?;
    }
    for x in [
        t.samples.len() as u64,
        t.master_seed,
        t.trace_index,
        t.settle as u64,
    ] {
        w.write_all(&x.to_le_bytes())?;
    }
    w.write_all(&(t.filters.len() as u32).to_le_bytes())?;
    for f in &t.filters {
        w.write_all(&f.center_detuning.to_le_bytes())?;
        w.write_all(&f.fwhm.to_le_bytes())?;
    }
    for z in &t.samples {
        w.write_all(&z.re.to_le_bytes())?;
        w.write_all(&z.im.to_le_bytes())?;
    }
    Ok(())
}

pub fn write_traces(path: &Path, traces: &[FieldTrace<f64>]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for t in traces {
        write_trace(&mut w, t).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        let s = self.buf.get(self.pos..self.pos + n)?;
        self.pos += n;
        Some(s)
    }

    fn u8(&mut self) -> Option<u8> {
        self.take(1).map(|b| b[0])
    }

    fn u32(&mut self) -> Option<u32> {
        self.take(4).map(|b| u32::from_le_bytes(b.try_into().unwrap()))
    }

    fn u64(&mut self) -> Option<u64> {
        self.take(8).map(|b| u64::from_le_bytes(b.try_into().unwrap()))
    }

    fn f64(&mut self) -> Option<f64> {
        self.take(8).map(|b| f64::from_le_bytes(b.try_into().unwrap()))
    }
}

fn parse_record(c: &mut Cursor<'_>) -> std::result::Result<FieldTrace<f64>, String> {
    let short = || "truncated record".to_string();
    if c.take(8).ok_or_else(short)? != MAGIC {
        return Err("bad magic".into());
    }
    let format = c.u32().ok_or_else(short)?;
    if format != FORMAT_VERSION {
        return Err(format!("unsupported format version {format}"));
    }
    c.take(16).ok_or_else(short)?;
    let code = c.u8().ok_or_else(short)?;
    let family = BeamFamily::from_code(code).ok_or_else(|| format!("unknown family code {code}"))?;
    let mut f = [0.0; 5];
    for x in &mut f {
        *x = c.f64().ok_or_else(short)?;
    }
    let [nu, gamma, jitter_band, jitter_corr_time, dt] = f;
    let n = c.u64().ok_or_else(short)? as usize;
    let master_seed = c.u64().ok_or_else(short)?;
    let trace_index = c.u64().ok_or_else(short)?;
    let settle = c.u64().ok_or_else(short)? as usize;
    let n_filters = c.u32().ok_or_else(short)?;
    let mut filters = Vec::new();
    for _ in 0..n_filters {
        let centre = c.f64().ok_or_else(short)?;
        let fwhm = c.f64().ok_or_else(short)?;
        filters.push(FilterSpec::new(centre, fwhm).map_err(|e| e.to_string())?);
    }
    if c.buf.len() - c.pos < n.saturating_mul(16) {
        return Err(short());
    }
    let samples = (0..n)
        .map(|_| Complex::new(c.f64().unwrap(), c.f64().unwrap()))
        .collect();
    let model = BeamModelSpec {
        family,
        nu,
        gamma,
        jitter_band,
        jitter_corr_time,
    };
    let mut t = FieldTrace::from_samples(samples, dt, model, master_seed, trace_index).map_err(|e| e.to_string())?;
    if settle >= t.n_samples() {
        return Err(format!("settling margin {settle} exceeds the record"));
    }
    t.filters = filters;
    t.settle = settle;
    Ok(t)
}

pub fn read_traces(path: &Path) -> Result<Vec<FieldTrace<f64>>> {
    let mut buf = Vec::new();
    File::open(path)
        .and_then(|f| BufReader::new(f).read_to_end(&mut buf))
        .map_err(|e| Error::io(path, e))?;
    let mut c = Cursor { buf: &buf, pos: 0 };
    let mut out = Vec::new();
    while c.pos < buf.len() {
        let at = c.pos;
        out.push(parse_record(&mut c).map_err(|r| Error::format(path, format!("record at byte {at}: {r}")))?);
    }
    if out.is_empty() {
        return Err(Error::format(path, "no trace records"));
    }
    Ok(out)
}

/// Resolved run configuration, kept sorted so serialisation is canonical.
pub type Config = BTreeMap<String, String>;

/// Rectangular result with named columns.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|r| {
                    Value::Object(
                        self.columns
                            .iter()
                            .cloned()
                            .zip(r.iter().cloned())
                            .collect(),
                    )
                })
                .collect(),
        )
    }
}

/// Named tables plus free-form summary values produced by one command.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Report {
    pub command: String,
    pub summary: Vec<(String, Value)>,
    pub tables: Vec<(String, Table)>,
}

fn cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

fn csv_err(e: csv::Error) -> std::io::Error {
    std::io::Error::other(e)
}

/// CSV with `#` comment header lines carrying the tool version and
/// `# config: key=value` lines; each table follows a `# table: name` line.
pub fn write_report_csv<W: Write>(w: &mut W, report: &Report, config: &Config) -> std::io::Result<()> {
    writeln!(w, "# {TOOL_NAME} {TOOL_VERSION}")?;
    writeln!(w, "# command: {}", report.command)?;
    for (k, v) in config {
        writeln!(w, "# config: {k}={v}")?;
    }
    for (k, v) in &report.summary {
        writeln!(w, "# summary: {k}={}", cell(v))?;
    }
    for (name, table) in &report.tables {
        writeln!(w, "# table: {name}")?;
        let mut cw = csv::Writer::from_writer(&mut *w);
        cw.write_record(&table.columns).map_err(csv_err)?;
        for r in &table.rows {
            cw.write_record(r.iter().map(cell)).map_err(csv_err)?;
        }
        cw.flush()?;
    }
    Ok(())
}

pub fn report_json(report: &Report, config: &Config) -> Value {
    let summary: serde_json::Map<String, Value> = report.summary.iter().cloned().collect();
    let tables: serde_json::Map<String, Value> = report
        .tables
        .iter()
        .map(|(n, t)| (n.clone(), t.to_json()))
        .collect();
    json!({
        "tool": TOOL_NAME,
        "version": TOOL_VERSION,
        "command": report.command,
        "config": config,
        "summary": summary,
        "tables": tables,
    })
}

pub fn write_report_json<W: Write>(w: &mut W, report: &Report, config: &Config) -> std::io::Result<()> {
    serde_json::to_writer_pretty(&mut *w, &report_json(report, config)).map_err(std::io::Error::other)?;
    writeln!(w)
}

/// Plotting dump of traces: `trace,t,re,im` after the config header.
pub fn write_traces_csv<W: Write>(w: &mut W, traces: &[FieldTrace<f64>], config: &Config) -> std::io::Result<()> {
    writeln!(w, "# {TOOL_NAME} {TOOL_VERSION}")?;
    for (k, v) in config {
        writeln!(w, "# config: {k}={v}")?;
    }
    let mut cw = csv::Writer::from_writer(w);
    cw.write_record(["trace", "t", "re", "im"]).map_err(csv_err)?;
    for t in traces {
        for (j, z) in t.samples.iter().enumerate() {
            cw.write_record([
                t.trace_index.to_string(),
                t.time(j).to_string(),
                z.re.to_string(),
                z.im.to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    cw.flush()
}
