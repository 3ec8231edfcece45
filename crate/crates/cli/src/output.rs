use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::config::Format;

/// A finished run: the per-record table plus pass/fail bookkeeping.
pub struct Report<T> {
    pub command: String,
    pub records: Vec<T>,
    pub failures: Vec<String>,
    /// Extra `key = value` results printed after the table.
    pub summary: Vec<(String, String)>,
}

impl<T: Serialize> Report<T> {
    pub fn new(command: impl Into<String>) -> Self {
        Report {
            command: command.into(),
            records: Vec::new(),
            failures: Vec::new(),
            summary: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn write(&self, format: Format, out: Option<&Path>) -> io::Result<()> {
        let sink: Box<dyn Write> = match out {
            Some(p) => Box::new(File::create(p)?),
            None => Box::new(io::stdout().lock()),
        };
        let mut w = BufWriter::new(sink);
        let stamp = chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true);
        match format {
            Format::Csv => self.write_csv(&mut w, &stamp)?,
            Format::Json => self.write_json(&mut w, &stamp)?,
        }
        w.flush()
    }

    fn write_csv<W: Write>(&self, w: &mut W, stamp: &str) -> io::Result<()> {
        writeln!(w, "# generated {stamp}")?;
        writeln!(w, "# command: {}", self.command)?;
        {
            let mut cw = csv::Writer::from_writer(&mut *w);
            for r in &self.records {
                cw.serialize(r).map_err(io::Error::other)?;
            }
            cw.flush()?;
        }
        for (k, v) in &self.summary {
            writeln!(w, "# {k} = {v}")?;
        }
        for f in &self.failures {
            writeln!(w, "# FAILED: {f}")?;
        }
        writeln!(w, "# result: {}", if self.passed() { "pass" } else { "fail" })
    }

    fn write_json<W: Write>(&self, w: &mut W, stamp: &str) -> io::Result<()> {
        let summary: serde_json::Map<String, serde_json::Value> = self
            .summary
            .iter()
            .map(|(k, v)| (k.clone(), serde_json::Value::String(v.clone())))
            .collect();
        let doc = serde_json::json!({
            "generated": stamp,
            "command": self.command,
            "passed": self.passed(),
            "failures": self.failures,
            "summary": summary,
            "records": self.records,
        });
        serde_json::to_writer_pretty(&mut *w, &doc).map_err(io::Error::other)?;
        writeln!(w)
    }
}
