//! Report rendering (text and JSON) and the flagged-record protocol.

use crate::engine::{QualityReport, Violation, ViolationSink};
use crate::rate::Rate;
use std::collections::HashMap;
use std::fmt::Write as _;
use std::io;
use std::sync::Arc;

pub const FLAGGED_HEADER: [&str; 6] = [
    "record",
    "rule_id",
    "field",
    "raw_value",
    "severity",
    "message",
];

/// Message of the row written once when a rule reaches its cap.
pub const TRUNCATION_MESSAGE: &str = "further violations of this rule omitted";

fn pct(num: u64, den: u64) -> String {
    Rate::new(num, den).percent_sig(4)
}

/// Human-readable summary. Rule lines read
/// `<rule_id>  <dimension>  <count>  <rate>`.
pub fn render_text(report: &QualityReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "spec {} (sha256 {})",
        report.spec.name,
        &report.spec.sha256[..report.spec.sha256.len().min(12)]
    );
    for s in &report.sources {
        let _ = writeln!(out, "source {}: {} records", s.name, s.records);
    }
    for o in &report.objects {
        let _ = writeln!(
            out,
            "object {} from {}: {} records, {} malformed rows, {} invalid ({})",
            o.name,
            o.source,
            o.records,
            o.ragged_records,
            o.invalid_records,
            pct(o.invalid_rate_num, o.invalid_rate_den)
        );
    }
    if !report.rules.is_empty() {
        out.push_str("\nrules (rule  dimension  count  rate):\n");
        for r in &report.rules {
            let _ = write!(
                out,
                "{}  {}  {}  {}",
                r.rule_id,
                r.dimension,
                r.count,
                pct(r.rate_num, r.rate_den)
            );
            if r.severity != "error" {
                let _ = write!(out, "  ({})", r.severity);
            }
            out.push('\n');
        }
    }
    out.push('\n');
    let _ = writeln!(
        out,
        "overall: {} records, {} invalid ({})",
        report.overall.records,
        report.overall.invalid_records,
        pct(
            report.overall.invalid_rate_num,
            report.overall.invalid_rate_den
        )
    );
    for t in &report.thresholds {
        let _ = writeln!(
            out,
            "threshold {}: {} {} {}%, measured {}  {}",
            t.name,
            t.target,
            t.comparator,
            t.limit_percent,
            pct(t.measured_num, t.measured_den),
            if t.passed { "PASS" } else { "FAIL" }
        );
    }
    if let Some(f) = &report.flagged {
        let _ = writeln!(out, "flagged: {} rows in {}", f.rows_written, f.path);
    }
    let _ = writeln!(
        out,
        "verdict: {}",
        if report.passed() { "PASS" } else { "FAIL" }
    );
    out
}

/// Canonical JSON: fixed key order, two-space indentation, trailing newline.
pub fn render_json(report: &QualityReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

pub fn parse_json(text: &str) -> Result<QualityReport, serde_json::Error> {
    serde_json::from_str(text)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FlaggedSummary {
    /// Violation rows written, excluding truncation markers.
    pub rows_written: u64,
    /// Rules that hit the cap, in order of first truncation.
    pub truncated_rules: Vec<String>,
}

/// Streams violations into the protocol CSV, with an optional per-rule cap.
pub struct FlaggedWriter<W: io::Write> {
    out: csv::Writer<W>,
    cap: Option<u64>,
    per_rule: HashMap<Arc<str>, u64>,
    summary: FlaggedSummary,
}

fn csv_err(e: csv::Error) -> io::Error {
    io::Error::other(e)
}

impl<W: io::Write> FlaggedWriter<W> {
    pub fn new(sink: W, cap: Option<u64>) -> io::Result<Self> {
        let mut out = csv::Writer::from_writer(sink);
        out.write_record(FLAGGED_HEADER).map_err(csv_err)?;
        Ok(FlaggedWriter {
            out,
            cap,
            per_rule: HashMap::new(),
            summary: FlaggedSummary::default(),
        })
    }

    pub fn write(&mut self, v: &Violation) -> io::Result<()> {
        let n = self.per_rule.entry(Arc::clone(&v.rule_id)).or_insert(0);
        *n += 1;
        if let Some(cap) = self.cap {
            if *n > cap {
                if *n == cap + 1 {
                    self.out
                        .write_record(["", &v.rule_id, "", "", "", TRUNCATION_MESSAGE])
                        .map_err(csv_err)?;
                    self.summary.truncated_rules.push(v.rule_id.to_string());
                }
                return Ok(());
            }
        }
        let ordinal = v.record_ordinal.to_string();
        self.out
            .write_record([
                ordinal.as_str(),
                &v.rule_id,
                &v.field,
                &v.raw_value,
                v.severity.as_str(),
                &v.message,
            ])
            .map_err(csv_err)?;
        self.summary.rows_written += 1;
        Ok(())
    }

    pub fn finish(mut self) -> io::Result<FlaggedSummary> {
        self.out.flush()?;
        Ok(self.summary)
    }
}

impl<W: io::Write> ViolationSink for FlaggedWriter<W> {
    fn accept(&mut self, violation: &Violation) -> io::Result<()> {
        self.write(violation)
    }
}

/// Writes a complete protocol and returns the number of violation rows.
pub fn write_flagged<'a, W, I>(violations: I, sink: W, cap: Option<u64>) -> io::Result<u64>
where
    W: io::Write,
    I: IntoIterator<Item = &'a Violation>,
{
    let mut w = FlaggedWriter::new(sink, cap)?;
    for v in violations {
        w.write(v)?;
    }
    Ok(w.finish()?.rows_written)
}
