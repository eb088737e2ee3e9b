//! Check-plan compilation and streaming execution.
//!
//! A [`CheckPlan`] is the immutable, executable form of a validated spec.
//! [`run`] builds every reference index first, then streams each object's
//! source exactly once. Records are evaluated in batches, optionally on a
//! worker pool; a sequential merge step applies uniqueness tracking and
//! emits violations in `(record, evaluator)` order, so the output does not
//! depend on the number of workers.

use crate::ingest::{
    open_file, project_object, trim_cell, BoundField, DataObjectInstance, DatasetReader,
    DialectConfig, FieldValue, IngestError, RawRecord, TypedValue, ValueType,
};
use crate::rate::Rate;
use crate::speclang::ast::{ColumnRef, Comparator, FieldType, Severity, ThresholdTarget};
use crate::speclang::check::{CheckKind, RExpr, ROperand, ThresholdDef, ValidatedSpec};
use crate::speclang::pattern::Pattern;
use crate::speclang::{format_spec, Dimension};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::io::{self, Read};
use std::path::PathBuf;
use std::sync::Arc;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error("source '{source_name}': {error}")]
    Ingest {
        source_name: String,
        #[source]
        error: IngestError,
    },
    #[error("no data bound for source '{0}'")]
    Unbound(String),
    #[error("writing flagged records: {0}")]
    Sink(#[source] io::Error),
    #[error("cannot start worker pool: {0}")]
    Pool(String),
}

/// A (source, column) pair some `references` constraint looks up.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LookupKey {
    pub source: usize,
    pub column: ColumnRef,
}

/// Distinct trimmed, non-null values of one lookup column.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LookupIndex {
    values: HashSet<String>,
}

impl LookupIndex {
    pub fn from_values<I, S>(values: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        LookupIndex {
            values: values.into_iter().map(Into::into).collect(),
        }
    }

    pub fn contains(&self, value: &str) -> bool {
        self.values.contains(value)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Reads `column` of every well-formed row into an index. Ragged rows are
/// skipped; reader errors propagate. Returns the index and the number of
/// records read.
pub fn build_lookup_index<R: Read>(
    reader: &mut DatasetReader<R>,
    column: &ColumnRef,
    dialect: &DialectConfig,
) -> Result<(LookupIndex, u64), IngestError> {
    let cell = reader.resolve(column)?;
    let mut values = HashSet::new();
    let mut records = 0;
    for rec in reader.by_ref() {
        let rec = rec?;
        records += 1;
        if rec.is_ragged() {
            continue;
        }
        if let Some(raw) = rec.cells.get(cell) {
            let v = trim_cell(raw);
            if !dialect.is_null(v) && !values.contains(v) {
                values.insert(v.to_string());
            }
        }
    }
    Ok((LookupIndex { values }, records))
}

#[derive(Debug, Clone)]
pub enum EvalKind {
    /// Implicit type conformance of a non-text field.
    TypeCheck,
    NotNull,
    Unique,
    Matches(Pattern),
    Min(TypedValue),
    Max(TypedValue),
    MinLength(u32),
    MaxLength(u32),
    Reference {
        lookup: usize,
    },
    Record(RExpr),
}

impl EvalKind {
    pub fn name(&self) -> &'static str {
        match self {
            EvalKind::TypeCheck => "type",
            EvalKind::NotNull => "not_null",
            EvalKind::Unique => "unique",
            EvalKind::Matches(_) => "matches",
            EvalKind::Min(_) => "min",
            EvalKind::Max(_) => "max",
            EvalKind::MinLength(_) => "min_length",
            EvalKind::MaxLength(_) => "max_length",
            EvalKind::Reference { .. } => "references",
            EvalKind::Record(_) => "rule",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Evaluator {
    pub rule_id: Arc<str>,
    pub severity: Severity,
    pub dimension: Dimension,
    /// Field index for field-scope evaluators, `None` for record rules.
    pub field: Option<usize>,
    pub kind: EvalKind,
    /// Fields a record rule reads, in field order.
    pub reads: Vec<usize>,
}

impl Evaluator {
    pub fn is_type_check(&self) -> bool {
        matches!(self.kind, EvalKind::TypeCheck)
    }
}

#[derive(Debug, Clone)]
pub struct PlanField {
    pub name: Arc<str>,
    pub column: ColumnRef,
    pub ftype: FieldType,
    pub vtype: ValueType,
}

#[derive(Debug, Clone)]
pub struct ObjectPlan {
    pub name: String,
    pub source: usize,
    pub fields: Vec<PlanField>,
    /// Execution order: per field, its type check then its constraints in
    /// declaration order; then record rules in declaration order.
    pub evaluators: Vec<Evaluator>,
    /// Rule id used for structural (wrong row width) violations.
    pub row_width_id: Arc<str>,
}

#[derive(Debug, Clone)]
pub struct PlanSource {
    pub name: String,
    pub path: String,
    pub dialect: DialectConfig,
}

#[derive(Debug, Clone)]
pub struct CheckPlan {
    pub spec_name: String,
    /// Hex SHA-256 of the canonical spec text.
    pub spec_hash: String,
    pub sources: Vec<PlanSource>,
    pub objects: Vec<ObjectPlan>,
    pub lookups: Vec<LookupKey>,
    pub thresholds: Vec<ThresholdDef>,
}

impl CheckPlan {
    /// Evaluators that correspond to declared constraints and record rules
    /// (implicit type checks excluded).
    pub fn rule_evaluators(&self) -> impl Iterator<Item = &Evaluator> {
        self.objects
            .iter()
            .flat_map(|o| o.evaluators.iter().filter(|e| !e.is_type_check()))
    }

    /// Locates a rule id as (object index, evaluator index).
    pub fn find_rule(&self, rule_id: &str) -> Option<(usize, usize)> {
        self.objects.iter().enumerate().find_map(|(oi, o)| {
            o.evaluators
                .iter()
                .position(|e| &*e.rule_id == rule_id)
                .map(|ei| (oi, ei))
        })
    }
}

pub fn spec_hash(spec: &ValidatedSpec) -> String {
    let digest = Sha256::digest(format_spec(&spec.ast).as_bytes());
    let mut hex = String::with_capacity(64);
    for b in digest.iter() {
        let _ = write!(hex, "{b:02x}");
    }
    hex
}

fn collect_reads(e: &RExpr, out: &mut Vec<usize>) {
    match e {
        RExpr::And(a, b) | RExpr::Or(a, b) => {
            collect_reads(a, out);
            collect_reads(b, out);
        }
        RExpr::Not(x) => collect_reads(x, out),
        RExpr::IsNull { field, .. } | RExpr::Matches { field, .. } => out.push(*field),
        RExpr::Compare { left, right, .. } => {
            for o in [left, right] {
                if let ROperand::Field(f) = o {
                    out.push(*f);
                }
            }
        }
    }
}

pub fn compile_plan(spec: &ValidatedSpec) -> CheckPlan {
    let mut lookups: Vec<LookupKey> = Vec::new();
    let objects = spec
        .objects
        .iter()
        .map(|o| {
            let mut evaluators = Vec::new();
            for (fi, f) in o.fields.iter().enumerate() {
                if let Some(id) = &f.type_rule_id {
                    evaluators.push(Evaluator {
                        rule_id: Arc::from(id.as_str()),
                        severity: Severity::Error,
                        dimension: Dimension::Validity,
                        field: Some(fi),
                        kind: EvalKind::TypeCheck,
                        reads: vec![fi],
                    });
                }
                for c in &f.constraints {
                    let kind = match &c.kind {
                        CheckKind::NotNull => EvalKind::NotNull,
                        CheckKind::Unique => EvalKind::Unique,
                        CheckKind::Matches(p) => EvalKind::Matches(p.clone()),
                        CheckKind::Min(v) => EvalKind::Min(v.clone()),
                        CheckKind::Max(v) => EvalKind::Max(v.clone()),
                        CheckKind::MinLength(n) => EvalKind::MinLength(*n),
                        CheckKind::MaxLength(n) => EvalKind::MaxLength(*n),
                        CheckKind::References { source, column } => {
                            let key = LookupKey {
                                source: *source,
                                column: column.clone(),
                            };
                            let lookup = match lookups.iter().position(|k| *k == key) {
                                Some(i) => i,
                                None => {
                                    lookups.push(key);
                                    lookups.len() - 1
                                }
                            };
                            EvalKind::Reference { lookup }
                        }
                    };
                    evaluators.push(Evaluator {
                        rule_id: Arc::from(c.rule_id.as_str()),
                        severity: c.severity,
                        dimension: c.dimension,
                        field: Some(fi),
                        kind,
                        reads: vec![fi],
                    });
                }
            }
            for r in &o.rules {
                let mut reads = Vec::new();
                collect_reads(&r.expr, &mut reads);
                reads.sort_unstable();
                reads.dedup();
                evaluators.push(Evaluator {
                    rule_id: Arc::from(r.rule_id.as_str()),
                    severity: r.severity,
                    dimension: Dimension::Consistency,
                    field: None,
                    kind: EvalKind::Record(r.expr.clone()),
                    reads,
                });
            }
            ObjectPlan {
                name: o.name.clone(),
                source: o.source,
                fields: o
                    .fields
                    .iter()
                    .map(|f| PlanField {
                        name: Arc::clone(&f.name),
                        column: f.column.clone(),
                        ftype: f.ftype.clone(),
                        vtype: f.vtype.clone(),
                    })
                    .collect(),
                evaluators,
                row_width_id: Arc::from(format!("{}.row_width", o.name)),
            }
        })
        .collect();
    CheckPlan {
        spec_name: spec.ast.name.clone(),
        spec_hash: spec_hash(spec),
        sources: spec
            .sources
            .iter()
            .map(|s| PlanSource {
                name: s.name.clone(),
                path: s.path.clone(),
                dialect: s.dialect.clone(),
            })
            .collect(),
        objects,
        lookups,
        thresholds: spec.thresholds.clone(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub rule_id: Arc<str>,
    pub record_ordinal: u64,
    /// Empty for record-scope and structural violations.
    pub field: Arc<str>,
    pub raw_value: String,
    pub severity: Severity,
    pub message: String,
    pub dimension: Dimension,
    /// Position of the evaluator in the object's execution order;
    /// `usize::MAX` for structural violations.
    pub evaluator: usize,
}

/// Receives violations in deterministic order as the run progresses.
pub trait ViolationSink {
    fn accept(&mut self, violation: &Violation) -> io::Result<()>;
}

impl ViolationSink for Vec<Violation> {
    fn accept(&mut self, violation: &Violation) -> io::Result<()> {
        self.push(violation.clone());
        Ok(())
    }
}

/// Drops every violation.
pub struct DiscardSink;

impl ViolationSink for DiscardSink {
    fn accept(&mut self, _: &Violation) -> io::Result<()> {
        Ok(())
    }
}

/// First-occurrence ordinal per canonical value, for each `unique` evaluator.
#[derive(Debug, Default)]
pub struct UniqueTrackers {
    seen: HashMap<usize, HashMap<String, u64>>,
}

struct UniqueProbe {
    evaluator: usize,
    key: String,
    raw: String,
}

fn text_of(fv: &FieldValue) -> &str {
    trim_cell(&fv.raw)
}

fn is_absent(v: &TypedValue) -> bool {
    matches!(v, TypedValue::Null | TypedValue::ParseFailure { .. })
}

fn and3(a: Option<bool>, b: Option<bool>) -> Option<bool> {
    match (a, b) {
        (Some(false), _) | (_, Some(false)) => Some(false),
        (Some(true), Some(true)) => Some(true),
        _ => None,
    }
}

fn or3(a: Option<bool>, b: Option<bool>) -> Option<bool> {
    match (a, b) {
        (Some(true), _) | (_, Some(true)) => Some(true),
        (Some(false), Some(false)) => Some(false),
        _ => None,
    }
}

/// Three-valued evaluation; parse failures count as null.
pub fn eval_expr(e: &RExpr, values: &[FieldValue]) -> Option<bool> {
    match e {
        RExpr::And(a, b) => and3(eval_expr(a, values), eval_expr(b, values)),
        RExpr::Or(a, b) => or3(eval_expr(a, values), eval_expr(b, values)),
        RExpr::Not(x) => eval_expr(x, values).map(|b| !b),
        RExpr::IsNull { field, negated } => Some(is_absent(&values[*field].value) != *negated),
        RExpr::Compare { op, left, right } => {
            let resolve = |o: &'_ ROperand| -> Option<TypedValue> {
                match o {
                    ROperand::Field(f) => {
                        let v = &values[*f].value;
                        (!is_absent(v)).then(|| v.clone())
                    }
                    ROperand::Const(c) => Some(c.clone()),
                }
            };
            let (l, r) = (resolve(left)?, resolve(right)?);
            l.compare(&r).map(|ord| op.holds(ord))
        }
        RExpr::Matches { field, pattern } => {
            let fv = &values[*field];
            if is_absent(&fv.value) {
                None
            } else {
                Some(pattern.is_match(text_of(fv)))
            }
        }
    }
}

fn describe(v: &TypedValue) -> String {
    v.canonical_text()
        .map(|c| c.into_owned())
        .unwrap_or_default()
}

fn record_rule_raw(object: &ObjectPlan, reads: &[usize], values: &[FieldValue]) -> String {
    let mut out = String::new();
    for (i, f) in reads.iter().enumerate() {
        if i > 0 {
            out.push_str("; ");
        }
        let _ = write!(out, "{}={}", object.fields[*f].name, values[*f].raw);
    }
    out
}

/// Stateless part of record evaluation: every evaluator except the
/// uniqueness decision, which is returned as probes.
fn evaluate_stateless(
    instance: &DataObjectInstance,
    object: &ObjectPlan,
    plan: &CheckPlan,
    indexes: &[LookupIndex],
) -> (Vec<Violation>, Vec<UniqueProbe>) {
    let mut out = Vec::new();
    let mut probes = Vec::new();
    let values = &instance.values;
    for (ei, ev) in object.evaluators.iter().enumerate() {
        let violation = |raw: String, field: Arc<str>, message: String| Violation {
            rule_id: Arc::clone(&ev.rule_id),
            record_ordinal: instance.record_ordinal,
            field,
            raw_value: raw,
            severity: ev.severity,
            message,
            dimension: ev.dimension,
            evaluator: ei,
        };
        if let EvalKind::Record(expr) = &ev.kind {
            if eval_expr(expr, values) != Some(true) {
                let msg = if eval_expr(expr, values).is_none() {
                    "record rule is indeterminate"
                } else {
                    "record rule is violated"
                };
                out.push(violation(
                    record_rule_raw(object, &ev.reads, values),
                    Arc::from(""),
                    msg.to_string(),
                ));
            }
            continue;
        }
        let fi = ev.field.expect("field-scope evaluator");
        let fv = &values[fi];
        let fail = |message: String| violation(fv.raw.clone(), Arc::clone(&fv.name), message);
        match (&ev.kind, &fv.value) {
            (EvalKind::TypeCheck, TypedValue::ParseFailure { reason, .. }) => {
                out.push(fail(format!(
                    "{reason}: expected {}",
                    type_label(&object.fields[fi].ftype)
                )))
            }
            (EvalKind::TypeCheck, _) => {}
            (_, TypedValue::ParseFailure { .. }) => {}
            (EvalKind::NotNull, TypedValue::Null) => out.push(fail("value is missing".into())),
            (_, TypedValue::Null) => {}
            (EvalKind::NotNull, _) => {}
            (EvalKind::Unique, v) => probes.push(UniqueProbe {
                evaluator: ei,
                key: describe(v),
                raw: fv.raw.clone(),
            }),
            (EvalKind::Matches(p), _) => {
                if !p.is_match(text_of(fv)) {
                    out.push(fail(format!("value does not match \"{}\"", p.source())));
                }
            }
            (EvalKind::Min(bound), v) => {
                if v.compare(bound) == Some(std::cmp::Ordering::Less) {
                    out.push(fail(format!("value is below minimum {}", describe(bound))));
                }
            }
            (EvalKind::Max(bound), v) => {
                if v.compare(bound) == Some(std::cmp::Ordering::Greater) {
                    out.push(fail(format!("value is above maximum {}", describe(bound))));
                }
            }
            (EvalKind::MinLength(n), _) => {
                let len = text_of(fv).chars().count();
                if len < *n as usize {
                    out.push(fail(format!("length {len} is below {n}")));
                }
            }
            (EvalKind::MaxLength(n), _) => {
                let len = text_of(fv).chars().count();
                if len > *n as usize {
                    out.push(fail(format!("length {len} exceeds {n}")));
                }
            }
            (EvalKind::Reference { lookup }, v) => {
                if !indexes[*lookup].contains(&describe(v)) {
                    let key = &plan.lookups[*lookup];
                    out.push(fail(format!(
                        "value not found in {}.{}",
                        plan.sources[key.source].name,
                        column_label(&key.column)
                    )));
                }
            }
            (EvalKind::Record(_), _) => unreachable!(),
        }
    }
    (out, probes)
}

fn type_label(t: &FieldType) -> String {
    use crate::speclang::ast::DateFormatSpec;
    match t {
        FieldType::Date(DateFormatSpec::Custom(p)) => format!("date({p})"),
        other => other.keyword().to_string(),
    }
}

fn column_label(c: &ColumnRef) -> String {
    match c {
        ColumnRef::Name(n) => n.clone(),
        ColumnRef::Index(i) => format!("#{i}"),
    }
}

fn apply_probes(
    ordinal: u64,
    object: &ObjectPlan,
    probes: Vec<UniqueProbe>,
    trackers: &mut UniqueTrackers,
    out: &mut Vec<Violation>,
) {
    if probes.is_empty() {
        return;
    }
    for p in probes {
        let seen = trackers.seen.entry(p.evaluator).or_default();
        match seen.get(&p.key) {
            Some(first) => {
                let ev = &object.evaluators[p.evaluator];
                let fi = ev.field.expect("unique is field-scope");
                out.push(Violation {
                    rule_id: Arc::clone(&ev.rule_id),
                    record_ordinal: ordinal,
                    field: Arc::clone(&object.fields[fi].name),
                    raw_value: p.raw,
                    severity: ev.severity,
                    message: format!("duplicate of record {first}"),
                    dimension: ev.dimension,
                    evaluator: p.evaluator,
                });
            }
            None => {
                seen.insert(p.key, ordinal);
            }
        }
    }
    out.sort_by_key(|v| v.evaluator);
}

/// Evaluates one projected record against `object`, in evaluator order.
pub fn evaluate_record(
    instance: &DataObjectInstance,
    plan: &CheckPlan,
    object: usize,
    indexes: &[LookupIndex],
    trackers: &mut UniqueTrackers,
) -> Vec<Violation> {
    let obj = &plan.objects[object];
    let (mut out, probes) = evaluate_stateless(instance, obj, plan, indexes);
    apply_probes(instance.record_ordinal, obj, probes, trackers, &mut out);
    out
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ObjectCounters {
    pub records: u64,
    pub ragged: u64,
    pub invalid: u64,
    /// Violating records per evaluator.
    pub per_evaluator: Vec<u64>,
}

impl ObjectCounters {
    pub fn new(evaluators: usize) -> Self {
        ObjectCounters {
            per_evaluator: vec![0; evaluators],
            ..Default::default()
        }
    }

    pub fn merge(&mut self, other: &ObjectCounters) {
        self.records += other.records;
        self.ragged += other.ragged;
        self.invalid += other.invalid;
        for (a, b) in self.per_evaluator.iter_mut().zip(&other.per_evaluator) {
            *a += b;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThresholdVerdict {
    pub name: String,
    pub target: String,
    pub comparator: String,
    pub limit_percent: String,
    pub measured: String,
    pub measured_num: u64,
    pub measured_den: u64,
    pub passed: bool,
}

/// Threshold verdicts from final counters (one entry per plan object).
pub fn finalize_aggregates(plan: &CheckPlan, counters: &[ObjectCounters]) -> Vec<ThresholdVerdict> {
    plan.thresholds
        .iter()
        .map(|t| {
            let (num, den) = match &t.target {
                ThresholdTarget::InvalidRecords => counters
                    .iter()
                    .fold((0, 0), |(n, d), c| (n + c.invalid, d + c.records)),
                ThresholdTarget::Rule(id) => match plan.find_rule(id) {
                    Some((oi, ei)) => (counters[oi].per_evaluator[ei], counters[oi].records),
                    None => (0, 0),
                },
            };
            let measured = Rate::new(num, den);
            let passed = match t.comparator {
                Comparator::Le => measured <= t.limit,
                Comparator::Lt => measured < t.limit,
            };
            ThresholdVerdict {
                name: t.name.clone(),
                target: t.target.to_string(),
                comparator: t.comparator.symbol().to_string(),
                limit_percent: t.limit_percent.to_string(),
                measured: measured.to_decimal_string(10),
                measured_num: num,
                measured_den: den,
                passed,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpecMeta {
    pub name: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunMeta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub started_at: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub finished_at: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceTotals {
    pub name: String,
    pub records: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectTotals {
    pub name: String,
    pub source: String,
    pub records: u64,
    pub ragged_records: u64,
    pub invalid_records: u64,
    pub invalid_rate: String,
    pub invalid_rate_num: u64,
    pub invalid_rate_den: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleResult {
    pub rule_id: String,
    pub object: String,
    /// Empty for record rules.
    pub field: String,
    pub kind: String,
    pub dimension: Dimension,
    pub severity: String,
    pub count: u64,
    pub rate: String,
    pub rate_num: u64,
    pub rate_den: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Overall {
    pub records: u64,
    pub invalid_records: u64,
    pub invalid_rate: String,
    pub invalid_rate_num: u64,
    pub invalid_rate_den: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlaggedRef {
    pub path: String,
    pub rows_written: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_per_rule: Option<u64>,
    pub truncated_rules: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QualityReport {
    pub schema_version: u32,
    pub spec: SpecMeta,
    pub run: RunMeta,
    pub sources: Vec<SourceTotals>,
    pub objects: Vec<ObjectTotals>,
    pub rules: Vec<RuleResult>,
    pub overall: Overall,
    pub thresholds: Vec<ThresholdVerdict>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flagged: Option<FlaggedRef>,
    /// `pass` when every threshold passes.
    pub verdict: String,
}

impl QualityReport {
    pub fn passed(&self) -> bool {
        self.verdict == "pass"
    }

    pub fn rule(&self, rule_id: &str) -> Option<&RuleResult> {
        self.rules.iter().find(|r| r.rule_id == rule_id)
    }
}

/// Where a source's bytes come from.
#[derive(Debug, Clone)]
pub enum SourceData {
    Path(PathBuf),
    Bytes(Arc<[u8]>),
}

impl SourceData {
    fn open(
        &self,
        dialect: &DialectConfig,
    ) -> Result<DatasetReader<Box<dyn Read + Send>>, IngestError> {
        let r: Box<dyn Read + Send> = match self {
            SourceData::Path(p) => Box::new(open_file(p)?),
            SourceData::Bytes(b) => Box::new(io::Cursor::new(Arc::clone(b))),
        };
        DatasetReader::from_reader(r, dialect)
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    /// Worker threads; 1 evaluates on the calling thread.
    pub jobs: usize,
    pub batch_size: usize,
    pub timestamps: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            jobs: 1,
            batch_size: 4096,
            timestamps: false,
        }
    }
}

struct Outcome {
    ordinal: u64,
    ragged: Option<usize>,
    violations: Vec<Violation>,
    probes: Vec<UniqueProbe>,
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

/// Executes the plan. `sources` is indexed like `plan.sources`.
pub fn run(
    plan: &CheckPlan,
    sources: &[SourceData],
    options: &RunOptions,
    sink: &mut dyn ViolationSink,
) -> Result<QualityReport, EngineError> {
    let started_at = options.timestamps.then(now);
    let pool = if options.jobs > 1 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(options.jobs)
                .build()
                .map_err(|e| EngineError::Pool(e.to_string()))?,
        )
    } else {
        None
    };
    let open = |si: usize| {
        let src = &plan.sources[si];
        let data = sources
            .get(si)
            .ok_or_else(|| EngineError::Unbound(src.name.clone()))?;
        data.open(&src.dialect)
            .map_err(|error| EngineError::Ingest {
                source_name: src.name.clone(),
                error,
            })
    };
    let mut source_records: Vec<Option<u64>> = vec![None; plan.sources.len()];

    let mut indexes = Vec::with_capacity(plan.lookups.len());
    for key in &plan.lookups {
        let src = &plan.sources[key.source];
        let mut reader = open(key.source)?;
        let (index, records) =
            build_lookup_index(&mut reader, &key.column, &src.dialect).map_err(|error| {
                EngineError::Ingest {
                    source_name: src.name.clone(),
                    error,
                }
            })?;
        source_records[key.source].get_or_insert(records);
        indexes.push(index);
    }

    let batch_size = options.batch_size.max(1);
    let mut counters = Vec::with_capacity(plan.objects.len());
    for object in &plan.objects {
        let src = &plan.sources[object.source];
        let ingest_err = |error| EngineError::Ingest {
            source_name: src.name.clone(),
            error,
        };
        let mut reader = open(object.source)?;
        let bound = object
            .fields
            .iter()
            .map(|f| {
                Ok(BoundField {
                    name: Arc::clone(&f.name),
                    cell: reader.resolve(&f.column)?,
                    vtype: f.vtype.clone(),
                })
            })
            .collect::<Result<Vec<_>, IngestError>>()
            .map_err(ingest_err)?;
        let mut trackers = UniqueTrackers::default();
        let mut c = ObjectCounters::new(object.evaluators.len());
        let eval = |rec: &RawRecord| -> Outcome {
            if rec.is_ragged() {
                return Outcome {
                    ordinal: rec.ordinal,
                    ragged: Some(rec.cells.len()),
                    violations: Vec::new(),
                    probes: Vec::new(),
                };
            }
            let inst = project_object(rec, &bound, &src.dialect);
            let (violations, probes) = evaluate_stateless(&inst, object, plan, &indexes);
            Outcome {
                ordinal: rec.ordinal,
                ragged: None,
                violations,
                probes,
            }
        };
        let mut batch: Vec<RawRecord> = Vec::with_capacity(batch_size);
        let mut done = false;
        while !done {
            batch.clear();
            while batch.len() < batch_size {
                match reader.next_record() {
                    Some(r) => batch.push(r.map_err(ingest_err)?),
                    None => {
                        done = true;
                        break;
                    }
                }
            }
            if batch.is_empty() {
                break;
            }
            let outcomes: Vec<Outcome> = match &pool {
                Some(pool) => pool.install(|| batch.par_iter().map(eval).collect()),
                None => batch.iter().map(eval).collect(),
            };
            for o in outcomes {
                c.records += 1;
                let mut violations = o.violations;
                if let Some(width) = o.ragged {
                    c.ragged += 1;
                    violations.push(Violation {
                        rule_id: Arc::clone(&object.row_width_id),
                        record_ordinal: o.ordinal,
                        field: Arc::from(""),
                        raw_value: String::new(),
                        severity: Severity::Error,
                        message: format!(
                            "row has {width} cells, expected {}",
                            reader.width().unwrap_or(0)
                        ),
                        dimension: Dimension::Validity,
                        evaluator: usize::MAX,
                    });
                }
                apply_probes(o.ordinal, object, o.probes, &mut trackers, &mut violations);
                if violations.iter().any(|v| v.severity == Severity::Error) {
                    c.invalid += 1;
                }
                for v in &violations {
                    if v.evaluator != usize::MAX {
                        c.per_evaluator[v.evaluator] += 1;
                    }
                    sink.accept(v).map_err(EngineError::Sink)?;
                }
            }
        }
        source_records[object.source] = Some(c.records);
        counters.push(c);
    }

    let thresholds = finalize_aggregates(plan, &counters);
    let verdict = if thresholds.iter().all(|t| t.passed) {
        "pass"
    } else {
        "fail"
    };
    Ok(assemble_report(
        plan,
        &source_records,
        &counters,
        thresholds,
        RunMeta {
            started_at,
            finished_at: options.timestamps.then(now),
        },
        verdict,
    ))
}

fn assemble_report(
    plan: &CheckPlan,
    source_records: &[Option<u64>],
    counters: &[ObjectCounters],
    thresholds: Vec<ThresholdVerdict>,
    run: RunMeta,
    verdict: &str,
) -> QualityReport {
    let rate = |n: u64, d: u64| Rate::new(n, d).to_decimal_string(10);
    let mut rules = Vec::new();
    let mut objects = Vec::new();
    for (o, c) in plan.objects.iter().zip(counters) {
        for (ev, &count) in o.evaluators.iter().zip(&c.per_evaluator) {
            rules.push(RuleResult {
                rule_id: ev.rule_id.to_string(),
                object: o.name.clone(),
                field: ev
                    .field
                    .map(|f| o.fields[f].name.to_string())
                    .unwrap_or_default(),
                kind: ev.kind.name().to_string(),
                dimension: ev.dimension,
                severity: ev.severity.as_str().to_string(),
                count,
                rate: rate(count, c.records),
                rate_num: count,
                rate_den: c.records,
            });
        }
        objects.push(ObjectTotals {
            name: o.name.clone(),
            source: plan.sources[o.source].name.clone(),
            records: c.records,
            ragged_records: c.ragged,
            invalid_records: c.invalid,
            invalid_rate: rate(c.invalid, c.records),
            invalid_rate_num: c.invalid,
            invalid_rate_den: c.records,
        });
    }
    let records: u64 = counters.iter().map(|c| c.records).sum();
    let invalid: u64 = counters.iter().map(|c| c.invalid).sum();
    QualityReport {
        schema_version: REPORT_SCHEMA_VERSION,
        spec: SpecMeta {
            name: plan.spec_name.clone(),
            sha256: plan.spec_hash.clone(),
        },
        run,
        sources: plan
            .sources
            .iter()
            .zip(source_records)
            .filter_map(|(s, r)| {
                r.map(|records| SourceTotals {
                    name: s.name.clone(),
                    records,
                })
            })
            .collect(),
        objects,
        rules,
        overall: Overall {
            records,
            invalid_records: invalid,
            invalid_rate: rate(invalid, records),
            invalid_rate_num: invalid,
            invalid_rate_den: records,
        },
        thresholds,
        flagged: None,
        verdict: verdict.to_string(),
    }
}
