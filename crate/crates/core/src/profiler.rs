//! Single-pass column profiling and draft-spec suggestion.

use crate::ingest::{trim_cell, DatasetReader, DialectConfig, IngestError};
use crate::rate::Rate;
use crate::speclang::ast::{
    ColumnRef, ConstraintDecl, ConstraintKind, DateFormatSpec, FieldDecl, FieldType, ObjectDecl,
    Pos, Severity, SourceDecl, SpecAst,
};
use crate::speclang::datefmt::DateFormat;
use crate::speclang::format_spec_annotated;
use crate::speclang::lexer::is_keyword;
use chrono::NaiveDate;
use rust_decimal::Decimal;
use serde::Serialize;
use std::collections::{HashMap, HashSet};
use std::io::Read;
use std::str::FromStr;

/// Date layouts recognized during profiling.
pub const DATE_PRESETS: [&str; 3] = ["YYYY-MM-DD", "DD.MM.YYYY", "DD/MM/YYYY"];

#[derive(Debug, Clone)]
pub struct ProfileOptions {
    pub top_k: usize,
    /// Distinct values tracked exactly; beyond this the count is a lower bound.
    pub distinct_cap: usize,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        ProfileOptions {
            top_k: 5,
            distinct_cap: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct TypeTally {
    pub integer: u64,
    /// Cells parsing as decimal (integers included).
    pub decimal: u64,
    /// Cells parsing under each of [`DATE_PRESETS`].
    pub date: [u64; 3],
    /// Non-null cells matching no other type.
    pub text_only: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InferredType {
    Integer,
    Decimal,
    /// Index into [`DATE_PRESETS`].
    Date(usize),
    Text,
}

impl InferredType {
    pub fn field_type(self) -> FieldType {
        match self {
            InferredType::Integer => FieldType::Integer,
            InferredType::Decimal => FieldType::Decimal,
            InferredType::Date(0) => FieldType::Date(DateFormatSpec::Iso),
            InferredType::Date(i) => {
                FieldType::Date(DateFormatSpec::Custom(DATE_PRESETS[i].into()))
            }
            InferredType::Text => FieldType::Text,
        }
    }

    pub fn label(self) -> String {
        match self {
            InferredType::Date(i) => format!("date {}", DATE_PRESETS[i]),
            InferredType::Integer => "integer".into(),
            InferredType::Decimal => "decimal".into(),
            InferredType::Text => "text".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ColumnProfile {
    pub name: String,
    pub records: u64,
    pub nulls: u64,
    pub distinct: u64,
    pub distinct_exact: bool,
    pub tally: TypeTally,
    /// Narrowest type every non-null value satisfies.
    pub inferred: InferredType,
    /// Extremes under the inferred type, rendered as text.
    pub min: Option<String>,
    pub max: Option<String>,
    /// Longest trimmed value in characters.
    pub max_length: u64,
    pub top: Vec<(String, u64)>,
}

impl ColumnProfile {
    pub fn non_null(&self) -> u64 {
        self.records - self.nulls
    }

    pub fn null_rate(&self) -> Rate {
        Rate::new(self.nulls, self.records)
    }

    /// Share of non-null values parsing as `t`.
    pub fn agreement(&self, t: InferredType) -> Rate {
        let n = match t {
            InferredType::Integer => self.tally.integer,
            InferredType::Decimal => self.tally.decimal,
            InferredType::Date(i) => self.tally.date[i],
            InferredType::Text => self.non_null(),
        };
        Rate::new(n, self.non_null())
    }
}

/// Mergeable per-column state.
#[derive(Debug, Clone)]
pub struct ColumnAccumulator {
    name: String,
    records: u64,
    nulls: u64,
    tally: TypeTally,
    int_range: Option<(i64, i64)>,
    dec_range: Option<(Decimal, Decimal)>,
    date_range: [Option<(NaiveDate, NaiveDate)>; 3],
    text_range: Option<(String, String)>,
    max_length: u64,
    counts: HashMap<String, u64>,
    overflow: bool,
}

fn widen<T: PartialOrd + Clone>(range: &mut Option<(T, T)>, v: T) {
    match range {
        None => *range = Some((v.clone(), v)),
        Some((lo, hi)) => {
            if v < *lo {
                *lo = v;
            } else if v > *hi {
                *hi = v;
            }
        }
    }
}

fn join<T: PartialOrd + Clone>(a: &mut Option<(T, T)>, b: &Option<(T, T)>) {
    if let Some((lo, hi)) = b {
        widen(a, lo.clone());
        widen(a, hi.clone());
    }
}

fn is_integer(s: &str) -> bool {
    let d = s.strip_prefix(['+', '-']).unwrap_or(s);
    !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit())
}

fn is_decimal(s: &str) -> bool {
    let body = s.strip_prefix(['+', '-']).unwrap_or(s);
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    !(int.is_empty() && frac.is_empty())
        && int.bytes().all(|b| b.is_ascii_digit())
        && frac.bytes().all(|b| b.is_ascii_digit())
        && !(body.contains('.') && frac.is_empty())
}

impl ColumnAccumulator {
    pub fn new(name: impl Into<String>) -> Self {
        ColumnAccumulator {
            name: name.into(),
            records: 0,
            nulls: 0,
            tally: TypeTally::default(),
            int_range: None,
            dec_range: None,
            date_range: [None, None, None],
            text_range: None,
            max_length: 0,
            counts: HashMap::new(),
            overflow: false,
        }
    }

    pub fn add(
        &mut self,
        raw: Option<&str>,
        dialect: &DialectConfig,
        presets: &[DateFormat],
        cap: usize,
    ) {
        self.records += 1;
        let cell = trim_cell(raw.unwrap_or(""));
        if raw.is_none() || dialect.is_null(cell) {
            self.nulls += 1;
            return;
        }
        let mut typed = false;
        if is_integer(cell) {
            if let Ok(i) = cell.parse::<i64>() {
                self.tally.integer += 1;
                widen(&mut self.int_range, i);
                typed = true;
            }
        }
        if is_decimal(cell) {
            if let Ok(d) = Decimal::from_str(cell) {
                self.tally.decimal += 1;
                widen(&mut self.dec_range, d);
                typed = true;
            }
        }
        for (i, f) in presets.iter().enumerate() {
            if let Some(d) = f.parse(cell) {
                self.tally.date[i] += 1;
                widen(&mut self.date_range[i], d);
                typed = true;
            }
        }
        if !typed {
            self.tally.text_only += 1;
        }
        match &mut self.text_range {
            Some((lo, hi)) => {
                if cell < lo.as_str() {
                    *lo = cell.to_string();
                } else if cell > hi.as_str() {
                    *hi = cell.to_string();
                }
            }
            None => self.text_range = Some((cell.to_string(), cell.to_string())),
        }
        self.max_length = self.max_length.max(cell.chars().count() as u64);
        if let Some(n) = self.counts.get_mut(cell) {
            *n += 1;
        } else if self.counts.len() < cap {
            self.counts.insert(cell.to_string(), 1);
        } else {
            self.overflow = true;
        }
    }

    pub fn merge(&mut self, other: &ColumnAccumulator, cap: usize) {
        self.records += other.records;
        self.nulls += other.nulls;
        self.tally.integer += other.tally.integer;
        self.tally.decimal += other.tally.decimal;
        for i in 0..3 {
            self.tally.date[i] += other.tally.date[i];
            join(&mut self.date_range[i], &other.date_range[i]);
        }
        self.tally.text_only += other.tally.text_only;
        join(&mut self.int_range, &other.int_range);
        join(&mut self.dec_range, &other.dec_range);
        join(&mut self.text_range, &other.text_range);
        self.max_length = self.max_length.max(other.max_length);
        self.overflow |= other.overflow;
        let mut keys: Vec<&String> = other.counts.keys().collect();
        keys.sort();
        for k in keys {
            let n = other.counts[k];
            if let Some(m) = self.counts.get_mut(k) {
                *m += n;
            } else if self.counts.len() < cap {
                self.counts.insert(k.clone(), n);
            } else {
                self.overflow = true;
            }
        }
    }

    pub fn finish(&self, top_k: usize) -> ColumnProfile {
        let non_null = self.records - self.nulls;
        let inferred = if non_null == 0 {
            InferredType::Text
        } else if self.tally.integer == non_null {
            InferredType::Integer
        } else if self.tally.decimal == non_null {
            InferredType::Decimal
        } else if let Some(i) = (0..3).find(|&i| self.tally.date[i] == non_null) {
            InferredType::Date(i)
        } else {
            InferredType::Text
        };
        let (min, max) = self.extremes(inferred);
        let mut top: Vec<(String, u64)> =
            self.counts.iter().map(|(k, v)| (k.clone(), *v)).collect();
        top.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        top.truncate(top_k);
        ColumnProfile {
            name: self.name.clone(),
            records: self.records,
            nulls: self.nulls,
            distinct: self.counts.len() as u64,
            distinct_exact: !self.overflow,
            tally: self.tally,
            inferred,
            min,
            max,
            max_length: self.max_length,
            top,
        }
    }

    fn extremes(&self, t: InferredType) -> (Option<String>, Option<String>) {
        fn pair<T: ToString>(r: &Option<(T, T)>) -> (Option<String>, Option<String>) {
            match r {
                Some((a, b)) => (Some(a.to_string()), Some(b.to_string())),
                None => (None, None),
            }
        }
        match t {
            InferredType::Integer => pair(&self.int_range),
            InferredType::Decimal => pair(&self.dec_range),
            InferredType::Date(i) => match &self.date_range[i] {
                Some((a, b)) => (
                    Some(a.format("%Y-%m-%d").to_string()),
                    Some(b.format("%Y-%m-%d").to_string()),
                ),
                None => (None, None),
            },
            InferredType::Text => pair(&self.text_range),
        }
    }
}

fn presets() -> Vec<DateFormat> {
    DATE_PRESETS
        .iter()
        .map(|p| DateFormat::compile(p).expect("preset compiles"))
        .collect()
}

/// Profiles every column of `reader` in one pass.
pub fn profile<R: Read>(
    reader: &mut DatasetReader<R>,
    dialect: &DialectConfig,
    options: &ProfileOptions,
) -> Result<Vec<ColumnProfile>, IngestError> {
    let presets = presets();
    let names: Vec<String> = match reader.headers() {
        Some(h) => h.iter().map(|c| trim_cell(c).to_string()).collect(),
        None => (1..=reader.width().unwrap_or(0))
            .map(|i| format!("column_{i}"))
            .collect(),
    };
    let mut acc: Vec<ColumnAccumulator> = names.into_iter().map(ColumnAccumulator::new).collect();
    for rec in reader.by_ref() {
        let rec = rec?;
        for (i, a) in acc.iter_mut().enumerate() {
            a.add(
                rec.cells.get(i).map(String::as_str),
                dialect,
                &presets,
                options.distinct_cap,
            );
        }
    }
    Ok(acc.iter().map(|a| a.finish(options.top_k)).collect())
}

/// Renders profiles as an aligned text table.
pub fn render_profiles(profiles: &[ColumnProfile]) -> String {
    let mut rows = vec![[
        "column".to_string(),
        "records".into(),
        "nulls".into(),
        "null_rate".into(),
        "distinct".into(),
        "type".into(),
        "min".into(),
        "max".into(),
        "max_len".into(),
    ]];
    for p in profiles {
        rows.push([
            p.name.clone(),
            p.records.to_string(),
            p.nulls.to_string(),
            p.null_rate().to_decimal_string(4),
            format!("{}{}", p.distinct, if p.distinct_exact { "" } else { "+" }),
            p.inferred.label(),
            p.min.clone().unwrap_or_default(),
            p.max.clone().unwrap_or_default(),
            p.max_length.to_string(),
        ]);
    }
    let widths: Vec<usize> = (0..9)
        .map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for r in &rows {
        let line: Vec<String> = r
            .iter()
            .zip(&widths)
            .map(|(cell, w)| format!("{cell:<w$}"))
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuggestPolicy {
    pub not_null_max_null_rate: f64,
    pub type_min_agreement: f64,
    pub unique_hint_min_distinct_ratio: f64,
}

impl Default for SuggestPolicy {
    fn default() -> Self {
        SuggestPolicy {
            not_null_max_null_rate: 0.0,
            type_min_agreement: 1.0,
            unique_hint_min_distinct_ratio: 1.0,
        }
    }
}

/// A suggested spec plus the per-field explanation comments.
#[derive(Debug, Clone, PartialEq)]
pub struct Draft {
    pub ast: SpecAst,
    pub comments: HashMap<(String, String), Vec<String>>,
}

impl Draft {
    pub fn render(&self) -> String {
        format_spec_annotated(&self.ast, &self.comments)
    }
}

/// Lowercase identifier safe for the spec language.
pub fn sanitize_ident(raw: &str) -> String {
    let mut s = String::new();
    for c in raw.trim().chars().flat_map(char::to_lowercase) {
        if c.is_ascii_alphanumeric() {
            s.push(c);
        } else if !s.ends_with('_') {
            s.push('_');
        }
    }
    let s = s.trim_matches('_').to_string();
    if s.is_empty() {
        "column".into()
    } else if s.starts_with(|c: char| c.is_ascii_digit()) || is_keyword(&s) {
        format!("c_{s}")
    } else {
        s
    }
}

/// Where the draft's source lives and how to read it.
#[derive(Debug, Clone)]
pub struct DraftSource {
    pub spec_name: String,
    pub object_name: String,
    pub path: String,
    pub dialect: DialectConfig,
}

fn rate_le(r: Rate, limit: f64) -> bool {
    r.as_f64() <= limit + 1e-12
}

pub fn suggest_spec(
    profiles: &[ColumnProfile],
    policy: &SuggestPolicy,
    source: &DraftSource,
) -> Draft {
    let defaults = DialectConfig::default();
    let d = &source.dialect;
    let src_decl = SourceDecl {
        name: "data".into(),
        path: source.path.clone(),
        delimiter: (d.delimiter != defaults.delimiter).then(|| (d.delimiter as char).to_string()),
        quote: (d.quote != defaults.quote).then(|| (d.quote as char).to_string()),
        header: (!d.has_header).then_some(false),
        nulls: (d.null_tokens != defaults.null_tokens).then(|| d.null_tokens.clone()),
        pos: Pos::default(),
    };
    let object = sanitize_ident(&source.object_name);
    let mut used = HashSet::new();
    let mut comments = HashMap::new();
    let mut fields = Vec::new();
    for (i, p) in profiles.iter().enumerate() {
        let base = sanitize_ident(&p.name);
        let mut name = base.clone();
        let mut n = 2;
        while !used.insert(name.clone()) {
            name = format!("{base}_{n}");
            n += 1;
        }
        let non_null = p.non_null();
        let candidates = [
            InferredType::Integer,
            InferredType::Decimal,
            InferredType::Date(0),
            InferredType::Date(1),
            InferredType::Date(2),
        ];
        let inferred = if non_null == 0 {
            InferredType::Text
        } else {
            candidates
                .into_iter()
                .find(|t| p.agreement(*t).as_f64() >= policy.type_min_agreement - 1e-12)
                .unwrap_or(InferredType::Text)
        };
        let mut notes = vec![format!(
            "suggested: {} ({}/{} non-null values agree)",
            inferred.label(),
            match inferred {
                InferredType::Text => non_null,
                t => p.agreement(t).numerator() as u64,
            },
            non_null
        )];
        let mut constraints = Vec::new();
        let null_rate = p.null_rate();
        notes.push(format!(
            "nulls: {}/{} ({})",
            p.nulls,
            p.records,
            null_rate.percent_sig(4)
        ));
        if p.records > 0 && rate_le(null_rate, policy.not_null_max_null_rate) {
            constraints.push(ConstraintDecl {
                kind: ConstraintKind::NotNull,
                severity: Severity::Error,
                label: None,
                pos: Pos::default(),
            });
        }
        if p.distinct_exact && non_null > 1 {
            let ratio = Rate::new(p.distinct, non_null);
            if ratio.as_f64() >= policy.unique_hint_min_distinct_ratio - 1e-12 {
                notes.push(format!(
                    "unique hint: {} distinct of {non_null}",
                    p.distinct
                ));
                constraints.push(ConstraintDecl {
                    kind: ConstraintKind::Unique,
                    severity: Severity::Warning,
                    label: None,
                    pos: Pos::default(),
                });
            }
        }
        let column = if d.has_header {
            ColumnRef::Name(p.name.clone())
        } else {
            ColumnRef::Index(i as u32 + 1)
        };
        comments.insert((object.clone(), name.clone()), notes);
        fields.push(FieldDecl {
            name,
            ftype: inferred.field_type(),
            column: Some(column),
            constraints,
            pos: Pos::default(),
        });
    }
    let ast = SpecAst {
        name: sanitize_ident(&source.spec_name),
        sources: vec![src_decl],
        objects: vec![ObjectDecl {
            name: object,
            source: "data".into(),
            fields,
            record_rules: Vec::new(),
            pos: Pos::default(),
        }],
        collection_rules: Vec::new(),
        pos: Pos::default(),
    };
    Draft { ast, comments }
}
