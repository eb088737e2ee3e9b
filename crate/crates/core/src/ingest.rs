//! Streaming CSV ingestion, typed cell parsing and data-object projection.

use crate::speclang::ast::{ColumnRef, DateFormatSpec, FieldType};
use crate::speclang::datefmt::{DateFormat, DateFormatError};
use chrono::NaiveDate;
use rust_decimal::Decimal;
use std::borrow::Cow;
use std::cmp::Ordering;
use std::fmt;
use std::fs::File;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("{path}: file not found")]
    FileNotFound { path: PathBuf },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("header has no column '{column}'")]
    HeaderMissingColumn { column: String },
    #[error("column index {index} is outside the {width}-column row")]
    ColumnOutOfRange { index: u32, width: usize },
    #[error("record {ordinal}: {source}")]
    Csv {
        ordinal: u64,
        #[source]
        source: csv::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DialectConfig {
    pub delimiter: u8,
    pub quote: u8,
    pub has_header: bool,
    pub null_tokens: Vec<String>,
}

impl Default for DialectConfig {
    fn default() -> Self {
        Self {
            delimiter: b',',
            quote: b'"',
            has_header: true,
            null_tokens: vec![String::new()],
        }
    }
}

impl DialectConfig {
    pub fn is_null(&self, trimmed: &str) -> bool {
        self.null_tokens.iter().any(|t| t.trim() == trimmed)
    }
}

/// Trims leading and trailing ASCII whitespace.
pub fn trim_cell(raw: &str) -> &str {
    raw.trim_matches(|c: char| c.is_ascii_whitespace())
}

/// Field type with its date format compiled.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ValueType {
    Text,
    Integer,
    Decimal,
    Date(DateFormat),
    Enum(Vec<String>),
}

impl ValueType {
    pub fn from_field_type(t: &FieldType) -> Result<Self, DateFormatError> {
        Ok(match t {
            FieldType::Text => ValueType::Text,
            FieldType::Integer => ValueType::Integer,
            FieldType::Decimal => ValueType::Decimal,
            FieldType::Date(DateFormatSpec::Iso) => ValueType::Date(DateFormat::iso()),
            FieldType::Date(DateFormatSpec::Custom(p)) => ValueType::Date(DateFormat::compile(p)?),
            FieldType::Enum(v) => ValueType::Enum(v.clone()),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FailureReason {
    NotAnInteger,
    NotADecimal,
    NotADate,
    NotInEnum,
}

impl fmt::Display for FailureReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FailureReason::NotAnInteger => "not-an-integer",
            FailureReason::NotADecimal => "not-a-decimal",
            FailureReason::NotADate => "not-a-date",
            FailureReason::NotInEnum => "not-in-enum",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TypedValue {
    Null,
    Text(String),
    Integer(i64),
    Decimal(Decimal),
    Date(NaiveDate),
    ParseFailure { raw: String, reason: FailureReason },
}

impl TypedValue {
    pub fn is_null(&self) -> bool {
        matches!(self, TypedValue::Null)
    }

    /// Canonical text of a successfully parsed value; used for uniqueness
    /// keys and reference lookups.
    pub fn canonical_text(&self) -> Option<Cow<'_, str>> {
        match self {
            TypedValue::Text(s) => Some(Cow::Borrowed(s)),
            TypedValue::Integer(i) => Some(Cow::Owned(i.to_string())),
            TypedValue::Decimal(d) => Some(Cow::Owned(d.normalize().to_string())),
            TypedValue::Date(d) => Some(Cow::Owned(d.format("%Y-%m-%d").to_string())),
            TypedValue::Null | TypedValue::ParseFailure { .. } => None,
        }
    }

    /// Ordering between two non-null values of compatible types.
    pub fn compare(&self, other: &TypedValue) -> Option<Ordering> {
        use TypedValue::*;
        match (self, other) {
            (Text(a), Text(b)) => Some(a.as_str().cmp(b.as_str())),
            (Integer(a), Integer(b)) => Some(a.cmp(b)),
            (Integer(a), Decimal(b)) => Some(rust_decimal::Decimal::from(*a).cmp(b)),
            (Decimal(a), Integer(b)) => Some(a.cmp(&rust_decimal::Decimal::from(*b))),
            (Decimal(a), Decimal(b)) => Some(a.cmp(b)),
            (Date(a), Date(b)) => Some(a.cmp(b)),
            _ => None,
        }
    }
}

fn parse_integer(s: &str) -> Option<i64> {
    let digits = s.strip_prefix(['+', '-']).unwrap_or(s);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    s.parse().ok()
}

fn parse_decimal(s: &str) -> Option<Decimal> {
    let body = s.strip_prefix(['+', '-']).unwrap_or(s);
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    let ok = !(int.is_empty() && frac.is_empty())
        && int.bytes().all(|b| b.is_ascii_digit())
        && frac.bytes().all(|b| b.is_ascii_digit())
        && !(body.contains('.') && frac.is_empty());
    if !ok {
        return None;
    }
    Decimal::from_str(s).ok()
}

/// Refines one raw cell. Total: failures are values, never errors.
pub fn parse_value(raw: &str, ftype: &ValueType, dialect: &DialectConfig) -> TypedValue {
    let cell = trim_cell(raw);
    if dialect.is_null(cell) {
        return TypedValue::Null;
    }
    let fail = |reason| TypedValue::ParseFailure {
        raw: raw.to_string(),
        reason,
    };
    match ftype {
        ValueType::Text => TypedValue::Text(cell.to_string()),
        ValueType::Integer => parse_integer(cell)
            .map(TypedValue::Integer)
            .unwrap_or_else(|| fail(FailureReason::NotAnInteger)),
        ValueType::Decimal => parse_decimal(cell)
            .map(TypedValue::Decimal)
            .unwrap_or_else(|| fail(FailureReason::NotADecimal)),
        ValueType::Date(fmt) => fmt
            .parse(cell)
            .map(TypedValue::Date)
            .unwrap_or_else(|| fail(FailureReason::NotADate)),
        ValueType::Enum(values) => {
            if values.iter().any(|v| v == cell) {
                TypedValue::Text(cell.to_string())
            } else {
                fail(FailureReason::NotInEnum)
            }
        }
    }
}

/// One data row as read, before typing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawRecord {
    /// 1-based position among data rows.
    pub ordinal: u64,
    pub cells: Vec<String>,
    /// Width every row of the source must have.
    pub expected_width: usize,
}

impl RawRecord {
    pub fn is_ragged(&self) -> bool {
        self.cells.len() != self.expected_width
    }
}

/// Forward-only reader over one CSV source.
pub struct DatasetReader<R: io::Read = File> {
    inner: csv::Reader<R>,
    headers: Option<Vec<String>>,
    width: Option<usize>,
    peeked: Option<Vec<String>>,
    next_ordinal: u64,
    first: bool,
    failed: bool,
}

pub fn open_dataset(path: &Path, dialect: &DialectConfig) -> Result<DatasetReader, IngestError> {
    DatasetReader::from_reader(open_file(path)?, dialect)
}

/// Opens a data file, mapping a missing path to [`IngestError::FileNotFound`].
pub fn open_file(path: &Path) -> Result<File, IngestError> {
    File::open(path).map_err(|e| {
        if e.kind() == io::ErrorKind::NotFound {
            IngestError::FileNotFound {
                path: path.to_path_buf(),
            }
        } else {
            IngestError::Io {
                path: path.to_path_buf(),
                source: e,
            }
        }
    })
}

impl<R: io::Read> DatasetReader<R> {
    pub fn from_reader(reader: R, dialect: &DialectConfig) -> Result<Self, IngestError> {
        let inner = csv::ReaderBuilder::new()
            .delimiter(dialect.delimiter)
            .quote(dialect.quote)
            .has_headers(false)
            .flexible(true)
            .from_reader(reader);
        let mut r = DatasetReader {
            inner,
            headers: None,
            width: None,
            peeked: None,
            next_ordinal: 1,
            first: true,
            failed: false,
        };
        let first = r.read_row(0)?;
        if dialect.has_header {
            let header = first.unwrap_or_default();
            r.width = (!header.is_empty()).then_some(header.len());
            r.headers = Some(header);
        } else {
            r.width = first.as_ref().map(Vec::len);
            r.peeked = first;
        }
        Ok(r)
    }

    fn read_row(&mut self, ordinal: u64) -> Result<Option<Vec<String>>, IngestError> {
        let mut rec = csv::StringRecord::new();
        match self.inner.read_record(&mut rec) {
            Ok(false) => Ok(None),
            Ok(true) => {
                let mut cells: Vec<String> = rec.iter().map(str::to_string).collect();
                if self.first {
                    self.first = false;
                    if let Some(c) = cells.first_mut() {
                        if let Some(stripped) = c.strip_prefix('\u{feff}') {
                            *c = stripped.to_string();
                        }
                    }
                }
                Ok(Some(cells))
            }
            Err(source) => Err(IngestError::Csv { ordinal, source }),
        }
    }

    pub fn headers(&self) -> Option<&[String]> {
        self.headers.as_deref()
    }

    /// Number of cells every row must have, once known.
    pub fn width(&self) -> Option<usize> {
        self.width
    }

    /// Resolves a column binding to a 0-based cell index.
    pub fn resolve(&self, column: &ColumnRef) -> Result<usize, IngestError> {
        match column {
            ColumnRef::Name(name) => self
                .headers
                .as_ref()
                .and_then(|h| h.iter().position(|c| trim_cell(c) == name))
                .ok_or_else(|| IngestError::HeaderMissingColumn {
                    column: name.clone(),
                }),
            ColumnRef::Index(i) => {
                let idx = (*i as usize).checked_sub(1);
                match (idx, self.width) {
                    (Some(idx), Some(w)) if idx < w => Ok(idx),
                    (Some(idx), None) => Ok(idx),
                    _ => Err(IngestError::ColumnOutOfRange {
                        index: *i,
                        width: self.width.unwrap_or(0),
                    }),
                }
            }
        }
    }

    pub fn next_record(&mut self) -> Option<Result<RawRecord, IngestError>> {
        if self.failed {
            return None;
        }
        let ordinal = self.next_ordinal;
        let row = match self.peeked.take() {
            Some(r) => Some(r),
            None => match self.read_row(ordinal) {
                Ok(r) => r,
                Err(e) => {
                    self.failed = true;
                    return Some(Err(e));
                }
            },
        }?;
        self.next_ordinal += 1;
        let expected_width = *self.width.get_or_insert(row.len());
        Some(Ok(RawRecord {
            ordinal,
            cells: row,
            expected_width,
        }))
    }
}

impl<R: io::Read> Iterator for DatasetReader<R> {
    type Item = Result<RawRecord, IngestError>;

    fn next(&mut self) -> Option<Self::Item> {
        self.next_record()
    }
}

/// A data-object field bound to a concrete cell position.
#[derive(Debug, Clone)]
pub struct BoundField {
    pub name: Arc<str>,
    pub cell: usize,
    pub vtype: ValueType,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldValue {
    pub name: Arc<str>,
    /// Untrimmed cell text.
    pub raw: String,
    pub value: TypedValue,
}

/// One record projected onto the analyzed fields only, in declaration order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataObjectInstance {
    pub record_ordinal: u64,
    pub values: Vec<FieldValue>,
}

impl DataObjectInstance {
    pub fn get(&self, field: &str) -> Option<&FieldValue> {
        self.values.iter().find(|v| &*v.name == field)
    }
}

/// Projects a well-formed record onto the bound fields.
pub fn project_object(
    record: &RawRecord,
    fields: &[BoundField],
    dialect: &DialectConfig,
) -> DataObjectInstance {
    let values = fields
        .iter()
        .map(|f| {
            let raw = record.cells.get(f.cell).map(String::as_str).unwrap_or("");
            FieldValue {
                name: Arc::clone(&f.name),
                raw: raw.to_string(),
                value: parse_value(raw, &f.vtype, dialect),
            }
        })
        .collect();
    DataObjectInstance {
        record_ordinal: record.ordinal,
        values,
    }
}
