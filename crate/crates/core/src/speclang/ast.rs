//! Syntax tree for `.dq` quality specifications.
//!
//! Every node carries the [`Pos`] of its first token. Structural comparisons
//! that should ignore positions go through [`SpecAst::without_positions`].

use chrono::NaiveDate;
use rust_decimal::Decimal;
use std::fmt;

/// 1-based line and column (in characters) of a token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl Pos {
    pub fn new(line: u32, col: u32) -> Self {
        Self { line, col }
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpecAst {
    pub name: String,
    pub sources: Vec<SourceDecl>,
    pub objects: Vec<ObjectDecl>,
    pub collection_rules: Vec<ThresholdDecl>,
    pub pos: Pos,
}

/// A CSV source. Options left as `None` take the dialect defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceDecl {
    pub name: String,
    pub path: String,
    pub delimiter: Option<String>,
    pub quote: Option<String>,
    pub header: Option<bool>,
    pub nulls: Option<Vec<String>>,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectDecl {
    pub name: String,
    pub source: String,
    pub fields: Vec<FieldDecl>,
    pub record_rules: Vec<RecordRuleDecl>,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ColumnRef {
    Name(String),
    /// 1-based column position.
    Index(u32),
}

impl fmt::Display for ColumnRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ColumnRef::Name(n) => write!(f, "{n}"),
            ColumnRef::Index(i) => write!(f, "#{i}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldDecl {
    pub name: String,
    pub ftype: FieldType,
    /// Explicit binding; `None` binds by the field name.
    pub column: Option<ColumnRef>,
    pub constraints: Vec<ConstraintDecl>,
    pub pos: Pos,
}

impl FieldDecl {
    pub fn column_ref(&self) -> ColumnRef {
        self.column
            .clone()
            .unwrap_or_else(|| ColumnRef::Name(self.name.clone()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum DateFormatSpec {
    Iso,
    Custom(String),
}

impl DateFormatSpec {
    pub fn pattern(&self) -> &str {
        match self {
            DateFormatSpec::Iso => "YYYY-MM-DD",
            DateFormatSpec::Custom(p) => p,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum FieldType {
    Text,
    Integer,
    Decimal,
    Date(DateFormatSpec),
    Enum(Vec<String>),
}

impl FieldType {
    pub fn keyword(&self) -> &'static str {
        match self {
            FieldType::Text => "text",
            FieldType::Integer => "integer",
            FieldType::Decimal => "decimal",
            FieldType::Date(_) => "date",
            FieldType::Enum(_) => "enum",
        }
    }

    /// Types whose cells can fail to parse.
    pub fn is_checked(&self) -> bool {
        !matches!(self, FieldType::Text)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub enum Severity {
    #[default]
    Error,
    Warning,
}

impl Severity {
    pub fn as_str(self) -> &'static str {
        match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
        }
    }
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintDecl {
    pub kind: ConstraintKind,
    pub severity: Severity,
    /// Optional `as <label>`; the rule id becomes `<object>.<label>`.
    pub label: Option<String>,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConstraintKind {
    NotNull,
    Unique,
    Matches(String),
    Min(Literal),
    Max(Literal),
    MinLength(u32),
    MaxLength(u32),
    References { source: String, column: ColumnRef },
}

impl ConstraintKind {
    /// Name used in default rule ids (`object.field.<name>`).
    pub fn id_name(&self) -> &'static str {
        match self {
            ConstraintKind::NotNull => "not_null",
            ConstraintKind::Unique => "unique",
            ConstraintKind::Matches(_) => "matches",
            ConstraintKind::Min(_) => "min",
            ConstraintKind::Max(_) => "max",
            ConstraintKind::MinLength(_) => "min_length",
            ConstraintKind::MaxLength(_) => "max_length",
            ConstraintKind::References { .. } => "references",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecordRuleDecl {
    pub name: String,
    pub severity: Severity,
    pub expr: Expr,
    pub pos: Pos,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Comparator {
    Le,
    Lt,
}

impl Comparator {
    pub fn symbol(self) -> &'static str {
        match self {
            Comparator::Le => "<=",
            Comparator::Lt => "<",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ThresholdTarget {
    InvalidRecords,
    /// A rule id such as `enterprise.index_missing` or `enterprise.name.not_null`.
    Rule(String),
}

impl fmt::Display for ThresholdTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ThresholdTarget::InvalidRecords => f.write_str("invalid_records"),
            ThresholdTarget::Rule(r) => f.write_str(r),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdDecl {
    pub name: String,
    pub target: ThresholdTarget,
    pub comparator: Comparator,
    /// Limit in percent, kept as the exact decimal written in the source.
    pub limit_percent: Decimal,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Literal {
    Text(String),
    Integer(i64),
    Decimal(Decimal),
    Date(NaiveDate),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    pub fn negate(self) -> CmpOp {
        match self {
            CmpOp::Eq => CmpOp::Ne,
            CmpOp::Ne => CmpOp::Eq,
            CmpOp::Lt => CmpOp::Ge,
            CmpOp::Le => CmpOp::Gt,
            CmpOp::Gt => CmpOp::Le,
            CmpOp::Ge => CmpOp::Lt,
        }
    }

    pub fn holds(self, ord: std::cmp::Ordering) -> bool {
        use std::cmp::Ordering::*;
        match self {
            CmpOp::Eq => ord == Equal,
            CmpOp::Ne => ord != Equal,
            CmpOp::Lt => ord == Less,
            CmpOp::Le => ord != Greater,
            CmpOp::Gt => ord == Greater,
            CmpOp::Ge => ord != Less,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Operand {
    Field(String, Pos),
    Literal(Literal, Pos),
}

impl Operand {
    pub fn pos(&self) -> Pos {
        match self {
            Operand::Field(_, p) | Operand::Literal(_, p) => *p,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    And(Box<Expr>, Box<Expr>, Pos),
    Or(Box<Expr>, Box<Expr>, Pos),
    Not(Box<Expr>, Pos),
    IsNull {
        field: String,
        negated: bool,
        pos: Pos,
    },
    Compare {
        op: CmpOp,
        left: Operand,
        right: Operand,
        pos: Pos,
    },
    Matches {
        field: String,
        pattern: String,
        pos: Pos,
    },
}

impl Expr {
    pub fn pos(&self) -> Pos {
        match self {
            Expr::And(_, _, p) | Expr::Or(_, _, p) | Expr::Not(_, p) => *p,
            Expr::IsNull { pos, .. } | Expr::Compare { pos, .. } | Expr::Matches { pos, .. } => {
                *pos
            }
        }
    }

    /// Binding strength used by the parser and the formatter.
    pub fn precedence(&self) -> u8 {
        match self {
            Expr::Or(..) => 1,
            Expr::And(..) => 2,
            Expr::Not(..) => 3,
            _ => 4,
        }
    }

    fn strip(&mut self) {
        match self {
            Expr::And(a, b, p) | Expr::Or(a, b, p) => {
                a.strip();
                b.strip();
                *p = Pos::default();
            }
            Expr::Not(e, p) => {
                e.strip();
                *p = Pos::default();
            }
            Expr::IsNull { pos, .. } | Expr::Matches { pos, .. } => *pos = Pos::default(),
            Expr::Compare {
                left, right, pos, ..
            } => {
                for o in [left, right] {
                    match o {
                        Operand::Field(_, p) | Operand::Literal(_, p) => *p = Pos::default(),
                    }
                }
                *pos = Pos::default();
            }
        }
    }

    /// Field names referenced by the expression, in first-seen order.
    pub fn fields(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_fields(&mut out);
        out
    }

    fn collect_fields<'a>(&'a self, out: &mut Vec<&'a str>) {
        let mut push = |n: &'a str| {
            if !out.contains(&n) {
                out.push(n);
            }
        };
        match self {
            Expr::And(a, b, _) | Expr::Or(a, b, _) => {
                a.collect_fields(out);
                b.collect_fields(out);
            }
            Expr::Not(e, _) => e.collect_fields(out),
            Expr::IsNull { field, .. } | Expr::Matches { field, .. } => push(field),
            Expr::Compare { left, right, .. } => {
                for o in [left, right] {
                    if let Operand::Field(n, _) = o {
                        push(n);
                    }
                }
            }
        }
    }
}

impl SpecAst {
    /// Copy with every position reset, for position-insensitive equality.
    pub fn without_positions(&self) -> SpecAst {
        let mut ast = self.clone();
        ast.pos = Pos::default();
        for s in &mut ast.sources {
            s.pos = Pos::default();
        }
        for o in &mut ast.objects {
            o.pos = Pos::default();
            for f in &mut o.fields {
                f.pos = Pos::default();
                for c in &mut f.constraints {
                    c.pos = Pos::default();
                }
            }
            for r in &mut o.record_rules {
                r.pos = Pos::default();
                r.expr.strip();
            }
        }
        for t in &mut ast.collection_rules {
            t.pos = Pos::default();
        }
        ast
    }
}
