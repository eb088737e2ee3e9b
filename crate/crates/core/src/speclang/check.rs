//! Semantic validation: name resolution, type checking, pattern and format
//! compilation. Produces a [`ValidatedSpec`] or every error found.

use super::ast::*;
use super::error::{SemanticCode as Code, SemanticError, SemanticErrors};
use super::pattern::Pattern;
use crate::ingest::{DialectConfig, TypedValue, ValueType};
use crate::rate::Rate;
use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, HashSet};
use std::fmt;
use std::sync::Arc;

/// DAMA quality dimension a rule measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dimension {
    Completeness,
    Uniqueness,
    Timeliness,
    Validity,
    Accuracy,
    Consistency,
}

impl Dimension {
    pub fn as_str(self) -> &'static str {
        match self {
            Dimension::Completeness => "completeness",
            Dimension::Uniqueness => "uniqueness",
            Dimension::Timeliness => "timeliness",
            Dimension::Validity => "validity",
            Dimension::Accuracy => "accuracy",
            Dimension::Consistency => "consistency",
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Dimension of a field constraint. Bounds on dates measure timeliness,
/// bounds on numbers measure plausibility (accuracy).
pub fn constraint_dimension(kind: &ConstraintKind, ftype: &FieldType) -> Dimension {
    match kind {
        ConstraintKind::NotNull => Dimension::Completeness,
        ConstraintKind::Unique => Dimension::Uniqueness,
        ConstraintKind::Matches(_)
        | ConstraintKind::MinLength(_)
        | ConstraintKind::MaxLength(_) => Dimension::Validity,
        ConstraintKind::Min(_) | ConstraintKind::Max(_) => match ftype {
            FieldType::Date(_) => Dimension::Timeliness,
            FieldType::Text | FieldType::Enum(_) => Dimension::Validity,
            FieldType::Integer | FieldType::Decimal => Dimension::Accuracy,
        },
        ConstraintKind::References { .. } => Dimension::Consistency,
    }
}

#[derive(Debug, Clone)]
pub struct SourceDef {
    pub name: String,
    pub path: String,
    pub dialect: DialectConfig,
}

#[derive(Debug, Clone)]
pub enum CheckKind {
    NotNull,
    Unique,
    Matches(Pattern),
    Min(TypedValue),
    Max(TypedValue),
    MinLength(u32),
    MaxLength(u32),
    References { source: usize, column: ColumnRef },
}

#[derive(Debug, Clone)]
pub struct ConstraintDef {
    pub rule_id: String,
    pub severity: Severity,
    pub dimension: Dimension,
    pub kind: CheckKind,
    pub decl: ConstraintDecl,
}

#[derive(Debug, Clone)]
pub struct FieldDef {
    pub name: Arc<str>,
    pub column: ColumnRef,
    pub ftype: FieldType,
    pub vtype: ValueType,
    /// Rule id of the implicit type-conformance check (`object.field.type`),
    /// present for every type other than `text`.
    pub type_rule_id: Option<String>,
    pub constraints: Vec<ConstraintDef>,
}

/// Record-rule operand resolved to a field index or a typed constant.
#[derive(Debug, Clone)]
pub enum ROperand {
    Field(usize),
    Const(TypedValue),
}

#[derive(Debug, Clone)]
pub enum RExpr {
    And(Box<RExpr>, Box<RExpr>),
    Or(Box<RExpr>, Box<RExpr>),
    Not(Box<RExpr>),
    IsNull {
        field: usize,
        negated: bool,
    },
    Compare {
        op: CmpOp,
        left: ROperand,
        right: ROperand,
    },
    Matches {
        field: usize,
        pattern: Pattern,
    },
}

#[derive(Debug, Clone)]
pub struct RuleDef {
    pub rule_id: String,
    pub name: String,
    pub severity: Severity,
    pub expr: RExpr,
    pub decl: RecordRuleDecl,
}

#[derive(Debug, Clone)]
pub struct ObjectDef {
    pub name: String,
    pub source: usize,
    pub fields: Vec<FieldDef>,
    pub rules: Vec<RuleDef>,
}

impl ObjectDef {
    pub fn field_index(&self, name: &str) -> Option<usize> {
        self.fields.iter().position(|f| &*f.name == name)
    }
}

#[derive(Debug, Clone)]
pub struct ThresholdDef {
    pub name: String,
    pub target: ThresholdTarget,
    pub comparator: Comparator,
    pub limit_percent: Decimal,
    /// Limit as a fraction of records.
    pub limit: Rate,
}

#[derive(Debug, Clone)]
pub struct ValidatedSpec {
    pub ast: SpecAst,
    pub sources: Vec<SourceDef>,
    pub objects: Vec<ObjectDef>,
    pub thresholds: Vec<ThresholdDef>,
}

impl ValidatedSpec {
    pub fn source_index(&self, name: &str) -> Option<usize> {
        self.sources.iter().position(|s| s.name == name)
    }

    /// Every constraint and record-rule id, in declaration order.
    pub fn rule_ids(&self) -> Vec<&str> {
        self.objects
            .iter()
            .flat_map(|o| {
                o.fields
                    .iter()
                    .flat_map(|f| f.constraints.iter().map(|c| c.rule_id.as_str()))
                    .chain(o.rules.iter().map(|r| r.rule_id.as_str()))
            })
            .collect()
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Family {
    Text,
    Number,
    Date,
}

fn field_family(t: &FieldType) -> Family {
    match t {
        FieldType::Text | FieldType::Enum(_) => Family::Text,
        FieldType::Integer | FieldType::Decimal => Family::Number,
        FieldType::Date(_) => Family::Date,
    }
}

fn literal_family(l: &Literal) -> Family {
    match l {
        Literal::Text(_) => Family::Text,
        Literal::Integer(_) | Literal::Decimal(_) => Family::Number,
        Literal::Date(_) => Family::Date,
    }
}

fn literal_value(l: &Literal) -> TypedValue {
    match l {
        Literal::Text(s) => TypedValue::Text(s.clone()),
        Literal::Integer(i) => TypedValue::Integer(*i),
        Literal::Decimal(d) => TypedValue::Decimal(*d),
        Literal::Date(d) => TypedValue::Date(*d),
    }
}

fn family_name(f: Family) -> &'static str {
    match f {
        Family::Text => "text",
        Family::Number => "numeric",
        Family::Date => "date",
    }
}

fn single_byte(s: &str) -> Option<u8> {
    let mut chars = s.chars();
    match (chars.next(), chars.next()) {
        (Some(c), None) if c.is_ascii() => Some(c as u8),
        _ => None,
    }
}

struct Checker {
    errors: Vec<SemanticError>,
}

impl Checker {
    fn err(&mut self, code: Code, pos: Pos, msg: impl Into<String>) {
        self.errors.push(SemanticError::new(code, pos, msg));
    }
}

pub fn check_spec(ast: &SpecAst) -> Result<ValidatedSpec, SemanticErrors> {
    let mut ck = Checker { errors: Vec::new() };

    let mut sources = Vec::new();
    let mut source_names: HashMap<&str, usize> = HashMap::new();
    for s in &ast.sources {
        if source_names.contains_key(s.name.as_str()) {
            ck.err(
                Code::DuplicateName,
                s.pos,
                format!("source '{}' is declared twice", s.name),
            );
            continue;
        }
        let mut dialect = DialectConfig::default();
        if let Some(d) = &s.delimiter {
            match single_byte(d) {
                Some(b) if b != b'\n' && b != b'\r' => dialect.delimiter = b,
                _ => ck.err(
                    Code::InvalidDialect,
                    s.pos,
                    "delimiter must be one ASCII character",
                ),
            }
        }
        if let Some(q) = &s.quote {
            match single_byte(q) {
                Some(b) if b != b'\n' && b != b'\r' => dialect.quote = b,
                _ => ck.err(
                    Code::InvalidDialect,
                    s.pos,
                    "quote must be one ASCII character",
                ),
            }
        }
        if dialect.delimiter == dialect.quote {
            ck.err(
                Code::InvalidDialect,
                s.pos,
                "delimiter and quote must differ",
            );
        }
        if let Some(h) = s.header {
            dialect.has_header = h;
        }
        if let Some(n) = &s.nulls {
            dialect.null_tokens = n.clone();
        }
        source_names.insert(&s.name, sources.len());
        sources.push(SourceDef {
            name: s.name.clone(),
            path: s.path.clone(),
            dialect,
        });
    }

    let check_binding = |ck: &mut Checker, src: Option<usize>, col: &ColumnRef, pos: Pos| match col
    {
        ColumnRef::Index(0) => ck.err(Code::InvalidColumn, pos, "column indexes start at 1"),
        ColumnRef::Name(n) => {
            if let Some(i) = src {
                if !sources[i].dialect.has_header {
                    ck.err(
                        Code::InvalidColumn,
                        pos,
                        format!(
                            "column '{n}' bound by name but source '{}' has no header row",
                            sources[i].name
                        ),
                    );
                }
            }
        }
        ColumnRef::Index(_) => {}
    };

    let mut objects = Vec::new();
    let mut object_names = HashSet::new();
    let mut all_rule_ids: HashSet<String> = HashSet::new();
    for o in &ast.objects {
        if !object_names.insert(o.name.as_str()) {
            ck.err(
                Code::DuplicateName,
                o.pos,
                format!("object '{}' is declared twice", o.name),
            );
        }
        let src = source_names.get(o.source.as_str()).copied();
        if src.is_none() {
            ck.err(
                Code::UnknownSource,
                o.pos,
                format!("unknown source '{}'", o.source),
            );
        }
        if o.fields.is_empty() {
            ck.err(
                Code::EmptyObject,
                o.pos,
                format!("object '{}' declares no fields", o.name),
            );
        }
        let mut rule_ids: HashSet<String> = HashSet::new();
        let mut claim = |ck: &mut Checker, id: String, pos: Pos| -> String {
            if !rule_ids.insert(id.clone()) {
                ck.err(
                    Code::DuplicateName,
                    pos,
                    format!("rule id '{id}' is used twice; add 'as <label>' to disambiguate"),
                );
            }
            id
        };

        let mut fields: Vec<FieldDef> = Vec::new();
        let mut field_names = HashSet::new();
        for f in &o.fields {
            if !field_names.insert(f.name.as_str()) {
                ck.err(
                    Code::DuplicateName,
                    f.pos,
                    format!("field '{}' is declared twice", f.name),
                );
            }
            let column = f.column_ref();
            check_binding(&mut ck, src, &column, f.pos);
            if let FieldType::Enum(v) = &f.ftype {
                if v.is_empty() {
                    ck.err(
                        Code::EmptyEnum,
                        f.pos,
                        format!("enum of field '{}' has no values", f.name),
                    );
                }
            }
            let vtype = match ValueType::from_field_type(&f.ftype) {
                Ok(v) => v,
                Err(e) => {
                    ck.err(Code::InvalidDateFormat, f.pos, e.to_string());
                    ValueType::Text
                }
            };
            let type_rule_id = f
                .ftype
                .is_checked()
                .then(|| claim(&mut ck, format!("{}.{}.type", o.name, f.name), f.pos));
            let family = field_family(&f.ftype);
            let mut constraints = Vec::new();
            let mut lows: Vec<(TypedValue, Pos)> = Vec::new();
            let mut highs: Vec<(TypedValue, Pos)> = Vec::new();
            let (mut min_len, mut max_len) = (None::<u32>, None::<u32>);
            for c in &f.constraints {
                let kind = match &c.kind {
                    ConstraintKind::NotNull => Some(CheckKind::NotNull),
                    ConstraintKind::Unique => Some(CheckKind::Unique),
                    ConstraintKind::Matches(p) => {
                        if family != Family::Text {
                            ck.err(
                                Code::TypeMismatch,
                                c.pos,
                                format!(
                                    "'matches' needs a text field, '{}' is {}",
                                    f.name,
                                    f.ftype.keyword()
                                ),
                            );
                        }
                        match Pattern::compile(p) {
                            Ok(p) => Some(CheckKind::Matches(p)),
                            Err(e) => {
                                ck.err(Code::InvalidPattern, c.pos, e.to_string());
                                None
                            }
                        }
                    }
                    ConstraintKind::Min(l) | ConstraintKind::Max(l) => {
                        let is_min = matches!(c.kind, ConstraintKind::Min(_));
                        let word = if is_min { "min" } else { "max" };
                        if family == Family::Text {
                            ck.err(
                                Code::TypeMismatch,
                                c.pos,
                                format!(
                                    "'{word}' needs a numeric or date field, '{}' is {}",
                                    f.name,
                                    f.ftype.keyword()
                                ),
                            );
                            None
                        } else if literal_family(l) != family {
                            ck.err(
                                Code::TypeMismatch,
                                c.pos,
                                format!(
                                    "'{word}' bound is {} but field '{}' is {}",
                                    family_name(literal_family(l)),
                                    f.name,
                                    f.ftype.keyword()
                                ),
                            );
                            None
                        } else {
                            let v = literal_value(l);
                            if is_min {
                                lows.push((v.clone(), c.pos));
                                Some(CheckKind::Min(v))
                            } else {
                                highs.push((v.clone(), c.pos));
                                Some(CheckKind::Max(v))
                            }
                        }
                    }
                    ConstraintKind::MinLength(n) | ConstraintKind::MaxLength(n) => {
                        if family != Family::Text {
                            ck.err(
                                Code::TypeMismatch,
                                c.pos,
                                format!(
                                    "length bounds need a text field, '{}' is {}",
                                    f.name,
                                    f.ftype.keyword()
                                ),
                            );
                        }
                        if matches!(c.kind, ConstraintKind::MinLength(_)) {
                            min_len = Some(min_len.map_or(*n, |m: u32| m.max(*n)));
                            Some(CheckKind::MinLength(*n))
                        } else {
                            max_len = Some(max_len.map_or(*n, |m: u32| m.min(*n)));
                            Some(CheckKind::MaxLength(*n))
                        }
                    }
                    ConstraintKind::References { source, column } => {
                        match source_names.get(source.as_str()) {
                            Some(&i) => {
                                check_binding(&mut ck, Some(i), column, c.pos);
                                Some(CheckKind::References {
                                    source: i,
                                    column: column.clone(),
                                })
                            }
                            None => {
                                ck.err(
                                    Code::UnknownSource,
                                    c.pos,
                                    format!("unknown source '{source}'"),
                                );
                                None
                            }
                        }
                    }
                };
                let id = match &c.label {
                    Some(l) => format!("{}.{}", o.name, l),
                    None => format!("{}.{}.{}", o.name, f.name, c.kind.id_name()),
                };
                let id = claim(&mut ck, id, c.pos);
                if let Some(kind) = kind {
                    constraints.push(ConstraintDef {
                        rule_id: id,
                        severity: c.severity,
                        dimension: constraint_dimension(&c.kind, &f.ftype),
                        kind,
                        decl: c.clone(),
                    });
                }
            }
            for (lo, lo_pos) in &lows {
                for (hi, _) in &highs {
                    if lo.compare(hi) == Some(std::cmp::Ordering::Greater) {
                        ck.err(
                            Code::ContradictoryBounds,
                            *lo_pos,
                            format!("field '{}': min exceeds max", f.name),
                        );
                    }
                }
            }
            if let (Some(lo), Some(hi)) = (min_len, max_len) {
                if lo > hi {
                    ck.err(
                        Code::ContradictoryBounds,
                        f.pos,
                        format!(
                            "field '{}': min_length {lo} exceeds max_length {hi}",
                            f.name
                        ),
                    );
                }
            }
            fields.push(FieldDef {
                name: Arc::from(f.name.as_str()),
                column,
                ftype: f.ftype.clone(),
                vtype,
                type_rule_id,
                constraints,
            });
        }

        let mut rules = Vec::new();
        for r in &o.record_rules {
            let id = claim(&mut ck, format!("{}.{}", o.name, r.name), r.pos);
            if let Some(expr) = resolve_expr(&mut ck, &r.expr, &fields) {
                rules.push(RuleDef {
                    rule_id: id,
                    name: r.name.clone(),
                    severity: r.severity,
                    expr,
                    decl: r.clone(),
                });
            }
        }
        all_rule_ids.extend(rule_ids);
        objects.push(ObjectDef {
            name: o.name.clone(),
            source: src.unwrap_or(0),
            fields,
            rules,
        });
    }

    let mut thresholds = Vec::new();
    let mut threshold_names = HashSet::new();
    for t in &ast.collection_rules {
        if !threshold_names.insert(t.name.as_str()) {
            ck.err(
                Code::DuplicateName,
                t.pos,
                format!("threshold '{}' is declared twice", t.name),
            );
        }
        if let ThresholdTarget::Rule(id) = &t.target {
            if !all_rule_ids.contains(id) {
                ck.err(Code::UnknownRule, t.pos, format!("no rule with id '{id}'"));
            }
        }
        if t.limit_percent.is_sign_negative() || t.limit_percent > Decimal::ONE_HUNDRED {
            ck.err(
                Code::LimitOutOfRange,
                t.pos,
                "limit must lie between 0% and 100%",
            );
            continue;
        }
        if t.limit_percent.scale() > crate::rate::MAX_LIMIT_SCALE {
            ck.err(
                Code::LimitOutOfRange,
                t.pos,
                format!(
                    "limit has more than {} decimal places",
                    crate::rate::MAX_LIMIT_SCALE
                ),
            );
            continue;
        }
        thresholds.push(ThresholdDef {
            name: t.name.clone(),
            target: t.target.clone(),
            comparator: t.comparator,
            limit_percent: t.limit_percent,
            limit: Rate::from_percent(t.limit_percent),
        });
    }

    if ck.errors.is_empty() {
        Ok(ValidatedSpec {
            ast: ast.clone(),
            sources,
            objects,
            thresholds,
        })
    } else {
        ck.errors.sort_by_key(|e| e.pos);
        Err(SemanticErrors(ck.errors))
    }
}

fn resolve_operand(
    ck: &mut Checker,
    o: &Operand,
    fields: &[FieldDef],
) -> Option<(ROperand, Family)> {
    match o {
        Operand::Field(name, pos) => match fields.iter().position(|f| &*f.name == name) {
            Some(i) => Some((ROperand::Field(i), field_family(&fields[i].ftype))),
            None => {
                ck.err(Code::UnknownField, *pos, format!("unknown field '{name}'"));
                None
            }
        },
        Operand::Literal(l, _) => Some((ROperand::Const(literal_value(l)), literal_family(l))),
    }
}

fn resolve_field(ck: &mut Checker, name: &str, pos: Pos, fields: &[FieldDef]) -> Option<usize> {
    let i = fields.iter().position(|f| &*f.name == name);
    if i.is_none() {
        ck.err(Code::UnknownField, pos, format!("unknown field '{name}'"));
    }
    i
}

fn resolve_expr(ck: &mut Checker, e: &Expr, fields: &[FieldDef]) -> Option<RExpr> {
    match e {
        Expr::And(a, b, _) | Expr::Or(a, b, _) => {
            let ra = resolve_expr(ck, a, fields);
            let rb = resolve_expr(ck, b, fields);
            let (ra, rb) = (Box::new(ra?), Box::new(rb?));
            Some(if matches!(e, Expr::And(..)) {
                RExpr::And(ra, rb)
            } else {
                RExpr::Or(ra, rb)
            })
        }
        Expr::Not(x, _) => Some(RExpr::Not(Box::new(resolve_expr(ck, x, fields)?))),
        Expr::IsNull {
            field,
            negated,
            pos,
        } => Some(RExpr::IsNull {
            field: resolve_field(ck, field, *pos, fields)?,
            negated: *negated,
        }),
        Expr::Matches {
            field,
            pattern,
            pos,
        } => {
            let i = resolve_field(ck, field, *pos, fields);
            let p = match Pattern::compile(pattern) {
                Ok(p) => Some(p),
                Err(err) => {
                    ck.err(Code::InvalidPattern, *pos, err.to_string());
                    None
                }
            };
            let i = i?;
            if field_family(&fields[i].ftype) != Family::Text {
                ck.err(
                    Code::TypeMismatch,
                    *pos,
                    format!(
                        "'matches' needs a text field, '{field}' is {}",
                        fields[i].ftype.keyword()
                    ),
                );
                return None;
            }
            Some(RExpr::Matches {
                field: i,
                pattern: p?,
            })
        }
        Expr::Compare {
            op,
            left,
            right,
            pos,
        } => {
            let l = resolve_operand(ck, left, fields);
            let r = resolve_operand(ck, right, fields);
            let ((l, lf), (r, rf)) = (l?, r?);
            if lf != rf {
                ck.err(
                    Code::TypeMismatch,
                    *pos,
                    format!(
                        "cannot compare {} with {}",
                        family_name(lf),
                        family_name(rf)
                    ),
                );
                return None;
            }
            Some(RExpr::Compare {
                op: *op,
                left: l,
                right: r,
            })
        }
    }
}
