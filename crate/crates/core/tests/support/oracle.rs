//! Naive in-memory evaluator. Works from the syntax tree and raw CSV text
//! with its own value parsing, comparison and three-valued logic, sharing no
//! evaluation code with the engine.

use chrono::NaiveDate;
use dq_core::speclang::ast::*;
use regex::Regex;
use rust_decimal::Decimal;
use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::str::FromStr;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ObjectOutcome {
    pub records: u64,
    pub ragged: BTreeSet<u64>,
    pub invalid: BTreeSet<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Outcome {
    pub objects: BTreeMap<String, ObjectOutcome>,
    /// Violating record ordinals per rule id, type checks included.
    pub violations: BTreeMap<String, BTreeSet<u64>>,
}

#[derive(Debug, Clone, PartialEq)]
enum V {
    Null,
    Bad,
    Text(String),
    Num(Decimal, bool),
    Date(NaiveDate),
}

impl V {
    fn present(&self) -> bool {
        !matches!(self, V::Null | V::Bad)
    }

    fn key(&self) -> String {
        match self {
            V::Text(s) => s.clone(),
            V::Num(d, true) => d.to_string(),
            V::Num(d, false) => d.normalize().to_string(),
            V::Date(d) => d.format("%Y-%m-%d").to_string(),
            V::Null | V::Bad => unreachable!(),
        }
    }
}

fn lit(l: &Literal) -> V {
    match l {
        Literal::Text(s) => V::Text(s.clone()),
        Literal::Integer(i) => V::Num(Decimal::from(*i), true),
        Literal::Decimal(d) => V::Num(*d, false),
        Literal::Date(d) => V::Date(*d),
    }
}

fn cmp(a: &V, b: &V) -> Option<Ordering> {
    match (a, b) {
        (V::Text(x), V::Text(y)) => Some(x.cmp(y)),
        (V::Num(x, _), V::Num(y, _)) => Some(x.cmp(y)),
        (V::Date(x), V::Date(y)) => Some(x.cmp(y)),
        _ => None,
    }
}

fn trim(s: &str) -> &str {
    s.trim_matches(|c: char| matches!(c, ' ' | '\t' | '\n' | '\r' | '\x0c'))
}

fn date_regex(pattern: &str) -> Regex {
    let mut re = String::from("^");
    let mut rest = pattern;
    while !rest.is_empty() {
        if let Some(r) = rest.strip_prefix("YYYY") {
            re.push_str("(?P<y>[0-9]{4})");
            rest = r;
        } else if let Some(r) = rest.strip_prefix("MM") {
            re.push_str("(?P<m>[0-9]{2})");
            rest = r;
        } else if let Some(r) = rest.strip_prefix("DD") {
            re.push_str("(?P<d>[0-9]{2})");
            rest = r;
        } else {
            let c = rest.chars().next().unwrap();
            re.push_str(&regex::escape(&c.to_string()));
            rest = &rest[c.len_utf8()..];
        }
    }
    re.push('$');
    Regex::new(&re).unwrap()
}

struct Typer {
    int: Regex,
    dec: Regex,
}

impl Typer {
    fn new() -> Self {
        Typer {
            int: Regex::new(r"^[+-]?[0-9]+$").unwrap(),
            dec: Regex::new(r"^[+-]?([0-9]+(\.[0-9]+)?|\.[0-9]+)$").unwrap(),
        }
    }

    fn value(
        &self,
        raw: &str,
        ftype: &FieldType,
        dates: &HashMap<String, Regex>,
        nulls: &[String],
    ) -> V {
        let t = trim(raw);
        if nulls.iter().any(|n| trim(n) == t) {
            return V::Null;
        }
        match ftype {
            FieldType::Text => V::Text(t.to_string()),
            FieldType::Enum(vs) => {
                if vs.iter().any(|v| v == t) {
                    V::Text(t.to_string())
                } else {
                    V::Bad
                }
            }
            FieldType::Integer => match (
                self.int.is_match(t),
                t.trim_start_matches('+').parse::<i64>(),
            ) {
                (true, Ok(i)) => V::Num(Decimal::from(i), true),
                _ => V::Bad,
            },
            FieldType::Decimal => match (
                self.dec.is_match(t),
                Decimal::from_str(t.trim_start_matches('+')),
            ) {
                (true, Ok(d)) => V::Num(d, false),
                _ => V::Bad,
            },
            FieldType::Date(spec) => {
                let re = &dates[spec.pattern()];
                match re.captures(t) {
                    Some(c) => NaiveDate::from_ymd_opt(
                        c["y"].parse().unwrap(),
                        c["m"].parse().unwrap(),
                        c["d"].parse().unwrap(),
                    )
                    .map_or(V::Bad, V::Date),
                    None => V::Bad,
                }
            }
        }
    }
}

fn whole(pattern: &str) -> Regex {
    regex::RegexBuilder::new(&format!("^(?:{pattern})$"))
        .dot_matches_new_line(true)
        .build()
        .unwrap()
}

fn and3(a: Option<bool>, b: Option<bool>) -> Option<bool> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x && y),
        (Some(false), None) | (None, Some(false)) => Some(false),
        _ => None,
    }
}

fn eval(e: &Expr, row: &HashMap<&str, (V, &str)>) -> Option<bool> {
    match e {
        Expr::And(a, b, _) => and3(eval(a, row), eval(b, row)),
        Expr::Or(a, b, _) => {
            let na = eval(a, row).map(|x| !x);
            let nb = eval(b, row).map(|x| !x);
            and3(na, nb).map(|x| !x)
        }
        Expr::Not(x, _) => eval(x, row).map(|b| !b),
        Expr::IsNull { field, negated, .. } => Some(row[field.as_str()].0.present() == *negated),
        Expr::Compare {
            op, left, right, ..
        } => {
            let get = |o: &Operand| -> Option<V> {
                match o {
                    Operand::Field(f, _) => {
                        let v = &row[f.as_str()].0;
                        v.present().then(|| v.clone())
                    }
                    Operand::Literal(l, _) => Some(lit(l)),
                }
            };
            let (l, r) = (get(left)?, get(right)?);
            let ord = cmp(&l, &r)?;
            Some(match op {
                CmpOp::Eq => ord == Ordering::Equal,
                CmpOp::Ne => ord != Ordering::Equal,
                CmpOp::Lt => ord == Ordering::Less,
                CmpOp::Le => ord != Ordering::Greater,
                CmpOp::Gt => ord == Ordering::Greater,
                CmpOp::Ge => ord != Ordering::Less,
            })
        }
        Expr::Matches { field, pattern, .. } => {
            let (v, raw) = &row[field.as_str()];
            v.present().then(|| whole(pattern).is_match(trim(raw)))
        }
    }
}

struct Table {
    header: Option<Vec<String>>,
    width: usize,
    rows: Vec<Vec<String>>,
}

fn read_table(bytes: &[u8], s: &SourceDecl) -> Table {
    let delimiter = s.delimiter.as_deref().map_or(b',', |d| d.as_bytes()[0]);
    let quote = s.quote.as_deref().map_or(b'"', |q| q.as_bytes()[0]);
    let mut rd = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .quote(quote)
        .has_headers(false)
        .flexible(true)
        .from_reader(bytes);
    let mut all: Vec<Vec<String>> = rd
        .records()
        .map(|r| r.unwrap().iter().map(str::to_string).collect())
        .collect();
    let header = if s.header.unwrap_or(true) {
        Some(if all.is_empty() {
            Vec::new()
        } else {
            all.remove(0)
        })
    } else {
        None
    };
    let width = match &header {
        Some(h) if !h.is_empty() => h.len(),
        _ => all.first().map_or(0, Vec::len),
    };
    Table {
        header,
        width,
        rows: all,
    }
}

fn position(t: &Table, c: &ColumnRef) -> usize {
    match c {
        ColumnRef::Index(i) => *i as usize - 1,
        ColumnRef::Name(n) => t
            .header
            .as_ref()
            .unwrap()
            .iter()
            .position(|h| trim(h) == n)
            .unwrap(),
    }
}

fn nulls_of(s: &SourceDecl) -> Vec<String> {
    s.nulls.clone().unwrap_or_else(|| vec![String::new()])
}

/// Evaluates `ast` over `files` (raw bytes keyed by source name).
pub fn evaluate(ast: &SpecAst, files: &[(String, Vec<u8>)]) -> Outcome {
    let typer = Typer::new();
    let decls: HashMap<&str, &SourceDecl> =
        ast.sources.iter().map(|s| (s.name.as_str(), s)).collect();
    let tables: HashMap<&str, Table> = files
        .iter()
        .map(|(n, b)| (n.as_str(), read_table(b, decls[n.as_str()])))
        .collect();
    let mut dates = HashMap::new();
    for o in &ast.objects {
        for f in &o.fields {
            if let FieldType::Date(spec) = &f.ftype {
                dates
                    .entry(spec.pattern().to_string())
                    .or_insert_with(|| date_regex(spec.pattern()));
            }
        }
    }
    let mut out = Outcome::default();
    for o in &ast.objects {
        let table = &tables[o.source.as_str()];
        let nulls = nulls_of(decls[o.source.as_str()]);
        let mut oo = ObjectOutcome {
            records: table.rows.len() as u64,
            ..Default::default()
        };
        // rule id, severity, and a per-record check
        let mut rules: Vec<(String, Severity)> = Vec::new();
        for f in &o.fields {
            if !matches!(f.ftype, FieldType::Text) {
                rules.push((format!("{}.{}.type", o.name, f.name), Severity::Error));
            }
            for c in &f.constraints {
                let id = match &c.label {
                    Some(l) => format!("{}.{}", o.name, l),
                    None => format!("{}.{}.{}", o.name, f.name, c.kind.id_name()),
                };
                rules.push((id, c.severity));
            }
        }
        for r in &o.record_rules {
            rules.push((format!("{}.{}", o.name, r.name), r.severity));
        }
        let severity: HashMap<String, Severity> = rules.iter().cloned().collect();
        let mut hits: BTreeMap<String, BTreeSet<u64>> = rules
            .iter()
            .map(|(id, _)| (id.clone(), BTreeSet::new()))
            .collect();
        let mut seen: HashMap<String, HashSet<String>> = HashMap::new();
        let lookup_sets: HashMap<(String, String), HashSet<String>> = o
            .fields
            .iter()
            .flat_map(|f| f.constraints.iter())
            .filter_map(|c| match &c.kind {
                ConstraintKind::References { source, column } => {
                    let t = &tables[source.as_str()];
                    let ln = nulls_of(decls[source.as_str()]);
                    let idx = position(t, column);
                    let set = t
                        .rows
                        .iter()
                        .filter(|r| r.len() == t.width)
                        .map(|r| trim(&r[idx]).to_string())
                        .filter(|v| !ln.iter().any(|n| trim(n) == v))
                        .collect();
                    Some(((source.clone(), format!("{column:?}")), set))
                }
                _ => None,
            })
            .collect();
        for (i, row) in table.rows.iter().enumerate() {
            let ordinal = i as u64 + 1;
            if row.len() != table.width {
                oo.ragged.insert(ordinal);
                oo.invalid.insert(ordinal);
                continue;
            }
            let mut values: HashMap<&str, (V, &str)> = HashMap::new();
            for f in &o.fields {
                let raw = row[position(table, &f.column_ref())].as_str();
                values.insert(
                    f.name.as_str(),
                    (typer.value(raw, &f.ftype, &dates, &nulls), raw),
                );
            }
            let mut fired: Vec<String> = Vec::new();
            for f in &o.fields {
                let (v, raw) = &values[f.name.as_str()];
                if matches!(v, V::Bad) {
                    fired.push(format!("{}.{}.type", o.name, f.name));
                    continue;
                }
                for c in &f.constraints {
                    let id = match &c.label {
                        Some(l) => format!("{}.{}", o.name, l),
                        None => format!("{}.{}.{}", o.name, f.name, c.kind.id_name()),
                    };
                    let violated = match (&c.kind, v) {
                        (ConstraintKind::NotNull, V::Null) => true,
                        (_, V::Null) => false,
                        (ConstraintKind::NotNull, _) => false,
                        (ConstraintKind::Unique, v) => {
                            !seen.entry(id.clone()).or_default().insert(v.key())
                        }
                        (ConstraintKind::Matches(p), _) => !whole(p).is_match(trim(raw)),
                        (ConstraintKind::Min(l), v) => cmp(v, &lit(l)) == Some(Ordering::Less),
                        (ConstraintKind::Max(l), v) => cmp(v, &lit(l)) == Some(Ordering::Greater),
                        (ConstraintKind::MinLength(n), _) => {
                            trim(raw).chars().count() < *n as usize
                        }
                        (ConstraintKind::MaxLength(n), _) => {
                            trim(raw).chars().count() > *n as usize
                        }
                        (ConstraintKind::References { source, column }, v) => !lookup_sets
                            [&(source.clone(), format!("{column:?}"))]
                            .contains(&v.key()),
                    };
                    if violated {
                        fired.push(id);
                    }
                }
            }
            for r in &o.record_rules {
                if eval(&r.expr, &values) != Some(true) {
                    fired.push(format!("{}.{}", o.name, r.name));
                }
            }
            for id in fired {
                if severity[&id] == Severity::Error {
                    oo.invalid.insert(ordinal);
                }
                hits.get_mut(&id).unwrap().insert(ordinal);
            }
        }
        out.violations.extend(hits);
        out.objects.insert(o.name.clone(), oo);
    }
    out
}
