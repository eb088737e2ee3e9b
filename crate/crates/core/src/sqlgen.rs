//! Translation of a check plan into ANSI SQL counting queries.
//!
//! Every rule becomes `SELECT COUNT(*) FROM <table> WHERE <violation>`,
//! where `<violation>` is the negated requirement pushed through
//! three-valued logic so that `NULL` operands count as violations exactly
//! when the engine treats them as indeterminate. Implicit type checks are
//! not emitted: the SQL side assumes columns already typed.

use crate::engine::{CheckPlan, EvalKind, Evaluator, ObjectPlan};
use crate::ingest::{TypedValue, ValueType};
use crate::speclang::ast::{CmpOp, ColumnRef};
use crate::speclang::check::{RExpr, ROperand};
use crate::speclang::pattern::Pattern;
use std::collections::HashMap;
use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SqlGenError {
    #[error("source '{0}' has no table mapping")]
    UnmappedSource(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SqlOptions {
    /// Character-length function; ANSI names it `CHAR_LENGTH`.
    pub length_function: String,
}

impl Default for SqlOptions {
    fn default() -> Self {
        SqlOptions {
            length_function: "CHAR_LENGTH".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SqlEntry {
    pub rule_id: String,
    pub kind: String,
    /// Returns the violating-record count.
    pub count_query: String,
    /// Returns the violating rows (all occurrences of duplicated values for
    /// `unique`).
    pub list_query: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Inexpressible {
    pub rule_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SqlSuite {
    pub spec_name: String,
    pub dialect: &'static str,
    /// Sorted by rule id.
    pub entries: Vec<SqlEntry>,
    /// Sorted by rule id.
    pub inexpressible: Vec<Inexpressible>,
}

/// `"name"` with embedded quotes doubled.
pub fn quote_ident(name: &str) -> String {
    format!("\"{}\"", name.replace('"', "\"\""))
}

pub fn quote_text(s: &str) -> String {
    format!("'{}'", s.replace('\'', "''"))
}

pub fn sql_literal(v: &TypedValue) -> Option<String> {
    Some(match v {
        TypedValue::Text(s) => quote_text(s),
        TypedValue::Integer(i) => i.to_string(),
        TypedValue::Decimal(d) => d.to_string(),
        TypedValue::Date(d) => format!("DATE '{}'", d.format("%Y-%m-%d")),
        TypedValue::Null | TypedValue::ParseFailure { .. } => return None,
    })
}

/// Column name a field has in the relational mirror: the header name when
/// bound by name, the field name otherwise.
pub fn field_column(object: &ObjectPlan, field: usize) -> String {
    let f = &object.fields[field];
    match &f.column {
        ColumnRef::Name(n) => n.clone(),
        ColumnRef::Index(_) => f.name.to_string(),
    }
}

fn is_textual(v: &ValueType) -> bool {
    matches!(v, ValueType::Text | ValueType::Enum(_))
}

fn like(col: &str, p: &Pattern, negated: bool) -> Result<String, String> {
    let (pat, escaped) = p
        .to_like()
        .ok_or_else(|| format!("pattern \"{}\" exceeds LIKE", p.source()))?;
    // callers guard nulls; COALESCE keeps engines that reject a null LIKE operand working
    let mut s = format!(
        "COALESCE({col}, '') {}LIKE {}",
        if negated { "NOT " } else { "" },
        quote_text(&pat)
    );
    if escaped {
        s.push_str(" ESCAPE '\\'");
    }
    Ok(s)
}

struct Ctx<'a> {
    object: &'a ObjectPlan,
}

impl Ctx<'_> {
    fn col(&self, f: usize) -> String {
        quote_ident(&field_column(self.object, f))
    }

    fn operand(&self, o: &ROperand) -> Result<String, String> {
        match o {
            ROperand::Field(f) => Ok(self.col(*f)),
            ROperand::Const(c) => sql_literal(c).ok_or_else(|| "null literal".to_string()),
        }
    }

    /// Condition that holds when `e` is false or unknown.
    fn not_true(&self, e: &RExpr) -> Result<String, String> {
        self.negated(e, true)
    }

    /// With `want_not_true`, holds when `e` is not true; otherwise holds
    /// when `e` is not false.
    fn negated(&self, e: &RExpr, want_not_true: bool) -> Result<String, String> {
        Ok(match e {
            RExpr::And(a, b) | RExpr::Or(a, b) => {
                let joiner = match (e, want_not_true) {
                    (RExpr::And(..), true) | (RExpr::Or(..), false) => "OR",
                    _ => "AND",
                };
                format!(
                    "({} {joiner} {})",
                    self.negated(a, want_not_true)?,
                    self.negated(b, want_not_true)?
                )
            }
            RExpr::Not(x) => self.negated(x, !want_not_true)?,
            RExpr::IsNull { field, negated } => {
                let is_null_wanted = *negated == want_not_true;
                format!(
                    "{} IS {}NULL",
                    self.col(*field),
                    if is_null_wanted { "" } else { "NOT " }
                )
            }
            RExpr::Compare { op, left, right } => {
                // a null operand makes the comparison unknown, which is both not true and not false
                let op: CmpOp = if want_not_true { op.negate() } else { *op };
                format!(
                    "COALESCE({} {} {}, TRUE)",
                    self.operand(left)?,
                    sql_op(op),
                    self.operand(right)?
                )
            }
            RExpr::Matches { field, pattern } => {
                if !is_textual(&self.object.fields[*field].vtype) {
                    return Err("pattern on a non-text field".into());
                }
                let col = self.col(*field);
                format!("({col} IS NULL OR {})", like(&col, pattern, want_not_true)?)
            }
        })
    }
}

fn sql_op(op: CmpOp) -> &'static str {
    match op {
        CmpOp::Ne => "<>",
        other => other.symbol(),
    }
}

fn entry_for(
    plan: &CheckPlan,
    object: &ObjectPlan,
    table: &str,
    ev: &Evaluator,
    tables: &HashMap<String, String>,
    options: &SqlOptions,
) -> Result<Result<SqlEntry, String>, SqlGenError> {
    let t = quote_ident(table);
    let ctx = Ctx { object };
    let field = ev.field;
    let col = || ctx.col(field.expect("field-scope rule"));
    let vtype = || &object.fields[field.expect("field-scope rule")].vtype;
    let simple = |cond: String| SqlEntry {
        rule_id: ev.rule_id.to_string(),
        kind: ev.kind.name().to_string(),
        count_query: format!("SELECT COUNT(*) FROM {t} WHERE {cond}"),
        list_query: format!("SELECT * FROM {t} WHERE {cond}"),
    };
    let cond = match &ev.kind {
        EvalKind::TypeCheck => unreachable!("type checks are not emitted"),
        EvalKind::NotNull => Ok(format!("{} IS NULL", col())),
        EvalKind::Unique => {
            let c = col();
            return Ok(Ok(SqlEntry {
                rule_id: ev.rule_id.to_string(),
                kind: ev.kind.name().to_string(),
                count_query: format!(
                    "SELECT COALESCE(SUM(\"n\" - 1), 0) FROM (SELECT COUNT(*) AS \"n\" FROM {t} \
                     WHERE {c} IS NOT NULL GROUP BY {c} HAVING COUNT(*) > 1) AS \"dup\""
                ),
                list_query: format!(
                    "SELECT * FROM {t} WHERE {c} IN (SELECT {c} FROM {t} WHERE {c} IS NOT NULL \
                     GROUP BY {c} HAVING COUNT(*) > 1)"
                ),
            }));
        }
        EvalKind::Matches(p) => {
            if is_textual(vtype()) {
                like(&col(), p, true).map(|l| format!("{} IS NOT NULL AND {l}", col()))
            } else {
                Err("pattern on a non-text field".into())
            }
        }
        EvalKind::Min(v) => sql_literal(v)
            .map(|l| format!("{} < {l}", col()))
            .ok_or_else(|| "null bound".into()),
        EvalKind::Max(v) => sql_literal(v)
            .map(|l| format!("{} > {l}", col()))
            .ok_or_else(|| "null bound".into()),
        EvalKind::MinLength(n) | EvalKind::MaxLength(n) => {
            if is_textual(vtype()) {
                let op = if matches!(ev.kind, EvalKind::MinLength(_)) {
                    "<"
                } else {
                    ">"
                };
                Ok(format!("{}({}) {op} {n}", options.length_function, col()))
            } else {
                Err("length of a non-text field".into())
            }
        }
        EvalKind::Reference { lookup } => {
            let key = &plan.lookups[*lookup];
            let src = &plan.sources[key.source].name;
            let rt = tables
                .get(src)
                .ok_or_else(|| SqlGenError::UnmappedSource(src.clone()))?;
            match &key.column {
                ColumnRef::Name(rc) => {
                    let (c, rc) = (col(), quote_ident(rc));
                    Ok(format!(
                        "{c} IS NOT NULL AND {c} NOT IN (SELECT {rc} FROM {} WHERE {rc} IS NOT NULL)",
                        quote_ident(rt)
                    ))
                }
                ColumnRef::Index(_) => Err("lookup column bound by position".into()),
            }
        }
        EvalKind::Record(e) => ctx.not_true(e),
    };
    Ok(cond.map(simple))
}

pub fn emit_sql(
    plan: &CheckPlan,
    tables: &HashMap<String, String>,
) -> Result<SqlSuite, SqlGenError> {
    emit_sql_with(plan, tables, &SqlOptions::default())
}

pub fn emit_sql_with(
    plan: &CheckPlan,
    tables: &HashMap<String, String>,
    options: &SqlOptions,
) -> Result<SqlSuite, SqlGenError> {
    let mut entries = Vec::new();
    let mut inexpressible = Vec::new();
    for object in &plan.objects {
        let src = &plan.sources[object.source].name;
        let table = tables
            .get(src)
            .ok_or_else(|| SqlGenError::UnmappedSource(src.clone()))?;
        for ev in object.evaluators.iter().filter(|e| !e.is_type_check()) {
            match entry_for(plan, object, table, ev, tables, options)? {
                Ok(e) => entries.push(e),
                Err(reason) => inexpressible.push(Inexpressible {
                    rule_id: ev.rule_id.to_string(),
                    reason,
                }),
            }
        }
    }
    entries.sort_by(|a, b| a.rule_id.cmp(&b.rule_id));
    inexpressible.sort_by(|a, b| a.rule_id.cmp(&b.rule_id));
    Ok(SqlSuite {
        spec_name: plan.spec_name.clone(),
        dialect: "ansi",
        entries,
        inexpressible,
    })
}

impl SqlSuite {
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "-- suite: {}", self.spec_name);
        let _ = writeln!(out, "-- dialect: {}", self.dialect);
        for i in &self.inexpressible {
            let _ = writeln!(out, "-- inexpressible: {}: {}", i.rule_id, i.reason);
        }
        for e in &self.entries {
            let _ = writeln!(out, "\n-- rule: {}", e.rule_id);
            let _ = writeln!(out, "-- count\n{};", e.count_query);
            let _ = writeln!(out, "-- list\n{};", e.list_query);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::compile_plan;
    use crate::speclang::{check_spec, parse_spec};

    fn suite(src: &str) -> SqlSuite {
        let plan = compile_plan(&check_spec(&parse_spec(src).unwrap()).unwrap());
        let tables = HashMap::from([
            ("reg".to_string(), "register".to_string()),
            ("k".to_string(), "lookup".to_string()),
        ]);
        emit_sql(&plan, &tables).unwrap()
    }

    #[test]
    fn not_null_query() {
        let s = suite(
            r#"spec s { source reg "r.csv"; object o from reg { field name text not null; } }"#,
        );
        assert_eq!(s.entries.len(), 1);
        assert_eq!(
            s.entries[0].count_query,
            "SELECT COUNT(*) FROM \"register\" WHERE \"name\" IS NULL"
        );
    }

    #[test]
    fn paired_rule_negation() {
        let s = suite(
            r#"spec s { source reg "r.csv"; object o from reg { field t date; field c date;
            rule pair: (t is null and c is null) or (t is not null and c is not null); } }"#,
        );
        assert_eq!(
            s.entries[0].count_query,
            "SELECT COUNT(*) FROM \"register\" WHERE \
             ((\"t\" IS NOT NULL OR \"c\" IS NOT NULL) AND (\"t\" IS NULL OR \"c\" IS NULL))"
        );
    }

    #[test]
    fn comparisons_guard_nulls() {
        let s = suite(
            r#"spec s { source reg "r.csv"; object o from reg { field a integer; field b integer;
            rule r: not (a > 1) and b != 2; } }"#,
        );
        assert!(s.entries[0]
            .count_query
            .ends_with("WHERE (COALESCE(\"a\" > 1, TRUE) OR COALESCE(\"b\" = 2, TRUE))"));
    }

    #[test]
    fn literals_and_identifiers_are_quoted() {
        let s = suite(
            r#"spec s { source reg "r.csv"; object o from reg {
              field d date column "reg\"date" min 1800-01-01;
              field n text column "it's" max_length 5;
              rule r: n != "O'Brien"; } }"#,
        );
        let q: Vec<&str> = s.entries.iter().map(|e| e.count_query.as_str()).collect();
        assert!(q.contains(
            &"SELECT COUNT(*) FROM \"register\" WHERE \"reg\"\"date\" < DATE '1800-01-01'"
        ));
        assert!(q.contains(&"SELECT COUNT(*) FROM \"register\" WHERE CHAR_LENGTH(\"it's\") > 5"));
        assert!(q.iter().any(|x| x.contains("'O''Brien'")));
    }

    #[test]
    fn like_translation_and_inexpressible() {
        let s = suite(
            r#"spec s { source reg "r.csv"; object o from reg {
              field a text matches "LV-.*" as a_like;
              field b text matches "50%_." as b_like;
              field c text matches "LV-[0-9]{4}" as c_regex; } }"#,
        );
        let q: Vec<&str> = s.entries.iter().map(|e| e.count_query.as_str()).collect();
        assert_eq!(q.len(), 2);
        assert!(q[0].ends_with("\"a\" IS NOT NULL AND COALESCE(\"a\", '') NOT LIKE 'LV-%'"));
        assert!(q[1].ends_with("NOT LIKE '50\\%\\__' ESCAPE '\\'"));
        assert_eq!(s.inexpressible.len(), 1);
        assert_eq!(s.inexpressible[0].rule_id, "o.c_regex");
        assert!(s
            .render()
            .contains("-- inexpressible: o.c_regex: pattern \"LV-[0-9]{4}\" exceeds LIKE"));
    }

    #[test]
    fn references_and_unique() {
        let s = suite(
            r#"spec s { source reg "r.csv"; source k "k.csv"; object o from reg {
              field t text references k column "code" unique; } }"#,
        );
        assert_eq!(
            s.entries[0].count_query,
            "SELECT COUNT(*) FROM \"register\" WHERE \"t\" IS NOT NULL AND \"t\" NOT IN \
             (SELECT \"code\" FROM \"lookup\" WHERE \"code\" IS NOT NULL)"
        );
        assert!(s.entries[1]
            .count_query
            .starts_with("SELECT COALESCE(SUM(\"n\" - 1), 0)"));
    }

    #[test]
    fn unmapped_source_and_empty_suite() {
        let plan = compile_plan(
            &check_spec(
                &parse_spec(r#"spec s { source x "x.csv"; object o from x { field a text; } }"#)
                    .unwrap(),
            )
            .unwrap(),
        );
        assert_eq!(
            emit_sql(&plan, &HashMap::new()).unwrap_err(),
            SqlGenError::UnmappedSource("x".into())
        );
        let tables = HashMap::from([("x".to_string(), "x".to_string())]);
        let s = emit_sql(&plan, &tables).unwrap();
        assert!(s.entries.is_empty() && s.inexpressible.is_empty());
        assert_eq!(s.render(), emit_sql(&plan, &tables).unwrap().render());
    }
}
