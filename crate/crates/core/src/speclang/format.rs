//! Canonical pretty-printer. `parse_spec(format_spec(a))` equals `a` up to positions.

use super::ast::*;
use std::collections::HashMap;
use std::fmt::Write;

pub fn format_spec(ast: &SpecAst) -> String {
    format_spec_annotated(ast, &HashMap::new())
}

/// Like [`format_spec`], with `#` comment lines emitted above selected fields.
/// Keys are `(object name, field name)`.
pub fn format_spec_annotated(
    ast: &SpecAst,
    field_comments: &HashMap<(String, String), Vec<String>>,
) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "spec {} {{", ast.name);
    let mut first_section = true;
    let mut gap = |out: &mut String| {
        if !first_section {
            out.push('\n');
        }
        first_section = false;
    };
    if !ast.sources.is_empty() {
        gap(&mut out);
        for s in &ast.sources {
            write_source(&mut out, s);
        }
    }
    for o in &ast.objects {
        gap(&mut out);
        let _ = writeln!(out, "  object {} from {} {{", o.name, o.source);
        for f in &o.fields {
            if let Some(comments) = field_comments.get(&(o.name.clone(), f.name.clone())) {
                for c in comments {
                    for line in c.lines() {
                        let _ = writeln!(out, "    # {line}");
                    }
                }
            }
            write_field(&mut out, f);
        }
        for r in &o.record_rules {
            let _ = write!(out, "    rule {}", r.name);
            if r.severity == Severity::Warning {
                out.push_str(" warning");
            }
            let _ = writeln!(out, ": {};", format_expr(&r.expr));
        }
        out.push_str("  }\n");
    }
    if !ast.collection_rules.is_empty() {
        gap(&mut out);
        for t in &ast.collection_rules {
            let _ = writeln!(
                out,
                "  threshold {}: {} {} {}%;",
                t.name,
                t.target,
                t.comparator.symbol(),
                t.limit_percent
            );
        }
    }
    out.push_str("}\n");
    out
}

pub fn quote(s: &str) -> String {
    let mut q = String::with_capacity(s.len() + 2);
    q.push('"');
    for c in s.chars() {
        match c {
            '"' => q.push_str("\\\""),
            '\\' => q.push_str("\\\\"),
            '\n' => q.push_str("\\n"),
            '\t' => q.push_str("\\t"),
            c => q.push(c),
        }
    }
    q.push('"');
    q
}

fn write_source(out: &mut String, s: &SourceDecl) {
    let _ = write!(out, "  source {} {}", s.name, quote(&s.path));
    if let Some(d) = &s.delimiter {
        let _ = write!(out, " delimiter {}", quote(d));
    }
    if let Some(q) = &s.quote {
        let _ = write!(out, " quote {}", quote(q));
    }
    if let Some(h) = s.header {
        let _ = write!(out, " header {h}");
    }
    if let Some(nulls) = &s.nulls {
        let list: Vec<String> = nulls.iter().map(|n| quote(n)).collect();
        let _ = write!(out, " nulls [{}]", list.join(", "));
    }
    out.push_str(";\n");
}

fn write_column(out: &mut String, c: &ColumnRef) {
    match c {
        ColumnRef::Name(n) => out.push_str(&quote(n)),
        ColumnRef::Index(i) => {
            let _ = write!(out, "{i}");
        }
    }
}

fn write_type(out: &mut String, t: &FieldType) {
    match t {
        FieldType::Text | FieldType::Integer | FieldType::Decimal => out.push_str(t.keyword()),
        FieldType::Date(DateFormatSpec::Iso) => out.push_str("date"),
        FieldType::Date(DateFormatSpec::Custom(p)) => {
            let _ = write!(out, "date({})", quote(p));
        }
        FieldType::Enum(values) => {
            let list: Vec<String> = values.iter().map(|v| quote(v)).collect();
            let _ = write!(out, "enum({})", list.join(", "));
        }
    }
}

fn write_field(out: &mut String, f: &FieldDecl) {
    let _ = write!(out, "    field {} ", f.name);
    write_type(out, &f.ftype);
    if let Some(c) = &f.column {
        out.push_str(" column ");
        write_column(out, c);
    }
    for c in &f.constraints {
        out.push(' ');
        match &c.kind {
            ConstraintKind::NotNull => out.push_str("not null"),
            ConstraintKind::Unique => out.push_str("unique"),
            ConstraintKind::Matches(p) => {
                let _ = write!(out, "matches {}", quote(p));
            }
            ConstraintKind::Min(l) => {
                let _ = write!(out, "min {}", format_literal(l));
            }
            ConstraintKind::Max(l) => {
                let _ = write!(out, "max {}", format_literal(l));
            }
            ConstraintKind::MinLength(n) => {
                let _ = write!(out, "min_length {n}");
            }
            ConstraintKind::MaxLength(n) => {
                let _ = write!(out, "max_length {n}");
            }
            ConstraintKind::References { source, column } => {
                let _ = write!(out, "references {source} column ");
                write_column(out, column);
            }
        }
        if c.severity == Severity::Warning {
            out.push_str(" warning");
        }
        if let Some(l) = &c.label {
            let _ = write!(out, " as {l}");
        }
    }
    out.push_str(";\n");
}

pub fn format_literal(l: &Literal) -> String {
    match l {
        Literal::Text(s) => quote(s),
        Literal::Integer(i) => i.to_string(),
        Literal::Decimal(d) => d.to_string(),
        Literal::Date(d) => d.format("%Y-%m-%d").to_string(),
    }
}

fn format_operand(o: &Operand) -> String {
    match o {
        Operand::Field(n, _) => n.clone(),
        Operand::Literal(l, _) => format_literal(l),
    }
}

/// Renders with the fewest parentheses that still reproduce the same tree.
/// Binary operators are left-associative, so a right child of equal
/// precedence keeps its parentheses.
pub fn format_expr(e: &Expr) -> String {
    fn child(e: &Expr, min_prec: u8) -> String {
        let s = format_expr(e);
        if e.precedence() < min_prec {
            format!("({s})")
        } else {
            s
        }
    }
    match e {
        Expr::Or(a, b, _) => format!("{} or {}", child(a, 1), child(b, 2)),
        Expr::And(a, b, _) => format!("{} and {}", child(a, 2), child(b, 3)),
        Expr::Not(x, _) => format!("not {}", child(x, 3)),
        Expr::IsNull { field, negated, .. } => {
            if *negated {
                format!("{field} is not null")
            } else {
                format!("{field} is null")
            }
        }
        Expr::Compare {
            op, left, right, ..
        } => format!(
            "{} {} {}",
            format_operand(left),
            op.symbol(),
            format_operand(right)
        ),
        Expr::Matches { field, pattern, .. } => format!("{field} matches {}", quote(pattern)),
    }
}
