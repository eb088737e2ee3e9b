//! Random, semantically valid (spec, dataset) pairs for oracle comparison.

use super::astgen::ident;
use chrono::NaiveDate;
use dq_core::speclang::ast::*;
use dq_core::speclang::format_spec;
use dq_core::speclang::lexer::is_keyword;
use rand::seq::SliceRandom;
use rand::Rng;
use rust_decimal::Decimal;

const P: Pos = Pos { line: 0, col: 0 };

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ty {
    Text,
    Int,
    Dec,
    DateIso,
    DateDmy,
    Enum,
}

impl Ty {
    fn field_type(self) -> FieldType {
        match self {
            Ty::Text => FieldType::Text,
            Ty::Int => FieldType::Integer,
            Ty::Dec => FieldType::Decimal,
            Ty::DateIso => FieldType::Date(DateFormatSpec::Iso),
            Ty::DateDmy => FieldType::Date(DateFormatSpec::Custom("DD.MM.YYYY".into())),
            Ty::Enum => FieldType::Enum(vec!["a".into(), "b".into(), "c".into()]),
        }
    }

    fn family(self) -> u8 {
        match self {
            Ty::Text | Ty::Enum => 0,
            Ty::Int | Ty::Dec => 1,
            Ty::DateIso | Ty::DateDmy => 2,
        }
    }

    /// Raw cells, deliberately mixing valid, padded, null-like and malformed text.
    fn pool(self) -> &'static [&'static str] {
        match self {
            Ty::Text => &[
                "alpha",
                "beta",
                "Gamma",
                "LV-1234",
                "LV-12X",
                "x",
                "",
                " beta ",
                "NA",
                "ģērbe",
                "a,b",
                "q\"t",
                "7",
                "2020-01-31",
                "abcdefgh",
            ],
            Ty::Int => &[
                "0", "7", "007", "-3", "+5", "12", "100", "x1", "1.5", "", " 42 ", "NA", "-0",
                "99999",
            ],
            Ty::Dec => &[
                "1.5", "1.50", "-2", "0.001", "3.", "x", ".5", "10", "", "1e3", " 2.25 ", "-0.0",
                "NA", "7",
            ],
            Ty::DateIso => &[
                "2020-01-31",
                "1999-12-31",
                "2020-02-30",
                "2020-1-5",
                "31.01.2020",
                "",
                "2024-02-29",
                " 2001-07-04 ",
                "NA",
                "1850-06-01",
            ],
            Ty::DateDmy => &[
                "31.01.2020",
                "01.02.1999",
                "30.02.2020",
                "2020-01-31",
                "1.2.2020",
                "",
                "NA",
                "29.02.2024",
            ],
            Ty::Enum => &["a", "b", "c", "d", "A", " b ", "", "NA"],
        }
    }
}

const REF_CODES: &[&str] = &[
    "alpha",
    "beta",
    "7",
    "1.5",
    "2020-01-31",
    "a",
    "b",
    "007",
    " Gamma ",
    "",
    "NA",
    "-2",
];
const PATTERNS: &[&str] = &[
    "[a-z]+",
    "LV-[0-9]{4}",
    "b.*",
    "(alpha|beta)",
    "[[:alpha:]]+",
    "\\d+",
    "a|b",
];

#[derive(Debug, Clone)]
pub struct Case {
    pub ast: SpecAst,
    pub spec_text: String,
    /// Raw bytes per source, in declaration order.
    pub files: Vec<(String, Vec<u8>)>,
}

fn literal_for<R: Rng>(rng: &mut R, ty: Ty) -> Literal {
    match ty {
        Ty::Text | Ty::Enum => Literal::Text(ty.pool().choose(rng).unwrap().trim().to_string()),
        Ty::Int | Ty::Dec => {
            if rng.gen_bool(0.5) {
                Literal::Integer(rng.gen_range(-5..=50))
            } else {
                Literal::Decimal(Decimal::new(rng.gen_range(-50..=500), rng.gen_range(1..=2)))
            }
        }
        Ty::DateIso | Ty::DateDmy => Literal::Date(
            NaiveDate::from_ymd_opt(
                rng.gen_range(1990..=2025),
                rng.gen_range(1..=12),
                rng.gen_range(1..=28),
            )
            .unwrap(),
        ),
    }
}

fn ordered_bounds<R: Rng>(rng: &mut R, ty: Ty) -> (Literal, Literal) {
    let a = literal_for(rng, ty);
    let b = literal_for(rng, ty);
    let key = |l: &Literal| -> (Decimal, Option<NaiveDate>) {
        match l {
            Literal::Integer(i) => (Decimal::from(*i), None),
            Literal::Decimal(d) => (*d, None),
            Literal::Date(d) => (Decimal::ZERO, Some(*d)),
            Literal::Text(_) => (Decimal::ZERO, None),
        }
    };
    if key(&a) <= key(&b) {
        (a, b)
    } else {
        (b, a)
    }
}

fn constraint(kind: ConstraintKind, severity: Severity, label: Option<String>) -> ConstraintDecl {
    ConstraintDecl {
        kind,
        severity,
        label,
        pos: P,
    }
}

fn constraints_for<R: Rng>(
    rng: &mut R,
    ty: Ty,
    has_ref: bool,
    labels: &mut Vec<String>,
) -> Vec<ConstraintDecl> {
    let mut kinds = Vec::new();
    if rng.gen_bool(0.4) {
        kinds.push(ConstraintKind::NotNull);
    }
    if rng.gen_bool(0.25) {
        kinds.push(ConstraintKind::Unique);
    }
    match ty.family() {
        0 => {
            if rng.gen_bool(0.4) {
                kinds.push(ConstraintKind::Matches(
                    PATTERNS.choose(rng).unwrap().to_string(),
                ));
            }
            let lo = rng.gen_range(0..5);
            if rng.gen_bool(0.3) {
                kinds.push(ConstraintKind::MinLength(lo));
            }
            if rng.gen_bool(0.3) {
                kinds.push(ConstraintKind::MaxLength(lo + rng.gen_range(0..5)));
            }
        }
        _ => {
            let (lo, hi) = ordered_bounds(rng, ty);
            if rng.gen_bool(0.4) {
                kinds.push(ConstraintKind::Min(lo));
            }
            if rng.gen_bool(0.4) {
                kinds.push(ConstraintKind::Max(hi));
            }
        }
    }
    if has_ref && rng.gen_bool(0.3) {
        let column = if rng.gen_bool(0.5) {
            ColumnRef::Name("code".into())
        } else {
            ColumnRef::Index(2)
        };
        kinds.push(ConstraintKind::References {
            source: "lookup".into(),
            column,
        });
    }
    kinds.shuffle(rng);
    kinds
        .into_iter()
        .map(|k| {
            let severity = if rng.gen_bool(0.2) {
                Severity::Warning
            } else {
                Severity::Error
            };
            let label = rng.gen_bool(0.2).then(|| {
                let l = format!("lbl_{}", labels.len());
                labels.push(l.clone());
                l
            });
            constraint(k, severity, label)
        })
        .collect()
}

fn cmp_op<R: Rng>(rng: &mut R) -> CmpOp {
    *[
        CmpOp::Eq,
        CmpOp::Ne,
        CmpOp::Lt,
        CmpOp::Le,
        CmpOp::Gt,
        CmpOp::Ge,
    ]
    .choose(rng)
    .unwrap()
}

fn rule_expr<R: Rng>(rng: &mut R, fields: &[(String, Ty)], depth: u32) -> Expr {
    if depth == 0 || rng.gen_bool(0.4) {
        let (name, ty) = fields.choose(rng).unwrap().clone();
        return match rng.gen_range(0..4) {
            0 => Expr::IsNull {
                field: name,
                negated: rng.gen(),
                pos: P,
            },
            1 if ty.family() == 0 => Expr::Matches {
                field: name,
                pattern: PATTERNS.choose(rng).unwrap().to_string(),
                pos: P,
            },
            2 => {
                let peers: Vec<&(String, Ty)> = fields
                    .iter()
                    .filter(|(_, t)| t.family() == ty.family())
                    .collect();
                let (other, _) = peers.choose(rng).unwrap();
                Expr::Compare {
                    op: cmp_op(rng),
                    left: Operand::Field(name, P),
                    right: Operand::Field(other.clone(), P),
                    pos: P,
                }
            }
            _ => {
                let lit = Operand::Literal(literal_for(rng, ty), P);
                let field = Operand::Field(name, P);
                let (left, right) = if rng.gen_bool(0.8) {
                    (field, lit)
                } else {
                    (lit, field)
                };
                Expr::Compare {
                    op: cmp_op(rng),
                    left,
                    right,
                    pos: P,
                }
            }
        };
    }
    match rng.gen_range(0..3) {
        0 => Expr::And(
            Box::new(rule_expr(rng, fields, depth - 1)),
            Box::new(rule_expr(rng, fields, depth - 1)),
            P,
        ),
        1 => Expr::Or(
            Box::new(rule_expr(rng, fields, depth - 1)),
            Box::new(rule_expr(rng, fields, depth - 1)),
            P,
        ),
        _ => Expr::Not(Box::new(rule_expr(rng, fields, depth - 1)), P),
    }
}

fn write_csv(delimiter: u8, rows: &[Vec<String>]) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new()
        .delimiter(delimiter)
        .flexible(true)
        .from_writer(Vec::new());
    for r in rows {
        w.write_record(r).unwrap();
    }
    w.into_inner().unwrap()
}

/// One random case with up to `max_records` data rows.
pub fn case<R: Rng>(rng: &mut R, max_records: usize) -> Case {
    let delimiter = *b",;|\t".choose(rng).unwrap();
    let header = rng.gen_bool(0.75);
    let nulls = rng
        .gen_bool(0.4)
        .then(|| vec![String::new(), "NA".to_string()]);
    let has_ref = rng.gen_bool(0.5);

    let nfields = rng.gen_range(1..=6);
    let tys = [
        Ty::Text,
        Ty::Int,
        Ty::Dec,
        Ty::DateIso,
        Ty::DateDmy,
        Ty::Enum,
    ];
    let mut fields: Vec<(String, Ty)> = Vec::new();
    while fields.len() < nfields {
        let name = ident(rng).to_lowercase();
        if is_keyword(&name) || name == "unused" || fields.iter().any(|(n, _)| *n == name) {
            continue;
        }
        fields.push((name, *tys.choose(rng).unwrap()));
    }
    // file layout: the fields in random order plus one unused column
    let mut layout: Vec<Option<usize>> = (0..nfields).map(Some).chain([None]).collect();
    layout.shuffle(rng);
    let headers: Vec<String> = layout
        .iter()
        .map(|slot| match slot {
            Some(i) if rng.gen_bool(0.7) => fields[*i].0.clone(),
            Some(i) => format!("Col {}", fields[*i].0.to_uppercase()),
            None => "unused".to_string(),
        })
        .collect();

    let mut labels = Vec::new();
    let field_decls: Vec<FieldDecl> = fields
        .iter()
        .enumerate()
        .map(|(i, (name, ty))| {
            let col = layout.iter().position(|s| *s == Some(i)).unwrap();
            let column = if !header {
                Some(ColumnRef::Index(col as u32 + 1))
            } else if headers[col] == *name && rng.gen_bool(0.5) {
                None
            } else if rng.gen_bool(0.8) {
                Some(ColumnRef::Name(headers[col].clone()))
            } else {
                Some(ColumnRef::Index(col as u32 + 1))
            };
            FieldDecl {
                name: name.clone(),
                ftype: ty.field_type(),
                column,
                constraints: constraints_for(rng, *ty, has_ref, &mut labels),
                pos: P,
            }
        })
        .collect();
    let record_rules = (0..rng.gen_range(0..=2))
        .map(|i| RecordRuleDecl {
            name: format!("rule_{i}"),
            severity: if rng.gen_bool(0.2) {
                Severity::Warning
            } else {
                Severity::Error
            },
            expr: rule_expr(rng, &fields, 3),
            pos: P,
        })
        .collect();

    let mut sources = vec![SourceDecl {
        name: "main".into(),
        path: "main.csv".into(),
        delimiter: (delimiter != b',').then(|| (delimiter as char).to_string()),
        quote: None,
        header: (!header).then_some(false),
        nulls: nulls.clone(),
        pos: P,
    }];
    if has_ref {
        sources.push(SourceDecl {
            name: "lookup".into(),
            path: "lookup.csv".into(),
            delimiter: None,
            quote: None,
            header: None,
            nulls: None,
            pos: P,
        });
    }
    let ast = SpecAst {
        name: "random".into(),
        sources,
        objects: vec![ObjectDecl {
            name: "obj".into(),
            source: "main".into(),
            fields: field_decls,
            record_rules,
            pos: P,
        }],
        collection_rules: vec![ThresholdDecl {
            name: "limit".into(),
            target: ThresholdTarget::InvalidRecords,
            comparator: Comparator::Le,
            limit_percent: Decimal::from(rng.gen_range(0..=100)),
            pos: P,
        }],
        pos: P,
    };

    let records = if rng.gen_bool(0.2) {
        rng.gen_range(0..=max_records)
    } else {
        rng.gen_range(0..=max_records.min(120))
    };
    // small per-column domains make duplicates likely
    let domains: Vec<Vec<&str>> = layout
        .iter()
        .map(|slot| {
            let pool = slot.map_or(Ty::Text, |i| fields[i].1).pool();
            let k = rng.gen_range(1..=pool.len());
            pool.choose_multiple(rng, k).copied().collect()
        })
        .collect();
    let mut rows = Vec::new();
    if header {
        rows.push(headers.clone());
    }
    for r in 0..records {
        let mut row: Vec<String> = domains
            .iter()
            .map(|d| d.choose(rng).unwrap().to_string())
            .collect();
        let first_data = r == 0 && !header;
        if !first_data && rng.gen_bool(0.01) {
            if rng.gen_bool(0.5) {
                row.pop();
            } else {
                row.push("extra".into());
            }
        }
        rows.push(row);
    }
    let mut files = vec![("main".to_string(), write_csv(delimiter, &rows))];
    if has_ref {
        let mut lrows = vec![vec!["id".to_string(), "code".to_string()]];
        for i in 0..rng.gen_range(0..8) {
            let mut row = vec![i.to_string(), REF_CODES.choose(rng).unwrap().to_string()];
            if rng.gen_bool(0.05) {
                row.pop();
            }
            lrows.push(row);
        }
        files.push(("lookup".to_string(), write_csv(b',', &lrows)));
    }
    let spec_text = format_spec(&ast);
    Case {
        ast,
        spec_text,
        files,
    }
}
