//! Random syntax trees covering every grammar production. Trees are
//! syntactically valid but not necessarily semantically checked.

use chrono::NaiveDate;
use dq_core::speclang::ast::*;
use dq_core::speclang::lexer::is_keyword;
use rand::seq::SliceRandom;
use rand::Rng;
use rust_decimal::Decimal;

const P: Pos = Pos { line: 0, col: 0 };

pub fn ident<R: Rng>(rng: &mut R) -> String {
    const HEAD: &[u8] = b"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ_";
    const TAIL: &[u8] = b"abcdefghijklmnopqrstuvwxyz0123456789_";
    loop {
        let len = rng.gen_range(1..10);
        let mut s = String::new();
        s.push(*HEAD.choose(rng).unwrap() as char);
        for _ in 1..len {
            s.push(*TAIL.choose(rng).unwrap() as char);
        }
        if !is_keyword(&s) {
            return s;
        }
    }
}

/// Strings exercising every escape plus non-ASCII text.
pub fn string<R: Rng>(rng: &mut R) -> String {
    const ALPHABET: &[&str] = &[
        "a", "Z", "0", " ", "-", ".", "\"", "\\", "\n", "\t", "ā", "ž", "€", "#", "{", "}", ";",
        "%", "\\d", "日",
    ];
    let len = rng.gen_range(0..8);
    (0..len).map(|_| *ALPHABET.choose(rng).unwrap()).collect()
}

pub fn date<R: Rng>(rng: &mut R) -> NaiveDate {
    NaiveDate::from_ymd_opt(
        rng.gen_range(1000..=9999),
        rng.gen_range(1..=12),
        rng.gen_range(1..=28),
    )
    .unwrap()
}

pub fn decimal<R: Rng>(rng: &mut R) -> Decimal {
    let scale = rng.gen_range(1..=6);
    let mantissa: i64 = rng.gen_range(-10_000_000..=10_000_000);
    Decimal::new(if mantissa == 0 { 1 } else { mantissa }, scale)
}

pub fn literal<R: Rng>(rng: &mut R) -> Literal {
    match rng.gen_range(0..4) {
        0 => Literal::Text(string(rng)),
        1 => Literal::Integer(rng.gen_range(-1_000_000_000_000i64..=1_000_000_000_000)),
        2 => Literal::Decimal(decimal(rng)),
        _ => Literal::Date(date(rng)),
    }
}

fn column_ref<R: Rng>(rng: &mut R) -> ColumnRef {
    if rng.gen_bool(0.5) {
        ColumnRef::Name(string(rng))
    } else {
        ColumnRef::Index(rng.gen_range(0..50))
    }
}

fn field_type<R: Rng>(rng: &mut R) -> FieldType {
    match rng.gen_range(0..7) {
        0 => FieldType::Text,
        1 => FieldType::Integer,
        2 => FieldType::Decimal,
        3 => FieldType::Date(DateFormatSpec::Iso),
        4 => FieldType::Date(DateFormatSpec::Custom(string(rng))),
        5 => FieldType::Enum(Vec::new()),
        _ => FieldType::Enum((0..rng.gen_range(1..4)).map(|_| string(rng)).collect()),
    }
}

fn severity<R: Rng>(rng: &mut R) -> Severity {
    if rng.gen_bool(0.3) {
        Severity::Warning
    } else {
        Severity::Error
    }
}

fn constraint<R: Rng>(rng: &mut R) -> ConstraintDecl {
    let kind = match rng.gen_range(0..8) {
        0 => ConstraintKind::NotNull,
        1 => ConstraintKind::Unique,
        2 => ConstraintKind::Matches(string(rng)),
        3 => ConstraintKind::Min(literal(rng)),
        4 => ConstraintKind::Max(literal(rng)),
        5 => ConstraintKind::MinLength(rng.gen_range(0..100)),
        6 => ConstraintKind::MaxLength(rng.gen_range(0..100)),
        _ => ConstraintKind::References {
            source: ident(rng),
            column: column_ref(rng),
        },
    };
    ConstraintDecl {
        kind,
        severity: severity(rng),
        label: rng.gen_bool(0.3).then(|| ident(rng)),
        pos: P,
    }
}

fn operand<R: Rng>(rng: &mut R) -> Operand {
    if rng.gen_bool(0.5) {
        Operand::Field(ident(rng), P)
    } else {
        Operand::Literal(literal(rng), P)
    }
}

pub fn expr<R: Rng>(rng: &mut R, depth: u32) -> Expr {
    let leaf = depth == 0 || rng.gen_bool(0.35);
    if leaf {
        return match rng.gen_range(0..3) {
            0 => Expr::IsNull {
                field: ident(rng),
                negated: rng.gen(),
                pos: P,
            },
            1 => Expr::Compare {
                op: *[
                    CmpOp::Eq,
                    CmpOp::Ne,
                    CmpOp::Lt,
                    CmpOp::Le,
                    CmpOp::Gt,
                    CmpOp::Ge,
                ]
                .choose(rng)
                .unwrap(),
                left: operand(rng),
                right: operand(rng),
                pos: P,
            },
            _ => Expr::Matches {
                field: ident(rng),
                pattern: string(rng),
                pos: P,
            },
        };
    }
    match rng.gen_range(0..3) {
        0 => Expr::And(
            Box::new(expr(rng, depth - 1)),
            Box::new(expr(rng, depth - 1)),
            P,
        ),
        1 => Expr::Or(
            Box::new(expr(rng, depth - 1)),
            Box::new(expr(rng, depth - 1)),
            P,
        ),
        _ => Expr::Not(Box::new(expr(rng, depth - 1)), P),
    }
}

fn source<R: Rng>(rng: &mut R) -> SourceDecl {
    SourceDecl {
        name: ident(rng),
        path: string(rng),
        delimiter: rng.gen_bool(0.4).then(|| string(rng)),
        quote: rng.gen_bool(0.3).then(|| string(rng)),
        header: rng.gen_bool(0.4).then(|| rng.gen()),
        nulls: rng
            .gen_bool(0.4)
            .then(|| (0..rng.gen_range(0..4)).map(|_| string(rng)).collect()),
        pos: P,
    }
}

fn threshold<R: Rng>(rng: &mut R) -> ThresholdDecl {
    let target = if rng.gen_bool(0.4) {
        ThresholdTarget::InvalidRecords
    } else {
        // keywords are allowed after the first segment
        let tail = ["not_null", "unique", "min", "type", "matches"];
        let last = if rng.gen_bool(0.5) {
            tail.choose(rng).unwrap().to_string()
        } else {
            ident(rng)
        };
        let mut path = ident(rng);
        if rng.gen_bool(0.5) {
            path = format!("{path}.{}", ident(rng));
        }
        ThresholdTarget::Rule(format!("{path}.{last}"))
    };
    let limit_percent = if rng.gen_bool(0.5) {
        Decimal::from(rng.gen_range(0..=100))
    } else {
        Decimal::new(rng.gen_range(0..=100_000), rng.gen_range(1..=4))
    };
    ThresholdDecl {
        name: ident(rng),
        target,
        comparator: if rng.gen() {
            Comparator::Le
        } else {
            Comparator::Lt
        },
        limit_percent,
        pos: P,
    }
}

pub fn spec_ast<R: Rng>(rng: &mut R) -> SpecAst {
    let sources = (0..rng.gen_range(0..3)).map(|_| source(rng)).collect();
    let objects = (0..rng.gen_range(0..3))
        .map(|_| ObjectDecl {
            name: ident(rng),
            source: ident(rng),
            fields: (0..rng.gen_range(0..5))
                .map(|_| FieldDecl {
                    name: ident(rng),
                    ftype: field_type(rng),
                    column: rng.gen_bool(0.4).then(|| column_ref(rng)),
                    constraints: (0..rng.gen_range(0..4)).map(|_| constraint(rng)).collect(),
                    pos: P,
                })
                .collect(),
            record_rules: (0..rng.gen_range(0..3))
                .map(|_| RecordRuleDecl {
                    name: ident(rng),
                    severity: severity(rng),
                    expr: expr(rng, 4),
                    pos: P,
                })
                .collect(),
            pos: P,
        })
        .collect();
    let collection_rules = (0..rng.gen_range(0..3)).map(|_| threshold(rng)).collect();
    SpecAst {
        name: ident(rng),
        sources,
        objects,
        collection_rules,
        pos: P,
    }
}
