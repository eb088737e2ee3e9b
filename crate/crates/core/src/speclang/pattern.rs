//! Portable regular-expression subset used by `matches`.
//!
//! Accepted: literals, `.`, bracketed classes, `\d \w \s`, POSIX `[:name:]`
//! classes, all quantifiers, `^`/`$`, alternation and plain or non-capturing
//! groups. Rejected: flags, named groups, Unicode property classes, word
//! boundaries and `\A`/`\z`. A pattern must match the whole (trimmed) value.

use regex::Regex;
use regex_syntax::ast::{self, Ast, ClassSet, ClassSetItem, GroupKind, LiteralKind};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid pattern '{pattern}': {reason}")]
pub struct PatternError {
    pub pattern: String,
    pub reason: String,
}

/// A validated pattern compiled for whole-value matching.
#[derive(Debug, Clone)]
pub struct Pattern {
    source: String,
    regex: Regex,
    ast: Ast,
}

impl PartialEq for Pattern {
    fn eq(&self, other: &Self) -> bool {
        self.source == other.source
    }
}

impl Pattern {
    pub fn compile(source: &str) -> Result<Self, PatternError> {
        let err = |reason: String| PatternError {
            pattern: source.to_string(),
            reason,
        };
        let ast = ast::parse::Parser::new()
            .parse(source)
            .map_err(|e| err(e.kind().to_string()))?;
        check_subset(&ast).map_err(|r| err(r.to_string()))?;
        let regex = regex::RegexBuilder::new(&format!("^(?:{source})$"))
            .dot_matches_new_line(true)
            .build()
            .map_err(|e| err(e.to_string()))?;
        Ok(Self {
            source: source.to_string(),
            regex,
            ast,
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn is_match(&self, value: &str) -> bool {
        self.regex.is_match(value)
    }

    /// Equivalent SQL `LIKE` pattern, when one exists. Returns the pattern
    /// and whether it needs `ESCAPE '\'`.
    pub fn to_like(&self) -> Option<(String, bool)> {
        let items: Vec<&Ast> = match &self.ast {
            Ast::Concat(c) => c.asts.iter().collect(),
            Ast::Empty(_) => Vec::new(),
            other => vec![other],
        };
        let mut items = items.as_slice();
        if let Some((first, rest)) = items.split_first() {
            if is_assertion(first, ast::AssertionKind::StartLine) {
                items = rest;
            }
        }
        if let Some((last, rest)) = items.split_last() {
            if is_assertion(last, ast::AssertionKind::EndLine) {
                items = rest;
            }
        }
        let mut like = String::new();
        let mut escaped = false;
        for item in items {
            match item {
                Ast::Literal(lit) => {
                    let c = lit.c;
                    if matches!(c, '%' | '_' | '\\') {
                        like.push('\\');
                        escaped = true;
                    }
                    like.push(c);
                }
                Ast::Dot(_) => like.push('_'),
                Ast::Repetition(rep)
                    if matches!(rep.op.kind, ast::RepetitionKind::ZeroOrMore)
                        && matches!(*rep.ast, Ast::Dot(_)) =>
                {
                    like.push('%')
                }
                _ => return None,
            }
        }
        Some((like, escaped))
    }
}

fn is_assertion(a: &Ast, kind: ast::AssertionKind) -> bool {
    matches!(a, Ast::Assertion(x) if x.kind == kind)
}

fn check_subset(a: &Ast) -> Result<(), &'static str> {
    match a {
        Ast::Empty(_) | Ast::Dot(_) | Ast::ClassPerl(_) => Ok(()),
        Ast::Literal(l) => check_literal(l),
        Ast::Flags(_) => Err("inline flags are not portable"),
        Ast::ClassUnicode(_) => Err("Unicode property classes are not portable"),
        Ast::Assertion(x) => match x.kind {
            ast::AssertionKind::StartLine | ast::AssertionKind::EndLine => Ok(()),
            _ => Err("only '^' and '$' anchors are supported"),
        },
        Ast::ClassBracketed(c) => check_class_set(&c.kind),
        Ast::Repetition(r) => check_subset(&r.ast),
        Ast::Group(g) => {
            match &g.kind {
                GroupKind::CaptureIndex(_) => {}
                GroupKind::NonCapturing(flags) if flags.items.is_empty() => {}
                GroupKind::NonCapturing(_) => return Err("group flags are not portable"),
                GroupKind::CaptureName { .. } => return Err("named groups are not portable"),
            }
            check_subset(&g.ast)
        }
        Ast::Alternation(alt) => alt.asts.iter().try_for_each(check_subset),
        Ast::Concat(c) => c.asts.iter().try_for_each(check_subset),
    }
}

fn check_literal(l: &ast::Literal) -> Result<(), &'static str> {
    match l.kind {
        LiteralKind::Verbatim | LiteralKind::Meta | LiteralKind::Superfluous => Ok(()),
        LiteralKind::Special(_) => Ok(()),
        _ => Err("octal and hex escapes are not portable"),
    }
}

fn check_class_set(set: &ClassSet) -> Result<(), &'static str> {
    match set {
        ClassSet::BinaryOp(_) => Err("class set operations are not portable"),
        ClassSet::Item(item) => check_class_item(item),
    }
}

fn check_class_item(item: &ClassSetItem) -> Result<(), &'static str> {
    match item {
        ClassSetItem::Empty(_) | ClassSetItem::Ascii(_) | ClassSetItem::Perl(_) => Ok(()),
        ClassSetItem::Literal(l) => check_literal(l),
        ClassSetItem::Range(r) => {
            check_literal(&r.start)?;
            check_literal(&r.end)
        }
        ClassSetItem::Unicode(_) => Err("Unicode property classes are not portable"),
        ClassSetItem::Bracketed(b) => check_class_set(&b.kind),
        ClassSetItem::Union(u) => u.items.iter().try_for_each(check_class_item),
    }
}
