use super::ast::Pos;
use std::fmt;

/// Parse failure: where it happened and what the grammar would have accepted.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct SyntaxError {
    pub pos: Pos,
    pub expected: Vec<String>,
    pub found: String,
}

impl fmt::Display for SyntaxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: syntax error: expected ", self.pos)?;
        match self.expected.as_slice() {
            [] => f.write_str("nothing")?,
            [one] => f.write_str(one)?,
            many => {
                let (last, head) = many.split_last().expect("non-empty");
                write!(f, "{} or {}", head.join(", "), last)?;
            }
        }
        write!(f, ", found {}", self.found)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ParseSpecError {
    #[error("specification is not valid UTF-8: {0}")]
    Encoding(#[from] std::str::Utf8Error),
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SemanticCode {
    UnknownField,
    UnknownSource,
    UnknownRule,
    DuplicateName,
    TypeMismatch,
    EmptyEnum,
    EmptyObject,
    ContradictoryBounds,
    InvalidPattern,
    InvalidDateFormat,
    InvalidDialect,
    InvalidColumn,
    LimitOutOfRange,
}

impl SemanticCode {
    pub fn as_str(self) -> &'static str {
        match self {
            SemanticCode::UnknownField => "UnknownField",
            SemanticCode::UnknownSource => "UnknownSource",
            SemanticCode::UnknownRule => "UnknownRule",
            SemanticCode::DuplicateName => "DuplicateName",
            SemanticCode::TypeMismatch => "TypeMismatch",
            SemanticCode::EmptyEnum => "EmptyEnum",
            SemanticCode::EmptyObject => "EmptyObject",
            SemanticCode::ContradictoryBounds => "ContradictoryBounds",
            SemanticCode::InvalidPattern => "InvalidPattern",
            SemanticCode::InvalidDateFormat => "InvalidDateFormat",
            SemanticCode::InvalidDialect => "InvalidDialect",
            SemanticCode::InvalidColumn => "InvalidColumn",
            SemanticCode::LimitOutOfRange => "LimitOutOfRange",
        }
    }
}

impl fmt::Display for SemanticCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{pos}: {code}: {message}")]
pub struct SemanticError {
    pub code: SemanticCode,
    pub pos: Pos,
    pub message: String,
}

impl SemanticError {
    pub fn new(code: SemanticCode, pos: Pos, message: impl Into<String>) -> Self {
        Self {
            code,
            pos,
            message: message.into(),
        }
    }
}

/// All semantic errors found in one spec, in source order.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct SemanticErrors(pub Vec<SemanticError>);

impl fmt::Display for SemanticErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}
