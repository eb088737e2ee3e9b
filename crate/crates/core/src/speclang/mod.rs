//! The `.dq` specification language: syntax tree, parser, semantic checker
//! and canonical formatter.

pub mod ast;
pub mod check;
pub mod datefmt;
pub mod error;
pub mod format;
pub mod lexer;
pub mod parser;
pub mod pattern;

pub use ast::SpecAst;
pub use check::{check_spec, Dimension, ValidatedSpec};
pub use error::{ParseSpecError, SemanticCode, SemanticError, SemanticErrors, SyntaxError};
pub use format::{format_spec, format_spec_annotated};
pub use parser::{parse_spec, parse_spec_bytes};
