//! Recursive descent parser for `.dq` sources. See `docs/grammar.md`.

use super::ast::*;
use super::error::{ParseSpecError, SyntaxError};
use super::lexer::{is_keyword, tokenize, Tok, Token};
use rust_decimal::Decimal;

/// Parse UTF-8 bytes. Invalid encodings are reported before any lexing.
pub fn parse_spec_bytes(bytes: &[u8]) -> Result<SpecAst, ParseSpecError> {
    let text = std::str::from_utf8(bytes)?;
    Ok(parse_spec(text)?)
}

pub fn parse_spec(src: &str) -> Result<SpecAst, SyntaxError> {
    let tokens = tokenize(src)?;
    let mut p = Parser { tokens, at: 0 };
    let ast = p.spec()?;
    p.expect_eof()?;
    Ok(ast)
}

struct Parser {
    tokens: Vec<Token>,
    at: usize,
}

type PResult<T> = Result<T, SyntaxError>;

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.at.min(self.tokens.len() - 1)]
    }

    fn next(&mut self) -> Token {
        let t = self.peek().clone();
        if self.at < self.tokens.len() - 1 {
            self.at += 1;
        }
        t
    }

    fn error<T>(&self, expected: &[&str]) -> PResult<T> {
        let t = self.peek();
        Err(SyntaxError {
            pos: t.pos,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: t.tok.describe(),
        })
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Word(w) if w == kw)
    }

    fn at_punct(&self, p: &str) -> bool {
        matches!(&self.peek().tok, Tok::Punct(q) if *q == p)
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.at_keyword(kw) {
            self.next();
            true
        } else {
            false
        }
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.at_punct(p) {
            self.next();
            true
        } else {
            false
        }
    }

    fn keyword(&mut self, kw: &str) -> PResult<Pos> {
        if self.at_keyword(kw) {
            Ok(self.next().pos)
        } else {
            self.error(&[&format!("'{kw}'")])
        }
    }

    fn punct(&mut self, p: &str) -> PResult<Pos> {
        if self.at_punct(p) {
            Ok(self.next().pos)
        } else {
            self.error(&[&format!("'{p}'")])
        }
    }

    fn ident(&mut self) -> PResult<(String, Pos)> {
        match &self.peek().tok {
            Tok::Word(w) if !is_keyword(w) => {
                let t = self.next();
                match t.tok {
                    Tok::Word(w) => Ok((w, t.pos)),
                    _ => unreachable!(),
                }
            }
            _ => self.error(&["identifier"]),
        }
    }

    fn string(&mut self) -> PResult<String> {
        match &self.peek().tok {
            Tok::Str(_) => match self.next().tok {
                Tok::Str(s) => Ok(s),
                _ => unreachable!(),
            },
            _ => self.error(&["string"]),
        }
    }

    fn non_negative_int(&mut self) -> PResult<u32> {
        match self.peek().tok {
            Tok::Int(i) if (0..=u32::MAX as i64).contains(&i) => {
                self.next();
                Ok(i as u32)
            }
            _ => self.error(&["non-negative integer"]),
        }
    }

    fn expect_eof(&mut self) -> PResult<()> {
        if matches!(self.peek().tok, Tok::Eof) {
            Ok(())
        } else {
            self.error(&["end of input"])
        }
    }

    fn spec(&mut self) -> PResult<SpecAst> {
        let pos = self.keyword("spec")?;
        let (name, _) = self.ident()?;
        self.punct("{")?;
        let mut ast = SpecAst {
            name,
            sources: Vec::new(),
            objects: Vec::new(),
            collection_rules: Vec::new(),
            pos,
        };
        loop {
            if self.at_keyword("source") {
                ast.sources.push(self.source()?);
            } else if self.at_keyword("object") {
                ast.objects.push(self.object()?);
            } else if self.at_keyword("threshold") {
                ast.collection_rules.push(self.threshold()?);
            } else if self.eat_punct("}") {
                return Ok(ast);
            } else {
                return self.error(&["'source'", "'object'", "'threshold'", "'}'"]);
            }
        }
    }

    fn source(&mut self) -> PResult<SourceDecl> {
        let pos = self.keyword("source")?;
        let (name, _) = self.ident()?;
        let path = self.string()?;
        let mut decl = SourceDecl {
            name,
            path,
            delimiter: None,
            quote: None,
            header: None,
            nulls: None,
            pos,
        };
        loop {
            let opt_pos = self.peek().pos;
            let dup = |p: &Self| -> PResult<SourceDecl> {
                Err(SyntaxError {
                    pos: opt_pos,
                    expected: vec!["each source option at most once".into()],
                    found: p.tokens[p.at - 1].tok.describe(),
                })
            };
            if self.eat_keyword("delimiter") {
                if decl.delimiter.is_some() {
                    return dup(self);
                }
                decl.delimiter = Some(self.string()?);
            } else if self.eat_keyword("quote") {
                if decl.quote.is_some() {
                    return dup(self);
                }
                decl.quote = Some(self.string()?);
            } else if self.eat_keyword("header") {
                if decl.header.is_some() {
                    return dup(self);
                }
                decl.header = Some(if self.eat_keyword("true") {
                    true
                } else if self.eat_keyword("false") {
                    false
                } else {
                    return self.error(&["'true'", "'false'"]);
                });
            } else if self.eat_keyword("nulls") {
                if decl.nulls.is_some() {
                    return dup(self);
                }
                self.punct("[")?;
                let mut list = Vec::new();
                if !self.eat_punct("]") {
                    loop {
                        list.push(self.string()?);
                        if self.eat_punct("]") {
                            break;
                        }
                        if !self.eat_punct(",") {
                            return self.error(&["','", "']'"]);
                        }
                    }
                }
                decl.nulls = Some(list);
            } else if self.eat_punct(";") {
                return Ok(decl);
            } else {
                return self.error(&["'delimiter'", "'quote'", "'header'", "'nulls'", "';'"]);
            }
        }
    }

    fn object(&mut self) -> PResult<ObjectDecl> {
        let pos = self.keyword("object")?;
        let (name, _) = self.ident()?;
        self.keyword("from")?;
        let (source, _) = self.ident()?;
        self.punct("{")?;
        let mut obj = ObjectDecl {
            name,
            source,
            fields: Vec::new(),
            record_rules: Vec::new(),
            pos,
        };
        loop {
            if self.at_keyword("field") {
                obj.fields.push(self.field()?);
            } else if self.at_keyword("rule") {
                obj.record_rules.push(self.rule()?);
            } else if self.eat_punct("}") {
                return Ok(obj);
            } else {
                return self.error(&["'field'", "'rule'", "'}'"]);
            }
        }
    }

    fn column_ref(&mut self) -> PResult<ColumnRef> {
        match self.peek().tok {
            Tok::Str(_) => Ok(ColumnRef::Name(self.string()?)),
            Tok::Int(_) => Ok(ColumnRef::Index(self.non_negative_int()?)),
            _ => self.error(&["column name string", "column index"]),
        }
    }

    fn field(&mut self) -> PResult<FieldDecl> {
        let pos = self.keyword("field")?;
        let (name, _) = self.ident()?;
        let ftype = self.field_type()?;
        let column = if self.eat_keyword("column") {
            Some(self.column_ref()?)
        } else {
            None
        };
        let mut constraints = Vec::new();
        while !self.eat_punct(";") {
            constraints.push(self.constraint()?);
        }
        Ok(FieldDecl {
            name,
            ftype,
            column,
            constraints,
            pos,
        })
    }

    fn field_type(&mut self) -> PResult<FieldType> {
        if self.eat_keyword("text") {
            Ok(FieldType::Text)
        } else if self.eat_keyword("integer") {
            Ok(FieldType::Integer)
        } else if self.eat_keyword("decimal") {
            Ok(FieldType::Decimal)
        } else if self.eat_keyword("date") {
            if !self.eat_punct("(") {
                return Ok(FieldType::Date(DateFormatSpec::Iso));
            }
            let fmt = if self.eat_keyword("iso") {
                DateFormatSpec::Iso
            } else if matches!(self.peek().tok, Tok::Str(_)) {
                DateFormatSpec::Custom(self.string()?)
            } else {
                return self.error(&["'iso'", "date format string"]);
            };
            self.punct(")")?;
            Ok(FieldType::Date(fmt))
        } else if self.eat_keyword("enum") {
            self.punct("(")?;
            let mut values = Vec::new();
            if !self.eat_punct(")") {
                loop {
                    values.push(self.string()?);
                    if self.eat_punct(")") {
                        break;
                    }
                    if !self.eat_punct(",") {
                        return self.error(&["','", "')'"]);
                    }
                }
            }
            Ok(FieldType::Enum(values))
        } else {
            self.error(&["'text'", "'integer'", "'decimal'", "'date'", "'enum'"])
        }
    }

    fn literal(&mut self) -> PResult<Literal> {
        let lit = match &self.peek().tok {
            Tok::Str(s) => Literal::Text(s.clone()),
            Tok::Int(i) => Literal::Integer(*i),
            Tok::Dec(d) => Literal::Decimal(*d),
            Tok::Date(d) => Literal::Date(*d),
            _ => return self.error(&["literal"]),
        };
        self.next();
        Ok(lit)
    }

    fn severity(&mut self) -> Option<Severity> {
        if self.eat_keyword("warning") {
            Some(Severity::Warning)
        } else if self.eat_keyword("error") {
            Some(Severity::Error)
        } else {
            None
        }
    }

    fn constraint(&mut self) -> PResult<ConstraintDecl> {
        let pos = self.peek().pos;
        let kind = if self.eat_keyword("not") {
            self.keyword("null")?;
            ConstraintKind::NotNull
        } else if self.eat_keyword("unique") {
            ConstraintKind::Unique
        } else if self.eat_keyword("matches") {
            ConstraintKind::Matches(self.string()?)
        } else if self.eat_keyword("min") {
            ConstraintKind::Min(self.literal()?)
        } else if self.eat_keyword("max") {
            ConstraintKind::Max(self.literal()?)
        } else if self.eat_keyword("min_length") {
            ConstraintKind::MinLength(self.non_negative_int()?)
        } else if self.eat_keyword("max_length") {
            ConstraintKind::MaxLength(self.non_negative_int()?)
        } else if self.eat_keyword("references") {
            let (source, _) = self.ident()?;
            self.keyword("column")?;
            ConstraintKind::References {
                source,
                column: self.column_ref()?,
            }
        } else {
            return self.error(&[
                "'not'",
                "'unique'",
                "'matches'",
                "'min'",
                "'max'",
                "'min_length'",
                "'max_length'",
                "'references'",
                "';'",
            ]);
        };
        let severity = self.severity().unwrap_or_default();
        let label = if self.eat_keyword("as") {
            Some(self.ident()?.0)
        } else {
            None
        };
        Ok(ConstraintDecl {
            kind,
            severity,
            label,
            pos,
        })
    }

    fn rule(&mut self) -> PResult<RecordRuleDecl> {
        let pos = self.keyword("rule")?;
        let (name, _) = self.ident()?;
        let severity = self.severity().unwrap_or_default();
        self.punct(":")?;
        let expr = self.expr()?;
        self.punct(";")?;
        Ok(RecordRuleDecl {
            name,
            severity,
            expr,
            pos,
        })
    }

    fn threshold(&mut self) -> PResult<ThresholdDecl> {
        let pos = self.keyword("threshold")?;
        let (name, _) = self.ident()?;
        self.punct(":")?;
        let target = if self.eat_keyword("invalid_records") {
            ThresholdTarget::InvalidRecords
        } else {
            let (first, _) = self.ident()?;
            let mut path = first;
            while self.eat_punct(".") {
                // keywords are fine after a dot (`name.not_null`, `x.min`)
                match self.next().tok {
                    Tok::Word(w) => {
                        path.push('.');
                        path.push_str(&w);
                    }
                    _ => {
                        self.at -= 1;
                        return self.error(&["rule id segment"]);
                    }
                }
            }
            if !path.contains('.') {
                return self.error(&["'.'"]);
            }
            ThresholdTarget::Rule(path)
        };
        let comparator = if self.eat_punct("<=") {
            Comparator::Le
        } else if self.eat_punct("<") {
            Comparator::Lt
        } else {
            return self.error(&["'<='", "'<'"]);
        };
        let limit_percent = match self.peek().tok {
            Tok::Int(i) if i >= 0 => Decimal::from(i),
            Tok::Dec(d) if !d.is_sign_negative() => d,
            _ => return self.error(&["non-negative percentage"]),
        };
        self.next();
        self.punct("%")?;
        self.punct(";")?;
        Ok(ThresholdDecl {
            name,
            target,
            comparator,
            limit_percent,
            pos,
        })
    }

    fn expr(&mut self) -> PResult<Expr> {
        let mut left = self.and_expr()?;
        while self.at_keyword("or") {
            let pos = self.next().pos;
            let right = self.and_expr()?;
            left = Expr::Or(Box::new(left), Box::new(right), pos);
        }
        Ok(left)
    }

    fn and_expr(&mut self) -> PResult<Expr> {
        let mut left = self.unary()?;
        while self.at_keyword("and") {
            let pos = self.next().pos;
            let right = self.unary()?;
            left = Expr::And(Box::new(left), Box::new(right), pos);
        }
        Ok(left)
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.at_keyword("not") {
            let pos = self.next().pos;
            return Ok(Expr::Not(Box::new(self.unary()?), pos));
        }
        self.primary()
    }

    fn operand(&mut self) -> PResult<Operand> {
        let pos = self.peek().pos;
        match &self.peek().tok {
            Tok::Word(w) if !is_keyword(w) => Ok(Operand::Field(self.ident()?.0, pos)),
            Tok::Str(_) | Tok::Int(_) | Tok::Dec(_) | Tok::Date(_) => {
                Ok(Operand::Literal(self.literal()?, pos))
            }
            _ => self.error(&["'not'", "'('", "field name", "literal"]),
        }
    }

    fn primary(&mut self) -> PResult<Expr> {
        if self.eat_punct("(") {
            let e = self.expr()?;
            self.punct(")")?;
            return Ok(e);
        }
        let left = self.operand()?;
        if self.eat_keyword("is") {
            let negated = self.eat_keyword("not");
            self.keyword("null")?;
            return match left {
                Operand::Field(field, fpos) => Ok(Expr::IsNull {
                    field,
                    negated,
                    pos: fpos,
                }),
                Operand::Literal(..) => Err(SyntaxError {
                    pos: left.pos(),
                    expected: vec!["field name before 'is'".into()],
                    found: "literal".into(),
                }),
            };
        }
        if self.eat_keyword("matches") {
            let pattern = self.string()?;
            return match left {
                Operand::Field(field, fpos) => Ok(Expr::Matches {
                    field,
                    pattern,
                    pos: fpos,
                }),
                Operand::Literal(..) => Err(SyntaxError {
                    pos: left.pos(),
                    expected: vec!["field name before 'matches'".into()],
                    found: "literal".into(),
                }),
            };
        }
        let op = match &self.peek().tok {
            Tok::Punct("=") => CmpOp::Eq,
            Tok::Punct("!=") => CmpOp::Ne,
            Tok::Punct("<") => CmpOp::Lt,
            Tok::Punct("<=") => CmpOp::Le,
            Tok::Punct(">") => CmpOp::Gt,
            Tok::Punct(">=") => CmpOp::Ge,
            _ => {
                return self.error(&[
                    "'is'",
                    "'matches'",
                    "'='",
                    "'!='",
                    "'<'",
                    "'<='",
                    "'>'",
                    "'>='",
                ])
            }
        };
        self.next();
        let right = self.operand()?;
        let pos = left.pos();
        Ok(Expr::Compare {
            op,
            left,
            right,
            pos,
        })
    }
}
