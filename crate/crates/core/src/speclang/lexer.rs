use super::ast::Pos;
use super::error::SyntaxError;
use chrono::NaiveDate;
use rust_decimal::Decimal;
use std::str::FromStr;

/// Reserved words; never valid as identifiers.
pub const KEYWORDS: &[&str] = &[
    "spec",
    "source",
    "object",
    "field",
    "rule",
    "threshold",
    "from",
    "column",
    "not",
    "null",
    "unique",
    "matches",
    "min",
    "max",
    "min_length",
    "max_length",
    "references",
    "as",
    "error",
    "warning",
    "is",
    "and",
    "or",
    "text",
    "integer",
    "decimal",
    "date",
    "enum",
    "iso",
    "invalid_records",
    "delimiter",
    "quote",
    "header",
    "nulls",
    "true",
    "false",
];

pub fn is_keyword(word: &str) -> bool {
    KEYWORDS.contains(&word)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Word(String),
    Str(String),
    Int(i64),
    Dec(Decimal),
    Date(NaiveDate),
    Punct(&'static str),
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Word(w) if is_keyword(w) => format!("'{w}'"),
            Tok::Word(w) => format!("identifier '{w}'"),
            Tok::Str(_) => "string".into(),
            Tok::Int(_) | Tok::Dec(_) => "number".into(),
            Tok::Date(_) => "date".into(),
            Tok::Punct(p) => format!("'{p}'"),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: u32,
    col: u32,
}

impl Cursor<'_> {
    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn pos(&self) -> Pos {
        Pos::new(self.line, self.col)
    }
}

fn lex_error(pos: Pos, expected: &str, found: impl Into<String>) -> SyntaxError {
    SyntaxError {
        pos,
        expected: vec![expected.to_string()],
        found: found.into(),
    }
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, SyntaxError> {
    let mut cur = Cursor {
        chars: src.chars().peekable(),
        line: 1,
        col: 1,
    };
    let mut out = Vec::new();
    loop {
        while let Some(c) = cur.peek() {
            if c.is_whitespace() || c == '\u{feff}' {
                cur.bump();
            } else if c == '#' {
                while let Some(c) = cur.peek() {
                    if c == '\n' {
                        break;
                    }
                    cur.bump();
                }
            } else {
                break;
            }
        }
        let pos = cur.pos();
        let Some(c) = cur.peek() else {
            out.push(Token { tok: Tok::Eof, pos });
            return Ok(out);
        };
        let tok = if c.is_ascii_alphabetic() || c == '_' {
            let mut w = String::new();
            while let Some(c) = cur.peek() {
                if c.is_ascii_alphanumeric() || c == '_' {
                    w.push(c);
                    cur.bump();
                } else {
                    break;
                }
            }
            Tok::Word(w)
        } else if c == '"' {
            cur.bump();
            Tok::Str(lex_string(&mut cur, pos)?)
        } else if c.is_ascii_digit() {
            lex_number(&mut cur, pos, false)?
        } else if c == '-' {
            cur.bump();
            match cur.peek() {
                Some(d) if d.is_ascii_digit() => lex_number(&mut cur, pos, true)?,
                _ => return Err(lex_error(pos, "number after '-'", "'-'")),
            }
        } else {
            cur.bump();
            let p: &'static str = match c {
                '{' => "{",
                '}' => "}",
                '(' => "(",
                ')' => ")",
                '[' => "[",
                ']' => "]",
                ';' => ";",
                ':' => ":",
                ',' => ",",
                '.' => ".",
                '%' => "%",
                '=' => "=",
                '≠' => "!=",
                '≤' => "<=",
                '≥' => ">=",
                '!' if cur.peek() == Some('=') => {
                    cur.bump();
                    "!="
                }
                '<' => match cur.peek() {
                    Some('=') => {
                        cur.bump();
                        "<="
                    }
                    Some('>') => {
                        cur.bump();
                        "!="
                    }
                    _ => "<",
                },
                '>' => {
                    if cur.peek() == Some('=') {
                        cur.bump();
                        ">="
                    } else {
                        ">"
                    }
                }
                other => return Err(lex_error(pos, "token", format!("'{other}'"))),
            };
            Tok::Punct(p)
        };
        out.push(Token { tok, pos });
    }
}

fn lex_string(cur: &mut Cursor<'_>, start: Pos) -> Result<String, SyntaxError> {
    let mut s = String::new();
    loop {
        match cur.bump() {
            None => return Err(lex_error(start, "closing '\"'", "end of input")),
            Some('"') => return Ok(s),
            Some('\\') => match cur.bump() {
                Some('"') => s.push('"'),
                Some('\\') => s.push('\\'),
                Some('n') => s.push('\n'),
                Some('t') => s.push('\t'),
                // unknown escapes stay verbatim so regex patterns read naturally
                Some(other) => {
                    s.push('\\');
                    s.push(other);
                }
                None => return Err(lex_error(start, "closing '\"'", "end of input")),
            },
            Some(c) => s.push(c),
        }
    }
}

fn lex_number(cur: &mut Cursor<'_>, pos: Pos, negative: bool) -> Result<Tok, SyntaxError> {
    let mut digits = String::new();
    if negative {
        digits.push('-');
    }
    while let Some(c) = cur.peek() {
        if c.is_ascii_digit() {
            digits.push(c);
            cur.bump();
        } else {
            break;
        }
    }
    let int_len = digits.trim_start_matches('-').len();
    if !negative && int_len == 4 && cur.peek() == Some('-') {
        // date literal YYYY-MM-DD
        let mut rest = String::new();
        for _ in 0..6 {
            match cur.peek() {
                Some(c) if c.is_ascii_digit() || c == '-' => {
                    rest.push(c);
                    cur.bump();
                }
                _ => break,
            }
        }
        let text = format!("{digits}{rest}");
        return NaiveDate::parse_from_str(&text, "%Y-%m-%d")
            .ok()
            .filter(|_| text.len() == 10)
            .map(Tok::Date)
            .ok_or_else(|| lex_error(pos, "valid date literal YYYY-MM-DD", text));
    }
    if cur.peek() == Some('.') {
        // only a decimal if a digit follows the dot
        let mut look = cur.chars.clone();
        look.next();
        if matches!(look.peek(), Some(d) if d.is_ascii_digit()) {
            cur.bump();
            digits.push('.');
            while let Some(c) = cur.peek() {
                if c.is_ascii_digit() {
                    digits.push(c);
                    cur.bump();
                } else {
                    break;
                }
            }
            return Decimal::from_str(&digits)
                .map(Tok::Dec)
                .map_err(|_| lex_error(pos, "representable decimal", digits.clone()));
        }
    }
    digits
        .parse::<i64>()
        .map(Tok::Int)
        .map_err(|_| lex_error(pos, "64-bit integer", digits.clone()))
}
