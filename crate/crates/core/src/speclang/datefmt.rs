//! Date format mini-language: `YYYY`, `MM`, `DD` tokens with literal separators.

use chrono::{Datelike, NaiveDate};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Part {
    Year,
    Month,
    Day,
    Lit(char),
}

/// A compiled date format such as `YYYY-MM-DD` or `DD.MM.YYYY`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DateFormat {
    pattern: String,
    parts: Vec<Part>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid date format '{pattern}': {reason}")]
pub struct DateFormatError {
    pub pattern: String,
    pub reason: &'static str,
}

impl DateFormat {
    pub fn iso() -> Self {
        Self::compile("YYYY-MM-DD").expect("iso format compiles")
    }

    pub fn compile(pattern: &str) -> Result<Self, DateFormatError> {
        let err = |reason| DateFormatError {
            pattern: pattern.to_string(),
            reason,
        };
        let mut parts = Vec::new();
        let mut rest = pattern;
        while !rest.is_empty() {
            if let Some(r) = rest.strip_prefix("YYYY") {
                parts.push(Part::Year);
                rest = r;
            } else if let Some(r) = rest.strip_prefix("MM") {
                parts.push(Part::Month);
                rest = r;
            } else if let Some(r) = rest.strip_prefix("DD") {
                parts.push(Part::Day);
                rest = r;
            } else {
                let c = rest.chars().next().expect("non-empty");
                if c.is_ascii_alphanumeric() {
                    return Err(err(
                        "only YYYY, MM, DD and non-alphanumeric separators are allowed",
                    ));
                }
                parts.push(Part::Lit(c));
                rest = &rest[c.len_utf8()..];
            }
        }
        for token in [Part::Year, Part::Month, Part::Day] {
            if parts.iter().filter(|p| **p == token).count() != 1 {
                return Err(err("YYYY, MM and DD must each appear exactly once"));
            }
        }
        Ok(Self {
            pattern: pattern.to_string(),
            parts,
        })
    }

    pub fn pattern(&self) -> &str {
        &self.pattern
    }

    /// Strict parse: fixed digit counts, literal separators, valid calendar date.
    pub fn parse(&self, s: &str) -> Option<NaiveDate> {
        let bytes = s.as_bytes();
        let mut at = 0usize;
        let (mut y, mut m, mut d) = (0i32, 0u32, 0u32);
        let digits = |at: &mut usize, n: usize| -> Option<u32> {
            let chunk = bytes.get(*at..*at + n)?;
            if !chunk.iter().all(u8::is_ascii_digit) {
                return None;
            }
            *at += n;
            Some(
                chunk
                    .iter()
                    .fold(0u32, |acc, b| acc * 10 + u32::from(b - b'0')),
            )
        };
        for part in &self.parts {
            match part {
                Part::Year => y = digits(&mut at, 4)? as i32,
                Part::Month => m = digits(&mut at, 2)?,
                Part::Day => d = digits(&mut at, 2)?,
                Part::Lit(c) => {
                    let rest = s.get(at..)?;
                    if !rest.starts_with(*c) {
                        return None;
                    }
                    at += c.len_utf8();
                }
            }
        }
        if at != bytes.len() {
            return None;
        }
        NaiveDate::from_ymd_opt(y, m, d)
    }

    pub fn render(&self, date: NaiveDate) -> String {
        let mut out = String::with_capacity(self.pattern.len());
        for part in &self.parts {
            match part {
                Part::Year => out.push_str(&format!("{:04}", date.year())),
                Part::Month => out.push_str(&format!("{:02}", date.month())),
                Part::Day => out.push_str(&format!("{:02}", date.day())),
                Part::Lit(c) => out.push(*c),
            }
        }
        out
    }
}

impl fmt::Display for DateFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.pattern)
    }
}
