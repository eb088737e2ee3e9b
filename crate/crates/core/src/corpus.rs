//! Seeded synthetic datasets with exactly injected defects.
//!
//! A [`CorpusPlan`] describes columns, their value generators and a list of
//! defect injections. [`generate`] writes the CSV and returns a
//! [`ViolationManifest`] naming, for every injection, the exact set of
//! record ordinals it touched. Output is a pure function of plan and seed.

use crate::speclang::datefmt::DateFormat;
use chrono::{Datelike, NaiveDate};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error("infeasible plan: {0}")]
    InfeasiblePlan(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("plan file: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Generator {
    /// `prefix` followed by `start + i` zero-padded to `width` digits.
    Sequence {
        #[serde(default)]
        prefix: String,
        #[serde(default)]
        start: u64,
        #[serde(default)]
        width: usize,
    },
    /// `#` digit, `A` uppercase letter, `a` lowercase letter, `\` escapes
    /// the next character; anything else is literal.
    Pattern {
        pattern: String,
    },
    Choice {
        values: Vec<String>,
    },
    IntRange {
        min: i64,
        max: i64,
    },
    DecimalRange {
        min: String,
        max: String,
        scale: u32,
    },
    DateRange {
        from: NaiveDate,
        to: NaiveDate,
        #[serde(default = "iso_format")]
        format: String,
    },
}

fn iso_format() -> String {
    "YYYY-MM-DD".into()
}

/// Type a generated column holds, as a spec type keyword.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GroundType {
    Text,
    Integer,
    Decimal,
    Date(String),
}

impl Generator {
    pub fn ground_type(&self) -> GroundType {
        let numeric = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
        match self {
            Generator::Sequence { prefix, .. } if prefix.is_empty() || numeric(prefix) => {
                GroundType::Integer
            }
            Generator::Pattern { pattern } if numeric(&pattern.replace('#', "0")) => {
                GroundType::Integer
            }
            Generator::IntRange { .. } => GroundType::Integer,
            Generator::DecimalRange { scale, .. } if *scale > 0 => GroundType::Decimal,
            Generator::DecimalRange { .. } => GroundType::Integer,
            Generator::DateRange { format, .. } => GroundType::Date(format.clone()),
            _ => GroundType::Text,
        }
    }
}

/// Columns sharing a presence group are filled or empty together.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Presence {
    pub group: String,
    /// Probability a record has the group filled.
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnPlan {
    pub name: String,
    pub generator: Generator,
    /// Independent probability of an empty cell.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub null_rate: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub presence: Option<Presence>,
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Recipe {
    /// Empty the cell.
    Blank,
    /// Replace the last character with `X`.
    Malformed,
    /// Empty the cell while its presence-group partners stay filled.
    Unpaired,
    /// Copy the previous record's value.
    Duplicate,
    /// Move a date to the given year.
    DateBeforeFloor { year: i32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Injection {
    pub name: String,
    /// Rule id the defect violates; `None` for defects no rule should flag.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule: Option<String>,
    pub column: String,
    pub recipe: Recipe,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<u64>,
    /// Share of records; used when `count` is absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusPlan {
    pub name: String,
    pub records: u64,
    #[serde(default)]
    pub seed: u64,
    pub columns: Vec<ColumnPlan>,
    #[serde(default)]
    pub injections: Vec<Injection>,
}

impl CorpusPlan {
    pub fn from_json(text: &str) -> Result<Self, CorpusError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("plan serializes");
        s.push('\n');
        s
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InjectedSet {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule: Option<String>,
    pub column: String,
    pub count: u64,
    /// 1-based record ordinals, ascending.
    pub ordinals: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViolationManifest {
    pub plan: String,
    pub seed: u64,
    pub records: u64,
    pub file: String,
    pub injections: Vec<InjectedSet>,
}

impl ViolationManifest {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, CorpusError> {
        Ok(serde_json::from_str(text)?)
    }

    /// Ordinals per rule id, merged across injections targeting the same rule.
    pub fn by_rule(&self) -> HashMap<String, Vec<u64>> {
        let mut out: HashMap<String, Vec<u64>> = HashMap::new();
        for i in &self.injections {
            if let Some(r) = &i.rule {
                out.entry(r.clone()).or_default().extend(&i.ordinals);
            }
        }
        for v in out.values_mut() {
            v.sort_unstable();
            v.dedup();
        }
        out
    }
}

const STREAM_PRESENCE: u64 = 1;
const STREAM_POSITIONS: u64 = 2;
const STREAM_VALUES: u64 = 3;

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

enum Compiled {
    Sequence {
        prefix: String,
        start: u64,
        width: usize,
    },
    Pattern(Vec<PatItem>),
    Choice(Vec<String>),
    IntRange(i64, i64),
    DecimalRange {
        lo: i128,
        hi: i128,
        scale: u32,
    },
    DateRange {
        from: NaiveDate,
        days: i64,
        format: DateFormat,
    },
}

#[derive(Clone, Copy)]
enum PatItem {
    Digit,
    Upper,
    Lower,
    Lit(char),
}

fn compile_pattern(p: &str) -> Vec<PatItem> {
    let mut out = Vec::new();
    let mut chars = p.chars();
    while let Some(c) = chars.next() {
        out.push(match c {
            '#' => PatItem::Digit,
            'A' => PatItem::Upper,
            'a' => PatItem::Lower,
            '\\' => PatItem::Lit(chars.next().unwrap_or('\\')),
            c => PatItem::Lit(c),
        });
    }
    out
}

fn scaled(s: &str, scale: u32) -> Result<i128, String> {
    let d = Decimal::from_str(s).map_err(|e| format!("'{s}': {e}"))?;
    let m = d * Decimal::from(10i64.pow(scale));
    if m.fract() != Decimal::ZERO {
        return Err(format!("'{s}' has more than {scale} decimal places"));
    }
    Ok(m.mantissa() / 10i128.pow(m.scale()))
}

impl Compiled {
    fn new(g: &Generator) -> Result<Self, String> {
        Ok(match g {
            Generator::Sequence {
                prefix,
                start,
                width,
            } => Compiled::Sequence {
                prefix: prefix.clone(),
                start: *start,
                width: *width,
            },
            Generator::Pattern { pattern } => {
                if pattern.is_empty() {
                    return Err("empty pattern".into());
                }
                Compiled::Pattern(compile_pattern(pattern))
            }
            Generator::Choice { values } => {
                if values.is_empty() {
                    return Err("choice without values".into());
                }
                Compiled::Choice(values.clone())
            }
            Generator::IntRange { min, max } => {
                if min > max {
                    return Err("int_range min exceeds max".into());
                }
                Compiled::IntRange(*min, *max)
            }
            Generator::DecimalRange { min, max, scale } => {
                let (lo, hi) = (scaled(min, *scale)?, scaled(max, *scale)?);
                if lo > hi || *scale > 18 {
                    return Err("invalid decimal_range".into());
                }
                Compiled::DecimalRange {
                    lo,
                    hi,
                    scale: *scale,
                }
            }
            Generator::DateRange { from, to, format } => {
                if from > to {
                    return Err("date_range from is after to".into());
                }
                Compiled::DateRange {
                    from: *from,
                    days: (*to - *from).num_days(),
                    format: DateFormat::compile(format).map_err(|e| e.to_string())?,
                }
            }
        })
    }

    fn value(&self, index: u64, rng: &mut ChaCha8Rng) -> String {
        match self {
            Compiled::Sequence {
                prefix,
                start,
                width,
            } => {
                format!("{prefix}{:0width$}", start + index, width = *width)
            }
            Compiled::Pattern(items) => items
                .iter()
                .map(|i| match i {
                    PatItem::Digit => char::from(b'0' + rng.gen_range(0..10u8)),
                    PatItem::Upper => char::from(b'A' + rng.gen_range(0..26u8)),
                    PatItem::Lower => char::from(b'a' + rng.gen_range(0..26u8)),
                    PatItem::Lit(c) => *c,
                })
                .collect(),
            Compiled::Choice(v) => v[rng.gen_range(0..v.len())].clone(),
            Compiled::IntRange(lo, hi) => rng.gen_range(*lo..=*hi).to_string(),
            Compiled::DecimalRange { lo, hi, scale } => {
                let m = rng.gen_range(*lo..=*hi);
                Decimal::from_i128_with_scale(m, *scale).to_string()
            }
            Compiled::DateRange { from, days, format } => {
                let d = *from + chrono::Duration::days(rng.gen_range(0..=*days));
                format.render(d)
            }
        }
    }
}

struct Planned {
    /// Per record (0-based): (column, recipe index) edits.
    edits: HashMap<u64, Vec<(usize, usize)>>,
    sets: Vec<InjectedSet>,
}

fn injection_count(inj: &Injection, records: u64) -> Result<u64, CorpusError> {
    match (inj.count, inj.rate) {
        (Some(c), _) => Ok(c),
        (None, Some(r)) if (0.0..=1.0).contains(&r) => Ok((r * records as f64).round() as u64),
        (None, Some(_)) => Err(CorpusError::InvalidPlan(format!(
            "injection '{}': rate must lie in [0, 1]",
            inj.name
        ))),
        (None, None) => Err(CorpusError::InvalidPlan(format!(
            "injection '{}' needs a count or a rate",
            inj.name
        ))),
    }
}

/// Draws presence masks: `None` for always-filled columns.
fn presence_masks(plan: &CorpusPlan) -> Vec<Option<Vec<bool>>> {
    let n = plan.records as usize;
    let mut groups: Vec<(&str, f64)> = Vec::new();
    for c in &plan.columns {
        if let Some(p) = &c.presence {
            if !groups.iter().any(|(g, _)| *g == p.group) {
                groups.push((&p.group, p.rate));
            }
        }
    }
    let mut masks: Vec<Option<Vec<bool>>> = plan
        .columns
        .iter()
        .map(|c| (c.null_rate > 0.0 || c.presence.is_some()).then(|| vec![true; n]))
        .collect();
    let mut r = rng(plan.seed, STREAM_PRESENCE);
    let mut group_on = vec![true; groups.len()];
    for rec in 0..n {
        for (gi, (_, rate)) in groups.iter().enumerate() {
            group_on[gi] = r.gen::<f64>() < *rate;
        }
        for (ci, c) in plan.columns.iter().enumerate() {
            let Some(mask) = masks[ci].as_mut() else {
                continue;
            };
            let mut on = true;
            if let Some(p) = &c.presence {
                let gi = groups
                    .iter()
                    .position(|(g, _)| *g == p.group)
                    .expect("group listed");
                on &= group_on[gi];
            }
            if c.null_rate > 0.0 {
                on &= r.gen::<f64>() >= c.null_rate;
            }
            mask[rec] = on;
        }
    }
    masks
}

fn plan_injections(plan: &CorpusPlan, masks: &[Option<Vec<bool>>]) -> Result<Planned, CorpusError> {
    let n = plan.records as usize;
    let col_index = |name: &str| {
        plan.columns
            .iter()
            .position(|c| c.name == name)
            .ok_or_else(|| CorpusError::InvalidPlan(format!("unknown column '{name}'")))
    };
    let present = |c: usize, r: usize| masks[c].as_ref().is_none_or(|m| m[r]);
    let mut used: Vec<Option<Vec<bool>>> = vec![None; plan.columns.len()];
    let mut r = rng(plan.seed, STREAM_POSITIONS);
    let mut edits: HashMap<u64, Vec<(usize, usize)>> = HashMap::new();
    let mut sets = Vec::new();
    for (ii, inj) in plan.injections.iter().enumerate() {
        let col = col_index(&inj.column)?;
        let count = injection_count(inj, plan.records)?;
        let mut touched = vec![col];
        match &inj.recipe {
            Recipe::Unpaired => {
                let group = plan.columns[col]
                    .presence
                    .as_ref()
                    .map(|p| p.group.clone())
                    .ok_or_else(|| {
                        CorpusError::InvalidPlan(format!(
                            "injection '{}': column '{}' has no presence group",
                            inj.name, inj.column
                        ))
                    })?;
                let partners: Vec<usize> = plan
                    .columns
                    .iter()
                    .enumerate()
                    .filter(|(i, c)| {
                        *i != col && c.presence.as_ref().is_some_and(|p| p.group == group)
                    })
                    .map(|(i, _)| i)
                    .collect();
                if partners.is_empty() {
                    return Err(CorpusError::InvalidPlan(format!(
                        "injection '{}': presence group '{group}' has no partner column",
                        inj.name
                    )));
                }
                touched.extend(partners);
            }
            Recipe::DateBeforeFloor { .. } => {
                if !matches!(plan.columns[col].generator, Generator::DateRange { .. }) {
                    return Err(CorpusError::InvalidPlan(format!(
                        "injection '{}': column '{}' is not a date column",
                        inj.name, inj.column
                    )));
                }
            }
            Recipe::Blank | Recipe::Malformed | Recipe::Duplicate => {}
        }
        let is_used = |used: &Vec<Option<Vec<bool>>>, c: usize, rec: usize| {
            used[c].as_ref().is_some_and(|u| u[rec])
        };
        let eligible: Vec<u32> = (0..n)
            .filter(|&rec| {
                touched
                    .iter()
                    .all(|&c| present(c, rec) && !is_used(&used, c, rec))
                    && match inj.recipe {
                        Recipe::Duplicate => {
                            rec > 0 && present(col, rec - 1) && !is_used(&used, col, rec - 1)
                        }
                        _ => true,
                    }
            })
            .map(|rec| rec as u32)
            .collect();
        if count as usize > eligible.len() {
            return Err(CorpusError::InfeasiblePlan(format!(
                "injection '{}' needs {count} records but only {} are eligible",
                inj.name,
                eligible.len()
            )));
        }
        let mut chosen: Vec<u32> = sample(&mut r, eligible.len(), count as usize)
            .into_iter()
            .map(|i| eligible[i])
            .collect();
        chosen.sort_unstable();
        for &rec in &chosen {
            for &c in &touched {
                used[c].get_or_insert_with(|| vec![false; n])[rec as usize] = true;
            }
            if inj.recipe == Recipe::Duplicate {
                used[col].get_or_insert_with(|| vec![false; n])[rec as usize - 1] = true;
            }
            edits.entry(rec as u64).or_default().push((col, ii));
        }
        sets.push(InjectedSet {
            name: inj.name.clone(),
            rule: inj.rule.clone(),
            column: inj.column.clone(),
            count,
            ordinals: chosen.iter().map(|&r| r as u64 + 1).collect(),
        });
    }
    Ok(Planned { edits, sets })
}

fn malformed(v: &str) -> String {
    let mut s: String = v.chars().collect();
    s.pop();
    s.push('X');
    s
}

fn shift_year(d: NaiveDate, year: i32) -> NaiveDate {
    d.with_year(year)
        .or_else(|| NaiveDate::from_ymd_opt(year, d.month(), 28))
        .expect("valid date")
}

/// Writes the dataset to `out` and returns the manifest.
pub fn generate_to<W: Write>(plan: &CorpusPlan, out: W) -> Result<ViolationManifest, CorpusError> {
    if plan.columns.is_empty() {
        return Err(CorpusError::InvalidPlan("plan has no columns".into()));
    }
    for c in &plan.columns {
        if !(0.0..=1.0).contains(&c.null_rate)
            || c.presence
                .as_ref()
                .is_some_and(|p| !(0.0..=1.0).contains(&p.rate))
        {
            return Err(CorpusError::InvalidPlan(format!(
                "column '{}': rates must lie in [0, 1]",
                c.name
            )));
        }
    }
    let compiled: Vec<Compiled> = plan
        .columns
        .iter()
        .map(|c| {
            Compiled::new(&c.generator)
                .map_err(|e| CorpusError::InvalidPlan(format!("column '{}': {e}", c.name)))
        })
        .collect::<Result<_, _>>()?;
    let masks = presence_masks(plan);
    let planned = plan_injections(plan, &masks)?;

    let io_err = |source: io::Error| CorpusError::Io {
        path: PathBuf::from(plan.file_name()),
        source,
    };
    let mut w = csv::Writer::from_writer(out);
    w.write_record(plan.columns.iter().map(|c| c.name.as_str()))
        .map_err(|e| io_err(io::Error::other(e)))?;
    let mut values = rng(plan.seed, STREAM_VALUES);
    let mut prev: Vec<String> = Vec::new();
    let mut row: Vec<String> = Vec::with_capacity(plan.columns.len());
    for rec in 0..plan.records {
        row.clear();
        for (ci, g) in compiled.iter().enumerate() {
            let v = g.value(rec, &mut values);
            let present = masks[ci].as_ref().is_none_or(|m| m[rec as usize]);
            row.push(if present { v } else { String::new() });
        }
        if let Some(edits) = planned.edits.get(&rec) {
            for &(ci, ii) in edits {
                let cell = &mut row[ci];
                match &plan.injections[ii].recipe {
                    Recipe::Blank | Recipe::Unpaired => cell.clear(),
                    Recipe::Malformed => *cell = malformed(cell),
                    Recipe::Duplicate => *cell = prev[ci].clone(),
                    Recipe::DateBeforeFloor { year } => {
                        if let Compiled::DateRange { format, .. } = &compiled[ci] {
                            let d = format.parse(cell).expect("generated date parses");
                            *cell = format.render(shift_year(d, *year));
                        }
                    }
                }
            }
        }
        w.write_record(&row)
            .map_err(|e| io_err(io::Error::other(e)))?;
        std::mem::swap(&mut prev, &mut row);
    }
    w.flush().map_err(io_err)?;
    Ok(ViolationManifest {
        plan: plan.name.clone(),
        seed: plan.seed,
        records: plan.records,
        file: plan.file_name(),
        injections: planned.sets,
    })
}

/// Writes `<dir>/<name>.csv` and `<dir>/<name>.manifest.json`.
pub fn generate(plan: &CorpusPlan, dir: &Path) -> Result<ViolationManifest, CorpusError> {
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| CorpusError::Io { path, source }
    };
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let data = dir.join(plan.file_name());
    let file = File::create(&data).map_err(io_err(&data))?;
    let manifest = generate_to(plan, BufWriter::with_capacity(1 << 16, file))?;
    let mpath = dir.join(format!("{}.manifest.json", plan.name));
    std::fs::write(&mpath, manifest.to_json()).map_err(io_err(&mpath))?;
    Ok(manifest)
}

/// Reference plans and specs reconstructing the register and licences
/// datasets.
pub mod assets {
    pub const REGISTER_PLAN: &str = include_str!("../assets/register.plan.json");
    pub const REGISTER_SPEC: &str = include_str!("../assets/register.dq");
    pub const LICENCES_PLAN: &str = include_str!("../assets/licences.plan.json");
    pub const LICENCES_SPEC: &str = include_str!("../assets/licences.dq");
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plan(records: u64, injections: Vec<Injection>) -> CorpusPlan {
        CorpusPlan {
            name: "t".into(),
            records,
            seed: 7,
            columns: vec![
                ColumnPlan {
                    name: "id".into(),
                    generator: Generator::Sequence {
                        prefix: "R".into(),
                        start: 1,
                        width: 4,
                    },
                    null_rate: 0.0,
                    presence: None,
                },
                ColumnPlan {
                    name: "code".into(),
                    generator: Generator::Pattern {
                        pattern: "LV-####".into(),
                    },
                    null_rate: 0.0,
                    presence: None,
                },
                ColumnPlan {
                    name: "start".into(),
                    generator: Generator::DateRange {
                        from: NaiveDate::from_ymd_opt(2000, 1, 1).unwrap(),
                        to: NaiveDate::from_ymd_opt(2001, 1, 1).unwrap(),
                        format: "DD.MM.YYYY".into(),
                    },
                    null_rate: 0.0,
                    presence: Some(Presence {
                        group: "p".into(),
                        rate: 0.5,
                    }),
                },
                ColumnPlan {
                    name: "end".into(),
                    generator: Generator::DecimalRange {
                        min: "0".into(),
                        max: "9.99".into(),
                        scale: 2,
                    },
                    null_rate: 0.0,
                    presence: Some(Presence {
                        group: "p".into(),
                        rate: 0.5,
                    }),
                },
            ],
            injections,
        }
    }

    fn inj(name: &str, column: &str, recipe: Recipe, count: u64) -> Injection {
        Injection {
            name: name.into(),
            rule: Some(format!("o.{name}")),
            column: column.into(),
            recipe,
            count: Some(count),
            rate: None,
        }
    }

    fn rows(text: &[u8]) -> Vec<Vec<String>> {
        csv::Reader::from_reader(text)
            .records()
            .map(|r| r.unwrap().iter().map(str::to_string).collect())
            .collect()
    }

    #[test]
    fn deterministic_and_exact() {
        let p = plan(
            300,
            vec![
                inj("missing", "code", Recipe::Blank, 20),
                inj("bad", "code", Recipe::Malformed, 5),
                inj("pair", "end", Recipe::Unpaired, 7),
                inj("old", "start", Recipe::DateBeforeFloor { year: 1552 }, 3),
                inj("dup", "id", Recipe::Duplicate, 4),
            ],
        );
        let (mut a, mut b) = (Vec::new(), Vec::new());
        let m1 = generate_to(&p, &mut a).unwrap();
        let m2 = generate_to(&p, &mut b).unwrap();
        assert_eq!(a, b);
        assert_eq!(m1, m2);
        let rows = rows(&a);
        assert_eq!(rows.len(), 300);
        for s in &m1.injections {
            assert_eq!(s.ordinals.len() as u64, s.count);
        }
        let set = |name: &str| {
            &m1.injections
                .iter()
                .find(|s| s.name == name)
                .unwrap()
                .ordinals
        };
        let missing = set("missing");
        let bad = set("bad");
        assert!(missing.iter().all(|o| !bad.contains(o)));
        let blank_codes: Vec<u64> = (1..=300)
            .filter(|&o| rows[o as usize - 1][1].is_empty())
            .collect();
        assert_eq!(&blank_codes, missing);
        for o in bad {
            assert!(rows[*o as usize - 1][1].ends_with('X'));
        }
        for o in set("pair") {
            let r = &rows[*o as usize - 1];
            assert!(!r[2].is_empty() && r[3].is_empty());
        }
        for o in set("old") {
            assert!(rows[*o as usize - 1][2].ends_with(".1552"));
        }
        for o in set("dup") {
            let i = *o as usize - 1;
            assert_eq!(rows[i][0], rows[i - 1][0]);
        }
    }

    #[test]
    fn infeasible_counts_are_rejected() {
        let p = plan(
            10,
            vec![
                inj("missing", "code", Recipe::Blank, 8),
                inj("bad", "code", Recipe::Malformed, 3),
            ],
        );
        assert!(matches!(
            generate_to(&p, io::sink()),
            Err(CorpusError::InfeasiblePlan(_))
        ));
    }

    #[test]
    fn plan_json_round_trip() {
        let p = plan(
            5,
            vec![inj(
                "old",
                "start",
                Recipe::DateBeforeFloor { year: 1552 },
                1,
            )],
        );
        let text = p.to_json();
        assert!(text.contains("\"kind\": \"date_range\""));
        assert!(text.contains("\"date_before_floor\""));
        assert_eq!(CorpusPlan::from_json(&text).unwrap(), p);
    }

    #[test]
    fn seed_changes_output() {
        let mut p = plan(50, vec![]);
        let mut a = Vec::new();
        generate_to(&p, &mut a).unwrap();
        p.seed = 8;
        let mut b = Vec::new();
        generate_to(&p, &mut b).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn reference_assets_are_consistent() {
        use crate::speclang::{check_spec, parse_spec};
        for (plan, spec, cols, records) in [
            (assets::REGISTER_PLAN, assets::REGISTER_SPEC, 22, 396952),
            (assets::LICENCES_PLAN, assets::LICENCES_SPEC, 9, 501),
        ] {
            let p = CorpusPlan::from_json(plan).unwrap();
            assert_eq!((p.columns.len(), p.records), (cols, records));
            let v = check_spec(&parse_spec(spec).unwrap()).unwrap();
            let ids = v.rule_ids();
            for i in &p.injections {
                if let Some(rule) = &i.rule {
                    assert!(ids.contains(&rule.as_str()), "{rule}");
                }
            }
        }
    }

    #[test]
    fn ground_types() {
        assert_eq!(
            Generator::Pattern {
                pattern: "#######".into()
            }
            .ground_type(),
            GroundType::Integer
        );
        assert_eq!(
            Generator::Pattern {
                pattern: "LV-####".into()
            }
            .ground_type(),
            GroundType::Text
        );
    }
}
