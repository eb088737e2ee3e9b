//! `dq`: check CSV data against quality specifications, validate specs,
//! profile columns, emit SQL and generate synthetic corpora.

use clap::{Args, Parser, Subcommand, ValueEnum};
use dq_core::corpus::{self, CorpusError, CorpusPlan};
use dq_core::engine::{self, CheckPlan, FlaggedRef, QualityReport, RunOptions, SourceData};
use dq_core::ingest::{open_dataset, DialectConfig};
use dq_core::profiler::{self, DraftSource, ProfileOptions, SuggestPolicy};
use dq_core::report::{self, FlaggedWriter};
use dq_core::speclang::{check_spec, parse_spec_bytes, ParseSpecError, ValidatedSpec};
use dq_core::sqlgen::{self, SqlOptions};
use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_PASS: u8 = 0;
const EXIT_QUALITY: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(
    name = "dq",
    version,
    about = "Declarative data-quality checks over CSV"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a spec against its data and report per-rule results.
    Check(CheckArgs),
    /// Parse and check a spec without touching data.
    ValidateSpec { spec: PathBuf },
    /// Profile the columns of a CSV file.
    Profile(ProfileArgs),
    /// Emit SQL counting and listing queries for a spec.
    EmitSql(EmitSqlArgs),
    /// Generate a synthetic corpus and its violation manifest from a plan.
    Gen(GenArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Text,
    Json,
}

#[derive(Args)]
struct CheckArgs {
    spec: PathBuf,
    /// Override a source's data path (NAME=PATH); repeatable.
    #[arg(long = "data", value_name = "NAME=PATH")]
    data: Vec<String>,
    #[arg(long, value_enum, default_value = "text")]
    report: ReportFormat,
    /// Write the flagged-record protocol to this CSV file.
    #[arg(long, value_name = "PATH")]
    flagged: Option<PathBuf>,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    jobs: u32,
    #[arg(long, value_name = "K", requires = "flagged")]
    max_flagged_per_rule: Option<u64>,
    /// Omit run timestamps so reports are byte-reproducible.
    #[arg(long)]
    no_timestamps: bool,
}

#[derive(Args)]
struct ProfileArgs {
    data: PathBuf,
    #[arg(long, default_value = ",")]
    delimiter: char,
    #[arg(long, default_value = "\"")]
    quote: char,
    /// The first row is data, not a header.
    #[arg(long)]
    no_header: bool,
    /// Token read as null (after trimming); repeatable. Defaults to the empty string.
    #[arg(long = "null", value_name = "TOKEN")]
    null: Vec<String>,
    #[arg(long, default_value_t = 5)]
    top_k: usize,
    /// Write a draft spec to this path.
    #[arg(long, value_name = "OUT")]
    suggest: Option<PathBuf>,
}

#[derive(Args)]
struct EmitSqlArgs {
    spec: PathBuf,
    /// Map a source to a table (NAME=TABLE); repeatable.
    #[arg(long = "tables", value_name = "NAME=TABLE", required = true)]
    tables: Vec<String>,
    /// Character-length function of the target database.
    #[arg(long, default_value = "CHAR_LENGTH")]
    length_function: String,
    /// Write the suite here instead of standard output.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    plan: PathBuf,
    /// Override the plan's seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

/// A failure carrying its exit code; the message goes to standard error.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn io(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_IO,
            message: message.into(),
        }
    }
}

type CmdResult = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_USAGE
            } else {
                EXIT_PASS
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Check(a) => cmd_check(a),
        Command::ValidateSpec { spec } => cmd_validate_spec(&spec),
        Command::Profile(a) => cmd_profile(a),
        Command::EmitSql(a) => cmd_emit_sql(a),
        Command::Gen(a) => cmd_gen(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("dq: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn load_spec(path: &Path) -> Result<ValidatedSpec, Failure> {
    let bytes =
        std::fs::read(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    let ast = parse_spec_bytes(&bytes).map_err(|e| match e {
        ParseSpecError::Syntax(s) => Failure::usage(format!("{}:{s}", path.display())),
        other => Failure::usage(format!("{}: {other}", path.display())),
    })?;
    check_spec(&ast).map_err(|errs| {
        let lines: Vec<String> = errs
            .0
            .iter()
            .map(|e| format!("{}:{e}", path.display()))
            .collect();
        Failure::usage(format!("{} error(s)\n{}", errs.0.len(), lines.join("\n")))
    })
}

fn parse_pairs(items: &[String], what: &str) -> Result<Vec<(String, String)>, Failure> {
    items
        .iter()
        .map(|item| match item.split_once('=') {
            Some((k, v)) if !k.is_empty() && !v.is_empty() => Ok((k.to_string(), v.to_string())),
            _ => Err(Failure::usage(format!("expected {what}, got '{item}'"))),
        })
        .collect()
}

fn spec_dir(spec: &Path) -> PathBuf {
    spec.parent()
        .filter(|p| !p.as_os_str().is_empty())
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."))
}

fn bind_sources(
    plan: &CheckPlan,
    spec: &Path,
    overrides: &[String],
) -> Result<Vec<SourceData>, Failure> {
    let mut paths: HashMap<String, PathBuf> = HashMap::new();
    for (name, path) in parse_pairs(overrides, "NAME=PATH")? {
        if !plan.sources.iter().any(|s| s.name == name) {
            return Err(Failure::usage(format!(
                "--data: spec declares no source '{name}'"
            )));
        }
        paths.insert(name, PathBuf::from(path));
    }
    let base = spec_dir(spec);
    Ok(plan
        .sources
        .iter()
        .map(|s| {
            let path = paths.remove(&s.name).unwrap_or_else(|| base.join(&s.path));
            SourceData::Path(path)
        })
        .collect())
}

fn cmd_check(args: CheckArgs) -> CmdResult {
    let spec = load_spec(&args.spec)?;
    let plan = engine::compile_plan(&spec);
    let sources = bind_sources(&plan, &args.spec, &args.data)?;
    let options = RunOptions {
        jobs: args.jobs as usize,
        timestamps: !args.no_timestamps,
        ..RunOptions::default()
    };
    let report: QualityReport = match &args.flagged {
        Some(path) => {
            let file =
                File::create(path).map_err(|e| Failure::io(format!("{}: {e}", path.display())))?;
            let mut writer = FlaggedWriter::new(BufWriter::new(file), args.max_flagged_per_rule)
                .map_err(|e| Failure::io(format!("{}: {e}", path.display())))?;
            let mut report = engine::run(&plan, &sources, &options, &mut writer)
                .map_err(|e| Failure::io(e.to_string()))?;
            let summary = writer
                .finish()
                .map_err(|e| Failure::io(format!("{}: {e}", path.display())))?;
            report.flagged = Some(FlaggedRef {
                path: path.display().to_string(),
                rows_written: summary.rows_written,
                max_per_rule: args.max_flagged_per_rule,
                truncated_rules: summary.truncated_rules,
            });
            report
        }
        None => engine::run(&plan, &sources, &options, &mut engine::DiscardSink)
            .map_err(|e| Failure::io(e.to_string()))?,
    };
    let rendered = match args.report {
        ReportFormat::Json => report::render_json(&report),
        ReportFormat::Text => report::render_text(&report),
    };
    write_stdout(&rendered)?;
    Ok(if report.passed() {
        EXIT_PASS
    } else {
        EXIT_QUALITY
    })
}

fn write_stdout(text: &str) -> Result<(), Failure> {
    let mut out = io::stdout().lock();
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| Failure::io(format!("standard output: {e}")))
}

fn cmd_validate_spec(path: &Path) -> CmdResult {
    let spec = load_spec(path)?;
    let rules = spec.rule_ids().len();
    write_stdout(&format!(
        "{}: spec {} is valid ({} sources, {} objects, {} rules, {} thresholds)\n",
        path.display(),
        spec.ast.name,
        spec.sources.len(),
        spec.objects.len(),
        rules,
        spec.thresholds.len()
    ))?;
    Ok(EXIT_PASS)
}

fn single_byte(c: char, flag: &str) -> Result<u8, Failure> {
    if c.is_ascii() {
        Ok(c as u8)
    } else {
        Err(Failure::usage(format!(
            "--{flag} must be a single ASCII character"
        )))
    }
}

/// Path of `data` as written into a draft stored at `out`.
fn draft_data_path(data: &Path, out: &Path) -> String {
    let data_abs = std::fs::canonicalize(data).unwrap_or_else(|_| data.to_path_buf());
    let out_dir = std::fs::canonicalize(spec_dir(out)).ok();
    match (data_abs.parent(), out_dir, data_abs.file_name()) {
        (Some(d), Some(o), Some(name)) if d == o => name.to_string_lossy().into_owned(),
        _ => data_abs.display().to_string(),
    }
}

fn cmd_profile(args: ProfileArgs) -> CmdResult {
    let dialect = DialectConfig {
        delimiter: single_byte(args.delimiter, "delimiter")?,
        quote: single_byte(args.quote, "quote")?,
        has_header: !args.no_header,
        null_tokens: if args.null.is_empty() {
            vec![String::new()]
        } else {
            args.null.clone()
        },
    };
    let options = ProfileOptions {
        top_k: args.top_k,
        ..ProfileOptions::default()
    };
    let mut reader = open_dataset(&args.data, &dialect).map_err(|e| Failure::io(e.to_string()))?;
    let profiles = profiler::profile(&mut reader, &dialect, &options)
        .map_err(|e| Failure::io(format!("{}: {e}", args.data.display())))?;
    write_stdout(&profiler::render_profiles(&profiles))?;
    if let Some(out) = &args.suggest {
        let stem = args
            .data
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let name = profiler::sanitize_ident(&stem);
        let source = DraftSource {
            spec_name: name.clone(),
            object_name: name,
            path: draft_data_path(&args.data, out),
            dialect,
        };
        let draft = profiler::suggest_spec(&profiles, &SuggestPolicy::default(), &source);
        std::fs::write(out, draft.render())
            .map_err(|e| Failure::io(format!("{}: {e}", out.display())))?;
        eprintln!("dq: wrote draft spec {}", out.display());
    }
    Ok(EXIT_PASS)
}

fn cmd_emit_sql(args: EmitSqlArgs) -> CmdResult {
    let spec = load_spec(&args.spec)?;
    let plan = engine::compile_plan(&spec);
    let tables: HashMap<String, String> = parse_pairs(&args.tables, "NAME=TABLE")?
        .into_iter()
        .collect();
    let options = SqlOptions {
        length_function: args.length_function.clone(),
    };
    let suite = sqlgen::emit_sql_with(&plan, &tables, &options)
        .map_err(|e| Failure::usage(e.to_string()))?;
    let text = suite.render();
    match &args.out {
        Some(out) => {
            std::fs::write(out, text).map_err(|e| Failure::io(format!("{}: {e}", out.display())))?
        }
        None => write_stdout(&text)?,
    }
    Ok(EXIT_PASS)
}

fn cmd_gen(args: GenArgs) -> CmdResult {
    let text = std::fs::read_to_string(&args.plan)
        .map_err(|e| Failure::usage(format!("{}: {e}", args.plan.display())))?;
    let mut plan: CorpusPlan = CorpusPlan::from_json(&text)
        .map_err(|e| Failure::usage(format!("{}: {e}", args.plan.display())))?;
    if let Some(seed) = args.seed {
        plan.seed = seed;
    }
    let manifest = corpus::generate(&plan, &args.out).map_err(|e| match e {
        CorpusError::Io { .. } => Failure::io(e.to_string()),
        other => Failure::usage(other.to_string()),
    })?;
    let mut summary = format!(
        "{}: {} records, seed {}\n",
        args.out.join(&manifest.file).display(),
        manifest.records,
        manifest.seed
    );
    for set in &manifest.injections {
        summary.push_str(&format!(
            "  {}  {}  {}\n",
            set.name,
            set.rule.as_deref().unwrap_or("-"),
            set.count
        ));
    }
    write_stdout(&summary)?;
    Ok(EXIT_PASS)
}
