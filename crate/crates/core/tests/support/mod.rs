//! Generators and the naive reference evaluator shared by integration and
//! acceptance tests.

#![allow(dead_code)]

pub mod astgen;
pub mod casegen;
pub mod oracle;

use dq_core::engine::{self, QualityReport, RunOptions, SourceData, Violation};
use dq_core::speclang::{check_spec, parse_spec};
use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

/// Runs the engine on an in-memory case, returning the report and every violation.
pub fn run_engine(
    case: &casegen::Case,
    jobs: usize,
    batch_size: usize,
) -> (QualityReport, Vec<Violation>) {
    let ast = parse_spec(&case.spec_text).expect("generated spec parses");
    let spec = check_spec(&ast)
        .unwrap_or_else(|e| panic!("generated spec invalid: {e}\n{}", case.spec_text));
    let plan = engine::compile_plan(&spec);
    let data: Vec<SourceData> = plan
        .sources
        .iter()
        .map(|s| {
            let bytes = &case
                .files
                .iter()
                .find(|(n, _)| *n == s.name)
                .expect("file per source")
                .1;
            SourceData::Bytes(Arc::from(bytes.as_slice()))
        })
        .collect();
    let options = RunOptions {
        jobs,
        batch_size,
        timestamps: false,
    };
    let mut sink = Vec::new();
    let report = engine::run(&plan, &data, &options, &mut sink).expect("engine run");
    (report, sink)
}

/// Violating ordinals per rule id; structural row-width findings excluded.
pub fn group_by_rule(
    report: &QualityReport,
    violations: &[Violation],
) -> BTreeMap<String, BTreeSet<u64>> {
    let mut out: BTreeMap<String, BTreeSet<u64>> = report
        .rules
        .iter()
        .map(|r| (r.rule_id.clone(), BTreeSet::new()))
        .collect();
    for v in violations.iter().filter(|v| v.evaluator != usize::MAX) {
        out.entry(v.rule_id.to_string())
            .or_default()
            .insert(v.record_ordinal);
    }
    out
}

/// Compares engine and oracle on one case; `Err` describes the first difference.
pub fn compare_with_oracle(
    case: &casegen::Case,
    jobs: usize,
    batch_size: usize,
) -> Result<(), String> {
    let (report, violations) = run_engine(case, jobs, batch_size);
    let expected = oracle::evaluate(&case.ast, &case.files);
    let got = group_by_rule(&report, &violations);
    if got != expected.violations {
        for (id, want) in &expected.violations {
            let have = got.get(id).cloned().unwrap_or_default();
            if &have != want {
                return Err(format!(
                    "rule {id}: engine {:?} oracle {:?}\n{}",
                    have.difference(want).collect::<Vec<_>>(),
                    want.difference(&have).collect::<Vec<_>>(),
                    case.spec_text
                ));
            }
        }
        return Err(format!(
            "rule sets differ: {:?} vs {:?}",
            got.keys().collect::<Vec<_>>(),
            expected.violations.keys().collect::<Vec<_>>()
        ));
    }
    for r in &report.rules {
        if r.count != got[&r.rule_id].len() as u64 {
            return Err(format!(
                "{}: count {} but {} ordinals",
                r.rule_id,
                r.count,
                got[&r.rule_id].len()
            ));
        }
    }
    for o in &report.objects {
        let want = &expected.objects[&o.name];
        if o.records != want.records
            || o.invalid_records != want.invalid.len() as u64
            || o.ragged_records != want.ragged.len() as u64
        {
            return Err(format!(
                "object {}: engine records/invalid/ragged {}/{}/{} oracle {}/{}/{}",
                o.name,
                o.records,
                o.invalid_records,
                o.ragged_records,
                want.records,
                want.invalid.len(),
                want.ragged.len()
            ));
        }
    }
    Ok(())
}
