//! Declarative data-quality specifications and their execution.
//!
//! A `.dq` file describes sources, data objects (the fields worth checking)
//! and requirements at field, record, collection and cross-dataset level.
//! [`speclang`] parses and validates it, [`engine`] compiles it into a
//! [`engine::CheckPlan`] and streams CSV data through it, [`report`] renders
//! the outcome, [`sqlgen`] emits equivalent ANSI SQL, [`profiler`] drafts a
//! spec from data and [`corpus`] builds datasets with known defects.

pub mod corpus;
pub mod engine;
pub mod ingest;
pub mod profiler;
pub mod rate;
pub mod report;
pub mod speclang;
pub mod sqlgen;

pub use rate::Rate;
