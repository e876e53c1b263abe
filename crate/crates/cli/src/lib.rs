//! Batch front end for the moment-problem engine.
//!
//! A job descriptor (functional, quadratic module, index list, budgets and
//! tolerances) goes in; a deterministic machine-readable verdict plus
//! on-disk artifacts come out. See [`job::JobDescriptor`] for the input
//! format and [`pipeline::run`] for the stage order.

pub mod job;
pub mod pipeline;
pub mod report;

pub use job::{Command, JobDescriptor, ModuleDescriptor, PreparedJob, Tolerances};
pub use pipeline::{Overall, PipelineVerdict, RunConfig, Stage};
