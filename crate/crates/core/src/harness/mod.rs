//! Experiment plumbing behind the `bench-cli` binary: synthetic datasets,
//! JSON experiment configs, CSV traces, summaries and the step-geometry demo.

mod compare;
mod config;
mod dataset;
mod demo;
mod experiment;
mod trace_io;

pub use compare::{compare, render_table, TraceSummary};
pub use config::{config_hash, sub_seed, ExperimentConfig, ModelConfig, ModelId};
pub use dataset::{generate_dataset, Dataset, DatasetMeta, DatasetSpec};
pub use demo::{demo_step_geometry, StepGeometry};
pub use experiment::{run_experiment, ExperimentReport, Manifest, MethodOutcome};
pub use trace_io::{format_g17, read_trace, trace_file_name, write_trace, TRACE_HEADER};
