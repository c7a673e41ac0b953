use std::fs;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::{config_hash, generate_dataset, sub_seed, trace_file_name, write_trace, ExperimentConfig};
use crate::error::{Error, Result};
use crate::metrics::{Damping, MetricKind};
use crate::models::Model;
use crate::stepper::{run_descent, DescentOutcome, DescentSettings};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodOutcome {
    pub method: String,
    pub metric: MetricKind,
    pub seed: u64,
    /// Trace file name relative to the output directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_loss: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl MethodOutcome {
    pub fn succeeded(&self) -> bool {
        self.error.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub library_version: String,
    pub config_hash: String,
    pub model_id: String,
    pub param_dim: usize,
    pub dataset: String,
    pub policy: String,
    pub methods: Vec<MethodOutcome>,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub output_dir: PathBuf,
    pub manifest: Manifest,
}

impl ExperimentReport {
    pub fn all_failed(&self) -> bool {
        self.manifest.methods.iter().all(|m| !m.succeeded())
    }

    pub fn trace_paths(&self) -> Vec<PathBuf> {
        self.manifest
            .methods
            .iter()
            .filter_map(|m| m.trace.as_ref().map(|t| self.output_dir.join(t)))
            .collect()
    }
}

/// Runs every configured method, writes one CSV per method and a
/// `manifest.json`. Failures of individual methods are recorded in the
/// manifest; the others still run.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let dataset = generate_dataset(&config.dataset)?;
    let model = config
        .model
        .build(dataset.meta.input_dim, dataset.meta.output_dim)?;
    fs::create_dir_all(&config.output_dir)?;

    let settings_for = |kind: MetricKind| DescentSettings {
        kind,
        policy: config.policy,
        damping: Damping::from_option(config.lambda),
        iterations: config.iterations,
        batch_size: config.batch_size,
        seed: sub_seed(config.seed, kind),
        initial_params: None,
        record_wall_time: config.record_wall_time,
        max_escalations: 6,
    };

    // Methods are independent; results are collected back in config order.
    let results: Vec<(MetricKind, Result<DescentOutcome>)> = std::thread::scope(|scope| {
        let handles: Vec<_> = config
            .methods
            .iter()
            .map(|&kind| {
                let settings = settings_for(kind);
                let model = &model;
                let samples = &dataset.samples;
                (kind, scope.spawn(move || run_descent(model, samples, &settings)))
            })
            .collect();
        handles
            .into_iter()
            .map(|(kind, h)| (kind, h.join().expect("descent thread panicked")))
            .collect()
    });

    let mut methods = Vec::with_capacity(results.len());
    for (kind, result) in results {
        let mut outcome = MethodOutcome {
            method: kind.method().to_string(),
            metric: kind,
            seed: sub_seed(config.seed, kind),
            trace: None,
            final_loss: None,
            error: None,
        };
        match result {
            Ok(run) => {
                let name = trace_file_name(kind);
                write_trace(&config.output_dir.join(&name), &run.trace.records)?;
                outcome.trace = Some(name);
                outcome.final_loss = Some(run.final_loss);
            }
            Err(e @ Error::Io(_)) => return Err(e),
            Err(e) => outcome.error = Some(format!("{}: {e}", kind.method())),
        }
        methods.push(outcome);
    }

    let manifest = Manifest {
        library_version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash: config_hash(config),
        model_id: model.id(),
        param_dim: model.param_dim(),
        dataset: config.dataset.name.clone(),
        policy: config.policy.label(),
        methods,
    };
    let mut json = serde_json::to_string_pretty(&manifest)?;
    json.push('\n');
    fs::write(config.output_dir.join("manifest.json"), json)?;
    Ok(ExperimentReport {
        output_dir: config.output_dir.clone(),
        manifest,
    })
}
