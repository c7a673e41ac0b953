use std::fs;
use std::path::Path;

use metricstep::harness::{
    compare, generate_dataset, read_trace, run_experiment, DatasetSpec, ExperimentConfig, Manifest,
    ModelConfig, ModelId,
};
use metricstep::{MetricKind, StepPolicy};

fn linreg_config(out: &Path, model: ModelId, methods: Vec<MetricKind>, policy: StepPolicy, iterations: usize) -> ExperimentConfig {
    let mut dataset = DatasetSpec::new("linreg", 32, 0.0, 11);
    dataset.input_dim = Some(3);
    dataset.output_dim = Some(2);
    ExperimentConfig {
        model: ModelConfig::new(model),
        dataset,
        methods,
        policy,
        lambda: None,
        iterations,
        batch_size: None,
        output_dir: out.to_path_buf(),
        seed: 5,
        record_wall_time: false,
    }
}

#[test]
fn noiseless_linreg_identity_converges() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = linreg_config(
        dir.path(),
        ModelId::LinearLeastSquares,
        vec![MetricKind::Identity],
        StepPolicy::line_search(),
        400,
    );
    let report = run_experiment(&cfg).unwrap();
    let loss = report.manifest.methods[0].final_loss.unwrap();
    assert!(loss <= 1e-6, "{loss}");
}

#[test]
fn newton_hits_machine_floor_after_one_step() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = linreg_config(
        dir.path(),
        ModelId::LinearLeastSquares,
        vec![MetricKind::Hessian],
        StepPolicy::FixedRate { alpha: 1.0 },
        2,
    );
    cfg.lambda = Some(0.0);
    let report = run_experiment(&cfg).unwrap();
    let trace = read_trace(&dir.path().join("trace_newton.csv")).unwrap();
    assert!(trace[0].loss > 0.1);
    assert!(trace[1].loss <= 1e-20, "{}", trace[1].loss);
    assert!(report.manifest.methods[0].final_loss.unwrap() <= 1e-20);
}

#[test]
fn reruns_are_byte_identical_and_manifest_is_stable() {
    let dir = tempfile::tempdir().unwrap();
    let methods = MetricKind::ALL.to_vec();
    let policy = StepPolicy::TrustRegion { epsilon: 0.05 };
    let a = linreg_config(&dir.path().join("a"), ModelId::LinearGaussian, methods.clone(), policy, 20);
    let b = linreg_config(&dir.path().join("b"), ModelId::LinearGaussian, methods, policy, 20);
    run_experiment(&a).unwrap();
    run_experiment(&b).unwrap();
    for entry in fs::read_dir(dir.path().join("a")).unwrap() {
        let path = entry.unwrap().path();
        let other = dir.path().join("b").join(path.file_name().unwrap());
        assert_eq!(fs::read(&path).unwrap(), fs::read(&other).unwrap(), "{}", path.display());
    }
    let manifest: Manifest =
        serde_json::from_str(&fs::read_to_string(dir.path().join("a/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest.methods.len(), 6);
    assert_eq!(manifest.config_hash.len(), 64);
}

#[test]
fn adding_a_method_leaves_other_traces_untouched() {
    let dir = tempfile::tempdir().unwrap();
    let policy = StepPolicy::TrustRegion { epsilon: 0.05 };
    let mut one = linreg_config(&dir.path().join("one"), ModelId::LinearGaussian, vec![MetricKind::Hessian], policy, 10);
    one.batch_size = Some(8);
    let mut two = one.clone();
    two.output_dir = dir.path().join("two");
    two.methods = vec![MetricKind::Identity, MetricKind::Hessian];
    run_experiment(&one).unwrap();
    run_experiment(&two).unwrap();
    assert_eq!(
        fs::read(dir.path().join("one/trace_newton.csv")).unwrap(),
        fs::read(dir.path().join("two/trace_newton.csv")).unwrap()
    );
}

#[test]
fn failing_method_is_annotated_while_others_finish() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = linreg_config(
        dir.path(),
        ModelId::LinearLeastSquares,
        vec![MetricKind::EmpiricalFisher, MetricKind::Identity],
        StepPolicy::TrustRegion { epsilon: 0.1 },
        5,
    );
    let report = run_experiment(&cfg).unwrap();
    let natural = &report.manifest.methods[0];
    assert!(natural.error.as_deref().unwrap().starts_with("natural:"));
    assert!(natural.trace.is_none());
    assert!(report.manifest.methods[1].succeeded());
    assert!(!report.all_failed());
    assert!(dir.path().join("trace_vanilla.csv").exists());
    assert!(!dir.path().join("trace_natural.csv").exists());
}

#[test]
fn newton_reaches_threshold_before_vanilla() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = linreg_config(
        dir.path(),
        ModelId::LinearLeastSquares,
        vec![MetricKind::Identity, MetricKind::Hessian],
        StepPolicy::TrustRegion { epsilon: 0.1 },
        150,
    );
    let report = run_experiment(&cfg).unwrap();
    let rows = compare(&report.trace_paths(), Some(1e-3)).unwrap();
    let reach = |m: &str| rows.iter().find(|r| r.method == m).unwrap().iterations_to_threshold;
    let newton = reach("newton").expect("newton reaches the threshold");
    assert!(reach("vanilla").is_none_or(|v| newton < v));
}

#[test]
fn trust_region_loss_is_monotone_on_linreg() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = linreg_config(
        dir.path(),
        ModelId::LinearGaussian,
        MetricKind::ALL.to_vec(),
        StepPolicy::TrustRegion { epsilon: 1e-2 },
        60,
    );
    let report = run_experiment(&cfg).unwrap();
    for path in report.trace_paths() {
        let trace = read_trace(&path).unwrap();
        for w in trace.windows(2) {
            assert!(w[1].loss <= w[0].loss, "{}: {} -> {}", path.display(), w[0].loss, w[1].loss);
        }
    }
}

#[test]
fn noiseless_identity_linreg_is_the_identity_map() {
    let mut spec = DatasetSpec::new("linreg", 4, 0.0, 3);
    spec.weights = Some(vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
    spec.bias = Some(vec![0.0, 0.0]);
    let data = generate_dataset(&spec).unwrap();
    for s in &data.samples {
        assert_eq!(s.x, s.y);
    }
    assert_eq!(generate_dataset(&spec).unwrap(), data);
}

#[test]
fn committed_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for name in ["linreg", "sine", "spiral3"] {
        let cfg = ExperimentConfig::load(&dir.join(format!("{name}.json"))).unwrap();
        assert_eq!(cfg.dataset.name, name);
    }
}
