//! The constrained step `min gᵀδ s.t. δᵀMδ ≤ ε²` and the descent loop.
//!
//! Every method shares the direction `−M⁻¹g`; only the metric and the way the
//! scalar α is picked differ. Under [`StepPolicy::TrustRegion`] the constraint
//! is active and `α = ε / √(gᵀM⁻¹g)`.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{cholesky_spd, dot, norm, quadratic_form, scale, spd_solve};
use crate::metrics::{build_metric, default_lambda, Damping, DampedMetric, MetricKind};
use crate::models::{batch_gradient, batch_loss, Model, Sample};

/// How the step length α is chosen along `−M⁻¹g`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum StepPolicy {
    TrustRegion {
        epsilon: f64,
    },
    FixedRate {
        alpha: f64,
    },
    /// Armijo backtracking: accept the first α with
    /// `L(θ + αp) ≤ L(θ) + c·α·gᵀp`.
    LineSearch {
        #[serde(default = "defaults::alpha0")]
        alpha0: f64,
        #[serde(default = "defaults::shrink")]
        shrink: f64,
        #[serde(default = "defaults::armijo_c")]
        armijo_c: f64,
        #[serde(default = "defaults::max_backtracks")]
        max_backtracks: usize,
    },
}

mod defaults {
    pub fn alpha0() -> f64 {
        1.0
    }
    pub fn shrink() -> f64 {
        0.5
    }
    pub fn armijo_c() -> f64 {
        1e-4
    }
    pub fn max_backtracks() -> usize {
        30
    }
}

impl StepPolicy {
    pub fn line_search() -> Self {
        StepPolicy::LineSearch {
            alpha0: defaults::alpha0(),
            shrink: defaults::shrink(),
            armijo_c: defaults::armijo_c(),
            max_backtracks: defaults::max_backtracks(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            StepPolicy::TrustRegion { epsilon } => epsilon > 0.0 && epsilon.is_finite(),
            StepPolicy::FixedRate { alpha } => alpha > 0.0 && alpha.is_finite(),
            StepPolicy::LineSearch {
                alpha0,
                shrink,
                armijo_c,
                ..
            } => {
                alpha0 > 0.0
                    && alpha0.is_finite()
                    && shrink > 0.0
                    && shrink < 1.0
                    && armijo_c > 0.0
                    && armijo_c < 1.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid step policy {self:?}")))
        }
    }

    pub fn epsilon(&self) -> Option<f64> {
        match *self {
            StepPolicy::TrustRegion { epsilon } => Some(epsilon),
            _ => None,
        }
    }

    pub fn label(&self) -> String {
        match *self {
            StepPolicy::TrustRegion { epsilon } => format!("trust_region(eps={epsilon})"),
            StepPolicy::FixedRate { alpha } => format!("fixed_rate(alpha={alpha})"),
            StepPolicy::LineSearch {
                alpha0,
                shrink,
                armijo_c,
                max_backtracks,
            } => format!("line_search(alpha0={alpha0},shrink={shrink},c={armijo_c},max={max_backtracks})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    /// `δθ = α · direction`
    pub delta: Vec<f64>,
    pub alpha: f64,
    /// `δθᵀ M_eff δθ`
    pub constraint_value: f64,
    pub gradient_norm: f64,
    /// `−M_eff⁻¹ g`
    pub direction: Vec<f64>,
    pub kind: MetricKind,
    pub lambda_used: f64,
}

/// Maps a trial displacement `δ` to `L(θ + δ)`.
pub type LossProbe<'a> = &'a dyn Fn(&[f64]) -> Result<f64>;

pub fn solve_step(
    g: &[f64],
    metric: &DampedMetric,
    policy: &StepPolicy,
    loss_probe: Option<LossProbe<'_>>,
) -> Result<StepResult> {
    policy.validate()?;
    let d = metric.dim();
    check_dim(d, g.len())?;
    let gradient_norm = norm(g);
    if !gradient_norm.is_finite() {
        return Err(Error::InvalidArgument("gradient is not finite".into()));
    }
    if gradient_norm <= 1e-14 * (d as f64).sqrt() {
        return Ok(StepResult {
            delta: vec![0.0; d],
            alpha: 0.0,
            constraint_value: 0.0,
            gradient_norm,
            direction: vec![0.0; d],
            kind: metric.kind(),
            lambda_used: metric.lambda(),
        });
    }

    let factor = cholesky_spd(metric.effective())?;
    let direction = scale(&spd_solve(&factor, g)?, -1.0);
    // gᵀ M⁻¹ g
    let precond_sq = -dot(g, &direction);

    let alpha = match *policy {
        StepPolicy::TrustRegion { epsilon } => epsilon / precond_sq.sqrt(),
        StepPolicy::FixedRate { alpha } => alpha,
        StepPolicy::LineSearch {
            alpha0,
            shrink,
            armijo_c,
            max_backtracks,
        } => {
            let probe = loss_probe.ok_or_else(|| {
                Error::InvalidArgument("line search needs a loss probe".into())
            })?;
            let start = probe(&vec![0.0; d])?;
            let slope = dot(g, &direction);
            let mut alpha = alpha0;
            let mut accepted = None;
            for _ in 0..=max_backtracks {
                let trial = probe(&scale(&direction, alpha))?;
                if trial.is_finite() && trial <= start + armijo_c * alpha * slope {
                    accepted = Some(alpha);
                    break;
                }
                alpha *= shrink;
            }
            accepted.ok_or(Error::LineSearchFailed {
                backtracks: max_backtracks,
            })?
        }
    };

    let delta = scale(&direction, alpha);
    let constraint_value = quadratic_form(metric.effective(), &delta)?;
    Ok(StepResult {
        delta,
        alpha,
        constraint_value,
        gradient_norm,
        direction,
        kind: metric.kind(),
        lambda_used: metric.lambda(),
    })
}

/// First-order predicted change `gᵀδθ` next to the realized `L(θ+δθ) − L(θ)`.
pub fn predicted_vs_actual_decrease(
    model: &dyn Model,
    theta: &[f64],
    batch: &[Sample],
    step: &StepResult,
) -> Result<(f64, f64)> {
    check_dim(theta.len(), step.delta.len())?;
    if step.delta.iter().all(|&v| v == 0.0) {
        return Ok((0.0, 0.0));
    }
    let g = batch_gradient(model, theta, batch)?;
    let before = batch_loss(model, theta, batch)?;
    let moved: Vec<f64> = theta.iter().zip(&step.delta).map(|(t, d)| t + d).collect();
    let after = batch_loss(model, &moved, batch)?;
    Ok((dot(&g, &step.delta), after - before))
}

/// Everything `run_descent` needs besides the model and data.
#[derive(Debug, Clone, PartialEq)]
pub struct DescentSettings {
    pub kind: MetricKind,
    pub policy: StepPolicy,
    pub damping: Damping,
    pub iterations: usize,
    /// `None` or a value ≥ the dataset size means full batch.
    pub batch_size: Option<usize>,
    pub seed: u64,
    /// Overrides the model's seeded initialization.
    pub initial_params: Option<Vec<f64>>,
    /// When false, `wall_ms` is recorded as 0 so traces stay reproducible.
    pub record_wall_time: bool,
    /// Number of ×10 λ increases tried after a failed factorization.
    pub max_escalations: usize,
}

impl DescentSettings {
    pub fn new(kind: MetricKind, policy: StepPolicy, iterations: usize) -> Self {
        Self {
            kind,
            policy,
            damping: Damping::Auto,
            iterations,
            batch_size: None,
            seed: 0,
            initial_params: None,
            record_wall_time: false,
            max_escalations: 6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub model_id: String,
    pub kind: MetricKind,
    pub policy: StepPolicy,
    pub seed: u64,
    /// Configured λ; `None` means the automatic floor.
    pub lambda: Option<f64>,
    pub epsilon: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: usize,
    /// Batch loss at θ before the step.
    pub loss: f64,
    pub grad_norm: f64,
    pub alpha: f64,
    pub step_norm: f64,
    pub constraint: f64,
    pub lambda_used: f64,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub header: TraceHeader,
    pub records: Vec<TraceRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DescentOutcome {
    pub trace: Trace,
    pub final_params: Vec<f64>,
    /// Loss on the whole dataset at the final parameters.
    pub final_loss: f64,
}

/// Without-replacement batches, reshuffled at every epoch.
struct Batcher {
    order: Vec<usize>,
    cursor: usize,
    size: usize,
}

impl Batcher {
    fn new(n: usize, size: usize) -> Self {
        Self {
            order: (0..n).collect(),
            cursor: n,
            size,
        }
    }

    fn full(&self) -> bool {
        self.size >= self.order.len()
    }

    fn next(&mut self, rng: &mut ChaCha8Rng) -> &[usize] {
        if self.full() {
            return &self.order;
        }
        if self.cursor + self.size > self.order.len() {
            self.order.sort_unstable();
            self.order.shuffle(rng);
            self.cursor = 0;
        }
        let start = self.cursor;
        self.cursor += self.size;
        &self.order[start..self.cursor]
    }
}

/// Solves one step, multiplying λ by 10 after each failed factorization.
pub fn solve_with_escalation(
    g: &[f64],
    metric: &DampedMetric,
    policy: &StepPolicy,
    probe: Option<LossProbe<'_>>,
    max_escalations: usize,
) -> Result<StepResult> {
    let mut current = metric.clone();
    let mut attempt = 0;
    loop {
        match solve_step(g, &current, policy, probe) {
            Err(Error::NotPositiveDefinite { pivot, value }) => {
                if attempt == max_escalations {
                    return Err(Error::MetricFailure {
                        method: metric.kind().method().to_string(),
                        lambda: current.lambda(),
                        reason: format!(
                            "not positive definite after {attempt} damping increases (pivot {pivot} = {value:e})"
                        ),
                    });
                }
                attempt += 1;
                let next = (10.0 * current.lambda()).max(default_lambda(current.base()));
                current = current.with_lambda(next);
            }
            other => return other,
        }
    }
}

pub fn run_descent(
    model: &dyn Model,
    dataset: &[Sample],
    settings: &DescentSettings,
) -> Result<DescentOutcome> {
    if settings.iterations == 0 {
        return Err(Error::InvalidArgument("iterations must be at least 1".into()));
    }
    if dataset.is_empty() {
        return Err(Error::EmptyBatch);
    }
    settings.policy.validate()?;
    let batch_size = settings.batch_size.unwrap_or(dataset.len());
    if batch_size == 0 {
        return Err(Error::InvalidArgument("batch size must be positive".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let mut theta = match &settings.initial_params {
        Some(p) => {
            check_dim(model.param_dim(), p.len())?;
            p.clone()
        }
        None => model.init_params(&mut rng),
    };
    let mut batcher = Batcher::new(dataset.len(), batch_size);
    let mut batch: Vec<Sample> = Vec::with_capacity(batch_size.min(dataset.len()));
    let mut records = Vec::with_capacity(settings.iterations);

    for iteration in 0..settings.iterations {
        let started = Instant::now();
        batch.clear();
        batch.extend(batcher.next(&mut rng).iter().map(|&i| dataset[i].clone()));

        let loss = batch_loss(model, &theta, &batch)?;
        let g = batch_gradient(model, &theta, &batch)?;
        let metric = build_metric(settings.kind, model, &batch, &theta, settings.damping)?;
        let probe = |delta: &[f64]| {
            let moved: Vec<f64> = theta.iter().zip(delta).map(|(t, d)| t + d).collect();
            batch_loss(model, &moved, &batch)
        };
        let step = match solve_with_escalation(
            &g,
            &metric,
            &settings.policy,
            Some(&probe),
            settings.max_escalations,
        ) {
            Ok(step) => step,
            Err(Error::LineSearchFailed { .. }) => StepResult {
                delta: vec![0.0; theta.len()],
                alpha: 0.0,
                constraint_value: 0.0,
                gradient_norm: norm(&g),
                direction: vec![0.0; theta.len()],
                kind: settings.kind,
                lambda_used: metric.lambda(),
            },
            Err(e) => return Err(e),
        };

        for (t, d) in theta.iter_mut().zip(&step.delta) {
            *t += d;
        }
        let wall_ms = if settings.record_wall_time {
            started.elapsed().as_secs_f64() * 1e3
        } else {
            0.0
        };
        records.push(TraceRecord {
            iteration,
            loss,
            grad_norm: step.gradient_norm,
            alpha: step.alpha,
            step_norm: norm(&step.delta),
            constraint: step.constraint_value,
            lambda_used: step.lambda_used,
            wall_ms,
        });
    }

    let final_loss = batch_loss(model, &theta, dataset)?;
    Ok(DescentOutcome {
        trace: Trace {
            header: TraceHeader {
                model_id: model.id(),
                kind: settings.kind,
                policy: settings.policy,
                seed: settings.seed,
                lambda: match settings.damping {
                    Damping::Auto => None,
                    Damping::Fixed(l) => Some(l),
                },
                epsilon: settings.policy.epsilon(),
            },
            records,
        },
        final_params: theta,
        final_loss,
    })
}
