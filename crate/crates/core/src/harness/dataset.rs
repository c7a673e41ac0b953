use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::Sample;

/// Which synthetic problem to draw and how.
///
/// * `linreg`: `x ~ U[-1,1]^n`, `y = A x + b + noise·ξ`, `ξ ~ N(0, I)`.
///   `A` and `b` are drawn from `N(0, 1)` unless given.
/// * `sine`: `x ~ U[0,1]`, `y = sin(2πx) + noise·ξ`.
/// * `spiral3`: three interleaved 2-D spiral arms, labels one-hot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    pub name: String,
    pub size: usize,
    #[serde(default)]
    pub noise: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dim: Option<usize>,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bias: Option<Vec<f64>>,
}

impl DatasetSpec {
    pub fn new(name: &str, size: usize, noise: f64, seed: u64) -> Self {
        Self {
            name: name.to_string(),
            size,
            noise,
            input_dim: None,
            output_dim: None,
            seed,
            weights: None,
            bias: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub spec: DatasetSpec,
    pub input_dim: usize,
    pub output_dim: usize,
    pub description: String,
    /// Ground-truth `A` and `b` for `linreg`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bias: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub meta: DatasetMeta,
    pub samples: Vec<Sample>,
}

impl Dataset {
    /// Header `x0,…,y0,…` followed by one row per sample.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let cols: Vec<String> = (0..self.meta.input_dim)
            .map(|i| format!("x{i}"))
            .chain((0..self.meta.output_dim).map(|i| format!("y{i}")))
            .collect();
        out.push_str(&cols.join(","));
        out.push('\n');
        for s in &self.samples {
            let row: Vec<String> = s.x.iter().chain(&s.y).map(|v| super::format_g17(*v)).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

fn fixed_dims(spec: &DatasetSpec, input: usize, output: usize) -> Result<(usize, usize)> {
    for (given, fixed, what) in [(spec.input_dim, input, "input"), (spec.output_dim, output, "output")] {
        if let Some(g) = given {
            if g != fixed {
                return Err(Error::Config(format!(
                    "dataset `{}` has {what} dimension {fixed}, not {g}",
                    spec.name
                )));
            }
        }
    }
    Ok((input, output))
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

pub fn generate_dataset(spec: &DatasetSpec) -> Result<Dataset> {
    if spec.size == 0 {
        return Err(Error::Config("dataset size must be positive".into()));
    }
    if !(spec.noise >= 0.0 && spec.noise.is_finite()) {
        return Err(Error::Config(format!("noise must be non-negative, got {}", spec.noise)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    match spec.name.as_str() {
        "linreg" => linreg(spec, &mut rng),
        "sine" => {
            let (n, m) = fixed_dims(spec, 1, 1)?;
            let samples = (0..spec.size)
                .map(|_| {
                    let x: f64 = rng.random_range(0.0..1.0);
                    let y = (2.0 * std::f64::consts::PI * x).sin() + spec.noise * normal(&mut rng);
                    Sample::new(vec![x], vec![y])
                })
                .collect();
            Ok(Dataset {
                meta: DatasetMeta {
                    spec: spec.clone(),
                    input_dim: n,
                    output_dim: m,
                    description: "x ~ U[0,1], y = sin(2 pi x) + noise * N(0,1)".into(),
                    weights: None,
                    bias: None,
                },
                samples,
            })
        }
        "spiral3" => {
            let (n, m) = fixed_dims(spec, 2, 3)?;
            let samples = (0..spec.size)
                .map(|i| {
                    let class = i % 3;
                    let t: f64 = rng.random_range(0.05..1.0);
                    let angle = 2.0 * std::f64::consts::PI * (class as f64 / 3.0 + 0.75 * t)
                        + spec.noise * normal(&mut rng);
                    let x = vec![t * angle.cos(), t * angle.sin()];
                    let y = (0..3).map(|k| if k == class { 1.0 } else { 0.0 }).collect();
                    Sample::new(x, y)
                })
                .collect();
            Ok(Dataset {
                meta: DatasetMeta {
                    spec: spec.clone(),
                    input_dim: n,
                    output_dim: m,
                    description: "class c = i mod 3, radius t ~ U[0.05,1), angle 2 pi (c/3 + 0.75 t) + noise * N(0,1), x = t (cos, sin), y one-hot".into(),
                    weights: None,
                    bias: None,
                },
                samples,
            })
        }
        other => Err(Error::UnknownSpec(other.to_string())),
    }
}

fn linreg(spec: &DatasetSpec, rng: &mut ChaCha8Rng) -> Result<Dataset> {
    let n = spec
        .input_dim
        .or_else(|| spec.weights.as_ref().and_then(|w| w.first().map(Vec::len)))
        .unwrap_or(1);
    let m = spec
        .output_dim
        .or_else(|| spec.weights.as_ref().map(Vec::len))
        .unwrap_or(1);
    if n == 0 || m == 0 {
        return Err(Error::Config("linreg dimensions must be positive".into()));
    }
    let weights = match &spec.weights {
        Some(w) => {
            if w.len() != m || w.iter().any(|r| r.len() != n) {
                return Err(Error::Config(format!("linreg weights must be {m}x{n}")));
            }
            w.clone()
        }
        None => (0..m).map(|_| (0..n).map(|_| normal(rng)).collect()).collect(),
    };
    let bias = match &spec.bias {
        Some(b) if b.len() != m => {
            return Err(Error::Config(format!("linreg bias must have {m} entries")))
        }
        Some(b) => b.clone(),
        None => (0..m).map(|_| normal(rng)).collect(),
    };
    let samples = (0..spec.size)
        .map(|_| {
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let y = weights
                .iter()
                .zip(&bias)
                .map(|(row, b)| {
                    let clean = row.iter().zip(&x).map(|(w, v)| w * v).sum::<f64>() + b;
                    if spec.noise > 0.0 {
                        clean + spec.noise * normal(rng)
                    } else {
                        clean
                    }
                })
                .collect();
            Sample::new(x, y)
        })
        .collect();
    Ok(Dataset {
        meta: DatasetMeta {
            spec: spec.clone(),
            input_dim: n,
            output_dim: m,
            description: "x ~ U[-1,1]^n, y = A x + b + noise * N(0,I)".into(),
            weights: Some(weights),
            bias: Some(bias),
        },
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_identity_linreg() {
        let mut spec = DatasetSpec::new("linreg", 4, 0.0, 3);
        spec.weights = Some(vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        spec.bias = Some(vec![0.0, 0.0]);
        let data = generate_dataset(&spec).unwrap();
        assert_eq!(data.samples.len(), 4);
        for s in &data.samples {
            assert_eq!(s.x, s.y);
        }
    }

    #[test]
    fn regeneration_is_identical() {
        for name in ["linreg", "sine", "spiral3"] {
            let spec = DatasetSpec::new(name, 50, 0.2, 99);
            assert_eq!(generate_dataset(&spec).unwrap(), generate_dataset(&spec).unwrap());
        }
        let a = generate_dataset(&DatasetSpec::new("sine", 20, 0.1, 1)).unwrap();
        let b = generate_dataset(&DatasetSpec::new("sine", 20, 0.1, 2)).unwrap();
        assert_ne!(a.samples, b.samples);
    }

    #[test]
    fn sine_output_variance() {
        let data = generate_dataset(&DatasetSpec::new("sine", 256, 0.1, 7)).unwrap();
        let ys: Vec<f64> = data.samples.iter().map(|s| s.y[0]).collect();
        let mean = ys.iter().sum::<f64>() / ys.len() as f64;
        let var = ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / ys.len() as f64;
        assert!((0.3..=0.8).contains(&var), "variance {var}");
    }

    #[test]
    fn spiral_is_balanced_one_hot() {
        let data = generate_dataset(&DatasetSpec::new("spiral3", 99, 0.05, 4)).unwrap();
        let mut counts = [0; 3];
        for s in &data.samples {
            assert_eq!(s.y.iter().sum::<f64>(), 1.0);
            counts[s.y.iter().position(|&v| v == 1.0).unwrap()] += 1;
        }
        assert_eq!(counts, [33, 33, 33]);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            generate_dataset(&DatasetSpec::new("mnist", 10, 0.0, 0)),
            Err(Error::UnknownSpec(_))
        ));
        let mut bad = DatasetSpec::new("sine", 10, 0.0, 0);
        bad.input_dim = Some(3);
        assert!(generate_dataset(&bad).is_err());
        assert!(generate_dataset(&DatasetSpec::new("sine", 0, 0.0, 0)).is_err());
    }

    #[test]
    fn csv_has_header_and_rows() {
        let data = generate_dataset(&DatasetSpec::new("spiral3", 3, 0.0, 4)).unwrap();
        let csv = data.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "x0,x1,y0,y1,y2");
        assert_eq!(lines.len(), 4);
    }
}
