//! Synthetic problem instances and the custom-data import hook.
//!
//! Each seed owns a ChaCha8 generator. Stream 0 draws the data and stream 1
//! the random initialization, so changing the initialization never perturbs
//! the data drawn for a seed.

use std::path::Path;

use bregman_dlnn::{Dataset, WeightStack};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{BenchError, Result};

const DATA_STREAM: u64 = 0;
const INIT_STREAM: u64 = 1;

pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn uniform_matrix(rng: &mut impl Rng, rows: usize, cols: usize, low: f64, high: f64) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(low..=high))
}

/// How the initial weights are chosen.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Init {
    Constant { value: f64 },
    Uniform { low: f64, high: f64 },
}

impl Init {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Init::Constant { value } if value.is_finite() => Ok(()),
            Init::Uniform { low, high } if low.is_finite() && high.is_finite() && low <= high => Ok(()),
            _ => Err(BenchError::Config(format!("invalid initialization {self:?}"))),
        }
    }

    pub fn build(&self, dims: &[usize], seed: u64) -> Result<WeightStack> {
        let w = match *self {
            Init::Constant { value } => WeightStack::filled(dims, value)?,
            Init::Uniform { low, high } => {
                let mut rng = seeded_rng(seed, INIT_STREAM);
                let layers = dims
                    .windows(2)
                    .map(|d| uniform_matrix(&mut rng, d[0], d[1], low, high))
                    .collect();
                WeightStack::new(layers)?
            }
        };
        Ok(w)
    }
}

/// `[5, 5, …, 5]` for `N` square layers.
pub fn experiment1_dims(layers: usize) -> Vec<usize> {
    vec![5; layers + 1]
}

/// `[2, 3, …, 3, 7]`: 2 outputs, hidden width 3, 7 inputs.
pub fn experiment2_dims(layers: usize) -> Vec<usize> {
    let mut dims = vec![3; layers + 1];
    dims[0] = 2;
    dims[layers] = 7;
    dims
}

/// X and Y with entries uniform in [0, 1], 5 rows each.
pub fn experiment1_data(seed: u64, samples: usize) -> Result<Dataset> {
    let mut rng = seeded_rng(seed, DATA_STREAM);
    let x = uniform_matrix(&mut rng, 5, samples, 0.0, 1.0);
    let y = uniform_matrix(&mut rng, 5, samples, 0.0, 1.0);
    Ok(Dataset::new(x, y)?)
}

/// Linear teacher with small noise: `Y = A X + 1e-4·E`, `A ∈ [0, 0.1]^{2×7}`,
/// `X ∈ [0, 1]^{7×n}` and `E` standard normal.
pub fn experiment2_data(seed: u64, samples: usize) -> Result<Dataset> {
    let (x, a, noise) = experiment2_parts(seed, samples);
    Ok(Dataset::new(x.clone(), a.dot(&x) + noise * 1e-4)?)
}

/// The raw ingredients of [`experiment2_data`]: `(X, A, E)`.
pub fn experiment2_parts(seed: u64, samples: usize) -> (Array2<f64>, Array2<f64>, Array2<f64>) {
    let mut rng = seeded_rng(seed, DATA_STREAM);
    let x = uniform_matrix(&mut rng, 7, samples, 0.0, 1.0);
    let a = uniform_matrix(&mut rng, 2, 7, 0.0, 0.1);
    let noise = Array2::from_shape_fn((2, samples), |_| rng.sample::<f64, _>(StandardNormal));
    (x, a, noise)
}

/// Reads a headerless, comma-separated numeric matrix.
pub fn read_matrix_csv(path: &Path) -> Result<Array2<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| BenchError::parse(path, e.to_string()))?;
    let mut values = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| BenchError::parse(path, e.to_string()))?;
        if *cols.get_or_insert(record.len()) != record.len() {
            return Err(BenchError::parse(path, format!("line {}: ragged row", line + 1)));
        }
        for field in record.iter() {
            let v: f64 = field
                .parse()
                .map_err(|_| BenchError::parse(path, format!("line {}: bad number {field:?}", line + 1)))?;
            values.push(v);
        }
        rows += 1;
    }
    let cols = cols.ok_or_else(|| BenchError::parse(path, "empty matrix"))?;
    Array2::from_shape_vec((rows, cols), values).map_err(|e| BenchError::parse(path, e.to_string()))
}

/// Custom data from two CSV matrices; columns are samples.
pub fn load_custom(x_path: &Path, y_path: &Path) -> Result<Dataset> {
    let x = read_matrix_csv(x_path)?;
    let y = read_matrix_csv(y_path)?;
    Ok(Dataset::new(x, y)?)
}
