#![allow(dead_code)]

use bregman_dlnn::{Dataset, WeightStack};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut ChaCha8Rng, rows: usize, cols: usize, lo: f64, hi: f64) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(lo..hi))
}

pub fn random_stack(rng: &mut ChaCha8Rng, dims: &[usize], lo: f64, hi: f64) -> WeightStack {
    let layers = dims.windows(2).map(|w| uniform(rng, w[0], w[1], lo, hi)).collect();
    WeightStack::new(layers).unwrap()
}

/// 5×5 layers, 50 samples with entries in [0, 1], weights all 0.1.
pub fn experiment1(layers: usize, seed: u64) -> (Dataset, WeightStack) {
    let mut r = rng(seed);
    let x = uniform(&mut r, 5, 50, 0.0, 1.0);
    let y = uniform(&mut r, 5, 50, 0.0, 1.0);
    let dims = vec![5; layers + 1];
    (Dataset::new(x, y).unwrap(), WeightStack::filled(&dims, 0.1).unwrap())
}

/// Small random problem with arbitrary shapes.
pub fn random_problem(rng: &mut ChaCha8Rng, layers: usize, scale: f64) -> (Dataset, Vec<usize>) {
    let dims: Vec<usize> = (0..=layers).map(|_| rng.random_range(1..4)).collect();
    let samples = rng.random_range(1..6);
    let x = uniform(rng, dims[layers], samples, -scale, scale);
    let y = uniform(rng, dims[0], samples, -scale, scale);
    (Dataset::new(x, y).unwrap(), dims)
}
