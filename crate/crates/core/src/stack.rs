//! The optimization variable: an ordered stack of dense layer matrices.

use ndarray::{Array2, Zip};

use crate::error::{Error, Result};

/// Layers `W_1, …, W_N`. Layer `i` has shape `d_i × d_{i+1}`.
///
/// The stack lives in the product space with the norm
/// `‖W‖²_F = Σ_i ‖W_i‖²_F`; all vector-space operations below act blockwise.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightStack {
    layers: Vec<Array2<f64>>,
}

impl WeightStack {
    /// Builds a stack, checking that at least two layers are given and that
    /// adjacent shapes chain.
    pub fn new(layers: Vec<Array2<f64>>) -> Result<Self> {
        if layers.len() < 2 {
            return Err(Error::Config(format!(
                "a deep linear network needs at least 2 layers, got {}",
                layers.len()
            )));
        }
        for i in 1..layers.len() {
            let cols = layers[i - 1].ncols();
            let rows = layers[i].nrows();
            if cols != rows {
                return Err(Error::dim(
                    i + 1,
                    format!("{cols} rows"),
                    format!("{rows} rows"),
                ));
            }
        }
        Ok(Self { layers })
    }

    /// Stack with layer shapes `dims[i] × dims[i+1]`, every entry set to `value`.
    pub fn filled(dims: &[usize], value: f64) -> Result<Self> {
        if dims.len() < 3 {
            return Err(Error::Config(format!(
                "need at least 3 dimensions for 2 layers, got {dims:?}"
            )));
        }
        let layers = dims
            .windows(2)
            .map(|w| Array2::from_elem((w[0], w[1]), value))
            .collect();
        Self::new(layers)
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            layers: self.layers.iter().map(|w| Array2::zeros(w.raw_dim())).collect(),
        }
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn layers(&self) -> &[Array2<f64>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Array2<f64>] {
        &mut self.layers
    }

    pub fn into_layers(self) -> Vec<Array2<f64>> {
        self.layers
    }

    /// `[d_1, d_2, …, d_{N+1}]`.
    pub fn dims(&self) -> Vec<usize> {
        let mut dims: Vec<usize> = self.layers.iter().map(|w| w.nrows()).collect();
        dims.push(self.layers.last().map_or(0, |w| w.ncols()));
        dims
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.layers.len() == other.layers.len()
            && self
                .layers
                .iter()
                .zip(&other.layers)
                .all(|(a, b)| a.dim() == b.dim())
    }

    pub(crate) fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.layers.len() != other.layers.len() {
            return Err(Error::dim(
                0,
                format!("{} layers", self.layers.len()),
                format!("{} layers", other.layers.len()),
            ));
        }
        for (i, (a, b)) in self.layers.iter().zip(&other.layers).enumerate() {
            if a.dim() != b.dim() {
                return Err(Error::dim(i + 1, format!("{:?}", a.dim()), format!("{:?}", b.dim())));
            }
        }
        Ok(())
    }

    /// `‖W‖²_F`.
    pub fn norm_sq(&self) -> f64 {
        self.layers
            .iter()
            .map(|w| w.iter().map(|v| v * v).sum::<f64>())
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Sum of blockwise Frobenius inner products. Shapes must agree.
    pub fn dot(&self, other: &Self) -> f64 {
        debug_assert!(self.same_shape(other));
        self.layers
            .iter()
            .zip(&other.layers)
            .map(|(a, b)| Zip::from(a).and(b).fold(0.0, |acc, &x, &y| acc + x * y))
            .sum()
    }

    /// `self − other`.
    pub fn sub(&self, other: &Self) -> Self {
        debug_assert!(self.same_shape(other));
        Self {
            layers: self
                .layers
                .iter()
                .zip(&other.layers)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    /// `self + alpha · other`.
    pub fn add_scaled(&self, alpha: f64, other: &Self) -> Self {
        debug_assert!(self.same_shape(other));
        Self {
            layers: self
                .layers
                .iter()
                .zip(&other.layers)
                .map(|(a, b)| {
                    let mut out = a.clone();
                    out.scaled_add(alpha, b);
                    out
                })
                .collect(),
        }
    }

    pub fn scale(&self, alpha: f64) -> Self {
        self.map(|v| alpha * v)
    }

    /// Entrywise map over every block.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            layers: self.layers.iter().map(|w| w.mapv(&f)).collect(),
        }
    }

    /// `‖self − other‖²_F` without allocating the difference.
    pub fn dist_sq(&self, other: &Self) -> f64 {
        debug_assert!(self.same_shape(other));
        self.layers
            .iter()
            .zip(&other.layers)
            .map(|(a, b)| Zip::from(a).and(b).fold(0.0, |acc, &x, &y| acc + (x - y) * (x - y)))
            .sum()
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(|w| w.iter().all(|v| v.is_finite()))
    }
}
