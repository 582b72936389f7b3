//! Deep linear network loss `g(W) = ½‖W_1···W_N X − Y‖²_F`, its gradient,
//! the regularizers `f`, and the composite objective `Ψ = f + g`.

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::stack::WeightStack;

/// Training data: inputs `X` (`d × n_T`) and targets `Y` (`d_1 × n_T`).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: Array2<f64>,
    y: Array2<f64>,
    x_norm: f64,
    y_norm: f64,
}

impl Dataset {
    pub fn new(x: Array2<f64>, y: Array2<f64>) -> Result<Self> {
        if x.ncols() == 0 {
            return Err(Error::Config("dataset needs at least one sample".into()));
        }
        if x.ncols() != y.ncols() {
            return Err(Error::Config(format!(
                "X has {} samples but Y has {}",
                x.ncols(),
                y.ncols()
            )));
        }
        let x_norm = frobenius(x.view());
        let y_norm = frobenius(y.view());
        Ok(Self { x, y, x_norm, y_norm })
    }

    pub fn x(&self) -> &Array2<f64> {
        &self.x
    }

    pub fn y(&self) -> &Array2<f64> {
        &self.y
    }

    /// `‖X‖_F`, cached at construction.
    pub fn x_norm(&self) -> f64 {
        self.x_norm
    }

    /// `‖Y‖_F`, cached at construction.
    pub fn y_norm(&self) -> f64 {
        self.y_norm
    }

    pub fn samples(&self) -> usize {
        self.x.ncols()
    }

    /// Checks that `w` maps the rows of `X` to the rows of `Y`.
    pub fn check_stack(&self, w: &WeightStack) -> Result<()> {
        let layers = w.layers();
        let n = layers.len();
        if layers[0].nrows() != self.y.nrows() {
            return Err(Error::dim(
                1,
                format!("{} rows (rows of Y)", self.y.nrows()),
                format!("{} rows", layers[0].nrows()),
            ));
        }
        if layers[n - 1].ncols() != self.x.nrows() {
            return Err(Error::dim(
                n,
                format!("{} columns (rows of X)", self.x.nrows()),
                format!("{} columns", layers[n - 1].ncols()),
            ));
        }
        Ok(())
    }
}

pub(crate) fn frobenius(a: ArrayView2<'_, f64>) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// The nonsmooth part `f` of the composite objective.
#[derive(Debug, Clone, PartialEq)]
pub enum Regularizer {
    None,
    /// `(λ0/2)‖W‖²_F`.
    L2 { lambda0: f64 },
    /// `Σ_i μ_i ‖W_i‖_1`, one weight per layer.
    L1 { mu: Vec<f64> },
}

impl Regularizer {
    /// Validates weights against a network with `layers` layers.
    pub fn validate(&self, layers: usize) -> Result<()> {
        match self {
            Regularizer::None => Ok(()),
            Regularizer::L2 { lambda0 } => {
                if *lambda0 > 0.0 && lambda0.is_finite() {
                    Ok(())
                } else {
                    Err(Error::Config(format!("L2 weight must be positive, got {lambda0}")))
                }
            }
            Regularizer::L1 { mu } => {
                if mu.len() != layers {
                    return Err(Error::Config(format!(
                        "L1 needs one weight per layer: {} layers, {} weights",
                        layers,
                        mu.len()
                    )));
                }
                if mu.iter().all(|m| *m > 0.0 && m.is_finite()) {
                    Ok(())
                } else {
                    Err(Error::Config(format!("L1 weights must be positive, got {mu:?}")))
                }
            }
        }
    }

    pub fn value(&self, w: &WeightStack) -> f64 {
        match self {
            Regularizer::None => 0.0,
            Regularizer::L2 { lambda0 } => 0.5 * lambda0 * w.norm_sq(),
            Regularizer::L1 { mu } => w
                .layers()
                .iter()
                .zip(mu)
                .map(|(layer, m)| m * layer.iter().map(|v| v.abs()).sum::<f64>())
                .sum(),
        }
    }

    /// Euclidean proximal map of `step · f_i` applied to block `i` (0-based).
    pub fn prox_block(&self, block: usize, v: &Array2<f64>, step: f64) -> Array2<f64> {
        match self {
            Regularizer::None => v.clone(),
            Regularizer::L2 { lambda0 } => v / (1.0 + step * lambda0),
            Regularizer::L1 { mu } => soft_threshold(v, step * mu[block]),
        }
    }

    /// Euclidean proximal map of `step · f` applied to the whole stack.
    pub fn prox(&self, v: &WeightStack, step: f64) -> WeightStack {
        let layers = v
            .layers()
            .iter()
            .enumerate()
            .map(|(i, b)| self.prox_block(i, b, step))
            .collect();
        WeightStack::new(layers).expect("prox preserves shapes")
    }
}

/// Entrywise `S_θ(x) = max(|x| − θ, 0)·sgn(x)`.
pub fn soft_threshold(x: &Array2<f64>, theta: f64) -> Array2<f64> {
    debug_assert!(theta >= 0.0);
    x.mapv(|v| (v.abs() - theta).max(0.0) * v.signum())
}

/// Loss and gradient evaluated at one point, sharing the product `W_1···W_N X`.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub loss: f64,
    pub gradient: WeightStack,
}

/// Left-to-right partial products `W_1`, `W_1W_2`, …, `W_1···W_N`.
fn prefix_products(w: &WeightStack) -> Vec<Array2<f64>> {
    let layers = w.layers();
    let mut prefixes = Vec::with_capacity(layers.len());
    let mut acc = layers[0].clone();
    for layer in &layers[1..] {
        let next = acc.dot(layer);
        prefixes.push(acc);
        acc = next;
    }
    prefixes.push(acc);
    prefixes
}

fn residual_from_product(product: &Array2<f64>, data: &Dataset) -> Array2<f64> {
    product.dot(data.x()) - data.y()
}

fn half_sq(r: &Array2<f64>) -> f64 {
    0.5 * r.iter().map(|v| v * v).sum::<f64>()
}

/// `g(W) = ½‖W_1···W_N X − Y‖²_F`.
pub fn loss(w: &WeightStack, data: &Dataset) -> Result<f64> {
    data.check_stack(w)?;
    let layers = w.layers();
    let mut acc = layers[0].clone();
    for layer in &layers[1..] {
        acc = acc.dot(layer);
    }
    Ok(half_sq(&residual_from_product(&acc, data)))
}

/// Fused loss and per-block gradient
/// `∇_{W_i} g = (W_1···W_{i−1})ᵀ R (W_{i+1}···W_N X)ᵀ` with `R = W_1···W_N X − Y`.
pub fn evaluate(w: &WeightStack, data: &Dataset) -> Result<Evaluation> {
    data.check_stack(w)?;
    let layers = w.layers();
    let n = layers.len();
    let prefixes = prefix_products(w);
    let residual = residual_from_product(&prefixes[n - 1], data);
    let loss = half_sq(&residual);

    // suffix_i = W_{i+1}···W_N X, built right to left.
    let mut grads: Vec<Array2<f64>> = Vec::with_capacity(n);
    let mut suffix = data.x().clone();
    for i in (0..n).rev() {
        let right = residual.dot(&suffix.t());
        let g = if i == 0 { right } else { prefixes[i - 1].t().dot(&right) };
        grads.push(g);
        if i > 0 {
            suffix = layers[i].dot(&suffix);
        }
    }
    grads.reverse();
    let gradient = WeightStack::new(grads).expect("gradient shapes follow the stack");
    Ok(Evaluation { loss, gradient })
}

pub fn loss_gradient(w: &WeightStack, data: &Dataset) -> Result<WeightStack> {
    evaluate(w, data).map(|e| e.gradient)
}

pub fn regularizer_value(reg: &Regularizer, w: &WeightStack) -> f64 {
    reg.value(w)
}

/// `Ψ(W) = g(W) + f(W)`.
pub fn composite_objective(w: &WeightStack, data: &Dataset, reg: &Regularizer) -> Result<f64> {
    Ok(loss(w, data)? + reg.value(w))
}
