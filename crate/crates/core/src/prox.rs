//! Closed-form Bregman proximal gradient map.
//!
//! The step `T_λ(W) = argmin_U { f(U) + ⟨∇g(W), U⟩ + (1/λ) D_h(U, W) }` reduces,
//! with `P_i = λ∇_{W_i}g(W) − ∇_{W_i}h(W)`, to `U_i = r·√N·Q_i/‖Q‖_F` where
//! `Q = −P` (or `Q_i = S_{λμ_i}(−P_i)` under L1) and `r ≥ 0` is the unique root
//! of the scalar radius equation
//! `r·(φ(N r²) + shift) − ‖Q‖_F/√N = 0`, `φ` being the kernel gradient scale.
//! L2 regularization adds `λλ0` to the linear coefficient.

use crate::error::{Error, Result};
use crate::kernel::BregmanKernel;
use crate::model::{self, soft_threshold, Dataset, Regularizer};
use crate::stack::WeightStack;

const RESIDUAL_TOL: f64 = 1e-12;
const MAX_ITERS: usize = 200;

/// The scalar equation whose positive root is the radius of the next iterate.
#[derive(Debug, Clone)]
pub struct RadiusEquation<'a> {
    kernel: &'a BregmanKernel,
    /// Extra linear coefficient (`λλ0` under L2, else 0).
    linear_shift: f64,
}

impl<'a> RadiusEquation<'a> {
    pub fn new(kernel: &'a BregmanKernel, linear_shift: f64) -> Self {
        Self { kernel, linear_shift }
    }

    /// Radius equation for a step of size `step` under `reg`.
    pub fn for_step(kernel: &'a BregmanKernel, reg: &Regularizer, step: f64) -> Self {
        let shift = match reg {
            Regularizer::L2 { lambda0 } => step * lambda0,
            _ => 0.0,
        };
        Self::new(kernel, shift)
    }

    fn n(&self) -> f64 {
        self.kernel.layers() as f64
    }

    /// Left-hand side without the constant term: increasing, zero at `r = 0`.
    fn increasing_part(&self, r: f64) -> f64 {
        let s = self.n() * r * r;
        r * (self.kernel.gradient_scale(s) + self.linear_shift)
    }

    fn derivative(&self, r: f64) -> f64 {
        let s = self.n() * r * r;
        let first: f64 = self.kernel.terms().iter().map(|t| t.ds(s)).sum();
        let second: f64 = self.kernel.terms().iter().map(|t| t.ds2(s)).sum();
        // φ = 2h'(s), so d/dr [r·φ(N r²)] = 2h'(s) + 4s·h''(s)
        2.0 * first + 4.0 * s * second + self.linear_shift
    }

    /// Residual of the equation at `r` for a right-hand side `‖Q‖_F = q_norm`.
    pub fn residual(&self, r: f64, q_norm: f64) -> f64 {
        self.increasing_part(r) - q_norm / self.n().sqrt()
    }

    /// Upper end of a bracket guaranteed to contain the root.
    pub fn bracket_upper(&self, q_norm: f64) -> f64 {
        let n = self.kernel.layers() as i32;
        let ratio = q_norm / (self.n().sqrt() * 2.0 * self.kernel.c1());
        (ratio.powf(1.0 / f64::from(2 * n - 1)) * 2.0).max(1.0)
    }

    /// Unique non-negative root, by Newton's method inside a certified
    /// bracket with bisection whenever a Newton step leaves it.
    pub fn solve(&self, q_norm: f64) -> Result<f64> {
        if !q_norm.is_finite() || q_norm < 0.0 {
            return Err(Error::Numeric(format!("radius equation with ‖Q‖ = {q_norm}")));
        }
        if q_norm == 0.0 {
            return Ok(0.0);
        }
        let tol = RESIDUAL_TOL * q_norm.max(1.0);
        let mut lo = 0.0;
        let mut hi = self.bracket_upper(q_norm);
        let f_hi = self.residual(hi, q_norm);
        if !f_hi.is_finite() {
            return Err(Error::Numeric(format!("radius equation overflows at r = {hi}")));
        }
        if f_hi < 0.0 {
            return Err(Error::Internal(format!(
                "radius bracket [0, {hi}] does not contain the root (f(hi) = {f_hi})"
            )));
        }
        if f_hi <= tol {
            return Ok(hi);
        }
        // The residual is convex and increasing on r ≥ 0, so Newton from the
        // right end stays inside the bracket in exact arithmetic.
        let mut r = hi;
        let mut f = f_hi;
        for _ in 0..MAX_ITERS {
            let df = self.derivative(r);
            let mut next = r - f / df;
            if !(next > lo && next < hi) || !next.is_finite() {
                next = 0.5 * (lo + hi);
            }
            let f_next = self.residual(next, q_norm);
            if !f_next.is_finite() {
                return Err(Error::Numeric(format!("radius residual non-finite at r = {next}")));
            }
            if f_next > 0.0 {
                hi = next;
            } else {
                lo = next;
            }
            let step = (next - r).abs();
            r = next;
            f = f_next;
            if f.abs() <= tol || step <= f64::EPSILON * r {
                break;
            }
        }
        Ok(r)
    }
}

/// Convenience wrapper: root of the radius equation for `(kernel, shift)`.
pub fn solve_radius(kernel: &BregmanKernel, linear_shift: f64, q_norm: f64) -> Result<f64> {
    RadiusEquation::new(kernel, linear_shift).solve(q_norm)
}

pub fn radius_equation_residual(kernel: &BregmanKernel, linear_shift: f64, r: f64, q_norm: f64) -> f64 {
    RadiusEquation::new(kernel, linear_shift).residual(r, q_norm)
}

/// Bregman proximal step from `w` given the precomputed loss gradient at `w`.
pub fn bpg_step(
    w: &WeightStack,
    grad: &WeightStack,
    kernel: &BregmanKernel,
    reg: &Regularizer,
    step: f64,
) -> Result<WeightStack> {
    if !(step > 0.0) {
        return Err(Error::Config(format!("step size must be positive, got {step}")));
    }
    let phi = kernel.gradient_scale(w.norm_sq());
    // Q = −P = ∇h(w) − λ∇g(w)
    let neg_p = w.scale(phi).add_scaled(-step, grad);
    let q = match reg {
        Regularizer::L1 { mu } => {
            let layers = neg_p
                .layers()
                .iter()
                .zip(mu)
                .map(|(b, m)| soft_threshold(b, step * m))
                .collect();
            WeightStack::new(layers)?
        }
        _ => neg_p,
    };
    let q_norm = q.norm();
    if !q_norm.is_finite() {
        return Err(Error::Numeric("non-finite proximal direction".into()));
    }
    if q_norm == 0.0 {
        return Ok(q.zeros_like());
    }
    let r = RadiusEquation::for_step(kernel, reg, step).solve(q_norm)?;
    let n = kernel.layers() as f64;
    Ok(q.scale(r * n.sqrt() / q_norm))
}

/// `T_λ(w)`: one BPG update.
pub fn bpg_update(
    w: &WeightStack,
    data: &Dataset,
    kernel: &BregmanKernel,
    reg: &Regularizer,
    step: f64,
) -> Result<WeightStack> {
    let grad = model::loss_gradient(w, data)?;
    bpg_step(w, &grad, kernel, reg, step)
}
