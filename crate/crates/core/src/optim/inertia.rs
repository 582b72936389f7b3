//! Closed-form inertia.
//!
//! With `Δ = x − x_prev` and `y = x + γΔ`, the Hessian of `h` on the segment
//! `[x, y]` is bounded in terms of `Ω = 2‖x‖² + 2‖Δ‖²`, which gives
//! `D_h(x, y) ≤ γ²·χ`. Choosing `γ² ≤ κ·D_h(x_prev, x)/χ` therefore enforces
//! `D_h(x, y) ≤ κ·D_h(x_prev, x)`.

use crate::error::{Error, Result};
use crate::kernel::{BregmanKernel, Parity};
use crate::stack::WeightStack;

fn displacement(x_prev: &WeightStack, x: &WeightStack) -> Result<(f64, f64)> {
    x_prev.check_same_shape(x)?;
    let dd = x.dist_sq(x_prev);
    if dd == 0.0 {
        return Err(Error::Domain(
            "closed-form inertia needs x_prev != x; use gamma = 0".into(),
        ));
    }
    Ok((dd, x.norm_sq()))
}

fn check_kappa(kappa: f64) -> Result<()> {
    if kappa > 0.0 && kappa.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("kappa must be positive, got {kappa}")))
    }
}

/// `χ` for the generic segment bound.
pub(crate) fn chi(kernel: &BregmanKernel, dd: f64, xx: f64) -> f64 {
    let n = kernel.layers() as i32;
    let nf = f64::from(n);
    let omega = 2.0 * xx + 2.0 * dd;
    let b = f64::from(2 * n - 1) / nf.powi(n - 1) * dd * omega.powi(n - 1);
    let mid = match kernel.parity() {
        Parity::Even => {
            // exponents read as 1 at N = 2
            let c = f64::from(n - 1) / nf.powi(n / 2 - 1) * dd * omega.powi((n - 2) / 2);
            kernel.c2() * c
        }
        Parity::Odd => {
            let d = nf / (nf + 1.0).powi((n - 1) / 2) * dd * (omega + 1.0).powi((n - 1) / 2);
            kernel.c3() * d
        }
    };
    kernel.c1() * b + mid + kernel.rho() * dd
}

/// Largest `γ ∈ (0, 1]` certified by the generic bound.
pub fn closed_form_gamma(
    x_prev: &WeightStack,
    x: &WeightStack,
    kernel: &BregmanKernel,
    kappa: f64,
) -> Result<f64> {
    check_kappa(kappa)?;
    let (dd, xx) = displacement(x_prev, x)?;
    let bound = chi(kernel, dd, xx);
    let dist = kernel.bregman_distance(x_prev, x);
    Ok((kappa * dist / bound).sqrt().min(1.0))
}

/// Tighter two-layer bound: `D_h(x, y) ≤ γ²(ξ1 + ξ2)` with
/// `ξ1 = 2c1‖Δ‖⁴` and `ξ2 = (3c1‖x‖² + (c2 + ρ)/2)‖Δ‖²`.
pub fn closed_form_gamma_n2(
    x_prev: &WeightStack,
    x: &WeightStack,
    kernel: &BregmanKernel,
    kappa: f64,
) -> Result<f64> {
    if kernel.layers() != 2 {
        return Err(Error::Config(format!(
            "two-layer inertia bound used with N = {}",
            kernel.layers()
        )));
    }
    check_kappa(kappa)?;
    let (dd, xx) = displacement(x_prev, x)?;
    let xi1 = 2.0 * kernel.c1() * dd * dd;
    let xi2 = (3.0 * kernel.c1() * xx + 0.5 * (kernel.c2() + kernel.rho())) * dd;
    let dist = kernel.bregman_distance(x_prev, x);
    Ok((kappa * dist / (xi1 + xi2)).sqrt().min(1.0))
}

/// Dispatches to the two-layer bound when it applies.
pub(crate) fn best_gamma(
    x_prev: &WeightStack,
    x: &WeightStack,
    kernel: &BregmanKernel,
    kappa: f64,
) -> Result<f64> {
    if kernel.layers() == 2 {
        closed_form_gamma_n2(x_prev, x, kernel, kappa)
    } else {
        closed_form_gamma(x_prev, x, kernel, kappa)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn pair() -> (WeightStack, WeightStack) {
        let a = WeightStack::new(vec![array![[0.3, -0.1]], array![[0.2], [0.5]]]).unwrap();
        let b = WeightStack::new(vec![array![[0.4, 0.1]], array![[0.1], [0.6]]]).unwrap();
        (a, b)
    }

    #[test]
    fn zero_displacement_is_domain_error() {
        let k = BregmanKernel::from_coefficients(2, 3.0, 1.0, 1.0).unwrap();
        let (a, _) = pair();
        assert!(matches!(closed_form_gamma(&a, &a, &k, 0.5), Err(Error::Domain(_))));
        assert!(matches!(closed_form_gamma_n2(&a, &a, &k, 0.5), Err(Error::Domain(_))));
    }

    #[test]
    fn gamma_is_clamped_and_audited() {
        let k = BregmanKernel::from_coefficients(2, 3.0, 1.0, 1.0).unwrap();
        let (a, b) = pair();
        for kappa in [1e-3, 0.5, 0.98, 1e6] {
            let g = closed_form_gamma(&a, &b, &k, kappa).unwrap();
            let g2 = closed_form_gamma_n2(&a, &b, &k, kappa).unwrap();
            assert!(g > 0.0 && g <= 1.0 && g2 <= 1.0);
            assert!(g2 >= g);
            let y = b.add_scaled(g2, &b.sub(&a));
            assert!(k.bregman_distance(&b, &y) <= kappa * k.bregman_distance(&a, &b));
        }
    }

    #[test]
    fn chi_positive_for_all_parities() {
        for n in 2..=6 {
            let k = BregmanKernel::from_coefficients(n, 1.0, 1.0, 1.0).unwrap();
            assert!(chi(&k, 1e-8, 0.0) > 0.0);
        }
    }
}
