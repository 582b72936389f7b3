//! Kernel generating distances for deep linear networks.
//!
//! With `s = ‖W‖²_F` the kernel is radial:
//!
//! - even `N`: `h = c1·(s/N)^N + c2·(s/N)^{N/2} + ρ·s/N`
//! - odd `N`:  `h = c1·(s/N)^N + c3·((s+1)/(N+1))^{(N+1)/2} + ρ·s/N`
//!
//! Every term has the shape `a·((s + b)/c)^m` with integer `m`, which is how
//! they are stored. The loss `g` is 1-smooth adaptable relative to `h`, i.e.
//! `|g(x) − g(y) − ⟨∇g(y), x − y⟩| ≤ D_h(x, y)` for all `x, y`.

use crate::error::{Error, Result};
use crate::model::{self, Dataset};
use crate::stack::WeightStack;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

/// `coef · ((s + offset) / scale)^power`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct PowerTerm {
    pub coef: f64,
    pub offset: f64,
    pub scale: f64,
    pub power: i32,
}

impl PowerTerm {
    fn base(&self, s: f64) -> f64 {
        (s + self.offset) / self.scale
    }

    fn value(&self, s: f64) -> f64 {
        self.coef * self.base(s).powi(self.power)
    }

    /// `dT/ds`.
    pub(crate) fn ds(&self, s: f64) -> f64 {
        self.coef * f64::from(self.power) * self.base(s).powi(self.power - 1) / self.scale
    }

    /// `d²T/ds²`.
    pub(crate) fn ds2(&self, s: f64) -> f64 {
        if self.power < 2 {
            return 0.0;
        }
        let m = f64::from(self.power);
        self.coef * m * (m - 1.0) * self.base(s).powi(self.power - 2) / (self.scale * self.scale)
    }

    /// `T(s_y + delta) − T(s_y) − T'(s_y)·delta`, summed from the binomial
    /// expansion so that no large terms cancel when `delta` is small.
    fn bregman_1d(&self, s_y: f64, delta: f64) -> f64 {
        let u = self.base(s_y);
        let e = delta / self.scale;
        let m = self.power;
        let mut binom = f64::from(m); // C(m, 1)
        let mut acc = 0.0;
        for j in 2..=m {
            binom = binom * f64::from(m - j + 1) / f64::from(j);
            acc += binom * u.powi(m - j) * e.powi(j);
        }
        self.coef * acc
    }
}

/// Problem-dependent kernel `h` together with its strong-convexity modulus.
#[derive(Debug, Clone, PartialEq)]
pub struct BregmanKernel {
    layers: usize,
    parity: Parity,
    c1: f64,
    c2: f64,
    c3: f64,
    rho: f64,
    sigma: f64,
    x_norm: Option<f64>,
    y_norm: Option<f64>,
    terms: Vec<PowerTerm>,
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// `(2N−1)·N^N / (2·N!) · ‖X‖²`.
pub fn coefficient_c1(layers: usize, x_norm: f64) -> f64 {
    let n = layers as f64;
    (2.0 * n - 1.0) * n.powi(layers as i32) / (2.0 * factorial(layers)) * x_norm * x_norm
}

/// `‖Y‖‖X‖(N−1)·N^{(N−2)/2} / (N−2)^{(N−2)/2}` for even `N`; both powers are 1 at `N = 2`.
pub fn coefficient_c2(layers: usize, x_norm: f64, y_norm: f64) -> f64 {
    debug_assert!(layers % 2 == 0);
    let n = layers as f64;
    let half = ((layers - 2) / 2) as i32;
    let ratio = if layers == 2 { 1.0 } else { n.powi(half) / (n - 2.0).powi(half) };
    y_norm * x_norm * (n - 1.0) * ratio
}

/// `‖Y‖‖X‖(N−1)·(N+1)^{(N−1)/2} / (N−1)^{(N−1)/2}` for odd `N`.
pub fn coefficient_c3(layers: usize, x_norm: f64, y_norm: f64) -> f64 {
    debug_assert!(layers % 2 == 1);
    let n = layers as f64;
    let half = ((layers - 1) / 2) as i32;
    y_norm * x_norm * (n - 1.0) * (n + 1.0).powi(half) / (n - 1.0).powi(half)
}

impl BregmanKernel {
    /// Kernel for an `N`-layer network on `data`, with `ρ·‖W‖²/N` added for
    /// strong convexity.
    pub fn build(layers: usize, data: &Dataset, rho: f64) -> Result<Self> {
        if layers < 2 {
            return Err(Error::Config(format!("need N >= 2 layers, got {layers}")));
        }
        let (xn, yn) = (data.x_norm(), data.y_norm());
        let c1 = coefficient_c1(layers, xn);
        let mid = if layers % 2 == 0 {
            coefficient_c2(layers, xn, yn)
        } else {
            coefficient_c3(layers, xn, yn)
        };
        let mut kernel = Self::from_coefficients(layers, c1, mid, rho)?;
        kernel.x_norm = Some(xn);
        kernel.y_norm = Some(yn);
        Ok(kernel)
    }

    /// Kernel from explicit coefficients. `mid` is `c2` for even `N` and `c3`
    /// for odd `N`.
    pub fn from_coefficients(layers: usize, c1: f64, mid: f64, rho: f64) -> Result<Self> {
        if layers < 2 {
            return Err(Error::Config(format!("need N >= 2 layers, got {layers}")));
        }
        if !(c1 > 0.0 && c1.is_finite()) {
            return Err(Error::Config(format!(
                "kernel coefficient c1 must be positive (is X zero?), got {c1}"
            )));
        }
        if !(mid >= 0.0 && mid.is_finite()) || !(rho >= 0.0 && rho.is_finite()) {
            return Err(Error::Config(format!(
                "kernel coefficients must be non-negative, got mid={mid}, rho={rho}"
            )));
        }
        let n = layers as f64;
        let ni = layers as i32;
        let parity = if layers % 2 == 0 { Parity::Even } else { Parity::Odd };
        let mut terms = vec![PowerTerm { coef: c1, offset: 0.0, scale: n, power: ni }];
        let (c2, c3, sigma) = match parity {
            Parity::Even => {
                terms.push(PowerTerm { coef: mid, offset: 0.0, scale: n, power: ni / 2 });
                let sigma = if layers == 2 { mid + 2.0 * rho / n } else { 2.0 * rho / n };
                (mid, 0.0, sigma)
            }
            Parity::Odd => {
                terms.push(PowerTerm { coef: mid, offset: 1.0, scale: n + 1.0, power: (ni + 1) / 2 });
                let sigma = mid / (n + 1.0).powi((ni - 1) / 2) + 2.0 * rho / n;
                (0.0, mid, sigma)
            }
        };
        if rho > 0.0 {
            terms.push(PowerTerm { coef: rho, offset: 0.0, scale: n, power: 1 });
        }
        if !(sigma > 0.0) {
            return Err(Error::Config(format!(
                "kernel not strongly convex for N={layers} (rho={rho}, mid coefficient={mid})"
            )));
        }
        Ok(Self {
            layers,
            parity,
            c1,
            c2,
            c3,
            rho,
            sigma,
            x_norm: None,
            y_norm: None,
            terms,
        })
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn c1(&self) -> f64 {
        self.c1
    }

    /// Zero for odd `N`.
    pub fn c2(&self) -> f64 {
        self.c2
    }

    /// Zero for even `N`.
    pub fn c3(&self) -> f64 {
        self.c3
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Strong-convexity modulus: `D_h(x, y) ≥ (σ/2)‖x − y‖²`.
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn x_norm(&self) -> Option<f64> {
        self.x_norm
    }

    pub fn y_norm(&self) -> Option<f64> {
        self.y_norm
    }

    pub(crate) fn terms(&self) -> &[PowerTerm] {
        &self.terms
    }

    /// `h` as a function of `s = ‖W‖²`.
    pub fn value_at(&self, s: f64) -> f64 {
        self.terms.iter().map(|t| t.value(s)).sum()
    }

    pub fn value(&self, w: &WeightStack) -> f64 {
        self.value_at(w.norm_sq())
    }

    /// Multiplier `φ(s)` with `∇_{W_i} h = φ(s)·W_i`; equals `2·dh/ds`.
    pub fn gradient_scale(&self, s: f64) -> f64 {
        2.0 * self.terms.iter().map(|t| t.ds(s)).sum::<f64>()
    }

    pub fn gradient(&self, w: &WeightStack) -> WeightStack {
        w.scale(self.gradient_scale(w.norm_sq()))
    }

    /// `D_h(x, y) = h(x) − h(y) − ⟨∇h(y), x − y⟩`.
    ///
    /// Evaluated term by term through the radial structure, which keeps full
    /// relative accuracy when `x` is close to `y`.
    pub fn bregman_distance(&self, x: &WeightStack, y: &WeightStack) -> f64 {
        debug_assert!(x.same_shape(y));
        let d = x.sub(y);
        let dd = d.norm_sq();
        let s_y = y.norm_sq();
        let delta = 2.0 * y.dot(&d) + dd;
        self.terms
            .iter()
            .map(|t| t.bregman_1d(s_y, delta) + t.ds(s_y) * dd)
            .sum()
    }

    /// Two-sided extended descent inequality with `L = 1` at `(x, y)`.
    pub fn check_lsmad(&self, data: &Dataset, x: &WeightStack, y: &WeightStack) -> Result<LsmadCheck> {
        x.check_same_shape(y)?;
        let gx = model::loss(x, data)?;
        let ey = model::evaluate(y, data)?;
        let gap = gx - ey.loss - ey.gradient.dot(&x.sub(y));
        let distance = self.bregman_distance(x, y);
        let slack = distance - gap.abs();
        Ok(LsmadCheck { holds: slack >= 0.0, slack, gap, distance })
    }
}

/// Outcome of [`BregmanKernel::check_lsmad`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LsmadCheck {
    pub holds: bool,
    /// `D_h(x, y) − |g(x) − g(y) − ⟨∇g(y), x − y⟩|`.
    pub slack: f64,
    pub gap: f64,
    pub distance: f64,
}
