//! Euclidean baselines: PALM / iPALM (cyclic block steps with blockwise
//! Lipschitz constants) and FBS / iPiano (full-gradient steps with
//! backtracking on the quadratic descent lemma).

use ndarray::{Array1, Array2};

use super::{Counters, OptimizerConfig, Problem, StepRecord, Stepper};
use crate::error::{Error, Result};
use crate::model::{self, Dataset};
use crate::stack::WeightStack;

const POWER_TOL: f64 = 1e-10;
const POWER_MAX_ITERS: usize = 500;
const LIPSCHITZ_FLOOR: f64 = 1e-12;
const MAX_BACKTRACKS: usize = 200;

/// `‖M‖₂²`, the largest eigenvalue of the smaller Gram matrix of `m`, by
/// power iteration.
pub fn spectral_norm_sq(m: &Array2<f64>) -> f64 {
    let gram = if m.nrows() <= m.ncols() { m.dot(&m.t()) } else { m.t().dot(m) };
    let n = gram.nrows();
    if n == 0 {
        return 0.0;
    }
    // A non-symmetric start avoids landing exactly orthogonal to the top
    // eigenvector for structured inputs.
    let mut v = Array1::from_shape_fn(n, |j| 1.0 + 0.1 * j as f64);
    v /= v.dot(&v).sqrt();
    let mut lambda = 0.0;
    for _ in 0..POWER_MAX_ITERS {
        let w = gram.dot(&v);
        let norm = w.dot(&w).sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        let converged = (norm - lambda).abs() <= POWER_TOL * norm;
        lambda = norm;
        v = w / norm;
        if converged {
            break;
        }
    }
    lambda
}

/// Cyclic block proximal gradient with optional extrapolation `β`.
pub(crate) struct Palm<'a> {
    problem: Problem<'a>,
    beta: f64,
    x: WeightStack,
    x_prev: WeightStack,
}

impl<'a> Palm<'a> {
    pub fn new(problem: Problem<'a>, w0: &WeightStack, beta: f64) -> Self {
        Self { problem, beta, x: w0.clone(), x_prev: w0.clone() }
    }
}

impl Stepper for Palm<'_> {
    fn step(&mut self, counters: &mut Counters) -> Result<StepRecord> {
        let p = self.problem;
        let n = self.x.num_layers();
        // suffix[i] = W_{i+1} ··· W_N X, built from the pre-sweep weights,
        // which is what block i sees since later blocks are not yet updated.
        let mut suffix: Vec<Array2<f64>> = vec![Array2::zeros((0, 0)); n];
        suffix[n - 1] = p.data.x().clone();
        for i in (0..n - 1).rev() {
            suffix[i] = self.x.layers()[i + 1].dot(&suffix[i + 1]);
        }

        let old = self.x.clone();
        let mut prefix: Option<Array2<f64>> = None;
        let mut map_sq = 0.0;
        for i in 0..n {
            let b = &suffix[i];
            let w = &self.x.layers()[i];
            let point = if self.beta == 0.0 {
                w.clone()
            } else {
                w + &((w - &self.x_prev.layers()[i]) * self.beta)
            };
            let (ab, a_norm_sq) = match &prefix {
                Some(a) => (a.dot(&point).dot(b), spectral_norm_sq(a)),
                None => (point.dot(b), 1.0),
            };
            let resid = ab - p.data.y();
            let inner = resid.dot(&b.t());
            let grad = match &prefix {
                Some(a) => a.t().dot(&inner),
                None => inner,
            };
            counters.objective_evals += 1;
            let lip = (a_norm_sq * spectral_norm_sq(b)).max(LIPSCHITZ_FLOOR);
            let forward = &point - &(grad / lip);
            let new_block = p.reg.prox_block(i, &forward, 1.0 / lip);
            map_sq += lip * lip * (&new_block - w).mapv(|v| v * v).sum();
            prefix = Some(match prefix {
                Some(a) => a.dot(&new_block),
                None => new_block.clone(),
            });
            self.x.layers_mut()[i] = new_block;
        }
        self.x_prev = old;
        let objective = model::composite_objective(&self.x, p.data, p.reg)?;
        counters.objective_evals += 1;
        Ok(StepRecord { objective, gradient_map: map_sq.sqrt(), ..Default::default() })
    }

    fn current(&self) -> &WeightStack {
        &self.x
    }
}

/// An accepted FBS / iPiano step, kept for post-hoc audits.
#[derive(Debug, Clone)]
pub struct DescentRecord {
    pub x: WeightStack,
    pub x_next: WeightStack,
    pub lipschitz: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DescentAudit {
    pub iterations: usize,
    /// Smallest `g(x) + ⟨∇g(x), x⁺ − x⟩ + (L/2)‖x⁺ − x‖² − g(x⁺)`.
    pub min_slack: f64,
}

pub fn audit_descent_lemma(records: &[DescentRecord], data: &Dataset) -> Result<DescentAudit> {
    let mut min_slack = f64::INFINITY;
    for r in records {
        let e = model::evaluate(&r.x, data)?;
        let g_next = model::loss(&r.x_next, data)?;
        let d = r.x_next.sub(&r.x);
        let slack = e.loss + e.gradient.dot(&d) + 0.5 * r.lipschitz * d.norm_sq() - g_next;
        min_slack = min_slack.min(slack);
    }
    Ok(DescentAudit { iterations: records.len(), min_slack })
}

/// iPiano with backtracking; `β = 0` is forward–backward splitting.
pub(crate) struct Ipiano<'a> {
    problem: Problem<'a>,
    beta: f64,
    nu: f64,
    lipschitz: f64,
    accepted_in_row: usize,
    x: WeightStack,
    x_prev: WeightStack,
    audit: Option<Vec<DescentRecord>>,
}

impl<'a> Ipiano<'a> {
    pub fn new(problem: Problem<'a>, w0: &WeightStack, cfg: &OptimizerConfig, beta: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&beta) {
            return Err(Error::Config(format!("iPiano inertia must lie in [0, 1), got {beta}")));
        }
        Ok(Self {
            problem,
            beta,
            nu: cfg.nu,
            lipschitz: cfg.lipschitz0,
            accepted_in_row: 0,
            x: w0.clone(),
            x_prev: w0.clone(),
            audit: cfg.record_audit.then(Vec::new),
        })
    }

    fn step_size(&self) -> f64 {
        0.99 * 2.0 * (1.0 - self.beta) / self.lipschitz
    }
}

impl Stepper for Ipiano<'_> {
    fn step(&mut self, counters: &mut Counters) -> Result<StepRecord> {
        let p = self.problem;
        let at_x = model::evaluate(&self.x, p.data)?;
        counters.objective_evals += 1;
        let momentum = (self.beta != 0.0).then(|| self.x.sub(&self.x_prev).scale(self.beta));
        let mut backtracks = 0;
        let (x_next, loss_next, alpha, lip) = loop {
            let alpha = self.step_size();
            let mut forward = self.x.add_scaled(-alpha, &at_x.gradient);
            if let Some(m) = &momentum {
                forward = forward.add_scaled(1.0, m);
            }
            let cand = p.reg.prox(&forward, alpha);
            let loss_next = model::loss(&cand, p.data)?;
            counters.objective_evals += 1;
            let d = cand.sub(&self.x);
            let lin = at_x.gradient.dot(&d);
            let bound = at_x.loss + lin + 0.5 * self.lipschitz * d.norm_sq();
            if loss_next <= bound + super::cocain::roundoff(&[at_x.loss, lin, loss_next]) {
                break (cand, loss_next, alpha, self.lipschitz);
            }
            if !bound.is_finite() {
                return Err(Error::Numeric("non-finite loss during backtracking".into()));
            }
            backtracks += 1;
            if backtracks > MAX_BACKTRACKS {
                return Err(Error::Numeric(format!(
                    "descent-lemma backtracking did not terminate (L = {:e})",
                    self.lipschitz
                )));
            }
            self.lipschitz *= self.nu;
            self.accepted_in_row = 0;
        };
        self.accepted_in_row += 1;
        if self.accepted_in_row == 2 {
            self.lipschitz /= self.nu;
            self.accepted_in_row = 0;
        }

        if let Some(log) = self.audit.as_mut() {
            log.push(DescentRecord { x: self.x.clone(), x_next: x_next.clone(), lipschitz: lip });
        }
        let gradient_map = x_next.dist_sq(&self.x).sqrt() / alpha;
        let objective = loss_next + p.reg.value(&x_next);
        self.x_prev = std::mem::replace(&mut self.x, x_next);
        Ok(StepRecord {
            objective,
            l_bar: Some(lip),
            backtracks: Some(backtracks),
            gradient_map,
            ..Default::default()
        })
    }

    fn current(&self) -> &WeightStack {
        &self.x
    }

    fn take_audit(&mut self) -> (Vec<super::CocainRecord>, Vec<DescentRecord>) {
        (Vec::new(), self.audit.take().unwrap_or_default())
    }
}
