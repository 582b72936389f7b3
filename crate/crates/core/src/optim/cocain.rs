//! CoCaIn BPG and its variants.
//!
//! One iteration: choose the inertia `γ` and extrapolate `y = x + γ(x − x_prev)`,
//! estimate the lower curvature `L̲` at `(x, y)`, then backtrack the upper
//! estimate `L̄` until the majorization at `y` holds for `x⁺ = T_τ(y)`,
//! `τ = min(τ_prev, 1/L̄)`.
//!
//! The inertia must satisfy
//! `(δ − ε)·D_h(x_prev, x) ≥ (1 + L̲·τ_prev)·D_h(x, y)`.
//! It is either backtracked from 1 by halving, set from the closed-form
//! bound, or switched off entirely (BPG-WB).

use super::inertia;
use super::{Counters, OptimizerConfig, Problem, StepRecord, Stepper};
use crate::error::{Error, Result};
use crate::kernel::BregmanKernel;
use crate::model::{self, Dataset};
use crate::prox;
use crate::stack::WeightStack;

const GAMMA_FLOOR: f64 = 1e-12;
/// Relative margin added to the lower estimate so it passes re-checks.
const L_UNDER_MARGIN: f64 = 1e-8;
const MAX_BACKTRACKS: usize = 200;
const MAX_CLOSED_FORM_ROUNDS: usize = 4;

/// Rounding allowance for an inequality between sums of the given magnitudes.
pub(crate) fn roundoff(terms: &[f64]) -> f64 {
    8.0 * f64::EPSILON * terms.iter().map(|t| t.abs()).sum::<f64>()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum InertiaMode {
    None,
    Backtracking,
    ClosedForm,
}

/// Iterates of one accepted CoCaIn iteration, kept for post-hoc audits.
#[derive(Debug, Clone)]
pub struct CocainRecord {
    pub x_prev: WeightStack,
    pub x: WeightStack,
    pub y: WeightStack,
    pub x_next: WeightStack,
    pub gamma: f64,
    pub l_under: f64,
    pub l_bar: f64,
    pub tau_prev: f64,
    pub tau: f64,
}

/// Smallest slacks found when re-checking a run's accepted inequalities.
/// Non-negative slack means the inequality holds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CocainAudit {
    pub iterations: usize,
    pub min_upper_slack: f64,
    pub min_lower_slack: f64,
    pub min_inertia_slack: f64,
}

/// Re-checks every recorded iteration from scratch: the upper and lower
/// relative-smoothness inequalities at `y` and the inertia condition.
///
/// Losses and gradients are recomputed from the stored iterates; nothing
/// cached during the run is reused.
pub fn audit_cocain(
    records: &[CocainRecord],
    data: &Dataset,
    kernel: &BregmanKernel,
    delta: f64,
    epsilon: f64,
) -> Result<CocainAudit> {
    let mut audit = CocainAudit {
        iterations: records.len(),
        min_upper_slack: f64::INFINITY,
        min_lower_slack: f64::INFINITY,
        min_inertia_slack: f64::INFINITY,
    };
    for r in records {
        let at_y = model::evaluate(&r.y, data)?;
        let g_next = model::loss(&r.x_next, data)?;
        let g_x = model::loss(&r.x, data)?;
        let upper = at_y.loss + at_y.gradient.dot(&r.x_next.sub(&r.y))
            + r.l_bar * kernel.bregman_distance(&r.x_next, &r.y)
            - g_next;
        let dh_xy = kernel.bregman_distance(&r.x, &r.y);
        let lower = g_x - at_y.loss - at_y.gradient.dot(&r.x.sub(&r.y)) + r.l_under * dh_xy;
        let inertia = (delta - epsilon) * kernel.bregman_distance(&r.x_prev, &r.x)
            - (1.0 + r.l_under * r.tau_prev) * dh_xy;
        audit.min_upper_slack = audit.min_upper_slack.min(upper);
        audit.min_lower_slack = audit.min_lower_slack.min(lower);
        audit.min_inertia_slack = audit.min_inertia_slack.min(inertia);
    }
    Ok(audit)
}

pub(crate) struct Cocain<'a> {
    problem: Problem<'a>,
    mode: InertiaMode,
    delta: f64,
    epsilon: f64,
    nu: f64,
    l_under_min: f64,
    x_prev: WeightStack,
    x: WeightStack,
    /// `g(x)`.
    loss_x: f64,
    l_bar: f64,
    l_under: f64,
    tau: f64,
    audit: Option<Vec<CocainRecord>>,
}

impl<'a> Cocain<'a> {
    pub fn new(
        problem: Problem<'a>,
        w0: &WeightStack,
        cfg: &OptimizerConfig,
        mode: InertiaMode,
    ) -> Result<Self> {
        let loss_x = model::loss(w0, problem.data)?;
        Ok(Self {
            problem,
            mode,
            delta: cfg.delta,
            epsilon: cfg.epsilon,
            nu: cfg.nu,
            l_under_min: cfg.l_under_min,
            x_prev: w0.clone(),
            x: w0.clone(),
            loss_x,
            l_bar: cfg.l_bar0,
            l_under: cfg.l_under_min,
            tau: 1.0 / cfg.l_bar0,
            audit: cfg.record_audit.then(Vec::new),
        })
    }

    /// Extrapolated point, its loss and gradient, the lower estimate there,
    /// and the slack of the inertia condition.
    fn trial(
        &self,
        gamma: f64,
        dh_prev: f64,
        counters: &mut Counters,
    ) -> Result<(WeightStack, model::Evaluation, f64, f64)> {
        let p = self.problem;
        let y = if gamma == 0.0 {
            self.x.clone()
        } else {
            self.x.add_scaled(gamma, &self.x.sub(&self.x_prev))
        };
        let at_y = model::evaluate(&y, p.data)?;
        counters.objective_evals += 1;
        if gamma == 0.0 {
            return Ok((y, at_y, self.l_under_min, (self.delta - self.epsilon) * dh_prev));
        }
        let dh_xy = p.kernel.bregman_distance(&self.x, &y);
        counters.distance_evals += 1;
        // g(x) ≥ g(y) + ⟨∇g(y), x − y⟩ − L̲·D_h(x, y)
        let lin = at_y.gradient.dot(&self.x.sub(&y));
        let dg = self.loss_x - at_y.loss - lin;
        // A deficit below rounding level is noise, not curvature.
        let deficit = (-dg - roundoff(&[self.loss_x, at_y.loss, lin])).max(0.0);
        let needed = if dh_xy > 0.0 { deficit / dh_xy * (1.0 + L_UNDER_MARGIN) } else { 0.0 };
        let l_under = needed.max(self.l_under_min);
        let slack = (self.delta - self.epsilon) * dh_prev - (1.0 + l_under * self.tau) * dh_xy;
        Ok((y, at_y, l_under, slack))
    }
}

impl Stepper for Cocain<'_> {
    fn step(&mut self, counters: &mut Counters) -> Result<StepRecord> {
        let p = self.problem;
        let moved = self.x.dist_sq(&self.x_prev) > 0.0;
        let dh_prev = if moved && self.mode != InertiaMode::None {
            counters.distance_evals += 1;
            p.kernel.bregman_distance(&self.x_prev, &self.x)
        } else {
            0.0
        };

        let (gamma, y, at_y, l_under) = match self.mode {
            _ if !moved || self.mode == InertiaMode::None => {
                let (y, e, l, _) = self.trial(0.0, dh_prev, counters)?;
                (0.0, y, e, l)
            }
            InertiaMode::None | InertiaMode::Backtracking => {
                let mut gamma = 1.0;
                loop {
                    let (y, e, l, slack) = self.trial(gamma, dh_prev, counters)?;
                    if slack >= 0.0 || gamma == 0.0 {
                        break (gamma, y, e, l);
                    }
                    gamma *= 0.5;
                    if gamma < GAMMA_FLOOR {
                        gamma = 0.0;
                    }
                }
            }
            InertiaMode::ClosedForm => {
                // γ is sized for the previous L̲, but the condition uses L̲ at the
                // new y. If that estimate grew, resize for it; L̲ = 1 is valid at
                // every y, so this settles within a couple of rounds.
                let mut l_guess = self.l_under;
                let mut rounds = 0;
                let (gamma, y, e, l, slack) = loop {
                    let kappa = (self.delta - self.epsilon) / (1.0 + l_guess * self.tau);
                    let gamma = inertia::best_gamma(&self.x_prev, &self.x, p.kernel, kappa)?;
                    counters.distance_evals += 1;
                    let (y, e, l, slack) = self.trial(gamma, dh_prev, counters)?;
                    rounds += 1;
                    if slack >= 0.0 || rounds == MAX_CLOSED_FORM_ROUNDS {
                        break (gamma, y, e, l, slack);
                    }
                    l_guess = l.max(l_guess).max(1.0) * (1.0 + L_UNDER_MARGIN);
                };
                if slack < 0.0 {
                    let msg = format!(
                        "closed-form inertia violated the inertia condition (slack {slack:e}, gamma {gamma:e})"
                    );
                    debug_assert!(slack >= -1e-10, "{msg}");
                    counters.warnings.push(msg);
                }
                (gamma, y, e, l)
            }
        };

        // Upper backtracking at y.
        let mut l_bar = self.l_bar;
        let mut backtracks = 0;
        let (x_next, loss_next, tau) = loop {
            let tau = self.tau.min(1.0 / l_bar);
            let cand = prox::bpg_step(&y, &at_y.gradient, p.kernel, p.reg, tau)?;
            let loss_next = model::loss(&cand, p.data)?;
            counters.objective_evals += 1;
            let dh = p.kernel.bregman_distance(&cand, &y);
            counters.distance_evals += 1;
            let lin = at_y.gradient.dot(&cand.sub(&y));
            let bound = at_y.loss + lin + l_bar * dh;
            if loss_next <= bound + roundoff(&[at_y.loss, lin, loss_next]) {
                break (cand, loss_next, tau);
            }
            if !loss_next.is_finite() {
                return Err(Error::Numeric(format!("non-finite loss during backtracking (L̄ = {l_bar})")));
            }
            backtracks += 1;
            if backtracks > MAX_BACKTRACKS {
                return Err(Error::Numeric(format!(
                    "upper backtracking did not terminate (L̄ = {l_bar:e})"
                )));
            }
            l_bar *= self.nu;
        };

        if let Some(log) = self.audit.as_mut() {
            log.push(CocainRecord {
                x_prev: self.x_prev.clone(),
                x: self.x.clone(),
                y: y.clone(),
                x_next: x_next.clone(),
                gamma,
                l_under,
                l_bar,
                tau_prev: self.tau,
                tau,
            });
        }

        let gradient_map = x_next.dist_sq(&self.x).sqrt() / tau;
        let objective = loss_next + p.reg.value(&x_next);
        self.x_prev = std::mem::replace(&mut self.x, x_next);
        self.loss_x = loss_next;
        self.l_bar = l_bar;
        self.l_under = l_under;
        self.tau = tau;

        let uses_lower = self.mode != InertiaMode::None;
        Ok(StepRecord {
            objective,
            gamma: Some(gamma),
            l_bar: Some(l_bar),
            l_under: uses_lower.then_some(l_under),
            backtracks: Some(backtracks),
            gradient_map,
        })
    }

    fn current(&self) -> &WeightStack {
        &self.x
    }

    fn take_audit(&mut self) -> (Vec<CocainRecord>, Vec<super::DescentRecord>) {
        (self.audit.take().unwrap_or_default(), Vec::new())
    }
}
