use super::{Counters, Problem, StepRecord, Stepper, OptimizerConfig};
use crate::error::Result;
use crate::model;
use crate::prox;
use crate::stack::WeightStack;

/// Fixed-step BPG: `x⁺ = T_λ(x)`.
pub(crate) struct Bpg<'a> {
    problem: Problem<'a>,
    step: f64,
    x: WeightStack,
}

impl<'a> Bpg<'a> {
    pub fn new(problem: Problem<'a>, w0: &WeightStack, cfg: &OptimizerConfig) -> Self {
        Self { problem, step: cfg.step, x: w0.clone() }
    }
}

impl Stepper for Bpg<'_> {
    fn step(&mut self, counters: &mut Counters) -> Result<StepRecord> {
        let p = self.problem;
        let grad = model::loss_gradient(&self.x, p.data)?;
        counters.objective_evals += 1;
        let next = prox::bpg_step(&self.x, &grad, p.kernel, p.reg, self.step)?;
        let objective = model::composite_objective(&next, p.data, p.reg)?;
        counters.objective_evals += 1;
        let gradient_map = next.dist_sq(&self.x).sqrt() / self.step;
        self.x = next;
        Ok(StepRecord { objective, gradient_map, ..Default::default() })
    }

    fn current(&self) -> &WeightStack {
        &self.x
    }
}
