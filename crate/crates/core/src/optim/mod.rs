//! Optimizers and the shared run loop.
//!
//! Every algorithm is a [`Stepper`]: it owns its iterate and produces one
//! [`StepRecord`] per iteration. [`run`] drives any stepper, times it, builds
//! the [`RunTrace`], and stops at `max_iters`, at a small gradient map, or when
//! the iterate stops being finite.

mod baselines;
mod bpg;
mod cocain;
pub mod inertia;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::kernel::BregmanKernel;
use crate::model::{Dataset, Regularizer};
use crate::stack::WeightStack;

pub use baselines::{audit_descent_lemma, spectral_norm_sq, DescentAudit, DescentRecord};
pub use cocain::{audit_cocain, CocainAudit, CocainRecord};
pub use inertia::{closed_form_gamma, closed_form_gamma_n2};

/// The nine benchmarked algorithm variants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Algorithm {
    Bpg,
    BpgWb,
    Cocain,
    CocainCfi,
    Palm,
    /// iPALM with inertia `β`.
    Ipalm(f64),
    FbsWb,
    /// iPiano with backtracking and inertia `β`.
    IpianoWb(f64),
}

impl Algorithm {
    /// The default benchmark set, in reporting order.
    pub fn all() -> Vec<Algorithm> {
        vec![
            Algorithm::Bpg,
            Algorithm::BpgWb,
            Algorithm::Cocain,
            Algorithm::CocainCfi,
            Algorithm::Palm,
            Algorithm::Ipalm(0.2),
            Algorithm::Ipalm(0.4),
            Algorithm::FbsWb,
            Algorithm::IpianoWb(DEFAULT_IPIANO_BETA),
        ]
    }

    pub fn tag(&self) -> String {
        match self {
            Algorithm::Bpg => "bpg".into(),
            Algorithm::BpgWb => "bpg-wb".into(),
            Algorithm::Cocain => "cocain".into(),
            Algorithm::CocainCfi => "cocain-cfi".into(),
            Algorithm::Palm => "palm".into(),
            Algorithm::Ipalm(b) => format!("ipalm-{b}"),
            Algorithm::FbsWb => "fbs-wb".into(),
            Algorithm::IpianoWb(b) if *b == DEFAULT_IPIANO_BETA => "ipiano-wb".into(),
            Algorithm::IpianoWb(b) => format!("ipiano-wb-{b}"),
        }
    }

    pub fn uses_kernel(&self) -> bool {
        matches!(
            self,
            Algorithm::Bpg | Algorithm::BpgWb | Algorithm::Cocain | Algorithm::CocainCfi
        )
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.tag())
    }
}

fn parse_beta(s: &str, tag: &str) -> Result<f64> {
    let beta: f64 = s
        .parse()
        .map_err(|_| Error::Config(format!("bad inertia in algorithm tag {tag:?}")))?;
    if (0.0..1.0).contains(&beta) {
        Ok(beta)
    } else {
        Err(Error::Config(format!("inertia must lie in [0, 1) in {tag:?}")))
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let tag = s.trim().to_ascii_lowercase();
        Ok(match tag.as_str() {
            "bpg" => Algorithm::Bpg,
            "bpg-wb" => Algorithm::BpgWb,
            "cocain" => Algorithm::Cocain,
            "cocain-cfi" => Algorithm::CocainCfi,
            "palm" => Algorithm::Palm,
            "fbs-wb" => Algorithm::FbsWb,
            "ipiano-wb" => Algorithm::IpianoWb(DEFAULT_IPIANO_BETA),
            other => {
                if let Some(b) = other.strip_prefix("ipalm-") {
                    Algorithm::Ipalm(parse_beta(b, s)?)
                } else if let Some(b) = other.strip_prefix("ipiano-wb-") {
                    Algorithm::IpianoWb(parse_beta(b, s)?)
                } else {
                    return Err(Error::Config(format!("unknown algorithm tag {s:?}")));
                }
            }
        })
    }
}

pub const DEFAULT_IPIANO_BETA: f64 = 0.4;

/// Tuning shared by all algorithms; each one reads the fields it needs.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    /// BPG step size `λ`; `λ < 1` because the kernels have `L = 1`.
    pub step: f64,
    pub max_iters: usize,
    /// CoCaIn constants, `1 > δ > ε > 0`.
    pub delta: f64,
    pub epsilon: f64,
    /// Initial upper relative-smoothness estimate `L̄_0`.
    pub l_bar0: f64,
    /// Smallest lower estimate `L̲` CoCaIn will report.
    pub l_under_min: f64,
    /// Backtracking factor `ν > 1`.
    pub nu: f64,
    /// Initial Lipschitz estimate for FBS-WB / iPiano-WB.
    pub lipschitz0: f64,
    /// Stop once the gradient-map norm is at most this (0 runs all iterations
    /// unless an exact fixed point is reached).
    pub tolerance: f64,
    /// Keep per-iteration iterates so the accepted inequalities can be
    /// audited after the run.
    pub record_audit: bool,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            step: 0.99,
            max_iters: 1000,
            delta: 0.99,
            epsilon: 0.001,
            l_bar0: 1.0,
            l_under_min: 1e-6,
            nu: 2.0,
            lipschitz0: 1.0,
            tolerance: 0.0,
            record_audit: false,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if !(self.step > 0.0 && self.step < 1.0) {
            return fail(format!("BPG step must lie in (0, 1), got {}", self.step));
        }
        if !(self.epsilon > 0.0 && self.delta > self.epsilon && self.delta < 1.0) {
            return fail(format!(
                "need 1 > delta > epsilon > 0, got delta={} epsilon={}",
                self.delta, self.epsilon
            ));
        }
        if !(self.l_bar0 > 0.0) || !(self.l_under_min > 0.0) || !(self.lipschitz0 > 0.0) {
            return fail("initial smoothness estimates must be positive".into());
        }
        if !(self.nu > 1.0) {
            return fail(format!("backtracking factor must exceed 1, got {}", self.nu));
        }
        if !(self.tolerance >= 0.0) {
            return fail(format!("tolerance must be non-negative, got {}", self.tolerance));
        }
        Ok(())
    }
}

/// One row of a run trace. `None` marks a column the algorithm does not use.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub iter: usize,
    pub objective: f64,
    /// Filled in by whoever knows the best objective over a set of runs.
    pub rel_objective: Option<f64>,
    pub elapsed_s: f64,
    pub gamma: Option<f64>,
    pub l_bar: Option<f64>,
    pub l_under: Option<f64>,
    pub backtracks: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunTrace {
    pub rows: Vec<TraceRow>,
    pub warnings: Vec<String>,
    /// Number of evaluations of `g` (with or without its gradient).
    pub objective_evals: usize,
    /// Number of Bregman-distance evaluations.
    pub distance_evals: usize,
}

impl RunTrace {
    pub fn final_objective(&self) -> Option<f64> {
        self.rows.last().map(|r| r.objective)
    }

    pub fn min_objective(&self) -> Option<f64> {
        self.rows.iter().map(|r| r.objective).reduce(f64::min)
    }
}

/// Everything a run produces.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub algorithm: Algorithm,
    pub trace: RunTrace,
    /// Last finite iterate.
    pub weights: WeightStack,
    /// Gradient-map norm of the last accepted step.
    pub final_gradient_map: Option<f64>,
    /// Set when the run stopped early on a numeric failure.
    pub aborted: Option<Error>,
    pub cocain_audit: Vec<CocainRecord>,
    pub descent_audit: Vec<DescentRecord>,
}

/// What one iteration reports back to the run loop.
#[derive(Debug, Clone, Default)]
pub(crate) struct StepRecord {
    pub objective: f64,
    pub gamma: Option<f64>,
    pub l_bar: Option<f64>,
    pub l_under: Option<f64>,
    pub backtracks: Option<usize>,
    pub gradient_map: f64,
}

#[derive(Debug, Default)]
pub(crate) struct Counters {
    pub objective_evals: usize,
    pub distance_evals: usize,
    pub warnings: Vec<String>,
}

pub(crate) trait Stepper {
    fn step(&mut self, counters: &mut Counters) -> Result<StepRecord>;
    fn current(&self) -> &WeightStack;
    fn take_audit(&mut self) -> (Vec<CocainRecord>, Vec<DescentRecord>) {
        (Vec::new(), Vec::new())
    }
}

/// Inputs shared by every run.
#[derive(Debug, Clone, Copy)]
pub struct Problem<'a> {
    pub data: &'a Dataset,
    pub reg: &'a Regularizer,
    pub kernel: &'a BregmanKernel,
}

impl<'a> Problem<'a> {
    pub fn new(data: &'a Dataset, reg: &'a Regularizer, kernel: &'a BregmanKernel) -> Self {
        Self { data, reg, kernel }
    }

    fn validate(&self, w0: &WeightStack) -> Result<()> {
        self.data.check_stack(w0)?;
        self.reg.validate(w0.num_layers())?;
        if self.kernel.layers() != w0.num_layers() {
            return Err(Error::Config(format!(
                "kernel built for {} layers, network has {}",
                self.kernel.layers(),
                w0.num_layers()
            )));
        }
        Ok(())
    }
}

/// Runs `algorithm` from `w0`.
///
/// Configuration and shape problems are returned as errors before the first
/// iteration; numeric failures during the run end it early and are reported
/// in [`RunResult::aborted`] together with the partial trace.
pub fn run(
    algorithm: Algorithm,
    problem: Problem<'_>,
    w0: &WeightStack,
    cfg: &OptimizerConfig,
) -> Result<RunResult> {
    cfg.validate()?;
    problem.validate(w0)?;
    let mut stepper: Box<dyn Stepper + '_> = match algorithm {
        Algorithm::Bpg => Box::new(bpg::Bpg::new(problem, w0, cfg)),
        Algorithm::BpgWb => Box::new(cocain::Cocain::new(problem, w0, cfg, cocain::InertiaMode::None)?),
        Algorithm::Cocain => {
            Box::new(cocain::Cocain::new(problem, w0, cfg, cocain::InertiaMode::Backtracking)?)
        }
        Algorithm::CocainCfi => {
            Box::new(cocain::Cocain::new(problem, w0, cfg, cocain::InertiaMode::ClosedForm)?)
        }
        Algorithm::Palm => Box::new(baselines::Palm::new(problem, w0, 0.0)),
        Algorithm::Ipalm(beta) => Box::new(baselines::Palm::new(problem, w0, beta)),
        Algorithm::FbsWb => Box::new(baselines::Ipiano::new(problem, w0, cfg, 0.0)?),
        Algorithm::IpianoWb(beta) => Box::new(baselines::Ipiano::new(problem, w0, cfg, beta)?),
    };

    let mut counters = Counters::default();
    let mut rows = Vec::with_capacity(cfg.max_iters);
    let mut aborted = None;
    let mut final_gradient_map = None;
    let mut last_good = w0.clone();
    let start = Instant::now();

    for iter in 1..=cfg.max_iters {
        let record = match stepper.step(&mut counters) {
            Ok(r) => r,
            Err(e) => {
                counters.warnings.push(format!("iteration {iter}: {e}"));
                aborted = Some(e);
                break;
            }
        };
        if !record.objective.is_finite() || !stepper.current().is_finite() {
            let e = Error::Numeric(format!(
                "non-finite iterate at iteration {iter} (objective {})",
                record.objective
            ));
            counters.warnings.push(e.to_string());
            aborted = Some(e);
            break;
        }
        last_good.clone_from(stepper.current());
        final_gradient_map = Some(record.gradient_map);
        rows.push(TraceRow {
            iter,
            objective: record.objective,
            rel_objective: None,
            elapsed_s: start.elapsed().as_secs_f64(),
            gamma: record.gamma,
            l_bar: record.l_bar,
            l_under: record.l_under,
            backtracks: record.backtracks,
        });
        if record.gradient_map <= cfg.tolerance {
            break;
        }
    }

    let (cocain_audit, descent_audit) = stepper.take_audit();
    for w in &counters.warnings {
        log::warn!("{algorithm}: {w}");
    }
    Ok(RunResult {
        algorithm,
        trace: RunTrace {
            rows,
            warnings: counters.warnings,
            objective_evals: counters.objective_evals,
            distance_evals: counters.distance_evals,
        },
        weights: last_good,
        final_gradient_map,
        aborted,
        cocain_audit,
        descent_audit,
    })
}
