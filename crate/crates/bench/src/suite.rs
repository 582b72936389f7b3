//! Runs every (algorithm, seed) pair of an experiment and writes the CSVs.

use std::path::{Path, PathBuf};

use bregman_dlnn::optim::{run, Problem};
use bregman_dlnn::{Algorithm, BregmanKernel, Dataset, RunResult, WeightStack};
use rayon::prelude::*;

use crate::config::{Experiment, ExperimentSpec};
use crate::data;
use crate::error::{BenchError, Result};
use crate::trace_io::{self, SummaryRow};

pub const SUMMARY_FILE: &str = "summary.csv";
pub const CONFIG_FILE: &str = "config.json";

#[derive(Debug)]
pub struct SuiteReport {
    pub summary: Vec<SummaryRow>,
    pub summary_file: PathBuf,
    pub trace_files: Vec<PathBuf>,
    /// One message per run that stopped on a numeric failure.
    pub failures: Vec<String>,
}

pub fn trace_file_name(alg: Algorithm, seed: u64) -> String {
    format!("trace_{}_seed{seed}.csv", alg.tag())
}

/// Creates `dir` and proves it is writable.
fn prepare_output(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))?;
    let probe = dir.join(".write-probe");
    std::fs::write(&probe, b"").map_err(|e| BenchError::io(&probe, e))?;
    std::fs::remove_file(&probe).map_err(|e| BenchError::io(&probe, e))
}

struct Instance {
    seed: u64,
    data: Dataset,
    kernel: BregmanKernel,
    w0: WeightStack,
}

fn build_instances(spec: &ExperimentSpec) -> Result<Vec<Instance>> {
    let custom = match spec.experiment {
        Experiment::Custom => {
            let (x, y) = (spec.x_csv.as_ref().unwrap(), spec.y_csv.as_ref().unwrap());
            Some(data::load_custom(x, y)?)
        }
        _ => None,
    };
    let rows = custom.as_ref().map(|d| (d.x().nrows(), d.y().nrows()));
    let dims = spec.layer_dims(rows)?;
    spec.seed_range()
        .map(|seed| {
            let data = match spec.experiment {
                Experiment::Exp1 => data::experiment1_data(seed, spec.samples)?,
                Experiment::Exp2 => data::experiment2_data(seed, spec.samples)?,
                Experiment::Custom => custom.clone().unwrap(),
            };
            let w0 = spec.init.build(&dims, seed)?;
            data.check_stack(&w0)?;
            let kernel = BregmanKernel::build(spec.layers, &data, spec.rho)?;
            Ok(Instance { seed, data, kernel, w0 })
        })
        .collect()
}

/// Runs the whole experiment.
///
/// Configuration and I/O problems surface before any optimization starts.
/// Runs that abort numerically still write their partial traces and are
/// listed in [`SuiteReport::failures`].
pub fn run_suite(spec: &ExperimentSpec) -> Result<SuiteReport> {
    spec.validate()?;
    let algorithms = spec.parsed_algorithms()?;
    prepare_output(&spec.out)?;
    let instances = build_instances(spec)?;
    let cfg = spec.optimizer_config();
    let reg = spec.reg.regularizer(spec.layers);

    let jobs: Vec<(usize, Algorithm)> = (0..instances.len())
        .flat_map(|i| algorithms.iter().map(move |a| (i, *a)))
        .collect();
    let results: Vec<bregman_dlnn::Result<RunResult>> = jobs
        .par_iter()
        .map(|&(i, alg)| {
            let inst = &instances[i];
            run(alg, Problem::new(&inst.data, &reg, &inst.kernel), &inst.w0, &cfg)
        })
        .collect();
    let mut results = results.into_iter().collect::<bregman_dlnn::Result<Vec<_>>>()?;

    let mut summary = Vec::with_capacity(results.len());
    let mut trace_files = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for (inst, chunk) in instances.iter().zip(results.chunks_mut(algorithms.len())) {
        // Relative objective against the best value any method reached on
        // this seed's problem.
        let best = chunk
            .iter()
            .filter_map(|r| r.trace.min_objective())
            .fold(f64::INFINITY, f64::min);
        for r in chunk.iter_mut() {
            for row in &mut r.trace.rows {
                row.rel_objective = Some(row.objective - best);
            }
            let path = spec.out.join(trace_file_name(r.algorithm, inst.seed));
            trace_io::write_trace(&path, &r.trace.rows)?;
            trace_files.push(path);
            let status = match &r.aborted {
                None => "ok".to_string(),
                Some(e) => {
                    failures.push(format!("{} seed {}: {e}", r.algorithm, inst.seed));
                    format!("aborted: {e}")
                }
            };
            let last = r.trace.rows.last();
            summary.push(SummaryRow {
                algorithm: r.algorithm.tag(),
                seed: inst.seed,
                final_objective: last.map_or(f64::NAN, |x| x.objective),
                rel_objective: last.and_then(|x| x.rel_objective).unwrap_or(f64::NAN),
                iterations: r.trace.rows.len(),
                elapsed_s: last.map_or(0.0, |x| x.elapsed_s),
                objective_evals: r.trace.objective_evals,
                distance_evals: r.trace.distance_evals,
                status,
            });
        }
    }
    let summary_file = spec.out.join(SUMMARY_FILE);
    trace_io::write_summary(&summary_file, &summary)?;
    let config_file = spec.out.join(CONFIG_FILE);
    std::fs::write(&config_file, spec.to_json()).map_err(|e| BenchError::io(&config_file, e))?;
    Ok(SuiteReport { summary, summary_file, trace_files, failures })
}
