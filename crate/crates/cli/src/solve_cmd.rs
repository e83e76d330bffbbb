//! The `solve` command: one instance from a run configuration, one JSON
//! record.

use serde::Serialize;
use singvec::{solve, Instance, Solution};

use crate::error::{CliError, CliResult};
use crate::matrix_market::read_matrix;
use crate::run_config::RunConfig;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveRecord {
    pub distance: f64,
    pub constraint_violation: f64,
    pub inner_iterations: usize,
    pub outer_iterations: usize,
    pub wall_time_s: f64,
    pub converged: bool,
    pub algorithm: String,
    pub strategy: String,
    pub stop: String,
}

impl From<&Solution> for SolveRecord {
    fn from(r: &Solution) -> Self {
        SolveRecord {
            distance: r.distance,
            constraint_violation: r.constraint_violation,
            inner_iterations: r.inner_iterations,
            outer_iterations: r.outer_iterations,
            wall_time_s: r.wall_time,
            converged: r.converged,
            algorithm: r.algorithm.name().into(),
            strategy: r.strategy.name().into(),
            stop: r.stop.name().into(),
        }
    }
}

/// Loads the matrix and structure named by `cfg` and solves. Input
/// problems come back as errors naming the offending file.
pub fn run_solve(cfg: &RunConfig) -> CliResult<SolveRecord> {
    let rel = cfg.matrix.as_ref().ok_or_else(|| CliError::Config("missing `matrix` path".into()))?;
    let path = cfg.resolve(rel);
    let a = read_matrix(&path)?;
    if a.nrows() != a.ncols() {
        return Err(CliError::Input {
            path,
            source: singvec::Error::NotSquare { rows: a.nrows(), cols: a.ncols() },
        });
    }
    if a.nrows() == 0 {
        return Err(CliError::Input { path, source: singvec::Error::Empty("matrix") });
    }
    let solver = cfg.solver_config()?;
    let basis = cfg.basis(&a)?;
    let instance = Instance::new(a, basis).map_err(|source| CliError::Input { path: path.clone(), source })?;
    let result = solve(&instance, &solver)?;
    Ok(SolveRecord::from(&result))
}
