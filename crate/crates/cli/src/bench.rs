//! Benchmark campaigns over random instance ensembles.
//!
//! The summary CSV has the columns `size, median_distance,
//! median_iterations, median_time_s`, one row per size. The raw records go
//! to a sibling file with `_raw` appended to the stem and the columns of
//! [`BenchRecord`] in declaration order.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use singvec::{solve, sparse_pattern_basis, toeplitz_basis, Instance, SolverConfig};

use crate::error::{CliError, CliResult};
use crate::generate::{gen_sparse, gen_toeplitz};
use crate::run_config::{BenchKind, BenchSpec};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRecord {
    pub n: usize,
    pub sample_index: usize,
    pub seed: u64,
    pub distance: f64,
    pub inner_iterations: usize,
    pub outer_iterations: usize,
    pub constraint_violation: f64,
    pub tol1: f64,
    pub converged: bool,
    pub wall_time_s: f64,
    pub strategy: String,
    pub algorithm: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchSummary {
    pub size: usize,
    pub median_distance: f64,
    pub median_iterations: f64,
    pub median_time_s: f64,
}

pub fn instance_for(kind: BenchKind, n: usize, density: f64, seed: u64) -> CliResult<Instance> {
    match kind {
        BenchKind::Toeplitz => Ok(Instance::new(gen_toeplitz(n, seed), toeplitz_basis(n))?),
        BenchKind::Sparse => {
            let (a, pattern) = gen_sparse(n, density, seed)?;
            Ok(Instance::new(a, sparse_pattern_basis(n, &pattern)?)?)
        }
    }
}

/// Solves every `(size, sample)` pair, possibly in parallel. Sample `k`
/// uses the seed `base_seed + k` at every size. Records come back sorted
/// by `(n, sample_index)`.
pub fn run_records(spec: &BenchSpec, solver: &SolverConfig) -> CliResult<Vec<BenchRecord>> {
    let jobs: Vec<(usize, usize)> = spec
        .sizes
        .iter()
        .flat_map(|&n| (0..spec.samples).map(move |k| (n, k)))
        .collect();
    let mut records = jobs
        .into_par_iter()
        .map(|(n, k)| {
            let seed = spec.base_seed + k as u64;
            let instance = instance_for(spec.kind, n, spec.density, seed)?;
            let cfg = SolverConfig { seed, ..solver.clone() };
            let r = solve(&instance, &cfg)?;
            Ok(BenchRecord {
                n,
                sample_index: k,
                seed,
                distance: r.distance,
                inner_iterations: r.inner_iterations,
                outer_iterations: r.outer_iterations,
                constraint_violation: r.constraint_violation,
                tol1: r.tol1,
                converged: r.converged,
                wall_time_s: r.wall_time,
                strategy: r.strategy.name().into(),
                algorithm: r.algorithm.name().into(),
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    records.sort_by_key(|r| (r.n, r.sample_index));
    Ok(records)
}

pub fn median(values: &mut [f64]) -> f64 {
    assert!(!values.is_empty(), "median of an empty sample");
    values.sort_by(f64::total_cmp);
    let m = values.len();
    if m % 2 == 1 {
        values[m / 2]
    } else {
        0.5 * (values[m / 2 - 1] + values[m / 2])
    }
}

pub fn summarize(records: &[BenchRecord]) -> Vec<BenchSummary> {
    let mut sizes: Vec<usize> = records.iter().map(|r| r.n).collect();
    sizes.dedup();
    sizes
        .into_iter()
        .map(|size| {
            let at: Vec<&BenchRecord> = records.iter().filter(|r| r.n == size).collect();
            let pick = |f: fn(&BenchRecord) -> f64| median(&mut at.iter().map(|r| f(r)).collect::<Vec<_>>());
            BenchSummary {
                size,
                median_distance: pick(|r| r.distance),
                median_iterations: pick(|r| r.inner_iterations as f64),
                median_time_s: pick(|r| r.wall_time_s),
            }
        })
        .collect()
}

pub fn raw_path(output: &Path) -> PathBuf {
    let stem = output.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let ext = output.extension().map(|e| format!(".{}", e.to_string_lossy())).unwrap_or_default();
    output.with_file_name(format!("{stem}_raw{ext}"))
}

fn write_rows<S: Serialize>(path: &Path, rows: &[S]) -> CliResult<()> {
    let csv_err = |source| CliError::Csv { path: path.to_path_buf(), source };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for row in rows {
        w.serialize(row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Runs the campaign and writes the summary and raw CSV files.
pub fn run_bench(spec: &BenchSpec, solver: &SolverConfig) -> CliResult<(Vec<BenchSummary>, Vec<BenchRecord>)> {
    let records = run_records(spec, solver)?;
    let summary = summarize(&records);
    write_rows(&spec.output, &summary)?;
    write_rows(&raw_path(&spec.output), &records)?;
    Ok((summary, records))
}
