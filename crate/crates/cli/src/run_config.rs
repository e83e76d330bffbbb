//! TOML run configuration.
//!
//! ```toml
//! matrix = "a.mtx"            # solve only; relative to this file
//! seed = 7
//!
//! [structure]
//! kind = "toeplitz"           # toeplitz | hankel | symmetric | full | sparse | custom
//! pattern = [[1, 1], [2, 2]]  # sparse: one-based (row, col); defaults to the nonzeros of the matrix
//! bases = ["b1.mtx"]          # custom: basis matrices, orthonormalized on load
//!
//! [solver]                    # every SolverConfig field, all optional
//! algorithm = "tikhonov"
//! strategy = "right"
//! decrease_k = 0.1
//!
//! [bench]
//! kind = "toeplitz"           # toeplitz | sparse
//! sizes = [100]
//! samples = 200
//! density = 0.4               # sparse only
//! base_seed = 1000
//! output = "bench.csv"
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::Deserialize;
use singvec::{
    full_basis, hankel_basis, orthonormalize, sparse_pattern_basis, symmetric_basis, toeplitz_basis, Algorithm, Basis,
    SolverConfig, Strategy,
};

use crate::error::{CliError, CliResult};
use crate::matrix_market::read_matrix;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub matrix: Option<PathBuf>,
    pub seed: Option<u64>,
    #[serde(default)]
    pub structure: StructureSpec,
    #[serde(default)]
    pub solver: SolverSection,
    pub bench: Option<BenchSection>,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureSpec {
    pub kind: String,
    pub pattern: Option<Vec<[usize; 2]>>,
    pub bases: Option<Vec<PathBuf>>,
}

impl Default for StructureSpec {
    fn default() -> Self {
        StructureSpec { kind: "full".into(), pattern: None, bases: None }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub algorithm: Option<String>,
    pub strategy: Option<String>,
    pub epsilon0: Option<f64>,
    pub decrease_k: Option<f64>,
    pub tol1: Option<f64>,
    pub tol2: Option<f64>,
    pub epsilon_min: Option<f64>,
    pub max_outer: Option<usize>,
    pub max_inner: Option<usize>,
    pub warm_start: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchKind {
    Toeplitz,
    Sparse,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchSection {
    #[serde(default = "default_bench_kind")]
    pub kind: String,
    pub sizes: Vec<usize>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_density")]
    pub density: f64,
    #[serde(default)]
    pub base_seed: u64,
    pub output: PathBuf,
}

fn default_bench_kind() -> String {
    "toeplitz".into()
}

fn default_samples() -> usize {
    40
}

fn default_density() -> f64 {
    0.4
}

/// Validated benchmark parameters.
#[derive(Debug, Clone)]
pub struct BenchSpec {
    pub kind: BenchKind,
    pub sizes: Vec<usize>,
    pub samples: usize,
    pub density: f64,
    pub base_seed: u64,
    pub output: PathBuf,
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> CliResult<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg = Self::parse(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// Solver defaults overridden by the `[solver]` section and the seed.
    pub fn solver_config(&self) -> CliResult<SolverConfig> {
        let s = &self.solver;
        let mut c = SolverConfig::default();
        if let Some(a) = &s.algorithm {
            c.algorithm = a.parse::<Algorithm>()?;
        }
        if let Some(st) = &s.strategy {
            c.strategy = st.parse::<Strategy>()?;
        }
        c.epsilon0 = s.epsilon0.or(c.epsilon0);
        c.decrease_k = s.decrease_k.unwrap_or(c.decrease_k);
        c.tol1 = s.tol1.or(c.tol1);
        c.tol2 = s.tol2.or(c.tol2);
        c.epsilon_min = s.epsilon_min.or(c.epsilon_min);
        c.max_outer = s.max_outer.unwrap_or(c.max_outer);
        c.max_inner = s.max_inner.unwrap_or(c.max_inner);
        c.warm_start = s.warm_start.unwrap_or(c.warm_start);
        c.seed = self.seed.unwrap_or(c.seed);
        c.validate()?;
        Ok(c)
    }

    /// Builds the structure basis for a matrix of order `n`. Sparse
    /// structures without an explicit pattern use the nonzeros of `a`.
    pub fn basis(&self, a: &DMatrix<f64>) -> CliResult<Basis> {
        let n = a.nrows();
        let spec = &self.structure;
        match spec.kind.to_ascii_lowercase().as_str() {
            "toeplitz" => Ok(toeplitz_basis(n)),
            "hankel" => Ok(hankel_basis(n)),
            "symmetric" => Ok(symmetric_basis(n)),
            "full" => Ok(full_basis(n)),
            "sparse" | "sparse-pattern" => {
                let pattern: Vec<(usize, usize)> = match &spec.pattern {
                    Some(p) => p
                        .iter()
                        .map(|&[i, j]| {
                            if i == 0 || j == 0 {
                                Err(CliError::Config(format!("pattern indices are one-based, got ({i}, {j})")))
                            } else {
                                Ok((i - 1, j - 1))
                            }
                        })
                        .collect::<CliResult<_>>()?,
                    None => (0..n)
                        .flat_map(|i| (0..n).map(move |j| (i, j)))
                        .filter(|&(i, j)| a[(i, j)] != 0.0)
                        .collect(),
                };
                Ok(sparse_pattern_basis(n, &pattern)?)
            }
            "custom" => {
                let files = spec
                    .bases
                    .as_ref()
                    .filter(|b| !b.is_empty())
                    .ok_or_else(|| CliError::Config("custom structure needs a nonempty `bases` list".into()))?;
                let mut raw = Vec::with_capacity(files.len());
                for f in files {
                    let path = self.resolve(f);
                    let m = read_matrix(&path)?;
                    if m.nrows() != n || m.ncols() != n {
                        return Err(CliError::Config(format!(
                            "{}: basis matrix is {}x{}, expected {n}x{n}",
                            path.display(),
                            m.nrows(),
                            m.ncols()
                        )));
                    }
                    raw.push(m);
                }
                let ortho = orthonormalize(&raw)?;
                for k in &ortho.discarded {
                    eprintln!("warning: basis matrix {} is linearly dependent on earlier ones and was dropped", files[*k].display());
                }
                Ok(ortho.basis)
            }
            other => Err(CliError::Config(format!("unknown structure kind `{other}`"))),
        }
    }

    pub fn bench_spec(&self) -> CliResult<BenchSpec> {
        let b = self.bench.as_ref().ok_or_else(|| CliError::Config("missing [bench] section".into()))?;
        let kind = match b.kind.to_ascii_lowercase().as_str() {
            "toeplitz" => BenchKind::Toeplitz,
            "sparse" => BenchKind::Sparse,
            other => return Err(CliError::Config(format!("unknown bench kind `{other}`"))),
        };
        if b.sizes.is_empty() || b.sizes.iter().any(|&n| n < 2) {
            return Err(CliError::Config("bench sizes must be a nonempty list of values >= 2".into()));
        }
        if b.samples == 0 {
            return Err(CliError::Config("bench samples must be at least 1".into()));
        }
        if !(b.density > 0.0 && b.density <= 1.0) {
            return Err(CliError::Config(format!("density must lie in (0, 1], got {}", b.density)));
        }
        Ok(BenchSpec {
            kind,
            sizes: b.sizes.clone(),
            samples: b.samples,
            density: b.density,
            base_seed: self.seed.unwrap_or(b.base_seed),
            output: self.resolve(&b.output),
        })
    }
}
