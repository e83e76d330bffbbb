//! Random test instances: Toeplitz matrices with standard normal diagonals
//! and sparse matrices with Bernoulli patterns.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Bernoulli, StandardNormal};

use crate::error::{CliError, CliResult};

/// Toeplitz matrix whose `2n−1` diagonals are independent standard normal
/// draws, generated in the order of diagonal offsets `j − i = −(n−1), …, n−1`.
pub fn gen_toeplitz(n: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let diagonals: Vec<f64> = (0..2 * n - 1).map(|_| rng.sample(StandardNormal)).collect();
    DMatrix::from_fn(n, n, |i, j| diagonals[n - 1 + j - i])
}

/// Sparse matrix where every entry is nonzero with probability `p`,
/// independently, and nonzeros are standard normal. Returns the matrix and
/// its zero-based pattern in row-major order.
///
/// An empty pattern is redrawn on the next ChaCha stream of the same seed.
pub fn gen_sparse(n: usize, p: f64, seed: u64) -> CliResult<(DMatrix<f64>, Vec<(usize, usize)>)> {
    let coin = Bernoulli::new(p).map_err(|_| CliError::Config(format!("density must lie in (0, 1], got {p}")))?;
    if p <= 0.0 {
        return Err(CliError::Config(format!("density must lie in (0, 1], got {p}")));
    }
    for stream in 0u64.. {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let pattern: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter(|_| rng.sample(coin))
            .collect();
        if pattern.is_empty() {
            continue;
        }
        let mut m = DMatrix::zeros(n, n);
        for &(i, j) in &pattern {
            m[(i, j)] = rng.sample(StandardNormal);
        }
        return Ok((m, pattern));
    }
    unreachable!("some stream yields a nonempty pattern")
}
