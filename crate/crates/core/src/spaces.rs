//! Singular vector spaces: linear subspaces of `ℝ^{n×n}` whose elements are
//! all singular.
//!
//! Three families are represented:
//! - `S_v = {B : Bv = 0}` (right kernel),
//! - `S*_u = {B : Bᵀu = 0}` (left kernel),
//! - block spaces `{B : (UᵀBV)_{I,J} = 0}` for orthogonal `U`, `V` and index
//!   sets with `|I| + |J| = n + 1`.
//!
//! Every element of a block space has rank at most `n − 1`, and the kernel
//! spaces are the special cases `|I| = 1` (left) and `|J| = 1` (right).

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::numerics::SvdResult;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub enum SingularSpace<T> {
    /// Matrices with `v` in the right kernel.
    RightKernel { v: DVector<T> },
    /// Matrices with `u` in the left kernel.
    LeftKernel { u: DVector<T> },
    /// Matrices whose `(I, J)` block in the `(U, V)` coordinates vanishes.
    /// Indices are zero-based and sorted.
    Block {
        u: DMatrix<T>,
        v: DMatrix<T>,
        rows: Vec<usize>,
        cols: Vec<usize>,
    },
}

impl<T: Scalar> SingularSpace<T> {
    pub fn order(&self) -> usize {
        match self {
            SingularSpace::RightKernel { v } => v.len(),
            SingularSpace::LeftKernel { u } => u.len(),
            SingularSpace::Block { u, .. } => u.nrows(),
        }
    }

    pub fn is_kernel(&self) -> bool {
        !matches!(self, SingularSpace::Block { .. })
    }

    pub fn variant_name(&self) -> &'static str {
        match self {
            SingularSpace::RightKernel { .. } => "right-kernel",
            SingularSpace::LeftKernel { .. } => "left-kernel",
            SingularSpace::Block { .. } => "block",
        }
    }

    /// Dimension as a linear space: `n² − n` for kernels, `n² − |I||J|` for
    /// blocks. Never exceeds `n(n − 1)`.
    pub fn dimension(&self) -> usize {
        let n = self.order();
        match self {
            SingularSpace::Block { rows, cols, .. } => n * n - rows.len() * cols.len(),
            _ => n * n - n,
        }
    }

    /// `(U_I, V_J)` for block spaces.
    fn block_factors(u: &DMatrix<T>, v: &DMatrix<T>, rows: &[usize], cols: &[usize]) -> (DMatrix<T>, DMatrix<T>) {
        (u.select_columns(rows), v.select_columns(cols))
    }

    /// Orthogonal projection of `d` onto the orthogonal complement of the
    /// space, and its Frobenius norm. `d − P` always lies in the space.
    pub fn project_complement(&self, d: &DMatrix<T>) -> Result<(DMatrix<T>, T)> {
        let n = self.order();
        if d.nrows() != n || d.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: if d.nrows() != n { d.nrows() } else { d.ncols() },
                context: "projected matrix order",
            });
        }
        Ok(match self {
            SingularSpace::RightKernel { v } => {
                let dv = d * v;
                let norm = dv.norm();
                (dv * v.transpose(), norm)
            }
            SingularSpace::LeftKernel { u } => {
                let ud = d.tr_mul(u);
                let norm = ud.norm();
                (u * ud.transpose(), norm)
            }
            SingularSpace::Block { u, v, rows, cols } => {
                let (ui, vj) = Self::block_factors(u, v, rows, cols);
                let w = ui.tr_mul(d) * &vj;
                let norm = w.norm();
                (&ui * w * vj.transpose(), norm)
            }
        })
    }

    /// Frobenius distance from `d` to the space.
    pub fn distance(&self, d: &DMatrix<T>) -> Result<T> {
        Ok(self.project_complement(d)?.1)
    }

    /// Whether the two spaces coincide: same variant and aligned defining
    /// vectors or subspaces, `|⟨a, b⟩| > 1 − tol`.
    pub fn coincides(&self, other: &Self, tol: T) -> bool {
        match (self, other) {
            (SingularSpace::RightKernel { v: a }, SingularSpace::RightKernel { v: b })
            | (SingularSpace::LeftKernel { u: a }, SingularSpace::LeftKernel { u: b }) => {
                a.dot(b).abs() > T::one() - tol
            }
            (
                SingularSpace::Block { u: u1, v: v1, rows: r1, cols: c1 },
                SingularSpace::Block { u: u2, v: v2, rows: r2, cols: c2 },
            ) => {
                if r1.len() != r2.len() || c1.len() != c2.len() {
                    return false;
                }
                let aligned = |a: &DMatrix<T>, b: &DMatrix<T>| {
                    let s = (a.tr_mul(b)).singular_values();
                    s.iter().all(|&x| x > T::one() - tol)
                };
                aligned(&u1.select_columns(r1), &u2.select_columns(r2))
                    && aligned(&v1.select_columns(c1), &v2.select_columns(c2))
            }
            _ => false,
        }
    }

    /// Pseudo-random element with standard-normal coordinates in an
    /// orthonormal basis of the space.
    pub fn sample_element(&self, seed: u64) -> DMatrix<T> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_with(&mut rng)
    }

    pub fn sample_with<R: Rng>(&self, rng: &mut R) -> DMatrix<T> {
        let n = self.order();
        let mut gauss = || T::lit(rng.sample::<f64, _>(StandardNormal));
        match self {
            SingularSpace::RightKernel { v } => {
                let g = DMatrix::from_fn(n, n, |_, _| gauss());
                let gv = &g * v;
                g - gv * v.transpose()
            }
            SingularSpace::LeftKernel { u } => {
                let g = DMatrix::from_fn(n, n, |_, _| gauss());
                let ug = g.tr_mul(u);
                g - u * ug.transpose()
            }
            SingularSpace::Block { u, v, rows, cols } => {
                let mut e = DMatrix::from_fn(n, n, |_, _| gauss());
                for &i in rows {
                    for &j in cols {
                        e[(i, j)] = T::zero();
                    }
                }
                u * e * v.transpose()
            }
        }
    }
}

/// Right-kernel space of the smallest right singular vector. Its distance to
/// the decomposed matrix is `σ_min`, the global minimum over all singular
/// vector spaces.
pub fn from_svd_right<T: Scalar>(svd: &SvdResult<T>) -> SingularSpace<T> {
    SingularSpace::RightKernel { v: svd.smallest_triplet().v }
}

/// Left-kernel space of the smallest left singular vector.
pub fn from_svd_left<T: Scalar>(svd: &SvdResult<T>) -> SingularSpace<T> {
    SingularSpace::LeftKernel { u: svd.smallest_triplet().u }
}

/// Block space with `I = {n−|I|+1, …, n}` and `J = {1, …, |J|−1} ∪ {n}`
/// (one-based), so that `Σ_{I,J}` holds `σ_min` as its only possibly nonzero
/// entry.
pub fn from_svd_block<T: Scalar>(svd: &SvdResult<T>, size_i: usize, size_j: usize) -> Result<SingularSpace<T>> {
    let n = svd.order();
    if size_i == 0 || size_j == 0 || size_i + size_j != n + 1 {
        return Err(Error::InvalidBlockSizes { rows: size_i, cols: size_j, n });
    }
    let rows: Vec<usize> = (n - size_i..n).collect();
    let mut cols: Vec<usize> = (0..size_j - 1).collect();
    cols.push(n - 1);
    Ok(SingularSpace::Block { u: svd.u.clone(), v: svd.v.clone(), rows, cols })
}

/// Maximal number of pattern cells hit by a single permutation, which equals
/// the maximal rank over the span of `{e_{i,j}}` on the pattern. Enumerates
/// permutations, so `n ≤ 10`.
pub fn pattern_max_rank(pattern: &[(usize, usize)], n: usize) -> Result<usize> {
    if n > 10 {
        return Err(Error::OrderTooLarge(n));
    }
    if let Some(&(row, col)) = pattern.iter().find(|&&(i, j)| i >= n || j >= n) {
        return Err(Error::PatternOutOfRange { row, col, n });
    }
    let mut cells = vec![vec![false; n]; n];
    for &(i, j) in pattern {
        cells[i][j] = true;
    }

    fn search(row: usize, hits: usize, used: &mut [bool], cells: &[Vec<bool>], best: &mut usize) {
        let n = cells.len();
        if hits + (n - row) <= *best {
            return;
        }
        if row == n {
            *best = hits;
            return;
        }
        for col in 0..n {
            if !used[col] {
                used[col] = true;
                search(row + 1, hits + cells[row][col] as usize, used, cells, best);
                used[col] = false;
            }
        }
    }

    let mut best = 0;
    search(0, 0, &mut vec![false; n], &cells, &mut best);
    Ok(best)
}
