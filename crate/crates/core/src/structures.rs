//! Linear matrix structures represented by Frobenius-orthonormal bases.
//!
//! Every structure space `T ⊂ ℝ^{n×n}` is described by an orthonormal basis
//! `B⁽¹⁾, …, B⁽ᵖ⁾`. A perturbation in `T` is then a coefficient vector `δ ∈ ℝᵖ`
//! with `Δ = Σ δ_l B⁽ˡ⁾` and `‖Δ‖_F = ‖δ‖₂`.
//!
//! Basis elements are stored as sorted `(row, col, value)` entry lists. The
//! standard structures have very sparse elements (a Toeplitz element touches
//! one diagonal), so products like `B⁽ˡ⁾v` for all `l` cost `O(Σ nnz)` instead
//! of `O(p·n²)`. Dense views are available through [`StructuredBasis::element`].
//!
//! Element ordering is fixed:
//! - Toeplitz: diagonal offsets `d = j − i` from `−(n−1)` to `n−1`.
//! - Hankel: anti-diagonals `i + j` from `0` to `2n−2`.
//! - Symmetric: `e_{i,i}` for all `i`, then `(e_{i,j}+e_{j,i})/√2` for `i<j` row-major.
//! - Full and sparse-pattern: unit matrices in row-major order.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Which builder produced a basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StructureKind {
    Toeplitz,
    Hankel,
    Symmetric,
    SparsePattern,
    Full,
    Custom,
}

impl StructureKind {
    pub fn name(self) -> &'static str {
        match self {
            StructureKind::Toeplitz => "toeplitz",
            StructureKind::Hankel => "hankel",
            StructureKind::Symmetric => "symmetric",
            StructureKind::SparsePattern => "sparse",
            StructureKind::Full => "full",
            StructureKind::Custom => "custom",
        }
    }
}

/// One basis matrix as a row-major sorted list of nonzero entries.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisElement<T> {
    entries: Vec<(usize, usize, T)>,
}

impl<T: Scalar> BasisElement<T> {
    fn from_entries(mut entries: Vec<(usize, usize, T)>) -> Self {
        entries.sort_by_key(|&(i, j, _)| (i, j));
        Self { entries }
    }

    fn from_dense(m: &DMatrix<T>) -> Self {
        let mut entries = Vec::new();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let x = m[(i, j)];
                if x != T::zero() {
                    entries.push((i, j, x));
                }
            }
        }
        Self { entries }
    }

    pub fn entries(&self) -> &[(usize, usize, T)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    /// `⟨self, m⟩_F`.
    pub fn inner(&self, m: &DMatrix<T>) -> T {
        self.entries
            .iter()
            .fold(T::zero(), |acc, &(i, j, b)| acc + b * m[(i, j)])
    }
}

/// Frobenius-orthonormal basis of a structure space.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuredBasis<T> {
    n: usize,
    kind: StructureKind,
    elements: Vec<BasisElement<T>>,
    pattern: Option<Vec<(usize, usize)>>,
}

/// Result of [`orthonormalize`]: the basis plus the indices of inputs that
/// were linearly dependent on earlier ones and therefore dropped.
#[derive(Debug, Clone)]
pub struct Orthonormalized<T> {
    pub basis: StructuredBasis<T>,
    pub discarded: Vec<usize>,
}

impl<T: Scalar> StructuredBasis<T> {
    /// Matrix order `n`.
    pub fn order(&self) -> usize {
        self.n
    }

    /// Number of basis elements `p`.
    pub fn dim(&self) -> usize {
        self.elements.len()
    }

    pub fn kind(&self) -> StructureKind {
        self.kind
    }

    /// Zero-based `(row, col)` pattern, for sparse-pattern bases only.
    pub fn pattern(&self) -> Option<&[(usize, usize)]> {
        self.pattern.as_deref()
    }

    pub fn elements(&self) -> &[BasisElement<T>] {
        &self.elements
    }

    /// Dense copy of element `l`.
    pub fn element(&self, l: usize) -> DMatrix<T> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for &(i, j, b) in &self.elements[l].entries {
            m[(i, j)] = b;
        }
        m
    }

    /// Total number of stored nonzeros over all elements.
    pub fn nnz(&self) -> usize {
        self.elements.iter().map(BasisElement::nnz).sum()
    }

    /// `Σ_l δ_l B⁽ˡ⁾`.
    pub fn materialize(&self, delta: &DVector<T>) -> Result<DMatrix<T>> {
        self.check_coeffs(delta)?;
        let mut m = DMatrix::zeros(self.n, self.n);
        self.accumulate(delta, &mut m);
        Ok(m)
    }

    /// `base + Σ_l δ_l B⁽ˡ⁾`, reusing the allocation of `base`.
    pub fn add_materialized(&self, base: &DMatrix<T>, delta: &DVector<T>) -> Result<DMatrix<T>> {
        self.check_coeffs(delta)?;
        self.check_matrix(base)?;
        let mut m = base.clone();
        self.accumulate(delta, &mut m);
        Ok(m)
    }

    fn accumulate(&self, delta: &DVector<T>, m: &mut DMatrix<T>) {
        for (el, &d) in self.elements.iter().zip(delta.iter()) {
            if d == T::zero() {
                continue;
            }
            for &(i, j, b) in &el.entries {
                m[(i, j)] += b * d;
            }
        }
    }

    /// Orthogonal projection coefficients `α_l = ⟨B⁽ˡ⁾, A⟩_F` and the norm of
    /// the part of `A` outside the span.
    pub fn coefficients_of(&self, a: &DMatrix<T>) -> Result<(DVector<T>, T)> {
        self.check_matrix(a)?;
        let alpha = DVector::from_iterator(self.dim(), self.elements.iter().map(|e| e.inner(a)));
        let mut resid = a.clone();
        for (el, &c) in self.elements.iter().zip(alpha.iter()) {
            for &(i, j, b) in &el.entries {
                resid[(i, j)] -= b * c;
            }
        }
        Ok((alpha, resid.norm()))
    }

    /// Columns `B⁽ˡ⁾ x`, as an `n × p` matrix.
    pub fn apply_right(&self, x: &DVector<T>) -> DMatrix<T> {
        let mut out = DMatrix::zeros(self.n, self.dim());
        for (l, el) in self.elements.iter().enumerate() {
            for &(i, j, b) in &el.entries {
                out[(i, l)] += b * x[j];
            }
        }
        out
    }

    /// Columns `(B⁽ˡ⁾)ᵀ x`, as an `n × p` matrix.
    pub fn apply_left(&self, x: &DVector<T>) -> DMatrix<T> {
        let mut out = DMatrix::zeros(self.n, self.dim());
        for (l, el) in self.elements.iter().enumerate() {
            for &(i, j, b) in &el.entries {
                out[(j, l)] += b * x[i];
            }
        }
        out
    }

    /// Columns `vec(Xᵀ B⁽ˡ⁾ Y)` (column-major vectorization) for `n × a`
    /// and `n × b` matrices `X`, `Y`.
    pub fn apply_two_sided(&self, x: &DMatrix<T>, y: &DMatrix<T>) -> DMatrix<T> {
        let (a, b) = (x.ncols(), y.ncols());
        let mut out = DMatrix::zeros(a * b, self.dim());
        for (l, el) in self.elements.iter().enumerate() {
            for &(i, j, val) in &el.entries {
                for c in 0..b {
                    let w = val * y[(j, c)];
                    if w == T::zero() {
                        continue;
                    }
                    for r in 0..a {
                        out[(c * a + r, l)] += x[(i, r)] * w;
                    }
                }
            }
        }
        out
    }

    fn check_coeffs(&self, delta: &DVector<T>) -> Result<()> {
        if delta.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: delta.len(),
                context: "coefficient vector length",
            });
        }
        Ok(())
    }

    fn check_matrix(&self, a: &DMatrix<T>) -> Result<()> {
        if a.nrows() != self.n || a.ncols() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: if a.nrows() != self.n { a.nrows() } else { a.ncols() },
                context: "matrix order",
            });
        }
        Ok(())
    }
}

/// Modified Gram–Schmidt with one re-orthogonalization pass in the Frobenius
/// inner product. Inputs whose residual after projection falls below
/// `1e-12 · max_k ‖input_k‖_F` are dropped and listed in `discarded`.
pub fn orthonormalize<T: Scalar>(raw: &[DMatrix<T>]) -> Result<Orthonormalized<T>> {
    let first = raw.first().ok_or(Error::Empty("basis matrix list"))?;
    let n = first.nrows();
    if first.ncols() != n {
        return Err(Error::NotSquare { rows: first.nrows(), cols: first.ncols() });
    }
    for m in raw {
        if m.nrows() != n || m.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: if m.nrows() != n { m.nrows() } else { m.ncols() },
                context: "basis matrix order",
            });
        }
    }
    let largest = raw.iter().map(|m| m.norm()).fold(T::zero(), |a, b| a.max(b));
    let cutoff = T::tol(1e-12) * largest;

    let mut kept: Vec<DMatrix<T>> = Vec::new();
    let mut discarded = Vec::new();
    for (k, m) in raw.iter().enumerate() {
        let mut w = m.clone();
        for _pass in 0..2 {
            for q in &kept {
                let c = q.dot(&w);
                w -= q * c;
            }
        }
        let norm = w.norm();
        if norm <= cutoff || largest == T::zero() {
            discarded.push(k);
        } else {
            kept.push(w / norm);
        }
    }
    let elements = kept.iter().map(BasisElement::from_dense).collect();
    Ok(Orthonormalized {
        basis: StructuredBasis { n, kind: StructureKind::Custom, elements, pattern: None },
        discarded,
    })
}

/// Toeplitz structure: `2n−1` normalized diagonal indicators.
pub fn toeplitz_basis<T: Scalar>(n: usize) -> StructuredBasis<T> {
    assert!(n >= 1, "matrix order must be positive");
    let n_i = n as isize;
    let elements = (-(n_i - 1)..n_i)
        .map(|d| {
            let len = n - d.unsigned_abs();
            let s = T::one() / T::lit(len as f64).sqrt();
            let entries = (0..n)
                .filter_map(|i| {
                    let j = i as isize + d;
                    (0..n_i).contains(&j).then_some((i, j as usize, s))
                })
                .collect();
            BasisElement::from_entries(entries)
        })
        .collect();
    StructuredBasis { n, kind: StructureKind::Toeplitz, elements, pattern: None }
}

/// Hankel structure: `2n−1` normalized anti-diagonal indicators.
pub fn hankel_basis<T: Scalar>(n: usize) -> StructuredBasis<T> {
    assert!(n >= 1, "matrix order must be positive");
    let elements = (0..2 * n - 1)
        .map(|s| {
            let entries: Vec<_> = (0..n)
                .filter(|&i| s >= i && s - i < n)
                .map(|i| (i, s - i))
                .collect();
            let scale = T::one() / T::lit(entries.len() as f64).sqrt();
            BasisElement::from_entries(entries.into_iter().map(|(i, j)| (i, j, scale)).collect())
        })
        .collect();
    StructuredBasis { n, kind: StructureKind::Hankel, elements, pattern: None }
}

/// Symmetric structure: `n(n+1)/2` elements.
pub fn symmetric_basis<T: Scalar>(n: usize) -> StructuredBasis<T> {
    assert!(n >= 1, "matrix order must be positive");
    let mut elements: Vec<_> = (0..n)
        .map(|i| BasisElement::from_entries(vec![(i, i, T::one())]))
        .collect();
    let s = T::one() / T::lit(2.0).sqrt();
    for i in 0..n {
        for j in i + 1..n {
            elements.push(BasisElement::from_entries(vec![(i, j, s), (j, i, s)]));
        }
    }
    StructuredBasis { n, kind: StructureKind::Symmetric, elements, pattern: None }
}

/// Unstructured case: all `n²` unit matrices, row-major.
pub fn full_basis<T: Scalar>(n: usize) -> StructuredBasis<T> {
    assert!(n >= 1, "matrix order must be positive");
    let elements = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| BasisElement::from_entries(vec![(i, j, T::one())]))
        .collect();
    StructuredBasis { n, kind: StructureKind::Full, elements, pattern: None }
}

/// Matrices supported on a fixed set of zero-based positions. The pattern is
/// sorted row-major; element `l` is the unit matrix at the `l`-th position.
pub fn sparse_pattern_basis<T: Scalar>(
    n: usize,
    pattern: &[(usize, usize)],
) -> Result<StructuredBasis<T>> {
    if pattern.is_empty() {
        return Err(Error::Empty("sparsity pattern"));
    }
    let mut sorted = pattern.to_vec();
    sorted.sort_unstable();
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            return Err(Error::PatternDuplicate { row: w[0].0, col: w[0].1 });
        }
    }
    if let Some(&(row, col)) = sorted.iter().find(|&&(i, j)| i >= n || j >= n) {
        return Err(Error::PatternOutOfRange { row, col, n });
    }
    let elements = sorted
        .iter()
        .map(|&(i, j)| BasisElement::from_entries(vec![(i, j, T::one())]))
        .collect();
    Ok(StructuredBasis {
        n,
        kind: StructureKind::SparsePattern,
        elements,
        pattern: Some(sorted),
    })
}

/// A matrix `A` together with its structure basis and coefficients `α`.
#[derive(Debug, Clone)]
pub struct ProblemInstance<T> {
    a: DMatrix<T>,
    basis: StructuredBasis<T>,
    alpha: DVector<T>,
}

impl<T: Scalar> ProblemInstance<T> {
    /// Fails with [`Error::NotInStructure`] when
    /// `‖A − Σ α_l B⁽ˡ⁾‖_F > 1e-10 · max(1, ‖A‖_F)`.
    pub fn new(a: DMatrix<T>, basis: StructuredBasis<T>) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::NotSquare { rows: a.nrows(), cols: a.ncols() });
        }
        if a.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        let (alpha, residual) = basis.coefficients_of(&a)?;
        let tolerance = T::tol(1e-10) * T::one().max(a.norm());
        if residual > tolerance {
            return Err(Error::NotInStructure {
                residual: residual.as_f64(),
                tolerance: tolerance.as_f64(),
            });
        }
        Ok(Self { a, basis, alpha })
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.a
    }

    pub fn basis(&self) -> &StructuredBasis<T> {
        &self.basis
    }

    pub fn alpha(&self) -> &DVector<T> {
        &self.alpha
    }

    pub fn order(&self) -> usize {
        self.a.nrows()
    }
}
