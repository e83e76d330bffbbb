//! Least-squares subproblems over a fixed singular vector space.
//!
//! For a basis `{B⁽ˡ⁾}` and a space `S`, the perturbations `Δ = Σ δ_l B⁽ˡ⁾`
//! with `A + Δ ∈ S` are exactly the solutions of `Mδ = r`, where the columns
//! of `M` hold the basis elements projected onto `S⊥` and `r` holds
//! `−Proj_{S⊥}(A)`. Both are expressed in reduced coordinates whenever the
//! space allows it.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::numerics::minnorm_lstsq;
use crate::scalar::Scalar;
use crate::spaces::SingularSpace;
use crate::structures::StructuredBasis;

#[derive(Debug, Clone)]
pub struct LsqSystem<T> {
    matrix: DMatrix<T>,
    rhs: DVector<T>,
    space: SingularSpace<T>,
    shift: DVector<T>,
}

impl<T: Scalar> LsqSystem<T> {
    fn new(matrix: DMatrix<T>, rhs: DVector<T>, space: SingularSpace<T>) -> Self {
        let q = rhs.len();
        LsqSystem { matrix, rhs, space, shift: DVector::zeros(q) }
    }

    /// System matrix `M` (`q × p`).
    pub fn matrix(&self) -> &DMatrix<T> {
        &self.matrix
    }

    /// Unshifted right-hand side `r`.
    pub fn rhs(&self) -> &DVector<T> {
        &self.rhs
    }

    pub fn space(&self) -> &SingularSpace<T> {
        &self.space
    }

    /// `−ε·y` after [`LsqSystem::with_shift`], zero otherwise.
    pub fn shift(&self) -> &DVector<T> {
        &self.shift
    }

    /// `r + shift`, the right-hand side the Tikhonov solve actually uses.
    pub fn shifted_rhs(&self) -> DVector<T> {
        &self.rhs + &self.shift
    }

    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.ncols()
    }

    /// Same system with the right-hand side moved to `r − εy`, which turns the
    /// augmented Lagrangian term into a plain Tikhonov problem.
    pub fn with_shift(mut self, y: &DVector<T>, epsilon: T) -> Result<Self> {
        if y.len() != self.rows() {
            return Err(Error::DimensionMismatch {
                expected: self.rows(),
                found: y.len(),
                context: "dual vector length",
            });
        }
        self.shift = y * (-epsilon);
        Ok(self)
    }

    /// `Mδ − r` with the unshifted `r`.
    pub fn residual_vector(&self, delta: &DVector<T>) -> Result<DVector<T>> {
        if delta.len() != self.cols() {
            return Err(Error::DimensionMismatch {
                expected: self.cols(),
                found: delta.len(),
                context: "coefficient vector length",
            });
        }
        Ok(&self.matrix * delta - &self.rhs)
    }

    /// True when no column of `M` has more than one nonzero, which makes
    /// `MMᵀ` diagonal.
    fn one_nonzero_per_column(&self) -> bool {
        self.matrix
            .column_iter()
            .all(|c| c.iter().filter(|x| **x != T::zero()).count() <= 1)
    }
}

/// Reference system in full `n²` coordinates: columns
/// `vec(Proj_{S⊥} B⁽ˡ⁾)` and `r = −vec(Proj_{S⊥} A)`. Only meant for
/// cross-checking the reduced form on small problems.
pub fn assemble_full<T: Scalar>(
    basis: &StructuredBasis<T>,
    space: &SingularSpace<T>,
    a: &DMatrix<T>,
) -> Result<LsqSystem<T>> {
    check_orders(basis, space, a)?;
    let n = basis.order();
    let p = basis.dim();
    let mut m = DMatrix::zeros(n * n, p);
    for l in 0..p {
        let (proj, _) = space.project_complement(&basis.element(l))?;
        m.column_mut(l).copy_from_slice(proj.as_slice());
    }
    let (pa, _) = space.project_complement(a)?;
    let r = -DVector::from_column_slice(pa.as_slice());
    Ok(LsqSystem::new(m, r, space.clone()))
}

/// System in the smallest coordinates the space allows: `n` rows for the
/// kernel spaces and `|I||J|` rows for block spaces.
pub fn assemble_reduced<T: Scalar>(
    basis: &StructuredBasis<T>,
    space: &SingularSpace<T>,
    a: &DMatrix<T>,
) -> Result<LsqSystem<T>> {
    check_orders(basis, space, a)?;
    let (m, r) = match space {
        SingularSpace::RightKernel { v } => (basis.apply_right(v), -(a * v)),
        SingularSpace::LeftKernel { u } => (basis.apply_left(u), -a.tr_mul(u)),
        SingularSpace::Block { u, v, rows, cols } => {
            let ui = u.select_columns(rows);
            let vj = v.select_columns(cols);
            let w = ui.tr_mul(a) * &vj;
            let m = basis.apply_two_sided(&ui, &vj);
            (m, -DVector::from_column_slice(w.as_slice()))
        }
    };
    Ok(LsqSystem::new(m, r, space.clone()))
}

fn check_orders<T: Scalar>(basis: &StructuredBasis<T>, space: &SingularSpace<T>, a: &DMatrix<T>) -> Result<()> {
    let n = basis.order();
    for (found, context) in [
        (space.order(), "space order"),
        (a.nrows(), "matrix rows"),
        (a.ncols(), "matrix columns"),
    ] {
        if found != n {
            return Err(Error::DimensionMismatch { expected: n, found, context });
        }
    }
    Ok(())
}

/// Minimum-norm solution of `Mδ = r` and its residual `‖Mδ − r‖`.
pub fn solve_exact<T: Scalar>(sys: &LsqSystem<T>) -> Result<(DVector<T>, T)> {
    let r = sys.shifted_rhs();
    let delta = minnorm_lstsq(&sys.matrix, &r)?;
    let residual = (&sys.matrix * &delta - &r).norm();
    let tolerance = T::tol(1e-8) * (r.norm() + T::one());
    if residual > tolerance {
        return Err(Error::InconsistentSystem { residual: residual.as_f64(), tolerance: tolerance.as_f64() });
    }
    Ok((delta, residual))
}

/// Global minimizer of `‖δ‖² + (1/ε)‖Mδ − r‖²` (with `r` shifted if a dual
/// shift is present) and the minimum value `rᵀ(MMᵀ + εI)⁻¹r`.
pub fn solve_tikhonov<T: Scalar>(sys: &LsqSystem<T>, epsilon: T) -> Result<(DVector<T>, T)> {
    if !(epsilon > T::zero()) {
        return Err(Error::NonPositiveEpsilon(epsilon.as_f64()));
    }
    let m = &sys.matrix;
    let r = sys.shifted_rhs();
    let (q, p) = m.shape();

    if q <= p && sys.one_nonzero_per_column() {
        // MMᵀ is diagonal: only row sums of squares are needed.
        let mut diag = DVector::from_element(q, epsilon);
        for col in m.column_iter() {
            for (i, x) in col.iter().enumerate() {
                diag[i] += *x * *x;
            }
        }
        let z = r.component_div(&diag);
        let delta = m.tr_mul(&z);
        let value = r.dot(&z);
        return Ok((delta, value));
    }

    if q <= p {
        let mut k = m * m.transpose();
        for i in 0..q {
            k[(i, i)] += epsilon;
        }
        let chol = k.cholesky().ok_or(Error::Factorization("Cholesky of MMᵀ + εI"))?;
        let z = chol.solve(&r);
        let delta = m.tr_mul(&z);
        let value = r.dot(&z);
        Ok((delta, value))
    } else {
        let mut k = m.tr_mul(m);
        for i in 0..p {
            k[(i, i)] += epsilon;
        }
        let chol = k.cholesky().ok_or(Error::Factorization("Cholesky of MᵀM + εI"))?;
        let delta = chol.solve(&m.tr_mul(&r));
        // g at its minimizer equals rᵀ(MMᵀ + εI)⁻¹r; this form has no cancellation.
        let value = delta.norm_squared() + (m * &delta - &r).norm_squared() / epsilon;
        Ok((delta, value))
    }
}

/// `‖δ‖² + (1/ε)‖Mδ − r‖² + 2⟨y, Mδ − r⟩` with the unshifted `r`. `y = 0`
/// gives the plain Tikhonov objective.
pub fn eval_g<T: Scalar>(delta: &DVector<T>, sys: &LsqSystem<T>, epsilon: T, y: &DVector<T>) -> Result<T> {
    if !(epsilon > T::zero()) {
        return Err(Error::NonPositiveEpsilon(epsilon.as_f64()));
    }
    if y.len() != sys.rows() {
        return Err(Error::DimensionMismatch {
            expected: sys.rows(),
            found: y.len(),
            context: "dual vector length",
        });
    }
    let res = sys.residual_vector(delta)?;
    let two = T::lit(2.0);
    Ok(delta.norm_squared() + res.norm_squared() / epsilon + two * y.dot(&res))
}
