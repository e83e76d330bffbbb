//! Dense numerical kernels: sorted SVD, the smallest singular triplet,
//! minimum-norm least squares and the global minimizer of a quadratic on the
//! unit sphere.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Full singular value decomposition `C = U·diag(σ)·Vᵀ` with `σ` sorted in
/// nonincreasing order.
#[derive(Debug, Clone)]
pub struct SvdResult<T> {
    pub u: DMatrix<T>,
    pub sigma: DVector<T>,
    pub v: DMatrix<T>,
}

impl<T: Scalar> SvdResult<T> {
    pub fn order(&self) -> usize {
        self.sigma.len()
    }

    pub fn sigma_max(&self) -> T {
        self.sigma.get(0).copied().unwrap_or_else(T::zero)
    }

    pub fn sigma_min(&self) -> T {
        self.sigma.iter().last().copied().unwrap_or_else(T::zero)
    }

    /// `(u, σ_min, v)` taken from the last columns.
    pub fn smallest_triplet(&self) -> SingularTriplet<T> {
        let k = self.order() - 1;
        SingularTriplet {
            u: self.u.column(k).into_owned(),
            sigma: self.sigma[k],
            v: self.v.column(k).into_owned(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SingularTriplet<T> {
    pub u: DVector<T>,
    pub sigma: T,
    pub v: DVector<T>,
}

fn check_finite<T: Scalar>(c: &DMatrix<T>) -> Result<()> {
    if c.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

/// SVD of a square matrix, sorted descending.
pub fn svd<T: Scalar>(c: &DMatrix<T>) -> Result<SvdResult<T>> {
    if c.nrows() != c.ncols() {
        return Err(Error::NotSquare { rows: c.nrows(), cols: c.ncols() });
    }
    check_finite(c)?;
    let n = c.nrows();
    let (u, sigma, v) = thin_svd(c)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| sigma[b].partial_cmp(&sigma[a]).unwrap_or(std::cmp::Ordering::Equal));
    let sigma = DVector::from_iterator(n, order.iter().map(|&k| sigma[k]));
    let u = DMatrix::from_fn(n, n, |i, j| u[(i, order[j])]);
    let v = DMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    Ok(SvdResult { u, sigma, v })
}

/// Singular values of a rectangular matrix, sorted descending.
pub fn singular_values<T: Scalar>(m: &DMatrix<T>) -> Result<DVector<T>> {
    check_finite(m)?;
    if m.nrows() == 0 || m.ncols() == 0 {
        return Ok(DVector::zeros(0));
    }
    let (_, sigma, _) = thin_svd(m)?;
    let mut values: Vec<T> = sigma.iter().copied().collect();
    values.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    Ok(DVector::from_vec(values))
}

/// Unsorted thin SVD `M = U·diag(σ)·Vᵀ` with `min(q, p)` columns in `U`, `V`.
///
/// nalgebra's bidiagonal QR occasionally returns a wrong factorization for
/// exactly rank-deficient input, so the result is checked by reconstruction
/// and recomputed with one-sided Jacobi when the check fails.
fn thin_svd<T: Scalar>(m: &DMatrix<T>) -> Result<(DMatrix<T>, DVector<T>, DMatrix<T>)> {
    let (q, p) = m.shape();
    let dec = m.clone().svd(true, true);
    if let (Some(u), Some(v_t)) = (dec.u, dec.v_t) {
        let sigma = dec.singular_values;
        if sigma.iter().all(|x| x.is_finite()) {
            let mut us = u.clone();
            for (k, mut col) in us.column_iter_mut().enumerate() {
                col *= sigma[k];
            }
            let err = (&us * &v_t - m).norm();
            let tol = T::tol(1e-13) * T::lit(q.max(p) as f64) * m.norm();
            if err <= tol {
                return Ok((u, sigma, v_t.transpose()));
            }
        }
    }
    Ok(jacobi_svd(m))
}

/// One-sided Jacobi SVD (Hestenes). Slower than bidiagonalization but
/// unconditionally reliable.
fn jacobi_svd<T: Scalar>(a: &DMatrix<T>) -> (DMatrix<T>, DVector<T>, DMatrix<T>) {
    let (m, p) = a.shape();
    if m < p {
        let (u, s, v) = jacobi_svd(&a.transpose());
        return (v, s, u);
    }
    let mut w = a.clone();
    let mut v = DMatrix::<T>::identity(p, p);
    let two = T::lit(2.0);
    for _sweep in 0..80 {
        let mut rotated = false;
        for i in 0..p.saturating_sub(1) {
            for j in i + 1..p {
                let alpha = w.column(i).norm_squared();
                let beta = w.column(j).norm_squared();
                let gamma = w.column(i).dot(&w.column(j));
                if gamma == T::zero() || gamma.abs() <= T::eps() * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (two * gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                rotate_columns(&mut w, i, j, c, s);
                rotate_columns(&mut v, i, j, c, s);
            }
        }
        if !rotated {
            break;
        }
    }
    let sigma = DVector::from_iterator(p, w.column_iter().map(|c| c.norm()));
    let mut u = DMatrix::zeros(m, p);
    let mut missing = Vec::new();
    for k in 0..p {
        if sigma[k] > T::zero() {
            u.set_column(k, &(w.column(k) / sigma[k]));
        } else {
            missing.push(k);
        }
    }
    // complete U with unit vectors orthogonalized against the columns so far
    let mut candidate = 0;
    for k in missing {
        while candidate < m {
            let mut e = DVector::zeros(m);
            e[candidate] = T::one();
            candidate += 1;
            for _pass in 0..2 {
                for j in 0..p {
                    let c = u.column(j).dot(&e);
                    e -= u.column(j) * c;
                }
            }
            let norm = e.norm();
            if norm > T::lit(0.5) {
                u.set_column(k, &(e / norm));
                break;
            }
        }
    }
    (u, sigma, v)
}

fn rotate_columns<T: Scalar>(x: &mut DMatrix<T>, i: usize, j: usize, c: T, s: T) {
    for r in 0..x.nrows() {
        let xi = x[(r, i)];
        let xj = x[(r, j)];
        x[(r, i)] = c * xi - s * xj;
        x[(r, j)] = s * xi + c * xj;
    }
}

/// Smallest singular triplet `(u, σ_min, v)` with `Cv = σ_min·u`.
///
/// Computed from a full SVD; ties in `σ_min` resolve to the last singular
/// vector in the SVD ordering.
pub fn smallest_triplet<T: Scalar>(c: &DMatrix<T>) -> Result<SingularTriplet<T>> {
    Ok(svd(c)?.smallest_triplet())
}

/// Smallest singular triplet by inverse iteration from a nearby right
/// singular vector, typically the one from the previous iterate.
///
/// Each step solves with `Cᵀ` and then `C` through LU factorizations. The
/// result is accepted only once `‖Cᵀu − σv‖` reaches rounding level, so a
/// start with a poor gap or a singular `C` yields `None` and the caller
/// falls back to [`smallest_triplet`].
pub fn refine_smallest_triplet<T: Scalar>(c: &DMatrix<T>, start: &DVector<T>, max_steps: usize) -> Option<SingularTriplet<T>> {
    let n = c.nrows();
    if n == 0 || c.ncols() != n || start.len() != n {
        return None;
    }
    let norm = start.norm();
    if !(norm > T::zero()) {
        return None;
    }
    let lu = c.clone().lu();
    let lu_t = c.transpose().lu();
    let tol = T::lit(8.0) * T::eps() * T::lit(n as f64).sqrt() * c.norm();
    let mut v = start / norm;
    for _ in 0..max_steps {
        let w = lu_t.solve(&v)?;
        let u = &w / w.norm();
        let x = lu.solve(&u)?;
        let size = x.norm();
        if !size.is_finite() || size == T::zero() {
            return None;
        }
        let sigma = T::one() / size;
        v = x * sigma;
        let residual = (c.tr_mul(&u) - &v * sigma).norm();
        if !residual.is_finite() {
            return None;
        }
        if residual <= tol {
            return Some(SingularTriplet { u, sigma, v });
        }
    }
    None
}

/// Minimum-norm solution of `M δ = r` through the pseudoinverse, with
/// singular values below `eps · max(q, p) · σ_max` treated as zero.
pub fn minnorm_lstsq<T: Scalar>(m: &DMatrix<T>, r: &DVector<T>) -> Result<DVector<T>> {
    if m.nrows() != r.len() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            found: r.len(),
            context: "right-hand side length",
        });
    }
    check_finite(m)?;
    let p = m.ncols();
    if m.nrows() == 0 || p == 0 {
        return Ok(DVector::zeros(p));
    }
    let (u, sigma, v) = thin_svd(m)?;
    let smax = sigma.max();
    let cutoff = T::eps() * T::lit(m.nrows().max(p) as f64) * smax;
    let mut coeffs = u.tr_mul(r);
    for (k, c) in coeffs.iter_mut().enumerate() {
        let s = sigma[k];
        *c = if s > cutoff && s > T::zero() { *c / s } else { T::zero() };
    }
    Ok(v * coeffs)
}

/// Global minimizer of `q(v) = vᵀQv + 2bᵀv` over `‖v‖ = 1`.
#[derive(Debug, Clone)]
pub struct SphereMinimum<T> {
    pub v: DVector<T>,
    pub value: T,
    /// Multiplier `λ` of `(Q − λI)v = −b`; always `λ ≤ λ_min(Q)`.
    pub multiplier: T,
    /// True when `b` had no component along the bottom eigenspace and the
    /// solution needed an explicit bottom-eigenvector component.
    pub hard_case: bool,
}

/// Solves the equality-constrained trust-region subproblem for a symmetric
/// `Q` via its eigendecomposition.
pub fn sphere_quadratic_min<T: Scalar>(q: &DMatrix<T>, b: &DVector<T>) -> Result<SphereMinimum<T>> {
    let n = q.nrows();
    if q.ncols() != n {
        return Err(Error::NotSquare { rows: n, cols: q.ncols() });
    }
    if b.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: b.len(),
            context: "linear term length",
        });
    }
    check_finite(q)?;
    let asym = (q - q.transpose()).abs().max();
    if asym > T::tol(1e-10) * T::one().max(q.abs().max()) {
        return Err(Error::NotSymmetric(asym.as_f64()));
    }
    let sym = (q + q.transpose()) * T::lit(0.5);
    let eig = SymmetricEigen::new(sym);
    sphere_quadratic_min_spectral(&eig.eigenvalues, &eig.eigenvectors, b)
}

/// Same as [`sphere_quadratic_min`] for `Q = W·diag(μ)·Wᵀ` given in spectral
/// form (any eigenvalue order). Callers that already hold an SVD of a factor
/// `C` with `Q = CᵀC/ε` use this to avoid squaring the condition number.
pub fn sphere_quadratic_min_spectral<T: Scalar>(
    eigenvalues: &DVector<T>,
    eigenvectors: &DMatrix<T>,
    b: &DVector<T>,
) -> Result<SphereMinimum<T>> {
    let n = eigenvalues.len();
    if eigenvectors.nrows() != n || eigenvectors.ncols() != n || b.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: if b.len() != n { b.len() } else { eigenvectors.nrows() },
            context: "spectral data",
        });
    }
    if n == 0 {
        return Err(Error::Empty("sphere dimension"));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &c| {
        eigenvalues[a]
            .partial_cmp(&eigenvalues[c])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mu: Vec<T> = order.iter().map(|&k| eigenvalues[k]).collect();
    let w = DMatrix::from_fn(n, n, |i, j| eigenvectors[(i, order[j])]);
    let beta = w.transpose() * b;

    let mu_min = mu[0];
    let b_norm = b.norm();
    let scale = mu[n - 1].abs().max(mu_min.abs()).max(b_norm);
    let cluster_tol = T::tol(1e-12) * scale;
    // gaps d_k = μ_k − μ_min ≥ 0; the bottom cluster has d_k ≤ cluster_tol
    let gaps: Vec<T> = mu.iter().map(|&m| m - mu_min).collect();
    let in_bottom = |k: usize| gaps[k] <= cluster_tol;
    let beta_bottom = (0..n)
        .filter(|&k| in_bottom(k))
        .fold(T::zero(), |acc, k| acc + beta[k] * beta[k])
        .sqrt();

    let value_of = |coef: &DVector<T>| -> T {
        (0..n).fold(T::zero(), |acc, k| acc + mu[k] * coef[k] * coef[k] + T::lit(2.0) * beta[k] * coef[k])
    };

    if beta_bottom <= T::tol(1e-14) * b_norm {
        // Possible hard case: test the secular function at λ = μ_min with the
        // bottom cluster removed.
        let phi_rest = (0..n)
            .filter(|&k| !in_bottom(k))
            .fold(T::zero(), |acc, k| acc + (beta[k] / gaps[k]).powi(2));
        if phi_rest <= T::one() {
            let mut coef = DVector::zeros(n);
            for k in (0..n).filter(|&k| !in_bottom(k)) {
                coef[k] = -beta[k] / gaps[k];
            }
            let tau = (T::one() - phi_rest).max(T::zero()).sqrt();
            let sign = if beta[0] > T::zero() { -T::one() } else { T::one() };
            coef[0] = sign * tau;
            let v = &w * &coef;
            let value = value_of(&coef);
            return Ok(SphereMinimum { v, value, multiplier: mu_min, hard_case: true });
        }
    }

    // λ = μ_min − t with t > 0 solving φ(t) = Σ β_k² / (d_k + t)² = 1.
    let phi = |t: T| -> (T, T) {
        let mut f = T::zero();
        let mut df = T::zero();
        for k in 0..n {
            let d = gaps[k] + t;
            let q = beta[k] / d;
            f += q * q;
            df -= T::lit(2.0) * q * q / d;
        }
        (f, df)
    };
    let mut lo = (beta_bottom - cluster_tol).max(T::zero());
    let mut hi = b_norm;
    // ψ(t) = φ(t)^{-1/2} − 1 is increasing and close to linear in t.
    let mut t = if lo > T::zero() { lo } else { hi * T::lit(0.5) };
    let rel = T::tol(1e-13);
    for _ in 0..100 {
        let (f, df) = phi(t);
        let psi = T::one() / f.sqrt() - T::one();
        if psi.abs() <= rel {
            break;
        }
        if psi < T::zero() {
            lo = t;
        } else {
            hi = t;
        }
        let dpsi = -T::lit(0.5) * df / (f * f.sqrt());
        let mut next = t - psi / dpsi;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = if lo > T::zero() { (lo * hi).sqrt() } else { hi * T::lit(0.5) };
        }
        if (hi - lo) <= rel * hi {
            t = next;
            break;
        }
        t = next;
    }
    let coef = DVector::from_iterator(n, (0..n).map(|k| -beta[k] / (gaps[k] + t)));
    let norm = coef.norm();
    let coef = if norm > T::zero() { coef / norm } else { coef };
    let v = &w * &coef;
    let value = value_of(&coef);
    Ok(SphereMinimum { v, value, multiplier: mu_min - t, hard_case: false })
}
