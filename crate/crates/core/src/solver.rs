//! Solver drivers: alternating exact projections, Tikhonov block coordinate
//! descent and the augmented Lagrangian method, plus the space selection
//! rules and the LICQ diagnostic.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use crate::config::{Algorithm, SolverConfig, Strategy};
use crate::error::{Error, Result};
use crate::lsq::{assemble_reduced, eval_g, solve_exact, solve_tikhonov, LsqSystem};
use crate::numerics::{
    minnorm_lstsq, refine_smallest_triplet, singular_values, smallest_triplet, sphere_quadratic_min_spectral, svd, SvdResult,
};
use crate::scalar::Scalar;
use crate::spaces::{from_svd_block, from_svd_left, from_svd_right, SingularSpace};
use crate::structures::ProblemInstance;

/// Why a driver stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// `A = 0`, nothing to do.
    AlreadySingular,
    /// `σ_min(A + Δ) ≤ tol1` after an outer iteration.
    ConstraintMet,
    /// Unregularized driver: the step fell below its tolerance.
    StepConverged,
    /// Unregularized driver ran out of iterations.
    InnerCap,
    /// `ε` reached its floor before the constraint was met.
    EpsilonFloor,
    OuterCap,
}

impl StopReason {
    pub fn is_converged(self) -> bool {
        matches!(self, StopReason::AlreadySingular | StopReason::ConstraintMet | StopReason::StepConverged)
    }

    pub fn name(self) -> &'static str {
        match self {
            StopReason::AlreadySingular => "already-singular",
            StopReason::ConstraintMet => "constraint-met",
            StopReason::StepConverged => "step-converged",
            StopReason::InnerCap => "inner-cap",
            StopReason::EpsilonFloor => "epsilon-floor",
            StopReason::OuterCap => "outer-cap",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LicqReport<T> {
    pub full_rank: bool,
    pub smallest_sv: T,
}

#[derive(Debug, Clone)]
pub struct SolveResult<T> {
    /// Coefficients of the perturbation in the structure basis.
    pub delta: DVector<T>,
    /// `Δ = Σ δ_l B⁽ˡ⁾`.
    pub perturbation: DMatrix<T>,
    /// `‖Δ‖_F`.
    pub distance: T,
    /// `σ_min(A + Δ)`.
    pub constraint_violation: T,
    /// Tolerance the outer loop compared `constraint_violation` against.
    pub tol1: T,
    pub inner_iterations: usize,
    pub outer_iterations: usize,
    /// Objective after every inner iteration, one vector per inner run. The
    /// first entry of each run is the value at the starting point. For the
    /// unregularized driver this holds `‖Δ_i‖_F`.
    pub g_trace: Vec<Vec<T>>,
    /// `‖Proj_{S_i⊥}(A + Δ_i)‖_F` after every inner iteration.
    pub projection_trace: Vec<T>,
    pub final_space: SingularSpace<T>,
    /// Present when the final space is a right kernel.
    pub licq: Option<LicqReport<T>>,
    /// Final multiplier estimate of the augmented Lagrangian driver.
    pub dual: Option<DVector<T>>,
    /// Last `ε` used by an inner run (zero for the unregularized driver).
    pub epsilon: T,
    pub stop: StopReason,
    pub converged: bool,
    pub algorithm: Algorithm,
    pub strategy: Strategy,
    pub wall_time: f64,
}

/// Tolerances resolved against a particular instance.
struct Resolved<T> {
    epsilon0: T,
    epsilon_min: T,
    tol1: T,
    /// Absolute bound when configured, otherwise relative to `g` at the
    /// start of each inner run.
    tol2: Option<T>,
    k: T,
}

impl<T: Scalar> Resolved<T> {
    fn new(cfg: &SolverConfig, norm_a: T) -> Self {
        let sq = norm_a * norm_a;
        let big = T::one().max(norm_a);
        Resolved {
            epsilon0: cfg.epsilon0.map(T::lit).unwrap_or(T::lit(1e-2) * sq),
            epsilon_min: cfg.epsilon_min.map(T::lit).unwrap_or(T::tol(1e-16) * sq),
            tol1: cfg.tol1.map(T::lit).unwrap_or(T::tol(1e-11) * big),
            tol2: cfg.tol2.map(T::lit),
            k: T::lit(cfg.decrease_k),
        }
    }

    fn inner_tol(&self, g_start: T) -> T {
        self.tol2.unwrap_or(T::tol(3e-8) * g_start.abs())
    }
}

/// Picks a space from the SVD of the current matrix `A + Δ`: `parity`
/// alternates between the two families of the alternating strategies.
pub fn select_space<T: Scalar>(c: &DMatrix<T>, strategy: Strategy, parity: usize) -> Result<SingularSpace<T>> {
    Ok(select_from_svd(&svd(c)?, strategy, parity))
}

fn select_from_svd<T: Scalar>(s: &SvdResult<T>, strategy: Strategy, parity: usize) -> SingularSpace<T> {
    let n = s.order();
    let odd = parity % 2 == 1;
    match strategy {
        Strategy::RightKernel => from_svd_right(s),
        Strategy::LeftKernel => from_svd_left(s),
        Strategy::AlternateKernels if odd => from_svd_left(s),
        Strategy::AlternateKernels => from_svd_right(s),
        Strategy::AlternateRightBlock if odd && n >= 2 => {
            from_svd_block(s, n - 1, 2).expect("n − 1 + 2 = n + 1 is always valid")
        }
        Strategy::AlternateRightBlock => from_svd_right(s),
    }
}

/// Like [`select_from_svd`] for the kernel strategies, but refines the
/// smallest triplet from the right singular vector of the previous call
/// instead of computing a full SVD. The block strategy always decomposes.
fn select_tracked<T: Scalar>(
    c: &DMatrix<T>,
    strategy: Strategy,
    parity: usize,
    tracked: &mut Option<DVector<T>>,
) -> Result<SingularSpace<T>> {
    if strategy == Strategy::AlternateRightBlock {
        return select_space(c, strategy, parity);
    }
    let triplet = match tracked.as_ref().and_then(|v| refine_smallest_triplet(c, v, 12)) {
        Some(t) => t,
        None => smallest_triplet(c)?,
    };
    let left = match strategy {
        Strategy::LeftKernel => true,
        Strategy::AlternateKernels => parity % 2 == 1,
        _ => false,
    };
    let space = if left {
        SingularSpace::LeftKernel { u: triplet.u }
    } else {
        SingularSpace::RightKernel { v: triplet.v.clone() }
    };
    *tracked = Some(triplet.v);
    Ok(space)
}

/// The other family than `space` came from: the opposite kernel for the
/// single-family strategies, the other parity for the alternating ones.
fn alternative_space<T: Scalar>(s: &SvdResult<T>, strategy: Strategy, parity: usize) -> SingularSpace<T> {
    match strategy {
        Strategy::RightKernel => from_svd_left(s),
        Strategy::LeftKernel => from_svd_right(s),
        _ => select_from_svd(s, strategy, parity + 1),
    }
}

/// Runs the driver selected by `config.algorithm`.
pub fn solve<T: Scalar>(instance: &ProblemInstance<T>, config: &SolverConfig) -> Result<SolveResult<T>> {
    match config.algorithm {
        Algorithm::Unregularized => solve_unregularized(instance, config),
        Algorithm::Tikhonov => solve_tikhonov_bcd(instance, config),
        Algorithm::AugmentedLagrangian => solve_augmented_lagrangian(instance, config),
    }
}

/// Result for `A = 0`.
fn trivial<T: Scalar>(instance: &ProblemInstance<T>, config: &SolverConfig, algorithm: Algorithm, start: Instant) -> SolveResult<T> {
    let n = instance.order();
    let p = instance.basis().dim();
    let mut v = DVector::zeros(n);
    v[n - 1] = T::one();
    let final_space = SingularSpace::RightKernel { v };
    let mut result = SolveResult {
        delta: DVector::zeros(p),
        perturbation: DMatrix::zeros(n, n),
        distance: T::zero(),
        constraint_violation: T::zero(),
        tol1: Resolved::<T>::new(config, T::zero()).tol1,
        inner_iterations: 1,
        outer_iterations: 1,
        g_trace: vec![vec![T::zero()]],
        projection_trace: vec![T::zero()],
        final_space,
        licq: None,
        dual: (algorithm == Algorithm::AugmentedLagrangian).then(|| DVector::zeros(n)),
        epsilon: T::zero(),
        stop: StopReason::AlreadySingular,
        converged: true,
        algorithm,
        strategy: config.strategy,
        wall_time: 0.0,
    };
    result = result.with_licq(instance);
    result.wall_time = start.elapsed().as_secs_f64();
    result
}

#[allow(clippy::too_many_arguments)]
fn finish<T: Scalar>(
    instance: &ProblemInstance<T>,
    config: &SolverConfig,
    algorithm: Algorithm,
    delta: DVector<T>,
    final_space: SingularSpace<T>,
    counts: (usize, usize),
    traces: (Vec<Vec<T>>, Vec<T>),
    dual: Option<DVector<T>>,
    epsilon: T,
    tol1: T,
    stop: StopReason,
    start: Instant,
) -> Result<SolveResult<T>> {
    let basis = instance.basis();
    let perturbation = basis.materialize(&delta)?;
    let c = instance.matrix() + &perturbation;
    let constraint_violation = svd(&c)?.sigma_min();
    let mut result = SolveResult {
        distance: delta.norm(),
        delta,
        perturbation,
        constraint_violation,
        tol1,
        inner_iterations: counts.0,
        outer_iterations: counts.1,
        g_trace: traces.0,
        projection_trace: traces.1,
        final_space,
        licq: None,
        dual,
        epsilon,
        stop,
        converged: stop.is_converged(),
        algorithm,
        strategy: config.strategy,
        wall_time: 0.0,
    };
    result = result.with_licq(instance);
    result.wall_time = start.elapsed().as_secs_f64();
    Ok(result)
}

/// Alternating exact projections: starting from `Δ = −A`, repeatedly pick a
/// singular vector space containing `A + Δ` and replace `Δ` by the smallest
/// structured perturbation mapping `A` into that space.
///
/// `‖Δ‖` never increases and every iterate is exactly singular. When the
/// selected space equals the previous one the other family is used, since
/// repeating a space cannot make progress.
pub fn solve_unregularized<T: Scalar>(instance: &ProblemInstance<T>, config: &SolverConfig) -> Result<SolveResult<T>> {
    config.validate()?;
    let start = Instant::now();
    let a = instance.matrix();
    let basis = instance.basis();
    let norm_a = a.norm();
    if norm_a == T::zero() {
        return Ok(trivial(instance, config, Algorithm::Unregularized, start));
    }
    let res = Resolved::new(config, norm_a);
    let step_tol = config.tol2.map(T::lit).unwrap_or(T::tol(1e-10) * T::one().max(norm_a));
    let same_tol = T::tol(1e-12);

    let mut delta = -instance.alpha().clone();
    let mut trace = vec![delta.norm()];
    let mut projections = Vec::new();
    let mut previous: Option<SingularSpace<T>> = None;
    let mut parity = 0usize;
    let mut iterations = 0;
    let a_svd = svd(a)?;
    let stop = loop {
        iterations += 1;
        let c = basis.add_materialized(a, &delta)?;
        // A + Δ = 0 lies in every space, so pick the one closest to A
        let fresh;
        let s = if c.norm() <= T::eps() * norm_a {
            &a_svd
        } else {
            fresh = svd(&c)?;
            &fresh
        };
        let mut space = select_from_svd(s, config.strategy, parity);
        if let Some(prev) = &previous {
            if space.coincides(prev, same_tol) {
                space = alternative_space(s, config.strategy, parity);
                parity += 1;
            }
        }
        parity += 1;
        let sys = assemble_reduced(basis, &space, a)?;
        let (mut next, mut residual) = solve_exact(&sys)?;
        // Near-null directions of M can amplify rounding in r. The previous
        // iterate is feasible here too, so its projection onto the row space
        // of M is an equally valid minimum-norm solution that cannot grow.
        if next.norm() > delta.norm() {
            let projected = minnorm_lstsq(sys.matrix(), &(sys.matrix() * &delta))?;
            let r = sys.shifted_rhs();
            let res_p = (sys.matrix() * &projected - &r).norm();
            if res_p <= T::tol(1e-8) * (r.norm() + T::one()) {
                next = projected;
                residual = res_p;
            }
        }
        let step = (&next - &delta).norm();
        delta = next;
        trace.push(delta.norm());
        projections.push(residual);
        previous = Some(space);
        if step <= step_tol {
            break StopReason::StepConverged;
        }
        if iterations >= config.max_inner {
            break StopReason::InnerCap;
        }
    };
    let space = previous.expect("at least one iteration ran");
    finish(
        instance,
        config,
        Algorithm::Unregularized,
        delta,
        space,
        (iterations, 1),
        (vec![trace], projections),
        None,
        T::zero(),
        res.tol1,
        stop,
        start,
    )
}

/// Tikhonov-regularized block coordinate descent.
///
/// For a fixed `ε` the objective `g(δ, S) = ‖δ‖² + ‖Proj_{S⊥}(A + Δ)‖²/ε` is
/// minimized alternately over the space (the smallest singular vectors of
/// `A + Δ`) and over `δ` (a ridge problem). `ε` shrinks by `decrease_k`
/// between inner runs until `σ_min(A + Δ) ≤ tol1`.
pub fn solve_tikhonov_bcd<T: Scalar>(instance: &ProblemInstance<T>, config: &SolverConfig) -> Result<SolveResult<T>> {
    config.validate()?;
    let start = Instant::now();
    let a = instance.matrix();
    let basis = instance.basis();
    let alpha = instance.alpha();
    let norm_a = a.norm();
    if norm_a == T::zero() {
        return Ok(trivial(instance, config, Algorithm::Tikhonov, start));
    }
    let res = Resolved::new(config, norm_a);
    let a_svd = svd(a)?;

    let mut epsilon = res.epsilon0;
    let mut last_sys: Option<LsqSystem<T>> = None;
    let mut tracked: Option<DVector<T>> = None;
    let mut delta = -alpha.clone();
    let mut traces = Vec::new();
    let mut projections = Vec::new();
    let (mut inner_total, mut outer) = (0, 0);
    let stop = loop {
        outer += 1;
        let mut g_prev = match (&last_sys, config.warm_start) {
            (Some(prev), true) => eval_g(&delta, prev, epsilon, &DVector::zeros(prev.rows()))?,
            _ => {
                delta = -alpha.clone();
                alpha.norm_squared()
            }
        };
        let mut trace = vec![g_prev];
        let mut sys: LsqSystem<T>;
        let mut parity = 0usize;
        let mut inner = 0;
        loop {
            inner += 1;
            let c = basis.add_materialized(a, &delta)?;
            // at δ = −α every space is optimal; take the one closest to A
            let space = if c.norm() <= T::eps() * norm_a {
                select_from_svd(&a_svd, config.strategy, parity)
            } else {
                select_tracked(&c, config.strategy, parity, &mut tracked)?
            };
            parity += 1;
            sys = assemble_reduced(basis, &space, a)?;
            let (next, g) = solve_tikhonov(&sys, epsilon)?;
            projections.push(sys.residual_vector(&next)?.norm());
            delta = next;
            trace.push(g);
            let decrease = g_prev - g;
            g_prev = g;
            if decrease <= res.inner_tol(trace[0]) || inner >= config.max_inner {
                break;
            }
        }
        inner_total += inner;
        traces.push(trace);
        last_sys = Some(sys);

        let c = basis.add_materialized(a, &delta)?;
        if svd(&c)?.sigma_min() <= res.tol1 {
            break StopReason::ConstraintMet;
        }
        if outer >= config.max_outer {
            break StopReason::OuterCap;
        }
        if epsilon <= res.epsilon_min {
            break StopReason::EpsilonFloor;
        }
        epsilon = (epsilon * res.k).max(res.epsilon_min);
    };
    let space = last_sys.expect("at least one inner run").space().clone();
    finish(
        instance,
        config,
        Algorithm::Tikhonov,
        delta,
        space,
        (inner_total, outer),
        (traces, projections),
        None,
        epsilon,
        res.tol1,
        stop,
        start,
    )
}

/// Augmented Lagrangian method over kernel spaces `{S_v : ‖v‖ = 1}` (or the
/// left kernels for the left strategy).
///
/// The inner loop minimizes
/// `g(δ, v) = ‖δ‖² + ‖Cv‖²/ε + 2⟨y, Cv⟩`, `C = A + Δ(δ)`, alternately in
/// `v` (a quadratic on the unit sphere, solved globally) and in `δ` (a ridge
/// problem with right-hand side `r − εy`). Between inner runs the multiplier
/// is updated with `y ← y + (Mδ − r)/ε` and then `ε` shrinks.
pub fn solve_augmented_lagrangian<T: Scalar>(
    instance: &ProblemInstance<T>,
    config: &SolverConfig,
) -> Result<SolveResult<T>> {
    config.validate()?;
    let left = match config.strategy {
        Strategy::RightKernel => false,
        Strategy::LeftKernel => true,
        other => {
            return Err(Error::InvalidConfig(format!(
                "the augmented Lagrangian driver works on kernel spaces only, got {other}"
            )))
        }
    };
    let start = Instant::now();
    let a = instance.matrix();
    let basis = instance.basis();
    let alpha = instance.alpha();
    let n = instance.order();
    let norm_a = a.norm();
    if norm_a == T::zero() {
        return Ok(trivial(instance, config, Algorithm::AugmentedLagrangian, start));
    }
    let res = Resolved::new(config, norm_a);
    let a_svd = svd(a)?;
    let make_space = |w: DVector<T>| {
        if left {
            SingularSpace::LeftKernel { u: w }
        } else {
            SingularSpace::RightKernel { v: w }
        }
    };
    let identity = DMatrix::<T>::identity(n, n);

    let mut epsilon = res.epsilon0;
    let mut y = DVector::<T>::zeros(n);
    let mut last_sys: Option<LsqSystem<T>> = None;
    let mut delta = -alpha.clone();
    let mut traces = Vec::new();
    let mut projections = Vec::new();
    let (mut inner_total, mut outer) = (0, 0);
    let stop = loop {
        outer += 1;
        let mut g_prev = match (&last_sys, config.warm_start) {
            (Some(prev), true) => eval_g(&delta, prev, epsilon, &y)?,
            _ => {
                delta = -alpha.clone();
                alpha.norm_squared()
            }
        };
        let mut trace = vec![g_prev];
        let mut inner = 0;
        let mut sys: LsqSystem<T>;
        loop {
            inner += 1;
            let c = basis.add_materialized(a, &delta)?;
            let space = if c.norm() <= T::eps() * norm_a {
                select_from_svd(&a_svd, config.strategy, 0)
            } else {
                // Q = CᵀC/ε = V·diag(σ²/ε)·Vᵀ and Vᵀ(Cᵀy) = Σ·Uᵀy; the left
                // strategy swaps the roles of U and V.
                let s = svd(&c)?;
                let (outer_vecs, inner_vecs) = if left { (&s.v, &s.u) } else { (&s.u, &s.v) };
                let mu = s.sigma.map(|x| x * x / epsilon);
                let beta = outer_vecs.tr_mul(&y).component_mul(&s.sigma);
                let m = sphere_quadratic_min_spectral(&mu, &identity, &beta)?;
                let mut w = inner_vecs * m.v;
                w /= w.norm();
                make_space(w)
            };
            sys = assemble_reduced(basis, &space, a)?;
            let shifted = sys.clone().with_shift(&y, epsilon)?;
            let (next, value) = solve_tikhonov(&shifted, epsilon)?;
            let g = value - epsilon * y.norm_squared();
            projections.push(sys.residual_vector(&next)?.norm());
            delta = next;
            trace.push(g);
            let decrease = g_prev - g;
            g_prev = g;
            if decrease <= res.inner_tol(trace[0]) || inner >= config.max_inner {
                break;
            }
        }
        inner_total += inner;
        traces.push(trace);
        let h = sys.residual_vector(&delta)?;
        last_sys = Some(sys);
        if config.flip_dual_sign {
            y -= h / epsilon;
        } else {
            y += h / epsilon;
        }

        let c = basis.add_materialized(a, &delta)?;
        if svd(&c)?.sigma_min() <= res.tol1 {
            break StopReason::ConstraintMet;
        }
        if outer >= config.max_outer {
            break StopReason::OuterCap;
        }
        if epsilon <= res.epsilon_min {
            break StopReason::EpsilonFloor;
        }
        epsilon = (epsilon * res.k).max(res.epsilon_min);
    };
    let space = last_sys.expect("at least one inner run").space().clone();
    finish(
        instance,
        config,
        Algorithm::AugmentedLagrangian,
        delta,
        space,
        (inner_total, outer),
        (traces, projections),
        Some(y),
        epsilon,
        res.tol1,
        stop,
        start,
    )
}

/// Rank test of the stacked matrix `[M_Yᵀ; (C(I − vvᵀ))ᵀ]` for the final
/// right kernel vector `v` and `C = A + Δ`. Full rank means the smallest
/// singular value exceeds `1e-8` times the largest. A vanishing second
/// block (for instance `A = 0`) is reported as rank deficient.
pub fn licq_check<T: Scalar>(instance: &ProblemInstance<T>, result: &SolveResult<T>) -> Result<(bool, T)> {
    let v = match &result.final_space {
        SingularSpace::RightKernel { v } => v,
        _ => return Err(Error::NotKernelSpace),
    };
    let n = instance.order();
    let basis = instance.basis();
    let c = instance.matrix() + &result.perturbation;
    let cv = &c * v;
    let projected = &c - cv * v.transpose();

    let m_y = basis.apply_right(v);
    // The singular values of the stack only depend on the Gram matrix of its
    // top block, so a tall M_Yᵀ is replaced by an n × n factor first.
    let top = compress_rows(&m_y.transpose(), n);
    let mut stack = DMatrix::zeros(top.nrows() + n, n);
    stack.rows_mut(0, top.nrows()).copy_from(&top);
    stack.rows_mut(top.nrows(), n).copy_from(&projected.transpose());
    let sv = singular_values(&stack)?;
    let smallest = if sv.len() < n { T::zero() } else { sv[n - 1] };
    let largest = sv.get(0).copied().unwrap_or_else(T::zero);
    let degenerate = projected.norm() <= T::eps() * T::lit(n as f64) * T::one().max(instance.matrix().norm());
    let full_rank = !degenerate && largest > T::zero() && smallest > T::tol(1e-8) * largest;
    Ok((full_rank, smallest))
}

/// An `r × n` matrix `R` with `RᵀR = XᵀX` and `r ≤ n`, for `X` with many
/// rows. Rows of `X` with a single nonzero (sparse-pattern bases) collapse
/// to a diagonal without any factorization.
fn compress_rows<T: Scalar>(x: &DMatrix<T>, n: usize) -> DMatrix<T> {
    if x.nrows() <= n {
        return x.clone();
    }
    let single = x.row_iter().all(|r| r.iter().filter(|v| **v != T::zero()).count() <= 1);
    if single {
        let mut d = DMatrix::zeros(n, n);
        for row in x.row_iter() {
            for (j, v) in row.iter().enumerate() {
                d[(j, j)] += *v * *v;
            }
        }
        return d.map(|v: T| v.sqrt());
    }
    x.clone().qr().r()
}

impl<T: Scalar> SolveResult<T> {
    /// Fills `licq` from [`licq_check`]; stays `None` unless the final space
    /// is a right kernel.
    pub fn with_licq(mut self, instance: &ProblemInstance<T>) -> Self {
        self.licq = licq_check(instance, &self).ok().map(|(full_rank, smallest_sv)| LicqReport { full_rank, smallest_sv });
        self
    }
}
