//! Solver configuration.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// How the next singular vector space is picked from an SVD.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    /// Always the right kernel of the smallest right singular vector.
    RightKernel,
    /// Always the left kernel of the smallest left singular vector.
    LeftKernel,
    /// Right and left kernels in turn.
    AlternateKernels,
    /// Right kernel and the `(n−1) × 2` block space in turn.
    AlternateRightBlock,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [
        Strategy::RightKernel,
        Strategy::LeftKernel,
        Strategy::AlternateKernels,
        Strategy::AlternateRightBlock,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::RightKernel => "right",
            Strategy::LeftKernel => "left",
            Strategy::AlternateKernels => "alternate",
            Strategy::AlternateRightBlock => "right-block",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    /// Accepts the names above or the roman numerals `i` to `iv`.
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "right" | "i" => Ok(Strategy::RightKernel),
            "left" | "ii" => Ok(Strategy::LeftKernel),
            "alternate" | "iii" => Ok(Strategy::AlternateKernels),
            "right-block" | "iv" => Ok(Strategy::AlternateRightBlock),
            other => Err(Error::InvalidConfig(format!("unknown strategy `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    /// Alternating exact projections.
    Unregularized,
    /// Tikhonov-regularized block coordinate descent.
    Tikhonov,
    /// Augmented Lagrangian over right or left kernel spaces.
    AugmentedLagrangian,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Unregularized => "unregularized",
            Algorithm::Tikhonov => "tikhonov",
            Algorithm::AugmentedLagrangian => "augmented-lagrangian",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "unregularized" | "exact" => Ok(Algorithm::Unregularized),
            "tikhonov" => Ok(Algorithm::Tikhonov),
            "augmented-lagrangian" | "lagrangian" | "al" => Ok(Algorithm::AugmentedLagrangian),
            other => Err(Error::InvalidConfig(format!("unknown algorithm `{other}`"))),
        }
    }
}

/// Parameters shared by all drivers.
///
/// Tolerances left as `None` are derived from the instance:
/// `epsilon0 = 1e-2·‖A‖²`, `tol1 = 1e-11·max(1, ‖A‖)`,
/// `epsilon_min = 1e-16·‖A‖²` (Frobenius norms) and `tol2 = 3e-8·|g₀|`,
/// where `g₀` is the objective at the start of each inner run. The
/// unregularized driver bounds its step length by `1e-10·max(1, ‖A‖)`
/// instead. Explicit values are absolute.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub epsilon0: Option<f64>,
    /// Factor applied to `ε` after each outer iteration, in `(0, 1)`.
    pub decrease_k: f64,
    /// Bound on `σ_min(A + Δ)` for the outer loop to stop.
    pub tol1: Option<f64>,
    /// Bound on the per-iteration decrease of the inner objective.
    pub tol2: Option<f64>,
    pub epsilon_min: Option<f64>,
    pub max_outer: usize,
    pub max_inner: usize,
    pub strategy: Strategy,
    pub algorithm: Algorithm,
    /// Seed recorded with the result. The drivers are deterministic and draw
    /// no random numbers themselves.
    pub seed: u64,
    /// Start every inner run after the first from the final iterate of the
    /// previous one. When off, each inner run restarts at `δ = −α`, where
    /// every space is optimal and the tie is broken by the SVD of `A`.
    pub warm_start: bool,
    /// Fault injection for the verification suite: flips the sign of the
    /// multiplier update.
    #[doc(hidden)]
    pub flip_dual_sign: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            epsilon0: None,
            decrease_k: 0.1,
            tol1: None,
            tol2: None,
            epsilon_min: None,
            max_outer: 60,
            max_inner: 500,
            strategy: Strategy::RightKernel,
            algorithm: Algorithm::Tikhonov,
            seed: 0,
            warm_start: true,
            flip_dual_sign: false,
        }
    }
}

impl SolverConfig {
    pub fn with_algorithm(mut self, algorithm: Algorithm) -> Self {
        self.algorithm = algorithm;
        self
    }

    pub fn with_strategy(mut self, strategy: Strategy) -> Self {
        self.strategy = strategy;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.decrease_k > 0.0 && self.decrease_k < 1.0) {
            return bad(format!("decrease_k must lie in (0, 1), got {}", self.decrease_k));
        }
        for (name, value) in [
            ("epsilon0", self.epsilon0),
            ("tol1", self.tol1),
            ("tol2", self.tol2),
            ("epsilon_min", self.epsilon_min),
        ] {
            if let Some(v) = value {
                if !(v > 0.0 && v.is_finite()) {
                    return bad(format!("{name} must be positive and finite, got {v}"));
                }
            }
        }
        if self.max_outer == 0 || self.max_inner == 0 {
            return bad("iteration caps must be at least 1".into());
        }
        if self.algorithm == Algorithm::AugmentedLagrangian
            && !matches!(self.strategy, Strategy::RightKernel | Strategy::LeftKernel)
        {
            return bad(format!(
                "the augmented Lagrangian driver works on kernel spaces only (strategy right or left), got {}",
                self.strategy
            ));
        }
        Ok(())
    }
}
