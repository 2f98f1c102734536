//! The Diamond–Halberstam–Richert sieve functions, the almost-prime lower
//! bound, its minimization, and the sifting-density product.

mod density;
mod functions;
mod optimize;
pub mod quadrature;

use thiserror::Error;

pub use density::{density_product, density_product_capped, DEFAULT_PRIME_CAP};
pub use functions::{
    adjoint_polynomial, difference_invariant, integrate_system, refine_constants, solve_ff, solve_sigma,
    RefinedConstants, SampledFunction, SieveFunctionTable, EULER_GAMMA,
};
pub use optimize::{
    minimize_r, minimize_r_with, r_bound, sieve_table, MinimizeOptions, SieveTableRow,
    SieveOptimum,
};

use crate::localdensity::DensityError;

/// `(κ, α_κ, β_κ)` as tabulated, truncated to four decimals.
pub const CONSTANTS: [(u32, f64, f64); 9] = [
    (2, 5.3577, 4.2644),
    (3, 8.3719, 6.6408),
    (4, 11.5317, 9.0722),
    (5, 14.7735, 11.5347),
    (6, 18.0679, 14.0146),
    (7, 21.3989, 16.5042),
    (8, 24.7571, 18.9988),
    (9, 28.1326, 21.4955),
    (10, 31.5320, 23.9924),
];

/// The published `r_M` for `κ = g = 2..10`.
pub const PUBLISHED_R_M: [u32; 9] = [5, 8, 12, 16, 20, 25, 29, 34, 39];

/// Default integration step.
pub const DEFAULT_STEP: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SieveError {
    #[error("integration step {0} is coarser than 1e-3")]
    StepTooCoarse(f64),
    #[error("table end {u_max} is below alpha_kappa + 2 = {need}")]
    TableTooShort { u_max: f64, need: f64 },
    #[error("f left [0, 1] (value {value} at u = {u}); alpha_kappa and beta_kappa do not match")]
    InconsistentParams { u: f64, value: f64 },
    #[error("invalid sieve parameters: {0}")]
    BadParams(String),
    #[error("no tabulated constants for kappa = {0}")]
    UnknownKappa(u32),
    #[error("(u, v) = ({u}, {v}) violates 1/alpha < u < v, beta_kappa < alpha v")]
    ConstraintViolated { u: f64, v: f64 },
    #[error("argument {0} lies outside the tabulated range")]
    FOutOfRange(f64),
    #[error("no feasible (u, v) gives a finite bound")]
    NoFeasiblePoint,
    #[error("refinement of the constants did not converge")]
    NoConvergence,
    #[error("X^gamma = {value} exceeds the prime bound {cap}")]
    CapExceeded { value: f64, cap: u64 },
    #[error(transparent)]
    Density(#[from] DensityError),
}

pub type Result<T> = std::result::Result<T, SieveError>;

/// Sieve dimension, matching constants, level exponent and size exponent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SieveParams {
    pub kappa: u32,
    pub alpha_kappa: f64,
    pub beta_kappa: f64,
    pub alpha: f64,
    pub mu: f64,
}

impl SieveParams {
    pub fn new(kappa: u32, alpha_kappa: f64, beta_kappa: f64, alpha: f64, mu: f64) -> Result<Self> {
        let p = Self {
            kappa,
            alpha_kappa,
            beta_kappa,
            alpha,
            mu,
        };
        p.validate()?;
        Ok(p)
    }

    /// Tabulated constants with `α = 1`, `μ = κ`.
    pub fn tabulated(kappa: u32) -> Result<Self> {
        let &(_, a, b) = CONSTANTS
            .iter()
            .find(|c| c.0 == kappa)
            .ok_or(SieveError::UnknownKappa(kappa))?;
        Self::new(kappa, a, b, 1.0, kappa as f64)
    }

    pub fn with_constants(self, alpha_kappa: f64, beta_kappa: f64) -> Result<Self> {
        Self::new(self.kappa, alpha_kappa, beta_kappa, self.alpha, self.mu)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(SieveError::BadParams(m.to_string()));
        if self.kappa == 0 {
            return bad("kappa must be positive");
        }
        if !(self.beta_kappa > 2.0) {
            return bad("beta_kappa must exceed 2");
        }
        if !(self.alpha_kappa > self.beta_kappa) {
            return bad("alpha_kappa must exceed beta_kappa");
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad("alpha must lie in (0, 1]");
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return bad("mu must be positive");
        }
        Ok(())
    }
}
