//! Numerical laboratory for the correspondence between grand-canonical Gibbs
//! states of weakly interacting lattice bosons and classical Gibbs measures
//! built over the free Gaussian field, at finite mode and particle truncation.
//!
//! The crate is organised bottom-up:
//!
//! - [`spectral`]: plane-wave mode bases on the torus, free occupation
//!   numbers, and the density-dependent chemical-potential shift.
//! - [`classical`]: Gaussian free-field ensembles, interaction functionals,
//!   and self-normalised importance-sampling estimators for the interacting
//!   classical measure and its moments.
//! - [`fock`]: truncated bosonic Fock bases blocked by particle number and
//!   total momentum, Hamiltonian assembly (plain and renormalised), Gibbs
//!   states from dense per-block eigensolves, and reduced density matrices.
//! - [`semiclassics`]: coherent vectors, localisation to a mode subset,
//!   Husimi (lower-symbol) densities with quadrature moments, quantitative
//!   tensor-moment (de Finetti) gaps, and two-step entropy comparisons.
//! - [`entropy`]: relative entropy, trace distance, Schatten norms, Gibbs
//!   variational values, and the entropy/distance inequality checks.
//! - [`response`]: skewed covariances of conserved quantities, their
//!   integral over the skew parameter, and the finite-difference linear
//!   response they must reproduce.
//! - [`experiments`]: end-to-end convergence studies comparing quantum
//!   reduced density matrices against classical moment matrices on shared
//!   configuration, with machine-readable reports.
//!
//! All heavy linear algebra stays in real arithmetic: every Hamiltonian
//! assembled here has real matrix elements in the occupation basis, so only
//! mode-space objects (reduced density matrices, classical moments, coherent
//! amplitudes) are complex.

pub mod classical;
pub mod entropy;
pub mod error;
pub mod experiments;
pub mod fock;
pub mod pairs;
pub mod quadrature;
pub mod response;
pub mod semiclassics;
pub mod spectral;

pub use error::{Error, Result};

/// Crate version embedded in reports and CSV headers.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Dense per-block eigensolves are refused above this dimension.
pub const MAX_BLOCK_DIM: usize = 8192;

/// Default working-set budget in mebibytes when `GIBBSLAB_BUDGET_MB` is unset.
pub const DEFAULT_BUDGET_MB: u64 = 3072;

/// Working-set budget used to refuse oversized truncations up front.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MemoryBudget {
    pub megabytes: u64,
}

impl MemoryBudget {
    pub fn new(megabytes: u64) -> Self {
        Self { megabytes }
    }

    /// Reads `GIBBSLAB_BUDGET_MB` from the environment, falling back to
    /// [`DEFAULT_BUDGET_MB`]. Unparsable values fall back as well.
    pub fn from_env() -> Self {
        let megabytes = std::env::var("GIBBSLAB_BUDGET_MB")
            .ok()
            .and_then(|s| s.trim().parse::<u64>().ok())
            .unwrap_or(DEFAULT_BUDGET_MB);
        Self { megabytes }
    }

    pub fn bytes(&self) -> u64 {
        self.megabytes.saturating_mul(1024 * 1024)
    }

    /// Errors out if `estimate_bytes` exceeds the budget.
    pub fn check(&self, estimate_bytes: u64) -> Result<()> {
        if estimate_bytes > self.bytes() {
            return Err(Error::BudgetExceeded {
                estimate_mb: estimate_bytes as f64 / (1024.0 * 1024.0),
                budget_mb: self.megabytes as f64,
            });
        }
        Ok(())
    }
}

impl Default for MemoryBudget {
    fn default() -> Self {
        Self::new(DEFAULT_BUDGET_MB)
    }
}
