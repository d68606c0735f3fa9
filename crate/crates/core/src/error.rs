use thiserror::Error;

/// Errors produced by validation, resource guards, and numerical safeguards.
#[derive(Debug, Error)]
pub enum Error {
    /// The mode cutoff admits no lattice modes at all.
    #[error("mode cutoff {cutoff} with mass shift {kappa} excludes every lattice mode")]
    EmptyModeBasis { cutoff: f64, kappa: f64 },

    /// A scalar parameter is outside its admissible range.
    #[error("invalid parameter {name}: {message} (got {value})")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        message: &'static str,
    },

    /// Interaction coefficients must be nonnegative.
    #[error("interaction coefficient at lattice vector {k:?} is negative: {value}")]
    NegativeInteraction { k: [i64; 2], value: f64 },

    /// Interaction coefficients must be even: w(k) == w(-k).
    #[error("interaction table is not even: w({k:?}) = {value} but w({neg:?}) = {neg_value}")]
    UnevenInteraction {
        k: [i64; 2],
        value: f64,
        neg: [i64; 2],
        neg_value: f64,
    },

    /// The same lattice vector appeared twice in an interaction table.
    #[error("duplicate interaction entry for lattice vector {k:?}")]
    DuplicateInteraction { k: [i64; 2] },

    /// The effective one-body dispersion must be strictly positive for the
    /// Gibbs weights to be summable mode by mode.
    #[error("one-body energy of mode {mode} is not positive: |k|^2 - nu = {value}")]
    NonpositiveOneBody { mode: usize, value: f64 },

    /// Estimated working-set size exceeds the configured memory budget.
    #[error(
        "estimated working set {estimate_mb:.0} MB exceeds budget {budget_mb:.0} MB \
         (set GIBBSLAB_BUDGET_MB to raise the limit, or lower the truncation)"
    )]
    BudgetExceeded { estimate_mb: f64, budget_mb: f64 },

    /// Dense eigensolves are refused above a fixed block dimension.
    #[error("symmetry block of dimension {dim} exceeds dense eigensolve cap {cap}")]
    BlockTooLarge { dim: usize, cap: usize },

    /// A caller violated a documented precondition.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A coherent-state quadrature failed its mass gate.
    #[error(
        "quadrature captured Husimi mass {mass:.6} < {required:.3}; \
         retry with radial half-width >= {suggested_radius:.3} per mode"
    )]
    QuadratureMassDeficit {
        mass: f64,
        required: f64,
        suggested_radius: f64,
    },

    /// Two states were combined that live on different Fock bases.
    #[error("operation requires states on structurally identical Fock bases")]
    MismatchedBases,

    /// An ensemble-level operation received no samples.
    #[error("classical ensemble is empty")]
    EmptyEnsemble,

    /// Operator/state shapes disagree.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;
