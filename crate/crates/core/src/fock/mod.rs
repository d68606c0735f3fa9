//! Truncated bosonic Fock space: basis enumeration blocked by particle
//! number and total momentum, dense blocked operators, and mixed states.

pub mod basis;
pub mod operator;
pub mod state;

pub use basis::{FockBasis, FockBlock};
pub use operator::{
    build_hamiltonian, build_operator, build_renormalized_hamiltonian, normal_ordering_one_body,
    nu_tuned_spec, plain_spec,
    renormalized_spec, truncation_consistency_check, truncation_probe, BlockedOperator,
    DiagonalOperator, HamiltonianSpec, HamiltonianTerms, RenormalizedBuild, RenormalizedSpec,
    TruncationConsistency, TruncationProbe, TRUNCATION_MARGIN,
};
pub use state::{
    choose_n_max, free_number_tail, gibbs_state, position_kernel, vacuum_state, FockState,
    NumberStatistics, SpectralGibbsState, StateBlock, TruncationTail,
};
