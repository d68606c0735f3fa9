//! Second-quantised operators on the truncated Fock basis.
//!
//! All Hamiltonians here conserve total particle number and total momentum,
//! so operators are stored as one dense symmetric matrix per `(N, momentum)`
//! block. Matrix elements are real: the interaction coefficients are real
//! and the occupation basis is real.
//!
//! Two Hamiltonian forms are provided:
//!
//! - plain: `H = sum_j (|k_j|^2 - nu) n_j + (c/2) sum_{k,p,q} w(k)
//!   a*_{p+k} a*_{q-k} a_q a_p` with a fixed chemical potential `nu` and
//!   coupling `c`;
//! - renormalised: `H = H_0 + (1/T) W` with `H_0 = sum_j lambda_j n_j` and
//!   `W = (1/2) sum_k w(k) |rho_k - delta_{k0} N_0|^2`, expanded in normal
//!   order. At finite truncation the normal-ordering one-body term is mode
//!   dependent, `c_p = (1/2) sum_{k : p+k in basis} w(k)`, and the scalar
//!   `(1/(2T)) w(0) N_0^2` is kept on the diagonal and recorded, so the
//!   equivalence with the `nu`-tuned form is exact rather than asymptotic.

use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::spectral::{free_density, renormalized_nu, InteractionSpec, ModeBasis};
use crate::MemoryBudget;

use super::basis::FockBasis;

/// Coefficients of a blocked Hamiltonian: diagonal one-body part, a global
/// factor in front of the quartic sum, and a scalar added to every diagonal
/// entry.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianTerms {
    /// Per-mode one-body energies `e_j` (coefficient of `n_j`).
    pub one_body: Vec<f64>,
    /// Factor multiplying `sum_{k,p,q} w(k) a*_{p+k} a*_{q-k} a_q a_p`.
    pub quartic_factor: f64,
    /// Scalar multiple of the identity.
    pub scalar: f64,
}

/// A Hamiltonian recipe: term coefficients plus the one-body energies of the
/// free reference state used for truncation-tail estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianSpec {
    pub terms: HamiltonianTerms,
    /// One-body energies of the free (quadratic) reference Gibbs state.
    pub free_energies: Vec<f64>,
}

/// Dense symmetric operator stored block by block.
#[derive(Debug, Clone)]
pub struct BlockedOperator {
    basis: Arc<FockBasis>,
    blocks: Vec<DMatrix<f64>>,
    free_energies: Option<Vec<f64>>,
}

impl BlockedOperator {
    /// Wraps raw per-block matrices (used by synthetic test instances).
    pub fn from_blocks(
        basis: Arc<FockBasis>,
        blocks: Vec<DMatrix<f64>>,
        free_energies: Option<Vec<f64>>,
    ) -> Result<Self> {
        if blocks.len() != basis.blocks().len() {
            return Err(Error::DimensionMismatch(format!(
                "expected {} blocks, got {}",
                basis.blocks().len(),
                blocks.len()
            )));
        }
        for (i, (b, fb)) in blocks.iter().zip(basis.blocks()).enumerate() {
            if b.nrows() != fb.dim() || b.ncols() != fb.dim() {
                return Err(Error::DimensionMismatch(format!(
                    "block {i} is {}x{}, basis block has dimension {}",
                    b.nrows(),
                    b.ncols(),
                    fb.dim()
                )));
            }
        }
        Ok(Self {
            basis,
            blocks,
            free_energies,
        })
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn block(&self, i: usize) -> &DMatrix<f64> {
        &self.blocks[i]
    }

    pub fn blocks(&self) -> &[DMatrix<f64>] {
        &self.blocks
    }

    pub fn free_energies(&self) -> Option<&[f64]> {
        self.free_energies.as_deref()
    }

    /// `self + c * other` on the same basis.
    pub fn add_scaled(&self, other: &Self, c: f64) -> Result<Self> {
        if !self.basis.same_structure(&other.basis) {
            return Err(Error::MismatchedBases);
        }
        let blocks = self
            .blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| a + b * c)
            .collect();
        Ok(Self {
            basis: self.basis.clone(),
            blocks,
            free_energies: self.free_energies.clone(),
        })
    }

    /// `self + c * diag` for a diagonal observable on the same basis.
    pub fn add_diagonal(&self, diag: &DiagonalOperator, c: f64) -> Result<Self> {
        if !self.basis.same_structure(&diag.basis) {
            return Err(Error::MismatchedBases);
        }
        let mut blocks = self.blocks.clone();
        for (b, vals) in blocks.iter_mut().zip(&diag.values) {
            for (i, &v) in vals.iter().enumerate() {
                b[(i, i)] += c * v;
            }
        }
        Ok(Self {
            basis: self.basis.clone(),
            blocks,
            free_energies: self.free_energies.clone(),
        })
    }
}

/// Operator diagonal in the occupation basis, stored as one value per state.
#[derive(Debug, Clone)]
pub struct DiagonalOperator {
    basis: Arc<FockBasis>,
    values: Vec<Vec<f64>>,
}

impl DiagonalOperator {
    pub fn from_state_fn(basis: &Arc<FockBasis>, f: impl Fn(&[u16]) -> f64) -> Self {
        let values = basis
            .blocks()
            .iter()
            .map(|b| b.iter_states().map(&f).collect())
            .collect();
        Self {
            basis: basis.clone(),
            values,
        }
    }

    /// Particle number over a mode subset: `N_Q = sum_{j in Q} n_j`.
    pub fn number(basis: &Arc<FockBasis>, modes: &[usize]) -> Self {
        let modes = modes.to_vec();
        Self::from_state_fn(basis, move |occ| {
            modes.iter().map(|&j| occ[j] as f64).sum()
        })
    }

    /// `sum_j weight_j n_j`.
    pub fn mode_weighted(basis: &Arc<FockBasis>, weights: &[f64]) -> Self {
        assert_eq!(weights.len(), basis.modes(), "weight length mismatch");
        let weights = weights.to_vec();
        Self::from_state_fn(basis, move |occ| {
            occ.iter()
                .zip(&weights)
                .map(|(&o, &w)| o as f64 * w)
                .sum()
        })
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn block_values(&self, i: usize) -> &[f64] {
        &self.values[i]
    }

    /// Dense block-diagonal form of this diagonal observable.
    pub fn to_blocked(&self) -> BlockedOperator {
        let blocks = self
            .values
            .iter()
            .map(|vals| DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(vals)))
            .collect();
        BlockedOperator {
            basis: self.basis.clone(),
            blocks,
            free_energies: None,
        }
    }
}

/// Shift lookup tables for the quartic sum, one per interaction entry.
struct QuarticTables {
    /// `(w(k), plus[p] = index of p+k, minus[q] = index of q-k)`.
    entries: Vec<(f64, Vec<Option<usize>>, Vec<Option<usize>>)>,
}

impl QuarticTables {
    fn new(mode_basis: &ModeBasis, w: &InteractionSpec) -> Self {
        let m = mode_basis.len();
        let entries = w
            .support()
            .iter()
            .filter(|&&(_, wk)| wk != 0.0)
            .map(|&(k, wk)| {
                let plus: Vec<_> = (0..m).map(|p| mode_basis.shifted(p, k)).collect();
                let minus: Vec<_> = (0..m)
                    .map(|q| mode_basis.shifted(q, [-k[0], -k[1]]))
                    .collect();
                (wk, plus, minus)
            })
            .collect();
        Self { entries }
    }
}

/// Assembles one symmetry block of `sum_j e_j n_j + factor * Quartic +
/// scalar`, then symmetrises to wash out order-of-operations rounding.
fn assemble_block(
    fock: &FockBasis,
    block_idx: usize,
    tables: &QuarticTables,
    terms: &HamiltonianTerms,
) -> DMatrix<f64> {
    let block = fock.block(block_idx);
    let d = block.dim();
    let m = fock.modes();
    let mut h = DMatrix::<f64>::zeros(d, d);
    let mut scratch = vec![0u16; m];
    for (col, state) in block.iter_states().enumerate() {
        // One-body diagonal plus scalar.
        let diag: f64 = state
            .iter()
            .zip(&terms.one_body)
            .map(|(&o, &e)| o as f64 * e)
            .sum();
        h[(col, col)] += diag + terms.scalar;

        if terms.quartic_factor == 0.0 {
            continue;
        }
        for (wk, plus, minus) in &tables.entries {
            for p in 0..m {
                if state[p] == 0 {
                    continue;
                }
                let Some(pk) = plus[p] else { continue };
                for q in 0..m {
                    let Some(qk) = minus[q] else { continue };
                    // Apply a_p, a_q, a*_{q-k}, a*_{p+k} in order.
                    scratch.copy_from_slice(state);
                    let c1 = scratch[p] as f64;
                    scratch[p] -= 1;
                    if scratch[q] == 0 {
                        continue;
                    }
                    let c2 = scratch[q] as f64;
                    scratch[q] -= 1;
                    let c3 = (scratch[qk] + 1) as f64;
                    scratch[qk] += 1;
                    let c4 = (scratch[pk] + 1) as f64;
                    scratch[pk] += 1;
                    let row = block
                        .find(&scratch)
                        .expect("quartic terms conserve N and momentum");
                    h[(row, col)] += terms.quartic_factor * wk * (c1 * c2 * c3 * c4).sqrt();
                }
            }
        }
    }
    // Symmetrise: elements are symmetric in exact arithmetic, but the two
    // triangles accumulate products in different orders.
    let ht = h.transpose();
    (h + ht) * 0.5
}

fn check_dense_budget(fock: &FockBasis, copies: u64, budget: &MemoryBudget) -> Result<()> {
    let estimate = fock
        .dense_bytes()
        .saturating_mul(copies)
        .saturating_add(fock.total_dim() as u64 * 2 * fock.modes() as u64);
    budget.check(estimate)
}

/// Builds a blocked operator from a Hamiltonian recipe.
///
/// The budget check covers the operator blocks plus an equal-sized
/// eigenvector allowance (16 bytes per matrix entry in total).
pub fn build_operator(
    fock: &Arc<FockBasis>,
    mode_basis: &ModeBasis,
    w: &InteractionSpec,
    spec: &HamiltonianSpec,
    budget: &MemoryBudget,
) -> Result<BlockedOperator> {
    if spec.terms.one_body.len() != fock.modes() {
        return Err(Error::DimensionMismatch(
            "one-body term count differs from mode count".into(),
        ));
    }
    check_dense_budget(fock, 2, budget)?;
    let tables = QuarticTables::new(mode_basis, w);
    let blocks: Vec<DMatrix<f64>> = (0..fock.blocks().len())
        .into_par_iter()
        .map(|i| assemble_block(fock, i, &tables, &spec.terms))
        .collect();
    Ok(BlockedOperator {
        basis: fock.clone(),
        blocks,
        free_energies: Some(spec.free_energies.clone()),
    })
}

/// Recipe for the plain Hamiltonian with fixed chemical potential `nu` and
/// coupling `coupling`. Requires a positive one-body dispersion
/// `|k_j|^2 - nu > 0` for every mode.
pub fn plain_spec(
    mode_basis: &ModeBasis,
    nu: f64,
    coupling: f64,
) -> Result<HamiltonianSpec> {
    if !(coupling.is_finite() && coupling >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "coupling",
            value: coupling,
            message: "coupling must be finite and nonnegative",
        });
    }
    let one_body: Vec<f64> = (0..mode_basis.len())
        .map(|j| mode_basis.kinetic(j) - nu)
        .collect();
    for (j, &e) in one_body.iter().enumerate() {
        if e <= 0.0 {
            return Err(Error::NonpositiveOneBody { mode: j, value: e });
        }
    }
    Ok(HamiltonianSpec {
        terms: HamiltonianTerms {
            one_body: one_body.clone(),
            quartic_factor: coupling / 2.0,
            scalar: 0.0,
        },
        free_energies: one_body,
    })
}

/// Plain Hamiltonian as a blocked operator.
pub fn build_hamiltonian(
    fock: &Arc<FockBasis>,
    mode_basis: &ModeBasis,
    w: &InteractionSpec,
    nu: f64,
    coupling: f64,
    budget: &MemoryBudget,
) -> Result<BlockedOperator> {
    let spec = plain_spec(mode_basis, nu, coupling)?;
    build_operator(fock, mode_basis, w, &spec, budget)
}

/// Normal-ordering one-body coefficients at finite truncation:
/// `c_p = (1/2) sum_{k : p+k in basis} w(k)`.
pub fn normal_ordering_one_body(mode_basis: &ModeBasis, w: &InteractionSpec) -> Vec<f64> {
    (0..mode_basis.len())
        .map(|p| {
            0.5 * w
                .support()
                .iter()
                .filter(|&&(k, _)| mode_basis.shifted(p, k).is_some())
                .map(|&(_, wk)| wk)
                .sum::<f64>()
        })
        .collect()
}

/// Everything produced by the renormalised build: the full Hamiltonian
/// `H_0 + W/T`, the free part, the centred interaction, and the bookkeeping
/// needed to reproduce it from the `nu`-tuned form.
#[derive(Debug, Clone)]
pub struct RenormalizedBuild {
    pub hamiltonian: BlockedOperator,
    /// `H_0 = sum_j lambda_j n_j`.
    pub free: BlockedOperator,
    /// Centred interaction `W` (scalar included on the diagonal).
    pub interaction: BlockedOperator,
    pub t: f64,
    /// Free expected particle number over the mode basis.
    pub n0: f64,
    /// Mode-cutoff tail of `n0` (lowest excluded shell).
    pub n0_tail: f64,
    /// Density-matched chemical potential `w(0) N_0 / T - kappa`.
    pub nu: f64,
    /// Recorded scalar `(1/(2T)) w(0) N_0^2` separating the two spectra.
    pub energy_shift: f64,
    /// Normal-ordering one-body coefficients `c_p`.
    pub bookkeeping: Vec<f64>,
}

/// Recipes for the renormalised Hamiltonian `H_0 + W/T` and its pieces.
#[derive(Debug, Clone)]
pub struct RenormalizedSpec {
    pub full: HamiltonianSpec,
    pub free: HamiltonianSpec,
    pub interaction: HamiltonianTerms,
    pub n0: f64,
    pub n0_tail: f64,
    pub nu: f64,
    pub energy_shift: f64,
    pub bookkeeping: Vec<f64>,
}

pub fn renormalized_spec(
    mode_basis: &ModeBasis,
    w: &InteractionSpec,
    t: f64,
) -> Result<RenormalizedSpec> {
    let density = free_density(mode_basis, t)?;
    let n0 = density.value;
    let nu = renormalized_nu(mode_basis, t, w.w0())?;
    let lambda = 1.0 / t;
    let c = normal_ordering_one_body(mode_basis, w);
    let w0 = w.w0();
    let lambdas: Vec<f64> = (0..mode_basis.len()).map(|j| mode_basis.lambda(j)).collect();

    let interaction = HamiltonianTerms {
        one_body: c.iter().map(|&cp| cp - w0 * n0).collect(),
        quartic_factor: 0.5,
        scalar: 0.5 * w0 * n0 * n0,
    };
    let full = HamiltonianSpec {
        terms: HamiltonianTerms {
            one_body: lambdas
                .iter()
                .zip(&interaction.one_body)
                .map(|(&l, &ob)| l + lambda * ob)
                .collect(),
            quartic_factor: lambda * 0.5,
            scalar: lambda * interaction.scalar,
        },
        free_energies: lambdas.clone(),
    };
    let free = HamiltonianSpec {
        terms: HamiltonianTerms {
            one_body: lambdas.clone(),
            quartic_factor: 0.0,
            scalar: 0.0,
        },
        free_energies: lambdas,
    };
    Ok(RenormalizedSpec {
        full,
        free,
        interaction,
        n0,
        n0_tail: density.tail,
        nu,
        energy_shift: lambda * 0.5 * w0 * n0 * n0,
        bookkeeping: c,
    })
}

/// Builds the renormalised Hamiltonian together with its free part and the
/// centred interaction operator.
pub fn build_renormalized_hamiltonian(
    fock: &Arc<FockBasis>,
    mode_basis: &ModeBasis,
    w: &InteractionSpec,
    t: f64,
    budget: &MemoryBudget,
) -> Result<RenormalizedBuild> {
    let spec = renormalized_spec(mode_basis, w, t)?;
    // Three dense operators plus eigenvector allowance.
    check_dense_budget(fock, 4, budget)?;
    let hamiltonian = build_operator(fock, mode_basis, w, &spec.full, budget)?;
    let free_op = build_operator(fock, mode_basis, w, &spec.free, budget)?;
    let interaction = build_operator(
        fock,
        mode_basis,
        w,
        &HamiltonianSpec {
            terms: spec.interaction.clone(),
            free_energies: spec.full.free_energies.clone(),
        },
        budget,
    )?;
    Ok(RenormalizedBuild {
        hamiltonian,
        free: free_op,
        interaction,
        t,
        n0: spec.n0,
        n0_tail: spec.n0_tail,
        nu: spec.nu,
        energy_shift: spec.energy_shift,
        bookkeeping: spec.bookkeeping,
    })
}

/// The `nu`-tuned twin of the renormalised Hamiltonian:
/// `sum_j (|k_j|^2 - nu + c_j / T) n_j + (1/(2T)) Quartic`, with no scalar.
/// Its Gibbs state coincides with the renormalised one; the spectra differ
/// exactly by the recorded `energy_shift`.
pub fn nu_tuned_spec(mode_basis: &ModeBasis, w: &InteractionSpec, t: f64) -> Result<HamiltonianSpec> {
    let nu = renormalized_nu(mode_basis, t, w.w0())?;
    let lambda = 1.0 / t;
    let c = normal_ordering_one_body(mode_basis, w);
    let lambdas: Vec<f64> = (0..mode_basis.len()).map(|j| mode_basis.lambda(j)).collect();
    Ok(HamiltonianSpec {
        terms: HamiltonianTerms {
            one_body: (0..mode_basis.len())
                .map(|j| mode_basis.kinetic(j) - nu + lambda * c[j])
                .collect(),
            quartic_factor: lambda * 0.5,
            scalar: 0.0,
        },
        free_energies: lambdas,
    })
}

/// Single-pass streaming diagnostics: log-partition and per-mode occupations
/// at a given truncation, without retaining any eigenvectors. Used by the
/// truncation-consistency check at enlarged `n_max`, where dense storage of
/// all blocks would be wasteful.
#[derive(Debug, Clone)]
pub struct TruncationProbe {
    pub log_z: f64,
    pub occupations: Vec<f64>,
}

pub fn truncation_probe(
    fock: &Arc<FockBasis>,
    mode_basis: &ModeBasis,
    w: &InteractionSpec,
    spec: &HamiltonianSpec,
    t: f64,
    budget: &MemoryBudget,
) -> Result<TruncationProbe> {
    let m = fock.modes();
    let max_dim = fock.max_block_dim();
    if max_dim > crate::MAX_BLOCK_DIM {
        return Err(Error::BlockTooLarge {
            dim: max_dim,
            cap: crate::MAX_BLOCK_DIM,
        });
    }
    // Peak: one dense block (assembly + eigen workspace) plus the retained
    // eigenvalue/occupation rows.
    let estimate = (max_dim as u64 * max_dim as u64 * 8).saturating_mul(3)
        + (fock.total_dim() as u64) * (m as u64 + 1) * 8;
    budget.check(estimate)?;

    let tables = QuarticTables::new(mode_basis, w);
    // (eigenvalues, per-eigenvector occupation rows) per block.
    let per_block: Vec<(Vec<f64>, DMatrix<f64>)> = (0..fock.blocks().len())
        .into_par_iter()
        .map(|bi| {
            let h = assemble_block(fock, bi, &tables, &spec.terms);
            let eig = h.symmetric_eigen();
            let block = fock.block(bi);
            let d = block.dim();
            let mut occ = DMatrix::<f64>::zeros(d, m);
            for c in 0..d {
                for (s, state) in block.iter_states().enumerate() {
                    let v2 = eig.eigenvectors[(s, c)] * eig.eigenvectors[(s, c)];
                    if v2 != 0.0 {
                        for (j, &o) in state.iter().enumerate() {
                            if o > 0 {
                                occ[(c, j)] += v2 * o as f64;
                            }
                        }
                    }
                }
            }
            (eig.eigenvalues.as_slice().to_vec(), occ)
        })
        .collect();

    let e_min = per_block
        .iter()
        .flat_map(|(ev, _)| ev.iter().copied())
        .fold(f64::INFINITY, f64::min);
    let mut z_shifted = 0.0;
    let mut occ_accum = vec![0.0; m];
    for (evals, occ) in &per_block {
        for (c, &e) in evals.iter().enumerate() {
            let wgt = (-(e - e_min) / t).exp();
            if wgt == 0.0 {
                continue;
            }
            z_shifted += wgt;
            for j in 0..m {
                occ_accum[j] += wgt * occ[(c, j)];
            }
        }
    }
    for o in &mut occ_accum {
        *o /= z_shifted;
    }
    Ok(TruncationProbe {
        log_z: z_shifted.ln() - e_min / t,
        occupations: occ_accum,
    })
}

/// Result of re-running the partition diagnostics with the particle cap
/// raised by [`TRUNCATION_MARGIN`]: if the truncation is adequate, `log Z`
/// and the per-mode occupations barely move, and the movement is bounded by
/// the free-gas tail of the declared reference.
#[derive(Debug, Clone)]
pub struct TruncationConsistency {
    pub n_max: u32,
    pub probe: TruncationProbe,
    pub enlarged: TruncationProbe,
    pub tail: super::state::TruncationTail,
    pub log_z_delta: f64,
    pub occupation_delta: f64,
    pub log_z_allowance: f64,
    pub occupation_allowance: f64,
    pub passed: bool,
}

/// Extra particles granted to the enlarged probe.
pub const TRUNCATION_MARGIN: u32 = 10;

pub fn truncation_consistency_check(
    mode_basis: &ModeBasis,
    w: &InteractionSpec,
    spec: &HamiltonianSpec,
    t: f64,
    n_max: u32,
    budget: &MemoryBudget,
) -> Result<TruncationConsistency> {
    let fock = FockBasis::enumerate(mode_basis, n_max, budget)?;
    let grown = FockBasis::enumerate(mode_basis, n_max + TRUNCATION_MARGIN, budget)?;
    let probe = truncation_probe(&fock, mode_basis, w, spec, t, budget)?;
    let enlarged = truncation_probe(&grown, mode_basis, w, spec, t, budget)?;
    let tail = super::state::free_number_tail(&spec.free_energies, t, n_max);

    let log_z_delta = (probe.log_z - enlarged.log_z).abs();
    let occupation_delta = probe
        .occupations
        .iter()
        .zip(&enlarged.occupations)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let log_z_allowance = 2.0 * tail.weight + 1e-9;
    let occupation_allowance = 2.0 * tail.first_moment + 1e-9;
    let passed = log_z_delta <= log_z_allowance && occupation_delta <= occupation_allowance;
    Ok(TruncationConsistency {
        n_max,
        probe,
        enlarged,
        tail,
        log_z_delta,
        occupation_delta,
        log_z_allowance,
        occupation_allowance,
        passed,
    })
}
