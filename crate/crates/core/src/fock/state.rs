//! Block-diagonal mixed states: Gibbs states from per-block eigensolves,
//! reduced density matrices, localisation by partial trace, and
//! number-operator statistics.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pairs::PairBasis;
use crate::spectral::ModeBasis;
use crate::MemoryBudget;

use super::basis::FockBasis;
use super::operator::{BlockedOperator, DiagonalOperator};

/// Blocks whose total probability falls below this are skipped in reduced
/// density matrices and observable sums; the induced error on any observable
/// bounded by `N_max^2` stays far below every tolerance used here.
const NEGLIGIBLE_BLOCK_WEIGHT: f64 = 1e-18;

/// Spectral data of a state restricted to one symmetry block.
#[derive(Debug, Clone)]
pub struct StateBlock {
    /// Probabilities (eigenvalues of the density matrix), `>= 0`.
    pub weights: Vec<f64>,
    /// `ln` of each weight; finite even when the weight underflows to zero
    /// (Gibbs states), `-inf` for exact zeros (rank-deficient states).
    pub log_weights: Vec<f64>,
    /// Eigenvectors as columns, orthonormal.
    pub vectors: DMatrix<f64>,
    /// Generating-operator eigenvalues (ascending) when spectral in origin.
    pub energies: Option<Vec<f64>>,
}

impl StateBlock {
    pub fn dim(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn rank(&self) -> usize {
        self.weights.len()
    }

    pub fn weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Dense density matrix of this block, `V diag(w) V^T`.
    pub fn density(&self) -> DMatrix<f64> {
        let d = self.dim();
        let mut out = DMatrix::<f64>::zeros(d, d);
        for (c, &w) in self.weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let col = self.vectors.column(c);
            for i in 0..d {
                let wi = w * col[i];
                if wi == 0.0 {
                    continue;
                }
                for j in 0..d {
                    out[(i, j)] += wi * col[j];
                }
            }
        }
        out
    }

    /// Diagonal of the density matrix in the occupation basis.
    pub fn populations(&self) -> Vec<f64> {
        let d = self.dim();
        let mut pop = vec![0.0; d];
        for (c, &w) in self.weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let col = self.vectors.column(c);
            for s in 0..d {
                pop[s] += w * col[s] * col[s];
            }
        }
        pop
    }
}

/// A block-diagonal mixed state on a truncated Fock basis.
#[derive(Debug, Clone)]
pub struct FockState {
    basis: Arc<FockBasis>,
    pub blocks: Vec<StateBlock>,
}

/// Free-reference estimate of the probability mass and first moment carried
/// by particle numbers beyond the truncation.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TruncationTail {
    /// `P(N > n_max)` under the free product state.
    pub weight: f64,
    /// `E[N 1(N > n_max)]` under the free product state.
    pub first_moment: f64,
}

/// Gibbs state together with its partition data and truncation tail.
#[derive(Debug, Clone)]
pub struct SpectralGibbsState {
    pub state: FockState,
    pub t: f64,
    pub log_z: f64,
    /// Smallest eigenvalue across all blocks (the shift used for overflow
    /// safety).
    pub ground_energy: f64,
    /// Present when the generating operator declared a free reference.
    pub tail: Option<TruncationTail>,
}

/// Thermal state of a blocked operator at temperature `t`: dense symmetric
/// eigensolve per block, Boltzmann weights with a global max-shift.
pub fn gibbs_state(h: &BlockedOperator, t: f64) -> Result<SpectralGibbsState> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::InvalidParameter {
            name: "t",
            value: t,
            message: "temperature must be finite and positive",
        });
    }
    let basis = h.basis().clone();
    let max_dim = basis.max_block_dim();
    if max_dim > crate::MAX_BLOCK_DIM {
        return Err(Error::BlockTooLarge {
            dim: max_dim,
            cap: crate::MAX_BLOCK_DIM,
        });
    }

    // Eigendecompose every block (ascending eigenvalue order).
    let decomposed: Vec<(Vec<f64>, DMatrix<f64>)> = h
        .blocks()
        .par_iter()
        .map(|block| {
            let eig = block.clone().symmetric_eigen();
            let d = eig.eigenvalues.len();
            let mut order: Vec<usize> = (0..d).collect();
            order.sort_by(|&a, &b| {
                eig.eigenvalues[a]
                    .partial_cmp(&eig.eigenvalues[b])
                    .expect("eigenvalues are finite")
            });
            let evals: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
            let mut vecs = DMatrix::<f64>::zeros(d, d);
            for (new, &old) in order.iter().enumerate() {
                vecs.set_column(new, &eig.eigenvectors.column(old));
            }
            (evals, vecs)
        })
        .collect();

    let e_min = decomposed
        .iter()
        .flat_map(|(ev, _)| ev.iter().copied())
        .fold(f64::INFINITY, f64::min);
    let z_shifted: f64 = decomposed
        .iter()
        .flat_map(|(ev, _)| ev.iter().map(|e| (-(e - e_min) / t).exp()))
        .sum();
    let log_z = z_shifted.ln() - e_min / t;

    let blocks: Vec<StateBlock> = decomposed
        .into_iter()
        .map(|(evals, vectors)| {
            let weights: Vec<f64> = evals
                .iter()
                .map(|e| (-(e - e_min) / t).exp() / z_shifted)
                .collect();
            let log_weights: Vec<f64> = evals
                .iter()
                .map(|e| -(e - e_min) / t - z_shifted.ln())
                .collect();
            StateBlock {
                weights,
                log_weights,
                vectors,
                energies: Some(evals),
            }
        })
        .collect();

    let tail = h
        .free_energies()
        .map(|en| free_number_tail(en, t, basis.n_max()));

    Ok(SpectralGibbsState {
        state: FockState { basis, blocks },
        t,
        log_z,
        ground_energy: e_min,
        tail,
    })
}

impl FockState {
    pub fn new(basis: Arc<FockBasis>, blocks: Vec<StateBlock>) -> Result<Self> {
        if blocks.len() != basis.blocks().len() {
            return Err(Error::DimensionMismatch(
                "state block count differs from basis".into(),
            ));
        }
        for (sb, bb) in blocks.iter().zip(basis.blocks()) {
            if sb.dim() != bb.dim() {
                return Err(Error::DimensionMismatch(
                    "state block dimension differs from basis".into(),
                ));
            }
        }
        Ok(Self { basis, blocks })
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    /// Total probability; 1 for Gibbs states, possibly less for truncated
    /// constructions (e.g. coherent projections), never more.
    pub fn weight_sum(&self) -> f64 {
        self.blocks.iter().map(StateBlock::weight).sum()
    }

    /// `Tr[rho ln rho] = sum w ln w` over all blocks (nonpositive).
    pub fn trace_rho_ln_rho(&self) -> f64 {
        self.blocks
            .iter()
            .flat_map(|b| b.weights.iter().zip(&b.log_weights))
            .filter(|(&w, _)| w > 0.0)
            .map(|(&w, &lw)| w * lw)
            .sum()
    }

    /// Expectation of a dense blocked operator.
    pub fn expectation(&self, op: &BlockedOperator) -> Result<f64> {
        if !self.basis.same_structure(op.basis()) {
            return Err(Error::MismatchedBases);
        }
        let mut acc = 0.0;
        for (sb, mat) in self.blocks.iter().zip(op.blocks()) {
            if sb.weight() < NEGLIGIBLE_BLOCK_WEIGHT {
                continue;
            }
            for (c, &w) in sb.weights.iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                let v = sb.vectors.column(c);
                acc += w * (mat * v).dot(&v);
            }
        }
        Ok(acc)
    }

    /// Expectation of a diagonal observable via populations.
    pub fn expectation_diagonal(&self, op: &DiagonalOperator) -> Result<f64> {
        Ok(self.diagonal_moments(op, 1)?[0])
    }

    /// Raw moments `Tr[A^p rho]`, `p = 1..=orders`, of a diagonal observable.
    pub fn diagonal_moments(&self, op: &DiagonalOperator, orders: usize) -> Result<Vec<f64>> {
        if !self.basis.same_structure(op.basis()) {
            return Err(Error::MismatchedBases);
        }
        let mut acc = vec![0.0; orders];
        for (bi, sb) in self.blocks.iter().enumerate() {
            if sb.weight() < NEGLIGIBLE_BLOCK_WEIGHT {
                continue;
            }
            let pops = sb.populations();
            let vals = op.block_values(bi);
            for (s, &p) in pops.iter().enumerate() {
                let mut v = 1.0;
                for slot in acc.iter_mut() {
                    v *= vals[s];
                    *slot += p * v;
                }
            }
        }
        Ok(acc)
    }

    /// Mean, variance, and third central moment of the particle number over
    /// a mode subset.
    pub fn number_statistics(&self, modes: &[usize]) -> Result<NumberStatistics> {
        let op = DiagonalOperator::number(&self.basis, modes);
        let m = self.diagonal_moments(&op, 3)?;
        let mean = m[0];
        Ok(NumberStatistics {
            mean,
            variance: m[1] - mean * mean,
            third_central: m[2] - 3.0 * mean * m[1] + 2.0 * mean * mean * mean,
        })
    }

    /// One- or two-body reduced density matrix. `k = 1` is on modes
    /// (`Tr = <N>`); `k = 2` is on the symmetric pair basis
    /// (`Tr = <N(N-1)>/2`). Entries are real; the complex type keeps the
    /// interface uniform with classical moment matrices.
    pub fn reduced_density_matrix(&self, k: usize) -> Result<DMatrix<Complex64>> {
        match k {
            1 => Ok(self.rdm1()),
            2 => Ok(self.rdm2()),
            _ => Err(Error::Precondition(format!(
                "reduced density matrices support k in {{1,2}}, got {k}"
            ))),
        }
    }

    fn rdm1(&self) -> DMatrix<Complex64> {
        let m = self.basis.modes();
        let momenta = self.basis.mode_momenta();
        let mut gamma = DMatrix::<f64>::zeros(m, m);
        for (bi, sb) in self.blocks.iter().enumerate() {
            if sb.weight() < NEGLIGIBLE_BLOCK_WEIGHT {
                continue;
            }
            let block = self.basis.block(bi);
            if block.n() == 0 {
                continue;
            }
            let mom = block.momentum();
            // a_i maps this block into (n-1, mom - k_i).
            let targets: Vec<Option<usize>> = (0..m)
                .map(|i| {
                    self.basis
                        .block_of(block.n() - 1, [mom[0] - momenta[i][0], mom[1] - momenta[i][1]])
                })
                .collect();
            let maps: Vec<Option<DMatrix<f64>>> = (0..m)
                .map(|i| {
                    let tb = targets[i]?;
                    Some(annihilate(block, self.basis.block(tb), &sb.vectors, &[i]))
                })
                .collect();
            for i in 0..m {
                let (Some(ti), Some(ai)) = (targets[i], maps[i].as_ref()) else {
                    continue;
                };
                for j in i..m {
                    let (Some(tj), Some(aj)) = (targets[j], maps[j].as_ref()) else {
                        continue;
                    };
                    if ti != tj {
                        continue;
                    }
                    let val = weighted_column_dot(ai, aj, &sb.weights);
                    gamma[(i, j)] += val;
                    if i != j {
                        gamma[(j, i)] += val;
                    }
                }
            }
        }
        gamma.map(|x| Complex64::new(x, 0.0))
    }

    fn rdm2(&self) -> DMatrix<Complex64> {
        let m = self.basis.modes();
        let momenta = self.basis.mode_momenta();
        let pb = PairBasis::new(m);
        let np = pb.len();
        let mut gamma = DMatrix::<f64>::zeros(np, np);
        for (bi, sb) in self.blocks.iter().enumerate() {
            if sb.weight() < NEGLIGIBLE_BLOCK_WEIGHT {
                continue;
            }
            let block = self.basis.block(bi);
            if block.n() < 2 {
                continue;
            }
            let mom = block.momentum();
            let targets: Vec<Option<usize>> = pb
                .pairs()
                .iter()
                .map(|&(i, j)| {
                    self.basis.block_of(
                        block.n() - 2,
                        [
                            mom[0] - momenta[i][0] - momenta[j][0],
                            mom[1] - momenta[i][1] - momenta[j][1],
                        ],
                    )
                })
                .collect();
            let maps: Vec<Option<DMatrix<f64>>> = (0..np)
                .map(|p| {
                    let tb = targets[p]?;
                    let (i, j) = pb.pairs()[p];
                    Some(annihilate(block, self.basis.block(tb), &sb.vectors, &[i, j]))
                })
                .collect();
            for p in 0..np {
                let (Some(tp), Some(ap)) = (targets[p], maps[p].as_ref()) else {
                    continue;
                };
                for q in p..np {
                    let (Some(tq), Some(aq)) = (targets[q], maps[q].as_ref()) else {
                        continue;
                    };
                    if tp != tq {
                        continue;
                    }
                    let val = pb.annihilator_norm(p)
                        * pb.annihilator_norm(q)
                        * weighted_column_dot(ap, aq, &sb.weights);
                    gamma[(p, q)] += val;
                    if p != q {
                        gamma[(q, p)] += val;
                    }
                }
            }
        }
        gamma.map(|x| Complex64::new(x, 0.0))
    }

    /// Partial trace onto a mode subset: returns the localised state on the
    /// Fock basis generated by `p_modes` with the same `n_max`.
    pub fn localize(&self, p_modes: &[usize], budget: &MemoryBudget) -> Result<FockState> {
        let m = self.basis.modes();
        for &p in p_modes {
            if p >= m {
                return Err(Error::Precondition(format!(
                    "mode index {p} out of range for {m} modes"
                )));
            }
        }
        let mut sorted = p_modes.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        let p_momenta: Vec<[i64; 2]> = sorted
            .iter()
            .map(|&j| self.basis.mode_momenta()[j])
            .collect();
        let small = FockBasis::enumerate_with_momenta(p_momenta, self.basis.n_max(), budget)?;

        let mut acc: Vec<DMatrix<f64>> = small
            .blocks()
            .iter()
            .map(|b| DMatrix::zeros(b.dim(), b.dim()))
            .collect();

        let mut p_occ = vec![0u16; sorted.len()];
        for (bi, sb) in self.blocks.iter().enumerate() {
            if sb.weight() < NEGLIGIBLE_BLOCK_WEIGHT {
                continue;
            }
            let block = self.basis.block(bi);
            // Group states of this block by their occupation outside P;
            // each group contributes a small weighted Gram matrix to one
            // localized block. BTreeMap keeps the accumulation order (and
            // therefore the floating-point rounding) reproducible.
            let mut groups: std::collections::BTreeMap<Vec<u16>, Vec<(usize, usize, usize)>> =
                std::collections::BTreeMap::new();
            for (s, state) in block.iter_states().enumerate() {
                for (slot, &j) in sorted.iter().enumerate() {
                    p_occ[slot] = state[j];
                }
                let n_p: u32 = p_occ.iter().map(|&o| o as u32).sum();
                let mom_p = small.momentum_of(&p_occ);
                let tb = small
                    .block_of(n_p, mom_p)
                    .expect("restricted occupation exists in localized basis");
                let ti = small
                    .block(tb)
                    .find(&p_occ)
                    .expect("restricted occupation exists in localized block");
                let mut q_occ = state.to_vec();
                for &j in &sorted {
                    q_occ[j] = 0;
                }
                groups.entry(q_occ).or_default().push((s, tb, ti));
            }
            for members in groups.values() {
                for (a_pos, &(sa, tba, tia)) in members.iter().enumerate() {
                    for &(sb_idx, tbb, tib) in &members[a_pos..] {
                        debug_assert_eq!(tba, tbb, "group momenta/number must agree");
                        let mut g = 0.0;
                        for (c, &w) in sb.weights.iter().enumerate() {
                            if w == 0.0 {
                                continue;
                            }
                            g += w * sb.vectors[(sa, c)] * sb.vectors[(sb_idx, c)];
                        }
                        acc[tba][(tia, tib)] += g;
                        if tia != tib {
                            acc[tba][(tib, tia)] += g;
                        }
                    }
                }
            }
        }

        let blocks = acc
            .into_iter()
            .map(|mat| {
                let eig = mat.symmetric_eigen();
                // Numerical eigenvalues at the support tolerance are clipped
                // to exact zeros so downstream entropy code can classify the
                // null space unambiguously.
                let weights: Vec<f64> = eig
                    .eigenvalues
                    .iter()
                    .map(|&w| {
                        if w > crate::entropy::ZERO_WEIGHT_TOL {
                            w
                        } else {
                            0.0
                        }
                    })
                    .collect();
                let log_weights = weights
                    .iter()
                    .map(|&w| if w > 0.0 { w.ln() } else { f64::NEG_INFINITY })
                    .collect();
                StateBlock {
                    weights,
                    log_weights,
                    vectors: eig.eigenvectors,
                    energies: None,
                }
            })
            .collect();
        FockState::new(small, blocks)
    }
}

/// Mean, variance and third central moment of a number observable.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct NumberStatistics {
    pub mean: f64,
    pub variance: f64,
    pub third_central: f64,
}

/// Applies the product of annihilators `prod a_{modes}` to all eigencolumns:
/// returns the matrix `A V` living on the target block.
fn annihilate(
    block: &super::basis::FockBlock,
    target: &super::basis::FockBlock,
    vectors: &DMatrix<f64>,
    modes: &[usize],
) -> DMatrix<f64> {
    let r = vectors.ncols();
    let mut out = DMatrix::<f64>::zeros(target.dim(), r);
    let mut scratch = vec![0u16; block.state(0).len()];
    'state: for (s, state) in block.iter_states().enumerate() {
        scratch.copy_from_slice(state);
        let mut coeff = 1.0;
        for &mode in modes {
            if scratch[mode] == 0 {
                continue 'state;
            }
            coeff *= scratch[mode] as f64;
            scratch[mode] -= 1;
        }
        let coeff = coeff.sqrt();
        let Some(t) = target.find(&scratch) else {
            continue;
        };
        for c in 0..r {
            out[(t, c)] += coeff * vectors[(s, c)];
        }
    }
    out
}

/// `sum_c w_c <a_col_c, b_col_c>`.
fn weighted_column_dot(a: &DMatrix<f64>, b: &DMatrix<f64>, weights: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (c, &w) in weights.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        acc += w * a.column(c).dot(&b.column(c));
    }
    acc
}

/// The pure vacuum: unit weight on the zero-particle block, rank zero
/// everywhere else.
pub fn vacuum_state(basis: &Arc<FockBasis>) -> Result<FockState> {
    let blocks = basis
        .blocks()
        .iter()
        .map(|b| {
            let d = b.dim();
            if b.n() == 0 {
                StateBlock {
                    weights: vec![1.0],
                    log_weights: vec![0.0],
                    vectors: DMatrix::identity(d, d),
                    energies: None,
                }
            } else {
                StateBlock {
                    weights: Vec::new(),
                    log_weights: Vec::new(),
                    vectors: DMatrix::zeros(d, 0),
                    energies: None,
                }
            }
        })
        .collect();
    FockState::new(basis.clone(), blocks)
}

/// Free-gas distribution of the total particle number: per-mode geometric
/// laws with ratio `e^{-e_j/t}`, convolved and truncated at `n_max`.
pub fn free_number_tail(energies: &[f64], t: f64, n_max: u32) -> TruncationTail {
    let n = n_max as usize;
    let mut dist = vec![0.0; n + 1];
    dist[0] = 1.0;
    let mut mean_total = 0.0;
    for &e in energies {
        let r = (-e / t).exp();
        if r >= 1.0 {
            // Nonpositive one-body energy: no geometric tail; treat as
            // saturated (weight cannot be bounded).
            return TruncationTail {
                weight: 1.0,
                first_moment: f64::INFINITY,
            };
        }
        mean_total += r / (1.0 - r);
        // Truncated convolution with the geometric pmf (1-r) r^k.
        let mut prev = 0.0;
        for slot in dist.iter_mut() {
            let v = r * prev + (1.0 - r) * *slot;
            *slot = v;
            prev = v;
        }
    }
    let mass: f64 = dist.iter().sum();
    let included_mean: f64 = dist.iter().enumerate().map(|(k, &p)| k as f64 * p).sum();
    TruncationTail {
        weight: (1.0 - mass).max(0.0),
        first_moment: (mean_total - included_mean).max(0.0),
    }
}

/// Smallest `n_max` whose free-gas tail weight is below `target`.
pub fn choose_n_max(energies: &[f64], t: f64, target: f64) -> Result<u32> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::InvalidParameter {
            name: "tail_target",
            value: target,
            message: "tail target must lie in (0, 1)",
        });
    }
    let mean: f64 = energies
        .iter()
        .map(|&e| {
            let r = (-e / t).exp();
            r / (1.0 - r)
        })
        .sum();
    if !mean.is_finite() {
        return Err(Error::Precondition(
            "free reference has nonpositive one-body energy".into(),
        ));
    }
    let mut hi = (mean.ceil() as u32).saturating_add(8);
    loop {
        if free_number_tail(energies, t, hi).weight < target {
            break;
        }
        if hi > 200_000 {
            return Err(Error::Precondition(format!(
                "tail target {target} unreachable below n_max = 200000"
            )));
        }
        hi = hi + hi / 3 + 8;
    }
    let mut lo = 0u32;
    while lo < hi {
        let mid = (lo + hi) / 2;
        if free_number_tail(energies, t, mid).weight < target {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(hi)
}

/// Position-space kernel of a one-body reduced density matrix on a grid of
/// torus points: `K(x, y) = sum_{ij} G_{ij} e^{2 pi i n_i . x} e^{-2 pi i n_j . y}`.
pub fn position_kernel(
    rdm1: &DMatrix<Complex64>,
    basis: &ModeBasis,
    points: &[[f64; 2]],
) -> DMatrix<Complex64> {
    let m = basis.len();
    assert_eq!(rdm1.nrows(), m, "kernel needs a one-body matrix on modes");
    let npts = points.len();
    let mut waves = DMatrix::<Complex64>::zeros(npts, m);
    for (a, x) in points.iter().enumerate() {
        for (j, mode) in basis.modes().iter().enumerate() {
            let phase =
                2.0 * std::f64::consts::PI * (mode.n[0] as f64 * x[0] + mode.n[1] as f64 * x[1]);
            waves[(a, j)] = Complex64::new(phase.cos(), phase.sin());
        }
    }
    &waves * rdm1 * waves.adjoint()
}

/// Parallel map over (block index, state block) pairs with ordered collection.
pub fn par_map_blocks<T: Send, F: Fn(usize, &StateBlock) -> T + Sync>(
    state: &FockState,
    f: F,
) -> Vec<T> {
    state
        .blocks
        .par_iter()
        .enumerate()
        .map(|(i, b)| f(i, b))
        .collect()
}
