//! Truncated bosonic Fock bases blocked by particle number and total
//! momentum.
//!
//! States are occupation vectors over the mode basis with total particle
//! number at most `n_max`. Every operator assembled in this crate conserves
//! both the total number and the total (integer lattice) momentum, so states
//! are grouped into `(N, momentum)` blocks; all linear algebra then happens
//! block by block. Occupation vectors are stored flat (`u16` per mode) and
//! lexicographically sorted within each block, so lookups are binary
//! searches and no per-state heap allocation survives enumeration.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::spectral::ModeBasis;
use crate::MemoryBudget;

/// One `(N, momentum)` symmetry block.
#[derive(Debug, Clone)]
pub struct FockBlock {
    n: u32,
    momentum: [i64; 2],
    m: usize,
    /// Flat occupation storage, `m` entries per state, lexicographic order.
    states: Vec<u16>,
}

impl FockBlock {
    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn momentum(&self) -> [i64; 2] {
        self.momentum
    }

    pub fn dim(&self) -> usize {
        self.states.len() / self.m
    }

    pub fn state(&self, i: usize) -> &[u16] {
        &self.states[i * self.m..(i + 1) * self.m]
    }

    pub fn iter_states(&self) -> impl Iterator<Item = &[u16]> {
        self.states.chunks_exact(self.m)
    }

    /// Position of an occupation vector within the block.
    pub fn find(&self, occ: &[u16]) -> Option<usize> {
        debug_assert_eq!(occ.len(), self.m);
        let mut lo = 0usize;
        let mut hi = self.dim();
        while lo < hi {
            let mid = (lo + hi) / 2;
            match self.state(mid).cmp(occ) {
                std::cmp::Ordering::Less => lo = mid + 1,
                std::cmp::Ordering::Greater => hi = mid,
                std::cmp::Ordering::Equal => return Some(mid),
            }
        }
        None
    }
}

/// Blocked enumeration of all occupation vectors with `sum n_j <= n_max`.
#[derive(Debug)]
pub struct FockBasis {
    momenta: Vec<[i64; 2]>,
    n_max: u32,
    blocks: Vec<FockBlock>,
    block_index: HashMap<(u32, [i64; 2]), usize>,
    total_dim: usize,
}

fn binomial(n: u64, k: u64) -> u128 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

impl FockBasis {
    /// Enumerates the truncated Fock basis over the modes of `basis`.
    ///
    /// The budget guards the enumeration itself (state storage); dense
    /// operator storage is checked separately by the operator builders.
    pub fn enumerate(basis: &ModeBasis, n_max: u32, budget: &MemoryBudget) -> Result<Arc<Self>> {
        Self::enumerate_with_momenta(basis.lattice_vectors(), n_max, budget)
    }

    /// Enumerates a basis with explicitly supplied per-mode momenta. Used by
    /// localisation (mode subsets) and by tests that want a nonstandard
    /// block structure (e.g. all momenta zero to disable momentum blocking).
    pub fn enumerate_with_momenta(
        momenta: Vec<[i64; 2]>,
        n_max: u32,
        budget: &MemoryBudget,
    ) -> Result<Arc<Self>> {
        let m = momenta.len();
        if m == 0 {
            return Err(Error::Precondition("mode set must be nonempty".into()));
        }
        let total = binomial(n_max as u64 + m as u64, m as u64);
        let state_bytes = total.saturating_mul(2 * m as u128);
        if state_bytes > budget.bytes() as u128 {
            return Err(Error::BudgetExceeded {
                estimate_mb: state_bytes as f64 / (1024.0 * 1024.0),
                budget_mb: budget.megabytes as f64,
            });
        }
        let total = total as usize;

        // Depth-first enumeration in lexicographic order; BTreeMap keys give
        // the deterministic block order (N ascending, momentum lex).
        let mut buckets: BTreeMap<(u32, [i64; 2]), Vec<u16>> = BTreeMap::new();
        let mut occ = vec![0u16; m];
        fill(&mut buckets, &mut occ, 0, n_max, &momenta);

        let mut blocks = Vec::with_capacity(buckets.len());
        let mut block_index = HashMap::with_capacity(buckets.len());
        for ((n, momentum), states) in buckets {
            block_index.insert((n, momentum), blocks.len());
            blocks.push(FockBlock {
                n,
                momentum,
                m,
                states,
            });
        }
        let basis = Self {
            momenta,
            n_max,
            blocks,
            block_index,
            total_dim: total,
        };
        debug_assert_eq!(
            basis.blocks.iter().map(|b| b.dim()).sum::<usize>(),
            basis.total_dim
        );
        Ok(Arc::new(basis))
    }

    pub fn modes(&self) -> usize {
        self.momenta.len()
    }

    pub fn mode_momenta(&self) -> &[[i64; 2]] {
        &self.momenta
    }

    pub fn n_max(&self) -> u32 {
        self.n_max
    }

    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    pub fn blocks(&self) -> &[FockBlock] {
        &self.blocks
    }

    pub fn block(&self, i: usize) -> &FockBlock {
        &self.blocks[i]
    }

    pub fn block_of(&self, n: u32, momentum: [i64; 2]) -> Option<usize> {
        self.block_index.get(&(n, momentum)).copied()
    }

    /// Total lattice momentum of an occupation vector.
    pub fn momentum_of(&self, occ: &[u16]) -> [i64; 2] {
        let mut p = [0i64, 0];
        for (o, k) in occ.iter().zip(&self.momenta) {
            p[0] += *o as i64 * k[0];
            p[1] += *o as i64 * k[1];
        }
        p
    }

    /// Structural equality: same mode momenta and truncation, hence
    /// identical block layout. States on structurally equal bases can be
    /// combined even if the `Arc`s differ.
    pub fn same_structure(&self, other: &Self) -> bool {
        self.n_max == other.n_max && self.momenta == other.momenta
    }

    pub fn max_block_dim(&self) -> usize {
        self.blocks.iter().map(|b| b.dim()).max().unwrap_or(0)
    }

    pub fn sum_dim_sq(&self) -> u64 {
        self.blocks.iter().map(|b| (b.dim() as u64).pow(2)).sum()
    }

    /// Bytes needed to hold one dense `f64` matrix per block.
    pub fn dense_bytes(&self) -> u64 {
        self.sum_dim_sq().saturating_mul(8)
    }
}

fn fill(
    buckets: &mut BTreeMap<(u32, [i64; 2]), Vec<u16>>,
    occ: &mut Vec<u16>,
    mode: usize,
    remaining: u32,
    momenta: &[[i64; 2]],
) {
    if mode == occ.len() {
        let n: u32 = occ.iter().map(|&o| o as u32).sum();
        let mut p = [0i64, 0];
        for (o, k) in occ.iter().zip(momenta) {
            p[0] += *o as i64 * k[0];
            p[1] += *o as i64 * k[1];
        }
        buckets.entry((n, p)).or_default().extend_from_slice(occ);
        return;
    }
    for cnt in 0..=remaining {
        occ[mode] = cnt as u16;
        fill(buckets, occ, mode + 1, remaining - cnt, momenta);
    }
    occ[mode] = 0;
}
