//! Plane-wave mode bases on the unit torus and free-gas spectral data.
//!
//! Modes are indexed by integer lattice vectors `n` (the physical wavevector
//! is `2*pi*n`), carry the shifted dispersion `lambda = |2*pi*n|^2 + kappa`,
//! and are kept when `lambda <= cutoff`. The basis is sorted by nondecreasing
//! `lambda` with lexicographic tie-break on `n`, so the zero mode always sits
//! at index 0 and the basis is closed under negation.

use std::collections::HashMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A single plane-wave mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    /// Integer lattice vector; the wavevector is `2*pi*n`. For dimension 1
    /// the second component is always 0.
    pub n: [i64; 2],
    /// Shifted dispersion `|2*pi*n|^2 + kappa`.
    pub lambda: f64,
}

impl Mode {
    /// Squared integer length `|n|^2`.
    pub fn n_sq(&self) -> i64 {
        self.n[0] * self.n[0] + self.n[1] * self.n[1]
    }
}

/// Finite set of plane-wave modes below a dispersion cutoff.
#[derive(Debug, Clone)]
pub struct ModeBasis {
    dim: u8,
    kappa: f64,
    cutoff: f64,
    modes: Vec<Mode>,
    index: HashMap<[i64; 2], usize>,
    /// Dispersion of the lowest excluded shell and its multiplicity,
    /// used for mode-truncation tail estimates.
    first_omitted: (f64, usize),
}

fn four_pi_sq() -> f64 {
    4.0 * PI * PI
}

impl ModeBasis {
    /// Builds the basis of all modes with `|2*pi*n|^2 + kappa <= cutoff` in
    /// spatial dimension `dim` (1 or 2).
    pub fn new(dim: u8, kappa: f64, cutoff: f64) -> Result<Self> {
        if !(dim == 1 || dim == 2) {
            return Err(Error::InvalidParameter {
                name: "dim",
                value: dim as f64,
                message: "spatial dimension must be 1 or 2",
            });
        }
        if !(kappa.is_finite() && kappa > 0.0) {
            return Err(Error::InvalidParameter {
                name: "kappa",
                value: kappa,
                message: "mass shift must be finite and positive",
            });
        }
        if !cutoff.is_finite() {
            return Err(Error::InvalidParameter {
                name: "cutoff",
                value: cutoff,
                message: "mode cutoff must be finite",
            });
        }
        if cutoff < kappa {
            return Err(Error::EmptyModeBasis { cutoff, kappa });
        }

        // Window radius large enough to contain every included mode plus at
        // least one full excluded shell in every direction.
        let max_included = ((cutoff - kappa) / four_pi_sq()).sqrt();
        let radius = max_included.ceil() as i64 + 2;

        let mut modes = Vec::new();
        let mut excluded: Vec<Mode> = Vec::new();
        let push = |n: [i64; 2], modes: &mut Vec<Mode>, excluded: &mut Vec<Mode>| {
            let n_sq = (n[0] * n[0] + n[1] * n[1]) as f64;
            let lambda = four_pi_sq() * n_sq + kappa;
            let mode = Mode { n, lambda };
            if lambda <= cutoff {
                modes.push(mode);
            } else {
                excluded.push(mode);
            }
        };
        if dim == 1 {
            for a in -radius..=radius {
                push([a, 0], &mut modes, &mut excluded);
            }
        } else {
            for a in -radius..=radius {
                for b in -radius..=radius {
                    push([a, b], &mut modes, &mut excluded);
                }
            }
        }
        if modes.is_empty() {
            return Err(Error::EmptyModeBasis { cutoff, kappa });
        }

        let order = |a: &Mode, b: &Mode| {
            a.lambda
                .partial_cmp(&b.lambda)
                .expect("dispersions are finite")
                .then(a.n.cmp(&b.n))
        };
        modes.sort_by(order);
        excluded.sort_by(order);
        let lowest = excluded.first().expect("window always contains excluded modes");
        let multiplicity = excluded
            .iter()
            .take_while(|m| m.n_sq() == lowest.n_sq())
            .count();
        let first_omitted = (lowest.lambda, multiplicity);

        let index = modes.iter().enumerate().map(|(i, m)| (m.n, i)).collect();
        Ok(Self {
            dim,
            kappa,
            cutoff,
            modes,
            index,
            first_omitted,
        })
    }

    pub fn dim(&self) -> u8 {
        self.dim
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    /// Shifted dispersion of mode `j`.
    pub fn lambda(&self, j: usize) -> f64 {
        self.modes[j].lambda
    }

    /// Kinetic part `|2*pi*n_j|^2 = lambda_j - kappa`.
    pub fn kinetic(&self, j: usize) -> f64 {
        four_pi_sq() * self.modes[j].n_sq() as f64
    }

    /// Integer lattice vectors of all modes, in basis order.
    pub fn lattice_vectors(&self) -> Vec<[i64; 2]> {
        self.modes.iter().map(|m| m.n).collect()
    }

    /// Index of the mode with lattice vector `n`, if included.
    pub fn index_of(&self, n: [i64; 2]) -> Option<usize> {
        self.index.get(&n).copied()
    }

    /// Index of the negated mode `-n_j`; the basis is closed under negation.
    pub fn negated(&self, j: usize) -> usize {
        let n = self.modes[j].n;
        self.index[&[-n[0], -n[1]]]
    }

    /// Index of the mode at `n_j + k`, if it lies inside the cutoff.
    pub fn shifted(&self, j: usize, k: [i64; 2]) -> Option<usize> {
        let n = self.modes[j].n;
        self.index_of([n[0] + k[0], n[1] + k[1]])
    }

    /// Dispersion of the lowest excluded shell together with the number of
    /// lattice vectors on it.
    pub fn first_omitted_shell(&self) -> (f64, usize) {
        self.first_omitted
    }
}

/// Bose-Einstein occupation `1/(e^{lambda/t} - 1)` of a mode with dispersion
/// `lambda > 0` at temperature `t > 0`. Values below `1e-300` are flushed to
/// zero so deep tails never produce subnormal noise.
pub fn free_occupation(lambda: f64, t: f64) -> f64 {
    let x = lambda / t;
    let occ = 1.0 / x.exp_m1();
    if occ.is_finite() && occ >= 1e-300 {
        occ
    } else {
        0.0
    }
}

/// Expected particle number of the free gas on a mode basis, together with
/// the contribution the lowest excluded shell would have added.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FreeDensity {
    /// `sum_j 1/(e^{lambda_j/t} - 1)` over the included modes.
    pub value: f64,
    /// Occupation of the lowest excluded shell times its multiplicity.
    pub tail: f64,
}

/// Free expected particle number at temperature `t`, with the mode-cutoff
/// tail estimate.
pub fn free_density(basis: &ModeBasis, t: f64) -> Result<FreeDensity> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::InvalidParameter {
            name: "t",
            value: t,
            message: "temperature must be finite and positive",
        });
    }
    let value = basis.modes().iter().map(|m| free_occupation(m.lambda, t)).sum();
    let (lambda_out, mult) = basis.first_omitted_shell();
    let tail = free_occupation(lambda_out, t) * mult as f64;
    Ok(FreeDensity { value, tail })
}

/// Density-matched chemical potential `nu = w0 * N0 / t - kappa`, where `N0`
/// is the free expected particle number on the basis and the coupling
/// constant is tied to temperature as `1/t`.
pub fn renormalized_nu(basis: &ModeBasis, t: f64, w0: f64) -> Result<f64> {
    let n0 = free_density(basis, t)?.value;
    Ok(w0 * n0 / t - basis.kappa())
}

/// Even, nonnegative interaction table in Fourier representation, indexed by
/// integer lattice vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionSpec {
    entries: Vec<([i64; 2], f64)>,
}

impl InteractionSpec {
    /// Validates and stores an interaction table. Every coefficient must be
    /// finite and nonnegative, lattice vectors must be distinct, and the
    /// table must be even: a coefficient at `k` requires the equal
    /// coefficient at `-k`.
    pub fn new(mut entries: Vec<([i64; 2], f64)>) -> Result<Self> {
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        for w in entries.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::DuplicateInteraction { k: w[0].0 });
            }
        }
        for &(k, v) in &entries {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::NegativeInteraction { k, value: v });
            }
        }
        let lookup: HashMap<[i64; 2], f64> = entries.iter().copied().collect();
        for &(k, v) in &entries {
            let neg = [-k[0], -k[1]];
            let neg_value = lookup.get(&neg).copied().unwrap_or(0.0);
            if neg_value != v {
                return Err(Error::UnevenInteraction {
                    k,
                    value: v,
                    neg,
                    neg_value,
                });
            }
        }
        Ok(Self { entries })
    }

    /// Uniform on-site repulsion of unit strength: `w(0) = strength` only.
    pub fn delta(strength: f64) -> Result<Self> {
        Self::new(vec![([0, 0], strength)])
    }

    /// Coefficient at lattice vector `k` (zero if absent).
    pub fn value(&self, k: [i64; 2]) -> f64 {
        self.entries
            .binary_search_by(|e| e.0.cmp(&k))
            .map(|i| self.entries[i].1)
            .unwrap_or(0.0)
    }

    /// Coefficient at the zero vector.
    pub fn w0(&self) -> f64 {
        self.value([0, 0])
    }

    /// All stored `(k, w(k))` pairs, sorted by lattice vector.
    pub fn support(&self) -> &[([i64; 2], f64)] {
        &self.entries
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|&(_, v)| v == 0.0)
    }
}
