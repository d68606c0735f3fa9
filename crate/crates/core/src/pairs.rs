//! Orthonormal basis of the symmetric two-particle space over `m` modes.
//!
//! Pairs `(i, j)` with `i <= j` are ordered lexicographically. The basis
//! vector of an off-diagonal pair is `(|ij> + |ji>)/sqrt(2)`; a diagonal pair
//! is `|ii>`. All two-body mode-space objects (second moments of classical
//! fields, two-body reduced density matrices, symmetrised tensor products)
//! are expressed in this basis so they can be compared entrywise.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Symmetric pair basis over `m` modes, of dimension `m (m + 1) / 2`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairBasis {
    m: usize,
    pairs: Vec<(usize, usize)>,
}

impl PairBasis {
    pub fn new(m: usize) -> Self {
        let mut pairs = Vec::with_capacity(m * (m + 1) / 2);
        for i in 0..m {
            for j in i..m {
                pairs.push((i, j));
            }
        }
        Self { m, pairs }
    }

    pub fn modes(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// Index of the unordered pair `{i, j}`.
    pub fn index(&self, i: usize, j: usize) -> usize {
        let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
        lo * self.m - (lo * lo - lo) / 2 + (hi - lo)
    }

    /// Normalisation carried by the pair annihilator `a_i a_j` relative to
    /// the orthonormal pair vector: `1/sqrt(2)` on diagonal pairs, 1 otherwise.
    pub fn annihilator_norm(&self, p: usize) -> f64 {
        let (i, j) = self.pairs[p];
        if i == j {
            FRAC_1_SQRT_2
        } else {
            1.0
        }
    }

    /// Components of the pair vector in the plain tensor basis:
    /// `(a, b, c)` entries meaning `c * |a> tensor |b>`.
    fn components(&self, p: usize) -> [(usize, usize, f64); 2] {
        let (i, j) = self.pairs[p];
        if i == j {
            // Second slot is inert (zero coefficient).
            [(i, i, 1.0), (i, i, 0.0)]
        } else {
            [(i, j, FRAC_1_SQRT_2), (j, i, FRAC_1_SQRT_2)]
        }
    }

    /// Coordinates of the symmetric product vector `u tensor u`:
    /// `sqrt(2) u_i u_j` off the diagonal, `u_i^2` on it.
    pub fn amplitude_vector(&self, u: &[Complex64]) -> DVector<Complex64> {
        assert_eq!(u.len(), self.m, "amplitude dimension mismatch");
        DVector::from_iterator(
            self.len(),
            self.pairs.iter().map(|&(i, j)| {
                if i == j {
                    u[i] * u[i]
                } else {
                    std::f64::consts::SQRT_2 * u[i] * u[j]
                }
            }),
        )
    }

    /// Compression of `a tensor b` to the symmetric pair basis. As a
    /// quadratic form on symmetric vectors this is automatically symmetric
    /// under swapping `a` and `b`.
    pub fn sym_tensor_product(
        &self,
        a: &DMatrix<Complex64>,
        b: &DMatrix<Complex64>,
    ) -> DMatrix<Complex64> {
        assert_eq!(a.nrows(), self.m, "left factor dimension mismatch");
        assert_eq!(a.ncols(), self.m, "left factor dimension mismatch");
        assert_eq!(b.nrows(), self.m, "right factor dimension mismatch");
        assert_eq!(b.ncols(), self.m, "right factor dimension mismatch");
        let n = self.len();
        let mut out = DMatrix::zeros(n, n);
        for p in 0..n {
            for q in 0..n {
                let mut s = Complex64::new(0.0, 0.0);
                for &(r, s1, cp) in self.components(p).iter() {
                    if cp == 0.0 {
                        continue;
                    }
                    for &(c, s2, cq) in self.components(q).iter() {
                        if cq == 0.0 {
                            continue;
                        }
                        s += Complex64::new(cp * cq, 0.0) * a[(r, c)] * b[(s1, s2)];
                    }
                }
                out[(p, q)] = s;
            }
        }
        out
    }
}
