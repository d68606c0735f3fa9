//! Coherent states on the truncated Fock space, Husimi lower symbols and
//! their moments, the quantitative tensor-moment (de Finetti) gap, and the
//! quantum-to-classical entropy chain.
//!
//! All lower-symbol quadratures here target mode sets `P` of size at most
//! two. Because distinct modes carry distinct lattice momenta, every
//! `(particle number, momentum)` block of such a localized basis is
//! one-dimensional, so localized states are diagonal in the occupation
//! basis and their Husimi densities depend only on the radial coordinates.
//! Angular integrals then reduce to exact factors of `2*pi` (the equal-weight
//! trapezoid rule is exact for constants and kills every nonzero harmonic),
//! which the implementation exploits instead of looping over angular nodes.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::entropy::{hermitian_trace_norm, relative_entropy, ZERO_WEIGHT_TOL};
use crate::error::{Error, Result};
use crate::fock::{FockBasis, FockState, StateBlock};
use crate::pairs::PairBasis;
use crate::quadrature::gauss_legendre_on;
use crate::MemoryBudget;

/// Truncated coherent vector `xi(v) = e^{-|v|^2/2} (+)_n v^{ox n}/sqrt(n!)`
/// expanded over the blocked Fock basis. The expansion is used as-is; the
/// lost tail mass is recorded, never renormalised away.
#[derive(Debug, Clone)]
pub struct CoherentVector {
    fock: Arc<FockBasis>,
    field: Vec<Complex64>,
    blocks: Vec<DVector<Complex64>>,
    norm_sq: f64,
    defect: f64,
    tail_bound: f64,
}

impl CoherentVector {
    /// `field` is the already-scaled argument `v = u / sqrt(eps)`.
    pub fn new(fock: &Arc<FockBasis>, field: &[Complex64]) -> Result<Self> {
        let m = fock.modes();
        if field.len() != m {
            return Err(Error::DimensionMismatch(
                "coherent field length must match the mode count".into(),
            ));
        }
        let x: f64 = field.iter().map(|v| v.norm_sqr()).sum();
        let n_max = fock.n_max();
        if x > 0.5 * n_max as f64 {
            return Err(Error::Precondition(format!(
                "coherent truncation unfaithful: |u/sqrt(eps)|^2 = {x:.4} needs N_max >= {}, \
                 basis has {n_max}",
                (2.0 * x).ceil() as u64
            )));
        }

        // Per-mode tables v^n / sqrt(n!).
        let tables: Vec<Vec<Complex64>> = field
            .iter()
            .map(|&v| {
                let mut t = Vec::with_capacity(n_max as usize + 1);
                t.push(Complex64::new(1.0, 0.0));
                for n in 1..=n_max as usize {
                    let prev = t[n - 1];
                    t.push(prev * v / (n as f64).sqrt());
                }
                t
            })
            .collect();
        let prefactor = (-0.5 * x).exp();

        let mut norm_sq = 0.0;
        let blocks: Vec<DVector<Complex64>> = fock
            .blocks()
            .iter()
            .map(|block| {
                let mut coeffs = DVector::from_element(block.dim(), Complex64::new(0.0, 0.0));
                for (s, state) in block.iter_states().enumerate() {
                    let mut c = Complex64::new(prefactor, 0.0);
                    for (j, &occ) in state.iter().enumerate() {
                        c *= tables[j][occ as usize];
                    }
                    norm_sq += c.norm_sqr();
                    coeffs[s] = c;
                }
                coeffs
            })
            .collect();

        let tail_bound = poisson_tail(x, n_max);
        Ok(Self {
            fock: fock.clone(),
            field: field.to_vec(),
            blocks,
            norm_sq,
            defect: 1.0 - norm_sq,
            tail_bound,
        })
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.fock
    }

    pub fn field(&self) -> &[Complex64] {
        &self.field
    }

    pub fn norm_sq(&self) -> f64 {
        self.norm_sq
    }

    /// `1 - |truncated|^2`, always within [`Self::tail_bound`] of zero.
    pub fn defect(&self) -> f64 {
        self.defect
    }

    /// Poisson tail `P(N > n_max)` at intensity `|v|^2`, the analytic bound
    /// on the defect.
    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    /// Truncated inner product with another coherent vector on the same
    /// basis.
    pub fn overlap(&self, other: &Self) -> Result<Complex64> {
        if !self.fock.same_structure(&other.fock) {
            return Err(Error::MismatchedBases);
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for (a, b) in self.blocks.iter().zip(&other.blocks) {
            for (ca, cb) in a.iter().zip(b.iter()) {
                acc += ca.conj() * cb;
            }
        }
        Ok(acc)
    }

    /// `<xi, G xi>` for a block-diagonal mixed state.
    pub fn expectation_in(&self, state: &FockState) -> Result<f64> {
        if !self.fock.same_structure(state.basis()) {
            return Err(Error::MismatchedBases);
        }
        let mut acc = 0.0;
        for (coeffs, sb) in self.blocks.iter().zip(&state.blocks) {
            for (c, &w) in sb.weights.iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                let mut ip = Complex64::new(0.0, 0.0);
                for s in 0..coeffs.len() {
                    ip += coeffs[s].conj() * sb.vectors[(s, c)];
                }
                acc += w * ip.norm_sqr();
            }
        }
        Ok(acc)
    }

    /// The block-decohered density `sum_b |xi_b><xi_b|`: each symmetry block
    /// keeps its coherent component as a rank-one contribution. Number-type
    /// observables and Husimi radial profiles are unchanged by this
    /// decoherence. Requires a real field so the state fits the real-vector
    /// storage.
    pub fn to_block_state(&self) -> Result<FockState> {
        if self.field.iter().any(|v| v.im != 0.0) {
            return Err(Error::Precondition(
                "block-decohered coherent states need a real field".into(),
            ));
        }
        let blocks = self
            .blocks
            .iter()
            .map(|coeffs| {
                let w: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
                if w <= ZERO_WEIGHT_TOL {
                    StateBlock {
                        weights: Vec::new(),
                        log_weights: Vec::new(),
                        vectors: DMatrix::zeros(coeffs.len(), 0),
                        energies: None,
                    }
                } else {
                    let scale = 1.0 / w.sqrt();
                    let col: Vec<f64> = coeffs.iter().map(|c| c.re * scale).collect();
                    StateBlock {
                        weights: vec![w],
                        log_weights: vec![w.ln()],
                        vectors: DMatrix::from_column_slice(coeffs.len(), 1, &col),
                        energies: None,
                    }
                }
            })
            .collect();
        FockState::new(self.fock.clone(), blocks)
    }
}

/// Closed-form coherent overlap `e^{-(|a|^2+|b|^2)/2 + <a,b>}` (untruncated).
pub fn coherent_overlap_oracle(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    let na: f64 = a.iter().map(|v| v.norm_sqr()).sum();
    let nb: f64 = b.iter().map(|v| v.norm_sqr()).sum();
    let ip: Complex64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
    (Complex64::new(-0.5 * (na + nb), 0.0) + ip).exp()
}

/// Upper Poisson tail `P(N > n)` at intensity `x`, summed upward from the
/// first omitted term so nearby-cancellation cannot occur.
fn poisson_tail(x: f64, n: u32) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let mut term = (-x).exp();
    for k in 1..=(n as u64 + 1) {
        term *= x / k as f64;
    }
    let mut sum = 0.0;
    let mut k = n as u64 + 1;
    loop {
        sum += term;
        k += 1;
        term *= x / k as f64;
        if term < sum * 1e-17 || k > n as u64 + 100_000 {
            break;
        }
    }
    sum
}

/// Grid parameters for lower-symbol quadrature.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub radial: usize,
    pub angular: usize,
    pub radius_factor: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            radial: 64,
            angular: 64,
            radius_factor: 6.0,
        }
    }
}

/// Minimum fraction of the state's trace the quadrature grid must capture.
pub const REQUIRED_MASS: f64 = 0.999;

/// A localized state prepared for lower-symbol evaluation: diagonal
/// populations indexed by occupation, plus per-mode grids.
pub struct LowerSymbol {
    basis: Arc<FockBasis>,
    epsilon: f64,
    /// `(occupation, population)` over all basis states.
    populations: Vec<(Vec<u16>, f64)>,
    pub mean_occ: Vec<f64>,
    pub trace: f64,
}

impl LowerSymbol {
    /// `loc` must be a localized state on at most two modes.
    pub fn new(loc: &FockState, epsilon: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::InvalidParameter {
                name: "epsilon",
                value: epsilon,
                message: "the semiclassical scale must be positive",
            });
        }
        let basis = loc.basis().clone();
        let m = basis.modes();
        if m > 2 {
            return Err(Error::Precondition(format!(
                "grid quadrature supports at most two modes, got {m}"
            )));
        }
        if basis.max_block_dim() > 1 {
            // Cannot happen for distinct lattice momenta; guards synthetic
            // bases whose localized states would not be diagonal.
            return Err(Error::Precondition(
                "lower-symbol quadrature needs one-dimensional symmetry blocks".into(),
            ));
        }
        let mut populations = Vec::with_capacity(basis.total_dim());
        let mut mean_occ = vec![0.0; m];
        let mut trace = 0.0;
        for (bi, sb) in loc.blocks.iter().enumerate() {
            let block = basis.block(bi);
            let pops = sb.populations();
            for (s, &p) in pops.iter().enumerate() {
                if p == 0.0 {
                    continue;
                }
                let occ = block.state(s).to_vec();
                for (j, &o) in occ.iter().enumerate() {
                    mean_occ[j] += p * o as f64;
                }
                trace += p;
                populations.push((occ, p));
            }
        }
        Ok(Self {
            basis,
            epsilon,
            populations,
            mean_occ,
            trace,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn modes(&self) -> usize {
        self.basis.modes()
    }

    /// Quadrature radius per mode.
    pub fn radii(&self, spec: &QuadratureSpec) -> Vec<f64> {
        self.mean_occ
            .iter()
            .map(|&n| spec.radius_factor * (self.epsilon * (1.0 + n)).sqrt())
            .collect()
    }

    /// Husimi density at radial coordinates `r` (the density of a diagonal
    /// state is independent of the angles):
    /// `(eps*pi)^{-n} e^{-sum r^2/eps} sum_s p_s prod_j (r_j^2/eps)^{s_j}/s_j!`.
    pub fn density_at_radii(&self, r: &[f64]) -> f64 {
        let m = self.modes();
        assert_eq!(r.len(), m, "one radius per mode");
        let xs: Vec<f64> = r.iter().map(|&ri| ri * ri / self.epsilon).collect();
        let mut acc = 0.0;
        for (occ, p) in &self.populations {
            let mut term = *p;
            for (j, &o) in occ.iter().enumerate() {
                term *= poisson_pmf(xs[j], o as usize);
            }
            acc += term;
        }
        acc * (self.epsilon * PI).powi(-(m as i32))
    }

    /// Grid moments of the lower symbol. Always returns the total mass and
    /// the first moment matrix; `with_second` adds the symmetric-pair second
    /// moment. Off-diagonal entries vanish exactly (angular integrals of
    /// nonzero harmonics are zero under the equal-weight angular rule).
    pub fn moments(&self, spec: &QuadratureSpec, with_second: bool) -> Result<LowerSymbolMoments> {
        let m = self.modes();
        let radii = self.radii(spec);
        let max_occ = self
            .populations
            .iter()
            .map(|(occ, _)| occ.iter().map(|&o| o as usize).max().unwrap_or(0))
            .max()
            .unwrap_or(0);

        // tables[j][n][p] = quadrature of
        // (2 r / eps) * PoissonPmf(r^2/eps, n) * r^{2p} over [0, R_j],
        // i.e. the per-mode factor of integrals of |u_j|^{2p} against the
        // density, with the exact 2*pi angular factor already folded in.
        let orders = if with_second { 3 } else { 2 };
        let tables: Vec<Vec<[f64; 3]>> = (0..m)
            .map(|j| {
                let (rs, ws) = gauss_legendre_on(spec.radial, 0.0, radii[j]);
                let mut tab = vec![[0.0; 3]; max_occ + 1];
                for (&r, &w) in rs.iter().zip(&ws) {
                    let x = r * r / self.epsilon;
                    let base = w * 2.0 * r / self.epsilon;
                    let mut pmf = (-x).exp();
                    for (n, row) in tab.iter_mut().enumerate() {
                        if n > 0 {
                            pmf *= x / n as f64;
                        }
                        let mut rp = 1.0;
                        for slot in row.iter_mut().take(orders) {
                            *slot += base * pmf * rp;
                            rp *= r * r;
                        }
                    }
                }
                tab
            })
            .collect();

        let factor = |occ: &[u16], pows: &[usize]| -> f64 {
            occ.iter()
                .enumerate()
                .map(|(j, &o)| tables[j][o as usize][pows[j]])
                .product()
        };

        let mut mass = 0.0;
        let mut m1 = DMatrix::<Complex64>::zeros(m, m);
        let mut pows = vec![0usize; m];
        for (occ, p) in &self.populations {
            pows.iter_mut().for_each(|x| *x = 0);
            mass += p * factor(occ, &pows);
            for i in 0..m {
                pows.iter_mut().for_each(|x| *x = 0);
                pows[i] = 1;
                m1[(i, i)] += Complex64::new(p * factor(occ, &pows), 0.0);
            }
        }

        let m2 = if with_second {
            let pb = PairBasis::new(m);
            let np = pb.len();
            let mut mat = DMatrix::<Complex64>::zeros(np, np);
            for (occ, p) in &self.populations {
                for (idx, &(i, j)) in pb.pairs().iter().enumerate() {
                    pows.iter_mut().for_each(|x| *x = 0);
                    let scale = if i == j {
                        pows[i] = 2;
                        1.0
                    } else {
                        pows[i] = 1;
                        pows[j] = 1;
                        2.0
                    };
                    mat[(idx, idx)] += Complex64::new(scale * p * factor(occ, &pows), 0.0);
                }
            }
            Some(mat)
        } else {
            None
        };

        let required = REQUIRED_MASS * self.trace;
        if mass < required {
            return Err(Error::QuadratureMassDeficit {
                mass,
                required,
                suggested_radius: 1.5 * radii.iter().copied().fold(0.0, f64::max),
            });
        }
        Ok(LowerSymbolMoments {
            epsilon: self.epsilon,
            mass,
            m1,
            m2,
            mean_occ: self.mean_occ.clone(),
            radii,
            radial_nodes: spec.radial,
            angular_nodes: spec.angular,
        })
    }
}

fn poisson_pmf(x: f64, n: usize) -> f64 {
    let mut p = (-x).exp();
    for k in 1..=n {
        p *= x / k as f64;
    }
    p
}

/// Mass and moment matrices of a Husimi measure, with the grid that
/// produced them.
#[derive(Debug, Clone)]
pub struct LowerSymbolMoments {
    pub epsilon: f64,
    pub mass: f64,
    pub m1: DMatrix<Complex64>,
    pub m2: Option<DMatrix<Complex64>>,
    pub mean_occ: Vec<f64>,
    pub radii: Vec<f64>,
    pub radial_nodes: usize,
    pub angular_nodes: usize,
}

/// Husimi density of `state` localized to `p_modes`, evaluated at the point
/// `u` (coordinates over `p_modes`, unscaled):
/// `(eps*pi)^{-|P|} <xi(u/sqrt(eps)), G_P xi(u/sqrt(eps))>`.
pub fn husimi_density(
    state: &FockState,
    p_modes: &[usize],
    epsilon: f64,
    u: &[Complex64],
    budget: &MemoryBudget,
) -> Result<f64> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::InvalidParameter {
            name: "epsilon",
            value: epsilon,
            message: "the semiclassical scale must be positive",
        });
    }
    let loc = state.localize(p_modes, budget)?;
    let scaled: Vec<Complex64> = u.iter().map(|&x| x / epsilon.sqrt()).collect();
    let xi = CoherentVector::new(loc.basis(), &scaled)?;
    Ok(xi.expectation_in(&loc)? * (epsilon * PI).powi(-(p_modes.len() as i32)))
}

/// Both sides of the quantitative tensor-moment comparison for the
/// localized state: `lhs = Tr|k! eps^k G_P^(k) - integral |u^k><u^k| dmu|`
/// and the explicit bound
/// `rhs = eps^k sum_{l<k} C(k,l)^2 (k-l+n-1)!/(n-1)! Tr[N^l G_P]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TensorMomentGap {
    pub k: usize,
    pub n_modes: usize,
    pub epsilon: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    /// `lhs / (eps * n)`: the measured size of the gap against the `O(n/N)`
    /// heuristic with `N = 1/eps`; reported, never asserted.
    pub scaled_lhs: f64,
    pub mass: f64,
}

pub fn definetti_gap(
    state: &FockState,
    p_modes: &[usize],
    epsilon: f64,
    k: usize,
    spec: &QuadratureSpec,
    budget: &MemoryBudget,
) -> Result<TensorMomentGap> {
    if !(k == 1 || k == 2) {
        return Err(Error::Precondition(format!(
            "tensor-moment comparison supports k in {{1,2}}, got {k}"
        )));
    }
    let loc = state.localize(p_modes, budget)?;
    let n = loc.basis().modes();
    let symbol = LowerSymbol::new(&loc, epsilon)?;
    let moments = symbol.moments(spec, k == 2)?;

    let gamma_k = loc.reduced_density_matrix(k)?;
    let k_fact = if k == 1 { 1.0 } else { 2.0 };
    let scaled = gamma_k * Complex64::new(k_fact * epsilon.powi(k as i32), 0.0);
    let moment = if k == 1 {
        moments.m1.clone()
    } else {
        moments.m2.clone().expect("second moment requested")
    };
    let lhs = hermitian_trace_norm(&(scaled - moment));

    // Tr[N^l G_P] for l = 0 .. k-1.
    let mut traces = vec![symbol.trace];
    if k >= 2 {
        let num = crate::fock::DiagonalOperator::number(
            loc.basis(),
            &(0..n).collect::<Vec<_>>(),
        );
        let ms = loc.diagonal_moments(&num, k - 1)?;
        traces.extend_from_slice(&ms);
    }
    let mut rhs = 0.0;
    for (l, &tr) in traces.iter().enumerate() {
        let choose = binomial_f64(k, l);
        let rising: f64 = (0..k - l).map(|i| (n + i) as f64).product();
        rhs += choose * choose * rising * tr;
    }
    rhs *= epsilon.powi(k as i32);

    Ok(TensorMomentGap {
        k,
        n_modes: n,
        epsilon,
        lhs,
        rhs,
        slack: rhs - lhs,
        scaled_lhs: lhs / (epsilon * n as f64),
        mass: moments.mass,
    })
}

fn binomial_f64(n: usize, k: usize) -> f64 {
    let mut v = 1.0;
    for i in 0..k {
        v = v * (n - i) as f64 / (i + 1) as f64;
    }
    v
}

/// The three rungs of the quantum-to-classical entropy comparison:
/// full-state relative entropy, localized relative entropy, and the
/// classical relative entropy of the two Husimi measures.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EntropyChain {
    pub quantum: f64,
    pub localized: f64,
    pub classical: f64,
    pub mass_a: f64,
    pub mass_b: f64,
}

pub fn berezin_lieb_check(
    a: &FockState,
    b: &FockState,
    p_modes: &[usize],
    epsilon: f64,
    spec: &QuadratureSpec,
    budget: &MemoryBudget,
) -> Result<EntropyChain> {
    let quantum = relative_entropy(a, b)?;
    let loc_a = a.localize(p_modes, budget)?;
    let loc_b = b.localize(p_modes, budget)?;
    let localized = relative_entropy(&loc_a, &loc_b)?;

    let sym_a = LowerSymbol::new(&loc_a, epsilon)?;
    let sym_b = LowerSymbol::new(&loc_b, epsilon)?;
    let (classical, mass_a, mass_b) = classical_relative_entropy(&sym_a, &sym_b, spec)?;
    Ok(EntropyChain {
        quantum,
        localized,
        classical,
        mass_a,
        mass_b,
    })
}

/// `integral mu_a ln(mu_a / mu_b)` over the shared polar grid, with both
/// grid masses. The shared radius per mode covers the wider of the two
/// states so neither density is truncated prematurely.
pub fn classical_relative_entropy(
    a: &LowerSymbol,
    b: &LowerSymbol,
    spec: &QuadratureSpec,
) -> Result<(f64, f64, f64)> {
    if a.modes() != b.modes() || (a.epsilon() - b.epsilon()).abs() > 0.0 {
        return Err(Error::Precondition(
            "classical relative entropy needs matching modes and scale".into(),
        ));
    }
    let radii: Vec<f64> = a
        .radii(spec)
        .iter()
        .zip(b.radii(spec))
        .map(|(&ra, rb)| ra.max(rb))
        .collect();
    let grids: Vec<(Vec<f64>, Vec<f64>)> = radii
        .iter()
        .map(|&r| gauss_legendre_on(spec.radial, 0.0, r))
        .collect();

    let mut h = 0.0;
    let mut mass_a = 0.0;
    let mut mass_b = 0.0;
    let mut visit = |r: &[f64], w: f64| {
        let da = a.density_at_radii(r);
        let db = b.density_at_radii(r);
        mass_a += w * da;
        mass_b += w * db;
        if da > 1e-300 && db > 1e-300 {
            h += w * da * (da / db).ln();
        }
    };
    match grids.len() {
        1 => {
            let (rs, ws) = &grids[0];
            for (&r, &w) in rs.iter().zip(ws) {
                visit(&[r], 2.0 * PI * w * r);
            }
        }
        2 => {
            let (rs0, ws0) = &grids[0];
            let (rs1, ws1) = &grids[1];
            for (&r0, &w0) in rs0.iter().zip(ws0) {
                for (&r1, &w1) in rs1.iter().zip(ws1) {
                    visit(&[r0, r1], (2.0 * PI).powi(2) * w0 * r0 * w1 * r1);
                }
            }
        }
        n => {
            return Err(Error::Precondition(format!(
                "classical relative entropy supports at most two modes, got {n}"
            )))
        }
    }

    for (mass, sym) in [(mass_a, a), (mass_b, b)] {
        let required = REQUIRED_MASS * sym.trace;
        if mass < required {
            return Err(Error::QuadratureMassDeficit {
                mass,
                required,
                suggested_radius: 1.5 * radii.iter().copied().fold(0.0, f64::max),
            });
        }
    }
    Ok((h, mass_a, mass_b))
}

/// `integral mu ln(mu / g)` against a centred product Gaussian with per-mode
/// variances `v_j` (density `prod (pi v_j)^{-1} e^{-|u_j|^2/v_j}`).
pub fn relative_entropy_to_gaussian(
    a: &LowerSymbol,
    variances: &[f64],
    spec: &QuadratureSpec,
) -> Result<f64> {
    let m = a.modes();
    if variances.len() != m {
        return Err(Error::DimensionMismatch(
            "one Gaussian variance per mode".into(),
        ));
    }
    if variances.iter().any(|&v| !(v.is_finite() && v > 0.0)) {
        return Err(Error::Precondition(
            "Gaussian variances must be positive".into(),
        ));
    }
    let radii = a.radii(spec);
    let grids: Vec<(Vec<f64>, Vec<f64>)> = radii
        .iter()
        .map(|&r| gauss_legendre_on(spec.radial, 0.0, r))
        .collect();

    let gauss = |r: &[f64]| -> f64 {
        r.iter()
            .zip(variances)
            .map(|(&ri, &v)| (-ri * ri / v).exp() / (PI * v))
            .product()
    };
    let mut h = 0.0;
    let mut mass = 0.0;
    let mut visit = |r: &[f64], w: f64| {
        let da = a.density_at_radii(r);
        let db = gauss(r);
        mass += w * da;
        if da > 1e-300 && db > 1e-300 {
            h += w * da * (da / db).ln();
        }
    };
    match grids.len() {
        1 => {
            let (rs, ws) = &grids[0];
            for (&r, &w) in rs.iter().zip(ws) {
                visit(&[r], 2.0 * PI * w * r);
            }
        }
        2 => {
            let (rs0, ws0) = &grids[0];
            let (rs1, ws1) = &grids[1];
            for (&r0, &w0) in rs0.iter().zip(ws0) {
                for (&r1, &w1) in rs1.iter().zip(ws1) {
                    visit(&[r0, r1], (2.0 * PI).powi(2) * w0 * r0 * w1 * r1);
                }
            }
        }
        n => {
            return Err(Error::Precondition(format!(
                "relative entropy supports at most two modes, got {n}"
            )))
        }
    }
    let required = REQUIRED_MASS * a.trace;
    if mass < required {
        return Err(Error::QuadratureMassDeficit {
            mass,
            required,
            suggested_radius: 1.5 * radii.iter().copied().fold(0.0, f64::max),
        });
    }
    Ok(h)
}

/// Closed-form relative entropy between centred complex Gaussians with
/// variances `v1`, `v2` (per mode, `E|u|^2 = v`):
/// `ln(v2/v1) + v1/v2 - 1` summed over modes.
pub fn gaussian_relative_entropy(v1: &[f64], v2: &[f64]) -> f64 {
    v1.iter()
        .zip(v2)
        .map(|(&a, &b)| (b / a).ln() + a / b - 1.0)
        .sum()
}
