//! The interpolated quantum variance `Var^(s)`, its average over
//! `s in [0,1]`, and the linear-response identity relating that average to
//! the temperature-rescaled derivative of the perturbed Gibbs expectation.
//!
//! Normalisation: the perturbation enters as `e^{-(H - eps A)/T}` and the
//! identity reads `T d/d eps <A>|_0 = integral_0^1 Var^(s) ds`; all commutator
//! corrections therefore use the dimensionless `H/T`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::entropy::hermitian_trace_norm;
use crate::error::{Error, Result};
use crate::fock::{gibbs_state, BlockedOperator, SpectralGibbsState};
use crate::quadrature::gauss_legendre_on;

/// An observable rotated into the eigenbasis of a Gibbs state, together
/// with the state's weights and dimensionless eigenvalues.
pub struct ProjectedObservable {
    blocks: Vec<ProjectedBlock>,
    mean: f64,
}

struct ProjectedBlock {
    a_tilde: DMatrix<f64>,
    weights: Vec<f64>,
    e_over_t: Vec<f64>,
}

impl ProjectedObservable {
    pub fn new(state: &SpectralGibbsState, a: &BlockedOperator) -> Result<Self> {
        if !state.state.basis().same_structure(a.basis()) {
            return Err(Error::MismatchedBases);
        }
        let mut blocks = Vec::with_capacity(state.state.blocks.len());
        let mut mean = 0.0;
        for (sb, ab) in state.state.blocks.iter().zip(a.blocks()) {
            let energies = sb.energies.as_ref().ok_or_else(|| {
                Error::Precondition("variance needs a spectrally constructed state".into())
            })?;
            let a_tilde = sb.vectors.transpose() * ab * &sb.vectors;
            for (m, &w) in sb.weights.iter().enumerate() {
                mean += w * a_tilde[(m, m)];
            }
            blocks.push(ProjectedBlock {
                a_tilde,
                weights: sb.weights.clone(),
                e_over_t: energies.iter().map(|e| e / state.t).collect(),
            });
        }
        Ok(Self { blocks, mean })
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// `Var^(s) = sum_{mn} |A_mn|^2 p_m^s p_n^{1-s} - (sum_m A_mm p_m)^2`.
    /// At `s = 0` the convention `0^0 = 1` is the correct limit (row weights
    /// drop out and only `p_n` survives).
    pub fn s_variance(&self, s: f64) -> f64 {
        let mut raw = 0.0;
        for b in &self.blocks {
            let d = b.weights.len();
            let ps: Vec<f64> = b.weights.iter().map(|p| p.powf(s)).collect();
            let qs: Vec<f64> = b.weights.iter().map(|p| p.powf(1.0 - s)).collect();
            for m in 0..d {
                if ps[m] == 0.0 {
                    continue;
                }
                for n in 0..d {
                    let a = b.a_tilde[(m, n)];
                    raw += a * a * ps[m] * qs[n];
                }
            }
        }
        raw - self.mean * self.mean
    }

    /// `-1/2 Tr([A, H/T]^2 G) = 1/2 sum |A_mn|^2 (e_m - e_n)^2 p_m >= 0`,
    /// the gap between `Var^(0)` and the lower envelope of `Var^(s)`.
    pub fn commutator_correction(&self) -> f64 {
        let mut acc = 0.0;
        for b in &self.blocks {
            let d = b.weights.len();
            for m in 0..d {
                let p = b.weights[m];
                if p == 0.0 {
                    continue;
                }
                for n in 0..d {
                    let a = b.a_tilde[(m, n)];
                    let gap = b.e_over_t[m] - b.e_over_t[n];
                    acc += 0.5 * a * a * gap * gap * p;
                }
            }
        }
        acc
    }
}

pub fn s_variance(state: &SpectralGibbsState, a: &BlockedOperator, s: f64) -> Result<f64> {
    Ok(ProjectedObservable::new(state, a)?.s_variance(s))
}

/// Nodes used for the `s`-average unless overridden.
pub const DEFAULT_S_NODES: usize = 32;

/// Gauss-Legendre average of `Var^(s)` over `s in [0,1]`.
pub fn integrated_variance(
    proj: &ProjectedObservable,
    nodes: usize,
) -> (f64, Vec<f64>, Vec<f64>) {
    let (s_grid, weights) = gauss_legendre_on(nodes, 0.0, 1.0);
    let values: Vec<f64> = s_grid.iter().map(|&s| proj.s_variance(s)).collect();
    let integral = values
        .iter()
        .zip(&weights)
        .map(|(v, w)| v * w)
        .sum::<f64>();
    (integral, s_grid, values)
}

/// Everything the linear-response identity produces for one `(H, A, T)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VarianceReport {
    pub t: f64,
    pub fd_step: f64,
    pub mean: f64,
    pub s_grid: Vec<f64>,
    pub var_values: Vec<f64>,
    /// `integral_0^1 Var^(s) ds` by Gauss-Legendre.
    pub quadrature: f64,
    pub var0: f64,
    /// `T d<A>/d eps` at 0, Richardson-refined central difference.
    pub fd_response: f64,
    /// Same with the single central difference at `fd_step`.
    pub fd_plain: f64,
    pub commutator_correction: f64,
    /// `|fd_response - quadrature| / |quadrature|`.
    pub identity_residual_rel: f64,
    /// `min_s (Var^(0) - Var^(s))`; the chain needs this `>= -1e-10`.
    pub chain_lower_slack: f64,
    /// `min_s (Var^(s) + correction - Var^(0))`; also `>= -1e-10`.
    pub chain_upper_slack: f64,
}

/// Expectation of `A` in the Gibbs state of `H - eps A` at temperature `t`.
fn perturbed_expectation(
    h: &BlockedOperator,
    a: &BlockedOperator,
    t: f64,
    eps: f64,
) -> Result<f64> {
    let shifted = h.add_scaled(a, -eps)?;
    let gibbs = gibbs_state(&shifted, t)?;
    gibbs.state.expectation(a)
}

pub fn linear_response_check(
    h: &BlockedOperator,
    a: &BlockedOperator,
    t: f64,
    fd_step: f64,
) -> Result<VarianceReport> {
    if !(fd_step.is_finite() && fd_step > 0.0) {
        return Err(Error::InvalidParameter {
            name: "fd_step",
            value: fd_step,
            message: "finite-difference step must be positive",
        });
    }
    let state = gibbs_state(h, t)?;
    let proj = ProjectedObservable::new(&state, a)?;
    let (quadrature, s_grid, var_values) = integrated_variance(&proj, DEFAULT_S_NODES);
    let var0 = proj.s_variance(0.0);
    let correction = proj.commutator_correction();

    let central = |step: f64| -> Result<f64> {
        let plus = perturbed_expectation(h, a, t, step)?;
        let minus = perturbed_expectation(h, a, t, -step)?;
        Ok((plus - minus) / (2.0 * step))
    };
    let coarse = central(fd_step)?;
    let fine = central(0.5 * fd_step)?;
    // One Richardson step removes the O(step^2) error of the central
    // difference; needed to reach 1e-6 relative agreement.
    let refined = (4.0 * fine - coarse) / 3.0;
    let fd_response = t * refined;
    let fd_plain = t * coarse;

    let chain_lower_slack = var_values
        .iter()
        .map(|v| var0 - v)
        .fold(f64::INFINITY, f64::min);
    let chain_upper_slack = var_values
        .iter()
        .map(|v| v + correction - var0)
        .fold(f64::INFINITY, f64::min);

    Ok(VarianceReport {
        t,
        fd_step,
        mean: proj.mean(),
        s_grid,
        var_values,
        quadrature,
        var0,
        fd_response,
        fd_plain,
        commutator_correction: correction,
        identity_residual_rel: (fd_response - quadrature).abs()
            / quadrature.abs().max(f64::MIN_POSITIVE),
        chain_lower_slack,
        chain_upper_slack,
    })
}

/// Weighted one-body trace-norm diagnostic
/// `Tr | h^alpha (G1_lambda - G1_0) h^alpha | / T` with `h = diag(lambda_j)`.
/// Reported as a trend scalar only; no constant is asserted.
pub fn feynman_hellmann_defect(
    rdm1_interacting: &DMatrix<Complex64>,
    rdm1_free: &DMatrix<Complex64>,
    lambdas: &[f64],
    t: f64,
    alpha: f64,
) -> Result<f64> {
    if !(0.0..=0.5).contains(&alpha) {
        return Err(Error::InvalidParameter {
            name: "alpha",
            value: alpha,
            message: "the one-body weight exponent must lie in [0, 1/2]",
        });
    }
    let m = lambdas.len();
    if rdm1_interacting.nrows() != m || rdm1_free.nrows() != m {
        return Err(Error::DimensionMismatch(
            "one-body matrices must match the mode count".into(),
        ));
    }
    let mut weighted = rdm1_interacting - rdm1_free;
    for i in 0..m {
        for j in 0..m {
            let scale = lambdas[i].powf(alpha) * lambdas[j].powf(alpha);
            weighted[(i, j)] *= Complex64::new(scale, 0.0);
        }
    }
    Ok(hermitian_trace_norm(&weighted) / t)
}
