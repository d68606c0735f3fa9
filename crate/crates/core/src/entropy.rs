//! Relative entropy, trace and Schatten norms, Pinsker comparisons, and the
//! two forms of the Gibbs free-energy functional.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::classical::ClassicalEnsemble;
use crate::error::{Error, Result};
use crate::fock::{BlockedOperator, FockState, SpectralGibbsState};

/// Eigenvalues at or below this are treated as exact zeros when classifying
/// the support of a state. Gibbs states carry analytically computed
/// log-weights and are never clipped; the tolerance guards states whose
/// weights come out of numerical eigensolves (partial traces, projections).
pub const ZERO_WEIGHT_TOL: f64 = 1e-14;

/// Probability mass of the first state allowed on the null space of the
/// second before the relative entropy is declared infinite.
pub const NULL_MASS_TOL: f64 = 1e-12;

/// Quantum relative entropy `Tr A (ln A - ln B)` for block-diagonal states
/// on the same basis. Mass of `A` beyond [`NULL_MASS_TOL`] on the null space
/// of `B` returns `+inf` rather than a large float.
pub fn relative_entropy(a: &FockState, b: &FockState) -> Result<f64> {
    if !a.basis().same_structure(b.basis()) {
        return Err(Error::MismatchedBases);
    }
    let mut acc = 0.0;
    for (ba, bb) in a.blocks.iter().zip(&b.blocks) {
        if ba.weight() == 0.0 {
            continue;
        }
        // Overlap O[jb][ja] = <b_jb, a_ja> between the two eigenbases.
        let overlap = bb.vectors.transpose() * &ba.vectors;
        let null: Vec<bool> = bb
            .log_weights
            .iter()
            .map(|lw| !lw.is_finite())
            .collect();
        for (ja, &wa) in ba.weights.iter().enumerate() {
            if wa == 0.0 {
                continue;
            }
            acc += wa * ba.log_weights[ja];
            // Mass outside the support of B is everything not projected onto
            // its finite-weight eigenvectors; this covers both explicit null
            // columns and blocks recorded at less than full rank.
            let mut span_mass = 0.0;
            let mut ln_b_term = 0.0;
            for (jb, &lwb) in bb.log_weights.iter().enumerate() {
                if null[jb] {
                    continue;
                }
                let o2 = overlap[(jb, ja)] * overlap[(jb, ja)];
                span_mass += o2;
                ln_b_term += o2 * lwb;
            }
            if wa * (1.0 - span_mass).max(0.0) > NULL_MASS_TOL {
                return Ok(f64::INFINITY);
            }
            acc -= wa * ln_b_term;
        }
    }
    Ok(acc)
}

/// `Tr |rho_a - rho_b|`: trace norm of the difference, block by block.
pub fn trace_norm_difference(a: &FockState, b: &FockState) -> Result<f64> {
    if !a.basis().same_structure(b.basis()) {
        return Err(Error::MismatchedBases);
    }
    let mut acc = 0.0;
    for (ba, bb) in a.blocks.iter().zip(&b.blocks) {
        let diff = ba.density() - bb.density();
        acc += symmetric_trace_norm(&diff);
    }
    Ok(acc)
}

/// `1/2 Tr |rho_a - rho_b|` (total-variation normalisation).
pub fn trace_distance(a: &FockState, b: &FockState) -> Result<f64> {
    Ok(0.5 * trace_norm_difference(a, b)?)
}

/// Trace norm of a real symmetric matrix via its eigenvalues.
pub fn symmetric_trace_norm(m: &DMatrix<f64>) -> f64 {
    let sym = (m + m.transpose()) * 0.5;
    sym.symmetric_eigen()
        .eigenvalues
        .iter()
        .map(|e| e.abs())
        .sum()
}

/// Schatten p-norm of an arbitrary real matrix: `(sum s_i^p)^{1/p}` over the
/// singular values; `p = inf` is approximated by the largest singular value.
pub fn schatten_norm(m: &DMatrix<f64>, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::InvalidParameter {
            name: "p",
            value: p,
            message: "Schatten norms need p >= 1",
        });
    }
    let sv = m.clone().singular_values();
    if p.is_infinite() {
        return Ok(sv.iter().copied().fold(0.0, f64::max));
    }
    Ok(sv.iter().map(|s| s.powf(p)).sum::<f64>().powf(1.0 / p))
}

/// Schatten p-norm of a Hermitian complex matrix via its (real) spectrum.
pub fn hermitian_schatten_norm(m: &DMatrix<Complex64>, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::InvalidParameter {
            name: "p",
            value: p,
            message: "Schatten norms need p >= 1",
        });
    }
    let herm = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = herm.symmetric_eigen();
    if p.is_infinite() {
        return Ok(eig.eigenvalues.iter().map(|e| e.abs()).fold(0.0, f64::max));
    }
    Ok(eig
        .eigenvalues
        .iter()
        .map(|e| e.abs().powf(p))
        .sum::<f64>()
        .powf(1.0 / p))
}

/// Trace norm of a Hermitian complex matrix.
pub fn hermitian_trace_norm(m: &DMatrix<Complex64>) -> f64 {
    hermitian_schatten_norm(m, 1.0).expect("p = 1 is valid")
}

/// Both sides of the quantum Pinsker inequality
/// `H(A|B) >= (1/2) (Tr|A - B|)^2`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PinskerReport {
    pub relative_entropy: f64,
    pub trace_norm: f64,
    pub lower_bound: f64,
    pub slack: f64,
}

pub fn pinsker_check(a: &FockState, b: &FockState) -> Result<PinskerReport> {
    let h = relative_entropy(a, b)?;
    let tn = trace_norm_difference(a, b)?;
    let lower = 0.5 * tn * tn;
    Ok(PinskerReport {
        relative_entropy: h,
        trace_norm: tn,
        lower_bound: lower,
        slack: h - lower,
    })
}

/// Classical Pinsker check on an importance-sampling ensemble: compares the
/// relative entropy of the `beta`-interacting measure with respect to the
/// free one against half the squared L1 distance. Both sides are
/// Monte-Carlo estimates; `l1_err` is an 8-way batch-means standard error
/// for the L1 norm.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ClassicalPinskerReport {
    pub beta: f64,
    pub relative_entropy: f64,
    pub l1_distance: f64,
    pub l1_err: f64,
    pub lower_bound: f64,
    pub slack: f64,
}

pub fn classical_pinsker_check(ens: &ClassicalEnsemble, beta: f64) -> ClassicalPinskerReport {
    let h = ens.relative_entropy_to_free(beta);
    let w = ens.weights(beta);
    let z = w.iter().sum::<f64>() / w.len() as f64;
    let devs: Vec<f64> = w.iter().map(|&wi| (wi / z - 1.0).abs()).collect();
    let l1 = devs.iter().sum::<f64>() / devs.len() as f64;
    let batches = 8.min(devs.len().max(1));
    let batch_means: Vec<f64> = (0..batches)
        .map(|i| {
            let lo = i * devs.len() / batches;
            let hi = (i + 1) * devs.len() / batches;
            devs[lo..hi].iter().sum::<f64>() / (hi - lo).max(1) as f64
        })
        .collect();
    let mean = batch_means.iter().sum::<f64>() / batches as f64;
    let var = batch_means
        .iter()
        .map(|m| (m - mean) * (m - mean))
        .sum::<f64>()
        / (batches as f64 - 1.0).max(1.0);
    let l1_err = (var / batches as f64).sqrt();
    let lower = 0.5 * l1 * l1;
    ClassicalPinskerReport {
        beta,
        relative_entropy: h,
        l1_distance: l1,
        l1_err,
        lower_bound: lower,
        slack: h - lower,
    }
}

/// Plain free-energy functional `T^{-1} Tr[H G] + Tr[G ln G]`; equals
/// `-ln Z` exactly when `G` is the Gibbs state of `H` at temperature `t`.
pub fn free_energy_plain(trial: &FockState, h: &BlockedOperator, t: f64) -> Result<f64> {
    Ok(trial.expectation(h)? / t + trial.trace_rho_ln_rho())
}

/// Relative free-energy functional `H(G|G0) + T^{-2} Tr[W G]` for the
/// interaction operator `W`; equals `-(ln Z - ln Z_0)` at the interacting
/// Gibbs state (both partition functions at the same temperature).
pub fn free_energy_relative(
    trial: &FockState,
    reference: &SpectralGibbsState,
    w_op: &BlockedOperator,
    t: f64,
) -> Result<f64> {
    let h = relative_entropy(trial, &reference.state)?;
    Ok(h + trial.expectation(w_op)? / (t * t))
}
