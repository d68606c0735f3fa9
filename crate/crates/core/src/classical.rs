//! Gaussian free-field ensembles and importance-sampling estimators for the
//! interacting classical Gibbs measure.
//!
//! A field over a mode basis is a vector of complex amplitudes `u_j` drawn
//! independently from centred complex Gaussians. Interacting expectations
//! are estimated by reweighting free samples with `exp(-beta D[u])`
//! (self-normalised importance sampling); no Markov chain is involved, so
//! estimates from a fixed seed are exactly reproducible.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pairs::PairBasis;
use crate::spectral::{free_occupation, InteractionSpec, ModeBasis};

/// Covariance of the free Gaussian field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CovarianceKind {
    /// `E|u_j|^2 = 1/lambda_j`: the massive free field, independent of
    /// temperature.
    Massive,
    /// `E|u_j|^2 = 1/(t (e^{lambda_j/t} - 1))`: matches the rescaled free
    /// quantum one-body density exactly at every truncation.
    Thermal,
}

/// Per-mode variances `sigma_j^2 = E|u_j|^2` for the chosen covariance.
pub fn covariance_sigma2(basis: &ModeBasis, kind: CovarianceKind, t: f64) -> Result<Vec<f64>> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::InvalidParameter {
            name: "t",
            value: t,
            message: "temperature must be finite and positive",
        });
    }
    Ok(basis
        .modes()
        .iter()
        .map(|m| match kind {
            CovarianceKind::Massive => 1.0 / m.lambda,
            CovarianceKind::Thermal => free_occupation(m.lambda, t) / t,
        })
        .collect())
}

/// Draws one field: `u_j = sigma_j (g1 + i g2)/sqrt(2)` with independent
/// standard normals, generated on ChaCha stream `stream` of `seed`.
pub fn sample_field(sigma2: &[f64], seed: u64, stream: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    sigma2
        .iter()
        .map(|&s2| {
            let g1: f64 = StandardNormal.sample(&mut rng);
            let g2: f64 = StandardNormal.sample(&mut rng);
            let scale = (0.5 * s2).sqrt();
            Complex64::new(scale * g1, scale * g2)
        })
        .collect()
}

/// Fourier component of the field density:
/// `rho_k[u] = sum_p conj(u_p) u_{p+k}` over modes with `p + k` in the basis.
pub fn density_fourier(u: &[Complex64], basis: &ModeBasis, k: [i64; 2]) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (p, _mode) in basis.modes().iter().enumerate() {
        if let Some(q) = basis.shifted(p, k) {
            acc += u[p].conj() * u[q];
        }
    }
    acc
}

/// Plain interaction functional `D[u] = (1/2) sum_k w(k) |rho_k[u]|^2` over
/// the interaction support.
pub fn interaction_energy_plain(u: &[Complex64], basis: &ModeBasis, w: &InteractionSpec) -> f64 {
    let mut acc = 0.0;
    for &(k, wk) in w.support() {
        if wk == 0.0 {
            continue;
        }
        acc += 0.5 * wk * density_fourier(u, basis, k).norm_sqr();
    }
    acc
}

/// Renormalised interaction functional: the zero-momentum term is centred at
/// `c0`, i.e. `(1/2) w(0) (rho_0[u] - c0)^2 + (1/2) sum_{k!=0} w(k) |rho_k|^2`.
pub fn interaction_energy_renormalized(
    u: &[Complex64],
    basis: &ModeBasis,
    w: &InteractionSpec,
    c0: f64,
) -> f64 {
    let mut acc = 0.0;
    for &(k, wk) in w.support() {
        if wk == 0.0 {
            continue;
        }
        if k == [0, 0] {
            let rho0 = density_fourier(u, basis, k).re;
            acc += 0.5 * wk * (rho0 - c0) * (rho0 - c0);
        } else {
            acc += 0.5 * wk * density_fourier(u, basis, k).norm_sqr();
        }
    }
    acc
}

/// Self-normalised estimate of a partition-function-type mean.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PartitionEstimate {
    /// Monte Carlo mean of `exp(-beta D)`.
    pub mean: f64,
    /// Natural logarithm of the mean.
    pub log: f64,
    /// Standard error of the mean.
    pub stderr: f64,
    /// Effective sample size `(sum w)^2 / sum w^2`.
    pub ess: f64,
    /// True when the effective sample size fell below the hard floor of 10.
    pub ess_warning: bool,
    pub samples: usize,
}

/// A batch of free-field samples with their interaction energies, ready for
/// importance-sampled expectations under `z^-1 exp(-beta D) dmu_0`.
#[derive(Debug, Clone)]
pub struct ClassicalEnsemble {
    sigma2: Vec<f64>,
    fields: Vec<Vec<Complex64>>,
    d_values: Vec<f64>,
    covariance: CovarianceKind,
    t: f64,
    c0: f64,
    renormalized: bool,
    seed: u64,
    stream_base: u64,
}

impl ClassicalEnsemble {
    /// Samples `n` free fields on streams `stream_base..stream_base + n` of
    /// `seed` and records `D[u]` (plain or renormalised) for each.
    #[allow(clippy::too_many_arguments)]
    pub fn sample(
        basis: &ModeBasis,
        w: &InteractionSpec,
        covariance: CovarianceKind,
        t: f64,
        renormalized: bool,
        n: usize,
        seed: u64,
        stream_base: u64,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyEnsemble);
        }
        let sigma2 = covariance_sigma2(basis, covariance, t)?;
        let c0: f64 = sigma2.iter().sum();
        let fields: Vec<Vec<Complex64>> = (0..n)
            .into_par_iter()
            .map(|i| sample_field(&sigma2, seed, stream_base + i as u64))
            .collect();
        let d_values: Vec<f64> = fields
            .par_iter()
            .map(|u| {
                if renormalized {
                    interaction_energy_renormalized(u, basis, w, c0)
                } else {
                    interaction_energy_plain(u, basis, w)
                }
            })
            .collect();
        Ok(Self {
            sigma2,
            fields,
            d_values,
            covariance,
            t,
            c0,
            renormalized,
            seed,
            stream_base,
        })
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    pub fn fields(&self) -> &[Vec<Complex64>] {
        &self.fields
    }

    /// Interaction energy `D[u_i]` of each sample.
    pub fn d_values(&self) -> &[f64] {
        &self.d_values
    }

    pub fn sigma2(&self) -> &[f64] {
        &self.sigma2
    }

    /// Centre `c0 = sum_j sigma_j^2` used by the renormalised functional.
    pub fn c0(&self) -> f64 {
        self.c0
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn covariance(&self) -> CovarianceKind {
        self.covariance
    }

    pub fn renormalized(&self) -> bool {
        self.renormalized
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_base(&self) -> u64 {
        self.stream_base
    }

    /// Importance weights `exp(-beta D_i)`.
    pub fn weights(&self, beta: f64) -> Vec<f64> {
        self.d_values.iter().map(|&d| (-beta * d).exp()).collect()
    }

    /// Estimate of `integral exp(-beta D) dmu_0` with its standard error and
    /// effective sample size.
    pub fn partition_at(&self, beta: f64) -> PartitionEstimate {
        let w = self.weights(beta);
        let n = w.len() as f64;
        let mean = w.iter().sum::<f64>() / n;
        let var = w.iter().map(|&x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0).max(1.0);
        let sum: f64 = w.iter().sum();
        let sum_sq: f64 = w.iter().map(|&x| x * x).sum();
        let ess = if sum_sq > 0.0 { sum * sum / sum_sq } else { 0.0 };
        PartitionEstimate {
            mean,
            log: mean.ln(),
            stderr: (var / n).sqrt(),
            ess,
            ess_warning: ess < 10.0,
            samples: w.len(),
        }
    }

    /// Partition estimate at `beta = 1`.
    pub fn partition(&self) -> PartitionEstimate {
        self.partition_at(1.0)
    }

    /// Self-normalised mean of `D` under the `beta`-interacting measure.
    pub fn mean_interaction(&self, beta: f64) -> f64 {
        let w = self.weights(beta);
        let num: f64 = w.iter().zip(&self.d_values).map(|(&wi, &di)| wi * di).sum();
        let den: f64 = w.iter().sum();
        num / den
    }

    /// Relative entropy of the `beta`-interacting measure with respect to the
    /// free field: `H(mu_beta | mu_0) = -beta <D>_beta - ln z_beta`.
    pub fn relative_entropy_to_free(&self, beta: f64) -> f64 {
        -beta * self.mean_interaction(beta) - self.partition_at(beta).log
    }

    /// Gibbs variational value `H(mu_beta | mu_0) + <D>_beta`; minimised (in
    /// expectation) at `beta = 1`.
    pub fn variational_value(&self, beta: f64) -> f64 {
        (1.0 - beta) * self.mean_interaction(beta) - self.partition_at(beta).log
    }

    /// Self-normalised `k`-th moment matrix under the `beta`-interacting
    /// measure: `k = 1` gives `<u_i conj(u_j)>` (modes x modes), `k = 2`
    /// gives the second moment on the symmetric pair basis.
    pub fn moment_matrix(&self, k: usize, beta: f64) -> Result<DMatrix<Complex64>> {
        self.moment_on_range(k, beta, 0, self.len())
    }

    /// Moment matrices over `batches` contiguous sample blocks, each
    /// self-normalised, for crude error bars.
    pub fn batch_moment_matrices(
        &self,
        k: usize,
        beta: f64,
        batches: usize,
    ) -> Result<Vec<DMatrix<Complex64>>> {
        let n = self.len();
        let b = batches.max(1).min(n);
        (0..b)
            .map(|i| {
                let lo = i * n / b;
                let hi = (i + 1) * n / b;
                self.moment_on_range(k, beta, lo, hi)
            })
            .collect()
    }

    /// Self-normalised means of a per-sample observable over contiguous
    /// batches, weighted by `exp(-beta D)`.
    pub fn batch_weighted_means(&self, obs: &[f64], beta: f64, batches: usize) -> Vec<f64> {
        assert_eq!(obs.len(), self.len(), "observable length mismatch");
        let n = self.len();
        let b = batches.max(1).min(n);
        (0..b)
            .map(|i| {
                let lo = i * n / b;
                let hi = (i + 1) * n / b;
                let mut num = 0.0;
                let mut den = 0.0;
                for j in lo..hi {
                    let w = (-beta * self.d_values[j]).exp();
                    num += w * obs[j];
                    den += w;
                }
                num / den
            })
            .collect()
    }

    fn moment_on_range(
        &self,
        k: usize,
        beta: f64,
        lo: usize,
        hi: usize,
    ) -> Result<DMatrix<Complex64>> {
        if hi <= lo || hi > self.len() {
            return Err(Error::EmptyEnsemble);
        }
        let m = self.sigma2.len();
        match k {
            1 => {
                let mut acc = DMatrix::<Complex64>::zeros(m, m);
                let mut den = 0.0;
                for idx in lo..hi {
                    let w = (-beta * self.d_values[idx]).exp();
                    den += w;
                    let u = &self.fields[idx];
                    for i in 0..m {
                        for j in 0..m {
                            acc[(i, j)] += Complex64::new(w, 0.0) * u[i] * u[j].conj();
                        }
                    }
                }
                Ok(acc / Complex64::new(den, 0.0))
            }
            2 => {
                let pb = PairBasis::new(m);
                let p = pb.len();
                let mut acc = DMatrix::<Complex64>::zeros(p, p);
                let mut den = 0.0;
                let mut v = DVector::<Complex64>::zeros(p);
                for idx in lo..hi {
                    let w = (-beta * self.d_values[idx]).exp();
                    den += w;
                    v.copy_from(&pb.amplitude_vector(&self.fields[idx]));
                    for a in 0..p {
                        for b in 0..p {
                            acc[(a, b)] += Complex64::new(w, 0.0) * v[a] * v[b].conj();
                        }
                    }
                }
                Ok(acc / Complex64::new(den, 0.0))
            }
            _ => Err(Error::Precondition(format!(
                "moment order must be 1 or 2, got {k}"
            ))),
        }
    }
}

/// Analytic free-field moment matrix: `k = 1` gives `diag(sigma_j^2)`,
/// `k = 2` gives `diag(2 sigma_i^2 sigma_j^2)` on the pair basis.
pub fn free_moment_matrix(sigma2: &[f64], k: usize) -> Result<DMatrix<Complex64>> {
    let m = sigma2.len();
    match k {
        1 => Ok(DMatrix::from_fn(m, m, |i, j| {
            if i == j {
                Complex64::new(sigma2[i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })),
        2 => {
            let pb = PairBasis::new(m);
            let p = pb.len();
            Ok(DMatrix::from_fn(p, p, |a, b| {
                if a == b {
                    let (i, j) = pb.pairs()[a];
                    Complex64::new(2.0 * sigma2[i] * sigma2[j], 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }))
        }
        _ => Err(Error::Precondition(format!(
            "moment order must be 1 or 2, got {k}"
        ))),
    }
}
