use approx::assert_abs_diff_eq;
use gibbslab::classical::{
    covariance_sigma2, density_fourier, free_moment_matrix, interaction_energy_plain,
    interaction_energy_renormalized, sample_field, ClassicalEnsemble, CovarianceKind,
};
use gibbslab::error::Error;
use gibbslab::pairs::PairBasis;
use gibbslab::quadrature::gauss_legendre_on;
use gibbslab::spectral::{free_occupation, InteractionSpec, ModeBasis};
use nalgebra::Complex;
use proptest::prelude::*;

type C64 = Complex<f64>;

fn three_modes() -> ModeBasis {
    ModeBasis::new(1, 1.0, 50.0).unwrap()
}

fn hopping() -> InteractionSpec {
    InteractionSpec::new(vec![([0, 0], 1.0), ([1, 0], 0.5), ([-1, 0], 0.5)]).unwrap()
}

#[test]
fn covariances_match_their_formulas() {
    let basis = three_modes();
    let t = 2.0;
    let massive = covariance_sigma2(&basis, CovarianceKind::Massive, t).unwrap();
    let thermal = covariance_sigma2(&basis, CovarianceKind::Thermal, t).unwrap();
    for j in 0..3 {
        let lambda = basis.lambda(j);
        assert_abs_diff_eq!(massive[j], 1.0 / lambda, epsilon = 1e-15);
        assert_abs_diff_eq!(thermal[j], free_occupation(lambda, t) / t, epsilon = 1e-15);
    }
    assert!(covariance_sigma2(&basis, CovarianceKind::Thermal, 0.0).is_err());
    assert!(covariance_sigma2(&basis, CovarianceKind::Thermal, -1.0).is_err());
}

#[test]
fn field_draws_are_deterministic_per_stream() {
    let sigma2 = [1.0, 0.25, 0.25];
    let a = sample_field(&sigma2, 7, 3);
    let b = sample_field(&sigma2, 7, 3);
    assert_eq!(a, b);
    let c = sample_field(&sigma2, 7, 4);
    assert_ne!(a, c);
    let d = sample_field(&sigma2, 8, 3);
    assert_ne!(a, d);
}

#[test]
fn interaction_energy_matches_hand_expansion() {
    // Mode order: momentum 0, -2pi, +2pi. With the hopping interaction the
    // functional is  D = w(0) rho_0^2 / 2 + w(1) |rho_1|^2  where
    // rho_1 = conj(u0) u2 + conj(u1) u0.
    let basis = three_modes();
    let w = hopping();
    let u = [
        C64::new(0.3, -0.7),
        C64::new(-1.1, 0.2),
        C64::new(0.5, 0.9),
    ];

    let rho0 = u.iter().map(|z| z.norm_sqr()).sum::<f64>();
    let rho1 = u[0].conj() * u[2] + u[1].conj() * u[0];
    assert_abs_diff_eq!(density_fourier(&u, &basis, [0, 0]).re, rho0, epsilon = 1e-14);
    assert_abs_diff_eq!(density_fourier(&u, &basis, [0, 0]).im, 0.0, epsilon = 1e-14);
    let got1 = density_fourier(&u, &basis, [1, 0]);
    assert_abs_diff_eq!(got1.re, rho1.re, epsilon = 1e-14);
    assert_abs_diff_eq!(got1.im, rho1.im, epsilon = 1e-14);
    // Opposite momentum transfer is the conjugate.
    let gotm = density_fourier(&u, &basis, [-1, 0]);
    assert_abs_diff_eq!(gotm.re, rho1.re, epsilon = 1e-14);
    assert_abs_diff_eq!(gotm.im, -rho1.im, epsilon = 1e-14);

    let expect_plain = 0.5 * rho0 * rho0 + 0.5 * rho1.norm_sqr();
    assert_abs_diff_eq!(
        interaction_energy_plain(&u, &basis, &w),
        expect_plain,
        epsilon = 1e-13
    );

    let c0 = 1.75;
    let expect_ren = 0.5 * (rho0 - c0) * (rho0 - c0) + 0.5 * rho1.norm_sqr();
    assert_abs_diff_eq!(
        interaction_energy_renormalized(&u, &basis, &w, c0),
        expect_ren,
        epsilon = 1e-13
    );
}

#[test]
fn free_moments_are_diagonal_products() {
    let sigma2 = [1.0, 0.25, 0.25];
    let m1 = free_moment_matrix(&sigma2, 1).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            let expect = if i == j { sigma2[i] } else { 0.0 };
            assert_abs_diff_eq!(m1[(i, j)].re, expect, epsilon = 1e-15);
            assert_abs_diff_eq!(m1[(i, j)].im, 0.0, epsilon = 1e-15);
        }
    }
    let pair = PairBasis::new(3);
    let m2 = free_moment_matrix(&sigma2, 2).unwrap();
    assert_eq!(m2.nrows(), pair.len());
    for p in 0..pair.len() {
        for q in 0..pair.len() {
            let (i, j) = pair.pairs()[p];
            let expect = if p == q { 2.0 * sigma2[i] * sigma2[j] } else { 0.0 };
            assert_abs_diff_eq!(m2[(p, q)].re, expect, epsilon = 1e-15);
        }
    }
    assert!(free_moment_matrix(&sigma2, 3).is_err());
}

#[test]
fn sampled_free_moments_match_the_gaussian_law() {
    // At beta = 0 the self-normalised moments are plain Monte Carlo averages
    // of the free field; tolerances sit at ~5 standard errors for n = 8e4.
    let basis = three_modes();
    let w = hopping();
    let n = 80_000;
    let ens = ClassicalEnsemble::sample(
        &basis,
        &w,
        CovarianceKind::Massive,
        1.0,
        false,
        n,
        13,
        0,
    )
    .unwrap();
    let sigma2 = ens.sigma2().to_vec();
    let m1 = ens.moment_matrix(1, 0.0).unwrap();
    let scale = 5.0 / (n as f64).sqrt();
    for i in 0..3 {
        for j in 0..3 {
            let expect = if i == j { sigma2[i] } else { 0.0 };
            let tol = scale * (sigma2[i] * sigma2[j]).sqrt();
            assert!(
                (m1[(i, j)].re - expect).abs() <= tol,
                "first moment ({i},{j}): {} vs {expect}",
                m1[(i, j)].re
            );
            assert!((m1[(i, j)].im).abs() <= tol);
        }
    }
    let pair = PairBasis::new(3);
    let m2 = ens.moment_matrix(2, 0.0).unwrap();
    for p in 0..pair.len() {
        for q in 0..pair.len() {
            let (i, j) = pair.pairs()[p];
            let (r, s) = pair.pairs()[q];
            let expect = if p == q { 2.0 * sigma2[i] * sigma2[j] } else { 0.0 };
            // Fourth-moment fluctuations: a few sigma_i sigma_j sigma_r sigma_s.
            let tol = 6.0 * scale * (sigma2[i] * sigma2[j] * sigma2[r] * sigma2[s]).sqrt();
            assert!(
                (m2[(p, q)].re - expect).abs() <= tol,
                "second moment ({p},{q}): {} vs {expect}",
                m2[(p, q)].re
            );
        }
    }
}

#[test]
fn ensembles_are_reproducible_and_reject_empty_requests() {
    let basis = three_modes();
    let w = hopping();
    let a = ClassicalEnsemble::sample(&basis, &w, CovarianceKind::Thermal, 2.0, true, 64, 5, 100)
        .unwrap();
    let b = ClassicalEnsemble::sample(&basis, &w, CovarianceKind::Thermal, 2.0, true, 64, 5, 100)
        .unwrap();
    assert_eq!(a.d_values(), b.d_values());
    assert_eq!(a.len(), 64);
    assert!(!a.is_empty());
    assert!(a.renormalized());
    assert_abs_diff_eq!(a.c0(), a.sigma2().iter().sum::<f64>(), epsilon = 1e-15);
    assert!(matches!(
        ClassicalEnsemble::sample(&basis, &w, CovarianceKind::Thermal, 2.0, true, 0, 5, 0),
        Err(Error::EmptyEnsemble)
    ));

    // Non-negative energies and weights bounded by one at every beta >= 0.
    for &d in a.d_values() {
        assert!(d >= 0.0);
    }
    let est = a.partition_at(1.0);
    assert!(est.mean > 0.0 && est.mean <= 1.0);
    assert_abs_diff_eq!(est.log, est.mean.ln(), epsilon = 1e-15);
    assert_eq!(est.samples, 64);
    assert!(est.ess > 10.0 && !est.ess_warning);
}

#[test]
fn single_mode_partition_matches_quadrature() {
    // One massive mode, delta coupling: |u|^2 is Exp(1), D = |u|^4 / 2, so
    //   z  = int_0^inf exp(-x - x^2/2) dx = 0.65567954...
    //   <D>_1 = int (x^2/2) exp(-x - x^2/2) dx / z.
    let basis = ModeBasis::new(1, 1.0, 2.0).unwrap();
    assert_eq!(basis.len(), 1);
    let w = InteractionSpec::delta(1.0).unwrap();
    let (xs, ws) = gauss_legendre_on(200, 0.0, 40.0);
    let z_quad: f64 = xs
        .iter()
        .zip(&ws)
        .map(|(&x, &wq)| wq * (-x - 0.5 * x * x).exp())
        .sum();
    let d_quad: f64 = xs
        .iter()
        .zip(&ws)
        .map(|(&x, &wq)| wq * 0.5 * x * x * (-x - 0.5 * x * x).exp())
        .sum::<f64>()
        / z_quad;
    assert_abs_diff_eq!(z_quad, 0.655_679_542_418_798_6, epsilon = 1e-12);

    let n = 100_000;
    let ens =
        ClassicalEnsemble::sample(&basis, &w, CovarianceKind::Massive, 1.0, false, n, 9, 0)
            .unwrap();
    let est = ens.partition();
    assert!(
        (est.mean - z_quad).abs() <= 3.5 * est.stderr,
        "z = {} +- {} vs {z_quad}",
        est.mean,
        est.stderr
    );
    assert!(!est.ess_warning);

    let d_mc = ens.mean_interaction(1.0);
    let batch = ens.batch_weighted_means(ens.d_values(), 1.0, 8);
    let bm = batch.iter().sum::<f64>() / 8.0;
    let bv = batch.iter().map(|&x| (x - bm) * (x - bm)).sum::<f64>() / 7.0;
    let d_err = (bv / 8.0).sqrt();
    assert!(
        (d_mc - d_quad).abs() <= 4.0 * d_err,
        "<D> = {d_mc} +- {d_err} vs {d_quad}"
    );

    // Relative entropy assembled from the same two quantities.
    let kl = ens.relative_entropy_to_free(1.0);
    let kl_quad = -d_quad - z_quad.ln();
    assert!((kl - kl_quad).abs() <= 4.0 * (d_err + est.stderr / est.mean));
    assert!(kl >= 0.0);

    // The variational value at beta = 1 equals -log z; away from 1 it can
    // only grow (up to Monte Carlo noise handled by the suite runner).
    assert_abs_diff_eq!(ens.variational_value(1.0), -est.log, epsilon = 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn centring_identity_links_plain_and_renormalized(
        seed in 0u64..5000,
        c0 in 0.0f64..4.0,
    ) {
        let basis = three_modes();
        let w = hopping();
        let sigma2 = covariance_sigma2(&basis, CovarianceKind::Massive, 1.0).unwrap();
        let u = sample_field(&sigma2, seed, 0);
        let plain = interaction_energy_plain(&u, &basis, &w);
        let ren = interaction_energy_renormalized(&u, &basis, &w, c0);
        let rho0 = density_fourier(&u, &basis, [0, 0]).re;
        // (rho0 - c0)^2/2 - rho0^2/2 = -c0 rho0 + c0^2/2, with w(0) = 1.
        prop_assert!((ren - (plain - c0 * rho0 + 0.5 * c0 * c0)).abs() < 1e-12 * (1.0 + plain));
        prop_assert!(plain >= 0.0);
        prop_assert!(ren >= 0.0);
    }
}
