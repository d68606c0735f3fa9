use approx::assert_abs_diff_eq;
use gibbslab::classical::{ClassicalEnsemble, CovarianceKind};
use gibbslab::entropy::{
    classical_pinsker_check, free_energy_plain, free_energy_relative, hermitian_schatten_norm,
    hermitian_trace_norm, pinsker_check, relative_entropy, schatten_norm, symmetric_trace_norm,
    trace_distance, trace_norm_difference,
};
use gibbslab::fock::{
    build_hamiltonian, build_renormalized_hamiltonian, gibbs_state, vacuum_state, FockBasis,
    SpectralGibbsState,
};
use gibbslab::spectral::{InteractionSpec, ModeBasis};
use gibbslab::MemoryBudget;
use nalgebra::{Complex, DMatrix};
use proptest::prelude::*;

type C64 = Complex<f64>;

fn budget() -> MemoryBudget {
    MemoryBudget::new(2048)
}

/// Single harmonic mode truncated at `n_max`, Gibbs at temperature `t`.
fn single_mode_gibbs(n_max: u32, t: f64) -> SpectralGibbsState {
    let basis = ModeBasis::new(1, 1.0, 2.0).unwrap();
    let fock = FockBasis::enumerate(&basis, n_max, &budget()).unwrap();
    let h = build_hamiltonian(
        &fock,
        &basis,
        &InteractionSpec::new(Vec::new()).unwrap(),
        -1.0,
        0.0,
        &budget(),
    )
    .unwrap();
    gibbs_state(&h, t).unwrap()
}

/// Truncated geometric weights `e^{-n/t} / Z` for `n = 0..=n_max`.
fn geometric_weights(n_max: u32, t: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..=n_max).map(|n| (-(n as f64) / t).exp()).collect();
    let z: f64 = raw.iter().sum();
    raw.iter().map(|w| w / z).collect()
}

#[test]
fn relative_entropy_matches_the_hand_sum_for_diagonal_states() {
    let (ta, tb) = (1.5, 2.5);
    let a = single_mode_gibbs(30, ta);
    let b = single_mode_gibbs(30, tb);
    let p = geometric_weights(30, ta);
    let q = geometric_weights(30, tb);
    let hand: f64 = p
        .iter()
        .zip(&q)
        .map(|(&pi, &qi)| pi * (pi.ln() - qi.ln()))
        .sum();
    let got = relative_entropy(&a.state, &b.state).unwrap();
    assert_abs_diff_eq!(got, hand, epsilon = 1e-12);
    assert!(got > 0.0);

    // Asymmetric, zero on the diagonal.
    let rev = relative_entropy(&b.state, &a.state).unwrap();
    assert!(rev > 0.0 && (rev - got).abs() > 1e-3);
    assert_abs_diff_eq!(
        relative_entropy(&a.state, &a.state).unwrap(),
        0.0,
        epsilon = 1e-13
    );
}

#[test]
fn support_violations_yield_infinity() {
    let gibbs = single_mode_gibbs(20, 2.0);
    let vac = vacuum_state(gibbs.state.basis()).unwrap();
    // The Gibbs state has mass outside the vacuum's support.
    assert!(relative_entropy(&gibbs.state, &vac).unwrap().is_infinite());
    // The reverse direction is finite and equals ln Z.
    let rev = relative_entropy(&vac, &gibbs.state).unwrap();
    assert_abs_diff_eq!(rev, gibbs.log_z, epsilon = 1e-12);
}

#[test]
fn trace_norms_match_hand_eigenvalues() {
    let m = DMatrix::from_row_slice(2, 2, &[3.0, 1.0, 1.0, 3.0]);
    assert_abs_diff_eq!(symmetric_trace_norm(&m), 6.0, epsilon = 1e-12);
    let m = DMatrix::from_row_slice(2, 2, &[0.0, 2.0, 2.0, 0.0]);
    assert_abs_diff_eq!(symmetric_trace_norm(&m), 4.0, epsilon = 1e-12);
    // Nonsymmetric input is symmetrised first.
    let m = DMatrix::from_row_slice(2, 2, &[0.0, 4.0, 0.0, 0.0]);
    assert_abs_diff_eq!(symmetric_trace_norm(&m), 4.0, epsilon = 1e-12);

    let m = DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, -4.0]);
    assert_abs_diff_eq!(schatten_norm(&m, 1.0).unwrap(), 7.0, epsilon = 1e-12);
    assert_abs_diff_eq!(schatten_norm(&m, 2.0).unwrap(), 5.0, epsilon = 1e-12);
    assert_abs_diff_eq!(
        schatten_norm(&m, f64::INFINITY).unwrap(),
        4.0,
        epsilon = 1e-12
    );
    assert!(schatten_norm(&m, 0.5).is_err());

    // Hermitian complex: [[2, i], [-i, 2]] has spectrum {1, 3}.
    let h = DMatrix::from_row_slice(
        2,
        2,
        &[
            C64::new(2.0, 0.0),
            C64::new(0.0, 1.0),
            C64::new(0.0, -1.0),
            C64::new(2.0, 0.0),
        ],
    );
    assert_abs_diff_eq!(hermitian_trace_norm(&h), 4.0, epsilon = 1e-12);
    assert_abs_diff_eq!(
        hermitian_schatten_norm(&h, 2.0).unwrap(),
        10.0f64.sqrt(),
        epsilon = 1e-12
    );
    assert_abs_diff_eq!(
        hermitian_schatten_norm(&h, f64::INFINITY).unwrap(),
        3.0,
        epsilon = 1e-12
    );
    assert!(hermitian_schatten_norm(&h, 0.0).is_err());
}

#[test]
fn trace_distance_matches_the_diagonal_l1_formula() {
    let (ta, tb) = (1.5, 2.5);
    let a = single_mode_gibbs(30, ta);
    let b = single_mode_gibbs(30, tb);
    let p = geometric_weights(30, ta);
    let q = geometric_weights(30, tb);
    let l1: f64 = p.iter().zip(&q).map(|(&pi, &qi)| (pi - qi).abs()).sum();
    assert_abs_diff_eq!(
        trace_norm_difference(&a.state, &b.state).unwrap(),
        l1,
        epsilon = 1e-12
    );
    assert_abs_diff_eq!(
        trace_distance(&a.state, &b.state).unwrap(),
        0.5 * l1,
        epsilon = 1e-12
    );
}

#[test]
fn pinsker_report_wires_both_sides_correctly() {
    let a = single_mode_gibbs(30, 1.5);
    let b = single_mode_gibbs(30, 2.5);
    let report = pinsker_check(&a.state, &b.state).unwrap();
    let h = relative_entropy(&a.state, &b.state).unwrap();
    let tn = trace_norm_difference(&a.state, &b.state).unwrap();
    assert_abs_diff_eq!(report.relative_entropy, h, epsilon = 1e-13);
    assert_abs_diff_eq!(report.trace_norm, tn, epsilon = 1e-13);
    assert_abs_diff_eq!(report.lower_bound, 0.5 * tn * tn, epsilon = 1e-13);
    assert_abs_diff_eq!(report.slack, h - 0.5 * tn * tn, epsilon = 1e-13);
    assert!(report.slack >= 0.0);
}

#[test]
fn classical_pinsker_matches_direct_recomputation() {
    let basis = ModeBasis::new(1, 1.0, 50.0).unwrap();
    let w = InteractionSpec::new(vec![([0, 0], 1.0), ([1, 0], 0.5), ([-1, 0], 0.5)]).unwrap();
    let ens =
        ClassicalEnsemble::sample(&basis, &w, CovarianceKind::Massive, 2.0, true, 4000, 3, 0)
            .unwrap();
    let beta = 0.7;
    let report = classical_pinsker_check(&ens, beta);

    let weights: Vec<f64> = ens.d_values().iter().map(|&d| (-beta * d).exp()).collect();
    let z = weights.iter().sum::<f64>() / weights.len() as f64;
    let l1 = weights.iter().map(|&wi| (wi / z - 1.0).abs()).sum::<f64>() / weights.len() as f64;
    let d_mean = weights
        .iter()
        .zip(ens.d_values())
        .map(|(&wi, &di)| wi * di)
        .sum::<f64>()
        / weights.iter().sum::<f64>();
    let h = -beta * d_mean - z.ln();

    assert_abs_diff_eq!(report.beta, beta, epsilon = 0.0);
    assert_abs_diff_eq!(report.relative_entropy, h, epsilon = 1e-12);
    assert_abs_diff_eq!(report.l1_distance, l1, epsilon = 1e-12);
    assert_abs_diff_eq!(report.lower_bound, 0.5 * l1 * l1, epsilon = 1e-12);
    assert_abs_diff_eq!(report.slack, h - 0.5 * l1 * l1, epsilon = 1e-12);
    assert!(report.l1_err > 0.0 && report.l1_err < l1);
}

#[test]
fn plain_free_energy_is_minus_log_z_plus_relative_entropy() {
    let basis = ModeBasis::new(1, 1.0, 50.0).unwrap();
    let w = InteractionSpec::new(vec![([0, 0], 1.0), ([1, 0], 0.5), ([-1, 0], 0.5)]).unwrap();
    let fock = FockBasis::enumerate(&basis, 10, &budget()).unwrap();
    let h = build_hamiltonian(&fock, &basis, &w, -1.0, 0.5, &budget()).unwrap();
    let t = 2.0;
    let gibbs = gibbs_state(&h, t).unwrap();

    // Exact at the minimiser.
    let at_min = free_energy_plain(&gibbs.state, &h, t).unwrap();
    assert_abs_diff_eq!(at_min, -gibbs.log_z, epsilon = 1e-10);

    // For any trial state: F[G'] = -ln Z + H(G' | Gibbs), exactly.
    let trial = gibbs_state(&h, 2.0 * t).unwrap();
    let at_trial = free_energy_plain(&trial.state, &h, t).unwrap();
    let gap = relative_entropy(&trial.state, &gibbs.state).unwrap();
    assert!(gap > 1e-4);
    assert_abs_diff_eq!(at_trial, -gibbs.log_z + gap, epsilon = 1e-9);
}

#[test]
fn relative_free_energy_is_minus_log_z_ratio_plus_relative_entropy() {
    let basis = ModeBasis::new(1, 1.0, 50.0).unwrap();
    let w = InteractionSpec::new(vec![([0, 0], 1.0), ([1, 0], 0.5), ([-1, 0], 0.5)]).unwrap();
    let fock = FockBasis::enumerate(&basis, 12, &budget()).unwrap();
    let t = 2.0;
    let build = build_renormalized_hamiltonian(&fock, &basis, &w, t, &budget()).unwrap();
    let full = gibbs_state(&build.hamiltonian, t).unwrap();
    let free = gibbs_state(&build.free, t).unwrap();
    let log_ratio = full.log_z - free.log_z;

    let at_min = free_energy_relative(&full.state, &free, &build.interaction, t).unwrap();
    assert_abs_diff_eq!(at_min, -log_ratio, epsilon = 1e-9);

    // Trial = the free state itself: entropy term vanishes, leaving the
    // first-order mean; the gap to the minimum is H(free | full).
    let at_free = free_energy_relative(&free.state, &free, &build.interaction, t).unwrap();
    let mean_w = free.state.expectation(&build.interaction).unwrap();
    assert_abs_diff_eq!(at_free, mean_w / (t * t), epsilon = 1e-10);
    let gap = relative_entropy(&free.state, &full.state).unwrap();
    assert!(gap > 0.0);
    assert_abs_diff_eq!(at_free, -log_ratio + gap, epsilon = 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn schatten_norms_are_ordered_and_subadditive(seed in 0u64..2000) {
        let mut state = seed.wrapping_mul(0x9E3779B97F4A7C15).wrapping_add(1);
        let mut next = || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let a = DMatrix::<f64>::from_fn(4, 4, |_, _| next());
        let b = DMatrix::<f64>::from_fn(4, 4, |_, _| next());

        let n1 = schatten_norm(&a, 1.0).unwrap();
        let n2 = schatten_norm(&a, 2.0).unwrap();
        let ninf = schatten_norm(&a, f64::INFINITY).unwrap();
        prop_assert!(n1 >= n2 - 1e-12);
        prop_assert!(n2 >= ninf - 1e-12);
        // Frobenius agreement for p = 2.
        prop_assert!((n2 - a.norm()).abs() < 1e-10);

        for p in [1.0, 2.0, f64::INFINITY] {
            let sum = schatten_norm(&(&a + &b), p).unwrap();
            let parts = schatten_norm(&a, p).unwrap() + schatten_norm(&b, p).unwrap();
            prop_assert!(sum <= parts + 1e-10);
        }
    }
}
