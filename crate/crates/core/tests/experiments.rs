use approx::assert_abs_diff_eq;
use gibbslab::classical::{ClassicalEnsemble, CovarianceKind};
use gibbslab::entropy::hermitian_trace_norm;
use gibbslab::experiments::{
    classical_variational_scan, decreasing_beyond_errors, free_gaussian_moment_check,
    nonincreasing, run_free_correspondence, run_quantum_report, two_body_split,
    wick_mean_interaction, ExperimentConfig, FREE_MOMENT_TOL,
};
use gibbslab::pairs::PairBasis;
use gibbslab::spectral::{InteractionSpec, ModeBasis};
use gibbslab::MemoryBudget;
use nalgebra::{Complex, DMatrix};
use std::collections::HashSet;

type C64 = Complex<f64>;

fn budget() -> MemoryBudget {
    MemoryBudget::new(2048)
}

fn all_configs() -> Vec<ExperimentConfig> {
    vec![
        ExperimentConfig::free_check(),
        ExperimentConfig::converge_1d(),
        ExperimentConfig::converge_2d(),
        ExperimentConfig::correlations(),
        ExperimentConfig::decomposition(),
        ExperimentConfig::classical_check(),
        ExperimentConfig::classical_single_mode(),
        ExperimentConfig::quantum_check(),
    ]
}

#[test]
fn config_hashes_are_deterministic_and_distinct() {
    let configs = all_configs();
    let hashes: Vec<String> = configs.iter().map(|c| c.hash()).collect();
    for h in &hashes {
        assert_eq!(h.len(), 64);
        assert!(h.chars().all(|c| c.is_ascii_hexdigit()));
    }
    let set: HashSet<&String> = hashes.iter().collect();
    assert_eq!(set.len(), configs.len(), "hash collision between presets");

    // Hashing is a pure function of the canonical serialisation.
    let cfg = ExperimentConfig::converge_1d();
    assert_eq!(cfg.hash(), ExperimentConfig::converge_1d().hash());
    let round: ExperimentConfig = serde_json::from_str(&cfg.canonical_json()).unwrap();
    assert_eq!(round.hash(), cfg.hash());

    let mut tweaked = cfg.clone();
    tweaked.seed += 1;
    assert_ne!(tweaked.hash(), cfg.hash());
}

#[test]
fn frozen_presets_pin_their_instruments() {
    let free = ExperimentConfig::free_check();
    assert_eq!(free.dim, 1);
    assert_eq!(free.seed, 1);
    assert!(free.interaction.is_empty());
    assert_eq!(free.t_grid, vec![10.0, 20.0, 40.0]);
    assert!(matches!(free.covariance, CovarianceKind::Massive));

    let c1 = ExperimentConfig::converge_1d();
    assert_eq!(c1.seed, 11);
    assert_eq!(c1.t_grid, vec![2.0, 4.0, 8.0, 16.0]);
    assert!(!c1.renormalized);

    let c2 = ExperimentConfig::converge_2d();
    assert_eq!((c2.dim, c2.seed), (2, 21));
    assert!(c2.renormalized);
    assert_eq!(c2.interaction.len(), 5);

    let corr = ExperimentConfig::correlations();
    assert_eq!((corr.seed, corr.samples), (31, 0));
    assert_eq!(corr.kappa, 0.5);

    let dec = ExperimentConfig::decomposition();
    assert_eq!((dec.seed, dec.k_split as i64), (41, 2));

    let cl = ExperimentConfig::classical_check();
    assert_eq!((cl.seed, cl.samples), (51, 100_000));
    assert!(cl.renormalized);
    assert!(matches!(cl.covariance, CovarianceKind::Massive));

    let single = ExperimentConfig::classical_single_mode();
    assert_eq!(single.seed, 9);
    assert_eq!(single.cutoff, 2.0);
    assert_eq!(single.mode_basis().unwrap().len(), 1);

    let q = ExperimentConfig::quantum_check();
    assert_eq!(q.seed, 61);
    assert!(q.renormalized);

    for cfg in all_configs() {
        cfg.mode_basis().unwrap();
        cfg.interaction_spec().unwrap();
    }
}

#[test]
fn trend_helpers_judge_monotonicity() {
    assert!(decreasing_beyond_errors(
        &[3.0, 2.0, 1.0],
        &[0.1, 0.1, 0.1],
        2.0
    ));
    // A step that shrinks by less than the combined error bar fails.
    assert!(!decreasing_beyond_errors(
        &[3.0, 2.95, 1.0],
        &[0.1, 0.1, 0.1],
        2.0
    ));
    // Length mismatch is a refusal, not a panic.
    assert!(!decreasing_beyond_errors(&[1.0, 0.0], &[0.1], 2.0));
    // Single points are vacuously monotone.
    assert!(decreasing_beyond_errors(&[1.0], &[0.1], 2.0));

    assert!(nonincreasing(&[3.0, 3.0, 2.0], 0.0));
    assert!(nonincreasing(&[3.0, 3.05, 2.0], 0.1));
    assert!(!nonincreasing(&[3.0, 3.2, 2.0], 0.1));
}

#[test]
fn wick_mean_matches_a_hand_sum() {
    let basis = ModeBasis::new(1, 1.0, 50.0).unwrap();
    assert_eq!(basis.len(), 3);
    let w =
        InteractionSpec::new(vec![([0, 0], 1.0), ([1, 0], 0.5), ([-1, 0], 0.5)]).unwrap();
    // Mode order: [0,0], [-1,0], [1,0]; shifts leave the 3-mode box for
    // |n| = 2, so each k = +/-1 reaches exactly two ordered pairs.
    let s2 = [0.7, 0.4, 0.3];
    let s: f64 = s2.iter().sum();
    let q: f64 = s2.iter().map(|v| v * v).sum();
    let cross = s2[0] * s2[2] + s2[1] * s2[0] // k = +1: 0 -> +1, -1 -> 0
        + s2[0] * s2[1] + s2[2] * s2[0]; // k = -1: 0 -> -1, +1 -> 0
    let plain = 0.5 * (s * s + q) + 0.5 * 0.5 * cross;
    let renorm = 0.5 * q + 0.5 * 0.5 * cross;
    assert_abs_diff_eq!(
        wick_mean_interaction(&basis, &w, &s2, false),
        plain,
        epsilon = 1e-14
    );
    assert_abs_diff_eq!(
        wick_mean_interaction(&basis, &w, &s2, true),
        renorm,
        epsilon = 1e-14
    );
}

#[test]
fn two_body_split_is_exact_for_product_states() {
    // For block-diagonal one-body matrices with G2 = sym(G1, G1), the
    // low/high sector projections plus the one-body cross terms reproduce
    // the rescaled two-body difference identically.
    let m = 3;
    let pair = PairBasis::new(m);
    let diag = |v: [f64; 3]| {
        DMatrix::<C64>::from_fn(m, m, |i, j| {
            if i == j {
                C64::new(v[i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
    };
    let g1 = diag([1.4, 0.6, 0.25]);
    let g1_free = diag([1.0, 0.5, 0.2]);
    let g2 = pair.sym_tensor_product(&g1, &g1);
    let g2_free = pair.sym_tensor_product(&g1_free, &g1_free);
    let p_keep = [true, false, false];
    let t = 2.0;

    let (lhs, residual, last) = two_body_split(&pair, &g1, &g1_free, &g2, &g2_free, &p_keep, t);
    let lhs_norm = hermitian_trace_norm(&lhs);
    assert!(lhs_norm > 0.1);
    assert!(
        hermitian_trace_norm(&residual) <= 1e-13 * lhs_norm,
        "residual {}",
        hermitian_trace_norm(&residual)
    );

    // The reported last cross term is (2/T^2) sym(P dG1 P, Q G1_0 Q).
    let mask = |m_in: &DMatrix<C64>, keep: [bool; 3]| {
        DMatrix::<C64>::from_fn(m, m, |i, j| {
            if keep[i] && keep[j] {
                m_in[(i, j)]
            } else {
                C64::new(0.0, 0.0)
            }
        })
    };
    let d_p = mask(&(&g1 - &g1_free), [true, false, false]);
    let f_q = mask(&g1_free, [false, true, true]);
    let expect_last = pair
        .sym_tensor_product(&d_p, &f_q)
        .map(|v| v * 2.0 / (t * t));
    assert!(hermitian_trace_norm(&(&last - expect_last)) <= 1e-13);

    // A pairing-sector perturbation (low-low pair against high-high pair)
    // has no one-body expression and must land wholly in the residual.
    let mut g2_pert = g2.clone();
    let pp = pair.index(0, 0);
    let qq = pair.index(1, 2);
    let amp = C64::new(0.05, 0.0);
    g2_pert[(pp, qq)] += amp;
    g2_pert[(qq, pp)] += amp.conj();
    let (_, residual_pert, _) =
        two_body_split(&pair, &g1, &g1_free, &g2_pert, &g2_free, &p_keep, t);
    let scale = 2.0 / (t * t);
    // Two off-diagonal entries of size |amp| scaled: trace norm 2 scale |amp|.
    assert_abs_diff_eq!(
        hermitian_trace_norm(&residual_pert),
        2.0 * scale * amp.norm(),
        epsilon = 1e-12
    );
}

#[test]
fn variational_scan_is_minimised_at_unit_beta() {
    let basis = ModeBasis::new(1, 1.0, 2.0).unwrap();
    let w = InteractionSpec::new(vec![([0, 0], 1.0)]).unwrap();
    let ens = ClassicalEnsemble::sample(
        &basis,
        &w,
        CovarianceKind::Massive,
        1.0,
        false,
        4000,
        7,
        0,
    )
    .unwrap();
    let rows = classical_variational_scan(&ens, &[0.6, 1.0, 1.4], 8);
    assert_eq!(rows.len(), 3);
    for row in &rows {
        assert!(row.value.is_finite());
        if row.beta == 1.0 {
            assert_eq!(row.slack, 0.0);
            assert_eq!(row.err, 0.0);
        } else {
            // The reweighted trial can only raise the variational value;
            // batch noise sets the tolerance.
            assert!(
                row.slack >= -3.0 * row.err,
                "beta {} slack {} err {}",
                row.beta,
                row.slack,
                row.err
            );
        }
    }
    // Away from the optimum the gap is genuinely visible at this sample size.
    assert!(rows[0].slack > 0.0 && rows[2].slack > 0.0);
}

#[test]
fn quantum_report_satisfies_internal_identities() {
    let report = run_quantum_report(&ExperimentConfig::quantum_check(), &budget()).unwrap();
    assert!(report.passed);
    assert_eq!(report.rows.len(), 2);
    for row in &report.rows {
        assert!(row.log_z.is_finite());
        assert!(row.occupations.iter().all(|&o| o > 0.0));
        // Trace of the one-body matrix is the mean total number.
        let total: f64 = row.occupations.iter().sum();
        assert_abs_diff_eq!(total, row.total_number_mean, epsilon = 1e-9);
        assert!(row.total_number_variance > 0.0);
        // The truncation gate actually held at the chosen depth.
        assert!(row.consistency.log_z_delta <= row.consistency.log_z_allowance);
        assert!(row.consistency.occupation_delta <= row.consistency.occupation_allowance);
        assert!(row.consistency.tail_weight < 1e-3);
    }
    // Hotter rows need deeper ladders.
    assert!(report.rows[1].n_max >= report.rows[0].n_max);
}

#[test]
fn free_correspondence_report_passes_end_to_end() {
    let cfg = ExperimentConfig::free_check();
    let report = run_free_correspondence(&cfg).unwrap();
    assert!(report.passed);
    assert!(report.moment_check.passed);
    assert!(report.moment_check.max_weighted_deviation <= FREE_MOMENT_TOL);
    assert_eq!(report.config_hash, cfg.hash());
    // The analytic gap is tabulated on the internal doubling grid of
    // temperatures, one ratio per adjacent pair.
    assert_eq!(report.analytic_rows.len(), 4);
    assert_eq!(report.halving_ratios.len(), 3);
    assert!(report.halving_ok);
    assert!(report.massive_decreasing);
    // The gap is O(1/t), so doubling t halves it; ratios approach 1/2
    // from above.
    for r in &report.halving_ratios {
        assert!(*r > 0.45 && *r < 0.62, "halving ratio {r}");
    }

    // The weighted-moment statistic itself is reproducible bit-for-bit.
    let basis = cfg.mode_basis().unwrap();
    let a = free_gaussian_moment_check(&basis, 20_000, cfg.seed).unwrap();
    let b = free_gaussian_moment_check(&basis, 20_000, cfg.seed).unwrap();
    assert_eq!(a.max_weighted_deviation, b.max_weighted_deviation);
}
