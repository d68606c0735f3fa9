use approx::assert_abs_diff_eq;
use gibbslab::fock::{build_hamiltonian, gibbs_state, FockBasis};
use gibbslab::pairs::PairBasis;
use gibbslab::spectral::{InteractionSpec, ModeBasis};
use gibbslab::MemoryBudget;
use nalgebra::{Complex, DMatrix};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type C64 = Complex<f64>;

#[test]
fn pair_listing_and_index_agree() {
    let pb = PairBasis::new(4);
    assert_eq!(pb.modes(), 4);
    assert_eq!(pb.len(), 10);
    assert!(!pb.is_empty());
    // Lexicographic lower-triangle order with i <= j.
    let mut seen = Vec::new();
    for &(i, j) in pb.pairs() {
        assert!(i <= j);
        seen.push((i, j));
    }
    let mut sorted = seen.clone();
    sorted.sort();
    assert_eq!(seen, sorted);
    for (p, &(i, j)) in pb.pairs().iter().enumerate() {
        assert_eq!(pb.index(i, j), p);
        assert_eq!(pb.index(j, i), p);
        let expect = if i == j { std::f64::consts::FRAC_1_SQRT_2 } else { 1.0 };
        assert_abs_diff_eq!(pb.annihilator_norm(p), expect, epsilon = 1e-15);
    }
}

#[test]
fn amplitude_vector_is_an_isometric_square() {
    let pb = PairBasis::new(3);
    let u = [
        C64::new(0.4, -0.3),
        C64::new(-1.2, 0.5),
        C64::new(0.1, 0.8),
    ];
    let amp = pb.amplitude_vector(&u);
    // Entry convention: u_i^2 on the diagonal, sqrt(2) u_i u_j off it.
    for (p, &(i, j)) in pb.pairs().iter().enumerate() {
        let expect = if i == j {
            u[i] * u[i]
        } else {
            C64::new(std::f64::consts::SQRT_2, 0.0) * u[i] * u[j]
        };
        assert_abs_diff_eq!(amp[p].re, expect.re, epsilon = 1e-14);
        assert_abs_diff_eq!(amp[p].im, expect.im, epsilon = 1e-14);
    }
    // |u tensor u|^2 = |u|^4 survives the compression.
    let norm2: f64 = u.iter().map(|z| z.norm_sqr()).sum();
    assert_abs_diff_eq!(amp.norm_squared(), norm2 * norm2, epsilon = 1e-12);
}

/// Isometry from the symmetric pair basis into the plain tensor basis:
/// row p is |i i> on the diagonal and (|i j> + |j i>)/sqrt(2) otherwise.
fn pair_isometry(pb: &PairBasis) -> DMatrix<C64> {
    let m = pb.modes();
    let mut p_mat = DMatrix::<C64>::zeros(pb.len(), m * m);
    for (p, &(i, j)) in pb.pairs().iter().enumerate() {
        if i == j {
            p_mat[(p, i * m + i)] = C64::new(1.0, 0.0);
        } else {
            p_mat[(p, i * m + j)] = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
            p_mat[(p, j * m + i)] = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        }
    }
    p_mat
}

#[test]
fn sym_tensor_product_matches_kronecker_compression() {
    let m = 3;
    let pb = PairBasis::new(m);
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut random = || {
        DMatrix::<C64>::from_fn(m, m, |_, _| {
            C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        })
    };
    let a = random();
    let b = random();

    let p_mat = pair_isometry(&pb);
    let dense = &p_mat * a.kronecker(&b) * p_mat.adjoint();
    let got = pb.sym_tensor_product(&a, &b);
    assert_eq!(got.nrows(), pb.len());
    assert!((&got - &dense).norm() < 1e-12, "norm {}", (&got - dense).norm());

    // Swapping the factors leaves the compression unchanged.
    let swapped = pb.sym_tensor_product(&b, &a);
    assert!((&got - &swapped).norm() < 1e-12);
}

#[test]
fn free_two_body_matrix_is_the_symmetric_square_of_the_one_body() {
    // Free Gibbs state, truncation deep enough that the cap is invisible:
    // Gamma^(2) = P (gamma tensor gamma) P* holds to ~1e-10.
    let basis = ModeBasis::new(1, 1.0, 50.0).unwrap();
    let w = InteractionSpec::new(Vec::new()).unwrap();
    let budget = MemoryBudget::new(2048);
    let fock = FockBasis::enumerate(&basis, 60, &budget).unwrap();
    let h = build_hamiltonian(&fock, &basis, &w, -1.0, 0.0, &budget).unwrap();
    let gibbs = gibbs_state(&h, 2.0).unwrap();
    let g1 = gibbs.state.reduced_density_matrix(1).unwrap();
    let g2 = gibbs.state.reduced_density_matrix(2).unwrap();
    let pb = PairBasis::new(3);
    let free2 = pb.sym_tensor_product(&g1, &g1);
    assert!(
        (&g2 - &free2).norm() < 1e-10,
        "norm {}",
        (&g2 - free2).norm()
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn index_table_is_total_and_symmetric(m in 1usize..8) {
        let pb = PairBasis::new(m);
        prop_assert_eq!(pb.len(), m * (m + 1) / 2);
        let mut hit = vec![false; pb.len()];
        for i in 0..m {
            for j in 0..m {
                let p = pb.index(i, j);
                prop_assert_eq!(pb.index(j, i), p);
                let (lo, hi) = pb.pairs()[p];
                prop_assert_eq!((lo, hi), (i.min(j), i.max(j)));
                hit[p] = true;
            }
        }
        prop_assert!(hit.iter().all(|&h| h));
    }
}
