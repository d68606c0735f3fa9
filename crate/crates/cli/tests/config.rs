//! Unit tests of the flat key-value parser and the preset override logic.

use gibbslab::classical::CovarianceKind;
use gibbslab::experiments::ExperimentConfig;
use gibbslab_cli::{apply_overrides, parse_overrides};

#[test]
fn a_full_config_parses_and_overrides_every_preset_field() {
    let text = "\
# two-dimensional instrument
dim = 2
kappa = 0.75      # chemical-potential-like offset
cutoff = 45.0
w = [0,0:1.0; 1,0:0.5; -1,0:0.5]
t_grid = 1.0, 2.5, 5.0
n_max = 9
tail_target = 1e-4
samples = 12345
batches = 4
seed = 77
covariance = thermal
renormalized = true
nu = -0.5
coupling = 0.25
k_split = 6.5
";
    let o = parse_overrides(text).expect("config should parse");
    // Every preset field is overridden, so the choice of base is immaterial.
    let cfg = apply_overrides(ExperimentConfig::classical_check(), &o);
    assert_eq!(cfg.dim, 2);
    assert_eq!(cfg.kappa, 0.75);
    assert_eq!(cfg.cutoff, 45.0);
    assert_eq!(
        cfg.interaction,
        vec![([0, 0], 1.0), ([1, 0], 0.5), ([-1, 0], 0.5)]
    );
    assert_eq!(cfg.t_grid, vec![1.0, 2.5, 5.0]);
    assert_eq!(cfg.n_max, Some(9));
    assert_eq!(cfg.tail_target, 1e-4);
    assert_eq!(cfg.samples, 12345);
    assert_eq!(cfg.batches, 4);
    assert_eq!(cfg.seed, 77);
    assert_eq!(cfg.covariance, CovarianceKind::Thermal);
    assert!(cfg.renormalized);
    assert_eq!(cfg.nu, -0.5);
    assert_eq!(cfg.coupling, 0.25);
    assert_eq!(cfg.k_split, 6.5);
}

#[test]
fn absent_keys_leave_the_preset_untouched() {
    let o = parse_overrides("seed = 3\n").unwrap();
    let base = ExperimentConfig::converge_1d();
    let cfg = apply_overrides(base.clone(), &o);
    assert_eq!(cfg.seed, 3);
    let mut expect = base;
    expect.seed = 3;
    assert_eq!(
        serde_json::to_string(&cfg).unwrap(),
        serde_json::to_string(&expect).unwrap(),
        "only the seed should change"
    );
}

#[test]
fn an_empty_config_is_a_no_op() {
    let o = parse_overrides("# nothing but comments\n\n").unwrap();
    let base = ExperimentConfig::classical_check();
    let cfg = apply_overrides(base.clone(), &o);
    assert_eq!(
        serde_json::to_string(&cfg).unwrap(),
        serde_json::to_string(&base).unwrap()
    );
}

#[test]
fn structural_problems_are_collected_with_line_numbers() {
    let text = "\
seed 7
 = 4
seed = 1
seed = 2
dim = 3
t_grid = 2.0, -1.0
";
    let errors = parse_overrides(text).unwrap_err();
    let all = errors.join("\n");
    assert!(all.contains("line 1: expected `key = value`"), "{all}");
    assert!(all.contains("line 2: empty key or value"), "{all}");
    assert!(all.contains("line 4: duplicate key `seed`"), "{all}");
    assert!(all.contains("line 5: dim must be 1 or 2"), "{all}");
    assert!(all.contains("line 6"), "{all}");
    assert_eq!(errors.len(), 5, "{all}");
}

#[test]
fn interaction_entries_are_validated_against_the_dimension() {
    // dim declared after w still governs the momentum arity.
    let errors = parse_overrides("w = [0:1.0]\ndim = 2\n").unwrap_err();
    assert!(
        errors[0].contains("has 1 component(s) but dim = 2"),
        "{errors:?}"
    );

    let o = parse_overrides("w = [0:1.0; -1:0.5]\n").unwrap();
    assert_eq!(o.interaction, Some(vec![([0, 0], 1.0), ([-1, 0], 0.5)]));

    let errors = parse_overrides("w = 0:1.0\n").unwrap_err();
    assert!(errors[0].contains("bracketed list"), "{errors:?}");

    let errors = parse_overrides("w = [0:1.0; x:0.5]\n").unwrap_err();
    assert!(errors[0].contains("not an integer"), "{errors:?}");
}
