//! Maps subcommands onto the frozen experiment presets, runs them, and
//! writes the artefacts. Exit-code policy (enforced by the binary):
//! `0` when every gated check passes, `2` when the run completes but a gated
//! trend or tolerance fails (the failed gates are named on stderr), `1` for
//! configuration or execution errors.

use std::path::PathBuf;

use anyhow::Result;
use gibbslab::classical::CovarianceKind;
use gibbslab::experiments::{
    run_1d_convergence, run_2d_renormalized, run_classical_report, run_correlation_diagnostics,
    run_decomposition, run_definetti_suite, run_entropy_suite, run_free_correspondence,
    run_quantum_report, run_variance_suite, ExperimentConfig,
};
use gibbslab::MemoryBudget;

use crate::config::{apply_overrides, Overrides};
use crate::output::{cell, ensure_dir, write_csv, write_json, write_svg_lines};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    FreeCheck,
    Classical,
    Quantum,
    Definetti,
    EntropySuite,
    VarianceSuite,
    Converge1d,
    Converge2d,
    Correlations,
    Decomposition,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::FreeCheck => "free-check",
            Task::Classical => "classical",
            Task::Quantum => "quantum",
            Task::Definetti => "definetti",
            Task::EntropySuite => "entropy-suite",
            Task::VarianceSuite => "variance-suite",
            Task::Converge1d => "converge-1d",
            Task::Converge2d => "converge-2d",
            Task::Correlations => "correlations",
            Task::Decomposition => "decomposition",
        }
    }

    fn preset(self) -> Option<ExperimentConfig> {
        match self {
            Task::FreeCheck => Some(ExperimentConfig::free_check()),
            Task::Classical => Some(ExperimentConfig::classical_check()),
            Task::Quantum => Some(ExperimentConfig::quantum_check()),
            Task::Converge1d => Some(ExperimentConfig::converge_1d()),
            Task::Converge2d => Some(ExperimentConfig::converge_2d()),
            Task::Correlations => Some(ExperimentConfig::correlations()),
            Task::Decomposition => Some(ExperimentConfig::decomposition()),
            Task::Definetti | Task::EntropySuite | Task::VarianceSuite => None,
        }
    }
}

pub struct Options {
    pub seed: Option<u64>,
    pub out_dir: PathBuf,
    pub no_plots: bool,
    pub budget_mb: u64,
}

#[derive(Debug)]
pub enum Outcome {
    Passed,
    Failed(Vec<&'static str>),
}

fn cov_name(c: CovarianceKind) -> &'static str {
    match c {
        CovarianceKind::Massive => "massive",
        CovarianceKind::Thermal => "thermal",
    }
}

/// Runs one task end to end; `overrides` come from `--config`, the seed flag
/// wins over both the file and the preset.
pub fn execute(task: Task, overrides: Option<&Overrides>, opts: &Options) -> Result<Outcome> {
    let budget = MemoryBudget::new(opts.budget_mb);
    let dir = ensure_dir(&opts.out_dir)?;
    let wrote = |name: &str| println!("wrote {}", dir.join(name).display());

    // Suites are seeded directly; experiments carry the seed in their config.
    let suite_seed = opts
        .seed
        .or(overrides.and_then(|o| o.seed))
        .unwrap_or(1);
    let cfg = task.preset().map(|preset| {
        let mut cfg = match overrides {
            Some(o) => apply_overrides(preset, o),
            None => preset,
        };
        if let Some(s) = opts.seed {
            cfg.seed = s;
        }
        cfg
    });

    let mut failed: Vec<&'static str> = Vec::new();
    match task {
        Task::FreeCheck => {
            let cfg = cfg.unwrap();
            let report = run_free_correspondence(&cfg)?;
            println!("config hash: {}", report.config_hash);
            write_json(&dir.join("report.json"), &report)?;
            wrote("report.json");
            let rows: Vec<Vec<String>> = report
                .analytic_rows
                .iter()
                .map(|r| vec![cell(r.t), cell(r.d1)])
                .collect();
            write_csv(&dir.join("analytic.csv"), &["t", "d1"], &rows)?;
            wrote("analytic.csv");
            let rows: Vec<Vec<String>> = report
                .mc_rows
                .iter()
                .map(|r| {
                    vec![
                        cell(r.t),
                        cov_name(r.covariance).to_string(),
                        cell(r.d1),
                        cell(r.d1_err),
                        cell(r.d2),
                        cell(r.d2_err),
                        r.noise_floor.to_string(),
                    ]
                })
                .collect();
            write_csv(
                &dir.join("mc.csv"),
                &["t", "covariance", "d1", "d1_err", "d2", "d2_err", "noise_floor"],
                &rows,
            )?;
            wrote("mc.csv");
            if !opts.no_plots {
                let ts: Vec<f64> = report.analytic_rows.iter().map(|r| r.t).collect();
                let d1: Vec<f64> = report.analytic_rows.iter().map(|r| r.d1).collect();
                write_svg_lines(
                    &dir.join("free_gap.svg"),
                    "Free-field one-body gap vs temperature",
                    "t",
                    "d1",
                    &[("analytic".to_string(), ts, d1)],
                )?;
                wrote("free_gap.svg");
            }
            if !report.moment_check.passed {
                failed.push("sampled_moment_tolerance");
            }
            if !report.halving_ok {
                failed.push("analytic_halving");
            }
            if !report.massive_decreasing {
                failed.push("massive_distance_decreasing");
            }
        }
        Task::Classical => {
            let cfg = cfg.unwrap();
            let report = run_classical_report(&cfg)?;
            println!("config hash: {}", report.config_hash);
            write_json(&dir.join("report.json"), &report)?;
            wrote("report.json");
            let rows: Vec<Vec<String>> = report
                .rows
                .iter()
                .map(|r| {
                    vec![
                        cell(r.t),
                        cell(r.z_mean),
                        cell(r.z_log),
                        cell(r.z_stderr),
                        cell(r.ess),
                        r.ess_warning.to_string(),
                        cell(r.mean_d_free),
                        cell(r.mean_d_free_err),
                        cell(r.wick_mean),
                        cell(r.wick_gap_sigmas),
                        cell(r.mean_d_interacting),
                        cell(r.kl_to_free),
                    ]
                })
                .collect();
            write_csv(
                &dir.join("rows.csv"),
                &[
                    "t",
                    "z_mean",
                    "z_log",
                    "z_stderr",
                    "ess",
                    "ess_warning",
                    "mean_d_free",
                    "mean_d_free_err",
                    "wick_mean",
                    "wick_gap_sigmas",
                    "mean_d_interacting",
                    "kl_to_free",
                ],
                &rows,
            )?;
            wrote("rows.csv");
            if !report.wick_ok {
                failed.push("wick_consistency");
            }
            if report.rows.iter().any(|r| r.ess_warning) {
                failed.push("effective_sample_size");
            }
        }
        Task::Quantum => {
            let cfg = cfg.unwrap();
            let report = run_quantum_report(&cfg, &budget)?;
            println!("config hash: {}", report.config_hash);
            write_json(&dir.join("report.json"), &report)?;
            wrote("report.json");
            let rows: Vec<Vec<String>> = report
                .rows
                .iter()
                .map(|r| {
                    let occ: Vec<String> = r.occupations.iter().map(|&o| cell(o)).collect();
                    vec![
                        cell(r.t),
                        r.n_max.to_string(),
                        cell(r.log_z),
                        cell(r.ground_energy),
                        cell(r.total_number_mean),
                        cell(r.total_number_variance),
                        occ.join(";"),
                    ]
                })
                .collect();
            write_csv(
                &dir.join("rows.csv"),
                &[
                    "t",
                    "n_max",
                    "log_z",
                    "ground_energy",
                    "total_number_mean",
                    "total_number_variance",
                    "occupations",
                ],
                &rows,
            )?;
            wrote("rows.csv");
            if !report.passed {
                failed.push("truncation_consistency");
            }
        }
        Task::Converge1d => {
            let cfg = cfg.unwrap();
            let report = run_1d_convergence(&cfg, &budget)?;
            println!("config hash: {}", report.config_hash);
            write_json(&dir.join("report.json"), &report)?;
            wrote("report.json");
            let rows: Vec<Vec<String>> = report
                .rows
                .iter()
                .map(|r| {
                    vec![
                        cell(r.t),
                        r.n_max.to_string(),
                        cell(r.d1),
                        cell(r.d1_err),
                        cell(r.d2),
                        cell(r.d2_err),
                        cell(r.ess),
                        cell(r.consistency.log_z_delta),
                        cell(r.consistency.log_z_allowance),
                        cell(r.consistency.occupation_delta),
                        cell(r.consistency.occupation_allowance),
                        cell(r.consistency.tail_weight),
                    ]
                })
                .collect();
            write_csv(
                &dir.join("rows.csv"),
                &[
                    "t",
                    "n_max",
                    "d1",
                    "d1_err",
                    "d2",
                    "d2_err",
                    "ess",
                    "log_z_delta",
                    "log_z_allowance",
                    "occupation_delta",
                    "occupation_allowance",
                    "tail_weight",
                ],
                &rows,
            )?;
            wrote("rows.csv");
            if !opts.no_plots {
                let ts: Vec<f64> = report.rows.iter().map(|r| r.t).collect();
                let d1: Vec<f64> = report.rows.iter().map(|r| r.d1).collect();
                let d2: Vec<f64> = report.rows.iter().map(|r| r.d2).collect();
                write_svg_lines(
                    &dir.join("gaps.svg"),
                    "Quantum-classical gaps vs temperature",
                    "t",
                    "gap",
                    &[
                        ("one-body".to_string(), ts.clone(), d1),
                        ("two-body".to_string(), ts, d2),
                    ],
                )?;
                wrote("gaps.svg");
            }
            if !report.d1_decreasing {
                failed.push("one_body_gap_decreasing");
            }
            if !report.d1_halved {
                failed.push("one_body_gap_halving");
            }
            if !report.d2_decreasing {
                failed.push("two_body_gap_decreasing");
            }
        }
        Task::Converge2d => {
            let cfg = cfg.unwrap();
            let report = run_2d_renormalized(&cfg, &budget)?;
            println!("config hash: {}", report.config_hash);
            write_json(&dir.join("report.json"), &report)?;
            wrote("report.json");
            let rows: Vec<Vec<String>> = report
                .rows
                .iter()
                .map(|r| {
                    vec![
                        cell(r.t),
                        r.n_max.to_string(),
                        cell(r.diff_s1),
                        cell(r.diff_s1_err),
                        cell(r.diff_s2),
                        cell(r.diff_s2_err),
                        cell(r.d2_s1),
                        cell(r.d2_s1_err),
                        cell(r.d2_s2),
                        cell(r.d2_s2_err),
                        cell(r.ess),
                    ]
                })
                .collect();
            write_csv(
                &dir.join("rows.csv"),
                &[
                    "t",
                    "n_max",
                    "diff_s1",
                    "diff_s1_err",
                    "diff_s2",
                    "diff_s2_err",
                    "d2_s1",
                    "d2_s1_err",
                    "d2_s2",
                    "d2_s2_err",
                    "ess",
                ],
                &rows,
            )?;
            wrote("rows.csv");
            if !opts.no_plots && !report.rows.is_empty() {
                let ts: Vec<f64> = report.rows.iter().map(|r| r.t).collect();
                let s1: Vec<f64> = report.rows.iter().map(|r| r.diff_s1).collect();
                let s2: Vec<f64> = report.rows.iter().map(|r| r.diff_s2).collect();
                write_svg_lines(
                    &dir.join("gaps.svg"),
                    "Renormalized quantum-classical gaps vs temperature",
                    "t",
                    "gap",
                    &[
                        ("trace norm".to_string(), ts.clone(), s1),
                        ("Schatten-2".to_string(), ts, s2),
                    ],
                )?;
                wrote("gaps.svg");
            }
            if report.grid_truncated {
                println!(
                    "note: grid truncated to {} of {} points by the memory budget",
                    report.rows.len(),
                    report.requested_points
                );
            }
            if !report.diff_decreasing {
                failed.push("quantum_classical_gap_decreasing");
            }
        }
        Task::Correlations => {
            let cfg = cfg.unwrap();
            let report = run_correlation_diagnostics(&cfg, &budget)?;
            println!("config hash: {}", report.config_hash);
            write_json(&dir.join("report.json"), &report)?;
            wrote("report.json");
            let rows: Vec<Vec<String>> = report
                .rows
                .iter()
                .map(|r| {
                    vec![
                        cell(r.t),
                        r.n_max.to_string(),
                        cell(r.variance_over_t2),
                        cell(r.mean_gap_over_t),
                    ]
                })
                .collect();
            write_csv(
                &dir.join("rows.csv"),
                &["t", "n_max", "variance_over_t2", "mean_gap_over_t"],
                &rows,
            )?;
            wrote("rows.csv");
            if !opts.no_plots {
                let ts: Vec<f64> = report.rows.iter().map(|r| r.t).collect();
                let v: Vec<f64> = report.rows.iter().map(|r| r.variance_over_t2).collect();
                let g: Vec<f64> = report.rows.iter().map(|r| r.mean_gap_over_t).collect();
                write_svg_lines(
                    &dir.join("correlations.svg"),
                    "High-mode number diagnostics vs temperature",
                    "t",
                    "scaled statistic",
                    &[
                        ("variance / t^2".to_string(), ts.clone(), v),
                        ("mean gap / t".to_string(), ts, g),
                    ],
                )?;
                wrote("correlations.svg");
            }
            if !report.variance_nonincreasing {
                failed.push("scaled_variance_nonincreasing");
            }
            if !report.mean_gap_nonincreasing {
                failed.push("scaled_mean_gap_nonincreasing");
            }
        }
        Task::Decomposition => {
            let cfg = cfg.unwrap();
            let report = run_decomposition(&cfg, &budget)?;
            println!("config hash: {}", report.config_hash);
            write_json(&dir.join("report.json"), &report)?;
            wrote("report.json");
            let rows: Vec<Vec<String>> = report
                .rows
                .iter()
                .map(|r| {
                    vec![
                        cell(r.t),
                        r.n_max.to_string(),
                        cell(r.lhs_s1),
                        cell(r.residual_s1),
                        cell(r.residual_ratio),
                        cell(r.last_term_s2),
                    ]
                })
                .collect();
            write_csv(
                &dir.join("rows.csv"),
                &[
                    "t",
                    "n_max",
                    "lhs_s1",
                    "residual_s1",
                    "residual_ratio",
                    "last_term_s2",
                ],
                &rows,
            )?;
            wrote("rows.csv");
            if !opts.no_plots {
                let ts: Vec<f64> = report.rows.iter().map(|r| r.t).collect();
                let ratio: Vec<f64> = report.rows.iter().map(|r| r.residual_ratio).collect();
                write_svg_lines(
                    &dir.join("residual.svg"),
                    "Two-body decomposition residual vs temperature",
                    "t",
                    "residual / lhs",
                    &[("trace-norm ratio".to_string(), ts, ratio)],
                )?;
                wrote("residual.svg");
            }
            if !report.ratio_decreasing {
                failed.push("residual_ratio_decreasing");
            }
        }
        Task::EntropySuite => {
            let report = run_entropy_suite(suite_seed, &budget)?;
            println!("config hash: {}", report.config_hash);
            println!("violations: {}", report.violations);
            write_json(&dir.join("report.json"), &report)?;
            wrote("report.json");
            if report.violations > 0 {
                failed.push("zero_violations");
            }
        }
        Task::VarianceSuite => {
            let report = run_variance_suite(suite_seed, &budget)?;
            println!("config hash: {}", report.config_hash);
            println!("violations: {}", report.violations);
            write_json(&dir.join("report.json"), &report)?;
            wrote("report.json");
            if report.violations > 0 {
                failed.push("zero_violations");
            }
        }
        Task::Definetti => {
            let report = run_definetti_suite(suite_seed, &budget)?;
            println!("config hash: {}", report.config_hash);
            println!("violations: {}", report.violations);
            write_json(&dir.join("report.json"), &report)?;
            wrote("report.json");
            if report.violations > 0 {
                failed.push("zero_violations");
            }
        }
    }

    if failed.is_empty() {
        println!("PASS");
        Ok(Outcome::Passed)
    } else {
        println!("FAIL: {}", failed.join(", "));
        eprintln!("failed checks: {}", failed.join(", "));
        Ok(Outcome::Failed(failed))
    }
}
