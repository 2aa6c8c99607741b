use std::f64::consts::FRAC_PI_2;

use altproj::diagnostics::msd;
use altproj::experiments::{self, AlgorithmChoice, ExperimentConfig, ExperimentKind};

fn synthetic(kind: ExperimentKind, algorithm: AlgorithmChoice) -> ExperimentConfig {
    ExperimentConfig {
        experiment: kind,
        algorithm,
        ..ExperimentConfig::default()
    }
}

#[test]
fn cs_f_matches_msd_at_every_iterate() {
    let cfg = ExperimentConfig {
        n: 10,
        m_dict: 24,
        d_rows: 3,
        seed: 4,
        max_iter: 80,
        store_iterates: Some(true),
        ..ExperimentConfig::default()
    };
    let out = experiments::experiment_cs(&cfg).unwrap();
    let (sets, u0) = experiments::cs_problem(&cfg, 4).unwrap();
    assert_eq!(out.trace.iterates[0], u0);
    for (x, f) in out.trace.iterates.iter().zip(&out.trace.f_values) {
        assert!((msd(&sets, x).unwrap() - f).abs() <= 1e-12);
    }
}

#[test]
fn cs_start_lies_in_the_row_space() {
    for projected in [false, true] {
        let cfg = ExperimentConfig {
            n: 10,
            m_dict: 24,
            d_rows: 3,
            u0_projected: projected,
            ..ExperimentConfig::default()
        };
        let (sets, u0) = experiments::cs_problem(&cfg, 2).unwrap();
        assert!(sets[0].distance(&u0).unwrap() <= 1e-9 * (1.0 + u0.norm()));
    }
}

#[test]
fn cs_single_row_with_large_alpha_converges_quickly() {
    let cfg = ExperimentConfig {
        n: 16,
        m_dict: 64,
        d_rows: 1,
        alpha: 1.0,
        ..ExperimentConfig::default()
    };
    let out = experiments::experiment_cs(&cfg).unwrap();
    assert!(out.summary.converged, "{:?}", out.summary);
    assert!(out.summary.iterations < 100, "{}", out.summary.iterations);
}

#[test]
fn cs_cyclic_and_averaged_rates_are_reported() {
    let base = ExperimentConfig {
        n: 16,
        m_dict: 48,
        d_rows: 4,
        seed: 3,
        max_iter: 300,
        ..ExperimentConfig::default()
    };
    let avg = experiments::experiment_cs(&base).unwrap();
    let cyc = experiments::experiment_cs(&ExperimentConfig {
        algorithm: AlgorithmChoice::Cyclic,
        ..base
    })
    .unwrap();
    let ra = avg.summary.distance_fit.as_ref().unwrap().rate;
    let rc = cyc.summary.distance_fit.as_ref().unwrap().rate;
    println!("fitted rms-distance rate: averaged {ra:.4}, cyclic {rc:.4}");
    assert!(ra < 1.0 && rc < 1.0);
}

#[test]
fn two_lines_at_right_angle_averaged() {
    let cfg = ExperimentConfig {
        theta: FRAC_PI_2,
        ..synthetic(ExperimentKind::TwoLines, AlgorithmChoice::Averaged)
    };
    let out = experiments::experiment_synthetic(&cfg).unwrap();
    // averaging the two projections halves the iterate, so f drops by 4
    assert!((out.summary.error_fit.unwrap().rate - 0.5).abs() < 1e-9);
    assert!((out.summary.asymptotic_ratio.unwrap() - 0.25).abs() < 1e-12);
    let r = out.report.unwrap();
    assert!((r.cbar_avg * r.cbar_avg - 0.5).abs() < 1e-12);
}

#[test]
fn two_lines_alternating_rate_is_cos_theta() {
    let out = experiments::experiment_synthetic(&synthetic(
        ExperimentKind::TwoLines,
        AlgorithmChoice::Alternating,
    ))
    .unwrap();
    assert!((out.summary.error_fit.unwrap().rate - 0.5).abs() < 0.01);
}

#[test]
fn product_route_matches_averaged_in_the_driver() {
    let a = experiments::experiment_synthetic(&synthetic(
        ExperimentKind::Subspaces,
        AlgorithmChoice::Averaged,
    ))
    .unwrap();
    let b = experiments::experiment_synthetic(&synthetic(
        ExperimentKind::Subspaces,
        AlgorithmChoice::AlternatingProduct,
    ))
    .unwrap();
    assert_eq!(a.trace.f_values, b.trace.f_values);
}

#[test]
fn circle_line_crossing_at_right_angle() {
    let cfg = ExperimentConfig {
        theta: FRAC_PI_2,
        ..synthetic(ExperimentKind::CircleLine, AlgorithmChoice::Alternating)
    };
    let out = experiments::experiment_synthetic(&cfg).unwrap();
    assert!(out.summary.converged);
    assert!(out.report.unwrap().cbar_pairwise.abs() < 1e-12);
    let last = out.trace.last_iterate().unwrap();
    assert!((last - altproj::Point::from_column_slice(&[1.0, 0.0])).norm() < 1e-9);
}

#[test]
fn circle_line_at_sixty_degrees_matches_lines() {
    let out = experiments::experiment_synthetic(&synthetic(
        ExperimentKind::CircleLine,
        AlgorithmChoice::Alternating,
    ))
    .unwrap();
    let r = out.report.unwrap();
    assert!((r.cbar_pairwise - 0.5).abs() < 1e-12);
    assert!(out.summary.error_fit.unwrap().rate <= 0.5 + 0.01);
}

#[test]
fn subspaces_report_and_convergence() {
    let cfg = ExperimentConfig {
        n: 12,
        m_sets: 3,
        max_iter: 2000,
        ..synthetic(ExperimentKind::Subspaces, AlgorithmChoice::Averaged)
    };
    let out = experiments::experiment_synthetic(&cfg).unwrap();
    let r = out.report.unwrap();
    let rates = r.rates.unwrap();
    assert!(out.summary.converged);
    assert!(out.summary.max_ratio.unwrap() <= rates.qlinear_factor + 1e-9);
    assert!(out.summary.error_fit.unwrap().rate <= rates.rate_averaged);
}

#[test]
fn perturbed_and_inexact_experiments() {
    let out = experiments::experiment_synthetic(&synthetic(
        ExperimentKind::Perturbed,
        AlgorithmChoice::Alternating,
    ))
    .unwrap();
    let pert = out.summary.perturbed.unwrap();
    assert!(pert.within_bound);
    assert!(pert.limit_residuals.iter().all(|&d| d < 1e-9));

    let out = experiments::experiment_synthetic(&synthetic(
        ExperimentKind::Inexact,
        AlgorithmChoice::Alternating,
    ))
    .unwrap();
    assert!(!out.trace.inexact_steps.is_empty());
    assert!(out.summary.converged);
}

#[test]
fn batch_runs_consecutive_seeds() {
    let cfg = ExperimentConfig {
        n: 8,
        m_dict: 16,
        d_rows: 2,
        seed: 10,
        batch_seeds: 3,
        max_iter: 20,
        ..ExperimentConfig::default()
    };
    let outs = experiments::run_experiment(&cfg).unwrap();
    let seeds: Vec<u64> = outs.iter().map(|o| o.seed).collect();
    assert_eq!(seeds, vec![10, 11, 12]);
    let single = experiments::experiment_cs(&ExperimentConfig {
        seed: 11,
        batch_seeds: 1,
        ..cfg
    })
    .unwrap();
    assert_eq!(single.trace.f_values, outs[1].trace.f_values);
}
