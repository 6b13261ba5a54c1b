use std::path::Path;

use approx::assert_relative_eq;

use cdyn::harness::{
    emit_figure_data, load_scenario, run_convergence_sweep, run_indistinguishability_audit, run_subordination_check,
    FigureId, Scenario,
};
use cdyn::Error;

fn shipped(name: &str) -> Scenario {
    load_scenario(Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(format!("{name}.json"))).unwrap()
}

fn inline(body: &str) -> Scenario {
    let sc = Scenario::from_json(body).unwrap();
    sc.validate().unwrap();
    sc
}

// Cell averages of sin²(4s) from its antiderivative.
fn sin2_averages(n: usize) -> Vec<f64> {
    let f = |s: f64| s / 2.0 - (8.0 * s).sin() / 16.0;
    (0..n)
        .map(|i| {
            let (a, b) = (i as f64 / n as f64, (i + 1) as f64 / n as f64);
            (f(b) - f(a)) * n as f64
        })
        .collect()
}

// ‖P_c P_d f − f‖² = ∫f² − (1/N) Σ avg².
fn sin2_projection_sq(n: usize) -> f64 {
    let norm_sq = 3.0 / 8.0 - 8f64.sin() / 16.0 + 16f64.sin() / 128.0;
    norm_sq - sin2_averages(n).iter().map(|a| a * a).sum::<f64>() / n as f64
}

#[test]
fn static_sweep_is_projection_difference() {
    let sc = inline(
        r#"{"name": "static", "dimension": 1, "kernel": {"kind": "zero"}, "mass_law": {"kind": "zero"},
            "initial": {"x": {"builtin": "sin2_4s"}, "m": {"builtin": "uniform"}},
            "T": 0.5, "dt": 0.05, "N_list": [5, 10, 20]}"#,
    );
    let r = run_convergence_sweep(&sc, None).unwrap();
    assert_eq!(r.reference_cells, 80);
    let reference = sin2_projection_sq(80);
    for row in &r.rows {
        // Nested grids: the coarse projection error splits orthogonally.
        let expected = (sin2_projection_sq(row.n) - reference).sqrt();
        assert_relative_eq!(row.x_error, expected, max_relative = 1e-6);
        assert_relative_eq!(row.x_projection, sin2_projection_sq(row.n).sqrt(), max_relative = 1e-6);
        assert!(row.m_error <= 1e-14 && row.m_projection <= 1e-14);
    }
    assert!(r.x_monotone() && r.m_monotone() && r.final_within_projection());
}

#[test]
fn sweep_subset_and_rejects() {
    let sc = shipped("leaders_k1");
    let r = run_convergence_sweep(&sc, Some(&[10, 20])).unwrap();
    assert_eq!(r.rows.iter().map(|r| r.n).collect::<Vec<_>>(), vec![10, 20]);
    assert_eq!(r.reference_cells, 80);
    assert!(r.rows[1].x_error < r.rows[0].x_error);
    // 30 does not divide the reference grid of 4 × 80 cells.
    assert!(run_convergence_sweep(&sc, Some(&[10, 30, 80])).is_err());
    // Overrides are sorted and deduplicated.
    let again = run_convergence_sweep(&sc, Some(&[20, 10, 20])).unwrap();
    assert_eq!(again.rows.iter().map(|r| r.x_error).collect::<Vec<_>>(), r.rows.iter().map(|r| r.x_error).collect::<Vec<_>>());
}

#[test]
fn stationary_point_mass_subordinates_exactly() {
    let sc = inline(
        r#"{"name": "point", "dimension": 1, "kernel": {"kind": "compact_sine", "radius": 0.3},
            "mass_law": {"kind": "group_influence"},
            "initial": {"x": {"builtin": "uniform"}, "m": {"builtin": "uniform"}},
            "T": 0.2, "dt": 0.01, "N_list": [4, 8], "pde": {"cells": 20}}"#,
    );
    let r = run_subordination_check(&sc).unwrap();
    assert!(r.residual.iter().all(|row| row.residual <= 1e-10), "{:?}", r.residual);
    assert!(r.micro_vs_pushforward.iter().all(|d| d.sup <= 1e-14));
    assert!(r.pde.iter().all(|p| p.distance <= 1e-12 && p.negative_mass == 0.0), "{:?}", r.pde);
    assert!(r.passed());
}

#[test]
fn leader_scenarios_are_refused_by_mean_field_checks() {
    for name in ["leaders_k1", "leaders_k2"] {
        let sc = shipped(name);
        assert!(matches!(run_subordination_check(&sc), Err(Error::Refused(_))));
        for fig in [FigureId::Fig7, FigureId::Fig8] {
            assert!(matches!(emit_figure_data(&sc, fig), Err(Error::Refused(_))));
        }
    }
    assert!(matches!(emit_figure_data(&shipped("clusters"), FigureId::Fig3), Err(Error::Refused(_))));
}

#[test]
fn audit_finds_leader_witness() {
    let r = run_indistinguishability_audit(&shipped("leaders_k1"), 6).unwrap();
    assert!(!r.expect_preserved);
    assert!(r.violations() >= 1);
    assert_eq!(r.max_drift(), 0.0);
    assert!(r.passed());
}

#[test]
fn figure_bundles() {
    let k1 = shipped("leaders_k1");
    let b = emit_figure_data(&k1, FigureId::Fig4).unwrap();
    let names: Vec<String> = b.series.iter().map(|s| b.file_name(s)).collect();
    assert_eq!(names, ["leaders_k1_fig4_micro.csv", "leaders_k1_fig4_graph.csv"]);
    let graph = String::from_utf8(b.series[1].csv.clone()).unwrap();
    assert_eq!(graph.lines().next(), Some("t,s,x,m"));
    // Three caption times on 100 cells.
    assert_eq!(graph.lines().count(), 1 + 3 * 100);

    let b = emit_figure_data(&shipped("clusters"), FigureId::Fig8).unwrap();
    let series: Vec<&str> = b.series.iter().map(|s| s.series.as_str()).collect();
    assert_eq!(series, ["binned", "pushforward", "pde"]);
    let binned = String::from_utf8(b.series[0].csv.clone()).unwrap();
    assert_eq!(binned.lines().count(), 1 + 3 * 25);
}

#[test]
fn shipped_scenarios_match_their_descriptions() {
    let k1 = shipped("leaders_k1");
    let k2 = shipped("leaders_k2");
    let cl = shipped("clusters");
    for (sc, groups) in [(&k1, 1), (&k2, 2)] {
        match sc.law().unwrap() {
            cdyn::MassLaw::LeaderFollower(lf) => {
                assert_eq!(lf.groups, groups);
                assert_eq!(lf.leader_fraction, 0.1);
                assert_eq!(lf.gain, 5.0);
            }
            other => panic!("unexpected law {}", other.name()),
        }
        assert_eq!(sc.default_agents(), 20);
    }
    assert_eq!(k1.n_list, [10, 20, 40, 80]);
    assert_eq!(cl.n_list, [25, 50, 100]);
    assert_eq!((cl.horizon, cl.default_agents()), (1.5, 50));
    assert!(matches!(cl.kernel(), cdyn::InteractionKernel::CompactSine { radius } if radius == 0.2));
    // Normalized weight profiles give unit mean weight.
    for sc in [&k1, &k2, &cl] {
        let e = sc.ensemble(sc.default_agents()).unwrap();
        assert_relative_eq!(e.total_weight() / e.len() as f64, 1.0, max_relative = 1e-10);
    }
}
