use approx::assert_abs_diff_eq;

use super::*;
use crate::assembly::Pairing;
use crate::expr::parse;

fn entry_by_name(name: &str) -> CorpusEntry {
    corpus().into_iter().find(|e| e.name == name).unwrap()
}

fn solve_entry(e: &CorpusEntry) -> (DataHandle<f64>, LiouvilleSolution<f64>) {
    let data = e.data::<f64>();
    let grid = SpacetimeGrid::new(-2.0, 2.0, 21, -4.0, 4.0, 41);
    let (sol, _) = pipeline::solve(&data, &grid, &PipelineSettings::new(e.mass)).unwrap();
    (data, sol)
}

fn default_grid() -> SpacetimeGrid<f64> {
    SpacetimeGrid::new(-2.0, 2.0, 21, -4.0, 4.0, 41)
}

#[test]
fn light_cone_residual_is_small_for_constant_data() {
    let (_, sol) = solve_entry(&entry_by_name("const-log16"));
    let report = residual(&sol, &default_grid(), ResidualMethod::LightCone).unwrap();
    assert!(
        report.sup_residual <= 1e-5,
        "light-cone residual {}",
        report.sup_residual
    );
}

#[test]
fn fd_residual_converges_at_order_two() {
    // interior region: away from the light-cone corners the delta^2 term
    // dominates the evaluation noise at these steps
    let interior = SpacetimeGrid::new(-1.0, 1.0, 21, -2.0, 2.0, 41);
    let (_, sol) = solve_entry(&entry_by_name("const-log16"));
    let sup = |delta: f64| {
        residual(&sol, &interior, ResidualMethod::FiniteDifference { delta })
            .unwrap()
            .sup_residual
    };
    let (r1, r2) = (sup(1e-3), sup(5e-4));
    let ratio = r1 / r2;
    assert!(
        (3.5..=4.5).contains(&ratio),
        "FD residual ratio {ratio} ({r1} -> {r2})"
    );
    // halving once more from the coarser pair stays second order
    let (r0, r1b) = (sup(2e-3), sup(1e-3));
    let ratio = r0 / r1b;
    assert!((3.5..=4.5).contains(&ratio), "coarse ratio {ratio}");
}

#[test]
fn same_index_pairing_is_a_loud_negative_control() {
    let e = entry_by_name("sine-low");
    let data = e.data::<f64>();
    let grid = default_grid();
    let mut settings = PipelineSettings::new(e.mass);
    let (good, _) = pipeline::solve(&data, &grid, &settings).unwrap();
    settings.pairing = Pairing::SameIndex;
    let (bad, _) = pipeline::solve(&data, &grid, &settings).unwrap();

    let good_res = residual(&good, &grid, ResidualMethod::LightCone)
        .unwrap()
        .sup_residual;
    let bad_res = residual(&bad, &grid, ResidualMethod::LightCone)
        .unwrap()
        .sup_residual;
    assert!(
        bad_res > 100.0 * good_res.max(1e-12),
        "negative control not loud enough: {bad_res} vs {good_res}"
    );
}

#[test]
fn oracle_matches_closed_form_for_constant_data() {
    // grid [0,1] x [-2,2] at dx = 1/128, dt = dx/2
    let e = entry_by_name("const-log16");
    let data = e.data::<f64>();
    let big = SpacetimeGrid::new(-2.0, 2.0, 21, -4.0, 4.0, 41);
    let (sol, _) = pipeline::solve(&data, &big, &PipelineSettings::new(e.mass)).unwrap();

    let grid = SpacetimeGrid::new(0.0, 1.0, 257, -2.0, 2.0, 513);
    let err = oracle_error_vs_solution(&*data, &sol, &grid).unwrap();
    assert!(err <= 1e-3, "oracle deviation {err}");

    // and against the closed form c - 2 log cosh(2kt) directly
    let c = 16.0f64.ln();
    let oracle = oracle_integrate(&*data, 1.0, &grid, |t, x| sol.eval_phi(t, x)).unwrap();
    let mut worst: f64 = 0.0;
    for (level, row) in oracle.levels.iter().enumerate() {
        let t = oracle.t_of(level);
        let expected = c - 2.0 * (2.0 * t).cosh().ln();
        for &v in row {
            worst = worst.max((v - expected).abs());
        }
    }
    assert!(worst <= 1e-3, "closed-form deviation {worst}");
}

#[test]
fn oracle_zero_steps_returns_the_slice() {
    let e = entry_by_name("gaussian");
    let data = e.data::<f64>();
    let grid = SpacetimeGrid::new(0.0, 0.0, 1, -2.0, 2.0, 65);
    let oracle = oracle_integrate(&*data, e.mass, &grid, |_, _| unreachable!()).unwrap();
    assert_eq!(oracle.levels.len(), 1);
    for (i, &v) in oracle.levels[0].iter().enumerate() {
        assert_abs_diff_eq!(v, data.phi(oracle.x_of(i)).unwrap(), epsilon = 1e-15);
    }
    // comparing against the solution it came from is zero up to the slice
    // identity of the construction itself
    let big = default_grid();
    let (sol, _) = pipeline::solve(&data, &big, &PipelineSettings::new(e.mass)).unwrap();
    assert!(compare(&sol, &oracle).unwrap() <= 1e-9);
}

#[test]
fn oracle_rejects_cfl_violation() {
    let e = entry_by_name("zero");
    let data = e.data::<f64>();
    // dt = 1/8, dx = 1/16
    let grid = SpacetimeGrid::new(0.0, 1.0, 9, -1.0, 1.0, 33);
    assert!(matches!(
        oracle_integrate(&*data, e.mass, &grid, |_, _| Ok(0.0)),
        Err(VerifyError::CflViolation { .. })
    ));
}

#[test]
fn oracle_requires_slice_on_lattice() {
    let e = entry_by_name("zero");
    let data = e.data::<f64>();
    let grid = SpacetimeGrid::new(0.05, 1.0, 39, -2.0, 2.0, 65);
    assert!(matches!(
        oracle_integrate(&*data, e.mass, &grid, |_, _| Ok(0.0)),
        Err(VerifyError::SliceOffLattice { .. })
    ));
}

#[test]
fn oracle_blow_up_reports_first_bad_node() {
    // absurd Dirichlet boundary values drive the interior source term
    // exp(phi) over the blow-up threshold within a few steps
    let e = entry_by_name("zero");
    let data = e.data::<f64>();
    let grid = SpacetimeGrid::new(0.0, 1.0, 65, -2.0, 2.0, 129);
    let err = oracle_integrate(&*data, e.mass, &grid, |_, _| Ok(40.0)).unwrap_err();
    assert!(matches!(err, VerifyError::BlowUp { .. }), "got {err:?}");
}

#[test]
fn oracle_integrates_backward_in_time() {
    let e = entry_by_name("const-log16");
    let data = e.data::<f64>();
    let big = default_grid();
    let (sol, _) = pipeline::solve(&data, &big, &PipelineSettings::new(e.mass)).unwrap();
    let grid = SpacetimeGrid::new(-0.5, 0.5, 129, -2.0, 2.0, 257);
    let err = oracle_error_vs_solution(&*data, &sol, &grid).unwrap();
    assert!(err <= 1e-3, "two-sided oracle deviation {err}");
}

#[test]
fn oracle_convergence_is_second_order() {
    let e = entry_by_name("const-log16");
    let data = e.data::<f64>();
    let big = default_grid();
    let (sol, _) = pipeline::solve(&data, &big, &PipelineSettings::new(e.mass)).unwrap();

    let mut hs = Vec::new();
    let mut errs = Vec::new();
    for cells in [64usize, 128, 256] {
        let nx = cells + 1;
        let nt = cells / 2 + 1; // dt = dx/2 on [0,1] x [-2,2]
        let grid = SpacetimeGrid::new(0.0, 1.0, nt, -2.0, 2.0, nx);
        let err = oracle_error_vs_solution(&*data, &sol, &grid).unwrap();
        hs.push(4.0 / cells as f64);
        errs.push(err);
    }
    let slope = fit_log_slope(&hs, &errs);
    assert!(
        (1.7..=2.3).contains(&slope),
        "oracle convergence slope {slope} (errors {errs:?})"
    );
    // halving both steps quarters the error
    for w in errs.windows(2) {
        let ratio = w[0] / w[1];
        assert!((3.0..=5.0).contains(&ratio), "refinement ratio {ratio}");
    }
}

#[test]
fn fit_log_slope_recovers_exact_power() {
    let hs = [0.1, 0.05, 0.025];
    let errs: Vec<f64> = hs.iter().map(|h| 3.0 * h * h).collect();
    assert_abs_diff_eq!(fit_log_slope(&hs, &errs), 2.0, epsilon = 1e-12);
}

#[test]
fn forward_probe_is_monotone_and_roughly_linear() {
    let e = entry_by_name("const-log16");
    let data = e.data::<f64>();
    let grid = default_grid();
    let cfg = ProbeConfig {
        grid: &grid,
        spec: SeminormSpec::default(),
        settings: PipelineSettings::new(e.mass),
        restrict_points: 512,
    };
    let eta = parse::<f64>("1/cosh(x)").unwrap();
    let rows = continuity_probe(&data, &eta, &eta, &[1e-1, 1e-2, 1e-3], &cfg).unwrap();
    assert_eq!(rows.len(), 3);
    assert!(monotone_decreasing(&rows), "{rows:?}");
    for w in rows.windows(2) {
        let ratio = w[0].output_deviation / w[1].output_deviation;
        assert!(
            (5.0..=20.0).contains(&ratio),
            "per-decade ratio {ratio} ({rows:?})"
        );
    }
}

#[test]
fn probe_rejects_bad_eps_lists() {
    let e = entry_by_name("zero");
    let data = e.data::<f64>();
    let grid = default_grid();
    let cfg = ProbeConfig {
        grid: &grid,
        spec: SeminormSpec::default(),
        settings: PipelineSettings::new(e.mass),
        restrict_points: 256,
    };
    let eta = parse::<f64>("1/cosh(x)").unwrap();
    for bad in [
        vec![],
        vec![1e-3, 1e-2],
        vec![1e-1, 1e-1],
        vec![1e-1, -1e-2],
    ] {
        assert!(matches!(
            continuity_probe(&data, &eta, &eta, &bad, &cfg),
            Err(VerifyError::BadEpsList)
        ));
    }
}

#[test]
fn inverse_probe_tracks_data_distance() {
    let e = entry_by_name("gaussian");
    let data = e.data::<f64>();
    let grid = default_grid();
    let cfg = ProbeConfig {
        grid: &grid,
        spec: SeminormSpec::default(),
        settings: PipelineSettings::new(e.mass),
        restrict_points: 1024,
    };
    let eta = parse::<f64>("1/cosh(x)").unwrap();
    let rows = inverse_continuity_probe(&data, &eta, &eta, &[1e-1, 1e-2, 1e-3], &cfg).unwrap();
    assert!(monotone_decreasing(&rows), "{rows:?}");
    // the restricted-data distance tracks eps * seminorm(eta) closely
    for row in &rows {
        assert!(row.output_deviation > 0.0);
        let rel = row.output_deviation / row.eps;
        assert!((0.2..5.0).contains(&rel), "unexpected scale: {rows:?}");
    }
}

#[test]
fn inverse_probe_restriction_is_consistent_with_the_slice() {
    // the t = 0 row is a subset of the grid, so the order-0 deviation of the
    // restricted data cannot exceed the grid sup by more than slack
    let e = entry_by_name("const-log16");
    let data = e.data::<f64>();
    let grid = default_grid();
    let cfg = ProbeConfig {
        grid: &grid,
        spec: SeminormSpec::new(0, 4.0, 1024),
        settings: PipelineSettings::new(e.mass),
        restrict_points: 1024,
    };
    let eta = parse::<f64>("1/cosh(x)").unwrap();
    let rows = inverse_continuity_probe(&data, &eta, &eta, &[1e-1, 1e-2], &cfg).unwrap();
    for r in &rows {
        assert!(
            r.output_deviation <= r.input_distance + 1e-9,
            "restricted deviation {} exceeds grid deviation {}",
            r.output_deviation,
            r.input_distance
        );
    }
}

#[test]
fn corpus_has_ten_smooth_entries_within_bounds() {
    let entries = corpus();
    assert_eq!(entries.len(), 10);
    for e in &entries {
        let data = e.data::<f64>();
        for i in 0..257 {
            let x = -8.0 + 16.0 * i as f64 / 256.0;
            let phi = data.phi(x).unwrap();
            let pi = data.pi(x).unwrap();
            assert!(phi.abs() <= 3.0, "{}: |phi({x})| = {phi}", e.name);
            assert!(pi.abs() <= 2.0, "{}: |pi({x})| = {pi}", e.name);
        }
        assert!(e.mass > 0.0);
    }
}

#[test]
fn corpus_light_cone_residuals_within_tolerance() {
    for e in corpus() {
        let (_, sol) = solve_entry(&e);
        let report = residual(&sol, &default_grid(), ResidualMethod::LightCone).unwrap();
        assert!(
            report.sup_residual <= 1e-5,
            "{}: light-cone residual {}",
            e.name,
            report.sup_residual
        );
    }
}
