use super::*;
use crate::grid::build_grid;
use crate::initial::{sample_initial_data, InitialDataSpec};
use crate::nullgeom::{Direction, RegionSpec, TraceRecorder};
use crate::params::MultiplierParams;
use crate::quad::integrate;
use crate::run::{run, RunControl};
use crate::solver::{init_state, SchemeChoice};

fn mp(p: f64) -> MultiplierParams {
    let a = (p + 1.0) / (p + 3.0);
    MultiplierParams {
        alpha: a,
        beta: a,
        gamma: 1.0,
        r: 1.0,
    }
}

fn simulate(
    id: &InitialDataSpec,
    params: &ModelParams,
    dx: f64,
    t_end: f64,
    obs: &mut [&mut dyn Observer],
) {
    let grid = build_grid(id, t_end, dx, 0.5).unwrap();
    let (phi0, phi1) = sample_initial_data(id, &grid).unwrap();
    let state = init_state(&phi0, &phi1, params, &grid).unwrap();
    run(
        state,
        params,
        &SchemeChoice::default(),
        t_end,
        obs,
        None,
        RunControl::default(),
    )
    .unwrap();
}

#[test]
fn frozen_constant_field_stress() {
    let params = ModelParams::new(3.0, true).unwrap();
    let grid = Grid1D::centered(5, 0.1, 0.05);
    let c = vec![-1.5; grid.n];
    let frame = Frame {
        grid: &grid,
        params: &params,
        prev: &c,
        curr: &c,
        next: &c,
        span: Some((0, grid.n - 1)),
    };
    let row = stress_fields(&frame);
    let f = 1.5f64.powi(4) / 4.0;
    let j = 5;
    assert!((row.t00[j] - f).abs() < 1e-15);
    assert!((row.t11[j] + f).abs() < 1e-15);
    assert_eq!(row.t01[j], 0.0);
    assert!((row.q[j] - 2.0 * 1.5f64.powi(4)).abs() < 1e-14);
}

#[test]
fn zero_field_diagnostics_vanish() {
    let params = ModelParams::new(3.0, true).unwrap();
    let grid = Grid1D::centered(20, 0.1, 0.05);
    let z = vec![0.0; grid.n];
    let frame = Frame {
        grid: &grid,
        params: &params,
        prev: &z,
        curr: &z,
        next: &z,
        span: None,
    };
    let row = stress_fields(&frame);
    assert!(row
        .t00
        .iter()
        .chain(&row.t01)
        .chain(&row.t11)
        .chain(&row.q)
        .all(|v| *v == 0.0));
    let n = norms_row(&frame);
    assert_eq!(
        (n.e_int, n.potential, n.linf, n.gn_ratio),
        (0.0, 0.0, 0.0, 0.0)
    );
    assert_eq!(morawetz_integrand(&frame).unwrap(), 0.0);
    assert_eq!(weighted_energy(&grid, &z, &z, &params, 1.0), 0.0);
}

#[test]
fn gaussian_energy_matches_closed_form() {
    let params = ModelParams::new(3.0, true).unwrap();
    let id = InitialDataSpec::gaussian(1.0, 1.0, 0.0);
    let grid = build_grid(&id, 0.0, 0.01, 0.5).unwrap();
    let (phi0, phi1) = sample_initial_data(&id, &grid).unwrap();
    let pi = std::f64::consts::PI;
    // int x^2 e^{-x^2} + (1/2) int e^{-2x^2}
    let exact = pi.sqrt() / 2.0 + 0.5 * (pi / 2.0).sqrt();
    let quad = integrate(
        &|x: f64| x * x * (-x * x).exp() + 0.5 * (-2.0 * x * x).exp(),
        -12.0,
        12.0,
        1e-13,
    );
    assert!((quad - exact).abs() < 1e-10);
    let e0 = weighted_energy(&grid, &phi0, &phi1, &params, 0.0);
    assert!((e0 - exact).abs() < 1e-6, "{e0} vs {exact}");
}

#[test]
fn first_frame_energy_norm_is_close_to_data_energy() {
    let params = ModelParams::new(3.0, true).unwrap();
    let id = InitialDataSpec::gaussian(1.0, 1.0, 0.0);
    let mut rec = DiagnosticsRecorder::new(1);
    simulate(&id, &params, 0.01, 0.0, &mut [&mut rec]);
    assert_eq!(rec.rows.len(), 1);
    let exact = std::f64::consts::PI.sqrt() / 2.0 + 0.5 * (std::f64::consts::PI / 2.0).sqrt();
    assert!((rec.rows[0].e0_norm - exact).abs() < 1e-4 * exact);
}

#[test]
fn compact_data_weight_bound() {
    let params = ModelParams::new(3.0, true).unwrap();
    let id = InitialDataSpec::bump(0.8, 1.0, 0.0);
    let grid = build_grid(&id, 0.0, 0.005, 0.5).unwrap();
    let (phi0, mut phi1) = sample_initial_data(&id, &grid).unwrap();
    for (v, &p0) in phi1.iter_mut().zip(&phi0) {
        *v = 0.3 * p0;
    }
    let e0 = weighted_energy(&grid, &phi0, &phi1, &params, 0.0);
    let e1 = weighted_energy(&grid, &phi0, &phi1, &params, 1.0);
    assert!(e0 > 0.0 && e1 >= e0 && e1 <= 2.0 * e0);
}

#[test]
fn morawetz_increment_at_start_matches_quadrature() {
    let params = ModelParams::new(3.0, true).unwrap();
    let id = InitialDataSpec::bump(1.0, 1.0, 0.0);
    let mut rec = DiagnosticsRecorder::new(1);
    simulate(&id, &params, 0.005, 0.0, &mut [&mut rec]);
    let row = rec.rows[0];
    let profile = id.profile().unwrap();
    let oracle = integrate(
        &|x: f64| (1.0 - x * x) * profile.phi0(x).powi(4),
        -1.0,
        1.0,
        1e-13,
    );
    let dt = 0.0025;
    assert!(
        (row.morawetz_inc - dt * oracle).abs() < 1e-5 * dt * oracle,
        "{} vs {}",
        row.morawetz_inc,
        dt * oracle
    );
    assert_eq!(row.morawetz_cum, 0.0);
}

#[test]
fn running_solution_satisfies_stress_algebra() {
    let params = ModelParams::new(3.0, true).unwrap();
    let id = InitialDataSpec::gaussian(1.0, 1.0, 0.0);
    let mut rec = DiagnosticsRecorder::new(10);
    let mut mon = RunMonitor::new(id.support_radius().unwrap(), 4);
    simulate(&id, &params, 0.02, 4.0, &mut [&mut rec, &mut mon]);
    assert!(rec.stress.trace_residual <= 1e-13);
    assert!(rec.stress.q_residual <= 1e-13);
    assert!(rec.stress.dominance_excess <= 0.0);
    assert!(mon.max_rel_drift < 1e-10);
    assert!(mon.band_max < 1e-10);
    assert!(rec
        .rows
        .windows(2)
        .all(|w| w[1].morawetz_cum >= w[0].morawetz_cum));
    assert!(rec
        .rows
        .iter()
        .all(|r| r.values().iter().all(|v| *v >= 0.0)));
}

#[test]
fn diagnostics_csv_round_trip() {
    let row = DiagnosticsRow {
        t: 0.1,
        e_int: 0.756442,
        e0_norm: 1.512884,
        potential: 1e-300,
        linf: 1.0 / 3.0,
        morawetz_inc: 2.5e-7,
        morawetz_cum: 12.0,
        gn_ratio: 3.0f64.sqrt(),
    };
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.csv");
    write_diagnostics_csv(&path, &[row, row]).unwrap();
    assert_eq!(read_diagnostics_csv(&path).unwrap(), vec![row, row]);
    std::fs::write(&path, "t,x\n1,2\n").unwrap();
    assert!(read_diagnostics_csv(&path).is_err());
}

#[test]
fn averaged_potential_monotone_in_radius() {
    let params = ModelParams::new(3.0, true).unwrap();
    let id = InitialDataSpec::gaussian(1.0, 1.0, 0.0);
    let mut avg = AveragedPotential::new(&[0.5, 1.0, 3.0]);
    simulate(&id, &params, 0.02, 3.0, &mut [&mut avg]);
    let v: Vec<f64> = [0.5, 1.0, 3.0]
        .iter()
        .map(|&r| avg.average(3.0, r).unwrap())
        .collect();
    assert!(v[0] <= v[1] && v[1] <= v[2]);
    assert!(avg.average(4.0, 1.0).is_err());
    assert!(avg.average(3.0, 2.0).is_err());
    assert_eq!(
        averaged_potential(&[0.0, 1.0, 2.0], &[0.0; 3], 2.0).unwrap(),
        0.0
    );
}

#[test]
fn constant_series_average() {
    let times: Vec<f64> = (0..=100).map(|k| k as f64 * 0.1).collect();
    let vals = vec![2.0; times.len()];
    assert!((averaged_potential(&times, &vals, 10.0).unwrap() - 2.0).abs() < 1e-12);
    assert!((averaged_potential(&times, &vals, 5.0).unwrap() - 2.0).abs() < 1e-12);
}

fn audit_residual(
    multiplier: Multiplier,
    region: RegionSpec,
    dx: f64,
    p: f64,
    t_end: f64,
) -> FluxAuditReport {
    let params = ModelParams::new(p, true).unwrap();
    let id = InitialDataSpec::gaussian(1.0, 1.0, 0.0);
    let mut aud = FluxAuditor::new(multiplier, region, mp(p)).unwrap();
    simulate(&id, &params, dx, t_end, &mut [&mut aud]);
    aud.report().unwrap()
}

#[test]
fn zero_field_audit_is_trivial() {
    let params = ModelParams::new(3.0, true).unwrap();
    let region = RegionSpec::Rectangle {
        t0: 0.0,
        t1: 1.0,
        x1: -2.0,
        x2: 2.0,
    };
    let mut aud = FluxAuditor::new(Multiplier::Time, region, mp(3.0)).unwrap();
    let grid = crate::grid::Grid1D::centered(400, 0.01, 0.005);
    let z = vec![0.0; grid.n];
    let state = init_state(&z, &z, &params, &grid).unwrap();
    run(
        state,
        &params,
        &SchemeChoice::default(),
        1.0,
        &mut [&mut aud],
        None,
        RunControl::default(),
    )
    .unwrap();
    let r = aud.report().unwrap();
    assert_eq!((r.bulk, r.closure, r.residual), (0.0, 0.0, 0.0));
}

#[test]
fn energy_audit_on_rectangle_converges() {
    let region = RegionSpec::Rectangle {
        t0: 0.0,
        t1: 2.0,
        x1: -3.0,
        x2: 2.5,
    };
    let c = audit_residual(Multiplier::Time, region, 0.02, 3.0, 2.0);
    let f = audit_residual(Multiplier::Time, region, 0.01, 3.0, 2.0);
    assert!(c.residual < 1e-3 * c.slab_initial);
    assert!(
        c.residual / f.residual >= 3.0,
        "{} {}",
        c.residual,
        f.residual
    );
}

#[test]
fn boost_outgoing_segment_matches_closed_form() {
    let p = 3.0;
    let params = ModelParams::new(p, true).unwrap();
    let id = InitialDataSpec::gaussian(1.0, 1.0, 0.0);
    let (a, b) = (0.5, 5.5);
    let region = RegionSpec::Exterior { a, b };
    let mut aud = FluxAuditor::new(Multiplier::Boost, region, mp(p)).unwrap();
    let mut tr = TraceRecorder::new(a, Direction::Outgoing).until((b - a) / 2.0);
    simulate(&id, &params, 0.01, 2.5, &mut [&mut aud, &mut tr]);
    let r = aud.report().unwrap();
    let left = r
        .segments
        .iter()
        .find(|s| s.name.starts_with("left"))
        .unwrap();
    let closed = tr.trace.integrate(|s| {
        0.5 * ((2.0 * s.t + a + 1.0) * s.dphi * s.dphi + 2.0 * (a + 1.0) * params.potential(s.phi))
    });
    assert!(
        (left.value - closed).abs() < 1e-3 * closed.abs(),
        "{} vs {closed}",
        left.value
    );
    // no source, so the outflow through both null sides is the initial slab
    let out: f64 = r.segments.iter().map(|s| s.value).sum();
    assert!((out - (r.slab_initial - r.slab_final)).abs() < 2.0 * r.residual + 1e-15);
    assert!(r.relative_residual < 1e-3);
}

#[test]
fn misaligned_region_is_rejected() {
    let params = ModelParams::new(3.0, true).unwrap();
    let id = InitialDataSpec::gaussian(1.0, 1.0, 0.0);
    let region = RegionSpec::Sigma {
        r: 1.0,
        t_end: 0.0123,
    };
    let mut aud = FluxAuditor::new(Multiplier::Scaling, region, mp(3.0)).unwrap();
    let grid = build_grid(&id, 1.0, 0.02, 0.5).unwrap();
    let (phi0, phi1) = sample_initial_data(&id, &grid).unwrap();
    let state = init_state(&phi0, &phi1, &params, &grid).unwrap();
    let res = run(
        state,
        &params,
        &SchemeChoice::default(),
        1.0,
        &mut [&mut aud],
        None,
        RunControl::default(),
    );
    assert!(res.is_err());
}

#[test]
fn short_history_report_errors() {
    let region = RegionSpec::Sigma { r: 1.0, t_end: 2.0 };
    let aud = FluxAuditor::new(Multiplier::Morawetz, region, mp(3.0)).unwrap();
    assert!(matches!(aud.report(), Err(Error::ShortHistory(_))));
}

fn identity_reports(dx: f64, p: f64) -> Vec<IdentityReport> {
    let params = ModelParams::new(p, true).unwrap();
    let id = InitialDataSpec::gaussian(1.0, 1.0, 0.0);
    let mut obs = IdentityObserver::new(&IdentityId::ALL, mp(p), 0.5, 1.5);
    simulate(&id, &params, dx, 1.6, &mut [&mut obs]);
    obs.reports().unwrap()
}

#[test]
fn identity_residuals_shrink_under_refinement() {
    let coarse = identity_reports(0.04, 3.0);
    let fine = identity_reports(0.02, 3.0);
    for (c, f) in coarse.iter().zip(&fine) {
        assert!(c.points > 0 && f.points > c.points);
        assert!(
            c.max_residual / f.max_residual >= 3.0,
            "{}: {} -> {}",
            c.id,
            c.max_residual,
            f.max_residual
        );
        if c.id == IdentityId::Interior {
            assert!(c.rhs_max <= 0.0 && f.rhs_max <= 0.0);
        }
    }
}

#[test]
fn identity_window_too_short() {
    let obs = IdentityObserver::new(&[IdentityId::Morawetz], mp(3.0), 0.0, 1.0);
    assert!(obs.reports().is_err());
}

#[test]
fn multiplier_names_round_trip() {
    for m in Multiplier::ALL {
        assert_eq!(m.to_string().parse::<Multiplier>().unwrap(), m);
    }
    for i in IdentityId::ALL {
        assert_eq!(i.to_string().parse::<IdentityId>().unwrap(), i);
    }
    assert!("conformal".parse::<Multiplier>().is_err());
}

#[test]
fn exterior_flux_bounds_on_short_run() {
    let p = 3.0;
    let params = ModelParams::new(p, true).unwrap();
    let id = InitialDataSpec::gaussian(1.0, 1.0, 0.0);
    let grid = build_grid(&id, 0.0, 0.01, 0.5).unwrap();
    let (phi0, phi1) = sample_initial_data(&id, &grid).unwrap();
    let e0 = weighted_energy(&grid, &phi0, &phi1, &params, 0.0);
    let e1 = weighted_energy(&grid, &phi0, &phi1, &params, 1.0);
    let mut out = TraceRecorder::new(0.0, Direction::Outgoing);
    let mut inc = TraceRecorder::new(1.0, Direction::Incoming);
    simulate(&id, &params, 0.01, 10.0, &mut [&mut out, &mut inc]);
    for tr in [&out, &inc] {
        let r = null_flux_exterior(&tr.trace, &params, e1, e0).unwrap();
        assert!(r.satisfied(), "{r:?}");
        assert!(r.weighted > 0.0);
    }
    let zero = crate::nullgeom::CharacteristicTrace::new(1.0, Direction::Outgoing);
    let r = null_flux_exterior(&zero, &params, 0.0, 0.0).unwrap();
    assert!(r.satisfied() && r.weighted == 0.0);
}

#[test]
fn interior_flux_rejects_exterior_trace() {
    let params = ModelParams::new(3.0, true).unwrap();
    let tr = crate::nullgeom::CharacteristicTrace::new(1.0, Direction::Outgoing);
    assert!(interior_flux(&tr, &params, &mp(3.0)).is_err());
    let tr = crate::nullgeom::CharacteristicTrace::new(1.0, Direction::InteriorOutgoing);
    assert_eq!(interior_flux(&tr, &params, &mp(3.0)).unwrap().sum, 0.0);
}
