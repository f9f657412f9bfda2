use std::io::Write;

use oldroyd2d::closure::{closure_compare, write_closure_csv, KineticGridSpec, CLOSURE_CSV_HEADER};
use oldroyd2d::diagnostics::{conservation, write_csv, CSV_HEADER};
use oldroyd2d::runner::write_state;
use oldroyd2d::{
    initial_state, parse_config, simulate_config, Error, InitialSpec, Mat2, PhysParams,
};

#[test]
fn conservation_monitor_catches_injected_leak() {
    let cfg = parse_config("nx = 16\nny = 16\ninitial = perturbed-equilibrium").unwrap();
    let s0 = initial_state(&cfg).unwrap();
    let mut leaky = s0.clone();
    let v = leaky.rho.at(3, 4);
    leaky.rho.set(3, 4, [v * (1.0 + 1e-6)]);
    let (mass, eta) = conservation(&leaky, &s0);
    assert!(mass > 1e-11, "{mass:e}");
    assert_eq!(eta, 0.0);
    let (mass, _) = conservation(&s0, &s0);
    assert_eq!(mass, 0.0);
}

#[test]
fn imex_run_conserves_and_stays_spd() {
    let cfg = parse_config(
        "nx = 16\nny = 16\ninitial = shear-layer\nscheme = imex\nt_end = 0.3\neps = 0.05\nsigma2 = 0.01",
    )
    .unwrap();
    let r = simulate_config(&cfg).unwrap();
    assert!(r.mass_drift <= 1e-11 && r.eta_drift <= 1e-11);
    assert!(r.min_eig > 0.0);
    assert!(!r.stress.growth_flag);
}

#[test]
fn csv_has_documented_columns() {
    let cfg = parse_config("nx = 8\nny = 8\ninitial = perturbed-equilibrium\nt_end = 0.05").unwrap();
    let r = simulate_config(&cfg).unwrap();
    let mut buf = Vec::new();
    write_csv(&mut buf, &r.rows).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), CSV_HEADER);
    let ncol = CSV_HEADER.split(',').count();
    assert_eq!(ncol, 23);
    for line in lines {
        let cells: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(cells.len(), ncol);
    }
}

#[test]
fn snapshot_file_as_initial_condition() {
    let cfg = parse_config("nx = 8\nny = 8\ninitial = perturbed-equilibrium\nt_end = 0.02").unwrap();
    let r = simulate_config(&cfg).unwrap();
    let mut file = tempfile::NamedTempFile::new().unwrap();
    write_state(&mut file, &r.outcome.state).unwrap();
    file.flush().unwrap();

    let mut cfg2 = cfg.clone();
    cfg2.initial = InitialSpec::File(file.path().to_path_buf());
    let s = initial_state(&cfg2).unwrap();
    assert_eq!(s.grid(), r.outcome.state.grid());
    // mollification smooths and shifts by theta; the total mass moves by θ|Ω|
    let shift = s.rho.integral() - r.outcome.state.rho.integral();
    assert!((shift - cfg.reg.theta).abs() < 1e-9, "{shift}");

    let mut cfg3 = cfg;
    cfg3.initial = InitialSpec::File("/nonexistent/snapshot.bin".into());
    assert!(matches!(initial_state(&cfg3), Err(Error::Io(_))));
}

#[test]
fn runtime_failure_reports_time_and_cell() {
    let cfg = parse_config("nx = 8\nny = 8\nT0_override = 0.5, 1.0, 0.5").unwrap();
    let err = simulate_config(&cfg).unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("t = 0"), "{msg}");
    assert!(matches!(err.root(), Error::NotSpd { cell: Some((0, 0)), .. }), "{msg}");
}

#[test]
fn closure_report_csv() {
    let phys = PhysParams {
        a0: 1.0,
        lambda: 0.5,
        ..PhysParams::default()
    };
    let kappa = Mat2([[0.0, 0.1], [0.0, 0.0]]);
    let r = closure_compare(&kappa, 1.0, &phys, 1.0, KineticGridSpec { nq: 32, qmax: 8.0 }, 0.5).unwrap();
    assert!(r.rows.len() >= 3);
    assert!((r.rows.last().unwrap().t - 1.0).abs() < 1e-12);
    let mut buf = Vec::new();
    write_closure_csv(&mut buf, &r.rows).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with(CLOSURE_CSV_HEADER));
    assert_eq!(text.lines().count(), r.rows.len() + 1);
}
