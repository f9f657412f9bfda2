use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_oldroyd2d"))
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn equilibrium_run_exits_zero_with_flat_residual() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("series.csv");
    let snap = dir.path().join("final.bin");
    let cfg = write(
        dir.path(),
        "eq.cfg",
        &format!(
            "nx = 8\nny = 8\nt_end = 1\noutput = {}\nsnapshot = {}\ndiag_every = 20\n",
            csv.display(),
            snap.display()
        ),
    );
    let o = bin().arg("run").arg(&cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(&csv).unwrap();
    let header: Vec<&str> = text.lines().next().unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == "residual").unwrap();
    let rows: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(col).unwrap().parse().unwrap())
        .collect();
    assert!(rows.len() >= 2);
    assert!(rows.iter().all(|r| r.abs() <= 1e-10));
    assert!(fs::metadata(&snap).unwrap().len() > 0);
}

#[test]
fn perturbed_run_energy_is_non_increasing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "p.cfg", "nx = 12\nny = 12\nt_end = 0.3\ninitial = perturbed-equilibrium\n");
    let o = bin().arg("run").arg(&cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    let energies: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(3).unwrap().parse().unwrap())
        .collect();
    for w in energies.windows(2) {
        assert!(w[1] <= w[0] + 1e-9 * w[0].abs(), "{} -> {}", w[0], w[1]);
    }
}

#[test]
fn indefinite_stress_exits_two_with_time_and_cell() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.cfg", "nx = 8\nny = 8\nT0_override = 1, 2, 1\n");
    let o = bin().arg("run").arg(&cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("t = 0") && err.contains("cell (0, 0)"), "{err}");
}

#[test]
fn config_errors_exit_one_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.cfg", "# comment\nalpha = 0.1\nsigma3 = 0.2\n");
    let o = bin().arg("run").arg(&cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));

    let o = bin().arg("run").arg(dir.path().join("missing.cfg")).output().unwrap();
    assert_eq!(o.status.code(), Some(1));

    let o = bin().arg("frobnicate").output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    let o = bin().args(["verify", "no-such-suite"]).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn verify_is_deterministic_per_seed() {
    let run = |seed: &str| {
        bin()
            .args(["verify", "matrix-inequalities", "--seed", seed, "--samples", "2000"])
            .output()
            .unwrap()
    };
    let (a, b, c) = (run("5"), run("5"), run("6"));
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert!(text.contains("matrix-inequalities: 10/10 checks passed"), "{text}");
}

#[test]
fn closure_suite_passes() {
    let o = bin().args(["verify", "closure"]).output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(String::from_utf8(o.stdout).unwrap().contains("closure: 6/6 checks passed"));
}

#[test]
fn sweeps() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.cfg", "nx = 8\nny = 8\nt_end = 0.1\ninitial = perturbed-equilibrium\n");
    let out = dir.path().join("sweep.csv");
    let o = bin()
        .arg("sweep")
        .arg(&cfg)
        .args(["--knob", "delta", "--values", "0.1,0.01,0.001", "--output"])
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("delta,E_initial"));
    assert!(text.contains("from,to,l2_diff,energy_diff"));
    let entries = text.lines().skip(1).take_while(|l| !l.is_empty()).count();
    assert_eq!(entries, 3);

    let o = bin()
        .arg("sweep")
        .arg(&cfg)
        .args(["--knob", "alpha", "--values", "0.1"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    let diff_rows = text.lines().skip_while(|l| !l.starts_with("from,")).skip(1).count();
    assert_eq!(diff_rows, 0);

    let o = bin()
        .arg("sweep")
        .arg(&cfg)
        .args(["--knob", "alpha", "--values", "0.05,0.1"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
}
