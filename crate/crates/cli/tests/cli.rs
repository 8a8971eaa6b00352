use std::path::PathBuf;
use std::process::{Command, Output};

fn data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
        .display()
        .to_string()
}

fn cw4(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cw4"))
        .args(args)
        .env("CW4_THREADS", "1")
        .output()
        .expect("spawn cw4")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn printed_rho(o: &Output) -> f64 {
    stdout(o)
        .lines()
        .find_map(|l| l.strip_prefix("rho = "))
        .expect("rho line")
        .parse()
        .unwrap()
}

#[test]
fn verify_exit_codes() {
    let t5 = data("table5.cert");
    let ok = cw4(&["verify", &t5, "--rho", "3.251640", "--kappa", "2", "--mode", "legacy"]);
    assert_eq!(ok.status.code(), Some(0));
    assert!(stdout(&ok).contains("CERTIFIED omega(2) <= 3.2516400"));

    let low = cw4(&["verify", &t5, "--rho", "3.2", "--kappa", "2", "--mode", "legacy"]);
    assert_eq!(low.status.code(), Some(1));
    assert!(!stdout(&low).contains("CERTIFIED"));

    let dir = tempfile::tempdir().unwrap();
    let junk = dir.path().join("garbage.txt");
    std::fs::write(&junk, "this is not a certificate\n").unwrap();
    assert_eq!(cw4(&["verify", junk.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(cw4(&["verify", "/nonexistent/file.cert"]).status.code(), Some(2));
}

#[test]
fn verify_key_values() {
    let o = cw4(&["verify", &data("table6.cert"), "--rho", "3.251502", "--mode", "loss_outer", "--format", "kv"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("mode=loss_outer\n"));
    assert!(out.trim_end().ends_with("verdict=pass"));
}

#[test]
fn verify_wrong_mode_fails() {
    let o = cw4(&["verify", &data("table7.cert"), "--rho", "3.250563", "--mode", "legacy"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("REJECTED"));
}

#[test]
fn bound_values() {
    let o = cw4(&["bound", &data("table7.cert"), "--kappa", "2", "--mode", "loss_recursive"]);
    assert_eq!(o.status.code(), Some(0));
    assert!((printed_rho(&o) - 3.250563).abs() < 1e-5);
    for key in ["Gamma", "H(A)", "H(B)", "chi", "sum alpha*chi", "Delta_x", "Delta_z"] {
        assert!(stdout(&o).contains(&format!("{key} = ")), "{key}");
    }

    let o = cw4(&["bound", &data("table6.cert"), "--kappa", "2", "--mode", "loss_outer"]);
    assert!((printed_rho(&o) - 3.251502).abs() < 1e-5);

    let o = cw4(&["bound", &data("table5.cert"), "--kappa", "2", "--mode", "loss_recursive"]);
    assert!(printed_rho(&o) <= 3.251640);
}

#[test]
fn optimize_from_table_7() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("best.cert");
    let o = cw4(&[
        "optimize", "--kappa", "2", "--mode", "loss_recursive", "--from", &data("table7.cert"),
        "--starts", "4", "--max-iters", "5", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let b = cw4(&["bound", out.to_str().unwrap(), "--mode", "loss_recursive"]);
    assert_eq!(b.status.code(), Some(0));
    assert!(printed_rho(&b) <= 3.2516);
}

#[test]
fn optimize_rejects_zero_starts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.cert");
    let o = cw4(&["optimize", "--kappa", "2", "--starts", "0", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn sweep_orders_rows_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let csv = dir.path().join(name);
        let o = cw4(&[
            "sweep", "--kappas", "2.0,1.0", "--from", &data("table7.cert"), "--starts", "1",
            "--max-iters", "2", "--seed", "3", "--out", csv.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0));
        std::fs::read_to_string(csv).unwrap()
    };
    let first = run("a.csv");
    let lines: Vec<&str> = first.lines().collect();
    assert_eq!(lines[0], "kappa,rho,margin,file");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("1,") && lines[2].starts_with("2,"));
    let rho: f64 = lines[2].split(',').nth(1).unwrap().parse().unwrap();
    assert!(rho <= 3.2516);
    assert_eq!(first, run("a.csv"));
}

#[test]
fn sweep_needs_kappas() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("s.csv");
    assert_eq!(cw4(&["sweep", "--kappas", "", "--out", csv.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(cw4(&["sweep", "--out", csv.to_str().unwrap()]).status.code(), Some(2));
}
