use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = "\
[run]
name = small
seed = 9

[drift]
kind = hardy
beta_scale = 0.04

[grid]
kind = radial
d = 3
r_max = 8
n = 256

[approx]
m = 8, 16

[time]
t_end = 0.2
dt = 0.01
lattice = 4

[checks]
run = e1, e3, formbound, lp

[check.lp]
p = 2, inf
";

fn feller(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_feller"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("run feller")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    fs::write(dir.join(name), text).unwrap();
    name.to_string()
}

#[test]
fn verify_passes_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.cfg", SMALL);
    let a = feller(dir.path(), &["--config", &cfg, "--out", "a", "verify"]);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stdout));
    let b = feller(dir.path(), &["verify", "--config", &cfg, "--out", "b", "--threads", "2"]);
    assert_eq!(b.status.code(), Some(0));
    let la = fs::read(dir.path().join("a/small_ledger.csv")).unwrap();
    let lb = fs::read(dir.path().join("b/small_ledger.csv")).unwrap();
    assert_eq!(la, lb);
    assert!(String::from_utf8(la).unwrap().starts_with("# feller-ledger v1\nname,measured,bound,pass,slack,descriptor\n"));
}

#[test]
fn seed_flag_reaches_the_eigensolver() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.cfg", SMALL);
    for (seed, out) in [("1", "s1"), ("2", "s2")] {
        let o = feller(dir.path(), &["--config", &cfg, "--out", out, "--seed", seed, "formbound"]);
        assert!(o.status.success());
    }
    let text = |out: &str| fs::read_to_string(dir.path().join(out).join("small_formbound_ledger.csv")).unwrap();
    let (a, b) = (text("s1"), text("s2"));
    assert!(a.contains("formbound_beta_hat") && b.contains("formbound_beta_hat"));
    // different start vectors converge to the same eigenvalue
    let beta = |t: &str| -> f64 {
        let row = t.lines().find(|l| l.starts_with("formbound_beta_hat")).unwrap();
        row.split(',').nth(1).unwrap().parse().unwrap()
    };
    assert!((beta(&a) - beta(&b)).abs() < 1e-6 * beta(&a));
}

#[test]
fn failing_check_gives_exit_code_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "ce.cfg",
        "[run]\nname = ce\n[drift]\nkind = zero\n[grid]\nkind = radial\nd = 3\nr_max = 16\nn = 512\n[time]\nt_end = 0.5\ndt = 0.01\n[checks]\nrun = counterexample\n",
    );
    let o = feller(dir.path(), &["--config", &cfg, "--out", "o", "counterexample"]);
    assert_eq!(o.status.code(), Some(1));
    let ledger = fs::read_to_string(dir.path().join("o/ce_counterexample_ledger.csv")).unwrap();
    assert!(ledger.contains("counterexample_propagation,"));
    let plot = feller(dir.path(), &["--out", "o", "plotdata", "decay_vs_t0", "o/ce_counterexample_ledger.csv", "--stdout"]);
    assert!(plot.status.success());
    let text = String::from_utf8(plot.stdout).unwrap();
    assert!(text.starts_with("# plot decay_vs_t0 v1\n"));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 4);
}

#[test]
fn config_errors_list_every_line() {
    let dir = tempfile::tempdir().unwrap();
    let bad = SMALL.replace("beta_scale = 0.04", "beta_scale = -1\nbogus = 3").replace("n = 256", "n = 256\nn = 512");
    let cfg = write(dir.path(), "bad.cfg", &bad);
    let o = feller(dir.path(), &["--config", &cfg, "verify"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("line 7:") && err.contains("line 8:"), "{err}");
    assert!(err.contains("first set at line 14, again at line 15"), "{err}");
    assert!(!dir.path().join("out").exists());
}

#[test]
fn empty_check_list_writes_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "empty.cfg", &SMALL.replace("run = e1, e3, formbound, lp", "run =").replace("[check.lp]\np = 2, inf\n", ""));
    let o = feller(dir.path(), &["--config", &cfg, "--out", "o", "verify"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let ledger = fs::read_to_string(dir.path().join("o/small_ledger.csv")).unwrap();
    assert_eq!(ledger.lines().count(), 2);
}

#[test]
fn solve_exports_and_plots_a_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.cfg", SMALL);
    let o = feller(dir.path(), &["--config", &cfg, "--out", "o", "solve", "--m", "16"]);
    assert!(o.status.success());
    let traj = dir.path().join("o/small_m16.traj");
    assert!(fs::read(&traj).unwrap().starts_with(b"FLTRAJ"));
    let p = feller(dir.path(), &["--out", "o", "plotdata", "norm_vs_time", "o/small_m16.traj"]);
    assert!(p.status.success());
    let data = fs::read_to_string(dir.path().join("o/small_m16_norm_vs_time.dat")).unwrap();
    let sups: Vec<f64> = data
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("time"))
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(sups.len(), 21);
    assert!(sups.windows(2).all(|w| w[1] <= w[0]));
    // a trajectory is not a ledger
    let wrong = feller(dir.path(), &["--out", "o", "plotdata", "beta_vs_eps", "o/small_m16.traj"]);
    assert_eq!(wrong.status.code(), Some(2));
}

#[test]
fn constants_reproduce_reference_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let o = feller(dir.path(), &["--out", "o", "constants", "--beta", "0.04", "--d", "3"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("o/constants.csv")).unwrap();
    let get = |k: &str| -> String {
        csv.lines().find_map(|l| l.strip_prefix(&format!("{k},"))).unwrap_or_else(|| panic!("{k} in {csv}")).to_string()
    };
    assert_eq!(get("p1").parse::<f64>().unwrap(), 3.6);
    assert!((get("gamma_inf_bound").parse::<f64>().unwrap() - 1.0 / 6.0).abs() < 1e-12);
    assert_eq!(get("sandwich_holds"), "true");
    let cfg = write(dir.path(), "small.cfg", SMALL);
    let from_cfg = feller(dir.path(), &["--config", &cfg, "--out", "c", "constants"]);
    assert!(from_cfg.status.success());
    assert_eq!(fs::read_to_string(dir.path().join("c/constants.csv")).unwrap(), csv);
}
