use std::fs;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_beamalign"))
}

fn run_ok(args: &[&str]) -> String {
    let out = bin().args(args).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn plan_report_is_deterministic() {
    let a = run_ok(&["plan"]);
    assert!(a.contains("alignment slots L*: 14"));
    assert!(a.contains("rho strictly increasing in (0, 1/2): PASS"));
    assert_eq!(a, run_ok(&["plan"]));
}

#[test]
fn zero_rate_reports_zero_watts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("zero.cfg");
    fs::write(&cfg, "# idle link\nrate_min_bps = 0\n").unwrap();
    let text = run_ok(&["plan", "--config", cfg.to_str().unwrap()]);
    assert!(text.contains("alignment slots L*: 0"));
    assert!(text.contains("average power P_u: 0 W"));
}

#[test]
fn bad_config_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "slots = 200\ncolour = blue\n").unwrap();
    let out = bin().args(["plan", "--config", cfg.to_str().unwrap()]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown key `colour`"));
}

#[test]
fn infeasible_config_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("slow.cfg");
    fs::write(&cfg, "spectral_efficiency = 2000\n").unwrap();
    let out = bin().args(["plan", "--config", cfg.to_str().unwrap()]).output().unwrap();
    assert!(!out.status.success());
}

#[test]
fn sweep_pe_csv_format() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("pe.cfg");
    fs::write(&cfg, "se_values = 8\nsweep_points = 8\n").unwrap();
    let out = dir.path().join("pe.csv");
    run_ok(&["sweep-pe", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    let text = fs::read_to_string(&out).unwrap();
    assert!(!text.contains('\r'));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "pe,rmin_bps,power_dBm,thr_bps");
    assert_eq!(lines.len(), 9);
    assert!(lines[1..].iter().all(|l| l.split(',').count() == 4));
    // Rerunning truncates rather than appends.
    run_ok(&["sweep-pe", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(fs::read_to_string(&out).unwrap(), text);
}

#[test]
fn simulate_records_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let args = |p: &std::path::Path| {
        vec!["simulate".to_string(), "--trials".into(), "300".into(), "--seed".into(), "9".into(), "--out".into(), p.to_str().unwrap().into()]
    };
    let sa = run_ok(&args(&a).iter().map(String::as_str).collect::<Vec<_>>());
    let sb = run_ok(&args(&b).iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(sa, sb);
    assert!(sa.contains("trials: 300"));
    let ta = fs::read_to_string(&a).unwrap();
    assert_eq!(ta, fs::read_to_string(&b).unwrap());
    assert!(ta.starts_with("trial,policy,energy_J,bits,aligned,e_flag,L_used\n"));
    assert_eq!(ta.lines().count(), 301);
}

#[test]
fn compare_csv_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cmp.cfg");
    fs::write(&cfg, "sweep_min = 10\nsweep_max = 15\nsweep_points = 2\npolicies = dfs, ces\n").unwrap();
    let c = cfg.to_str().unwrap();
    let a = run_ok(&["compare", "--config", c, "--trials", "200", "--seed", "3"]);
    let b = run_ok(&["compare", "--config", c, "--trials", "200", "--seed", "3"]);
    assert_eq!(a, b);
    assert_eq!(a.lines().next().unwrap(), "se_nominal,policy,power_W,power_dBm,power_ci_dB,se_achieved,se_ci");
    assert_eq!(a.lines().count(), 5);
}
