use std::path::Path;
use std::process::{Command, Output};

fn rmt(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rmt"))
        .args(args)
        .current_dir(dir)
        .env_remove("RMT_CACHE_DIR")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn moments_table_and_replay() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "moments", "--n", "20", "--r", "1", "--r", "0.5+1i", "--phi", "2+3.5i", "--samples", "2000", "--seed", "7",
        "--out", "m.csv",
    ];
    let o = rmt(dir.path(), &args);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("m.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "r,predicted_re,predicted_im,mc_re,mc_im,stderr_re,stderr_im,zscore");
    assert_eq!(lines.len(), 3);
    assert!(lines[2].starts_with("0.5+1i,"));
    let manifest = dir.path().join("m.csv.manifest.json");
    let m: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&manifest).unwrap()).unwrap();
    assert_eq!(m["command"], "moments");
    assert_eq!(m["seed"], 7);
    let o = rmt(dir.path(), &["replay", manifest.to_str().unwrap(), "--verify"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("replay identical"));
    // thread count does not change the draws
    let mut two = args.to_vec();
    two.extend(["--threads", "3"]);
    *two.iter_mut().find(|a| **a == "m.csv").unwrap() = "m3.csv";
    assert_eq!(code(&rmt(dir.path(), &two)), 0);
    assert_eq!(csv, std::fs::read_to_string(dir.path().join("m3.csv")).unwrap());
}

#[test]
fn moments_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let base = ["moments", "--n", "10", "--phi", "2+3.5i", "--out", "x.csv"];
    let mut bad_r = base.to_vec();
    bad_r.extend(["--r", "2+3.5j"]);
    assert_eq!(code(&rmt(dir.path(), &bad_r)), 2);
    let mut few = base.to_vec();
    few.extend(["--r", "1", "--samples", "10"]);
    assert_eq!(code(&rmt(dir.path(), &few)), 2);
    let mut pole = base.to_vec();
    pole.extend(["--r", "-1.5"]);
    assert_eq!(code(&rmt(dir.path(), &pole)), 3);
}

#[test]
fn identities_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let o = rmt(dir.path(), &["identities", "--kmax", "8", "--out", "id.txt"]);
    assert_eq!(code(&o), 0);
    let report = std::fs::read_to_string(dir.path().join("id.txt")).unwrap();
    assert_eq!(report.matches("PASS").count(), 7 * 5 + 1);
    assert!(!report.contains("FAIL"));
    assert_eq!(code(&rmt(dir.path(), &["identities", "--kmax", "2"])), 0);
    assert_eq!(code(&rmt(dir.path(), &["identities", "--kmax", "x"])), 2);
    assert_eq!(code(&rmt(dir.path(), &["identities", "--kmax", "1"])), 2);
    assert_eq!(code(&rmt(dir.path(), &["identities", "--bogus"])), 2);
}

#[test]
fn ratios_check() {
    let dir = tempfile::tempdir().unwrap();
    for (n, k) in [("3", "2"), ("2", "1")] {
        let o = rmt(
            dir.path(),
            &["ratios-check", "--n", n, "--k", k, "--alpha", "0.3", "--gamma", "0.4", "--samples", "20000"],
        );
        assert_eq!(code(&o), 0, "{}", stdout(&o));
        assert!(stdout(&o).contains("verdict: PASS"));
    }
    let o = rmt(dir.path(), &["ratios-check", "--n", "3", "--k", "4", "--alpha", "0.3", "--gamma", "0.4"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn excised_curves() {
    let dir = tempfile::tempdir().unwrap();
    let o = rmt(
        dir.path(),
        &["excised", "--n", "6", "--chi", "-1e9", "--samples", "20000", "--bins", "20", "--kmax", "1", "--out-prefix", "ex"],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["ex_mc.csv", "ex_series.csv", "ex.manifest.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    // far cut: series is the full-group density, MC close to it
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("ex.manifest.json")).unwrap()).unwrap();
    assert!(m["results"]["sup_distance"].as_f64().unwrap() < 0.05);
    assert_eq!(m["results"]["acceptance_rate"].as_f64().unwrap(), 1.0);
    let o = rmt(
        dir.path(),
        &["excised", "--n", "6", "--chi", "-1", "--samples", "20000", "--bins", "5", "--out-prefix", "bad"],
    );
    assert_eq!(code(&o), 2);
    let o = rmt(
        dir.path(),
        &["excised", "--n", "2", "--chi", "40", "--samples", "10000", "--bins", "10", "--out-prefix", "few"],
    );
    assert_eq!(code(&o), 3);
}

#[test]
fn lfun_curves_and_data() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let o = rmt(p, &["lfun", "--X", "200", "--pmax", "200", "--grid", "20", "--out-prefix", "a"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let pred = std::fs::read_to_string(p.join("a_prediction.csv")).unwrap();
    assert_eq!(pred.lines().count(), 21);
    assert_eq!(code(&rmt(p, &["lfun", "--X", "200", "--kmax", "3", "--out-prefix", "b"])), 2);

    std::fs::write(p.join("zeros.txt"), "# d,gamma\n5,0.8\n12,1.7\n37,2.2\n").unwrap();
    std::fs::write(p.join("d.txt"), "5\n12\n37\n").unwrap();
    let o = rmt(
        p,
        &[
            "lfun", "--X", "40", "--pmax", "200", "--grid", "10", "--kmax", "1", "--kappa", "1.2", "--zeros", "zeros.txt",
            "--dlist", "d.txt", "--out-prefix", "c",
        ],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(p.join("c_zeros.csv").exists());

    std::fs::write(p.join("broken.txt"), "5,0.8\n12,abc\n").unwrap();
    let o = rmt(p, &["lfun", "--X", "40", "--pmax", "200", "--zeros", "broken.txt", "--out-prefix", "d"]);
    assert_eq!(code(&o), 4);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
    std::fs::write(p.join("empty.txt"), "").unwrap();
    let o = rmt(p, &["lfun", "--X", "40", "--pmax", "200", "--zeros", "empty.txt", "--out-prefix", "e"]);
    assert_eq!(code(&o), 4);
}

#[test]
fn lambda_cache() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_rmt"))
            .args(["lfun", "--X", "60", "--pmax", "300", "--grid", "8", "--out-prefix", "z"])
            .current_dir(dir.path())
            .env("RMT_CACHE_DIR", &cache)
            .output()
            .unwrap()
    };
    assert_eq!(code(&run()), 0);
    let file = cache.join("lambda_0_-1_1_0_0_300.csv");
    let first = std::fs::read_to_string(&file).unwrap();
    assert!(first.starts_with("p,lambda\n2,"));
    let out1 = std::fs::read(dir.path().join("z_prediction.csv")).unwrap();
    assert_eq!(code(&run()), 0);
    assert_eq!(out1, std::fs::read(dir.path().join("z_prediction.csv")).unwrap());
}
