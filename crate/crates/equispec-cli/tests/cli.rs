use std::path::Path;
use std::process::{Command, Output};

fn equispec(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_equispec"))
        .current_dir(dir)
        .env_remove("EQUISPEC_OUT_DIR")
        .args(args)
        .output()
        .expect("binary runs")
}

fn read(path: impl AsRef<Path>) -> String {
    std::fs::read_to_string(path.as_ref()).unwrap_or_else(|e| panic!("{}: {e}", path.as_ref().display()))
}

#[test]
fn solve_writes_the_documented_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = equispec(dir.path(), &["--svg", "solve", "--potential", "isotonic", "--A", "1", "--k", "6", "--states"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let root = dir.path().join("out");
    for name in ["energies.csv", "levels.csv", "potential.csv", "states.csv", "report.json", "config.toml", "levels.svg"] {
        assert!(root.join(name).exists(), "{name}");
    }
    assert!(read(root.join("levels.csv")).starts_with("n,E,dE,class,ipr,mean_x\n"));
    assert!(read(root.join("states.csv")).starts_with("x,psi_0,psi_1,"));
    let report: serde_json::Value = serde_json::from_str(&read(root.join("report.json"))).unwrap();
    assert_eq!(report["schema_version"], 1);
    let e0 = report["spectrum"]["energies"][0].as_f64().unwrap();
    assert!((e0 - 1.25).abs() < 1e-3, "{e0}");
}

#[test]
fn output_directory_precedence() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("cfg.toml"), "out_dir = \"from_config\"\n").unwrap();
    let run = |extra: &[&str], env: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_equispec"));
        cmd.current_dir(dir.path()).env_remove("EQUISPEC_OUT_DIR");
        if let Some(v) = env {
            cmd.env("EQUISPEC_OUT_DIR", v);
        }
        let status = cmd.args(extra).args(["perturb", "--monomial", "2"]).status().unwrap();
        assert!(status.success());
    };
    run(&[], Some("from_env"));
    assert!(dir.path().join("from_env/verdict.json").exists());
    run(&["--config", "cfg.toml"], Some("from_env"));
    assert!(dir.path().join("from_config/verdict.json").exists());
    run(&["--config", "cfg.toml", "--out-dir", "from_flag"], Some("from_env"));
    assert!(dir.path().join("from_flag/verdict.json").exists());
}

#[test]
fn flags_override_config_values() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("cfg.toml"), "[perturb]\nmonomial = 4\norders = 1\nk = \"0..4\"\n").unwrap();
    let out = equispec(dir.path(), &["--config", "cfg.toml", "perturb", "--orders", "2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let resolved = read(dir.path().join("out/config.toml"));
    assert!(resolved.contains("monomial = 4") && resolved.contains("orders = 2"), "{resolved}");
    let verdict: serde_json::Value = serde_json::from_str(&read(dir.path().join("out/verdict.json"))).unwrap();
    assert_eq!(verdict["orders"].as_array().unwrap().len(), 2);
    assert_eq!(verdict["first_violation"]["order"], 1);
    assert_eq!(read(dir.path().join("out/corrections.csv")).lines().count(), 1 + 5 * 2);
}

#[test]
fn resolved_config_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let first = equispec(dir.path(), &["--out-dir", "a", "solve", "--potential", "darboux", "--m", "2", "--k", "5"]);
    assert!(first.status.success());
    let second = equispec(dir.path(), &["--out-dir", "b", "--config", "a/config.toml", "solve"]);
    assert!(second.status.success(), "{}", String::from_utf8_lossy(&second.stderr));
    for name in ["energies.csv", "report.json", "config.toml"] {
        assert_eq!(read(dir.path().join("a").join(name)), read(dir.path().join("b").join(name)), "{name}");
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let code = |args: &[&str]| equispec(dir.path(), args).status.code();
    assert_eq!(code(&["solve"]), Some(2));
    assert_eq!(code(&["solve", "--potential", "harmonic", "--preset", "type1"]), Some(2));
    assert_eq!(code(&["solve", "--potential", "isotonic"]), Some(2));
    assert_eq!(code(&["solve", "--potential", "isotonic", "--A", "-1"]), Some(2));
    assert_eq!(code(&["perturb", "--monomial", "12"]), Some(2));
    assert_eq!(code(&["perturb", "--poly", "1,x"]), Some(2));
    assert_eq!(code(&["fit"]), Some(2));
    assert_eq!(code(&["fit", "--data", "nowhere.csv"]), Some(4));
    assert_eq!(code(&["--config", "nowhere.toml", "fit"]), Some(4));

    // An uncertifiable tolerance still writes the diagnostics before failing.
    let out = equispec(dir.path(), &["--out-dir", "g", "generate", "--preset", "type1", "--residual-tol", "1e-15"]);
    assert_eq!(out.status.code(), Some(3));
    let report: serde_json::Value = serde_json::from_str(&read(dir.path().join("g/report.json"))).unwrap();
    assert_eq!(report["certified"], false);
}

#[test]
fn fit_recovers_the_shipped_slope() {
    let dir = tempfile::tempdir().unwrap();
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/bi_film_spacings.csv");
    let out = equispec(dir.path(), &["fit", "--data", data.to_str().unwrap(), "--samples", "5"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let fit: serde_json::Value = serde_json::from_str(&read(dir.path().join("out/fit.json"))).unwrap();
    let c = fit["C_eV_nm"].as_f64().unwrap();
    assert!((c - 1.336).abs() < 0.01, "{c}");
    assert_eq!(read(dir.path().join("out/fitline.csv")).lines().count(), 6);
}
