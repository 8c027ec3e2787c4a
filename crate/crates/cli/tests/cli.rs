use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ruinlab_cli::config::{load_table, resolve};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_ruinlab"));
    c.env_remove("RUINLAB_OUT");
    c
}

fn run(args: &[&str], cwd: &Path) -> Output {
    bin().args(args).current_dir(cwd).output().expect("spawn ruinlab")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn repo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn configs() -> PathBuf {
    repo().join("configs")
}

/// Result files of a run directory, keyed by name. The manifest is excluded
/// because it records the tool version only.
fn results(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != "manifest.toml")
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect()
}

const SMALL_CERTAIN: &[&str] = &[
    "--n-paths",
    "200",
    "--horizons",
    "50,100",
    "--set",
    "numerics.boundedness_paths=50",
];

#[test]
fn diffusion_limit_headline() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(
        &[
            "diffusion-limit",
            "--rho",
            "0.1",
            "--mu",
            "1",
            "--m",
            "2",
            "--u",
            "10",
            "--out",
            "d",
        ],
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("psi=0.36787944"), "{}", stdout(&o));
    let csv = fs::read_to_string(tmp.path().join("d/diffusion_limit.csv")).unwrap();
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    let psi: f64 = row[4].parse().unwrap();
    assert!((psi - (-1.0f64).exp()).abs() < 1e-15);
}

#[test]
fn theta_small_t_refusal_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["theta", "--r", "1", "--t", "0.1", "--out", "t"], tmp.path());
    assert_eq!(o.status.code(), Some(3));
    let err = stderr(&o);
    assert!(err.contains("small-t refusal"), "{err}");
    assert!(err.contains("Monte Carlo oracle"), "{err}");
}

#[test]
fn theta_regular_time() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["theta", "--r", "1", "--t", "1", "--out", "t"], tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(tmp.path().join("t/theta.csv").is_file());
}

#[test]
fn invalid_corpus_exits_2_naming_key() {
    let dir = configs().join("invalid");
    let mut n = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        let text = fs::read_to_string(&path).unwrap();
        let key = text
            .lines()
            .next()
            .and_then(|l| l.strip_prefix("# expect: "))
            .unwrap_or_else(|| panic!("{} lacks an expect line", path.display()))
            .trim()
            .to_string();
        let tmp = tempfile::tempdir().unwrap();
        let o = run(&["--config", path.to_str().unwrap(), "--out", "x"], tmp.path());
        assert_eq!(o.status.code(), Some(2), "{}: {}", path.display(), stderr(&o));
        assert!(
            stderr(&o).contains(&format!("`{key}`")),
            "{}: expected key {key}, got {}",
            path.display(),
            stderr(&o)
        );
        assert!(!tmp.path().join("x").exists(), "nothing written on rejection");
        n += 1;
    }
    assert!(n >= 10);
}

#[test]
fn flag_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["ruin", "--set", "model.u"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["ruin", "--dt=-1"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`numerics.dt`"), "{}", stderr(&o));
    let o = run(&["ruin", "--bogus"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    let o = run(&[], tmp.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn shipped_configs_validate() {
    for entry in fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            resolve(load_table(&path).unwrap()).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        }
    }
}

#[test]
fn same_seed_is_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = configs().join("certain_ruin.toml");
    for out in ["a", "b"] {
        let mut args = vec![
            "certain-ruin",
            "--config",
            cfg.to_str().unwrap(),
            "--seed",
            "42",
            "--out",
            out,
        ];
        args.extend_from_slice(SMALL_CERTAIN);
        let o = run(&args, tmp.path());
        assert!(o.status.code().is_some_and(|c| c == 0), "{}", stderr(&o));
    }
    let a = results(&tmp.path().join("a"));
    assert!(a.contains_key("report.csv") && a.contains_key("envelope.csv"));
    assert_eq!(a, results(&tmp.path().join("b")));
}

#[test]
fn thread_count_does_not_change_results() {
    let tmp = tempfile::tempdir().unwrap();
    for (threads, out) in [("1", "one"), ("4", "four")] {
        let mut args = vec!["ruin", "--threads", threads, "--out", out];
        args.extend_from_slice(SMALL_CERTAIN);
        let o = run(&args, tmp.path());
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    assert_eq!(results(&tmp.path().join("one")), results(&tmp.path().join("four")));
}

#[test]
fn manifest_rerun_reproduces_results() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = configs().join("corollaries.toml");
    let mut args = vec![
        "corollaries",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        "first",
        "--set",
        "numerics.dt=0.05",
    ];
    args.extend_from_slice(SMALL_CERTAIN);
    let o = run(&args, tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let manifest = tmp.path().join("first/manifest.toml");
    let text = fs::read_to_string(&manifest).unwrap();
    assert!(text.contains("seed = ") && text.contains("[manifest]"), "{text}");
    let o = run(&["--config", manifest.to_str().unwrap(), "--out", "second"], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(results(&tmp.path().join("first")), results(&tmp.path().join("second")));
    assert_eq!(
        text,
        fs::read_to_string(tmp.path().join("second/manifest.toml")).unwrap()
    );
}

#[test]
fn report_prints_horizon_table() {
    let tmp = tempfile::tempdir().unwrap();
    let mut args = vec!["certain-ruin", "--out", "r", "--set", "tolerances.min_final_ruin=0"];
    args.extend_from_slice(SMALL_CERTAIN);
    assert!(run(&args, tmp.path()).status.success());
    let o = run(&["report", "r"], tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let s = stdout(&o);
    assert!(s.contains("experiment: certain-ruin"), "{s}");
    assert!(s.contains("horizon") && s.contains("ruin_freq"), "{s}");
    assert!(s.contains("result: PASS"), "{s}");
}

#[test]
fn report_flags_failed_check() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(
        &["transition-density", "--nz", "6", "--nx", "6", "--out", "td"],
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let checks = tmp.path().join("td/checks.csv");
    fs::write(
        &checks,
        "name,value,op,tolerance,status\nmass_defect,5.0000000000000000e-2,<=,2.0000000000000000e-2,PASS\n",
    )
    .unwrap();
    let o = run(&["report", "td"], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    let s = stdout(&o);
    assert!(s.contains("FAIL mass_defect"), "{s}");
    assert!(s.contains("result: FAIL"), "{s}");
}

#[test]
fn report_on_empty_dir_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["report", "."], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    fs::write(tmp.path().join("manifest.toml"), "experiment = [").unwrap();
    let o = run(&["report", "."], tmp.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn default_out_root_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path().join("root");
    let o = bin()
        .args(["diffusion-limit", "--seed", "7"])
        .env("RUINLAB_OUT", &root)
        .current_dir(tmp.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(root.join("diffusion-limit-7/diffusion_limit.csv").is_file());
    let entries: Vec<_> = fs::read_dir(tmp.path()).unwrap().collect();
    assert_eq!(entries.len(), 1, "nothing written outside the output root");
}

#[test]
fn yor_density_fallback_at_small_t() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["yor-density", "--t", "0.1", "--x", "0", "--out", "y"], tmp.path());
    assert_eq!(o.status.code(), Some(3));
    let o = run(
        &[
            "yor-density",
            "--t",
            "0.1",
            "--x",
            "0",
            "--fallback",
            "--n-oracle",
            "2000",
            "--out",
            "y",
        ],
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`yor.oracle_dt`"), "{}", stderr(&o));
    let o = run(
        &[
            "yor-density",
            "--t",
            "0.1",
            "--x",
            "0",
            "--fallback",
            "--n-oracle",
            "2000",
            "--set",
            "yor.oracle_dt=1e-4",
            "--out",
            "y",
        ],
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(tmp.path().join("y/yor_density_mc.csv").is_file());
}

#[test]
fn simulate_dumps_paths() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = configs().join("simulate.toml");
    let o = run(&["--config", cfg.to_str().unwrap(), "--out", "s"], tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for i in 0..4 {
        let p = tmp.path().join(format!("s/path_{i:04}.csv"));
        let text = fs::read_to_string(&p).unwrap();
        assert!(!text.contains('\r'));
        assert!(text.lines().count() > 100);
    }
}
