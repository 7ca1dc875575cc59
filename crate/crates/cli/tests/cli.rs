use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = r#"
seed = 7

[scenario]
n_paths = 4000
compatibility_trials = 10

[gheat]
nx = 801
nx_2d = 61

[noise]
isometry_paths = 100
"#;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_gfield-lab"));
    c.env_remove("GFIELD_LAB_OUT");
    c
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run(c: &mut Command) -> Output {
    c.output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn gnormal_suite_passes_and_lists_every_criterion() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.toml", SMALL);
    let out = dir.path().join("out");
    let o = run(bin().args(["verify", "--suite", "gnormal", "--config"]).arg(&cfg).arg("--out").arg(&out));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(o.status.code(), Some(0), "{stdout}\n{}", stderr(&o));
    assert_eq!(stdout.lines().filter(|l| l.starts_with("PASS")).count(), 5);
    let csv = std::fs::read_to_string(out.join("report.csv")).unwrap();
    let ids: Vec<usize> = csv.lines().skip(1).map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(ids, (1..=15).collect::<Vec<_>>());
    let json = std::fs::read_to_string(out.join("report.json")).unwrap();
    assert!(json.contains("\"suite\": \"gnormal\""));
}

#[test]
fn inverted_band_exits_2_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", "[scenario]\nsigma_lo2 = 5.0\nsigma_hi2 = 4.0\n");
    let o = run(bin().args(["verify", "--config"]).arg(&cfg).arg("--out").arg(dir.path()));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("scenario.sigma_lo2"), "{}", stderr(&o));
}

#[test]
fn cfl_violation_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfl.toml", "[gheat]\nnx = 101\ndt = 0.5\n");
    let o = run(bin().args(["verify", "--suite", "gnormal", "--config"]).arg(&cfg).arg("--out").arg(dir.path()));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("gheat.dt"), "{}", stderr(&o));
    assert!(!dir.path().join("report.csv").exists());
}

#[test]
fn unknown_config_key_and_experiment_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "typo.toml", "[spde]\nmas = 1.0\n");
    let o = run(bin().args(["experiment", "moments", "--config"]).arg(&cfg).arg("--out").arg(dir.path()));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("mas"), "{}", stderr(&o));

    let o = run(bin().args(["experiment", "nonsense", "--out"]).arg(dir.path()));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("nonsense"));

    let o = run(bin().args(["verify", "--suite", "everything"]));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn json_config_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{"seed": 3, "gheat": {"nx": 401}}"#);
    let o = run(bin().args(["experiment", "moments", "--config"]).arg(&cfg).arg("--out").arg(dir.path()));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(dir.path().join("moments.csv").exists());
}

#[test]
fn experiment_bytes_do_not_depend_on_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.toml", SMALL);
    let mut outputs = Vec::new();
    for jobs in ["1", "3"] {
        let out = dir.path().join(format!("jobs{jobs}"));
        let o = run(bin()
            .args(["experiment", "isometry", "--jobs", jobs, "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out));
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        outputs.push((
            std::fs::read(out.join("isometry.csv")).unwrap(),
            std::fs::read(out.join("isometry.svg")).unwrap(),
        ));
    }
    assert_eq!(outputs[0], outputs[1]);

    let out = dir.path().join("seeded");
    let o = run(bin()
        .args(["experiment", "isometry", "--seed", "8", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out));
    assert_eq!(o.status.code(), Some(0));
    assert_ne!(std::fs::read(out.join("isometry.csv")).unwrap(), outputs[0].0);
}

#[test]
fn env_out_dir_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("env-out");
    let o = run(bin().args(["experiment", "moments", "--no-svg"]).env("GFIELD_LAB_OUT", &out));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = out.join("moments.csv");
    assert!(csv.exists());
    assert!(!out.join("moments.svg").exists());

    let o = run(bin().arg("plot").arg(&csv).arg("--out").arg(dir.path()));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let svg = std::fs::read_to_string(dir.path().join("moments.svg")).unwrap();
    assert!(svg.contains("<svg") && svg.contains("version=\"1.1\""));

    let bad = write(dir.path(), "bad.csv", "a,b\n1,oops\n");
    let o = run(bin().arg("plot").arg(&bad).arg("--out").arg(dir.path()));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
}
