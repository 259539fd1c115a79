use std::path::Path;
use std::process::{Command, Output};

fn bin(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qdot-hf"))
        .args(args)
        .current_dir(cwd)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

const TINY: &str = r#"
seed = 5
output = "out"

[geometry]
base_diameter = 3.0
height = 1.5
margins = { lateral = 0.8, below = 0.8, above = 0.8 }

[bath]
samples = 100
alloy_realizations = 2
"#;

#[test]
fn defaults_print_a_valid_config() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin(&["defaults"], dir.path());
    assert!(o.status.success());
    let cfg = text(&o.stdout);
    assert!(cfg.contains("[geometry]") && cfg.contains("[budget.params]"));
    std::fs::write(dir.path().join("d.toml"), &cfg).unwrap();
    let v = bin(&["validate", "d.toml"], dir.path());
    assert_eq!(v.status.code(), Some(0), "{}", text(&v.stderr));
}

#[test]
fn validation_failures_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.toml"), "[electronic]\ntier = \"sp3d5s*\"\n[bath]\nsamples = -1\n").unwrap();
    let o = bin(&["validate", "bad.toml"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let err = text(&o.stderr);
    assert!(err.contains("electronic.parameters") && err.contains("bath.samples"), "{err}");
    std::fs::write(dir.path().join("garbled.toml"), "seed = [").unwrap();
    assert_eq!(bin(&["run", "garbled.toml"], dir.path()).status.code(), Some(1));
}

#[test]
fn missing_inputs_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(bin(&["run", "absent.toml"], dir.path()).status.code(), Some(3));
    assert_eq!(bin(&["report", "nowhere"], dir.path()).status.code(), Some(3));
}

#[test]
fn run_then_report() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.toml"), TINY).unwrap();
    let o = bin(&["run", "c.toml"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", text(&o.stderr));
    let out = text(&o.stdout);
    for label in ["unpolarized", "size", "alloy", "interface"] {
        assert!(out.lines().any(|l| l.starts_with(label)), "{out}");
    }
    assert!(out.contains("verdict"));
    let r = bin(&["report", "out"], dir.path());
    assert_eq!(r.status.code(), Some(0));
    assert_eq!(text(&r.stdout), out);
    let r2 = bin(&["report", "c.toml"], dir.path());
    assert_eq!(text(&r2.stdout), out);
    let again = bin(&["run", "c.toml"], dir.path());
    assert!(text(&again.stderr).lines().filter(|l| l.contains("completed")).count() == 0);
}

#[test]
fn single_stage_commands() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.toml"), TINY).unwrap();
    let o = bin(&["geometry", "c.toml"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(dir.path().join("out/geometry/structure.tsv").is_file());
    assert!(!dir.path().join("out/strain").exists());
    let o = bin(&["hyperfine", "c.toml"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(dir.path().join("out/hyperfine/map.tsv").is_file());
    assert!(!dir.path().join("out/spinbath").exists());
    assert_eq!(bin(&["run", "c.toml", "--until", "bogus"], dir.path()).status.code(), Some(1));
}

#[test]
fn stage_failure_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("p.toml"), "name = \"broken\"\n").unwrap();
    std::fs::write(dir.path().join("c.toml"), format!("{TINY}\n[electronic]\nparameters = \"p.toml\"\n")).unwrap();
    let o = bin(&["run", "c.toml"], dir.path());
    assert_eq!(o.status.code(), Some(2), "{}", text(&o.stderr));
    assert!(text(&o.stderr).contains("electronic"));
    assert!(dir.path().join("out/geometry/structure.tsv").is_file());
}
