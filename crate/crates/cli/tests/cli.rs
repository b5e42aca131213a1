use std::path::Path;
use std::process::Command;

fn bbmlab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bbmlab"))
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn missing_seed_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = bbmlab().args(["numerics-check", "--out"]).arg(dir.path()).env_remove("BBMLAB_WORKERS").output().unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed"));
}

#[test]
fn bad_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "seed = 1\n[model]\na = 8.0\nN = 100.0\n").unwrap();
    let out = bbmlab().args(["levy", "--config"]).arg(&cfg).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = bbmlab().args(["verify", "nonsense", "--seed", "1", "--out"]).arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_theta_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = bbmlab().args(["verify", "theta", "--seed", "3", "--out"]).arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let v = read(dir.path(), "verify.csv");
    assert!(v.starts_with("# schema=1\ncriterion,name,status,detail\n1,theta,PASS,"), "{v}");
}

#[test]
fn command_from_config_file_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "command = \"levy\"\nseed = 9\nreplicas = 2\nhorizon = 1.0\nworkers = 1\n[levy]\npoints = 10\n").unwrap();
    let out_dir = dir.path().join("out");
    let out = bbmlab().arg("--config").arg(&cfg).arg("--out").arg(&out_dir).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = read(&out_dir, "levy.csv");
    assert!(csv.starts_with("# schema=1\nreplicate,t,L\n"));
    assert_eq!(csv.lines().count(), 2 + 2 * 11);
    let manifest = read(&out_dir, "manifest.json");
    assert!(manifest.contains(&format!("sha256:{}", bbmlab::output::content_hash(csv.as_bytes()))));
    assert!(manifest.contains("seed = 9"));
    assert!(!manifest.contains("workers"));
}

#[test]
fn outputs_do_not_depend_on_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "seed = 4\nreplicas = 40\n[model]\nzeta = 4.0\n").unwrap();
    let mut seen = Vec::new();
    for (k, w) in ["1", "3"].iter().enumerate() {
        let out_dir = dir.path().join(format!("o{k}"));
        let out = bbmlab().args(["breakout-rate", "--workers", w, "--config"]).arg(&cfg).arg("--out").arg(&out_dir).output().unwrap();
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        seen.push((read(&out_dir, "excursions.csv"), read(&out_dir, "pb.csv"), read(&out_dir, "manifest.json")));
    }
    assert_eq!(seen[0], seen[1]);
}

#[test]
fn workers_env_is_a_fallback() {
    let dir = tempfile::tempdir().unwrap();
    let out = bbmlab().args(["numerics-check", "--seed", "1", "--replicas", "5", "--out"]).arg(dir.path()).env("BBMLAB_WORKERS", "zero").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = bbmlab().args(["numerics-check", "--seed", "1", "--replicas", "5", "--workers", "2", "--out"]).arg(dir.path()).env("BBMLAB_WORKERS", "zero").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
}
