use std::path::Path;
use std::process::Command;

use frontlab_cli::config::COMMAND_NAMES;
use frontlab_cli::manifest::{read_manifest, sha256_hex};
use frontlab_cli::{run_experiment, CliError, ExperimentConfig, RunOptions};

const SIMULATE: &str = r#"
t_end_time = 2.0
seeds = [3, 4]

[command]
kind = "simulate"
source = { kind = "ball", center = [0.0], radius = 2.0 }
domain_lo_len = [-10.0]
domain_hi_len = [10.0]
snapshot_times = [1.0]

[medium]
dim = 1
bump = { kind = "hat", radius = 1.5 }
law = { kind = "uniform", max = 1.0 }

[grid]
spacing_len = 0.1
"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_frontlab"))
}

fn listed_everything(root: &Path) {
    let m = read_manifest(root).unwrap();
    let mut on_disk = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(root).unwrap().to_string_lossy().replace('\\', "/");
                if rel != "manifest.json" {
                    on_disk.push(rel);
                }
            }
        }
    }
    on_disk.sort();
    let listed: Vec<String> = m.files.iter().map(|f| f.path.clone()).collect();
    assert_eq!(listed, on_disk);
    for f in &m.files {
        let bytes = std::fs::read(root.join(&f.path)).unwrap();
        assert_eq!(sha256_hex(&bytes), f.sha256);
        assert_eq!(bytes.len() as u64, f.bytes);
    }
}

#[test]
fn config_round_trips_and_hash_ignores_output_dir() {
    let cfg = ExperimentConfig::from_toml(SIMULATE).unwrap();
    let back = ExperimentConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
    assert_eq!(cfg, back);
    assert_eq!(cfg.hash(), back.hash());
    let mut moved = cfg.clone();
    moved.output_dir = Some("elsewhere".into());
    assert_eq!(moved.hash(), cfg.hash());
    let mut other = cfg.clone();
    other.t_end_time = 3.0;
    assert_ne!(other.hash(), cfg.hash());
}

#[test]
fn every_shipped_config_parses_and_validates() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut kinds = Vec::new();
    for e in std::fs::read_dir(dir).unwrap() {
        let cfg = ExperimentConfig::load(&e.unwrap().path()).unwrap();
        cfg.validate().unwrap();
        kinds.push(cfg.command.name());
    }
    for name in COMMAND_NAMES {
        assert!(kinds.contains(&name), "no shipped config for {name}");
    }
}

#[test]
fn invalid_configs_name_the_offending_field() {
    let bad = SIMULATE.replace("spacing_len = 0.1", "spacing_len = -0.1");
    let err = ExperimentConfig::from_toml(&bad).and_then(|c| c.validate()).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    assert!(err.to_string().contains("grid.spacing_len"), "{err}");
    let unknown = SIMULATE.replace("[grid]", "[grid]\nspacing = 1.0");
    assert!(ExperimentConfig::from_toml(&unknown).is_err());
}

#[test]
fn zero_length_simulation_writes_the_initial_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    let text = SIMULATE.replace("t_end_time = 2.0", "t_end_time = 0.0").replace("snapshot_times = [1.0]", "snapshot_times = [0.0]").replace("seeds = [3, 4]", "seeds = [3]");
    let cfg = ExperimentConfig::from_toml(&text).unwrap();
    let m = run_experiment(&cfg, &RunOptions { out: Some(dir.path().into()), ..Default::default() }).unwrap();
    assert_eq!(m.jobs.len(), 1);
    assert!(m.files.iter().any(|f| f.path.starts_with("seed-3/snapshot-")));
    let summary: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("seed-3/summary.json")).unwrap()).unwrap();
    assert_eq!(summary["result"]["steps"], 0);
    listed_everything(dir.path());
}

#[test]
fn reruns_are_byte_identical_and_manifests_complete() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let cfg_path = a.path().join("in.toml");
    std::fs::write(&cfg_path, SIMULATE).unwrap();
    for out in [a.path().join("o"), b.path().join("o")] {
        let st = bin().args(["simulate", "--config"]).arg(&cfg_path).arg("--out").arg(&out).status().unwrap();
        assert!(st.success());
        listed_everything(&out);
    }
    let (ma, mb) = (read_manifest(&a.path().join("o")).unwrap(), read_manifest(&b.path().join("o")).unwrap());
    assert_eq!(ma.files, mb.files);
    assert_eq!(ma.config_hash, ExperimentConfig::from_toml(SIMULATE).unwrap().hash());
}

#[test]
fn seed_offset_shifts_every_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::from_toml(SIMULATE).unwrap();
    let m = run_experiment(&cfg, &RunOptions { out: Some(dir.path().into()), seed_offset: 10, ..Default::default() }).unwrap();
    let seeds: Vec<Option<u64>> = m.jobs.iter().map(|j| j.seed).collect();
    assert_eq!(seeds, vec![Some(13), Some(14)]);
}

#[test]
fn subcommand_must_match_the_config_kind() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("in.toml");
    std::fs::write(&p, SIMULATE).unwrap();
    let out = bin().args(["hj", "--config"]).arg(&p).arg("--out").arg(dir.path().join("o")).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("command.kind"));
}

#[test]
fn strict_mode_turns_failed_assertions_into_exit_code_three() {
    // a homogeneous exclusivity run with an absurdly short burn-in fails its slab bound
    let text = r#"
t_end_time = 30.0
seeds = [1]

[command]
kind = "exclusivity"
direction = [1.0]
a = 0.05
burn_in_time = 0.0
every_time = 5.0
constants = { calibration_spacing_len = 0.1, calibration_t_end_time = 60.0 }

[medium]
dim = 1
bump = { kind = "zero" }
law = { kind = "homogeneous" }

[grid]
spacing_len = 0.1
"#;
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("in.toml");
    std::fs::write(&p, text).unwrap();
    let lax = bin().args(["exclusivity", "--config"]).arg(&p).arg("--out").arg(dir.path().join("a")).output().unwrap();
    assert!(lax.status.success(), "{}", String::from_utf8_lossy(&lax.stderr));
    assert!(String::from_utf8_lossy(&lax.stdout).contains("FAIL"));
    let strict = bin().args(["exclusivity", "--strict", "--config"]).arg(&p).arg("--out").arg(dir.path().join("b")).output().unwrap();
    assert_eq!(strict.status.code(), Some(3));
    let cfg = ExperimentConfig::from_toml(text).unwrap();
    let err = run_experiment(&cfg, &RunOptions { out: Some(dir.path().join("c")), strict: true, ..Default::default() }).unwrap_err();
    assert!(matches!(err, CliError::Assertions(_)));
}
