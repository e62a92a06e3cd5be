use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn aniso(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aniso"))
        .current_dir(dir)
        .args(args)
        .env_remove("ANISO_THREADS")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn write(dir: &Path, name: &str, text: &str) {
    fs::write(dir.join(name), text).unwrap();
}

/// Drops comment lines, which carry the timestamp.
fn body(path: &Path) -> String {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with("# aniso"))
        .collect::<Vec<_>>()
        .join("\n")
}

const BURGERS: &str = "[model]\nname = burgers\n[grid]\ncells = 64\n[scheme]\nt_end = 0.5\noutput_every = 0.05\nsnapshot_every = 0.25\n";

#[test]
fn run_writes_artifacts_and_passes_the_audit() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "b.ini", BURGERS);
    let out = aniso(tmp.path(), &["run", "--config", "b.ini", "--out", "r", "--quiet"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let r = tmp.path().join("r");
    for f in ["diagnostics.csv", "final.csv", "audit.jsonl", "decay.jsonl", "config.ini"] {
        assert!(r.join(f).is_file(), "{f} missing");
    }
    assert_eq!(fs::read_dir(r.join("snapshots")).unwrap().count(), 3);
    let diag = body(&r.join("diagnostics.csv"));
    assert!(diag.starts_with("t,mean,l1_to_mean,l2_energy,linf,dissipation_resolved,dissipation_budget"));
    assert_eq!(diag.lines().count(), 12);

    let audit: serde_json::Value =
        serde_json::from_str(fs::read_to_string(r.join("audit.jsonl")).unwrap().trim()).unwrap();
    assert_eq!(audit["passed"], true);
    assert_eq!(audit["model"], "burgers");

    let config = fs::read_to_string(r.join("config.ini")).unwrap();
    let parsed = aniso_core::cli::parse_config(&config).unwrap();
    assert_eq!(parsed.grid.cells, vec![64]);
}

#[test]
fn identical_configs_give_identical_bodies() {
    let tmp = TempDir::new().unwrap();
    let text = BURGERS.replace("[scheme]", "[initial]\nprofile = random\nseed = 9\n[scheme]");
    write(tmp.path(), "b.ini", &text);
    for dir in ["a", "b"] {
        let out = aniso(tmp.path(), &["run", "--config", "b.ini", "--out", dir, "--quiet"]);
        assert_eq!(code(&out), 0);
    }
    for f in ["diagnostics.csv", "final.csv", "snapshots/snapshot_0001.csv"] {
        assert_eq!(body(&tmp.path().join("a").join(f)), body(&tmp.path().join("b").join(f)), "{f}");
    }
    for f in ["audit.jsonl", "decay.jsonl"] {
        assert_eq!(
            fs::read(tmp.path().join("a").join(f)).unwrap(),
            fs::read(tmp.path().join("b").join(f)).unwrap()
        );
    }
}

#[test]
fn unstable_cfl_blows_up_with_exit_one() {
    let tmp = TempDir::new().unwrap();
    write(
        tmp.path(),
        "b.ini",
        &BURGERS.replace("cells = 64", "cells = 128").replace("t_end = 0.5", "t_end = 2\ncfl = 2.0"),
    );
    let out = aniso(tmp.path(), &["run", "--config", "b.ini", "--out", "r"]);
    assert_eq!(code(&out), 1);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("warning: cfl"), "{err}");
    assert!(err.contains("blow-up at t ="), "{err}");
    assert!(tmp.path().join("r/diagnostics.csv").is_file());
}

#[test]
fn constant_data_decays_at_time_zero() {
    let tmp = TempDir::new().unwrap();
    let text = BURGERS.replace("[scheme]", "[initial]\namplitude = 0\noffset = 0.25\n[scheme]");
    write(tmp.path(), "c.ini", &text);
    let out = aniso(tmp.path(), &["run", "--config", "c.ini", "--out", "r", "--quiet"]);
    assert_eq!(code(&out), 0);
    let decay: serde_json::Value =
        serde_json::from_str(fs::read_to_string(tmp.path().join("r/decay.jsonl")).unwrap().trim()).unwrap();
    assert_eq!(decay["thresholds"][2]["time"], 0.0);
}

#[test]
fn config_errors_name_the_line() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "bad.ini", "[model]\nname = burgers\n[grid]\ncells = -4\n[scheme]\nt_end = 1\n");
    let out = aniso(tmp.path(), &["run", "--config", "bad.ini"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 4:"));
}

#[test]
fn condition_exit_codes() {
    let tmp = TempDir::new().unwrap();
    for (model, expected) in [("linear-advection", 3), ("burgers", 0), ("porous-medium", 0)] {
        let out = aniso(tmp.path(), &["check-condition", "--model", model, "--out", model, "--quiet"]);
        assert_eq!(code(&out), expected, "{model}");
        let stdout = String::from_utf8_lossy(&out.stdout);
        assert_eq!(stdout.lines().count(), 1, "{stdout}");
        let csv = body(&tmp.path().join(model).join("condition.csv"));
        assert!(csv.starts_with("lambda,omega,tau_witness,kappa_witness"));
        assert_eq!(csv.lines().count(), 7);
    }
}

#[test]
fn validate_model_passes_presets_and_rejects_negative_diffusion() {
    let tmp = TempDir::new().unwrap();
    let out = aniso(tmp.path(), &["validate-model", "--model", "anisotropic-2d", "--quiet"]);
    assert_eq!(code(&out), 0);
    write(tmp.path(), "neg.ini", "[model]\nA11 = -1\n[grid]\ncells = 16\n[scheme]\nt_end = 1\n");
    let out = aniso(tmp.path(), &["validate-model", "--config", "neg.ini", "--out", "v"]);
    assert_eq!(code(&out), 2, "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(fs::read_to_string(tmp.path().join("v/validation.jsonl")).unwrap().trim()).unwrap();
    assert_eq!(report["psd"]["passed"], false);
}

#[test]
fn sweep_over_cells_writes_a_refinement_table() {
    let tmp = TempDir::new().unwrap();
    write(
        tmp.path(),
        "la.ini",
        "[model]\nname = linear-advection\n[grid]\ncells = 32\n[scheme]\nt_end = 1\noutput_every = 0.1\n",
    );
    let out = aniso(
        tmp.path(),
        &["sweep", "--config", "la.ini", "--axis", "cells", "--values", "32,64,128", "--out", "s", "--quiet"],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let table = body(&tmp.path().join("s/sweep_cells.csv"));
    let first: Vec<&str> = table.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(first, ["32", "64", "128"]);
    let refinement = body(&tmp.path().join("s/refinement.csv"));
    assert!(refinement.starts_with("t,extrapolated,order,n32,n64,n128"));
    for n in [32, 64, 128] {
        assert!(tmp.path().join(format!("s/cells={n}/diagnostics.csv")).is_file());
    }
}

#[test]
fn sweep_amplitude_rows_pass() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "b.ini", BURGERS);
    let out = aniso(
        tmp.path(),
        &["sweep", "--config", "b.ini", "--axis", "amplitude", "--values", "0.5,1.0", "--out", "s", "--quiet"],
    );
    assert_eq!(code(&out), 0);
    let table = body(&tmp.path().join("s/sweep_amplitude.csv"));
    let codes: Vec<&str> = table.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(codes, ["0", "0"]);
}

#[test]
fn sweep_usage_errors() {
    let tmp = TempDir::new().unwrap();
    let out = aniso(tmp.path(), &["sweep", "--model", "burgers", "--axis", "cells", "--values", ""]);
    assert_eq!(code(&out), 1);
    let out = aniso(tmp.path(), &["sweep", "--model", "burgers", "--axis", "t_end", "--values", "1"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("not sweepable"));
}

#[test]
fn usage_errors_exit_one() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(code(&aniso(tmp.path(), &[])), 1);
    assert_eq!(code(&aniso(tmp.path(), &["run"])), 1);
    assert_eq!(code(&aniso(tmp.path(), &["run", "--model", "nope"])), 1);
    assert_eq!(code(&aniso(tmp.path(), &["--help"])), 0);
    let out = Command::new(env!("CARGO_BIN_EXE_aniso"))
        .current_dir(tmp.path())
        .args(["validate-model", "--model", "burgers"])
        .env("ANISO_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(code(&out), 1);
}
