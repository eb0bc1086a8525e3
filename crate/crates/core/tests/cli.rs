//! End-to-end runs of the `sbh-sim` binary.

use std::path::Path;
use std::process::{Command, Output};

const SMALL: [&str; 6] = [
    "--set",
    "layout.n_sites=1",
    "--set",
    "ues_per_sector=4",
    "--set",
    "slots_per_drop=1",
];

fn sim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sbh-sim"))
        .args(args)
        .env("SBH_WORKERS", "1")
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn missing_config_and_preset_prints_usage() {
    let o = sim(&[]);
    assert_eq!(o.status.code(), Some(1));
    let e = stderr(&o);
    assert!(e.contains("Usage"), "{e}");
    assert!(e.contains("fig5_sweep"), "{e}");
}

#[test]
fn bad_flag_is_a_config_error() {
    assert_eq!(sim(&["--preset", "nope"]).status.code(), Some(1));
    assert_eq!(sim(&["--help"]).status.code(), Some(0));
}

#[test]
fn invalid_values_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.toml", "alpha = 1.5\n");
    let o = sim(&["--config", &bad, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("alpha"));

    let unknown = write(dir.path(), "unknown.toml", "seed = 1\n\nfooo = 2\n");
    let o = sim(&["--config", &unknown]);
    assert_eq!(o.status.code(), Some(1));
    let e = stderr(&o);
    assert!(e.contains("fooo") && e.contains("line 3"), "{e}");

    let o = sim(&["--preset", "fig4_random_4", "--sweep-alpha", "0:1"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn placement_failure_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["--preset", "fig4_random_16", "--drops", "1", "--set", "layout.min_sc_sc_distance=300"];
    args.extend(SMALL);
    args.extend(["--out", dir.path().to_str().unwrap()]);
    let o = sim(&args);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn config_run_writes_bundle_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.toml", "mode = \"sbh_random\"\nscs_per_sector = 4\n");
    let outs = [dir.path().join("a"), dir.path().join("b")];
    for (i, out) in outs.iter().enumerate() {
        let workers = if i == 0 { "1" } else { "2" };
        let mut args = vec!["--config", &cfg, "--drops", "2", "--seed", "9", "--workers", workers];
        args.extend(SMALL);
        args.extend(["--sweep-alpha", "0:1:0.5", "--quiet", "--out", out.to_str().unwrap()]);
        let o = sim(&args);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let stdout = String::from_utf8_lossy(&o.stdout);
        assert!(stdout.contains("p50"), "{stdout}");
    }
    for f in ["cdf.csv", "percentiles.csv", "manifest.json"] {
        let a = std::fs::read(outs[0].join(f)).unwrap();
        assert_eq!(a, std::fs::read(outs[1].join(f)).unwrap(), "{f}");
    }
    let pct = std::fs::read_to_string(outs[0].join("percentiles.csv")).unwrap();
    assert!(pct.starts_with("scenario,alpha,p5,p50,p95\n"));
    assert!(pct.contains("run_sweep,0.5,"));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(outs[0].join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["runs"][0]["seed"], 9);
    assert_eq!(manifest["runs"][0]["config"]["n_drops"], 2);
}

#[test]
fn compare_preset_emits_four_series() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["--preset", "fig6_compare", "--drops", "1", "--quiet"];
    args.extend(SMALL);
    args.extend(["--out", dir.path().to_str().unwrap()]);
    let o = sim(&args);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let cdf = std::fs::read_to_string(dir.path().join("cdf.csv")).unwrap();
    let mut series: Vec<&str> = cdf.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    series.dedup();
    assert_eq!(series, vec!["da_r1", "da_r3", "sbh_alpha_0.5", "sbh_alpha_opt"]);
}

#[test]
fn link_tables_can_be_dumped() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["--preset", "fig4_adhoc_d5_patch", "--drops", "1", "--dump-links", "0", "--quiet"];
    args.extend(SMALL);
    args.extend(["--out", dir.path().to_str().unwrap()]);
    let o = sim(&args);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for f in ["layout.json", "macro_to_sc.csv", "sc_to_ue.csv"] {
        assert!(dir.path().join(format!("fig4_adhoc_d5_patch_drop0_{f}")).exists(), "{f}");
    }
}

#[test]
fn shipped_configs_load() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let example = sbh_core::cli::load_config(Some(&dir.join("example.toml")), &[]).unwrap();
    assert_eq!(example.alpha_grid.as_ref().map(Vec::len), Some(5));
    assert_eq!(example.propagation, sbh_core::config::PropagationConfig::default());
    let quick = sbh_core::cli::load_config(Some(&dir.join("quick.toml")), &[]).unwrap();
    assert_eq!(quick.layout.n_sites, 7);
}
