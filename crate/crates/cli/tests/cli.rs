//! End-to-end behavior of the `wustat` binary: exit codes, error reporting,
//! output-directory precedence, and manifest bookkeeping.

use std::path::Path;
use std::process::{Command, Output};

use sha2::{Digest, Sha256};

const BIN: &str = env!("CARGO_BIN_EXE_wustat");

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

const SMALL_CLT: &str = r#"
[process.Linear]
truncation = 64
[process.Linear.coeffs.Geometric]
rho = 0.5
[process.Linear.innovations]
law = "StandardNormal"
scale = 1.0

[kernel.Product]
transform = "Identity"

[weights.Delta]
k0 = 1

[experiment]
n_grid = [16, 32, 64]
replicates = 100
centering = "Analytic"
seed = 41
[experiment.scale.Catalog]
case = "SummableWeights"
"#;

fn run(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(BIN);
    cmd.args(args).env_remove("WUSTAT_OUT");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("config.toml");
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn help_and_version_exit_zero() {
    let help = run(&["--help"], &[]);
    assert!(help.status.success());
    assert!(String::from_utf8_lossy(&help.stdout).contains("Usage"));
    let version = run(&["--version"], &[]);
    assert!(version.status.success());
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let out = run(&["frobnicate"], &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_of(&out).contains("Usage"));
}

#[test]
fn a_config_file_is_required() {
    let out = run(&["clt"], &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_of(&out).contains("--config"));
}

#[test]
fn out_of_range_beta_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"
        [process.Linear]
        truncation = 64
        [process.Linear.coeffs.RegVar]
        beta = 1.2
        slowly_varying = "One"
        [process.Linear.innovations]
        law = "StandardNormal"
        scale = 1.0
        "#,
    );
    let out = run(&["--config", &cfg, "simulate"], &[]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr_of(&out);
    assert!(err.contains("beta") && err.contains("1.2"), "{err}");
}

#[test]
fn every_validation_error_is_reported_in_one_pass() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"
        [process.Linear]
        truncation = 64
        [process.Linear.coeffs.RegVar]
        beta = 1.2
        slowly_varying = "One"
        [process.Linear.innovations]
        law = "StandardNormal"
        scale = 1.0

        [experiment]
        n_grid = []
        replicates = 0
        centering = "Analytic"
        seed = 1
        scale = "RootWindow"
        "#,
    );
    let out = run(&["--config", &cfg, "clt"], &[]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr_of(&out);
    for needle in ["beta", "n_grid", "replicates"] {
        assert!(err.contains(needle), "missing `{needle}` in: {err}");
    }
}

#[test]
fn duplicate_sections_and_unknown_keys_are_schema_errors() {
    let dir = tempfile::tempdir().unwrap();
    let dup = write_config(dir.path(), "[experiment]\nn_grid = [8]\n[experiment]\nreplicates = 2\n");
    let out = run(&["--config", &dup, "clt"], &[]);
    assert_eq!(out.status.code(), Some(1));

    let unknown = write_config(dir.path(), "[output]\ndir = \"x\"\nbogus = 1\n");
    let out = run(&["--config", &unknown, "clt"], &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_of(&out).contains("bogus"));
}

#[test]
fn commands_list_every_missing_section() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[weights.Delta]\nk0 = 1\n");
    let out = run(&["--config", &cfg, "ustat"], &[]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr_of(&out);
    for section in ["process", "kernel", "experiment"] {
        assert!(err.contains(&format!("[{section}]")), "{err}");
    }
    assert!(!err.contains("[weights]"), "{err}");
}

#[test]
fn clt_writes_its_files_and_a_faithful_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_CLT);
    let out_dir = dir.path().join("results");
    let out = run(
        &["--config", &cfg, "--out", out_dir.to_str().unwrap(), "clt"],
        &[],
    );
    assert!(out.status.success(), "{}", stderr_of(&out));

    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["tool"], "wustat");
    assert_eq!(manifest["subcommand"], "clt");
    assert_eq!(manifest["seed"], 41);

    // The config digest is the digest of the file as given.
    let expect = sha256_hex(SMALL_CLT.as_bytes());
    assert_eq!(manifest["config_digest"], expect.as_str());

    // Every listed file exists, and its digest and size match the listing.
    let files = manifest["files"].as_array().unwrap();
    let names: Vec<&str> = files.iter().map(|f| f["path"].as_str().unwrap()).collect();
    for required in ["replicates.csv", "report.json", "qq.csv"] {
        assert!(names.contains(&required), "{names:?}");
    }
    for f in files {
        let bytes = std::fs::read(out_dir.join(f["path"].as_str().unwrap())).unwrap();
        assert_eq!(f["bytes"].as_u64().unwrap(), bytes.len() as u64);
        let digest = sha256_hex(&bytes);
        assert_eq!(f["sha256"], digest.as_str());
    }
}

#[test]
fn seed_override_changes_data_and_reruns_reproduce_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_CLT);
    let mut replicates = Vec::new();
    for (sub, extra) in [("a", None), ("b", None), ("c", Some("99"))] {
        let out_dir = dir.path().join(sub);
        let mut args = vec!["--config", cfg.as_str(), "--out"];
        args.push(out_dir.to_str().unwrap());
        if let Some(seed) = extra {
            args.extend(["--seed", seed]);
        }
        args.push("clt");
        let out = run(&args, &[]);
        assert!(out.status.success(), "{}", stderr_of(&out));
        replicates.push(std::fs::read(out_dir.join("replicates.csv")).unwrap());
    }
    assert_eq!(replicates[0], replicates[1], "same seed, same bytes");
    assert_ne!(replicates[0], replicates[2], "override must change the draw");
}

#[test]
fn output_directory_precedence_is_flag_env_config() {
    let dir = tempfile::tempdir().unwrap();
    let config_out = dir.path().join("from_config");
    let cfg = write_config(
        dir.path(),
        &format!(
            "[weights.Delta]\nk0 = 1\n\n[output]\ndir = \"{}\"\n",
            config_out.display()
        ),
    );
    // No flag, no env: the config's [output] dir wins.
    let out = run(&["--config", &cfg, "weights"], &[]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    assert!(config_out.join("window.csv").is_file());

    // Env beats config.
    let env_out = dir.path().join("from_env");
    let out = run(
        &["--config", &cfg, "weights"],
        &[("WUSTAT_OUT", env_out.to_str().unwrap())],
    );
    assert!(out.status.success());
    assert!(env_out.join("window.csv").is_file());

    // Flag beats both.
    let flag_out = dir.path().join("from_flag");
    let out = run(
        &["--config", &cfg, "--out", flag_out.to_str().unwrap(), "weights"],
        &[("WUSTAT_OUT", env_out.to_str().unwrap())],
    );
    assert!(out.status.success());
    assert!(flag_out.join("window.csv").is_file());
}

#[test]
fn unwritable_output_directory_is_a_runtime_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[weights.Delta]\nk0 = 1\n");
    // The config file itself occupies the target path, so the directory
    // cannot be created.
    let out = run(&["--config", &cfg, "--out", &cfg, "weights"], &[]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr_of(&out));
}

#[test]
fn thread_cap_must_be_positive() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[weights.Delta]\nk0 = 1\n");
    let out = run(&["--config", &cfg, "--threads", "0", "weights"], &[]);
    assert_eq!(out.status.code(), Some(1));

    let out_dir = dir.path().join("t2");
    let out = run(
        &["--config", &cfg, "--threads", "2", "--out", out_dir.to_str().unwrap(), "weights"],
        &[],
    );
    assert!(out.status.success(), "{}", stderr_of(&out));
}

#[test]
fn ustat_values_match_an_independent_evaluation_of_the_simulated_path() {
    use wustat_core::harness::evaluate_statistic;
    use wustat_core::kernels::{KernelSpec, Transform};
    use wustat_core::weights::WeightSpec;

    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_CLT);
    let sim_dir = dir.path().join("sim");
    let stat_dir = dir.path().join("stat");
    for (sub, out_dir) in [("simulate", &sim_dir), ("ustat", &stat_dir)] {
        let out = run(
            &["--config", &cfg, "--out", out_dir.to_str().unwrap(), sub],
            &[],
        );
        assert!(out.status.success(), "{sub}: {}", stderr_of(&out));
    }

    // Rebuild each path from paths.csv and evaluate the same statistic.
    let mut paths: std::collections::BTreeMap<usize, Vec<f64>> = Default::default();
    let mut rdr = csv::Reader::from_path(sim_dir.join("paths.csv")).unwrap();
    for row in rdr.records() {
        let row = row.unwrap();
        let n: usize = row[0].parse().unwrap();
        paths.entry(n).or_default().push(row[2].parse().unwrap());
    }
    let kernel = KernelSpec::Product { transform: Transform::Identity };
    let weights = WeightSpec::Delta { k0: 1 };

    let mut rdr = csv::Reader::from_path(stat_dir.join("ustat.csv")).unwrap();
    let mut checked = 0;
    for row in rdr.records() {
        let row = row.unwrap();
        let n: usize = row[0].parse().unwrap();
        let reported: f64 = row[1].parse().unwrap();
        let path = &paths[&n];
        assert_eq!(path.len(), n);
        let path = wustat_core::process::SamplePath::from_values(path.clone());
        let eval = evaluate_statistic(&path, &kernel, &weights, false).unwrap();
        assert!(
            (eval.value - reported).abs() <= 1e-12 * reported.abs().max(1.0),
            "n = {n}: {} vs {reported}",
            eval.value
        );
        checked += 1;
    }
    assert_eq!(checked, 3);
}
