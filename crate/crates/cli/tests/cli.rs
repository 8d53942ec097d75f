use horolab_cli::artifacts::{Summary, SCHEMA_VERSION};
use horolab_cli::config::{ConfigError, ExperimentConfig};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scratch_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("horolab-cli-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn horolab(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_horolab"))
        .arg("--out")
        .arg(out)
        .args(args)
        .env_remove("HOROLAB_OUT")
        .output()
        .unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn defaults_fill_in_missing_fields() {
    let cfg = ExperimentConfig::parse("name = \"x\"\nseed = 3\n[experiment]\nkind = \"growth\"\n").unwrap();
    assert_eq!(cfg.max_len, 12);
    assert_eq!(cfg.experiment.kind(), "growth");
    assert_eq!(cfg.tolerances.rho_tol, 1e-4);
    cfg.validate().unwrap();
}

#[test]
fn seed_is_mandatory_and_unknown_fields_are_rejected() {
    let missing = ExperimentConfig::parse("name = \"x\"\n[experiment]\nkind = \"checks\"\n");
    assert!(matches!(missing, Err(ConfigError::Parse(_))));
    let typo = ExperimentConfig::parse("name = \"x\"\nseed = 1\n[tolerances]\nrho_toll = 1e-3\n[experiment]\nkind = \"checks\"\n");
    assert!(matches!(typo, Err(ConfigError::Parse(_))));
}

#[test]
fn out_of_range_settings_fail_validation() {
    let base = "name = \"x\"\nseed = 1\n";
    for body in [
        "max_len = 17\n[experiment]\nkind = \"checks\"\n",
        "max_len = 4\n[experiment]\nkind = \"checks\"\n",
        "[experiment]\nkind = \"growth\"\nr_grid = [4.0, 2.0]\n",
        "[experiment]\nkind = \"star\"\nradii = [-1.0, 2.0]\n",
        "[tolerances]\nweak = 0.0\n[experiment]\nkind = \"checks\"\n",
    ] {
        let cfg = ExperimentConfig::parse(&format!("{base}{body}")).unwrap();
        assert!(matches!(cfg.validate(), Err(ConfigError::Invalid(_))), "{body}");
    }
}

#[test]
fn shipped_configs_are_valid() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            ExperimentConfig::load(&path).unwrap().validate().unwrap();
            n += 1;
        }
    }
    assert!(n >= 4);
}

#[test]
fn invalid_config_exits_with_code_2() {
    let dir = scratch_dir("invalid");
    let cfg = write_config(&dir, "bad.toml", "name = \"bad\"\nseed = 1\n[experiment]\nkind = \"growth\"\nr_grid = [-1.0, 2.0]\n");
    let out = horolab(&dir.join("out"), &["run", &cfg]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!dir.join("out/bad").exists());
    let missing = horolab(&dir.join("out"), &["run", "/nonexistent/horolab.toml"]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn report_on_an_empty_directory() {
    let dir = scratch_dir("empty");
    let out = horolab(&dir, &["report"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&out.stdout), "nothing to report\n");
}

#[test]
fn group_validation() {
    let dir = scratch_dir("group");
    assert_eq!(horolab(&dir, &["group", "validate"]).status.code(), Some(0));
    let overlapping = write_config(
        &dir,
        "overlap.toml",
        "name = \"o\"\nseed = 1\n[group]\nrank = 2\ncenters = [[-2.0, 2.0], [-2.5, 6.0]]\nradii = [[1.0, 1.0], [1.0, 1.0]]\n[experiment]\nkind = \"checks\"\n",
    );
    assert_eq!(horolab(&dir, &["group", "validate", &overlapping]).status.code(), Some(2));
}

#[test]
fn render_writes_the_expected_drawings() {
    let dir = scratch_dir("render");
    let cfg = write_config(
        &dir,
        "render.toml",
        "name = \"pic\"\nseed = 1\nmax_len = 6\n[experiment]\nkind = \"render\"\norbit_len = 5\ndisk_depth = 3\n",
    );
    let out = horolab(&dir.join("out"), &["run", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let run = dir.join("out/pic");
    let limit = std::fs::read_to_string(run.join("limit_set.svg")).unwrap();
    assert_eq!(limit.matches("class=\"disk d1\"").count(), 4);
    assert_eq!(limit.matches("class=\"disk d3\"").count(), 36);
    let orbit = std::fs::read_to_string(run.join("orbit.svg")).unwrap();
    assert_eq!(orbit.matches("class=\"orbit ").count(), horolab::group::word_count(2, 5));

    let summary: Summary = serde_json::from_slice(&std::fs::read(run.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary.schema_version, SCHEMA_VERSION);
    assert_eq!(summary.experiment, "render");
    for f in &summary.files {
        assert!(run.join(f).exists(), "{f}");
    }

    let report = horolab(&dir.join("out"), &["report"]);
    assert_eq!(report.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&report.stdout).contains("pic"));
}

#[test]
fn checks_run_passes_its_assertions() {
    let dir = scratch_dir("checks");
    let cfg = write_config(
        &dir,
        "checks.toml",
        "name = \"quick\"\nseed = 7\nmax_len = 8\n[experiment]\nkind = \"checks\"\nsamples = 200\n",
    );
    let out = horolab(&dir.join("out"), &["checks", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let summary: Summary = serde_json::from_slice(&std::fs::read(dir.join("out/quick/summary.json")).unwrap()).unwrap();
    assert!(summary.assertions_pass());
    assert!(summary.pressure.is_some());
}
