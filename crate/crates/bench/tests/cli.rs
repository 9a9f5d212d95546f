use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn mismc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mismc"))
        .args(args)
        .env("MISMC_LOG", "error")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

const SMALL_COMPLEXITY: &str = r#"
seed = 11

[model]
kind = "toy1d"

[complexity]
estimators = ["MLSMC-RE", "MISMC-SN-TP", "SMC"]
eps = [0.2, 0.1]
repeats = 3
"#;

#[test]
fn unknown_config_field_exits_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.toml", "seed = 1\nbogus = 2\n[model]\nkind = \"toy1d\"\n");
    let out = mismc(&["--out-dir", dir.path().to_str().unwrap(), "reference", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn invalid_ladder_exits_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let body = SMALL_COMPLEXITY.replace("[0.2, 0.1]", "[0.1, 0.2]");
    let cfg = write_config(dir.path(), "ladder.toml", &body);
    let out = mismc(&["--out-dir", dir.path().to_str().unwrap(), "complexity", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_config_file_exits_with_io_code() {
    let out = mismc(&["reference", "--config", "/nonexistent/mismc.toml"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn overflowing_likelihood_exits_with_numerical_code_and_index() {
    let dir = tempfile::tempdir().unwrap();
    let body = "seed = 1\n[model]\nkind = \"toy1d\"\nnoise_sd = 1e-300\n[rates]\nsamples = 100\nbatches = 1\n";
    let cfg = write_config(dir.path(), "overflow.toml", body);
    let out = mismc(&["--out-dir", dir.path().to_str().unwrap(), "rates", "--config", &cfg]);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert_eq!(out.status.code(), Some(3), "{stderr}");
    assert!(stderr.contains("numerical failure at index ("), "{stderr}");
}

#[test]
fn generate_data_writes_a_readable_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let out = mismc(&["--out-dir", dir.path().to_str().unwrap(), "--seed", "3", "generate-data", "--model", "elliptic2d"]);
    assert!(out.status.success());
    let text = fs::read_to_string(dir.path().join("elliptic2d.csv")).unwrap();
    assert_eq!(text.lines().count(), 5);

    let out = mismc(&["generate-data", "--model", "heat3d"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn complexity_outputs_are_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.toml", SMALL_COMPLEXITY);
    let mut outputs = Vec::new();
    for threads in ["1", "2", "1"] {
        let out_dir = dir.path().join(format!("out-{threads}-{}", outputs.len()));
        let out = mismc(&["--threads", threads, "--out-dir", out_dir.to_str().unwrap(), "complexity", "--config", &cfg]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let csv = fs::read(out_dir.join("toy1d_complexity.csv")).unwrap();
        let summary = fs::read(out_dir.join("toy1d_complexity_summary.csv")).unwrap();
        outputs.push((csv, summary));
    }
    assert!(outputs.windows(2).all(|w| w[0] == w[1]));
    let rows = String::from_utf8(outputs[0].0.clone()).unwrap().lines().count() - 1;
    assert_eq!(rows, 3 * 2 * 3);
}
