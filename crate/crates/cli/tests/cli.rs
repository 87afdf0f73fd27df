use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ris_unfold::unfolding_net::checkpoint;

const TOY: &str = r#"
schema_version = 1
seed = 5

[channel]
m = 2
n = 4

[sounding]
k = 4
n_w = 2

[training]
layers = 2
n_train = 64
epochs = 2
batch_size = 16

[evaluation]
n_test = 40
test_snrs_db = [inf]

[study]
overhead_k_unfold = [2, 3]
overhead_k_ls = 4
"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ris-unfold"))
}

fn run(args: &[&str], cwd: &Path) -> Output {
    bin()
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("run.toml");
    fs::write(&path, body).unwrap();
    path
}

fn csv_files(dir: &Path, prefix: &str) -> Vec<PathBuf> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| {
            let name = p.file_name().unwrap().to_str().unwrap();
            name.starts_with(prefix) && name.ends_with(".csv")
        })
        .collect();
    v.sort();
    v
}

fn nmse_column(csv: &Path) -> Vec<f64> {
    let text = fs::read_to_string(csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("curve,test_snr_db,nmse,n_samples"));
    lines
        .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
        .collect()
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "status {:?}\nstdout:\n{}\nstderr:\n{}",
        out.status,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn missing_config_exits_3_and_names_the_path() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&["train", "--config", "nowhere/c.toml"], tmp.path());
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nowhere/c.toml"));
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn unknown_config_key_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "schema_version = 1\n[channel]\nmm = 4\n");
    let out = run(&["train", "--config", cfg.to_str().unwrap()], tmp.path());
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("mm"));
}

#[test]
fn invalid_value_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "schema_version = 1\n[channel]\nangle_sine_range = [0.0, 2.0]\n",
    );
    let out = run(&["train", "--config", cfg.to_str().unwrap()], tmp.path());
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn unknown_flag_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(
        run(&["train", "--sead", "3"], tmp.path()).status.code(),
        Some(2)
    );
    assert_eq!(
        run(&["baseline", "--method", "unfold"], tmp.path())
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["study", "--name", "everything"], tmp.path())
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn baseline_ls_recovers_the_noiseless_toy_exactly() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), TOY);
    let out_dir = tmp.path().join("out");
    let out = run(
        &[
            "baseline",
            "--method",
            "ls",
            "--config",
            cfg.to_str().unwrap(),
            "--output-dir",
            out_dir.to_str().unwrap(),
        ],
        tmp.path(),
    );
    assert_ok(&out);
    let files = csv_files(&out_dir, "baseline-ls_");
    assert_eq!(files.len(), 1);
    let nmse = nmse_column(&files[0]);
    assert_eq!(nmse.len(), 1);
    assert!(nmse[0] <= 1e-20, "LS NMSE {}", nmse[0]);
}

#[test]
fn train_then_eval_round_trips_the_checkpoint() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg_dir = tempfile::tempdir().unwrap();
    let cfg = write_config(cfg_dir.path(), TOY);
    let cfg = cfg.to_str().unwrap();

    assert_ok(&run(
        &["train", "--config", cfg, "--output-dir", "out"],
        tmp.path(),
    ));
    let top: Vec<_> = fs::read_dir(tmp.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    assert_eq!(
        top,
        vec!["out"],
        "nothing is written outside the output directory"
    );

    let model = tmp.path().join("out/model.risu");
    let bytes = fs::read(&model).unwrap();
    assert_eq!(&bytes[..4], b"RISU");
    let history = fs::read_to_string(tmp.path().join("out/loss_history.csv")).unwrap();
    assert_eq!(history.lines().count(), 3);
    assert!(history.starts_with("epoch,learning_rate,train_nmse\n"));

    let params = checkpoint::load(&model).unwrap();
    assert_eq!(
        checkpoint::to_bytes(&params),
        bytes,
        "load then save reproduces the file"
    );

    assert_ok(&run(
        &[
            "eval",
            "--config",
            cfg,
            "--output-dir",
            "out",
            "--checkpoint",
            "out/model.risu",
        ],
        tmp.path(),
    ));
    let evals = csv_files(&tmp.path().join("out"), "eval_");
    assert_eq!(evals.len(), 1);
    let nmse = nmse_column(&evals[0]);
    assert!(nmse.len() == 1 && nmse[0].is_finite());
}

#[test]
fn corrupted_checkpoint_exits_4() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), TOY);
    let cfg = cfg.to_str().unwrap();
    assert_ok(&run(&["train", "--config", cfg], tmp.path()));
    let model = tmp.path().join("out/model.risu");
    let mut bytes = fs::read(&model).unwrap();
    bytes[20] ^= 0x40;
    fs::write(&model, bytes).unwrap();
    let out = run(&["eval", "--config", cfg], tmp.path());
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn seed_flag_changes_the_training_run() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), TOY);
    let cfg = cfg.to_str().unwrap();
    let model = |dir: &str, seed: &str| {
        assert_ok(&run(
            &[
                "train",
                "--config",
                cfg,
                "--seed",
                seed,
                "--output-dir",
                dir,
            ],
            tmp.path(),
        ));
        fs::read(tmp.path().join(dir).join("model.risu")).unwrap()
    };
    let a = model("a", "7");
    let b = model("b", "7");
    let c = model("c", "8");
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn overhead_study_emits_fifteen_rows_and_checkpoints() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        &TOY.replace("test_snrs_db = [inf]", "test_snrs_db = [0, 5, 10, 15, 20]"),
    );
    let cfg = cfg.to_str().unwrap();
    let out = run(
        &[
            "study", "--name", "overhead", "--config", cfg, "--jobs", "1",
        ],
        tmp.path(),
    );
    assert_ok(&out);

    let out_dir = tmp.path().join("out");
    let files = csv_files(&out_dir, "overhead_");
    assert_eq!(files.len(), 1);
    let text = fs::read_to_string(&files[0]).unwrap();
    assert_eq!(text.lines().count(), 1 + 3 * 5);
    let curves: Vec<&str> = text
        .lines()
        .skip(1)
        .step_by(5)
        .map(|l| l.split(',').next().unwrap())
        .collect();
    assert_eq!(curves, ["unfold-K2", "unfold-K3", "ls-K4"]);
    for label in ["unfold-K2", "unfold-K3"] {
        assert!(out_dir
            .join(format!("checkpoints/overhead/{label}.risu"))
            .exists());
    }
}

#[test]
fn gen_data_writes_train_and_test_sets() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        &TOY.replace("test_snrs_db = [inf]", "test_snrs_db = [0, 20]"),
    );
    assert_ok(&run(
        &["gen-data", "--config", cfg.to_str().unwrap()],
        tmp.path(),
    ));
    for name in ["train.risd", "test_0dB.risd", "test_20dB.risd"] {
        assert!(tmp.path().join("out").join(name).exists(), "{name} missing");
    }
}
