use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use holo_restore::imageio;
use holo_restore::patterns;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_holo-restore"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

const SMALL: &str = "\
# 40x40 grid, 4x4 blocks of 10 px
pixels_x = 40
pixels_y = 40
blocks_x = 4
blocks_y = 4
n_train_images = 3
n_eval_images = 1
epochs = 4
batch_size = 8
n_hidden = 8
";

fn write_config(dir: &Path) -> String {
    let path = dir.join("small.cfg");
    fs::write(&path, SMALL).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn full_command_chain() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let out = dir.path().join("run");
    let out_s = out.to_str().unwrap();

    let msg = ok(&["gen-dataset", "--config", &cfg, "--seed", "5", "--out", out_s]);
    assert!(msg.contains("12 training subpatterns"), "{msg}");
    let manifest = fs::read_to_string(out.join("dataset/manifest.txt")).unwrap();
    assert!(manifest.contains("subpatterns = 12"));
    assert_eq!(manifest.lines().filter(|l| l.starts_with("pair ")).count(), 4);

    ok(&["train", "--config", &cfg, "--seed", "5", "--out", out_s]);
    let csv = fs::read_to_string(out.join("loss.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "epoch,mean_loss");
    assert_eq!(lines.len(), 1 + 4);
    for (i, line) in lines[1..].iter().enumerate() {
        let (epoch, value) = line.split_once(',').unwrap();
        assert_eq!(epoch.parse::<usize>().unwrap(), i + 1);
        assert!(!value.contains('e'));
        assert!(value.parse::<f64>().unwrap().is_finite());
        let digits = value.chars().filter(char::is_ascii_digit).collect::<String>();
        assert!(digits.trim_start_matches('0').len() >= 12, "{value}");
    }
    let model = fs::read(out.join("model.hrae")).unwrap();
    assert_eq!(&model[..4], b"HRAE");

    // Retraining with the same seed is bit-identical.
    let again = dir.path().join("again");
    fs::create_dir_all(&again).unwrap();
    let again_s = again.to_str().unwrap();
    ok(&[
        "train",
        "--config",
        &cfg,
        "--seed",
        "5",
        "--out",
        again_s,
        "--dataset",
        out.join("dataset/manifest.txt").to_str().unwrap(),
    ]);
    assert_eq!(fs::read(again.join("model.hrae")).unwrap(), model);

    let raw = out.join("dataset/eval/reconstruction_0004.pgm");
    let original = out.join("dataset/eval/original_0004.pgm");
    let restored = out.join("restored.pgm");
    ok(&[
        "restore",
        "--config",
        &cfg,
        "--model",
        out.join("model.hrae").to_str().unwrap(),
        "--input",
        raw.to_str().unwrap(),
        "--output",
        restored.to_str().unwrap(),
        "--reference",
        original.to_str().unwrap(),
    ]);
    let restored_img = imageio::read_image(&restored).unwrap();
    assert_eq!((restored_img.width(), restored_img.height()), (40, 40));
    assert!(out.join("restored_diff.pgm").exists());
    let pgm = fs::read(&restored).unwrap();
    assert!(pgm.starts_with(b"P5\n40 40\n65535\n"));
    assert_eq!(pgm.len(), b"P5\n40 40\n65535\n".len() + 2 * 1600);

    let report = ok(&[
        "evaluate",
        "--original",
        original.to_str().unwrap(),
        "--raw",
        raw.to_str().unwrap(),
        "--restored",
        restored.to_str().unwrap(),
        "--block-px",
        "10",
    ]);
    assert!(report.contains("mse_raw,mse_restored,ber_raw,ber_restored"));
}

#[test]
fn identical_images_evaluate_to_zero() {
    let dir = tempfile::tempdir().unwrap();
    let img = patterns::checkerboard(4, 4, 5).unwrap();
    let p = dir.path().join("a.pgm");
    imageio::write_pgm(&p, &img).unwrap();
    let s = p.to_str().unwrap();
    let report = ok(&["evaluate", "--original", s, "--raw", s, "--restored", s, "--block-px", "5"]);
    let csv = report.lines().last().unwrap();
    let values: Vec<f64> = csv.split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(values, vec![0.0; 4]);
}

#[test]
fn simulate_external_binary_image() {
    let dir = tempfile::tempdir().unwrap();
    let board = patterns::checkerboard(4, 4, 10).unwrap();
    let input = dir.path().join("qr.png");
    imageio::write_image(&input, &board).unwrap();
    let output = dir.path().join("qr_recon.pgm");
    ok(&[
        "simulate",
        "--input",
        input.to_str().unwrap(),
        "--output",
        output.to_str().unwrap(),
    ]);
    let recon = imageio::read_image(&output).unwrap();
    assert_eq!(recon.max(), 1.0);
}

#[test]
fn errors_exit_nonzero_with_one_line() {
    let dir = tempfile::tempdir().unwrap();
    let bad_cfg = dir.path().join("bad.cfg");
    fs::write(&bad_cfg, "pixel_x = 3\n").unwrap();
    let out = run(&["gen-dataset", "--config", bad_cfg.to_str().unwrap()]);
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.trim_end().lines().count(), 1, "{err}");
    assert!(err.contains("unknown key"));

    let cfg = write_config(dir.path());
    let zero = dir.path().join("zero.cfg");
    fs::write(&zero, format!("{SMALL}").replace("n_train_images = 3", "n_train_images = 0")).unwrap();
    let out = run(&["gen-dataset", "--config", zero.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(!out.status.success());

    let out = run(&[
        "train",
        "--config",
        &cfg,
        "--dataset",
        dir.path().join("missing.txt").to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn restore_rejects_mismatched_model() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("m.hrae");
    holo_restore::autoencoder::save_model(&model, &holo_restore::autoencoder::AeParams::zeros(16, 3)).unwrap();
    let img = dir.path().join("i.pgm");
    imageio::write_pgm(&img, &patterns::checkerboard(2, 2, 10).unwrap()).unwrap();
    // Default tile size is 20, the model expects 4x4 tiles.
    let out = run(&[
        "restore",
        "--model",
        model.to_str().unwrap(),
        "--input",
        img.to_str().unwrap(),
        "--output",
        dir.path().join("o.pgm").to_str().unwrap(),
    ]);
    assert!(!out.status.success());
}
