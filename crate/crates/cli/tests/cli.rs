use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use drleak::datasets::{synth_digits, write_idx};
use drleak::shadow::ShadowSet;

fn drleak(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_drleak"))
        .args(args)
        .current_dir(cwd)
        .env_remove("DRLEAK_SEED")
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

const SMALL_NET: [&str; 6] = ["--mlp-hidden", "16", "--lr", "1e-3", "--max-epochs", "4"];

#[test]
fn embed_writes_one_row_per_point() {
    let dir = tempfile::tempdir().unwrap();
    let out = drleak(
        &[
            "embed",
            "--method",
            "pca",
            "--input",
            "synthetic:50:7",
            "--out",
            "e.csv",
        ],
        dir.path(),
    );
    ok(&out);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("method=pca") && stdout.contains("seed=0") && stdout.contains("wall_time_s="));
    let csv = fs::read_to_string(dir.path().join("e.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("x,y"));
    assert_eq!(csv.lines().count(), 51);
}

#[test]
fn deterministic_and_randomized_embeddings() {
    let dir = tempfile::tempdir().unwrap();
    let run = |method: &str, seed: &str, out: &str| {
        ok(&drleak(
            &[
                "embed",
                "--method",
                method,
                "--input",
                "synthetic:30:1",
                "--seed",
                seed,
                "--out",
                out,
            ],
            dir.path(),
        ));
        fs::read(dir.path().join(out)).unwrap()
    };
    assert_eq!(run("pca", "1", "a.csv"), run("pca", "2", "b.csv"));
    assert_ne!(run("tsne", "1", "c.csv"), run("tsne", "2", "d.csv"));
}

#[test]
fn seed_falls_back_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_drleak"))
        .args([
            "embed",
            "--method",
            "srp",
            "--input",
            "synthetic:10:1",
            "--out",
            "e.csv",
        ])
        .current_dir(dir.path())
        .env("DRLEAK_SEED", "41")
        .output()
        .unwrap();
    ok(&out);
    assert!(String::from_utf8_lossy(&out.stdout).contains("seed=41"));
}

#[test]
fn unknown_method_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = drleak(&["embed", "--method", "lda", "--input", "synthetic:10:1"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "usage");
    assert_eq!(err["exit_code"], 2);
}

#[test]
fn corrupt_idx_is_format_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut labels = vec![0, 0, 8, 1, 0, 0, 0, 2];
    labels.extend([3, 4]);
    fs::write(dir.path().join("labels.idx"), &labels).unwrap();
    let out = drleak(&["embed", "--method", "pca", "--input", "labels.idx"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("expected image magic"));

    let mut bytes = Vec::new();
    write_idx(&synth_digits(4, 0).unwrap(), &mut bytes).unwrap();
    fs::write(dir.path().join("cut.idx"), &bytes[..bytes.len() - 10]).unwrap();
    let out = drleak(&["embed", "--method", "pca", "--input", "cut.idx"], dir.path());
    assert_eq!(out.status.code(), Some(3));

    fs::write(dir.path().join("good.idx"), &bytes).unwrap();
    ok(&drleak(
        &["embed", "--method", "pca", "--input", "good.idx", "--out", "e.csv"],
        dir.path(),
    ));
}

#[test]
fn shadow_writes_loadable_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "shadow",
        "--method",
        "umap",
        "--input",
        "synthetic:40:2",
        "--known-size",
        "5",
        "--public-size",
        "12",
        "--out",
        "s.drsh",
        "--csv",
        "s.csv",
    ];
    ok(&drleak(&args, dir.path()));
    let set = ShadowSet::load(fs::File::open(dir.path().join("s.drsh")).unwrap()).unwrap();
    assert_eq!((set.len(), set.n_points, set.dim), (12, 6, 64));
    assert_eq!(
        fs::read_to_string(dir.path().join("s.csv")).unwrap().lines().count(),
        13
    );
}

#[test]
fn attack_grid_from_config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("grid.cfg"),
        "[data]\ninput = synthetic:60:3\n\n[experiment]\nmethods = pca, srp\nknown_sizes = 4, 6\nrepeats = 3\n\
         public_size = 30\nseed = 5\n\n[net]\nmlp_hidden = 16\nlr = 1e-3\nmax_epochs = 50\n\n[output]\ndir = run\n",
    )
    .unwrap();
    ok(&drleak(
        &["attack", "--config", "grid.cfg", "--repeats", "2", "--max-epochs", "3"],
        dir.path(),
    ));
    let run = dir.path().join("run");
    let cells: Vec<_> = fs::read_dir(run.join("cells")).unwrap().collect();
    assert_eq!(cells.len(), 8);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(run.join("manifest.json")).unwrap()).unwrap();
    assert!(manifest["config"].as_str().unwrap().contains("max_epochs=3"));
    assert_eq!(manifest["seed"], 5);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(run.join("report.json")).unwrap()).unwrap();
    assert_eq!(report.as_array().unwrap().len(), 8);

    fs::remove_file(run.join("grid.csv")).unwrap();
    let out = drleak(&["report", "--dir", "run"], dir.path());
    ok(&out);
    let grid = fs::read_to_string(run.join("grid.csv")).unwrap();
    let lines: Vec<&str> = grid.lines().collect();
    assert_eq!(lines[0], "method,4,6");
    assert_eq!(lines.len(), 3);
    assert!(lines[1..].iter().all(|l| l.split(',').count() == 3 && l.contains('±')));
}

#[test]
fn attack_reruns_are_byte_identical_across_job_counts() {
    let dir = tempfile::tempdir().unwrap();
    let mut base = vec![
        "attack",
        "--input",
        "synthetic:50:1",
        "--methods",
        "pca,tsne",
        "--repeats",
        "2",
        "--public-size",
        "20",
        "--known-sizes",
        "5",
    ];
    base.extend(SMALL_NET);
    let mut a = base.clone();
    a.extend(["--out", "a", "--jobs", "1"]);
    let mut b = base.clone();
    b.extend(["--out", "b", "--jobs", "3"]);
    ok(&drleak(&a, dir.path()));
    ok(&drleak(&b, dir.path()));
    for f in ["aggregate.csv", "report.csv", "report.json"] {
        assert_eq!(
            fs::read(dir.path().join("a").join(f)).unwrap(),
            fs::read(dir.path().join("b").join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn attack_exports_reconstructions() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec![
        "attack",
        "--input",
        "synthetic:40:1",
        "--methods",
        "pca",
        "--repeats",
        "1",
        "--public-size",
        "20",
        "--known-sizes",
        "4",
        "--pgm",
        "--out",
        "r",
    ];
    args.extend(SMALL_NET);
    ok(&drleak(&args, dir.path()));
    let recon = fs::read(dir.path().join("r/reconstructions/pca_k4_r0.f32")).unwrap();
    assert_eq!(recon.len(), 2 * 64 * 4);
    let pgm = fs::read(dir.path().join("r/reconstructions/pca_k4_r0_000.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5\n8 8\n255\n"));
    assert!(dir.path().join("r/reconstructions/truth_001.pgm").exists());
}

#[test]
fn defend_writes_divergence_curve() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec![
        "defend",
        "--input",
        "synthetic:40:1",
        "--methods",
        "pca",
        "--repeats",
        "1",
        "--public-size",
        "20",
        "--known-sizes",
        "4",
        "--sigmas",
        "0,16",
        "--out",
        "d",
    ];
    args.extend(SMALL_NET);
    ok(&drleak(&args, dir.path()));
    let csv = fs::read_to_string(dir.path().join("d/divergence.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(
        lines[0],
        "sigma,divergence_eq12,divergence_per_dim,method,known_size,seed"
    );
    assert!(lines[1].starts_with("0,0,0,pca,4,"));
    assert!(lines[2].starts_with(&format!("{},", 16.0 / 255.0)));
    assert!(dir.path().join("d/manifest.json").exists());
}

#[test]
fn missing_output_and_small_datasets_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = drleak(&["attack", "--input", "synthetic:40:1", "--methods", "pca"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let out = drleak(
        &["attack", "--input", "synthetic:10:1", "--methods", "pca", "--out", "x"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("required"));
}
