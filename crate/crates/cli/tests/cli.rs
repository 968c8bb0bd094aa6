use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

use bvqa::media_io::{synthesize_clip, write_y4m, Colorspace, SynthSpec};

const CONFIG: &str = "fit_min_samples=10\nsub_images_per_frame=1\n";

fn bvqa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bvqa"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert!(
        o.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn value(out: &str, key: &str) -> String {
    out.lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("missing {key} in\n{out}"))
        .to_string()
}

fn write_clip(path: &Path, spec: &SynthSpec) {
    let (clip, _) = synthesize_clip(spec).unwrap();
    let mut bytes = Vec::new();
    write_y4m(&clip, Colorspace::C444, &mut bytes).unwrap();
    fs::write(path, bytes).unwrap();
}

struct Fixture {
    dir: tempfile::TempDir,
    model: PathBuf,
    train_stdout: String,
}

/// A synthetic dataset and one model trained on it, shared by the tests.
fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let data = dir.path().join("data");
        let d = data.to_str().unwrap();
        stdout(&bvqa(&[
            "synth", "--out", d, "--count", "40", "--seed", "1",
        ]));
        let cfg = dir.path().join("cfg.txt");
        fs::write(&cfg, CONFIG).unwrap();
        let model = dir.path().join("a.gbvq");
        let out = stdout(&bvqa(&[
            "train",
            "--manifest",
            data.join("manifest.csv").to_str().unwrap(),
            "--config",
            cfg.to_str().unwrap(),
            "--seed",
            "3",
            "--out",
            model.to_str().unwrap(),
        ]));
        Fixture {
            dir,
            model,
            train_stdout: out,
        }
    })
}

#[test]
fn missing_manifest_exits_2_and_names_the_path() {
    let o = bvqa(&[
        "train",
        "--manifest",
        "/no/such/list.csv",
        "--out",
        "/tmp/x.gbvq",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("/no/such/list.csv"));
}

#[test]
fn train_logs_dims_and_writes_model() {
    let f = fixture();
    let out = &f.train_stdout;
    assert_eq!(value(out, "dim.temporal"), "420");
    assert_eq!(value(out, "selected"), "800");
    assert_eq!(value(out, "train_videos"), "36");
    assert_eq!(value(out, "val_videos"), "4");
    let size: u64 = value(out, "model_size").parse().unwrap();
    assert_eq!(fs::metadata(&f.model).unwrap().len(), size);
    let info = stdout(&bvqa(&["inspect", "--model", f.model.to_str().unwrap()]));
    assert_eq!(value(&info, "config.fit_min_samples"), "10");
    assert!(info.contains("dims="), "{info}");
}

#[test]
fn retraining_with_same_seed_is_byte_identical() {
    let f = fixture();
    let again = f.dir.path().join("b.gbvq");
    stdout(&bvqa(&[
        "train",
        "--manifest",
        f.dir.path().join("data/manifest.csv").to_str().unwrap(),
        "--config",
        f.dir.path().join("cfg.txt").to_str().unwrap(),
        "--seed",
        "3",
        "--out",
        again.to_str().unwrap(),
    ]));
    assert_eq!(fs::read(&f.model).unwrap(), fs::read(&again).unwrap());
}

#[test]
fn clean_clip_outscores_noisy_twin_and_scores_repeat() {
    let f = fixture();
    let clean = f.dir.path().join("clean.y4m");
    let noisy = f.dir.path().join("noisy.y4m");
    write_clip(&clean, &SynthSpec::new(0.0, 0.0, 99));
    write_clip(&noisy, &SynthSpec::new(20.0, 0.0, 99));
    let m = f.model.to_str().unwrap();
    let score = |p: &Path| {
        let out = stdout(&bvqa(&["predict", "--model", m, p.to_str().unwrap()]));
        (value(&out, "score").parse::<f64>().unwrap(), out)
    };
    let (a, out_a) = score(&clean);
    let (b, _) = score(&noisy);
    assert!(a > b, "clean {a} vs noisy {b}");
    assert_eq!(score(&clean).1, out_a);
    assert!(out_a.contains("sub_video.0="));
}

#[test]
fn short_clip_exits_4() {
    let f = fixture();
    let short = f.dir.path().join("short.y4m");
    write_clip(
        &short,
        &SynthSpec::new(1.0, 0.0, 5).with_geometry(320, 320, 20),
    );
    let o = bvqa(&[
        "predict",
        "--model",
        f.model.to_str().unwrap(),
        short.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).contains("too short"));
}

#[test]
fn version_mismatch_exits_3() {
    let f = fixture();
    let mut bytes = fs::read(&f.model).unwrap();
    bytes[4..8].copy_from_slice(&9u32.to_le_bytes());
    let bad = f.dir.path().join("v9.gbvq");
    fs::write(&bad, bytes).unwrap();
    let clip = f.dir.path().join("data/synth_0000.y4m");
    let o = bvqa(&[
        "predict",
        "--model",
        bad.to_str().unwrap(),
        clip.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn bench_reports_file_size_and_stage_times() {
    let f = fixture();
    let clip = f.dir.path().join("data/synth_0001.y4m");
    let out = stdout(&bvqa(&[
        "bench",
        "--model",
        f.model.to_str().unwrap(),
        clip.to_str().unwrap(),
        "--reps",
        "2",
    ]));
    let size: u64 = value(&out, "model_size").parse().unwrap();
    assert_eq!(size, fs::metadata(&f.model).unwrap().len());
    for stage in [
        "cropping",
        "representations",
        "selection",
        "regression",
        "ensembling",
        "total",
    ] {
        let t: f64 = value(&out, &format!("time.{stage}")).parse().unwrap();
        assert!(t >= 0.0);
    }
    assert!(value(&out, "flops.total").parse::<f64>().unwrap() > 0.0);
}

#[test]
fn evaluate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.txt");
    fs::write(&cfg, format!("{CONFIG}min_samples_leaf=2\n")).unwrap();
    let args = [
        "--threads",
        "2",
        "evaluate",
        "--synthetic",
        "30",
        "--size",
        "320x320x30",
        "--config",
        cfg.to_str().unwrap(),
        "--runs",
        "1",
        "--seed",
        "7",
    ];
    let a = stdout(&bvqa(&args));
    assert_eq!(a, stdout(&bvqa(&args)));
    assert!(a.contains("median_srocc="));
}
