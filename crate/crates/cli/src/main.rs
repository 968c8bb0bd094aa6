//! `bvqa` command-line front end. Output is `key=value`, one per line.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bvqa::config::RunConfig;
use bvqa::evaluation::{
    benchmark, load_samples, run_protocol, video_crop_seed, ManifestSource, SyntheticSource,
    VideoSource,
};
use bvqa::media_io::{
    load_manifest, read_video, synthesize_clip, write_y4m, Colorspace, DatasetManifest,
    ManifestEntry, Split,
};
use bvqa::persistence;
use bvqa::pipeline::train_model;
use bvqa::representations::Kind;
use bvqa::seed::{derive_seed, string_key};
use bvqa::{Error, Real, Result, TrainedModel};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "bvqa",
    version,
    about = "No-reference video quality assessment"
)]
struct Cli {
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Fit a model on the train/val entries of a manifest.
    Train {
        #[command(flatten)]
        data: Data,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the crop and training seeds.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score one video.
    Predict {
        #[arg(long)]
        model: PathBuf,
        video: PathBuf,
        #[arg(long, value_parser = parse_geometry)]
        geometry: Option<(usize, usize)>,
    },
    /// Repeated random-split evaluation.
    Evaluate {
        #[command(flatten)]
        data: Data,
        /// Use this many generated clips instead of a manifest.
        #[arg(long, conflicts_with = "manifest")]
        synthetic: Option<usize>,
        /// Generated clip size `WxHxF`.
        #[arg(long, default_value = "320x320x30", value_parser = parse_size)]
        size: (usize, usize, usize),
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 10)]
        runs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Time the scoring of one video and estimate its operation count.
    Bench {
        #[arg(long)]
        model: PathBuf,
        video: PathBuf,
        #[arg(long, value_parser = parse_geometry)]
        geometry: Option<(usize, usize)>,
        #[arg(long, default_value_t = 5)]
        reps: usize,
        /// Use the worker pool instead of a single thread.
        #[arg(long)]
        parallel: bool,
    },
    /// Write a synthetic labelled dataset (Y4M clips plus manifest.csv).
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 60)]
        count: usize,
        #[arg(long, default_value = "320x320x30", value_parser = parse_size)]
        size: (usize, usize, usize),
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print the metadata and config stored in a model file.
    Inspect {
        #[arg(long)]
        model: PathBuf,
    },
}

#[derive(Args)]
struct Data {
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Geometry `WxH` of headerless I420 files.
    #[arg(long, value_parser = parse_geometry)]
    geometry: Option<(usize, usize)>,
}

fn parse_geometry(s: &str) -> std::result::Result<(usize, usize), String> {
    let (w, h) = s.split_once('x').ok_or("expected WxH")?;
    Ok((
        w.parse().map_err(|_| "bad width")?,
        h.parse().map_err(|_| "bad height")?,
    ))
}

fn parse_size(s: &str) -> std::result::Result<(usize, usize, usize), String> {
    let parts: Vec<usize> = s
        .split('x')
        .map(|p| p.parse().map_err(|_| format!("bad size component {p:?}")))
        .collect::<std::result::Result<_, _>>()?;
    match parts[..] {
        [w, h, f] => Ok((w, h, f)),
        _ => Err("expected WxHxF".into()),
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound => 2,
        Error::Version { .. } => 3,
        Error::TooShort { .. } => 4,
        _ => 1,
    }
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    path.map_or_else(|| Ok(RunConfig::default()), RunConfig::load)
}

fn manifest_source(data: &Data) -> Result<ManifestSource> {
    let path = data
        .manifest
        .as_deref()
        .ok_or_else(|| Error::Config("--manifest is required".into()))?;
    Ok(ManifestSource {
        manifest: load_manifest(path)?,
        geometry: data.geometry,
    })
}

/// Train and validation indices. Unassigned entries are used when no
/// entry is marked `train`; without `val` entries a tenth of the training
/// pool, ordered by a seeded hash of the id, is held out.
fn train_val(src: &ManifestSource, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    let with = |s: Split| {
        (0..src.len())
            .filter(move |&i| src.split(i) == s)
            .collect::<Vec<_>>()
    };
    let mut train = with(Split::Train);
    if train.is_empty() {
        train = with(Split::Unassigned);
    }
    let mut val = with(Split::Val);
    if val.is_empty() {
        let n = ((train.len() as f64) * 0.1).round().max(1.0) as usize;
        if train.len() <= n {
            return Err(Error::Config(
                "not enough videos to hold out a validation set".into(),
            ));
        }
        let mut order = train.clone();
        order.sort_by_key(|&i| (derive_seed(seed, string_key(&src.id(i))), i));
        val = order[..n].to_vec();
        val.sort_unstable();
        train.retain(|i| !val.contains(i));
    }
    Ok((train, val))
}

/// Crop-seed key of a video: its file name, so scores do not depend on
/// where the file lives.
fn file_key(path: &Path) -> String {
    path.file_name()
        .map_or_else(|| path.to_string_lossy(), |n| n.to_string_lossy())
        .into_owned()
}

fn print_dims(model: &TrainedModel) -> Result<()> {
    for (kind, d) in Kind::ALL.iter().zip(model.dims()?) {
        println!("dim.{}={d}", kind.name());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Train {
            data,
            config,
            seed,
            out,
        } => {
            let mut cfg = load_config(config.as_deref())?;
            if let Some(s) = seed {
                cfg.crop_seed = derive_seed(s, 2);
                cfg.train.seed = derive_seed(s, 3);
            }
            let src = manifest_source(&data)?;
            let (ti, vi) = train_val(&src, cfg.crop_seed)?;
            let train = load_samples::<Real>(&src, &ti, &cfg)?;
            let val = load_samples::<Real>(&src, &vi, &cfg)?;
            let (model, report) = train_model(&train, &val, &cfg)?;
            let size = persistence::save(&model, &out)?;
            println!("train_videos={}", train.len());
            println!("val_videos={}", val.len());
            print_dims(&model)?;
            println!("selected={}", model.selector.total());
            println!("trees={}", model.gbdt.trees.len());
            println!("best_round={}", report.best_round);
            println!("val_rmse={}", model.meta.val_rmse);
            println!("model={}", out.display());
            println!("model_size={size}");
        }
        Cmd::Predict {
            model,
            video,
            geometry,
        } => {
            let model: TrainedModel = persistence::load(&model)?;
            let clip = read_video(&video, geometry)?;
            let seed = video_crop_seed(model.config.crop_seed, &file_key(&video));
            let report = model.predict_clip(&clip, seed)?;
            println!("video={}", video.display());
            for (i, s) in report.sub_video_scores.iter().enumerate() {
                println!("sub_video.{i}={s}");
            }
            println!("score={}", report.video_score);
        }
        Cmd::Evaluate {
            data,
            synthetic,
            size,
            config,
            runs,
            seed,
        } => {
            let cfg = load_config(config.as_deref())?;
            let src: Box<dyn VideoSource> = match synthetic {
                Some(n) => Box::new(SyntheticSource::study(n, seed, size.0, size.1, size.2)),
                None => Box::new(manifest_source(&data)?),
            };
            let r = run_protocol::<Real>(src.as_ref(), &cfg, runs, seed)?;
            println!("videos={}", src.len());
            for run in &r.runs {
                println!("run.{}.plcc={}", run.run, run.plcc);
                println!("run.{}.srocc={}", run.run, run.srocc);
            }
            println!("median_plcc={}", r.median_plcc);
            println!("median_srocc={}", r.median_srocc);
        }
        Cmd::Bench {
            model,
            video,
            geometry,
            reps,
            parallel,
        } => {
            let size = fs::metadata(&model)
                .map_err(|e| Error::Io {
                    path: model.clone(),
                    source: e,
                })?
                .len();
            let m: TrainedModel = persistence::load(&model)?;
            let clip = read_video(&video, geometry)?;
            let seed = video_crop_seed(m.config.crop_seed, &file_key(&video));
            let r = benchmark(&m, &clip, size as usize, reps, parallel, seed)?;
            println!("frames={}", clip.len());
            println!("reps={}", r.reps);
            println!("parallel={}", r.parallel);
            for (name, t) in &r.stages {
                println!("time.{name}={:.6}", t.as_secs_f64());
            }
            println!("time.total={:.6}", r.total_time().as_secs_f64());
            let f = &r.flops;
            for (name, v) in [
                ("motion", f.motion),
                ("dct", f.dct),
                ("saab", f.saab),
                ("pca", f.pca),
                ("std", f.std),
                ("regression", f.regression),
                ("total", f.total()),
            ] {
                println!("flops.{name}={v:.0}");
            }
            println!("model_size={}", r.model_size);
        }
        Cmd::Synth {
            out,
            count,
            size,
            seed,
        } => {
            fs::create_dir_all(&out).map_err(|e| Error::Io {
                path: out.clone(),
                source: e,
            })?;
            let study = SyntheticSource::study(count, seed, size.0, size.1, size.2);
            let mut manifest = DatasetManifest::default();
            for (i, spec) in study.specs.iter().enumerate() {
                let name = format!("{}.y4m", study.id(i));
                let path = out.join(&name);
                let (clip, mos) = synthesize_clip(spec)?;
                let mut bytes = Vec::new();
                write_y4m(&clip, Colorspace::C444, &mut bytes).map_err(|e| Error::Io {
                    path: path.clone(),
                    source: e,
                })?;
                fs::write(&path, bytes).map_err(|e| Error::Io {
                    path: path.clone(),
                    source: e,
                })?;
                manifest.entries.push(ManifestEntry {
                    video_path: name,
                    mos,
                    split: Split::Unassigned,
                });
            }
            let path = out.join("manifest.csv");
            fs::write(&path, manifest.to_csv()).map_err(|e| Error::Io {
                path: path.clone(),
                source: e,
            })?;
            println!("clips={count}");
            println!("manifest={}", path.display());
        }
        Cmd::Inspect { model } => {
            let bytes = fs::read(&model).map_err(|e| Error::Io {
                path: model.clone(),
                source: e,
            })?;
            for (k, v) in persistence::read_metadata(&bytes)? {
                println!("{k}={v}");
            }
            println!("model_size={}", bytes.len());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
