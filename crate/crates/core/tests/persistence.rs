mod common;

use bvqa::media_io::{synthesize_clip, SynthSpec};
use bvqa::persistence::{deserialize, load, read_metadata, save, serialize};
use bvqa::TrainedModel;
use common::tiny_model;

#[test]
fn round_trip_preserves_predictions_bitwise() {
    let model = tiny_model(1);
    let bytes = serialize(&model).unwrap();
    let back: TrainedModel = deserialize(&bytes).unwrap();
    assert_eq!(serialize(&back).unwrap(), bytes);
    for seed in 0..3 {
        let (clip, _) = synthesize_clip(
            &SynthSpec::new(4.0 * seed as f64, 0.5, 40 + seed).with_geometry(128, 128, 60),
        )
        .unwrap();
        let a = model.predict_clip(&clip, seed).unwrap();
        let b = back.predict_clip(&clip, seed).unwrap();
        assert_eq!(a.video_score.to_bits(), b.video_score.to_bits());
        assert_eq!(a, b);
    }
}

#[test]
fn identical_seeds_give_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let (pa, pb) = (dir.path().join("a"), dir.path().join("b"));
    let n = save(&tiny_model(2), &pa).unwrap();
    save(&tiny_model(2), &pb).unwrap();
    let a = std::fs::read(&pa).unwrap();
    assert_eq!(a.len(), n);
    assert_eq!(a, std::fs::read(&pb).unwrap());
    let m: TrainedModel = load(&pa).unwrap();
    assert_eq!(serialize(&m).unwrap(), a);
}

#[test]
fn metadata_describes_model_without_decoding() {
    let model = tiny_model(3);
    let meta = read_metadata(&serialize(&model).unwrap()).unwrap();
    let dims: Vec<String> = model
        .dims()
        .unwrap()
        .iter()
        .map(|d| d.to_string())
        .collect();
    assert_eq!(meta["dims"], dims.join(","));
    assert_eq!(meta["config.sub_image_size"], "128");
    assert_eq!(meta["format_version"], "1");
}
