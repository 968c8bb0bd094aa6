mod common;

use bvqa::evaluation::{benchmark, estimate_flops};
use bvqa::media_io::{synthesize_clip, SynthSpec};
use common::tiny_model;

#[test]
fn estimate_is_linear_in_sub_videos() {
    let model = tiny_model(4);
    let one = estimate_flops(&model, 30).unwrap();
    let two = estimate_flops(&model, 60).unwrap();
    assert_eq!(two.cubes, 2 * one.cubes);
    assert!(
        (two.representations() - 2.0 * one.representations()).abs() < 1e-6 * one.representations()
    );
    // A trailing partial sub-video is not scored.
    assert_eq!(estimate_flops(&model, 59).unwrap(), one);
}

#[test]
fn benchmark_reports_every_stage_and_given_size() {
    let model = tiny_model(5);
    let (clip, _) =
        synthesize_clip(&SynthSpec::new(3.0, 0.5, 8).with_geometry(128, 128, 60)).unwrap();
    let r = benchmark(&model, &clip, 1234, 3, false, 0).unwrap();
    let names: Vec<&str> = r.stages.iter().map(|s| s.0).collect();
    assert_eq!(
        names,
        [
            "cropping",
            "representations",
            "selection",
            "regression",
            "ensembling"
        ]
    );
    assert_eq!(r.model_size, 1234);
    assert_eq!(r.total_time(), r.stages.iter().map(|s| s.1).sum());
    assert!(r.flops.motion > 0.0 && r.flops.regression > 0.0);
    assert!(benchmark(&model, &clip, 0, 0, false, 0).is_err());
}
