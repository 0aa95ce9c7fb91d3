use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use objmotion::flowfield::{read_flo_file, write_flo_file};
use objmotion::synthgen::{read_manifest, SceneSpec};
use objmotion::{CandidateDocument, FlowField};
use objmotion_cli::{cmd_eval, cmd_generate, cmd_match, dataset_samples, RunConfig, MATCHES_FILE};
use serde_json::json;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_objmotion"))
}

fn run(args: &[&str]) -> Output {
    let out = bin().args(args).output().unwrap();
    assert!(
        out.status.success(),
        "objmotion {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Small scenes with thresholds scaled to their object sizes.
fn config(dir: &Path, rotation: bool, noiseless: bool) -> PathBuf {
    let small = SceneSpec::small();
    let rot = if rotation {
        json!(small.rotation_range)
    } else {
        json!([0.0, 0.0])
    };
    let noise = if noiseless {
        json!({"feature_sigma": 0.0, "duplicate_rate": 0.0, "false_positive_count": 0, "mask_erosion_px": 0})
    } else {
        json!({})
    };
    let cfg = json!({
        "min_area": 100.0,
        "cluster_compactness": 400.0,
        "generator": {
            "scene": {
                "width": small.width,
                "height": small.height,
                "object_count": small.object_count,
                "translation_range": small.translation_range,
                "radius_range": small.radius_range,
                "rotation_range": rot,
                "seed": 11
            },
            "noise": noise
        }
    });
    let path = dir.join(format!("cfg_{rotation}_{noiseless}.json"));
    std::fs::write(&path, cfg.to_string()).unwrap();
    path
}

fn csv_aee(stdout: &[u8]) -> Vec<String> {
    let text = String::from_utf8_lossy(stdout);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "AEE,d_0_10,d_10_60,d_60_140,d_140p");
    lines
        .next()
        .unwrap()
        .split(',')
        .map(str::to_string)
        .collect()
}

fn tree(root: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(d).unwrap() {
            let path = e.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.push((
                    path.strip_prefix(root).unwrap().to_path_buf(),
                    std::fs::read(&path).unwrap(),
                ));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn translation_pipeline_has_zero_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), false, true);
    let data = tmp.path().join("data");
    run(&[
        "--config",
        p(&cfg),
        "generate",
        "--count",
        "4",
        "--out",
        p(&data),
    ]);
    run(&["--config", p(&cfg), "match", "--dataset", p(&data)]);
    run(&["rasterize", "--dataset", p(&data)]);
    let out = run(&["eval", "--estimate", p(&data), "--truth", p(&data)]);
    let row = csv_aee(&out.stdout);
    assert_eq!(row[0], "0.0000");
    assert!(
        row[1..].iter().all(|c| c.is_empty() || c == "0.0000"),
        "{row:?}"
    );
}

#[test]
fn noiseless_matches_equal_ground_truth() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg_path = config(tmp.path(), true, true);
    let cfg = RunConfig::load(Some(&cfg_path)).unwrap();
    let data = tmp.path().join("data");
    cmd_generate(&cfg, 5, &data, None).unwrap();
    for dir in dataset_samples(&data).unwrap() {
        let manifest = read_manifest(&dir).unwrap();
        let (m, _) = cmd_match(&dir.join("candidates.json"), &cfg).unwrap();
        let mut got = m.id_pairs();
        got.sort();
        assert_eq!(got, manifest.gt_matching, "{}", dir.display());
    }
}

#[test]
fn rotation_error_is_positive_and_bounded() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg_path = config(tmp.path(), true, true);
    let data = tmp.path().join("data");
    run(&[
        "--config",
        p(&cfg_path),
        "generate",
        "--count",
        "4",
        "--out",
        p(&data),
    ]);
    run(&["--config", p(&cfg_path), "match", "--dataset", p(&data)]);
    run(&["rasterize", "--dataset", p(&data)]);
    let cfg = RunConfig::load(Some(&cfg_path)).unwrap();
    let out = cmd_eval(&data, &data, "dt.flo", "flow_full.flo", &cfg, None).unwrap();
    let scene = &cfg.generator.scene;
    let bound = 2.0 * scene.radius_range[1] * (scene.rotation_range[1] / 2.0).sin();
    assert!(out.aggregate.aee > 0.0);
    for s in &out.samples {
        assert!(
            s.report.aee < bound,
            "{} aee {} >= {bound}",
            s.name,
            s.report.aee
        );
    }
}

#[test]
fn generation_is_reproducible_across_runs_and_jobs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), true, false);
    let dirs: Vec<PathBuf> = ["a", "b", "c"].iter().map(|n| tmp.path().join(n)).collect();
    run(&[
        "--config",
        p(&cfg),
        "--jobs",
        "1",
        "generate",
        "--count",
        "6",
        "--out",
        p(&dirs[0]),
    ]);
    run(&[
        "--config",
        p(&cfg),
        "--jobs",
        "1",
        "generate",
        "--count",
        "6",
        "--out",
        p(&dirs[1]),
    ]);
    run(&[
        "--config",
        p(&cfg),
        "--jobs",
        "4",
        "generate",
        "--count",
        "6",
        "--out",
        p(&dirs[2]),
    ]);
    let a = tree(&dirs[0]);
    assert_eq!(a.len(), 6 * 8 + 1);
    assert_eq!(a, tree(&dirs[1]));
    assert_eq!(a, tree(&dirs[2]));
    let other = tmp.path().join("d");
    run(&[
        "--config",
        p(&cfg),
        "--seed",
        "12",
        "generate",
        "--count",
        "6",
        "--out",
        p(&other),
    ]);
    assert_ne!(a, tree(&other));
}

#[test]
fn zero_count_writes_empty_index() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    run(&["generate", "--count", "0", "--out", p(&data)]);
    assert!(dataset_samples(&data).unwrap().is_empty());
}

#[test]
fn strict_thresholds_prune_everything() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), false, false);
    let data = tmp.path().join("data");
    run(&[
        "--config",
        p(&cfg),
        "generate",
        "--count",
        "1",
        "--out",
        p(&data),
    ]);
    let strict = tmp.path().join("strict.json");
    std::fs::write(
        &strict,
        json!({"min_mask_score": 1.0, "min_objectness": 1.0, "min_area": 1e300}).to_string(),
    )
    .unwrap();
    let cands = data.join("sample_00000").join("candidates.json");
    let out = run(&["--config", p(&strict), "match", "--candidates", p(&cands)]);
    let m: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(m["pairs"], json!([]));
    let doc = CandidateDocument::from_json(&std::fs::read_to_string(&cands).unwrap()).unwrap();
    let unmatched =
        m["unmatched_ref"].as_array().unwrap().len() + m["unmatched_tgt"].as_array().unwrap().len();
    assert!(unmatched <= doc.candidates.len());
}

#[test]
fn empty_candidate_file_gives_empty_match_set() {
    let tmp = tempfile::tempdir().unwrap();
    let empty = tmp.path().join("empty.json");
    std::fs::write(&empty, "").unwrap();
    let out_file = tmp.path().join("m.json");
    run(&["match", "--candidates", p(&empty), "--out", p(&out_file)]);
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out_file).unwrap()).unwrap();
    assert_eq!(m["pairs"], json!([]));
    assert_eq!(m["unmatched_ref"], json!([]));
    assert_eq!(m["unmatched_tgt"], json!([]));
}

#[test]
fn eval_of_truth_against_itself_is_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), true, false);
    let data = tmp.path().join("data");
    run(&[
        "--config",
        p(&cfg),
        "generate",
        "--count",
        "2",
        "--out",
        p(&data),
    ]);
    let csv = tmp.path().join("out.csv");
    let out = run(&[
        "eval",
        "--estimate",
        p(&data),
        "--truth",
        p(&data),
        "--estimate-file",
        "flow_full.flo",
        "--truth-file",
        "flow_full.flo",
        "--csv",
        p(&csv),
    ]);
    assert_eq!(csv_aee(&out.stdout)[0], "0.0000");
    assert_eq!(std::fs::read(&csv).unwrap(), out.stdout);
}

#[test]
fn viz_of_zero_flow_is_white() {
    let tmp = tempfile::tempdir().unwrap();
    let flo = tmp.path().join("zero.flo");
    write_flo_file(&flo, &FlowField::zeros(17, 9).unwrap()).unwrap();
    let png = tmp.path().join("zero.png");
    run(&["viz", "--flow", p(&flo), "--out", p(&png)]);
    let img = image::open(&png).unwrap().to_rgb8();
    assert_eq!(img.dimensions(), (17, 9));
    assert!(img.pixels().all(|px| px.0 == [255, 255, 255]));
}

#[test]
fn inject_writes_coarse_levels() {
    let tmp = tempfile::tempdir().unwrap();
    let dt = tmp.path().join("dt.flo");
    write_flo_file(&dt, &FlowField::constant(64, 64, 8.0, -4.0).unwrap()).unwrap();
    let out = tmp.path().join("pyr");
    run(&["inject", "--dt", p(&dt), "--out", p(&out)]);
    for (level, side, u) in [(4u32, 8usize, 1.0), (5, 4, 0.5), (6, 2, 0.25)] {
        let f = read_flo_file(out.join(format!("level_{level}.flo"))).unwrap();
        assert_eq!((f.width(), f.height()), (side, side));
        assert!(f.data().iter().all(|c| *c == [u, -u / 2.0]));
    }
}

#[test]
fn failures_exit_nonzero() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("nope.flo");
    let out = bin()
        .args(["viz", "--flow", p(&missing), "--out", "x.png"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));

    let bad = tmp.path().join("bad.json");
    std::fs::write(&bad, r#"{"eval": {"bin_edges": [0, 60, 10]}}"#).unwrap();
    let out = bin()
        .args(["--config", p(&bad), "generate", "--count", "1", "--out"])
        .arg(tmp.path().join("d"))
        .output()
        .unwrap();
    assert!(!out.status.success());

    let garbage = tmp.path().join("garbage.json");
    std::fs::write(&garbage, "{not json").unwrap();
    let out = bin()
        .args(["match", "--candidates", p(&garbage)])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(!tmp.path().join(MATCHES_FILE).exists());
}
