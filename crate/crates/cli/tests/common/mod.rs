#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

/// Small-scale settings so a full pipeline runs in seconds.
pub const FAST: [&str; 8] = ["window=30", "stride=30", "schedule_steps=20", "steps=15", "hidden=16", "latent_dim=8", "style_dim=4", "log_every=5"];

pub fn duet(args: &[&str]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_duet"));
    cmd.env_remove("DUET_CONFIG");
    for s in FAST {
        cmd.args(["--set", s]);
    }
    cmd.args(args).output().expect("duet binary runs")
}

pub fn ok(args: &[&str]) -> Output {
    let out = duet(args);
    assert!(out.status.success(), "duet {args:?} failed:\n{}", String::from_utf8_lossy(&out.stderr));
    out
}

pub fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// synth, train both models, generate both kinds, evaluate and analyze.
pub fn pipeline(dir: &Path) {
    let d = |s: &str| dir.join(s);
    let data = d("data");
    ok(&["synth", "--out", p(&data), "--frames", "90", "--recordings", "2", "--facing", "alternate", "--with-face"]);
    ok(&["preprocess", "--input", p(&data), "--out", p(&d("again.duet"))]);
    ok(&["train", "--data", p(&data.join("dataset.duet")), "--out", p(&d("body.ckpt"))]);
    ok(&["train", "--model", "face", "--data", p(&data.join("faces.duetface")), "--out", p(&d("face.ckpt"))]);
    ok(&["generate", "--checkpoint", p(&d("body.ckpt")), "--data", p(&data.join("dataset.duet")), "--out", p(&d("gen.duet")), "--samples", "2", "--bvh", p(&d("bvh"))]);
    ok(&["generate-face", "--checkpoint", p(&d("face.ckpt")), "--data", p(&data.join("faces.duetface")), "--out", p(&d("gen.duetface"))]);
    let rec = data.join("rec000");
    ok(&[
        "generate-face", "--checkpoint", p(&d("face.ckpt")), "--audio-a", p(&rec.join("a.wav")), "--audio-b", p(&rec.join("b.wav")),
        "--style-a", "S1", "--style-b", "S2", "--frames", "40", "--out", p(&d("faces_from_audio")),
    ]);
    ok(&[
        "evaluate", "--gt", p(&data.join("dataset.duet")), "--gen", p(&d("gen.duet")), "--gt-faces", p(&data.join("faces.duetface")),
        "--gen-faces", p(&d("gen.duetface")), "--out", p(&d("report.json")), "--csv", p(&d("report.csv")),
    ]);
    ok(&["analyze", "--data", p(&data.join("dataset.duet")), "--faces", p(&data.join("faces.duetface")), "--out", p(&d("analysis")), "--group-by", "relationship"]);
}

/// Every file under `root` keyed by relative path, skipping `.log` sidecars.
pub fn artifacts(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in std::fs::read_dir(&dir).unwrap() {
            let path = e.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else if path.extension().is_none_or(|x| x != "log") {
                out.insert(path.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&path).unwrap());
            }
        }
    }
    out
}
