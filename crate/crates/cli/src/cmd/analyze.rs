//! Dataset statistics: rotation-angle spread by facing pose, relative
//! position histogram and facial vertex variance maps.

use std::path::{Path, PathBuf};

use clap::Args;
use duet_core::analysis::{
    angle_std_table, detect_facing, face_variance_map, relative_position_histogram, to_pgm, AngleStdTable, Bins,
    GroupedMotion, DEFAULT_COLUMNS,
};
use duet_core::dataset::load_dataset;
use duet_core::face::{load_face_data, FaceSequence};
use duet_core::motion::MotionSequence;
use duet_core::par;
use serde::Serialize;

use super::Ctx;
use crate::failure::{data, read, require_file, write, At, CmdResult};

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Face data file for vertex variance maps.
    #[arg(long)]
    pub faces: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Also split the angle table by this sample tag (e.g. relationship).
    #[arg(long)]
    pub group_by: Option<String>,
}

#[derive(Serialize)]
struct Summary {
    config_fingerprint: String,
    windows: usize,
    angle_std: AngleStdTable,
    grouped_angle_std: Option<AngleStdTable>,
    histogram_total: u64,
    histogram_overflow: u64,
    face_variance_groups: Vec<String>,
}

pub fn run(ctx: &Ctx, args: &AnalyzeArgs) -> CmdResult {
    require_file(&args.data)?;
    if let Some(f) = &args.faces {
        require_file(f)?;
    }
    let cfg = &ctx.cfg;
    let d = load_dataset(&read(&args.data)?).at(&args.data)?;
    let (sk, dt) = (&d.manifest.skeleton, d.frame_time());
    let decoded: Vec<([MotionSequence; 2], Vec<String>)> = par::try_map(ctx.exec, &d.samples, |s| {
        let pair = s.decode(sk, dt)?;
        let labels = detect_facing(&pair, &cfg.head_joint)?;
        Ok::<_, duet_core::Error>((pair, labels.iter().map(|l| l.as_str().to_string()).collect()))
    })
    .at(&args.data)?;
    let columns: Vec<(&str, &str)> = DEFAULT_COLUMNS.iter().copied().filter(|(_, j)| sk.joint_index(j).is_some()).collect();
    if columns.is_empty() {
        return Err(data(format!("{}: skeleton has none of the tracked joints", args.data.display())));
    }

    let items = |key: Option<&str>| -> Vec<GroupedMotion<'_>> {
        decoded
            .iter()
            .zip(&d.samples)
            .flat_map(|((pair, labels), s)| {
                let groups: Vec<String> = match key {
                    None => labels.clone(),
                    Some(k) => {
                        let tag = s.tags.get(k).map_or("-", String::as_str);
                        labels.iter().map(|l| format!("{tag}/{l}")).collect()
                    }
                };
                pair.iter().map(move |m| GroupedMotion { motion: m, groups: groups.clone() })
            })
            .collect()
    };
    let table = angle_std_table(&items(None), &columns).at(&args.data)?;
    write(&args.out.join("angle_std.csv"), table.to_csv())?;
    let grouped = match &args.group_by {
        Some(k) => {
            let t = angle_std_table(&items(Some(k)), &columns).at(&args.data)?;
            write(&args.out.join(format!("angle_std_by_{k}.csv")), t.to_csv())?;
            Some(t)
        }
        None => None,
    };

    let r = cfg.hist_range;
    let bins = Bins::new(-r, r, cfg.hist_bins).at(&args.data)?;
    let pairs: Vec<[MotionSequence; 2]> = decoded.iter().map(|(p, _)| p.clone()).collect();
    let hist = relative_position_histogram(&pairs, bins, bins).at(&args.data)?;
    write(&args.out.join("position_histogram.csv"), hist.to_csv())?;

    let mut groups = Vec::new();
    if let Some(path) = &args.faces {
        groups = face_maps(ctx, path, &args.out)?;
    }
    let summary = Summary {
        config_fingerprint: cfg.fingerprint(),
        windows: d.samples.len(),
        angle_std: table,
        grouped_angle_std: grouped,
        histogram_total: hist.total(),
        histogram_overflow: hist.overflow,
        face_variance_groups: groups,
    };
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n";
    write(&args.out.join("analysis.json"), json)
}

/// Variance maps per facing pose and person; PGM images when the vertex
/// count fills whole rows of `grid_cols`.
fn face_maps(ctx: &Ctx, path: &Path, out: &Path) -> CmdResult<Vec<String>> {
    let fd = load_face_data(&read(path)?).at(path)?;
    let mut groups: Vec<(String, Vec<&FaceSequence>)> = Vec::new();
    for pose in [true, false] {
        for (slot, name) in ["a", "b"].iter().enumerate() {
            let faces: Vec<&FaceSequence> =
                fd.recordings.iter().filter(|r| r.facing == pose).map(|r| &r.faces[slot]).collect();
            if !faces.is_empty() {
                let key = format!("{}_{name}", if pose { "facing" } else { "not_facing" });
                groups.push((key, faces));
            }
        }
    }
    let map = face_variance_map(&groups).at(path)?;
    write(&out.join("face_variance.csv"), map.to_csv())?;
    let cols = ctx.cfg.grid_cols;
    for (key, vals) in &map.groups {
        if cols > 0 && !vals.is_empty() && vals.len() % cols == 0 {
            let pgm = to_pgm(vals, vals.len() / cols, cols).at(path)?;
            write(&out.join(format!("face_variance_{key}.pgm")), pgm)?;
        }
    }
    Ok(map.groups.iter().map(|g| g.0.clone()).collect())
}
