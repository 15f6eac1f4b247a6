//! BVH (Biovision hierarchy) ingest and emit.
//!
//! Rotation channels are accepted in any of the six Euler orders and
//! converted to exponential maps; output is always written with a six-channel
//! root (`Xposition Yposition Zposition Zrotation Xrotation Yrotation`) and
//! `ZXY` rotations elsewhere. Offsets and positions are scaled by
//! [`BvhOptions::unit_scale`] on ingest (centimeters to meters by default) and
//! divided by it on emit.
//!
//! Position channels on non-root joints are parsed but ignored.

use std::fmt::Write as _;

use nalgebra::{Matrix3, Vector3};

use super::rotation::{Axis, EulerOrder, ExpMap};
use super::skeleton::{Channel, FramePose, Joint, MotionSequence, Skeleton};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct BvhOptions {
    /// Multiplier from file units to meters.
    pub unit_scale: f64,
}

impl Default for BvhOptions {
    fn default() -> Self {
        BvhOptions { unit_scale: 0.01 }
    }
}

struct Tokens<'a> {
    toks: Vec<(usize, &'a str)>,
    pos: usize,
    last_line: usize,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str) -> Self {
        let toks = text
            .lines()
            .enumerate()
            .flat_map(|(i, l)| l.split_whitespace().map(move |t| (i + 1, t)))
            .collect();
        Tokens { toks, pos: 0, last_line: text.lines().count().max(1) }
    }

    fn line(&self) -> usize {
        self.toks.get(self.pos).map(|t| t.0).unwrap_or(self.last_line)
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Bvh { line: self.line(), msg: msg.into() }
    }

    fn peek(&self) -> Option<&'a str> {
        self.toks.get(self.pos).map(|t| t.1)
    }

    fn next(&mut self, what: &str) -> Result<(usize, &'a str)> {
        let t = self
            .toks
            .get(self.pos)
            .copied()
            .ok_or_else(|| self.err(format!("unexpected end of file, expected {what}")))?;
        self.pos += 1;
        Ok(t)
    }

    fn expect(&mut self, kw: &str) -> Result<()> {
        let (line, t) = self.next(kw)?;
        if t != kw {
            return Err(Error::Bvh { line, msg: format!("expected {kw:?}, found {t:?}") });
        }
        Ok(())
    }

    fn number(&mut self, what: &str) -> Result<f64> {
        let (line, t) = self.next(what)?;
        parse_f64(t).ok_or_else(|| Error::Bvh { line, msg: format!("invalid number {t:?} for {what}") })
    }
}

fn parse_f64(t: &str) -> Option<f64> {
    t.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Parses a BVH document into its skeleton and motion.
pub fn parse_bvh(text: &str, opts: &BvhOptions) -> Result<(Skeleton, MotionSequence)> {
    let mut tk = Tokens::new(text);
    tk.expect("HIERARCHY")?;
    let mut joints: Vec<Joint> = Vec::new();
    let line = tk.line();
    match tk.next("ROOT")? {
        (_, "ROOT") => parse_joint(&mut tk, None, &mut joints, opts)?,
        (_, t) => return Err(Error::Bvh { line, msg: format!("expected ROOT, found {t:?}") }),
    }
    if tk.peek() == Some("ROOT") {
        return Err(tk.err("multiple ROOT joints are not supported"));
    }
    let skeleton = Skeleton::new(joints).map_err(|e| tk.err(e.to_string()))?;

    tk.expect("MOTION")?;
    tk.expect("Frames:")?;
    let (line, t) = tk.next("frame count")?;
    let n_frames: usize =
        t.parse().map_err(|_| Error::Bvh { line, msg: format!("invalid frame count {t:?}") })?;
    if n_frames == 0 {
        return Err(Error::Bvh { line, msg: "zero frames".into() });
    }
    tk.expect("Frame")?;
    tk.expect("Time:")?;
    let line = tk.line();
    let frame_time = tk.number("frame time")?;
    if frame_time <= 0.0 {
        return Err(Error::Bvh { line, msg: format!("frame time must be positive, got {frame_time}") });
    }

    // Motion rows are line-oriented: one frame per non-empty line.
    let width: usize = skeleton.joints().iter().map(|j| j.channels.len()).sum();
    let motion_start = tk.line() + usize::from(tk.peek().is_none());
    let rows: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .skip(motion_start - 1)
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, l))
        .collect();
    if rows.len() < n_frames {
        return Err(Error::Bvh {
            line: tk.last_line,
            msg: format!("header declares {n_frames} frames but only {} rows present", rows.len()),
        });
    }
    if let Some(&(line, _)) = rows.get(n_frames) {
        return Err(Error::Bvh { line, msg: format!("more motion rows than the {n_frames} declared") });
    }

    let mut frames = Vec::with_capacity(n_frames);
    let mut values = Vec::with_capacity(width);
    for &(line, row) in &rows {
        values.clear();
        for tok in row.split_whitespace() {
            values.push(
                parse_f64(tok)
                    .ok_or_else(|| Error::Bvh { line, msg: format!("non-numeric motion value {tok:?}") })?,
            );
        }
        if values.len() != width {
            return Err(Error::Bvh {
                line,
                msg: format!("channel-count mismatch: row has {} values, hierarchy declares {width}", values.len()),
            });
        }
        frames.push(decode_row(&skeleton, &values, opts));
    }
    let motion = MotionSequence::new(skeleton.clone(), frames, frame_time)?;
    Ok((skeleton, motion))
}

fn parse_joint(
    tk: &mut Tokens<'_>,
    parent: Option<usize>,
    joints: &mut Vec<Joint>,
    opts: &BvhOptions,
) -> Result<()> {
    let (_, name) = tk.next("joint name")?;
    tk.expect("{")?;
    tk.expect("OFFSET")?;
    let offset = Vector3::new(tk.number("offset x")?, tk.number("offset y")?, tk.number("offset z")?) * opts.unit_scale;
    tk.expect("CHANNELS")?;
    let line = tk.line();
    let (_, n) = tk.next("channel count")?;
    let n: usize = n.parse().map_err(|_| Error::Bvh { line, msg: format!("invalid channel count {n:?}") })?;
    let mut channels = Vec::with_capacity(n);
    for _ in 0..n {
        let (line, c) = tk.next("channel name")?;
        channels.push(Channel::parse(c).ok_or_else(|| Error::Bvh { line, msg: format!("unknown channel {c:?}") })?);
    }
    let rot_count = channels.iter().filter(|c| c.is_rotation()).count();
    if rot_count != 0 && rot_count != 3 {
        return Err(Error::Bvh { line, msg: format!("expected 0 or 3 rotation channels, found {rot_count}") });
    }
    let index = joints.len();
    joints.push(Joint { name: name.to_string(), parent, offset, channels, end_site: None });
    loop {
        let line = tk.line();
        match tk.next("JOINT, End Site or }")? {
            (_, "JOINT") => parse_joint(tk, Some(index), joints, opts)?,
            (_, "End") => {
                tk.expect("Site")?;
                tk.expect("{")?;
                tk.expect("OFFSET")?;
                let o = Vector3::new(tk.number("offset x")?, tk.number("offset y")?, tk.number("offset z")?);
                tk.expect("}")?;
                joints[index].end_site = Some(o * opts.unit_scale);
            }
            (_, "}") => return Ok(()),
            (_, t) => return Err(Error::Bvh { line, msg: format!("unexpected token {t:?} in joint {name}") }),
        }
    }
}

fn axis_of(c: Channel) -> Axis {
    match c {
        Channel::Xrotation | Channel::Xposition => Axis::X,
        Channel::Yrotation | Channel::Yposition => Axis::Y,
        Channel::Zrotation | Channel::Zposition => Axis::Z,
    }
}

fn decode_row(skeleton: &Skeleton, values: &[f64], opts: &BvhOptions) -> FramePose {
    let mut pose = FramePose::identity(skeleton.len());
    let root = &skeleton.joints()[0];
    let mut translation = root.offset;
    let mut k = 0;
    for (i, joint) in skeleton.joints().iter().enumerate() {
        let mut rot = Matrix3::identity();
        for &c in &joint.channels {
            let v = values[k];
            k += 1;
            if c.is_rotation() {
                rot *= axis_of(c).rotation(v.to_radians());
            } else if i == 0 {
                translation[axis_of(c) as usize] = root.offset[axis_of(c) as usize] + v * opts.unit_scale;
            }
        }
        pose.rotations[i] = ExpMap::from_matrix_unchecked(&rot);
    }
    pose.root_translation = translation;
    pose
}

/// Emits a BVH document. Fails if `motion` has no frames or does not match
/// `skeleton`.
pub fn write_bvh(skeleton: &Skeleton, motion: &MotionSequence, opts: &BvhOptions) -> Result<String> {
    if motion.frames.is_empty() {
        return Err(Error::invalid("cannot write a BVH file with zero frames"));
    }
    if motion.frames.iter().any(|f| f.rotations.len() != skeleton.len()) {
        return Err(Error::shape("motion frames do not match the skeleton joint count"));
    }
    let mut out = String::from("HIERARCHY\n");
    let children: Vec<Vec<usize>> = (0..skeleton.len())
        .map(|i| (0..skeleton.len()).filter(|&c| skeleton.joints()[c].parent == Some(i)).collect())
        .collect();
    write_joint(&mut out, skeleton, &children, 0, 0, opts);
    let _ = writeln!(out, "MOTION");
    let _ = writeln!(out, "Frames: {}", motion.frames.len());
    let _ = writeln!(out, "Frame Time: {}", motion.frame_time);
    let root_offset = skeleton.joints()[0].offset;
    for frame in &motion.frames {
        let mut fields: Vec<String> = Vec::with_capacity(skeleton.frame_width());
        let t = (frame.root_translation - root_offset) / opts.unit_scale;
        fields.extend(t.iter().map(|v| v.to_string()));
        for r in &frame.rotations {
            let [z, x, y] = EulerOrder::ZXY.from_matrix(&r.to_matrix());
            fields.extend([z, x, y].iter().map(|a| a.to_degrees().to_string()));
        }
        out.push_str(&fields.join(" "));
        out.push('\n');
    }
    Ok(out)
}

fn write_joint(
    out: &mut String,
    skeleton: &Skeleton,
    children: &[Vec<usize>],
    index: usize,
    depth: usize,
    opts: &BvhOptions,
) {
    let pad = "\t".repeat(depth);
    let j = &skeleton.joints()[index];
    let kw = if j.parent.is_none() { "ROOT" } else { "JOINT" };
    let o = j.offset / opts.unit_scale;
    let _ = writeln!(out, "{pad}{kw} {}", j.name);
    let _ = writeln!(out, "{pad}{{");
    let _ = writeln!(out, "{pad}\tOFFSET {} {} {}", o.x, o.y, o.z);
    if j.parent.is_none() {
        let _ = writeln!(out, "{pad}\tCHANNELS 6 Xposition Yposition Zposition Zrotation Xrotation Yrotation");
    } else {
        let _ = writeln!(out, "{pad}\tCHANNELS 3 Zrotation Xrotation Yrotation");
    }
    for &c in &children[index] {
        write_joint(out, skeleton, children, c, depth + 1, opts);
    }
    if let Some(e) = j.end_site {
        let e = e / opts.unit_scale;
        let _ = writeln!(out, "{pad}\tEnd Site");
        let _ = writeln!(out, "{pad}\t{{");
        let _ = writeln!(out, "{pad}\t\tOFFSET {} {} {}", e.x, e.y, e.z);
        let _ = writeln!(out, "{pad}\t}}");
    }
    let _ = writeln!(out, "{pad}}}");
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;

    const MINIMAL: &str = "HIERARCHY
ROOT Hips
{
\tOFFSET 0 0 0
\tCHANNELS 6 Xposition Yposition Zposition Zrotation Xrotation Yrotation
\tJOINT Chest
\t{
\t\tOFFSET 0 10 0
\t\tCHANNELS 3 Zrotation Xrotation Yrotation
\t\tEnd Site
\t\t{
\t\t\tOFFSET 0 5 0
\t\t}
\t}
}
MOTION
Frames: 2
Frame Time: 0.0333333
0 0 0 0 0 0 0 0 0
0 0 0 0 0 0 0 0 0
";

    #[test]
    fn minimal_file_gives_identity_frames() {
        let (s, m) = parse_bvh(MINIMAL, &BvhOptions::default()).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.joints()[1].name, "Chest");
        assert!((s.joints()[1].offset.y - 0.1).abs() < 1e-15);
        assert_eq!(m.frames.len(), 2);
        assert_eq!(m.frame_time, 0.0333333);
        for f in &m.frames {
            assert!(f.rotations.iter().all(|r| r.0 == Vector3::zeros()));
        }
    }

    #[test]
    fn short_row_is_a_channel_count_mismatch() {
        let text = MINIMAL.replacen("0 0 0 0 0 0 0 0 0\n", "0 0 0 0 0 0 0 0\n", 1);
        let err = parse_bvh(&text, &BvhOptions::default()).unwrap_err();
        match err {
            Error::Bvh { line, msg } => {
                assert_eq!(line, 19);
                assert!(msg.contains("channel-count mismatch"), "{msg}");
            }
            e => panic!("unexpected error {e}"),
        }
    }

    #[test]
    fn structural_errors_carry_line_numbers() {
        let zero = MINIMAL.replace("Frames: 2", "Frames: 0");
        assert!(matches!(parse_bvh(&zero, &BvhOptions::default()), Err(Error::Bvh { line: 17, .. })));
        let bad = MINIMAL.replacen("0 0 0 0 0 0 0 0 0\n", "0 0 0 0 x 0 0 0 0\n", 1);
        assert!(matches!(parse_bvh(&bad, &BvhOptions::default()), Err(Error::Bvh { line: 19, .. })));
        let header = MINIMAL.replace("OFFSET 0 10 0", "OFFSET 0 ten 0");
        assert!(matches!(parse_bvh(&header, &BvhOptions::default()), Err(Error::Bvh { line: 8, .. })));
        assert!(parse_bvh("HIERARCHY\nROOT", &BvhOptions::default()).is_err());
        assert!(parse_bvh("", &BvhOptions::default()).is_err());
    }

    #[test]
    fn root_zrot_quarter_turn() {
        let text = "HIERARCHY\nROOT A\n{\nOFFSET 0 0 0\nCHANNELS 6 Xposition Yposition Zposition Zrotation Xrotation Yrotation\n}\nMOTION\nFrames: 1\nFrame Time: 0.04\n0 0 0 90 0 0\n";
        let (_, m) = parse_bvh(text, &BvhOptions::default()).unwrap();
        // Oracle: Rz(90°) maps x to y; its axis-angle is (0, 0, π/2).
        let r = m.frames[0].rotations[0];
        assert!((r.0 - Vector3::new(0.0, 0.0, PI / 2.0)).norm() < 1e-9);
    }

    #[test]
    fn write_round_trip_keeps_structure() {
        let opts = BvhOptions::default();
        let (s, m) = parse_bvh(MINIMAL, &opts).unwrap();
        let text = write_bvh(&s, &m, &opts).unwrap();
        let (s2, m2) = parse_bvh(&text, &opts).unwrap();
        assert_eq!(m2.frames.len(), 2);
        assert_eq!(m2.frame_time, m.frame_time);
        let names: Vec<_> = s2.joints().iter().map(|j| j.name.clone()).collect();
        assert_eq!(names, ["Hips", "Chest"]);
        assert!(s2.joints()[1].end_site.is_some());
    }

    #[test]
    fn empty_motion_is_rejected_on_write() {
        let s = Skeleton::reference_body();
        let m = MotionSequence::new(s.clone(), vec![], 1.0 / 30.0).unwrap();
        assert!(write_bvh(&s, &m, &BvhOptions::default()).is_err());
    }
}
