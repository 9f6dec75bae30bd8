use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use hicp_core::annotation::parse_detections;
use hicp_core::eval3d::TrajectoryFrame;
use hicp_core::lift::WindowShape;
use hicp_core::{
    lift_person, CameraIntrinsics, DepthFrame, DetectionRecord, LiftFailure, LiftOutcome, NeighborhoodSpec,
    RigidTransform, Trajectory,
};
use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{is_blank, resolve_layout};
use crate::cli::{LiftArgs, WindowArg};
use crate::error::{CliError, CliResult, Context};
use crate::output::{read_file, read_text, write_file, Output};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct IndexRow {
    image_id: u64,
    t: f64,
    depth_file: PathBuf,
}

#[derive(Debug, Default, Serialize)]
struct Counts {
    lifted: usize,
    skipped_low_confidence: usize,
    out_of_frame: usize,
    no_depth: usize,
    insufficient_depth: usize,
}

#[derive(Serialize)]
struct Body<'a> {
    layout: &'a str,
    conf: f64,
    neighborhood: NeighborhoodSpec,
    frame: &'a str,
    frames: usize,
    frames_with_detection: usize,
    keypoints: Counts,
}

fn read_index(args: &LiftArgs, dets: &[DetectionRecord]) -> CliResult<Vec<IndexRow>> {
    let Some(path) = &args.frame_index else {
        if !(args.fps > 0.0 && args.fps.is_finite()) {
            return Err(CliError::Config(format!("--fps must be positive, got {}", args.fps)));
        }
        let ids: BTreeSet<u64> = dets.iter().map(|d| d.image_id).collect();
        return Ok(ids
            .into_iter()
            .map(|id| {
                let pgm = PathBuf::from(format!("{id}.pgm"));
                let png = PathBuf::from(format!("{id}.png"));
                let depth_file = if !args.depth_dir.join(&pgm).exists() && args.depth_dir.join(&png).exists() { png } else { pgm };
                IndexRow { image_id: id, t: id.saturating_sub(1) as f64 / args.fps, depth_file }
            })
            .collect());
    };
    let bytes = read_file(path)?;
    let mut reader = csv::Reader::from_reader(bytes.as_slice());
    let mut rows: Vec<IndexRow> = reader.deserialize().collect::<Result<_, _>>().map_err(|e| CliError::io(path, e))?;
    rows.sort_by(|a, b| a.t.total_cmp(&b.t).then(a.image_id.cmp(&b.image_id)));
    Ok(rows)
}

/// Highest score wins; ties keep the earliest record.
fn best_detections(dets: &[DetectionRecord]) -> BTreeMap<u64, &DetectionRecord> {
    let mut best: BTreeMap<u64, &DetectionRecord> = BTreeMap::new();
    for d in dets {
        match best.get(&d.image_id) {
            Some(b) if b.score >= d.score => {}
            _ => {
                best.insert(d.image_id, d);
            }
        }
    }
    best
}

pub fn run(args: &LiftArgs, out: &Output) -> CliResult<()> {
    let spec = NeighborhoodSpec {
        body: args.body_radius,
        hand: args.hand_radius,
        face: args.face_radius,
        min_valid_fraction: args.min_valid_fraction,
        shape: match args.window {
            WindowArg::Rect => WindowShape::Rect,
            WindowArg::Disc => WindowShape::Disc,
        },
    };
    spec.validate().map_err(CliError::Config)?;
    if !args.conf.is_finite() {
        return Err(CliError::Config(format!("--conf must be finite, got {}", args.conf)));
    }
    let intr = CameraIntrinsics::from_toml(&read_text(&args.intrinsics)?).at(&args.intrinsics)?;
    let transform = match &args.transform {
        Some(p) => Some(RigidTransform::from_toml(&read_text(p)?).at(p)?),
        None => None,
    };

    let det_bytes = read_file(&args.detections)?;
    let (layout, dets) = if is_blank(&det_bytes) {
        (hicp_core::KeypointLayout::by_name(if args.layout == "auto" { "coco17" } else { &args.layout }).at(&args.detections)?, Vec::new())
    } else {
        let layout = resolve_layout(&args.layout, &det_bytes, &args.detections)?;
        let dets = parse_detections(&det_bytes, &layout).at(&args.detections)?;
        (layout, dets)
    };
    let index = read_index(args, &dets)?;
    let best = best_detections(&dets);

    let lifted: Vec<(TrajectoryFrame, Vec<LiftOutcome>, bool)> = index
        .par_iter()
        .map(|row| {
            let Some(det) = best.get(&row.image_id) else {
                return Ok((TrajectoryFrame { t: row.t, keypoints: BTreeMap::new() }, Vec::new(), false));
            };
            let path = args.depth_dir.join(&row.depth_file);
            let depth = DepthFrame::load(&path).at(&path)?;
            let outcomes = lift_person(&depth, det, &layout, &spec, &intr, args.conf);
            let keypoints = outcomes
                .iter()
                .filter_map(|(&i, o)| o.point().map(|p| (i, (p.clone(), det.keypoints[i].c))))
                .collect();
            Ok((TrajectoryFrame { t: row.t, keypoints }, outcomes.into_values().collect(), true))
        })
        .collect::<CliResult<_>>()?;

    let mut counts = Counts::default();
    let mut frames = Vec::with_capacity(lifted.len());
    let mut with_detection = 0;
    for (frame, outcomes, detected) in lifted {
        with_detection += usize::from(detected);
        for o in outcomes {
            match o {
                LiftOutcome::Lifted(_) => counts.lifted += 1,
                LiftOutcome::Skipped => counts.skipped_low_confidence += 1,
                LiftOutcome::Failed(LiftFailure::OutOfFrame) => counts.out_of_frame += 1,
                LiftOutcome::Failed(LiftFailure::NoDepth) => counts.no_depth += 1,
                LiftOutcome::Failed(LiftFailure::InsufficientDepth { .. }) => counts.insufficient_depth += 1,
            }
        }
        frames.push(frame);
    }
    let mut traj = Trajectory::new(frames).map_err(|e| CliError::Config(e.to_string()))?;
    if let Some(t) = &transform {
        traj = traj.transformed(t).at(args.transform.as_deref().expect("transform path"))?;
    }
    write_file(&args.out, traj.to_jsonl().as_bytes())?;

    let body = Body {
        layout: layout.name(),
        conf: args.conf,
        neighborhood: spec,
        frame: transform.as_ref().map_or("camera", |t| t.target.as_str()),
        frames: traj.len(),
        frames_with_detection: with_detection,
        keypoints: counts,
    };
    info!("lifted {} keypoints over {} frames", body.keypoints.lifted, body.frames);
    let lifted_any = body.keypoints.lifted > 0;
    out.emit(&out.envelope("lift", &body), args.report.as_deref())?;
    if !lifted_any {
        return Err(CliError::Empty("no keypoint was lifted".into()));
    }
    Ok(())
}
