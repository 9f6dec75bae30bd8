use std::collections::BTreeMap;

use hicp_core::annotation::write_detections;
use hicp_core::eval3d::{MocapFrame, TrajectoryFrame};
use hicp_core::synth::{perturb_detections, render_depth_frame};
use hicp_core::{project_keypoints, MarkerPairing, MocapTrack, SceneSpec, Trajectory};
use log::info;
use nalgebra::Vector3;
use rayon::prelude::*;
use serde::Serialize;

use crate::cli::SynthArgs;
use crate::error::{CliError, CliResult, Context};
use crate::output::{create_dir, csv_bytes, num, read_text, write_file, Output};

/// Offset of the two synthetic MoCap markers on either side of a keypoint.
const MARKER_OFFSET: f64 = 0.01;

#[derive(Serialize)]
struct Body<'a> {
    seed: u64,
    layout: &'a str,
    width: u32,
    height: u32,
    frames: usize,
    fps: f64,
    keypoints: usize,
    depth_format: &'static str,
}

fn marker_names(i: usize) -> (String, String) {
    (format!("kp{i}_a"), format!("kp{i}_b"))
}

pub fn run(args: &SynthArgs, out: &Output) -> CliResult<()> {
    let mut spec = SceneSpec::from_toml(&read_text(&args.scene)?).at(&args.scene)?;
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    spec.validate().map_err(|e| CliError::config(&args.scene, e))?;
    let layout = spec.keypoint_layout().map_err(|e| CliError::config(&args.scene, e))?;
    let gt_points = spec.keypoints3d().map_err(|e| CliError::config(&args.scene, e))?;
    let ext = args.depth_format.extension();
    let depth_dir = args.out.join("depth");
    create_dir(&depth_dir)?;

    let frames: Vec<_> = (0..spec.frames)
        .into_par_iter()
        .map(|f| {
            let scene = spec.at_frame(f);
            let image_id = f as u64 + 1;
            let depth = render_depth_frame(&scene, f);
            let path = depth_dir.join(format!("{image_id}.{ext}"));
            depth.save(&path).at(&path)?;
            let projected = project_keypoints(&scene).at(&args.scene)?;
            let det = perturb_detections(&scene, &projected, image_id, layout.total(), f);
            let points = scene.keypoints3d().map_err(|e| CliError::config(&args.scene, e))?;
            Ok((f, det, points))
        })
        .collect::<CliResult<_>>()?;

    let mut dets = Vec::with_capacity(frames.len());
    let mut traj = Vec::with_capacity(frames.len());
    let mut mocap = Vec::with_capacity(frames.len());
    let mut index_rows = Vec::with_capacity(frames.len());
    for (f, det, points) in frames {
        let t = spec.timestamp(f);
        index_rows.push(vec![det.image_id.to_string(), num(t), format!("{}.{ext}", det.image_id)]);
        dets.push(det);
        let mut markers = BTreeMap::new();
        for (&i, p) in &points {
            let (a, b) = marker_names(i);
            let offset = Vector3::new(MARKER_OFFSET, 0.0, 0.0);
            markers.insert(a, p.coords() - offset);
            markers.insert(b, p.coords() + offset);
        }
        mocap.push(MocapFrame { t, markers });
        traj.push(TrajectoryFrame { t, keypoints: points.into_iter().map(|(i, p)| (i, (p, 1.0))).collect() });
    }
    let traj = Trajectory::new(traj).map_err(|e| CliError::Config(e.to_string()))?;
    let mocap = MocapTrack::new(mocap).map_err(|e| CliError::Config(e.to_string()))?;
    let pairing = MarkerPairing::new(gt_points.keys().map(|&i| (i, marker_names(i))).collect())
        .map_err(|e| CliError::Config(e.to_string()))?;

    write_file(&args.out.join("detections.json"), &write_detections(&dets))?;
    write_file(&args.out.join("gt_trajectory.jsonl"), traj.to_jsonl().as_bytes())?;
    let header = ["image_id", "t", "depth_file"].map(String::from);
    write_file(&args.out.join("frames.csv"), &csv_bytes(&header, &index_rows))?;
    write_file(&args.out.join("mocap.csv"), mocap.to_csv().as_bytes())?;
    write_file(&args.out.join("pairing.toml"), pairing.to_toml().as_bytes())?;
    let intrinsics = toml::to_string(&spec.camera).map_err(|e| CliError::Config(e.to_string()))?;
    write_file(&args.out.join("intrinsics.toml"), intrinsics.as_bytes())?;

    let (width, height) = spec.size();
    let body = Body {
        seed: spec.seed,
        layout: layout.name(),
        width,
        height,
        frames: spec.frames,
        fps: spec.fps,
        keypoints: gt_points.len(),
        depth_format: ext,
    };
    info!("rendered {} frames of {width}x{height}", spec.frames);
    out.emit(&out.envelope("synth", &body), Some(&args.out.join("summary.json")))
}
