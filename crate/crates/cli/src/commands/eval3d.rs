use std::collections::BTreeSet;
use std::path::Path;

use hicp_core::eval3d::{AbsoluteRow, Association, RelativeRow};
use hicp_core::{
    absolute_stats, associate_by_time, marker_ground_truth, median_center, relative_stats, DistanceBins, FrameId,
    KeypointLayout, MarkerPairing, MocapTrack, RigidTransform, Trajectory,
};
use serde::Serialize;

use crate::cli::{Eval3dArgs, List, Mode};
use crate::error::{CliError, CliResult, Context};
use crate::output::{csv_bytes, num, read_text, write_file, Output};

#[derive(Serialize)]
struct RelativeBlock {
    conf: f64,
    rows: Vec<RelativeRow>,
}

#[derive(Serialize)]
struct RelativeBody<'a> {
    mode: &'static str,
    frames: usize,
    bins: &'a [f64],
    results: Vec<RelativeBlock>,
}

#[derive(Serialize)]
struct AbsoluteBody<'a> {
    mode: &'static str,
    frames: usize,
    gt_frames: usize,
    tolerance: f64,
    association: &'a Association,
    excluded: &'a BTreeSet<usize>,
    bins: &'a [f64],
    rows: &'a [AbsoluteRow],
}

fn bin_columns(bins: &[f64]) -> impl Iterator<Item = String> + '_ {
    bins.iter().map(|b| format!("within_{}", num(*b)))
}

fn parse_exclude(spec: &str, layout: &str) -> CliResult<BTreeSet<usize>> {
    match spec.trim() {
        "none" | "" => Ok(BTreeSet::new()),
        "shoulders" => {
            let layout = KeypointLayout::by_name(layout).map_err(|e| CliError::Config(e.to_string()))?;
            let parts = layout
                .parts()
                .ok_or_else(|| CliError::Config(format!("layout {} has no shoulders", layout.name())))?;
            Ok(BTreeSet::from([parts.left_arm.shoulder, parts.right_arm.shoulder]))
        }
        other => other
            .parse::<List<usize>>()
            .map(|l| l.0.into_iter().collect())
            .map_err(|e| CliError::Config(format!("--exclude: {e}"))),
    }
}

fn check_conf(conf: &[f64]) -> CliResult<()> {
    if conf.is_empty() || !conf.iter().all(|c| c.is_finite()) {
        return Err(CliError::Config("--conf needs at least one finite threshold".into()));
    }
    Ok(())
}

fn require<'a>(path: &'a Option<std::path::PathBuf>, flag: &str) -> CliResult<&'a Path> {
    path.as_deref().ok_or_else(|| CliError::Config(format!("absolute mode needs {flag}")))
}

pub fn run(args: &Eval3dArgs, out: &Output) -> CliResult<()> {
    let bins = DistanceBins::new(args.bins.0.clone()).map_err(|e| CliError::Config(format!("--bins: {e}")))?;
    check_conf(&args.conf.0)?;
    let frame = FrameId::new(&args.traj_frame);
    let traj = Trajectory::parse_jsonl(&read_text(&args.traj)?, &frame).at(&args.traj)?;
    match args.mode {
        Mode::Relative => relative(args, out, &traj, &bins),
        Mode::Absolute => absolute(args, out, &traj, &bins, &frame),
    }
}

fn relative(args: &Eval3dArgs, out: &Output, traj: &Trajectory, bins: &DistanceBins) -> CliResult<()> {
    let results: Vec<RelativeBlock> = args
        .conf
        .0
        .iter()
        .map(|&conf| RelativeBlock { conf, rows: relative_stats(traj, &median_center(traj, conf), bins, conf) })
        .collect();
    let body = RelativeBody { mode: "relative", frames: traj.len(), bins: bins.thresholds(), results };
    out.emit(&out.envelope("eval3d", &body), args.out.as_deref())?;
    if let Some(path) = &args.csv {
        let header: Vec<String> = ["conf", "keypoint", "frames", "detected", "detection_fraction"]
            .map(String::from)
            .into_iter()
            .chain(bin_columns(bins.thresholds()))
            .collect();
        let rows: Vec<Vec<String>> = body
            .results
            .iter()
            .flat_map(|b| {
                b.rows.iter().map(move |r| {
                    [num(b.conf), r.keypoint.to_string(), r.frames.to_string(), r.detected.to_string(), num(r.detection_fraction)]
                        .into_iter()
                        .chain(r.within.iter().map(|w| num(*w)))
                        .collect()
                })
            })
            .collect();
        write_file(path, &csv_bytes(&header, &rows))?;
    }
    if body.results.iter().all(|b| b.rows.is_empty()) {
        return Err(CliError::Empty("no keypoint reaches the confidence threshold".into()));
    }
    Ok(())
}

fn absolute(args: &Eval3dArgs, out: &Output, traj: &Trajectory, bins: &DistanceBins, frame: &FrameId) -> CliResult<()> {
    let exclude = parse_exclude(&args.exclude, &args.layout)?;
    if !(args.tolerance >= 0.0 && args.tolerance.is_finite()) {
        return Err(CliError::Config(format!("--tolerance must be finite and ≥ 0, got {}", args.tolerance)));
    }
    let mocap_path = require(&args.mocap, "--mocap")?;
    let pairing_path = require(&args.pairing, "--pairing")?;
    let mocap = MocapTrack::parse_csv(&read_text(mocap_path)?).at(mocap_path)?;
    let pairing = MarkerPairing::from_toml(&read_text(pairing_path)?).at(pairing_path)?;

    let gt = match &args.transform {
        None => marker_ground_truth(&mocap, &pairing, frame).at(pairing_path)?,
        Some(p) => {
            let t = RigidTransform::from_toml(&read_text(p)?).at(p)?;
            if t.target != *frame {
                return Err(CliError::config(
                    p,
                    format!("transform maps into `{}`, trajectory is in `{}`", t.target, frame),
                ));
            }
            marker_ground_truth(&mocap, &pairing, &t.source).at(pairing_path)?.transformed(&t).at(p)?
        }
    };
    let association = associate_by_time(&traj.times(), &gt.times(), args.tolerance);
    let rows = absolute_stats(traj, &gt, &association.pairs, bins, &args.conf.0, &exclude).at(&args.traj)?;

    let body = AbsoluteBody {
        mode: "absolute",
        frames: traj.len(),
        gt_frames: gt.len(),
        tolerance: args.tolerance,
        association: &association,
        excluded: &exclude,
        bins: bins.thresholds(),
        rows: &rows,
    };
    out.emit(&out.envelope("eval3d", &body), args.out.as_deref())?;
    if let Some(path) = &args.csv {
        let header: Vec<String> = ["conf", "keypoint", "gt_frames", "count", "median_distance"]
            .map(String::from)
            .into_iter()
            .chain(bin_columns(bins.thresholds()))
            .collect();
        let rows: Vec<Vec<String>> = rows
            .iter()
            .map(|r| {
                [
                    num(r.conf_threshold),
                    r.keypoint.to_string(),
                    r.gt_frames.to_string(),
                    r.count.to_string(),
                    r.median_distance.map(num).unwrap_or_default(),
                ]
                .into_iter()
                .chain(r.within.iter().map(|w| num(*w)))
                .collect()
            })
            .collect();
        write_file(path, &csv_bytes(&header, &rows))?;
    }
    if rows.is_empty() {
        return Err(CliError::Empty("no paired keypoint to evaluate".into()));
    }
    Ok(())
}
