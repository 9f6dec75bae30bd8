//! 3D keypoint evaluation: stability around per-keypoint median centers and
//! distance to motion-capture ground truth.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::camera::{FrameId, Point3};
use crate::error::{ConfigError, Eval3dError, GeometryError};
use crate::lift::median;
use crate::registration::{apply_rigid, RigidTransform};

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryFrame {
    pub t: f64,
    /// Keypoint index → (position, confidence).
    pub keypoints: BTreeMap<usize, (Point3, f64)>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    frames: Vec<TrajectoryFrame>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFrame {
    t: f64,
    keypoints: BTreeMap<usize, [f64; 4]>,
}

fn check_sorted(times: impl Iterator<Item = f64>) -> Result<(), Eval3dError> {
    let mut prev = f64::NEG_INFINITY;
    for (i, t) in times.enumerate() {
        if !(t >= prev) || !t.is_finite() {
            return Err(Eval3dError::Unsorted(i));
        }
        prev = t;
    }
    Ok(())
}

impl Trajectory {
    pub fn new(frames: Vec<TrajectoryFrame>) -> Result<Self, Eval3dError> {
        check_sorted(frames.iter().map(|f| f.t))?;
        Ok(Self { frames })
    }

    pub fn frames(&self) -> &[TrajectoryFrame] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.frames.iter().map(|f| f.t).collect()
    }

    /// One JSON object per line: `{"t": s, "keypoints": {"i": [x, y, z, c]}}`.
    /// Blank lines are ignored.
    pub fn parse_jsonl(text: &str, frame: &FrameId) -> Result<Self, Eval3dError> {
        let mut frames = Vec::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let raw: RawFrame =
                serde_json::from_str(line).map_err(|e| Eval3dError::Parse { line: n + 1, message: e.to_string() })?;
            let keypoints = raw
                .keypoints
                .into_iter()
                .map(|(i, [x, y, z, c])| (i, (Point3::new(x, y, z, frame.clone()), c)))
                .collect();
            frames.push(TrajectoryFrame { t: raw.t, keypoints });
        }
        Self::new(frames)
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for f in &self.frames {
            let raw = RawFrame {
                t: f.t,
                keypoints: f.keypoints.iter().map(|(&i, (p, c))| (i, [p.x, p.y, p.z, *c])).collect(),
            };
            out.push_str(&serde_json::to_string(&raw).expect("trajectory frames serialize"));
            out.push('\n');
        }
        out
    }

    /// Every point mapped through `t`.
    pub fn transformed(&self, t: &RigidTransform) -> Result<Self, GeometryError> {
        let frames = self
            .frames
            .iter()
            .map(|f| {
                let keypoints = f
                    .keypoints
                    .iter()
                    .map(|(&i, (p, c))| Ok((i, (apply_rigid(p, t)?, *c))))
                    .collect::<Result<_, GeometryError>>()?;
                Ok(TrajectoryFrame { t: f.t, keypoints })
            })
            .collect::<Result<_, GeometryError>>()?;
        Ok(Self { frames })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MocapFrame {
    pub t: f64,
    pub markers: BTreeMap<String, Vector3<f64>>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MocapTrack {
    frames: Vec<MocapFrame>,
}

#[derive(Deserialize)]
struct MocapRow {
    t: f64,
    marker_id: String,
    x: f64,
    y: f64,
    z: f64,
}

impl MocapTrack {
    pub fn new(frames: Vec<MocapFrame>) -> Result<Self, Eval3dError> {
        check_sorted(frames.iter().map(|f| f.t))?;
        Ok(Self { frames })
    }

    pub fn frames(&self) -> &[MocapFrame] {
        &self.frames
    }

    /// CSV with header `t,marker_id,x,y,z` (meters). Consecutive rows with
    /// the same `t` form one frame.
    pub fn parse_csv(text: &str) -> Result<Self, Eval3dError> {
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
        let headers = reader.headers().map_err(|e| Eval3dError::Parse { line: 1, message: e.to_string() })?;
        if headers.iter().collect::<Vec<_>>() != ["t", "marker_id", "x", "y", "z"] {
            return Err(Eval3dError::Parse { line: 1, message: "header must be t,marker_id,x,y,z".into() });
        }
        let mut frames: Vec<MocapFrame> = Vec::new();
        for row in reader.deserialize::<MocapRow>() {
            let row = row.map_err(|e| Eval3dError::Parse {
                line: e.position().map_or(0, |p| p.line() as usize),
                message: e.to_string(),
            })?;
            let p = Vector3::new(row.x, row.y, row.z);
            match frames.last_mut() {
                Some(f) if f.t == row.t => {
                    f.markers.insert(row.marker_id, p);
                }
                _ => frames.push(MocapFrame { t: row.t, markers: BTreeMap::from([(row.marker_id, p)]) }),
            }
        }
        Self::new(frames)
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["t", "marker_id", "x", "y", "z"]).expect("in-memory write");
        for f in &self.frames {
            for (id, p) in &f.markers {
                w.write_record([f.t.to_string(), id.clone(), p.x.to_string(), p.y.to_string(), p.z.to_string()])
                    .expect("in-memory write");
            }
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
    }
}

/// Keypoint index → the two markers placed on it.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarkerPairing {
    pub pairs: BTreeMap<usize, (String, String)>,
}

impl MarkerPairing {
    pub fn new(pairs: BTreeMap<usize, (String, String)>) -> Result<Self, Eval3dError> {
        let p = Self { pairs };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), Eval3dError> {
        match self.pairs.iter().find(|(_, (a, b))| a == b) {
            Some((&i, _)) => Err(Eval3dError::DuplicateMarker(i)),
            None => Ok(()),
        }
    }

    /// `[pairs]` table mapping keypoint index to `["marker-a", "marker-b"]`.
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            pairs: BTreeMap<String, (String, String)>,
        }
        let raw: Raw = toml::from_str(text)?;
        let pairs = raw
            .pairs
            .into_iter()
            .map(|(k, v)| k.trim().parse().map(|i| (i, v)).map_err(|_| ConfigError::Invalid(format!("`{k}` is not a keypoint index"))))
            .collect::<Result<_, _>>()?;
        Self::new(pairs).map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        let mut out = String::from("[pairs]\n");
        for (i, (a, b)) in &self.pairs {
            out.push_str(&format!("{i} = [{a:?}, {b:?}]\n"));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistanceBins(Vec<f64>);

impl Default for DistanceBins {
    fn default() -> Self {
        Self(vec![0.025, 0.05, 0.1])
    }
}

impl DistanceBins {
    pub fn new(thresholds: Vec<f64>) -> Result<Self, Eval3dError> {
        let ok = !thresholds.is_empty()
            && thresholds.iter().all(|t| *t > 0.0 && t.is_finite())
            && thresholds.windows(2).all(|w| w[0] < w[1]);
        if ok {
            Ok(Self(thresholds))
        } else {
            Err(Eval3dError::InvalidBins)
        }
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.0
    }

    fn fractions(&self, distances: &[f64], denominator: usize) -> Vec<f64> {
        self.0
            .iter()
            .map(|&b| {
                if denominator == 0 {
                    0.0
                } else {
                    distances.iter().filter(|&&d| d <= b).count() as f64 / denominator as f64
                }
            })
            .collect()
    }
}

fn qualifying(traj: &Trajectory, conf_threshold: f64) -> BTreeMap<usize, Vec<&Point3>> {
    let mut by_kp: BTreeMap<usize, Vec<&Point3>> = BTreeMap::new();
    for f in traj.frames() {
        for (&i, (p, c)) in &f.keypoints {
            if *c >= conf_threshold {
                by_kp.entry(i).or_default().push(p);
            }
        }
    }
    by_kp
}

/// Componentwise median over the frames where a keypoint's confidence is at
/// least `conf_threshold`. Keypoints that never qualify are omitted.
pub fn median_center(traj: &Trajectory, conf_threshold: f64) -> BTreeMap<usize, Point3> {
    qualifying(traj, conf_threshold)
        .into_iter()
        .map(|(i, pts)| {
            let mut xs: Vec<f64> = pts.iter().map(|p| p.x).collect();
            let mut ys: Vec<f64> = pts.iter().map(|p| p.y).collect();
            let mut zs: Vec<f64> = pts.iter().map(|p| p.z).collect();
            (i, Point3::new(median(&mut xs), median(&mut ys), median(&mut zs), pts[0].frame.clone()))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelativeRow {
    pub keypoint: usize,
    pub frames: usize,
    pub detected: usize,
    pub detection_fraction: f64,
    /// Share of detected frames within each bin of the center.
    pub within: Vec<f64>,
}

pub fn relative_stats(
    traj: &Trajectory,
    centers: &BTreeMap<usize, Point3>,
    bins: &DistanceBins,
    conf_threshold: f64,
) -> Vec<RelativeRow> {
    let total = traj.len();
    let by_kp = qualifying(traj, conf_threshold);
    centers
        .iter()
        .map(|(&i, center)| {
            let pts = by_kp.get(&i).map(Vec::as_slice).unwrap_or(&[]);
            let distances: Vec<f64> = pts.iter().map(|p| p.distance(center)).collect();
            RelativeRow {
                keypoint: i,
                frames: total,
                detected: pts.len(),
                detection_fraction: if total == 0 { 0.0 } else { pts.len() as f64 / total as f64 },
                within: bins.fractions(&distances, pts.len()),
            }
        })
        .collect()
}

/// Per frame, each paired keypoint at the midpoint of its two markers
/// (confidence 1). Keypoints with a missing marker are left out of that
/// frame.
pub fn marker_ground_truth(mocap: &MocapTrack, pairing: &MarkerPairing, frame: &FrameId) -> Result<Trajectory, Eval3dError> {
    pairing.validate()?;
    let seen: BTreeSet<&str> = mocap.frames().iter().flat_map(|f| f.markers.keys().map(String::as_str)).collect();
    for (a, b) in pairing.pairs.values() {
        for m in [a, b] {
            if !seen.contains(m.as_str()) {
                return Err(Eval3dError::UnknownMarker(m.clone()));
            }
        }
    }
    let frames = mocap
        .frames()
        .iter()
        .map(|f| {
            let keypoints = pairing
                .pairs
                .iter()
                .filter_map(|(&i, (a, b))| {
                    let (pa, pb) = (f.markers.get(a)?, f.markers.get(b)?);
                    Some((i, (Point3::from_vector((pa + pb) * 0.5, frame.clone()), 1.0)))
                })
                .collect();
            TrajectoryFrame { t: f.t, keypoints }
        })
        .collect();
    Trajectory::new(frames)
}

pub const DEFAULT_TIME_TOLERANCE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Association {
    /// `(frame in a, frame in b)`, ordered by the `a` index.
    pub pairs: Vec<(usize, usize)>,
    pub unpaired_a: usize,
    pub unpaired_b: usize,
}

/// One-to-one frame pairing: candidate pairs with `|Δt| ≤ tolerance` are
/// accepted greedily in order of `(|Δt|, a index, b index)`.
pub fn associate_by_time(a: &[f64], b: &[f64], tolerance: f64) -> Association {
    let mut candidates = Vec::new();
    let mut lo = 0;
    for (i, &ta) in a.iter().enumerate() {
        while lo < b.len() && b[lo] < ta - tolerance {
            lo += 1;
        }
        for (j, &tb) in b.iter().enumerate().skip(lo) {
            if tb > ta + tolerance {
                break;
            }
            let dt = (ta - tb).abs();
            if dt <= tolerance {
                candidates.push((dt, i, j));
            }
        }
    }
    candidates.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let (mut used_a, mut used_b) = (vec![false; a.len()], vec![false; b.len()]);
    let mut pairs = Vec::new();
    for (_, i, j) in candidates {
        if !used_a[i] && !used_b[j] {
            used_a[i] = true;
            used_b[j] = true;
            pairs.push((i, j));
        }
    }
    pairs.sort_unstable();
    Association { pairs: pairs.clone(), unpaired_a: a.len() - pairs.len(), unpaired_b: b.len() - pairs.len() }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AbsoluteRow {
    pub keypoint: usize,
    pub conf_threshold: f64,
    /// Paired frames with a ground-truth position for this keypoint.
    pub gt_frames: usize,
    /// Detections at or above the threshold in those frames.
    pub count: usize,
    pub median_distance: Option<f64>,
    /// Share of `gt_frames` with a qualifying detection within each bin.
    pub within: Vec<f64>,
}

/// Distances between detected and ground-truth keypoints over paired frames
/// (`(detected frame, gt frame)`), per keypoint and confidence threshold.
/// Keypoints in `exclude` are left out.
pub fn absolute_stats(
    detected: &Trajectory,
    gt: &Trajectory,
    pairs: &[(usize, usize)],
    bins: &DistanceBins,
    conf_thresholds: &[f64],
    exclude: &BTreeSet<usize>,
) -> Result<Vec<AbsoluteRow>, Eval3dError> {
    let keypoints: BTreeSet<usize> = pairs
        .iter()
        .filter_map(|&(_, j)| gt.frames().get(j))
        .flat_map(|f| f.keypoints.keys().copied())
        .filter(|i| !exclude.contains(i))
        .collect();
    let mut rows = Vec::new();
    for &i in &keypoints {
        let mut gt_frames = 0usize;
        let mut observations: Vec<(f64, f64)> = Vec::new();
        for &(d, g) in pairs {
            let (Some(df), Some(gf)) = (detected.frames().get(d), gt.frames().get(g)) else {
                continue;
            };
            let Some((gp, _)) = gf.keypoints.get(&i) else {
                continue;
            };
            gt_frames += 1;
            if let Some((dp, c)) = df.keypoints.get(&i) {
                if dp.frame != gp.frame {
                    return Err(GeometryError::FrameMismatch {
                        expected: gp.frame.to_string(),
                        found: dp.frame.to_string(),
                    }
                    .into());
                }
                observations.push((*c, dp.distance(gp)));
            }
        }
        for &threshold in conf_thresholds {
            let mut distances: Vec<f64> = observations.iter().filter(|(c, _)| *c >= threshold).map(|(_, d)| *d).collect();
            let within = bins.fractions(&distances, gt_frames);
            let count = distances.len();
            let median_distance = (count > 0).then(|| median(&mut distances));
            rows.push(AbsoluteRow { keypoint: i, conf_threshold: threshold, gt_frames, count, median_distance, within });
        }
    }
    Ok(rows)
}
