//! Lifting 2D keypoints to 3D camera-frame points.
//!
//! Each keypoint is back-projected together with every valid depth pixel in a
//! metric neighborhood around it; the lifted position is the componentwise
//! median of those 3D points. The neighborhood radius is fixed in meters per
//! keypoint group and converted to pixels using the depth at the keypoint.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotation::{DetectionRecord, Keypoint};
use crate::camera::{pixel_radius, Axis, CameraIntrinsics, Point3};
use crate::depth::{DepthFrame, INVALID_DEPTH};
use crate::layout::{Group, KeypointLayout};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WindowShape {
    /// Axis-aligned rectangle with per-axis half-widths.
    #[default]
    Rect,
    /// Ellipse inscribed in the rectangle.
    Disc,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NeighborhoodSpec {
    /// Radius in meters for body keypoints.
    pub body: f64,
    pub hand: f64,
    pub face: f64,
    /// Minimum share of valid pixels in the window, in (0, 1].
    pub min_valid_fraction: f64,
    pub shape: WindowShape,
}

impl Default for NeighborhoodSpec {
    fn default() -> Self {
        Self { body: 0.020, hand: 0.003, face: 0.003, min_valid_fraction: 0.1, shape: WindowShape::Rect }
    }
}

impl NeighborhoodSpec {
    pub fn radius(&self, group: Group) -> f64 {
        match group.partition() {
            Group::Body => self.body,
            Group::Face => self.face,
            _ => self.hand,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        for (name, r) in [("body", self.body), ("hand", self.hand), ("face", self.face)] {
            if !(r > 0.0 && r.is_finite()) {
                return Err(format!("{name} radius must be positive, got {r}"));
            }
        }
        if !(self.min_valid_fraction > 0.0 && self.min_valid_fraction <= 1.0) {
            return Err(format!("min_valid_fraction must be in (0, 1], got {}", self.min_valid_fraction));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "failure")]
pub enum LiftFailure {
    #[error("keypoint lies outside the depth frame")]
    OutOfFrame,
    #[error("no valid depth around the keypoint")]
    NoDepth,
    #[error("only {valid} of {window} window pixels have valid depth")]
    InsufficientDepth { valid: usize, window: usize },
}

/// 3×3 neighborhood, nearest first; ties resolved by this fixed order.
const SEED_OFFSETS: [(i64, i64); 9] =
    [(0, 0), (0, -1), (-1, 0), (1, 0), (0, 1), (-1, -1), (1, -1), (-1, 1), (1, 1)];

fn seed_depth(depth: &DepthFrame, x: i64, y: i64) -> Option<u16> {
    SEED_OFFSETS
        .iter()
        .filter_map(|&(dx, dy)| depth.get(x + dx, y + dy))
        .find(|&d| d != INVALID_DEPTH)
}

/// Median of a non-empty slice; mean of the two middle values for even
/// lengths.
pub(crate) fn median(values: &mut [f64]) -> f64 {
    debug_assert!(!values.is_empty());
    values.sort_unstable_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Lifts one keypoint of `group` to the camera frame.
pub fn lift_keypoint(
    depth: &DepthFrame,
    kp: &Keypoint,
    group: Group,
    spec: &NeighborhoodSpec,
    intr: &CameraIntrinsics,
) -> Result<Point3, LiftFailure> {
    if !(kp.u.is_finite() && kp.v.is_finite()) {
        return Err(LiftFailure::OutOfFrame);
    }
    let (x, y) = (kp.u.round(), kp.v.round());
    if x < 0.0 || y < 0.0 || x >= depth.width() as f64 || y >= depth.height() as f64 {
        return Err(LiftFailure::OutOfFrame);
    }
    let (x, y) = (x as i64, y as i64);
    let seed = seed_depth(depth, x, y).ok_or(LiftFailure::NoDepth)?;
    let k0 = f64::from(seed) / 1000.0;

    let r = spec.radius(group);
    let half = |axis| {
        pixel_radius(r, k0, intr, axis)
            .map(|px| (px.round() as i64).max(1))
            .unwrap_or(1)
    };
    let (hx, hy) = (half(Axis::X), half(Axis::Y));

    let (x0, x1) = ((x - hx).max(0), (x + hx).min(depth.width() as i64 - 1));
    let (y0, y1) = ((y - hy).max(0), (y + hy).min(depth.height() as i64 - 1));
    let inside = |px: i64, py: i64| match spec.shape {
        WindowShape::Rect => true,
        WindowShape::Disc => {
            let (dx, dy) = ((px - x) as f64 / hx as f64, (py - y) as f64 / hy as f64);
            dx * dx + dy * dy <= 1.0
        }
    };

    let mut window = 0usize;
    let (mut xs, mut ys, mut zs) = (Vec::new(), Vec::new(), Vec::new());
    for py in y0..=y1 {
        for px in x0..=x1 {
            if !inside(px, py) {
                continue;
            }
            window += 1;
            let mm = depth.get(px, py).unwrap_or(INVALID_DEPTH);
            if mm == INVALID_DEPTH {
                continue;
            }
            let k = f64::from(mm) / 1000.0;
            xs.push(k * (px as f64 - intr.cx) / intr.fx);
            ys.push(k * (py as f64 - intr.cy) / intr.fy);
            zs.push(k);
        }
    }
    let valid = zs.len();
    if (valid as f64) < spec.min_valid_fraction * window as f64 || valid == 0 {
        return Err(LiftFailure::InsufficientDepth { valid, window });
    }
    Ok(Point3::camera(median(&mut xs), median(&mut ys), median(&mut zs)))
}

#[derive(Debug, Clone, PartialEq)]
pub enum LiftOutcome {
    Lifted(Point3),
    /// Confidence below the threshold.
    Skipped,
    Failed(LiftFailure),
}

impl LiftOutcome {
    pub fn point(&self) -> Option<&Point3> {
        match self {
            LiftOutcome::Lifted(p) => Some(p),
            _ => None,
        }
    }
}

/// Lifts every keypoint of a detection whose confidence is at least
/// `conf_threshold`; the rest are marked skipped.
pub fn lift_person(
    depth: &DepthFrame,
    det: &DetectionRecord,
    layout: &KeypointLayout,
    spec: &NeighborhoodSpec,
    intr: &CameraIntrinsics,
    conf_threshold: f64,
) -> BTreeMap<usize, LiftOutcome> {
    det.keypoints
        .iter()
        .enumerate()
        .map(|(i, kp)| {
            let outcome = if !(kp.c >= conf_threshold) {
                LiftOutcome::Skipped
            } else {
                let group = layout.group_of(i).unwrap_or(Group::Body);
                match lift_keypoint(depth, kp, group, spec, intr) {
                    Ok(p) => LiftOutcome::Lifted(p),
                    Err(f) => LiftOutcome::Failed(f),
                }
            };
            (i, outcome)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn intr() -> CameraIntrinsics {
        CameraIntrinsics::new(600.0, 600.0, 32.0, 24.0).unwrap()
    }

    #[test]
    fn constant_plane_gives_exact_depth() {
        let depth = DepthFrame::filled(64, 48, 1000);
        for &(u, v) in &[(32.0, 24.0), (5.2, 7.7), (60.0, 40.0), (0.0, 0.0)] {
            let p = lift_keypoint(&depth, &Keypoint::new(u, v, 1.0), Group::Body, &NeighborhoodSpec::default(), &intr()).unwrap();
            assert_eq!(p.z, 1.0);
        }
    }

    #[test]
    fn invalid_pixels_are_excluded() {
        let mut depth = DepthFrame::filled(64, 48, 1000);
        for y in 0..48 {
            for x in 0..64 {
                if (x + y) % 2 == 1 {
                    depth.set(x, y, 0);
                }
            }
        }
        let p = lift_keypoint(&depth, &Keypoint::new(32.0, 24.0, 1.0), Group::Body, &NeighborhoodSpec::default(), &intr()).unwrap();
        assert_eq!(p.z, 1.0);
    }

    #[test]
    fn seed_from_neighbor_when_center_invalid() {
        let mut depth = DepthFrame::filled(64, 48, 0);
        depth.set(33, 24, 2000);
        depth.set(31, 24, 1000);
        // (-1, 0) precedes (1, 0) in the seed order.
        let spec = NeighborhoodSpec { min_valid_fraction: 0.001, ..Default::default() };
        let p = lift_keypoint(&depth, &Keypoint::new(32.0, 24.0, 1.0), Group::Hand, &spec, &intr()).unwrap();
        // Hand radius 3 mm at 1 m → 1.8 px → half-width 2 on both axes.
        assert_eq!(p.z, 1.5);
    }

    #[test]
    fn failures() {
        let spec = NeighborhoodSpec::default();
        let empty = DepthFrame::filled(64, 48, 0);
        let kp = Keypoint::new(10.0, 10.0, 1.0);
        assert_eq!(lift_keypoint(&empty, &kp, Group::Body, &spec, &intr()), Err(LiftFailure::NoDepth));
        assert_eq!(
            lift_keypoint(&empty, &Keypoint::new(64.0, 3.0, 1.0), Group::Body, &spec, &intr()),
            Err(LiftFailure::OutOfFrame)
        );
        assert_eq!(
            lift_keypoint(&empty, &Keypoint::new(-0.6, 3.0, 1.0), Group::Body, &spec, &intr()),
            Err(LiftFailure::OutOfFrame)
        );
        let mut sparse = DepthFrame::filled(64, 48, 0);
        sparse.set(10, 10, 1000);
        let err = lift_keypoint(&sparse, &kp, Group::Body, &spec, &intr()).unwrap_err();
        // x and y both clip at 0: [0, 22].
        assert_eq!(err, LiftFailure::InsufficientDepth { valid: 1, window: 23 * 23 });
    }

    #[test]
    fn window_is_clipped_at_border() {
        let mut depth = DepthFrame::filled(64, 48, 0);
        depth.set(0, 0, 1000);
        let spec = NeighborhoodSpec { min_valid_fraction: 0.001, ..Default::default() };
        let err = lift_keypoint(&DepthFrame::filled(64, 48, 0), &Keypoint::new(0.0, 0.0, 1.0), Group::Body, &spec, &intr());
        assert_eq!(err, Err(LiftFailure::NoDepth));
        let p = lift_keypoint(&depth, &Keypoint::new(0.0, 0.0, 1.0), Group::Body, &spec, &intr()).unwrap();
        assert_eq!((p.x, p.y, p.z), (-32.0 / 600.0, -24.0 / 600.0, 1.0));
    }

    #[test]
    fn disc_window_counts_fewer_pixels() {
        let mut sparse = DepthFrame::filled(64, 48, 0);
        sparse.set(10, 10, 1000);
        let spec = NeighborhoodSpec { shape: WindowShape::Disc, ..Default::default() };
        match lift_keypoint(&sparse, &Keypoint::new(10.0, 10.0, 1.0), Group::Body, &spec, &intr()) {
            Err(LiftFailure::InsufficientDepth { window, .. }) => assert!(window < 625 && window > 400),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn person_threshold_skips() {
        let layout = KeypointLayout::coco17();
        let depth = DepthFrame::filled(64, 48, 1500);
        let kps: Vec<Keypoint> = (0..17).map(|i| Keypoint::new(20.0 + i as f64, 20.0, i as f64 / 16.0)).collect();
        let det = DetectionRecord::new(1, kps, 0.9);
        let spec = NeighborhoodSpec::default();
        let skipped = |t: f64| {
            lift_person(&depth, &det, &layout, &spec, &intr(), t)
                .into_iter()
                .filter(|(_, o)| *o == LiftOutcome::Skipped)
                .map(|(i, _)| i)
                .collect::<Vec<_>>()
        };
        let (low, high) = (skipped(0.1), skipped(0.3));
        assert!(low.iter().all(|i| high.contains(i)));
        assert!(high.len() > low.len());
        let zero = DetectionRecord::new(1, vec![Keypoint::new(5.0, 5.0, 0.0); 17], 0.0);
        assert!(lift_person(&depth, &zero, &layout, &spec, &intr(), 0.1).values().all(|o| *o == LiftOutcome::Skipped));
        let lifted = lift_person(&depth, &det, &layout, &spec, &intr(), 0.0);
        assert!(lifted.values().all(|o| o.point().map(|p| p.z) == Some(1.5)));
    }
}
