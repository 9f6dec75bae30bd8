//! Synthetic scenes with analytic geometry: depth rasters ray-cast from
//! planes, spheres and capsules, exact keypoint projections and seeded
//! pseudo-detections.
//!
//! Randomness comes from ChaCha8 seeded with `seed_from_u64(seed)`; each
//! depth row and each detection draws from its own stream so output does not
//! depend on thread count. Normals use the cosine branch of Box-Muller.

use std::collections::BTreeMap;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::annotation::{DetectionRecord, Keypoint};
use crate::camera::{CameraIntrinsics, Point3};
use crate::depth::{DepthFrame, INVALID_DEPTH};
use crate::error::{ConfigError, GeometryError};
use crate::layout::KeypointLayout;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Primitive {
    /// Fronto-parallel plane at depth `z` meters.
    Plane { z: f64 },
    Sphere { center: [f64; 3], radius: f64 },
    /// Segment `a`–`b` swept by a ball of `radius`.
    Capsule { a: [f64; 3], b: [f64; 3], radius: f64 },
}

impl Primitive {
    fn validate(&self) -> Result<(), String> {
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        match *self {
            Primitive::Plane { z } if z > 0.0 && z.is_finite() => Ok(()),
            Primitive::Sphere { center, radius }
                if finite(&center) && radius > 0.0 && center[2] - radius > 0.0 =>
            {
                Ok(())
            }
            Primitive::Capsule { a, b, radius }
                if finite(&a) && finite(&b) && radius > 0.0 && a[2].min(b[2]) - radius > 0.0 =>
            {
                Ok(())
            }
            ref p => Err(format!("primitive {p:?} is not fully in front of the camera")),
        }
    }

    fn translated(&self, d: &Vector3<f64>) -> Self {
        let shift = |p: [f64; 3]| [p[0] + d.x, p[1] + d.y, p[2] + d.z];
        match *self {
            Primitive::Plane { z } => Primitive::Plane { z: z + d.z },
            Primitive::Sphere { center, radius } => Primitive::Sphere { center: shift(center), radius },
            Primitive::Capsule { a, b, radius } => Primitive::Capsule { a: shift(a), b: shift(b), radius },
        }
    }

    /// Smallest positive ray parameter `t` for the ray `t · dir` from the
    /// origin.
    fn intersect(&self, dir: &Vector3<f64>) -> Option<f64> {
        match *self {
            Primitive::Plane { z } => Some(z / dir.z).filter(|t| *t > 0.0),
            Primitive::Sphere { center, radius } => ray_sphere(dir, &Vector3::from(center), radius),
            Primitive::Capsule { a, b, radius } => {
                let (a, b) = (Vector3::from(a), Vector3::from(b));
                [ray_cylinder(dir, &a, &b, radius), ray_sphere(dir, &a, radius), ray_sphere(dir, &b, radius)]
                    .into_iter()
                    .flatten()
                    .min_by(f64::total_cmp)
            }
        }
    }
}

fn nearest_positive_root(a: f64, b_half: f64, c: f64) -> Option<f64> {
    let disc = b_half * b_half - a * c;
    if disc < 0.0 || a <= 0.0 {
        return None;
    }
    let s = disc.sqrt();
    [(-b_half - s) / a, (-b_half + s) / a].into_iter().find(|t| *t > 0.0)
}

fn ray_sphere(dir: &Vector3<f64>, c: &Vector3<f64>, r: f64) -> Option<f64> {
    nearest_positive_root(dir.dot(dir), -dir.dot(c), c.dot(c) - r * r)
}

/// Hits on the side wall of the finite cylinder `a`–`b`.
fn ray_cylinder(dir: &Vector3<f64>, a: &Vector3<f64>, b: &Vector3<f64>, r: f64) -> Option<f64> {
    let axis = b - a;
    let len2 = axis.dot(&axis);
    if len2 == 0.0 {
        return None;
    }
    let oa = -a;
    let d_perp = dir - axis * (dir.dot(&axis) / len2);
    let o_perp = oa - axis * (oa.dot(&axis) / len2);
    let disc_a = d_perp.dot(&d_perp);
    let disc_b = d_perp.dot(&o_perp);
    let disc_c = o_perp.dot(&o_perp) - r * r;
    let d = disc_b * disc_b - disc_a * disc_c;
    if disc_a <= 0.0 || d < 0.0 {
        return None;
    }
    let s = d.sqrt();
    [(-disc_b - s) / disc_a, (-disc_b + s) / disc_a].into_iter().find(|&t| {
        let along = (dir * t - a).dot(&axis);
        t > 0.0 && (0.0..=len2).contains(&along)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ConfidenceModel {
    Constant { value: f64 },
    Uniform { low: f64, high: f64 },
}

impl Default for ConfidenceModel {
    fn default() -> Self {
        ConfidenceModel::Constant { value: 1.0 }
    }
}

impl ConfidenceModel {
    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match *self {
            ConfidenceModel::Constant { value } => value,
            ConfidenceModel::Uniform { low, high } => low + (high - low) * rng.gen::<f64>(),
        }
    }

    fn validate(&self) -> Result<(), String> {
        let ok = |v: f64| (0.0..=1.0).contains(&v);
        match *self {
            ConfidenceModel::Constant { value } if ok(value) => Ok(()),
            ConfidenceModel::Uniform { low, high } if ok(low) && ok(high) && low <= high => Ok(()),
            m => Err(format!("confidence model {m:?} must stay within [0, 1]")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSpec {
    pub pixel_sigma: f64,
    pub depth_sigma_mm: f64,
    pub confidence: ConfidenceModel,
}

fn default_frames() -> usize {
    1
}

fn default_fps() -> f64 {
    30.0
}

fn default_layout() -> String {
    "coco17".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSpec {
    /// Must carry `width` and `height`.
    pub camera: CameraIntrinsics,
    #[serde(default)]
    pub primitives: Vec<Primitive>,
    /// Keypoint index → camera-frame position in meters. Keys are decimal
    /// strings in TOML.
    #[serde(default)]
    pub keypoints: BTreeMap<String, [f64; 3]>,
    #[serde(default)]
    pub noise: NoiseSpec,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_layout")]
    pub layout: String,
    #[serde(default = "default_frames")]
    pub frames: usize,
    #[serde(default = "default_fps")]
    pub fps: f64,
    /// Rigid drift of the whole scene in m/s.
    #[serde(default)]
    pub velocity: [f64; 3],
}

impl SceneSpec {
    pub fn new(camera: CameraIntrinsics, seed: u64) -> Self {
        Self {
            camera,
            primitives: Vec::new(),
            keypoints: BTreeMap::new(),
            noise: NoiseSpec::default(),
            seed,
            layout: default_layout(),
            frames: 1,
            fps: default_fps(),
            velocity: [0.0; 3],
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let spec: SceneSpec = toml::from_str(text)?;
        spec.validate().map_err(ConfigError::Invalid)?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), String> {
        self.camera.validate().map_err(|e| e.to_string())?;
        if self.camera.width.is_none() || self.camera.height.is_none() {
            return Err("camera needs width and height".into());
        }
        for p in &self.primitives {
            p.validate()?;
        }
        let layout = self.keypoint_layout()?;
        for key in self.keypoints.keys() {
            let idx = parse_index(key)?;
            if idx >= layout.total() {
                return Err(format!("keypoint {idx} outside layout `{}`", layout.name()));
            }
        }
        let n = &self.noise;
        if !(n.pixel_sigma >= 0.0 && n.depth_sigma_mm >= 0.0) {
            return Err("noise sigmas must be ≥ 0".into());
        }
        n.confidence.validate()?;
        if self.frames == 0 || !(self.fps > 0.0) {
            return Err("frames and fps must be positive".into());
        }
        if !self.velocity.iter().all(|v| v.is_finite()) {
            return Err("velocity must be finite".into());
        }
        Ok(())
    }

    pub fn keypoint_layout(&self) -> Result<KeypointLayout, String> {
        KeypointLayout::by_name(&self.layout).map_err(|e| e.to_string())
    }

    pub fn size(&self) -> (u32, u32) {
        (self.camera.width.unwrap_or(0), self.camera.height.unwrap_or(0))
    }

    pub fn timestamp(&self, frame: usize) -> f64 {
        frame as f64 / self.fps
    }

    /// The scene as seen in `frame`, after drifting with `velocity`.
    pub fn at_frame(&self, frame: usize) -> SceneSpec {
        let d = Vector3::from(self.velocity) * self.timestamp(frame);
        let mut out = self.clone();
        out.primitives = self.primitives.iter().map(|p| p.translated(&d)).collect();
        for p in out.keypoints.values_mut() {
            *p = [p[0] + d.x, p[1] + d.y, p[2] + d.z];
        }
        out
    }

    /// GT keypoints as camera-frame points, by index.
    pub fn keypoints3d(&self) -> Result<BTreeMap<usize, Point3>, String> {
        self.keypoints
            .iter()
            .map(|(k, p)| Ok((parse_index(k)?, Point3::camera(p[0], p[1], p[2]))))
            .collect()
    }
}

fn parse_index(key: &str) -> Result<usize, String> {
    key.trim().parse().map_err(|_| format!("keypoint key `{key}` is not an index"))
}

const DEPTH_STREAM: u64 = 1 << 56;
const DETECTION_STREAM: u64 = 2 << 56;

fn stream(seed: u64, domain: u64, frame: usize, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(domain | ((frame as u64) << 32) | index);
    rng
}

/// One standard normal draw.
pub fn standard_normal(rng: &mut impl Rng) -> f64 {
    let u1 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Depth in millimeters, rounded half away from zero; 0 when nothing is hit
/// or the value does not fit.
fn quantize(z_mm: f64) -> u16 {
    let q = z_mm.round();
    if (1.0..=f64::from(u16::MAX)).contains(&q) {
        q as u16
    } else {
        INVALID_DEPTH
    }
}

/// Ray-casts the scene at frame 0.
pub fn render_depth(spec: &SceneSpec) -> DepthFrame {
    render_depth_frame(spec, 0)
}

/// Ray-casts `spec` as-is; `frame` only selects the noise stream. Use
/// [`SceneSpec::at_frame`] for the drifted geometry.
pub fn render_depth_frame(spec: &SceneSpec, frame: usize) -> DepthFrame {
    let (w, h) = spec.size();
    let intr = &spec.camera;
    let sigma = spec.noise.depth_sigma_mm;
    let rows: Vec<Vec<u16>> = (0..h)
        .into_par_iter()
        .map(|y| {
            let mut rng = (sigma > 0.0).then(|| stream(spec.seed, DEPTH_STREAM, frame, u64::from(y)));
            (0..w)
                .map(|x| {
                    let dir = Vector3::new((f64::from(x) - intr.cx) / intr.fx, (f64::from(y) - intr.cy) / intr.fy, 1.0);
                    let hit = spec.primitives.iter().filter_map(|p| p.intersect(&dir)).min_by(f64::total_cmp);
                    match hit {
                        None => INVALID_DEPTH,
                        Some(t) => {
                            let noise = rng.as_mut().map_or(0.0, |r| sigma * standard_normal(r));
                            quantize(t * dir.z * 1000.0 + noise)
                        }
                    }
                })
                .collect()
        })
        .collect();
    DepthFrame::new(w, h, rows.concat()).expect("row lengths match the frame size")
}

/// Exact pixel projections of the scene keypoints, confidence 1.
pub fn project_keypoints(spec: &SceneSpec) -> Result<BTreeMap<usize, Keypoint>, GeometryError> {
    let mut out = BTreeMap::new();
    for (key, p) in &spec.keypoints {
        let idx = parse_index(key).map_err(GeometryError::InvalidIntrinsics)?;
        let (u, v) = spec.camera.project(&Vector3::from(*p))?;
        out.insert(idx, Keypoint::new(u, v, 1.0));
    }
    Ok(out)
}

/// Pseudo-detection from exact projections: Gaussian pixel noise and sampled
/// confidences. Indices without a projection stay `(0, 0, 0)`. The score is
/// the mean sampled confidence.
pub fn perturb_detections(
    spec: &SceneSpec,
    keypoints2d: &BTreeMap<usize, Keypoint>,
    image_id: u64,
    total: usize,
    frame: usize,
) -> DetectionRecord {
    let mut rng = stream(spec.seed, DETECTION_STREAM, frame, image_id);
    let sigma = spec.noise.pixel_sigma;
    let mut kps = vec![Keypoint::default(); total];
    let mut conf_sum = 0.0;
    for (&i, k) in keypoints2d.iter().filter(|(&i, _)| i < total) {
        let (du, dv) = if sigma > 0.0 {
            (sigma * standard_normal(&mut rng), sigma * standard_normal(&mut rng))
        } else {
            (0.0, 0.0)
        };
        let c = spec.noise.confidence.sample(&mut rng);
        conf_sum += c;
        kps[i] = Keypoint::new(k.u + du, k.v + dv, c);
    }
    let score = if keypoints2d.is_empty() { 0.0 } else { (conf_sum / keypoints2d.len() as f64).clamp(0.0, 1.0) };
    DetectionRecord::new(image_id, kps, score)
}
