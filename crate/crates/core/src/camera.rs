//! Pinhole camera model and framed 3D points.

use std::fmt;
use std::sync::Arc;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, GeometryError};

/// Name of a coordinate frame (camera, robot base, MoCap, ...).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FrameId(Arc<str>);

impl FrameId {
    pub fn new(name: &str) -> Self {
        Self(Arc::from(name))
    }

    pub fn camera() -> Self {
        Self::new("camera")
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for FrameId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for FrameId {
    fn from(s: &str) -> Self {
        Self::new(s)
    }
}

/// A point in meters, tagged with the frame it is expressed in.
#[derive(Debug, Clone, PartialEq)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub frame: FrameId,
}

impl Point3 {
    pub fn new(x: f64, y: f64, z: f64, frame: FrameId) -> Self {
        Self { x, y, z, frame }
    }

    pub fn camera(x: f64, y: f64, z: f64) -> Self {
        Self::new(x, y, z, FrameId::camera())
    }

    pub fn from_vector(v: Vector3<f64>, frame: FrameId) -> Self {
        Self::new(v.x, v.y, v.z, frame)
    }

    pub fn coords(&self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }

    pub fn distance(&self, other: &Point3) -> f64 {
        (self.coords() - other.coords()).norm()
    }
}

/// Image axis used when converting metric lengths to pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

/// Pinhole intrinsics in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    /// Image size, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub height: Option<u32>,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64) -> Result<Self, GeometryError> {
        let intr = Self { fx, fy, cx, cy, width: None, height: None };
        intr.validate()?;
        Ok(intr)
    }

    pub fn with_size(mut self, width: u32, height: u32) -> Self {
        self.width = Some(width);
        self.height = Some(height);
        self
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if !(self.fx > 0.0 && self.fx.is_finite() && self.fy > 0.0 && self.fy.is_finite()) {
            return Err(GeometryError::InvalidIntrinsics(format!(
                "focal lengths must be positive and finite (fx = {}, fy = {})",
                self.fx, self.fy
            )));
        }
        if !(self.cx.is_finite() && self.cy.is_finite()) {
            return Err(GeometryError::InvalidIntrinsics("principal point must be finite".into()));
        }
        Ok(())
    }

    pub fn focal(&self, axis: Axis) -> f64 {
        match axis {
            Axis::X => self.fx,
            Axis::Y => self.fy,
        }
    }

    /// Reads `{fx, fy, cx, cy, width, height}` from TOML text.
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let intr: Self = toml::from_str(text)?;
        intr.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(intr)
    }

    /// Projects a camera-frame point to pixel coordinates.
    pub fn project(&self, p: &Vector3<f64>) -> Result<(f64, f64), GeometryError> {
        if !(p.z > 0.0) {
            return Err(GeometryError::BehindCamera(p.z));
        }
        Ok((self.fx * p.x / p.z + self.cx, self.fy * p.y / p.z + self.cy))
    }
}

/// Back-projects pixel `(u, v)` at depth `k` meters into the camera frame.
pub fn backproject(u: f64, v: f64, k: f64, intr: &CameraIntrinsics) -> Result<Point3, GeometryError> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(GeometryError::InvalidDepth(k));
    }
    Ok(Point3::camera(k * (u - intr.cx) / intr.fx, k * (v - intr.cy) / intr.fy, k))
}

/// Pixel length along `axis` of a metric length `r` seen at depth `k`:
/// `(f / k) · r`.
pub fn pixel_radius(r: f64, k: f64, intr: &CameraIntrinsics, axis: Axis) -> Result<f64, GeometryError> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(GeometryError::InvalidDepth(k));
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(GeometryError::InvalidRadius(r));
    }
    Ok(intr.focal(axis) / k * r)
}
