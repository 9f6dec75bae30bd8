use std::path::PathBuf;

use thiserror::Error;

use crate::layout::Group;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LayoutError {
    #[error("unknown keypoint layout `{0}`")]
    UnknownLayout(String),
    #[error("unknown keypoint group `{0}`")]
    UnknownGroup(String),
    #[error("layout {layout} has no {group} group")]
    UnsupportedGroup { layout: String, group: Group },
    #[error("layout {layout} expects {expected} keypoints, got {found}")]
    Mismatch { layout: String, expected: usize, found: usize },
    #[error("invalid layout: {0}")]
    Invalid(String),
}

#[derive(Debug, Error)]
pub enum AnnotationError {
    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },
    #[error("annotation {annotation_id}: image_id {image_id} does not resolve to an image")]
    DanglingImage { annotation_id: u64, image_id: u64 },
    #[error("duplicate image id {0}")]
    DuplicateImage(u64),
    #[error("duplicate annotation id {0}")]
    DuplicateAnnotation(u64),
    #[error("record {record}: layout {layout} expects {expected} keypoint values, got {found}")]
    LayoutMismatch { record: String, layout: String, expected: usize, found: usize },
    #[error("{record}: {message}")]
    Invalid { record: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error)]
pub enum CropError {
    #[error("crop window for annotation {annotation_id} is empty")]
    Degenerate { annotation_id: u64 },
    #[error("annotation {annotation_id} has no visible non-head body keypoint")]
    NoBodyCenter { annotation_id: u64 },
    #[error("invalid crop config: {0}")]
    Config(String),
    #[error("cannot read image {path}: {message}")]
    Image { path: PathBuf, message: String },
    #[error(transparent)]
    Layout(#[from] LayoutError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OksError {
    #[error("ground truth has no visible keypoint in the selected indices")]
    Undefined,
    #[error("object scale must be positive and finite, got {0}")]
    InvalidScale(f64),
    #[error("keypoint index {index} out of range for arrays of length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("invalid OKS parameters: {0}")]
    Params(String),
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("detection for image {0} which is not in the dataset")]
    UnknownImage(u64),
    #[error(transparent)]
    Oks(#[from] OksError),
    #[error(transparent)]
    Layout(#[from] LayoutError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("depth must be positive, got {0}")]
    InvalidDepth(f64),
    #[error("radius must be positive, got {0}")]
    InvalidRadius(f64),
    #[error("invalid intrinsics: {0}")]
    InvalidIntrinsics(String),
    #[error("point is in frame `{found}`, transform expects `{expected}`")]
    FrameMismatch { expected: String, found: String },
    #[error("point is behind the camera (z = {0})")]
    BehindCamera(f64),
}

#[derive(Debug, Error)]
pub enum DepthIoError {
    #[error("malformed depth image: {0}")]
    Format(String),
    #[error("depth image size {found} does not match width·height = {expected}")]
    Size { expected: usize, found: usize },
    #[error(transparent)]
    Image(#[from] image::ImageError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RegistrationError {
    #[error("need at least 3 correspondences, got {0}")]
    InsufficientCorrespondences(usize),
    #[error("correspondences are degenerate (collinear or coincident)")]
    RankDeficient,
    #[error("empty correspondence set")]
    Empty,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid transform: {0}")]
    InvalidTransform(String),
}

#[derive(Debug, Error)]
pub enum Eval3dError {
    #[error("marker `{0}` in pairing never appears in the MoCap track")]
    UnknownMarker(String),
    #[error("keypoint {0}: both markers of a pair must differ")]
    DuplicateMarker(usize),
    #[error("timestamps must be non-decreasing (frame {0})")]
    Unsorted(usize),
    #[error("distance bins must be positive and strictly increasing")]
    InvalidBins,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Toml(#[from] toml::de::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
