//! Tooling for close-proximity human keypoint work: building cropped
//! datasets from COCO/Halpe annotations, scoring 2D detections with OKS,
//! lifting 2D keypoints to 3D from aligned depth, and evaluating 3D
//! keypoints against motion-capture ground truth.

pub mod annotation;
pub mod camera;
pub mod category;
pub mod crop;
pub mod depth;
pub mod error;
pub mod eval2d;
pub mod eval3d;
pub mod layout;
pub mod lift;
pub mod oks;
pub mod registration;
pub mod synth;

pub use annotation::{BBox, Dataset, DetectionRecord, ImageRecord, Keypoint, PersonAnnotation};
pub use camera::{backproject, pixel_radius, Axis, CameraIntrinsics, FrameId, Point3};
pub use layout::{group_slice, Group, KeypointLayout};
pub use registration::{apply_rigid, estimate_rigid, fix_translation, residual_rms, CorrespondenceSet, RigidTransform};
pub use depth::DepthFrame;
pub use lift::{lift_keypoint, lift_person, LiftFailure, LiftOutcome, NeighborhoodSpec};
pub use category::{categorize_visibility, VisibilityCategory};
pub use eval2d::{evaluate, match_image, EvalReport, MatchResult};
pub use oks::{oks, OksParams, ScaleRule};
pub use crop::{crop_person, find_body_center, generate_subsets, make_headless, CropConfig, HeadlessOutcome};
pub use synth::{project_keypoints, render_depth, Primitive, SceneSpec};
pub use eval3d::{absolute_stats, associate_by_time, marker_ground_truth, median_center, relative_stats, DistanceBins, MarkerPairing, MocapTrack, Trajectory};
