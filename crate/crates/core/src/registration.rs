//! Rigid transforms between coordinate frames and their least-squares
//! estimation from point correspondences (SVD of the cross-covariance with
//! reflection correction).

use nalgebra::{Matrix3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::camera::{FrameId, Point3};
use crate::error::{ConfigError, GeometryError, RegistrationError};

const ORTHONORMAL_TOL: f64 = 1e-9;

/// `target = rotation · source + translation`.
#[derive(Debug, Clone, PartialEq)]
pub struct RigidTransform {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
    pub source: FrameId,
    pub target: FrameId,
}

impl RigidTransform {
    /// Fails unless `rotation` is orthonormal with determinant +1.
    pub fn new(
        rotation: Matrix3<f64>,
        translation: Vector3<f64>,
        source: FrameId,
        target: FrameId,
    ) -> Result<Self, RegistrationError> {
        let err = (rotation.transpose() * rotation - Matrix3::identity()).abs().max();
        if !(err < ORTHONORMAL_TOL) || !(rotation.determinant() > 0.0) {
            return Err(RegistrationError::InvalidTransform(format!(
                "rotation is not proper orthonormal (‖RᵀR − I‖ = {err:e})"
            )));
        }
        if !translation.iter().all(|x| x.is_finite()) {
            return Err(RegistrationError::InvalidTransform("translation must be finite".into()));
        }
        Ok(Self { rotation, translation, source, target })
    }

    pub fn identity(source: FrameId, target: FrameId) -> Self {
        Self { rotation: Matrix3::identity(), translation: Vector3::zeros(), source, target }
    }

    pub fn from_quaternion(
        q: UnitQuaternion<f64>,
        translation: Vector3<f64>,
        source: FrameId,
        target: FrameId,
    ) -> Self {
        Self { rotation: *q.to_rotation_matrix().matrix(), translation, source, target }
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    pub fn transform_vector(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Self {
            rotation: rt,
            translation: -(rt * self.translation),
            source: self.target.clone(),
            target: self.source.clone(),
        }
    }

    /// `other ∘ self`: maps `self.source` into `other.target`.
    pub fn then(&self, other: &RigidTransform) -> Result<Self, GeometryError> {
        if other.source != self.target {
            return Err(GeometryError::FrameMismatch {
                expected: other.source.to_string(),
                found: self.target.to_string(),
            });
        }
        Ok(Self {
            rotation: other.rotation * self.rotation,
            translation: other.rotation * self.translation + other.translation,
            source: self.source.clone(),
            target: other.target.clone(),
        })
    }

    /// Parses the transform config: `source`, `target`, `translation = [x, y, z]`
    /// and either `rotation` (row-major 3×3, 9 numbers) or
    /// `quaternion = [w, x, y, z]`.
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let file: TransformFile = toml::from_str(text)?;
        file.into_transform()
    }

    pub fn to_toml(&self) -> String {
        let file = TransformFile {
            source: self.source.to_string(),
            target: self.target.to_string(),
            rotation: Some(self.rotation.transpose().iter().copied().collect()),
            quaternion: None,
            translation: [self.translation.x, self.translation.y, self.translation.z],
        };
        toml::to_string(&file).expect("transform serialization is infallible")
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TransformFile {
    source: String,
    target: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rotation: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    quaternion: Option<[f64; 4]>,
    translation: [f64; 3],
}

impl TransformFile {
    fn into_transform(self) -> Result<RigidTransform, ConfigError> {
        let translation = Vector3::from(self.translation);
        let (source, target) = (FrameId::new(&self.source), FrameId::new(&self.target));
        let invalid = |e: RegistrationError| ConfigError::Invalid(e.to_string());
        match (self.rotation, self.quaternion) {
            (Some(r), None) => {
                if r.len() != 9 {
                    return Err(ConfigError::Invalid(format!("rotation needs 9 numbers, got {}", r.len())));
                }
                RigidTransform::new(Matrix3::from_row_slice(&r), translation, source, target).map_err(invalid)
            }
            (None, Some([w, x, y, z])) => {
                let q = nalgebra::Quaternion::new(w, x, y, z);
                let norm = q.norm();
                if !((norm - 1.0).abs() < 1e-6) {
                    return Err(ConfigError::Invalid(format!("quaternion norm {norm} is not 1")));
                }
                let t = RigidTransform::from_quaternion(UnitQuaternion::from_quaternion(q), translation, source, target);
                RigidTransform::new(t.rotation, t.translation, t.source, t.target).map_err(invalid)
            }
            _ => Err(ConfigError::Invalid("exactly one of `rotation` or `quaternion` is required".into())),
        }
    }
}

/// Maps `p` from `t.source` into `t.target`.
pub fn apply_rigid(p: &Point3, t: &RigidTransform) -> Result<Point3, GeometryError> {
    if p.frame != t.source {
        return Err(GeometryError::FrameMismatch {
            expected: t.source.to_string(),
            found: p.frame.to_string(),
        });
    }
    Ok(Point3::from_vector(t.transform_vector(&p.coords()), t.target.clone()))
}

/// Paired source/target points.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CorrespondenceSet {
    pub pairs: Vec<(Vector3<f64>, Vector3<f64>)>,
    pub source: Option<FrameId>,
    pub target: Option<FrameId>,
}

impl CorrespondenceSet {
    pub fn new(pairs: Vec<(Vector3<f64>, Vector3<f64>)>) -> Self {
        Self { pairs, source: None, target: None }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// One pair per line: `sx sy sz tx ty tz` (meters). Blank lines and
    /// `#` comments are ignored.
    pub fn parse(text: &str) -> Result<Self, RegistrationError> {
        let mut pairs = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let values: Result<Vec<f64>, _> = line.split_whitespace().map(str::parse::<f64>).collect();
            let values = values.map_err(|e| RegistrationError::Parse { line: n + 1, message: e.to_string() })?;
            if values.len() != 6 || !values.iter().all(|v| v.is_finite()) {
                return Err(RegistrationError::Parse {
                    line: n + 1,
                    message: format!("expected 6 finite numbers, got {}", values.len()),
                });
            }
            pairs.push((
                Vector3::new(values[0], values[1], values[2]),
                Vector3::new(values[3], values[4], values[5]),
            ));
        }
        Ok(Self::new(pairs))
    }

    fn frames(&self) -> (FrameId, FrameId) {
        (
            self.source.clone().unwrap_or_else(|| FrameId::new("source")),
            self.target.clone().unwrap_or_else(|| FrameId::new("target")),
        )
    }

    fn centroids(&self) -> (Vector3<f64>, Vector3<f64>) {
        let n = self.pairs.len() as f64;
        let (ps, qs) = self
            .pairs
            .iter()
            .fold((Vector3::zeros(), Vector3::zeros()), |(a, b), (p, q)| (a + p, b + q));
        (ps / n, qs / n)
    }
}

/// Proper rotation closest to `h = Σ p qᵀ` in the Procrustes sense:
/// `V · diag(1, 1, det(V Uᵀ)) · Uᵀ`.
fn procrustes_rotation(h: Matrix3<f64>) -> Result<Matrix3<f64>, RegistrationError> {
    let svd = h.svd(true, true);
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(RegistrationError::RankDeficient),
    };
    let sv = svd.singular_values;
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]));
    // Rank < 2 means the points are collinear or coincident.
    if !(sv[order[0]] > 0.0) || sv[order[1]] <= sv[order[0]] * 1e-12 {
        return Err(RegistrationError::RankDeficient);
    }
    let v = v_t.transpose();
    let mut diag = Vector3::new(1.0, 1.0, 1.0);
    diag[order[2]] = (v * u.transpose()).determinant().signum();
    Ok(v * Matrix3::from_diagonal(&diag) * u.transpose())
}

/// Least-squares rigid transform minimizing `Σ ‖R pᵢ + t − qᵢ‖²`.
pub fn estimate_rigid(corr: &CorrespondenceSet) -> Result<RigidTransform, RegistrationError> {
    if corr.len() < 3 {
        return Err(RegistrationError::InsufficientCorrespondences(corr.len()));
    }
    let (p_bar, q_bar) = corr.centroids();
    let h = corr
        .pairs
        .iter()
        .fold(Matrix3::zeros(), |h, (p, q)| h + (p - p_bar) * (q - q_bar).transpose());
    let rotation = procrustes_rotation(h)?;
    let translation = q_bar - rotation * p_bar;
    let (source, target) = corr.frames();
    Ok(RigidTransform { rotation, translation, source, target })
}

/// Rotation-only fit with the translation pinned to `anchor`:
/// minimizes `Σ ‖R pᵢ + anchor − qᵢ‖²` over proper rotations.
pub fn estimate_rotation_with_translation(
    corr: &CorrespondenceSet,
    anchor: &Vector3<f64>,
) -> Result<RigidTransform, RegistrationError> {
    if corr.len() < 3 {
        return Err(RegistrationError::InsufficientCorrespondences(corr.len()));
    }
    let h = corr
        .pairs
        .iter()
        .fold(Matrix3::zeros(), |h, (p, q)| h + p * (q - anchor).transpose());
    let rotation = procrustes_rotation(h)?;
    let (source, target) = corr.frames();
    Ok(RigidTransform { rotation, translation: *anchor, source, target })
}

/// Replaces the translation with a measured anchor position (target frame).
pub fn fix_translation(t: &RigidTransform, anchor: &Vector3<f64>) -> RigidTransform {
    RigidTransform { translation: *anchor, ..t.clone() }
}

/// Root mean square of `‖R pᵢ + t − qᵢ‖`.
pub fn residual_rms(corr: &CorrespondenceSet, t: &RigidTransform) -> Result<f64, RegistrationError> {
    if corr.is_empty() {
        return Err(RegistrationError::Empty);
    }
    let sum: f64 = corr.pairs.iter().map(|(p, q)| (t.transform_vector(p) - q).norm_squared()).sum();
    Ok((sum / corr.len() as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cloud() -> Vec<Vector3<f64>> {
        vec![
            Vector3::new(0.0, 0.0, 0.0),
            Vector3::new(1.0, 0.0, 0.0),
            Vector3::new(0.0, 1.0, 0.0),
            Vector3::new(0.0, 0.0, 1.0),
            Vector3::new(0.3, -0.2, 0.7),
        ]
    }

    #[test]
    fn identity_pairs() {
        let corr = CorrespondenceSet::new(cloud().into_iter().map(|p| (p, p)).collect());
        let t = estimate_rigid(&corr).unwrap();
        assert!((t.rotation() - Matrix3::identity()).abs().max() < 1e-12);
        assert!(t.translation().norm() < 1e-12);
        assert!(residual_rms(&corr, &t).unwrap() < 1e-12);
    }

    #[test]
    fn pure_translation() {
        let shift = Vector3::new(1.0, 2.0, 3.0);
        let corr = CorrespondenceSet::new(cloud().into_iter().map(|p| (p, p + shift)).collect());
        let t = estimate_rigid(&corr).unwrap();
        assert!((t.rotation() - Matrix3::identity()).abs().max() < 1e-12);
        assert!((t.translation() - shift).abs().max() < 1e-12);
    }

    #[test]
    fn too_few_and_collinear() {
        let two = CorrespondenceSet::new(cloud().into_iter().take(2).map(|p| (p, p)).collect());
        assert_eq!(estimate_rigid(&two), Err(RegistrationError::InsufficientCorrespondences(2)));
        let line: Vec<_> = (0..5).map(|i| Vector3::new(i as f64, 2.0 * i as f64, 0.5)).collect();
        let corr = CorrespondenceSet::new(line.into_iter().map(|p| (p, p)).collect());
        assert_eq!(estimate_rigid(&corr), Err(RegistrationError::RankDeficient));
        assert_eq!(residual_rms(&CorrespondenceSet::default(), &RigidTransform::identity("a".into(), "b".into())), Err(RegistrationError::Empty));
    }

    #[test]
    fn reflected_target_still_gives_rotation() {
        let corr = CorrespondenceSet::new(cloud().into_iter().map(|p| (p, Vector3::new(p.x, p.y, -p.z))).collect());
        let t = estimate_rigid(&corr).unwrap();
        assert!(t.rotation().determinant() > 0.0);
        assert!((t.rotation().transpose() * t.rotation() - Matrix3::identity()).abs().max() < 1e-9);
    }

    #[test]
    fn single_pair_residual() {
        let corr = CorrespondenceSet::new(vec![(Vector3::zeros(), Vector3::new(0.0, 0.03, 0.0))]);
        let t = RigidTransform::identity("a".into(), "b".into());
        assert!((residual_rms(&corr, &t).unwrap() - 0.03).abs() < 1e-15);
    }

    #[test]
    fn fix_translation_cases() {
        let q = UnitQuaternion::from_euler_angles(0.1, -0.4, 1.2);
        let t = RigidTransform::from_quaternion(q, Vector3::new(0.5, 0.1, -2.0), "a".into(), "b".into());
        assert_eq!(fix_translation(&t, t.translation()), t);
        let z = fix_translation(&t, &Vector3::zeros());
        assert_eq!(z.translation(), &Vector3::zeros());
        assert_eq!(z.rotation(), t.rotation());
    }

    #[test]
    fn apply_and_frames() {
        let t = RigidTransform::new(Matrix3::identity(), Vector3::new(0.0, 0.0, 1.0), "camera".into(), "base".into()).unwrap();
        let p = apply_rigid(&Point3::camera(0.0, 0.0, 0.0), &t).unwrap();
        assert_eq!((p.x, p.y, p.z), (0.0, 0.0, 1.0));
        assert_eq!(p.frame.as_str(), "base");
        assert!(matches!(apply_rigid(&p, &t), Err(GeometryError::FrameMismatch { .. })));
        let id = RigidTransform::identity("camera".into(), "camera".into());
        assert_eq!(apply_rigid(&Point3::camera(1.0, 2.0, 3.0), &id).unwrap(), Point3::camera(1.0, 2.0, 3.0));
    }

    #[test]
    fn toml_round_trip_and_quaternion() {
        let q = UnitQuaternion::from_euler_angles(0.3, 0.2, -0.1);
        let t = RigidTransform::from_quaternion(q, Vector3::new(1.0, -2.0, 0.25), "camera".into(), "base".into());
        let back = RigidTransform::from_toml(&t.to_toml()).unwrap();
        assert!((back.rotation() - t.rotation()).abs().max() < 1e-15);
        assert_eq!(back.translation(), t.translation());
        let quat = RigidTransform::from_toml("source = \"a\"\ntarget = \"b\"\nquaternion = [1.0, 0.0, 0.0, 0.0]\ntranslation = [0.0, 0.0, 1.0]\n").unwrap();
        assert_eq!(quat.rotation(), &Matrix3::identity());
        assert!(RigidTransform::from_toml("source = \"a\"\ntarget = \"b\"\nrotation = [1,0,0,0,1,0,0,0,-1]\ntranslation = [0,0,0]\n").is_err());
    }

    #[test]
    fn correspondence_file() {
        let c = CorrespondenceSet::parse("# markers\n0 0 0 1 1 1\n\n1 2 3 4 5 6 # second\n").unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.pairs[1].1, Vector3::new(4.0, 5.0, 6.0));
        assert!(matches!(CorrespondenceSet::parse("1 2 3\n"), Err(RegistrationError::Parse { line: 1, .. })));
        assert!(matches!(CorrespondenceSet::parse("1 2 3 4 5 x\n"), Err(RegistrationError::Parse { line: 1, .. })));
    }

    fn arb_transform() -> impl Strategy<Value = RigidTransform> {
        (-3.0f64..3.0, -1.5f64..1.5, -3.0f64..3.0, -5.0f64..5.0, -5.0f64..5.0, -5.0f64..5.0).prop_map(
            |(r, p, y, tx, ty, tz)| {
                RigidTransform::from_quaternion(
                    UnitQuaternion::from_euler_angles(r, p, y),
                    Vector3::new(tx, ty, tz),
                    "src".into(),
                    "dst".into(),
                )
            },
        )
    }

    proptest! {
        #[test]
        fn inverse_composition(t in arb_transform(), x in -2.0f64..2.0, y in -2.0f64..2.0, z in -2.0f64..2.0) {
            let p = Point3::new(x, y, z, "src".into());
            let back = apply_rigid(&apply_rigid(&p, &t).unwrap(), &t.inverse()).unwrap();
            prop_assert!(p.distance(&back) < 1e-12);
            prop_assert_eq!(back.frame, p.frame);
        }

        #[test]
        fn estimate_is_proper_and_optimal(
            t in arb_transform(),
            other in arb_transform(),
            pts in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0, -0.01f64..0.01), 4..12),
        ) {
            let corr = CorrespondenceSet::new(pts.iter().map(|&(x, y, z, e)| {
                let p = Vector3::new(x, y, z);
                (p, t.transform_vector(&p) + Vector3::new(e, -e, 0.5 * e))
            }).collect());
            match estimate_rigid(&corr) {
                Ok(est) => {
                    let r = est.rotation();
                    prop_assert!((r.transpose() * r - Matrix3::identity()).abs().max() < 1e-9);
                    prop_assert!(r.determinant() > 0.0);
                    let best = residual_rms(&corr, &est).unwrap();
                    prop_assert!(best <= residual_rms(&corr, &other).unwrap() + 1e-9);
                    prop_assert!(best <= residual_rms(&corr, &t).unwrap() + 1e-9);
                }
                Err(e) => prop_assert_eq!(e, RegistrationError::RankDeficient),
            }
        }

        #[test]
        fn common_target_shift_moves_translation_only(
            t in arb_transform(),
            shift in (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0),
        ) {
            let eps = Vector3::new(shift.0, shift.1, shift.2);
            let src = cloud();
            let a = CorrespondenceSet::new(src.iter().map(|p| (*p, t.transform_vector(p))).collect());
            let b = CorrespondenceSet::new(src.iter().map(|p| (*p, t.transform_vector(p) + eps)).collect());
            let (ta, tb) = (estimate_rigid(&a).unwrap(), estimate_rigid(&b).unwrap());
            prop_assert!((ta.rotation() - tb.rotation()).abs().max() < 1e-9);
            prop_assert!((tb.translation() - ta.translation() - eps).abs().max() < 1e-9);
        }

        #[test]
        fn anchored_residual_matches_direct_evaluation(t in arb_transform(), a in (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0)) {
            let anchor = Vector3::new(a.0, a.1, a.2);
            let src = cloud();
            let corr = CorrespondenceSet::new(src.iter().map(|p| (*p, t.transform_vector(p))).collect());
            let fixed = fix_translation(&t, &anchor);
            let (c, q) = corr.centroids();
            let direct = (t.rotation() * c + anchor - q).norm();
            prop_assert!((fixed.transform_vector(&c) - q).norm() - direct < 1e-12);
            let refit = estimate_rotation_with_translation(&corr, &anchor).unwrap();
            prop_assert_eq!(refit.translation(), &anchor);
            prop_assert!(residual_rms(&corr, &refit).unwrap() <= residual_rms(&corr, &fixed).unwrap() + 1e-9);
        }
    }
}
