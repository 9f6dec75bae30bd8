//! Classification of ground-truth annotations by which body parts they show.
//!
//! A keypoint counts as shown when its visibility flag is > 0. An arm is
//! *present* when any of shoulder/elbow/wrist is shown and *complete* when all
//! three are. The rules are tried in the order listed on
//! [`VisibilityCategory`]; the first match wins.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::annotation::PersonAnnotation;
use crate::layout::{Arm, KeypointLayout};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VisibilityCategory {
    /// Head shown and both arms complete.
    WholeUpperBody,
    /// Head shown, no arm present, no leg shown.
    OnlyHead,
    /// Head shown, right arm present, left arm absent.
    NoLeftArm,
    /// Head shown, left arm present, right arm absent.
    NoRightArm,
    /// No head, both arms complete.
    NoHead,
    /// No head, no arm present, some leg keypoint shown.
    OnlyLegs,
    /// No head, no legs, left arm present, right arm absent.
    OnlyLeftArm,
    /// No head, no legs, right arm present, left arm absent.
    OnlyRightArm,
    /// No head, both arms present, neither shoulder shown.
    ArmsWithoutShoulders,
    /// No head, both arms present (not both complete), a shoulder shown.
    OnlyBothArms,
    Other,
}

impl VisibilityCategory {
    pub const ALL: [VisibilityCategory; 11] = [
        VisibilityCategory::WholeUpperBody,
        VisibilityCategory::OnlyHead,
        VisibilityCategory::NoLeftArm,
        VisibilityCategory::NoRightArm,
        VisibilityCategory::NoHead,
        VisibilityCategory::OnlyLegs,
        VisibilityCategory::OnlyLeftArm,
        VisibilityCategory::OnlyRightArm,
        VisibilityCategory::ArmsWithoutShoulders,
        VisibilityCategory::OnlyBothArms,
        VisibilityCategory::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            VisibilityCategory::WholeUpperBody => "whole-upper-body",
            VisibilityCategory::OnlyHead => "only-head",
            VisibilityCategory::NoLeftArm => "no-left-arm",
            VisibilityCategory::NoRightArm => "no-right-arm",
            VisibilityCategory::NoHead => "no-head",
            VisibilityCategory::OnlyLegs => "only-legs",
            VisibilityCategory::OnlyLeftArm => "only-left-arm",
            VisibilityCategory::OnlyRightArm => "only-right-arm",
            VisibilityCategory::ArmsWithoutShoulders => "arms-without-shoulders",
            VisibilityCategory::OnlyBothArms => "only-both-arms",
            VisibilityCategory::Other => "other",
        }
    }
}

impl fmt::Display for VisibilityCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub fn categorize_visibility(ann: &PersonAnnotation, layout: &KeypointLayout) -> VisibilityCategory {
    use VisibilityCategory::*;

    let Some(parts) = layout.parts() else {
        return Other;
    };
    let shown = |i: usize| ann.keypoints.get(i).is_some_and(|k| k.is_labeled());
    let present = |arm: &Arm| arm.indices().into_iter().any(shown);
    let complete = |arm: &Arm| arm.indices().into_iter().all(shown);

    let head = layout.head_indices().iter().any(|&i| shown(i));
    let legs = parts.legs.iter().any(|&i| shown(i));
    let (left, right) = (present(&parts.left_arm), present(&parts.right_arm));
    let both_complete = complete(&parts.left_arm) && complete(&parts.right_arm);
    let shoulder = shown(parts.left_arm.shoulder) || shown(parts.right_arm.shoulder);

    if head {
        match (left, right) {
            _ if both_complete => WholeUpperBody,
            (false, false) if !legs => OnlyHead,
            (false, true) => NoLeftArm,
            (true, false) => NoRightArm,
            _ => Other,
        }
    } else {
        match (left, right) {
            _ if both_complete => NoHead,
            (false, false) if legs => OnlyLegs,
            (true, false) if !legs => OnlyLeftArm,
            (false, true) if !legs => OnlyRightArm,
            (true, true) if !shoulder => ArmsWithoutShoulders,
            (true, true) => OnlyBothArms,
            _ => Other,
        }
    }
}
