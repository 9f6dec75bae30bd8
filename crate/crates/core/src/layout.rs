//! Keypoint layouts: how a flat keypoint array splits into body, hand and
//! face groups, which indices belong to the head, and which indices make up
//! the limbs used for visibility categorization.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::LayoutError;

/// A keypoint group of a whole-body layout.
///
/// `Body`, `Hand` and `Face` partition a layout. `LeftHand` and `RightHand`
/// are the two halves of the `Hand` range and are offered for per-hand
/// evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Group {
    Body,
    Hand,
    Face,
    LeftHand,
    RightHand,
}

impl Group {
    pub const PARTITION: [Group; 3] = [Group::Body, Group::Hand, Group::Face];

    pub fn as_str(self) -> &'static str {
        match self {
            Group::Body => "body",
            Group::Hand => "hand",
            Group::Face => "face",
            Group::LeftHand => "left-hand",
            Group::RightHand => "right-hand",
        }
    }

    /// The partition group a selection lives in.
    pub fn partition(self) -> Group {
        match self {
            Group::LeftHand | Group::RightHand => Group::Hand,
            g => g,
        }
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Group {
    type Err = LayoutError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "body" => Ok(Group::Body),
            "hand" => Ok(Group::Hand),
            "face" => Ok(Group::Face),
            "left-hand" | "left_hand" => Ok(Group::LeftHand),
            "right-hand" | "right_hand" => Ok(Group::RightHand),
            other => Err(LayoutError::UnknownGroup(other.to_string())),
        }
    }
}

/// Shoulder, elbow and wrist indices of one arm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Arm {
    pub shoulder: usize,
    pub elbow: usize,
    pub wrist: usize,
}

impl Arm {
    pub fn indices(&self) -> [usize; 3] {
        [self.shoulder, self.elbow, self.wrist]
    }
}

/// Index sets used to classify which body parts an annotation shows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BodyParts {
    pub left_arm: Arm,
    pub right_arm: Arm,
    /// Hips, knees and ankles.
    pub legs: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeypointLayout {
    name: String,
    total: usize,
    groups: Vec<(Group, Range<usize>)>,
    head: Vec<usize>,
    skeleton: Vec<(usize, usize)>,
    parts: Option<BodyParts>,
}

const COCO_SKELETON: [(usize, usize); 19] = [
    (15, 13),
    (13, 11),
    (16, 14),
    (14, 12),
    (11, 12),
    (5, 11),
    (6, 12),
    (5, 6),
    (5, 7),
    (6, 8),
    (7, 9),
    (8, 10),
    (1, 2),
    (0, 1),
    (0, 2),
    (1, 3),
    (2, 4),
    (3, 5),
    (4, 6),
];

fn coco_parts() -> BodyParts {
    BodyParts {
        left_arm: Arm { shoulder: 5, elbow: 7, wrist: 9 },
        right_arm: Arm { shoulder: 6, elbow: 8, wrist: 10 },
        legs: vec![11, 12, 13, 14, 15, 16],
    }
}

/// Finger chains of a 21-point hand starting at `base` (wrist first).
fn hand_skeleton(base: usize) -> Vec<(usize, usize)> {
    let mut edges = Vec::with_capacity(20);
    for finger in 0..5 {
        let mut prev = base;
        for joint in 0..4 {
            let idx = base + 1 + finger * 4 + joint;
            edges.push((prev, idx));
            prev = idx;
        }
    }
    edges
}

impl KeypointLayout {
    /// Builds a layout and checks that the groups partition `[0, total)` and
    /// that the head lies inside the body group.
    pub fn new(
        name: impl Into<String>,
        total: usize,
        mut groups: Vec<(Group, Range<usize>)>,
        head: Vec<usize>,
        skeleton: Vec<(usize, usize)>,
        parts: Option<BodyParts>,
    ) -> Result<Self, LayoutError> {
        let name = name.into();
        groups.sort_by_key(|(_, r)| r.start);
        let mut cursor = 0;
        for (g, r) in &groups {
            if !Group::PARTITION.contains(g) {
                return Err(LayoutError::Invalid(format!(
                    "{name}: {g} is not a partition group"
                )));
            }
            if r.start != cursor || r.end <= r.start {
                return Err(LayoutError::Invalid(format!(
                    "{name}: group ranges must be disjoint, non-empty and contiguous"
                )));
            }
            cursor = r.end;
        }
        if cursor != total {
            return Err(LayoutError::Invalid(format!(
                "{name}: groups cover [0, {cursor}) but total is {total}"
            )));
        }
        for (i, (g, _)) in groups.iter().enumerate() {
            if groups[..i].iter().any(|(h, _)| h == g) {
                return Err(LayoutError::Invalid(format!("{name}: duplicate group {g}")));
            }
        }
        let body = groups.iter().find(|(g, _)| *g == Group::Body).map(|(_, r)| r.clone());
        if !head.is_empty() {
            let body = body.clone().ok_or_else(|| {
                LayoutError::Invalid(format!("{name}: head indices without a body group"))
            })?;
            if let Some(&h) = head.iter().find(|h| !body.contains(h)) {
                return Err(LayoutError::Invalid(format!(
                    "{name}: head index {h} outside body range"
                )));
            }
        }
        if let Some(&(a, b)) = skeleton.iter().find(|(a, b)| *a >= total || *b >= total) {
            return Err(LayoutError::Invalid(format!("{name}: limb ({a}, {b}) out of range")));
        }
        if let Some(p) = &parts {
            let body = body.unwrap_or(0..0);
            let all = p.left_arm.indices().into_iter().chain(p.right_arm.indices()).chain(p.legs.iter().copied());
            for i in all {
                if !body.contains(&i) {
                    return Err(LayoutError::Invalid(format!(
                        "{name}: limb index {i} outside body range"
                    )));
                }
            }
        }
        Ok(Self { name, total, groups, head, skeleton, parts })
    }

    /// COCO person keypoints (17 body keypoints).
    pub fn coco17() -> Self {
        Self::new(
            "coco17",
            17,
            vec![(Group::Body, 0..17)],
            vec![0, 1, 2, 3, 4],
            COCO_SKELETON.to_vec(),
            Some(coco_parts()),
        )
        .expect("builtin layout")
    }

    /// COCO-WholeBody: 17 body + 6 foot, 68 face, 2×21 hand.
    pub fn coco_wholebody133() -> Self {
        let mut skeleton = COCO_SKELETON.to_vec();
        skeleton.extend([(15, 17), (15, 18), (15, 19), (16, 20), (16, 21), (16, 22)]);
        skeleton.extend(hand_skeleton(91));
        skeleton.extend(hand_skeleton(112));
        skeleton.extend([(9, 91), (10, 112)]);
        Self::new(
            "coco_wholebody133",
            133,
            vec![(Group::Body, 0..23), (Group::Face, 23..91), (Group::Hand, 91..133)],
            vec![0, 1, 2, 3, 4],
            skeleton,
            Some(coco_parts()),
        )
        .expect("builtin layout")
    }

    /// Halpe full-body: 26 body (COCO 17 + head top, neck, pelvis, 6 foot),
    /// 68 face, 2×21 hand.
    pub fn halpe136() -> Self {
        let mut skeleton = COCO_SKELETON.to_vec();
        skeleton.extend([
            (17, 18),
            (18, 19),
            (18, 5),
            (18, 6),
            (19, 11),
            (19, 12),
            (15, 20),
            (15, 22),
            (15, 24),
            (16, 21),
            (16, 23),
            (16, 25),
        ]);
        skeleton.extend(hand_skeleton(94));
        skeleton.extend(hand_skeleton(115));
        skeleton.extend([(9, 94), (10, 115)]);
        Self::new(
            "halpe136",
            136,
            vec![(Group::Body, 0..26), (Group::Face, 26..94), (Group::Hand, 94..136)],
            vec![0, 1, 2, 3, 4, 17],
            skeleton,
            Some(coco_parts()),
        )
        .expect("builtin layout")
    }

    /// A single 21-point hand.
    pub fn hand21() -> Self {
        Self::new("hand21", 21, vec![(Group::Hand, 0..21)], Vec::new(), hand_skeleton(0), None)
            .expect("builtin layout")
    }

    /// Looks up a builtin layout by name (or by keypoint count).
    pub fn by_name(name: &str) -> Result<Self, LayoutError> {
        match name {
            "coco17" | "coco" | "17" => Ok(Self::coco17()),
            "coco_wholebody133" | "coco-wholebody" | "wholebody" | "133" => {
                Ok(Self::coco_wholebody133())
            }
            "halpe136" | "halpe" | "136" => Ok(Self::halpe136()),
            "hand21" | "hand" | "21" => Ok(Self::hand21()),
            other => Err(LayoutError::UnknownLayout(other.to_string())),
        }
    }

    pub fn builtin() -> Vec<Self> {
        vec![Self::coco17(), Self::coco_wholebody133(), Self::halpe136(), Self::hand21()]
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn total(&self) -> usize {
        self.total
    }

    /// Partition groups in index order.
    pub fn groups(&self) -> impl Iterator<Item = Group> + '_ {
        self.groups.iter().map(|(g, _)| *g)
    }

    pub fn head_indices(&self) -> &[usize] {
        &self.head
    }

    pub fn skeleton(&self) -> &[(usize, usize)] {
        &self.skeleton
    }

    pub fn parts(&self) -> Option<&BodyParts> {
        self.parts.as_ref()
    }

    pub fn is_head(&self, index: usize) -> bool {
        self.head.contains(&index)
    }

    /// Index range of a group. Hand halves split the hand range in two.
    pub fn range(&self, group: Group) -> Result<Range<usize>, LayoutError> {
        let unsupported = || LayoutError::UnsupportedGroup {
            layout: self.name.clone(),
            group,
        };
        let lookup = |g: Group| {
            self.groups.iter().find(|(h, _)| *h == g).map(|(_, r)| r.clone())
        };
        match group {
            Group::LeftHand | Group::RightHand => {
                let hand = lookup(Group::Hand).ok_or_else(unsupported)?;
                if hand.len() % 2 != 0 || hand.len() < 2 {
                    return Err(unsupported());
                }
                let mid = hand.start + hand.len() / 2;
                Ok(if group == Group::LeftHand { hand.start..mid } else { mid..hand.end })
            }
            g => lookup(g).ok_or_else(unsupported),
        }
    }

    /// Indices of a group as a vector.
    pub fn indices(&self, group: Group) -> Result<Vec<usize>, LayoutError> {
        self.range(group).map(|r| r.collect())
    }

    /// Partition group containing `index`.
    pub fn group_of(&self, index: usize) -> Option<Group> {
        self.groups.iter().find(|(_, r)| r.contains(&index)).map(|(g, _)| *g)
    }
}

/// Returns the keypoints of `group`, in layout order.
pub fn group_slice<'a, T>(
    keypoints: &'a [T],
    layout: &KeypointLayout,
    group: Group,
) -> Result<&'a [T], LayoutError> {
    if keypoints.len() != layout.total() {
        return Err(LayoutError::Mismatch {
            layout: layout.name().to_string(),
            expected: layout.total(),
            found: keypoints.len(),
        });
    }
    let range = layout.range(group)?;
    Ok(&keypoints[range])
}
