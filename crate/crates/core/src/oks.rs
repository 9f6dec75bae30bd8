//! Object keypoint similarity.
//!
//! `OKS = Σᵢ exp(−dᵢ² / (2 s² kᵢ²)) δ(vᵢ > 0) / Σᵢ δ(vᵢ > 0)` over a chosen
//! index subset, with `s` the person scale and `kᵢ` a per-keypoint falloff.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::annotation::{Keypoint, PersonAnnotation};
use crate::error::{ConfigError, OksError};
use crate::layout::KeypointLayout;

/// COCO-challenge per-keypoint sigmas for the 17 body keypoints.
pub const COCO_BODY_SIGMAS: [f64; 17] = [
    0.026, 0.025, 0.025, 0.035, 0.035, 0.079, 0.079, 0.072, 0.072, 0.062, 0.062, 0.107, 0.107, 0.087,
    0.087, 0.089, 0.089,
];

/// Falloff used for every index without a COCO sigma (extra body keypoints,
/// hands, face), expressed as `k = 2σ` with σ = 0.025.
pub const DEFAULT_EXTENDED_KAPPA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScaleRule {
    /// `s = sqrt(area)` when the annotation carries a positive area, else
    /// `sqrt(bbox width · height)`.
    #[default]
    AnnotatedArea,
    BboxArea,
}

impl ScaleRule {
    pub fn scale(self, gt: &PersonAnnotation) -> f64 {
        let area = match (self, gt.area) {
            (ScaleRule::AnnotatedArea, Some(a)) if a > 0.0 => a,
            _ => gt.bbox.area(),
        };
        area.sqrt()
    }
}

/// The threshold set `{0.50, 0.55, …, 0.95}`.
pub fn coco_thresholds() -> Vec<f64> {
    (0..10).map(|i| f64::from(50 + 5 * i) / 100.0).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct OksParams {
    pub kappas: Vec<f64>,
    pub scale_rule: ScaleRule,
    pub thresholds: Vec<f64>,
}

impl OksParams {
    pub fn new(kappas: Vec<f64>, scale_rule: ScaleRule, thresholds: Vec<f64>) -> Result<Self, OksError> {
        let p = Self { kappas, scale_rule, thresholds };
        p.validate()?;
        Ok(p)
    }

    /// COCO sigmas (as `k = 2σ`) for the first 17 indices of layouts that
    /// start with the COCO body, [`DEFAULT_EXTENDED_KAPPA`] elsewhere.
    pub fn for_layout(layout: &KeypointLayout) -> Self {
        let coco_prefix = layout.parts().is_some();
        let kappas = (0..layout.total())
            .map(|i| match COCO_BODY_SIGMAS.get(i) {
                Some(s) if coco_prefix => 2.0 * s,
                _ => DEFAULT_EXTENDED_KAPPA,
            })
            .collect();
        Self { kappas, scale_rule: ScaleRule::default(), thresholds: coco_thresholds() }
    }

    pub fn validate(&self) -> Result<(), OksError> {
        if let Some((i, k)) = self.kappas.iter().enumerate().find(|(_, k)| !(**k > 0.0 && k.is_finite())) {
            return Err(OksError::Params(format!("kappa[{i}] = {k} must be positive")));
        }
        if self.thresholds.is_empty() {
            return Err(OksError::Params("threshold set is empty".into()));
        }
        if self.thresholds.iter().any(|t| !(*t > 0.0 && *t <= 1.0)) {
            return Err(OksError::Params("thresholds must lie in (0, 1]".into()));
        }
        if self.thresholds.windows(2).any(|w| w[0] >= w[1]) {
            return Err(OksError::Params("thresholds must be strictly increasing".into()));
        }
        Ok(())
    }

    /// Reads a kappa config (TOML) on top of the layout defaults:
    ///
    /// ```toml
    /// scale_rule = "annotated-area"   # or "bbox-area"
    /// default_kappa = 0.05            # every index without a COCO sigma
    /// kappas = [ ... ]                # optional full list, one per index
    /// thresholds = [0.5, 0.75]        # optional
    /// [overrides]                     # optional per-index values
    /// 9 = 0.124
    /// ```
    pub fn from_toml(text: &str, layout: &KeypointLayout) -> Result<Self, ConfigError> {
        let file: KappaFile = toml::from_str(text)?;
        let mut params = Self::for_layout(layout);
        if let Some(d) = file.default_kappa {
            let coco_prefix = layout.parts().is_some();
            for (i, k) in params.kappas.iter_mut().enumerate() {
                if !(coco_prefix && i < COCO_BODY_SIGMAS.len()) {
                    *k = d;
                }
            }
        }
        if let Some(list) = file.kappas {
            if list.len() != layout.total() {
                return Err(ConfigError::Invalid(format!(
                    "kappas has {} entries, layout {} needs {}",
                    list.len(),
                    layout.name(),
                    layout.total()
                )));
            }
            params.kappas = list;
        }
        for (key, k) in file.overrides {
            let i: usize = key
                .parse()
                .map_err(|_| ConfigError::Invalid(format!("override key `{key}` is not an index")))?;
            let slot = params
                .kappas
                .get_mut(i)
                .ok_or_else(|| ConfigError::Invalid(format!("override index {i} out of range")))?;
            *slot = k;
        }
        if let Some(rule) = file.scale_rule {
            params.scale_rule = rule;
        }
        if let Some(t) = file.thresholds {
            params.thresholds = t;
        }
        params.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(params)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct KappaFile {
    scale_rule: Option<ScaleRule>,
    default_kappa: Option<f64>,
    kappas: Option<Vec<f64>>,
    thresholds: Option<Vec<f64>>,
    #[serde(default)]
    overrides: BTreeMap<String, f64>,
}

/// OKS between a detection and a ground-truth person over `indices`.
pub fn oks(
    det: &[Keypoint],
    gt: &PersonAnnotation,
    params: &OksParams,
    indices: &[usize],
) -> Result<f64, OksError> {
    let s = params.scale_rule.scale(gt);
    if !(s > 0.0 && s.is_finite()) {
        return Err(OksError::InvalidScale(s));
    }
    let two_s2 = 2.0 * s * s;
    let mut sum = 0.0;
    let mut count = 0usize;
    for &i in indices {
        let len = det.len().min(gt.keypoints.len()).min(params.kappas.len());
        if i >= len {
            return Err(OksError::IndexOutOfRange { index: i, len });
        }
        let g = &gt.keypoints[i];
        if !g.is_labeled() {
            continue;
        }
        let (du, dv) = (det[i].u - g.u, det[i].v - g.v);
        let k = params.kappas[i];
        sum += (-(du * du + dv * dv) / (two_s2 * k * k)).exp();
        count += 1;
    }
    if count == 0 {
        return Err(OksError::Undefined);
    }
    Ok(sum / count as f64)
}
