//! Detection-to-ground-truth matching and precision/recall over OKS
//! thresholds.
//!
//! Detections are visited in descending score order (file order on ties) and
//! each takes the still-unmatched ground truth with the highest OKS (lowest
//! index on ties). The pair counts as a true positive when that OKS reaches
//! the threshold; otherwise the detection is a false positive and the ground
//! truth stays available. Ground truths with no labeled keypoint in the
//! evaluated group are left out entirely.

use std::borrow::Borrow;
use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::Serialize;

use crate::annotation::{Dataset, DetectionRecord, PersonAnnotation};
use crate::category::{categorize_visibility, VisibilityCategory};
use crate::error::{EvalError, OksError};
use crate::layout::Group;
use crate::oks::{oks, OksParams};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct MatchResult {
    /// `(detection index, gt index, oks)` true positives.
    pub pairs: Vec<(usize, usize, f64)>,
    pub unmatched_detections: Vec<usize>,
    pub unmatched_gts: Vec<usize>,
    /// Ground truths without a labeled keypoint in the evaluated indices.
    pub ignored_gts: Vec<usize>,
}

impl MatchResult {
    pub fn tp(&self) -> usize {
        self.pairs.len()
    }

    pub fn fp(&self) -> usize {
        self.unmatched_detections.len()
    }

    pub fn fn_(&self) -> usize {
        self.unmatched_gts.len()
    }
}

/// OKS of every (detection, gt) pair for one image, plus the score order.
struct ImageScores {
    order: Vec<usize>,
    /// `oks[d][g]`, `None` for ignored ground truths.
    oks: Vec<Vec<Option<f64>>>,
    ignored: Vec<usize>,
}

fn score_order<D: Borrow<DetectionRecord>>(dets: &[D]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..dets.len()).collect();
    // Stable: equal scores keep file order.
    order.sort_by(|&a, &b| dets[b].borrow().score.total_cmp(&dets[a].borrow().score));
    order
}

fn image_scores<D: Borrow<DetectionRecord>, G: Borrow<PersonAnnotation>>(
    dets: &[D],
    gts: &[G],
    params: &OksParams,
    indices: &[usize],
) -> Result<ImageScores, OksError> {
    let mut ignored = Vec::new();
    let mut table = vec![vec![None; gts.len()]; dets.len()];
    for (g, gt) in gts.iter().enumerate() {
        let gt = gt.borrow();
        if !indices.iter().any(|&i| gt.keypoints.get(i).is_some_and(|k| k.is_labeled())) {
            ignored.push(g);
            continue;
        }
        for (d, det) in dets.iter().enumerate() {
            table[d][g] = Some(oks(&det.borrow().keypoints, gt, params, indices)?);
        }
    }
    Ok(ImageScores { order: score_order(dets), oks: table, ignored })
}

fn greedy_match(scores: &ImageScores, n_gts: usize, threshold: f64) -> MatchResult {
    let mut taken = vec![false; n_gts];
    for &g in &scores.ignored {
        taken[g] = true;
    }
    let mut result = MatchResult { ignored_gts: scores.ignored.clone(), ..Default::default() };
    for &d in &scores.order {
        let mut best: Option<(usize, f64)> = None;
        for (g, v) in scores.oks[d].iter().enumerate() {
            let Some(v) = *v else { continue };
            if taken[g] {
                continue;
            }
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((g, v));
            }
        }
        match best {
            Some((g, v)) if v >= threshold => {
                taken[g] = true;
                result.pairs.push((d, g, v));
            }
            _ => result.unmatched_detections.push(d),
        }
    }
    result.unmatched_gts = (0..n_gts).filter(|g| !taken[*g]).collect();
    result
}

/// Matches the detections of one image against its ground truth at one
/// threshold, using the keypoints in `indices`.
pub fn match_image<D: Borrow<DetectionRecord>, G: Borrow<PersonAnnotation>>(
    dets: &[D],
    gts: &[G],
    params: &OksParams,
    indices: &[usize],
    threshold: f64,
) -> Result<MatchResult, OksError> {
    let scores = image_scores(dets, gts, params, indices)?;
    Ok(greedy_match(&scores, gts.len(), threshold))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdResult {
    pub threshold: f64,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
}

impl ThresholdResult {
    fn from_counts(threshold: f64, tp: usize, fp: usize, fn_: usize) -> Self {
        let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        Self { threshold, tp, fp, fn_, precision: ratio(tp, tp + fp), recall: ratio(tp, tp + fn_) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub group: Group,
    /// `None` for the whole dataset.
    pub category: Option<VisibilityCategory>,
    pub images: usize,
    /// Ground-truth persons with at least one labeled keypoint in the group.
    pub gt_persons: usize,
    pub detections: usize,
    pub per_threshold: Vec<ThresholdResult>,
    /// Mean precision over the threshold set.
    pub ap: f64,
    /// Mean recall over the threshold set.
    pub ar: f64,
    pub at_50: Option<ThresholdResult>,
    pub at_75: Option<ThresholdResult>,
    /// 101-point interpolated AP, when requested.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub interpolated_ap: Option<f64>,
    /// Set when there are no detections; precision is then reported as 0.
    pub no_detections: bool,
    /// Set when there is no ground-truth person to recall.
    pub empty: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EvalOptions {
    pub interpolated: bool,
}

struct ImageOutcome {
    /// `(tp, fp, fn)` per threshold.
    counts: Vec<(usize, usize, usize)>,
    gt_persons: usize,
    /// `(score, is_tp per threshold)` per detection, for interpolated AP.
    ranked: Vec<(f64, Vec<bool>)>,
}

fn evaluate_image(
    dets: &[&DetectionRecord],
    gts: &[&PersonAnnotation],
    params: &OksParams,
    indices: &[usize],
    keep_ranked: bool,
) -> Result<ImageOutcome, OksError> {
    let scores = image_scores(dets, gts, params, indices)?;
    let mut counts = Vec::with_capacity(params.thresholds.len());
    let mut tp_flags = vec![vec![false; params.thresholds.len()]; dets.len()];
    for (t, &thr) in params.thresholds.iter().enumerate() {
        let m = greedy_match(&scores, gts.len(), thr);
        counts.push((m.tp(), m.fp(), m.fn_()));
        if keep_ranked {
            for &(d, _, _) in &m.pairs {
                tp_flags[d][t] = true;
            }
        }
    }
    let ranked = if keep_ranked {
        dets.iter().zip(tp_flags).map(|(d, f)| (d.score, f)).collect()
    } else {
        Vec::new()
    };
    Ok(ImageOutcome { counts, gt_persons: gts.len() - scores.ignored.len(), ranked })
}

/// 101-point interpolated precision averaged over recall, COCO style.
fn interpolated_ap(ranked: &[(f64, &[bool])], t: usize, positives: usize) -> f64 {
    if positives == 0 {
        return 0.0;
    }
    let mut order: Vec<usize> = (0..ranked.len()).collect();
    order.sort_by(|&a, &b| ranked[b].0.total_cmp(&ranked[a].0));
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut precision = Vec::with_capacity(order.len());
    let mut recall = Vec::with_capacity(order.len());
    for &i in &order {
        if ranked[i].1[t] {
            tp += 1;
        } else {
            fp += 1;
        }
        precision.push(tp as f64 / (tp + fp) as f64);
        recall.push(tp as f64 / positives as f64);
    }
    for i in (1..precision.len()).rev() {
        if precision[i] > precision[i - 1] {
            precision[i - 1] = precision[i];
        }
    }
    let mut total = 0.0;
    for r in 0..=100 {
        let level = r as f64 / 100.0;
        let idx = recall.partition_point(|&x| x < level);
        total += precision.get(idx).copied().unwrap_or(0.0);
    }
    total / 101.0
}

fn lookup(rows: &[ThresholdResult], t: f64) -> Option<ThresholdResult> {
    rows.iter().find(|r| (r.threshold - t).abs() < 1e-9).copied()
}

/// Evaluates `dets` against `dataset` for one keypoint group, optionally
/// restricted to a subset of image ids.
pub fn evaluate_subset(
    dataset: &Dataset,
    dets: &[DetectionRecord],
    params: &OksParams,
    group: Group,
    images: Option<&[u64]>,
    options: EvalOptions,
) -> Result<EvalReport, EvalError> {
    let indices = dataset.layout.indices(group)?;
    let gts_by_image = dataset.annotations_by_image();
    let known: std::collections::HashSet<u64> = dataset.images.iter().map(|im| im.id).collect();
    let mut dets_by_image: HashMap<u64, Vec<&DetectionRecord>> = HashMap::new();
    for d in dets {
        if !known.contains(&d.image_id) {
            return Err(EvalError::UnknownImage(d.image_id));
        }
        dets_by_image.entry(d.image_id).or_default().push(d);
    }

    let ids: Vec<u64> = match images {
        Some(ids) => ids.to_vec(),
        None => dataset.images.iter().map(|im| im.id).collect(),
    };
    let empty_d: Vec<&DetectionRecord> = Vec::new();
    let empty_g: Vec<&PersonAnnotation> = Vec::new();
    let outcomes: Vec<ImageOutcome> = ids
        .par_iter()
        .map(|id| {
            let d = dets_by_image.get(id).unwrap_or(&empty_d);
            let g = gts_by_image.get(id).unwrap_or(&empty_g);
            evaluate_image(d, g, params, &indices, options.interpolated)
        })
        .collect::<Result<_, _>>()?;

    let n_thr = params.thresholds.len();
    let mut totals = vec![(0usize, 0usize, 0usize); n_thr];
    let mut gt_persons = 0;
    for o in &outcomes {
        gt_persons += o.gt_persons;
        for (acc, c) in totals.iter_mut().zip(&o.counts) {
            acc.0 += c.0;
            acc.1 += c.1;
            acc.2 += c.2;
        }
    }
    let n_dets: usize = ids.iter().map(|id| dets_by_image.get(id).map_or(0, Vec::len)).sum();
    let per_threshold: Vec<ThresholdResult> = params
        .thresholds
        .iter()
        .zip(&totals)
        .map(|(&t, &(tp, fp, fn_))| ThresholdResult::from_counts(t, tp, fp, fn_))
        .collect();
    let mean = |f: fn(&ThresholdResult) -> f64| per_threshold.iter().map(f).sum::<f64>() / n_thr as f64;

    let interpolated_ap = options.interpolated.then(|| {
        let ranked: Vec<(f64, &[bool])> =
            outcomes.iter().flat_map(|o| o.ranked.iter().map(|(s, f)| (*s, f.as_slice()))).collect();
        (0..n_thr).map(|t| interpolated_ap(&ranked, t, gt_persons)).sum::<f64>() / n_thr as f64
    });

    Ok(EvalReport {
        group,
        category: None,
        images: ids.len(),
        gt_persons,
        detections: n_dets,
        ap: mean(|r| r.precision),
        ar: mean(|r| r.recall),
        at_50: lookup(&per_threshold, 0.5),
        at_75: lookup(&per_threshold, 0.75),
        per_threshold,
        interpolated_ap,
        no_detections: n_dets == 0,
        empty: gt_persons == 0,
    })
}

pub fn evaluate(
    dataset: &Dataset,
    dets: &[DetectionRecord],
    params: &OksParams,
    group: Group,
) -> Result<EvalReport, EvalError> {
    evaluate_subset(dataset, dets, params, group, None, EvalOptions::default())
}

/// Category of each image: that of its largest ground-truth person.
pub fn image_categories(dataset: &Dataset) -> BTreeMap<u64, VisibilityCategory> {
    let mut best: BTreeMap<u64, (f64, VisibilityCategory)> = BTreeMap::new();
    for ann in &dataset.annotations {
        let size = ann.area.filter(|a| *a > 0.0).unwrap_or_else(|| ann.bbox.area());
        let cat = categorize_visibility(ann, &dataset.layout);
        match best.get(&ann.image_id) {
            Some((s, _)) if *s >= size => {}
            _ => {
                best.insert(ann.image_id, (size, cat));
            }
        }
    }
    best.into_iter().map(|(k, (_, c))| (k, c)).collect()
}

/// Overall and per-category reports for each requested group.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalSummary {
    pub schema_version: u32,
    pub reports: Vec<EvalReport>,
}

pub fn evaluate_breakdown(
    dataset: &Dataset,
    dets: &[DetectionRecord],
    params: &OksParams,
    groups: &[Group],
    by_category: bool,
    options: EvalOptions,
) -> Result<EvalSummary, EvalError> {
    let categories = if by_category { image_categories(dataset) } else { BTreeMap::new() };
    let mut reports = Vec::new();
    for &group in groups {
        reports.push(evaluate_subset(dataset, dets, params, group, None, options)?);
        if by_category {
            for cat in VisibilityCategory::ALL {
                let ids: Vec<u64> = dataset
                    .images
                    .iter()
                    .map(|im| im.id)
                    .filter(|id| categories.get(id) == Some(&cat))
                    .collect();
                if ids.is_empty() {
                    continue;
                }
                let mut r = evaluate_subset(dataset, dets, params, group, Some(&ids), options)?;
                r.category = Some(cat);
                reports.push(r);
            }
        }
    }
    Ok(EvalSummary { schema_version: REPORT_SCHEMA_VERSION, reports })
}
