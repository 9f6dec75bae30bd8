//! Person crops and head-removed crops for close-proximity datasets.
//!
//! Every annotated person is cropped out along its bounding box (optionally
//! padded) and its keypoints are moved into crop coordinates. For the
//! headless variant the crop is additionally clipped on the side of the head:
//! the dominant axis of the head-centroid → body-center direction picks the
//! edge, and the cut sits at the head extent's edge nearest the body, offset
//! by a margin.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use image::DynamicImage;
use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::annotation::{BBox, Dataset, ImageRecord, Keypoint, PersonAnnotation};
use crate::error::CropError;
use crate::layout::{Group, KeypointLayout};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CropConfig {
    /// Crops with `width · height` below this are dropped (pixels²).
    pub min_area: f64,
    pub head_margin: f64,
    pub padding: f64,
}

impl Default for CropConfig {
    fn default() -> Self {
        Self { min_area: 20_000.0, head_margin: 0.0, padding: 0.0 }
    }
}

impl CropConfig {
    pub fn validate(&self) -> Result<(), CropError> {
        for (name, v) in [("min_area", self.min_area), ("head_margin", self.head_margin), ("padding", self.padding)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(CropError::Config(format!("{name} must be finite and ≥ 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// Integer pixel window `[x0, x0 + width) × [y0, y0 + height)` in the source
/// image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CropWindow {
    pub x0: u32,
    pub y0: u32,
    pub width: u32,
    pub height: u32,
}

impl CropWindow {
    pub fn area(&self) -> u64 {
        u64::from(self.width) * u64::from(self.height)
    }

    fn from_bounds(x0: i64, y0: i64, x1: i64, y1: i64, annotation_id: u64) -> Result<Self, CropError> {
        if x1 <= x0 || y1 <= y0 {
            return Err(CropError::Degenerate { annotation_id });
        }
        Ok(Self { x0: x0 as u32, y0: y0 as u32, width: (x1 - x0) as u32, height: (y1 - y0) as u32 })
    }

    fn bounds(&self) -> (i64, i64, i64, i64) {
        let (x0, y0) = (i64::from(self.x0), i64::from(self.y0));
        (x0, y0, x0 + i64::from(self.width), y0 + i64::from(self.height))
    }
}

#[derive(Debug, Clone)]
pub struct Crop {
    pub image: DynamicImage,
    pub annotation: PersonAnnotation,
    pub window: CropWindow,
}

/// Padded person box clipped to a `width × height` image.
pub fn person_window(ann: &PersonAnnotation, width: u32, height: u32, cfg: &CropConfig) -> Result<CropWindow, CropError> {
    let b = ann.bbox;
    let clamp = |v: f64, hi: u32| (v.max(0.0).min(f64::from(hi))) as i64;
    let x0 = clamp((b.x - cfg.padding).floor(), width);
    let y0 = clamp((b.y - cfg.padding).floor(), height);
    let x1 = clamp((b.x + b.w + cfg.padding).ceil(), width);
    let y1 = clamp((b.y + b.h + cfg.padding).ceil(), height);
    CropWindow::from_bounds(x0, y0, x1, y1, ann.id)
}

/// Moves keypoints into `window` coordinates. Keypoints outside the window
/// and those rejected by `drop` become `(0, 0, 0)`.
fn remap(ann: &PersonAnnotation, window: &CropWindow, drop: impl Fn(usize) -> bool) -> PersonAnnotation {
    let (ox, oy) = (f64::from(window.x0), f64::from(window.y0));
    let (w, h) = (f64::from(window.width), f64::from(window.height));
    let keypoints: Vec<Keypoint> = ann
        .keypoints
        .iter()
        .enumerate()
        .map(|(i, k)| {
            if !k.is_labeled() || drop(i) {
                return Keypoint::default();
            }
            let (u, v) = (k.u - ox, k.v - oy);
            if (0.0..=w).contains(&u) && (0.0..=h).contains(&v) {
                Keypoint::new(u, v, k.c)
            } else {
                Keypoint::default()
            }
        })
        .collect();
    let mut extra = ann.extra.clone();
    extra.remove("segmentation");
    let mut out = PersonAnnotation::new(ann.id, ann.image_id, BBox::new(0.0, 0.0, w, h), keypoints);
    out.extra = extra;
    out
}

fn cut(image: &DynamicImage, window: &CropWindow) -> DynamicImage {
    image.crop_imm(window.x0, window.y0, window.width, window.height)
}

pub fn crop_person(image: &DynamicImage, ann: &PersonAnnotation, cfg: &CropConfig) -> Result<Crop, CropError> {
    let window = person_window(ann, image.width(), image.height(), cfg)?;
    Ok(Crop { image: cut(image, &window), annotation: remap(ann, &window, |_| false), window })
}

/// Mean position of the labeled body keypoints that are not head keypoints.
pub fn find_body_center(ann: &PersonAnnotation, layout: &KeypointLayout) -> Result<(f64, f64), CropError> {
    let body = layout.range(Group::Body)?;
    let (mut su, mut sv, mut n) = (0.0, 0.0, 0usize);
    for i in body {
        if layout.is_head(i) {
            continue;
        }
        if let Some(k) = ann.keypoints.get(i).filter(|k| k.is_labeled()) {
            su += k.u;
            sv += k.v;
            n += 1;
        }
    }
    if n == 0 {
        return Err(CropError::NoBodyCenter { annotation_id: ann.id });
    }
    Ok((su / n as f64, sv / n as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SkipReason {
    NoHead,
    NoBodyCenter,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CutSide {
    Top,
    Bottom,
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HeadCut {
    pub side: CutSide,
    pub window: CropWindow,
}

/// Window of the headless crop, or the reason the person has none.
pub fn headless_window(
    ann: &PersonAnnotation,
    layout: &KeypointLayout,
    width: u32,
    height: u32,
    cfg: &CropConfig,
) -> Result<Result<HeadCut, SkipReason>, CropError> {
    let head: Vec<&Keypoint> = layout
        .head_indices()
        .iter()
        .filter_map(|&i| ann.keypoints.get(i))
        .filter(|k| k.is_labeled())
        .collect();
    if head.is_empty() {
        return Ok(Err(SkipReason::NoHead));
    }
    let (bu, bv) = match find_body_center(ann, layout) {
        Ok(c) => c,
        Err(CropError::NoBodyCenter { .. }) => return Ok(Err(SkipReason::NoBodyCenter)),
        Err(e) => return Err(e),
    };
    let n = head.len() as f64;
    let hu = head.iter().map(|k| k.u).sum::<f64>() / n;
    let hv = head.iter().map(|k| k.v).sum::<f64>() / n;
    let min_u = head.iter().map(|k| k.u).fold(f64::INFINITY, f64::min);
    let max_u = head.iter().map(|k| k.u).fold(f64::NEG_INFINITY, f64::max);
    let min_v = head.iter().map(|k| k.v).fold(f64::INFINITY, f64::min);
    let max_v = head.iter().map(|k| k.v).fold(f64::NEG_INFINITY, f64::max);

    let (mut x0, mut y0, mut x1, mut y1) = person_window(ann, width, height, cfg)?.bounds();
    let (dx, dy) = (bu - hu, bv - hv);
    let m = cfg.head_margin;
    let side = if dy.abs() >= dx.abs() {
        if dy >= 0.0 {
            y0 = y0.max((max_v + m).ceil() as i64);
            CutSide::Top
        } else {
            y1 = y1.min((min_v - m).floor() as i64);
            CutSide::Bottom
        }
    } else if dx > 0.0 {
        x0 = x0.max((max_u + m).ceil() as i64);
        CutSide::Left
    } else {
        x1 = x1.min((min_u - m).floor() as i64);
        CutSide::Right
    };
    let window = CropWindow::from_bounds(x0, y0, x1, y1, ann.id)?;
    Ok(Ok(HeadCut { side, window }))
}

#[derive(Debug, Clone)]
pub enum HeadlessOutcome {
    Cropped(Crop),
    Skipped(SkipReason),
}

pub fn make_headless(
    image: &DynamicImage,
    ann: &PersonAnnotation,
    layout: &KeypointLayout,
    cfg: &CropConfig,
) -> Result<HeadlessOutcome, CropError> {
    match headless_window(ann, layout, image.width(), image.height(), cfg)? {
        Err(reason) => Ok(HeadlessOutcome::Skipped(reason)),
        Ok(cut_) => {
            let annotation = remap(ann, &cut_.window, |i| layout.is_head(i));
            Ok(HeadlessOutcome::Cropped(Crop { image: cut(image, &cut_.window), annotation, window: cut_.window }))
        }
    }
}

/// Where source images come from.
pub trait RasterSource: Sync {
    fn load(&self, image: &ImageRecord) -> Result<DynamicImage, CropError>;
}

/// Images resolved as `root/file_name`.
pub struct DirectorySource {
    root: PathBuf,
}

impl DirectorySource {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }
}

impl RasterSource for DirectorySource {
    fn load(&self, image: &ImageRecord) -> Result<DynamicImage, CropError> {
        let path = self.root.join(&image.file_name);
        image::open(&path).map_err(|e| CropError::Image { path, message: e.to_string() })
    }
}

impl RasterSource for BTreeMap<u64, DynamicImage> {
    fn load(&self, image: &ImageRecord) -> Result<DynamicImage, CropError> {
        self.get(&image.id).cloned().ok_or_else(|| CropError::Image {
            path: PathBuf::from(&image.file_name),
            message: "not in memory source".into(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub image_id: u64,
    pub source_image_id: u64,
    pub source_annotation_id: u64,
    pub crop_origin: [u32; 2],
}

#[derive(Debug, Clone)]
pub struct Subset {
    pub dataset: Dataset,
    /// Pixel data of each image in `dataset.images`, same order.
    pub rasters: Vec<DynamicImage>,
    pub provenance: Vec<Provenance>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CropReport {
    pub persons: usize,
    pub basic_accepted: usize,
    pub basic_rejected_area: usize,
    pub headless_accepted: usize,
    pub headless_rejected_area: usize,
    pub headless_skipped_no_head: usize,
    pub headless_skipped_no_body_center: usize,
    pub degenerate: usize,
    pub headless_degenerate: usize,
    pub unreadable_images: Vec<u64>,
}

#[derive(Debug, Clone)]
pub struct SubsetOutput {
    pub basic: Subset,
    pub headless: Option<Subset>,
    pub report: CropReport,
}

enum PersonResult {
    Accepted(Crop),
    TooSmall,
    Skipped(SkipReason),
    Degenerate,
}

struct ImageResult {
    source_image: u64,
    unreadable: bool,
    persons: Vec<(u64, PersonResult, Option<PersonResult>)>,
}

fn area_ok(window: &CropWindow, cfg: &CropConfig) -> bool {
    window.area() as f64 >= cfg.min_area
}

fn process_person(
    image: &DynamicImage,
    ann: &PersonAnnotation,
    layout: &KeypointLayout,
    cfg: &CropConfig,
    headless: bool,
) -> Result<(PersonResult, Option<PersonResult>), CropError> {
    let basic = match person_window(ann, image.width(), image.height(), cfg) {
        Err(CropError::Degenerate { .. }) => PersonResult::Degenerate,
        Err(e) => return Err(e),
        Ok(w) if !area_ok(&w, cfg) => PersonResult::TooSmall,
        Ok(_) => PersonResult::Accepted(crop_person(image, ann, cfg)?),
    };
    let headless = if !headless {
        None
    } else {
        Some(match headless_window(ann, layout, image.width(), image.height(), cfg) {
            Err(CropError::Degenerate { .. }) => PersonResult::Degenerate,
            Err(e) => return Err(e),
            Ok(Err(reason)) => PersonResult::Skipped(reason),
            Ok(Ok(c)) if !area_ok(&c.window, cfg) => PersonResult::TooSmall,
            Ok(Ok(_)) => match make_headless(image, ann, layout, cfg)? {
                HeadlessOutcome::Cropped(c) => PersonResult::Accepted(c),
                HeadlessOutcome::Skipped(r) => PersonResult::Skipped(r),
            },
        })
    };
    Ok((basic, headless))
}

fn assemble(source: &Dataset, crops: Vec<(u64, u64, Crop)>) -> Subset {
    let mut dataset = Dataset::empty(source.layout.clone());
    dataset.extra = source.extra.clone();
    let mut rasters = Vec::with_capacity(crops.len());
    let mut provenance = Vec::with_capacity(crops.len());
    for (n, (src_image, src_ann, crop)) in crops.into_iter().enumerate() {
        let id = n as u64 + 1;
        dataset.images.push(ImageRecord::new(id, crop.window.width, crop.window.height, format!("{id:06}.png")));
        let mut ann = crop.annotation;
        ann.id = id;
        ann.image_id = id;
        dataset.annotations.push(ann);
        rasters.push(crop.image);
        provenance.push(Provenance {
            image_id: id,
            source_image_id: src_image,
            source_annotation_id: src_ann,
            crop_origin: [crop.window.x0, crop.window.y0],
        });
    }
    Subset { dataset, rasters, provenance }
}

/// Crops every annotated person into the Basic subset and, when `headless`
/// is set, the Headless subset. Output order is by source image id, then
/// annotation id.
pub fn generate_subsets(
    dataset: &Dataset,
    source: &dyn RasterSource,
    cfg: &CropConfig,
    headless: bool,
) -> Result<SubsetOutput, CropError> {
    cfg.validate()?;
    let by_image = dataset.annotations_by_image();
    let mut images: Vec<&ImageRecord> = dataset.images.iter().filter(|im| by_image.contains_key(&im.id)).collect();
    images.sort_by_key(|im| im.id);

    let results: Vec<ImageResult> = images
        .par_iter()
        .map(|record| {
            let mut anns = by_image[&record.id].clone();
            anns.sort_by_key(|a| a.id);
            let raster = match source.load(record) {
                Ok(r) => r,
                Err(e) => {
                    warn!("skipping image {}: {e}", record.id);
                    return Ok(ImageResult { source_image: record.id, unreadable: true, persons: Vec::new() });
                }
            };
            let persons = anns
                .iter()
                .map(|ann| process_person(&raster, ann, &dataset.layout, cfg, headless).map(|(b, h)| (ann.id, b, h)))
                .collect::<Result<_, _>>()?;
            Ok(ImageResult { source_image: record.id, unreadable: false, persons })
        })
        .collect::<Result<_, CropError>>()?;

    let mut report = CropReport::default();
    let mut basic = Vec::new();
    let mut head_cut = Vec::new();
    for r in results {
        if r.unreadable {
            report.unreadable_images.push(r.source_image);
            continue;
        }
        for (ann_id, b, h) in r.persons {
            report.persons += 1;
            match b {
                PersonResult::Accepted(c) => {
                    report.basic_accepted += 1;
                    basic.push((r.source_image, ann_id, c));
                }
                PersonResult::TooSmall => report.basic_rejected_area += 1,
                PersonResult::Degenerate => report.degenerate += 1,
                PersonResult::Skipped(_) => {}
            }
            match h {
                Some(PersonResult::Accepted(c)) => {
                    report.headless_accepted += 1;
                    head_cut.push((r.source_image, ann_id, c));
                }
                Some(PersonResult::TooSmall) => report.headless_rejected_area += 1,
                Some(PersonResult::Degenerate) => report.headless_degenerate += 1,
                Some(PersonResult::Skipped(SkipReason::NoHead)) => report.headless_skipped_no_head += 1,
                Some(PersonResult::Skipped(SkipReason::NoBodyCenter)) => report.headless_skipped_no_body_center += 1,
                None => {}
            }
        }
    }
    if basic.is_empty() {
        warn!("no crop passed the filters; the Basic subset is empty");
    }
    Ok(SubsetOutput {
        basic: assemble(dataset, basic),
        headless: headless.then(|| assemble(dataset, head_cut)),
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use image::{Rgb, RgbImage};

    fn gradient(w: u32, h: u32) -> DynamicImage {
        DynamicImage::ImageRgb8(RgbImage::from_fn(w, h, |x, y| Rgb([(x % 256) as u8, (y % 256) as u8, ((x + y) % 256) as u8])))
    }

    fn ann_with(layout: &KeypointLayout, bbox: BBox, kps: &[(usize, f64, f64)]) -> PersonAnnotation {
        let mut k = vec![Keypoint::default(); layout.total()];
        for &(i, u, v) in kps {
            k[i] = Keypoint::new(u, v, 2.0);
        }
        PersonAnnotation::new(1, 1, bbox, k)
    }

    #[test]
    fn identity_crop() {
        let img = gradient(64, 48);
        let layout = KeypointLayout::coco17();
        let ann = ann_with(&layout, BBox::new(0.0, 0.0, 64.0, 48.0), &[(0, 10.5, 3.25), (5, 64.0, 48.0)]);
        let crop = crop_person(&img, &ann, &CropConfig::default()).unwrap();
        assert_eq!(crop.image, img);
        assert_eq!(crop.annotation.keypoints, ann.keypoints);
        assert_eq!(crop.annotation.bbox, BBox::new(0.0, 0.0, 64.0, 48.0));
    }

    #[test]
    fn translation_and_outside_keypoints() {
        let img = gradient(400, 300);
        let layout = KeypointLayout::coco17();
        let ann = ann_with(&layout, BBox::new(100.0, 50.0, 120.0, 100.0), &[(0, 150.0, 90.0), (1, 20.0, 20.0)]);
        let crop = crop_person(&img, &ann, &CropConfig::default()).unwrap();
        assert_eq!(crop.annotation.keypoints[0], Keypoint::new(50.0, 40.0, 2.0));
        assert_eq!(crop.annotation.keypoints[1].c, 0.0);
        assert_eq!((crop.image.width(), crop.image.height()), (120, 100));
        assert_eq!(crop.image.to_rgb8().get_pixel(0, 0), img.to_rgb8().get_pixel(100, 50));
    }

    #[test]
    fn padding_is_clipped() {
        let layout = KeypointLayout::coco17();
        let ann = ann_with(&layout, BBox::new(5.0, 5.0, 10.0, 10.0), &[]);
        let cfg = CropConfig { padding: 8.0, ..Default::default() };
        assert_eq!(person_window(&ann, 20, 30, &cfg).unwrap(), CropWindow { x0: 0, y0: 0, width: 20, height: 23 });
    }

    #[test]
    fn degenerate_crop() {
        let layout = KeypointLayout::coco17();
        let ann = ann_with(&layout, BBox::new(100.0, 100.0, 10.0, 10.0), &[]);
        assert!(matches!(crop_person(&gradient(50, 50), &ann, &CropConfig::default()), Err(CropError::Degenerate { .. })));
    }

    #[test]
    fn body_center() {
        let layout = KeypointLayout::coco17();
        let ann = ann_with(&layout, BBox::new(0.0, 0.0, 50.0, 50.0), &[(0, 40.0, 40.0), (5, 0.0, 0.0), (11, 10.0, 20.0)]);
        assert_eq!(find_body_center(&ann, &layout).unwrap(), (5.0, 10.0));
        let heads = ann_with(&layout, BBox::new(0.0, 0.0, 50.0, 50.0), &[(0, 4.0, 4.0), (3, 1.0, 1.0)]);
        assert!(matches!(find_body_center(&heads, &layout), Err(CropError::NoBodyCenter { .. })));
    }

    #[test]
    fn head_above_body_cuts_top() {
        let layout = KeypointLayout::coco17();
        let ann = ann_with(
            &layout,
            BBox::new(10.0, 5.0, 100.0, 200.0),
            &[(0, 60.0, 20.0), (3, 50.0, 30.0), (4, 70.0, 31.0), (5, 40.0, 60.0), (6, 80.0, 60.0), (11, 45.0, 150.0)],
        );
        for margin in [0.0, 4.0] {
            let cfg = CropConfig { head_margin: margin, ..Default::default() };
            let cut = headless_window(&ann, &layout, 300, 300, &cfg).unwrap().unwrap();
            assert_eq!(cut.side, CutSide::Top);
            assert_eq!(cut.window.y0 as f64, 31.0 + margin);
            assert_eq!(cut.window.y0 + cut.window.height, 205);
        }
        let img = gradient(300, 300);
        let HeadlessOutcome::Cropped(c) = make_headless(&img, &ann, &layout, &CropConfig::default()).unwrap() else {
            panic!("expected a crop");
        };
        assert!(layout.head_indices().iter().all(|&i| c.annotation.keypoints[i].c == 0.0));
        assert_eq!(c.annotation.keypoints[5], Keypoint::new(30.0, 29.0, 2.0));
    }

    #[test]
    fn sideways_and_inverted_heads() {
        let layout = KeypointLayout::coco17();
        let bbox = BBox::new(0.0, 0.0, 200.0, 100.0);
        let right = ann_with(&layout, bbox, &[(0, 180.0, 50.0), (3, 170.0, 45.0), (5, 60.0, 50.0), (11, 20.0, 55.0)]);
        let cut = headless_window(&right, &layout, 300, 300, &CropConfig::default()).unwrap().unwrap();
        assert_eq!(cut.side, CutSide::Right);
        assert_eq!(cut.window.width, 170);
        let below = ann_with(&layout, BBox::new(0.0, 0.0, 100.0, 200.0), &[(0, 50.0, 180.0), (5, 50.0, 40.0)]);
        let cut = headless_window(&below, &layout, 300, 300, &CropConfig::default()).unwrap().unwrap();
        assert_eq!((cut.side, cut.window.height), (CutSide::Bottom, 180));
    }

    #[test]
    fn missing_head_is_skipped() {
        let layout = KeypointLayout::coco17();
        let ann = ann_with(&layout, BBox::new(0.0, 0.0, 50.0, 50.0), &[(5, 10.0, 10.0)]);
        let out = make_headless(&gradient(60, 60), &ann, &layout, &CropConfig::default()).unwrap();
        assert!(matches!(out, HeadlessOutcome::Skipped(SkipReason::NoHead)));
    }

    #[test]
    fn head_filling_the_box_is_degenerate() {
        let layout = KeypointLayout::coco17();
        let ann = ann_with(&layout, BBox::new(0.0, 0.0, 50.0, 50.0), &[(0, 25.0, 50.0), (11, 25.0, 50.0)]);
        assert!(matches!(
            make_headless(&gradient(60, 60), &ann, &layout, &CropConfig::default()),
            Err(CropError::Degenerate { .. })
        ));
    }

    #[test]
    fn area_boundary() {
        let layout = KeypointLayout::coco17();
        let mut ds = Dataset::empty(layout.clone());
        let mut source = BTreeMap::new();
        for (id, h) in [(1u64, 199.0), (2, 200.0)] {
            ds.images.push(ImageRecord::new(id, 300, 300, format!("{id}.png")));
            let mut ann = ann_with(&layout, BBox::new(10.0, 10.0, 100.0, h), &[(5, 50.0, 50.0)]);
            ann.id = id;
            ann.image_id = id;
            ds.annotations.push(ann);
            source.insert(id, gradient(300, 300));
        }
        let out = generate_subsets(&ds, &source, &CropConfig::default(), false).unwrap();
        assert_eq!(out.report.basic_accepted, 1);
        assert_eq!(out.report.basic_rejected_area, 1);
        assert_eq!(out.basic.provenance[0].source_image_id, 2);
        let all = generate_subsets(&ds, &source, &CropConfig { min_area: 0.0, ..Default::default() }, false).unwrap();
        assert_eq!(all.report.basic_accepted, 2);
    }

    #[test]
    fn unreadable_image_counted() {
        let layout = KeypointLayout::coco17();
        let mut ds = Dataset::empty(layout.clone());
        ds.images.push(ImageRecord::new(3, 10, 10, "missing.png"));
        ds.annotations.push(PersonAnnotation { image_id: 3, ..ann_with(&layout, BBox::new(0.0, 0.0, 5.0, 5.0), &[]) });
        let out = generate_subsets(&ds, &BTreeMap::new(), &CropConfig::default(), true).unwrap();
        assert_eq!(out.report.unreadable_images, vec![3]);
        assert!(out.basic.dataset.images.is_empty());
    }
}
