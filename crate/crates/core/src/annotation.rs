//! COCO-style keypoint datasets and detection-result files.
//!
//! Both ground truth and detections use the COCO keypoint JSON schema with
//! flat `[u, v, c] × N` arrays. Fields this crate does not interpret are kept
//! in an `extra` map and written back unchanged.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize, Serializer};
use serde_json::{Map, Value};

use crate::error::AnnotationError;
use crate::layout::KeypointLayout;

/// A 2D keypoint. For ground truth `c` is the visibility flag
/// (0 absent, 1 labeled but occluded, 2 visible); for detections it is a
/// confidence in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Keypoint {
    pub u: f64,
    pub v: f64,
    pub c: f64,
}

impl Keypoint {
    pub fn new(u: f64, v: f64, c: f64) -> Self {
        Self { u, v, c }
    }

    /// Ground-truth "keypoint occurs" test.
    pub fn is_labeled(&self) -> bool {
        self.c > 0.0
    }
}

/// Axis-aligned box `(x0, y0, width, height)` in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BBox {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        Self { x, y, w, h }
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImageRecord {
    pub id: u64,
    pub width: u32,
    pub height: u32,
    pub file_name: String,
    pub extra: Map<String, Value>,
}

impl ImageRecord {
    pub fn new(id: u64, width: u32, height: u32, file_name: impl Into<String>) -> Self {
        Self { id, width, height, file_name: file_name.into(), extra: Map::new() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PersonAnnotation {
    pub id: u64,
    pub image_id: u64,
    pub bbox: BBox,
    /// Annotated area in pixels², when the document carries one.
    pub area: Option<f64>,
    pub keypoints: Vec<Keypoint>,
    pub num_keypoints: Option<u32>,
    pub extra: Map<String, Value>,
}

impl PersonAnnotation {
    pub fn new(id: u64, image_id: u64, bbox: BBox, keypoints: Vec<Keypoint>) -> Self {
        Self {
            id,
            image_id,
            bbox,
            area: Some(bbox.area()),
            num_keypoints: Some(count_labeled(&keypoints)),
            keypoints,
            extra: Map::new(),
        }
    }

    pub fn labeled_count(&self) -> u32 {
        count_labeled(&self.keypoints)
    }
}

fn count_labeled(kps: &[Keypoint]) -> u32 {
    kps.iter().filter(|k| k.is_labeled()).count() as u32
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub images: Vec<ImageRecord>,
    pub annotations: Vec<PersonAnnotation>,
    pub layout: KeypointLayout,
    /// Top-level keys other than `images` and `annotations` (info, licenses,
    /// categories, ...).
    pub extra: Map<String, Value>,
}

impl Dataset {
    pub fn empty(layout: KeypointLayout) -> Self {
        Self { images: Vec::new(), annotations: Vec::new(), layout, extra: Map::new() }
    }

    pub fn image(&self, id: u64) -> Option<&ImageRecord> {
        self.images.iter().find(|im| im.id == id)
    }

    /// Annotations grouped by image id, each group in document order.
    pub fn annotations_by_image(&self) -> HashMap<u64, Vec<&PersonAnnotation>> {
        let mut map: HashMap<u64, Vec<&PersonAnnotation>> = HashMap::new();
        for ann in &self.annotations {
            map.entry(ann.image_id).or_default().push(ann);
        }
        map
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionRecord {
    pub image_id: u64,
    pub category_id: u64,
    pub keypoints: Vec<Keypoint>,
    pub score: f64,
    pub extra: Map<String, Value>,
}

impl DetectionRecord {
    pub fn new(image_id: u64, keypoints: Vec<Keypoint>, score: f64) -> Self {
        Self { image_id, category_id: 1, keypoints, score, extra: Map::new() }
    }
}

// --- wire format -----------------------------------------------------------

/// Writes integral values as JSON integers and everything else with the
/// shortest round-tripping decimal.
fn compact_number(x: f64) -> Value {
    if x.fract() == 0.0 && x.abs() < 9.0e15 {
        Value::from(x as i64)
    } else {
        serde_json::Number::from_f64(x).map(Value::Number).unwrap_or(Value::Null)
    }
}

fn ser_numbers<S: Serializer>(xs: &[f64], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(xs.iter().map(|&x| compact_number(x)))
}

fn ser_number<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    compact_number(*x).serialize(s)
}

fn ser_opt_number<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match x {
        Some(x) => compact_number(*x).serialize(s),
        None => s.serialize_none(),
    }
}

#[derive(Serialize, Deserialize)]
struct RawDataset {
    images: Vec<RawImage>,
    annotations: Vec<RawAnnotation>,
    #[serde(flatten)]
    extra: Map<String, Value>,
}

#[derive(Serialize, Deserialize)]
struct RawImage {
    id: u64,
    width: u32,
    height: u32,
    file_name: String,
    #[serde(flatten)]
    extra: Map<String, Value>,
}

#[derive(Serialize, Deserialize)]
struct RawAnnotation {
    id: u64,
    image_id: u64,
    #[serde(serialize_with = "ser_numbers")]
    bbox: [f64; 4],
    #[serde(default, skip_serializing_if = "Option::is_none", serialize_with = "ser_opt_number")]
    area: Option<f64>,
    #[serde(serialize_with = "ser_numbers")]
    keypoints: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    num_keypoints: Option<u32>,
    #[serde(flatten)]
    extra: Map<String, Value>,
}

#[derive(Serialize, Deserialize)]
struct RawDetection {
    image_id: u64,
    #[serde(default = "default_category")]
    category_id: u64,
    #[serde(serialize_with = "ser_numbers")]
    keypoints: Vec<f64>,
    #[serde(serialize_with = "ser_number")]
    score: f64,
    #[serde(flatten)]
    extra: Map<String, Value>,
}

fn default_category() -> u64 {
    1
}

/// Converts serde_json's 1-based line/column into a byte offset.
fn byte_offset(doc: &[u8], line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let mut offset = 0;
    let mut current = 1;
    for (i, &b) in doc.iter().enumerate() {
        if current == line {
            break;
        }
        if b == b'\n' {
            current += 1;
            offset = i + 1;
        }
    }
    (offset + column.saturating_sub(1)).min(doc.len())
}

fn parse_error(doc: &[u8], e: serde_json::Error) -> AnnotationError {
    AnnotationError::Parse { offset: byte_offset(doc, e.line(), e.column()), message: e.to_string() }
}

fn invalid(record: impl Into<String>, message: impl Into<String>) -> AnnotationError {
    AnnotationError::Invalid { record: record.into(), message: message.into() }
}

fn keypoints_from_flat(
    flat: &[f64],
    layout: &KeypointLayout,
    record: impl Fn() -> String,
) -> Result<Vec<Keypoint>, AnnotationError> {
    let expected = 3 * layout.total();
    if flat.len() != expected {
        return Err(AnnotationError::LayoutMismatch {
            record: record(),
            layout: layout.name().to_string(),
            expected,
            found: flat.len(),
        });
    }
    if let Some(x) = flat.iter().find(|x| !x.is_finite()) {
        return Err(invalid(record(), format!("non-finite keypoint value {x}")));
    }
    Ok(flat.chunks_exact(3).map(|c| Keypoint::new(c[0], c[1], c[2])).collect())
}

fn keypoints_to_flat(kps: &[Keypoint]) -> Vec<f64> {
    kps.iter().flat_map(|k| [k.u, k.v, k.c]).collect()
}

fn validate_annotation(ann: &PersonAnnotation, image: &ImageRecord) -> Result<(), AnnotationError> {
    let record = || format!("annotation {}", ann.id);
    let b = ann.bbox;
    if ![b.x, b.y, b.w, b.h].iter().all(|x| x.is_finite()) || b.w <= 0.0 || b.h <= 0.0 {
        return Err(invalid(record(), format!("bbox {:?} must have positive width and height", [b.x, b.y, b.w, b.h])));
    }
    if let Some(area) = ann.area {
        if !area.is_finite() || area < 0.0 {
            return Err(invalid(record(), format!("area {area} must be finite and non-negative")));
        }
    }
    let (w, h) = (image.width as f64, image.height as f64);
    for (i, k) in ann.keypoints.iter().enumerate() {
        if k.c != 0.0 && k.c != 1.0 && k.c != 2.0 {
            return Err(invalid(record(), format!("keypoint {i} visibility {} not in {{0,1,2}}", k.c)));
        }
        if k.c > 0.0 && !(0.0..=w).contains(&k.u) || k.c > 0.0 && !(0.0..=h).contains(&k.v) {
            return Err(invalid(
                record(),
                format!("keypoint {i} at ({}, {}) outside {}x{} image", k.u, k.v, image.width, image.height),
            ));
        }
    }
    Ok(())
}

/// Parses and validates a COCO keypoint annotation document.
pub fn parse_dataset(document: &[u8], layout: &KeypointLayout) -> Result<Dataset, AnnotationError> {
    let raw: RawDataset = serde_json::from_slice(document).map_err(|e| parse_error(document, e))?;

    let mut images = Vec::with_capacity(raw.images.len());
    let mut index = HashMap::with_capacity(raw.images.len());
    for (pos, im) in raw.images.into_iter().enumerate() {
        if im.width < 1 || im.height < 1 {
            return Err(invalid(format!("image {}", im.id), "width and height must be ≥ 1"));
        }
        if index.insert(im.id, pos).is_some() {
            return Err(AnnotationError::DuplicateImage(im.id));
        }
        images.push(ImageRecord {
            id: im.id,
            width: im.width,
            height: im.height,
            file_name: im.file_name,
            extra: im.extra,
        });
    }

    let mut seen = HashSet::with_capacity(raw.annotations.len());
    let mut annotations = Vec::with_capacity(raw.annotations.len());
    for a in raw.annotations {
        if !seen.insert(a.id) {
            return Err(AnnotationError::DuplicateAnnotation(a.id));
        }
        let keypoints = keypoints_from_flat(&a.keypoints, layout, || format!("annotation {}", a.id))?;
        let ann = PersonAnnotation {
            id: a.id,
            image_id: a.image_id,
            bbox: BBox::new(a.bbox[0], a.bbox[1], a.bbox[2], a.bbox[3]),
            area: a.area,
            keypoints,
            num_keypoints: a.num_keypoints,
            extra: a.extra,
        };
        let image = index
            .get(&ann.image_id)
            .map(|&p| &images[p])
            .ok_or(AnnotationError::DanglingImage { annotation_id: ann.id, image_id: ann.image_id })?;
        validate_annotation(&ann, image)?;
        annotations.push(ann);
    }

    Ok(Dataset { images, annotations, layout: layout.clone(), extra: raw.extra })
}

/// Serializes a dataset to COCO keypoint JSON.
pub fn write_dataset(dataset: &Dataset) -> Vec<u8> {
    let raw = RawDataset {
        images: dataset
            .images
            .iter()
            .map(|im| RawImage {
                id: im.id,
                width: im.width,
                height: im.height,
                file_name: im.file_name.clone(),
                extra: im.extra.clone(),
            })
            .collect(),
        annotations: dataset
            .annotations
            .iter()
            .map(|a| RawAnnotation {
                id: a.id,
                image_id: a.image_id,
                bbox: [a.bbox.x, a.bbox.y, a.bbox.w, a.bbox.h],
                area: a.area,
                keypoints: keypoints_to_flat(&a.keypoints),
                num_keypoints: a.num_keypoints,
                extra: a.extra.clone(),
            })
            .collect(),
        extra: dataset.extra.clone(),
    };
    serde_json::to_vec(&raw).expect("dataset serialization is infallible")
}

/// Parses a COCO results document (a JSON list of detections).
pub fn parse_detections(
    document: &[u8],
    layout: &KeypointLayout,
) -> Result<Vec<DetectionRecord>, AnnotationError> {
    let raw: Vec<RawDetection> = serde_json::from_slice(document).map_err(|e| parse_error(document, e))?;
    raw.into_iter()
        .enumerate()
        .map(|(i, d)| {
            let record = || format!("detection {i} (image {})", d.image_id);
            let keypoints = keypoints_from_flat(&d.keypoints, layout, record)?;
            if !(0.0..=1.0).contains(&d.score) {
                return Err(invalid(record(), format!("score {} outside [0, 1]", d.score)));
            }
            if let Some((j, k)) = keypoints.iter().enumerate().find(|(_, k)| !(0.0..=1.0).contains(&k.c)) {
                return Err(invalid(record(), format!("keypoint {j} confidence {} outside [0, 1]", k.c)));
            }
            Ok(DetectionRecord {
                image_id: d.image_id,
                category_id: d.category_id,
                keypoints,
                score: d.score,
                extra: d.extra,
            })
        })
        .collect()
}

pub fn write_detections(dets: &[DetectionRecord]) -> Vec<u8> {
    let raw: Vec<RawDetection> = dets
        .iter()
        .map(|d| RawDetection {
            image_id: d.image_id,
            category_id: d.category_id,
            keypoints: keypoints_to_flat(&d.keypoints),
            score: d.score,
            extra: d.extra.clone(),
        })
        .collect();
    serde_json::to_vec(&raw).expect("detection serialization is infallible")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::KeypointLayout;
    use proptest::prelude::*;

    fn two_image_dataset() -> Dataset {
        let layout = KeypointLayout::coco17();
        let mut kps = vec![Keypoint::default(); 17];
        kps[0] = Keypoint::new(12.5, 30.25, 2.0);
        kps[5] = Keypoint::new(40.0, 60.0, 1.0);
        let mut ann = PersonAnnotation::new(7, 2, BBox::new(10.0, 20.0, 50.5, 80.0), kps);
        ann.extra.insert("iscrowd".into(), Value::from(0));
        ann.extra.insert("halpe_aux".into(), serde_json::json!({"src": "x", "k": [1, 2]}));
        let mut im = ImageRecord::new(2, 640, 480, "b.jpg");
        im.extra.insert("coco_url".into(), Value::from("http://example/b.jpg"));
        let mut extra = Map::new();
        extra.insert("info".into(), serde_json::json!({"version": "1.0"}));
        Dataset {
            images: vec![ImageRecord::new(1, 320, 240, "a.jpg"), im],
            annotations: vec![ann],
            layout,
            extra,
        }
    }

    #[test]
    fn empty_document() {
        let d = parse_dataset(br#"{"images": [], "annotations": []}"#, &KeypointLayout::coco17()).unwrap();
        assert!(d.images.is_empty());
        assert!(d.annotations.is_empty());
        let out = write_dataset(&d);
        let v: Value = serde_json::from_slice(&out).unwrap();
        assert_eq!(v["annotations"], serde_json::json!([]));
    }

    #[test]
    fn two_image_round_trip_is_field_identical() {
        let d = two_image_dataset();
        let bytes = write_dataset(&d);
        let back = parse_dataset(&bytes, &d.layout).unwrap();
        assert_eq!(back.images.len(), 2);
        for (a, b) in d.images.iter().zip(&back.images) {
            assert_eq!(a.id, b.id);
            assert_eq!((a.width, a.height), (b.width, b.height));
            assert_eq!(a.file_name, b.file_name);
            assert_eq!(a.extra, b.extra);
        }
        for (a, b) in d.annotations.iter().zip(&back.annotations) {
            assert_eq!(a.bbox, b.bbox);
            assert_eq!(a.area, b.area);
            assert_eq!(a.keypoints, b.keypoints);
            assert_eq!(a.num_keypoints, b.num_keypoints);
            assert_eq!(a.extra, b.extra);
        }
        assert_eq!(back, d);
    }

    #[test]
    fn halpe_keypoint_array_has_408_numbers() {
        let layout = KeypointLayout::halpe136();
        let ann = PersonAnnotation::new(1, 1, BBox::new(0.0, 0.0, 10.0, 10.0), vec![Keypoint::default(); 136]);
        let d = Dataset {
            images: vec![ImageRecord::new(1, 10, 10, "x.png")],
            annotations: vec![ann],
            layout,
            extra: Map::new(),
        };
        let v: Value = serde_json::from_slice(&write_dataset(&d)).unwrap();
        assert_eq!(v["annotations"][0]["keypoints"].as_array().unwrap().len(), 3 * 136);
    }

    #[test]
    fn malformed_document_reports_byte_offset() {
        let doc = b"{\"images\": [],\n \"annotations\": [,]}";
        match parse_dataset(doc, &KeypointLayout::coco17()) {
            Err(AnnotationError::Parse { offset, .. }) => {
                assert_eq!(doc[offset], b',', "offset {offset}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn dangling_image_id() {
        let doc = br#"{"images": [{"id": 1, "width": 5, "height": 5, "file_name": "a"}],
            "annotations": [{"id": 3, "image_id": 9, "bbox": [0,0,1,1], "keypoints": [0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0]}]}"#;
        assert!(matches!(
            parse_dataset(doc, &KeypointLayout::coco17()),
            Err(AnnotationError::DanglingImage { annotation_id: 3, image_id: 9 })
        ));
    }

    #[test]
    fn wrong_keypoint_count_rejected() {
        let doc = br#"{"images": [{"id": 1, "width": 5, "height": 5, "file_name": "a"}],
            "annotations": [{"id": 3, "image_id": 1, "bbox": [0,0,1,1], "keypoints": [1,1,2]}]}"#;
        assert!(matches!(
            parse_dataset(doc, &KeypointLayout::coco17()),
            Err(AnnotationError::LayoutMismatch { expected: 51, found: 3, .. })
        ));
    }

    #[test]
    fn visible_keypoint_outside_image_rejected() {
        let mut d = two_image_dataset();
        d.annotations[0].keypoints[3] = Keypoint::new(700.0, 10.0, 2.0);
        assert!(matches!(
            parse_dataset(&write_dataset(&d), &d.layout),
            Err(AnnotationError::Invalid { .. })
        ));
    }

    #[test]
    fn detections_layout_mismatch() {
        let wb = KeypointLayout::coco_wholebody133();
        let det = DetectionRecord::new(1, vec![Keypoint::new(1.0, 2.0, 0.5); 133], 0.9);
        let bytes = write_detections(&[det]);
        assert!(parse_detections(&bytes, &wb).is_ok());
        assert!(matches!(
            parse_detections(&bytes, &KeypointLayout::halpe136()),
            Err(AnnotationError::LayoutMismatch { expected: 408, found: 399, .. })
        ));
        assert!(parse_detections(b"[]", &wb).unwrap().is_empty());
    }

    #[test]
    fn fuzzed_bytes_never_panic() {
        let layout = KeypointLayout::coco17();
        let base = write_dataset(&two_image_dataset());
        for cut in 0..base.len() {
            let _ = parse_dataset(&base[..cut], &layout);
            let mut flipped = base.clone();
            flipped[cut] ^= 0x5a;
            let _ = parse_dataset(&flipped, &layout);
            let _ = parse_detections(&flipped, &layout);
        }
    }

    fn arb_detection(total: usize) -> impl Strategy<Value = DetectionRecord> {
        (
            1u64..1000,
            prop::collection::vec((-1e4f64..1e4, -1e4f64..1e4, 0.0f64..=1.0), total),
            0.0f64..=1.0,
        )
            .prop_map(|(id, kps, score)| {
                DetectionRecord::new(id, kps.into_iter().map(|(u, v, c)| Keypoint::new(u, v, c)).collect(), score)
            })
    }

    proptest! {
        #[test]
        fn detections_round_trip(dets in prop::collection::vec(arb_detection(17), 0..6)) {
            let layout = KeypointLayout::coco17();
            let back = parse_detections(&write_detections(&dets), &layout).unwrap();
            prop_assert_eq!(back, dets);
        }

        #[test]
        fn dataset_round_trip(
            kps in prop::collection::vec((0.0f64..=320.0, 0.0f64..=240.0, 0u8..3), 17),
            x in 0.0f64..100.0, w in 0.5f64..200.0,
        ) {
            let layout = KeypointLayout::coco17();
            let kps: Vec<Keypoint> = kps.into_iter().map(|(u, v, c)| Keypoint::new(u, v, c as f64)).collect();
            let d = Dataset {
                images: vec![ImageRecord::new(4, 320, 240, "p.png")],
                annotations: vec![PersonAnnotation::new(11, 4, BBox::new(x, x / 2.0, w, w * 1.5), kps)],
                layout: layout.clone(),
                extra: Map::new(),
            };
            let back = parse_dataset(&write_dataset(&d), &layout).unwrap();
            prop_assert_eq!(back, d);
        }
    }
}
