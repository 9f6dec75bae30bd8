//! Fixture builders and a runner for the `hicp` binary.

#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use image::{Rgb, RgbImage};
use serde_json::{json, Value};

pub fn hicp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hicp")).args(args).output().expect("spawn hicp")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("hicp exited by signal")
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

pub fn read_json(path: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))).unwrap()
}

pub fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// COCO-17 keypoints for an upright person filling `[x, y, w, h]`: the five
/// head points in the top fifth, the rest spread over the lower part.
pub fn upright_keypoints(x: f64, y: f64, w: f64, h: f64) -> Vec<f64> {
    let mut flat = Vec::with_capacity(51);
    for i in 0..17 {
        let (fx, fy) = if i < 5 {
            (0.3 + 0.1 * i as f64, 0.05 + 0.02 * i as f64)
        } else {
            let j = (i - 5) as f64;
            (0.1 + 0.07 * j, 0.35 + 0.05 * j)
        };
        flat.extend_from_slice(&[x + fx * w, y + fy * h, 2.0]);
    }
    flat
}

/// Person boxes of the crop fixture: `(image id, [x, y, w, h])`. Areas are
/// 22500, 24000, 10000, 20800 and 20022 px², so exactly one falls below
/// 20000.
pub const CROP_PERSONS: [(u64, [f64; 4]); 5] = [
    (1, [10.0, 20.0, 150.0, 150.0]),
    (1, [300.0, 40.0, 200.0, 120.0]),
    (1, [100.0, 300.0, 100.0, 100.0]),
    (2, [50.0, 60.0, 160.0, 130.0]),
    (2, [400.0, 200.0, 141.0, 142.0]),
];

pub fn crop_annotations() -> Value {
    let images: Vec<Value> = (1..=2)
        .map(|id| json!({"id": id, "width": 640, "height": 480, "file_name": format!("img{id}.png")}))
        .collect();
    let annotations: Vec<Value> = CROP_PERSONS
        .iter()
        .enumerate()
        .map(|(n, &(image_id, [x, y, w, h]))| {
            json!({
                "id": n + 1,
                "image_id": image_id,
                "category_id": 1,
                "bbox": [x, y, w, h],
                "area": w * h,
                "num_keypoints": 17,
                "keypoints": upright_keypoints(x, y, w, h),
            })
        })
        .collect();
    json!({"images": images, "annotations": annotations, "categories": [{"id": 1, "name": "person"}]})
}

/// Writes `annotations.json` and `images/img{1,2}.png` under `dir`.
pub fn write_crop_fixture(dir: &Path) -> (PathBuf, PathBuf) {
    let images = dir.join("images");
    std::fs::create_dir_all(&images).unwrap();
    for id in 1..=2u8 {
        let img = RgbImage::from_fn(640, 480, |x, y| Rgb([(x % 256) as u8, (y % 256) as u8, id * 40]));
        img.save(images.join(format!("img{id}.png"))).unwrap();
    }
    let ann = dir.join("annotations.json");
    std::fs::write(&ann, serde_json::to_vec(&crop_annotations()).unwrap()).unwrap();
    (ann, images)
}

/// Detections copying every ground-truth person of a COCO document, score 1.
pub fn perfect_detections(gt: &Value) -> Value {
    let dets: Vec<Value> = gt["annotations"]
        .as_array()
        .unwrap()
        .iter()
        .map(|a| {
            let kps: Vec<f64> = a["keypoints"]
                .as_array()
                .unwrap()
                .chunks(3)
                .flat_map(|k| [k[0].as_f64().unwrap(), k[1].as_f64().unwrap(), if k[2].as_f64().unwrap() > 0.0 { 1.0 } else { 0.0 }])
                .collect();
            json!({"image_id": a["image_id"], "category_id": 1, "keypoints": kps, "score": 1.0})
        })
        .collect();
    Value::Array(dets)
}

pub const CAMERA_TOML: &str = "fx = 600.0\nfy = 600.0\ncx = 320.0\ncy = 240.0\nwidth = 640\nheight = 480\n";

/// A scene TOML from top-level keys, the camera above, then further tables.
pub fn scene(top: &str, tables: &str) -> String {
    format!("{top}\n[camera]\n{CAMERA_TOML}\n{tables}")
}
