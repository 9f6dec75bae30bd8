mod crop;
mod eval2d;
mod eval3d;
mod lift;
mod register;
mod synth;

use std::path::Path;

use hicp_core::error::LayoutError;
use hicp_core::KeypointLayout;
use serde_json::Value;

use crate::cli::Command;
use crate::error::{CliError, CliResult, Context};
use crate::output::Output;

pub fn run(command: &Command, out: &Output) -> CliResult<()> {
    match command {
        Command::Crop(a) => crop::run(a, out),
        Command::Eval2d(a) => eval2d::run(a, out),
        Command::Lift(a) => lift::run(a, out),
        Command::Register(a) => register::run(a, out),
        Command::Eval3d(a) => eval3d::run(a, out),
        Command::Synth(a) => synth::run(a, out),
    }
}

/// Keypoint count of the first record carrying a `keypoints` array, either
/// in a COCO document's `annotations` or in a results list.
fn keypoint_count(document: &Value) -> Option<usize> {
    let records = match document {
        Value::Object(map) => map.get("annotations")?.as_array()?,
        Value::Array(list) => list,
        _ => return None,
    };
    records.iter().find_map(|r| r.get("keypoints")?.as_array().map(|k| k.len() / 3))
}

/// The named layout, or with `auto` the builtin layout matching the
/// keypoint count found in `bytes`.
fn resolve_layout(name: &str, bytes: &[u8], path: &Path) -> CliResult<KeypointLayout> {
    if name != "auto" {
        return KeypointLayout::by_name(name).at(path);
    }
    let document: Value = serde_json::from_slice(bytes).map_err(|e| CliError::io(path, e))?;
    match keypoint_count(&document) {
        Some(n) => KeypointLayout::by_name(&n.to_string()).at(path),
        None => Err(CliError::config(
            path,
            LayoutError::Invalid("no keypoints found; pass --layout explicitly".into()),
        )),
    }
}

fn is_blank(bytes: &[u8]) -> bool {
    bytes.iter().all(u8::is_ascii_whitespace)
}
