use hicp_core::registration::estimate_rotation_with_translation;
use hicp_core::{estimate_rigid, fix_translation, residual_rms, CorrespondenceSet, FrameId};
use nalgebra::Vector3;
use serde::Serialize;

use crate::cli::{AnchorMode, RegisterArgs};
use crate::error::{CliError, CliResult, Context};
use crate::output::{read_text, write_file, Output};

#[derive(Serialize)]
struct Body {
    source: String,
    target: String,
    pairs: usize,
    anchor: Option<[f64; 3]>,
    anchor_mode: Option<&'static str>,
    rotation: [[f64; 3]; 3],
    translation: [f64; 3],
    residual_rms: f64,
}

pub fn run(args: &RegisterArgs, out: &Output) -> CliResult<()> {
    let anchor = match &args.anchor {
        None => None,
        Some(list) => match list.0.as_slice() {
            &[x, y, z] if [x, y, z].iter().all(|v| v.is_finite()) => Some(Vector3::new(x, y, z)),
            _ => return Err(CliError::Config("--anchor needs three finite numbers x,y,z".into())),
        },
    };
    let mut corr = CorrespondenceSet::parse(&read_text(&args.pairs)?).at(&args.pairs)?;
    corr.source = Some(FrameId::new(&args.source));
    corr.target = Some(FrameId::new(&args.target));

    let transform = match (anchor, args.anchor_mode) {
        (None, _) => estimate_rigid(&corr).at(&args.pairs)?,
        (Some(a), AnchorMode::Replace) => fix_translation(&estimate_rigid(&corr).at(&args.pairs)?, &a),
        (Some(a), AnchorMode::Refit) => estimate_rotation_with_translation(&corr, &a).at(&args.pairs)?,
    };
    let rms = residual_rms(&corr, &transform).at(&args.pairs)?;
    write_file(&args.out, transform.to_toml().as_bytes())?;

    let r = transform.rotation();
    let t = transform.translation();
    let body = Body {
        source: args.source.clone(),
        target: args.target.clone(),
        pairs: corr.len(),
        anchor: anchor.map(|a| [a.x, a.y, a.z]),
        anchor_mode: anchor.map(|_| match args.anchor_mode {
            AnchorMode::Replace => "replace",
            AnchorMode::Refit => "refit",
        }),
        rotation: [0, 1, 2].map(|i| [r[(i, 0)], r[(i, 1)], r[(i, 2)]]),
        translation: [t.x, t.y, t.z],
        residual_rms: rms,
    };
    out.emit(&out.envelope("register", &body), args.report.as_deref())
}

