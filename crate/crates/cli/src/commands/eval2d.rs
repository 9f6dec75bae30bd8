use hicp_core::annotation::{parse_dataset, parse_detections};
use hicp_core::eval2d::{evaluate_breakdown, EvalOptions, EvalReport};
use hicp_core::OksParams;
use serde::Serialize;

use super::{is_blank, resolve_layout};
use crate::cli::Eval2dArgs;
use crate::error::{CliError, CliResult, Context};
use crate::output::{csv_bytes, num, read_file, read_text, write_file, Output};

#[derive(Serialize)]
struct Body<'a> {
    layout: &'a str,
    scale_rule: hicp_core::ScaleRule,
    thresholds: &'a [f64],
    reports: &'a [EvalReport],
}

pub const CSV_HEADER: [&str; 8] = ["group", "category", "threshold", "tp", "fp", "fn", "precision", "recall"];

fn csv_rows(reports: &[EvalReport]) -> Vec<Vec<String>> {
    reports
        .iter()
        .flat_map(|r| {
            r.per_threshold.iter().map(move |t| {
                vec![
                    r.group.to_string(),
                    r.category.map_or("all", |c| c.as_str()).to_string(),
                    num(t.threshold),
                    t.tp.to_string(),
                    t.fp.to_string(),
                    t.fn_.to_string(),
                    num(t.precision),
                    num(t.recall),
                ]
            })
        })
        .collect()
}

pub fn run(args: &Eval2dArgs, out: &Output) -> CliResult<()> {
    let gt_bytes = read_file(&args.gt)?;
    let layout = resolve_layout(&args.layout, &gt_bytes, &args.gt)?;
    let dataset = parse_dataset(&gt_bytes, &layout).at(&args.gt)?;
    let dt_bytes = read_file(&args.dt)?;
    let dets = if is_blank(&dt_bytes) { Vec::new() } else { parse_detections(&dt_bytes, &layout).at(&args.dt)? };

    let mut params = match &args.kappas {
        Some(p) => OksParams::from_toml(&read_text(p)?, &layout).at(p)?,
        None => OksParams::for_layout(&layout),
    };
    if let Some(t) = &args.thresholds {
        params.thresholds = t.0.clone();
    }
    params.validate().map_err(|e| CliError::Config(e.to_string()))?;
    if args.group.0.is_empty() {
        return Err(CliError::Config("--group needs at least one group".into()));
    }

    let options = EvalOptions { interpolated: args.interpolated };
    let summary =
        evaluate_breakdown(&dataset, &dets, &params, &args.group.0, args.by_category, options).at(&args.dt)?;
    let body = Body { layout: layout.name(), scale_rule: params.scale_rule, thresholds: &params.thresholds, reports: &summary.reports };
    out.emit(&out.envelope("eval2d", &body), args.out.as_deref())?;
    if let Some(path) = &args.csv {
        write_file(path, &csv_bytes(&CSV_HEADER.map(String::from), &csv_rows(&summary.reports)))?;
    }
    if summary.reports.iter().all(|r| r.empty) {
        return Err(CliError::Empty("no ground-truth person to evaluate".into()));
    }
    Ok(())
}
