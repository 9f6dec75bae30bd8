use std::path::Path;

use hicp_core::annotation::{parse_dataset, write_dataset};
use hicp_core::crop::{CropReport, DirectorySource, Subset};
use hicp_core::{generate_subsets, CropConfig};
use log::info;
use rayon::prelude::*;
use serde::Serialize;

use super::resolve_layout;
use crate::cli::CropArgs;
use crate::error::{CliError, CliResult, Context};
use crate::output::{create_dir, csv_bytes, read_file, write_file, Output};

#[derive(Serialize)]
struct Summary<'a> {
    layout: &'a str,
    min_area: f64,
    padding: f64,
    head_margin: f64,
    basic_images: usize,
    headless_images: Option<usize>,
    counts: &'a CropReport,
}

fn write_subset(subset: &Subset, dir: &Path) -> CliResult<()> {
    let images = dir.join("images");
    create_dir(&images)?;
    write_file(&dir.join("annotations.json"), &write_dataset(&subset.dataset))?;
    subset.dataset.images.par_iter().zip(&subset.rasters).try_for_each(|(record, raster)| {
        let path = images.join(&record.file_name);
        raster.save(&path).map_err(|e| CliError::io(&path, e))
    })?;
    let header = ["image_id", "source_image_id", "source_annotation_id", "crop_x", "crop_y"].map(String::from);
    let rows: Vec<Vec<String>> = subset
        .provenance
        .iter()
        .map(|p| {
            [p.image_id, p.source_image_id, p.source_annotation_id, p.crop_origin[0].into(), p.crop_origin[1].into()]
                .iter()
                .map(u64::to_string)
                .collect()
        })
        .collect();
    write_file(&dir.join("provenance.csv"), &csv_bytes(&header, &rows))
}

pub fn run(args: &CropArgs, out: &Output) -> CliResult<()> {
    let cfg = CropConfig { min_area: args.min_area, head_margin: args.head_margin, padding: args.padding };
    cfg.validate().map_err(|e| CliError::Config(e.to_string()))?;
    if !args.images.is_dir() {
        return Err(CliError::io(&args.images, "image directory not found"));
    }
    let bytes = read_file(&args.annotations)?;
    let layout = resolve_layout(&args.layout, &bytes, &args.annotations)?;
    let dataset = parse_dataset(&bytes, &layout).at(&args.annotations)?;
    info!("{} images, {} persons", dataset.images.len(), dataset.annotations.len());

    let result = generate_subsets(&dataset, &DirectorySource::new(&args.images), &cfg, args.headless).at(&args.images)?;
    write_subset(&result.basic, &args.out.join("basic"))?;
    if let Some(h) = &result.headless {
        write_subset(h, &args.out.join("headless"))?;
    }

    let summary = Summary {
        layout: layout.name(),
        min_area: cfg.min_area,
        padding: cfg.padding,
        head_margin: cfg.head_margin,
        basic_images: result.basic.dataset.images.len(),
        headless_images: result.headless.as_ref().map(|h| h.dataset.images.len()),
        counts: &result.report,
    };
    out.emit(&out.envelope("crop", &summary), Some(&args.out.join("summary.json")))?;
    info!("basic: {} crops", summary.basic_images);
    if summary.basic_images == 0 {
        return Err(CliError::Empty("no person passed the crop filter".into()));
    }
    Ok(())
}
