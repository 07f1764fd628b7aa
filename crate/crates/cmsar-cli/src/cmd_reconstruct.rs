//! `cmsar reconstruct`: sinogram -> backprojected image -> peak table
//! with predicted-vs-found artifact locations.

use crate::adjoint_check::max_adjoint_defect;
use crate::report::{check_line, f, Csv};
use crate::Ctx;
use anyhow::{Context, Result};
use cmsar::backprojection::{apply_adjoint, find_peaks, predict_artifacts};
use cmsar::geometry::GroundPoint;
use cmsar::scene::{export_image, load_sinogram, save_grid, Normalization, SceneSpec};
use std::path::Path;

pub fn run(
    ctx: &Ctx,
    sinogram_flag: Option<&Path>,
    scene_flag: Option<&Path>,
    adjoint_test: bool,
) -> Result<bool> {
    let sino_path = sinogram_flag
        .map(|p| p.to_path_buf())
        .unwrap_or_else(|| ctx.out.join("sinogram.cmsar"));
    let d = load_sinogram(&sino_path).with_context(|| format!("loading {sino_path:?}"))?;
    let acq = ctx.cfg.acquisition();
    acq.validate()?;
    acq.check_sinogram(&d)?;

    let img = apply_adjoint(&d, &acq)?;
    std::fs::create_dir_all(&ctx.out)?;
    save_grid(ctx.out.join("image.cmsar"), &img)?;
    if ctx.emit_pgm {
        export_image(&img, ctx.out.join("image.pgm"), Normalization::Linear)?;
        export_image(&img, ctx.out.join("image_log.pgm"), Normalization::Log)?;
    }

    // predictions from the scene spec, when one is available
    let scene_path = scene_flag
        .map(|p| p.to_path_buf())
        .or_else(|| ctx.cfg.scene_path.as_ref().map(|p| p.into()));
    let mut predictions: Vec<(&'static str, GroundPoint)> = Vec::new();
    if let Some(p) = &scene_path {
        if p.exists() {
            let spec = SceneSpec::load(p)?;
            for pt in &spec.points {
                let pred = predict_artifacts(GroundPoint::new(pt.x1, pt.x2));
                predictions.push(("true", pred.source));
                predictions.push(("chi1", pred.chi1));
                predictions.push(("chi2", pred.chi2));
                predictions.push(("chi3", pred.chi3));
            }
        }
    }

    let report = find_peaks(&img, ctx.cfg.peaks.radius_cells, ctx.cfg.peaks.threshold);
    let g = img.geom;
    let max_mag = report.peaks.first().map(|p| p.magnitude).unwrap_or(0.0);
    let mut csv = Csv::new("rank,x1,x2,magnitude,ratio_to_max,i1,i2,label,pred_x1,pred_x2,dist_cells");
    for (rank, peak) in report.peaks.iter().enumerate() {
        let (label, px, dist) = predictions
            .iter()
            .map(|(label, p)| {
                let d1 = (peak.location.x1 - p.x1).abs() / g.dx1();
                let d2 = (peak.location.x2 - p.x2).abs() / g.dx2();
                (*label, *p, d1.max(d2))
            })
            .min_by(|a, b| a.2.partial_cmp(&b.2).unwrap())
            .map(|(l, p, dc)| (l, Some(p), dc))
            .unwrap_or(("unmatched", None, f64::NAN));
        csv.row(&[
            rank.to_string(),
            f(peak.location.x1),
            f(peak.location.x2),
            f(peak.magnitude),
            f(peak.magnitude / max_mag),
            peak.index.0.to_string(),
            peak.index.1.to_string(),
            label.to_string(),
            px.map(|p| f(p.x1)).unwrap_or_default(),
            px.map(|p| f(p.x2)).unwrap_or_default(),
            f(dist),
        ]);
    }
    csv.write(&ctx.out.join("peaks.csv"))?;
    println!(
        "{} peaks above {} of max; table in {}",
        report.peaks.len(),
        ctx.cfg.peaks.threshold,
        ctx.out.join("peaks.csv").display()
    );

    let mut pass = true;
    if adjoint_test {
        let defect = max_adjoint_defect(&acq, ctx.cfg.seed, 3)?;
        pass &= check_line(
            "adjoint dot-product test",
            defect < 1e-12,
            &format!("max relative defect {defect:.3e} over 3 random pairs"),
        );
    }
    Ok(pass)
}
