//! `cmsar simulate`: scene file -> rasterized grid -> forward model ->
//! sinogram on disk, with support-band statistics and an optional
//! geometry self-test.

use crate::report::check_line;
use crate::Ctx;
use anyhow::{bail, Context, Result};
use cmsar::forward::{apply_forward, CutoffBank};
use cmsar::geometry::{bistatic_range, SlowTime};
use cmsar::scene::{
    export_image, rasterize, save_grid, save_sinogram, Normalization, SceneSpec,
};
use std::path::Path;

pub fn run(ctx: &Ctx, scene_flag: Option<&Path>, self_test: bool) -> Result<bool> {
    let scene_path = match scene_flag {
        Some(p) => p.to_path_buf(),
        None => match &ctx.cfg.scene_path {
            Some(p) => p.into(),
            None => bail!("no scene file: pass --scene or set scene_path in the config"),
        },
    };
    let spec = SceneSpec::load(&scene_path)
        .with_context(|| format!("loading scene spec {scene_path:?}"))?;
    let acq = ctx.cfg.acquisition();
    acq.validate()?;
    let grid = rasterize(&spec, acq.scene)?;
    let d = apply_forward(&grid, &acq)?;

    std::fs::create_dir_all(&ctx.out)?;
    save_grid(ctx.out.join("scene.cmsar"), &grid)?;
    save_sinogram(ctx.out.join("sinogram.cmsar"), &d)?;
    if ctx.emit_pgm {
        export_image(&grid, ctx.out.join("scene.pgm"), Normalization::Linear)?;
        let img = sinogram_as_grid(&d);
        export_image(&img, ctx.out.join("sinogram.pgm"), Normalization::Linear)?;
    }

    // support band and annihilated-band statistics
    let sg = acq.sinogram;
    let bank = CutoffBank::from_config(&acq);
    let mut t_lo = f64::INFINITY;
    let mut t_hi = f64::NEG_INFINITY;
    let mut band_samples = 0usize;
    let mut band_nonzero = 0usize;
    for i_s in 0..sg.ns {
        let s = sg.s(i_s);
        let center = 2.0 * (s * s + acq.h * acq.h).sqrt();
        for j in 0..sg.nt {
            let t = sg.t(j);
            if d.get(i_s, j) != 0.0 {
                t_lo = t_lo.min(t);
                t_hi = t_hi.max(t);
            }
            if (t - center).abs() < bank.g_band() {
                band_samples += 1;
                if d.get(i_s, j) != 0.0 {
                    band_nonzero += 1;
                }
            }
        }
    }
    if t_hi >= t_lo {
        println!("support band: t in [{t_lo:.6}, {t_hi:.6}]");
    } else {
        println!("support band: empty (zero sinogram)");
    }
    println!(
        "annihilated band: {band_samples} samples within 20*eps^2/h = {:.6}, nonzero: {band_nonzero}",
        bank.g_band()
    );
    let mut pass = check_line(
        "g-band annihilation",
        band_nonzero == 0,
        &format!("{band_nonzero} nonzero of {band_samples}"),
    );

    if self_test {
        pass &= peak_time_self_test(&spec, &d, &acq, &bank)?;
    }
    println!(
        "wrote {} and {}",
        ctx.out.join("scene.cmsar").display(),
        ctx.out.join("sinogram.cmsar").display()
    );
    Ok(pass)
}

fn sinogram_as_grid(d: &cmsar::scene::Sinogram) -> cmsar::scene::ReflectivityGrid {
    let g = d.geom;
    let geom = cmsar::scene::GridGeometry {
        x1_min: g.s_min,
        x1_max: g.s_max,
        x2_min: g.t_min,
        x2_max: g.t_max,
        n1: g.ns,
        n2: g.nt,
    };
    cmsar::scene::ReflectivityGrid::from_values(geom, d.values().to_vec()).expect("same size")
}

/// For a single-point scene, every clean slow-time row must peak within
/// one travel-time sample of the point's bistatic range.
fn peak_time_self_test(
    spec: &SceneSpec,
    d: &cmsar::scene::Sinogram,
    acq: &cmsar::scene::AcquisitionConfig,
    bank: &CutoffBank,
) -> Result<bool> {
    if spec.points.len() != 1 || !spec.rects.is_empty() {
        println!("[SKIP] peak-time self-test: needs a single-point scene");
        return Ok(true);
    }
    let y0 = cmsar::geometry::GroundPoint::new(spec.points[0].x1, spec.points[0].x2);
    let sg = acq.sinogram;
    let mut checked = 0;
    let mut worst: f64 = 0.0;
    for i_s in 0..sg.ns {
        let s = sg.s(i_s);
        let expected = bistatic_range(SlowTime::new(s)?, acq.h, y0);
        if bank.f(s, expected) < 1.0 || bank.g(s, expected) < 1.0 {
            continue;
        }
        let row = &d.values()[i_s * sg.nt..(i_s + 1) * sg.nt];
        let (j_max, _) = row
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
            .expect("nonempty row");
        worst = worst.max((sg.t(j_max) - expected).abs() / sg.dt());
        checked += 1;
    }
    Ok(check_line(
        "peak-time self-test",
        checked > 0 && worst <= 1.001,
        &format!("{checked} clean rows, worst offset {worst:.3} samples"),
    ))
}
