//! `cmsar selftest`: a fast end-to-end smoke test at small sizes. No
//! files are read or written.

use crate::adjoint_check::max_adjoint_defect;
use crate::oracle::composition_grid_search;
use crate::report::check_line;
use crate::Ctx;
use anyhow::Result;
use cmsar::backprojection::{apply_normal, find_peaks, predict_artifacts};
use cmsar::forward::Pulse;
use cmsar::geometry::{from_prolate, to_prolate, GroundPoint, SlowTime};
use cmsar::identities::{cutoff_constant_check, verify_identity, KernelPhasePoint};
use cmsar::microlocal::{
    canonical_point, intersect_lagrangians, jacobian_left, jacobian_right, solve_composition,
    LagrangianGraph, LagrangianLabel, Verdict,
};
use cmsar::scene::{rasterize, AcquisitionConfig, GridGeometry, PointScatterer, SceneSpec, SinogramGeometry};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

fn small_acquisition() -> AcquisitionConfig {
    AcquisitionConfig {
        h: 1.0,
        epsilon: 0.05,
        pulse: Pulse::ricker(8.0),
        scene: GridGeometry {
            x1_min: -1.0,
            x1_max: 1.0,
            x2_min: -1.0,
            x2_max: 1.0,
            n1: 49,
            n2: 49,
        },
        sinogram: SinogramGeometry {
            s_min: 0.5,
            s_max: 2.0,
            t_min: 2.2,
            t_max: 5.5,
            ns: 48,
            nt: 360,
        },
        f_taper_fraction: 0.05,
        g_taper_width: None,
    }
}

pub fn run(ctx: &Ctx) -> Result<bool> {
    let mut pass = true;
    let acq = small_acquisition();
    acq.validate()?;

    // geometry roundtrip
    let s = SlowTime::new(1.2)?;
    let x = GroundPoint::new(0.8, -0.5);
    let back = from_prolate(to_prolate(x, s, 1.0)?, s, 1.0)?;
    pass &= check_line(
        "prolate chart roundtrip",
        (back.x1 - x.x1).abs() < 1e-12 && (back.x2 - x.x2).abs() < 1e-12,
        &format!("|error| = {:.2e}", (back.x1 - x.x1).hypot(back.x2 - x.x2)),
    );

    // adjoint exactness
    let defect = max_adjoint_defect(&acq, ctx.cfg.seed, 3)?;
    pass &= check_line(
        "adjoint dot-product test",
        defect < 1e-12,
        &format!("max relative defect {defect:.3e}"),
    );

    // artifact pipeline: one point, four peaks
    let source = GroundPoint::new(0.45, 0.3);
    let spec = SceneSpec {
        points: vec![PointScatterer {
            x1: source.x1,
            x2: source.x2,
            amplitude: 1.0,
        }],
        rects: vec![],
    };
    let v = rasterize(&spec, acq.scene)?;
    let img = apply_normal(&v, &acq)?;
    let report = find_peaks(&img, 3, 0.2);
    let pred = predict_artifacts(source);
    let g = acq.scene;
    let four = report.peaks.len() == 4
        && pred.all().iter().all(|p| {
            report.peaks.iter().any(|peak| {
                (peak.location.x1 - p.x1).abs() <= g.dx1() && (peak.location.x2 - p.x2).abs() <= g.dx2()
            })
        });
    pass &= check_line(
        "mirror artifact reconstruction",
        four,
        &format!("{} peaks above 20% of max", report.peaks.len()),
    );
    if report.peaks.len() == 4 {
        let true_mag = report
            .peaks
            .iter()
            .min_by(|a, b| {
                let da = (a.location.x1 - source.x1).hypot(a.location.x2 - source.x2);
                let db = (b.location.x1 - source.x1).hypot(b.location.x2 - source.x2);
                da.partial_cmp(&db).unwrap()
            })
            .unwrap()
            .magnitude;
        let chi1_mag = report
            .peaks
            .iter()
            .min_by(|a, b| {
                let da = (a.location.x1 - pred.chi1.x1).hypot(a.location.x2 - pred.chi1.x2);
                let db = (b.location.x1 - pred.chi1.x1).hypot(b.location.x2 - pred.chi1.x2);
                da.partial_cmp(&db).unwrap()
            })
            .unwrap()
            .magnitude;
        let ratios_ok = report
            .peaks
            .iter()
            .all(|p| p.magnitude / true_mag >= 0.5 && p.magnitude / true_mag <= 2.0);
        pass &= check_line(
            "artifact strength",
            ratios_ok && ((chi1_mag - true_mag).abs() <= 1e-10 * true_mag),
            &format!(
                "x1-axis mirror / true = {:.12}",
                chi1_mag / true_mag
            ),
        );
    }

    // classification spot checks
    let fold_pt = canonical_point(SlowTime::new(1.0)?, GroundPoint::new(2.0, 0.0), 1.0, 1.0)?;
    let off_pt = canonical_point(SlowTime::new(1.0)?, GroundPoint::new(1.0, 1.0), 1.0, 1.0)?;
    pass &= check_line(
        "fold/blowdown classification",
        jacobian_left(&fold_pt).verdict == Verdict::Fold
            && jacobian_right(&fold_pt).verdict == Verdict::Blowdown
            && jacobian_left(&off_pt).verdict == Verdict::FullRank,
        "critical-set and generic samples",
    );

    // composition solver vs small oracle
    let x0 = GroundPoint::new(0.9, 0.6);
    let s0 = SlowTime::new(1.1)?;
    let sols = solve_composition(x0, s0, 1.0)?;
    let outcome = composition_grid_search(x0, s0, 1.0, 301, 2.0, &sols);
    pass &= check_line(
        "composition oracle",
        sols.len() == 4 && outcome.extraneous == 0 && outcome.all_solutions_found,
        &format!("{} hits, {} extraneous", outcome.hits, outcome.extraneous),
    );

    // identities, quick pass
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.cfg.seed);
    let mut max_res = 0.0f64;
    let mut n = 0;
    while n < 100 {
        let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
        let p = KernelPhasePoint::new(
            GroundPoint::new(sign * rng.gen_range(0.2..3.0), rng.gen_range(-3.0..3.0)),
            GroundPoint::new(sign * rng.gen_range(0.2..3.0), rng.gen_range(-3.0..3.0)),
            SlowTime::new(rng.gen_range(0.3..3.0))?,
            rng.gen_range(0.5..3.0),
            rng.gen_range(0.3..2.0),
        );
        for index in 1..=6 {
            let r = verify_identity(index, &p);
            if r.admissible {
                max_res = max_res.max(r.residual);
            }
        }
        n += 1;
    }
    pass &= check_line(
        "regularity identities",
        max_res < 1e-8,
        &format!("max residual {max_res:.3e}"),
    );

    // cutoff constant, quick pass
    let r = cutoff_constant_check(SlowTime::new(1.0)?, 1.0, 0.1);
    pass &= check_line(
        "cutoff constant",
        r.below_18 && r.band_contains_margin && r.through_three_eps_residual < 1e-12,
        &format!("margin ratio {:.4}", r.margin_ratio),
    );

    // Lagrangian intersections
    let delta = LagrangianGraph::new(LagrangianLabel::Delta);
    let c1 = LagrangianGraph::new(LagrangianLabel::C1);
    let c3 = LagrangianGraph::new(LagrangianLabel::C3);
    let i1 = intersect_lagrangians(&delta, &c1)?;
    let i2 = intersect_lagrangians(&delta, &c3)?;
    pass &= check_line(
        "lagrangian intersections",
        i1.codim_in_lagrangian == 2 && !i1.empty && i2.empty,
        "diagonal against the two mirror graphs",
    );

    Ok(pass)
}
