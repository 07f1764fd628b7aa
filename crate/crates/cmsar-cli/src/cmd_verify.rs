//! `cmsar verify`: the numerical verification suites — the six
//! regularity identities, generator vanishing on the four Lagrangians,
//! the composition solver against the brute-force oracle, and the
//! near-midpoint cutoff constant.

use crate::oracle::composition_grid_search;
use crate::report::{check_line, f, Csv};
use crate::Ctx;
use anyhow::Result;
use cmsar::geometry::{GroundPoint, SlowTime};
use cmsar::identities::{
    canonical_covectors, cutoff_constant_check, generator_eval, verify_identity, Generator,
    KernelPhasePoint,
};
use cmsar::microlocal::solve_composition;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

pub fn run(ctx: &Ctx) -> Result<bool> {
    std::fs::create_dir_all(&ctx.out)?;
    let vc = &ctx.cfg.verify;
    let mut pass = true;

    // --- identity suite ---------------------------------------------
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.cfg.seed);
    let mut csv = Csv::new("identity,samples,max_residual,mean_residual,threshold,pass");
    let mut idents_ok = true;
    for index in 1..=6usize {
        let mut max_res = 0.0f64;
        let mut sum = 0.0f64;
        let mut n = 0usize;
        while n < vc.identity_samples {
            let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
            let p = KernelPhasePoint::new(
                GroundPoint::new(sign * rng.gen_range(0.2..3.0), rng.gen_range(-3.0..3.0)),
                GroundPoint::new(sign * rng.gen_range(0.2..3.0), rng.gen_range(-3.0..3.0)),
                SlowTime::new(rng.gen_range(0.3..3.0))?,
                rng.gen_range(0.5..3.0) * if rng.gen::<bool>() { 1.0 } else { -1.0 },
                rng.gen_range(0.3..2.0),
            );
            let r = verify_identity(index, &p);
            if !r.admissible {
                continue;
            }
            max_res = max_res.max(r.residual);
            sum += r.residual;
            n += 1;
        }
        let ok = max_res < vc.identity_threshold;
        idents_ok &= ok;
        csv.row(&[
            index.to_string(),
            n.to_string(),
            f(max_res),
            f(sum / n as f64),
            f(vc.identity_threshold),
            ok.to_string(),
        ]);
    }
    csv.write(&ctx.out.join("identity_residuals.csv"))?;
    pass &= check_line(
        "regularity identities",
        idents_ok,
        &format!("6 identities x {} admissible points", vc.identity_samples),
    );

    // --- generator vanishing -----------------------------------------
    let primary = [
        Generator::P1,
        Generator::P2,
        Generator::P3,
        Generator::P4,
        Generator::P5,
        Generator::P6,
    ];
    let secondary = [
        Generator::R1,
        Generator::R2,
        Generator::P2,
        Generator::P4,
        Generator::P5,
        Generator::P6,
    ];
    let mirrors: [(&str, fn(GroundPoint) -> GroundPoint, &[Generator]); 4] = [
        ("Delta", |x| x, &primary),
        ("C1", |x| GroundPoint::new(x.x1, -x.x2), &primary),
        ("C2", |x| GroundPoint::new(-x.x1, x.x2), &secondary),
        ("C3", |x| GroundPoint::new(-x.x1, -x.x2), &secondary),
    ];
    let mut csv = Csv::new("lagrangian,samples,max_abs,threshold,pass");
    let mut gens_ok = true;
    for (name, mirror, gens) in mirrors {
        let mut max_abs = 0.0f64;
        for _ in 0..vc.generator_samples {
            let x = GroundPoint::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
            let p = KernelPhasePoint::new(
                x,
                mirror(x),
                SlowTime::new(rng.gen_range(0.3..3.0))?,
                rng.gen_range(0.5..3.0) * if rng.gen::<bool>() { 1.0 } else { -1.0 },
                rng.gen_range(0.3..2.0),
            );
            let cov = canonical_covectors(&p);
            for g in gens {
                max_abs = max_abs.max(generator_eval(*g, &p, &cov).abs());
            }
        }
        let ok = max_abs < vc.generator_threshold;
        gens_ok &= ok;
        csv.row(&[
            name.to_string(),
            vc.generator_samples.to_string(),
            f(max_abs),
            f(vc.generator_threshold),
            ok.to_string(),
        ]);
    }
    csv.write(&ctx.out.join("generator_vanishing.csv"))?;
    pass &= check_line(
        "generator vanishing on the Lagrangians",
        gens_ok,
        &format!("4 graphs x {} points", vc.generator_samples),
    );

    // --- composition oracle ------------------------------------------
    let mut csv = Csv::new("instance,x1,x2,s,h,solutions,hits,extraneous,max_hit_distance,pass");
    let mut oracle_ok = true;
    for instance in 0..vc.oracle_instances {
        let sgn = |r: &mut ChaCha8Rng| if r.gen::<bool>() { 1.0 } else { -1.0 };
        let x = GroundPoint::new(
            sgn(&mut rng) * rng.gen_range(0.3..vc.oracle_extent - 1.0),
            sgn(&mut rng) * rng.gen_range(0.3..vc.oracle_extent - 1.0),
        );
        let s = SlowTime::new(rng.gen_range(0.5..2.5))?;
        let h = rng.gen_range(0.5..2.0);
        let sols = solve_composition(x, s, h)?;
        // the solution set is exactly the four sign combinations
        let flips_ok = sols.len() == 4
            && [(x.x1, x.x2), (x.x1, -x.x2), (-x.x1, x.x2), (-x.x1, -x.x2)]
                .iter()
                .all(|&(a, b)| sols.iter().any(|g| g.x1 == a && g.x2 == b));
        let outcome = composition_grid_search(x, s, h, vc.oracle_grid, vc.oracle_extent, &sols);
        let ok = flips_ok && outcome.extraneous == 0 && outcome.all_solutions_found;
        oracle_ok &= ok;
        csv.row(&[
            instance.to_string(),
            f(x.x1),
            f(x.x2),
            f(s.get()),
            f(h),
            sols.len().to_string(),
            outcome.hits.to_string(),
            outcome.extraneous.to_string(),
            f(outcome.max_hit_distance),
            ok.to_string(),
        ]);
    }
    csv.write(&ctx.out.join("composition_oracle.csv"))?;
    pass &= check_line(
        "composition solver vs brute-force grid",
        oracle_ok,
        &format!(
            "{} instances on a {}^2 grid",
            vc.oracle_instances, vc.oracle_grid
        ),
    );

    // --- cutoff constant ----------------------------------------------
    let mut max_through = 0.0f64;
    let mut max_ratio = 0.0f64;
    let mut band_ok = true;
    for _ in 0..vc.cutoff_samples {
        let r = cutoff_constant_check(
            SlowTime::new(rng.gen_range(0.1..5.0))?,
            rng.gen_range(0.1..5.0),
            rng.gen_range(0.01..0.3),
        );
        max_through = max_through.max(r.through_three_eps_residual);
        max_ratio = max_ratio.max(r.margin_ratio);
        band_ok &= r.band_contains_margin;
    }
    let cutoff_ok = max_through < 1e-12 && max_ratio < 18.0 && band_ok;
    let mut csv = Csv::new("samples,max_through_residual,max_margin_ratio,all_below_18,band_always_contains,pass");
    csv.row(&[
        vc.cutoff_samples.to_string(),
        f(max_through),
        f(max_ratio),
        (max_ratio < 18.0).to_string(),
        band_ok.to_string(),
        cutoff_ok.to_string(),
    ]);
    csv.write(&ctx.out.join("cutoff_constant.csv"))?;
    pass &= check_line(
        "near-midpoint cutoff constant",
        cutoff_ok,
        &format!("max margin ratio {max_ratio:.4} < 18 < 20"),
    );

    Ok(pass)
}
