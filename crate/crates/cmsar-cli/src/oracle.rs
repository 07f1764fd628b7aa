//! Brute-force oracle for the composition solver: an exhaustive grid
//! search for scene points sharing both the bistatic range and the range
//! rate of a reference point. Kept deliberately independent of the
//! closed-form solver it checks.

use cmsar::geometry::{bistatic_range, range_s_derivative, GroundPoint, SlowTime};
use rayon::prelude::*;

#[derive(Debug, Clone)]
pub struct OracleOutcome {
    /// Grid points passing both residual tests.
    pub hits: usize,
    /// Hits farther than the match radius from every expected solution.
    pub extraneous: usize,
    /// Largest distance from a hit to the expected solution set.
    pub max_hit_distance: f64,
    /// True when every expected solution attracted at least one hit.
    pub all_solutions_found: bool,
}

/// Scans `grid x grid` points over `[-extent, extent]^2` and compares the
/// hit set against `expected`. Residual tolerances scale with the grid
/// pitch through the Lipschitz bounds of the two residual functions
/// (|grad R| <= 2 and |grad dR/ds| <= 4 / h on the ground plane).
pub fn composition_grid_search(
    x: GroundPoint,
    s: SlowTime,
    h: f64,
    grid: usize,
    extent: f64,
    expected: &[GroundPoint],
) -> OracleOutcome {
    let pitch = 2.0 * extent / (grid - 1) as f64;
    let half_diag = pitch * std::f64::consts::FRAC_1_SQRT_2;
    let tol_r = 2.0 * half_diag * 1.5;
    let tol_d = (4.0 / h) * half_diag * 1.5;
    let r0 = bistatic_range(s, h, x);
    let d0 = range_s_derivative(s, h, x);
    let match_radius = 12.0 * pitch;

    let rows: Vec<(usize, usize, f64)> = (0..grid)
        .into_par_iter()
        .flat_map_iter(|i| {
            let y1 = -extent + i as f64 * pitch;
            (0..grid).filter_map(move |j| {
                let y = GroundPoint::new(y1, -extent + j as f64 * pitch);
                let res_r = (bistatic_range(s, h, y) - r0).abs();
                if res_r >= tol_r {
                    return None;
                }
                let res_d = (range_s_derivative(s, h, y) - d0).abs();
                if res_d >= tol_d {
                    return None;
                }
                let dist = expected
                    .iter()
                    .map(|g| (g.x1 - y.x1).hypot(g.x2 - y.x2))
                    .fold(f64::INFINITY, f64::min);
                Some((i, j, dist))
            })
        })
        .collect();

    let hits = rows.len();
    let extraneous = rows.iter().filter(|(_, _, d)| *d > match_radius).count();
    let max_hit_distance = rows.iter().map(|(_, _, d)| *d).fold(0.0f64, f64::max);
    let all_solutions_found = expected.iter().all(|g| {
        rows.iter().any(|&(i, j, _)| {
            let y1 = -extent + i as f64 * pitch;
            let y2 = -extent + j as f64 * pitch;
            (g.x1 - y1).hypot(g.x2 - y2) <= 2.0 * pitch
        })
    });
    OracleOutcome {
        hits,
        extraneous,
        max_hit_distance,
        all_solutions_found,
    }
}
