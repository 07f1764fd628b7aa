//! Numerical canonical-relation engine.
//!
//! The forward operator propagates singularities along a canonical
//! relation C that is globally parameterized by (s, x1, x2, omega). This
//! module evaluates points of C, the 4x4 Jacobians of its two
//! projections (onto data phase space and scene phase space), the closed
//! form of their common determinant, and classifies the rank-drop
//! behavior on the critical set
//! `Sigma_1 = {x2 = 0}`, `Sigma_2 = {x1 = 0}`: the left projection folds
//! across Sigma while the right projection blows down along it. It also
//! solves the artifact composition system (equal range and equal range
//! rate) and intersects the four Lagrangian graphs that the normal
//! operator's wavefront set lives on.
//!
//! Matrix layout convention: rows are the projection components in the
//! order they are written — (s, t, sigma, tau) on the left, (x1, x2,
//! xi1, xi2) on the right — and columns are the parameterization
//! variables in the order (x1, x2, s, omega). With this layout the
//! matrix determinant equals MINUS the closed form below (swapping the
//! last two columns restores it); the `det` field of the diagnostics
//! always reports the closed form, and rank/kernel information is
//! unaffected by column order.

use crate::error::{Error, Result};
use crate::geometry::{bistatic_legs, to_prolate, GroundPoint, SlowTime, MIDPOINT_TOL};
use nalgebra::{Matrix4, SMatrix, Vector4};
use serde::{Deserialize, Serialize};

/// A point of the canonical relation in global coordinates, with the
/// induced covectors on both sides.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CanonicalPoint {
    pub s: SlowTime,
    pub x: GroundPoint,
    pub omega: f64,
    pub h: f64,
    /// Travel time A + B.
    pub t: f64,
    /// ds covector.
    pub sigma: f64,
    /// dt covector, always -omega.
    pub tau: f64,
    pub xi1: f64,
    pub xi2: f64,
}

/// Evaluates the canonical relation at (s, x, omega).
///
/// Rejects the common midpoint x = (0, 0): the scene covector vanishes
/// there and the acquisition cannot image a neighborhood of it.
pub fn canonical_point(s: SlowTime, x: GroundPoint, omega: f64, h: f64) -> Result<CanonicalPoint> {
    if x.norm() < MIDPOINT_TOL {
        return Err(Error::DegenerateMidpoint {
            x1: x.x1,
            x2: x.x2,
            tol: MIDPOINT_TOL,
        });
    }
    if omega == 0.0 || !omega.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "frequency omega must be nonzero and finite, got {omega}"
        )));
    }
    let (a, b) = bistatic_legs(s, h, x);
    let sv = s.get();
    let p = x.x1 - sv;
    let q = x.x1 + sv;
    Ok(CanonicalPoint {
        s,
        x,
        omega,
        h,
        t: a + b,
        sigma: -omega * (p / a - q / b),
        tau: -omega,
        xi1: -omega * (p / a + q / b),
        xi2: -omega * (x.x2 / a + x.x2 / b),
    })
}

/// Which projection of the canonical relation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProjectionSide {
    /// Onto data phase space (s, t, sigma, tau).
    Left,
    /// Onto scene phase space (x1, x2, xi1, xi2).
    Right,
}

/// Critical-set membership of a parameter point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SigmaSet {
    /// x2 = 0 away from the x2 axis.
    Sigma1,
    /// x1 = 0 away from the x1 axis.
    Sigma2,
    None,
}

/// Classification outcome at one point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    FullRank,
    Fold,
    Blowdown,
    /// Singular values or kernel angles fell inside the guard bands; the
    /// point is reported rather than force-classified.
    Unclassified,
}

/// Numerical thresholds for the rank/kernel classification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifierConfig {
    /// Singular values below `rank_tol * sigma_max` count as zero.
    pub rank_tol: f64,
    /// Singular values between `rank_tol` and `band_tol` (relative)
    /// yield an Unclassified verdict instead of a rank decision.
    pub band_tol: f64,
    /// Coordinate tolerance for Sigma membership.
    pub sigma_coord_tol: f64,
    /// Sigma excludes a band around the other axis: |x1| (resp. |x2|)
    /// must exceed this. A quarter of the default midpoint exclusion
    /// radius.
    pub eps_prime: f64,
    /// Kernel/critical-set angular tolerance: the kernel is tangent when
    /// its normal component is below this, transversal otherwise.
    pub angular_tol: f64,
    /// The determinant's directional derivative across Sigma must exceed
    /// this fraction of its expected local scale.
    pub first_order_tol: f64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            rank_tol: 1e-8,
            band_tol: 1e-6,
            sigma_coord_tol: 1e-10,
            eps_prime: 0.0125,
            angular_tol: 1e-8,
            first_order_tol: 1e-6,
        }
    }
}

impl ClassifierConfig {
    /// Thresholds matched to an acquisition with midpoint exclusion
    /// radius `epsilon`.
    pub fn for_epsilon(epsilon: f64) -> Self {
        Self {
            eps_prime: epsilon / 4.0,
            ..Self::default()
        }
    }
}

/// Jacobian, determinant, rank and singularity verdict of one projection
/// at one canonical point.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionDiagnostics {
    pub which: ProjectionSide,
    /// Rows: projection components; columns: (x1, x2, s, omega).
    pub jacobian: Matrix4<f64>,
    /// The closed-form determinant
    /// `4 x1 x2 s omega / (A^2 B^2) * (1 + (x1^2 - s^2 + x2^2 + h^2)/(AB))`.
    pub det: f64,
    pub numerical_rank: usize,
    /// Unit kernel direction in (x1, x2, s, omega) coordinates when the
    /// rank is 3.
    pub kernel_dir: Option<Vector4<f64>>,
    pub on_sigma: SigmaSet,
    pub verdict: Verdict,
}

/// The closed-form determinant shared by both projections.
pub fn det_closed_form(s: SlowTime, x: GroundPoint, omega: f64, h: f64) -> f64 {
    let (a, b) = bistatic_legs(s, h, x);
    let sv = s.get();
    let n = 1.0 + (x.x1 * x.x1 - sv * sv + x.x2 * x.x2 + h * h) / (a * b);
    4.0 * x.x1 * x.x2 * sv * omega / (a * a * b * b) * n
}

/// Analytic gradient of the closed-form determinant with respect to
/// (x1, x2, s, omega).
pub fn det_closed_form_gradient(s: SlowTime, x: GroundPoint, omega: f64, h: f64) -> Vector4<f64> {
    let (a, b) = bistatic_legs(s, h, x);
    let sv = s.get();
    let (x1, x2) = (x.x1, x.x2);
    let p = x1 - sv;
    let q = x1 + sv;
    // partials of the legs
    let a_d = [p / a, x2 / a, -p / a, 0.0];
    let b_d = [q / b, x2 / b, q / b, 0.0];
    // big P = x1^2 + x2^2 + h^2 - s^2
    let big_p = x1 * x1 + x2 * x2 + h * h - sv * sv;
    let p_d = [2.0 * x1, 2.0 * x2, -2.0 * sv, 0.0];
    let a2b2 = a * a * b * b;
    let pi_factor = 4.0 * sv * omega * x1 * x2 / a2b2;
    // partials of s*x1*x2
    let sxx_d = [sv * x2, sv * x1, x1 * x2, 0.0];
    let n_val = 1.0 + big_p / (a * b);
    let mut grad = Vector4::zeros();
    for v in 0..3 {
        let pi_v =
            4.0 * omega * (sxx_d[v] / a2b2 - sv * x1 * x2 * 2.0 * (a_d[v] / a + b_d[v] / b) / a2b2);
        let n_v = p_d[v] / (a * b) - big_p * (a_d[v] * b + a * b_d[v]) / (a * b * a * b);
        grad[v] = pi_v * n_val + pi_factor * n_v;
    }
    grad[3] = pi_factor / omega * n_val;
    grad
}

/// The strictly positive factor `1 + (x1^2 - s^2 + x2^2 + h^2) / (AB)`.
/// Its positivity is equivalent to the exact polynomial identity checked
/// by [`crate::geometry::leg_product_identity_residual`], and it is what
/// confines the rank drop of both projections to Sigma.
pub fn nonvanishing_check(s: SlowTime, x: GroundPoint, h: f64) -> f64 {
    let (a, b) = bistatic_legs(s, h, x);
    let sv = s.get();
    1.0 + (x.x1 * x.x1 - sv * sv + x.x2 * x.x2 + h * h) / (a * b)
}

fn jacobian_matrix(p: &CanonicalPoint, side: ProjectionSide) -> Matrix4<f64> {
    let sv = p.s.get();
    let (a, b) = bistatic_legs(p.s, p.h, p.x);
    let (x1, x2, omega, h) = (p.x.x1, p.x.x2, p.omega, p.h);
    let pp = x1 - sv;
    let qq = x1 + sv;
    let w2 = x2 * x2 + h * h;
    let (a3, b3) = (a * a * a, b * b * b);
    match side {
        ProjectionSide::Left => Matrix4::new(
            // d s
            0.0,
            0.0,
            1.0,
            0.0,
            // d t
            pp / a + qq / b,
            x2 / a + x2 / b,
            -pp / a + qq / b,
            0.0,
            // d sigma
            -omega * (w2 / a3 - w2 / b3),
            omega * x2 * (pp / a3 - qq / b3),
            omega * w2 * (1.0 / a3 + 1.0 / b3),
            -(pp / a - qq / b),
            // d tau
            0.0,
            0.0,
            0.0,
            -1.0,
        ),
        ProjectionSide::Right => Matrix4::new(
            // d x1
            1.0,
            0.0,
            0.0,
            0.0,
            // d x2
            0.0,
            1.0,
            0.0,
            0.0,
            // d xi1
            -omega * (w2 / a3 + w2 / b3),
            omega * x2 * (pp / a3 + qq / b3),
            omega * w2 * (1.0 / a3 - 1.0 / b3),
            -(pp / a + qq / b),
            // d xi2
            omega * x2 * (pp / a3 + qq / b3),
            -omega * ((pp * pp + h * h) / a3 + (qq * qq + h * h) / b3),
            -omega * x2 * (pp / a3 - qq / b3),
            -x2 * (1.0 / a + 1.0 / b),
        ),
    }
}

fn sigma_membership(p: &CanonicalPoint, cfg: &ClassifierConfig) -> SigmaSet {
    if p.x.x2.abs() < cfg.sigma_coord_tol && p.x.x1.abs() > cfg.eps_prime {
        SigmaSet::Sigma1
    } else if p.x.x1.abs() < cfg.sigma_coord_tol && p.x.x2.abs() > cfg.eps_prime {
        SigmaSet::Sigma2
    } else {
        SigmaSet::None
    }
}

fn diagnose(p: &CanonicalPoint, side: ProjectionSide, cfg: &ClassifierConfig) -> ProjectionDiagnostics {
    let jac = jacobian_matrix(p, side);
    let det = det_closed_form(p.s, p.x, p.omega, p.h);
    let on_sigma = sigma_membership(p, cfg);

    let svd = jac.svd(false, true);
    let mut order: Vec<usize> = (0..4).collect();
    order.sort_by(|&i, &j| {
        svd.singular_values[j]
            .partial_cmp(&svd.singular_values[i])
            .unwrap()
    });
    let smax = svd.singular_values[order[0]].max(f64::MIN_POSITIVE);
    let rel: Vec<f64> = order
        .iter()
        .map(|&i| svd.singular_values[i] / smax)
        .collect();
    let in_band = rel
        .iter()
        .any(|&r| r >= cfg.rank_tol && r < cfg.band_tol);
    let numerical_rank = rel.iter().filter(|&&r| r >= cfg.rank_tol).count();

    let v_t = svd.v_t.as_ref().expect("svd with right vectors");
    let kernel_dir = if numerical_rank == 3 {
        Some(v_t.row(order[3]).transpose())
    } else {
        None
    };

    let verdict = if in_band {
        Verdict::Unclassified
    } else if numerical_rank == 4 {
        Verdict::FullRank
    } else if numerical_rank == 3 {
        match on_sigma {
            SigmaSet::None => Verdict::Unclassified,
            sigma => {
                let kernel = kernel_dir.as_ref().unwrap();
                // column index of the coordinate normal to Sigma
                let (normal_idx, other_abs) = match sigma {
                    SigmaSet::Sigma1 => (1usize, p.x.x1.abs()),
                    SigmaSet::Sigma2 => (0usize, p.x.x2.abs()),
                    SigmaSet::None => unreachable!(),
                };
                let normal_comp = kernel[normal_idx].abs() / kernel.norm();
                // first-order vanishing of det across Sigma, measured
                // against the expected local derivative scale
                let grad = det_closed_form_gradient(p.s, p.x, p.omega, p.h);
                let deriv = grad[normal_idx];
                let n_val = nonvanishing_check(p.s, p.x, p.h);
                let (leg_a, leg_b) = bistatic_legs(p.s, p.h, p.x);
                let scale = 4.0 * p.s.get() * p.omega.abs() * other_abs * n_val
                    / (leg_a * leg_a * leg_b * leg_b);
                let first_order = deriv.abs() > cfg.first_order_tol * scale;
                if !first_order {
                    Verdict::Unclassified
                } else if normal_comp <= cfg.angular_tol {
                    Verdict::Blowdown
                } else {
                    Verdict::Fold
                }
            }
        }
    } else {
        Verdict::Unclassified
    };

    ProjectionDiagnostics {
        which: side,
        jacobian: jac,
        det,
        numerical_rank,
        kernel_dir,
        on_sigma,
        verdict,
    }
}

/// Diagnostics of the projection onto data phase space.
pub fn jacobian_left(p: &CanonicalPoint) -> ProjectionDiagnostics {
    diagnose(p, ProjectionSide::Left, &ClassifierConfig::default())
}

/// Diagnostics of the projection onto scene phase space.
pub fn jacobian_right(p: &CanonicalPoint) -> ProjectionDiagnostics {
    diagnose(p, ProjectionSide::Right, &ClassifierConfig::default())
}

/// As [`jacobian_left`]/[`jacobian_right`] with explicit thresholds.
pub fn diagnose_projection(
    p: &CanonicalPoint,
    side: ProjectionSide,
    cfg: &ClassifierConfig,
) -> ProjectionDiagnostics {
    diagnose(p, side, cfg)
}

/// Solves the composition system at slow time s: all scene points y with
/// the same bistatic range and the same range rate as x.
///
/// In the prolate chart the system decouples into rho' = rho and
/// phi' in {phi, -phi, pi - phi, pi + phi} (a single azimuth branch
/// suffices), which on the ground plane are exactly the four sign
/// combinations {(+-x1, +-x2)}. Duplicates collapse when x lies on an
/// axis.
pub fn solve_composition(x: GroundPoint, s: SlowTime, h: f64) -> Result<Vec<GroundPoint>> {
    let pc = to_prolate(x, s, h)?;
    let sv = s.get();
    // Reconstruct the four branches through the chart; cos(theta') is
    // kept on the same branch as cos(theta) and sin(theta') adjusts to
    // stay on the ground plane.
    let (c, sh) = (pc.rho.cosh(), pc.rho.sinh());
    let (cos_phi, sin_phi) = (pc.phi.cos(), pc.phi.sin());
    let cos_theta = pc.theta.cos();
    let branches = [
        (cos_phi, sin_phi),
        (cos_phi, -sin_phi),
        (-cos_phi, sin_phi),
        (-cos_phi, -sin_phi),
    ];
    let flips = [
        (x.x1, x.x2),
        (x.x1, -x.x2),
        (-x.x1, x.x2),
        (-x.x1, -x.x2),
    ];
    let mut out: Vec<GroundPoint> = Vec::with_capacity(4);
    for ((cp, sp), (f1, f2)) in branches.iter().zip(flips) {
        let y1 = sv * c * cp;
        let y2 = sv * sh * sp * cos_theta;
        let scale = x.norm().max(1.0);
        debug_assert!((y1 - f1).abs() <= 1e-9 * scale && (y2 - f2).abs() <= 1e-9 * scale);
        let _ = (y1, y2);
        // report the exact sign flips (the chart reproduces them only to
        // rounding); +0.0 canonicalizes negative zero
        let snapped = GroundPoint::new(f1 + 0.0, f2 + 0.0);
        if !out
            .iter()
            .any(|g| g.x1.to_bits() == snapped.x1.to_bits() && g.x2.to_bits() == snapped.x2.to_bits())
        {
            out.push(snapped);
        }
    }
    Ok(out)
}

/// Labels of the four Lagrangian graphs carrying the normal operator's
/// wavefront set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LagrangianLabel {
    /// The diagonal: the true singularities.
    Delta,
    /// Graph of (x1, x2, xi1, xi2) -> (x1, -x2, xi1, -xi2).
    C1,
    /// Graph of (x1, x2, xi1, xi2) -> (-x1, x2, -xi1, xi2).
    C2,
    /// Graph of the reflection about the origin.
    C3,
}

/// A Lagrangian graph: the graph in phase space times phase space of a
/// componentwise sign flip. Each is the graph of an involution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LagrangianGraph {
    pub label: LagrangianLabel,
    /// Sign multipliers on (x1, x2, xi1, xi2).
    pub signs: [f64; 4],
}

impl LagrangianGraph {
    pub fn new(label: LagrangianLabel) -> Self {
        let signs = match label {
            LagrangianLabel::Delta => [1.0, 1.0, 1.0, 1.0],
            LagrangianLabel::C1 => [1.0, -1.0, 1.0, -1.0],
            LagrangianLabel::C2 => [-1.0, 1.0, -1.0, 1.0],
            LagrangianLabel::C3 => [-1.0, -1.0, -1.0, -1.0],
        };
        Self { label, signs }
    }

    /// The underlying phase-space map.
    pub fn apply(&self, v: [f64; 4]) -> [f64; 4] {
        [
            self.signs[0] * v[0],
            self.signs[1] * v[1],
            self.signs[2] * v[2],
            self.signs[3] * v[3],
        ]
    }

    /// 8x4 basis of the graph subspace in (x, xi, y, eta) coordinates.
    fn basis(&self) -> SMatrix<f64, 8, 4> {
        let mut m = SMatrix::<f64, 8, 4>::zeros();
        for i in 0..4 {
            m[(i, i)] = 1.0;
            m[(4 + i, i)] = self.signs[i];
        }
        m
    }
}

/// Phase-space coordinates that an intersection forces to zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ZeroCondition {
    X1,
    X2,
    Xi1,
    Xi2,
}

/// Result of intersecting two Lagrangian graphs inside the product phase
/// space.
#[derive(Debug, Clone, PartialEq)]
pub struct LagrangianIntersection {
    /// Dimension of the intersection as a linear subspace.
    pub dimension: usize,
    /// Codimension inside either (4-dimensional) Lagrangian.
    pub codim_in_lagrangian: usize,
    /// Coordinates (on the first copy; the second mirrors them through
    /// the graph) forced to vanish on the intersection.
    pub conditions: Vec<ZeroCondition>,
    /// True when the intersection carries no point with a nonzero scene
    /// covector, i.e. it is empty in punctured phase space.
    pub empty: bool,
}

/// Intersects two distinct Lagrangian graphs by linear algebra on their
/// 8-dimensional graph subspaces.
pub fn intersect_lagrangians(
    a: &LagrangianGraph,
    b: &LagrangianGraph,
) -> Result<LagrangianIntersection> {
    if a.label == b.label {
        return Err(Error::InvalidConfig(
            "lagrangian intersection expects distinct labels".into(),
        ));
    }
    // columns [Ba | -Bb]; nullspace vectors (alpha; beta) give common
    // points Ba * alpha
    let mut system = SMatrix::<f64, 8, 8>::zeros();
    system.fixed_view_mut::<8, 4>(0, 0).copy_from(&a.basis());
    system.fixed_view_mut::<8, 4>(0, 4).copy_from(&(-b.basis()));
    let svd = system.svd(false, true);
    let v_t = svd.v_t.as_ref().expect("svd with right vectors");
    let smax = svd
        .singular_values
        .iter()
        .cloned()
        .fold(0.0f64, f64::max)
        .max(1.0);
    let mut members: Vec<SMatrix<f64, 8, 1>> = Vec::new();
    for i in 0..8 {
        if svd.singular_values[i] < 1e-10 * smax {
            let alpha = v_t.row(i).transpose();
            let member = a.basis() * alpha.fixed_view::<4, 1>(0, 0).into_owned();
            members.push(member);
        }
    }
    let dimension = members.len();
    let mut conditions = Vec::new();
    for (coord, cond) in [
        (0usize, ZeroCondition::X1),
        (1, ZeroCondition::X2),
        (2, ZeroCondition::Xi1),
        (3, ZeroCondition::Xi2),
    ] {
        let reach = members
            .iter()
            .map(|m| m[(coord, 0)].abs())
            .fold(0.0f64, f64::max);
        if reach < 1e-9 {
            conditions.push(cond);
        }
    }
    let xi_dead = conditions.contains(&ZeroCondition::Xi1) && conditions.contains(&ZeroCondition::Xi2);
    Ok(LagrangianIntersection {
        dimension,
        codim_in_lagrangian: 4 - dimension,
        conditions,
        empty: dimension == 0 || xi_dead,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{leg_product_identity_residual, range_s_derivative, bistatic_range};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn st(s: f64) -> SlowTime {
        SlowTime::new(s).unwrap()
    }

    fn pil(v: [f64; 4], h: f64) -> [f64; 4] {
        let (x1, x2, s, w) = (v[0], v[1], v[2], v[3]);
        let a = ((x1 - s) * (x1 - s) + x2 * x2 + h * h).sqrt();
        let b = ((x1 + s) * (x1 + s) + x2 * x2 + h * h).sqrt();
        [s, a + b, -w * ((x1 - s) / a - (x1 + s) / b), -w]
    }

    fn pir(v: [f64; 4], h: f64) -> [f64; 4] {
        let (x1, x2, s, w) = (v[0], v[1], v[2], v[3]);
        let a = ((x1 - s) * (x1 - s) + x2 * x2 + h * h).sqrt();
        let b = ((x1 + s) * (x1 + s) + x2 * x2 + h * h).sqrt();
        [
            x1,
            x2,
            -w * ((x1 - s) / a + (x1 + s) / b),
            -w * (x2 / a + x2 / b),
        ]
    }

    /// Central-difference Jacobian in the same (x1, x2, s, omega) column
    /// order as the analytic matrices.
    fn fd_jacobian(f: impl Fn([f64; 4]) -> [f64; 4], v: [f64; 4]) -> Matrix4<f64> {
        let mut m = Matrix4::zeros();
        for col in 0..4 {
            let step = 1e-6 * v[col].abs().max(1.0);
            let mut vp = v;
            let mut vm = v;
            vp[col] += step;
            vm[col] -= step;
            let fp = f(vp);
            let fm = f(vm);
            for row in 0..4 {
                m[(row, col)] = (fp[row] - fm[row]) / (2.0 * step);
            }
        }
        m
    }

    #[test]
    fn canonical_point_reference_values() {
        let p = canonical_point(st(1.0), GroundPoint::new(1.0, 0.0), 1.0, 1.0).unwrap();
        let r5 = 5.0f64.sqrt();
        assert!((p.t - (1.0 + r5)).abs() < 1e-15);
        assert!((p.sigma - 2.0 / r5).abs() < 1e-15);
        assert_eq!(p.tau, -1.0);
        assert!((p.xi1 + 2.0 / r5).abs() < 1e-15);
        assert_eq!(p.xi2, 0.0);
    }

    #[test]
    fn covectors_scale_linearly_in_omega() {
        let x = GroundPoint::new(0.7, -1.3);
        let p1 = canonical_point(st(1.2), x, 1.0, 0.9).unwrap();
        let p3 = canonical_point(st(1.2), x, 3.0, 0.9).unwrap();
        assert_eq!(p1.t, p3.t);
        assert!((p3.sigma - 3.0 * p1.sigma).abs() < 1e-14);
        assert!((p3.tau - 3.0 * p1.tau).abs() < 1e-14);
        assert!((p3.xi1 - 3.0 * p1.xi1).abs() < 1e-14);
        assert!((p3.xi2 - 3.0 * p1.xi2).abs() < 1e-14);
    }

    #[test]
    fn canonical_point_rejects_midpoint_and_zero_frequency() {
        assert!(canonical_point(st(1.0), GroundPoint::new(0.0, 0.0), 1.0, 1.0).is_err());
        assert!(canonical_point(st(1.0), GroundPoint::new(1.0, 0.0), 0.0, 1.0).is_err());
    }

    #[test]
    fn four_to_one_relation_structure() {
        // flipping x1 fixes (s, t, sigma, tau) and flips xi1;
        // flipping x2 fixes them and flips xi2
        let s = st(1.3);
        let (w, h) = (1.7, 0.8);
        let base = canonical_point(s, GroundPoint::new(0.9, 0.6), w, h).unwrap();
        let m1 = canonical_point(s, GroundPoint::new(-0.9, 0.6), w, h).unwrap();
        let m2 = canonical_point(s, GroundPoint::new(0.9, -0.6), w, h).unwrap();
        assert!((m1.t - base.t).abs() < 1e-15);
        assert!((m1.sigma - base.sigma).abs() < 1e-15);
        assert!((m1.xi1 + base.xi1).abs() < 1e-15);
        assert!((m1.xi2 - base.xi2).abs() < 1e-15);
        assert!((m2.t - base.t).abs() < 1e-15);
        assert!((m2.sigma - base.sigma).abs() < 1e-15);
        assert!((m2.xi1 - base.xi1).abs() < 1e-15);
        assert!((m2.xi2 + base.xi2).abs() < 1e-15);
    }

    #[test]
    fn analytic_jacobians_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..200 {
            let h = rng.gen_range(0.5..2.0);
            let v = [
                rng.gen_range(0.2..2.0) * if rng.gen() { 1.0 } else { -1.0 },
                rng.gen_range(0.2..2.0) * if rng.gen() { 1.0 } else { -1.0 },
                rng.gen_range(0.5..2.5),
                rng.gen_range(0.5..2.5) * if rng.gen() { 1.0 } else { -1.0 },
            ];
            let p = canonical_point(st(v[2]), GroundPoint::new(v[0], v[1]), v[3], h).unwrap();
            for (side, f) in [
                (ProjectionSide::Left, pil as fn([f64; 4], f64) -> [f64; 4]),
                (ProjectionSide::Right, pir as fn([f64; 4], f64) -> [f64; 4]),
            ] {
                let analytic = jacobian_matrix(&p, side);
                let fd = fd_jacobian(|u| f(u, h), v);
                for r in 0..4 {
                    for c in 0..4 {
                        let scale = analytic[(r, c)].abs().max(1.0);
                        assert!(
                            (analytic[(r, c)] - fd[(r, c)]).abs() < 1e-7 * scale,
                            "{side:?} entry ({r},{c}): analytic {} vs fd {}",
                            analytic[(r, c)],
                            fd[(r, c)]
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn determinant_closed_form_reference_value() {
        let d = det_closed_form(st(1.0), GroundPoint::new(1.0, 1.0), 1.0, 1.0);
        let expected = (1.0 / 3.0) * (1.0 + 1.0 / 3.0f64.sqrt());
        assert!((d - expected).abs() < 1e-15);
        assert!((d - 0.525783).abs() < 1e-6);
    }

    #[test]
    fn matrix_determinants_agree_with_closed_form_up_to_orientation() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..500 {
            let h = rng.gen_range(0.5..2.0);
            let x = GroundPoint::new(
                rng.gen_range(0.05..2.0) * if rng.gen() { 1.0 } else { -1.0 },
                rng.gen_range(0.05..2.0) * if rng.gen() { 1.0 } else { -1.0 },
            );
            let s = st(rng.gen_range(0.5..2.5));
            let w = rng.gen_range(0.5..2.5) * if rng.gen() { 1.0 } else { -1.0 };
            let p = canonical_point(s, x, w, h).unwrap();
            let closed = det_closed_form(s, x, w, h);
            let det_l = jacobian_matrix(&p, ProjectionSide::Left).determinant();
            let det_r = jacobian_matrix(&p, ProjectionSide::Right).determinant();
            // both projections share the determinant, equal to the closed
            // form after the orientation swap of the last two columns
            assert!((det_l + closed).abs() < 1e-12 * closed.abs().max(1e-8));
            assert!((det_l - det_r).abs() < 1e-12 * det_l.abs().max(1e-8));
        }
    }

    #[test]
    fn determinant_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..200 {
            let h = rng.gen_range(0.5..2.0);
            let v = [
                rng.gen_range(0.1..2.0),
                rng.gen_range(0.1..2.0),
                rng.gen_range(0.5..2.5),
                rng.gen_range(0.5..2.5),
            ];
            let grad =
                det_closed_form_gradient(st(v[2]), GroundPoint::new(v[0], v[1]), v[3], h);
            for c in 0..4 {
                let step = 1e-6 * v[c].abs().max(1.0);
                let mut vp = v;
                let mut vm = v;
                vp[c] += step;
                vm[c] -= step;
                let fp = det_closed_form(st(vp[2]), GroundPoint::new(vp[0], vp[1]), vp[3], h);
                let fm = det_closed_form(st(vm[2]), GroundPoint::new(vm[0], vm[1]), vm[3], h);
                let fd = (fp - fm) / (2.0 * step);
                assert!(
                    (grad[c] - fd).abs() < 1e-6 * grad[c].abs().max(1.0),
                    "grad[{c}]: {} vs {}",
                    grad[c],
                    fd
                );
            }
        }
    }

    #[test]
    fn fold_verdict_on_sigma1_for_the_left_projection() {
        let p = canonical_point(st(1.0), GroundPoint::new(2.0, 0.0), 1.0, 1.0).unwrap();
        let d = jacobian_left(&p);
        assert_eq!(d.on_sigma, SigmaSet::Sigma1);
        assert_eq!(d.numerical_rank, 3);
        assert_eq!(d.verdict, Verdict::Fold);
        assert_eq!(d.det, 0.0);
        let k = d.kernel_dir.unwrap();
        // kernel is the x2 direction
        assert!(k[1].abs() > 1.0 - 1e-12);
        assert!(k[0].abs() < 1e-12 && k[2].abs() < 1e-12 && k[3].abs() < 1e-12);
    }

    #[test]
    fn blowdown_verdict_on_sigma1_for_the_right_projection() {
        let p = canonical_point(st(1.0), GroundPoint::new(2.0, 0.0), 1.0, 1.0).unwrap();
        let d = jacobian_right(&p);
        assert_eq!(d.numerical_rank, 3);
        assert_eq!(d.verdict, Verdict::Blowdown);
        let k = d.kernel_dir.unwrap();
        // kernel lies in the (s, omega) plane, tangent to Sigma1
        assert!(k[0].abs() < 1e-12 && k[1].abs() < 1e-12);
        assert!(k.norm() > 0.999);
    }

    #[test]
    fn sigma2_mirrors_the_classification() {
        let p = canonical_point(st(1.0), GroundPoint::new(0.0, 2.0), -1.5, 1.0).unwrap();
        let dl = jacobian_left(&p);
        let dr = jacobian_right(&p);
        assert_eq!(dl.on_sigma, SigmaSet::Sigma2);
        assert_eq!(dl.verdict, Verdict::Fold);
        let k = dl.kernel_dir.unwrap();
        assert!(k[0].abs() > 1.0 - 1e-12); // x1 direction
        assert_eq!(dr.verdict, Verdict::Blowdown);
        let kr = dr.kernel_dir.unwrap();
        assert!(kr[0].abs() < 1e-12 && kr[1].abs() < 1e-12);
    }

    #[test]
    fn off_sigma_points_are_full_rank() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        for _ in 0..500 {
            let x = GroundPoint::new(
                rng.gen_range(0.05..2.0) * if rng.gen() { 1.0 } else { -1.0 },
                rng.gen_range(0.05..2.0) * if rng.gen() { 1.0 } else { -1.0 },
            );
            let p = canonical_point(
                st(rng.gen_range(0.5..2.5)),
                x,
                rng.gen_range(0.5..2.5) * if rng.gen() { 1.0 } else { -1.0 },
                rng.gen_range(0.5..2.0),
            )
            .unwrap();
            assert_eq!(jacobian_left(&p).verdict, Verdict::FullRank);
            assert_eq!(jacobian_right(&p).verdict, Verdict::FullRank);
        }
    }

    #[test]
    fn nonvanishing_factor_reference_and_positivity() {
        assert!((nonvanishing_check(st(1.0), GroundPoint::new(0.0, 0.0), 1.0) - 1.0).abs() < 1e-15);
        assert!(leg_product_identity_residual(st(2.0), 1.0, GroundPoint::new(3.0, 1.0)) < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        let mut min_val = f64::INFINITY;
        for _ in 0..100_000 {
            let s = st(rng.gen_range(1e-6..10.0));
            let h = rng.gen_range(1e-6..5.0);
            let x = GroundPoint::new(rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0));
            let v = nonvanishing_check(s, x, h);
            min_val = min_val.min(v);
            assert!(leg_product_identity_residual(s, h, x) < 1e-10);
        }
        assert!(min_val > 0.0);
    }

    #[test]
    fn composition_solutions_are_the_sign_flips() {
        let sols = solve_composition(GroundPoint::new(1.0, 2.0), st(1.0), 1.0).unwrap();
        assert_eq!(sols.len(), 4);
        for flip in [(1.0, 2.0), (1.0, -2.0), (-1.0, 2.0), (-1.0, -2.0)] {
            assert!(sols.iter().any(|g| g.x1 == flip.0 && g.x2 == flip.1));
        }
        // solutions really solve the system
        for y in &sols {
            let dr = bistatic_range(st(1.0), 1.0, *y)
                - bistatic_range(st(1.0), 1.0, GroundPoint::new(1.0, 2.0));
            let dd = range_s_derivative(st(1.0), 1.0, *y)
                - range_s_derivative(st(1.0), 1.0, GroundPoint::new(1.0, 2.0));
            assert!(dr.abs() < 1e-12 && dd.abs() < 1e-12);
        }
    }

    #[test]
    fn composition_collapses_on_the_axes() {
        let sols = solve_composition(GroundPoint::new(0.0, 2.0), st(1.0), 1.0).unwrap();
        assert_eq!(sols.len(), 2);
        assert!(sols.contains(&GroundPoint::new(0.0, 2.0)));
        assert!(sols.contains(&GroundPoint::new(0.0, -2.0)));
        let sols = solve_composition(GroundPoint::new(1.5, 0.0), st(1.0), 1.0).unwrap();
        assert_eq!(sols.len(), 2);
    }

    #[test]
    fn composition_output_is_closed_under_the_reflection_group() {
        let mut rng = ChaCha8Rng::seed_from_u64(26);
        for _ in 0..100 {
            let x = GroundPoint::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
            if x.norm() < 0.05 {
                continue;
            }
            let s = st(rng.gen_range(0.3..3.0));
            let h = rng.gen_range(0.3..2.0);
            let sols = solve_composition(x, s, h).unwrap();
            for g in &sols {
                for flip in [
                    GroundPoint::new(g.x1, -g.x2 + 0.0),
                    GroundPoint::new(-g.x1 + 0.0, g.x2),
                    GroundPoint::new(-g.x1 + 0.0, -g.x2 + 0.0),
                ] {
                    assert!(sols
                        .iter()
                        .any(|s| s.x1 == flip.x1 + 0.0 && s.x2 == flip.x2 + 0.0));
                }
            }
        }
    }

    #[test]
    fn composition_agrees_with_a_coarse_grid_search() {
        // independent brute-force oracle on a 601^2 grid
        let x0 = GroundPoint::new(1.3, 0.8);
        let s = st(1.1);
        let h = 0.9;
        let r0 = bistatic_range(s, h, x0);
        let d0 = range_s_derivative(s, h, x0);
        let n = 601;
        let pitch = 6.0 / (n - 1) as f64;
        let tol = 3.0 * pitch;
        let sols = solve_composition(x0, s, h).unwrap();
        let mut hits = 0;
        for i in 0..n {
            for j in 0..n {
                let y = GroundPoint::new(-3.0 + i as f64 * pitch, -3.0 + j as f64 * pitch);
                let res_r = (bistatic_range(s, h, y) - r0).abs();
                let res_d = (range_s_derivative(s, h, y) - d0).abs();
                if res_r < tol && res_d < tol {
                    hits += 1;
                    let near = sols
                        .iter()
                        .map(|g| (g.x1 - y.x1).hypot(g.x2 - y.x2))
                        .fold(f64::INFINITY, f64::min);
                    assert!(near < 12.0 * pitch, "stray solution at {y:?}");
                }
            }
        }
        assert!(hits >= 4);
    }

    #[test]
    fn lagrangian_intersection_table() {
        let delta = LagrangianGraph::new(LagrangianLabel::Delta);
        let c1 = LagrangianGraph::new(LagrangianLabel::C1);
        let c2 = LagrangianGraph::new(LagrangianLabel::C2);
        let c3 = LagrangianGraph::new(LagrangianLabel::C3);

        let i = intersect_lagrangians(&delta, &c1).unwrap();
        assert_eq!(i.codim_in_lagrangian, 2);
        assert!(!i.empty);
        assert_eq!(i.conditions, vec![ZeroCondition::X2, ZeroCondition::Xi2]);

        let i = intersect_lagrangians(&delta, &c2).unwrap();
        assert_eq!(i.codim_in_lagrangian, 2);
        assert_eq!(i.conditions, vec![ZeroCondition::X1, ZeroCondition::Xi1]);

        let i = intersect_lagrangians(&c1, &c3).unwrap();
        assert_eq!(i.codim_in_lagrangian, 2);
        assert_eq!(i.conditions, vec![ZeroCondition::X1, ZeroCondition::Xi1]);

        let i = intersect_lagrangians(&c2, &c3).unwrap();
        assert_eq!(i.codim_in_lagrangian, 2);
        assert_eq!(i.conditions, vec![ZeroCondition::X2, ZeroCondition::Xi2]);

        assert!(intersect_lagrangians(&delta, &c3).unwrap().empty);
        assert!(intersect_lagrangians(&c1, &c2).unwrap().empty);

        assert!(intersect_lagrangians(&delta, &delta).is_err());
    }

    #[test]
    fn lagrangian_graphs_are_involutions_and_compose() {
        let c1 = LagrangianGraph::new(LagrangianLabel::C1);
        let c2 = LagrangianGraph::new(LagrangianLabel::C2);
        let c3 = LagrangianGraph::new(LagrangianLabel::C3);
        let v = [0.3, -1.2, 2.0, 0.7];
        assert_eq!(c1.apply(c1.apply(v)), v);
        assert_eq!(c1.apply(c2.apply(v)), c3.apply(v));
    }
}
