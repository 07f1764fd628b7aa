//! Numerical verification of the regularity identities behind the
//! artifact analysis.
//!
//! The kernel of the normal operator oscillates with the phase
//! `Phi = omega * (|y legs| - |x legs|)`. Eight polynomial generators cut
//! out the Lagrangian pairs carrying its wavefront set; each of the six
//! primary generators can be rewritten as a smooth combination of the
//! phase derivatives `d_s Phi` and `d_omega Phi`, which is the analytic
//! engine behind the artifact-strength statement. This module evaluates
//! those combinations explicitly and reports residuals.
//!
//! The first identity uses the explicit Cartesian coefficient closed
//! form; the remaining five are assembled through the prolate-coordinate
//! derivation chain (the difference-of-cosines solve and the two-fraction
//! difference splitting). Both routes reduce lhs - rhs to rounding noise
//! on the admissible region, where x1 and y1 share a sign and the
//! denominators stay away from zero.

use crate::geometry::{bistatic_legs, GroundPoint, SlowTime};
use serde::{Deserialize, Serialize};

/// A point of the composed-kernel phase space: scene points x and y, the
/// slow time, frequency and height, with the four propagation legs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelPhasePoint {
    pub x: GroundPoint,
    pub y: GroundPoint,
    pub s: SlowTime,
    pub omega: f64,
    pub h: f64,
}

impl KernelPhasePoint {
    pub fn new(x: GroundPoint, y: GroundPoint, s: SlowTime, omega: f64, h: f64) -> Self {
        Self { x, y, s, omega, h }
    }

    /// Transmitter and receiver legs of x.
    #[inline]
    pub fn x_legs(&self) -> (f64, f64) {
        bistatic_legs(self.s, self.h, self.x)
    }

    /// Transmitter and receiver legs of y.
    #[inline]
    pub fn y_legs(&self) -> (f64, f64) {
        bistatic_legs(self.s, self.h, self.y)
    }
}

/// The phase and its two parameter derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseDerivs {
    pub phi: f64,
    pub d_s: f64,
    pub d_omega: f64,
}

/// `Phi = omega (Y1 + Y2 - X1 - X2)` and its analytic s- and
/// omega-derivatives.
pub fn kernel_phase_derivs(p: &KernelPhasePoint) -> PhaseDerivs {
    let (x1l, x2l) = p.x_legs();
    let (y1l, y2l) = p.y_legs();
    let sv = p.s.get();
    let d_omega = (y1l + y2l) - (x1l + x2l);
    let d_s = p.omega
        * ((-(p.y.x1 - sv) / y1l + (p.y.x1 + sv) / y2l)
            - (-(p.x.x1 - sv) / x1l + (p.x.x1 + sv) / x2l));
    PhaseDerivs {
        phi: p.omega * d_omega,
        d_s,
        d_omega,
    }
}

/// The canonical covectors of both scene copies at (s, omega).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseCovectors {
    pub xi1: f64,
    pub xi2: f64,
    pub eta1: f64,
    pub eta2: f64,
}

/// Covectors induced by the canonical parameterization on the x side
/// (xi) and the y side (eta) at the same (s, omega).
pub fn canonical_covectors(p: &KernelPhasePoint) -> PhaseCovectors {
    let (x1l, x2l) = p.x_legs();
    let (y1l, y2l) = p.y_legs();
    let sv = p.s.get();
    PhaseCovectors {
        xi1: -p.omega * ((p.x.x1 - sv) / x1l + (p.x.x1 + sv) / x2l),
        xi2: -p.omega * (p.x.x2 / x1l + p.x.x2 / x2l),
        eta1: -p.omega * ((p.y.x1 - sv) / y1l + (p.y.x1 + sv) / y2l),
        eta2: -p.omega * (p.y.x2 / y1l + p.y.x2 / y2l),
    }
}

/// The eight ideal generators. P1..P6 vanish on the diagonal and on the
/// x1-axis mirror graph; R1, R2 (with P2, P4, P5, P6) vanish on the two
/// x1-sign-flipping graphs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Generator {
    /// x1 - y1
    P1,
    /// x2^2 - y2^2
    P2,
    /// xi1 - eta1
    P3,
    /// (x2 + y2)(xi2 - eta2)
    P4,
    /// (x2 - y2)(xi2 + eta2)
    P5,
    /// xi2^2 - eta2^2
    P6,
    /// x1 + y1
    R1,
    /// xi1 + eta1
    R2,
}

/// Evaluates one generator at a kernel phase point with the given
/// covectors.
pub fn generator_eval(gen: Generator, p: &KernelPhasePoint, cov: &PhaseCovectors) -> f64 {
    match gen {
        Generator::P1 => p.x.x1 - p.y.x1,
        Generator::P2 => p.x.x2 * p.x.x2 - p.y.x2 * p.y.x2,
        Generator::P3 => cov.xi1 - cov.eta1,
        Generator::P4 => (p.x.x2 + p.y.x2) * (cov.xi2 - cov.eta2),
        Generator::P5 => (p.x.x2 - p.y.x2) * (cov.xi2 + cov.eta2),
        Generator::P6 => cov.xi2 * cov.xi2 - cov.eta2 * cov.eta2,
        Generator::R1 => p.x.x1 + p.y.x1,
        Generator::R2 => cov.xi1 + cov.eta1,
    }
}

/// Denominator floors delimiting the admissible region of the identity
/// coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityFloors {
    /// Lower bound on `cosh(rho) cosh(rho') - 1`.
    pub cosh_product: f64,
    /// Lower bound on `|cos(phi) + cos(phi')|`.
    pub cos_sum: f64,
}

impl Default for AdmissibilityFloors {
    fn default() -> Self {
        Self {
            cosh_product: 1e-3,
            cos_sum: 1e-3,
        }
    }
}

/// Residual of one identity at one point. `residual` is
/// `|lhs - rhs| / max(1, |lhs|)`. Inadmissible points are flagged and
/// carry NaN values instead of an evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityResidual {
    pub index: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub admissible: bool,
}

/// Prolate-coordinate data of the (x, y) pair at the shared slow time.
struct ProlatePair {
    /// cosh(rho), cos(phi) of x
    c: f64,
    u: f64,
    /// cosh(rho'), cos(phi') of y
    cp: f64,
    up: f64,
}

fn prolate_pair(p: &KernelPhasePoint) -> ProlatePair {
    let (x1l, x2l) = p.x_legs();
    let (y1l, y2l) = p.y_legs();
    let two_s = 2.0 * p.s.get();
    ProlatePair {
        c: (x1l + x2l) / two_s,
        u: (x2l - x1l) / two_s,
        cp: (y1l + y2l) / two_s,
        up: (y2l - y1l) / two_s,
    }
}

fn admissible(p: &KernelPhasePoint, pr: &ProlatePair, floors: &AdmissibilityFloors) -> bool {
    p.x.x1 * p.y.x1 > 0.0
        && pr.c * pr.cp - 1.0 > floors.cosh_product
        && (pr.u + pr.up).abs() > floors.cos_sum
}

/// Coefficients (f_i1, f_i2) of all six identities at one point.
///
/// Identity i rewrites its generator as
///   i = 1, 2:  f_i1 / omega * d_s Phi + f_i2 * d_omega Phi
///   i = 3..5:  f_i1 * d_s Phi + omega * f_i2 * d_omega Phi
///   i = 6:     omega * f_61 * d_s Phi + omega^2 * f_62 * d_omega Phi
/// with every f_ij a smooth function of (x, y, s) alone.
fn coefficients(p: &KernelPhasePoint, pr: &ProlatePair) -> [(f64, f64); 6] {
    let sv = p.s.get();
    let (c, u, cp, up) = (pr.c, pr.u, pr.cp, pr.up);
    let d_big = (cp * cp - up * up) * (c * c - u * u);
    let k_big = c * cp - u * u * up * up;
    let denom = 2.0 * (c * cp - 1.0) * (u + up);
    // cos(phi) - cos(phi') = (omega * alpha_w) / omega ... with
    //   u - u' = alpha_w / omega * d_s Phi + beta * d_omega Phi
    let alpha_w = d_big / (2.0 * c * (c * cp - 1.0) * (u + up));
    let beta = (k_big - u * u * (c * cp - 1.0)) / (2.0 * sv * c * (c * cp - 1.0) * (u + up));

    // identity 1 from the explicit Cartesian closed form
    let (x1l, x2l) = p.x_legs();
    let (y1l, y2l) = p.y_legs();
    let sx = (x1l + x2l) / 2.0;
    let sy = (y1l + y2l) / 2.0;
    let cart_denom = 2.0 * ((sy / sv) * (sx / sv) - 1.0) * (p.x.x1 / sx + p.y.x1 / sy);
    let f11 = sv * (y1l * y2l / (sv * sv)) * (x1l * x2l / (sv * sv)) / cart_denom;
    let f12 = (((sx / sv) * (sy / sv)
        - p.x.x1 * p.x.x1 * p.y.x1 * p.y.x1 / (sx * sx * sy * sy))
        - (p.x.x1 * p.x.x1 / (sx * sx)) * ((sy / sv) * (sx / sv) - 1.0))
        / cart_denom
        - p.y.x1 / (y1l + y2l);

    // identity 2 through the prolate chain
    let f21 = -sv * sv * (cp * cp - 1.0) * d_big / (2.0 * c * (c * cp - 1.0));
    let f22 = -sv * (c + cp) * (1.0 - u * u) / 2.0
        - sv * (cp * cp - 1.0) * (k_big - u * u * (c * cp - 1.0)) / (2.0 * c * (c * cp - 1.0));

    // identity 3: split the two-fraction difference at (cp, u)
    let g1 = (cp * cp - 1.0) * (cp * cp + u * up) / ((cp * cp - up * up) * (cp * cp - u * u));
    let g2 = (c + cp) * u * (1.0 - u * u) / ((cp * cp - u * u) * (c * c - u * u));
    let f31 = -2.0 * g1 * alpha_w;
    let f32 = -2.0 * g1 * beta + g2 / sv;

    // identities 4/5/6 share the lambda difference
    let lam = c / (c * c - u * u);
    let lamp = cp / (cp * cp - up * up);
    let q_big = c * cp + u * u;
    let (x2, y2) = (p.x.x2, p.y.x2);
    let pm = |m: f64| {
        (
            -(2.0 / sv) * (lamp * f21 + m * c * (u + up) * alpha_w / d_big),
            -(2.0 / sv) * (lamp * f22 + m * (q_big / (2.0 * sv) + c * (u + up) * beta) / d_big),
        )
    };
    let (f41, f42) = pm(x2 * x2 + x2 * y2);
    let (f51, f52) = pm(x2 * x2 - x2 * y2);
    let f61 = (4.0 / (sv * sv))
        * (lamp * lamp * f21 + x2 * x2 * (lam + lamp) * c * (u + up) * alpha_w / d_big);
    let f62 = (4.0 / (sv * sv))
        * (lamp * lamp * f22
            + x2 * x2 * (lam + lamp) * (q_big / (2.0 * sv) + c * (u + up) * beta) / d_big);

    let _ = denom;
    [(f11, f12), (f21, f22), (f31, f32), (f41, f42), (f51, f52), (f61, f62)]
}

/// Verifies identity `index` (1..=6) at a kernel phase point with the
/// default admissibility floors.
pub fn verify_identity(index: usize, p: &KernelPhasePoint) -> IdentityResidual {
    verify_identity_with(index, p, &AdmissibilityFloors::default())
}

/// Verifies identity `index` (1..=6) at a kernel phase point.
///
/// Inadmissible points (mixed x1/y1 signs or denominators under the
/// floors) are flagged, not evaluated.
pub fn verify_identity_with(
    index: usize,
    p: &KernelPhasePoint,
    floors: &AdmissibilityFloors,
) -> IdentityResidual {
    assert!((1..=6).contains(&index), "identity index must be 1..=6");
    let pr = prolate_pair(p);
    if !admissible(p, &pr, floors) {
        return IdentityResidual {
            index,
            lhs: f64::NAN,
            rhs: f64::NAN,
            residual: f64::NAN,
            admissible: false,
        };
    }
    let derivs = kernel_phase_derivs(p);
    let cov = canonical_covectors(p);
    let gens = [
        Generator::P1,
        Generator::P2,
        Generator::P3,
        Generator::P4,
        Generator::P5,
        Generator::P6,
    ];
    let lhs = generator_eval(gens[index - 1], p, &cov);
    let (f1, f2) = coefficients(p, &pr)[index - 1];
    let w = p.omega;
    let rhs = match index {
        1 | 2 => f1 / w * derivs.d_s + f2 * derivs.d_omega,
        3 | 4 | 5 => f1 * derivs.d_s + w * f2 * derivs.d_omega,
        6 => w * f1 * derivs.d_s + w * w * f2 * derivs.d_omega,
        _ => unreachable!(),
    };
    IdentityResidual {
        index,
        lhs,
        rhs,
        residual: (lhs - rhs).abs() / lhs.abs().max(1.0),
        admissible: true,
    }
}

/// Verification report for the choice of the annihilated-band constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffConstantReport {
    pub s: f64,
    pub h: f64,
    pub epsilon: f64,
    /// Travel time with `t^2 = 4 (s^2 + h^2) + 36 eps^2`.
    pub t: f64,
    /// x2 semi-axis of that isorange ellipse; equals 3 eps.
    pub x2_semi_axis: f64,
    /// Relative defect of the ellipse actually passing through (0, 3 eps).
    pub through_three_eps_residual: f64,
    /// `t - 2 sqrt(s^2 + h^2)`.
    pub margin: f64,
    /// `margin * h / eps^2`; provably below 18.
    pub margin_ratio: f64,
    pub below_18: bool,
    /// Half-width of the annihilated band, `20 eps^2 / h`.
    pub g_band_half_width: f64,
    /// The band strictly contains the margin.
    pub band_contains_margin: bool,
}

/// Checks the geometry behind the near-midpoint band constant: the
/// isorange ellipse through (0, 3 eps) stays within `18 eps^2 / h` of
/// the minimum travel time, so a band of `20 eps^2 / h` strictly covers
/// it.
pub fn cutoff_constant_check(s: SlowTime, h: f64, epsilon: f64) -> CutoffConstantReport {
    let sv = s.get();
    let t = (4.0 * (sv * sv + h * h) + 36.0 * epsilon * epsilon).sqrt();
    let ellipse = crate::geometry::isorange_ellipse(s, t, h).expect("t exceeds the minimum range");
    let probe = GroundPoint::new(0.0, 3.0 * epsilon);
    let through = (crate::geometry::bistatic_range(s, h, probe) - t).abs() / t;
    let margin = t - 2.0 * (sv * sv + h * h).sqrt();
    let ratio = margin * h / (epsilon * epsilon);
    let band = 20.0 * epsilon * epsilon / h;
    CutoffConstantReport {
        s: sv,
        h,
        epsilon,
        t,
        x2_semi_axis: ellipse.semi_axis_x2,
        through_three_eps_residual: through,
        margin,
        margin_ratio: ratio,
        below_18: ratio < 18.0,
        g_band_half_width: band,
        band_contains_margin: band > margin,
    }
}
