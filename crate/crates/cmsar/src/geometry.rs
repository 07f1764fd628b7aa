//! Ground-plane geometry of the common-midpoint acquisition.
//!
//! The transmitter and receiver fly at height `h` along the x1 axis,
//! at `(s, 0, h)` and `(-s, 0, h)`, moving apart from the shared midpoint
//! `(0, 0, h)`. Scatterers live on the ground plane x3 = 0. Everything in
//! this module is a pure function of that geometry: the two propagation
//! legs, the bistatic range and its slow-time derivative, the travel-time
//! phase, the prolate spheroidal chart adapted to the two antenna
//! positions, and the isorange ellipses cut out on the ground.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Default rejection radius around the common midpoint, in grid units.
pub const MIDPOINT_TOL: f64 = 1e-9;

/// Default tolerance on the ground-plane (x3 = 0) constraint when
/// converting prolate coordinates back to Cartesian.
pub const GROUND_PLANE_TOL: f64 = 1e-9;

/// A point on the ground plane (x3 = 0 implicit).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundPoint {
    pub x1: f64,
    pub x2: f64,
}

impl GroundPoint {
    pub fn new(x1: f64, x2: f64) -> Self {
        Self { x1, x2 }
    }

    /// Euclidean distance from the origin (the common midpoint's ground
    /// projection).
    pub fn norm(&self) -> f64 {
        self.x1.hypot(self.x2)
    }
}

/// Slow time: half the transmitter/receiver separation. Strictly positive.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct SlowTime(f64);

impl SlowTime {
    pub fn new(s: f64) -> Result<Self> {
        if s > 0.0 && s.is_finite() {
            Ok(Self(s))
        } else {
            Err(Error::NonPositiveSlowTime(s))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

/// Prolate spheroidal coordinates adapted to the foci at the antenna
/// positions: rho >= 0 radial, phi in [0, pi] angular, theta in [0, 2*pi)
/// azimuthal about the flight axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProlateCoords {
    pub rho: f64,
    pub phi: f64,
    pub theta: f64,
}

/// An isorange locus {R(s, .) = t} on the ground plane, in closed form.
///
/// In the plane it satisfies
/// `(4 t^2 - 16 s^2) x1^2 + 4 t^2 x2^2 = t^4 - 4 t^2 (s^2 + h^2)`,
/// an ellipse whose major axis always lies along x1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsorangeEllipse {
    pub s: f64,
    pub t: f64,
    pub h: f64,
    pub semi_axis_x1: f64,
    pub semi_axis_x2: f64,
}

impl IsorangeEllipse {
    /// Point on the ellipse at parameter angle `u`.
    pub fn point_at(&self, u: f64) -> GroundPoint {
        GroundPoint::new(self.semi_axis_x1 * u.cos(), self.semi_axis_x2 * u.sin())
    }
}

/// The two propagation legs: |x - (s,0,h)| and |x - (-s,0,h)|.
#[inline]
pub fn bistatic_legs(s: SlowTime, h: f64, x: GroundPoint) -> (f64, f64) {
    let s = s.get();
    let a = ((x.x1 - s) * (x.x1 - s) + x.x2 * x.x2 + h * h).sqrt();
    let b = ((x.x1 + s) * (x.x1 + s) + x.x2 * x.x2 + h * h).sqrt();
    (a, b)
}

/// Bistatic range: transmitter-to-scatterer plus scatterer-to-receiver
/// distance. Always >= 2*sqrt(s^2 + h^2), with equality only at the
/// midpoint x = (0, 0).
#[inline]
pub fn bistatic_range(s: SlowTime, h: f64, x: GroundPoint) -> f64 {
    let (a, b) = bistatic_legs(s, h, x);
    a + b
}

/// Slow-time derivative of the bistatic range at fixed x. Level sets of
/// this quantity are the iso-Doppler curves.
#[inline]
pub fn range_s_derivative(s: SlowTime, h: f64, x: GroundPoint) -> f64 {
    let (a, b) = bistatic_legs(s, h, x);
    let sv = s.get();
    -(x.x1 - sv) / a + (x.x1 + sv) / b
}

/// Travel-time phase `omega * (t - R(s, x))`. Homogeneous of degree one
/// in `omega`; vanishes exactly on the isorange ellipse of (s, t).
#[inline]
pub fn phase(s: SlowTime, t: f64, x: GroundPoint, omega: f64, h: f64) -> f64 {
    omega * (t - bistatic_range(s, h, x))
}

/// Convert a ground point to prolate coordinates with the default
/// midpoint rejection radius.
pub fn to_prolate(x: GroundPoint, s: SlowTime, h: f64) -> Result<ProlateCoords> {
    to_prolate_with_tol(x, s, h, MIDPOINT_TOL)
}

/// Convert a ground point to prolate coordinates.
///
/// The chart is
/// `x1 = s cosh(rho) cos(phi)`,
/// `x2 = s sinh(rho) sin(phi) cos(theta)`,
/// `0  = h + s sinh(rho) sin(phi) sin(theta)`,
/// inverted through the leg factorization `A = s (cosh rho - cos phi)`,
/// `B = s (cosh rho + cos phi)`, so `cosh rho = (A+B)/(2s)` and
/// `cos phi = (B-A)/(2s)`. The azimuth branch is fixed by the ground
/// plane: `sin theta = -h / (s sinh rho sin phi) <= 0`.
///
/// Points within `tol` of the common midpoint are rejected: the
/// acquisition cannot image a neighborhood of the midpoint and downstream
/// consumers exclude it.
pub fn to_prolate_with_tol(x: GroundPoint, s: SlowTime, h: f64, tol: f64) -> Result<ProlateCoords> {
    if x.norm() < tol {
        return Err(Error::DegenerateMidpoint {
            x1: x.x1,
            x2: x.x2,
            tol,
        });
    }
    let (a, b) = bistatic_legs(s, h, x);
    let sv = s.get();
    let cosh_rho = (a + b) / (2.0 * sv);
    let cos_phi = (b - a) / (2.0 * sv);
    let rho = cosh_rho.acosh();
    let phi = cos_phi.clamp(-1.0, 1.0).acos();
    // s sinh(rho) sin(phi) = sqrt(x2^2 + h^2) > 0, so theta is well defined.
    let theta = (-h).atan2(x.x2).rem_euclid(std::f64::consts::TAU);
    Ok(ProlateCoords { rho, phi, theta })
}

/// Convert prolate coordinates back to a ground point, using the default
/// ground-plane tolerance.
pub fn from_prolate(p: ProlateCoords, s: SlowTime, h: f64) -> Result<GroundPoint> {
    from_prolate_with_tol(p, s, h, GROUND_PLANE_TOL)
}

/// Convert prolate coordinates back to a ground point.
///
/// Signals an inconsistency when the triple does not satisfy the
/// ground-plane constraint `h + s sinh(rho) sin(phi) sin(theta) = 0`
/// within `tol` (relative to h).
pub fn from_prolate_with_tol(p: ProlateCoords, s: SlowTime, h: f64, tol: f64) -> Result<GroundPoint> {
    let sv = s.get();
    let m = sv * p.rho.sinh() * p.phi.sin();
    let x3 = h + m * p.theta.sin();
    if x3.abs() > tol * h.max(1.0) {
        return Err(Error::ProlateInconsistent {
            residual: x3.abs(),
            tol: tol * h.max(1.0),
        });
    }
    Ok(GroundPoint::new(
        sv * p.rho.cosh() * p.phi.cos(),
        m * p.theta.cos(),
    ))
}

/// Closed-form isorange ellipse for travel time `t` at slow time `s`.
///
/// Rejects `t <= 2 sqrt(s^2 + h^2)`, where the locus is empty or a point.
pub fn isorange_ellipse(s: SlowTime, t: f64, h: f64) -> Result<IsorangeEllipse> {
    let sv = s.get();
    let t_min = 2.0 * (sv * sv + h * h).sqrt();
    if !(t > t_min) {
        return Err(Error::DegenerateEllipse { t, t_min });
    }
    let t2 = t * t;
    let semi_axis_x1 = (t2 * (t2 - 4.0 * (sv * sv + h * h)) / (4.0 * (t2 - 4.0 * sv * sv))).sqrt();
    let semi_axis_x2 = ((t2 - 4.0 * (sv * sv + h * h)) / 4.0).sqrt();
    Ok(IsorangeEllipse {
        s: sv,
        t,
        h,
        semi_axis_x1,
        semi_axis_x2,
    })
}

/// Left side of the exact factorization `(AB)^2 - (x1^2+x2^2+h^2-s^2)^2
/// = 4 s^2 (x2^2 + h^2)`, returned as a residual relative to the largest
/// term involved. This identity is what keeps the canonical-relation
/// determinant factor strictly positive.
pub fn leg_product_identity_residual(s: SlowTime, h: f64, x: GroundPoint) -> f64 {
    let (a, b) = bistatic_legs(s, h, x);
    let sv = s.get();
    let ab2 = (a * b) * (a * b);
    let p = x.x1 * x.x1 + x.x2 * x.x2 + h * h - sv * sv;
    let lhs = ab2 - p * p;
    let rhs = 4.0 * sv * sv * (x.x2 * x.x2 + h * h);
    (lhs - rhs).abs() / ab2.max(p * p).max(1.0)
}
