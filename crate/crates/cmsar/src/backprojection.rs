//! Backprojection: the exact discrete adjoint of the forward operator,
//! the normal operator, and utilities for predicting and measuring the
//! mirror artifacts it produces.
//!
//! The adjoint is the literal transpose of the discrete forward map
//! under cell-measure-weighted inner products, not a separately
//! discretized integral: both directions visit the identical
//! (slow time, cell, travel-time sample) triples through the shared
//! window kernel. That makes the dot-product identity hold to rounding
//! and the normal operator symmetric positive semidefinite, so any
//! structure seen in reconstructions is the operator's, not a
//! discretization artifact.
//!
//! A point scatterer at (a, b) reconstructs together with mirror copies
//! at (a, -b), (-a, b) and (-a, -b): the bistatic range and the
//! spreading amplitude are invariant under both sign flips, so all four
//! locations integrate the data coherently over the entire aperture.

use crate::error::{Error, Result};
use crate::forward::{apply_forward, CutoffBank, WindowKernel};
use crate::geometry::GroundPoint;
use crate::scene::{AcquisitionConfig, ReflectivityGrid, Sinogram};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Applies the adjoint (backprojection) operator to one sinogram.
pub fn apply_adjoint(d: &Sinogram, cfg: &AcquisitionConfig) -> Result<ReflectivityGrid> {
    Ok(apply_adjoint_batch(std::slice::from_ref(d), cfg)?
        .pop()
        .expect("batch of one"))
}

/// Applies the adjoint to several sinograms over the same acquisition,
/// sharing the per-sample geometry across the batch.
///
/// Output image cells are partitioned across workers; every cell is a
/// pure gather over the shared sinograms, so the result is identical for
/// any worker count.
pub fn apply_adjoint_batch(ds: &[Sinogram], cfg: &AcquisitionConfig) -> Result<Vec<ReflectivityGrid>> {
    cfg.validate()?;
    for d in ds {
        cfg.check_sinogram(d)?;
    }
    let sg = cfg.sinogram;
    let scene = cfg.scene;
    let bank = CutoffBank::from_config(cfg);
    let kernel = WindowKernel::new(cfg);
    let m = ds.len();
    let measure = sg.ds() * sg.dt();

    // Pre-weight the data by the cutoffs and the (s, t) cell measure so
    // the gather below is the exact transpose of the forward scatter.
    let pre: Vec<Vec<f64>> = ds
        .iter()
        .map(|d| {
            let mut w = vec![0.0f64; sg.len()];
            for i_s in 0..sg.ns {
                let s = sg.s(i_s);
                for j in 0..sg.nt {
                    let fg = bank.f(s, sg.t(j)) * bank.g(s, sg.t(j));
                    w[i_s * sg.nt + j] = fg * measure * d.get(i_s, j);
                }
            }
            w
        })
        .collect();

    let cells: Vec<Vec<f64>> = (0..scene.len())
        .into_par_iter()
        .map(|k| {
            let x = scene.node(k / scene.n2, k % scene.n2);
            let mut acc = vec![0.0f64; m];
            for i_s in 0..sg.ns {
                let s = sg.s(i_s);
                let base = i_s * sg.nt;
                kernel.for_each(s, x, |j, w| {
                    for (a, p) in acc.iter_mut().zip(&pre) {
                        *a += w * p[base + j];
                    }
                });
            }
            acc
        })
        .collect();

    let mut out = Vec::with_capacity(m);
    for mm in 0..m {
        let mut img = ReflectivityGrid::zeros(scene)?;
        for (k, cell) in cells.iter().enumerate() {
            img.values_mut()[k] = cell[mm];
        }
        out.push(img);
    }
    Ok(out)
}

/// The normal operator: forward modeling followed by backprojection.
/// Symmetric and positive semidefinite as a discrete operator.
pub fn apply_normal(v: &ReflectivityGrid, cfg: &AcquisitionConfig) -> Result<ReflectivityGrid> {
    apply_adjoint(&apply_forward(v, cfg)?, cfg)
}

/// L2 inner product of two images, weighted by the cell area.
/// Accumulated with Neumaier compensation.
pub fn image_inner(a: &ReflectivityGrid, b: &ReflectivityGrid) -> Result<f64> {
    if a.geom != b.geom {
        return Err(Error::GeometryMismatch(
            "inner product of images on different grids".into(),
        ));
    }
    Ok(compensated_dot(a.values(), b.values()) * a.geom.cell_area())
}

/// L2 inner product of two sinograms, weighted by ds*dt.
pub fn sinogram_inner(a: &Sinogram, b: &Sinogram) -> Result<f64> {
    if a.geom != b.geom {
        return Err(Error::GeometryMismatch(
            "inner product of sinograms on different grids".into(),
        ));
    }
    Ok(compensated_dot(a.values(), b.values()) * a.geom.ds() * a.geom.dt())
}

fn compensated_dot(a: &[f64], b: &[f64]) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for (x, y) in a.iter().zip(b) {
        let term = x * y;
        let t = sum + term;
        if sum.abs() >= term.abs() {
            comp += (sum - t) + term;
        } else {
            comp += (term - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Reflection axis for [`reflect`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReflectAxis {
    /// x1 -> -x1
    X1,
    /// x2 -> -x2
    X2,
    /// both signs flipped
    Origin,
}

/// Sample-exact reflection of a grid whose extents are symmetric about
/// the flipped axes. An involution: applying it twice returns the input
/// bit for bit.
pub fn reflect(v: &ReflectivityGrid, axis: ReflectAxis) -> Result<ReflectivityGrid> {
    let g = v.geom;
    let flip1 = matches!(axis, ReflectAxis::X1 | ReflectAxis::Origin);
    let flip2 = matches!(axis, ReflectAxis::X2 | ReflectAxis::Origin);
    if flip1 && g.x1_min != -g.x1_max {
        return Err(Error::AsymmetricGrid { axis: "x1" });
    }
    if flip2 && g.x2_min != -g.x2_max {
        return Err(Error::AsymmetricGrid { axis: "x2" });
    }
    let mut out = ReflectivityGrid::zeros(g)?;
    for i1 in 0..g.n1 {
        let src1 = if flip1 { g.n1 - 1 - i1 } else { i1 };
        for i2 in 0..g.n2 {
            let src2 = if flip2 { g.n2 - 1 - i2 } else { i2 };
            out.set(i1, i2, v.get(src1, src2));
        }
    }
    Ok(out)
}

/// The three mirror images of a source point produced by the normal
/// operator: reflections about the x1 axis, the x2 axis, and the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArtifactPrediction {
    pub source: GroundPoint,
    pub chi1: GroundPoint,
    pub chi2: GroundPoint,
    pub chi3: GroundPoint,
}

impl ArtifactPrediction {
    /// All four locations, source first.
    pub fn all(&self) -> [GroundPoint; 4] {
        [self.source, self.chi1, self.chi2, self.chi3]
    }
}

/// Where backprojection will place the mirror artifacts of a scatterer.
pub fn predict_artifacts(x: GroundPoint) -> ArtifactPrediction {
    ArtifactPrediction {
        source: x,
        chi1: GroundPoint::new(x.x1, -x.x2),
        chi2: GroundPoint::new(-x.x1, x.x2),
        chi3: GroundPoint::new(-x.x1, -x.x2),
    }
}

/// A detected local maximum of |image|.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    /// Sub-cell location from a quadratic fit on the 3x3 neighborhood.
    pub location: GroundPoint,
    /// |image| at the grid node.
    pub magnitude: f64,
    pub index: (usize, usize),
}

/// Result of [`find_peaks`]: strict local maxima of |image| above
/// `threshold * max|image|`, strongest first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakReport {
    pub peaks: Vec<Peak>,
    pub radius: usize,
    pub threshold: f64,
}

/// Finds every strict local maximum of |image| within a square
/// neighborhood of `radius` cells that exceeds `threshold * max|image|`.
/// Locations are refined to sub-cell accuracy with a 2D quadratic fit;
/// the refinement offset is clamped to half a cell.
pub fn find_peaks(img: &ReflectivityGrid, radius: usize, threshold: f64) -> PeakReport {
    let g = img.geom;
    let radius = radius.max(1);
    let peak_floor = threshold * img.max_abs();
    let mut peaks = Vec::new();
    if peak_floor == 0.0 {
        return PeakReport {
            peaks,
            radius,
            threshold,
        };
    }
    let val = |i1: isize, i2: isize| -> f64 {
        if i1 < 0 || i2 < 0 || i1 >= g.n1 as isize || i2 >= g.n2 as isize {
            0.0
        } else {
            img.get(i1 as usize, i2 as usize).abs()
        }
    };
    for i1 in 0..g.n1 as isize {
        for i2 in 0..g.n2 as isize {
            let v = val(i1, i2);
            if v < peak_floor {
                continue;
            }
            let mut is_max = true;
            'scan: for d1 in -(radius as isize)..=radius as isize {
                for d2 in -(radius as isize)..=radius as isize {
                    if d1 == 0 && d2 == 0 {
                        continue;
                    }
                    if val(i1 + d1, i2 + d2) >= v {
                        is_max = false;
                        break 'scan;
                    }
                }
            }
            if !is_max {
                continue;
            }
            let (o1, o2) = quadratic_offset(
                [
                    [val(i1 - 1, i2 - 1), val(i1 - 1, i2), val(i1 - 1, i2 + 1)],
                    [val(i1, i2 - 1), v, val(i1, i2 + 1)],
                    [val(i1 + 1, i2 - 1), val(i1 + 1, i2), val(i1 + 1, i2 + 1)],
                ],
            );
            peaks.push(Peak {
                location: GroundPoint::new(
                    g.x1(i1 as usize) + o1 * g.dx1(),
                    g.x2(i2 as usize) + o2 * g.dx2(),
                ),
                magnitude: v,
                index: (i1 as usize, i2 as usize),
            });
        }
    }
    peaks.sort_by(|a, b| b.magnitude.partial_cmp(&a.magnitude).unwrap());
    PeakReport {
        peaks,
        radius,
        threshold,
    }
}

/// Sub-cell offset of the extremum of the quadratic fitted to a 3x3
/// neighborhood, clamped to [-1/2, 1/2] per axis.
fn quadratic_offset(n: [[f64; 3]; 3]) -> (f64, f64) {
    let g1 = (n[2][1] - n[0][1]) / 2.0;
    let g2 = (n[1][2] - n[1][0]) / 2.0;
    let h11 = n[2][1] - 2.0 * n[1][1] + n[0][1];
    let h22 = n[1][2] - 2.0 * n[1][1] + n[1][0];
    let h12 = (n[2][2] - n[2][0] - n[0][2] + n[0][0]) / 4.0;
    let det = h11 * h22 - h12 * h12;
    if det.abs() < 1e-300 {
        return (0.0, 0.0);
    }
    let o1 = -(h22 * g1 - h12 * g2) / det;
    let o2 = -(h11 * g2 - h12 * g1) / det;
    (o1.clamp(-0.5, 0.5), o2.clamp(-0.5, 0.5))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::test_config;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_grid(cfg: &AcquisitionConfig, rng: &mut impl Rng) -> ReflectivityGrid {
        let mut v = ReflectivityGrid::zeros(cfg.scene).unwrap();
        for x in v.values_mut() {
            *x = rng.gen_range(-1.0..1.0);
        }
        v
    }

    fn random_sino(cfg: &AcquisitionConfig, rng: &mut impl Rng) -> Sinogram {
        let mut d = Sinogram::zeros(cfg.sinogram).unwrap();
        for x in d.values_mut() {
            *x = rng.gen_range(-1.0..1.0);
        }
        d
    }

    #[test]
    fn adjoint_of_zero_is_zero() {
        let cfg = test_config();
        let d = Sinogram::zeros(cfg.sinogram).unwrap();
        let img = apply_adjoint(&d, &cfg).unwrap();
        assert!(img.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn dot_product_identity_holds_to_rounding() {
        let cfg = test_config();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let v = random_grid(&cfg, &mut rng);
            let d = random_sino(&cfg, &mut rng);
            let fv = apply_forward(&v, &cfg).unwrap();
            let fstar_d = apply_adjoint(&d, &cfg).unwrap();
            let lhs = sinogram_inner(&fv, &d).unwrap();
            let rhs = image_inner(&v, &fstar_d).unwrap();
            let norm_fv = sinogram_inner(&fv, &fv).unwrap().sqrt();
            let norm_d = sinogram_inner(&d, &d).unwrap().sqrt();
            let defect = (lhs - rhs).abs() / (norm_fv * norm_d);
            assert!(defect < 1e-12, "adjoint defect {defect}");
        }
    }

    #[test]
    fn impulse_backprojects_onto_its_isorange_ellipse() {
        let cfg = test_config();
        let mut d = Sinogram::zeros(cfg.sinogram).unwrap();
        let (i_s, j_t) = (6, 82); // t within the scene's reachable range band
        d.set(i_s, j_t, 1.0);
        let s0 = cfg.sinogram.s(i_s);
        let t0 = cfg.sinogram.t(j_t);
        let img = apply_adjoint(&d, &cfg).unwrap();
        let g = cfg.scene;
        let mut support = 0;
        for i1 in 0..g.n1 {
            for i2 in 0..g.n2 {
                let x = g.node(i1, i2);
                let r = crate::geometry::bistatic_range(
                    crate::geometry::SlowTime::new(s0).unwrap(),
                    cfg.h,
                    x,
                );
                if img.get(i1, i2) != 0.0 {
                    support += 1;
                    assert!(
                        (r - t0).abs() <= cfg.pulse.half_width + 1e-12,
                        "off-ellipse energy at {x:?}"
                    );
                }
            }
        }
        assert!(support > 0);
    }

    #[test]
    fn normal_operator_is_symmetric_and_psd() {
        let cfg = test_config();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..5 {
            let u = random_grid(&cfg, &mut rng);
            let v = random_grid(&cfg, &mut rng);
            let nu = apply_normal(&u, &cfg).unwrap();
            let nv = apply_normal(&v, &cfg).unwrap();
            let lhs = image_inner(&nu, &v).unwrap();
            let rhs = image_inner(&u, &nv).unwrap();
            let scale = image_inner(&nu, &nu).unwrap().sqrt() * image_inner(&v, &v).unwrap().sqrt();
            assert!((lhs - rhs).abs() <= 1e-12 * scale.max(1e-30));
            assert!(image_inner(&nu, &u).unwrap() >= -1e-15);
        }
    }

    #[test]
    fn normal_commutes_with_reflections() {
        let cfg = test_config();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let v = random_grid(&cfg, &mut rng);
        for axis in [ReflectAxis::X1, ReflectAxis::X2, ReflectAxis::Origin] {
            let lhs = apply_normal(&reflect(&v, axis).unwrap(), &cfg).unwrap();
            let rhs = reflect(&apply_normal(&v, &cfg).unwrap(), axis).unwrap();
            let scale = rhs.max_abs();
            for k in 0..lhs.values().len() {
                assert!((lhs.values()[k] - rhs.values()[k]).abs() <= 1e-10 * scale);
            }
        }
    }

    #[test]
    fn predict_artifacts_matches_sign_flips() {
        let p = predict_artifacts(GroundPoint::new(1.0, 2.0));
        assert_eq!(p.chi1, GroundPoint::new(1.0, -2.0));
        assert_eq!(p.chi2, GroundPoint::new(-1.0, 2.0));
        assert_eq!(p.chi3, GroundPoint::new(-1.0, -2.0));
        // chi3 = chi1 after chi2
        let via = predict_artifacts(p.chi2).chi1;
        assert_eq!(via, p.chi3);
        // on the x1 axis the chi1 image coincides with the source
        let q = predict_artifacts(GroundPoint::new(0.7, 0.0));
        assert_eq!(q.chi1, q.source);
    }

    #[test]
    fn reflect_is_an_involution_and_composes() {
        let cfg = test_config();
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let v = random_grid(&cfg, &mut rng);
        let twice = reflect(&reflect(&v, ReflectAxis::X1).unwrap(), ReflectAxis::X1).unwrap();
        assert_eq!(twice.values(), v.values());
        let comp = reflect(&reflect(&v, ReflectAxis::X1).unwrap(), ReflectAxis::X2).unwrap();
        let origin = reflect(&v, ReflectAxis::Origin).unwrap();
        assert_eq!(comp.values(), origin.values());
    }

    #[test]
    fn reflect_moves_a_delta_to_the_mirror_node() {
        let cfg = test_config();
        let mut v = ReflectivityGrid::zeros(cfg.scene).unwrap();
        v.set(12, 10, 1.0); // (0.5, 0.25)
        let r = reflect(&v, ReflectAxis::X1).unwrap();
        assert_eq!(r.get(4, 10), 1.0); // (-0.5, 0.25)
        assert_eq!(r.values().iter().filter(|&&x| x != 0.0).count(), 1);
    }

    #[test]
    fn reflect_rejects_asymmetric_extents() {
        let mut g = test_config().scene;
        g.x1_min = -0.5;
        let v = ReflectivityGrid::zeros(g).unwrap();
        assert!(matches!(
            reflect(&v, ReflectAxis::X1),
            Err(Error::AsymmetricGrid { axis: "x1" })
        ));
    }

    #[test]
    fn find_peaks_on_a_single_splat() {
        let cfg = test_config();
        let mut img = ReflectivityGrid::zeros(cfg.scene).unwrap();
        img.set(5, 11, -2.0); // peaks are maxima of |img|
        let report = find_peaks(&img, 2, 0.2);
        assert_eq!(report.peaks.len(), 1);
        assert_eq!(report.peaks[0].index, (5, 11));
        assert!((report.peaks[0].magnitude - 2.0).abs() < 1e-15);
        let loc = report.peaks[0].location;
        let node = cfg.scene.node(5, 11);
        assert!((loc.x1 - node.x1).abs() < 1e-12 && (loc.x2 - node.x2).abs() < 1e-12);
    }

    #[test]
    fn find_peaks_refines_off_node_maxima() {
        let cfg = test_config();
        let g = cfg.scene;
        let mut img = ReflectivityGrid::zeros(g).unwrap();
        // quadratic bump centered between nodes
        let c = GroundPoint::new(g.x1(8) + 0.3 * g.dx1(), g.x2(8) - 0.2 * g.dx2());
        for i1 in 0..g.n1 {
            for i2 in 0..g.n2 {
                let x = g.node(i1, i2);
                let d2 = (x.x1 - c.x1).powi(2) + (x.x2 - c.x2).powi(2);
                img.set(i1, i2, (1.0f64 - 20.0 * d2).max(0.0));
            }
        }
        let report = find_peaks(&img, 2, 0.5);
        assert_eq!(report.peaks.len(), 1);
        let loc = report.peaks[0].location;
        assert!((loc.x1 - c.x1).abs() < 0.2 * g.dx1());
        assert!((loc.x2 - c.x2).abs() < 0.2 * g.dx2());
    }

    #[test]
    fn find_peaks_of_zero_image_is_empty() {
        let cfg = test_config();
        let img = ReflectivityGrid::zeros(cfg.scene).unwrap();
        assert!(find_peaks(&img, 1, 0.2).peaks.is_empty());
    }
}
