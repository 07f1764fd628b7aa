//! Scene and data containers: reflectivity grids, sinograms, scene
//! specs, acquisition configuration, and their persistence.
//!
//! Grids are node-sampled: `n` samples span the closed interval
//! `[min, max]` with spacing `(max - min) / (n - 1)`, stored row-major
//! (x1 rows for images, s rows for sinograms). Containers are immutable
//! in spirit: operators build a fresh container rather than mutating
//! shared state.
//!
//! On disk the binary containers use the `CMSAR1` format: a magic line,
//! one ASCII header line (kind, extents, counts, endianness tag), then
//! raw little-endian IEEE-754 doubles. Headers print floats with Rust's
//! shortest-roundtrip formatting, so save/load is bit-exact.

use crate::error::{Error, Result};
use crate::forward::Pulse;
use crate::geometry::GroundPoint;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;

const MAGIC: &str = "CMSAR1";

/// Node-sampled rectangular grid geometry on the ground plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridGeometry {
    pub x1_min: f64,
    pub x1_max: f64,
    pub x2_min: f64,
    pub x2_max: f64,
    pub n1: usize,
    pub n2: usize,
}

impl GridGeometry {
    pub fn validate(&self) -> Result<()> {
        if !(self.x1_min < self.x1_max && self.x2_min < self.x2_max) {
            return Err(Error::InvalidConfig(format!(
                "grid extents must be strictly ordered: [{}, {}] x [{}, {}]",
                self.x1_min, self.x1_max, self.x2_min, self.x2_max
            )));
        }
        if self.n1 < 2 || self.n2 < 2 {
            return Err(Error::InvalidConfig(format!(
                "grid needs at least 2 samples per axis, got {}x{}",
                self.n1, self.n2
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn dx1(&self) -> f64 {
        (self.x1_max - self.x1_min) / (self.n1 - 1) as f64
    }

    #[inline]
    pub fn dx2(&self) -> f64 {
        (self.x2_max - self.x2_min) / (self.n2 - 1) as f64
    }

    /// Quadrature cell measure attached to each node.
    #[inline]
    pub fn cell_area(&self) -> f64 {
        self.dx1() * self.dx2()
    }

    #[inline]
    pub fn x1(&self, i1: usize) -> f64 {
        self.x1_min + i1 as f64 * self.dx1()
    }

    #[inline]
    pub fn x2(&self, i2: usize) -> f64 {
        self.x2_min + i2 as f64 * self.dx2()
    }

    #[inline]
    pub fn node(&self, i1: usize, i2: usize) -> GroundPoint {
        GroundPoint::new(self.x1(i1), self.x2(i2))
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n1 * self.n2
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Discretized reflectivity V(x1, x2): the scene, phantom, or a
/// reconstructed image.
#[derive(Debug, Clone, PartialEq)]
pub struct ReflectivityGrid {
    pub geom: GridGeometry,
    values: Vec<f64>,
}

impl ReflectivityGrid {
    pub fn zeros(geom: GridGeometry) -> Result<Self> {
        geom.validate()?;
        Ok(Self {
            values: vec![0.0; geom.len()],
            geom,
        })
    }

    pub fn from_values(geom: GridGeometry, values: Vec<f64>) -> Result<Self> {
        geom.validate()?;
        if values.len() != geom.len() {
            return Err(Error::GeometryMismatch(format!(
                "value buffer holds {} samples, geometry wants {}",
                values.len(),
                geom.len()
            )));
        }
        Ok(Self { geom, values })
    }

    #[inline]
    pub fn get(&self, i1: usize, i2: usize) -> f64 {
        self.values[i1 * self.geom.n2 + i2]
    }

    #[inline]
    pub fn set(&mut self, i1: usize, i2: usize, v: f64) {
        self.values[i1 * self.geom.n2 + i2] = v;
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Sinogram geometry: slow-time and travel-time sampling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SinogramGeometry {
    pub s_min: f64,
    pub s_max: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub ns: usize,
    pub nt: usize,
}

impl SinogramGeometry {
    pub fn validate(&self) -> Result<()> {
        if !(self.s_min > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "slow-time range must be strictly positive, got s_min = {}",
                self.s_min
            )));
        }
        if !(self.s_min < self.s_max && self.t_min < self.t_max) {
            return Err(Error::InvalidConfig(
                "sinogram extents must be strictly ordered".into(),
            ));
        }
        if self.ns < 2 || self.nt < 2 {
            return Err(Error::InvalidConfig(format!(
                "sinogram needs at least 2 samples per axis, got {}x{}",
                self.ns, self.nt
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn ds(&self) -> f64 {
        (self.s_max - self.s_min) / (self.ns - 1) as f64
    }

    #[inline]
    pub fn dt(&self) -> f64 {
        (self.t_max - self.t_min) / (self.nt - 1) as f64
    }

    #[inline]
    pub fn s(&self, i: usize) -> f64 {
        self.s_min + i as f64 * self.ds()
    }

    #[inline]
    pub fn t(&self, j: usize) -> f64 {
        self.t_min + j as f64 * self.dt()
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.ns * self.nt
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Measured (or simulated) data d(s, t) on a regular grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Sinogram {
    pub geom: SinogramGeometry,
    values: Vec<f64>,
}

impl Sinogram {
    pub fn zeros(geom: SinogramGeometry) -> Result<Self> {
        geom.validate()?;
        Ok(Self {
            values: vec![0.0; geom.len()],
            geom,
        })
    }

    pub fn from_values(geom: SinogramGeometry, values: Vec<f64>) -> Result<Self> {
        geom.validate()?;
        if values.len() != geom.len() {
            return Err(Error::GeometryMismatch(format!(
                "value buffer holds {} samples, geometry wants {}",
                values.len(),
                geom.len()
            )));
        }
        Ok(Self { geom, values })
    }

    #[inline]
    pub fn get(&self, i_s: usize, i_t: usize) -> f64 {
        self.values[i_s * self.geom.nt + i_t]
    }

    #[inline]
    pub fn set(&mut self, i_s: usize, i_t: usize, v: f64) {
        self.values[i_s * self.geom.nt + i_t] = v;
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// A point scatterer with an amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointScatterer {
    pub x1: f64,
    pub x2: f64,
    pub amplitude: f64,
}

/// A filled axis-aligned rectangle with an amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RectScatterer {
    pub x1_min: f64,
    pub x1_max: f64,
    pub x2_min: f64,
    pub x2_max: f64,
    pub amplitude: f64,
}

/// Declarative scene description: point scatterers and filled rectangles.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    #[serde(default)]
    pub points: Vec<PointScatterer>,
    #[serde(default)]
    pub rects: Vec<RectScatterer>,
}

impl SceneSpec {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        Ok(fs::write(path, serde_json::to_string_pretty(self)?)?)
    }
}

/// Full acquisition description: platform height, the midpoint exclusion
/// radius epsilon, the pulse, both sampling grids, and the data-taper
/// parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcquisitionConfig {
    /// Platform height above the ground plane.
    pub h: f64,
    /// Midpoint exclusion radius; the data cutoff suppresses travel times
    /// within `20 epsilon^2 / h` of the minimum bistatic range.
    pub epsilon: f64,
    pub pulse: Pulse,
    pub scene: GridGeometry,
    pub sinogram: SinogramGeometry,
    /// Fraction of each (s, t) range tapered smoothly to zero at the
    /// data-window edges.
    #[serde(default = "default_f_taper")]
    pub f_taper_fraction: f64,
    /// Width of the smooth rise beyond the annihilated near-midpoint
    /// band; defaults to the band width itself.
    #[serde(default)]
    pub g_taper_width: Option<f64>,
}

fn default_f_taper() -> f64 {
    0.05
}

impl AcquisitionConfig {
    /// Width of the annihilated travel-time band around the minimum
    /// bistatic range.
    #[inline]
    pub fn g_band(&self) -> f64 {
        20.0 * self.epsilon * self.epsilon / self.h
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0) {
            return Err(Error::InvalidConfig(format!("h must be > 0, got {}", self.h)));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "epsilon must be > 0, got {}",
                self.epsilon
            )));
        }
        if !(self.f_taper_fraction >= 0.0 && self.f_taper_fraction < 0.5) {
            return Err(Error::InvalidConfig(format!(
                "f taper fraction must lie in [0, 0.5), got {}",
                self.f_taper_fraction
            )));
        }
        self.scene.validate()?;
        self.sinogram.validate()?;
        self.pulse.validate()?;
        // The travel-time window must cover the annihilated band at every
        // slow time, i.e. reach below the minimum range and above the
        // band's upper edge.
        let g = self.sinogram;
        let band = self.g_band();
        let lo = 2.0 * (g.s_min * g.s_min + self.h * self.h).sqrt();
        let hi = 2.0 * (g.s_max * g.s_max + self.h * self.h).sqrt() + band;
        if g.t_min > lo || g.t_max < hi {
            return Err(Error::InvalidConfig(format!(
                "travel-time range [{}, {}] must cover [{lo}, {hi}]",
                g.t_min, g.t_max
            )));
        }
        Ok(())
    }

    /// Checks that a scene container matches this acquisition's grid.
    pub fn check_scene(&self, grid: &ReflectivityGrid) -> Result<()> {
        if grid.geom != self.scene {
            return Err(Error::GeometryMismatch(
                "reflectivity grid does not match the configured scene geometry".into(),
            ));
        }
        Ok(())
    }

    /// Checks that a sinogram container matches this acquisition's grid.
    pub fn check_sinogram(&self, sino: &Sinogram) -> Result<()> {
        if sino.geom != self.sinogram {
            return Err(Error::GeometryMismatch(
                "sinogram does not match the configured data geometry".into(),
            ));
        }
        Ok(())
    }
}

/// Rasterizes a scene spec onto a grid. Point scatterers are splatted
/// bilinearly onto the four surrounding nodes (so sub-cell positions are
/// preserved in the first moment); rectangles add their amplitude to
/// every node they cover. Linear in the spec's amplitudes.
pub fn rasterize(spec: &SceneSpec, geom: GridGeometry) -> Result<ReflectivityGrid> {
    let mut grid = ReflectivityGrid::zeros(geom)?;
    for (index, p) in spec.points.iter().enumerate() {
        let fi = (p.x1 - geom.x1_min) / geom.dx1();
        let fj = (p.x2 - geom.x2_min) / geom.dx2();
        if !(0.0..=(geom.n1 - 1) as f64).contains(&fi) || !(0.0..=(geom.n2 - 1) as f64).contains(&fj)
        {
            return Err(Error::SceneOutOfBounds { index, kind: "point" });
        }
        let i0 = (fi.floor() as usize).min(geom.n1 - 2);
        let j0 = (fj.floor() as usize).min(geom.n2 - 2);
        let a = fi - i0 as f64;
        let b = fj - j0 as f64;
        let w = [
            (i0, j0, (1.0 - a) * (1.0 - b)),
            (i0 + 1, j0, a * (1.0 - b)),
            (i0, j0 + 1, (1.0 - a) * b),
            (i0 + 1, j0 + 1, a * b),
        ];
        for (i, j, wt) in w {
            if wt != 0.0 {
                let v = grid.get(i, j) + wt * p.amplitude;
                grid.set(i, j, v);
            }
        }
    }
    for (index, r) in spec.rects.iter().enumerate() {
        if r.x1_min > r.x1_max
            || r.x2_min > r.x2_max
            || r.x1_min < geom.x1_min
            || r.x1_max > geom.x1_max
            || r.x2_min < geom.x2_min
            || r.x2_max > geom.x2_max
        {
            return Err(Error::SceneOutOfBounds { index, kind: "rect" });
        }
        for i1 in 0..geom.n1 {
            let x1 = geom.x1(i1);
            if x1 < r.x1_min || x1 > r.x1_max {
                continue;
            }
            for i2 in 0..geom.n2 {
                let x2 = geom.x2(i2);
                if x2 >= r.x2_min && x2 <= r.x2_max {
                    let v = grid.get(i1, i2) + r.amplitude;
                    grid.set(i1, i2, v);
                }
            }
        }
    }
    Ok(grid)
}

fn encode(kind: &str, header_fields: &[f64], counts: (usize, usize), values: &[f64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(values.len() * 8 + 128);
    out.extend_from_slice(MAGIC.as_bytes());
    out.push(b'\n');
    let mut line = String::from(kind);
    for f in header_fields {
        line.push(' ');
        line.push_str(&format!("{f}"));
    }
    line.push_str(&format!(" {} {} le\n", counts.0, counts.1));
    out.extend_from_slice(line.as_bytes());
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

struct Decoded {
    kind: String,
    fields: [f64; 4],
    counts: (usize, usize),
    values: Vec<f64>,
}

fn decode(bytes: &[u8]) -> Result<Decoded> {
    let first_nl = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or(Error::BadMagic)?;
    let magic = std::str::from_utf8(&bytes[..first_nl]).map_err(|_| Error::BadMagic)?;
    if magic != MAGIC {
        if magic.starts_with("CMSAR") {
            return Err(Error::VersionMismatch {
                found: magic.to_string(),
            });
        }
        return Err(Error::BadMagic);
    }
    let rest = &bytes[first_nl + 1..];
    let second_nl = rest
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::BadHeader("missing header line".into()))?;
    let header = std::str::from_utf8(&rest[..second_nl])
        .map_err(|_| Error::BadHeader("header is not UTF-8".into()))?;
    let tokens: Vec<&str> = header.split_whitespace().collect();
    if tokens.len() != 8 {
        return Err(Error::BadHeader(format!(
            "expected 8 header tokens, got {}",
            tokens.len()
        )));
    }
    if tokens[7] != "le" {
        return Err(Error::BadHeader(format!(
            "unsupported endianness tag {:?}",
            tokens[7]
        )));
    }
    let mut fields = [0.0f64; 4];
    for (slot, tok) in fields.iter_mut().zip(&tokens[1..5]) {
        *slot = tok
            .parse()
            .map_err(|_| Error::BadHeader(format!("bad float {tok:?}")))?;
    }
    let c0: usize = tokens[5]
        .parse()
        .map_err(|_| Error::BadHeader(format!("bad count {:?}", tokens[5])))?;
    let c1: usize = tokens[6]
        .parse()
        .map_err(|_| Error::BadHeader(format!("bad count {:?}", tokens[6])))?;
    let payload = &rest[second_nl + 1..];
    let expected = c0
        .checked_mul(c1)
        .ok_or_else(|| Error::BadHeader("sample count overflow".into()))?;
    if payload.len() != expected * 8 {
        return Err(Error::Truncated {
            expected,
            got: payload.len() / 8,
        });
    }
    let values = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(Decoded {
        kind: tokens[0].to_string(),
        fields,
        counts: (c0, c1),
        values,
    })
}

pub fn save_grid(path: impl AsRef<Path>, grid: &ReflectivityGrid) -> Result<()> {
    let g = grid.geom;
    let bytes = encode(
        "grid",
        &[g.x1_min, g.x1_max, g.x2_min, g.x2_max],
        (g.n1, g.n2),
        grid.values(),
    );
    Ok(fs::write(path, bytes)?)
}

pub fn load_grid(path: impl AsRef<Path>) -> Result<ReflectivityGrid> {
    let d = decode(&fs::read(path)?)?;
    if d.kind != "grid" {
        return Err(Error::BadHeader(format!(
            "expected a grid container, found {:?}",
            d.kind
        )));
    }
    ReflectivityGrid::from_values(
        GridGeometry {
            x1_min: d.fields[0],
            x1_max: d.fields[1],
            x2_min: d.fields[2],
            x2_max: d.fields[3],
            n1: d.counts.0,
            n2: d.counts.1,
        },
        d.values,
    )
}

pub fn save_sinogram(path: impl AsRef<Path>, sino: &Sinogram) -> Result<()> {
    let g = sino.geom;
    let bytes = encode(
        "sino",
        &[g.s_min, g.s_max, g.t_min, g.t_max],
        (g.ns, g.nt),
        sino.values(),
    );
    Ok(fs::write(path, bytes)?)
}

pub fn load_sinogram(path: impl AsRef<Path>) -> Result<Sinogram> {
    let d = decode(&fs::read(path)?)?;
    if d.kind != "sino" {
        return Err(Error::BadHeader(format!(
            "expected a sinogram container, found {:?}",
            d.kind
        )));
    }
    Sinogram::from_values(
        SinogramGeometry {
            s_min: d.fields[0],
            s_max: d.fields[1],
            t_min: d.fields[2],
            t_max: d.fields[3],
            ns: d.counts.0,
            nt: d.counts.1,
        },
        d.values,
    )
}

/// Gray mapping for [`export_image`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    /// min -> 0, max -> 255 linearly.
    Linear,
    /// log10 of |value| (floored at 1e-6 of the peak), then linear.
    Log,
}

/// Writes an 8-bit binary PGM (P5) of the grid, row-major in x1.
/// A constant grid maps to mid-gray 128.
pub fn export_image(grid: &ReflectivityGrid, path: impl AsRef<Path>, norm: Normalization) -> Result<()> {
    let transformed: Vec<f64> = match norm {
        Normalization::Linear => grid.values().to_vec(),
        Normalization::Log => {
            let peak = grid.max_abs();
            if peak == 0.0 {
                vec![0.0; grid.values().len()]
            } else {
                let floor = peak * 1e-6;
                grid.values()
                    .iter()
                    .map(|v| v.abs().max(floor).log10())
                    .collect()
            }
        }
    };
    let lo = transformed.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = transformed.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut out = Vec::with_capacity(transformed.len() + 32);
    out.extend_from_slice(format!("P5\n{} {}\n255\n", grid.geom.n2, grid.geom.n1).as_bytes());
    if hi > lo {
        let scale = 255.0 / (hi - lo);
        out.extend(transformed.iter().map(|v| ((v - lo) * scale).round() as u8));
    } else {
        out.extend(std::iter::repeat(128u8).take(transformed.len()));
    }
    Ok(fs::write(path, out)?)
}
