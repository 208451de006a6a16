//! Query-conditioned sampling geometry.
//!
//! A query's current points give a mean and per-axis spread; predicted unit
//! offsets are scaled by that spread to place `S` sample points, which are
//! projected into `M` cameras, masked by visibility, and used to gather
//! bilinearly interpolated image features into a single weighted average.
//!
//! Pixel convention: coordinate `(0, 0)` is the center of the top-left pixel
//! and a pixel `(x, y)` is valid when `0 <= x <= W-1` and `0 <= y <= H-1`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geom::{self, Mat3, Vec3};
use crate::par::map_indices;

/// Scene-to-pixel projection: `[u', v', w'] = P · [x, y, z, 1]`, pixel
/// `(u'/w', v'/w')`, depth `w'`.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraModel {
    projection: [[f64; 4]; 3],
    width: usize,
    height: usize,
}

impl CameraModel {
    pub fn new(projection: [[f64; 4]; 3], width: usize, height: usize) -> Result<Self> {
        if projection.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("projection must be finite"));
        }
        if width == 0 || height == 0 {
            return Err(Error::InvalidParameter("image size must be positive"));
        }
        Ok(Self {
            projection,
            width,
            height,
        })
    }

    /// Takes the first three rows of a homogeneous 4x4 matrix.
    pub fn from_homogeneous(m: [[f64; 4]; 4], width: usize, height: usize) -> Result<Self> {
        Self::new([m[0], m[1], m[2]], width, height)
    }

    /// Pinhole camera `K [R | t]` with world-to-camera rotation `rotation`
    /// and camera center `center`.
    pub fn pinhole(
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        rotation: Mat3,
        center: Vec3,
        width: usize,
        height: usize,
    ) -> Result<Self> {
        let k = [[fx, 0.0, cx], [0.0, fy, cy], [0.0, 0.0, 1.0]];
        let t = geom::scale(geom::mat3_mul_vec(&rotation, center), -1.0);
        let mut p = [[0.0; 4]; 3];
        for r in 0..3 {
            for c in 0..3 {
                p[r][c] = (0..3).map(|k_i| k[r][k_i] * rotation[k_i][c]).sum();
            }
            p[r][3] = (0..3).map(|k_i| k[r][k_i] * t[k_i]).sum();
        }
        Self::new(p, width, height)
    }

    pub fn projection(&self) -> &[[f64; 4]; 3] {
        &self.projection
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Pixel coordinates and depth of `p`.
    pub fn project(&self, p: Vec3) -> ([f64; 2], f64) {
        let h = [p[0], p[1], p[2], 1.0];
        let row = |r: usize| (0..4).map(|c| self.projection[r][c] * h[c]).sum::<f64>();
        let (u, v, w) = (row(0), row(1), row(2));
        ([u / w, v / w], w)
    }

    pub fn is_visible(&self, pixel: [f64; 2], depth: f64) -> bool {
        depth > 0.0
            && pixel[0] >= 0.0
            && pixel[0] <= (self.width - 1) as f64
            && pixel[1] >= 0.0
            && pixel[1] <= (self.height - 1) as f64
    }

    fn left_block(&self) -> Mat3 {
        let p = &self.projection;
        [
            [p[0][0], p[0][1], p[0][2]],
            [p[1][0], p[1][1], p[1][2]],
            [p[2][0], p[2][1], p[2][2]],
        ]
    }

    /// Optical center (the projection's right null vector), if finite.
    pub fn center(&self) -> Option<Vec3> {
        let inv = geom::mat3_inverse(&self.left_block())?;
        let p4 = [self.projection[0][3], self.projection[1][3], self.projection[2][3]];
        Some(geom::scale(geom::mat3_mul_vec(&inv, p4), -1.0))
    }

    /// Unit direction of the viewing ray through pixel `(u, v)`, pointing to
    /// positive depth.
    pub fn pixel_ray(&self, u: f64, v: f64) -> Option<Vec3> {
        let inv = geom::mat3_inverse(&self.left_block())?;
        let d = geom::mat3_mul_vec(&inv, [u, v, 1.0]);
        let n = geom::norm(d);
        (n > 0.0 && n.is_finite()).then(|| geom::scale(d, 1.0 / n))
    }
}

/// Dense `H x W x C` features, row-major with channels fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

impl FeatureMap {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || channels == 0 {
            return Err(Error::ShapeMismatch("feature map dimensions must be positive"));
        }
        if data.len() != width * height * channels {
            return Err(Error::LengthMismatch {
                expected: width * height * channels,
                found: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("feature values must be finite"));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        channels: usize,
        f: impl Fn(usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height * channels);
        for y in 0..height {
            for x in 0..width {
                for c in 0..channels {
                    data.push(f(x, y, c));
                }
            }
        }
        Self::new(width, height, channels, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> &[f64] {
        let start = (y * self.width + x) * self.channels;
        &self.data[start..start + self.channels]
    }
}

/// Inputs for placing one query's sample points.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleContext {
    pub point_mean: Vec3,
    pub point_std: Vec3,
    /// One 3D offset per sample.
    pub offsets: Vec<Vec3>,
    /// `S x M` sample-camera weights, sample-major.
    pub weights: Vec<f64>,
}

impl SampleContext {
    pub fn new(point_mean: Vec3, point_std: Vec3, offsets: Vec<Vec3>, weights: Vec<f64>) -> Result<Self> {
        if offsets.is_empty() {
            return Err(Error::ShapeMismatch("at least one sample offset is required"));
        }
        if point_std.iter().any(|s| !(*s >= 0.0)) {
            return Err(Error::InvalidParameter("point spread must be non-negative"));
        }
        if !geom::is_finite(point_mean) || !geom::is_finite(point_std) || offsets.iter().any(|o| !geom::is_finite(*o)) {
            return Err(Error::InvalidParameter("sample inputs must be finite"));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidParameter(
                "sample weights must be finite and non-negative",
            ));
        }
        Ok(Self {
            point_mean,
            point_std,
            offsets,
            weights,
        })
    }

    /// Mean and per-axis population standard deviation of a query's points.
    pub fn from_points(points: &[Vec3], offsets: Vec<Vec3>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptySet);
        }
        Self::new(geom::mean(points), geom::std_dev(points), offsets, weights)
    }

    pub fn sample_count(&self) -> usize {
        self.offsets.len()
    }
}

/// Default spread floor: half a voxel.
pub fn default_sigma_min(voxel_size: f64) -> f64 {
    0.5 * voxel_size
}

/// `r_s = m + offset_s ⊙ max(σ, σ_min)`, per axis.
pub fn compute_sample_points(ctx: &SampleContext, sigma_min: f64) -> Vec<Vec3> {
    let sigma = [
        ctx.point_std[0].max(sigma_min),
        ctx.point_std[1].max(sigma_min),
        ctx.point_std[2].max(sigma_min),
    ];
    ctx.offsets
        .iter()
        .map(|o| {
            [
                ctx.point_mean[0] + o[0] * sigma[0],
                ctx.point_mean[1] + o[1] * sigma[1],
                ctx.point_mean[2] + o[2] * sigma[2],
            ]
        })
        .collect()
}

/// Pixel coordinates and visibility of `S` points in `M` cameras,
/// sample-major (`s * M + m`).
#[derive(Debug, Clone, PartialEq)]
pub struct Projections {
    samples: usize,
    cameras: usize,
    coords: Vec<[f64; 2]>,
    depths: Vec<f64>,
    visible: Vec<bool>,
}

impl Projections {
    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn cameras(&self) -> usize {
        self.cameras
    }

    pub fn coord(&self, s: usize, m: usize) -> [f64; 2] {
        self.coords[s * self.cameras + m]
    }

    pub fn depth(&self, s: usize, m: usize) -> f64 {
        self.depths[s * self.cameras + m]
    }

    pub fn is_visible(&self, s: usize, m: usize) -> bool {
        self.visible[s * self.cameras + m]
    }

    /// Visibility mask of camera `m` over the samples.
    pub fn mask(&self, m: usize) -> Vec<bool> {
        (0..self.samples).map(|s| self.is_visible(s, m)).collect()
    }

    pub fn visible_count(&self) -> usize {
        self.visible.iter().filter(|v| **v).count()
    }
}

/// Projects every point into every camera. Coordinates are reported even for
/// masked entries.
pub fn project_and_mask(points: &[Vec3], cams: &[CameraModel]) -> Projections {
    let m = cams.len();
    let mut coords = Vec::with_capacity(points.len() * m);
    let mut depths = Vec::with_capacity(points.len() * m);
    let mut visible = Vec::with_capacity(points.len() * m);
    for p in points {
        for cam in cams {
            let (c, d) = cam.project(*p);
            coords.push(c);
            depths.push(d);
            visible.push(cam.is_visible(c, d));
        }
    }
    Projections {
        samples: points.len(),
        cameras: m,
        coords,
        depths,
        visible,
    }
}

/// Four-neighbor bilinear interpolation of every channel.
pub fn bilinear(fm: &FeatureMap, coord: [f64; 2]) -> Result<Vec<f64>> {
    let mut out = vec![0.0; fm.channels];
    bilinear_into(fm, coord, &mut out)?;
    Ok(out)
}

fn bilinear_into(fm: &FeatureMap, coord: [f64; 2], out: &mut [f64]) -> Result<()> {
    let [x, y] = coord;
    let max_x = (fm.width - 1) as f64;
    let max_y = (fm.height - 1) as f64;
    if !(x >= 0.0 && x <= max_x && y >= 0.0 && y <= max_y) {
        return Err(Error::OutOfBounds { x, y });
    }
    let x0 = (libm::floor(x) as usize).min(fm.width.saturating_sub(2));
    let y0 = (libm::floor(y) as usize).min(fm.height.saturating_sub(2));
    let x1 = (x0 + 1).min(fm.width - 1);
    let y1 = (y0 + 1).min(fm.height - 1);
    let fx = x - x0 as f64;
    let fy = y - y0 as f64;
    let (p00, p10, p01, p11) = (fm.pixel(x0, y0), fm.pixel(x1, y0), fm.pixel(x0, y1), fm.pixel(x1, y1));
    let (w00, w10, w01, w11) = ((1.0 - fx) * (1.0 - fy), fx * (1.0 - fy), (1.0 - fx) * fy, fx * fy);
    for c in 0..fm.channels {
        out[c] = w00 * p00[c] + w10 * p10[c] + w01 * p01[c] + w11 * p11[c];
    }
    Ok(())
}

/// `(1 / Σ visible) · Σ_s Σ_m w[s,m] · v[s,m] · B(F_m, c[s,m])`; the zero
/// vector when nothing is visible.
pub fn aggregate_features(fms: &[FeatureMap], proj: &Projections, weights: &[f64]) -> Result<Vec<f64>> {
    let channels = fms
        .first()
        .map(|f| f.channels)
        .ok_or(Error::ShapeMismatch("no feature maps"))?;
    if fms.iter().any(|f| f.channels != channels) {
        return Err(Error::ShapeMismatch("feature maps disagree on channel count"));
    }
    if fms.len() != proj.cameras {
        return Err(Error::ShapeMismatch("one feature map per camera is required"));
    }
    if weights.len() != proj.samples * proj.cameras {
        return Err(Error::ShapeMismatch("weights must be samples x cameras"));
    }
    let visible = proj.visible_count();
    let mut acc = vec![0.0; channels];
    if visible == 0 {
        return Ok(acc);
    }
    let pairs = proj.samples * proj.cameras;
    let contributions: Vec<Option<Vec<f64>>> = map_indices(pairs, |k| {
        if !proj.visible[k] {
            return None;
        }
        let m = k % proj.cameras;
        Some(bilinear(&fms[m], proj.coords[k]))
    })
    .into_iter()
    .map(|r| r.transpose())
    .collect::<Result<_>>()?;
    for (k, feat) in contributions.into_iter().enumerate() {
        if let Some(feat) = feat {
            for c in 0..channels {
                acc[c] += weights[k] * feat[c];
            }
        }
    }
    let norm = 1.0 / visible as f64;
    acc.iter_mut().for_each(|v| *v *= norm);
    Ok(acc)
}
