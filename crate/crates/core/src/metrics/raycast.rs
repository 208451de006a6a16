//! Voxel ray traversal (Amanatides–Woo) and ray sets.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geom::{self, Vec3};
use crate::types::{ClassId, VoxelGrid};

/// Rays sharing one maximum range.
#[derive(Debug, Clone, PartialEq)]
pub struct RaySet {
    origins: Vec<Vec3>,
    directions: Vec<Vec3>,
    max_range: f64,
}

impl RaySet {
    pub fn new(origins: Vec<Vec3>, directions: Vec<Vec3>, max_range: f64) -> Result<Self> {
        if origins.len() != directions.len() {
            return Err(Error::LengthMismatch {
                expected: origins.len(),
                found: directions.len(),
            });
        }
        if !(max_range > 0.0) {
            return Err(Error::InvalidParameter("max range must be positive"));
        }
        if let Some(i) = origins.iter().position(|o| !geom::is_finite(*o)) {
            return Err(Error::NonFiniteCoordinate(i));
        }
        if directions.iter().any(|d| libm::fabs(geom::norm(*d) - 1.0) > 1e-6) {
            return Err(Error::InvalidParameter("ray directions must be unit vectors"));
        }
        Ok(Self {
            origins,
            directions,
            max_range,
        })
    }

    /// Spinning-LiDAR pattern: `rings` elevations evenly spaced over
    /// `[elev_min, elev_max]` degrees, `azimuths` evenly spaced headings.
    pub fn lidar(
        origin: Vec3,
        rings: usize,
        azimuths: usize,
        elev_min_deg: f64,
        elev_max_deg: f64,
        max_range: f64,
    ) -> Result<Self> {
        let mut dirs = Vec::with_capacity(rings * azimuths);
        for r in 0..rings {
            let t = if rings > 1 { r as f64 / (rings - 1) as f64 } else { 0.5 };
            let elev = (elev_min_deg + t * (elev_max_deg - elev_min_deg)) * PI / 180.0;
            for a in 0..azimuths {
                let az = 2.0 * PI * a as f64 / azimuths as f64;
                let (ce, se) = (libm::cos(elev), libm::sin(elev));
                dirs.push([ce * libm::cos(az), ce * libm::sin(az), se]);
            }
        }
        Self::new(alloc::vec![origin; dirs.len()], dirs, max_range)
    }

    /// 32 rings from −30° to +10° elevation, 360 azimuth steps.
    pub fn lidar32(origin: Vec3, max_range: f64) -> Self {
        Self::lidar(origin, 32, 360, -30.0, 10.0, max_range).expect("preset is valid")
    }

    /// `nx x ny` rays across a forward frustum around `+x` with the given
    /// half-angles in degrees.
    pub fn frustum(
        origin: Vec3,
        nx: usize,
        ny: usize,
        half_h_deg: f64,
        half_v_deg: f64,
        max_range: f64,
    ) -> Result<Self> {
        let mut dirs = Vec::with_capacity(nx * ny);
        let (th, tv) = (libm::tan(half_h_deg * PI / 180.0), libm::tan(half_v_deg * PI / 180.0));
        for j in 0..ny {
            let v = if ny > 1 {
                -1.0 + 2.0 * j as f64 / (ny - 1) as f64
            } else {
                0.0
            };
            for i in 0..nx {
                let u = if nx > 1 {
                    -1.0 + 2.0 * i as f64 / (nx - 1) as f64
                } else {
                    0.0
                };
                let d = [1.0, u * th, v * tv];
                dirs.push(geom::scale(d, 1.0 / geom::norm(d)));
            }
        }
        Self::new(alloc::vec![origin; dirs.len()], dirs, max_range)
    }

    /// 16 x 16 rays over a ±45° by ±20° forward frustum.
    pub fn grid16(origin: Vec3, max_range: f64) -> Self {
        Self::frustum(origin, 16, 16, 45.0, 20.0, max_range).expect("preset is valid")
    }

    pub fn len(&self) -> usize {
        self.origins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.origins.is_empty()
    }

    pub fn origin(&self, i: usize) -> Vec3 {
        self.origins[i]
    }

    pub fn direction(&self, i: usize) -> Vec3 {
        self.directions[i]
    }

    pub fn max_range(&self) -> f64 {
        self.max_range
    }
}

/// First occupied voxel along a ray.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayHit {
    pub hit: bool,
    /// Entry distance into the hit voxel; 0 when the ray starts inside it.
    pub depth: f64,
    pub class_id: ClassId,
    /// Flat index of the hit voxel.
    pub voxel: usize,
}

impl RayHit {
    pub fn miss(free_id: ClassId) -> Self {
        Self {
            hit: false,
            depth: 0.0,
            class_id: free_id,
            voxel: usize::MAX,
        }
    }
}

/// One traversed voxel and the ray parameter where it is entered.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoxelStep {
    pub ijk: [usize; 3],
    pub t_entry: f64,
}

/// Voxels pierced by a ray, in order, up to `max_range`. On exact boundary
/// ties the walk steps x before y before z.
#[derive(Debug, Clone)]
pub struct VoxelWalk {
    dims: [usize; 3],
    ijk: [i64; 3],
    step: [i64; 3],
    t_max: [f64; 3],
    t_delta: [f64; 3],
    t_entry: f64,
    t_end: f64,
    done: bool,
}

impl VoxelWalk {
    pub fn new(grid: &VoxelGrid, origin: Vec3, direction: Vec3, max_range: f64) -> Self {
        let lo = grid.origin();
        let hi = grid.extent_max();
        let vs = grid.voxel_size();
        let dims = grid.dims();

        // Slab clip against the grid box.
        let mut t0 = 0.0f64;
        let mut t1 = max_range;
        for a in 0..3 {
            if direction[a] == 0.0 {
                if origin[a] < lo[a] || origin[a] >= hi[a] {
                    t1 = -1.0;
                }
            } else {
                let inv = 1.0 / direction[a];
                let (mut ta, mut tb) = ((lo[a] - origin[a]) * inv, (hi[a] - origin[a]) * inv);
                if ta > tb {
                    core::mem::swap(&mut ta, &mut tb);
                }
                t0 = t0.max(ta);
                t1 = t1.min(tb);
            }
        }
        let mut walk = Self {
            dims,
            ijk: [0; 3],
            step: [0; 3],
            t_max: [f64::INFINITY; 3],
            t_delta: [f64::INFINITY; 3],
            t_entry: t0,
            t_end: t1,
            done: !(t0 <= t1),
        };
        if walk.done {
            return walk;
        }

        let start = geom::add(origin, geom::scale(direction, t0));
        for a in 0..3 {
            let f = libm::floor((start[a] - lo[a]) / vs) as i64;
            walk.ijk[a] = f.clamp(0, dims[a] as i64 - 1);
            if direction[a] > 0.0 {
                walk.step[a] = 1;
                let boundary = lo[a] + (walk.ijk[a] + 1) as f64 * vs;
                walk.t_max[a] = (boundary - origin[a]) / direction[a];
                walk.t_delta[a] = vs / direction[a];
            } else if direction[a] < 0.0 {
                walk.step[a] = -1;
                let boundary = lo[a] + walk.ijk[a] as f64 * vs;
                walk.t_max[a] = (boundary - origin[a]) / direction[a];
                walk.t_delta[a] = -vs / direction[a];
            }
        }
        walk
    }
}

impl Iterator for VoxelWalk {
    type Item = VoxelStep;

    fn next(&mut self) -> Option<VoxelStep> {
        if self.done {
            return None;
        }
        let out = VoxelStep {
            ijk: [self.ijk[0] as usize, self.ijk[1] as usize, self.ijk[2] as usize],
            t_entry: self.t_entry,
        };
        let mut axis = 0;
        if self.t_max[1] < self.t_max[axis] {
            axis = 1;
        }
        if self.t_max[2] < self.t_max[axis] {
            axis = 2;
        }
        let t_next = self.t_max[axis];
        self.ijk[axis] += self.step[axis];
        self.t_max[axis] += self.t_delta[axis];
        self.t_entry = t_next;
        if !(t_next <= self.t_end) || self.ijk[axis] < 0 || self.ijk[axis] >= self.dims[axis] as i64 {
            self.done = true;
        }
        Some(out)
    }
}

/// First voxel whose label is not `free_id` along the ray, within `max_range`.
pub fn cast_ray(grid: &VoxelGrid, free_id: ClassId, origin: Vec3, direction: Vec3, max_range: f64) -> RayHit {
    for step in VoxelWalk::new(grid, origin, direction, max_range) {
        let idx = grid.index(step.ijk);
        let label = grid.labels()[idx];
        if label != free_id {
            return RayHit {
                hit: true,
                depth: step.t_entry,
                class_id: label,
                voxel: idx,
            };
        }
    }
    RayHit::miss(free_id)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;
    use alloc::vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const FREE: ClassId = 17;

    #[test]
    fn empty_grid_never_hits() {
        let g = VoxelGrid::filled([-5.0; 3], 0.5, [20, 20, 20], FREE).unwrap();
        let h = cast_ray(&g, FREE, [0.0; 3], [1.0, 0.0, 0.0], 100.0);
        assert!(!h.hit);
    }

    #[test]
    fn axis_aligned_wall() {
        let mut g = VoxelGrid::filled([0.0, -2.0, -2.0], 0.4, [40, 10, 10], FREE).unwrap();
        for j in 0..10 {
            for k in 0..10 {
                g.set([25, j, k], 4);
            }
        }
        let h = cast_ray(&g, FREE, [0.1, 0.1, 0.1], [1.0, 0.0, 0.0], 100.0);
        assert!(h.hit);
        assert_eq!(h.class_id, 4);
        assert!((h.depth - 9.9).abs() < 1e-9);
        let from_zero = cast_ray(&g, FREE, [0.0, 0.1, 0.1], [1.0, 0.0, 0.0], 100.0);
        assert!((from_zero.depth - 10.0).abs() < 1e-9);
        let short = cast_ray(&g, FREE, [0.0, 0.1, 0.1], [1.0, 0.0, 0.0], 9.0);
        assert!(!short.hit);
    }

    #[test]
    fn rays_entering_from_outside() {
        let mut g = VoxelGrid::filled([0.0; 3], 1.0, [4, 4, 4], FREE).unwrap();
        g.set([2, 1, 1], 3);
        let h = cast_ray(&g, FREE, [-10.0, 1.5, 1.5], [1.0, 0.0, 0.0], 100.0);
        assert!(h.hit);
        assert!((h.depth - 12.0).abs() < 1e-12);
        let away = cast_ray(&g, FREE, [-10.0, 1.5, 1.5], [-1.0, 0.0, 0.0], 100.0);
        assert!(!away.hit);
        let parallel_outside = cast_ray(&g, FREE, [-1.0, 1.5, 9.0], [1.0, 0.0, 0.0], 100.0);
        assert!(!parallel_outside.hit);
    }

    #[test]
    fn walk_visits_adjacent_voxels() {
        let g = VoxelGrid::filled([0.0; 3], 1.0, [8, 8, 8], FREE).unwrap();
        let d = geom::scale([1.0, 0.7, 0.3], 1.0 / geom::norm([1.0, 0.7, 0.3]));
        let steps: Vec<_> = VoxelWalk::new(&g, [0.2, 0.3, 0.4], d, 100.0).collect();
        assert!(steps.len() > 8);
        for w in steps.windows(2) {
            let diff: i64 = (0..3).map(|a| (w[1].ijk[a] as i64 - w[0].ijk[a] as i64).abs()).sum();
            assert_eq!(diff, 1);
            assert!(w[1].t_entry >= w[0].t_entry);
        }
    }

    #[test]
    fn marching_oracle_disagrees_only_on_grazing_clips() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut g = VoxelGrid::filled([-8.0, -8.0, -2.0], 0.4, [40, 40, 10], FREE).unwrap();
        for idx in 0..g.len() {
            if rng.random::<f64>() < 0.03 {
                let ijk = g.coords(idx);
                g.set(ijk, rng.random_range(0..17));
            }
        }
        let step = 0.4 / 20.0;
        for _ in 0..1000 {
            let o = [
                rng.random_range(-7.0..7.0),
                rng.random_range(-7.0..7.0),
                rng.random_range(-1.5..1.5),
            ];
            let d = [
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-0.3..0.3),
            ];
            let d = geom::scale(d, 1.0 / geom::norm(d));
            let fast = cast_ray(&g, FREE, o, d, 30.0);
            let slow = oracle::march_ray(&g, FREE, o, d, 30.0, step);
            if fast.hit == slow.is_some() && (!fast.hit || Some(fast.voxel) == slow) {
                continue;
            }
            // The marcher can only skip voxels it crosses in less than one step.
            assert!(fast.hit);
            let (t0, t1) = oracle::voxel_interval(&g, g.coords(fast.voxel), o, d);
            assert!(t1.min(30.0) - t0.max(0.0) < step);
        }
    }

    #[test]
    fn matches_box_intersection_oracle_on_structured_scene() {
        let mut g = VoxelGrid::filled([-20.0, -20.0, -2.0], 0.4, [100, 100, 16], FREE).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for j in 0..100 {
            for i in 0..100 {
                g.set([i, j, 0], 11);
            }
        }
        for _ in 0..12 {
            let (x, y) = (rng.random_range(5..90), rng.random_range(5..90));
            let (w, h, c) = (rng.random_range(3..10), rng.random_range(2..8), rng.random_range(0..10));
            for k in 1..1 + h {
                for j in y..y + w {
                    for i in x..x + w {
                        g.set([i, j, k], c);
                    }
                }
            }
        }
        for _ in 0..1000 {
            let o = [
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(0.5..2.0),
            ];
            let az = rng.random_range(0.0..2.0 * PI);
            let el = rng.random_range(-0.5..0.15);
            let d = [
                libm::cos(el) * libm::cos(az),
                libm::cos(el) * libm::sin(az),
                libm::sin(el),
            ];
            let fast = cast_ray(&g, FREE, o, d, 40.0);
            let exact = oracle::first_pierced_occupied(&g, FREE, o, d, 40.0);
            assert_eq!(fast.hit.then_some(fast.voxel), exact.map(|(v, _)| v));
            if let Some((_, t)) = exact {
                assert!((fast.depth - t).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn depth_never_decreases_when_voxels_are_cleared() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let mut g = VoxelGrid::filled([0.0; 3], 0.5, [20, 20, 6], FREE).unwrap();
        for idx in 0..g.len() {
            if rng.random::<f64>() < 0.1 {
                let ijk = g.coords(idx);
                g.set(ijk, 2);
            }
        }
        let rays: Vec<(Vec3, Vec3)> = (0..200)
            .map(|_| {
                let d = [
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-0.2..0.2),
                ];
                ([5.0, 5.0, 1.5], geom::scale(d, 1.0 / geom::norm(d)))
            })
            .collect();
        let before: Vec<RayHit> = rays.iter().map(|(o, d)| cast_ray(&g, FREE, *o, *d, 50.0)).collect();
        for idx in 0..g.len() {
            if rng.random::<f64>() < 0.5 {
                let ijk = g.coords(idx);
                g.set(ijk, FREE);
            }
        }
        for ((o, d), b) in rays.iter().zip(&before) {
            let a = cast_ray(&g, FREE, *o, *d, 50.0);
            if a.hit {
                assert!(b.hit && a.depth >= b.depth);
            }
        }
    }

    #[test]
    fn ray_presets() {
        let l = RaySet::lidar32([0.0; 3], 50.0);
        assert_eq!(l.len(), 32 * 360);
        let f = RaySet::grid16([0.0; 3], 50.0);
        assert_eq!(f.len(), 256);
        assert!(RaySet::new(vec![[0.0; 3]], vec![[2.0, 0.0, 0.0]], 1.0).is_err());
        assert!(RaySet::new(vec![[0.0; 3]], vec![[1.0, 0.0, 0.0]], 0.0).is_err());
    }
}
