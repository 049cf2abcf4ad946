//! Geodesic travel-time fields computed by first-order fast marching.
//!
//! Cells are squares of side `spacing` covering the topography bounds; values
//! live at cell centers. A cell is blocked when its center is closer than the
//! agent torso radius to an obstacle, so an agent center never has to enter a
//! blocked cell. Seed cells are those whose center lies within one spacing of
//! the target; they receive the exact (cost-weighted) distance to the target
//! rectangle, which is zero inside it.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::scenario::Topography;

pub const DEFAULT_SPACING: f64 = 0.1;
/// Standard deviation of the Gaussian density kernel (m).
pub const DENSITY_BANDWIDTH: f64 = 0.7;

#[derive(Debug, Clone, PartialEq)]
pub struct FloorField {
    pub origin: Point,
    pub spacing: f64,
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<f64>,
    pub obstacle_mask: Vec<bool>,
    /// Cells holding the boundary condition rather than a marched value.
    pub seed_mask: Vec<bool>,
}

#[derive(Clone, Copy, PartialEq)]
struct Frontier {
    value: f64,
    index: usize,
}

impl Eq for Frontier {}

impl Ord for Frontier {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on value, then index for a deterministic pop order
        other
            .value
            .total_cmp(&self.value)
            .then_with(|| other.index.cmp(&self.index))
    }
}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Local first-order upwind solution of |grad T| = cost given the smallest
/// neighbor value along each axis.
pub fn upwind_update(a: f64, b: f64, cost: f64, spacing: f64) -> f64 {
    let f = cost * spacing;
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    if !lo.is_finite() {
        return f64::INFINITY;
    }
    if !hi.is_finite() || hi - lo >= f {
        return lo + f;
    }
    let diff = a - b;
    0.5 * (a + b + (2.0 * f * f - diff * diff).sqrt())
}

impl FloorField {
    /// Travel distance to the target at unit speed.
    pub fn build_static(topo: &Topography, spacing: f64, torso_radius: f64) -> Result<Self> {
        let mut ff = Self::layout(topo, spacing, torso_radius)?;
        let cost = vec![1.0; ff.nx * ff.ny];
        ff.march(topo, &cost);
        ff.check_reachable(topo)?;
        Ok(ff)
    }

    /// Travel time with local cost `1 + gamma * density`, where density is a
    /// Gaussian kernel estimate over `positions` (agents per m^2).
    pub fn build_dynamic(
        topo: &Topography,
        positions: &[Point],
        spacing: f64,
        gamma: f64,
        torso_radius: f64,
    ) -> Result<Self> {
        if !(gamma >= 0.0) {
            return Err(Error::Config(format!("density weight must be >= 0, got {gamma}")));
        }
        let mut ff = Self::layout(topo, spacing, torso_radius)?;
        let mut cost = vec![1.0; ff.nx * ff.ny];
        if gamma > 0.0 && !positions.is_empty() {
            let density = ff.density(positions);
            for (c, rho) in cost.iter_mut().zip(density) {
                *c = 1.0 + gamma * rho;
            }
        }
        ff.march(topo, &cost);
        ff.check_reachable(topo)?;
        Ok(ff)
    }

    fn layout(topo: &Topography, spacing: f64, torso_radius: f64) -> Result<Self> {
        if !(spacing > 0.0) {
            return Err(Error::Config(format!("grid spacing must be positive, got {spacing}")));
        }
        let b = topo.bounds;
        let nx = ((b.width / spacing).round() as usize).max(1);
        let ny = ((b.height / spacing).round() as usize).max(1);
        let origin = b.min();
        let mut ff = FloorField {
            origin,
            spacing,
            nx,
            ny,
            values: vec![f64::INFINITY; nx * ny],
            obstacle_mask: vec![false; nx * ny],
            seed_mask: vec![false; nx * ny],
        };
        for j in 0..ny {
            for i in 0..nx {
                let c = ff.center(i, j);
                let k = j * nx + i;
                ff.obstacle_mask[k] = topo.clearance(c) < torso_radius;
            }
        }
        Ok(ff)
    }

    fn density(&self, positions: &[Point]) -> Vec<f64> {
        let sigma = DENSITY_BANDWIDTH;
        let norm = 1.0 / (2.0 * std::f64::consts::PI * sigma * sigma);
        let cutoff = 3.0 * sigma;
        let reach = (cutoff / self.spacing).ceil() as isize + 1;
        let mut rho = vec![0.0; self.nx * self.ny];
        for &p in positions {
            let (ci, cj) = self.cell_of(p);
            for j in (cj - reach).max(0)..=(cj + reach).min(self.ny as isize - 1) {
                for i in (ci - reach).max(0)..=(ci + reach).min(self.nx as isize - 1) {
                    let c = self.center(i as usize, j as usize);
                    let r2 = c.distance_sq(p);
                    if r2 <= cutoff * cutoff {
                        rho[j as usize * self.nx + i as usize] +=
                            norm * (-r2 / (2.0 * sigma * sigma)).exp();
                    }
                }
            }
        }
        rho
    }

    fn march(&mut self, topo: &Topography, cost: &[f64]) {
        let (nx, ny) = (self.nx, self.ny);
        let mut accepted = vec![false; nx * ny];
        let mut heap = BinaryHeap::new();

        for j in 0..ny {
            for i in 0..nx {
                let k = j * nx + i;
                if self.obstacle_mask[k] {
                    continue;
                }
                let dist = topo.target.distance_to(self.center(i, j));
                if dist <= self.spacing {
                    self.values[k] = cost[k] * dist;
                    self.seed_mask[k] = true;
                    heap.push(Frontier {
                        value: self.values[k],
                        index: k,
                    });
                }
            }
        }

        let mut last = f64::NEG_INFINITY;
        while let Some(Frontier { value, index }) = heap.pop() {
            if accepted[index] || value > self.values[index] {
                continue;
            }
            debug_assert!(value >= last, "fast marching accepted out of order");
            last = value;
            accepted[index] = true;
            let (i, j) = (index % nx, index / nx);
            let around: Vec<(usize, usize)> = self.neighbors(i, j).collect();
            for (ni, nj) in around {
                let k = nj * nx + ni;
                if accepted[k] || self.obstacle_mask[k] || self.seed_mask[k] {
                    continue;
                }
                let candidate = self.local_update(ni, nj, cost[k], |m| {
                    if accepted[m] {
                        self.values[m]
                    } else {
                        f64::INFINITY
                    }
                });
                if candidate < self.values[k] {
                    self.values[k] = candidate;
                    heap.push(Frontier {
                        value: candidate,
                        index: k,
                    });
                }
            }
        }
    }

    fn local_update(&self, i: usize, j: usize, cost: f64, known: impl Fn(usize) -> f64) -> f64 {
        let (ii, jj) = (i as isize, j as isize);
        let get = |di: isize, dj: isize| -> f64 {
            match self.index(ii + di, jj + dj) {
                Some(k) => known(k),
                None => f64::INFINITY,
            }
        };
        let a = get(-1, 0).min(get(1, 0));
        let b = get(0, -1).min(get(0, 1));
        let axis = upwind_update(a, b, cost, self.spacing);
        // Same update on the 45° rotated stencil. A diagonal neighbor only
        // counts when the corner it cuts is open on both sides.
        let open = |di: isize, dj: isize| {
            self.index(ii + di, jj).is_some_and(|k| !self.obstacle_mask[k])
                && self.index(ii, jj + dj).is_some_and(|k| !self.obstacle_mask[k])
        };
        let diag = |di: isize, dj: isize| if open(di, dj) { get(di, dj) } else { f64::INFINITY };
        let c = diag(-1, -1).min(diag(1, 1));
        let d = diag(-1, 1).min(diag(1, -1));
        let rotated = upwind_update(c, d, cost, self.spacing * std::f64::consts::SQRT_2);
        axis.min(rotated)
    }

    fn index(&self, i: isize, j: isize) -> Option<usize> {
        (i >= 0 && j >= 0 && i < self.nx as isize && j < self.ny as isize)
            .then(|| j as usize * self.nx + i as usize)
    }

    /// Re-applies the upwind update at cell (i, j) using the final values of
    /// its neighbors. Useful for checking the discrete Eikonal consistency.
    pub fn residual_update(&self, i: usize, j: usize) -> f64 {
        self.local_update(i, j, 1.0, |m| self.values[m])
    }

    fn neighbors(&self, i: usize, j: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        let (i, j) = (i as isize, j as isize);
        (-1..=1)
            .flat_map(move |dj| (-1..=1).map(move |di| (i + di, j + dj)))
            .filter(move |&(a, b)| (a, b) != (i, j))
            .filter_map(|(a, b)| self.index(a, b).map(|k| (k % self.nx, k / self.nx)))
    }

    fn check_reachable(&self, topo: &Topography) -> Result<()> {
        for j in 0..self.ny {
            for i in 0..self.nx {
                let c = self.center(i, j);
                let k = j * self.nx + i;
                if topo.source.contains(c) && !self.obstacle_mask[k] && !self.values[k].is_finite() {
                    return Err(Error::UnreachableSource { x: c.x, y: c.y });
                }
            }
        }
        Ok(())
    }

    pub fn center(&self, i: usize, j: usize) -> Point {
        Point::new(
            self.origin.x + (i as f64 + 0.5) * self.spacing,
            self.origin.y + (j as f64 + 0.5) * self.spacing,
        )
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.nx + i]
    }

    fn cell_of(&self, p: Point) -> (isize, isize) {
        (
            ((p.x - self.origin.x) / self.spacing).floor() as isize,
            ((p.y - self.origin.y) / self.spacing).floor() as isize,
        )
    }

    fn in_bounds(&self, p: Point) -> bool {
        let w = self.nx as f64 * self.spacing;
        let h = self.ny as f64 * self.spacing;
        p.x >= self.origin.x
            && p.y >= self.origin.y
            && p.x <= self.origin.x + w
            && p.y <= self.origin.y + h
    }

    /// Bilinear interpolation between the four surrounding cell centers,
    /// renormalized over the finite ones. Falls back to the nearest finite
    /// cell when all four are blocked.
    pub fn query(&self, p: Point) -> Result<f64> {
        if !self.in_bounds(p) {
            return Err(Error::OutOfBounds { x: p.x, y: p.y });
        }
        let fx = ((p.x - self.origin.x) / self.spacing - 0.5).clamp(0.0, (self.nx - 1) as f64);
        let fy = ((p.y - self.origin.y) / self.spacing - 0.5).clamp(0.0, (self.ny - 1) as f64);
        let i0 = (fx.floor() as usize).min(self.nx.saturating_sub(2));
        let j0 = (fy.floor() as usize).min(self.ny.saturating_sub(2));
        let tx = fx - i0 as f64;
        let ty = fy - j0 as f64;
        let i1 = (i0 + 1).min(self.nx - 1);
        let j1 = (j0 + 1).min(self.ny - 1);
        let stencil = [
            (i0, j0, (1.0 - tx) * (1.0 - ty)),
            (i1, j0, tx * (1.0 - ty)),
            (i0, j1, (1.0 - tx) * ty),
            (i1, j1, tx * ty),
        ];
        let mut acc = 0.0;
        let mut weight = 0.0;
        for (i, j, w) in stencil {
            let v = self.value(i, j);
            if v.is_finite() && w > 0.0 {
                acc += w * v;
                weight += w;
            }
        }
        if weight > 0.0 {
            return Ok((acc / weight).max(0.0));
        }
        Ok(self.nearest_finite(fx.round() as usize, fy.round() as usize))
    }

    fn nearest_finite(&self, ci: usize, cj: usize) -> f64 {
        let max_ring = self.nx.max(self.ny);
        for ring in 0..=max_ring {
            let mut best: Option<(usize, f64)> = None;
            let r = ring as isize;
            for dj in -r..=r {
                for di in -r..=r {
                    if di.abs() != r && dj.abs() != r {
                        continue;
                    }
                    let (i, j) = (ci as isize + di, cj as isize + dj);
                    if i < 0 || j < 0 || i >= self.nx as isize || j >= self.ny as isize {
                        continue;
                    }
                    let v = self.value(i as usize, j as usize);
                    let d2 = (di * di + dj * dj) as usize;
                    if v.is_finite() && best.is_none_or(|(bd, bv)| d2 < bd || (d2 == bd && v < bv)) {
                        best = Some((d2, v));
                    }
                }
            }
            if let Some((_, v)) = best {
                return v;
            }
        }
        f64::INFINITY
    }

    /// CSV dump `x,y,value` of all cell centers; blocked cells print `inf`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y,value\n");
        for j in 0..self.ny {
            for i in 0..self.nx {
                let c = self.center(i, j);
                let _ = writeln!(out, "{:.6},{:.6},{}", c.x, c.y, self.value(i, j));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Polygon, Rect};

    fn open_room(target: Rect) -> Topography {
        Topography {
            bounds: Rect::new(0.0, 0.0, 10.0, 10.0),
            obstacles: vec![],
            source: Rect::new(0.5, 0.5, 1.0, 1.0),
            target,
            exit_line: None,
        }
    }

    #[test]
    fn upwind_update_one_and_two_sided() {
        assert_eq!(upwind_update(1.0, f64::INFINITY, 1.0, 0.1), 1.1);
        assert_eq!(upwind_update(1.0, 5.0, 1.0, 0.1), 1.1);
        let t = upwind_update(1.0, 1.0, 1.0, 0.1);
        assert!((t - (1.0 + 0.1 / 2f64.sqrt())).abs() < 1e-12);
        assert!(upwind_update(f64::INFINITY, f64::INFINITY, 1.0, 0.1).is_infinite());
    }

    #[test]
    fn target_cells_are_zero() {
        let target = Rect::new(4.0, 4.0, 2.0, 2.0);
        let ff = FloorField::build_static(&open_room(target), 0.1, 0.195).unwrap();
        for j in 0..ff.ny {
            for i in 0..ff.nx {
                if target.contains(ff.center(i, j)) {
                    assert_eq!(ff.value(i, j), 0.0);
                }
            }
        }
    }

    #[test]
    fn query_at_center_and_midpoint() {
        let target = Rect::new(4.0, 4.0, 2.0, 2.0);
        let mut ff = FloorField::build_static(&open_room(target), 0.1, 0.195).unwrap();
        let c = ff.center(17, 23);
        assert_eq!(ff.query(c).unwrap(), ff.value(17, 23));

        // two finite cells with values 2 and 4, their stencil partners blocked
        let nx = ff.nx;
        ff.values[3 * nx + 3] = 2.0;
        ff.values[3 * nx + 4] = 4.0;
        ff.values[4 * nx + 3] = f64::INFINITY;
        ff.values[4 * nx + 4] = f64::INFINITY;
        let mid = (ff.center(3, 3) + ff.center(4, 3)) * 0.5;
        assert!((ff.query(mid).unwrap() - 3.0).abs() < 1e-12);

        assert!(matches!(
            ff.query(Point::new(-1.0, 5.0)),
            Err(Error::OutOfBounds { .. })
        ));
    }

    #[test]
    fn blocked_stencil_falls_back_to_nearest_finite() {
        let target = Rect::new(4.0, 4.0, 2.0, 2.0);
        let mut ff = FloorField::build_static(&open_room(target), 0.1, 0.195).unwrap();
        let nx = ff.nx;
        for j in 9..13 {
            for i in 9..13 {
                ff.values[j * nx + i] = f64::INFINITY;
            }
        }
        let p = (ff.center(10, 10) + ff.center(11, 11)) * 0.5;
        let v = ff.query(p).unwrap();
        assert!(v.is_finite());
    }

    #[test]
    fn zero_gamma_and_no_agents_match_static() {
        let target = Rect::new(4.0, 4.0, 2.0, 2.0);
        let topo = open_room(target);
        let s = FloorField::build_static(&topo, 0.1, 0.195).unwrap();
        let pts = vec![Point::new(2.0, 2.0), Point::new(7.0, 3.0)];
        assert_eq!(FloorField::build_dynamic(&topo, &pts, 0.1, 0.0, 0.195).unwrap(), s);
        assert_eq!(FloorField::build_dynamic(&topo, &[], 0.1, 1.0, 0.195).unwrap(), s);
        assert!(FloorField::build_dynamic(&topo, &pts, 0.1, -1.0, 0.195).is_err());
    }

    #[test]
    fn csv_dump_has_header_and_rows() {
        let topo = open_room(Rect::new(4.0, 4.0, 2.0, 2.0));
        let ff = FloorField::build_static(&topo, 0.5, 0.195).unwrap();
        let csv = ff.to_csv();
        assert!(csv.starts_with("x,y,value\n"));
        assert_eq!(csv.lines().count(), 1 + ff.nx * ff.ny);
    }

    fn max_error(spacing: f64) -> f64 {
        let target = Rect::new(4.95, 4.95, 0.1, 0.1);
        let ff = FloorField::build_static(&open_room(target), spacing, 0.195).unwrap();
        let mut worst: f64 = 0.0;
        for j in 0..ff.ny {
            for i in 0..ff.nx {
                let v = ff.value(i, j);
                if v.is_finite() {
                    worst = worst.max((v - target.distance_to(ff.center(i, j))).abs());
                }
            }
        }
        worst
    }

    #[test]
    fn empty_domain_error_is_small_and_shrinks() {
        let coarse = max_error(0.1);
        let fine = max_error(0.05);
        assert!(coarse <= 0.2, "error {coarse}");
        assert!(fine < coarse, "{fine} >= {coarse}");
    }

    #[test]
    fn three_meters_from_a_point_target() {
        let target = Rect::new(4.95, 4.95, 0.1, 0.1);
        let ff = FloorField::build_static(&open_room(target), 0.1, 0.195).unwrap();
        for p in [Point::new(8.0, 5.0), Point::new(5.0, 2.0), Point::new(7.12, 7.12)] {
            let exact = target.distance_to(p);
            assert!((exact - 3.0).abs() < 0.1);
            assert!((ff.query(p).unwrap() - exact).abs() <= 0.2);
        }
    }

    #[test]
    fn geodesic_bends_around_an_l_corner() {
        let mut topo = open_room(Rect::new(2.45, 2.45, 0.1, 0.1));
        topo.obstacles.push(Polygon::new(vec![
            Point::new(4.0, 0.0),
            Point::new(5.0, 0.0),
            Point::new(5.0, 4.0),
            Point::new(7.0, 4.0),
            Point::new(7.0, 5.0),
            Point::new(4.0, 5.0),
        ]));
        let ff = FloorField::build_static(&topo, 0.1, 0.05).unwrap();
        let probe = Point::new(6.5, 7.0);
        let corner = Point::new(4.0, 5.0);
        let exact = probe.distance(corner) + topo.target.distance_to(corner);
        let got = ff.query(probe).unwrap();
        assert!((got - exact).abs() <= 0.2, "{got} vs {exact}");
        assert!(got > topo.target.distance_to(probe) + 0.2);
    }

    #[test]
    fn crowd_raises_travel_time_behind_it() {
        let topo = open_room(Rect::new(0.5, 4.0, 1.0, 2.0));
        let s = FloorField::build_static(&topo, 0.1, 0.195).unwrap();
        let cluster: Vec<Point> = (0..5)
            .flat_map(|a| (0..5).map(move |b| Point::new(4.6 + 0.2 * a as f64, 4.6 + 0.2 * b as f64)))
            .collect();
        let d = FloorField::build_dynamic(&topo, &cluster, 0.1, 1.0, 0.195).unwrap();
        let behind = Point::new(8.0, 5.0);
        assert!(d.query(behind).unwrap() > s.query(behind).unwrap());
        for (a, b) in d.values.iter().zip(&s.values) {
            assert!(a >= b || (a.is_infinite() && b.is_infinite()));
        }
    }

    #[test]
    fn static_field_is_a_fixed_point_of_the_update() {
        let mut topo = open_room(Rect::new(1.0, 1.0, 1.0, 1.0));
        topo.obstacles.push(Rect::new(4.0, 2.0, 1.0, 6.0).to_polygon());
        let ff = FloorField::build_static(&topo, 0.1, 0.195).unwrap();
        for j in 0..ff.ny {
            for i in 0..ff.nx {
                let k = j * ff.nx + i;
                if ff.seed_mask[k] || !ff.values[k].is_finite() {
                    continue;
                }
                assert!(ff.values[k] >= 0.0);
                assert!((ff.residual_update(i, j) - ff.values[k]).abs() <= 1e-9, "cell ({i},{j})");
            }
        }
    }

    #[test]
    fn obstacle_cells_are_blocked() {
        let mut topo = open_room(Rect::new(1.0, 1.0, 1.0, 1.0));
        topo.obstacles.push(Rect::new(4.0, 2.0, 1.0, 6.0).to_polygon());
        let ff = FloorField::build_static(&topo, 0.1, 0.195).unwrap();
        for j in 0..ff.ny {
            for i in 0..ff.nx {
                if topo.clearance(ff.center(i, j)) < 0.195 {
                    assert!(ff.value(i, j).is_infinite());
                }
            }
        }
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(48))]

        #[test]
        fn query_matches_euclidean_distance(x in 0.5f64..9.5, y in 0.5f64..9.5) {
            let target = Rect::new(4.95, 4.95, 0.1, 0.1);
            let ff = FloorField::build_static(&open_room(target), 0.1, 0.195).unwrap();
            let p = Point::new(x, y);
            proptest::prop_assert!((ff.query(p).unwrap() - target.distance_to(p)).abs() <= 0.2);
        }

        #[test]
        fn query_is_continuous_across_cell_edges(i in 2usize..97, j in 2usize..97) {
            let target = Rect::new(1.0, 1.0, 1.0, 1.0);
            let mut topo = open_room(target);
            topo.obstacles.push(Rect::new(4.0, 2.0, 1.0, 6.0).to_polygon());
            let ff = FloorField::build_static(&topo, 0.1, 0.195).unwrap();
            // Edge between cell (i, j) and (i + 1, j).
            let edge = Point::new(ff.origin.x + (i + 1) as f64 * 0.1, ff.center(i, j).y);
            proptest::prop_assume!(crate::scenario::contains_free(&topo, edge, 0.195));
            let eps = Point::new(1e-12, 0.0);
            let (l, r) = (ff.query(edge - eps).unwrap(), ff.query(edge + eps).unwrap());
            proptest::prop_assert!((l - r).abs() <= 1e-9, "{} vs {}", l, r);
        }
    }
}
