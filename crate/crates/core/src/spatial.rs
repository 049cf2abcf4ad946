//! Uniform bucket grid for neighbor queries.

use crate::geometry::{Point, Rect};

#[derive(Debug, Clone)]
pub struct SpatialHash {
    origin: Point,
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<usize>>,
    slot: Vec<Option<usize>>,
}

impl SpatialHash {
    pub fn new(bounds: Rect, cell: f64, capacity: usize) -> Self {
        let nx = ((bounds.width / cell).ceil() as usize).max(1);
        let ny = ((bounds.height / cell).ceil() as usize).max(1);
        SpatialHash {
            origin: bounds.min(),
            cell,
            nx,
            ny,
            buckets: vec![Vec::new(); nx * ny],
            slot: vec![None; capacity],
        }
    }

    fn coords(&self, p: Point) -> (usize, usize) {
        let i = ((p.x - self.origin.x) / self.cell).floor().max(0.0) as usize;
        let j = ((p.y - self.origin.y) / self.cell).floor().max(0.0) as usize;
        (i.min(self.nx - 1), j.min(self.ny - 1))
    }

    fn bucket_of(&self, p: Point) -> usize {
        let (i, j) = self.coords(p);
        j * self.nx + i
    }

    pub fn insert(&mut self, id: usize, p: Point) {
        if id >= self.slot.len() {
            self.slot.resize(id + 1, None);
        }
        debug_assert!(self.slot[id].is_none(), "agent {id} inserted twice");
        let b = self.bucket_of(p);
        self.buckets[b].push(id);
        self.slot[id] = Some(b);
    }

    pub fn remove(&mut self, id: usize) {
        if let Some(b) = self.slot.get_mut(id).and_then(Option::take) {
            let bucket = &mut self.buckets[b];
            if let Some(k) = bucket.iter().position(|&x| x == id) {
                bucket.swap_remove(k);
            }
        }
    }

    pub fn update(&mut self, id: usize, p: Point) {
        let b = self.bucket_of(p);
        if self.slot.get(id).copied().flatten() == Some(b) {
            return;
        }
        self.remove(id);
        self.insert(id, p);
    }

    /// Ids in every bucket touching the square of half-side `radius` around
    /// `p`, sorted ascending. Callers filter by exact distance.
    pub fn candidates(&self, p: Point, radius: f64, out: &mut Vec<usize>) {
        out.clear();
        let (i0, j0) = self.coords(Point::new(p.x - radius, p.y - radius));
        let (i1, j1) = self.coords(Point::new(p.x + radius, p.y + radius));
        for j in j0..=j1 {
            for i in i0..=i1 {
                out.extend_from_slice(&self.buckets[j * self.nx + i]);
            }
        }
        out.sort_unstable();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn matches_all_pairs(
            pts in prop::collection::vec((0.0..20.0f64, 0.0..10.0f64), 1..60),
            q in (0.0..20.0f64, 0.0..10.0f64),
            radius in 0.1..6.0f64,
            cell in 0.5..4.0f64,
        ) {
            let mut grid = SpatialHash::new(Rect::new(0.0, 0.0, 20.0, 10.0), cell, pts.len());
            for (id, &(x, y)) in pts.iter().enumerate() {
                grid.insert(id, Point::new(x, y));
            }
            // move a few around
            for id in (0..pts.len()).step_by(3) {
                let (x, y) = pts[id];
                grid.update(id, Point::new(20.0 - x, 10.0 - y));
            }
            let pos = |id: usize| {
                let (x, y) = pts[id];
                if id.is_multiple_of(3) { Point::new(20.0 - x, 10.0 - y) } else { Point::new(x, y) }
            };
            let q = Point::new(q.0, q.1);
            let mut out = Vec::new();
            grid.candidates(q, radius, &mut out);
            let got: Vec<usize> = out.into_iter().filter(|&id| pos(id).distance(q) <= radius).collect();
            let want: Vec<usize> = (0..pts.len()).filter(|&id| pos(id).distance(q) <= radius).collect();
            prop_assert_eq!(got, want);
        }
    }

    #[test]
    fn removed_ids_disappear() {
        let mut grid = SpatialHash::new(Rect::new(0.0, 0.0, 10.0, 10.0), 2.0, 2);
        grid.insert(0, Point::new(1.0, 1.0));
        grid.insert(1, Point::new(1.5, 1.0));
        grid.remove(0);
        let mut out = Vec::new();
        grid.candidates(Point::new(1.0, 1.0), 1.0, &mut out);
        assert_eq!(out, vec![1]);
    }
}
