use std::collections::VecDeque;

use pathfinding::prelude::astar;

use super::SpaceMap;
use crate::geometry::Vec2;

/// Index of a grid cell (row-major).
pub type Cell = usize;

const NEIGHBOURS: [(i64, i64); 8] = [
    (1, 0),
    (-1, 0),
    (0, 1),
    (0, -1),
    (1, 1),
    (1, -1),
    (-1, 1),
    (-1, -1),
];

/// Occupancy grid over a [`SpaceMap`], inflated by a disc radius.
///
/// A cell is free when its centre has clearance of at least `radius`. Two
/// neighbouring free cells are linked when the straight segment between their
/// centres keeps that clearance too, so any chain of links is a collision-free
/// polyline for a disc of that radius.
#[derive(Debug, Clone)]
pub struct NavGrid {
    origin: Vec2,
    resolution: f64,
    radius: f64,
    cols: usize,
    rows: usize,
    clearance: Vec<f64>,
    links: Vec<u8>,
    component: Vec<u32>,
    component_sizes: Vec<usize>,
}

const NO_COMPONENT: u32 = u32::MAX;

impl NavGrid {
    pub const DEFAULT_RESOLUTION: f64 = 0.25;

    pub fn build(space: &SpaceMap, resolution: f64, radius: f64) -> Self {
        let (lo, hi) = space.boundary().bounds();
        let cols = ((hi.x - lo.x) / resolution).ceil().max(1.0) as usize;
        let rows = ((hi.y - lo.y) / resolution).ceil().max(1.0) as usize;
        let mut grid = NavGrid {
            origin: lo,
            resolution,
            radius,
            cols,
            rows,
            clearance: Vec::with_capacity(cols * rows),
            links: vec![0; cols * rows],
            component: vec![NO_COMPONENT; cols * rows],
            component_sizes: Vec::new(),
        };
        for r in 0..rows {
            for c in 0..cols {
                let p = grid.center_of(r * cols + c);
                grid.clearance.push(space.min_clearance(p));
            }
        }
        for cell in 0..cols * rows {
            if !grid.is_free(cell) {
                continue;
            }
            let mut mask = 0u8;
            for (k, &(dc, dr)) in NEIGHBOURS.iter().enumerate() {
                let Some(n) = grid.offset(cell, dc, dr) else {
                    continue;
                };
                if !grid.is_free(n) {
                    continue;
                }
                let step = if dc != 0 && dr != 0 {
                    resolution * std::f64::consts::SQRT_2
                } else {
                    resolution
                };
                let lower = grid.clearance[cell].min(grid.clearance[n]) - step / 2.0;
                let ok = lower > radius || {
                    let seg = space.segment_clearance(grid.center_of(cell), grid.center_of(n));
                    seg > 0.0 && seg >= radius
                };
                if ok {
                    mask |= 1 << k;
                }
            }
            grid.links[cell] = mask;
        }
        grid.label_components();
        grid
    }

    fn is_free(&self, cell: Cell) -> bool {
        let c = self.clearance[cell];
        c > 0.0 && c >= self.radius
    }

    fn offset(&self, cell: Cell, dc: i64, dr: i64) -> Option<Cell> {
        let c = (cell % self.cols) as i64 + dc;
        let r = (cell / self.cols) as i64 + dr;
        if c < 0 || r < 0 || c >= self.cols as i64 || r >= self.rows as i64 {
            None
        } else {
            Some(r as usize * self.cols + c as usize)
        }
    }

    fn label_components(&mut self) {
        let mut queue = VecDeque::new();
        for start in 0..self.cols * self.rows {
            if !self.is_free(start) || self.component[start] != NO_COMPONENT {
                continue;
            }
            let id = self.component_sizes.len() as u32;
            let mut size = 0;
            self.component[start] = id;
            queue.push_back(start);
            while let Some(cell) = queue.pop_front() {
                size += 1;
                let neighbours: Vec<Cell> = self.linked(cell).collect();
                for n in neighbours {
                    if self.component[n] == NO_COMPONENT {
                        self.component[n] = id;
                        queue.push_back(n);
                    }
                }
            }
            self.component_sizes.push(size);
        }
    }

    fn linked(&self, cell: Cell) -> impl Iterator<Item = Cell> + '_ {
        let mask = self.links[cell];
        NEIGHBOURS
            .iter()
            .enumerate()
            .filter(move |(k, _)| mask & (1 << k) != 0)
            .filter_map(move |(_, &(dc, dr))| self.offset(cell, dc, dr))
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn center_of(&self, cell: Cell) -> Vec2 {
        let c = (cell % self.cols) as f64;
        let r = (cell / self.cols) as f64;
        self.origin + Vec2::new((c + 0.5) * self.resolution, (r + 0.5) * self.resolution)
    }

    pub fn free_cell_count(&self) -> usize {
        self.component_sizes.iter().sum()
    }

    pub fn largest_component_size(&self) -> usize {
        self.component_sizes.iter().copied().max().unwrap_or(0)
    }

    pub fn largest_component(&self) -> Option<u32> {
        self.component_sizes
            .iter()
            .enumerate()
            .max_by_key(|&(i, &s)| (s, std::cmp::Reverse(i)))
            .map(|(i, _)| i as u32)
    }

    pub fn component_of(&self, cell: Cell) -> Option<u32> {
        let id = self.component[cell];
        (id != NO_COMPONENT).then_some(id)
    }

    /// Free cells of one connected component, in index order.
    pub fn cells_in_component(&self, id: u32) -> impl Iterator<Item = Cell> + '_ {
        (0..self.component.len()).filter(move |&c| self.component[c] == id)
    }

    /// The nearest free cell whose centre is reachable from `p` by a straight,
    /// clear segment.
    pub fn attach(&self, space: &SpaceMap, p: Vec2) -> Option<Cell> {
        let rel = (p - self.origin) / self.resolution;
        let (pc, pr) = (rel.x.floor() as i64, rel.y.floor() as i64);
        let reach = 4i64;
        let mut candidates: Vec<(f64, Cell)> = Vec::new();
        for dr in -reach..=reach {
            for dc in -reach..=reach {
                let (c, r) = (pc + dc, pr + dr);
                if c < 0 || r < 0 || c >= self.cols as i64 || r >= self.rows as i64 {
                    continue;
                }
                let cell = r as usize * self.cols + c as usize;
                if self.component[cell] != NO_COMPONENT {
                    candidates.push((self.center_of(cell).distance(p), cell));
                }
            }
        }
        candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        // A point already closer to a wall than `radius` may still leave it along a
        // segment that does not get any closer.
        let own = space.min_clearance(p);
        if own <= 0.0 {
            return None;
        }
        let needed = self.radius.min(own) - 1e-9;
        candidates
            .into_iter()
            .find(|&(_, cell)| space.segment_clearance(p, self.center_of(cell)) >= needed)
            .map(|(_, cell)| cell)
    }

    /// True when both points attach to the same component.
    pub fn connected(&self, space: &SpaceMap, a: Vec2, b: Vec2) -> bool {
        match (self.attach(space, a), self.attach(space, b)) {
            (Some(ca), Some(cb)) => self.component[ca] == self.component[cb],
            _ => false,
        }
    }

    /// Shortest linked-cell route between two cells, as cell centres.
    pub fn shortest_path(&self, from: Cell, to: Cell) -> Option<Vec<Vec2>> {
        // Integer costs in units of 0.1 mm keep the search on a total order.
        let scale = 1e4 * self.resolution;
        let straight = scale.round() as u64;
        let diagonal = (scale * std::f64::consts::SQRT_2).round() as u64;
        let (tc, tr) = ((to % self.cols) as i64, (to / self.cols) as i64);
        let (path, _) = astar(
            &from,
            |&cell| {
                self.linked(cell)
                    .map(|n| {
                        let diag =
                            n % self.cols != cell % self.cols && n / self.cols != cell / self.cols;
                        (n, if diag { diagonal } else { straight })
                    })
                    .collect::<Vec<_>>()
            },
            |&cell| {
                let dx = ((cell % self.cols) as i64 - tc).unsigned_abs();
                let dy = ((cell / self.cols) as i64 - tr).unsigned_abs();
                let (lo, hi) = if dx < dy { (dx, dy) } else { (dy, dx) };
                // octile distance, rounded down to stay admissible
                lo * (diagonal - 1) + (hi - lo) * (straight - 1)
            },
            |&cell| cell == to,
        )?;
        Some(path.into_iter().map(|c| self.center_of(c)).collect())
    }
}
