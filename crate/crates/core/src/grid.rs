//! Discretization carrier for inner distances of the image domain.
//!
//! Polar node set in the disk with dyadically graded radii `r_l = 1 − 2^{−l}`
//! and per-level angular counts that double until a cap. Edge weights are
//! image lengths `|φ'(midpoint)| · (edge length)` (midpoint rule, second-order
//! error), so graph shortest paths approximate `dist_Ω` through `φ`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::map::ConformalMap;
use crate::Point;

#[derive(Debug, Clone)]
pub struct PullbackGrid {
    /// dyadic level of the outermost ring; cap radius is `1 − 2^{−max_level}`
    pub max_level: u32,
    pub angular_base: usize,
    pub angular_max: usize,
    /// per-level angular counts (level 0 is the single origin node)
    counts: Vec<usize>,
    /// node offset per level
    offsets: Vec<usize>,
    positions: Vec<Point>,
    adjacency: Vec<Vec<(u32, f64)>>,
}

struct HeapEntry {
    dist: f64,
    node: u32,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.dist == other.dist
    }
}
impl Eq for HeapEntry {}
impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // reversed for a min-heap
        other
            .dist
            .partial_cmp(&self.dist)
            .unwrap_or(Ordering::Equal)
    }
}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PullbackGrid {
    pub fn build(
        map: &ConformalMap,
        max_level: u32,
        angular_base: usize,
        angular_max: usize,
    ) -> Result<Self> {
        if max_level < 1 || angular_base < 4 {
            return Err(Error::Config(
                "grid needs max_level >= 1 and angular_base >= 4".into(),
            ));
        }
        let mut counts = vec![1usize];
        for l in 1..=max_level {
            counts.push((angular_base << l).min(angular_max));
        }
        let mut offsets = vec![0usize];
        for c in &counts {
            offsets.push(offsets.last().unwrap() + c);
        }
        let total = *offsets.last().unwrap();
        let mut positions = Vec::with_capacity(total);
        positions.push(Complex64::new(0.0, 0.0));
        for l in 1..=max_level as usize {
            let r = 1.0 - 0.5f64.powi(l as i32);
            let n = counts[l];
            for j in 0..n {
                let theta = j as f64 * std::f64::consts::TAU / n as f64;
                positions.push(Complex64::from_polar(r, theta));
            }
        }

        let mut adjacency: Vec<Vec<(u32, f64)>> = vec![Vec::new(); total];
        let connect = |adj: &mut Vec<Vec<(u32, f64)>>, a: usize, b: usize| -> Result<()> {
            if a == b || adj[a].iter().any(|&(n, _)| n as usize == b) {
                return Ok(());
            }
            let pa = positions[a];
            let pb = positions[b];
            let mid = (pa + pb) / 2.0;
            let w = map.eval(mid)?.1.norm() * (pb - pa).norm();
            if !(w > 0.0) {
                return Err(Error::Internal(format!("nonpositive edge weight at {mid}")));
            }
            adj[a].push((b as u32, w));
            adj[b].push((a as u32, w));
            Ok(())
        };

        for l in 1..=max_level as usize {
            let n = counts[l];
            for j in 0..n {
                let id = offsets[l] + j;
                // ring neighbor
                connect(&mut adjacency, id, offsets[l] + (j + 1) % n)?;
                // bracketing nodes of the next ring (plus their ring neighbors,
                // which gives the diagonal edges of an 8-neighbor stencil)
                if l < max_level as usize {
                    let m = counts[l + 1];
                    let theta = j as f64 / n as f64;
                    let k = (theta * m as f64).round() as usize % m;
                    connect(&mut adjacency, id, offsets[l + 1] + k)?;
                    connect(&mut adjacency, id, offsets[l + 1] + (k + 1) % m)?;
                    connect(&mut adjacency, id, offsets[l + 1] + (k + m - 1) % m)?;
                }
            }
        }
        // origin connects to the whole first ring
        for j in 0..counts[1] {
            connect(&mut adjacency, 0, offsets[1] + j)?;
        }

        Ok(Self {
            max_level,
            angular_base,
            angular_max,
            counts,
            offsets,
            positions,
            adjacency,
        })
    }

    pub fn node_count(&self) -> usize {
        self.positions.len()
    }

    pub fn position(&self, node: u32) -> Point {
        self.positions[node as usize]
    }

    pub fn cap_radius(&self) -> f64 {
        1.0 - 0.5f64.powi(self.max_level as i32)
    }

    /// Level and angular index of a node id.
    pub fn level_of(&self, node: u32) -> (usize, usize) {
        let id = node as usize;
        let l = match self.offsets.binary_search(&id) {
            Ok(l) => l,
            Err(l) => l - 1,
        };
        (l, id - self.offsets[l])
    }

    /// Nearest grid node; ties break to the lowest (level, angular index).
    pub fn nearest_node(&self, z: Point) -> Result<u32> {
        // points between the cap radius and the circle snap to the outermost
        // ring (the level clamp below)
        let r = z.norm();
        if r >= 1.0 {
            return Err(Error::Domain("nearest_node needs |z| < 1".into()));
        }
        let approx = if r < 0.25 {
            0
        } else {
            (-(1.0 - r).log2()).round() as i64
        };
        let mut best: Option<(f64, usize, usize)> = None;
        for l in (approx - 1).max(0)..=(approx + 1).min(self.max_level as i64) {
            let l = l as usize;
            if l == 0 {
                let d = r;
                if best.map_or(true, |(bd, bl, bj)| {
                    d < bd - 1e-15 || (d < bd + 1e-15 && (l, 0) < (bl, bj))
                }) {
                    best = Some((d, 0, 0));
                }
                continue;
            }
            let n = self.counts[l];
            let theta = z.arg().rem_euclid(std::f64::consts::TAU);
            let j = ((theta * n as f64 / std::f64::consts::TAU).round() as usize) % n;
            for dj in [0usize, n - 1, 1] {
                let jj = (j + dj) % n;
                let d = (self.positions[self.offsets[l] + jj] - z).norm();
                if best.map_or(true, |(bd, bl, bj)| {
                    d < bd - 1e-15 || (d < bd + 1e-15 && (l, jj) < (bl, bj))
                }) {
                    best = Some((d, l, jj));
                }
            }
        }
        let (_, l, j) = best.ok_or_else(|| Error::Internal("empty grid".into()))?;
        Ok((self.offsets[l] + j) as u32)
    }

    /// Multi-source Dijkstra. Entries beyond `cutoff` stay at infinity.
    pub fn distance_field(&self, sources: &[u32], cutoff: f64) -> Vec<f64> {
        let mut dist = vec![f64::INFINITY; self.positions.len()];
        let mut heap = BinaryHeap::new();
        for &s in sources {
            if dist[s as usize] > 0.0 {
                dist[s as usize] = 0.0;
                heap.push(HeapEntry { dist: 0.0, node: s });
            }
        }
        while let Some(HeapEntry { dist: d, node }) = heap.pop() {
            if d > dist[node as usize] {
                continue;
            }
            if d > cutoff {
                continue;
            }
            for &(next, w) in &self.adjacency[node as usize] {
                let nd = d + w;
                if nd < dist[next as usize] {
                    dist[next as usize] = nd;
                    heap.push(HeapEntry {
                        dist: nd,
                        node: next,
                    });
                }
            }
        }
        dist
    }

    /// Shortest-path distance between single nodes.
    pub fn node_distance(&self, a: u32, b: u32) -> Result<f64> {
        let field = self.distance_field(&[a], f64::INFINITY);
        let d = field[b as usize];
        if d.is_finite() {
            Ok(d)
        } else {
            Err(Error::Internal("grid is disconnected".into()))
        }
    }

    /// Inner distance `dist_Ω(φ(a), φ(b))` through the weighted grid.
    pub fn inner_distance(&self, a: Point, b: Point) -> Result<f64> {
        let na = self.nearest_node(a)?;
        let nb = self.nearest_node(b)?;
        if na == nb {
            return Ok(0.0);
        }
        self.node_distance(na, nb)
    }

    /// Nodes whose pullback position satisfies a predicate.
    pub fn nodes_where(&self, mut pred: impl FnMut(Point) -> bool) -> Vec<u32> {
        (0..self.positions.len() as u32)
            .filter(|&i| pred(self.positions[i as usize]))
            .collect()
    }

    /// All node positions (read-only).
    pub fn positions(&self) -> &[Point] {
        &self.positions
    }

    /// Adjacency list of a node: `(neighbor, edge weight)` pairs.
    pub fn neighbors(&self, node: u32) -> &[(u32, f64)] {
        &self.adjacency[node as usize]
    }
}
