//! Small numeric helpers shared across modules.

use crate::Point;

/// Kahan compensated accumulator. Quadrature sums must be reproducible to
/// 1e-12 regardless of summation chunking, so plain `f64` addition is not
/// enough for the longer node lists.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let y = x - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

/// Uniform-bucket nearest-neighbor index over a planar point cloud.
///
/// Distance queries against the dense boundary and layer samples dominate
/// partition evaluation; brute force over 10^4-point clouds is too slow for
/// 10^5 queries.
#[derive(Debug, Clone)]
pub struct PointIndex {
    points: Vec<Point>,
    min_x: f64,
    min_y: f64,
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<u32>>,
}

impl PointIndex {
    pub fn build(points: Vec<Point>) -> Self {
        assert!(!points.is_empty(), "empty point cloud");
        let (mut min_x, mut min_y) = (f64::INFINITY, f64::INFINITY);
        let (mut max_x, mut max_y) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in &points {
            min_x = min_x.min(p.re);
            min_y = min_y.min(p.im);
            max_x = max_x.max(p.re);
            max_y = max_y.max(p.im);
        }
        let span = ((max_x - min_x).max(max_y - min_y)).max(1e-12);
        // Aim for O(1) points per bucket.
        let n = ((points.len() as f64).sqrt().ceil() as usize).clamp(4, 512);
        let cell = span / n as f64;
        let nx = ((max_x - min_x) / cell).floor() as usize + 1;
        let ny = ((max_y - min_y) / cell).floor() as usize + 1;
        let mut buckets = vec![Vec::new(); nx * ny];
        for (i, p) in points.iter().enumerate() {
            let bx = ((p.re - min_x) / cell).floor() as usize;
            let by = ((p.im - min_y) / cell).floor() as usize;
            buckets[by.min(ny - 1) * nx + bx.min(nx - 1)].push(i as u32);
        }
        Self {
            points,
            min_x,
            min_y,
            cell,
            nx,
            ny,
            buckets,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Distance from `q` to the nearest cloud point.
    pub fn distance(&self, q: Point) -> f64 {
        let bx = (((q.re - self.min_x) / self.cell).floor() as i64).clamp(0, self.nx as i64 - 1);
        let by = (((q.im - self.min_y) / self.cell).floor() as i64).clamp(0, self.ny as i64 - 1);
        let mut best = f64::INFINITY;
        // Expand rings of buckets until the found distance is certified.
        for ring in 0..self.nx.max(self.ny) as i64 + 1 {
            if best.is_finite() && (ring - 1) as f64 * self.cell > best {
                break;
            }
            let mut touched = false;
            for dy in -ring..=ring {
                for dx in -ring..=ring {
                    if dx.abs() != ring && dy.abs() != ring {
                        continue;
                    }
                    let x = bx + dx;
                    let y = by + dy;
                    if x < 0 || y < 0 || x >= self.nx as i64 || y >= self.ny as i64 {
                        continue;
                    }
                    touched = true;
                    for &i in &self.buckets[y as usize * self.nx + x as usize] {
                        let d = (self.points[i as usize] - q).norm();
                        if d < best {
                            best = d;
                        }
                    }
                }
            }
            if !touched && best.is_finite() {
                break;
            }
        }
        best
    }
}

/// Max pairwise Euclidean distance of a point set.
pub fn max_pairwise_distance(points: &[Point]) -> f64 {
    let mut best: f64 = 0.0;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            best = best.max((a - b).norm());
        }
    }
    best
}
