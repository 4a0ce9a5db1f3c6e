//! Dyadic annular decomposition of the disk and its conformal image.
//!
//! The annulus `A_l = {1 − 2^{−l} ≤ |z| ≤ 1 − 2^{−l−1}}` is cut by the radial
//! rays at angles `j·2^{−l}π` into `2^{l+1}` cells `Q_{l,j}`, labeled
//! counterclockwise from the positive real axis. The images `R_j = φ(Q_{m,j})`
//! carry Whitney metadata measured by sampling.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::map::ConformalMap;
use crate::util::{max_pairwise_distance, PointIndex};
use crate::Point;

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct DyadicCell {
    pub level: u32,
    pub index: u32,
    pub r_min: f64,
    pub r_max: f64,
    pub theta_min: f64,
    pub theta_max: f64,
}

impl DyadicCell {
    pub fn new(level: u32, index: u32) -> Result<Self> {
        if level == 0 {
            if index > 1 {
                return Err(Error::Config("level 0 has only two half-disk cells".into()));
            }
            // the two half-disk cells of A_0 = B(0, 1/2)
            return Ok(Self {
                level: 0,
                index,
                r_min: 0.0,
                r_max: 0.5,
                theta_min: index as f64 * std::f64::consts::PI,
                theta_max: (index + 1) as f64 * std::f64::consts::PI,
            });
        }
        let count = 2u32 << level;
        if index >= count {
            return Err(Error::Config(format!(
                "cell index {index} out of range for level {level}"
            )));
        }
        let alpha = std::f64::consts::PI * 0.5f64.powi(level as i32);
        Ok(Self {
            level,
            index,
            r_min: 1.0 - 0.5f64.powi(level as i32),
            r_max: 1.0 - 0.5f64.powi(level as i32 + 1),
            theta_min: index as f64 * alpha,
            theta_max: (index + 1) as f64 * alpha,
        })
    }

    /// Closed-cell membership.
    pub fn contains(&self, z: Point) -> bool {
        let r = z.norm();
        if r < self.r_min - 1e-15 || r > self.r_max + 1e-15 {
            return false;
        }
        let theta = z.arg().rem_euclid(std::f64::consts::TAU);
        theta >= self.theta_min - 1e-15 && theta <= self.theta_max + 1e-15
    }

    pub fn center(&self) -> Point {
        Complex64::from_polar(
            0.5 * (self.r_min + self.r_max),
            0.5 * (self.theta_min + self.theta_max),
        )
    }

    pub fn corners(&self) -> [Point; 4] {
        [
            Complex64::from_polar(self.r_min, self.theta_min),
            Complex64::from_polar(self.r_max, self.theta_min),
            Complex64::from_polar(self.r_max, self.theta_max),
            Complex64::from_polar(self.r_min, self.theta_max),
        ]
    }

    /// `density` samples per side along the four cell sides.
    pub fn boundary_samples(&self, density: usize) -> Vec<Point> {
        let n = density.max(2);
        let mut out = Vec::with_capacity(4 * n);
        for i in 0..=n {
            let t = i as f64 / n as f64;
            let theta = self.theta_min + t * (self.theta_max - self.theta_min);
            out.push(Complex64::from_polar(self.r_min, theta));
            out.push(Complex64::from_polar(self.r_max, theta));
            let r = self.r_min + t * (self.r_max - self.r_min);
            out.push(Complex64::from_polar(r, self.theta_min));
            out.push(Complex64::from_polar(r, self.theta_max));
        }
        out
    }

    /// Interior tensor sample (midpoints of a `density × density` split).
    pub fn interior_samples(&self, density: usize) -> Vec<Point> {
        let n = density.max(2);
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            for k in 0..n {
                let r = self.r_min + (i as f64 + 0.5) / n as f64 * (self.r_max - self.r_min);
                let theta =
                    self.theta_min + (k as f64 + 0.5) / n as f64 * (self.theta_max - self.theta_min);
                out.push(Complex64::from_polar(r, theta));
            }
        }
        out
    }
}

/// Sampled Whitney metadata of an image cell `R_j = φ(Q_{m,j})`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CellMetrics {
    /// image diameter (max pairwise boundary-sample distance)
    pub diam: f64,
    /// inscribed-disk radius estimate
    pub inscribed_radius: f64,
    /// `dist(R_j, ∂Ω)` estimate
    pub boundary_distance: f64,
    /// Whitney constant: max of diam/inscribed, diam/dist, dist/diam
    pub lambda: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Decomposition {
    pub m: u32,
    pub cells: Vec<DyadicCell>,
    /// per-cell image metadata; filled by `compute_metrics`
    pub metrics: Vec<CellMetrics>,
    /// pullback radius of `Ω_m = φ(B̄(0, 1 − 2^{−m−1}))`
    pub omega_m_radius: f64,
    /// pullback radius of `Ω_{m−1}`
    pub omega_prev_radius: f64,
}

/// Arcs `β_j` (on the rim of the pullback of `Ω_m`) and `δ_j^n` (deeper in the
/// boundary layer), sharing the outer half of the angular sector of `Q_{m,j}`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ArcPair {
    pub m: u32,
    pub j: u32,
    pub n: u32,
    pub beta_radius: f64,
    pub delta_radius: f64,
    pub theta_min: f64,
    pub theta_max: f64,
}

impl ArcPair {
    pub fn beta_samples(&self, count: usize) -> Vec<Point> {
        arc_points(self.beta_radius, self.theta_min, self.theta_max, count)
    }

    pub fn delta_samples(&self, count: usize) -> Vec<Point> {
        arc_points(self.delta_radius, self.theta_min, self.theta_max, count)
    }
}

fn arc_points(r: f64, theta_min: f64, theta_max: f64, count: usize) -> Vec<Point> {
    let n = count.max(2);
    (0..n)
        .map(|i| {
            let t = i as f64 / (n - 1) as f64;
            Complex64::from_polar(r, theta_min + t * (theta_max - theta_min))
        })
        .collect()
}

/// The `2^{m+1}` level-`m` cells covering `A_m`.
pub fn build_cells(m: u32) -> Result<Decomposition> {
    if !(2..=14).contains(&m) {
        return Err(Error::Config(format!("m must be in 2..=14, got {m}")));
    }
    let count = 2u32 << m;
    let cells = (0..count)
        .map(|j| DyadicCell::new(m, j))
        .collect::<Result<Vec<_>>>()?;
    Ok(Decomposition {
        m,
        cells,
        metrics: Vec::new(),
        omega_m_radius: 1.0 - 0.5f64.powi(m as i32 + 1),
        omega_prev_radius: 1.0 - 0.5f64.powi(m as i32),
    })
}

/// Metadata of a single image cell by sampling. `sample_density` is the
/// per-side sample count (>= 16 for reported numbers).
pub fn cell_metrics(
    map: &ConformalMap,
    cell: &DyadicCell,
    sample_density: usize,
    boundary: &PointIndex,
) -> Result<CellMetrics> {
    let density = sample_density.max(4);
    let cell_boundary: Vec<Point> = cell
        .boundary_samples(density)
        .iter()
        .map(|&z| map.apply(clamp_into_disk(z)))
        .collect::<Result<Vec<_>>>()?;
    let diam = max_pairwise_distance(&cell_boundary);

    let interior: Vec<Point> = cell
        .interior_samples(density / 2)
        .iter()
        .map(|&z| map.apply(z))
        .collect::<Result<Vec<_>>>()?;
    let cell_index = PointIndex::build(cell_boundary.clone());
    let inscribed_radius = interior
        .iter()
        .map(|&w| cell_index.distance(w))
        .fold(0.0f64, f64::max);

    let boundary_distance = cell_boundary
        .iter()
        .chain(interior.iter())
        .map(|&w| boundary.distance(w))
        .fold(f64::INFINITY, f64::min);

    let lambda = (diam / inscribed_radius)
        .max(diam / boundary_distance)
        .max(boundary_distance / diam);
    Ok(CellMetrics {
        diam,
        inscribed_radius,
        boundary_distance,
        lambda,
    })
}

fn clamp_into_disk(z: Point) -> Point {
    // cell corners can sit exactly on pullback circles; nudge the radius so
    // the open-disk check in `eval` passes
    if z.norm() >= 1.0 {
        z / z.norm() * (1.0 - 1e-12)
    } else {
        z
    }
}

impl Decomposition {
    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    /// Fill `metrics` for every cell against a shared boundary cloud.
    pub fn compute_metrics(&mut self, map: &ConformalMap, sample_density: usize) -> Result<()> {
        let cloud = map.boundary_cloud(4096.max(self.cell_count() * 8))?;
        let boundary = PointIndex::build(cloud);
        self.metrics = self
            .cells
            .iter()
            .map(|cell| cell_metrics(map, cell, sample_density, &boundary))
            .collect::<Result<Vec<_>>>()?;
        Ok(())
    }

    /// Index of the unique level-`m` cell containing `z` (ties to lower `j`).
    pub fn cell_containing(&self, z: Point) -> Option<u32> {
        let r = z.norm();
        let inner = 1.0 - 0.5f64.powi(self.m as i32);
        let outer = self.omega_m_radius;
        if r < inner - 1e-15 || r > outer + 1e-15 {
            return None;
        }
        let alpha = std::f64::consts::PI * 0.5f64.powi(self.m as i32);
        let theta = z.arg().rem_euclid(std::f64::consts::TAU);
        let t = theta / alpha;
        let count = self.cells.len() as u32;
        let mut j = t.floor() as u32;
        // a point exactly on a ray belongs to both adjacent closed cells;
        // the lower index wins
        if (t - t.floor()).abs() < 1e-12 && t >= 1.0 {
            j = (t.floor() as u32) - 1;
        }
        Some(j.min(count - 1))
    }

    /// Largest Whitney constant over all cells (`compute_metrics` first).
    pub fn max_lambda(&self) -> Option<f64> {
        self.metrics
            .iter()
            .map(|m| m.lambda)
            .fold(None, |acc, x| Some(acc.map_or(x, |a: f64| a.max(x))))
    }

    pub fn diam(&self, j: usize) -> f64 {
        self.metrics[j].diam
    }
}

/// The arc pair of cell `j` at truncation depth `n >= 3` (indices cyclic).
pub fn arc_pair(m: u32, j: u32, n: u32) -> Result<ArcPair> {
    if n < 3 {
        return Err(Error::Config(format!("arc pair needs n >= 3, got {n}")));
    }
    let count = 2u32 << m;
    let j = j % count;
    let alpha = std::f64::consts::PI * 0.5f64.powi(m as i32);
    Ok(ArcPair {
        m,
        j,
        n,
        beta_radius: 1.0 - 0.5f64.powi(m as i32 + 1),
        delta_radius: 1.0 - 0.5f64.powi((m + n) as i32),
        theta_min: (j as f64 + 0.5) * alpha,
        theta_max: (j as f64 + 1.0) * alpha,
    })
}

/// Exact Euclidean gap `dist(β_j, β_{j+1})`: both arcs lie on the circle of
/// radius `1 − 2^{−m−1}` with an angular gap of `2^{−m−1}π`, so the distance
/// is the chord of that gap.
pub fn beta_gap(m: u32) -> f64 {
    let rho = 1.0 - 0.5f64.powi(m as i32 + 1);
    let gap_angle = std::f64::consts::PI * 0.5f64.powi(m as i32 + 1);
    2.0 * rho * (gap_angle / 2.0).sin()
}
