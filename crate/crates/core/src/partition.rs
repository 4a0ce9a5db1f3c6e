//! Boundary-layer partition of unity: cutoff `ψ`, bumps `φ_j`, and the
//! normalized family `ψ/Φ`, `φ_j/Φ` with `Φ = ψ + Σ_j φ_j`.
//!
//! All distance queries run through sampled clouds (Euclidean distances to
//! `J_m` and `∂Ω`) or the weighted pullback grid (`dist_Ω` to the layer
//! cells); the evaluators are continuous in the pullback variable so that
//! finite-difference Lipschitz estimates are meaningful.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::decomposition::Decomposition;
use crate::error::{Error, Result};
use crate::grid::PullbackGrid;
use crate::layer::Layer;
use crate::map::ConformalMap;
use crate::util::PointIndex;
use crate::Point;

/// Smallest admissible `c2 − 1`; the halving search fails below this.
const C2_MINUS_ONE_FLOOR: f64 = 1.0 / 64.0;
/// Safety margin applied to the sampled constant estimates.
const SAFETY: f64 = 1.1;
const BUILD_SEED: u64 = 0x00C0_FFEE;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PartitionConfig {
    pub c1: f64,
    /// support dilation factor, > 1
    pub c2: f64,
    /// finite-difference step in pullback coordinates
    pub h: f64,
    /// sample count on the rim of `Ω_m` for the `J_m` distance cloud
    pub jm_sample_density: usize,
    pub grid_max_level: u32,
    pub grid_angular_base: usize,
    pub grid_angular_max: usize,
    /// sampled estimates (C1, C2, C3) behind the closed-form `c1`
    pub c_hat: (f64, f64, f64),
    /// whether the closed-form recipe had to be replaced by doubling `c1`
    pub fallback_doubling: bool,
}

/// One point evaluation of the partition.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PartitionValues {
    pub psi: f64,
    /// nonzero bumps `(j, φ_j)`
    pub bumps: Vec<(u32, f64)>,
    /// `Φ = ψ + Σ φ_j`
    pub phi_total: f64,
    pub psi_normalized: f64,
    pub bumps_normalized: Vec<(u32, f64)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PartitionReport {
    pub samples: usize,
    pub min_phi: f64,
    /// max |1 − (ψ + Σφ_j)/Φ| over samples (normalization defect)
    pub max_sum_defect: f64,
    pub max_active_bumps: usize,
    /// support-separation checks (3.7)/(3.8) at the final `c2`
    pub supports_ok: bool,
    /// max over samples of |∇(normalized member)| · diam(R_j)
    pub lipschitz_c: f64,
    /// same constant at step h/2
    pub lipschitz_c_half: f64,
}

pub struct Partition {
    pub map: ConformalMap,
    pub m: u32,
    pub config: PartitionConfig,
    pub layer: Layer,
    grid: PullbackGrid,
    /// per-cell image diameters `diam(R_j)`
    diams: Vec<f64>,
    /// pullback radius of `Ω_{m−1}`
    omega_prev_radius: f64,
    /// pullback radius of `Ω_m` (= inner rim of `J_m`)
    omega_m_radius: f64,
    /// Euclidean cloud of `J_m` (rim of `Ω_m` plus `∂Ω`)
    jm_index: PointIndex,
    boundary_index: PointIndex,
    /// per grid node: sorted `(j, dist_Ω(node, S_j))` entries within cutoff
    node_bumps: Vec<Vec<(u32, f64)>>,
    /// inner rim arc `[a_j, b_j]` of each `S_j` (cut endpoint angles)
    rim_arcs: Vec<(f64, f64)>,
}

impl std::fmt::Debug for Partition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Partition")
            .field("map", &self.map.name)
            .field("m", &self.m)
            .field("config", &self.config)
            .finish_non_exhaustive()
    }
}

/// Estimate the §3.3 constants for `(map, m, layer)` without keeping the
/// evaluators.
pub fn choose_constants(
    map: &ConformalMap,
    decomp: &Decomposition,
    layer: &Layer,
) -> Result<PartitionConfig> {
    Ok(Partition::build(map, decomp, layer)?.config)
}

impl Partition {
    pub fn build(map: &ConformalMap, decomp: &Decomposition, layer: &Layer) -> Result<Self> {
        if decomp.m != layer.m {
            return Err(Error::Config(format!(
                "decomposition level {} does not match layer level {}",
                decomp.m, layer.m
            )));
        }
        if decomp.metrics.len() != decomp.cells.len() {
            return Err(Error::Config(
                "decomposition metrics must be computed before the partition".into(),
            ));
        }
        let m = decomp.m;
        let n_max = layer.n_max;
        let grid_max_level = m + n_max + 5;
        let grid_angular_base = 16;
        let grid_angular_max = 8192;
        let grid = PullbackGrid::build(map, grid_max_level, grid_angular_base, grid_angular_max)?;

        let diams: Vec<f64> = (0..decomp.cell_count()).map(|j| decomp.diam(j)).collect();
        let count = diams.len();

        // Euclidean clouds: J_m is sampled on the rim of Ω_m plus ∂Ω.
        let jm_sample_density = (1usize << (m + n_max).min(16)).max(4096);
        let rim_radius = decomp.omega_m_radius;
        let mut jm_cloud: Vec<Point> = (0..jm_sample_density)
            .map(|i| {
                let theta = i as f64 * std::f64::consts::TAU / jm_sample_density as f64;
                map.apply(Complex64::from_polar(rim_radius, theta))
            })
            .collect::<Result<_>>()?;
        let boundary_cloud = map.boundary_cloud(8192)?;
        jm_cloud.extend_from_slice(&boundary_cloud);
        let jm_index = PointIndex::build(jm_cloud);
        let boundary_index = PointIndex::build(boundary_cloud);

        // grid nodes of each layer cell (one membership pass), then one
        // distance field per cell, inverted into per-node bump lists
        let mut cell_nodes: Vec<Vec<u32>> = vec![Vec::new(); count];
        for node in 0..grid.node_count() as u32 {
            let p = grid.position(node);
            if p.norm() >= layer.inner_radius - 1e-12 {
                if let Some(j) = layer.cell_containing(p) {
                    cell_nodes[j as usize].push(node);
                }
            }
        }
        for (j, nodes) in cell_nodes.iter().enumerate() {
            if nodes.is_empty() {
                return Err(Error::Resolution(format!(
                    "layer cell {j} captured no grid nodes"
                )));
            }
        }
        // cutoff at the widest support the halving search can request
        // ((c2 − 1) = 2, support radius diam(R_j))
        let mut node_bumps: Vec<Vec<(u32, f64)>> = vec![Vec::new(); grid.node_count()];
        for j in 0..count {
            let cutoff = diams[j];
            let field = grid.distance_field(&cell_nodes[j], cutoff);
            for (node, &d) in field.iter().enumerate() {
                if d.is_finite() && d <= cutoff {
                    node_bumps[node].push((j as u32, d));
                }
            }
        }
        for list in &mut node_bumps {
            list.sort_unstable_by_key(|&(j, _)| j);
        }

        let mut rng = ChaCha8Rng::seed_from_u64(BUILD_SEED);

        // C1: smallest c with ψ = 1 on Ω_{m−1}, i.e. sup dist(x,∂Ω)/dist(x,J_m)
        let omega_prev_radius = decomp.omega_prev_radius;
        let mut c1_hat: f64 = 0.0;
        for _ in 0..2000 {
            let r = rng.gen::<f64>().sqrt() * omega_prev_radius;
            let theta = rng.gen::<f64>() * std::f64::consts::TAU;
            let x = map.apply(Complex64::from_polar(r, theta))?;
            let dj = jm_index.distance(x);
            if dj > 1e-12 {
                c1_hat = c1_hat.max(boundary_index.distance(x) / dj);
            }
        }

        // C2 and C3 over annulus samples: dist_Ω(x, S_{j−1} ∪ S_j) vs
        // dist(x, J_m), and dist(x, ∂Ω) vs diam(R_j)
        let r_in = 1.0 - 0.5f64.powi(m as i32);
        let r_out = decomp.omega_m_radius;
        let mut c2_hat: f64 = 0.0;
        let mut c3_hat: f64 = 0.0;
        for _ in 0..4000 {
            let r = r_in + rng.gen::<f64>() * (r_out - r_in);
            let theta = rng.gen::<f64>() * std::f64::consts::TAU;
            let z = Complex64::from_polar(r, theta);
            let j = match decomp.cell_containing(z) {
                Some(j) => j as usize,
                None => continue,
            };
            let x = map.apply(z)?;
            let node = grid.nearest_node(z)?;
            let prev = ((j + count - 1) % count) as u32;
            let d_s = node_bumps[node as usize]
                .iter()
                .filter(|&&(jj, _)| jj == j as u32 || jj == prev)
                .map(|&(_, d)| d)
                .fold(f64::INFINITY, f64::min);
            let d_j = jm_index.distance(x);
            if d_s.is_finite() && d_j > 1e-12 {
                c2_hat = c2_hat.max(d_s / d_j);
            }
            c3_hat = c3_hat.max(boundary_index.distance(x) / diams[j]);
        }
        if !(c2_hat > 0.0) {
            return Err(Error::Resolution(
                "no annulus sample reached a layer cell within the field cutoff".into(),
            ));
        }

        // c2 by halving (c2 − 1) until the support separations (3.7)/(3.8) hold
        let mut c2_minus_one = 2.0f64;
        loop {
            if supports_separated(&grid, &node_bumps, &diams, c2_minus_one, omega_prev_radius) {
                break;
            }
            c2_minus_one /= 2.0;
            if c2_minus_one < C2_MINUS_ONE_FLOOR {
                return Err(Error::Construction(format!(
                    "support checks still fail at (c2 - 1) = {}",
                    C2_MINUS_ONE_FLOOR
                )));
            }
        }
        let c2 = 1.0 + c2_minus_one;
        let c1 = SAFETY * 2.0 * c1_hat.max(c2_hat * c3_hat / c2_minus_one);

        let rim_arcs: Vec<(f64, f64)> = (0..count)
            .map(|j| {
                (
                    layer.cuts[j].inner_angle(),
                    layer.cuts[(j + 1) % count].inner_angle(),
                )
            })
            .collect();

        let mut partition = Partition {
            map: map.clone(),
            m,
            config: PartitionConfig {
                c1,
                c2,
                h: 0.5f64.powi(m as i32 + 6),
                jm_sample_density,
                grid_max_level,
                grid_angular_base,
                grid_angular_max,
                c_hat: (c1_hat, c2_hat, c3_hat),
                fallback_doubling: false,
            },
            layer: layer.clone(),
            grid,
            diams,
            omega_prev_radius,
            omega_m_radius: decomp.omega_m_radius,
            jm_index,
            boundary_index,
            node_bumps,
            rim_arcs,
        };

        // validate the closed-form choice; fall back to doubling c1 if the
        // sampled estimates were too loose
        for attempt in 0..=12 {
            if partition.quick_validate(&mut rng)? {
                return Ok(partition);
            }
            if attempt == 12 {
                break;
            }
            partition.config.c1 *= 2.0;
            partition.config.fallback_doubling = true;
        }
        Err(Error::Construction(
            "partition lower bound not reached even after doubling c1".into(),
        ))
    }

    /// ψ = 1 on Ω_{m−1} samples and Φ ≥ 1/4 on layer-region samples.
    fn quick_validate(&self, rng: &mut ChaCha8Rng) -> Result<bool> {
        for _ in 0..1500 {
            let r = rng.gen::<f64>().sqrt() * self.omega_prev_radius;
            let theta = rng.gen::<f64>() * std::f64::consts::TAU;
            let v = self.evaluate(Complex64::from_polar(r, theta))?;
            if v.psi < 1.0 {
                return Ok(false);
            }
        }
        let cap = self.grid.cap_radius();
        for _ in 0..1500 {
            let r = self.omega_prev_radius + rng.gen::<f64>() * (cap - self.omega_prev_radius);
            let theta = rng.gen::<f64>() * std::f64::consts::TAU;
            let v = self.evaluate(Complex64::from_polar(r, theta))?;
            if v.phi_total < 0.25 {
                return Ok(false);
            }
        }
        // targeted sweep of the seam just below the rim, where ψ decays and
        // only the rim-arc bump candidates keep Φ up: cut angles and mid-arcs
        let h = self.config.h;
        for &(a, b) in &self.rim_arcs {
            let span = (b - a).rem_euclid(std::f64::consts::TAU);
            for theta in [a, a + 0.5 * span] {
                for eps in [1e-9, h / 4.0, h] {
                    let r = (self.layer.inner_radius - eps).max(0.0);
                    let v = self.evaluate(Complex64::from_polar(r, theta))?;
                    if v.phi_total < 0.25 {
                        return Ok(false);
                    }
                }
            }
        }
        Ok(true)
    }

    /// Continuous `dist_Ω(φ(z), S_j)` through the grid: minimum over the
    /// nearest node and its neighbors of stored field value plus the image
    /// length of the connecting straight segment.
    fn dist_to_cell(&self, z: Point, node: u32, j: u32) -> Result<f64> {
        let lookup = |n: u32| -> Option<f64> {
            let list = &self.node_bumps[n as usize];
            list.binary_search_by_key(&j, |&(jj, _)| jj)
                .ok()
                .map(|i| list[i].1)
        };
        let mut best = f64::INFINITY;
        let mut consider = |n: u32| -> Result<()> {
            if let Some(d) = lookup(n) {
                let p = self.grid.position(n);
                let hop = self.map.eval((z + p) / 2.0)?.1.norm() * (z - p).norm();
                best = best.min(d + hop);
            }
            Ok(())
        };
        consider(node)?;
        for &(nb, _) in self.grid.neighbors(node) {
            consider(nb)?;
        }
        Ok(best)
    }

    /// Image distance from `z` to the nearest point of the inner rim arc of
    /// `S_j` (a straight pullback segment, so an upper-bound estimate of
    /// `dist_Ω(φ(z), S_j)` that is continuous in `z` and exact in the limit).
    fn rim_distance(&self, z: Point, j: u32) -> Result<f64> {
        let tau = std::f64::consts::TAU;
        let (a, b) = self.rim_arcs[j as usize];
        let span = (b - a).rem_euclid(tau);
        let off = (z.arg() - a).rem_euclid(tau);
        let angle = if off <= span {
            z.arg()
        } else if off - span <= tau - off {
            b
        } else {
            a
        };
        let p = Complex64::from_polar(self.layer.inner_radius, angle);
        Ok(self.map.eval((z + p) / 2.0)?.1.norm() * (z - p).norm())
    }

    /// Evaluate `ψ`, the nonzero `φ_j`, `Φ` and the normalized members at a
    /// pullback point.
    pub fn evaluate(&self, z: Point) -> Result<PartitionValues> {
        if z.norm() > self.grid.cap_radius() + 1e-12 {
            return Err(Error::Domain(format!(
                "partition evaluation at |z| = {} beyond grid cap {}",
                z.norm(),
                self.grid.cap_radius()
            )));
        }
        // ψ vanishes identically on J_m (pullback radius ≥ rim radius)
        let psi = if z.norm() >= self.omega_m_radius - 1e-15 {
            0.0
        } else {
            let x = self.map.apply(z)?;
            let dj = self.jm_index.distance(x);
            let db = self.boundary_index.distance(x);
            (self.config.c1 * dj / db).min(1.0)
        };

        let mut bumps = Vec::new();
        if z.norm() >= self.omega_prev_radius - 0.25 * (1.0 - self.omega_prev_radius) {
            let node = self.grid.nearest_node(z)?;
            let inside = self.layer.cell_containing(z);
            let mut candidates: Vec<u32> = self.node_bumps[node as usize]
                .iter()
                .map(|&(j, _)| j)
                .collect();
            for &(nb, _) in self.grid.neighbors(node) {
                candidates.extend(self.node_bumps[nb as usize].iter().map(|&(j, _)| j));
            }
            if let Some(j) = inside {
                candidates.push(j);
            }
            // the cell under the radial projection onto the rim and its
            // neighbors: their rim arcs give a grid-free distance candidate
            // that stays sharp in the collar below the rim, where the grid's
            // angular spacing is coarser than the support width
            let proj = Complex64::from_polar(self.layer.inner_radius + 1e-9, z.arg());
            if let Some(j0) = self.layer.cell_containing(proj) {
                let n = self.layer.cuts.len() as u32;
                candidates.push(j0);
                candidates.push((j0 + 1) % n);
                candidates.push((j0 + n - 1) % n);
            }
            candidates.sort_unstable();
            candidates.dedup();
            let scale = self.config.c2 - 1.0;
            for j in candidates {
                let d = if inside == Some(j) {
                    0.0
                } else {
                    self.dist_to_cell(z, node, j)?.min(self.rim_distance(z, j)?)
                };
                let phi = 1.0 - 2.0 * d / (scale * self.diams[j as usize]);
                if phi > 0.0 {
                    bumps.push((j, phi.min(1.0)));
                }
            }
        }

        let phi_total = psi + bumps.iter().map(|&(_, v)| v).sum::<f64>();
        if phi_total <= 0.0 {
            return Err(Error::Internal(format!(
                "partition normalization vanished at {z}"
            )));
        }
        let psi_normalized = psi / phi_total;
        let bumps_normalized = bumps.iter().map(|&(j, v)| (j, v / phi_total)).collect();
        Ok(PartitionValues {
            psi,
            bumps,
            phi_total,
            psi_normalized,
            bumps_normalized,
        })
    }

    /// Grid cap radius of the evaluator.
    pub fn cap_radius(&self) -> f64 {
        self.grid.cap_radius()
    }

    pub fn diam(&self, j: usize) -> f64 {
        self.diams[j]
    }

    /// Sampled verification report: Φ lower bound, normalization, overlap
    /// count, support separations and the finite-difference Lipschitz bound.
    pub fn verify_partition(&self, sample_count: usize, seed: u64) -> Result<PartitionReport> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cap = self.grid.cap_radius();
        let mut min_phi = f64::INFINITY;
        let mut max_sum_defect: f64 = 0.0;
        let mut max_active_bumps = 0usize;
        for _ in 0..sample_count {
            // quasi-uniform over the evaluable disk, biased toward the layer
            // where the partition is nontrivial
            let r = if rng.gen::<bool>() {
                rng.gen::<f64>().sqrt() * cap
            } else {
                self.omega_prev_radius + rng.gen::<f64>() * (cap - self.omega_prev_radius)
            };
            let theta = rng.gen::<f64>() * std::f64::consts::TAU;
            let v = self.evaluate(Complex64::from_polar(r, theta))?;
            min_phi = min_phi.min(v.phi_total);
            max_active_bumps = max_active_bumps.max(v.bumps.len());
            let sum = v.psi_normalized + v.bumps_normalized.iter().map(|&(_, x)| x).sum::<f64>();
            max_sum_defect = max_sum_defect.max((sum - 1.0).abs());
        }

        let supports_ok = supports_separated(
            &self.grid,
            &self.node_bumps,
            &self.diams,
            self.config.c2 - 1.0,
            self.omega_prev_radius,
        );

        let lipschitz_c = self.lipschitz_constant(self.config.h, 400, seed ^ 0x9E37)?;
        let lipschitz_c_half = self.lipschitz_constant(self.config.h / 2.0, 400, seed ^ 0x9E37)?;

        Ok(PartitionReport {
            samples: sample_count,
            min_phi,
            max_sum_defect,
            max_active_bumps,
            supports_ok,
            lipschitz_c,
            lipschitz_c_half,
        })
    }

    /// Max over samples of |∇(normalized member)| · diam(R_j), central
    /// differences at step `h` in pullback coordinates scaled by the local
    /// conformal factor.
    fn lipschitz_constant(&self, h: f64, samples: usize, seed: u64) -> Result<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cap = self.grid.cap_radius() - 2.0 * h;
        let r_lo = 1.0 - 0.5f64.powi(self.m as i32 - 1);
        let mut worst: f64 = 0.0;
        for _ in 0..samples {
            let r = r_lo + rng.gen::<f64>() * (cap - r_lo);
            let theta = rng.gen::<f64>() * std::f64::consts::TAU;
            let z = Complex64::from_polar(r, theta);
            let vals = [
                self.evaluate(z + Complex64::new(h, 0.0))?,
                self.evaluate(z - Complex64::new(h, 0.0))?,
                self.evaluate(z + Complex64::new(0.0, h))?,
                self.evaluate(z - Complex64::new(0.0, h))?,
            ];
            // image-plane gradient: pullback differences over |φ'|
            let dphi = self.map.eval(z)?.1.norm();
            let mut members: Vec<u32> = Vec::new();
            for v in &vals {
                members.extend(v.bumps_normalized.iter().map(|&(j, _)| j));
            }
            members.sort_unstable();
            members.dedup();
            let get = |v: &PartitionValues, j: u32| {
                v.bumps_normalized
                    .iter()
                    .find(|&&(jj, _)| jj == j)
                    .map_or(0.0, |&(_, x)| x)
            };
            for j in members {
                let gx = (get(&vals[0], j) - get(&vals[1], j)) / (2.0 * h);
                let gy = (get(&vals[2], j) - get(&vals[3], j)) / (2.0 * h);
                let grad = (gx * gx + gy * gy).sqrt() / dphi;
                worst = worst.max(grad * self.diams[j as usize]);
            }
            let gx = (vals[0].psi_normalized - vals[1].psi_normalized) / (2.0 * h);
            let gy = (vals[2].psi_normalized - vals[3].psi_normalized) / (2.0 * h);
            if let Some(j) = self.layer.cell_containing(z) {
                let grad = (gx * gx + gy * gy).sqrt() / dphi;
                worst = worst.max(grad * self.diams[j as usize]);
            }
        }
        Ok(worst)
    }
}

/// Support checks (3.7) and (3.8) at node resolution: the dilated supports
/// `c2 S_i` of non-adjacent cells must be disjoint and must avoid `Ω_{m−1}`.
fn supports_separated(
    grid: &PullbackGrid,
    node_bumps: &[Vec<(u32, f64)>],
    diams: &[f64],
    c2_minus_one: f64,
    omega_prev_radius: f64,
) -> bool {
    let count = diams.len() as i64;
    let radius = |j: u32| 0.5 * c2_minus_one * diams[j as usize];
    for (node, list) in node_bumps.iter().enumerate() {
        let active: Vec<u32> = list
            .iter()
            .filter(|&&(j, d)| d <= radius(j))
            .map(|&(j, _)| j)
            .collect();
        if active.is_empty() {
            continue;
        }
        // (3.8): support nodes stay out of the pullback of Ω_{m−1}
        if grid.position(node as u32).norm() <= omega_prev_radius + 1e-15 {
            return false;
        }
        // (3.7): no node carried by two non-adjacent supports
        for a in 0..active.len() {
            for b in a + 1..active.len() {
                let (i, j) = (active[a] as i64, active[b] as i64);
                let gap = (i - j).rem_euclid(count).min((j - i).rem_euclid(count));
                if gap >= 2 {
                    return false;
                }
            }
        }
    }
    true
}
