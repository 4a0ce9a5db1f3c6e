//! Boundary-layer decomposition: geodesic cuts `γ_j` and the cells `S_j`
//! that tile `J_m = Ω ∖ Ω_m`.
//!
//! Each cut is the discrete image-length minimizer among hyperbolic geodesics
//! joining sampled endpoints of `β_j` and `δ_j^{n_max}`, extended radially
//! toward the boundary as the finite stand-in for the limit curve.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::decomposition::{arc_pair, Decomposition};
use crate::error::{Error, Result};
use crate::grid::PullbackGrid;
use crate::hyperbolic::geodesic_with_samples;
use crate::map::ConformalMap;
use crate::Point;

/// Default hard cap for `ℓ(φ(γ_j)) / diam(R_j)`.
pub const C_GEO_HARD_DEFAULT: f64 = 50.0;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeodesicCut {
    pub j: u32,
    pub n_max: u32,
    /// chosen endpoint on `β_j`
    pub beta_endpoint: Point,
    /// chosen endpoint on `δ_j^{n_max}`
    pub delta_endpoint: Point,
    /// pullback polyline from the β endpoint out to the radial tail end
    pub polyline: Vec<Point>,
    /// `ℓ(φ(γ_j))` including the tail
    pub image_length: f64,
}

impl GeodesicCut {
    /// Angle at which the cut meets the inner circle.
    pub fn inner_angle(&self) -> f64 {
        self.beta_endpoint.arg().rem_euclid(std::f64::consts::TAU)
    }

    /// Angle of the radial tail.
    pub fn outer_angle(&self) -> f64 {
        self.polyline
            .last()
            .unwrap()
            .arg()
            .rem_euclid(std::f64::consts::TAU)
    }
}

/// One boundary-layer cell `S_j`, bounded by the cuts `γ_j`, `γ_{j+1}`, the
/// circle of radius `1 − 2^{−m−1}` and the unit circle.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LayerCell {
    pub j: u32,
    /// closed pullback polygon (cut, outer arc, reversed next cut, inner arc)
    pub polygon: Vec<Point>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Layer {
    pub m: u32,
    pub n_max: u32,
    pub cuts: Vec<GeodesicCut>,
    pub cells: Vec<LayerCell>,
    /// pullback radius of `∂Ω_m`
    pub inner_radius: f64,
    /// radial truncation radius `1 − 2^{−m−n_max−4}`
    pub tail_radius: f64,
    /// max observed `ℓ(φ(γ_j)) / diam(R_j)`
    pub c_geo: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeparationReport {
    /// band of `dist_Ω(γ_j, γ_{j+1}) / diam(R_j)` over consecutive cuts
    pub c_low: f64,
    pub c_high: f64,
    /// min of `dist_Ω(S_i, S_j) / max(diam R_i, diam R_j)` over non-adjacent pairs
    pub c_sep: f64,
    pub pairs_checked: usize,
}

impl SeparationReport {
    pub fn passed(&self) -> bool {
        self.c_low > 0.0 && self.c_sep > 0.0
    }
}

/// Discrete minimizer cut for cell `j`.
///
/// `diam_rj` is the measured image diameter of `R_j`; the construction fails
/// if the minimizer is longer than `c_geo_hard · diam_rj`.
pub fn compute_cut(
    map: &ConformalMap,
    m: u32,
    j: u32,
    n_max: u32,
    k_samples: usize,
    diam_rj: f64,
    c_geo_hard: f64,
) -> Result<GeodesicCut> {
    if n_max < 3 {
        return Err(Error::Config(format!("n_max must be >= 3, got {n_max}")));
    }
    if k_samples < 8 {
        return Err(Error::Config(format!(
            "endpoint sampling needs K >= 8, got {k_samples}"
        )));
    }
    let pair = arc_pair(m, j, n_max)?;
    let beta = pair.beta_samples(k_samples);
    let delta = pair.delta_samples(k_samples);

    let mut best: Option<(f64, Point, Point, Vec<Point>)> = None;
    for &b in &beta {
        for &d in &delta {
            let geo = geodesic_with_samples(b, d, 48)?;
            let len = map.image_length(&geo.polyline)?;
            if best.as_ref().map_or(true, |(bl, ..)| len < *bl - 1e-15) {
                best = Some((len, b, d, geo.polyline));
            }
        }
    }
    let (geo_len, beta_endpoint, delta_endpoint, mut polyline) =
        best.ok_or_else(|| Error::Internal("no endpoint pairs sampled".into()))?;

    // radial tail from the δ endpoint toward the boundary
    let tail_radius = 1.0 - 0.5f64.powi((m + n_max) as i32 + 4);
    let angle = delta_endpoint.arg();
    let r0 = delta_endpoint.norm();
    let tail_steps = 16;
    let mut tail = Vec::with_capacity(tail_steps);
    for i in 1..=tail_steps {
        let r = r0 + (tail_radius - r0) * i as f64 / tail_steps as f64;
        tail.push(Complex64::from_polar(r, angle));
    }
    let mut image_length = geo_len;
    let mut tail_poly = vec![delta_endpoint];
    tail_poly.extend_from_slice(&tail);
    image_length += map.image_length(&tail_poly)?;
    polyline.extend_from_slice(&tail);

    if image_length > c_geo_hard * diam_rj {
        return Err(Error::Construction(format!(
            "cut {j}: image length {image_length:.3e} exceeds {c_geo_hard} x diam(R_j) = {:.3e}",
            c_geo_hard * diam_rj
        )));
    }
    Ok(GeodesicCut {
        j,
        n_max,
        beta_endpoint,
        delta_endpoint,
        polyline,
        image_length,
    })
}

/// All cuts and layer cells for level `m`. `decomp` must carry metrics.
pub fn build_layer(
    map: &ConformalMap,
    decomp: &Decomposition,
    n_max: u32,
    k_samples: usize,
    c_geo_hard: f64,
) -> Result<Layer> {
    if decomp.metrics.len() != decomp.cells.len() {
        return Err(Error::Config(
            "decomposition metrics must be computed before building the layer".into(),
        ));
    }
    let m = decomp.m;
    let count = decomp.cell_count() as u32;
    let cuts: Vec<GeodesicCut> = (0..count)
        .map(|j| {
            compute_cut(
                map,
                m,
                j,
                n_max,
                k_samples,
                decomp.diam(j as usize),
                c_geo_hard,
            )
        })
        .collect::<Result<_>>()?;

    // consecutive cuts must be disjoint
    for j in 0..count as usize {
        let next = (j + 1) % count as usize;
        if polylines_intersect(&cuts[j].polyline, &cuts[next].polyline) {
            return Err(Error::Construction(format!(
                "cuts {j} and {next} intersect"
            )));
        }
    }

    let inner_radius = decomp.omega_m_radius;
    let tail_radius = 1.0 - 0.5f64.powi((m + n_max) as i32 + 4);
    let cells = (0..count)
        .map(|j| {
            let next = (j + 1) % count;
            LayerCell {
                j,
                polygon: cell_polygon(&cuts[j as usize], &cuts[next as usize], inner_radius),
            }
        })
        .collect();

    let c_geo = cuts
        .iter()
        .enumerate()
        .map(|(j, c)| c.image_length / decomp.diam(j))
        .fold(0.0f64, f64::max);

    Ok(Layer {
        m,
        n_max,
        cuts,
        cells,
        inner_radius,
        tail_radius,
        c_geo,
    })
}

/// Closed polygon bounding `S_j` in pullback coordinates. The cut tails are
/// extended to the unit circle so the polygon closes across the collar that
/// the radial truncation leaves out.
fn cell_polygon(cut: &GeodesicCut, next: &GeodesicCut, inner_radius: f64) -> Vec<Point> {
    let mut poly = Vec::new();
    poly.extend_from_slice(&cut.polyline);
    // radial continuation to |z| = 1
    poly.push(Complex64::from_polar(1.0, cut.outer_angle()));

    // outer arc (counterclockwise from this cut to the next)
    let a0 = cut.outer_angle();
    let mut a1 = next.outer_angle();
    while a1 <= a0 {
        a1 += std::f64::consts::TAU;
    }
    let arc_steps = 16;
    for i in 1..arc_steps {
        let a = a0 + (a1 - a0) * i as f64 / arc_steps as f64;
        poly.push(Complex64::from_polar(1.0, a));
    }
    poly.push(Complex64::from_polar(1.0, a1));

    // next cut, reversed, from the circle back to its β endpoint
    let mut rev = next.polyline.clone();
    rev.reverse();
    poly.extend_from_slice(&rev);

    // inner arc (clockwise back to this cut's β endpoint)
    let b1 = next.inner_angle();
    let mut b0 = cut.inner_angle();
    while b0 >= b1 {
        b0 -= std::f64::consts::TAU;
    }
    for i in 1..arc_steps {
        let a = b1 + (b0 - b1) * i as f64 / arc_steps as f64;
        poly.push(Complex64::from_polar(inner_radius, a));
    }
    poly
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b.re - a.re) * (c.im - a.im) - (b.im - a.im) * (c.re - a.re)
}

fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    (d1 * d2 < 0.0) && (d3 * d4 < 0.0)
}

fn polylines_intersect(p: &[Point], q: &[Point]) -> bool {
    for s in p.windows(2) {
        for t in q.windows(2) {
            if segments_intersect(s[0], s[1], t[0], t[1]) {
                return true;
            }
        }
    }
    false
}

/// Even-odd crossing test against a closed polygon.
fn point_in_polygon(z: Point, polygon: &[Point]) -> bool {
    let mut inside = false;
    let n = polygon.len();
    let mut jj = n - 1;
    for i in 0..n {
        let pi = polygon[i];
        let pj = polygon[jj];
        if (pi.im > z.im) != (pj.im > z.im) {
            let x = pi.re + (z.im - pi.im) / (pj.im - pi.im) * (pj.re - pi.re);
            if z.re < x {
                inside = !inside;
            }
        }
        jj = i;
    }
    inside
}

impl Layer {
    /// Index of the cell whose inner angles bracket `theta`.
    fn angular_bracket(&self, theta: f64) -> usize {
        let count = self.cuts.len();
        for j in 0..count {
            let a0 = self.cuts[j].inner_angle();
            let mut a1 = self.cuts[(j + 1) % count].inner_angle();
            let mut t = theta;
            if a1 <= a0 {
                a1 += std::f64::consts::TAU;
            }
            if t < a0 {
                t += std::f64::consts::TAU;
            }
            if t >= a0 && t <= a1 {
                return j;
            }
        }
        0
    }

    /// Index of the layer cell containing the pullback point (ties to lower
    /// `j`); total on the annulus `{|z| ≥ inner_radius}`.
    pub fn cell_containing(&self, z: Point) -> Option<u32> {
        if z.norm() < self.inner_radius - 1e-12 || z.norm() >= 1.0 {
            return None;
        }
        let count = self.cells.len();
        let theta = z.arg().rem_euclid(std::f64::consts::TAU);
        // fast path: the angular bracket and its neighbors, lowest index first
        let j0 = self.angular_bracket(theta);
        let mut near = [
            (j0 + count - 1) % count,
            j0,
            (j0 + 1) % count,
        ];
        near.sort_unstable();
        for &j in &near {
            if point_in_polygon(z, &self.cells[j].polygon) {
                return Some(j as u32);
            }
        }
        for cell in &self.cells {
            if point_in_polygon(z, &cell.polygon) {
                return Some(cell.j);
            }
        }
        // numerical fallback for points exactly on a cut
        Some(j0 as u32)
    }
}

/// Grid-based check of the separation estimates: consecutive-cut distances
/// against `diam(R_j)` and non-adjacent cell separation.
pub fn verify_separation(
    grid: &PullbackGrid,
    layer: &Layer,
    decomp: &Decomposition,
) -> Result<SeparationReport> {
    let count = layer.cuts.len();
    let cut_nodes: Vec<Vec<u32>> = layer
        .cuts
        .iter()
        .map(|cut| {
            let mut nodes: Vec<u32> = cut
                .polyline
                .iter()
                .filter_map(|&p| grid.nearest_node(p).ok())
                .collect();
            nodes.sort_unstable();
            nodes.dedup();
            nodes
        })
        .collect();

    // (3.5): consecutive cuts
    let mut c_low = f64::INFINITY;
    let mut c_high: f64 = 0.0;
    for j in 0..count {
        let next = (j + 1) % count;
        let field = grid.distance_field(&cut_nodes[j], f64::INFINITY);
        let d = cut_nodes[next]
            .iter()
            .map(|&n| field[n as usize])
            .fold(f64::INFINITY, f64::min);
        if !d.is_finite() {
            return Err(Error::Internal("cut nodes unreachable in grid".into()));
        }
        let ratio = d / decomp.diam(j);
        c_low = c_low.min(ratio);
        c_high = c_high.max(ratio);
    }

    // (3.6): non-adjacent cells, excluded when the corresponding R's touch
    let mut cell_nodes: Vec<Vec<u32>> = vec![Vec::new(); count];
    for node in 0..grid.node_count() as u32 {
        let p = grid.position(node);
        if p.norm() >= layer.inner_radius - 1e-12 {
            if let Some(j) = layer.cell_containing(p) {
                cell_nodes[j as usize].push(node);
            }
        }
    }
    let mut c_sep = f64::INFINITY;
    let mut pairs = 0usize;
    for i in 0..count {
        if cell_nodes[i].is_empty() {
            return Err(Error::Resolution(format!("layer cell {i} has no grid nodes")));
        }
        let field = grid.distance_field(&cell_nodes[i], f64::INFINITY);
        for j in 0..count {
            // S_i vs S_j needs R_i ∩ R_j = ∅, i.e. cyclic index gap >= 2
            let gap = (i as i64 - j as i64).rem_euclid(count as i64).min(
                (j as i64 - i as i64).rem_euclid(count as i64),
            );
            if gap < 2 {
                continue;
            }
            let d = cell_nodes[j]
                .iter()
                .map(|&n| field[n as usize])
                .fold(f64::INFINITY, f64::min);
            let denom = decomp.diam(i).max(decomp.diam(j));
            c_sep = c_sep.min(d / denom);
            pairs += 1;
        }
    }

    Ok(SeparationReport {
        c_low,
        c_high,
        c_sep,
        pairs_checked: pairs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposition::build_cells;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn decomp_with_metrics(map: &ConformalMap, m: u32) -> Decomposition {
        let mut d = build_cells(m).unwrap();
        d.compute_metrics(map, 16).unwrap();
        d
    }

    #[test]
    fn identity_cut_is_radial() {
        let map = ConformalMap::identity();
        let d = decomp_with_metrics(&map, 2);
        let cut = compute_cut(&map, 2, 0, 6, 8, d.diam(0), C_GEO_HARD_DEFAULT).unwrap();
        // concentric arcs: the minimizer is radial, so β and δ endpoints share
        // an angle
        assert!(
            (cut.beta_endpoint.arg() - cut.delta_endpoint.arg()).abs() < 1e-12,
            "not radial: {} vs {}",
            cut.beta_endpoint.arg(),
            cut.delta_endpoint.arg()
        );
        // geodesic part length 2^{−m−1} − 2^{−m−n_max}
        let geo_part = 0.5f64.powi(3) - 0.5f64.powi(8);
        let tail_part = 0.5f64.powi(8) - 0.5f64.powi(12);
        assert!(
            (cut.image_length - geo_part - tail_part).abs() < 1e-9,
            "length {}",
            cut.image_length
        );
    }

    #[test]
    fn n_max_and_k_validation() {
        let map = ConformalMap::identity();
        assert!(compute_cut(&map, 3, 0, 2, 8, 0.1, 50.0).is_err());
        assert!(compute_cut(&map, 3, 0, 6, 4, 0.1, 50.0).is_err());
    }

    #[test]
    fn hard_cap_triggers_construction_error() {
        let map = ConformalMap::identity();
        let err = compute_cut(&map, 3, 0, 6, 8, 1e-6, 1.0).unwrap_err();
        assert!(matches!(err, Error::Construction(_)));
    }

    #[test]
    fn identity_layer_symmetric_cells() {
        let map = ConformalMap::identity();
        let d = decomp_with_metrics(&map, 2);
        let layer = build_layer(&map, &d, 6, 8, C_GEO_HARD_DEFAULT).unwrap();
        assert_eq!(layer.cells.len(), 8);
        // cuts uniformly rotated by π/4
        for j in 0..8 {
            let expect = (j as f64 + 0.5) * std::f64::consts::FRAC_PI_4;
            let got = layer.cuts[j].inner_angle();
            assert!((got - expect).abs() < 1e-12, "cut {j}: {got} vs {expect}");
        }
    }

    #[test]
    fn membership_total_and_unique_near_boundary() {
        let map = ConformalMap::identity();
        let d = decomp_with_metrics(&map, 2);
        let layer = build_layer(&map, &d, 6, 8, C_GEO_HARD_DEFAULT).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..2000 {
            let r = layer.inner_radius
                + rng.gen::<f64>() * (0.9999 - layer.inner_radius);
            let theta = rng.gen::<f64>() * std::f64::consts::TAU;
            let z = Complex64::from_polar(r, theta);
            let j = layer.cell_containing(z).expect("uncovered layer point");
            assert!(j < 8);
        }
        // a specific far-out point
        let z = Complex64::from_polar(0.99, 0.1);
        assert!(layer.cell_containing(z).is_some());
    }

    #[test]
    fn layer_cells_tile_annulus_monte_carlo() {
        // Monte-Carlo area oracle: membership-weighted area of the cells must
        // reproduce the annulus area
        let map = ConformalMap::cardioid();
        let d = decomp_with_metrics(&map, 3);
        let layer = build_layer(&map, &d, 5, 8, C_GEO_HARD_DEFAULT).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let n = 1_000_000usize;
        let mut hits = 0usize;
        // sample uniformly in the annulus inner_radius <= |z| < 1
        let r2_min = layer.inner_radius * layer.inner_radius;
        for _ in 0..n {
            let r = (r2_min + rng.gen::<f64>() * (1.0 - r2_min)).sqrt();
            let theta = rng.gen::<f64>() * std::f64::consts::TAU;
            if layer
                .cell_containing(Complex64::from_polar(r, theta))
                .is_some()
            {
                hits += 1;
            }
        }
        let coverage = hits as f64 / n as f64;
        assert!(
            (coverage - 1.0).abs() < 1e-3,
            "membership coverage {coverage}"
        );
    }

    #[test]
    fn cardioid_cut_sweep_vs_dense_endpoint_oracle() {
        let map = ConformalMap::cardioid();
        let m = 3;
        let d = decomp_with_metrics(&map, m);
        for j in (0..16).step_by(5) {
            let cut = compute_cut(&map, m, j, 5, 8, d.diam(j as usize), C_GEO_HARD_DEFAULT)
                .unwrap();
            let ratio = cut.image_length / d.diam(j as usize);
            assert!(ratio.is_finite() && ratio < C_GEO_HARD_DEFAULT);
            // 4K-endpoint brute force: minimum within 2%
            let fine = compute_cut(&map, m, j, 5, 32, d.diam(j as usize), C_GEO_HARD_DEFAULT)
                .unwrap();
            assert!(
                cut.image_length <= fine.image_length * 1.02 + 1e-12,
                "j={j}: {} vs oracle {}",
                cut.image_length,
                fine.image_length
            );
        }
    }

    #[test]
    fn consecutive_cuts_disjoint_all_maps() {
        for map in ConformalMap::catalog() {
            for m in [2u32, 4] {
                let d = decomp_with_metrics(&map, m);
                let layer = build_layer(&map, &d, 4, 8, C_GEO_HARD_DEFAULT).unwrap();
                let count = layer.cuts.len();
                for j in 0..count {
                    assert!(!polylines_intersect(
                        &layer.cuts[j].polyline,
                        &layer.cuts[(j + 1) % count].polyline
                    ));
                }
                // cut stays in the closed angular sector of its arc pair
                for (j, cut) in layer.cuts.iter().enumerate() {
                    let pair = arc_pair(m, j as u32, 4).unwrap();
                    for p in &cut.polyline {
                        let t = p.arg().rem_euclid(std::f64::consts::TAU);
                        assert!(
                            t >= pair.theta_min - 1e-9 && t <= pair.theta_max + 1e-9,
                            "map {} cut {j} leaves sector: angle {t}",
                            map.name
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn neighbor_diams_comparable() {
        // diam(R_j) ~ diam(R_{j+1}) with one constant per map
        for map in ConformalMap::catalog() {
            let d = decomp_with_metrics(&map, 4);
            let count = d.cell_count();
            let mut worst: f64 = 1.0;
            for j in 0..count {
                let a = d.diam(j);
                let b = d.diam((j + 1) % count);
                worst = worst.max(a / b).max(b / a);
            }
            assert!(worst < 10.0, "map {}: neighbor diam ratio {worst}", map.name);
        }
    }

    #[test]
    fn identity_separation_band_matches_geometry() {
        let map = ConformalMap::identity();
        let d = decomp_with_metrics(&map, 3);
        let layer = build_layer(&map, &d, 4, 8, C_GEO_HARD_DEFAULT).unwrap();
        let grid = PullbackGrid::build(&map, layer.m + layer.n_max + 5, 8, 8192).unwrap();
        let report = verify_separation(&grid, &layer, &d).unwrap();
        assert!(report.passed(), "{report:?}");
        // radial cuts spaced by α = π/8 at radius ≥ 15/16: closed-form gap
        // ~ 2·(15/16)·sin(π/16); diam(R_j) ≈ 0.236
        assert!(report.c_low > 0.3 && report.c_high < 3.0, "{report:?}");
    }
}
