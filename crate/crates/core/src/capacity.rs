//! Discrete conformal-capacity lab: 5-point Laplace relaxation on an
//! axis-aligned lattice, the §2 property checks (ring law, monotonicity,
//! positivity, conformal invariance) and the Lemma 2.2 separation check.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::PullbackGrid;
use crate::map::ConformalMap;
use crate::util::KahanSum;
use crate::Point;

pub const DEFAULT_TOLERANCE: f64 = 1e-8;
pub const DEFAULT_MAX_SWEEPS: usize = 200_000;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CapacityProblem {
    /// lattice is `n × n` over `[x0, x0 + (n−1)h] × [y0, y0 + (n−1)h]`
    pub n: usize,
    pub x0: f64,
    pub y0: f64,
    pub h: f64,
    /// in-domain mask, row-major
    pub domain: Vec<bool>,
    pub e_nodes: Vec<u32>,
    pub f_nodes: Vec<u32>,
    pub tolerance: f64,
    pub max_sweeps: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CapacityResult {
    /// discrete Dirichlet (gradient) energy of the minimizer
    pub value: f64,
    /// full `‖u‖²_{W^{1,2}}` = gradient energy + `Σ u² h²`
    pub full_norm: f64,
    pub residual: f64,
    pub sweeps: usize,
    pub u: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimatesReport {
    /// per r/R in {1/2, 1/4, 1/8}: computed / (2π / log(R/r))
    pub ring_ratios: Vec<f64>,
    pub monotone_ok: bool,
    /// observed min capacity over the positive-lower-bound test pairs
    pub lower_bound: f64,
    /// per map with an inverse: Cap(E,F,𝔻) / Cap(φE,φF,Ω)
    pub invariance_ratios: Vec<(String, f64)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Lemma22Report {
    pub c0: f64,
    pub pairs_tested: usize,
    pub pairs_excluded: usize,
    /// min over qualifying pairs of min{diam_Ω E, diam_Ω F} / dist_Ω(E, F)
    pub c_of_c0: f64,
    /// per δ: (discrete energy of the proof's test function f) · log δ
    pub f_energy_scaled: Vec<(f64, f64)>,
}

impl CapacityProblem {
    /// Build from indicator functions over a bounding box.
    pub fn from_indicators(
        bounds: (f64, f64, f64, f64),
        n: usize,
        domain_fn: impl Fn(Point) -> bool,
        e_fn: impl Fn(Point) -> bool,
        f_fn: impl Fn(Point) -> bool,
    ) -> Result<Self> {
        if n < 16 {
            return Err(Error::Config(format!("lattice too small: {n}")));
        }
        let (x0, y0, x1, y1) = bounds;
        if !(x1 > x0 && y1 > y0) {
            return Err(Error::Config("degenerate bounding box".into()));
        }
        let h = ((x1 - x0).max(y1 - y0)) / (n - 1) as f64;
        let mut domain = vec![false; n * n];
        let mut e_nodes = Vec::new();
        let mut f_nodes = Vec::new();
        for iy in 0..n {
            for ix in 0..n {
                let p = Complex64::new(x0 + ix as f64 * h, y0 + iy as f64 * h);
                let id = iy * n + ix;
                let in_e = e_fn(p);
                let in_f = f_fn(p);
                if in_e && in_f {
                    return Err(Error::Config(format!("E and F overlap at {p}")));
                }
                if domain_fn(p) || in_e || in_f {
                    domain[id] = true;
                }
                if in_e {
                    e_nodes.push(id as u32);
                }
                if in_f {
                    f_nodes.push(id as u32);
                }
            }
        }
        let problem = Self {
            n,
            x0,
            y0,
            h,
            domain,
            e_nodes,
            f_nodes,
            tolerance: DEFAULT_TOLERANCE,
            max_sweeps: DEFAULT_MAX_SWEEPS,
        };
        problem.validate()?;
        Ok(problem)
    }

    /// Ring problem: `E = B̄(0, r)`, `F = {|x| ≥ R}` inside a padded box.
    pub fn ring(r: f64, big_r: f64, n: usize) -> Result<Self> {
        if !(0.0 < r && r < big_r) {
            return Err(Error::Config(format!("ring needs 0 < r < R, got {r}, {big_r}")));
        }
        let pad = 1.2 * big_r;
        Self::from_indicators(
            (-pad, -pad, pad, pad),
            n,
            |p| p.norm() < big_r,
            |p| p.norm() <= r,
            |p| p.norm() >= big_r,
        )
    }

    fn validate(&self) -> Result<()> {
        if self.e_nodes.is_empty() || self.f_nodes.is_empty() {
            return Err(Error::Config("E and F must both be nonempty".into()));
        }
        for (name, set) in [("E", &self.e_nodes), ("F", &self.f_nodes)] {
            if !self.connected(set) {
                return Err(Error::Config(format!("{name} is not edge-connected")));
            }
        }
        Ok(())
    }

    fn neighbors_of(&self, id: usize) -> [Option<usize>; 4] {
        let n = self.n;
        let (ix, iy) = (id % n, id / n);
        [
            (ix > 0).then(|| id - 1),
            (ix + 1 < n).then(|| id + 1),
            (iy > 0).then(|| id - n),
            (iy + 1 < n).then(|| id + n),
        ]
    }

    fn connected(&self, set: &[u32]) -> bool {
        if set.is_empty() {
            return false;
        }
        let mut member = vec![false; self.n * self.n];
        for &s in set {
            member[s as usize] = true;
        }
        let mut seen = vec![false; self.n * self.n];
        let mut stack = vec![set[0] as usize];
        seen[set[0] as usize] = true;
        let mut count = 1usize;
        while let Some(id) = stack.pop() {
            for nb in self.neighbors_of(id).into_iter().flatten() {
                if member[nb] && !seen[nb] {
                    seen[nb] = true;
                    count += 1;
                    stack.push(nb);
                }
            }
        }
        count == set.len()
    }

    /// Discrete Dirichlet energy of node values (edge differences, both ends
    /// in-domain; the 2D energy is lattice-spacing free).
    pub fn energy_of(&self, u: &[f64]) -> f64 {
        let n = self.n;
        let mut acc = KahanSum::new();
        for iy in 0..n {
            for ix in 0..n {
                let id = iy * n + ix;
                if !self.domain[id] {
                    continue;
                }
                if ix + 1 < n && self.domain[id + 1] {
                    let d = u[id + 1] - u[id];
                    acc.add(d * d);
                }
                if iy + 1 < n && self.domain[id + n] {
                    let d = u[id + n] - u[id];
                    acc.add(d * d);
                }
            }
        }
        acc.value()
    }

    pub fn node_position(&self, id: usize) -> Point {
        Complex64::new(
            self.x0 + (id % self.n) as f64 * self.h,
            self.y0 + (id / self.n) as f64 * self.h,
        )
    }
}

/// Solve the discrete minimization by SOR relaxation of the 5-point Laplacian
/// with `u = 1` on `E`, `u = 0` on `F` (deterministic sweep order).
pub fn capacity(problem: &CapacityProblem) -> Result<CapacityResult> {
    problem.validate()?;
    let total = problem.n * problem.n;
    let mut u = vec![0.0f64; total];
    let mut fixed = vec![false; total];
    for &e in &problem.e_nodes {
        u[e as usize] = 1.0;
        fixed[e as usize] = true;
    }
    for &f in &problem.f_nodes {
        fixed[f as usize] = true;
    }
    let free: Vec<usize> = (0..total)
        .filter(|&id| problem.domain[id] && !fixed[id])
        .collect();
    let omega = 2.0 / (1.0 + (std::f64::consts::PI / problem.n as f64).sin());

    let mut residual = f64::INFINITY;
    let mut sweeps = 0usize;
    while sweeps < problem.max_sweeps {
        sweeps += 1;
        residual = 0.0;
        for &id in &free {
            let mut sum = 0.0;
            let mut count = 0.0;
            for nb in problem.neighbors_of(id).into_iter().flatten() {
                // neighbors outside the domain reflect (natural boundary)
                if problem.domain[nb] {
                    sum += u[nb];
                    count += 1.0;
                }
            }
            if count == 0.0 {
                continue;
            }
            let target = sum / count;
            let delta = target - u[id];
            residual = residual.max(delta.abs());
            u[id] += omega * delta;
        }
        if residual <= problem.tolerance {
            break;
        }
    }
    if residual > problem.tolerance {
        return Err(Error::NoConvergence { residual, sweeps });
    }

    let value = problem.energy_of(&u);
    let mut l2 = KahanSum::new();
    for id in 0..total {
        if problem.domain[id] {
            l2.add(u[id] * u[id] * problem.h * problem.h);
        }
    }
    Ok(CapacityResult {
        value,
        full_norm: value + l2.value(),
        residual,
        sweeps,
        u,
    })
}

/// §2 property suite for one conformal map.
pub fn verify_estimates(map: &ConformalMap, n: usize) -> Result<EstimatesReport> {
    // (a) ring law against the analytic radial minimizer
    let big_r = 0.5;
    let mut ring_ratios = Vec::new();
    for r in [0.25, 0.125, 0.0625] {
        let result = capacity(&CapacityProblem::ring(r, big_r, n)?)?;
        let analytic = std::f64::consts::TAU / (big_r / r).ln();
        ring_ratios.push(result.value / analytic);
    }

    // (b) monotonicity on nested problems
    let base = capacity(&CapacityProblem::ring(0.25, 0.5, n)?)?.value;
    let bigger_e = capacity(&CapacityProblem::ring(0.3, 0.5, n)?)?.value;
    // enlarging F: bring the outer circle inward
    let bigger_f = capacity(&CapacityProblem::ring(0.25, 0.45, n)?)?.value;
    // enlarging Ω: same E, F shell, more room around
    let shell = |p: Point| p.norm() >= 0.5 && p.norm() <= 0.55;
    let dom_small = CapacityProblem::from_indicators(
        (-0.72, -0.72, 0.72, 0.72),
        n,
        |p| p.norm() < 0.6,
        |p| p.norm() <= 0.25,
        shell,
    )?;
    let dom_large = CapacityProblem::from_indicators(
        (-0.72, -0.72, 0.72, 0.72),
        n,
        |p| p.norm() < 0.7,
        |p| p.norm() <= 0.25,
        shell,
    )?;
    let monotone_ok = bigger_e >= base - 1e-12
        && bigger_f >= base - 1e-12
        && capacity(&dom_large)?.value >= capacity(&dom_small)?.value - 1e-12;

    // (c) Eq. (2.1): pairs with min-diam/dist bounded below have capacity
    // bounded below
    let mut lower_bound = f64::INFINITY;
    for gap in [0.1, 0.2, 0.3] {
        let c1 = -(0.25 + gap / 2.0);
        let c2 = 0.25 + gap / 2.0;
        let problem = CapacityProblem::from_indicators(
            (-1.0, -1.0, 1.0, 1.0),
            n,
            |p| p.norm() < 1.0,
            move |p| (p - Complex64::new(c1, 0.0)).norm() <= 0.25,
            move |p| (p - Complex64::new(c2, 0.0)).norm() <= 0.25,
        )?;
        lower_bound = lower_bound.min(capacity(&problem)?.value);
    }

    // (d) conformal invariance for maps with a usable inverse
    let mut invariance_ratios = Vec::new();
    if has_inverse(map) {
        let e_disk = |z: Point| z.norm() <= 0.3;
        let f_disk = |z: Point| (z - Complex64::new(0.62, 0.0)).norm() <= 0.15;
        let disk_problem = CapacityProblem::from_indicators(
            (-1.0, -1.0, 1.0, 1.0),
            n,
            |z| z.norm() < 1.0,
            e_disk,
            f_disk,
        )?;
        let disk_cap = capacity(&disk_problem)?.value;

        let cloud = map.boundary_cloud(2048)?;
        let (mut lo_x, mut hi_x, mut lo_y, mut hi_y) =
            (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for w in &cloud {
            lo_x = lo_x.min(w.re);
            hi_x = hi_x.max(w.re);
            lo_y = lo_y.min(w.im);
            hi_y = hi_y.max(w.im);
        }
        let pad = 0.05 * (hi_x - lo_x).max(hi_y - lo_y);
        let pull = |w: Point| map.inverse_of(w);
        let image_problem = CapacityProblem::from_indicators(
            (lo_x - pad, lo_y - pad, hi_x + pad, hi_y + pad),
            n,
            |w| pull(w).map_or(false, |z| z.norm() < 1.0),
            |w| pull(w).map_or(false, e_disk),
            |w| pull(w).map_or(false, f_disk),
        )?;
        let image_cap = capacity(&image_problem)?.value;
        invariance_ratios.push((map.name.clone(), disk_cap / image_cap));
    }

    Ok(EstimatesReport {
        ring_ratios,
        monotone_ok,
        lower_bound,
        invariance_ratios,
    })
}

fn has_inverse(map: &ConformalMap) -> bool {
    // probe a few interior points
    [
        Complex64::new(0.2, 0.1),
        Complex64::new(-0.3, 0.4),
        Complex64::new(0.5, -0.2),
    ]
    .iter()
    .all(|&z| {
        map.apply(z)
            .ok()
            .and_then(|w| map.inverse_of(w))
            .map_or(false, |back| (back - z).norm() < 1e-8)
    })
}

/// Lemma 2.2: capacity-rich continua pairs are close relative to their size,
/// plus the δ-sweep of the proof's logarithmic test function.
pub fn lemma22_check(map: &ConformalMap, c0: f64, n: usize) -> Result<Lemma22Report> {
    let grid = PullbackGrid::build(map, 8, 16, 4096)?;

    // trial pairs: pullback disks of several sizes and separations
    let trials: [(Point, f64, Point, f64); 4] = [
        (Complex64::new(-0.4, 0.0), 0.25, Complex64::new(0.4, 0.0), 0.25),
        (Complex64::new(-0.2, 0.3), 0.15, Complex64::new(0.3, -0.25), 0.2),
        (Complex64::new(-0.6, 0.0), 0.1, Complex64::new(0.6, 0.0), 0.1),
        (Complex64::new(0.0, 0.35), 0.3, Complex64::new(0.0, -0.35), 0.3),
    ];
    let mut c_of_c0 = f64::INFINITY;
    let mut tested = 0usize;
    let mut excluded = 0usize;
    for &(ce, re, cf, rf) in &trials {
        // conformal invariance: solve in the disk
        let problem = CapacityProblem::from_indicators(
            (-1.0, -1.0, 1.0, 1.0),
            n,
            |z| z.norm() < 1.0,
            |z| (z - ce).norm() <= re,
            |z| (z - cf).norm() <= rf,
        )?;
        let cap = capacity(&problem)?.value;
        if cap < c0 {
            excluded += 1;
            continue;
        }
        tested += 1;
        // inner-metric quantities of the image continua through the grid
        let boundary_pts = |c: Point, r: f64| -> Vec<Point> {
            (0..64)
                .map(|k| c + Complex64::from_polar(r, k as f64 * std::f64::consts::TAU / 64.0))
                .collect()
        };
        let diam_omega = |pts: &[Point]| -> Result<f64> {
            let mut best: f64 = 0.0;
            for (a, pa) in pts.iter().enumerate().step_by(8) {
                for pb in pts.iter().skip(a + 8).step_by(8) {
                    best = best.max(grid.inner_distance(*pa, *pb)?);
                }
            }
            Ok(best)
        };
        let e_pts = boundary_pts(ce, re);
        let f_pts = boundary_pts(cf, rf);
        let e_nodes: Vec<u32> = e_pts
            .iter()
            .map(|&p| grid.nearest_node(p))
            .collect::<Result<_>>()?;
        let field = grid.distance_field(&e_nodes, f64::INFINITY);
        let dist_ef = f_pts
            .iter()
            .map(|&p| grid.nearest_node(p).map(|nd| field[nd as usize]))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        let d_e = diam_omega(&e_pts)?;
        let d_f = diam_omega(&f_pts)?;
        if dist_ef > 1e-12 {
            c_of_c0 = c_of_c0.min(d_e.min(d_f) / dist_ef);
        }
    }
    if tested == 0 {
        return Err(Error::Config(format!(
            "no trial pair reached capacity c0 = {c0}"
        )));
    }

    // δ-sweep of the proof's explicit test function: f is the logarithmic
    // profile in dist(x, z); its discrete energy should scale like 1/log δ
    let mut f_energy_scaled = Vec::new();
    for delta in [8.0f64, 16.0, 32.0] {
        let d_e = 0.9 / delta; // diam scale
        let d_f = 0.9; // dist scale
        let profile = move |x: Point| -> f64 {
            let d = x.norm().max(1e-12);
            if d <= d_e {
                1.0
            } else if d >= d_f {
                0.0
            } else {
                (d_f.ln() - d.ln()) / (d_f.ln() - d_e.ln())
            }
        };
        let problem = CapacityProblem::from_indicators(
            (-1.0, -1.0, 1.0, 1.0),
            n,
            |z| z.norm() < 1.0,
            |z| z.norm() <= d_e / 2.0,
            |z| z.norm() >= 0.95,
        )?;
        let u: Vec<f64> = (0..problem.n * problem.n)
            .map(|id| profile(problem.node_position(id)))
            .collect();
        let energy = problem.energy_of(&u);
        f_energy_scaled.push((delta, energy * delta.ln()));
    }

    Ok(Lemma22Report {
        c0,
        pairs_tested: tested,
        pairs_excluded: excluded,
        c_of_c0,
        f_energy_scaled,
    })
}
