//! Assembly of the Lipschitz approximants `u_m = uψ + Σ a_j φ_j` (normalized
//! form), conformal-change-of-variables Sobolev norms, the Poincaré-type cell
//! checks and the convergence experiment driver.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::decomposition::{build_cells, Decomposition};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::layer::{build_layer, C_GEO_HARD_DEFAULT};
use crate::map::ConformalMap;
use crate::partition::Partition;
use crate::quadrature::PolarQuadrature;
use crate::util::KahanSum;
use crate::Point;

/// Per-`m` record of a convergence experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SobolevReport {
    pub m: u32,
    pub p: f64,
    /// `‖u − u_m‖_{L^p(Ω)}`
    pub lp_error: f64,
    /// `‖∇(u − u_m)‖_{L^p(Ω)}`
    pub grad_error: f64,
    /// `(lp_error^p + grad_error^p)^{1/p}`
    pub w1p_error: f64,
    /// sampled ess-sup of `|u_m|`
    pub sup_um: f64,
    /// sampled ess-sup of `|∇u_m|` (finite by the Lipschitz construction)
    pub sup_grad_um: f64,
    /// `‖u‖^p_{W^{1,p}(J_m ∪ D_m)}`
    pub tail_energy: f64,
    /// `|J_m ∪ D_m|`
    pub tail_area: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PoincareReport {
    pub m: u32,
    pub p: f64,
    /// max over cells of both normalized Poincaré ratios
    pub max_cp: f64,
    /// cells excluded because the gradient energy vanished (0/0)
    pub excluded_cells: usize,
}

/// Experiment knobs shared by the convergence driver.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSettings {
    pub n_max: u32,
    pub k_samples: usize,
    pub quad_density: usize,
    pub metric_density: usize,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self {
            n_max: 4,
            k_samples: 8,
            quad_density: 2,
            metric_density: 16,
        }
    }
}

/// The assembled approximant in normalized form
/// `u_m = (uψ + Σ a_j φ_j)/Φ`; constants are reproduced exactly.
pub struct Approximant<'a> {
    pub u: &'a ScalarField,
    pub partition: &'a Partition,
    pub averages: Vec<f64>,
}

/// Pullback cell average `a_j` of `u ∘ φ` over `Q_{m,j}` (area average in
/// pullback coordinates).
pub fn cell_average(
    u: &ScalarField,
    map: &ConformalMap,
    cell: &crate::decomposition::DyadicCell,
    quadrature: &PolarQuadrature,
) -> Result<f64> {
    let mut num = KahanSum::new();
    let mut den = KahanSum::new();
    for (k, &z) in quadrature.nodes.iter().enumerate() {
        if cell.contains(z) {
            let w = quadrature.weights[k];
            num.add(w * u.eval(map.apply(z)?));
            den.add(w);
        }
    }
    if den.value() <= 0.0 {
        return Err(Error::Resolution(format!(
            "no quadrature nodes inside cell ({}, {})",
            cell.level, cell.index
        )));
    }
    Ok(num.value() / den.value())
}

/// All level-`m` averages in one sweep (each node visits one cell).
pub fn cell_averages(
    u: &ScalarField,
    map: &ConformalMap,
    decomp: &Decomposition,
    quadrature: &PolarQuadrature,
) -> Result<Vec<f64>> {
    let count = decomp.cell_count();
    let mut num = vec![KahanSum::new(); count];
    let mut den = vec![KahanSum::new(); count];
    for (k, &z) in quadrature.nodes.iter().enumerate() {
        if let Some(j) = decomp.cell_containing(z) {
            let w = quadrature.weights[k];
            num[j as usize].add(w * u.eval(map.apply(z)?));
            den[j as usize].add(w);
        }
    }
    (0..count)
        .map(|j| {
            if den[j].value() <= 0.0 {
                Err(Error::Resolution(format!("no quadrature nodes in cell {j}")))
            } else {
                Ok(num[j].value() / den[j].value())
            }
        })
        .collect()
}

/// Bind field, partition and averages into an evaluator.
pub fn assemble<'a>(
    u: &'a ScalarField,
    partition: &'a Partition,
    averages: Vec<f64>,
) -> Result<Approximant<'a>> {
    let expected = 2usize << partition.m;
    if averages.len() != expected {
        return Err(Error::Config(format!(
            "got {} averages for level {} ({} cells expected)",
            averages.len(),
            partition.m,
            expected
        )));
    }
    Ok(Approximant {
        u,
        partition,
        averages,
    })
}

impl Approximant<'_> {
    /// `u_m` at a pullback point.
    pub fn eval(&self, z: Point) -> Result<f64> {
        let v = self.partition.evaluate(z)?;
        let mut val = if v.psi_normalized > 0.0 {
            v.psi_normalized * self.u.eval(self.partition.map.apply(z)?)
        } else {
            0.0
        };
        for &(j, phi) in &v.bumps_normalized {
            val += self.averages[j as usize] * phi;
        }
        Ok(val)
    }
}

/// Step size for central differences at `z`: shrinks toward the rim so the
/// stencil stays inside both the disk and the partition's grid cap.
fn fd_step(h: f64, z: Point) -> f64 {
    h.min((1.0 - z.norm()) / 64.0)
}

/// `(∫|f|^p, ∫|∇f|^p)` over the image domain for a pullback-coordinates
/// evaluator `f∘φ`. The `L^p` part uses the Jacobian `|φ'|²`; the gradient
/// part divides the pullback finite-difference gradient by `|φ'|`, which
/// leaves the weight `|φ'|^{2−p}`.
pub fn sobolev_parts(
    f: &mut dyn FnMut(Point) -> Result<f64>,
    p: f64,
    quadrature: &PolarQuadrature,
    h: f64,
) -> Result<(f64, f64)> {
    if p < 1.0 {
        return Err(Error::Config(format!("Sobolev exponent p must be >= 1, got {p}")));
    }
    let mut lp = KahanSum::new();
    let mut grad = KahanSum::new();
    for (k, &z) in quadrature.nodes.iter().enumerate() {
        let w = quadrature.weights[k];
        let jac = quadrature.deriv_abs[k];
        let val = f(z)?;
        lp.add(w * jac * jac * val.abs().powf(p));
        let step = fd_step(h, z);
        let gx = (f(z + Complex64::new(step, 0.0))? - f(z - Complex64::new(step, 0.0))?)
            / (2.0 * step);
        let gy = (f(z + Complex64::new(0.0, step))? - f(z - Complex64::new(0.0, step))?)
            / (2.0 * step);
        let g = (gx * gx + gy * gy).sqrt();
        grad.add(w * jac.powf(2.0 - p) * g.powf(p));
    }
    Ok((lp.value(), grad.value()))
}

/// Convenience wrapper for a plain field: `f = u` on the image.
pub fn sobolev_norm(
    u: &ScalarField,
    map: &ConformalMap,
    p: f64,
    quadrature: &PolarQuadrature,
    h: f64,
) -> Result<(f64, f64)> {
    let mut f = |z: Point| -> Result<f64> { Ok(u.eval(map.apply(z)?)) };
    sobolev_parts(&mut f, p, quadrature, h)
}

/// Lemma 4.1 cell checks: neighbor-average differences and in-cell
/// oscillation against the gradient energy, both normalized by `diam(R_j)`
/// powers.
pub fn poincare_check(
    u: &ScalarField,
    map: &ConformalMap,
    decomp: &Decomposition,
    p: f64,
    quadrature: &PolarQuadrature,
    h: f64,
) -> Result<PoincareReport> {
    if decomp.metrics.len() != decomp.cells.len() {
        return Err(Error::Config("decomposition metrics required".into()));
    }
    let averages = cell_averages(u, map, decomp, quadrature)?;
    let count = decomp.cell_count();

    // per-cell ∫|∇u|^p and ∫|u − a_j|^p via one node sweep
    let mut grad_energy = vec![KahanSum::new(); count];
    let mut osc = vec![KahanSum::new(); count];
    for (k, &z) in quadrature.nodes.iter().enumerate() {
        let j = match decomp.cell_containing(z) {
            Some(j) => j as usize,
            None => continue,
        };
        let w = quadrature.weights[k];
        let jac = quadrature.deriv_abs[k];
        let step = fd_step(h, z);
        let f = |zz: Point| -> Result<f64> { Ok(u.eval(map.apply(zz)?)) };
        let gx = (f(z + Complex64::new(step, 0.0))? - f(z - Complex64::new(step, 0.0))?)
            / (2.0 * step);
        let gy = (f(z + Complex64::new(0.0, step))? - f(z - Complex64::new(0.0, step))?)
            / (2.0 * step);
        let g = (gx * gx + gy * gy).sqrt();
        grad_energy[j].add(w * jac.powf(2.0 - p) * g.powf(p));
        let dev = (f(z)? - averages[j]).abs();
        osc[j].add(w * jac * jac * dev.powf(p));
    }

    let mut max_cp: f64 = 0.0;
    let mut excluded = 0usize;
    for j in 0..count {
        let next = (j + 1) % count;
        let diam = decomp.diam(j);
        let pair_energy = grad_energy[j].value() + grad_energy[next].value();
        let num1 = (averages[j] - averages[next]).abs().powf(p);
        if pair_energy > 1e-300 {
            max_cp = max_cp.max(num1 / (diam.powf(p - 2.0) * pair_energy));
        } else if num1 > 1e-300 {
            return Err(Error::Internal(format!(
                "cell {j}: average jump without gradient energy"
            )));
        } else {
            excluded += 1;
        }
        let cell_energy = grad_energy[j].value();
        if cell_energy > 1e-300 {
            max_cp = max_cp.max(osc[j].value() / (diam.powf(p) * cell_energy));
        }
    }
    Ok(PoincareReport {
        m: decomp.m,
        p,
        max_cp,
        excluded_cells: excluded,
    })
}

/// Pointwise truncation of a field (Lemma 2.6 clamp).
pub fn truncate(u: &ScalarField, level: f64) -> Result<ScalarField> {
    u.truncate(level)
}

/// Full single-`m` experiment: build everything, assemble `u_m` and measure
/// the error and tail quantities.
pub fn run_level(
    u: &ScalarField,
    map: &ConformalMap,
    p: f64,
    m: u32,
    settings: &RunSettings,
) -> Result<SobolevReport> {
    u.check_membership(p)?;
    let mut decomp = build_cells(m)?;
    decomp.compute_metrics(map, settings.metric_density)?;
    let layer = build_layer(map, &decomp, settings.n_max, settings.k_samples, C_GEO_HARD_DEFAULT)?;
    let partition = Partition::build(map, &decomp, &layer)?;
    let quadrature = PolarQuadrature::build(map, m, settings.n_max, settings.quad_density)?;
    let averages = cell_averages(u, map, &decomp, &quadrature)?;
    let um = assemble(u, &partition, averages)?;
    let h = 0.5f64.powi(m as i32 + 6);

    let mut err = |z: Point| -> Result<f64> {
        Ok(u.eval(partition.map.apply(z)?) - um.eval(z)?)
    };
    let (lp_p, grad_p) = sobolev_parts(&mut err, p, &quadrature, h)?;
    let lp_error = lp_p.powf(1.0 / p);
    let grad_error = grad_p.powf(1.0 / p);
    let w1p_error = (lp_p + grad_p).powf(1.0 / p);

    // tail region J_m ∪ D_m = Ω ∖ Ω_{m−1}: pullback radius > 1 − 2^{−m}
    let tail_radius = 1.0 - 0.5f64.powi(m as i32);
    let mut tail_energy = KahanSum::new();
    let mut tail_area = KahanSum::new();
    let mut sup_um: f64 = 0.0;
    let mut sup_grad_um: f64 = 0.0;
    for (k, &z) in quadrature.nodes.iter().enumerate() {
        let w = quadrature.weights[k];
        let jac = quadrature.deriv_abs[k];
        let v = um.eval(z)?;
        sup_um = sup_um.max(v.abs());
        let step = fd_step(h, z);
        let gx = (um.eval(z + Complex64::new(step, 0.0))?
            - um.eval(z - Complex64::new(step, 0.0))?)
            / (2.0 * step);
        let gy = (um.eval(z + Complex64::new(0.0, step))?
            - um.eval(z - Complex64::new(0.0, step))?)
            / (2.0 * step);
        let gum = (gx * gx + gy * gy).sqrt() / jac;
        sup_grad_um = sup_grad_um.max(gum);
        if z.norm() > tail_radius {
            tail_area.add(w * jac * jac);
            let f = |zz: Point| -> Result<f64> { Ok(u.eval(map.apply(zz)?)) };
            let ux = (f(z + Complex64::new(step, 0.0))? - f(z - Complex64::new(step, 0.0))?)
                / (2.0 * step);
            let uy = (f(z + Complex64::new(0.0, step))? - f(z - Complex64::new(0.0, step))?)
                / (2.0 * step);
            let gu = (ux * ux + uy * uy).sqrt();
            tail_energy.add(
                w * jac * jac * f(z)?.abs().powf(p) + w * jac.powf(2.0 - p) * gu.powf(p),
            );
        }
    }

    Ok(SobolevReport {
        m,
        p,
        lp_error,
        grad_error,
        w1p_error,
        sup_um,
        sup_grad_um,
        tail_energy: tail_energy.value(),
        tail_area: tail_area.value(),
    })
}

/// Theorem 1.1 experiment over a list of levels.
pub fn convergence_run(
    u: &ScalarField,
    map: &ConformalMap,
    p: f64,
    m_list: &[u32],
    settings: &RunSettings,
) -> Result<Vec<SobolevReport>> {
    m_list
        .iter()
        .map(|&m| {
            run_level(u, map, p, m, settings).map_err(|e| {
                Error::Construction(format!("convergence run failed at m = {m}: {e}"))
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposition::DyadicCell;

    fn partition_for(map: &ConformalMap, m: u32, n_max: u32) -> (Decomposition, Partition) {
        let mut d = build_cells(m).unwrap();
        d.compute_metrics(map, 16).unwrap();
        let layer = build_layer(map, &d, n_max, 8, C_GEO_HARD_DEFAULT).unwrap();
        let p = Partition::build(map, &d, &layer).unwrap();
        (d, p)
    }

    /// Brute-force midpoint rule restricted to one cell.
    fn brute_cell_average(
        u: &ScalarField,
        map: &ConformalMap,
        cell: &DyadicCell,
        n: usize,
    ) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..n {
            for k in 0..n {
                let r = cell.r_min + (i as f64 + 0.5) / n as f64 * (cell.r_max - cell.r_min);
                let theta = cell.theta_min
                    + (k as f64 + 0.5) / n as f64 * (cell.theta_max - cell.theta_min);
                let z = Complex64::from_polar(r, theta);
                let w = r;
                num += w * u.eval(map.apply(z).unwrap());
                den += w;
            }
        }
        num / den
    }

    #[test]
    fn constant_average_exact() {
        let map = ConformalMap::identity();
        let q = PolarQuadrature::build(&map, 2, 4, 2).unwrap();
        let cell = DyadicCell::new(2, 0).unwrap();
        let a = cell_average(&ScalarField::constant(5.0), &map, &cell, &q).unwrap();
        assert!((a - 5.0).abs() < 1e-14);
    }

    #[test]
    fn re_average_matches_brute_force() {
        let map = ConformalMap::identity();
        let q = PolarQuadrature::build(&map, 2, 3, 48).unwrap();
        let cell = DyadicCell::new(2, 0).unwrap();
        let u = ScalarField::re();
        let a = cell_average(&u, &map, &cell, &q).unwrap();
        // 10⁶-node brute-force oracle
        let oracle = brute_cell_average(&u, &map, &cell, 1000);
        assert!((a - oracle).abs() < 1e-5, "{a} vs {oracle}");
    }

    #[test]
    fn singular_average_finite() {
        let map = ConformalMap::identity();
        let q = PolarQuadrature::build(&map, 2, 4, 16).unwrap();
        let cell = DyadicCell::new(2, 0).unwrap(); // touches angle 0
        let u = ScalarField::power_dist(Complex64::new(1.0, 0.0), 0.5).unwrap();
        let a = cell_average(&u, &map, &cell, &q).unwrap();
        let oracle = brute_cell_average(&u, &map, &cell, 1000);
        assert!(a.is_finite());
        assert!((a - oracle).abs() < 1e-3, "{a} vs {oracle}");
    }

    #[test]
    fn averages_sweep_matches_per_cell() {
        let map = ConformalMap::cardioid();
        let mut d = build_cells(3).unwrap();
        d.compute_metrics(&map, 16).unwrap();
        let q = PolarQuadrature::build(&map, 3, 4, 2).unwrap();
        let u = ScalarField::im();
        let sweep = cell_averages(&u, &map, &d, &q).unwrap();
        for j in [0usize, 7, 15] {
            let single = cell_average(&u, &map, &d.cells[j], &q).unwrap();
            assert!((sweep[j] - single).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_reproduction_exact() {
        let map = ConformalMap::identity();
        let (d, p) = partition_for(&map, 3, 4);
        let q = PolarQuadrature::build(&map, 3, 4, 2).unwrap();
        let u = ScalarField::constant(7.5);
        let averages = cell_averages(&u, &map, &d, &q).unwrap();
        let um = assemble(&u, &p, averages).unwrap();
        for &z in q.nodes.iter().step_by(997) {
            let v = um.eval(z).unwrap();
            assert!((v - 7.5).abs() < 1e-12, "u_m = {v} at {z}");
        }
    }

    #[test]
    fn core_region_reproduces_u() {
        let map = ConformalMap::cardioid();
        let (d, p) = partition_for(&map, 3, 4);
        let q = PolarQuadrature::build(&map, 3, 4, 2).unwrap();
        let u = ScalarField::re();
        let averages = cell_averages(&u, &map, &d, &q).unwrap();
        let um = assemble(&u, &p, averages).unwrap();
        // ψ = 1 and no bumps inside Ω_{m−1}
        for &z in &[
            Complex64::new(0.0, 0.0),
            Complex64::from_polar(0.5, 1.0),
            Complex64::from_polar(0.85, 4.0),
        ] {
            let exact = u.eval(map.apply(z).unwrap());
            let v = um.eval(z).unwrap();
            assert!((v - exact).abs() < 1e-12, "at {z}: {v} vs {exact}");
        }
    }

    #[test]
    fn deep_layer_point_is_cell_average() {
        let map = ConformalMap::identity();
        let (d, p) = partition_for(&map, 3, 4);
        let q = PolarQuadrature::build(&map, 3, 4, 2).unwrap();
        let u = ScalarField::re();
        let averages = cell_averages(&u, &map, &d, &q).unwrap();
        let um = assemble(&u, &p, averages.clone()).unwrap();
        // mid-angle deep point of S_0: only φ_0 can be active there
        let alpha = std::f64::consts::PI / 16.0;
        let z = Complex64::from_polar(0.999, 1.5 * alpha);
        let v = um.eval(z).unwrap();
        let vals = p.evaluate(z).unwrap();
        assert_eq!(vals.psi, 0.0);
        if vals.bumps.len() == 1 {
            let j = vals.bumps[0].0 as usize;
            assert!((v - averages[j]).abs() < 1e-12);
        } else {
            // point meets an overlap; value is a convex combination
            let lo = vals
                .bumps
                .iter()
                .map(|&(j, _)| averages[j as usize])
                .fold(f64::INFINITY, f64::min);
            let hi = vals
                .bumps
                .iter()
                .map(|&(j, _)| averages[j as usize])
                .fold(f64::NEG_INFINITY, f64::max);
            assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
        }
    }

    #[test]
    fn mismatched_level_config_error() {
        let map = ConformalMap::identity();
        let (_, p) = partition_for(&map, 3, 4);
        let u = ScalarField::re();
        assert!(matches!(
            assemble(&u, &p, vec![0.0; 8]),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn sobolev_identity_re_p2() {
        // ∫_𝔻 (Re w)² = π/4 and |∇Re w| = 1 → ∫ = π (cap corrections ~1e−4)
        let map = ConformalMap::identity();
        let q = PolarQuadrature::build(&map, 3, 6, 8).unwrap();
        let (lp, grad) = sobolev_norm(&ScalarField::re(), &map, 2.0, &q, 1e-4).unwrap();
        assert!(
            (lp - std::f64::consts::FRAC_PI_4).abs() < 2e-3,
            "L2 part {lp}"
        );
        assert!((grad - std::f64::consts::PI).abs() < 2e-3, "grad part {grad}");
    }

    #[test]
    fn sobolev_constant_p1() {
        let map = ConformalMap::cardioid();
        let q = PolarQuadrature::build(&map, 3, 4, 2).unwrap();
        let (lp, grad) = sobolev_norm(&ScalarField::constant(1.0), &map, 1.0, &q, 1e-4).unwrap();
        assert!((lp - q.image_area()).abs() < 1e-10);
        assert!(grad.abs() < 1e-10);
    }

    #[test]
    fn sobolev_singular_p1_vs_brute_force() {
        let map = ConformalMap::identity();
        let u = ScalarField::power_dist(Complex64::new(1.0, 0.0), 0.5).unwrap();
        let q = PolarQuadrature::build(&map, 3, 6, 4).unwrap();
        let (lp, grad) = sobolev_norm(&u, &map, 1.0, &q, 1e-4).unwrap();
        // dense polar brute force for ∫|u| on the same cap disk
        let cap = q.cap_radius;
        let (nr, nt) = (1000usize, 1000usize);
        let mut brute = 0.0;
        for i in 0..nr {
            let r = (i as f64 + 0.5) / nr as f64 * cap;
            for k in 0..nt {
                let t = (k as f64 + 0.5) / nt as f64 * std::f64::consts::TAU;
                let w = Complex64::from_polar(r, t);
                brute += u.eval(w) * r;
            }
        }
        brute *= cap / nr as f64 * std::f64::consts::TAU / nt as f64;
        assert!((lp - brute).abs() < 0.01 * brute, "{lp} vs {brute}");
        assert!(grad.is_finite() && grad > 0.0);
    }

    #[test]
    fn invalid_p_rejected() {
        let map = ConformalMap::identity();
        let q = PolarQuadrature::build(&map, 3, 4, 2).unwrap();
        assert!(sobolev_norm(&ScalarField::re(), &map, 0.5, &q, 1e-4).is_err());
    }

    #[test]
    fn poincare_constant_field_zero() {
        let map = ConformalMap::identity();
        let mut d = build_cells(3).unwrap();
        d.compute_metrics(&map, 16).unwrap();
        let q = PolarQuadrature::build(&map, 3, 4, 2).unwrap();
        let r = poincare_check(&ScalarField::constant(2.0), &map, &d, 2.0, &q, 1e-4).unwrap();
        assert_eq!(r.max_cp, 0.0);
        assert_eq!(r.excluded_cells, 16);
    }

    #[test]
    fn poincare_identity_re_stable_in_m() {
        let map = ConformalMap::identity();
        let mut cps = Vec::new();
        for m in [3u32, 4, 5] {
            let mut d = build_cells(m).unwrap();
            d.compute_metrics(&map, 16).unwrap();
            let q = PolarQuadrature::build(&map, m, 4, 4).unwrap();
            let r = poincare_check(&ScalarField::re(), &map, &d, 2.0, &q, 1e-5).unwrap();
            assert!(r.max_cp.is_finite() && r.max_cp > 0.0);
            cps.push(r.max_cp);
        }
        let max = cps.iter().cloned().fold(0.0f64, f64::max);
        let min = cps.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(max / min < 1.5, "C_P drift across m: {cps:?}");
    }

    #[test]
    fn poincare_cardioid_singular_finite() {
        let map = ConformalMap::cardioid();
        let mut d = build_cells(3).unwrap();
        d.compute_metrics(&map, 16).unwrap();
        let q = PolarQuadrature::build(&map, 3, 4, 4).unwrap();
        // anchor at the cusp φ(1) = 1/2
        let u = ScalarField::power_dist(Complex64::new(0.5, 0.0), 0.5).unwrap();
        let r = poincare_check(&u, &map, &d, 1.0, &q, 1e-5).unwrap();
        assert!(r.max_cp.is_finite(), "{r:?}");
    }

    #[test]
    fn truncation_distance_decreasing() {
        // ‖u − u_M‖_{W^{1,1}} decreasing in M for the unbounded member
        let map = ConformalMap::identity();
        let w0 = Complex64::new(1.0, 0.0);
        let u = ScalarField::loglog(w0);
        let q = PolarQuadrature::build(&map, 4, 6, 3).unwrap();
        let mut dists = Vec::new();
        for level in [2.0, 4.0, 8.0] {
            let trunc = truncate(&u, level).unwrap();
            let mut diff = |z: Point| -> Result<f64> {
                let w = map.apply(z)?;
                Ok(u.eval(w) - trunc.eval(w))
            };
            let (lp, grad) = sobolev_parts(&mut diff, 1.0, &q, 1e-5).unwrap();
            dists.push(lp + grad);
        }
        assert!(
            dists[0] >= dists[1] && dists[1] >= dists[2],
            "not decreasing: {dists:?}"
        );
    }

    #[test]
    fn convergence_identity_singular() {
        let map = ConformalMap::identity();
        let u = ScalarField::power_dist(Complex64::new(1.0, 0.0), 0.5).unwrap();
        let settings = RunSettings::default();
        let reports = convergence_run(&u, &map, 1.0, &[3, 4, 5], &settings).unwrap();
        let errs: Vec<f64> = reports.iter().map(|r| r.w1p_error).collect();
        assert!(errs[1] < errs[0] && errs[2] < errs[1], "{errs:?}");
        for r in &reports {
            assert!(r.sup_grad_um.is_finite());
            assert!(r.sup_um <= 2.0f64.sqrt() + 1e-9, "sup bound: {}", r.sup_um);
        }
        // tail quantities decreasing
        assert!(reports[2].tail_energy < reports[0].tail_energy);
        assert!(reports[2].tail_area < reports[0].tail_area);
    }
}
