//! Tensor polar quadrature on the truncated disk, graded to the dyadic cell
//! structure.
//!
//! Radial bands follow the dyadic annuli `[1 − 2^{−l}, 1 − 2^{−l−1}]` up to
//! the cap radius `1 − 2^{−m−n_max−4}`; inside each band the rule is a
//! midpoint tensor product in `(r, θ)`. Angular counts at band `l ≥ m` are
//! multiples of `2^{m+1} · density`, so level-`m` cell boundaries coincide
//! with node-cell edges and per-cell restrictions stay midpoint rules.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::map::ConformalMap;
use crate::util::KahanSum;
use crate::Point;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolarQuadrature {
    pub m: u32,
    pub n_max: u32,
    pub density: usize,
    pub cap_radius: f64,
    pub nodes: Vec<Point>,
    pub weights: Vec<f64>,
    /// `|φ'(z_k)|` at each node
    pub deriv_abs: Vec<f64>,
}

impl PolarQuadrature {
    pub fn build(map: &ConformalMap, m: u32, n_max: u32, density: usize) -> Result<Self> {
        if !(2..=14).contains(&m) || n_max < 3 {
            return Err(Error::Config(format!(
                "quadrature needs m in 2..=14 and n_max >= 3, got m={m}, n_max={n_max}"
            )));
        }
        if density == 0 {
            return Err(Error::Config("quadrature density must be positive".into()));
        }
        let levels = m + n_max + 4; // bands l = 0 .. levels-1; cap 1 - 2^{-levels}
        let cap_radius = 1.0 - 0.5f64.powi(levels as i32);
        // angular growth stops at l_cap to keep the node count linear in depth
        let l_cap = m.max(11);

        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for l in 0..levels {
            let r0 = if l == 0 { 0.0 } else { 1.0 - 0.5f64.powi(l as i32) };
            let r1 = 1.0 - 0.5f64.powi(l as i32 + 1);
            let n_theta = (2usize << l.min(l_cap)) * density;
            let n_r = density;
            let dr = (r1 - r0) / n_r as f64;
            let dtheta = std::f64::consts::TAU / n_theta as f64;
            for i in 0..n_r {
                let r = r0 + (i as f64 + 0.5) * dr;
                let w = r * dr * dtheta;
                for k in 0..n_theta {
                    let theta = (k as f64 + 0.5) * dtheta;
                    nodes.push(Complex64::from_polar(r, theta));
                    weights.push(w);
                }
            }
        }
        let deriv_abs = nodes
            .iter()
            .map(|&z| map.eval(z).map(|(_, d)| d.norm()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            m,
            n_max,
            density,
            cap_radius,
            nodes,
            weights,
            deriv_abs,
        })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// `∫ f` over the truncated disk in pullback coordinates (compensated
    /// summation for order-insensitive reproducibility).
    pub fn integrate(&self, mut f: impl FnMut(Point) -> f64) -> f64 {
        let mut acc = KahanSum::new();
        for (k, &z) in self.nodes.iter().enumerate() {
            acc.add(self.weights[k] * f(z));
        }
        acc.value()
    }

    /// `∫_{φ(cap)} g` over the image via the conformal Jacobian `|φ'|²`.
    pub fn integrate_image(&self, mut g: impl FnMut(Point) -> f64) -> f64 {
        let mut acc = KahanSum::new();
        for (k, &z) in self.nodes.iter().enumerate() {
            let j = self.deriv_abs[k];
            acc.add(self.weights[k] * j * j * g(z));
        }
        acc.value()
    }

    /// Pullback area of the truncated disk (should equal `π·cap²` up to
    /// roundoff: midpoint is exact for the linear radial integrand).
    pub fn area(&self) -> f64 {
        let mut acc = KahanSum::new();
        for &w in &self.weights {
            acc.add(w);
        }
        acc.value()
    }

    /// Image area `|Ω ∩ φ(cap)| = ∫ |φ'|²`.
    pub fn image_area(&self) -> f64 {
        self.integrate_image(|_| 1.0)
    }
}
