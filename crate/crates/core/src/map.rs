//! Conformal maps `φ : 𝔻 → Ω` as composable analytic expression trees.
//!
//! The map is the sole description of the target domain: every geometric
//! quantity downstream (lengths, distances, areas) is obtained by evaluating
//! `φ` and `φ'` in pullback coordinates. Derivatives come from the exact chain
//! rule over the tree, never from differencing.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Point;

const POLE_EPS: f64 = 1e-13;

/// One node of the analytic expression tree.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum MapExpr {
    /// `z ↦ (az + b)/(cz + d)`
    Mobius {
        a: Point,
        b: Point,
        c: Point,
        d: Point,
    },
    /// Principal-branch power `z ↦ z^k`.
    Power { k: f64 },
    /// `z ↦ c₀ + c₁ z + c₂ z² + …`
    Polynomial { coeffs: Vec<Point> },
    /// `z ↦ s·z + t`
    Affine { scale: Point, offset: Point },
    /// Left-to-right composition: `Compose([f, g])` is `z ↦ g(f(z))`.
    Compose(Vec<MapExpr>),
}

impl MapExpr {
    /// Value and derivative at `z` by the chain rule.
    fn eval(&self, z: Point) -> Result<(Point, Point)> {
        match self {
            MapExpr::Mobius { a, b, c, d } => {
                let den = c * z + d;
                if den.norm() < POLE_EPS {
                    return Err(Error::Singularity(format!("möbius pole at z = {z}")));
                }
                let w = (a * z + b) / den;
                let det = a * d - b * c;
                Ok((w, det / (den * den)))
            }
            MapExpr::Power { k } => {
                if (k - 1.0).abs() < f64::EPSILON {
                    return Ok((z, Complex64::new(1.0, 0.0)));
                }
                if z.norm() < POLE_EPS && *k < 1.0 {
                    return Err(Error::Singularity(format!(
                        "power {k} not differentiable at z = 0"
                    )));
                }
                let w = z.powf(*k);
                Ok((w, *k * z.powf(*k - 1.0)))
            }
            MapExpr::Polynomial { coeffs } => {
                // Horner for the value and the derivative together.
                let mut v = Complex64::new(0.0, 0.0);
                let mut dv = Complex64::new(0.0, 0.0);
                for &c in coeffs.iter().rev() {
                    dv = dv * z + v;
                    v = v * z + c;
                }
                Ok((v, dv))
            }
            MapExpr::Affine { scale, offset } => Ok((scale * z + offset, *scale)),
            MapExpr::Compose(parts) => {
                let mut w = z;
                let mut deriv = Complex64::new(1.0, 0.0);
                for part in parts {
                    let (v, dv) = part.eval(w)?;
                    deriv *= dv;
                    w = v;
                }
                Ok((w, deriv))
            }
        }
    }
}

/// A conformal map from the unit disk, with catalog metadata.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConformalMap {
    pub name: String,
    pub expr: MapExpr,
    /// Asserted by the catalog, sanity-checked by tests (`|φ'| > 0` on samples).
    pub univalent: bool,
    pub bounded_image: bool,
    /// Closed-form inverse, when the catalog provides one.
    #[serde(skip)]
    inverse: Option<fn(Point) -> Point>,
}

impl ConformalMap {
    pub fn new(name: impl Into<String>, expr: MapExpr) -> Self {
        Self {
            name: name.into(),
            expr,
            univalent: true,
            bounded_image: true,
            inverse: None,
        }
    }

    /// `z ↦ z`.
    pub fn identity() -> Self {
        let mut m = Self::new(
            "identity",
            MapExpr::Polynomial {
                coeffs: vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
            },
        );
        m.inverse = Some(|w| w);
        m
    }

    /// `φ(z) = z − z²/2`; the image boundary has a cusp at `φ(1) = 1/2`.
    pub fn cardioid() -> Self {
        let mut m = Self::new(
            "cardioid",
            MapExpr::Polynomial {
                coeffs: vec![
                    Complex64::new(0.0, 0.0),
                    Complex64::new(1.0, 0.0),
                    Complex64::new(-0.5, 0.0),
                ],
            },
        );
        m.inverse = Some(|w| {
            // z − z²/2 = w, branch with z(0) = 0.
            Complex64::new(1.0, 0.0) - (Complex64::new(1.0, 0.0) - 2.0 * w).sqrt()
        });
        m
    }

    /// `φ(z) = z + a z²` for `|a| ≤ 1/2` (univalent exactly in that range).
    pub fn perturbed(a: f64) -> Result<Self> {
        if !(a.is_finite() && a.abs() <= 0.5) {
            return Err(Error::Config(format!(
                "perturbed-map coefficient must satisfy |a| <= 1/2, got {a}"
            )));
        }
        let mut m = Self::new(
            format!("perturbed({a})"),
            MapExpr::Polynomial {
                coeffs: vec![
                    Complex64::new(0.0, 0.0),
                    Complex64::new(1.0, 0.0),
                    Complex64::new(a, 0.0),
                ],
            },
        );
        if a.abs() <= 1e-12 {
            m.inverse = Some(|w| w);
        }
        // otherwise the quadratic branch of `inverse_of` applies
        Ok(m)
    }

    /// Disk minus a radial slit, built from Möbius and power primitives:
    /// 𝔻 → upper half plane → first quadrant → upper half disk → 𝔻 ∖ [0, 1).
    pub fn slit() -> Self {
        let i = Complex64::new(0.0, 1.0);
        let one = Complex64::new(1.0, 0.0);
        let expr = MapExpr::Compose(vec![
            // i(1−z)/(1+z): disk to upper half plane
            MapExpr::Mobius {
                a: -i,
                b: i,
                c: one,
                d: one,
            },
            // square root: upper half plane to first quadrant
            MapExpr::Power { k: 0.5 },
            // (q−1)/(q+1): first quadrant to upper half disk
            MapExpr::Mobius {
                a: one,
                b: -one,
                c: one,
                d: one,
            },
            // square: upper half disk to disk minus [0,1)
            MapExpr::Power { k: 2.0 },
        ]);
        Self::new("slit", expr)
    }

    /// Catalog lookup by name, with optional numeric parameter.
    pub fn by_name(name: &str, param: Option<f64>) -> Result<Self> {
        match name {
            "identity" => Ok(Self::identity()),
            "cardioid" => Ok(Self::cardioid()),
            "perturbed" => Self::perturbed(param.unwrap_or(0.3)),
            "slit" => Ok(Self::slit()),
            other => Err(Error::Config(format!("unknown map '{other}'"))),
        }
    }

    /// The four builtin maps used by the property suites.
    pub fn catalog() -> Vec<Self> {
        vec![
            Self::identity(),
            Self::cardioid(),
            Self::perturbed(0.3).unwrap(),
            Self::slit(),
        ]
    }

    /// `(φ(z), φ'(z))` for `z` in the open disk.
    pub fn eval(&self, z: Point) -> Result<(Point, Point)> {
        if z.norm() >= 1.0 {
            return Err(Error::Domain(format!("|z| = {} >= 1", z.norm())));
        }
        self.expr.eval(z)
    }

    /// Evaluation without the open-disk check; used for boundary sampling
    /// where `|z| = 1` is intended.
    pub fn eval_closure(&self, z: Point) -> Result<(Point, Point)> {
        self.expr.eval(z)
    }

    /// `φ(z)` alone.
    pub fn apply(&self, z: Point) -> Result<Point> {
        Ok(self.eval(z)?.0)
    }

    /// `|φ'(z)|`.
    pub fn deriv_abs(&self, z: Point) -> Result<f64> {
        Ok(self.eval(z)?.1.norm())
    }

    /// Closed-form `φ⁻¹(w)` when available. The perturbed family is solved
    /// directly from its quadratic.
    pub fn inverse_of(&self, w: Point) -> Option<Point> {
        if let Some(f) = self.inverse {
            return Some(f(w));
        }
        if let MapExpr::Polynomial { coeffs } = &self.expr {
            if coeffs.len() == 3 && coeffs[0].norm() == 0.0 && (coeffs[1] - 1.0).norm() == 0.0 {
                let a = coeffs[2];
                if a.norm() > 1e-12 {
                    // z + a z² = w, branch with z(0) = 0
                    let s = (Complex64::new(1.0, 0.0) + 4.0 * a * w).sqrt();
                    return Some((s - 1.0) / (2.0 * a));
                }
            }
        }
        None
    }

    /// Image membership test via the closed-form inverse.
    pub fn contains_image_point(&self, w: Point) -> Option<bool> {
        self.inverse_of(w).map(|z| z.norm() < 1.0)
    }

    /// Length of `φ(polyline)` by per-segment midpoint quadrature of `∫|φ'|`.
    pub fn image_length(&self, polyline: &[Point]) -> Result<f64> {
        if polyline.len() < 2 {
            return Err(Error::Degenerate(
                "image_length needs at least two polyline points".into(),
            ));
        }
        let mut total = 0.0;
        for seg in polyline.windows(2) {
            let mid = (seg[0] + seg[1]) / 2.0;
            let d = self.eval(mid)?.1.norm();
            total += d * (seg[1] - seg[0]).norm();
        }
        Ok(total)
    }

    /// Dense sample of the image boundary `φ(e^{iθ})`. Points where the map is
    /// singular on the circle (Möbius poles) are skipped.
    pub fn boundary_cloud(&self, samples: usize) -> Result<Vec<Point>> {
        if samples < 64 {
            return Err(Error::Config(format!(
                "boundary sampling needs >= 64 points, got {samples}"
            )));
        }
        let mut cloud = Vec::with_capacity(samples);
        for i in 0..samples {
            let theta = (i as f64 + 0.5) * std::f64::consts::TAU / samples as f64;
            let z = Complex64::from_polar(1.0, theta);
            if let Ok((w, _)) = self.eval_closure(z) {
                if w.re.is_finite() && w.im.is_finite() {
                    cloud.push(w);
                }
            }
        }
        if cloud.is_empty() {
            return Err(Error::Internal("no finite boundary samples".into()));
        }
        Ok(cloud)
    }

    /// `dist(φ(z), ∂Ω)` by minimizing over a dense boundary sample.
    pub fn boundary_distance(&self, z: Point, boundary_samples: usize) -> Result<f64> {
        let w = self.apply(z)?;
        let cloud = self.boundary_cloud(boundary_samples)?;
        Ok(cloud
            .iter()
            .map(|b| (b - w).norm())
            .fold(f64::INFINITY, f64::min))
    }
}
