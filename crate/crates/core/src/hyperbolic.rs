//! Hyperbolic metric and geodesics of the unit disk.
//!
//! Convention: density `2/(1−|z|²)`, so `dist_h(0, r) = log((1+r)/(1−r))`.
//! Geodesics are diameter segments or arcs of circles orthogonal to the unit
//! circle.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Point;

/// Default polyline sample count for geodesics.
pub const GEODESIC_SAMPLES: usize = 64;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub enum GeodesicKind {
    DiameterSegment,
    CircularArc { center: Point, radius: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HyperbolicGeodesic {
    pub kind: GeodesicKind,
    pub endpoints: (Point, Point),
    pub polyline: Vec<Point>,
}

/// `dist_h(z, w) = log((1+t)/(1−t))`, `t = |(z−w)/(1−z̄w)|`.
pub fn hyperbolic_distance(z: Point, w: Point) -> Result<f64> {
    if z.norm() >= 1.0 || w.norm() >= 1.0 {
        return Err(Error::Domain("hyperbolic distance needs |z|, |w| < 1".into()));
    }
    let t = ((z - w) / (Complex64::new(1.0, 0.0) - z.conj() * w)).norm();
    Ok(((1.0 + t) / (1.0 - t)).ln())
}

/// Hyperbolic geodesic between two distinct points of the closed disk.
pub fn geodesic_between(z: Point, w: Point) -> Result<HyperbolicGeodesic> {
    geodesic_with_samples(z, w, GEODESIC_SAMPLES)
}

pub fn geodesic_with_samples(z: Point, w: Point, samples: usize) -> Result<HyperbolicGeodesic> {
    if (z - w).norm() < 1e-14 {
        return Err(Error::Degenerate("geodesic endpoints coincide".into()));
    }
    if z.norm() > 1.0 + 1e-12 || w.norm() > 1.0 + 1e-12 {
        return Err(Error::Domain("geodesic endpoints must lie in the closed disk".into()));
    }
    let n = samples.max(2);
    // Collinear with the origin: cross product Im(z̄w) vanishes and both
    // points sit on the same diameter.
    if (z.conj() * w).im.abs() < 1e-12 && is_on_common_diameter(z, w) {
        let polyline: Vec<Point> = (0..=n)
            .map(|i| z + (w - z) * (i as f64 / n as f64))
            .collect();
        return Ok(HyperbolicGeodesic {
            kind: GeodesicKind::DiameterSegment,
            endpoints: (z, w),
            polyline,
        });
    }

    // Circle through z, w orthogonal to the unit circle: |c|² = r² + 1 gives
    // the linear system 2 Re(z̄c) = |z|² + 1, 2 Re(w̄c) = |w|² + 1.
    let (a1, b1, r1) = (2.0 * z.re, 2.0 * z.im, z.norm_sqr() + 1.0);
    let (a2, b2, r2) = (2.0 * w.re, 2.0 * w.im, w.norm_sqr() + 1.0);
    let det = a1 * b2 - a2 * b1;
    if det.abs() < 1e-14 {
        return Err(Error::Degenerate("geodesic circle system is singular".into()));
    }
    let cx = (r1 * b2 - r2 * b1) / det;
    let cy = (a1 * r2 - a2 * r1) / det;
    let center = Complex64::new(cx, cy);
    let radius = (center.norm_sqr() - 1.0).sqrt();

    let ang_z = (z - center).arg();
    let ang_w = (w - center).arg();
    // shorter arc between the two angles
    let mut sweep = ang_w - ang_z;
    if sweep > std::f64::consts::PI {
        sweep -= std::f64::consts::TAU;
    } else if sweep < -std::f64::consts::PI {
        sweep += std::f64::consts::TAU;
    }
    let mut polyline = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let ang = ang_z + sweep * i as f64 / n as f64;
        polyline.push(center + Complex64::from_polar(radius, ang));
    }
    // pin the endpoints exactly
    polyline[0] = z;
    polyline[n] = w;
    Ok(HyperbolicGeodesic {
        kind: GeodesicKind::CircularArc { center, radius },
        endpoints: (z, w),
        polyline,
    })
}

fn is_on_common_diameter(z: Point, w: Point) -> bool {
    // both on the line through the origin in direction of whichever is nonzero
    let dir = if z.norm() > w.norm() { z } else { w };
    if dir.norm() < 1e-14 {
        return true;
    }
    let u = dir / dir.norm();
    ((z * u.conj()).im.abs() < 1e-12) && ((w * u.conj()).im.abs() < 1e-12)
}

/// `∫ 2/(1−|ζ|²) |dζ|` along a polyline (midpoint rule per segment).
pub fn polyline_hyperbolic_length(polyline: &[Point]) -> f64 {
    let mut total = 0.0;
    for seg in polyline.windows(2) {
        let mid = (seg[0] + seg[1]) / 2.0;
        total += 2.0 / (1.0 - mid.norm_sqr()) * (seg[1] - seg[0]).norm();
    }
    total
}

impl HyperbolicGeodesic {
    /// Resample the same geodesic with a finer polyline.
    pub fn refined(&self, samples: usize) -> Result<Self> {
        geodesic_with_samples(self.endpoints.0, self.endpoints.1, samples)
    }

    /// Orthogonality defect `||c|² − r² − 1|` for arc geodesics (0 for segments).
    pub fn orthogonality_defect(&self) -> f64 {
        match self.kind {
            GeodesicKind::DiameterSegment => 0.0,
            GeodesicKind::CircularArc { center, radius } => {
                (center.norm_sqr() - radius * radius - 1.0).abs()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Point {
        Complex64::new(re, im)
    }

    #[test]
    fn distance_basics() {
        assert_eq!(hyperbolic_distance(c(0.0, 0.0), c(0.0, 0.0)).unwrap(), 0.0);
        // radial integral of 2/(1−t²) from 0 to 0.5 is log 3
        let d = hyperbolic_distance(c(0.0, 0.0), c(0.5, 0.0)).unwrap();
        assert!((d - 3.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn distance_matches_geodesic_integration() {
        // numeric oracle: integrate the density along the computed geodesic
        let z = c(0.5, 0.0);
        let w = c(0.0, 0.5);
        let geo = geodesic_with_samples(z, w, 1 << 15).unwrap();
        let numeric = polyline_hyperbolic_length(&geo.polyline);
        let closed = hyperbolic_distance(z, w).unwrap();
        assert!((numeric - closed).abs() < 1e-8, "{numeric} vs {closed}");
    }

    #[test]
    fn diameter_cases() {
        let g = geodesic_between(c(0.0, 0.0), c(0.9, 0.0)).unwrap();
        assert_eq!(g.kind, GeodesicKind::DiameterSegment);
        for theta in [0.3, 1.1, 2.9, 4.5] {
            let g = geodesic_between(
                Complex64::from_polar(0.2, theta),
                Complex64::from_polar(0.7, theta),
            )
            .unwrap();
            assert_eq!(g.kind, GeodesicKind::DiameterSegment, "theta={theta}");
        }
    }

    #[test]
    fn orthogonal_arc_case() {
        let g = geodesic_between(c(0.5, 0.0), c(0.0, 0.5)).unwrap();
        match g.kind {
            GeodesicKind::CircularArc { center, .. } => {
                // symmetry: center on the diagonal
                assert!((center.re - center.im).abs() < 1e-12);
                assert!(g.orthogonality_defect() < 1e-10);
            }
            _ => panic!("expected an arc"),
        }
        assert!((g.polyline[0] - c(0.5, 0.0)).norm() < 1e-14);
        assert!((g.polyline.last().unwrap() - c(0.0, 0.5)).norm() < 1e-14);
    }

    #[test]
    fn coincident_endpoints_rejected() {
        assert!(geodesic_between(c(0.3, 0.2), c(0.3, 0.2)).is_err());
    }

    #[test]
    fn geodesic_minimizes_among_perturbations() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let z = Complex64::from_polar(rng.gen::<f64>() * 0.85, rng.gen::<f64>() * 6.28);
            let w = Complex64::from_polar(rng.gen::<f64>() * 0.85, rng.gen::<f64>() * 6.28);
            if (z - w).norm() < 1e-3 {
                continue;
            }
            let geo = geodesic_with_samples(z, w, 4096).unwrap();
            let len = polyline_hyperbolic_length(&geo.polyline);
            let closed = hyperbolic_distance(z, w).unwrap();
            assert!((len - closed).abs() < 1e-6 * closed.max(1e-6));
            // perturb the midpoint normally; hyperbolic length must not drop
            let mut bent = geo.polyline.clone();
            let mid = bent.len() / 2;
            let tangent = bent[mid + 1] - bent[mid - 1];
            let normal = Complex64::new(-tangent.im, tangent.re);
            let scale = 0.02 / normal.norm().max(1e-12);
            for (k, p) in bent.iter_mut().enumerate() {
                let t = k as f64 / 4096.0;
                let bump = (std::f64::consts::PI * t).sin();
                *p += normal * scale * bump;
            }
            if bent.iter().all(|p| p.norm() < 0.999) {
                assert!(polyline_hyperbolic_length(&bent) >= len - 1e-9);
            }
        }
    }

    proptest! {
        #[test]
        fn triangle_inequality(
            r1 in 0.0..0.95f64, t1 in 0.0..6.28f64,
            r2 in 0.0..0.95f64, t2 in 0.0..6.28f64,
            r3 in 0.0..0.95f64, t3 in 0.0..6.28f64,
        ) {
            let a = Complex64::from_polar(r1, t1);
            let b = Complex64::from_polar(r2, t2);
            let cc = Complex64::from_polar(r3, t3);
            let ab = hyperbolic_distance(a, b).unwrap();
            let bc = hyperbolic_distance(b, cc).unwrap();
            let ac = hyperbolic_distance(a, cc).unwrap();
            prop_assert!(ac <= ab + bc + 1e-10);
            prop_assert!((ab - hyperbolic_distance(b, a).unwrap()).abs() < 1e-13);
        }

        #[test]
        fn mobius_invariance(
            r1 in 0.0..0.9f64, t1 in 0.0..6.28f64,
            r2 in 0.0..0.9f64, t2 in 0.0..6.28f64,
            ra in 0.0..0.7f64, ta in 0.0..6.28f64,
        ) {
            // pre-compose with the disk automorphism T_a(z) = (z−a)/(1−āz)
            let z = Complex64::from_polar(r1, t1);
            let w = Complex64::from_polar(r2, t2);
            let a = Complex64::from_polar(ra, ta);
            let t = |p: Point| (p - a) / (Complex64::new(1.0, 0.0) - a.conj() * p);
            let before = hyperbolic_distance(z, w).unwrap();
            let after = hyperbolic_distance(t(z), t(w)).unwrap();
            prop_assert!((before - after).abs() < 1e-9);
        }
    }
}
