//! Catalog of scalar fields `u` on the image domain.
//!
//! Constants and coordinate functions are the smooth bounded cases; the
//! distance power `|w − w₀|^β` (boundary `w₀`, `β ∈ (0,1)`) and the iterated
//! logarithm `log log(e + 1/|w − w₀|)` supply the singular and unbounded
//! members used by the convergence and truncation experiments.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::map::ConformalMap;
use crate::Point;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum FieldKind {
    Constant(f64),
    /// `u(w) = Re w`
    ReW,
    /// `u(w) = Im w`
    ImW,
    /// `u(w) = |w − w0|^beta`, `w0` on the image boundary
    PowerDist { w0: Point, beta: f64 },
    /// `u(w) = log log(e + 1/|w − w0|)`
    LogLog { w0: Point },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalarField {
    pub name: String,
    pub kind: FieldKind,
    pub bounded: bool,
    pub smooth: bool,
    /// pointwise clamp `max{min{u, M}, −M}` applied after evaluation
    pub clamp: Option<f64>,
}

impl ScalarField {
    pub fn constant(c: f64) -> Self {
        Self {
            name: format!("const:{c}"),
            kind: FieldKind::Constant(c),
            bounded: true,
            smooth: true,
            clamp: None,
        }
    }

    pub fn re() -> Self {
        Self {
            name: "re".into(),
            kind: FieldKind::ReW,
            bounded: true,
            smooth: true,
            clamp: None,
        }
    }

    pub fn im() -> Self {
        Self {
            name: "im".into(),
            kind: FieldKind::ImW,
            bounded: true,
            smooth: true,
            clamp: None,
        }
    }

    /// `|w − w0|^beta` anchored at the boundary image `w0 = φ(e^{iθ0})`.
    pub fn power_dist(w0: Point, beta: f64) -> Result<Self> {
        if !(0.0 < beta && beta < 1.0) {
            return Err(Error::Config(format!(
                "distance power needs beta in (0,1), got {beta}"
            )));
        }
        Ok(Self {
            name: format!("powerdist:{beta}"),
            kind: FieldKind::PowerDist { w0, beta },
            bounded: true,
            smooth: false,
            clamp: None,
        })
    }

    pub fn loglog(w0: Point) -> Self {
        Self {
            name: "loglog".into(),
            kind: FieldKind::LogLog { w0 },
            bounded: false,
            smooth: false,
            clamp: None,
        }
    }

    /// Parse `const:<c>`, `re`, `im`, `powerdist:<theta0>:<beta>` or
    /// `loglog:<theta0>`; the angle fixes the boundary anchor `φ(e^{iθ0})`.
    pub fn by_name(spec: &str, map: &ConformalMap) -> Result<Self> {
        let parts: Vec<&str> = spec.split(':').collect();
        let parse = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|_| Error::Config(format!("bad numeric field parameter '{s}'")))
        };
        let anchor = |theta: f64| -> Result<Point> {
            Ok(map
                .eval_closure(Point::from_polar(1.0, theta))?
                .0)
        };
        match parts.as_slice() {
            ["const", c] => Ok(Self::constant(parse(c)?)),
            ["re"] => Ok(Self::re()),
            ["im"] => Ok(Self::im()),
            ["powerdist", theta, beta] => Self::power_dist(anchor(parse(theta)?)?, parse(beta)?),
            ["loglog", theta] => Ok(Self::loglog(anchor(parse(theta)?)?)),
            _ => Err(Error::Config(format!("unknown field spec '{spec}'"))),
        }
    }

    pub fn eval(&self, w: Point) -> f64 {
        let raw = match &self.kind {
            FieldKind::Constant(c) => *c,
            FieldKind::ReW => w.re,
            FieldKind::ImW => w.im,
            FieldKind::PowerDist { w0, beta } => (w - w0).norm().powf(*beta),
            FieldKind::LogLog { w0 } => {
                let d = (w - w0).norm();
                (std::f64::consts::E + 1.0 / d.max(f64::MIN_POSITIVE)).ln().ln()
            }
        };
        match self.clamp {
            Some(m) => raw.clamp(-m, m),
            None => raw,
        }
    }

    /// `W^{1,p}` membership gate for the singular member: `p(1 − β) < 2`.
    pub fn check_membership(&self, p: f64) -> Result<()> {
        if let FieldKind::PowerDist { beta, .. } = self.kind {
            if p * (1.0 - beta) >= 2.0 {
                return Err(Error::Config(format!(
                    "|w-w0|^{beta} is not in W^{{1,{p}}}: p(1-beta) = {} >= 2",
                    p * (1.0 - beta)
                )));
            }
        }
        Ok(())
    }

    /// Pointwise truncation `max{min{u, M}, −M}`.
    pub fn truncate(&self, m_clamp: f64) -> Result<Self> {
        if !(m_clamp > 0.0) {
            return Err(Error::Config(format!(
                "truncation level must be positive, got {m_clamp}"
            )));
        }
        let mut out = self.clone();
        out.clamp = Some(match self.clamp {
            Some(existing) => existing.min(m_clamp),
            None => m_clamp,
        });
        out.bounded = true;
        out.name = format!("{}|trunc:{m_clamp}", self.name);
        Ok(out)
    }
}
