//! Two-time joint tails of the `d`-dimensional Bessel process
//! `Bes_d(t) = ‖W(t)‖`, reduced to the sequential chi-squared problem.
//!
//! `P(Bes_d(s₁) ≥ x₁, Bes_d(s₂) ≥ x₂)` equals `α(x₁*, x₂*)` for
//! `x₁* = x₁²/s₁`, `x₂* = x₂²/s₂`, `c = √(s₁/s₂)` and `N = d + 1`.

use serde::{Deserialize, Serialize};

use crate::asymptotics::alpha_asym;
use crate::error::{Error, Result};
use crate::model::TestDesign;
use crate::quadrature::{alpha_quad, CriticalPair, QuadResult};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BesselQuery {
    d: u32,
    s1: f64,
    s2: f64,
    x1: f64,
    x2: f64,
}

impl BesselQuery {
    pub fn new(d: u32, s1: f64, s2: f64, x1: f64, x2: f64) -> Result<Self> {
        if d < 2 {
            return Err(Error::param(
                "d",
                format!("dimension must be at least 2, got {d}"),
            ));
        }
        if !(s1 > 0.0 && s1 < s2 && s2.is_finite()) {
            return Err(Error::param(
                "s",
                format!("need 0 < s1 < s2, got s1 = {s1}, s2 = {s2}"),
            ));
        }
        for (name, x) in [("x1", x1), ("x2", x2)] {
            if !(x >= 0.0 && x.is_finite()) {
                return Err(Error::param(
                    name,
                    format!("must be finite and nonnegative, got {x}"),
                ));
            }
        }
        Ok(Self { d, s1, s2, x1, x2 })
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn times(&self) -> (f64, f64) {
        (self.s1, self.s2)
    }

    pub fn thresholds(&self) -> (f64, f64) {
        (self.x1, self.x2)
    }
}

/// The equivalent chi-squared levels and design. Time is rescaled so that
/// `s₂ = 1` before mapping, which leaves the result unchanged by Brownian
/// scaling.
pub fn map_to_chi2(q: &BesselQuery) -> Result<(CriticalPair, TestDesign)> {
    let s = q.s1 / q.s2;
    let root = q.s2.sqrt();
    let (y1, y2) = (q.x1 / root, q.x2 / root);
    let levels = CriticalPair::new(y1 * y1 / s, y2 * y2)?;
    let design = TestDesign::new(q.d + 1, s.sqrt())?;
    Ok((levels, design))
}

/// `ln P(Bes_d(s₁) ≥ x₁, Bes_d(s₂) ≥ x₂)` to leading order, for
/// `1 < x₂/x₁ < s₂/s₁`.
pub fn bessel_tail_asym(q: &BesselQuery) -> Result<f64> {
    let (levels, design) = map_to_chi2(q)?;
    let rho = levels.rho().ok_or(Error::RhoWindow {
        rho: f64::NAN,
        c: design.c(),
    })?;
    alpha_asym(levels.x1_star, rho, &design)
}

/// The joint tail by quadrature of the limiting density.
pub fn bessel_tail_quad(q: &BesselQuery, rel_tol: f64) -> Result<QuadResult> {
    let (levels, design) = map_to_chi2(q)?;
    alpha_quad(&levels, &design, rel_tol)
}
