//! α expressed through the marginal significance levels `α₁, α₂`.

use libm::lgamma as ln_gamma;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::TestDesign;

/// Marginal levels with `α₂ = α₁^{P²}`, i.e. `P = √(ln α₂ / ln α₁)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelSpec {
    pub alpha1: f64,
    pub p_ratio: f64,
    pub alpha2: f64,
}

fn check_level(name: &'static str, a: f64) -> Result<()> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::param(name, format!("must lie in (0, 1), got {a}")));
    }
    Ok(())
}

impl LevelSpec {
    pub fn from_p(alpha1: f64, p_ratio: f64) -> Result<Self> {
        check_level("alpha1", alpha1)?;
        if !(p_ratio > 0.0 && p_ratio.is_finite()) {
            return Err(Error::param(
                "p_ratio",
                format!("must be positive, got {p_ratio}"),
            ));
        }
        Ok(Self {
            alpha1,
            p_ratio,
            alpha2: (p_ratio * p_ratio * alpha1.ln()).exp(),
        })
    }

    pub fn from_alphas(alpha1: f64, alpha2: f64) -> Result<Self> {
        check_level("alpha1", alpha1)?;
        check_level("alpha2", alpha2)?;
        Ok(Self {
            alpha1,
            p_ratio: (alpha2.ln() / alpha1.ln()).sqrt(),
            alpha2,
        })
    }
}

/// `ln α` from the marginal levels, as `α₁ → 0` with `P` fixed.
///
/// With `L = −ln α₁`,
/// `Q = P^{2(N−3)(1−c/P)} Γ((N−1)/2)^{−4(1−Pc)} L^{(N−3)(2−c(P+1/P))} α₁^{−2(P²−2Pc+1)}`
/// and
/// `α ≈ (1−c²)^{3/2} P^{N/2−1} L^{N/2−2} Q^{−1/(2(1−c²))} / (2c^{N/2−1}√π Γ((N−1)/2)(P−c)(1−cP))`.
pub fn alpha_from_levels(spec: &LevelSpec, design: &TestDesign) -> Result<f64> {
    let c = design.c();
    let p = spec.p_ratio;
    if !(p > c && p < 1.0 / c) {
        return Err(Error::RhoWindow { rho: p, c });
    }
    check_level("alpha1", spec.alpha1)?;
    let ln_a1 = spec.alpha1.ln();
    let l = -ln_a1;
    if !(l > 1.0) {
        return Err(Error::param(
            "alpha1",
            format!("need -ln(alpha1) > 1, got {l}"),
        ));
    }
    let n = design.n_outcomes() as f64;
    let beta = design.beta();
    let lg = ln_gamma(0.5 * (n - 1.0));
    let ln_q = 2.0 * (n - 3.0) * (1.0 - c / p) * p.ln() - 4.0 * (1.0 - p * c) * lg
        + (n - 3.0) * (2.0 - c * (p + 1.0 / p)) * l.ln()
        - 2.0 * (p * p - 2.0 * p * c + 1.0) * ln_a1;
    Ok(
        1.5 * beta.ln() + (0.5 * n - 1.0) * p.ln() + (0.5 * n - 2.0) * l.ln()
            - ln_q / (2.0 * beta)
            - std::f64::consts::LN_2
            - (0.5 * n - 1.0) * c.ln()
            - 0.5 * std::f64::consts::PI.ln()
            - lg
            - (p - c).ln()
            - (1.0 - c * p).ln(),
    )
}

/// `ln α` for equal marginal levels `α₂ = α₁`:
/// `(1−c²)^{3/2} Γ((N−1)/2)^{(1−c)/(1+c)} / (2c^{N/2−1}√π(1−c)²) ·
/// L^{N/2−(N−3)/(1+c)−2} α₁^{2/(1+c)}`.
pub fn alpha_equal_levels(alpha1: f64, design: &TestDesign) -> Result<f64> {
    check_level("alpha1", alpha1)?;
    let c = design.c();
    let n = design.n_outcomes() as f64;
    let l = -alpha1.ln();
    Ok(
        1.5 * design.beta().ln() + (1.0 - c) / (1.0 + c) * ln_gamma(0.5 * (n - 1.0))
            - std::f64::consts::LN_2
            - (0.5 * n - 1.0) * c.ln()
            - 0.5 * std::f64::consts::PI.ln()
            - 2.0 * (1.0 - c).ln()
            + (0.5 * n - (n - 3.0) / (1.0 + c) - 2.0) * l.ln()
            + equal_levels_exponent(c) * alpha1.ln(),
    )
}

/// The power of `α₁` in [`alpha_equal_levels`], `2/(1+c)`.
pub fn equal_levels_exponent(c: f64) -> f64 {
    2.0 / (1.0 + c)
}

/// Approximates `√(t₁t₂)` where `αᵢ = e^{−tᵢ} tᵢⁿ` and `tᵢ → ∞`:
/// `P·(−ln α₁) + (Pn/2) ln t₁ + (n/(2P)) ln t₂`, with `P = √(ln α₂/ln α₁)`
/// and `tᵢ ≈ −ln αᵢ + n ln(−ln αᵢ)`.
///
/// The approximation needs `tᵢ` well into the tail. Checked against the exact
/// fixed point, the relative error is below 1% for `n ≤ 2` once
/// `−ln αᵢ ≥ 13`; it grows roughly like `n² ln(−ln α)/(−ln α)²`. Inputs whose
/// first-step `tᵢ` is not positive are rejected.
pub fn lemma2_log_exp_sqrt(alpha1: f64, alpha2: f64, n: f64) -> Result<f64> {
    check_level("alpha1", alpha1)?;
    check_level("alpha2", alpha2)?;
    if !(n >= 0.0 && n.is_finite()) {
        return Err(Error::param(
            "n",
            format!("must be finite and nonnegative, got {n}"),
        ));
    }
    let (l1, l2) = (-alpha1.ln(), -alpha2.ln());
    let p = (l2 / l1).sqrt();
    if n == 0.0 {
        return Ok((l1 * l2).sqrt());
    }
    let t1 = l1 + n * l1.ln();
    let t2 = l2 + n * l2.ln();
    if !(t1 > 0.0 && t2 > 0.0) {
        return Err(Error::Domain(format!(
            "levels too large for the tail approximation: t1 = {t1}, t2 = {t2}"
        )));
    }
    Ok(p * l1 + 0.5 * p * n * t1.ln() + 0.5 * n / p * t2.ln())
}
