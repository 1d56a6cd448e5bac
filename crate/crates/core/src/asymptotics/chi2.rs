//! Chi-squared survival function for integer degrees of freedom, its inverse,
//! and the leading tail term.

use libm::erfc;
use libm::lgamma as ln_gamma;

use crate::error::{Error, Result};

fn check(x: f64, k: u32) -> Result<()> {
    if k == 0 {
        return Err(Error::param("k", "degrees of freedom must be at least 1"));
    }
    if !(x >= 0.0) {
        return Err(Error::param("x", format!("must be nonnegative, got {x}")));
    }
    Ok(())
}

/// `ln erfc(y)` for `y ≥ 0`, past the underflow of `erfc`.
fn ln_erfc(y: f64) -> f64 {
    if y < 25.0 {
        return erfc(y).ln();
    }
    let w = 1.0 / (2.0 * y * y);
    // erfc(y) = e^{−y²}/(y√π) · Σ (−1)^j (2j−1)!! / (2y²)^j
    let series = 1.0 - w * (1.0 - 3.0 * w * (1.0 - 5.0 * w * (1.0 - 7.0 * w * (1.0 - 9.0 * w))));
    -y * y - (y * std::f64::consts::PI.sqrt()).ln() + series.ln()
}

fn log_sum_exp(values: &[f64]) -> f64 {
    let m = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + values.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// `ln P(χ²_k > x)`.
///
/// Even `k`: `e^{−x/2} Σ_{j<k/2} (x/2)^j/j!`.
/// Odd `k`: `erfc(√(x/2)) + e^{−x/2} Σ_{j=0}^{(k−3)/2} (x/2)^{j+½}/Γ(j+3/2)`.
pub fn ln_chi2_tail(x: f64, k: u32) -> Result<f64> {
    check(x, k)?;
    if x == 0.0 {
        return Ok(0.0);
    }
    let h = 0.5 * x;
    let ln_h = h.ln();
    let mut logs = Vec::with_capacity(k as usize / 2 + 1);
    // Terms by their ratio recurrence, so the k = 2 tail is exactly −x/2.
    if k.is_multiple_of(2) {
        let mut t = -h;
        for j in 0..k / 2 {
            if j > 0 {
                t += ln_h - (j as f64).ln();
            }
            logs.push(t);
        }
    } else {
        logs.push(ln_erfc(h.sqrt()));
        // Γ(3/2) = √π/2
        let mut t = 0.5 * ln_h - h - (0.5 * std::f64::consts::PI.sqrt()).ln();
        for j in 0..(k - 1) / 2 {
            if j > 0 {
                t += ln_h - (j as f64 + 0.5).ln();
            }
            logs.push(t);
        }
    }
    Ok(log_sum_exp(&logs).min(0.0))
}

/// `P(χ²_k > x)`, accurate to about `1e-13` relative.
pub fn chi2_tail_exact(x: f64, k: u32) -> Result<f64> {
    ln_chi2_tail(x, k).map(f64::exp)
}

/// `ln` of the chi-squared density.
fn ln_chi2_pdf(x: f64, k: u32) -> f64 {
    let a = 0.5 * k as f64;
    (a - 1.0) * x.ln() - 0.5 * x - a * std::f64::consts::LN_2 - ln_gamma(a)
}

/// The `x` with `P(χ²_k > x) = alpha`.
///
/// Brackets the root of `ln Q(x) − ln α`, then runs Newton steps that fall
/// back to bisection whenever they leave the bracket.
pub fn invert_chi2_tail(alpha: f64, k: u32) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::param(
            "alpha",
            format!("must lie in (0, 1), got {alpha}"),
        ));
    }
    invert_ln_chi2_tail(alpha.ln(), k)
}

/// The `x` with `ln P(χ²_k > x) = ln_alpha`, for `ln_alpha < 0`.
pub fn invert_ln_chi2_tail(ln_alpha: f64, k: u32) -> Result<f64> {
    if !(ln_alpha < 0.0) || ln_alpha == f64::NEG_INFINITY {
        return Err(Error::param(
            "ln_alpha",
            format!("must be finite and negative, got {ln_alpha}"),
        ));
    }
    check(0.0, k)?;
    let h = |x: f64| ln_chi2_tail(x, k).map(|q| q - ln_alpha);

    let mut lo = 0.0;
    let mut hi = (k as f64).max(1.0) - 2.0 * ln_alpha;
    while h(hi)? > 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let hx = h(x)?;
        if hx > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        if hx == 0.0 || hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
        // d/dx ln Q = −pdf/Q
        let slope = -(ln_chi2_pdf(x, k) - (hx + ln_alpha)).exp();
        let newton = x - hx / slope;
        let next = if slope.is_finite() && slope < 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - x).abs() <= 2.0 * f64::EPSILON * x {
            x = next;
            break;
        }
        x = next;
    }
    Ok(x)
}

/// `ln[(x/2)^{k/2−1} e^{−x/2}]`, the leading tail term without normalization.
pub fn ln_chi2_tail_asym_raw(x: f64, k: u32) -> f64 {
    (0.5 * k as f64 - 1.0) * (0.5 * x).ln() - 0.5 * x
}

/// `(x/2)^{k/2−1} e^{−x/2}`: the leading term of `∫_{x/2}^∞ u^{k/2−1} e^{−u} du`.
pub fn chi2_tail_asym_raw(x: f64, k: u32) -> f64 {
    ln_chi2_tail_asym_raw(x, k).exp()
}

/// `ln[(x/2)^{k/2−1} e^{−x/2} / Γ(k/2)]`.
pub fn ln_chi2_tail_asym(x: f64, k: u32) -> f64 {
    ln_chi2_tail_asym_raw(x, k) - ln_gamma(0.5 * k as f64)
}

/// `(x/2)^{k/2−1} e^{−x/2} / Γ(k/2)`, approximating `P(χ²_k > x)` as
/// `x → ∞`. Exact for `k = 2`.
pub fn chi2_tail_asym(x: f64, k: u32) -> Result<f64> {
    if k < 2 {
        return Err(Error::param("k", format!("must be at least 2, got {k}")));
    }
    if !(x > 0.0) {
        return Err(Error::param("x", format!("must be positive, got {x}")));
    }
    Ok(ln_chi2_tail_asym(x, k).exp())
}
