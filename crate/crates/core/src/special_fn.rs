//! The modified Bessel function of the first kind `I_ν(x)` (the Infeld
//! function) for real `ν ≥ 0` and `x ≥ 0`.
//!
//! Three evaluators are provided, each returning an [`Enclosure`]:
//!
//! * [`infeld_series`]: the power series with a geometric tail majorant,
//! * [`infeld_scaled`]: `e^{-x} I_ν(x)`, switching from the series to the
//!   leading asymptotic term `1/√(2πx)` with the relative-error envelope
//!   [`psi_envelope`] at `x_c = max(30, 4ν + 10)`,
//! * [`infeld_scaled_weber`]: the two-term Hankel expansion with the Weber
//!   remainder bound.
//!
//! [`ln_infeld_scaled`] is the accurate point evaluator used by the densities.

use libm::lgamma as ln_gamma;

use crate::enclosure::{Enclosure, EnclosureTag};
use crate::error::{Error, Result};

const UNIT_ROUNDOFF: f64 = f64::EPSILON / 2.0;

/// Default relative tolerance for internal series evaluations.
const SERIES_REL_TOL: f64 = 1e-14;

/// Bessel order `ν ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct BesselOrder(f64);

impl BesselOrder {
    pub fn new(nu: f64) -> Result<Self> {
        if !nu.is_finite() {
            return Err(Error::param("nu", format!("must be finite, got {nu}")));
        }
        if nu < 0.0 {
            return Err(Error::param(
                "nu",
                format!("negative orders are not supported, got {nu}"),
            ));
        }
        Ok(Self(nu))
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    #[inline]
    pub fn is_half(self) -> bool {
        self.0 == 0.5
    }

    /// `4ν² − 1`.
    #[inline]
    fn mu_minus_one(self) -> f64 {
        4.0 * self.0 * self.0 - 1.0
    }
}

impl TryFrom<f64> for BesselOrder {
    type Error = Error;

    fn try_from(nu: f64) -> Result<Self> {
        Self::new(nu)
    }
}

/// Crossover between the series and the asymptotic branch.
pub fn crossover(nu: BesselOrder) -> f64 {
    (4.0 * nu.value() + 10.0).max(30.0)
}

/// Truncated Hankel expansion of `I_ν(x)` with its remainder bound.
#[derive(Debug, Clone, PartialEq)]
pub struct WeberTerms {
    pub p: usize,
    /// `A_p = Σ_{m<p} (ν,m) / (2x)^m`
    pub a_p: f64,
    /// `B_p = Σ_{m<p} (−1)^m (ν,m) / (2x)^m`
    pub b_p: f64,
    pub g: f64,
    /// Common bound on both remainders.
    pub remainder_bound: f64,
    /// `(ν,m)` for `m = 0..p`.
    pub pochhammer: Vec<f64>,
}

/// Hankel coefficient `(ν,m)` for `m = 0..=m_max`, by the recurrence
/// `(ν,m) = (ν,m−1)·(4ν² − (2m−1)²)/(4m)`.
fn hankel_coefficients(nu: BesselOrder, m_max: usize) -> Vec<f64> {
    let four_nu_sq = 4.0 * nu.value() * nu.value();
    let mut out = Vec::with_capacity(m_max + 1);
    let mut c = 1.0;
    out.push(c);
    for m in 1..=m_max {
        let odd = (2 * m - 1) as f64;
        c *= (four_nu_sq - odd * odd) / (4.0 * m as f64);
        out.push(c);
    }
    out
}

/// Checks the argument condition and returns the Weber factor `G`.
fn weber_g(nu: BesselOrder, x: f64) -> Result<f64> {
    let v = nu.value();
    if nu.is_half() {
        if x > 0.0 {
            return Ok(1.0);
        }
        return Err(Error::Domain(format!("x > 0 violated: x = {x}")));
    }
    if v > 0.5 {
        if !(2.0 * x > v - 0.5) {
            return Err(Error::Domain(format!(
                "2x > nu - 1/2 violated: nu = {v}, x = {x}"
            )));
        }
        Ok((1.0 - (v - 0.5) / (2.0 * x)).powf(-v - 0.5))
    } else {
        if !(2.0 * x > v + 1.5) {
            return Err(Error::Domain(format!(
                "2x > nu + 3/2 violated: nu = {v}, x = {x}"
            )));
        }
        Ok((1.0 - (v + 1.5) / (2.0 * x)).powf(-v - 1.5) * (1.0 + (2.0 * v + 2.0) / x))
    }
}

/// `p`-term Hankel expansion of `I_ν(x)` and the Weber bound on its
/// remainders.
///
/// For `ν > ½` requires `2x > ν − ½`; for `0 ≤ ν < ½` requires
/// `2x > ν + 3/2` and uses the corresponding `G`. For `ν = ½` the expansion
/// terminates after one term and the remainder is zero.
pub fn weber_expansion(nu: BesselOrder, x: f64, p: usize) -> Result<WeberTerms> {
    if p == 0 {
        return Err(Error::param("p", "number of terms must be positive"));
    }
    let g = weber_g(nu, x)?;
    let coeffs = hankel_coefficients(nu, p);
    let two_x = 2.0 * x;
    let mut a_p = 0.0;
    let mut b_p = 0.0;
    let mut scale = 1.0;
    for (m, &c) in coeffs[..p].iter().enumerate() {
        let t = c / scale;
        a_p += t;
        b_p += if m % 2 == 0 { t } else { -t };
        scale *= two_x;
    }
    let next = coeffs[p].abs();
    let remainder_bound = if next == 0.0 {
        0.0
    } else {
        let pf = p as f64;
        let ln_ratio =
            ln_gamma(0.5) + ln_gamma(pf / 2.0 + 1.0) - ln_gamma((pf + 1.0) / 2.0) - pf * two_x.ln();
        2.0 * g * g * next * ln_ratio.exp()
    };
    let mut pochhammer = coeffs;
    pochhammer.truncate(p);
    Ok(WeberTerms {
        p,
        a_p,
        b_p,
        g,
        remainder_bound,
        pochhammer,
    })
}

/// Relative-error envelope of the leading asymptotic term:
/// `|I_ν(x) / (e^x/√(2πx)) − 1| ≤ Ψ(ν, x)`.
///
/// Domain: `2x > ν − ½` for `ν > ½`, `2x > ν + 3/2` for `ν < ½`, any
/// `x > 0` for `ν = ½` (where `Ψ = e^{−2x}`).
pub fn psi_envelope(nu: BesselOrder, x: f64) -> Result<f64> {
    let v = nu.value();
    let e2x = (-2.0 * x).exp();
    if nu.is_half() {
        if x > 0.0 {
            return Ok(e2x);
        }
        return Err(Error::Domain(format!("x > 0 violated: x = {x}")));
    }
    // Envelope G: the square of the Weber factor when ν > ½.
    let g = if v > 0.5 {
        let w = weber_g(nu, x)?;
        w * w
    } else {
        weber_g(nu, x)?
    };
    let mu1 = nu.mu_minus_one().abs();
    let mu9 = (4.0 * v * v - 9.0).abs();
    Ok(e2x + (mu1 / (8.0 * x) + g * mu1 * mu9 / (32.0 * x * x)) * (1.0 + e2x))
}

/// Result of summing the power series in log-space.
#[derive(Debug, Clone, Copy)]
struct SeriesLog {
    /// `ln Σ_{k ≤ K} t_k`
    ln_sum: f64,
    /// Bound on the neglected tail relative to the partial sum.
    rel_tail: f64,
    terms: usize,
}

/// Sums `Σ_k (x/2)^{ν+2k} / (Γ(k+1) Γ(k+ν+1))` with terms normalized by the
/// largest one, so that neither factor of `e^{±x}` is formed.
fn series_log(nu: BesselOrder, x: f64, rel_tol: f64) -> SeriesLog {
    let v = nu.value();
    if x == 0.0 {
        return SeriesLog {
            ln_sum: if v == 0.0 { 0.0 } else { f64::NEG_INFINITY },
            rel_tail: 0.0,
            terms: 1,
        };
    }
    let q = 0.25 * x * x;
    let ratio = |k: usize| q / ((k as f64 + 1.0) * (k as f64 + v + 1.0));
    let ln_t0 = v * (0.5 * x).ln() - ln_gamma(v + 1.0);

    // Terms grow while the ratio is at least one; locate the peak.
    let mut k_peak = 0usize;
    let mut ln_peak = ln_t0;
    while ratio(k_peak) >= 1.0 {
        ln_peak += ratio(k_peak).ln();
        k_peak += 1;
    }

    // Upward from the peak until the geometric tail bound is small enough.
    let target = 0.25 * rel_tol;
    let mut term = 1.0;
    let mut sum = 0.0;
    let mut k = k_peak;
    let up_tail = loop {
        sum += term;
        let r = ratio(k);
        if r < 0.5 {
            let tail = term * r / (1.0 - r);
            if tail <= target * sum || tail == 0.0 {
                break tail;
            }
        }
        term *= r;
        k += 1;
    };
    let mut terms = k - k_peak + 1;

    // Downward from the peak; terms decrease monotonically, so the `j`
    // skipped terms below index `j` sum to at most `j` times the last one.
    let mut term = 1.0;
    let mut down_tail = 0.0;
    for j in (0..k_peak).rev() {
        term /= ratio(j);
        sum += term;
        terms += 1;
        let rest = term * j as f64;
        if rest <= 1e-3 * target * sum {
            down_tail = rest;
            break;
        }
    }
    SeriesLog {
        ln_sum: ln_peak + sum.ln(),
        rel_tail: (up_tail + down_tail) / sum,
        terms,
    }
}

/// Relative rounding allowance for a series of `terms` positive terms, each
/// built by the multiplicative recurrence.
fn series_rounding(terms: usize) -> f64 {
    (4 * terms + 16) as f64 * UNIT_ROUNDOFF
}

/// Encloses `I_ν(x)` by its power series.
///
/// The relative width is at most `rel_tol` whenever `rel_tol` is above the
/// rounding floor of the summation (about `1e-13` for `x ≤ 100`).
pub fn infeld_series(nu: BesselOrder, x: f64, rel_tol: f64) -> Result<Enclosure> {
    check_x(x)?;
    if !(rel_tol > 0.0 && rel_tol < 1.0) {
        return Err(Error::param(
            "rel_tol",
            format!("must lie in (0, 1), got {rel_tol}"),
        ));
    }
    let s = series_log(nu, x, rel_tol);
    if s.ln_sum == f64::NEG_INFINITY {
        return Ok(Enclosure::point(0.0, EnclosureTag::Series));
    }
    let slack = series_rounding(s.terms);
    let ln_hi = s.ln_sum + (s.rel_tail + slack).ln_1p();
    if ln_hi >= f64::MAX.ln() {
        return Err(Error::Overflow { x });
    }
    if x == 0.0 {
        return Ok(Enclosure::point(1.0, EnclosureTag::Series));
    }
    let sum = s.ln_sum.exp();
    Ok(Enclosure::new(
        sum * (1.0 - slack),
        ln_hi.exp(),
        EnclosureTag::Series,
    ))
}

/// Encloses `e^{−x} I_ν(x)`.
///
/// Below [`crossover`] the series is used; above it the value is
/// `1/√(2πx) · (1 ± Ψ(ν, x))`. Order one half uses the closed form
/// `(1 − e^{−2x}) / √(2πx)`.
pub fn infeld_scaled(nu: BesselOrder, x: f64) -> Result<Enclosure> {
    check_x(x)?;
    if x == 0.0 {
        let v = if nu.value() == 0.0 { 1.0 } else { 0.0 };
        return Ok(Enclosure::point(v, EnclosureTag::Series));
    }
    if nu.is_half() {
        let v = half_order_scaled(x);
        let slack = 8.0 * UNIT_ROUNDOFF;
        return Ok(Enclosure::new(
            v * (1.0 - slack),
            v * (1.0 + slack),
            EnclosureTag::ExactHalf,
        ));
    }
    if x < crossover(nu) {
        return Ok(scaled_series_enclosure(nu, x, SERIES_REL_TOL));
    }
    let mid = 1.0 / (2.0 * std::f64::consts::PI * x).sqrt();
    let psi = psi_envelope(nu, x)?;
    Ok(Enclosure::new(
        (mid * (1.0 - psi)).max(0.0),
        mid * (1.0 + psi),
        EnclosureTag::PsiEnvelope,
    ))
}

/// Encloses `e^{−x} I_ν(x)` by the two-term Hankel expansion:
/// `|√(2πx) e^{−x} I_ν(x) − B₂| ≤ R + e^{−2x} (|A₂| + R)`.
pub fn infeld_scaled_weber(nu: BesselOrder, x: f64) -> Result<Enclosure> {
    let w = weber_expansion(nu, x, 2)?;
    let err = w.remainder_bound + (-2.0 * x).exp() * (w.a_p.abs() + w.remainder_bound);
    let norm = 1.0 / (2.0 * std::f64::consts::PI * x).sqrt();
    Ok(Enclosure::new(
        (norm * (w.b_p - err)).max(0.0),
        norm * (w.b_p + err),
        EnclosureTag::WeberP2,
    ))
}

/// `ln(e^{−x} I_ν(x))`, accurate to a few ulps of the logarithm.
///
/// Uses the series below [`crossover`] and the Hankel sum `B_p` with
/// optimal truncation above it; the neglected `e^{−2x}` branch is below
/// `e^{−60}` there. Returns negative infinity for `x = 0, ν > 0`.
pub fn ln_infeld_scaled(nu: BesselOrder, x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    if x == 0.0 {
        return if nu.value() == 0.0 {
            0.0
        } else {
            f64::NEG_INFINITY
        };
    }
    if nu.is_half() {
        return half_order_scaled(x).ln();
    }
    if x < crossover(nu) {
        return series_log(nu, x, SERIES_REL_TOL).ln_sum - x;
    }
    let four_nu_sq = 4.0 * nu.value() * nu.value();
    let inv_two_x = 0.5 / x;
    let mut sum = 1.0;
    let mut term = 1.0f64;
    for m in 1..64 {
        let odd = (2 * m - 1) as f64;
        let next = -term * (four_nu_sq - odd * odd) / (4.0 * m as f64) * inv_two_x;
        if next == 0.0 {
            break;
        }
        if next.abs() >= term.abs() {
            break;
        }
        sum += next;
        term = next;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum.ln() - 0.5 * (2.0 * std::f64::consts::PI * x).ln()
}

fn half_order_scaled(x: f64) -> f64 {
    -(-2.0 * x).exp_m1() / (2.0 * std::f64::consts::PI * x).sqrt()
}

fn scaled_series_enclosure(nu: BesselOrder, x: f64, rel_tol: f64) -> Enclosure {
    let s = series_log(nu, x, rel_tol);
    let slack = series_rounding(s.terms);
    let v = (s.ln_sum - x).exp();
    Enclosure::new(
        v * (1.0 - slack),
        v * (1.0 + s.rel_tail) * (1.0 + slack),
        EnclosureTag::Series,
    )
}

fn check_x(x: f64) -> Result<()> {
    if x.is_nan() || x < 0.0 {
        return Err(Error::param("x", format!("must be nonnegative, got {x}")));
    }
    if x.is_infinite() {
        return Err(Error::param("x", "must be finite"));
    }
    Ok(())
}
