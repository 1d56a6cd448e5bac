//! Certified two-sided bracket for `α(x₁*, x₂*)` from the Laplace-method
//! error terms θ₁…θ₇ and the remainder integral Ĩ₄.

use libm::lgamma as ln_gamma;
use serde::{Deserialize, Serialize};

use super::{corner_exponent, validity_check};
use crate::enclosure::{EnclosureTag, LogEnclosure};
use crate::error::{Error, Result};
use crate::model::TestDesign;
use crate::quadrature::CriticalPair;
use crate::special_fn::{psi_envelope, BesselOrder};

/// Every intermediate bound of one bracket evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BracketLedger {
    pub epsilon: f64,
    /// Intervals `[0, bound]` for θ₂…θ₆, and the exact θ₇ as a point.
    pub theta_bounds: [(f64, f64); 6],
    /// Ψ, bounding |θ₁|.
    pub theta1_bound: f64,
    pub i6_bound: f64,
    /// Upper bound on Ĩ₄; its lower bound is 0.
    pub i4_tilde_bound: f64,
    /// `ln[e^{−λS} / (4λ²ρ(ρ−c)(1−cρ))]`
    pub leading: f64,
    /// `ln[(x₁*x₂*)^{N/4} / ((2c)^{N/2−1} Γ((N−1)/2) √(π(1−c²)))]`
    pub prefactor_log: f64,
    /// The lower endpoint collapsed to zero (Ψ ≥ 1 or a θ bound reached 1).
    pub lo_clamped: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaBracket {
    pub enclosure: LogEnclosure,
    pub ledger: BracketLedger,
}

/// How [`alpha_bracket_with`] chooses ε.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpsilonPolicy {
    /// [`epsilon_pick`]
    Default,
    /// [`epsilon_refined`]
    Refined,
}

#[derive(Debug, Clone, Copy)]
struct Geometry {
    n: f64,
    c: f64,
    beta: f64,
    lambda: f64,
    rho: f64,
    s: f64,
    m: f64,
    /// `(1−c²)/c² − S`
    gap: f64,
    prefactor_log: f64,
    psi: f64,
}

fn geometry(levels: &CriticalPair, design: &TestDesign) -> Result<Geometry> {
    validity_check(levels, design).into_result()?;
    let n = design.n_outcomes() as f64;
    let c = design.c();
    let beta = design.beta();
    let rho = levels.rho().expect("validity implies x1* > 0");
    let s = corner_exponent(rho, c);
    let product = levels.x1_star * levels.x2_star;
    let prefactor_log = 0.25 * n * product.ln()
        - (0.5 * n - 1.0) * (2.0 * c).ln()
        - ln_gamma(0.5 * (n - 1.0))
        - 0.5 * (std::f64::consts::PI * beta).ln();
    let z = c * product.sqrt() / beta;
    let psi = psi_envelope(BesselOrder::new(design.delta())?, z)?;
    Ok(Geometry {
        n,
        c,
        beta,
        lambda: levels.lambda(design),
        rho,
        s,
        m: (rho - c).min(1.0 - c * rho),
        gap: beta / (c * c) - s,
        prefactor_log,
        psi,
    })
}

fn sup_of(g: &Geometry) -> f64 {
    let root = -g.m + (g.m * g.m + g.gap).sqrt();
    (g.rho / g.c - 1.0).min(1.0 / g.c - g.rho).min(root)
}

/// Supremum of the feasible ε:
/// `0 < ε < min(ρ/c − 1, 1/c − ρ)` and `ε(2m + ε) < (1−c²)/c² − S` with
/// `m = min(ρ−c, 1−cρ)`.
pub fn epsilon_sup(levels: &CriticalPair, design: &TestDesign) -> Result<f64> {
    geometry(levels, design).map(|g| sup_of(&g))
}

fn feasible(g: &Geometry, eps: f64) -> bool {
    eps > 0.0
        && eps < g.rho / g.c - 1.0
        && eps < 1.0 / g.c - g.rho
        && eps * (2.0 * g.m + eps) < g.gap
}

/// Default ε: `min(½·min(ρ/c−1, 1/c−ρ, ρ−c), 3 ln λ/λ, ½·ε_gap)` where
/// `ε_gap` is the positive root of `ε(2m+ε) = (1−c²)/c² − S`.
///
/// The `ρ − c` cap keeps the θ₃ bound `ε/(ρ−c)` below one.
pub fn epsilon_pick(levels: &CriticalPair, design: &TestDesign) -> Result<f64> {
    let g = geometry(levels, design)?;
    Ok(pick_of(&g))
}

fn pick_of(g: &Geometry) -> f64 {
    let window = (g.rho / g.c - 1.0).min(1.0 / g.c - g.rho).min(g.rho - g.c);
    let root = -g.m + (g.m * g.m + g.gap).sqrt();
    (0.5 * window)
        .min(3.0 * g.lambda.ln() / g.lambda)
        .min(0.5 * root)
}

/// ε minimizing the log-width of the bracket: a 64-point logarithmic scan of
/// the feasible interval followed by golden-section refinement around the
/// best grid point.
pub fn epsilon_refined(levels: &CriticalPair, design: &TestDesign) -> Result<f64> {
    let g = geometry(levels, design)?;
    Ok(refined_of(&g))
}

fn refined_of(g: &Geometry) -> f64 {
    let width = |eps: f64| {
        let (e, _) = assemble(g, eps);
        if e.ln_lo == f64::NEG_INFINITY {
            f64::INFINITY
        } else {
            e.ln_hi - e.ln_lo
        }
    };
    let top = 0.999 * sup_of(g);
    let bottom = 1e-6 * top;
    const GRID: usize = 64;
    let grid: Vec<f64> = (0..GRID)
        .map(|i| bottom * (top / bottom).powf(i as f64 / (GRID - 1) as f64))
        .collect();
    let widths: Vec<f64> = grid.iter().map(|&e| width(e)).collect();
    let (best, _) = widths
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty grid");
    if !widths[best].is_finite() {
        return pick_of(g);
    }
    let mut a = grid[best.saturating_sub(1)];
    let mut b = grid[(best + 1).min(GRID - 1)];
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - phi * (b - a);
    let mut x2 = a + phi * (b - a);
    let (mut f1, mut f2) = (width(x1), width(x2));
    for _ in 0..60 {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = width(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = width(x2);
        }
    }
    let (x, f) = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
    if f <= widths[best] {
        x
    } else {
        grid[best]
    }
}

fn ln_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

fn assemble(g: &Geometry, eps: f64) -> (LogEnclosure, BracketLedger) {
    let Geometry {
        n,
        c,
        beta,
        lambda,
        rho,
        s,
        m,
        ..
    } = *g;

    let theta2 = ((1.0 + eps) * (1.0 + eps / rho)).powf(0.5 * n - 1.0) - 1.0;
    let theta3 = eps / (rho - c);
    let theta4 = (-lambda * eps * (2.0 * (rho - c - c * eps) + eps)).exp();
    let theta5 = c * eps / (rho - c - c * eps);
    let theta6 = eps / (1.0 - c * rho + eps);
    let a7 = lambda * eps * (2.0 * (1.0 - c * rho) + eps);
    let theta7 = (-a7).exp();
    let one_minus_theta7 = -(-a7).exp_m1();

    let ln_den = (4.0 * lambda * lambda * rho * (rho - c) * (1.0 - c * rho)).ln();

    let ln_i6 = {
        let first = (0.5 * n - 1.0) * (2.0 * c).ln()
            + 0.5 * std::f64::consts::PI.ln()
            + ln_gamma(0.5 * (n - 1.0))
            - std::f64::consts::LN_2
            - 0.5 * (n - 1.0) * beta.ln();
        let second = (0.5 * n - 2.0) * std::f64::consts::LN_2 + 2.0 * ln_gamma(0.25 * n)
            - std::f64::consts::LN_2
            - 0.25 * n * beta.ln();
        -0.5 * n * rho.ln() + ln_add(first, second)
    };
    let gexp = eps * (2.0 * m + eps);
    let ln_i4 = -lambda * gexp + s + gexp + ln_i6;

    let ln_upper_main = theta2.ln_1p() + theta5.ln_1p() + one_minus_theta7.ln() - ln_den;
    let ln_l_plus = ln_add(ln_upper_main, ln_i4);

    let lower_factors = [1.0 - theta3, 1.0 - theta4, 1.0 - theta6];
    let mut ln_l_minus = one_minus_theta7.ln() - ln_den;
    let mut clamped = false;
    for f in lower_factors {
        if f > 0.0 {
            ln_l_minus += f.ln();
        } else {
            ln_l_minus = f64::NEG_INFINITY;
            clamped = true;
        }
    }

    let psi = g.psi;
    let ln_psi_lo = if psi < 1.0 {
        (-psi).ln_1p()
    } else {
        clamped = true;
        f64::NEG_INFINITY
    };
    let base = g.prefactor_log - lambda * s;
    let ln_hi = base + ln_l_plus + psi.ln_1p();
    let ln_lo = if clamped {
        f64::NEG_INFINITY
    } else {
        base + ln_l_minus + ln_psi_lo
    };

    let ledger = BracketLedger {
        epsilon: eps,
        theta_bounds: [
            (0.0, theta2),
            (0.0, theta3),
            (0.0, theta4),
            (0.0, theta5),
            (0.0, theta6),
            (theta7, theta7),
        ],
        theta1_bound: psi,
        i6_bound: ln_i6.exp(),
        i4_tilde_bound: ln_i4.exp(),
        leading: -lambda * s - ln_den,
        prefactor_log: g.prefactor_log,
        lo_clamped: clamped,
    };
    let enclosure = LogEnclosure {
        ln_lo,
        ln_hi,
        tag: EnclosureTag::Bracket,
    };
    (enclosure, ledger)
}

/// Certified enclosure of `ln α` for a feasible ε.
///
/// `α ∈ prefactor · e^{−λS} · [L⁻, L⁺] · [1−Ψ, 1+Ψ]` with
/// `L⁺ = (1+θ₂)(1+θ₅)(1−θ₇)/D + Ĩ₄`, `L⁻ = (1−θ₃)(1−θ₄)(1−θ₆)(1−θ₇)/D`,
/// `D = 4λ²ρ(ρ−c)(1−cρ)`, and `Ψ = Ψ((N−3)/2, c√(x₁*x₂*)/(1−c²))`.
pub fn alpha_bracket(levels: &CriticalPair, design: &TestDesign, eps: f64) -> Result<AlphaBracket> {
    let g = geometry(levels, design)?;
    if !feasible(&g, eps) {
        return Err(Error::Domain(format!(
            "epsilon = {eps} infeasible: needs 0 < eps < {}",
            sup_of(&g)
        )));
    }
    let (enclosure, ledger) = assemble(&g, eps);
    Ok(AlphaBracket { enclosure, ledger })
}

/// [`alpha_bracket`] with ε chosen by `policy`.
pub fn alpha_bracket_with(
    levels: &CriticalPair,
    design: &TestDesign,
    policy: EpsilonPolicy,
) -> Result<AlphaBracket> {
    let g = geometry(levels, design)?;
    let eps = match policy {
        EpsilonPolicy::Default => pick_of(&g),
        EpsilonPolicy::Refined => refined_of(&g),
    };
    let (enclosure, ledger) = assemble(&g, eps);
    Ok(AlphaBracket { enclosure, ledger })
}
