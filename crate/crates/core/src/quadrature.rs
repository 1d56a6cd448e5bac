//! Numerical evaluation of the joint rejection probability
//!
//! `α(x₁*, x₂*) = ∫_{x₁*/2}^∞ ∫_{x₂*/2}^∞ p_{2,0}(u₁, u₂) du₂ du₁`
//!
//! by iterated adaptive Gauss–Kronrod quadrature, plus Bonferroni bounds for
//! more than two stages.
//!
//! Each semi-infinite axis is mapped onto `(0, 1)` by `u = a + L·s/(1−s)`.
//! Before integrating, the integrand is divided by `e^{E₀}`, where `E₀` is the
//! maximum of the density's exponent over the integration region, so `ln α`
//! stays accurate far below the smallest positive double.

use serde::{Deserialize, Serialize};

use crate::enclosure::{Enclosure, EnclosureTag};
use crate::error::{Error, Result};
use crate::model::{JointDensity, TestDesign};

// 15-point Kronrod abscissae and weights with the embedded 7-point Gauss
// rule, on [-1, 1]. Values from QUADPACK (qk15).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Panel {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let s = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    Panel {
        a,
        b,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    }
}

/// Outcome of a one-dimensional adaptive integration.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Integral {
    pub value: f64,
    pub error: f64,
    pub panels: usize,
    pub converged: bool,
}

/// Adaptive bisection of the panel with the largest error estimate until the
/// summed estimate is below `max(abs_tol, rel_tol·|I|)`.
pub(crate) fn integrate_adaptive<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
    max_panels: usize,
) -> Integral {
    let mut panels = vec![gk15(&mut f, a, b)];
    let mut converged = false;
    loop {
        // Fixed summation order: panels sorted by left endpoint.
        panels.sort_by(|p, q| p.a.total_cmp(&q.a));
        let value: f64 = panels.iter().map(|p| p.value).sum();
        let error: f64 = panels.iter().map(|p| p.error).sum();
        if error <= abs_tol.max(rel_tol * value.abs()) {
            converged = true;
        }
        if converged || panels.len() >= max_panels {
            return Integral {
                value,
                error,
                panels: panels.len(),
                converged,
            };
        }
        let (worst, _) = panels
            .iter()
            .enumerate()
            .max_by(|(_, p), (_, q)| p.error.total_cmp(&q.error))
            .expect("at least one panel");
        let p = panels.swap_remove(worst);
        let mid = 0.5 * (p.a + p.b);
        if !(mid > p.a && mid < p.b) {
            // Interval exhausted at double precision.
            panels.push(p);
            return Integral {
                value,
                error,
                panels: panels.len(),
                converged: false,
            };
        }
        panels.push(gk15(&mut f, p.a, mid));
        panels.push(gk15(&mut f, mid, p.b));
    }
}

/// `∫_lower^∞ f(u) du` through `u = lower + scale·s/(1−s)`.
pub(crate) fn integrate_semi_infinite<F: FnMut(f64) -> f64>(
    mut f: F,
    lower: f64,
    scale: f64,
    rel_tol: f64,
    abs_tol: f64,
    max_panels: usize,
) -> Integral {
    let g = |s: f64| {
        let t = 1.0 - s;
        let u = lower + scale * s / t;
        if !u.is_finite() {
            return 0.0;
        }
        let v = f(u);
        if v == 0.0 {
            0.0
        } else {
            v * scale / (t * t)
        }
    };
    integrate_adaptive(g, 0.0, 1.0, rel_tol, abs_tol, max_panels)
}

const MAX_PANELS: usize = 4000;

/// Critical levels `(x₁*, x₂*)` of the two stages.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalPair {
    pub x1_star: f64,
    pub x2_star: f64,
}

impl CriticalPair {
    pub fn new(x1_star: f64, x2_star: f64) -> Result<Self> {
        for (name, v) in [("x1_star", x1_star), ("x2_star", x2_star)] {
            if !(v >= 0.0) || v.is_infinite() {
                return Err(Error::param(
                    name,
                    format!("must be finite and nonnegative, got {v}"),
                ));
            }
        }
        Ok(Self { x1_star, x2_star })
    }

    /// Levels `(x₁*, ρ²x₁*)`.
    pub fn from_rho(x1_star: f64, rho: f64) -> Result<Self> {
        Self::new(x1_star, rho * rho * x1_star)
    }

    /// `ρ = √(x₂*/x₁*)`, defined when `x₁* > 0`.
    pub fn rho(&self) -> Option<f64> {
        (self.x1_star > 0.0).then(|| (self.x2_star / self.x1_star).sqrt())
    }

    /// `λ = x₁*/(2β)`
    pub fn lambda(&self, design: &TestDesign) -> f64 {
        self.x1_star / (2.0 * design.beta())
    }

    /// Reduced levels `(√(x₁*/(2β)), √(x₂*/(2β)))`.
    pub fn reduced(&self, design: &TestDesign) -> (f64, f64) {
        let two_beta = 2.0 * design.beta();
        (
            (self.x1_star / two_beta).sqrt(),
            (self.x2_star / two_beta).sqrt(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadResult {
    pub log_alpha: f64,
    pub alpha: f64,
    pub est_abs_error: f64,
    pub est_rel_error: f64,
    /// Total number of Gauss–Kronrod panels over both axes.
    pub panels: usize,
    /// False when the panel budget ran out before the tolerance was met;
    /// the estimate is still returned.
    pub converged: bool,
}

/// Largest value of the density exponent over `[a₁,∞) × [a₂,∞)`.
fn region_peak_exponent(density: &JointDensity, a1: f64, a2: f64) -> f64 {
    let c2 = density.design().c().powi(2);
    if a2 < c2 * a1 {
        -a1
    } else if a1 < c2 * a2 {
        -a2
    } else {
        density.exponent(a1, a2)
    }
}

/// `ln ∫_{a₁}^∞ ∫_{a₂}^∞ p_{2,0}` without shortcuts.
pub fn tail_integral(a1: f64, a2: f64, design: &TestDesign, rel_tol: f64) -> Result<QuadResult> {
    check_rel_tol(rel_tol)?;
    if !(a1 >= 0.0 && a2 >= 0.0) {
        return Err(Error::param(
            "lower limits",
            format!("must be nonnegative, got ({a1}, {a2})"),
        ));
    }
    let density = JointDensity::new(design);
    let c2 = design.c().powi(2);
    let e0 = region_peak_exponent(&density, a1, a2);
    let base_scale = 1.0 + design.delta();
    let inner_tol = (0.1 * rel_tol).max(1e-14);
    let outer_tol = 0.5 * rel_tol;

    let mut inner_panels = 0usize;
    let mut worst_inner = 0.0f64;
    let mut inner_ok = true;
    let inner = |u1: f64| -> f64 {
        let scale = base_scale + (c2 * u1 - a2).max(0.0);
        let r = integrate_semi_infinite(
            |u2| (density.ln_eval(u1, u2) - e0).exp(),
            a2,
            scale,
            inner_tol,
            0.0,
            MAX_PANELS,
        );
        inner_panels += r.panels;
        inner_ok &= r.converged;
        if r.value != 0.0 {
            worst_inner = worst_inner.max(r.error / r.value.abs());
        }
        r.value
    };
    let outer_scale = base_scale + (c2 * a2 - a1).max(0.0);
    let outer = integrate_semi_infinite(inner, a1, outer_scale, outer_tol, 0.0, MAX_PANELS);

    let value = outer.value;
    if !(value > 0.0) {
        return Err(Error::Domain(format!(
            "integral underflowed at lower limits ({a1}, {a2})"
        )));
    }
    let est_rel = outer.error / value + worst_inner;
    let log_alpha = e0 + value.ln();
    let alpha = log_alpha.exp();
    Ok(QuadResult {
        log_alpha,
        alpha,
        est_abs_error: est_rel * alpha,
        est_rel_error: est_rel,
        panels: outer.panels + inner_panels,
        converged: outer.converged && inner_ok && est_rel <= rel_tol,
    })
}

fn check_rel_tol(rel_tol: f64) -> Result<()> {
    if !(rel_tol > 1e-12 && rel_tol < 1e-2) {
        return Err(Error::param(
            "rel_tol",
            format!("must lie in (1e-12, 1e-2), got {rel_tol}"),
        ));
    }
    Ok(())
}

/// `α(x₁*, x₂*)` by adaptive quadrature of the limiting joint density.
pub fn alpha_quad(levels: &CriticalPair, design: &TestDesign, rel_tol: f64) -> Result<QuadResult> {
    check_rel_tol(rel_tol)?;
    if levels.x1_star == 0.0 && levels.x2_star == 0.0 {
        return Ok(QuadResult {
            log_alpha: 0.0,
            alpha: 1.0,
            est_abs_error: 0.0,
            est_rel_error: 0.0,
            panels: 0,
            converged: true,
        });
    }
    tail_integral(0.5 * levels.x1_star, 0.5 * levels.x2_star, design, rel_tol)
}

/// `∫_0^∞ p_{2,0}(u₁, u₂) du₂`, the first-stage marginal density.
pub fn marginal_quad(u1: f64, design: &TestDesign, rel_tol: f64) -> Result<f64> {
    check_rel_tol(rel_tol)?;
    let density = JointDensity::new(design);
    let c2 = design.c().powi(2);
    let shift = -u1;
    let r = integrate_semi_infinite(
        |u2| (density.ln_density(u1, u2).unwrap_or(f64::NEG_INFINITY) - shift).exp(),
        0.0,
        1.0 + design.delta() + c2 * u1,
        rel_tol,
        0.0,
        MAX_PANELS,
    );
    density.ln_density(u1, 0.0)?;
    Ok(r.value * shift.exp())
}

/// First- and second-order Bonferroni enclosures of `P(∩ₖ Aₖ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BonferroniBounds {
    /// `[max(0, Σαₖ − (r−1)), min αₖ]`
    pub first_order: Enclosure,
    /// `[Kounias lower bound, min_{j<k} α_{jk}]`
    pub second_order: Enclosure,
}

impl BonferroniBounds {
    /// Intersection of both orders.
    pub fn best(&self) -> Enclosure {
        Enclosure::new(
            self.first_order.lo.max(self.second_order.lo),
            self.first_order.hi.min(self.second_order.hi),
            EnclosureTag::BonferroniSecond,
        )
    }
}

const CONSISTENCY_SLACK: f64 = 1e-12;

/// Bounds on the joint rejection probability from the marginal levels
/// `αₖ = P(Aₖ)` and pairwise levels `α_{jk} = P(Aⱼ ∩ Aₖ)`.
///
/// The lower bounds pass to complements `Bₖ = Aₖᶜ`:
/// `P(∩A) = 1 − P(∪B)`. First order uses `P(∪B) ≤ Σ P(Bₖ)`; second order
/// uses Kounias' inequality
/// `P(∪B) ≤ Σₖ P(Bₖ) − maxⱼ Σ_{k≠j} P(Bⱼ ∩ Bₖ)` with
/// `P(Bⱼ ∩ Bₖ) = 1 − αⱼ − αₖ + α_{jk}`.
///
/// `pairwise` is the full symmetric `r × r` matrix; its diagonal is ignored.
pub fn bonferroni_orders(marginals: &[f64], pairwise: &[Vec<f64>]) -> Result<BonferroniBounds> {
    let r = marginals.len();
    if r == 0 {
        return Err(Error::param("marginals", "need at least one event"));
    }
    for &a in marginals {
        if !(0.0..=1.0).contains(&a) {
            return Err(Error::param(
                "marginals",
                format!("must lie in [0, 1], got {a}"),
            ));
        }
    }
    if r > 1 && (pairwise.len() != r || pairwise.iter().any(|row| row.len() != r)) {
        return Err(Error::param(
            "pairwise",
            format!("must be a {r} x {r} matrix"),
        ));
    }
    for j in 0..r {
        for k in (j + 1)..r {
            let (ajk, akj) = (pairwise[j][k], pairwise[k][j]);
            if (ajk - akj).abs() > CONSISTENCY_SLACK {
                return Err(Error::Inconsistent(format!(
                    "pairwise matrix not symmetric at ({j}, {k}): {ajk} vs {akj}"
                )));
            }
            let cap = marginals[j].min(marginals[k]);
            if !(ajk >= 0.0) || ajk > cap + CONSISTENCY_SLACK {
                return Err(Error::Inconsistent(format!(
                    "pairwise alpha[{j}][{k}] = {ajk} exceeds min of marginals {cap}"
                )));
            }
            let floor = marginals[j] + marginals[k] - 1.0;
            if ajk < floor - CONSISTENCY_SLACK {
                return Err(Error::Inconsistent(format!(
                    "pairwise alpha[{j}][{k}] = {ajk} below alpha_j + alpha_k - 1 = {floor}"
                )));
            }
        }
    }

    let sum: f64 = marginals.iter().sum();
    let min_marginal = marginals.iter().copied().fold(f64::INFINITY, f64::min);
    let first_lo = (sum - (r as f64 - 1.0)).max(0.0);
    let first_order = Enclosure::new(first_lo, min_marginal, EnclosureTag::BonferroniFirst);

    if r == 1 {
        let a = marginals[0];
        return Ok(BonferroniBounds {
            first_order,
            second_order: Enclosure::point(a, EnclosureTag::BonferroniSecond),
        });
    }

    let comp = |j: usize, k: usize| 1.0 - marginals[j] - marginals[k] + pairwise[j][k];
    let union_first: f64 = marginals.iter().map(|a| 1.0 - a).sum();
    let best_star = (0..r)
        .map(|j| (0..r).filter(|&k| k != j).map(|k| comp(j, k)).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max);
    let union_upper = (union_first - best_star).min(1.0);
    let second_lo = (1.0 - union_upper).max(0.0);
    let second_hi = pairwise
        .iter()
        .enumerate()
        .flat_map(|(j, row)| row[j + 1..].iter().copied())
        .fold(min_marginal, f64::min);
    Ok(BonferroniBounds {
        first_order,
        second_order: Enclosure::new(
            second_lo.min(second_hi),
            second_hi,
            EnclosureTag::BonferroniSecond,
        ),
    })
}

/// The tighter of the first- and second-order Bonferroni enclosures.
pub fn bonferroni_bounds(marginals: &[f64], pairwise: &[Vec<f64>]) -> Result<Enclosure> {
    bonferroni_orders(marginals, pairwise).map(|b| b.best())
}
