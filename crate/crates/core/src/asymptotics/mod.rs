//! Large-deviation asymptotics of the joint rejection probability: the
//! certified two-sided bracket, the closed-form leading term, the versions in
//! terms of marginal significance levels, and chi-squared tail helpers.

mod bracket;
mod chi2;
mod levels;

pub use bracket::{
    alpha_bracket, alpha_bracket_with, epsilon_pick, epsilon_refined, epsilon_sup, AlphaBracket,
    BracketLedger, EpsilonPolicy,
};
pub use chi2::{
    chi2_tail_asym, chi2_tail_asym_raw, chi2_tail_exact, invert_chi2_tail, invert_ln_chi2_tail,
    ln_chi2_tail, ln_chi2_tail_asym, ln_chi2_tail_asym_raw,
};
pub use levels::{
    alpha_equal_levels, alpha_from_levels, equal_levels_exponent, lemma2_log_exp_sqrt, LevelSpec,
};

use libm::lgamma as ln_gamma;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::TestDesign;
use crate::quadrature::CriticalPair;

/// One named precondition of the bracket and its outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidityCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidityReport {
    pub checks: Vec<ValidityCheck>,
}

impl ValidityReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<String> {
        self.checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| format!("{}: {}", c.name, c.detail))
            .collect()
    }

    pub fn into_result(self) -> Result<()> {
        if self.passed() {
            Ok(())
        } else {
            Err(Error::Validity(self.failures()))
        }
    }
}

/// Right side of the product condition `x₁*x₂* > (1−c²)²/c² · K_N`, with
/// `K_N = (N/4−1)²` for `N > 4`, `(N/4)²` for `N = 3` and `0` for `N = 4`.
pub fn product_lower_bound(design: &TestDesign) -> f64 {
    let n = design.n_outcomes() as f64;
    let c = design.c();
    let k = match design.n_outcomes() {
        3 => (n / 4.0).powi(2),
        4 => 0.0,
        _ => (n / 4.0 - 1.0).powi(2),
    };
    (design.beta() / c).powi(2) * k
}

/// Checks the preconditions of the bracket: `N ≥ 3`, `λ > 1`, the product
/// condition on `x₁*x₂*` and `c < ρ < 1/c`.
pub fn validity_check(levels: &CriticalPair, design: &TestDesign) -> ValidityReport {
    let n = design.n_outcomes();
    let c = design.c();
    let lambda = levels.lambda(design);
    let product = levels.x1_star * levels.x2_star;
    let bound = product_lower_bound(design);
    let rho = levels.rho();
    let in_window = rho.is_some_and(|r| r > c && r < 1.0 / c);
    let check = |name: &str, passed: bool, detail: String| ValidityCheck {
        name: name.to_string(),
        passed,
        detail,
    };
    ValidityReport {
        checks: vec![
            check("N >= 3", n >= 3, format!("N = {n}")),
            check("lambda > 1", lambda > 1.0, format!("lambda = {lambda}")),
            check(
                "x1*x2* lower bound",
                product > bound,
                format!("x1*x2* = {product}, needs > {bound}"),
            ),
            check(
                "rho window",
                in_window,
                match rho {
                    Some(r) if in_window => format!("rho = {r} in ({c}, {})", 1.0 / c),
                    Some(r) => format!("rho = {r} out of (c, 1/c) = ({c}, {})", 1.0 / c),
                    None => "rho undefined for x1* = 0".to_string(),
                },
            ),
        ],
    }
}

/// `S = ρ² − 2cρ + 1`, the exponent at the corner of the rejection region.
pub(crate) fn corner_exponent(rho: f64, c: f64) -> f64 {
    rho * rho - 2.0 * c * rho + 1.0
}

/// `ln α` to leading order as `x₁* → ∞` with `ρ` fixed in `(c, 1/c)`:
///
/// `(x₁*)^{N/2−2} (ρ/2c)^{N/2−1} (1−c²)^{3/2} e^{−x₁*S/(2(1−c²))}
///  / (√π Γ((N−1)/2) (ρ−c)(1−cρ))`.
///
/// Outside the window the minimum of the exponent moves off the corner and
/// this form does not apply.
pub fn alpha_asym(x1_star: f64, rho: f64, design: &TestDesign) -> Result<f64> {
    let c = design.c();
    if !(rho > c && rho < 1.0 / c) {
        return Err(Error::RhoWindow { rho, c });
    }
    if !(x1_star > 0.0 && x1_star.is_finite()) {
        return Err(Error::param(
            "x1_star",
            format!("must be positive, got {x1_star}"),
        ));
    }
    let n = design.n_outcomes() as f64;
    let beta = design.beta();
    Ok(
        (0.5 * n - 2.0) * x1_star.ln() + (0.5 * n - 1.0) * (rho / (2.0 * c)).ln() + 1.5 * beta.ln()
            - x1_star * corner_exponent(rho, c) / (2.0 * beta)
            - 0.5 * std::f64::consts::PI.ln()
            - ln_gamma(0.5 * (n - 1.0))
            - (rho - c).ln()
            - (1.0 - c * rho).ln(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_bound_cases() {
        let d4 = TestDesign::new(4, 0.3).unwrap();
        assert_eq!(product_lower_bound(&d4), 0.0);
        let d3 = TestDesign::new(3, 0.5).unwrap();
        assert!((product_lower_bound(&d3) - 1.265_625).abs() < 1e-15);
        let d8 = TestDesign::new(8, 0.5).unwrap();
        assert!((product_lower_bound(&d8) - 2.25).abs() < 1e-15);
    }

    #[test]
    fn validity_reports_each_condition() {
        let d = TestDesign::new(5, 0.6).unwrap();
        let ok = validity_check(&CriticalPair::new(60.0, 60.0).unwrap(), &d);
        assert!(ok.passed() && ok.checks.len() == 4);

        let lv = CriticalPair::from_rho(60.0, 0.6).unwrap();
        let r = validity_check(&lv, &d);
        assert!(!r.passed());
        let f = r.failures();
        assert_eq!(f.len(), 1);
        assert!(f[0].starts_with("rho window") && f[0].contains("out of (c, 1/c)"));

        let r = validity_check(&CriticalPair::new(0.5, 0.5).unwrap(), &d);
        assert!(r.failures().iter().any(|s| s.starts_with("lambda > 1")));
        assert!(matches!(r.into_result(), Err(Error::Validity(_))));

        let d3 = TestDesign::new(3, 0.5).unwrap();
        let r = validity_check(&CriticalPair::new(1.6, 0.75).unwrap(), &d3);
        assert!(r
            .failures()
            .iter()
            .any(|s| s.starts_with("x1*x2* lower bound")));
    }

    #[test]
    fn asym_rejects_rho_outside_window() {
        let d = TestDesign::new(5, 0.6).unwrap();
        assert!(matches!(
            alpha_asym(60.0, 0.6, &d),
            Err(Error::RhoWindow { .. })
        ));
        assert!(matches!(
            alpha_asym(60.0, 1.0 / 0.6, &d),
            Err(Error::RhoWindow { .. })
        ));
        assert!(alpha_asym(60.0, 1.2, &d).is_ok());
    }

    #[test]
    fn asym_log_is_linear_plus_log_term() {
        let d = TestDesign::new(7, 0.4).unwrap();
        let (rho, beta) = (1.3, d.beta());
        let slope = -corner_exponent(rho, 0.4) / (2.0 * beta);
        let (a, b) = (50.0f64, 90.0f64);
        let diff = alpha_asym(b, rho, &d).unwrap() - alpha_asym(a, rho, &d).unwrap();
        let want = slope * (b - a) + (3.5 - 2.0) * (b / a).ln();
        assert!((diff - want).abs() < 1e-11);
    }

    #[test]
    fn asym_exponent_symmetry() {
        // x₁*·S(ρ) equals x₂*·S(1/ρ) with x₂* = ρ²x₁*.
        let c = 0.55;
        for rho in [0.8, 1.0, 1.4] {
            let x1: f64 = 47.0;
            let x2 = rho * rho * x1;
            let lhs = x1 * corner_exponent(rho, c);
            let rhs = x2 * corner_exponent(1.0 / rho, c);
            assert!((lhs - rhs).abs() < 1e-12 * lhs);
        }
    }
}
