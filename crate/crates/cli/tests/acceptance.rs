//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero on any outcome other than the expected one (see `KNOWN_RED`).

#![allow(clippy::excessive_precision)]

use std::process::Command;

use seqchi_core::asymptotics::{
    alpha_asym, alpha_bracket_with, alpha_equal_levels, chi2_tail_asym, chi2_tail_exact,
    equal_levels_exponent, invert_chi2_tail, validity_check, EpsilonPolicy,
};
use seqchi_core::bessel_process::{bessel_tail_quad, BesselQuery};
use seqchi_core::montecarlo::{simulate_bessel_joint, simulate_pearson_joint, TrialScheme};
use seqchi_core::quadrature::{marginal_quad, tail_integral};
use seqchi_core::special_fn::psi_envelope;
use seqchi_core::{alpha_quad, BesselOrder, CriticalPair, TestDesign};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

/// ln Γ(ν + 1) for the orders used below.
fn ln_gamma_nu_plus_one(nu: f64) -> f64 {
    const TABLE: [(f64, f64); 7] = [
        (0.0, 1.0),
        (0.25, 0.906_402_477_055_477_1),
        (0.5, 0.886_226_925_452_758),
        (1.0, 1.0),
        (1.5, 1.329_340_388_179_137),
        (2.5, 3.323_350_970_447_843),
        (5.0, 120.0),
    ];
    let (_, g) = TABLE
        .iter()
        .find(|e| e.0 == nu)
        .unwrap_or_else(|| panic!("no table entry for {nu}"));
    g.ln()
}

/// `I_ν(x) / (e^x/√(2πx))` by the power series with compensated summation.
fn series_ratio(nu: f64, x: f64) -> f64 {
    let ln_t0 = nu * (0.5 * x).ln() - ln_gamma_nu_plus_one(nu) - x
        + 0.5 * (2.0 * std::f64::consts::PI * x).ln();
    let q = 0.25 * x * x;
    let mut term = ln_t0.exp();
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    let mut k = 0.0;
    loop {
        let t = sum + term;
        comp += if sum.abs() >= term.abs() {
            (sum - t) + term
        } else {
            (term - t) + sum
        };
        sum = t;
        k += 1.0;
        term *= q / (k * (k + nu));
        if k > x && term < 1e-18 * sum {
            break;
        }
    }
    sum + comp
}

/// Criterion 1. The oracle carries rounding of order 1e-14, far above Ψ for
/// ν = ½ and large x (where Ψ = e^{−2x} is attained with equality), so a
/// deviation counts as a violation only when it exceeds Ψ by more than 1e-12.
fn bessel_certification() -> Verdict {
    const SLACK: f64 = 1e-12;
    let mut checked = 0;
    let mut violations = Vec::new();
    for nu in [0.0, 0.25, 0.5, 1.0, 1.5, 2.5, 5.0] {
        let edge: f64 = if nu > 0.5 {
            (nu - 0.5) / 2.0
        } else if nu < 0.5 {
            (nu + 1.5) / 2.0
        } else {
            0.0
        };
        let start = (1.05 * edge).max(0.05);
        for i in 0..40 {
            let x = start * (100.0 / start).powf(i as f64 / 39.0);
            let psi = psi_envelope(BesselOrder::new(nu).unwrap(), x).unwrap();
            let dev = (series_ratio(nu, x) - 1.0).abs();
            checked += 1;
            if dev > psi + SLACK {
                violations.push(format!("nu={nu} x={x:.4}: |dev|={dev:.3e} > psi={psi:.3e}"));
            }
        }
    }
    verdict(
        violations.is_empty(),
        format!(
            "{checked} points, {} violations {:?}",
            violations.len(),
            violations
        ),
    )
}

fn gamma_density(u: f64, n: u32) -> f64 {
    let a = 0.5 * (n as f64 - 1.0);
    let gamma_a = match n {
        3 => 1.0,
        4 => 0.886_226_925_452_758,
        5 => 1.0,
        10 => 11.631_728_396_567_448,
        _ => panic!("no table entry for N = {n}"),
    };
    u.powf(a - 1.0) * (-u).exp() / gamma_a
}

/// Criterion 2.
fn density_normalization() -> Verdict {
    let mut worst_mass = 0.0f64;
    let mut worst_marginal = 0.0f64;
    for n in [3u32, 4, 5, 10] {
        for c in [0.3, 0.5, 0.7, 0.9] {
            let d = TestDesign::new(n, c).unwrap();
            let mass = tail_integral(0.0, 0.0, &d, 1e-9).unwrap().alpha;
            worst_mass = worst_mass.max((mass - 1.0).abs());
            for u in [0.5, 1.0, 2.0, 4.0, 8.0] {
                let m = marginal_quad(u, &d, 1e-9).unwrap();
                worst_marginal = worst_marginal.max((m - gamma_density(u, n)).abs());
            }
        }
    }
    verdict(
        worst_mass <= 1e-6 && worst_marginal <= 1e-6,
        format!("max |mass - 1| = {worst_mass:.2e}, max marginal error = {worst_marginal:.2e}"),
    )
}

/// Criterion 3.
fn bracket_soundness() -> Verdict {
    let mut points = 0;
    let mut misses = Vec::new();
    let mut width_failures = Vec::new();
    for n in [3u32, 5] {
        for c in [0.5, 0.7] {
            let d = TestDesign::new(n, c).unwrap();
            for rho in [0.9, 1.0, 1.1] {
                let mut widths = Vec::new();
                for x1 in [40.0, 60.0, 80.0] {
                    let lv = CriticalPair::from_rho(x1, rho).unwrap();
                    if !validity_check(&lv, &d).passed() {
                        continue;
                    }
                    points += 1;
                    let q = alpha_quad(&lv, &d, 1e-8).unwrap();
                    for policy in [EpsilonPolicy::Default, EpsilonPolicy::Refined] {
                        let b = alpha_bracket_with(&lv, &d, policy).unwrap();
                        if !b.enclosure.contains_ln(q.log_alpha) {
                            misses.push(format!("({n},{c},{rho},{x1}) {policy:?}"));
                        }
                        if policy == EpsilonPolicy::Refined {
                            widths.push((x1, b.enclosure.rel_half_width()));
                        }
                    }
                }
                let w40 = widths.iter().find(|w| w.0 == 40.0).map(|w| w.1);
                let w80 = widths.iter().find(|w| w.0 == 80.0).map(|w| w.1);
                if let (Some(a), Some(b)) = (w40, w80) {
                    if b >= a {
                        width_failures.push(format!("({n},{c},{rho}): {b:.4} >= {a:.4}"));
                    }
                }
            }
        }
    }
    verdict(
        misses.is_empty() && width_failures.is_empty() && points > 0,
        format!(
            "{points} valid points; outside bracket: {misses:?}; width not shrinking: {width_failures:?}"
        ),
    )
}

/// Criterion 4.
fn leading_term_convergence() -> Verdict {
    let d = TestDesign::new(5, 0.6).unwrap();
    let errs: Vec<f64> = [40.0, 60.0, 80.0]
        .iter()
        .map(|&x1| {
            let q = alpha_quad(&CriticalPair::from_rho(x1, 1.0).unwrap(), &d, 1e-9).unwrap();
            let a = alpha_asym(x1, 1.0, &d).unwrap();
            (a - q.log_alpha).exp_m1().abs()
        })
        .collect();
    verdict(
        errs[0] > errs[1] && errs[1] > errs[2] && errs[2] < 0.25,
        format!("|asym/quad - 1| at x1* = 40, 60, 80: {errs:.4?}"),
    )
}

/// Criterion 5.
fn monte_carlo_cross_validation() -> Verdict {
    let mut lines = Vec::new();
    let mut pass = true;
    let reps = 1_000_000;

    let scheme = TrialScheme::uniform(5, 4900, 10_000).unwrap();
    let d = TestDesign::from_sample_sizes(5, 4900, 10_000).unwrap();
    let q = alpha_quad(&CriticalPair::new(15.0, 15.0).unwrap(), &d, 1e-8).unwrap();
    let e = simulate_pearson_joint(&scheme, 15.0, 15.0, reps, 20_240_901).unwrap();
    let z = (e.p_hat - q.alpha) / e.std_err;
    pass &= z.abs() <= 3.5;
    lines.push(format!(
        "pearson quad={:.4e} mc={:.4e} z={z:.2}",
        q.alpha, e.p_hat
    ));

    for (dim, s1, s2, x1, x2) in [(3u32, 1.0, 2.0, 3.2, 4.0), (2, 0.5, 1.0, 2.2, 2.6)] {
        let bq = BesselQuery::new(dim, s1, s2, x1, x2).unwrap();
        let q = bessel_tail_quad(&bq, 1e-8).unwrap();
        let e = simulate_bessel_joint(&bq, reps, 77).unwrap();
        let z = (e.p_hat - q.alpha) / e.std_err;
        let in_range = (1e-3..=1e-2).contains(&q.alpha);
        pass &= z.abs() <= 3.5 && in_range;
        lines.push(format!(
            "bessel d={dim} quad={:.4e} mc={:.4e} z={z:.2}",
            q.alpha, e.p_hat
        ));
    }
    verdict(pass, lines.join("; "))
}

/// Criterion 6.
fn equal_levels_trend() -> Verdict {
    let d = TestDesign::new(5, 0.6).unwrap();
    let log_ratios: Vec<f64> = [1e-3, 1e-5, 1e-7]
        .iter()
        .map(|&a1| {
            let x = invert_chi2_tail(a1, 4).unwrap();
            let q = alpha_quad(&CriticalPair::new(x, x).unwrap(), &d, 1e-9).unwrap();
            alpha_equal_levels(a1, &d).unwrap() - q.log_alpha
        })
        .collect();
    let monotone = log_ratios[0].abs() > log_ratios[1].abs()
        && log_ratios[1].abs() > log_ratios[2].abs()
        && log_ratios
            .windows(2)
            .all(|w| w[0].signum() == w[1].signum());
    let exponents_ok = (1..10).all(|i| {
        let e = equal_levels_exponent(i as f64 / 10.0);
        e > 1.0 && e < 2.0
    });
    let ratios: Vec<f64> = log_ratios.iter().map(|l| l.exp()).collect();
    verdict(
        monotone && exponents_ok,
        format!("ratios at alpha1 = 1e-3, 1e-5, 1e-7: {ratios:.4?}; exponent 2/(1+c) in (1,2): {exponents_ok}"),
    )
}

/// Criterion 7.
fn chi2_tail_ratio() -> Verdict {
    let mut worst = 0.0f64;
    let mut k2_exact = false;
    let mut ratios = Vec::new();
    for k in 2..=10u32 {
        let r = chi2_tail_asym(80.0, k).unwrap() / chi2_tail_exact(80.0, k).unwrap();
        worst = worst.max((r - 1.0).abs());
        ratios.push(r);
        if k == 2 {
            k2_exact = r == 1.0;
        }
    }
    verdict(
        worst <= 0.03 && k2_exact,
        format!(
            "ratios k = 2..10: {ratios:.4?}; max |ratio - 1| = {worst:.4}, k = 2 exact: {k2_exact}"
        ),
    )
}

/// Criterion 8.
fn reproducibility() -> Verdict {
    let bin = env!("CARGO_BIN_EXE_seqchi");
    let runs: [&[&str]; 2] = [
        &[
            "mc", "--mode", "bessel", "--reps", "1000000", "--seed", "42", "--d", "3", "--s1", "1",
            "--s2", "2", "--x1", "3", "--x2", "4",
        ],
        &[
            "mc",
            "--mode",
            "pearson",
            "--reps",
            "200000",
            "--seed",
            "42",
            "--n-categories",
            "5",
            "--n1",
            "490",
            "--n2",
            "1000",
            "--x1",
            "8",
            "--x2",
            "8",
        ],
    ];
    let mut pass = true;
    let mut notes = Vec::new();
    for args in runs {
        let outputs: Vec<Vec<u8>> = ["1", "2", "4", "7"]
            .iter()
            .map(|t| {
                let out = Command::new(bin)
                    .args(args)
                    .args(["--threads", t])
                    .output()
                    .expect("run seqchi");
                assert!(
                    out.status.success(),
                    "seqchi failed: {}",
                    String::from_utf8_lossy(&out.stderr)
                );
                out.stdout
            })
            .collect();
        let via_env = Command::new(bin)
            .args(args)
            .env("SEQCHI_THREADS", "3")
            .output()
            .expect("run seqchi")
            .stdout;
        let same = outputs.iter().all(|o| *o == outputs[0]) && via_env == outputs[0];
        pass &= same && !outputs[0].is_empty();
        notes.push(format!(
            "{}: identical across 1/2/3/4/7 workers: {same}",
            args[2]
        ));
    }
    verdict(pass, notes.join("; "))
}

/// Criteria that cannot hold as stated. They still run and print FAIL; the
/// target only errors if one of them starts passing or anything else fails.
/// Criterion 7: the leading term misses the exact tail by a factor
/// 1 + (k−2)/x + O(x⁻²), which is outside ±3% at x = 80 once k ≥ 5.
const KNOWN_RED: &[usize] = &[7];

fn main() {
    type Check = (&'static str, fn() -> Verdict);
    let criteria: [Check; 8] = [
        ("Bessel certification", bessel_certification),
        ("density normalization and marginals", density_normalization),
        ("bracket soundness", bracket_soundness),
        ("leading-term convergence", leading_term_convergence),
        ("Monte Carlo cross-validation", monte_carlo_cross_validation),
        ("equal-levels trend", equal_levels_trend),
        ("chi-squared tail ratio", chi2_tail_ratio),
        ("reproducibility", reproducibility),
    ];
    let mut unexpected = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t = std::time::Instant::now();
        let v = check();
        let tag = if v.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {}: {tag}: {name} ({:.1}s): {}",
            i + 1,
            t.elapsed().as_secs_f64(),
            v.detail
        );
        let known = KNOWN_RED.contains(&(i + 1));
        if known {
            println!("criterion {}: known unattainable, see KNOWN_RED", i + 1);
        }
        if v.pass == known {
            unexpected.push(i + 1);
        }
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected acceptance outcome for criteria {unexpected:?}");
        std::process::exit(1);
    }
}
