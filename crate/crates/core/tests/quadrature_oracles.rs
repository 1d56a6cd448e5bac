use seqchi_core::asymptotics::{chi2_tail_exact, invert_chi2_tail};
use seqchi_core::montecarlo::{simulate_pearson_joint, TrialScheme};
use seqchi_core::quadrature::tail_integral;
use seqchi_core::{alpha_quad, CriticalPair, TestDesign};

fn quad(x1: f64, x2: f64, d: &TestDesign, tol: f64) -> f64 {
    alpha_quad(&CriticalPair::new(x1, x2).unwrap(), d, tol)
        .unwrap()
        .alpha
}

#[test]
fn origin_has_unit_mass() {
    for n in [3u32, 4, 5, 10] {
        for c in [0.3, 0.5, 0.7, 0.9] {
            let d = TestDesign::new(n, c).unwrap();
            assert_eq!(quad(0.0, 0.0, &d, 1e-8), 1.0);
            let m = tail_integral(0.0, 0.0, &d, 1e-9).unwrap().alpha;
            assert!((m - 1.0).abs() < 1e-6, "N={n} c={c}: {m}");
        }
    }
}

#[test]
fn one_sided_levels_reduce_to_chi2() {
    for n in [3u32, 4, 5, 10] {
        for c in [0.3, 0.7] {
            let d = TestDesign::new(n, c).unwrap();
            for t in [0.5, 3.0, 12.0, 30.0] {
                let want = chi2_tail_exact(t, n - 1).unwrap();
                let a = quad(t, 0.0, &d, 1e-9);
                let b = quad(0.0, t, &d, 1e-9);
                assert!(
                    (a / want - 1.0).abs() < 1e-7,
                    "N={n} c={c} t={t}: {a} vs {want}"
                );
                assert!(
                    (b / want - 1.0).abs() < 1e-7,
                    "N={n} c={c} t={t}: {b} vs {want}"
                );
            }
        }
    }
}

#[test]
fn five_percent_level_for_four_outcomes() {
    let d = TestDesign::new(4, 0.6).unwrap();
    let t = invert_chi2_tail(0.05, 3).unwrap();
    assert!((quad(t, 0.0, &d, 1e-9) - 0.05).abs() < 1e-6);
}

#[test]
fn nonincreasing_in_each_level() {
    let d = TestDesign::new(5, 0.7).unwrap();
    let grid = [0.0, 1.0, 4.0, 10.0, 25.0, 50.0];
    for &x2 in &grid {
        let col: Vec<f64> = grid.iter().map(|&x1| quad(x1, x2, &d, 1e-9)).collect();
        assert!(
            col.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-8)),
            "{col:?}"
        );
        let row: Vec<f64> = grid.iter().map(|&x1| quad(x2, x1, &d, 1e-9)).collect();
        assert!(
            row.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-8)),
            "{row:?}"
        );
    }
}

#[test]
fn joint_below_both_margins() {
    for (n, c) in [(3u32, 0.5), (5, 0.7), (10, 0.9)] {
        let d = TestDesign::new(n, c).unwrap();
        for (x1, x2) in [(2.0, 3.0), (10.0, 8.0), (40.0, 45.0)] {
            let j = quad(x1, x2, &d, 1e-9);
            let m = quad(x1, 0.0, &d, 1e-9).min(quad(0.0, x2, &d, 1e-9));
            assert!(j <= m * (1.0 + 1e-8), "N={n} c={c} ({x1},{x2}): {j} > {m}");
        }
    }
}

#[test]
fn refinement_stays_within_error_estimates() {
    for (n, c, x1, x2) in [
        (5u32, 0.5, 40.0, 40.0),
        (3, 0.7, 60.0, 72.6),
        (10, 0.3, 5.0, 9.0),
    ] {
        let d = TestDesign::new(n, c).unwrap();
        let lv = CriticalPair::new(x1, x2).unwrap();
        let coarse = alpha_quad(&lv, &d, 1e-6).unwrap();
        let fine = alpha_quad(&lv, &d, 5e-7).unwrap();
        let moved = (coarse.alpha - fine.alpha).abs();
        assert!(
            moved <= coarse.est_abs_error + fine.est_abs_error,
            "moved {moved:e}, budget {:e}",
            coarse.est_abs_error + fine.est_abs_error
        );
    }
}

#[test]
fn matches_independent_reference_values() {
    // Nested adaptive quadrature of the same density in an independent script.
    let d = TestDesign::new(5, 0.5).unwrap();
    let got = alpha_quad(&CriticalPair::new(40.0, 40.0).unwrap(), &d, 1e-10).unwrap();
    assert!((got.log_alpha + 24.449486859796586).abs() < 1e-7);
    let d = TestDesign::new(3, 0.7).unwrap();
    let got = alpha_quad(&CriticalPair::new(60.0, 72.6).unwrap(), &d, 1e-10).unwrap();
    assert!((got.log_alpha + 40.86848846499025).abs() < 1e-7);
}

#[test]
fn agrees_with_pearson_simulation() {
    let d = TestDesign::from_sample_sizes(5, 4900, 10_000).unwrap();
    let scheme = TrialScheme::uniform(5, 4900, 10_000).unwrap();
    for x in [15.0, 20.0] {
        let q = quad(x, x, &d, 1e-8);
        let e = simulate_pearson_joint(&scheme, x, x, 1_000_000, 7).unwrap();
        assert!(
            (e.p_hat - q).abs() <= 3.5 * e.std_err,
            "x={x}: mc {} ± {} vs quad {q}",
            e.p_hat,
            e.std_err
        );
    }
}
