//! Monte Carlo estimators of the joint exceedance probabilities, used as
//! independent oracles for the analytic evaluators.
//!
//! Replication `i` draws from its own ChaCha8 stream (`seed`, stream `i`),
//! and the estimator only sums integer hit counts, so results are identical
//! for any number of worker threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bessel_process::BesselQuery;
use crate::error::{Error, Result};

/// `N`-outcome trials with probabilities `p_j`, observed after `n₁` and
/// after `n₂ > n₁` trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialScheme {
    probs: Vec<f64>,
    n1: u64,
    n2: u64,
}

impl TrialScheme {
    pub fn new(probs: Vec<f64>, n1: u64, n2: u64) -> Result<Self> {
        if probs.len() < 2 {
            return Err(Error::param("probs", "need at least two outcomes"));
        }
        if probs.iter().any(|&p| !(p > 0.0 && p < 1.0)) {
            return Err(Error::param(
                "probs",
                "every probability must lie in (0, 1)",
            ));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::param("probs", format!("must sum to 1, got {total}")));
        }
        if !(n1 >= 1 && n1 < n2) {
            return Err(Error::param(
                "n",
                format!("need 1 <= n1 < n2, got n1 = {n1}, n2 = {n2}"),
            ));
        }
        Ok(Self { probs, n1, n2 })
    }

    pub fn uniform(n_outcomes: usize, n1: u64, n2: u64) -> Result<Self> {
        Self::new(vec![1.0 / n_outcomes as f64; n_outcomes], n1, n2)
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn sizes(&self) -> (u64, u64) {
        (self.n1, self.n2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub p_hat: f64,
    /// `√(p̂(1−p̂)/reps)`
    pub std_err: f64,
    pub hits: u64,
    pub reps: u64,
    pub seed: u64,
}

impl McEstimate {
    fn from_hits(hits: u64, reps: u64, seed: u64) -> Self {
        let p = hits as f64 / reps as f64;
        Self {
            p_hat: p,
            std_err: (p * (1.0 - p) / reps as f64).sqrt(),
            hits,
            reps,
            seed,
        }
    }
}

const CHUNK: u64 = 4096;

/// Counts replications `i ∈ [0, reps)` for which `hit(rng_i)` holds.
fn count_hits<F>(reps: u64, seed: u64, threads: Option<usize>, hit: F) -> Result<u64>
where
    F: Fn(&mut ChaCha8Rng) -> bool + Sync,
{
    if reps == 0 {
        return Err(Error::param("reps", "must be at least 1"));
    }
    let base = ChaCha8Rng::seed_from_u64(seed);
    let chunks = reps.div_ceil(CHUNK);
    let run = || {
        (0..chunks)
            .into_par_iter()
            .map(|k| {
                let mut n = 0u64;
                for i in (k * CHUNK)..((k + 1) * CHUNK).min(reps) {
                    let mut rng = base.clone();
                    rng.set_stream(i);
                    n += hit(&mut rng) as u64;
                }
                n
            })
            .sum::<u64>()
    };
    match threads {
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t.max(1))
                .build()
                .map_err(|e| Error::param("threads", e.to_string()))?;
            Ok(pool.install(run))
        }
        None => Ok(run()),
    }
}

/// Multinomial counts by conditional binomials, added to `counts`.
fn add_multinomial<R: Rng>(rng: &mut R, n: u64, probs: &[f64], counts: &mut [u64]) {
    let mut left = n;
    let mut mass = 1.0;
    let last = probs.len() - 1;
    for (j, &p) in probs.iter().enumerate() {
        if left == 0 {
            break;
        }
        let k = if j == last {
            left
        } else {
            let q = (p / mass).clamp(0.0, 1.0);
            Binomial::new(left, q)
                .expect("probability in [0, 1]")
                .sample(rng)
        };
        counts[j] += k;
        left -= k;
        mass -= p;
    }
}

fn pearson(counts: &[u64], n: u64, probs: &[f64]) -> f64 {
    let n = n as f64;
    counts
        .iter()
        .zip(probs)
        .map(|(&v, &p)| {
            let e = n * p;
            (v as f64 - e).powi(2) / e
        })
        .sum()
}

/// Estimates `P(X(n₁) > x₁*, X(n₂) > x₂*)` for the Pearson statistics of one
/// nested sample: the counts at `n₂` extend those at `n₁` by an independent
/// multinomial increment of `n₂ − n₁` trials.
///
/// A level `xᵢ* ≤ 0` imposes no constraint, so `x₁* = x₂* = 0` gives
/// exactly 1 (matching the limiting α at the origin).
pub fn simulate_pearson_joint(
    scheme: &TrialScheme,
    x1_star: f64,
    x2_star: f64,
    reps: u64,
    seed: u64,
) -> Result<McEstimate> {
    simulate_pearson_joint_with_threads(scheme, x1_star, x2_star, reps, seed, None)
}

/// [`simulate_pearson_joint`] on a dedicated pool of `threads` workers
/// (`None` uses the global pool). The result does not depend on `threads`.
pub fn simulate_pearson_joint_with_threads(
    scheme: &TrialScheme,
    x1_star: f64,
    x2_star: f64,
    reps: u64,
    seed: u64,
    threads: Option<usize>,
) -> Result<McEstimate> {
    if x1_star.is_nan() || x2_star.is_nan() {
        return Err(Error::param("x_star", "levels must not be NaN"));
    }
    let (n1, n2) = scheme.sizes();
    let probs = scheme.probs();
    let hits = count_hits(reps, seed, threads, |rng| {
        let mut counts = vec![0u64; probs.len()];
        add_multinomial(rng, n1, probs, &mut counts);
        if x1_star > 0.0 && pearson(&counts, n1, probs) <= x1_star {
            return false;
        }
        add_multinomial(rng, n2 - n1, probs, &mut counts);
        x2_star <= 0.0 || pearson(&counts, n2, probs) > x2_star
    })?;
    Ok(McEstimate::from_hits(hits, reps, seed))
}

/// Estimates `P(‖W(s₁)‖ ≥ x₁, ‖W(s₂)‖ ≥ x₂)` for a `d`-dimensional Brownian
/// motion by exact sampling: `W(s₁) = √s₁·Z`, `W(s₂) = W(s₁) + √(s₂−s₁)·Z'`.
pub fn simulate_bessel_joint(q: &BesselQuery, reps: u64, seed: u64) -> Result<McEstimate> {
    simulate_bessel_joint_with_threads(q, reps, seed, None)
}

/// [`simulate_bessel_joint`] on a dedicated pool of `threads` workers.
pub fn simulate_bessel_joint_with_threads(
    q: &BesselQuery,
    reps: u64,
    seed: u64,
    threads: Option<usize>,
) -> Result<McEstimate> {
    let d = q.d() as usize;
    let (s1, s2) = q.times();
    let (x1, x2) = q.thresholds();
    let (sd1, sd2) = (s1.sqrt(), (s2 - s1).sqrt());
    let (t1, t2) = (x1 * x1, x2 * x2);
    let hits = count_hits(reps, seed, threads, |rng| {
        let mut w = [0.0f64; 16];
        let mut w_heap;
        let w: &mut [f64] = if d <= 16 {
            &mut w[..d]
        } else {
            w_heap = vec![0.0; d];
            &mut w_heap
        };
        let mut r1 = 0.0;
        for wi in w.iter_mut() {
            let z: f64 = StandardNormal.sample(rng);
            *wi = sd1 * z;
            r1 += *wi * *wi;
        }
        if r1 < t1 {
            return false;
        }
        let mut r2 = 0.0;
        for wi in w.iter() {
            let z: f64 = StandardNormal.sample(rng);
            let v = wi + sd2 * z;
            r2 += v * v;
        }
        r2 >= t2
    })?;
    Ok(McEstimate::from_hits(hits, reps, seed))
}
