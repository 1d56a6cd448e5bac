//! Test-design parameters and the limiting joint density of the Pearson
//! statistics `(X(n₁)/2, …, X(n_r)/2)` under the hypothesis.

use libm::lgamma as ln_gamma;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special_fn::{ln_infeld_scaled, BesselOrder};

/// Two-stage design: `N` outcome categories and the limiting ratio
/// `c = lim √(n₁/n₂)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestDesign {
    n_outcomes: u32,
    c: f64,
}

impl TestDesign {
    pub fn new(n_outcomes: u32, c: f64) -> Result<Self> {
        if n_outcomes < 3 {
            return Err(Error::param(
                "n_outcomes",
                format!("need at least 3 categories, got {n_outcomes}"),
            ));
        }
        if !(c > 0.0 && c < 1.0) {
            return Err(Error::param("c", format!("must lie in (0, 1), got {c}")));
        }
        Ok(Self { n_outcomes, c })
    }

    /// Design with `c = √(n₁/n₂)`.
    pub fn from_sample_sizes(n_outcomes: u32, n1: u64, n2: u64) -> Result<Self> {
        if n1 == 0 || n1 >= n2 {
            return Err(Error::param(
                "sample_sizes",
                format!("need 0 < n1 < n2, got n1 = {n1}, n2 = {n2}"),
            ));
        }
        Self::new(n_outcomes, (n1 as f64 / n2 as f64).sqrt())
    }

    #[inline]
    pub fn n_outcomes(&self) -> u32 {
        self.n_outcomes
    }

    #[inline]
    pub fn c(&self) -> f64 {
        self.c
    }

    /// `δ = (N − 3)/2`, the Bessel order.
    #[inline]
    pub fn delta(&self) -> f64 {
        (self.n_outcomes as f64 - 3.0) / 2.0
    }

    /// `β = 1 − c²`
    #[inline]
    pub fn beta(&self) -> f64 {
        1.0 - self.c * self.c
    }

    /// `K₂ = 1/(1 − c²)`
    #[inline]
    pub fn k2(&self) -> f64 {
        1.0 / self.beta()
    }

    /// Degrees of freedom of each marginal chi-squared law, `N − 1`.
    #[inline]
    pub fn dof(&self) -> u32 {
        self.n_outcomes - 1
    }

    pub(crate) fn order(&self) -> BesselOrder {
        BesselOrder::new(self.delta()).expect("N >= 3 gives a nonnegative order")
    }
}

/// Parameters of the `r`-stage density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainParams {
    pub r: usize,
    /// `ρ₀, …, ρ_r` with `ρ₀ = ρ_r = 0` and `ρᵢ = √(nᵢ/nᵢ₊₁)`.
    pub rho: Vec<f64>,
    /// `b₁, …, b_{r−1}`
    pub b: Vec<f64>,
    /// `λ₁, …, λ_r`
    pub lambda: Vec<f64>,
    pub k_r: f64,
    pub delta: f64,
}

pub fn derive_params(sample_sizes: &[u64], n_outcomes: u32) -> Result<ChainParams> {
    let r = sample_sizes.len();
    if r < 2 {
        return Err(Error::param("sample_sizes", "need at least two stages"));
    }
    if n_outcomes < 3 {
        return Err(Error::param(
            "n_outcomes",
            format!("need at least 3 categories, got {n_outcomes}"),
        ));
    }
    if sample_sizes[0] == 0 || sample_sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::param(
            "sample_sizes",
            format!("must be positive and strictly increasing, got {sample_sizes:?}"),
        ));
    }

    let mut rho = vec![0.0; r + 1];
    for i in 1..r {
        rho[i] = (sample_sizes[i - 1] as f64 / sample_sizes[i] as f64).sqrt();
    }
    let sq = |i: usize| rho[i] * rho[i];

    let b = (1..r)
        .map(|i| {
            sq(i) * (1.0 - sq(i - 1)) * (1.0 - sq(i + 1))
                / ((1.0 - sq(i - 1) * sq(i)) * (1.0 - sq(i) * sq(i + 1)))
        })
        .collect();
    let lambda = (1..=r)
        .map(|i| (1.0 - sq(i - 1)) * (1.0 - sq(i)) / (1.0 - sq(i - 1) * sq(i)))
        .collect();
    let num: f64 = (1..r).map(|k| 1.0 - sq(k) * sq(k - 1)).product();
    let den: f64 = (1..r).map(|k| 1.0 - sq(k)).product();

    Ok(ChainParams {
        r,
        rho,
        b,
        lambda,
        k_r: num / den,
        delta: (n_outcomes as f64 - 3.0) / 2.0,
    })
}

fn check_nonnegative(u: f64) -> Result<()> {
    if u.is_nan() || u < 0.0 {
        return Err(Error::param("u", format!("must be nonnegative, got {u}")));
    }
    Ok(())
}

/// `ln p_{r,0}(u₁, …, u_r)`.
pub fn ln_density_r(u: &[f64], params: &ChainParams) -> Result<f64> {
    let r = params.r;
    if u.len() != r {
        return Err(Error::param(
            "u",
            format!("expected {r} coordinates, got {}", u.len()),
        ));
    }
    for &ui in u {
        check_nonnegative(ui)?;
    }
    let delta = params.delta;
    let order = BesselOrder::new(delta)?;

    let ln_norm = (1.0 + delta) * params.k_r.ln()
        + 0.5 * delta * params.b.iter().map(|b| b.ln()).sum::<f64>()
        + ln_gamma(1.0 + delta)
        + params.lambda.iter().map(|l| l.ln()).sum::<f64>();

    let mut ln_p = -ln_norm;
    ln_p -= u
        .iter()
        .zip(&params.lambda)
        .map(|(ui, l)| ui / l)
        .sum::<f64>();

    if delta > 0.0 {
        let end = u[0] * u[r - 1];
        if end == 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        ln_p += 0.5 * delta * (end / (params.lambda[0] * params.lambda[r - 1])).ln();
    }

    for i in 0..r - 1 {
        let z = 2.0
            * (params.b[i] * u[i] * u[i + 1] / (params.lambda[i] * params.lambda[i + 1])).sqrt();
        ln_p += z + ln_infeld_scaled(order, z);
    }
    Ok(ln_p)
}

pub fn density_r(u: &[f64], params: &ChainParams) -> Result<f64> {
    ln_density_r(u, params).map(f64::exp)
}

/// The two-stage density with its normalizing constant precomputed.
///
/// `p(u₁,u₂) = e^{−(u₁+u₂)/β} (u₁u₂/β²)^{δ/2} I_δ(2c√(u₁u₂)/β)
///             / (K₂^{1+δ} c^δ Γ(1+δ) β²)`
#[derive(Debug, Clone, Copy)]
pub struct JointDensity {
    design: TestDesign,
    order: BesselOrder,
    ln_norm: f64,
}

impl JointDensity {
    pub fn new(design: &TestDesign) -> Self {
        let delta = design.delta();
        let beta = design.beta();
        let ln_norm = (1.0 + delta) * design.k2().ln()
            + delta * design.c().ln()
            + ln_gamma(1.0 + delta)
            + 2.0 * beta.ln();
        Self {
            design: *design,
            order: design.order(),
            ln_norm,
        }
    }

    pub fn design(&self) -> &TestDesign {
        &self.design
    }

    /// Exponent `−(u₁+u₂)/β + 2c√(u₁u₂)/β`, which carries all of the
    /// exponential behavior of the density.
    #[inline]
    pub fn exponent(&self, u1: f64, u2: f64) -> f64 {
        let beta = self.design.beta();
        (-(u1 + u2) + 2.0 * self.design.c() * (u1 * u2).sqrt()) / beta
    }

    /// `ln p(u₁,u₂) − exponent(u₁,u₂)`. Unchecked; inputs must be
    /// nonnegative.
    #[inline]
    pub fn ln_remainder(&self, u1: f64, u2: f64) -> f64 {
        let beta = self.design.beta();
        let delta = self.design.delta();
        let prod = u1 * u2;
        let z = 2.0 * self.design.c() * prod.sqrt() / beta;
        let ln_power = if delta == 0.0 {
            0.0
        } else if prod == 0.0 {
            return f64::NEG_INFINITY;
        } else {
            0.5 * delta * (prod / (beta * beta)).ln()
        };
        ln_power + ln_infeld_scaled(self.order, z) - self.ln_norm
    }

    /// `ln p(u₁,u₂)`, unchecked.
    #[inline]
    pub fn ln_eval(&self, u1: f64, u2: f64) -> f64 {
        self.exponent(u1, u2) + self.ln_remainder(u1, u2)
    }

    pub fn ln_density(&self, u1: f64, u2: f64) -> Result<f64> {
        check_nonnegative(u1)?;
        check_nonnegative(u2)?;
        if u1.is_infinite() || u2.is_infinite() {
            return Ok(f64::NEG_INFINITY);
        }
        Ok(self.ln_eval(u1, u2))
    }
}

/// `ln p_{2,0}(u₁,u₂)`
pub fn ln_density_2(u1: f64, u2: f64, design: &TestDesign) -> Result<f64> {
    JointDensity::new(design).ln_density(u1, u2)
}

/// `p_{2,0}(u₁,u₂)`
pub fn density_2(u1: f64, u2: f64, design: &TestDesign) -> Result<f64> {
    ln_density_2(u1, u2, design).map(f64::exp)
}
