use serde::{Deserialize, Serialize};

/// Which bound produced an enclosure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnclosureTag {
    /// Power series with a geometric tail majorant.
    Series,
    /// Two-term Hankel expansion with the Weber remainder bound.
    WeberP2,
    /// Leading asymptotic term with the Ψ relative-error envelope.
    PsiEnvelope,
    /// Closed form for order one half.
    ExactHalf,
    /// Two-sided Laplace-method bracket for the joint tail.
    Bracket,
    /// First-order Bonferroni bounds (marginals only).
    BonferroniFirst,
    /// Second-order Bonferroni bounds (marginals and pairwise values).
    BonferroniSecond,
}

/// A closed interval `[lo, hi]` known to contain a quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Enclosure {
    pub lo: f64,
    pub hi: f64,
    pub tag: EnclosureTag,
}

impl Enclosure {
    pub fn new(lo: f64, hi: f64, tag: EnclosureTag) -> Self {
        debug_assert!(lo <= hi, "enclosure endpoints out of order: {lo} > {hi}");
        Self { lo, hi, tag }
    }

    pub fn point(v: f64, tag: EnclosureTag) -> Self {
        Self::new(v, v, tag)
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.hi - self.lo)
    }

    /// Width divided by midpoint. Zero for a point enclosure at zero.
    pub fn rel_width(&self) -> f64 {
        let m = self.mid();
        if m == 0.0 {
            if self.hi == self.lo {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (self.hi - self.lo) / m.abs()
        }
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn intersects(&self, other: &Enclosure) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }
}

/// An enclosure stored by the natural logarithms of its endpoints, for
/// quantities far below the smallest positive double. `ln_lo` may be
/// negative infinity when the lower endpoint is zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogEnclosure {
    pub ln_lo: f64,
    pub ln_hi: f64,
    pub tag: EnclosureTag,
}

impl LogEnclosure {
    pub fn contains_ln(&self, ln_v: f64) -> bool {
        self.ln_lo <= ln_v && ln_v <= self.ln_hi
    }

    pub fn to_linear(&self) -> Enclosure {
        Enclosure::new(self.ln_lo.exp(), self.ln_hi.exp(), self.tag)
    }

    /// Half-width over midpoint, `(hi - lo) / (hi + lo)`, computed without
    /// leaving log space. Lies in `[0, 1]`.
    pub fn rel_half_width(&self) -> f64 {
        if self.ln_lo == f64::NEG_INFINITY {
            return 1.0;
        }
        // (1 - e^{-d}) / (1 + e^{-d}) = tanh(d / 2)
        (0.5 * (self.ln_hi - self.ln_lo)).tanh()
    }

    pub fn log_width(&self) -> f64 {
        self.ln_hi - self.ln_lo
    }
}
