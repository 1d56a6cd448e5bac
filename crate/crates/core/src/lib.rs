//! Joint rejection probabilities of the two-stage sequential Pearson
//! chi-squared test, and two-time tails of the Bessel process.

// `!(x > 0.0)` style guards are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Reference constants keep the digits they were published or computed with.
#![allow(clippy::excessive_precision)]

pub mod asymptotics;
pub mod bessel_process;
pub mod enclosure;
pub mod error;
pub mod model;
pub mod montecarlo;
pub mod quadrature;
pub mod special_fn;

pub use enclosure::{Enclosure, EnclosureTag, LogEnclosure};
pub use error::{Error, Result};
pub use model::{derive_params, ChainParams, JointDensity, TestDesign};
pub use quadrature::{alpha_quad, bonferroni_bounds, BonferroniBounds, CriticalPair, QuadResult};
pub use special_fn::BesselOrder;
