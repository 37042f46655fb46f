//! Weighted Gagliardo-Nirenberg checks, decay exponents, log-log rate fits
//! and weighted sup norms.

mod exponents;
mod fit;
mod gn;
mod sup;

pub use exponents::{exponent_catalog, uniform_bound_constant, ExponentCatalog, ExponentSet};
pub use fit::{fit_loglog, RateFit, MIN_FIT_POINTS};
pub use gn::{classical_gn_bound, gn_check, lemma_gn_bound, GNParams, GnCheck};
pub use sup::{weighted_sups, WeightedSupRecorder, WeightedSups};
