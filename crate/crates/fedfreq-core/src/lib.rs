//! Federated frequency estimation with count sketches over secure summation.
//!
//! Clients each hold one item from a domain of size `d`. Every client encodes
//! its item into a small `L x W` table of `+1`/`-1` entries, the tables are
//! added up by a secure-summation protocol that reveals only the sum, and the
//! server decodes per-item frequency estimates from the aggregate by taking a
//! median over rows. The crate covers the full pipeline:
//!
//! - [`hashing`]: seeded bucket and sign hash families, with either one sign
//!   per row or one sign per row and round.
//! - [`sketch`]: the integer sketch table, encoding, merging, decoding, and
//!   (de)serialization.
//! - [`multiround`]: the shared, fresh, and hybrid strategies for spending a
//!   multi-round participation budget, and the heterogeneity profile that
//!   governs their error.
//! - [`securesum`]: pairwise-masked summation in a power-of-two modular
//!   group, plus communication-cost accounting.
//! - [`sizing`]: width selection, from closed-form worst-case bounds to a
//!   two-phase planner that fits a power law to a pilot round.
//! - [`privacy`]: Gaussian noise calibration for distributed differential
//!   privacy on top of the hybrid strategy, and the resulting error bound.
//!
//! Estimators are generic over the float type through [`Real`]; the aliases
//! at the crate root fix `f64`, which is what the simulator binary uses.

pub mod error;
pub mod hashing;
pub mod multiround;
pub mod privacy;
pub mod scalar;
pub mod securesum;
pub mod sizing;
pub mod sketch;

pub use error::{Error, Result};
pub use hashing::{HashFamily, SignMode};
pub use multiround::{
    decode_fresh, decode_hybrid, decode_shared, fresh_round_aggregates, heterogeneity,
    hybrid_round_aggregates, run_fresh, run_hybrid, run_shared, shared_round_aggregates,
    HeterogeneityVector, RoundPlan,
};
pub use privacy::{
    decode_hybrid_noisy, dp_error_bound, l2_sensitivity_probe, privatize_round_sketch,
    privatize_rounds, run_hybrid_private, DpErrorBound, NoisySketch, PrivacyParams,
};
pub use scalar::Real;
pub use securesum::{
    comm_cost_bits, mask_clients, one_hot_cost_bits, secure_aggregate, GroupParams, MaskedMessage,
};
pub use sizing::{
    fit_power_law, min_feasible_width, oracle_width, tail_error, two_phase_plan, worst_case_width,
    PowerLawFit, SizingReport, TargetSpec,
};
pub use sketch::{
    aggregate, decode_single_round, encode_accumulate, encode_item, FrequencyEstimate,
    FrequencyVector, SketchMatrix, Strategy,
};

/// [`FrequencyEstimate`] over `f64`.
pub type Estimate = FrequencyEstimate<f64>;
/// [`FrequencyVector`] over `f64`.
pub type Frequencies = FrequencyVector<f64>;
/// [`HeterogeneityVector`] over `f64`.
pub type Heterogeneity = HeterogeneityVector<f64>;
/// [`PowerLawFit`] over `f64`.
pub type Fit = PowerLawFit<f64>;
/// [`SizingReport`] over `f64`.
pub type Sizing = SizingReport<f64>;
/// [`TargetSpec`] over `f64`.
pub type Target = TargetSpec<f64>;
/// [`PrivacyParams`] over `f64`.
pub type Privacy = PrivacyParams<f64>;
