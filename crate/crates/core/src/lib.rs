//! Coverage of a one-dimensional street by a roadside RIS.
//!
//! Obstacles (parked cars, trucks) and free stretches alternate along the
//! street as an alternating renewal process. An RIS mounted at height `l`
//! above the stretch `[a, a + delta]` serves users in the lane at distance
//! `d`; a point is covered when its line of sight to some RIS element clears
//! every obstacle. The crate computes the mean covered length analytically
//! and by simulation, and the SINR coverage probability of an active RIS.

pub mod coverage_analytic;
pub mod coverage_sim;
pub mod error;
pub mod montecarlo;
pub mod numerics;
pub mod selftest;
pub mod sinr;
pub mod street;

pub use coverage_analytic::{
    mean_length_corollary, mean_length_theorem1, mean_length_theorem2, CorollaryValue, MeanLengthBreakdown, Method,
};
pub use coverage_sim::{covered_length, covered_set_scenarios, is_visible, mc_mean_covered_length, CoveredLengthMc, CoveredSet};
pub use error::{Error, Result};
pub use montecarlo::{McEstimate, Streams};
pub use numerics::{QuadratureConfig, SeriesConfig};
pub use sinr::{
    coverage_probability_analytic, mc_coverage_dependent, mc_coverage_h0, radio_constants, DependentSettings,
    H0Settings, IntensityConvention, RadioConstants, RadioParams, SinrQuery,
};
pub use street::{EnvParams, Environment, ExpoEnvParams, GeneralEnvParams, LengthDistribution, StreetGeometry};
