//! Expected number of zeros of random harmonic polynomials `p(z) + conj(q(z))`.
//!
//! The core quantity is the first intensity of the zero set, computed from
//! three weighted power sums of the coefficient variances. Everything else
//! (quadrature, asymptotics, sampled zero counts) is built on top of it.

pub mod asymptotics;
pub mod ensembles;
pub mod error;
pub mod intensity;
pub mod montecarlo;
pub mod quadrature;
pub mod series;
pub mod zerofinder;

pub use asymptotics::{
    endpoint_expansion_value, interior_limit_check, predict_expected_zeros,
    upper_incomplete_gamma_integer, AsymptoticPrediction, LaplaceEndpointExpansion, PredictionMode,
    Regime,
};
pub use ensembles::{ensemble_pair, EnsembleKind, HarmonicPolynomial, VarianceProfile};
pub use error::{Error, Result};
pub use intensity::{first_intensity, scaled_integrand, DensityGrid, RadialIntensityProfile};
pub use quadrature::{expected_zeros, QuadratureResult, Region};
pub use montecarlo::{monte_carlo_expectation, MonteCarloEstimate};
pub use zerofinder::{evaluate, find_zeros, ZeroFinderOptions, ZeroSet};
