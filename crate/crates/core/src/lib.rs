//! Quantization dimension of Markov-type measures on ratio-specified
//! graph-directed fractals.
//!
//! A [`MarkovSystem`] fixes a transition matrix `P`, contraction ratios `C`,
//! an initial distribution `χ` and an order `r`. From it the crate computes
//! the root `s_r` of `Ψ_G(s) = 1` (the quantization dimension), decides
//! whether the `s_r`-dimensional quantization coefficients are finite and
//! positive, and cross-checks the theory numerically: threshold antichains
//! `Λ_{j,r}`, an explicit interval realization of the fractal, sampling of
//! the measure, and an empirical order-`r` quantizer.

pub mod antichain;
pub mod fixtures;
pub mod geometry;
pub mod graph;
pub mod linalg;
pub mod measure;
pub mod numeric;
pub mod quantizer;
pub mod spectral;
pub mod system;
pub mod weight;
pub mod word;

pub use antichain::{Antichain, AntichainError, Scope};
pub use geometry::{sample_measure, CylinderGeometry, GeometryError, SamplePoint};
pub use graph::{ComparabilityVerdict, SccDecomposition};
pub use measure::{diagnostics, growth_series, AntichainDiagnostics, GrowthSeries, MeasureError, Trend};
pub use quantizer::{
    dimension_fit, discretize, lloyd, DimensionFit, DiscreteMeasure, FitOptions, LloydOptions,
    QuantizationResult, QuantizerError,
};
pub use spectral::{classify, solve_sr, Classification, SpectralOptions, SpectralReport};
pub use system::{MarkovSystem, SystemSpec, ValidationError};
pub use weight::Weight;
pub use word::{Word, WordWeights};
