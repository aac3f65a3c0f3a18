//! Data-generating processes and the Monte Carlo harness.

mod dgp;
mod monte_carlo;
mod presets;
mod report;

pub use dgp::{AlphaLaw, DgpSpec, Family, VarianceRule};
pub use monte_carlo::{
    cdf_error_curve, cdf_error_from_quantiles, coverage, degeneracy_diagnostic, mean_estimate, percent_grid,
    run_monte_carlo, shape, DegeneracyReport, Layout, McConfig,
};
pub use presets::{preset, presets, Design};
pub use report::{reports_to_csv, Estimate, McReport, MethodSummary};
