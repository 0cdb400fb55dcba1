//! Power-law fitting and two-sample Kolmogorov-Smirnov tests.

mod ks;
mod powerlaw;
mod zeta;

use thiserror::Error;

pub use ks::{kolmogorov_q, ks_matrix, ks_two_sample, min_max_scale, KsMatrix, KsResult};
pub use powerlaw::{
    continuous_alpha, discrete_alpha, fit_power_law, ks_distance_for, parse_fit_csv,
    write_fit_csv, FitRecord, PowerLawFit, FIT_CSV_HEADER, MIN_SAMPLE,
};
pub use zeta::{hurwitz_zeta, ln_hurwitz_zeta};

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("degenerate sample")]
    DegenerateSample,
    #[error("empty sample")]
    EmptySample,
    #[error("sample contains NaN or infinite values")]
    NonFinite,
    #[error("power-law fitting needs strictly positive values")]
    NonPositive,
    #[error("need at least two series, got {0}")]
    TooFewSeries(usize),
    #[error("fit csv: {0}")]
    Csv(String),
}
