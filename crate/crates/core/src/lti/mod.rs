//! Transfer functions, state-space realizations and their analysis.

mod discretize;
mod freq;
mod norm;
mod poly;
mod reduce;
mod ss;
mod tf;
mod time;

pub use discretize::{c2d_tustin, c2d_zoh, d2c_tustin, zoh_matrices};
pub use freq::{check_grid, log_grid, standard_grid, FrequencyResponse, GRID_MAX, GRID_MIN, GRID_POINTS};
pub use norm::{hinf_norm, hinf_peak, PeakGain};
pub use poly::Polynomial;
pub use reduce::{balanced_truncation, hankel_singular_values};
pub use ss::{block_diag, stack_cols, stack_rows, StateSpace};
pub use tf::{TransferFunction, MINREAL_TOL, STABILITY_TOL};
pub use time::{lsim, step_metrics, step_response, StepMetrics, TimeSeries, SETTLING_BAND};
