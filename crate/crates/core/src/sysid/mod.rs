//! Closed-loop frequency-domain identification from chirp experiments.

mod chirp;
mod etfe;
mod fit;
mod select;
mod signal;

pub use chirp::{chirp, ChirpConfig, ExperimentRecord, DEFAULT_AMPLITUDE_RANGE, RECORD_CHANNELS};
pub use etfe::{etfe, etfe_band, MIN_SEGMENT};
pub use fit::{fit_percent, fit_percent_of, fit_tf, COEFF_TOL, MAX_NORMAL_COND};
pub use select::{
    assemble_report, enumerate_candidates, identify, select_best, select_best_index, select_nominal,
    select_nominal_index, structures, CandidateModel, IdentificationReport, IdentifyOptions,
    PoleHistogram, FIT_WINDOW, HISTOGRAM_BIN,
};
pub use signal::{coupling_metric, estimate_delay};
