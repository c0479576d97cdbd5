//! Mixed-sensitivity H∞ synthesis: weights, generalized plant, two-Riccati
//! γ-iteration, closed-loop verification and SISO μ analysis.

mod analysis;
mod plant;
mod riccati;
mod synth;
mod weights;

pub use analysis::{gang_of_four, reduce_and_check, rp_mu, rs_mu, verify_mixsyn, GangOfFour, MuCurve, VerifyReport};
pub use plant::{build_mixsyn_plant, GeneralizedPlant, Partition};
pub use riccati::{care_residual, care_solve, ric_schur, IMAG_AXIS_TOL};
pub use synth::{
    closed_loop, closed_loop_norms, gamma_iterate, hinfsyn_at_gamma, NormReport, SynthesisResult, TraceEntry,
    DEFAULT_GAMMA_HI, DEFAULT_GAMMA_LO, DEFAULT_GAMMA_TOL, NORM_SLACK,
};
pub use weights::{
    build_tid, build_tid_with, build_ws, damping_from_overshoot, SynthesisSpec, SETTLING_CONSTANT, WS_FAST_POLE,
    WS_SLOW_POLE,
};
