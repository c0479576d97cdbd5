//! Nonlinear quadrotor attitude simulator with rotor lag, mixer, inner PD
//! loops and a 1 kHz outer controller; synthetic identification experiments
//! and controller comparisons.

mod cascade;
mod comparison;
mod dynamics;
mod experiment;
mod mixer;
mod params;
mod pid;

pub use cascade::{
    cascade_sim, inner_loop_model, Disturbance, DisturbanceMode, Noise, Outer, Plant, Reference, Scenario, CASCADE_CHANNELS,
    CONTROL_PERIOD, DIVERGENCE_ANGLE,
};
pub use comparison::{run_comparison, write_metrics_csv, ComparisonRow};
pub use dynamics::{quad_dynamics, rk4_step, step_attitude, AttitudeState, STATE_DIM};
pub use experiment::{synth_experiment, ExperimentSuite, EXPERIMENT_BAND_HZ};
pub use mixer::{mixer, mixer_saturating, squared_inputs, MotorCommands};
pub use params::{QuadrotorParams, GRAVITY, SYMMETRY_TOL};
pub use pid::{pid_step, InnerLoop, PdGains, PidController, PidGains, PidState, TRACKING_TIME};
