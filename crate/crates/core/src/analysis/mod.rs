//! Experiment drivers and post-processing.

mod adaptation;
mod fi;
mod montecarlo;
mod power;
mod stats;
mod tau;

pub use adaptation::{adaptation_profile, AdaptationSummary};
pub use fi::{fi_point, fi_sweep, sweep_bias, FiBias, FiCurve, FiPoint, FiSetup};
pub use montecarlo::{
    calibrate_mismatch_scale, default_mismatch_spec, histogram, monte_carlo, HistBin, McResult, McSetup,
    DEFAULT_HIST_BINS, DEFAULT_MISMATCH_SCALE, NOMINAL_70HZ_I_IN,
};
pub use power::{calibrate_power, energy_per_spike, PowerFit, PowerModel};
pub use stats::{linear_regression, mean_std, LinearFit};
pub use tau::{fit_tau, DEFAULT_I_TAU_SWEEP, simulate_decay, tau_sweep, tune_weight_for_peak, TauFitResult, TauRow, TauSweepSetup};
