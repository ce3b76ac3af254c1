//! Synapse time-constant extraction from the post-stimulus EPSC decay.

use rayon::prelude::*;
use serde::Serialize;

use super::stats::linear_regression;
use crate::device::{effective_tau, LeakModel, PhysicalConstants};
use crate::engine::{run, EngineConfig, Network, StimulusProgram};
use crate::error::{Error, Result};
use crate::synapse::DpiSynapseParams;

/// Samples below this fraction of the peak are excluded from the fit.
pub const FIT_FLOOR: f64 = 0.01;
const MIN_FIT_POINTS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TauFitResult {
    pub tau: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
    pub n_points: usize,
}

/// Least-squares fit of `ln(I/I_peak)` against time, starting at the trace
/// maximum and running while the current stays above 1% of the peak.
pub fn fit_tau(trace: &[(f64, f64)]) -> Result<TauFitResult> {
    let (peak_idx, &(_, peak)) = trace
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .ok_or_else(|| Error::Fit("empty trace".into()))?;
    if !(peak > 0.0) {
        return Err(Error::Fit("trace has no positive peak".into()));
    }
    let segment: Vec<(f64, f64)> = trace[peak_idx..]
        .iter()
        .copied()
        .take_while(|&(_, i)| i >= FIT_FLOOR * peak)
        .collect();
    if segment.len() < MIN_FIT_POINTS {
        return Err(Error::Fit(format!(
            "only {} usable samples above {FIT_FLOOR} of peak",
            segment.len()
        )));
    }
    if segment.windows(2).any(|w| w[1].1 >= w[0].1) {
        return Err(Error::Fit("decay segment is not strictly decreasing".into()));
    }
    let xs: Vec<f64> = segment.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = segment.iter().map(|p| (p.1 / peak).ln()).collect();
    let line = linear_regression(&xs, &ys)?;
    if !(line.slope < 0.0) {
        return Err(Error::Fit("fitted slope is not negative".into()));
    }
    Ok(TauFitResult {
        tau: -1.0 / line.slope,
        r_squared: line.r_squared,
        window: (xs[0], *xs.last().expect("non-empty")),
        n_points: segment.len(),
    })
}

/// Stimulus protocol shared by every row of a time-constant sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TauSweepSetup {
    /// Base synapse; `i_tau` is replaced per row.
    pub synapse: DpiSynapseParams,
    pub leak: LeakModel,
    pub consts: PhysicalConstants,
    pub rate: f64,
    pub stim_duration: f64,
    /// Weight is rescaled per row so the EPSC peaks here. `None` keeps `i_w`.
    pub target_peak: Option<f64>,
    /// Decay observed after the stimulus, in effective time constants.
    pub decay_taus: f64,
    /// Samples per effective time constant.
    pub samples_per_tau: f64,
}

impl Default for TauSweepSetup {
    fn default() -> Self {
        Self {
            synapse: DpiSynapseParams::default(),
            leak: LeakModel::default(),
            consts: PhysicalConstants::default(),
            rate: 50.0,
            stim_duration: 1.0,
            target_peak: Some(1e-9),
            decay_taus: 6.0,
            samples_per_tau: 200.0,
        }
    }
}

/// Standard sweep of bias currents, 1 fA to 500 fA.
pub const DEFAULT_I_TAU_SWEEP: [f64; 10] = [
    1e-15, 5e-15, 10e-15, 20e-15, 50e-15, 100e-15, 200e-15, 300e-15, 400e-15, 500e-15,
];

/// Simulates the synapse alone under the setup's pulse train and returns
/// its `(time, I_syn)` trace.
pub fn simulate_decay(setup: &TauSweepSetup, synapse: &DpiSynapseParams) -> Result<Vec<(f64, f64)>> {
    let tau = effective_tau(synapse.c_syn, synapse.i_tau, &setup.leak, &setup.consts)?;
    let net = Network::single_synapse(*synapse, setup.leak, setup.consts);
    let stim = StimulusProgram::new().with(StimulusProgram::regular_train(0, setup.rate, 0.0, setup.stim_duration));
    let cfg = EngineConfig {
        duration: setup.stim_duration + setup.decay_taus * tau,
        sample_interval: Some(tau / setup.samples_per_tau),
        ..Default::default()
    };
    let out = run(&net, &stim, &cfg)?;
    out.traces
        .series("syn0")
        .ok_or_else(|| Error::Internal("synapse trace missing".into()))
}

/// Weight current that makes the sampled EPSC peak equal `target`.
/// The filter is linear in `I_w`, so one rescale is exact; a second run
/// confirms it.
pub fn tune_weight_for_peak(setup: &TauSweepSetup, synapse: &DpiSynapseParams, target: f64) -> Result<f64> {
    let peak_of = |s: &DpiSynapseParams| -> Result<f64> {
        Ok(simulate_decay(setup, s)?.iter().map(|p| p.1).fold(0.0, f64::max))
    };
    let peak = peak_of(synapse)?;
    if !(peak > 0.0) {
        return Err(Error::Fit("stimulus produced no EPSC".into()));
    }
    let i_w = synapse.i_w * target / peak;
    let check = peak_of(&DpiSynapseParams { i_w, ..*synapse })?;
    if ((check - target) / target).abs() > 1e-9 {
        return Err(Error::Internal(format!("weight tuning missed target: {check:e} vs {target:e}")));
    }
    Ok(i_w)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TauRow {
    pub i_tau: f64,
    /// `C·U_T/(κ·I_τ)` without leakage.
    pub tau_theoretical: f64,
    pub tau_fitted: f64,
    pub r2: f64,
    pub i_w: f64,
    pub peak: f64,
}

/// One fitted row per bias current, computed in parallel and returned in
/// input order.
pub fn tau_sweep(setup: &TauSweepSetup, i_taus: &[f64]) -> Result<Vec<TauRow>> {
    i_taus
        .par_iter()
        .map(|&i_tau| {
            let mut syn = DpiSynapseParams {
                i_tau,
                ..setup.synapse
            };
            if let Some(target) = setup.target_peak {
                syn.i_w = tune_weight_for_peak(setup, &syn, target)?;
            }
            let trace = simulate_decay(setup, &syn)?;
            // Fit the final decay only: with short time constants the train
            // reaches a periodic steady state and earlier pulses can sample
            // as high as the last one.
            let last_period = setup.stim_duration - 1.0 / setup.rate;
            let tail: Vec<(f64, f64)> = trace.iter().copied().filter(|p| p.0 >= last_period).collect();
            let fit = fit_tau(&tail)?;
            Ok(TauRow {
                i_tau,
                tau_theoretical: setup.consts.ideal_tau(syn.c_syn, i_tau),
                tau_fitted: fit.tau,
                r2: fit.r_squared,
                i_w: syn.i_w,
                peak: trace.iter().map(|p| p.1).fold(0.0, f64::max),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(tau: f64, n: usize, dt: f64) -> Vec<(f64, f64)> {
        (0..n).map(|k| (k as f64 * dt, 2e-9 * (-(k as f64) * dt / tau).exp())).collect()
    }

    #[test]
    fn recovers_exact_exponential() {
        let fit = fit_tau(&synthetic(0.1, 1000, 1e-3)).unwrap();
        assert!((fit.tau / 0.1 - 1.0).abs() < 1e-3);
        assert!(fit.r_squared > 0.9999);
        // 1% floor: samples up to t = 0.1·ln 100 ≈ 0.4605
        assert_eq!(fit.n_points, 461);
    }

    #[test]
    fn rising_edge_is_skipped() {
        let mut trace: Vec<(f64, f64)> = (0..10).map(|k| (k as f64 * 1e-3 - 0.01, k as f64 * 2e-10)).collect();
        trace.extend(synthetic(0.05, 400, 1e-3).into_iter().skip(1));
        let fit = fit_tau(&trace).unwrap();
        assert!((fit.tau / 0.05 - 1.0).abs() < 1e-3);
    }

    #[test]
    fn too_few_points() {
        assert!(matches!(fit_tau(&synthetic(1e-3, 1000, 1e-3)), Err(Error::Fit(_))));
        assert!(fit_tau(&[]).is_err());
    }

    #[test]
    fn non_monotone_decay_is_rejected() {
        let mut t = synthetic(0.1, 100, 1e-3);
        t[50].1 = t[40].1;
        assert!(matches!(fit_tau(&t), Err(Error::Fit(_))));
    }
}
