//! Differential-pair-integrator synapse.
//!
//! Behaviorally the DPI synapse is a first-order low-pass filter on currents:
//!
//! ```text
//! τ · dI_syn/dt + I_syn = (I_gain / I_τ) · I_w     while the input pulse is high
//! τ · dI_syn/dt + I_syn = 0                        otherwise
//! ```
//!
//! With leakage on, both `τ` and the efficacy `I_gain/I_τ` use the leak-boosted
//! bias current. Because the drive is piecewise constant the filter has a
//! closed-form update, which is what the engine uses.

use serde::Serialize;

use crate::device::{effective_tau, LeakModel, PhysicalConstants};
use crate::error::{Error, Result};

/// Default DPI gain ratio `I_gain/I_τ`.
pub const DEFAULT_GAIN_RATIO: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DpiSynapseParams {
    /// Synapse capacitor [F].
    pub c_syn: f64,
    /// Time-constant bias current [A].
    pub i_tau: f64,
    /// Gain bias current [A]. `None` tracks `4·I_τ`.
    pub i_gain: Option<f64>,
    /// Weight current [A].
    pub i_w: f64,
    /// Input pulse width [s].
    pub pulse_width: f64,
}

impl Default for DpiSynapseParams {
    fn default() -> Self {
        Self {
            c_syn: 821e-15,
            i_tau: 100e-15,
            i_gain: None,
            i_w: 100e-9,
            pulse_width: 100e-9,
        }
    }
}

impl DpiSynapseParams {
    pub fn i_gain(&self) -> f64 {
        self.i_gain.unwrap_or(DEFAULT_GAIN_RATIO * self.i_tau)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c_syn > 0.0) {
            return Err(Error::config("C_syn must be > 0"));
        }
        if !(self.i_tau > 0.0) || !(self.i_gain() > 0.0) || !(self.i_w > 0.0) {
            return Err(Error::config("synapse currents must be > 0"));
        }
        if !(self.pulse_width > 0.0) {
            return Err(Error::config("pulse_width must be > 0"));
        }
        if !(self.i_gain() / self.i_tau).is_finite() {
            return Err(Error::config("I_gain/I_tau must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct SynapseState {
    /// Output current [A].
    pub i_syn: f64,
    pub pulse_active: bool,
    /// End of the current input pulse; meaningful only while active.
    pub pulse_end_time: f64,
    /// Weight current of the active pulse (already scaled by any routing
    /// weight).
    pub i_w_active: f64,
}

impl SynapseState {
    pub fn with_current(i_syn: f64) -> Self {
        Self {
            i_syn,
            ..Self::default()
        }
    }

    pub fn pulsed(self, i_w: f64, end: f64) -> Self {
        Self {
            pulse_active: true,
            pulse_end_time: end,
            i_w_active: i_w,
            ..self
        }
    }

    pub fn released(self) -> Self {
        Self {
            pulse_active: false,
            i_w_active: 0.0,
            ..self
        }
    }
}

/// Precomputed filter coefficients for one synapse under a given leak model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynapseChannel {
    pub tau: f64,
    /// `I_gain / (I_τ + I_leak)`.
    pub efficacy: f64,
}

impl SynapseChannel {
    pub fn new(params: &DpiSynapseParams, leak: &LeakModel, consts: &PhysicalConstants) -> Result<Self> {
        params.validate()?;
        let tau = effective_tau(params.c_syn, params.i_tau, leak, consts)?;
        Ok(Self {
            tau,
            efficacy: params.i_gain() / leak.effective_current(params.i_tau),
        })
    }

    /// Asymptotic current the filter is driven toward.
    pub fn target(&self, state: &SynapseState) -> f64 {
        if state.pulse_active {
            self.efficacy * state.i_w_active
        } else {
            0.0
        }
    }

    /// Current after `dt` seconds of constant drive.
    #[inline]
    pub fn value_after(&self, state: &SynapseState, dt: f64) -> f64 {
        let target = self.target(state);
        let x = -dt / self.tau;
        if target == 0.0 {
            state.i_syn * x.exp()
        } else {
            // charging over a 100 ns pulse has dt/τ ~ 1e-7; exp_m1 keeps the
            // increment exact where 1 - exp(-x) would cancel
            state.i_syn - (target - state.i_syn) * x.exp_m1()
        }
    }
}

/// Instantaneous `dI_syn/dt` [A/s].
pub fn synapse_rhs(
    state: &SynapseState,
    params: &DpiSynapseParams,
    leak: &LeakModel,
    consts: &PhysicalConstants,
) -> Result<f64> {
    let ch = SynapseChannel::new(params, leak, consts)?;
    Ok((ch.target(state) - state.i_syn) / ch.tau)
}

/// Closed-form advance over an interval with constant pulse activity.
pub fn exact_step(
    state: &SynapseState,
    dt: f64,
    params: &DpiSynapseParams,
    leak: &LeakModel,
    consts: &PhysicalConstants,
) -> Result<SynapseState> {
    if !(dt >= 0.0) {
        return Err(Error::Domain(format!("dt must be >= 0, got {dt:e}")));
    }
    let ch = SynapseChannel::new(params, leak, consts)?;
    Ok(SynapseState {
        i_syn: ch.value_after(state, dt),
        ..*state
    })
}

/// Periodic steady state `(peak, trough)` under a regular pulse train.
///
/// Over one period the filter charges for `pulse_width` toward the drive
/// target and then decays for the rest of the period. Writing
/// `a = exp(-w/τ)` and `b = exp(-(P-w)/τ)`, the fixed point of that map is
/// `peak = T(1-a)/(1-ab)` and `trough = b·peak`.
pub fn steady_state_envelope(
    params: &DpiSynapseParams,
    leak: &LeakModel,
    consts: &PhysicalConstants,
    rate: f64,
) -> Result<(f64, f64)> {
    if !(rate > 0.0) {
        return Err(Error::Domain(format!("rate must be > 0, got {rate:e}")));
    }
    let period = 1.0 / rate;
    if params.pulse_width >= period {
        return Err(Error::config(format!(
            "pulse_width {:e}s is not shorter than the period {:e}s",
            params.pulse_width, period
        )));
    }
    let ch = SynapseChannel::new(params, leak, consts)?;
    let target = ch.efficacy * params.i_w;
    let b = (-(period - params.pulse_width) / ch.tau).exp();
    // 1 - a and 1 - ab lose precision for τ ≫ P; exp_m1 keeps them exact.
    let one_minus_a = -(-params.pulse_width / ch.tau).exp_m1();
    let one_minus_ab = -(-period / ch.tau).exp_m1();
    let peak = target * one_minus_a / one_minus_ab;
    Ok((peak, b * peak))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p100() -> DpiSynapseParams {
        DpiSynapseParams {
            i_tau: 100e-15,
            i_w: 1e-9,
            ..Default::default()
        }
    }

    fn consts() -> PhysicalConstants {
        PhysicalConstants::default()
    }

    #[test]
    fn rhs_zero_at_fixed_point() {
        let p = p100();
        let l = LeakModel::disabled();
        let ch = SynapseChannel::new(&p, &l, &consts()).unwrap();
        let s = SynapseState::default().pulsed(p.i_w, 1.0);
        let s = SynapseState {
            i_syn: ch.target(&s),
            ..s
        };
        assert_eq!(synapse_rhs(&s, &p, &l, &consts()).unwrap(), 0.0);
    }

    #[test]
    fn rhs_pure_decay() {
        let p = p100();
        let l = LeakModel::disabled();
        let s = SynapseState::with_current(1e-9);
        let r = synapse_rhs(&s, &p, &l, &consts()).unwrap();
        // -1 nA / 273.67 ms
        assert!((r + 3.654e-9).abs() < 1e-12, "{r}");
    }

    #[test]
    fn step_identity_and_e_fold() {
        let p = p100();
        let l = LeakModel::disabled();
        let s = SynapseState::with_current(1e-9);
        assert_eq!(exact_step(&s, 0.0, &p, &l, &consts()).unwrap(), s);
        let tau = SynapseChannel::new(&p, &l, &consts()).unwrap().tau;
        let e = exact_step(&s, tau, &p, &l, &consts()).unwrap().i_syn;
        assert!((e - 367.879_441e-12).abs() < 1e-18, "{e}");
        assert!(exact_step(&s, -1e-9, &p, &l, &consts()).is_err());
    }

    #[test]
    fn envelope_rejects_wide_pulses() {
        let p = DpiSynapseParams {
            pulse_width: 0.03,
            ..p100()
        };
        let l = LeakModel::disabled();
        assert!(steady_state_envelope(&p, &l, &consts(), 50.0).unwrap_err().is_config());
        assert!(matches!(
            steady_state_envelope(&p100(), &l, &consts(), 0.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn envelope_trough_vanishes_at_low_rate() {
        let (peak, trough) =
            steady_state_envelope(&p100(), &LeakModel::disabled(), &consts(), 0.01).unwrap();
        assert!(peak > 0.0);
        assert!(trough / peak < 1e-100);
    }

    #[test]
    fn efficacy_invariant_without_leak() {
        let l = LeakModel::disabled();
        let targets: Vec<f64> = [5e-15, 10e-15, 20e-15, 50e-15]
            .iter()
            .map(|&i_tau| {
                let p = DpiSynapseParams { i_tau, ..p100() };
                SynapseChannel::new(&p, &l, &consts()).unwrap().efficacy * p.i_w
            })
            .collect();
        for t in &targets {
            assert_eq!(*t, targets[0]);
        }
    }
}
