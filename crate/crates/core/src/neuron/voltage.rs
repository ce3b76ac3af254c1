//! Voltage-domain AdExp model, used as a qualitative reference for the
//! current-mode neuron.
//!
//! ```text
//! C·dV/dt  = -g_L(V - E_L) + g_L·Δ_T·exp((V - V_T)/Δ_T) - w + I
//! τ_w·dw/dt = a(V - E_L) - w
//! ```
//!
//! On `V ≥ V_peak` the membrane returns to `V_reset` and `w` jumps by `b`.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdexVoltageParams {
    pub c: f64,
    pub g_l: f64,
    pub e_l: f64,
    pub delta_t: f64,
    pub v_t: f64,
    pub a: f64,
    pub tau_w: f64,
    pub b_increment: f64,
    pub v_reset: f64,
    pub v_peak: f64,
}

impl Default for AdexVoltageParams {
    /// Regular-spiking cortical cell parameters.
    fn default() -> Self {
        Self {
            c: 281e-12,
            g_l: 30e-9,
            e_l: -70.6e-3,
            delta_t: 2e-3,
            v_t: -50.4e-3,
            a: 4e-9,
            tau_w: 144e-3,
            b_increment: 80.5e-12,
            v_reset: -70.6e-3,
            v_peak: -40.4e-3,
        }
    }
}

impl AdexVoltageParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("C", self.c),
            ("g_L", self.g_l),
            ("Delta_T", self.delta_t),
            ("tau_w", self.tau_w),
        ] {
            if !(v > 0.0) {
                return Err(Error::config(format!("{name} must be > 0")));
            }
        }
        if self.v_peak <= self.v_reset {
            return Err(Error::config("V_peak must be above V_reset"));
        }
        Ok(())
    }
}

/// `(dV/dt, dw/dt)`. The exponential argument is capped at `V_peak` so the
/// Runge-Kutta stages of the step that crosses the peak stay finite.
pub fn adexp_voltage_rhs(v: f64, w: f64, i: f64, p: &AdexVoltageParams) -> (f64, f64) {
    let v_exp = v.min(p.v_peak);
    let dv = (-p.g_l * (v - p.e_l) + p.g_l * p.delta_t * ((v_exp - p.v_t) / p.delta_t).exp() - w + i) / p.c;
    let dw = (p.a * (v - p.e_l) - w) / p.tau_w;
    (dv, dw)
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct VoltageSpikeTrain {
    pub spike_times: Vec<f64>,
    /// Adaptation current just after each spike.
    pub w_after_spike: Vec<f64>,
}

impl VoltageSpikeTrain {
    pub fn isis(&self) -> Vec<f64> {
        self.spike_times.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

/// Fixed-step RK4 integration of the reference model under a constant
/// current switched on at t = 0.
pub fn simulate_voltage_reference(p: &AdexVoltageParams, i: f64, duration: f64, dt: f64) -> Result<VoltageSpikeTrain> {
    p.validate()?;
    if !(dt > 0.0) || !(duration > 0.0) {
        return Err(Error::Domain("dt and duration must be > 0".into()));
    }
    let mut out = VoltageSpikeTrain::default();
    let (mut v, mut w) = (p.e_l, 0.0);
    let steps = (duration / dt).ceil() as usize;
    for k in 0..steps {
        let (k1v, k1w) = adexp_voltage_rhs(v, w, i, p);
        let (k2v, k2w) = adexp_voltage_rhs(v + 0.5 * dt * k1v, w + 0.5 * dt * k1w, i, p);
        let (k3v, k3w) = adexp_voltage_rhs(v + 0.5 * dt * k2v, w + 0.5 * dt * k2w, i, p);
        let (k4v, k4w) = adexp_voltage_rhs(v + dt * k3v, w + dt * k3w, i, p);
        v += dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        w += dt / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w);
        if v >= p.v_peak || !v.is_finite() {
            v = p.v_reset;
            w += p.b_increment;
            out.spike_times.push((k + 1) as f64 * dt);
            out.w_after_spike.push(w);
        }
    }
    Ok(out)
}
