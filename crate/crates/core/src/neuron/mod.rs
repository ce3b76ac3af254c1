//! Current-mode adaptive exponential integrate-and-fire neuron.
//!
//! The silicon neuron represents the membrane and adaptation variables as
//! currents. In normalized form:
//!
//! ```text
//! τ_mem · dI_mem/dt = -I_mem + g·(f(I_mem) - I_ahp + I_in)
//! τ_ahp · dI_ahp/dt = g_ahp·I_a·[pulse extender active] - I_ahp
//! ```
//!
//! with `τ_mem = C_mem·U_T/(κ·I_leak)`, `τ_ahp = C_ahp·U_T/(κ·I_τahp)`, `g`
//! the LEAK-block gain ratio and `f` an exponential positive feedback. A spike
//! is requested when `I_mem ≥ I_thr`; once acknowledged the membrane is reset
//! and clamped for `t_ref = Q_ref / I_ref`.

mod voltage;

pub use voltage::{adexp_voltage_rhs, simulate_voltage_reference, AdexVoltageParams, VoltageSpikeTrain};

use serde::Serialize;

use crate::aer::{HandshakePhase, HandshakeState};
use crate::device::{ParamMap, PhysicalConstants};
use crate::error::{Error, Result};

/// Default feedback ceiling as a multiple of `I_thr`.
pub const DEFAULT_FB_CEILING_RATIO: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdexNeuronParams {
    pub c_mem: f64,
    pub c_ahp: f64,
    /// LEAK block time-constant bias; sets `g_L` and `τ_mem`.
    pub i_leak: f64,
    /// `I_gain / I_leak` of the LEAK block.
    pub gain_ratio_leak: f64,
    pub i_thr: f64,
    pub i_ref: f64,
    /// Charge removed from the refractory capacitor per spike [C].
    pub q_ref: f64,
    /// Adaptation weight.
    pub i_a: f64,
    pub i_tau_ahp: f64,
    pub gain_ratio_ahp: f64,
    /// Pulse-extender window [s].
    pub t_pex: f64,
    /// Positive-feedback prefactor.
    pub i_fb0: f64,
    /// Positive-feedback e-fold scale. `None` tracks `I_thr/5`.
    pub i_norm: Option<f64>,
    /// Membrane current after reset.
    pub i_reset: f64,
    /// Feedback ceiling in units of `I_thr`.
    pub fb_ceiling_ratio: f64,
}

impl Default for AdexNeuronParams {
    fn default() -> Self {
        Self {
            c_mem: 821e-15,
            c_ahp: 1e-12,
            i_leak: 1e-12,
            gain_ratio_leak: 1.0,
            i_thr: 100e-12,
            i_ref: 100e-12,
            q_ref: 200e-15,
            i_a: 0.0,
            i_tau_ahp: 0.5e-12,
            gain_ratio_ahp: 1.0,
            t_pex: 1e-6,
            i_fb0: 50e-15,
            i_norm: None,
            i_reset: 0.0,
            fb_ceiling_ratio: DEFAULT_FB_CEILING_RATIO,
        }
    }
}

/// Names accepted by [`AdexNeuronParams::to_param_map`] and friends.
pub const NEURON_PARAM_NAMES: &[&str] = &[
    "C_mem",
    "C_ahp",
    "I_leak",
    "gain_ratio_leak",
    "I_thr",
    "I_ref",
    "Q_ref",
    "I_a",
    "I_tau_ahp",
    "gain_ratio_ahp",
    "t_pex",
    "I_fb0",
    "I_norm",
    "I_reset",
];

impl AdexNeuronParams {
    pub fn i_norm(&self) -> f64 {
        self.i_norm.unwrap_or(self.i_thr / 5.0)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("C_mem", self.c_mem),
            ("C_ahp", self.c_ahp),
            ("I_leak", self.i_leak),
            ("I_thr", self.i_thr),
            ("I_norm", self.i_norm()),
            ("I_tau_ahp", self.i_tau_ahp),
            ("t_pex", self.t_pex),
            ("fb_ceiling_ratio", self.fb_ceiling_ratio),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::config(format!("{name} must be > 0, got {v:e}")));
            }
        }
        let non_negative = [
            ("gain_ratio_leak", self.gain_ratio_leak),
            ("I_ref", self.i_ref),
            ("Q_ref", self.q_ref),
            ("I_a", self.i_a),
            ("gain_ratio_ahp", self.gain_ratio_ahp),
            ("I_fb0", self.i_fb0),
            ("I_reset", self.i_reset),
        ];
        for (name, v) in non_negative {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::config(format!("{name} must be >= 0, got {v:e}")));
            }
        }
        if self.i_reset >= self.i_thr {
            return Err(Error::config("I_reset must be below I_thr"));
        }
        Ok(())
    }

    pub fn tau_mem(&self, consts: &PhysicalConstants) -> f64 {
        consts.ideal_tau(self.c_mem, self.i_leak)
    }

    pub fn tau_ahp(&self, consts: &PhysicalConstants) -> f64 {
        consts.ideal_tau(self.c_ahp, self.i_tau_ahp)
    }

    /// `t_ref = Q_ref / I_ref`.
    pub fn refractory_period(&self) -> Result<f64> {
        if !(self.i_ref > 0.0) {
            return Err(Error::config(
                "I_ref = 0 gives an infinite refractory period; set a positive I_ref",
            ));
        }
        Ok(self.q_ref / self.i_ref)
    }

    pub fn fb_ceiling(&self) -> f64 {
        self.fb_ceiling_ratio * self.i_thr
    }

    pub fn to_param_map(&self) -> ParamMap {
        let mut m = ParamMap::new();
        for name in NEURON_PARAM_NAMES {
            m.insert(name.to_string(), self.get(name).expect("known name"));
        }
        m
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        Some(match name {
            "C_mem" => self.c_mem,
            "C_ahp" => self.c_ahp,
            "I_leak" => self.i_leak,
            "gain_ratio_leak" => self.gain_ratio_leak,
            "I_thr" => self.i_thr,
            "I_ref" => self.i_ref,
            "Q_ref" => self.q_ref,
            "I_a" => self.i_a,
            "I_tau_ahp" => self.i_tau_ahp,
            "gain_ratio_ahp" => self.gain_ratio_ahp,
            "t_pex" => self.t_pex,
            "I_fb0" => self.i_fb0,
            "I_norm" => self.i_norm(),
            "I_reset" => self.i_reset,
            _ => return None,
        })
    }

    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        match name {
            "C_mem" => self.c_mem = value,
            "C_ahp" => self.c_ahp = value,
            "I_leak" => self.i_leak = value,
            "gain_ratio_leak" => self.gain_ratio_leak = value,
            "I_thr" => self.i_thr = value,
            "I_ref" => self.i_ref = value,
            "Q_ref" => self.q_ref = value,
            "I_a" => self.i_a = value,
            "I_tau_ahp" => self.i_tau_ahp = value,
            "gain_ratio_ahp" => self.gain_ratio_ahp = value,
            "t_pex" => self.t_pex = value,
            "I_fb0" => self.i_fb0 = value,
            "I_norm" => self.i_norm = Some(value),
            "I_reset" => self.i_reset = value,
            _ => return Err(Error::config(format!("unknown neuron parameter '{name}'"))),
        }
        Ok(())
    }

    /// Applies every entry of `map` whose value differs from the current one.
    ///
    /// Entries equal to the current value are skipped so that derived
    /// defaults (such as `I_norm` tracking `I_thr`) stay derived.
    pub fn with_param_map(&self, map: &ParamMap) -> Result<Self> {
        let mut out = *self;
        // I_thr first so a tracked I_norm follows it before I_norm is compared
        if let Some(&v) = map.get("I_thr") {
            out.i_thr = v;
        }
        for (name, &v) in map {
            if name == "I_thr" {
                continue;
            }
            let current = self.get(name);
            if current.is_none() {
                return Err(Error::config(format!("unknown neuron parameter '{name}'")));
            }
            if current != Some(v) {
                out.set(name, v)?;
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NeuronState {
    pub i_mem: f64,
    pub i_ahp: f64,
    /// Absolute end of the refractory clamp.
    pub refractory_until: f64,
    /// Absolute end of the pulse-extender window.
    pub pex_until: f64,
    pub handshake: HandshakeState,
}

impl Default for NeuronState {
    fn default() -> Self {
        Self {
            i_mem: 0.0,
            i_ahp: 0.0,
            refractory_until: f64::NEG_INFINITY,
            pex_until: f64::NEG_INFINITY,
            handshake: HandshakeState::default(),
        }
    }
}

impl NeuronState {
    pub fn is_refractory(&self, t: f64) -> bool {
        t < self.refractory_until
    }

    pub fn pex_active(&self, t: f64) -> bool {
        t < self.pex_until
    }
}

/// Exponential positive feedback `I_fb0·exp(I_mem/I_norm)`, clamped at the
/// configured ceiling.
pub fn f_positive_feedback(i_mem: f64, params: &AdexNeuronParams) -> f64 {
    let ceiling = params.fb_ceiling();
    if params.i_fb0 <= 0.0 {
        return 0.0;
    }
    let x = i_mem / params.i_norm();
    if x >= (ceiling / params.i_fb0).ln() {
        ceiling
    } else {
        (params.i_fb0 * x.exp()).min(ceiling)
    }
}

/// Precomputed time constants for the neuron ODE.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeuronDynamics {
    pub params: AdexNeuronParams,
    pub tau_mem: f64,
    pub tau_ahp: f64,
}

impl NeuronDynamics {
    pub fn new(params: &AdexNeuronParams, consts: &PhysicalConstants) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            params: *params,
            tau_mem: params.tau_mem(consts),
            tau_ahp: params.tau_ahp(consts),
        })
    }

    /// Membrane and adaptation rates outside the refractory clamp.
    #[inline]
    pub fn rates(&self, i_mem: f64, i_ahp: f64, i_in: f64, pex_active: bool) -> (f64, f64) {
        let p = &self.params;
        let mut d_mem =
            (-i_mem + p.gain_ratio_leak * (f_positive_feedback(i_mem, p) - i_ahp + i_in)) / self.tau_mem;
        if i_mem <= 0.0 && d_mem < 0.0 {
            d_mem = 0.0;
        }
        let target = if pex_active { p.gain_ratio_ahp * p.i_a } else { 0.0 };
        let d_ahp = (target - i_ahp) / self.tau_ahp;
        (d_mem, d_ahp)
    }
}

/// `(dI_mem/dt, dI_ahp/dt)` at time `t`. Callers clamp the membrane during
/// the refractory window.
pub fn neuron_rhs(
    state: &NeuronState,
    i_in: f64,
    t: f64,
    params: &AdexNeuronParams,
    consts: &PhysicalConstants,
) -> Result<(f64, f64)> {
    let dynamics = NeuronDynamics::new(params, consts)?;
    Ok(dynamics.rates(state.i_mem, state.i_ahp, i_in, state.pex_active(t)))
}

/// Level check performed by the current comparator: the membrane is at or
/// above threshold and the handshake can accept a new request.
pub fn check_threshold(state: &NeuronState, params: &AdexNeuronParams) -> bool {
    state.i_mem >= params.i_thr && state.handshake.phase == HandshakePhase::Idle
}

/// Half-open pulse-extender window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PulseWindow {
    pub start: f64,
    pub end: f64,
}

impl PulseWindow {
    pub fn contains(&self, t: f64) -> bool {
        t >= self.start && t < self.end
    }

    /// Retriggers the window at `t`. A request inside the current window
    /// stretches it; one after it starts a fresh window.
    pub fn retrigger(self, t: f64, params: &AdexNeuronParams) -> PulseWindow {
        let fresh = pulse_extender(t, params);
        if t <= self.end {
            PulseWindow {
                start: self.start,
                end: fresh.end.max(self.end),
            }
        } else {
            fresh
        }
    }
}

pub fn pulse_extender(t_req_rise: f64, params: &AdexNeuronParams) -> PulseWindow {
    PulseWindow {
        start: t_req_rise,
        end: t_req_rise + params.t_pex,
    }
}

/// Post-acknowledge reset: the membrane drops to `I_reset`, the refractory
/// clamp starts and the pulse extender is (re)triggered.
pub fn apply_reset(state: &NeuronState, t_spike: f64, params: &AdexNeuronParams) -> Result<NeuronState> {
    let t_ref = params.refractory_period()?;
    let pex_end = if state.pex_active(t_spike) {
        (t_spike + params.t_pex).max(state.pex_until)
    } else {
        t_spike + params.t_pex
    };
    Ok(NeuronState {
        i_mem: params.i_reset,
        refractory_until: t_spike + t_ref,
        pex_until: pex_end,
        ..*state
    })
}
