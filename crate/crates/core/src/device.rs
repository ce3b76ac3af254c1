//! Physical constants, lumped leakage and device mismatch.
//!
//! Every subthreshold time constant in the simulator has the form
//! `C·U_T / (κ·I)`. The capacitor leak current adds to the bias current that
//! discharges the node, so it shortens every synapse time constant and puts a
//! finite ceiling on how slow a filter can be made.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};

/// Named parameter values, ordered by name so iteration is deterministic.
pub type ParamMap = BTreeMap<String, f64>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhysicalConstants {
    /// Thermal voltage [V].
    pub u_t: f64,
    /// Subthreshold slope factor.
    pub kappa: f64,
    /// Supply voltage [V].
    pub v_dd: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            u_t: 0.025,
            kappa: 0.75,
            v_dd: 0.8,
        }
    }
}

impl PhysicalConstants {
    pub fn validate(&self) -> Result<()> {
        if !(self.u_t > 0.0) {
            return Err(Error::config("U_T must be > 0"));
        }
        if !(self.kappa > 0.0 && self.kappa < 1.0) {
            return Err(Error::config("kappa must lie in (0, 1)"));
        }
        if !(self.v_dd > 0.0) {
            return Err(Error::config("V_dd must be > 0"));
        }
        Ok(())
    }

    /// `C·U_T/(κ·I)` without any leak contribution.
    pub fn ideal_tau(&self, capacitance: f64, current: f64) -> f64 {
        capacitance * self.u_t / (self.kappa * current)
    }
}

/// Lumped leakage. The capacitor leak is a constant baseline current that
/// adds to the bias current of every synapse node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LeakModel {
    /// Capacitor leak [A].
    pub cap_leak_baseline: f64,
    /// Cumulative transistor leak [A].
    pub transistor_leak_floor: f64,
    pub enabled: bool,
}

impl Default for LeakModel {
    fn default() -> Self {
        Self {
            cap_leak_baseline: 3.5e-15,
            transistor_leak_floor: 1e-16,
            enabled: true,
        }
    }
}

impl LeakModel {
    pub fn disabled() -> Self {
        Self {
            enabled: false,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cap_leak_baseline >= 0.0) || !(self.transistor_leak_floor >= 0.0) {
            return Err(Error::config("leak currents must be >= 0"));
        }
        Ok(())
    }

    /// Total parasitic current added to a bias current, zero when disabled.
    pub fn total(&self) -> f64 {
        if self.enabled {
            self.cap_leak_baseline + self.transistor_leak_floor
        } else {
            0.0
        }
    }

    /// Bias current seen by the capacitor node once leakage is included.
    pub fn effective_current(&self, i_tau: f64) -> f64 {
        i_tau + self.total()
    }
}

/// Time constant of a DPI node with capacitance `c` biased at `i_tau`,
/// including the leakage currents when `leak` is enabled.
pub fn effective_tau(c: f64, i_tau: f64, leak: &LeakModel, consts: &PhysicalConstants) -> Result<f64> {
    if !(c > 0.0) {
        return Err(Error::Domain(format!("capacitance must be > 0, got {c:e}")));
    }
    if !(i_tau > 0.0) {
        return Err(Error::Domain(format!("I_tau must be > 0, got {i_tau:e}")));
    }
    Ok(consts.ideal_tau(c, leak.effective_current(i_tau)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
pub enum MismatchDistribution {
    /// Multiplicative factor `exp(σ·z)` with `z ~ N(0, 1)`.
    #[default]
    Lognormal,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MismatchSpec {
    /// Relative sigma per parameter name.
    pub sigmas: BTreeMap<String, f64>,
    /// Global multiplier applied to every sigma.
    pub scale: f64,
    pub distribution: MismatchDistribution,
    pub seed: u64,
}

impl Default for MismatchSpec {
    fn default() -> Self {
        Self {
            sigmas: BTreeMap::new(),
            scale: 1.0,
            distribution: MismatchDistribution::Lognormal,
            seed: 0,
        }
    }
}

impl MismatchSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.scale >= 0.0) || !self.scale.is_finite() {
            return Err(Error::config("mismatch scale must be finite and >= 0"));
        }
        for (name, s) in &self.sigmas {
            if !(*s >= 0.0) || !s.is_finite() {
                return Err(Error::config(format!("sigma for {name} must be finite and >= 0")));
            }
        }
        Ok(())
    }

    /// Same allocation with every sigma set to zero.
    pub fn zeroed(&self) -> Self {
        Self {
            scale: 0.0,
            ..self.clone()
        }
    }

    pub fn effective_sigma(&self, name: &str) -> f64 {
        self.sigmas.get(name).copied().unwrap_or(0.0) * self.scale
    }
}

/// Draws one mismatched parameter set.
///
/// Each `(seed, run_index)` pair selects its own ChaCha stream, so runs can
/// be sampled in any order or in parallel and still reproduce bit for bit.
pub fn sample_mismatch(nominal: &ParamMap, spec: &MismatchSpec, run_index: u64) -> Result<ParamMap> {
    spec.validate()?;
    if let Some(unknown) = spec.sigmas.keys().find(|k| !nominal.contains_key(*k)) {
        return Err(Error::config(format!("mismatch sigma for unknown parameter '{unknown}'")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(run_index);

    let mut out = nominal.clone();
    for (name, sigma) in &spec.sigmas {
        let z: f64 = StandardNormal.sample(&mut rng);
        let s = sigma * spec.scale;
        if s > 0.0 {
            let value = out.get_mut(name).expect("checked above");
            *value *= match spec.distribution {
                MismatchDistribution::Lognormal => (s * z).exp(),
            };
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn table_tau_values_without_leak() {
        let c = PhysicalConstants::default();
        let off = LeakModel::disabled();
        let t100 = effective_tau(821e-15, 100e-15, &off, &c).unwrap();
        let t1 = effective_tau(821e-15, 1e-15, &off, &c).unwrap();
        assert!(rel(t100, 0.274) < 2e-3, "{t100}");
        assert!(rel(t1, 27.37) < 1e-3, "{t1}");
    }

    #[test]
    fn leak_caps_slow_time_constant() {
        // 821e-15 * 0.025 / (0.75 * 4.6e-15) by hand
        let t = effective_tau(821e-15, 1e-15, &LeakModel::default(), &PhysicalConstants::default()).unwrap();
        assert!(rel(t, 5.949_275) < 1e-5, "{t}");
        assert!(rel(t, 5.81) < 0.10);
    }

    #[test]
    fn rejects_non_positive_inputs() {
        let c = PhysicalConstants::default();
        let l = LeakModel::default();
        assert!(matches!(effective_tau(0.0, 1e-15, &l, &c), Err(Error::Domain(_))));
        assert!(matches!(effective_tau(1e-12, -1e-15, &l, &c), Err(Error::Domain(_))));
        assert!(matches!(effective_tau(1e-12, 0.0, &l, &c), Err(Error::Domain(_))));
    }

    #[test]
    fn saturation_ceiling() {
        let c = PhysicalConstants::default();
        let l = LeakModel::default();
        let ceiling = c.ideal_tau(821e-15, l.total());
        let t = effective_tau(821e-15, 1e-22, &l, &c).unwrap();
        assert!(t < ceiling);
        assert!(rel(t, ceiling) < 1e-6);
    }

    fn nominal() -> ParamMap {
        [("I_leak", 1e-12), ("I_thr", 1e-10), ("I_ref", 1e-10)]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect()
    }

    #[test]
    fn zero_sigma_is_identity() {
        let mut spec = MismatchSpec::default();
        spec.sigmas.insert("I_leak".into(), 0.0);
        spec.sigmas.insert("I_thr".into(), 0.3);
        spec.scale = 0.0;
        for run in [0, 1, 99] {
            assert_eq!(sample_mismatch(&nominal(), &spec, run).unwrap(), nominal());
        }
    }

    #[test]
    fn unknown_parameter_is_config_error() {
        let mut spec = MismatchSpec::default();
        spec.sigmas.insert("I_bogus".into(), 0.1);
        let err = sample_mismatch(&nominal(), &spec, 0).unwrap_err();
        assert!(err.is_config());
    }

    #[test]
    fn same_seed_and_run_is_bit_identical() {
        let mut spec = MismatchSpec::default();
        spec.sigmas.insert("I_thr".into(), 0.1);
        spec.seed = 42;
        let a = sample_mismatch(&nominal(), &spec, 17).unwrap();
        let b = sample_mismatch(&nominal(), &spec, 17).unwrap();
        let c = sample_mismatch(&nominal(), &spec, 18).unwrap();
        assert_eq!(a["I_thr"].to_bits(), b["I_thr"].to_bits());
        assert_ne!(a["I_thr"], c["I_thr"]);
        // untouched parameters pass through
        assert_eq!(a["I_leak"], 1e-12);
    }

    #[test]
    fn log_factor_is_centred() {
        let mut spec = MismatchSpec::default();
        spec.sigmas.insert("I_thr".into(), 0.05);
        spec.seed = 3;
        let n = 10_000;
        let logs: Vec<f64> = (0..n)
            .map(|i| (sample_mismatch(&nominal(), &spec, i).unwrap()["I_thr"] / 1e-10).ln())
            .collect();
        let mean = logs.iter().sum::<f64>() / n as f64;
        let var = logs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        let se = (var / n as f64).sqrt();
        assert!(mean.abs() < 3.0 * se, "mean {mean} se {se}");
        assert!(rel(var.sqrt(), 0.05) < 0.03);
    }
}
