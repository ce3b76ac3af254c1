//! Firing rate versus constant input current.

use rayon::prelude::*;
use serde::Serialize;

use super::stats::{linear_regression, LinearFit};
use crate::device::PhysicalConstants;
use crate::engine::{run, EngineConfig, Network, StimulusProgram};
use crate::error::{Error, Result};
use crate::neuron::AdexNeuronParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FiPoint {
    pub i_in: f64,
    pub rate: f64,
}

/// Neuron bias swept across a family of F-I curves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FiBias {
    IRef,
    GainRatio,
    IThr,
}

impl FiBias {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "I_ref" => Ok(FiBias::IRef),
            "gain_ratio" | "gain_ratio_leak" => Ok(FiBias::GainRatio),
            "I_thr" => Ok(FiBias::IThr),
            other => Err(Error::config(format!(
                "unknown sweep bias '{other}' (expected I_ref, gain_ratio or I_thr)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            FiBias::IRef => "I_ref",
            FiBias::GainRatio => "gain_ratio",
            FiBias::IThr => "I_thr",
        }
    }

    pub fn apply(&self, params: &AdexNeuronParams, value: f64) -> AdexNeuronParams {
        let mut p = *params;
        match self {
            FiBias::IRef => p.i_ref = value,
            FiBias::GainRatio => p.gain_ratio_leak = value,
            FiBias::IThr => p.i_thr = value,
        }
        p
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiCurve {
    /// Swept bias and its value, if this curve is part of a family.
    pub bias: Option<(FiBias, f64)>,
    pub points: Vec<FiPoint>,
}

impl FiCurve {
    pub fn rates(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.rate).collect()
    }

    /// Non-decreasing rate over the whole grid.
    pub fn is_monotone(&self) -> bool {
        self.points.windows(2).all(|w| w[1].rate >= w[0].rate)
    }

    pub fn max_rate(&self) -> f64 {
        self.points.iter().map(|p| p.rate).fold(0.0, f64::max)
    }

    /// Regression of rate on input current over points with
    /// `lo <= I_in <= hi`.
    pub fn linear_fit(&self, lo: f64, hi: f64) -> Result<LinearFit> {
        let (xs, ys): (Vec<f64>, Vec<f64>) = self
            .points
            .iter()
            .filter(|p| p.i_in >= lo && p.i_in <= hi)
            .map(|p| (p.i_in, p.rate))
            .unzip();
        linear_regression(&xs, &ys)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiSetup {
    pub neuron: AdexNeuronParams,
    pub consts: PhysicalConstants,
    /// Simulated time per grid point.
    pub duration: f64,
    /// Leading fraction of each run excluded from the rate.
    pub warmup_fraction: f64,
    pub engine: EngineConfig,
}

impl Default for FiSetup {
    fn default() -> Self {
        Self {
            neuron: AdexNeuronParams::default(),
            consts: PhysicalConstants::default(),
            duration: 1.0,
            warmup_fraction: 0.1,
            engine: EngineConfig {
                sample_interval: None,
                ..Default::default()
            },
        }
    }
}

impl FiSetup {
    pub fn with_neuron(&self, neuron: AdexNeuronParams) -> Self {
        Self {
            neuron,
            ..self.clone()
        }
    }
}

/// Spike count after the warm-up divided by the measurement window.
pub fn fi_point(setup: &FiSetup, i_in: f64) -> Result<f64> {
    if !(setup.warmup_fraction >= 0.0 && setup.warmup_fraction < 1.0) {
        return Err(Error::config("warmup_fraction must lie in [0, 1)"));
    }
    let net = Network::single_neuron(setup.neuron, setup.consts);
    let stim = StimulusProgram::new().with(StimulusProgram::dc(0, i_in, 0.0, setup.duration));
    let cfg = EngineConfig {
        duration: setup.duration,
        sample_interval: None,
        ..setup.engine.clone()
    };
    let out = run(&net, &stim, &cfg)?;
    let t0 = setup.warmup_fraction * setup.duration;
    let count = out.spikes.spikes.iter().filter(|&&(_, t)| t >= t0).count();
    Ok(count as f64 / (setup.duration - t0))
}

/// F-I curve over an increasing grid. Points run in parallel, results
/// keep grid order.
pub fn fi_sweep(setup: &FiSetup, grid: &[f64]) -> Result<FiCurve> {
    if grid.is_empty() {
        return Err(Error::config("F-I grid is empty"));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::config("F-I grid must be strictly increasing"));
    }
    let points = grid
        .par_iter()
        .map(|&i_in| Ok(FiPoint { i_in, rate: fi_point(setup, i_in)? }))
        .collect::<Result<Vec<_>>>()?;
    Ok(FiCurve { bias: None, points })
}

/// One F-I curve per bias value.
pub fn sweep_bias(setup: &FiSetup, bias: FiBias, values: &[f64], grid: &[f64]) -> Result<Vec<FiCurve>> {
    values
        .iter()
        .map(|&v| {
            let s = setup.with_neuron(bias.apply(&setup.neuron, v));
            s.neuron.validate()?;
            let mut c = fi_sweep(&s, grid)?;
            c.bias = Some((bias, v));
            Ok(c)
        })
        .collect()
}
