//! Spike-frequency adaptation under a constant input step.

use serde::Serialize;

use crate::device::PhysicalConstants;
use crate::engine::{run, EngineConfig, Network, RunOutput, StimulusProgram};
use crate::error::{Error, Result};
use crate::neuron::AdexNeuronParams;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdaptationSummary {
    pub isis: Vec<f64>,
    pub first_isi: f64,
    /// Mean of the last quarter of the inter-spike intervals.
    pub steady_isi: f64,
    pub steady_rate: f64,
    /// Largest sampled `I_ahp` over the last quarter of the run.
    pub ahp_steady_peak: f64,
    /// `gain_ratio_ahp · I_a`.
    pub ahp_bound: f64,
}

/// Drives one neuron with a constant current for `duration` seconds.
pub fn adaptation_profile(
    neuron: &AdexNeuronParams,
    consts: &PhysicalConstants,
    i_in: f64,
    engine: &EngineConfig,
) -> Result<(AdaptationSummary, RunOutput)> {
    let net = Network::single_neuron(*neuron, *consts);
    let stim = StimulusProgram::new().with(StimulusProgram::dc(0, i_in, 0.0, engine.duration));
    let out = run(&net, &stim, engine)?;
    let times = out.spikes.times_of(0);
    if times.len() < 5 {
        return Err(Error::Fit(format!(
            "adaptation needs at least 5 spikes, got {}",
            times.len()
        )));
    }
    let isis: Vec<f64> = times.windows(2).map(|w| w[1] - w[0]).collect();
    let tail = &isis[isis.len() - (isis.len() / 4).max(1)..];
    let steady_isi = tail.iter().sum::<f64>() / tail.len() as f64;

    let t_tail = 0.75 * engine.duration;
    let ahp_steady_peak = out
        .traces
        .series("ahp0")
        .unwrap_or_default()
        .into_iter()
        .filter(|&(t, _)| t >= t_tail)
        .map(|(_, v)| v)
        .fold(0.0, f64::max);

    Ok((
        AdaptationSummary {
            first_isi: isis[0],
            steady_isi,
            steady_rate: 1.0 / steady_isi,
            ahp_steady_peak,
            ahp_bound: neuron.gain_ratio_ahp * neuron.i_a,
            isis,
        },
        out,
    ))
}
