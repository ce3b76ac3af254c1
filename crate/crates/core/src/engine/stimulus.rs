use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TrainKind {
    Regular,
    Poisson,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum StimulusItem {
    /// Input pulses to a synapse on `[start, stop)`.
    SpikeTrain {
        synapse: usize,
        rate: f64,
        start: f64,
        stop: f64,
        kind: TrainKind,
    },
    /// Current injected into a neuron's input on `[start, stop)`.
    Current {
        neuron: usize,
        amplitude: f64,
        start: f64,
        stop: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct StimulusProgram {
    pub items: Vec<StimulusItem>,
}

impl StimulusProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, item: StimulusItem) -> Self {
        self.items.push(item);
        self
    }

    pub fn regular_train(synapse: usize, rate: f64, start: f64, stop: f64) -> StimulusItem {
        StimulusItem::SpikeTrain {
            synapse,
            rate,
            start,
            stop,
            kind: TrainKind::Regular,
        }
    }

    pub fn dc(neuron: usize, amplitude: f64, start: f64, stop: f64) -> StimulusItem {
        StimulusItem::Current {
            neuron,
            amplitude,
            start,
            stop,
        }
    }

    pub fn validate(&self, n_neurons: usize, n_synapses: usize) -> Result<()> {
        for item in &self.items {
            let (start, stop) = match *item {
                StimulusItem::SpikeTrain {
                    synapse, rate, start, stop, ..
                } => {
                    if synapse >= n_synapses {
                        return Err(Error::config(format!("stimulus targets unknown synapse {synapse}")));
                    }
                    if !(rate >= 0.0) || !rate.is_finite() {
                        return Err(Error::config("stimulus rate must be finite and >= 0"));
                    }
                    (start, stop)
                }
                StimulusItem::Current {
                    neuron,
                    amplitude,
                    start,
                    stop,
                } => {
                    if neuron >= n_neurons {
                        return Err(Error::config(format!("stimulus targets unknown neuron {neuron}")));
                    }
                    if !amplitude.is_finite() {
                        return Err(Error::config("stimulus amplitude must be finite"));
                    }
                    (start, stop)
                }
            };
            if !(start >= 0.0) || !(stop >= start) {
                return Err(Error::config(format!(
                    "stimulus window must satisfy 0 <= start <= stop, got [{start}, {stop}]"
                )));
            }
        }
        Ok(())
    }
}

/// Pulse onset times of one spike train, truncated at `horizon`.
///
/// Poisson trains draw from a ChaCha stream keyed by `(seed, stream_key)`,
/// so each train is reproducible regardless of what else is simulated.
pub(crate) fn train_times(item: &StimulusItem, seed: u64, stream_key: u64, horizon: f64) -> Vec<f64> {
    let StimulusItem::SpikeTrain {
        rate,
        start,
        stop,
        kind,
        ..
    } = *item
    else {
        return Vec::new();
    };
    let stop = stop.min(horizon);
    if rate <= 0.0 || stop <= start {
        return Vec::new();
    }
    match kind {
        TrainKind::Regular => {
            let period = 1.0 / rate;
            (0..)
                .map(|k| start + k as f64 * period)
                .take_while(|&t| t < stop)
                .collect()
        }
        TrainKind::Poisson => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(stream_key);
            let exp = Exp::new(rate).expect("rate > 0");
            let mut out = Vec::new();
            let mut t = start;
            loop {
                t += exp.sample(&mut rng);
                if t >= stop {
                    break;
                }
                out.push(t);
            }
            out
        }
    }
}
