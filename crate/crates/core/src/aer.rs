//! Address-event output: four-phase Req/Ack handshake and fan-out routing.
//!
//! At rest Req and Ack are both low. A threshold crossing raises Req (only if
//! Ack is low), the receiver answers by raising Ack, the neuron resets and
//! drops Req, and the receiver finally drops Ack to close the cycle.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize)]
pub enum HandshakePhase {
    #[default]
    Idle,
    ReqHigh,
    AckHigh,
    ReqLow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum HandshakeSignal {
    ReqRise,
    AckRise,
    ReqFall,
    AckFall,
}

impl HandshakeSignal {
    pub const ALL: [HandshakeSignal; 4] = [
        HandshakeSignal::ReqRise,
        HandshakeSignal::AckRise,
        HandshakeSignal::ReqFall,
        HandshakeSignal::AckFall,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            HandshakeSignal::ReqRise => "req_rise",
            HandshakeSignal::AckRise => "ack_rise",
            HandshakeSignal::ReqFall => "req_fall",
            HandshakeSignal::AckFall => "ack_fall",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HandshakeState {
    pub phase: HandshakePhase,
    pub last_transition: f64,
}

impl Default for HandshakeState {
    fn default() -> Self {
        Self {
            phase: HandshakePhase::Idle,
            last_transition: 0.0,
        }
    }
}

/// Advances the handshake FSM. Any signal other than the single legal one
/// for the current phase is a protocol violation.
pub fn hs_step(state: HandshakeState, signal: HandshakeSignal, t: f64) -> Result<HandshakeState> {
    use HandshakePhase::*;
    use HandshakeSignal::*;
    let next = match (state.phase, signal) {
        (Idle, ReqRise) => ReqHigh,
        (ReqHigh, AckRise) => AckHigh,
        (AckHigh, ReqFall) => ReqLow,
        (ReqLow, AckFall) => Idle,
        (phase, signal) => {
            return Err(Error::Protocol {
                phase,
                signal,
                time: t,
            })
        }
    };
    Ok(HandshakeState {
        phase: next,
        last_transition: t,
    })
}

/// One acknowledged spike.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AerEvent {
    pub source_id: usize,
    pub t_req: f64,
    pub t_ack: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Edge {
    pub synapse: usize,
    /// Multiplier on the target synapse's `I_w`.
    pub weight: f64,
}

/// Fan-out table from neuron id to target synapses.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct ConnectivityTable {
    edges: BTreeMap<usize, Vec<Edge>>,
}

impl ConnectivityTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a source with no fan-out.
    pub fn add_source(&mut self, source: usize) {
        self.edges.entry(source).or_default();
    }

    pub fn connect(&mut self, source: usize, synapse: usize, weight: f64) -> Result<()> {
        if !(weight > 0.0) || !weight.is_finite() {
            return Err(Error::config(format!(
                "edge {source} -> {synapse}: weight must be > 0, got {weight}"
            )));
        }
        self.edges.entry(source).or_default().push(Edge { synapse, weight });
        Ok(())
    }

    pub fn targets(&self, source: usize) -> Option<&[Edge]> {
        self.edges.get(&source).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &Edge)> {
        self.edges.iter().flat_map(|(&s, es)| es.iter().map(move |e| (s, e)))
    }

    /// Checks every source and target id against the network sizes.
    pub fn validate(&self, n_neurons: usize, n_synapses: usize) -> Result<()> {
        for (source, edge) in self.iter() {
            if source >= n_neurons {
                return Err(Error::config(format!("edge source {source} is not a neuron")));
            }
            if edge.synapse >= n_synapses {
                return Err(Error::config(format!("edge target {} is not a synapse", edge.synapse)));
            }
        }
        for &source in self.edges.keys() {
            if source >= n_neurons {
                return Err(Error::config(format!("source {source} is not a neuron")));
            }
        }
        Ok(())
    }
}

/// Ideal AER consumer with fixed response latencies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReceiverModel {
    /// Req rise to Ack rise.
    pub ack_delay: f64,
    /// Req fall to Ack fall.
    pub ack_release_delay: f64,
}

impl Default for ReceiverModel {
    fn default() -> Self {
        Self {
            ack_delay: 10e-9,
            ack_release_delay: 10e-9,
        }
    }
}

impl ReceiverModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.ack_delay >= 0.0) || !(self.ack_release_delay >= 0.0) {
            return Err(Error::config("receiver delays must be >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PulseDelivery {
    pub synapse: usize,
    pub start: f64,
    pub i_w: f64,
}

/// Expands an acknowledged event into one input pulse per fan-out edge.
/// `base_i_w` maps a synapse id to its configured weight current.
pub fn deliver_event(
    event: &AerEvent,
    table: &ConnectivityTable,
    base_i_w: impl Fn(usize) -> f64,
) -> Result<Vec<PulseDelivery>> {
    let targets = table.targets(event.source_id).ok_or(Error::Routing(event.source_id))?;
    Ok(targets
        .iter()
        .map(|e| PulseDelivery {
            synapse: e.synapse,
            start: event.t_ack,
            i_w: base_i_w(e.synapse) * e.weight,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use HandshakePhase::*;
    use HandshakeSignal::*;

    #[test]
    fn protocol_order() {
        let s = HandshakeState::default();
        let s = hs_step(s, ReqRise, 1.0).unwrap();
        assert_eq!(s.phase, ReqHigh);
        assert_eq!(s.last_transition, 1.0);
        let s = hs_step(s, AckRise, 2.0).unwrap();
        let s = hs_step(s, ReqFall, 3.0).unwrap();
        let s = hs_step(s, AckFall, 4.0).unwrap();
        assert_eq!(s.phase, Idle);
    }

    #[test]
    fn illegal_transition_reports_phase_and_signal() {
        let err = hs_step(HandshakeState::default(), AckRise, 0.5).unwrap_err();
        assert_eq!(
            err,
            Error::Protocol {
                phase: Idle,
                signal: AckRise,
                time: 0.5
            }
        );
    }

    #[test]
    fn empty_fanout() {
        let mut t = ConnectivityTable::new();
        t.add_source(0);
        let ev = AerEvent {
            source_id: 0,
            t_req: 0.0,
            t_ack: 1e-8,
        };
        assert!(deliver_event(&ev, &t, |_| 1.0).unwrap().is_empty());
        let ev = AerEvent { source_id: 3, ..ev };
        assert_eq!(deliver_event(&ev, &t, |_| 1.0).unwrap_err(), Error::Routing(3));
    }

    #[test]
    fn weights_scale_i_w() {
        let mut t = ConnectivityTable::new();
        t.connect(0, 0, 1.0).unwrap();
        t.connect(0, 1, 2.0).unwrap();
        t.connect(0, 2, 0.5).unwrap();
        let ev = AerEvent {
            source_id: 0,
            t_req: 0.0,
            t_ack: 1e-8,
        };
        let d = deliver_event(&ev, &t, |_| 100e-9).unwrap();
        let ws: Vec<f64> = d.iter().map(|p| p.i_w).collect();
        assert_eq!(ws, vec![100e-9, 200e-9, 50e-9]);
        assert!(d.iter().all(|p| p.start == 1e-8));
    }

    #[test]
    fn self_loop_allowed_and_bad_weight_rejected() {
        let mut t = ConnectivityTable::new();
        t.connect(0, 0, 1.0).unwrap();
        t.validate(1, 1).unwrap();
        assert!(t.connect(0, 0, 0.0).is_err());
        assert!(t.validate(1, 0).is_err());
    }
}
