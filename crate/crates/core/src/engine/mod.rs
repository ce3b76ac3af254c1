//! Hybrid event-driven simulator.
//!
//! Time advances between discrete events (pulse edges, handshake
//! transitions, stimulus boundaries, refractory and pulse-extender expiry,
//! trace samples). Between events every synapse has constant drive and is
//! advanced in closed form; neurons are integrated with RK4 in steps of at
//! most `dt_max`, reading their synaptic input from the closed-form synapse
//! solution at each stage time. A threshold crossing inside a step is
//! localized by bisection and the whole network is re-advanced to it.

mod crossing;
mod network;
mod stimulus;
mod trace;

pub use crossing::locate_crossing;
pub use network::{Network, SynapseSite};
pub use stimulus::{StimulusItem, StimulusProgram, TrainKind};
pub use trace::{EventLog, LogRecord, Signal, SpikeRecord, TraceSet};

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::Serialize;

use crate::aer::{deliver_event, hs_step, AerEvent, HandshakePhase, HandshakeSignal};
use crate::error::{Error, Result};
use crate::neuron::{apply_reset, NeuronDynamics, NeuronState};
use crate::synapse::{SynapseChannel, SynapseState};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EngineConfig {
    /// Largest RK4 step for neuron integration [s].
    pub dt_max: f64,
    /// Width of the final bisection bracket for threshold crossings [s].
    pub crossing_tolerance: f64,
    /// Trace sampling period; `None` records no traces.
    pub sample_interval: Option<f64>,
    pub duration: f64,
    pub seed: u64,
    /// Extra times at which steps are split without any state change.
    pub breakpoints: Vec<f64>,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            dt_max: 1e-5,
            crossing_tolerance: 1e-9,
            sample_interval: Some(1e-3),
            duration: 1.0,
            seed: 0,
            breakpoints: Vec::new(),
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt_max > 0.0) {
            return Err(Error::config("dt_max must be > 0"));
        }
        if !(self.crossing_tolerance > 0.0 && self.crossing_tolerance < self.dt_max) {
            return Err(Error::config("crossing_tolerance must lie in (0, dt_max)"));
        }
        if !(self.duration > 0.0) || !self.duration.is_finite() {
            return Err(Error::config("duration must be > 0"));
        }
        if let Some(dt) = self.sample_interval {
            if !(dt > 0.0) {
                return Err(Error::config("sample_interval must be > 0"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct RunOutput {
    pub traces: TraceSet,
    pub spikes: SpikeRecord,
    pub log: EventLog,
    /// Acknowledged address events in acknowledge order.
    pub aer_events: Vec<AerEvent>,
    /// Upward threshold crossings per neuron, including suppressed ones.
    pub crossings: Vec<usize>,
    /// Crossings that arrived while the handshake was busy.
    pub suppressed: Vec<usize>,
    /// Handshake phases visited per neuron, starting from `Idle`.
    pub phase_history: Vec<Vec<HandshakePhase>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum EventKind {
    PulseOn { synapse: usize, pulse: usize, i_w: f64 },
    PulseOff { synapse: usize, pulse: usize },
    CurrentEdge { neuron: usize },
    AckRise { neuron: usize },
    AckFall { neuron: usize },
    /// Refractory or pulse-extender expiry; only splits the step.
    Boundary,
}

#[derive(Debug, Clone, Copy)]
struct Scheduled {
    time: f64,
    seq: u64,
    kind: EventKind,
}

impl PartialEq for Scheduled {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Scheduled {}
impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Scheduled {
    // reversed: BinaryHeap is a max-heap and we want the earliest event
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

struct Queue {
    heap: BinaryHeap<Scheduled>,
    seq: u64,
}

impl Queue {
    fn push(&mut self, time: f64, kind: EventKind) {
        self.heap.push(Scheduled {
            time,
            seq: self.seq,
            kind,
        });
        self.seq += 1;
    }

    fn next_time(&self) -> f64 {
        self.heap.peek().map_or(f64::INFINITY, |e| e.time)
    }
}

/// Single-step RK4 of one neuron from `(i_mem, i_ahp)` over `h`, with the
/// input current given as a function of the offset from the step start.
#[inline]
fn rk4_neuron(
    dyn_: &NeuronDynamics,
    i_mem: f64,
    i_ahp: f64,
    h: f64,
    clamped: bool,
    pex: bool,
    input: impl Fn(f64) -> f64,
) -> (f64, f64) {
    let rates = |m: f64, a: f64, s: f64| {
        let (dm, da) = dyn_.rates(m, a, input(s), pex);
        (if clamped { 0.0 } else { dm }, da)
    };
    let (k1m, k1a) = rates(i_mem, i_ahp, 0.0);
    let (k2m, k2a) = rates(i_mem + 0.5 * h * k1m, i_ahp + 0.5 * h * k1a, 0.5 * h);
    let (k3m, k3a) = rates(i_mem + 0.5 * h * k2m, i_ahp + 0.5 * h * k2a, 0.5 * h);
    let (k4m, k4a) = rates(i_mem + h * k3m, i_ahp + h * k3a, h);
    let m = i_mem + h / 6.0 * (k1m + 2.0 * k2m + 2.0 * k3m + k4m);
    let a = i_ahp + h / 6.0 * (k1a + 2.0 * k2a + 2.0 * k3a + k4a);
    (m.max(0.0), a.max(0.0))
}

struct Sim<'a> {
    net: &'a Network,
    cfg: &'a EngineConfig,
    channels: Vec<SynapseChannel>,
    dynamics: Vec<NeuronDynamics>,
    /// Afferent synapse ids per neuron.
    afferents: Vec<Vec<usize>>,
    /// Current stimulus items per neuron: (amplitude, start, stop).
    dc_items: Vec<Vec<(f64, f64, f64)>>,
    dc: Vec<f64>,
    syn: Vec<SynapseState>,
    /// Active pulses per synapse: (pulse id, i_w, end).
    active_pulses: Vec<Vec<(usize, f64, f64)>>,
    neurons: Vec<NeuronState>,
    pending_req: Vec<f64>,
    queue: Queue,
    next_pulse_id: usize,
    out: RunOutput,
}

impl<'a> Sim<'a> {
    fn new(net: &'a Network, stimulus: &StimulusProgram, cfg: &'a EngineConfig) -> Result<Self> {
        net.validate()?;
        cfg.validate()?;
        stimulus.validate(net.neurons.len(), net.synapses.len())?;

        let channels = net
            .synapses
            .iter()
            .map(|s| SynapseChannel::new(&s.params, &net.leak, &net.consts))
            .collect::<Result<Vec<_>>>()?;
        let dynamics = net
            .neurons
            .iter()
            .map(|n| NeuronDynamics::new(n, &net.consts))
            .collect::<Result<Vec<_>>>()?;
        let n_neurons = net.neurons.len();
        let mut afferents = vec![Vec::new(); n_neurons];
        for (i, s) in net.synapses.iter().enumerate() {
            if let Some(t) = s.target {
                afferents[t].push(i);
            }
        }

        let mut sim = Sim {
            net,
            cfg,
            channels,
            dynamics,
            afferents,
            dc_items: vec![Vec::new(); n_neurons],
            dc: vec![0.0; n_neurons],
            syn: vec![SynapseState::default(); net.synapses.len()],
            active_pulses: vec![Vec::new(); net.synapses.len()],
            neurons: vec![NeuronState::default(); n_neurons],
            pending_req: vec![f64::NAN; n_neurons],
            queue: Queue {
                heap: BinaryHeap::new(),
                seq: 0,
            },
            next_pulse_id: 0,
            out: RunOutput {
                crossings: vec![0; n_neurons],
                suppressed: vec![0; n_neurons],
                phase_history: vec![vec![HandshakePhase::Idle]; n_neurons],
                ..Default::default()
            },
        };

        let mut train_ordinal = vec![0u64; net.synapses.len()];
        for item in &stimulus.items {
            match *item {
                StimulusItem::SpikeTrain { synapse, .. } => {
                    let key = ((synapse as u64) << 32) | train_ordinal[synapse];
                    train_ordinal[synapse] += 1;
                    let i_w = net.synapses[synapse].params.i_w;
                    for t in stimulus::train_times(item, cfg.seed, key, cfg.duration) {
                        sim.schedule_pulse(synapse, t, i_w);
                    }
                }
                StimulusItem::Current {
                    neuron,
                    amplitude,
                    start,
                    stop,
                } => {
                    sim.dc_items[neuron].push((amplitude, start, stop));
                    sim.queue.push(start, EventKind::CurrentEdge { neuron });
                    sim.queue.push(stop, EventKind::CurrentEdge { neuron });
                }
            }
        }
        for &b in &cfg.breakpoints {
            if b > 0.0 && b < cfg.duration {
                sim.queue.push(b, EventKind::Boundary);
            }
        }
        Ok(sim)
    }

    fn schedule_pulse(&mut self, synapse: usize, start: f64, i_w: f64) {
        let pulse = self.next_pulse_id;
        self.next_pulse_id += 1;
        self.queue.push(start, EventKind::PulseOn { synapse, pulse, i_w });
        let end = start + self.net.synapses[synapse].params.pulse_width;
        self.queue.push(end, EventKind::PulseOff { synapse, pulse });
    }

    fn refresh_synapse_drive(&mut self, synapse: usize) {
        let pulses = &self.active_pulses[synapse];
        let s = self.syn[synapse];
        self.syn[synapse] = if pulses.is_empty() {
            s.released()
        } else {
            let i_w = pulses.iter().map(|p| p.1).sum();
            let end = pulses.iter().map(|p| p.2).fold(f64::NEG_INFINITY, f64::max);
            s.pulsed(i_w, end)
        };
    }

    fn transition(&mut self, neuron: usize, signal: HandshakeSignal, t: f64) -> Result<()> {
        let hs = hs_step(self.neurons[neuron].handshake, signal, t)?;
        self.neurons[neuron].handshake = hs;
        self.out.phase_history[neuron].push(hs.phase);
        self.out.log.push(t, signal.as_str(), neuron, format!("{:?}", hs.phase));
        Ok(())
    }

    fn process(&mut self, ev: Scheduled) -> Result<()> {
        let t = ev.time;
        match ev.kind {
            EventKind::PulseOn { synapse, pulse, i_w } => {
                let end = t + self.net.synapses[synapse].params.pulse_width;
                self.active_pulses[synapse].push((pulse, i_w, end));
                self.refresh_synapse_drive(synapse);
            }
            EventKind::PulseOff { synapse, pulse } => {
                self.active_pulses[synapse].retain(|p| p.0 != pulse);
                self.refresh_synapse_drive(synapse);
            }
            EventKind::CurrentEdge { neuron } => {
                self.dc[neuron] = self.dc_items[neuron]
                    .iter()
                    .filter(|(_, start, stop)| *start <= t && t < *stop)
                    .map(|(a, _, _)| a)
                    .sum();
            }
            EventKind::AckRise { neuron } => {
                self.transition(neuron, HandshakeSignal::AckRise, t)?;
                let params = &self.net.neurons[neuron];
                let reset = apply_reset(&self.neurons[neuron], t, params)?;
                self.neurons[neuron] = reset;
                self.out
                    .log
                    .push(t, "reset", neuron, format!("refractory_until={:.9e}", reset.refractory_until));
                self.queue.push(reset.refractory_until, EventKind::Boundary);
                self.queue.push(reset.pex_until, EventKind::Boundary);

                let event = AerEvent {
                    source_id: neuron,
                    t_req: self.pending_req[neuron],
                    t_ack: t,
                };
                self.out.aer_events.push(event);
                let synapses = &self.net.synapses;
                let deliveries = deliver_event(&event, &self.net.connectivity, |s| synapses[s].params.i_w)?;
                for d in deliveries {
                    self.out
                        .log
                        .push(t, "deliver", d.synapse, format!("src={} i_w={:.9e}", neuron, d.i_w));
                    self.schedule_pulse(d.synapse, d.start, d.i_w);
                }

                self.transition(neuron, HandshakeSignal::ReqFall, t)?;
                let release = t + self.net.receiver.ack_release_delay;
                self.queue.push(release, EventKind::AckFall { neuron });
            }
            EventKind::AckFall { neuron } => {
                self.transition(neuron, HandshakeSignal::AckFall, t)?;
            }
            EventKind::Boundary => {}
        }
        Ok(())
    }

    fn neuron_input(&self, neuron: usize, s: f64) -> f64 {
        self.dc[neuron]
            + self.afferents[neuron]
                .iter()
                .map(|&k| self.channels[k].value_after(&self.syn[k], s))
                .sum::<f64>()
    }

    fn step_neuron(&self, neuron: usize, t: f64, h: f64) -> (f64, f64) {
        let st = &self.neurons[neuron];
        rk4_neuron(
            &self.dynamics[neuron],
            st.i_mem,
            st.i_ahp,
            h,
            st.is_refractory(t),
            st.pex_active(t),
            |s| self.neuron_input(neuron, s),
        )
    }

    fn commit(&mut self, t: f64, h: f64, neuron_states: &[(f64, f64)]) {
        for (k, s) in self.syn.iter_mut().enumerate() {
            s.i_syn = self.channels[k].value_after(s, h);
        }
        for (j, &(m, a)) in neuron_states.iter().enumerate() {
            let st = &mut self.neurons[j];
            if st.is_refractory(t) {
                st.i_mem = self.net.neurons[j].i_reset;
            } else {
                st.i_mem = m;
            }
            st.i_ahp = a;
        }
    }

    /// Advances from `t` toward `t_end`. Returns the time reached and the
    /// neurons whose threshold crossing stopped the advance.
    fn advance(&mut self, mut t: f64, t_end: f64) -> Result<(f64, Vec<usize>)> {
        if self.neurons.is_empty() {
            let h = t_end - t;
            self.commit(t, h, &[]);
            return Ok((t_end, Vec::new()));
        }
        let mut states = Vec::with_capacity(self.neurons.len());
        while t < t_end {
            let h = (t_end - t).min(self.cfg.dt_max);
            let h = if t + h >= t_end { t_end - t } else { h };
            states.clear();
            let mut first: Option<f64> = None;
            let mut crossers: Vec<(usize, f64)> = Vec::new();
            for j in 0..self.neurons.len() {
                let next = self.step_neuron(j, t, h);
                states.push(next);
                let st = &self.neurons[j];
                let thr = self.net.neurons[j].i_thr;
                if !st.is_refractory(t) && st.i_mem < thr && next.0 >= thr {
                    let s_star = locate_crossing(
                        |s| if s == 0.0 { st.i_mem } else { self.step_neuron(j, t, s).0 },
                        0.0,
                        h,
                        thr,
                        self.cfg.crossing_tolerance,
                    )
                    .map_err(|e| Error::Internal(format!("t={t:e}: {e}")))?;
                    crossers.push((j, s_star));
                    first = Some(first.map_or(s_star, |f: f64| f.min(s_star)));
                }
            }
            match first {
                None => {
                    self.commit(t, h, &states);
                    t = if h == t_end - t { t_end } else { t + h };
                }
                Some(s_star) => {
                    for (j, st) in states.iter_mut().enumerate() {
                        *st = self.step_neuron(j, t, s_star);
                    }
                    let hit: Vec<usize> = crossers
                        .iter()
                        .filter(|&&(_, s)| s == s_star)
                        .map(|&(j, _)| j)
                        .collect();
                    for &j in &hit {
                        let thr = self.net.neurons[j].i_thr;
                        states[j].0 = states[j].0.max(thr);
                    }
                    self.commit(t, s_star, &states);
                    return Ok((t + s_star, hit));
                }
            }
        }
        Ok((t_end, Vec::new()))
    }

    fn on_crossing(&mut self, neuron: usize, t: f64) -> Result<()> {
        self.out.crossings[neuron] += 1;
        if self.neurons[neuron].handshake.phase != HandshakePhase::Idle {
            self.out.suppressed[neuron] += 1;
            self.out.log.push(
                t,
                "suppressed",
                neuron,
                format!("{:?}", self.neurons[neuron].handshake.phase),
            );
            return Ok(());
        }
        self.transition(neuron, HandshakeSignal::ReqRise, t)?;
        self.out.spikes.spikes.push((neuron, t));
        self.pending_req[neuron] = t;
        self.queue
            .push(t + self.net.receiver.ack_delay, EventKind::AckRise { neuron });
        Ok(())
    }

    fn sample(&mut self, t: f64) {
        let tr = &mut self.out.traces;
        tr.times.push(t);
        let mut k = 0;
        for s in &self.syn {
            tr.signals[k].values.push(s.i_syn);
            k += 1;
        }
        for n in &self.neurons {
            tr.signals[k].values.push(n.i_mem);
            tr.signals[k + 1].values.push(n.i_ahp);
            k += 2;
        }
    }

    fn run(mut self) -> Result<RunOutput> {
        let duration = self.cfg.duration;
        let sample_dt = self.cfg.sample_interval;
        if sample_dt.is_some() {
            let mut signals: Vec<Signal> = (0..self.syn.len())
                .map(|i| Signal {
                    id: format!("syn{i}"),
                    values: Vec::new(),
                })
                .collect();
            for j in 0..self.neurons.len() {
                for prefix in ["mem", "ahp"] {
                    signals.push(Signal {
                        id: format!("{prefix}{j}"),
                        values: Vec::new(),
                    });
                }
            }
            self.out.traces.signals = signals;
        }
        let sample_time = |k: u64| sample_dt.map_or(f64::INFINITY, |dt| k as f64 * dt);
        let mut next_sample = 0u64;

        let mut t = 0.0;
        loop {
            while self.queue.next_time() <= t {
                let ev = self.queue.heap.pop().expect("peeked");
                let kind = ev.kind;
                self.process(ev).map_err(|e| match e {
                    Error::Protocol { .. } => e,
                    other => Error::Internal(format!("t={t:e} while processing {kind:?}: {other}")),
                })?;
            }
            if sample_time(next_sample) <= t {
                self.sample(t);
                next_sample += 1;
            }
            if t >= duration {
                break;
            }
            let target = self.queue.next_time().min(sample_time(next_sample)).min(duration);
            let (reached, hit) = self.advance(t, target)?;
            t = reached;
            for j in hit {
                self.on_crossing(j, t)?;
            }
        }
        Ok(self.out)
    }
}

/// Runs one deterministic simulation.
pub fn run(network: &Network, stimulus: &StimulusProgram, cfg: &EngineConfig) -> Result<RunOutput> {
    Sim::new(network, stimulus, cfg)?.run()
}
