//! Experiment configuration files.
//!
//! The format is line oriented:
//!
//! ```text
//! # comment
//! [synapse]
//! C_syn = 821fF
//! I_tau = 100fA
//!
//! [network]
//! neurons = 2
//! synapses = 2
//! edge = 0 -> 1 : 2.0
//!
//! [stimulus]
//! train = 0 rate=50Hz start=0s stop=1s poisson
//! dc = 1 amp=300pA start=0s stop=1s
//! ```
//!
//! Every key has a fixed dimension and the unit written in the file must
//! agree with it. Keys that are absent keep their defaults, so an empty file
//! is a complete configuration. `edge`, `train` and `dc` may repeat; they
//! accumulate in file order.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use neurosim::aer::{ConnectivityTable, ReceiverModel};
use neurosim::analysis::{
    calibrate_power, default_mismatch_spec, McSetup, PowerModel, TauSweepSetup, NOMINAL_70HZ_I_IN,
};
use neurosim::device::{LeakModel, MismatchSpec, PhysicalConstants};
use neurosim::engine::{EngineConfig, Network, StimulusItem, StimulusProgram, TrainKind};
use neurosim::neuron::{AdexNeuronParams, AdexVoltageParams, NEURON_PARAM_NAMES};
use neurosim::synapse::DpiSynapseParams;
use neurosim::{Error, Result};

use crate::units::{format_quantity, parse_as, Dimension};

pub const SECTIONS: [&str; 10] = [
    "constants", "leak", "synapse", "neuron", "oracle", "network", "stimulus", "engine", "mismatch", "power",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeSpec {
    pub source: usize,
    pub synapse: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSection {
    pub neurons: usize,
    /// Synapse `i` feeds neuron `i`; synapses beyond the neuron count are
    /// recorded but drive nothing.
    pub synapses: usize,
    pub edges: Vec<EdgeSpec>,
    pub receiver: ReceiverModel,
}

impl Default for NetworkSection {
    fn default() -> Self {
        Self {
            neurons: 1,
            synapses: 1,
            edges: Vec::new(),
            receiver: ReceiverModel::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSection {
    pub params: AdexVoltageParams,
    pub i_step: f64,
    pub duration: f64,
    pub dt: f64,
}

impl Default for OracleSection {
    fn default() -> Self {
        Self {
            params: AdexVoltageParams::default(),
            i_step: 1e-9,
            duration: 1.0,
            dt: 1e-5,
        }
    }
}

/// Stimulus program for `simulate` plus the pulse-train protocol used by
/// the time-constant sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct StimulusSection {
    pub program: StimulusProgram,
    pub tau_rate: f64,
    pub tau_duration: f64,
    pub tau_target_peak: Option<f64>,
    pub tau_decay_taus: f64,
    pub tau_samples_per_tau: f64,
}

impl Default for StimulusSection {
    fn default() -> Self {
        let tau = TauSweepSetup::default();
        Self {
            program: StimulusProgram::new()
                .with(StimulusProgram::regular_train(0, 50.0, 0.0, 1.0))
                .with(StimulusProgram::dc(0, 300e-12, 0.0, 1.0)),
            tau_rate: tau.rate,
            tau_duration: tau.stim_duration,
            tau_target_peak: tau.target_peak,
            tau_decay_taus: tau.decay_taus,
            tau_samples_per_tau: tau.samples_per_tau,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EngineSection {
    pub config: EngineConfig,
    /// Fraction of each F-I run discarded before counting spikes.
    pub warmup_fraction: f64,
}

impl Default for EngineSection {
    fn default() -> Self {
        Self {
            config: EngineConfig::default(),
            warmup_fraction: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MismatchSection {
    pub spec: MismatchSpec,
    pub i_in: f64,
    pub duration: f64,
    pub warmup_fraction: f64,
}

impl Default for MismatchSection {
    fn default() -> Self {
        let setup = McSetup::default();
        Self {
            spec: default_mismatch_spec(0),
            i_in: NOMINAL_70HZ_I_IN,
            duration: setup.duration,
            warmup_fraction: setup.warmup_fraction,
        }
    }
}

/// Energy model anchored at 16 pJ per spike at 30 Hz and 1 pJ at 2.1 kHz.
pub fn default_power_model() -> PowerModel {
    calibrate_power(&[(30.0, 16e-12), (2100.0, 1e-12)])
        .expect("distinct anchor frequencies")
        .model
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigDocument {
    pub constants: PhysicalConstants,
    pub leak: LeakModel,
    pub synapse: DpiSynapseParams,
    pub neuron: AdexNeuronParams,
    pub oracle: OracleSection,
    pub network: NetworkSection,
    pub stimulus: StimulusSection,
    pub engine: EngineSection,
    pub mismatch: MismatchSection,
    pub power: PowerModel,
}

impl Default for ConfigDocument {
    fn default() -> Self {
        Self {
            constants: PhysicalConstants::default(),
            leak: LeakModel::default(),
            synapse: DpiSynapseParams::default(),
            neuron: AdexNeuronParams::default(),
            oracle: OracleSection::default(),
            network: NetworkSection::default(),
            stimulus: StimulusSection::default(),
            engine: EngineSection::default(),
            mismatch: MismatchSection::default(),
            power: default_power_model(),
        }
    }
}

enum Slot<'a> {
    Real(&'a mut f64, Dimension),
    /// `auto`/`none` selects `None`.
    Optional(&'a mut Option<f64>, Dimension, &'static str),
    Count(&'a mut usize),
    Seed(&'a mut u64),
    Flag(&'a mut bool),
}

impl Slot<'_> {
    fn set(&mut self, raw: &str) -> std::result::Result<(), String> {
        match self {
            Slot::Real(v, d) => **v = parse_as(raw, *d).map_err(|e| e.to_string())?,
            Slot::Optional(v, d, word) => {
                **v = if raw == *word {
                    None
                } else {
                    Some(parse_as(raw, *d).map_err(|e| e.to_string())?)
                }
            }
            Slot::Count(v) => **v = raw.parse().map_err(|_| format!("expected a non-negative integer, got '{raw}'"))?,
            Slot::Seed(v) => **v = raw.parse().map_err(|_| format!("expected a non-negative integer, got '{raw}'"))?,
            Slot::Flag(v) => {
                **v = match raw {
                    "true" => true,
                    "false" => false,
                    _ => return Err(format!("expected true or false, got '{raw}'")),
                }
            }
        }
        Ok(())
    }

    fn render(&self) -> String {
        match self {
            Slot::Real(v, d) => format_quantity(**v, *d),
            Slot::Optional(v, d, word) => v.map_or_else(|| word.to_string(), |x| format_quantity(x, *d)),
            Slot::Count(v) => v.to_string(),
            Slot::Seed(v) => v.to_string(),
            Slot::Flag(v) => v.to_string(),
        }
    }
}

use Dimension as D;

impl ConfigDocument {
    /// Scalar keys of a section, in canonical order.
    fn slots(&mut self, section: &str) -> Vec<(&'static str, Slot<'_>)> {
        match section {
            "constants" => {
                let c = &mut self.constants;
                vec![
                    ("U_T", Slot::Real(&mut c.u_t, D::Voltage)),
                    ("kappa", Slot::Real(&mut c.kappa, D::Dimensionless)),
                    ("V_dd", Slot::Real(&mut c.v_dd, D::Voltage)),
                ]
            }
            "leak" => {
                let l = &mut self.leak;
                vec![
                    ("enabled", Slot::Flag(&mut l.enabled)),
                    ("cap_leak", Slot::Real(&mut l.cap_leak_baseline, D::Current)),
                    ("transistor_floor", Slot::Real(&mut l.transistor_leak_floor, D::Current)),
                ]
            }
            "synapse" => {
                let s = &mut self.synapse;
                vec![
                    ("C_syn", Slot::Real(&mut s.c_syn, D::Capacitance)),
                    ("I_tau", Slot::Real(&mut s.i_tau, D::Current)),
                    ("I_gain", Slot::Optional(&mut s.i_gain, D::Current, "auto")),
                    ("I_w", Slot::Real(&mut s.i_w, D::Current)),
                    ("pulse_width", Slot::Real(&mut s.pulse_width, D::Time)),
                ]
            }
            "neuron" => {
                let n = &mut self.neuron;
                vec![
                    ("C_mem", Slot::Real(&mut n.c_mem, D::Capacitance)),
                    ("C_ahp", Slot::Real(&mut n.c_ahp, D::Capacitance)),
                    ("I_leak", Slot::Real(&mut n.i_leak, D::Current)),
                    ("gain_ratio_leak", Slot::Real(&mut n.gain_ratio_leak, D::Dimensionless)),
                    ("I_thr", Slot::Real(&mut n.i_thr, D::Current)),
                    ("I_ref", Slot::Real(&mut n.i_ref, D::Current)),
                    ("Q_ref", Slot::Real(&mut n.q_ref, D::Charge)),
                    ("I_a", Slot::Real(&mut n.i_a, D::Current)),
                    ("I_tau_ahp", Slot::Real(&mut n.i_tau_ahp, D::Current)),
                    ("gain_ratio_ahp", Slot::Real(&mut n.gain_ratio_ahp, D::Dimensionless)),
                    ("t_pex", Slot::Real(&mut n.t_pex, D::Time)),
                    ("I_fb0", Slot::Real(&mut n.i_fb0, D::Current)),
                    ("I_norm", Slot::Optional(&mut n.i_norm, D::Current, "auto")),
                    ("I_reset", Slot::Real(&mut n.i_reset, D::Current)),
                    ("fb_ceiling_ratio", Slot::Real(&mut n.fb_ceiling_ratio, D::Dimensionless)),
                ]
            }
            "oracle" => {
                let o = &mut self.oracle;
                let p = &mut o.params;
                vec![
                    ("C", Slot::Real(&mut p.c, D::Capacitance)),
                    ("g_L", Slot::Real(&mut p.g_l, D::Conductance)),
                    ("E_L", Slot::Real(&mut p.e_l, D::Voltage)),
                    ("Delta_T", Slot::Real(&mut p.delta_t, D::Voltage)),
                    ("V_T", Slot::Real(&mut p.v_t, D::Voltage)),
                    ("a", Slot::Real(&mut p.a, D::Conductance)),
                    ("tau_w", Slot::Real(&mut p.tau_w, D::Time)),
                    ("b", Slot::Real(&mut p.b_increment, D::Current)),
                    ("V_reset", Slot::Real(&mut p.v_reset, D::Voltage)),
                    ("V_peak", Slot::Real(&mut p.v_peak, D::Voltage)),
                    ("I_step", Slot::Real(&mut o.i_step, D::Current)),
                    ("duration", Slot::Real(&mut o.duration, D::Time)),
                    ("dt", Slot::Real(&mut o.dt, D::Time)),
                ]
            }
            "network" => {
                let n = &mut self.network;
                vec![
                    ("neurons", Slot::Count(&mut n.neurons)),
                    ("synapses", Slot::Count(&mut n.synapses)),
                    ("ack_delay", Slot::Real(&mut n.receiver.ack_delay, D::Time)),
                    ("ack_release_delay", Slot::Real(&mut n.receiver.ack_release_delay, D::Time)),
                ]
            }
            "stimulus" => {
                let s = &mut self.stimulus;
                vec![
                    ("tau_rate", Slot::Real(&mut s.tau_rate, D::Frequency)),
                    ("tau_duration", Slot::Real(&mut s.tau_duration, D::Time)),
                    ("tau_target_peak", Slot::Optional(&mut s.tau_target_peak, D::Current, "none")),
                    ("tau_decay_taus", Slot::Real(&mut s.tau_decay_taus, D::Dimensionless)),
                    ("tau_samples_per_tau", Slot::Real(&mut s.tau_samples_per_tau, D::Dimensionless)),
                ]
            }
            "engine" => {
                let e = &mut self.engine;
                vec![
                    ("dt_max", Slot::Real(&mut e.config.dt_max, D::Time)),
                    ("crossing_tolerance", Slot::Real(&mut e.config.crossing_tolerance, D::Time)),
                    ("sample_interval", Slot::Optional(&mut e.config.sample_interval, D::Time, "none")),
                    ("duration", Slot::Real(&mut e.config.duration, D::Time)),
                    ("seed", Slot::Seed(&mut e.config.seed)),
                    ("warmup_fraction", Slot::Real(&mut e.warmup_fraction, D::Dimensionless)),
                ]
            }
            "mismatch" => {
                let m = &mut self.mismatch;
                vec![
                    ("scale", Slot::Real(&mut m.spec.scale, D::Dimensionless)),
                    ("seed", Slot::Seed(&mut m.spec.seed)),
                    ("I_in", Slot::Real(&mut m.i_in, D::Current)),
                    ("duration", Slot::Real(&mut m.duration, D::Time)),
                    ("warmup_fraction", Slot::Real(&mut m.warmup_fraction, D::Dimensionless)),
                ]
            }
            "power" => vec![
                ("P_static", Slot::Real(&mut self.power.p_static, D::Power)),
                ("E_switch", Slot::Real(&mut self.power.e_switch, D::Energy)),
            ],
            _ => Vec::new(),
        }
    }

    /// Applies one `key = value` entry. Repeatable keys append.
    fn apply(&mut self, section: &str, key: &str, value: &str) -> std::result::Result<(), String> {
        match (section, key) {
            ("network", "edge") => {
                self.network.edges.push(parse_edge(value)?);
                return Ok(());
            }
            ("stimulus", "train") | ("stimulus", "dc") => {
                self.stimulus.program.items.push(parse_stimulus_item(key, value)?);
                return Ok(());
            }
            ("mismatch", k) if k.starts_with("sigma.") => {
                let name = &k["sigma.".len()..];
                if name != "I_in" && !NEURON_PARAM_NAMES.contains(&name) {
                    return Err(format!("no mismatchable parameter '{name}'"));
                }
                let s = parse_as(value, D::Dimensionless).map_err(|e| e.to_string())?;
                self.mismatch.spec.sigmas.insert(name.to_string(), s);
                return Ok(());
            }
            _ => {}
        }
        if !SECTIONS.contains(&section) {
            return Err(format!("unknown section [{section}]"));
        }
        let mut slots = self.slots(section);
        let slot = slots
            .iter_mut()
            .find(|(k, _)| *k == key)
            .ok_or_else(|| format!("unknown key '{key}' in [{section}]"))?;
        slot.1.set(value)
    }

    /// Applies a `section.key=value` override.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (path, value) = assignment
            .split_once('=')
            .ok_or_else(|| Error::config(format!("override '{assignment}' is not section.key=value")))?;
        let (section, key) = path
            .trim()
            .split_once('.')
            .ok_or_else(|| Error::config(format!("override '{assignment}' is not section.key=value")))?;
        if key == "train" || key == "dc" || key == "edge" {
            // an override replaces the whole list with the single given entry
            match key {
                "edge" => self.network.edges.clear(),
                _ => self.stimulus.program.items.retain(|item| !matches!((key, item),
                    ("train", StimulusItem::SpikeTrain { .. }) | ("dc", StimulusItem::Current { .. }))),
            }
        }
        self.apply(section, key, value.trim())
            .map_err(|msg| Error::config(format!("--set {assignment}: {msg}")))
    }

    /// Checks cross-field consistency by building every runtime object.
    pub fn validate(&self) -> Result<()> {
        self.constants.validate()?;
        self.leak.validate()?;
        self.oracle.params.validate()?;
        if !(self.oracle.dt > 0.0 && self.oracle.duration > 0.0) {
            return Err(Error::config("oracle dt and duration must be > 0"));
        }
        let net = self.network()?;
        net.validate()?;
        self.stimulus.program.validate(net.neurons.len(), net.synapses.len())?;
        self.tau_setup().synapse.validate()?;
        if !(self.stimulus.tau_rate > 0.0 && self.stimulus.tau_duration > 0.0) {
            return Err(Error::config("tau_rate and tau_duration must be > 0"));
        }
        if !(self.stimulus.tau_decay_taus > 0.0 && self.stimulus.tau_samples_per_tau >= 1.0) {
            return Err(Error::config("tau_decay_taus must be > 0 and tau_samples_per_tau >= 1"));
        }
        self.engine.config.validate()?;
        if !(self.engine.warmup_fraction >= 0.0 && self.engine.warmup_fraction < 1.0) {
            return Err(Error::config("engine warmup_fraction must lie in [0, 1)"));
        }
        self.mismatch.spec.validate()?;
        self.power.validate()?;
        Ok(())
    }

    pub fn network(&self) -> Result<Network> {
        let mut net = Network::new(self.constants, self.leak);
        net.receiver = self.network.receiver;
        for _ in 0..self.network.neurons {
            net.add_neuron(self.neuron);
        }
        for i in 0..self.network.synapses {
            let target = (i < self.network.neurons).then_some(i);
            net.add_synapse(self.synapse, target);
        }
        let mut table = ConnectivityTable::new();
        for j in 0..self.network.neurons {
            table.add_source(j);
        }
        for e in &self.network.edges {
            table.connect(e.source, e.synapse, e.weight)?;
        }
        net.connectivity = table;
        Ok(net)
    }

    pub fn tau_setup(&self) -> TauSweepSetup {
        TauSweepSetup {
            synapse: self.synapse,
            leak: self.leak,
            consts: self.constants,
            rate: self.stimulus.tau_rate,
            stim_duration: self.stimulus.tau_duration,
            target_peak: self.stimulus.tau_target_peak,
            decay_taus: self.stimulus.tau_decay_taus,
            samples_per_tau: self.stimulus.tau_samples_per_tau,
        }
    }

    pub fn mc_setup(&self) -> McSetup {
        McSetup {
            neuron: self.neuron,
            consts: self.constants,
            i_in: self.mismatch.i_in,
            duration: self.mismatch.duration,
            warmup_fraction: self.mismatch.warmup_fraction,
            engine: EngineConfig {
                sample_interval: None,
                ..self.engine.config.clone()
            },
        }
    }

    /// Canonical text form. Parsing it yields an equal document.
    pub fn render(&self) -> String {
        let mut doc = self.clone();
        let mut out = String::new();
        for (i, section) in SECTIONS.iter().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            let _ = writeln!(out, "[{section}]");
            for (key, slot) in doc.slots(section) {
                let _ = writeln!(out, "{key} = {}", slot.render());
            }
            match *section {
                "network" => {
                    for e in &self.network.edges {
                        let _ = writeln!(out, "edge = {} -> {} : {:e}", e.source, e.synapse, e.weight);
                    }
                }
                "stimulus" => {
                    for item in &self.stimulus.program.items {
                        let _ = writeln!(out, "{}", render_stimulus_item(item));
                    }
                }
                "mismatch" => {
                    for (name, s) in &self.mismatch.spec.sigmas {
                        let _ = writeln!(out, "sigma.{name} = {s:e}");
                    }
                }
                _ => {}
            }
        }
        out
    }
}

fn parse_usize(s: &str, what: &str) -> std::result::Result<usize, String> {
    s.trim().parse().map_err(|_| format!("{what} must be a non-negative integer, got '{}'", s.trim()))
}

/// `SRC -> SYN` or `SRC -> SYN : WEIGHT`.
fn parse_edge(value: &str) -> std::result::Result<EdgeSpec, String> {
    let (route, weight) = match value.split_once(':') {
        Some((r, w)) => (r, parse_as(w, D::Dimensionless).map_err(|e| e.to_string())?),
        None => (value, 1.0),
    };
    let (src, dst) = route.split_once("->").ok_or_else(|| format!("edge '{value}' is not SRC -> SYN [: WEIGHT]"))?;
    Ok(EdgeSpec {
        source: parse_usize(src, "edge source")?,
        synapse: parse_usize(dst, "edge target")?,
        weight,
    })
}

fn parse_stimulus_item(key: &str, value: &str) -> std::result::Result<StimulusItem, String> {
    let mut tokens = value.split_whitespace();
    let id = parse_usize(tokens.next().ok_or_else(|| format!("{key} needs a target id"))?, "target id")?;
    let mut fields: BTreeMap<&str, &str> = BTreeMap::new();
    let mut poisson = false;
    for tok in tokens {
        match tok.split_once('=') {
            Some((k, v)) => {
                if fields.insert(k, v).is_some() {
                    return Err(format!("{key}: '{k}' given twice"));
                }
            }
            None if key == "train" && tok == "poisson" => poisson = true,
            None if key == "train" && tok == "regular" => poisson = false,
            None => return Err(format!("{key}: unexpected token '{tok}'")),
        }
    }
    let allowed: BTreeSet<&str> = match key {
        "train" => ["rate", "start", "stop"].into(),
        _ => ["amp", "start", "stop"].into(),
    };
    if let Some(k) = fields.keys().find(|k| !allowed.contains(*k)) {
        return Err(format!("{key}: unknown field '{k}'"));
    }
    let get = |k: &str, d: Dimension| -> std::result::Result<f64, String> {
        let raw = fields.get(k).ok_or_else(|| format!("{key}: missing '{k}='"))?;
        parse_as(raw, d).map_err(|e| format!("{key} {k}: {e}"))
    };
    let start = get("start", D::Time)?;
    let stop = get("stop", D::Time)?;
    Ok(if key == "train" {
        StimulusItem::SpikeTrain {
            synapse: id,
            rate: get("rate", D::Frequency)?,
            start,
            stop,
            kind: if poisson { TrainKind::Poisson } else { TrainKind::Regular },
        }
    } else {
        StimulusItem::Current {
            neuron: id,
            amplitude: get("amp", D::Current)?,
            start,
            stop,
        }
    })
}

fn render_stimulus_item(item: &StimulusItem) -> String {
    match *item {
        StimulusItem::SpikeTrain {
            synapse,
            rate,
            start,
            stop,
            kind,
        } => format!(
            "train = {synapse} rate={} start={} stop={}{}",
            format_quantity(rate, D::Frequency),
            format_quantity(start, D::Time),
            format_quantity(stop, D::Time),
            if kind == TrainKind::Poisson { " poisson" } else { "" }
        ),
        StimulusItem::Current {
            neuron,
            amplitude,
            start,
            stop,
        } => format!(
            "dc = {neuron} amp={} start={} stop={}",
            format_quantity(amplitude, D::Current),
            format_quantity(start, D::Time),
            format_quantity(stop, D::Time)
        ),
    }
}

/// Parses and validates a configuration file.
///
/// When the file mentions `train` or `dc` at all, its entries replace the
/// default stimulus program rather than adding to it; the same holds for
/// `sigma.*` and the default mismatch allocation.
pub fn parse_config(text: &str) -> Result<ConfigDocument> {
    let doc = parse_unvalidated(text)?;
    doc.validate()?;
    Ok(doc)
}

/// Parses `text` without the final cross-field validation, so overrides can
/// be applied before checking.
pub fn parse_unvalidated(text: &str) -> Result<ConfigDocument> {
    let mut doc = ConfigDocument::default();
    let mut section: Option<String> = None;
    let mut seen: BTreeSet<(String, String)> = BTreeSet::new();
    let mut cleared_stimulus = false;
    let mut cleared_sigmas = false;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split(['#', ';']).next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| Error::config_at(line_no, format!("malformed section header '{line}'")))?
                .trim();
            if !SECTIONS.contains(&name) {
                return Err(Error::config_at(line_no, format!("unknown section [{name}]")));
            }
            section = Some(name.to_string());
            continue;
        }
        let sec = section
            .as_deref()
            .ok_or_else(|| Error::config_at(line_no, "key outside of any section"))?;
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::config_at(line_no, format!("expected key = value, got '{line}'")))?;
        let (key, value) = (key.trim(), value.trim());
        let repeatable = matches!((sec, key), ("network", "edge") | ("stimulus", "train") | ("stimulus", "dc"));
        if !repeatable && !seen.insert((sec.to_string(), key.to_string())) {
            return Err(Error::config_at(line_no, format!("duplicate key '{key}' in [{sec}]")));
        }
        if sec == "stimulus" && (key == "train" || key == "dc") && !cleared_stimulus {
            doc.stimulus.program.items.clear();
            cleared_stimulus = true;
        }
        if sec == "mismatch" && key.starts_with("sigma.") && !cleared_sigmas {
            doc.mismatch.spec.sigmas.clear();
            cleared_sigmas = true;
        }
        doc.apply(sec, key, value).map_err(|msg| Error::config_at(line_no, msg))?;
    }
    Ok(doc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_of(err: Error) -> Option<usize> {
        match err {
            Error::Config { line, .. } => line,
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn empty_file_is_the_default_document() {
        assert_eq!(parse_config("").unwrap(), ConfigDocument::default());
    }

    #[test]
    fn si_values() {
        let doc = parse_config("[synapse]\nI_tau = 100fA\nC_syn = 821fF\n").unwrap();
        assert_eq!(doc.synapse.i_tau, 1e-13);
        assert_eq!(doc.synapse.c_syn, 8.21e-13);
    }

    #[test]
    fn dimension_error_has_line_number() {
        let err = parse_config("[synapse]\n\nI_tau = 100fF\n").unwrap_err();
        assert_eq!(line_of(err), Some(3));
    }

    #[test]
    fn unknown_keys_and_sections() {
        assert_eq!(line_of(parse_config("[synapse]\nI_tao = 1fA").unwrap_err()), Some(2));
        assert_eq!(line_of(parse_config("[synaps]\n").unwrap_err()), Some(1));
        assert_eq!(line_of(parse_config("I_tau = 1fA").unwrap_err()), Some(1));
        assert_eq!(line_of(parse_config("[mismatch]\nsigma.I_foo = 1").unwrap_err()), Some(2));
        assert_eq!(line_of(parse_config("[leak]\nenabled = yes").unwrap_err()), Some(2));
    }

    #[test]
    fn duplicates_rejected_but_lists_accumulate() {
        assert!(parse_config("[synapse]\nI_tau = 1fA\nI_tau = 2fA").is_err());
        let doc = parse_config(
            "[network]\nneurons = 2\nsynapses = 3\nedge = 0 -> 1 : 2\nedge = 1 -> 2\n\
             [stimulus]\ntrain = 0 rate=10Hz start=0s stop=1s poisson\ndc = 1 amp=1nA start=0.1s stop=0.5s\n",
        )
        .unwrap();
        assert_eq!(doc.network.edges.len(), 2);
        assert_eq!(doc.network.edges[1].weight, 1.0);
        assert_eq!(doc.stimulus.program.items.len(), 2);
        let net = doc.network().unwrap();
        assert_eq!(net.synapses[2].target, None);
        assert_eq!(net.synapses[1].target, Some(1));
    }

    #[test]
    fn cross_field_validation() {
        let err = parse_config("[network]\nneurons = 1\nsynapses = 1\nedge = 0 -> 4").unwrap_err();
        assert!(err.is_config());
        let err = parse_config("[neuron]\nI_reset = 200pA").unwrap_err();
        assert!(err.is_config());
    }

    #[test]
    fn render_round_trips() {
        let text = "[synapse]\nI_gain = 400fA\n[engine]\nsample_interval = none\nseed = 9\n\
                    [stimulus]\ntrain = 0 rate=2.5kHz start=1ms stop=2s poisson\n[mismatch]\nsigma.I_thr = 0.3\n";
        let doc = parse_config(text).unwrap();
        let again = parse_config(&doc.render()).unwrap();
        assert_eq!(doc, again);
        assert_eq!(doc.render(), again.render());
        let defaults = ConfigDocument::default();
        assert_eq!(parse_config(&defaults.render()).unwrap(), defaults);
    }

    #[test]
    fn overrides() {
        let mut doc = ConfigDocument::default();
        doc.apply_override("neuron.I_thr=150pA").unwrap();
        assert_eq!(doc.neuron.i_thr, 1.5e-10);
        doc.apply_override("mismatch.sigma.I_ref=0.5").unwrap();
        assert_eq!(doc.mismatch.spec.sigmas["I_ref"], 0.5);
        doc.apply_override("stimulus.dc=0 amp=1nA start=0s stop=1s").unwrap();
        assert_eq!(doc.stimulus.program.items.len(), 2);
        assert!(doc.apply_override("neuron.I_thr").is_err());
        assert!(doc.apply_override("neuron.I_thr=1fF").unwrap_err().is_config());
    }
}

fn key_doc(section: &str, key: &str) -> &'static str {
    match (section, key) {
        ("constants", "U_T") => "thermal voltage",
        ("constants", "kappa") => "subthreshold slope factor",
        ("constants", "V_dd") => "supply voltage",
        ("leak", "enabled") => "add leakage to every synapse bias current",
        ("leak", "cap_leak") => "constant capacitor leak",
        ("leak", "transistor_floor") => "lumped transistor leak",
        ("synapse", "C_syn") => "synapse capacitor",
        ("synapse", "I_tau") => "time-constant bias",
        ("synapse", "I_gain") => "gain bias; auto = 4 x I_tau",
        ("synapse", "I_w") => "weight current",
        ("synapse", "pulse_width") => "input pulse width",
        ("neuron", "C_mem") => "membrane capacitor",
        ("neuron", "C_ahp") => "adaptation capacitor",
        ("neuron", "I_leak") => "membrane leak bias",
        ("neuron", "gain_ratio_leak") => "LEAK block I_gain/I_tau",
        ("neuron", "I_thr") => "spike threshold current",
        ("neuron", "I_ref") => "refractory discharge current",
        ("neuron", "Q_ref") => "refractory charge; t_ref = Q_ref / I_ref",
        ("neuron", "I_a") => "AHP input current while the pulse extender is high; 0 disables adaptation",
        ("neuron", "I_tau_ahp") => "AHP time-constant bias",
        ("neuron", "gain_ratio_ahp") => "AHP I_gain/I_tau",
        ("neuron", "t_pex") => "pulse-extender duration",
        ("neuron", "I_fb0") => "positive-feedback prefactor",
        ("neuron", "I_norm") => "positive-feedback scale; auto = I_thr / 5",
        ("neuron", "I_reset") => "membrane current after reset",
        ("neuron", "fb_ceiling_ratio") => "feedback clamp as a multiple of I_thr",
        ("oracle", "I_step") => "reference model step current",
        ("oracle", "duration") => "reference model run time",
        ("oracle", "dt") => "reference model RK4 step",
        ("oracle", _) => "voltage-domain reference parameter",
        ("network", "neurons") => "neuron count",
        ("network", "synapses") => "synapse count; synapse i feeds neuron i",
        ("network", "ack_delay") => "receiver Req-to-Ack latency",
        ("network", "ack_release_delay") => "receiver Req-fall-to-Ack-fall latency",
        ("stimulus", "tau_rate") => "fit-tau pulse-train rate",
        ("stimulus", "tau_duration") => "fit-tau pulse-train length",
        ("stimulus", "tau_target_peak") => "fit-tau EPSC peak the weight is tuned to; none keeps I_w",
        ("stimulus", "tau_decay_taus") => "fit-tau observed decay, in time constants",
        ("stimulus", "tau_samples_per_tau") => "fit-tau trace samples per time constant",
        ("engine", "dt_max") => "largest neuron RK4 step",
        ("engine", "crossing_tolerance") => "threshold-crossing time resolution",
        ("engine", "sample_interval") => "trace sampling period; none records no traces",
        ("engine", "duration") => "simulated time",
        ("engine", "seed") => "stimulus RNG seed",
        ("engine", "warmup_fraction") => "fi: leading fraction excluded from rates",
        ("mismatch", "scale") => "global multiplier on every sigma",
        ("mismatch", "seed") => "mismatch RNG seed",
        ("mismatch", "I_in") => "DC input for every run",
        ("mismatch", "duration") => "simulated time per run",
        ("mismatch", "warmup_fraction") => "leading fraction excluded from rates",
        ("power", "P_static") => "static power",
        ("power", "E_switch") => "switching energy per spike",
        _ => "",
    }
}

/// Like [`ConfigDocument::render`] with each key's meaning as a trailing
/// comment. The output parses back to `doc`.
pub fn describe_defaults(doc: &ConfigDocument) -> String {
    let mut out = String::from(
        "# Values are SI: a number, optional prefix (f p n u m k M G) and unit.\n\
         # Repeatable entries:\n\
         #   [network]  edge = SRC -> SYN [: WEIGHT]\n\
         #   [stimulus] train = SYN rate=.. start=.. stop=.. [poisson]\n\
         #   [stimulus] dc = NEURON amp=.. start=.. stop=..\n\
         #   [mismatch] sigma.NAME = relative sigma (NAME: a [neuron] key or I_in)\n\n",
    );
    let mut section = String::new();
    for line in doc.render().lines() {
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            section = name.to_string();
        }
        let doc = line
            .split_once(" = ")
            .map(|(k, _)| key_doc(&section, k))
            .filter(|d| !d.is_empty());
        match doc {
            Some(d) => {
                let _ = writeln!(out, "{line:<40} # {d}");
            }
            None => {
                let _ = writeln!(out, "{line}");
            }
        }
    }
    out
}

#[cfg(test)]
mod describe_tests {
    use super::*;

    #[test]
    fn every_scalar_key_is_documented_and_output_parses() {
        let mut doc = ConfigDocument::default();
        for section in SECTIONS {
            for (key, _) in doc.slots(section) {
                assert!(!key_doc(section, key).is_empty(), "{section}.{key}");
            }
        }
        let text = describe_defaults(&ConfigDocument::default());
        assert_eq!(parse_config(&text).unwrap(), ConfigDocument::default());
    }
}
