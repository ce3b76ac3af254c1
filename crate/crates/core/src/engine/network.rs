use serde::Serialize;

use crate::aer::{ConnectivityTable, ReceiverModel};
use crate::device::{LeakModel, PhysicalConstants};
use crate::error::{Error, Result};
use crate::neuron::AdexNeuronParams;
use crate::synapse::DpiSynapseParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SynapseSite {
    pub params: DpiSynapseParams,
    /// Neuron whose input this synapse feeds. `None` leaves the synapse as a
    /// standalone probe whose current is only recorded.
    pub target: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Network {
    pub neurons: Vec<AdexNeuronParams>,
    pub synapses: Vec<SynapseSite>,
    pub connectivity: ConnectivityTable,
    pub receiver: ReceiverModel,
    pub leak: LeakModel,
    pub consts: PhysicalConstants,
}

impl Network {
    pub fn new(consts: PhysicalConstants, leak: LeakModel) -> Self {
        Self {
            consts,
            leak,
            ..Default::default()
        }
    }

    /// Adds a neuron and registers it as an AER source. Returns its id.
    pub fn add_neuron(&mut self, params: AdexNeuronParams) -> usize {
        let id = self.neurons.len();
        self.neurons.push(params);
        self.connectivity.add_source(id);
        id
    }

    pub fn add_synapse(&mut self, params: DpiSynapseParams, target: Option<usize>) -> usize {
        self.synapses.push(SynapseSite { params, target });
        self.synapses.len() - 1
    }

    /// One neuron, no synapses.
    pub fn single_neuron(params: AdexNeuronParams, consts: PhysicalConstants) -> Self {
        let mut net = Self::new(consts, LeakModel::default());
        net.add_neuron(params);
        net
    }

    /// One unconnected synapse.
    pub fn single_synapse(params: DpiSynapseParams, leak: LeakModel, consts: PhysicalConstants) -> Self {
        let mut net = Self::new(consts, leak);
        net.add_synapse(params, None);
        net
    }

    pub fn validate(&self) -> Result<()> {
        self.consts.validate()?;
        self.leak.validate()?;
        self.receiver.validate()?;
        for n in &self.neurons {
            n.validate()?;
        }
        for (i, s) in self.synapses.iter().enumerate() {
            s.params.validate()?;
            if let Some(t) = s.target {
                if t >= self.neurons.len() {
                    return Err(Error::config(format!("synapse {i} feeds unknown neuron {t}")));
                }
            }
        }
        self.connectivity.validate(self.neurons.len(), self.synapses.len())
    }
}
