use neurosim::aer::{hs_step, HandshakePhase, HandshakeSignal, HandshakeState};
use neurosim::analysis::{energy_per_spike, fit_tau, PowerModel};
use neurosim::device::{effective_tau, LeakModel, PhysicalConstants};
use neurosim::engine::{run, EngineConfig, Network, StimulusProgram};
use neurosim::neuron::AdexNeuronParams;
use neurosim::synapse::{exact_step, synapse_rhs, DpiSynapseParams, SynapseChannel, SynapseState};
use proptest::prelude::*;

fn consts() -> PhysicalConstants {
    PhysicalConstants::default()
}

fn leak_strategy() -> impl Strategy<Value = LeakModel> {
    prop_oneof![Just(LeakModel::default()), Just(LeakModel::disabled())]
}

fn synapse_strategy() -> impl Strategy<Value = DpiSynapseParams> {
    (1e-15..500e-15f64, 0.1e-9..10e-9f64).prop_map(|(i_tau, i_w)| DpiSynapseParams {
        i_tau,
        i_w,
        ..Default::default()
    })
}

fn state_strategy() -> impl Strategy<Value = SynapseState> {
    (0.0..5e-9f64, any::<bool>(), 0.0..10e-9f64).prop_map(|(i, on, w)| {
        let s = SynapseState::with_current(i);
        if on {
            s.pulsed(w, 1.0)
        } else {
            s
        }
    })
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn exact_step_is_a_semigroup(p in synapse_strategy(), leak in leak_strategy(), s in state_strategy(),
                                 a in 0.0..2.0f64, b in 0.0..2.0f64) {
        let c = consts();
        let two = exact_step(&exact_step(&s, a, &p, &leak, &c).unwrap(), b, &p, &leak, &c).unwrap();
        let one = exact_step(&s, a + b, &p, &leak, &c).unwrap();
        prop_assert!((two.i_syn - one.i_syn).abs() <= 1e-12 * one.i_syn.abs().max(s.i_syn) + 1e-30);
    }

    #[test]
    fn exact_step_stays_non_negative(p in synapse_strategy(), leak in leak_strategy(), s in state_strategy(),
                                     dt in 0.0..100.0f64) {
        let next = exact_step(&s, dt, &p, &leak, &consts()).unwrap();
        prop_assert!(next.i_syn >= 0.0);
    }

    #[test]
    fn exact_step_matches_rk4_of_the_ode(p in synapse_strategy(), leak in leak_strategy(), s in state_strategy()) {
        let c = consts();
        let tau = SynapseChannel::new(&p, &leak, &c).unwrap().tau;
        let span = tau;
        let n = 400;
        let h = span / n as f64;
        let rhs = |i: f64| synapse_rhs(&SynapseState { i_syn: i, ..s }, &p, &leak, &c).unwrap();
        let mut i = s.i_syn;
        for _ in 0..n {
            let k1 = rhs(i);
            let k2 = rhs(i + 0.5 * h * k1);
            let k3 = rhs(i + 0.5 * h * k2);
            let k4 = rhs(i + h * k3);
            i += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        let exact = exact_step(&s, span, &p, &leak, &c).unwrap().i_syn;
        let scale = s.i_syn.max(SynapseChannel::new(&p, &leak, &c).unwrap().target(&s));
        prop_assert!((i - exact).abs() <= 1e-9 * scale + 1e-30, "{i:e} vs {exact:e}");
    }

    #[test]
    fn channel_matches_exact_step(p in synapse_strategy(), leak in leak_strategy(), s in state_strategy(),
                                  dt in 0.0..5.0f64) {
        let c = consts();
        let ch = SynapseChannel::new(&p, &leak, &c).unwrap();
        let a = ch.value_after(&s, dt);
        let b = exact_step(&s, dt, &p, &leak, &c).unwrap().i_syn;
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(b.abs()) + 1e-30);
    }

    #[test]
    fn leak_free_fit_recovers_ideal_tau(i_tau in 1e-15..500e-15f64) {
        let c = consts();
        let p = DpiSynapseParams { i_tau, i_w: 1e-9, ..Default::default() };
        let leak = LeakModel::disabled();
        let tau = effective_tau(p.c_syn, i_tau, &leak, &c).unwrap();
        let dt = tau / 200.0;
        let mut s = SynapseState::with_current(1e-9);
        let mut trace = Vec::new();
        for k in 0..1200 {
            trace.push((k as f64 * dt, s.i_syn));
            s = exact_step(&s, dt, &p, &leak, &c).unwrap();
        }
        let fit = fit_tau(&trace).unwrap();
        prop_assert!(rel(fit.tau, c.ideal_tau(p.c_syn, i_tau)) < 0.01);
    }

    #[test]
    fn effective_tau_never_exceeds_leak_ceiling(i_tau in 1e-18..1e-9f64) {
        let c = consts();
        let leak = LeakModel::default();
        let tau = effective_tau(821e-15, i_tau, &leak, &c).unwrap();
        prop_assert!(tau <= c.ideal_tau(821e-15, leak.total()));
        prop_assert!(tau < c.ideal_tau(821e-15, i_tau));
    }

    #[test]
    fn energy_decreases_with_frequency(p in 1e-15..1e-9f64, e in 0.0..1e-11f64,
                                       f1 in 0.1..1e4f64, df in 1e-3..1e4f64) {
        let m = PowerModel { p_static: p, e_switch: e };
        prop_assert!(energy_per_spike(&m, f1 + df).unwrap() < energy_per_spike(&m, f1).unwrap());
    }
}

fn legal_successor(phase: HandshakePhase) -> HandshakeSignal {
    match phase {
        HandshakePhase::Idle => HandshakeSignal::ReqRise,
        HandshakePhase::ReqHigh => HandshakeSignal::AckRise,
        HandshakePhase::AckHigh => HandshakeSignal::ReqFall,
        HandshakePhase::ReqLow => HandshakeSignal::AckFall,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn handshake_accepts_exactly_the_legal_signal(signals in prop::collection::vec(0usize..4, 1..400)) {
        let mut s = HandshakeState::default();
        let mut t = 0.0;
        for k in signals {
            t += 1e-9;
            let sig = HandshakeSignal::ALL[k];
            match hs_step(s, sig, t) {
                Ok(next) => {
                    prop_assert_eq!(sig, legal_successor(s.phase));
                    prop_assert_eq!(next.last_transition, t);
                    s = next;
                }
                Err(_) => prop_assert_ne!(sig, legal_successor(s.phase)),
            }
        }
    }

    /// Inserting extra step boundaries only re-partitions the integration.
    #[test]
    fn breakpoints_do_not_change_results(points in prop::collection::vec(0.0..0.2f64, 0..20)) {
        let c = consts();
        let mut net = Network::new(c, LeakModel::default());
        net.add_synapse(DpiSynapseParams { i_w: 1e-9, ..Default::default() }, None);
        let stim = StimulusProgram::new().with(StimulusProgram::regular_train(0, 50.0, 0.0, 0.2));
        let base = EngineConfig { duration: 0.2, ..Default::default() };
        let a = run(&net, &stim, &base).unwrap();
        let b = run(&net, &stim, &EngineConfig { breakpoints: points, ..base }).unwrap();
        for (x, y) in a.traces.signal("syn0").unwrap().iter().zip(b.traces.signal("syn0").unwrap()) {
            prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(*y) + 1e-30);
        }
    }

    /// Breakpoints split RK4 steps, so spike times move only at the
    /// integration-error level.
    #[test]
    fn breakpoints_barely_move_spikes(points in prop::collection::vec(0.0..0.1f64, 1..10)) {
        let net = Network::single_neuron(AdexNeuronParams::default(), consts());
        let stim = StimulusProgram::new().with(StimulusProgram::dc(0, 400e-12, 0.0, 0.1));
        let base = EngineConfig { duration: 0.1, sample_interval: None, ..Default::default() };
        let a = run(&net, &stim, &base).unwrap();
        let b = run(&net, &stim, &EngineConfig { breakpoints: points, ..base }).unwrap();
        prop_assert_eq!(a.spikes.len(), b.spikes.len());
        for (x, y) in a.spikes.spikes.iter().zip(&b.spikes.spikes) {
            prop_assert!((x.1 - y.1).abs() < 1e-8);
        }
    }
}

#[test]
fn spike_times_converge_with_step_size() {
    let net = Network::single_neuron(AdexNeuronParams::default(), consts());
    let stim = StimulusProgram::new().with(StimulusProgram::dc(0, 400e-12, 0.0, 0.2));
    let times = |dt_max: f64| {
        let cfg = EngineConfig {
            dt_max,
            crossing_tolerance: 1e-10,
            duration: 0.2,
            sample_interval: None,
            ..Default::default()
        };
        run(&net, &stim, &cfg).unwrap().spikes.times_of(0)
    };
    let coarse = times(1e-4);
    let fine = times(5e-5);
    let finest = times(2.5e-5);
    assert_eq!(coarse.len(), finest.len());
    let err = |a: &[f64]| a.iter().zip(&finest).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let (e1, e2) = (err(&coarse), err(&fine));
    assert!(e1 < 1e-6, "coarse error {e1:e}");
    // fourth-order method: halving h cuts the error by well over 2x
    assert!(e2 < e1 / 4.0 || e1 < 1e-9, "{e1:e} -> {e2:e}");
}

#[test]
fn synapse_only_network_matches_closed_form_train() {
    // One pulse of width w then free decay, against the closed form.
    let c = consts();
    let p = DpiSynapseParams {
        i_w: 1e-9,
        ..Default::default()
    };
    let leak = LeakModel::default();
    let net = Network::single_synapse(p, leak, c);
    let stim = StimulusProgram::new().with(StimulusProgram::regular_train(0, 1.0, 0.0, 0.5));
    let cfg = EngineConfig {
        duration: 1.0,
        sample_interval: Some(0.01),
        ..Default::default()
    };
    let out = run(&net, &stim, &cfg).unwrap();
    let ch = SynapseChannel::new(&p, &leak, &c).unwrap();
    let peak = ch.efficacy * p.i_w * -(-p.pulse_width / ch.tau).exp_m1();
    for (t, v) in out.traces.series("syn0").unwrap().into_iter().skip(1) {
        let expect = peak * (-(t - p.pulse_width) / ch.tau).exp();
        assert!(rel(v, expect) < 1e-12, "t={t} {v:e} vs {expect:e}");
    }
}
