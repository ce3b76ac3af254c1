//! Expected values below were computed independently of the library (plain
//! closed-form arithmetic and a brute-force grid search) and frozen here.

use neurosim::analysis::{
    calibrate_power, monte_carlo, tau_sweep, tune_weight_for_peak, McSetup, TauSweepSetup, DEFAULT_I_TAU_SWEEP,
};
use neurosim::device::{effective_tau, LeakModel, MismatchSpec, PhysicalConstants};
use neurosim::engine::{run, EngineConfig, Network, StimulusProgram};
use neurosim::neuron::{simulate_voltage_reference, AdexNeuronParams, AdexVoltageParams};
use neurosim::synapse::{exact_step, steady_state_envelope, DpiSynapseParams, SynapseState};

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// C·U_T/(κ·(I_τ + 3.6 fA)) for C = 821 fF, U_T = 25 mV, κ = 0.75.
const TAU_WITH_LEAK: [f64; 10] = [
    5.949275362318842,
    3.1821705426356597,
    2.0122549019607847,
    1.1596045197740112,
    0.5105721393034826,
    0.2641570141570142,
    0.13441388343156518,
    0.09014053579270971,
    0.06780640898579451,
    0.054342070426264225,
];

const TAU_NO_LEAK: [f64; 10] = [
    27.366666666666667,
    5.473333333333334,
    2.736666666666667,
    1.3683333333333334,
    0.5473333333333333,
    0.27366666666666667,
    0.13683333333333333,
    0.09122222222222222,
    0.06841666666666667,
    0.054733333333333335,
];

#[test]
fn effective_tau_table() {
    let c = PhysicalConstants::default();
    let leak = LeakModel::default();
    for (k, &i_tau) in DEFAULT_I_TAU_SWEEP.iter().enumerate() {
        let t = effective_tau(821e-15, i_tau, &leak, &c).unwrap();
        assert!(rel(t, TAU_WITH_LEAK[k]) < 1e-12, "row {k}: {t}");
        assert!(rel(c.ideal_tau(821e-15, i_tau), TAU_NO_LEAK[k]) < 1e-12);
    }
}

#[test]
fn fitted_sweep_tracks_effective_tau() {
    let rows = tau_sweep(&TauSweepSetup::default(), &DEFAULT_I_TAU_SWEEP).unwrap();
    for (k, r) in rows.iter().enumerate() {
        assert!(rel(r.tau_fitted, TAU_WITH_LEAK[k]) < 1e-3, "row {k}: {}", r.tau_fitted);
        assert!(r.r2 > 0.9999);
        assert!(rel(r.peak, 1e-9) < 1e-9);
        assert_eq!(r.tau_theoretical, {
            let c = PhysicalConstants::default();
            c.ideal_tau(821e-15, r.i_tau)
        });
    }
}

#[test]
fn weight_tuning_hits_one_nanoamp() {
    let setup = TauSweepSetup::default();
    for i_tau in [1e-15, 100e-15] {
        let syn = DpiSynapseParams {
            i_tau,
            ..setup.synapse
        };
        let i_w = tune_weight_for_peak(&setup, &syn, 1e-9).unwrap();
        let trace = neurosim::analysis::simulate_decay(&setup, &DpiSynapseParams { i_w, ..syn }).unwrap();
        let peak = trace.iter().map(|p| p.1).fold(0.0, f64::max);
        assert!(rel(peak, 1e-9) < 1e-9, "{i_tau:e}: {peak:e}");
    }
}

/// Solving E = P/f + E_sw through (30 Hz, 16 pJ) and (2.1 kHz, 1 pJ) by
/// hand: P = 15 pJ / (1/30 − 1/2100) s, E_sw = 1 pJ − P/2100.
#[test]
fn two_point_power_solve() {
    let fit = calibrate_power(&[(30.0, 16e-12), (2100.0, 1e-12)]).unwrap();
    assert!(rel(fit.model.p_static, 4.565217391304348e-10) < 1e-12);
    assert!(rel(fit.model.e_switch, 7.826086956521739e-13) < 1e-9);
}

/// Brute-force least squares over P ∈ [400, 600] pW (0.1 pW steps) and
/// E_sw ∈ [0.5, 1.5] pJ (0.5 fJ steps) gave P = 486.2 pW, E_sw = 0.6885 pJ,
/// residual sum 7.2106e-28 J².
#[test]
fn three_point_fit_matches_grid_search() {
    let pts = [(20.0, 25e-12), (200.0, 3.1e-12), (2000.0, 0.95e-12)];
    let fit = calibrate_power(&pts).unwrap();
    assert!((fit.model.p_static - 486.2e-12).abs() < 0.2e-12, "{:e}", fit.model.p_static);
    assert!((fit.model.e_switch - 0.6885e-12).abs() < 1e-15, "{:e}", fit.model.e_switch);
    let ss: f64 = pts
        .iter()
        .map(|&(f, e)| (fit.model.p_static / f + fit.model.e_switch - e).powi(2))
        .sum();
    assert!(ss <= 7.2106e-28 * (1.0 + 1e-9));
    assert!(rel(fit.residual_rms, (ss / 3.0).sqrt()) < 1e-9);
}

fn iterate_train(p: &DpiSynapseParams, leak: &LeakModel, rate: f64, periods: usize) -> (f64, f64) {
    let c = PhysicalConstants::default();
    let period = 1.0 / rate;
    let mut s = SynapseState::default();
    let mut peak = 0.0;
    for _ in 0..periods {
        s = exact_step(&s.pulsed(p.i_w, p.pulse_width), p.pulse_width, p, leak, &c).unwrap();
        peak = s.i_syn;
        s = exact_step(&s.released(), period - p.pulse_width, p, leak, &c).unwrap();
    }
    (peak, s.i_syn)
}

#[test]
fn envelope_fixed_point_matches_long_simulation() {
    let leak = LeakModel::default();
    for (i_tau, rate) in [(100e-15, 50.0), (200e-15, 50.0), (500e-15, 50.0), (500e-15, 200.0)] {
        let p = DpiSynapseParams {
            i_tau,
            i_w: 1e-9,
            ..Default::default()
        };
        let (peak, trough) = steady_state_envelope(&p, &leak, &PhysicalConstants::default(), rate).unwrap();
        let (sim_peak, sim_trough) = iterate_train(&p, &leak, rate, 100);
        assert!(rel(sim_peak, peak) < 1e-3, "{i_tau:e}: {sim_peak:e} vs {peak:e}");
        assert!(rel(sim_trough, trough) < 1e-3);
    }
}

#[test]
fn envelope_ordering_with_fixed_gain() {
    let leak = LeakModel::default();
    let c = PhysicalConstants::default();
    let level = |i_tau: f64, i_gain: Option<f64>| {
        let p = DpiSynapseParams {
            i_tau,
            i_gain,
            i_w: 1e-9,
            ..Default::default()
        };
        steady_state_envelope(&p, &leak, &c, 50.0).unwrap().0
    };
    let fixed: Vec<f64> = DEFAULT_I_TAU_SWEEP.iter().map(|&i| level(i, Some(400e-15))).collect();
    assert!(fixed.windows(2).all(|w| w[1] < w[0]), "{fixed:?}");
    // with I_gain tracking 4·I_τ the efficacy grows with I_τ under leak and
    // the 500 fA plateau sits above the 100 fA one
    assert!(level(500e-15, None) > level(100e-15, None));
}

/// With feedback off the first spike of a DC-driven neuron is at
/// t* = −τ·ln(1 − I_thr/(g·I_in)); later ISIs add the 10 ns acknowledge
/// delay and the 2 ms refractory clamp.
#[test]
fn dc_spike_times_match_closed_form() {
    let c = PhysicalConstants::default();
    let n = AdexNeuronParams {
        i_fb0: 0.0,
        ..Default::default()
    };
    let i_in = 300e-12;
    let tau = n.tau_mem(&c);
    let t_star = -tau * (1.0 - n.i_thr / (n.gain_ratio_leak * i_in)).ln();
    let net = Network::single_neuron(n, c);
    let stim = StimulusProgram::new().with(StimulusProgram::dc(0, i_in, 0.0, 0.2));
    let cfg = EngineConfig {
        duration: 0.2,
        sample_interval: None,
        ..Default::default()
    };
    let out = run(&net, &stim, &cfg).unwrap();
    let times = out.spikes.times_of(0);
    assert!((times[0] - t_star).abs() < 2e-9, "{} vs {t_star}", times[0]);
    let isi = 10e-9 + 2e-3 + t_star;
    for w in times.windows(2) {
        assert!((w[1] - w[0] - isi).abs() < 2e-9);
    }
    assert_eq!(times.len(), 1 + ((0.2 - t_star) / isi) as usize);
}

#[test]
fn both_models_adapt_under_a_step() {
    let reference = simulate_voltage_reference(&AdexVoltageParams::default(), 1e-9, 1.0, 1e-5).unwrap();
    let r = reference.isis();
    let n = AdexNeuronParams {
        i_a: 2e-6,
        ..Default::default()
    };
    let cfg = EngineConfig {
        duration: 1.0,
        sample_interval: None,
        ..Default::default()
    };
    let net = Network::single_neuron(n, PhysicalConstants::default());
    let out = run(&net, &StimulusProgram::new().with(StimulusProgram::dc(0, 400e-12, 0.0, 1.0)), &cfg).unwrap();
    let t = out.spikes.times_of(0);
    let c: Vec<f64> = t.windows(2).map(|w| w[1] - w[0]).collect();
    assert!(r[0] < *r.last().unwrap());
    assert!(c[0] < *c.last().unwrap());
}

#[test]
fn monte_carlo_is_deterministic_and_prefix_stable() {
    let setup = McSetup {
        duration: 0.5,
        ..Default::default()
    };
    let spec = MismatchSpec {
        seed: 11,
        ..neurosim::analysis::default_mismatch_spec(11)
    };
    let a = monte_carlo(&setup, &spec, 8).unwrap();
    let b = monte_carlo(&setup, &spec, 8).unwrap();
    assert_eq!(a, b);
    let c = monte_carlo(&setup, &spec, 16).unwrap();
    assert_eq!(&c.rates[..8], &a.rates[..]);
    let other = monte_carlo(&setup, &MismatchSpec { seed: 12, ..spec.clone() }, 8).unwrap();
    assert_ne!(other.rates, a.rates);
}

#[test]
fn zero_sigma_reproduces_the_nominal_rate() {
    let setup = McSetup {
        duration: 0.5,
        ..Default::default()
    };
    let spec = neurosim::analysis::default_mismatch_spec(3).zeroed();
    let r = monte_carlo(&setup, &spec, 6).unwrap();
    assert_eq!(r.std, 0.0);
    assert_eq!(r.mean, setup.rate_with(&setup.nominal_params()).unwrap());
}
