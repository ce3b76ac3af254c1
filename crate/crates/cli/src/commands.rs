//! Subcommand implementations. Each one resolves the configuration, runs
//! its experiment, writes CSV and JSON under the output directory, renders
//! plots from those CSVs when asked, and finishes with the manifest.

use std::path::{Path, PathBuf};
use std::time::Instant;

use neurosim::analysis::{
    adaptation_profile, calibrate_power, energy_per_spike, monte_carlo, sweep_bias, tau_sweep, FiBias, FiCurve,
    FiSetup, PowerModel, DEFAULT_I_TAU_SWEEP,
};
use neurosim::engine::{run, EngineConfig, RunOutput};
use neurosim::neuron::simulate_voltage_reference;
use serde::Serialize;

use crate::config::{parse_unvalidated, ConfigDocument};
use crate::error::{CliError, CliResult};
use crate::output::{num, read_csv, OutputDir, RunManifest};
use crate::plot::{histogram_chart, Axis, LineChart, Series};
use crate::units::{parse_as, Dimension};

/// Options shared by every experiment subcommand.
#[derive(Debug, Clone, Default)]
pub struct Common {
    pub config: Option<PathBuf>,
    pub out: PathBuf,
    pub plot: bool,
    pub overrides: Vec<String>,
}

/// Reads the config file (or starts from defaults), applies `--set`
/// overrides in order and validates the result.
pub fn load_config(path: Option<&Path>, overrides: &[String]) -> CliResult<ConfigDocument> {
    let mut doc = match path {
        Some(p) => {
            // an unreadable config is the caller's mistake, reported like a bad key
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", p.display())))?;
            parse_unvalidated(&text)?
        }
        None => ConfigDocument::default(),
    };
    for o in overrides {
        doc.apply_override(o)?;
    }
    doc.validate()?;
    Ok(doc)
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// `START:STOP:STEPS`, `STEPS` points with both ends included.
pub fn parse_grid(spec: &str, dim: Dimension, log: bool) -> CliResult<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let [start, stop, steps] = parts[..] else {
        return Err(usage(format!("grid '{spec}' is not START:STOP:STEPS")));
    };
    let start = parse_as(start, dim).map_err(|e| usage(format!("grid start: {e}")))?;
    let stop = parse_as(stop, dim).map_err(|e| usage(format!("grid stop: {e}")))?;
    let steps: usize = steps
        .trim()
        .parse()
        .map_err(|_| usage(format!("grid steps '{steps}' is not an integer")))?;
    if steps == 0 {
        return Err(usage("grid is empty"));
    }
    if steps == 1 {
        return Ok(vec![start]);
    }
    if !(stop > start) {
        return Err(usage("grid stop must exceed start"));
    }
    if log && !(start > 0.0) {
        return Err(usage("logarithmic grid needs a positive start"));
    }
    let n = (steps - 1) as f64;
    Ok((0..steps)
        .map(|k| {
            let u = k as f64 / n;
            if log {
                start * (stop / start).powf(u)
            } else {
                start + (stop - start) * u
            }
        })
        .collect())
}

/// `NAME=v1,v2,...`.
pub fn parse_named_list(spec: &str) -> CliResult<(&str, Vec<&str>)> {
    let (name, values) = spec
        .split_once('=')
        .ok_or_else(|| usage(format!("'{spec}' is not NAME=v1,v2,...")))?;
    let values: Vec<&str> = values.split(',').map(str::trim).filter(|v| !v.is_empty()).collect();
    if values.is_empty() {
        return Err(usage(format!("'{spec}' lists no values")));
    }
    Ok((name.trim(), values))
}

fn parse_value(raw: &str, dim: Dimension) -> CliResult<f64> {
    parse_as(raw, dim).map_err(|e| usage(format!("'{raw}': {e}")))
}

struct Session {
    out: OutputDir,
    doc: ConfigDocument,
    plot: bool,
    started: Instant,
    command: String,
}

impl Session {
    fn open(command: &str, common: &Common) -> CliResult<Self> {
        let doc = load_config(common.config.as_deref(), &common.overrides)?;
        Ok(Self {
            out: OutputDir::create(&common.out)?,
            doc,
            plot: common.plot,
            started: Instant::now(),
            command: command.to_string(),
        })
    }

    fn finish(mut self, seed: u64) -> CliResult<()> {
        RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: self.command.clone(),
            seed,
            wall_clock_s: self.started.elapsed().as_secs_f64(),
            outputs: Vec::new(),
            config: self.doc.render(),
        }
        .write(&mut self.out)
    }

    fn write_traces(&mut self, name: &str, run: &RunOutput) -> CliResult<()> {
        self.out.write_csv(
            name,
            &["time_s", "signal_id", "value_A"],
            run.traces.rows().map(|(t, id, v)| [num(t), id.to_string(), num(v)]),
        )
    }

    fn write_spikes(&mut self, name: &str, run: &RunOutput) -> CliResult<()> {
        self.out.write_csv(
            name,
            &["neuron_id", "time_s"],
            run.spikes.spikes.iter().map(|&(n, t)| [n.to_string(), num(t)]),
        )
    }

    /// Line plot of a long-format trace CSV, one series per signal id.
    fn plot_traces(&mut self, csv: &str, svg: &str, title: &str, keep: impl Fn(&str) -> bool) -> CliResult<()> {
        let (_, rows) = read_csv(&self.out.path(csv))?;
        let mut series: Vec<Series> = Vec::new();
        for row in rows {
            if !keep(&row[1]) {
                continue;
            }
            let p = (parse_cell(&row[0])?, parse_cell(&row[2])?);
            match series.iter_mut().find(|s| s.label == row[1]) {
                Some(s) => s.points.push(p),
                None => series.push(Series {
                    label: row[1].clone(),
                    points: vec![p],
                }),
            }
        }
        LineChart {
            title,
            x: ("time [s]", Axis::Linear),
            y: ("current [A]", Axis::Linear),
            series,
        }
        .render(&self.out.partial_path(svg))?;
        self.out.adopt(svg)
    }

    fn plot_columns(&mut self, csvs: &[(String, String)], svg: &str, chart: LineChart<'_>) -> CliResult<()> {
        let mut chart = chart;
        for (csv, label) in csvs {
            let (_, rows) = read_csv(&self.out.path(csv))?;
            let points = rows
                .iter()
                .map(|r| Ok((parse_cell(&r[0])?, parse_cell(&r[1])?)))
                .collect::<CliResult<Vec<_>>>()?;
            chart.series.push(Series {
                label: label.clone(),
                points,
            });
        }
        chart.render(&self.out.partial_path(svg))?;
        self.out.adopt(svg)
    }
}

fn parse_cell(s: &str) -> CliResult<f64> {
    s.parse().map_err(|_| CliError::Output(format!("unreadable CSV value '{s}'")))
}

// ---------------------------------------------------------------- simulate

#[derive(Serialize)]
struct SimulateSummary {
    duration_s: f64,
    spikes: Vec<usize>,
    crossings: Vec<usize>,
    suppressed: Vec<usize>,
    aer_events: usize,
}

pub fn simulate(common: &Common, duration: Option<&str>, seed: Option<u64>) -> CliResult<()> {
    let mut s = Session::open("simulate", common)?;
    if let Some(d) = duration {
        s.doc.engine.config.duration = parse_value(d, Dimension::Time)?;
    }
    if let Some(seed) = seed {
        s.doc.engine.config.seed = seed;
    }
    s.doc.validate()?;
    let net = s.doc.network()?;
    let cfg = s.doc.engine.config.clone();
    let out = run(&net, &s.doc.stimulus.program, &cfg)?;

    s.write_traces("traces.csv", &out)?;
    s.write_spikes("spikes.csv", &out)?;
    s.out.write_csv(
        "aer_events.csv",
        &["neuron_id", "t_req_s", "t_ack_s"],
        out.aer_events.iter().map(|e| [e.source_id.to_string(), num(e.t_req), num(e.t_ack)]),
    )?;
    let log: String = out.log.records.iter().map(|r| format!("{r}\n")).collect();
    s.out.write("events.log", log.as_bytes())?;
    s.out.write_json(
        "summary.json",
        &SimulateSummary {
            duration_s: cfg.duration,
            spikes: (0..net.neurons.len()).map(|j| out.spikes.count(j)).collect(),
            crossings: out.crossings.clone(),
            suppressed: out.suppressed.clone(),
            aer_events: out.aer_events.len(),
        },
    )?;
    if s.plot && !out.traces.is_empty() {
        s.plot_traces("traces.csv", "traces.svg", "simulation traces", |_| true)?;
    }
    s.finish(cfg.seed)
}

// ---------------------------------------------------------------- fit-tau

#[derive(Serialize)]
struct TauRowJson {
    i_tau_a: f64,
    tau_theoretical_s: f64,
    tau_fitted_s: f64,
    r2: f64,
    i_w_a: f64,
    peak_a: f64,
}

#[derive(Serialize)]
struct TauSummary {
    tau_s: Vec<f64>,
    r2: Vec<f64>,
    rows: Vec<TauRowJson>,
}

pub fn fit_tau(common: &Common, sweep: Option<&str>) -> CliResult<()> {
    let mut s = Session::open("fit-tau", common)?;
    let i_taus = match sweep {
        None => DEFAULT_I_TAU_SWEEP.to_vec(),
        Some(spec) => {
            let (name, values) = parse_named_list(spec)?;
            if name != "I_tau" {
                return Err(usage(format!("fit-tau sweeps I_tau, not '{name}'")));
            }
            values
                .iter()
                .map(|v| parse_value(v, Dimension::Current))
                .collect::<CliResult<Vec<_>>>()?
        }
    };
    let rows = tau_sweep(&s.doc.tau_setup(), &i_taus)?;
    s.out.write_csv(
        "fit_tau.csv",
        &["I_tau", "tau_theoretical_s", "tau_fitted_s", "r2"],
        rows.iter().map(|r| [num(r.i_tau), num(r.tau_theoretical), num(r.tau_fitted), num(r.r2)]),
    )?;
    s.out.write_json(
        "summary.json",
        &TauSummary {
            tau_s: rows.iter().map(|r| r.tau_fitted).collect(),
            r2: rows.iter().map(|r| r.r2).collect(),
            rows: rows
                .iter()
                .map(|r| TauRowJson {
                    i_tau_a: r.i_tau,
                    tau_theoretical_s: r.tau_theoretical,
                    tau_fitted_s: r.tau_fitted,
                    r2: r.r2,
                    i_w_a: r.i_w,
                    peak_a: r.peak,
                })
                .collect(),
        },
    )?;
    if s.plot {
        let (_, table) = read_csv(&s.out.path("fit_tau.csv"))?;
        let col = |k: usize| -> CliResult<Vec<(f64, f64)>> {
            table.iter().map(|r| Ok((parse_cell(&r[0])?, parse_cell(&r[k])?))).collect()
        };
        LineChart {
            title: "synapse time constant",
            x: ("I_tau [A]", Axis::Log),
            y: ("tau [s]", Axis::Log),
            series: vec![
                Series {
                    label: "theory, no leak".into(),
                    points: col(1)?,
                },
                Series {
                    label: "fitted".into(),
                    points: col(2)?,
                },
            ],
        }
        .render(&s.out.partial_path("fit_tau.svg"))?;
        s.out.adopt("fit_tau.svg")?;
    }
    let seed = s.doc.engine.config.seed;
    s.finish(seed)
}

// ---------------------------------------------------------------- fi

#[derive(Serialize)]
struct FiJson {
    bias: Option<&'static str>,
    value: Option<f64>,
    file: String,
    i_in_a: Vec<f64>,
    rate_hz: Vec<f64>,
    max_rate_hz: f64,
    monotone: bool,
}

#[derive(Serialize)]
struct FiSummary {
    fi: Vec<FiJson>,
}

fn bias_dimension(b: FiBias) -> Dimension {
    match b {
        FiBias::GainRatio => Dimension::Dimensionless,
        FiBias::IRef | FiBias::IThr => Dimension::Current,
    }
}

pub fn fi(common: &Common, grid: &str, bias: Option<&str>, duration: Option<&str>) -> CliResult<()> {
    let mut s = Session::open("fi", common)?;
    let grid = parse_grid(grid, Dimension::Current, false)?;
    if let Some(d) = duration {
        s.doc.engine.config.duration = parse_value(d, Dimension::Time)?;
    }
    let setup = FiSetup {
        neuron: s.doc.neuron,
        consts: s.doc.constants,
        duration: s.doc.engine.config.duration,
        warmup_fraction: s.doc.engine.warmup_fraction,
        engine: EngineConfig {
            sample_interval: None,
            ..s.doc.engine.config.clone()
        },
    };
    let curves: Vec<FiCurve> = match bias {
        None => vec![neurosim::analysis::fi_sweep(&setup, &grid)?],
        Some(spec) => {
            let (name, raw) = parse_named_list(spec)?;
            let b = FiBias::parse(name)?;
            let values = raw
                .iter()
                .map(|v| parse_value(v, bias_dimension(b)))
                .collect::<CliResult<Vec<_>>>()?;
            sweep_bias(&setup, b, &values, &grid)?
        }
    };
    let mut summary = FiSummary { fi: Vec::new() };
    let mut files = Vec::new();
    for (k, c) in curves.iter().enumerate() {
        let (file, label) = match c.bias {
            None => ("fi.csv".to_string(), "F-I".to_string()),
            Some((b, v)) => (format!("fi_{}_{k}.csv", b.name()), format!("{}={v:e}", b.name())),
        };
        s.out.write_csv(
            &file,
            &["i_in_A", "rate_hz"],
            c.points.iter().map(|p| [num(p.i_in), num(p.rate)]),
        )?;
        summary.fi.push(FiJson {
            bias: c.bias.map(|(b, _)| b.name()),
            value: c.bias.map(|(_, v)| v),
            file: file.clone(),
            i_in_a: c.points.iter().map(|p| p.i_in).collect(),
            rate_hz: c.rates(),
            max_rate_hz: c.max_rate(),
            monotone: c.is_monotone(),
        });
        files.push((file, label));
    }
    s.out.write_json("summary.json", &summary)?;
    if s.plot {
        s.plot_columns(
            &files,
            "fi.svg",
            LineChart {
                title: "F-I curve",
                x: ("input current [A]", Axis::Linear),
                y: ("rate [Hz]", Axis::Linear),
                series: Vec::new(),
            },
        )?;
    }
    let seed = s.doc.engine.config.seed;
    s.finish(seed)
}

// ---------------------------------------------------------------- adapt

#[derive(Serialize)]
struct AdaptSummary {
    i_in_a: f64,
    spikes: usize,
    first_isi_s: f64,
    steady_isi_s: f64,
    steady_rate_hz: f64,
    rate_without_ahp_hz: f64,
    ahp_steady_peak_a: f64,
    ahp_bound_a: f64,
    oracle_i_step_a: f64,
    oracle_isi_s: Vec<f64>,
}

pub fn adapt(common: &Common, iin: &str, duration: Option<&str>) -> CliResult<()> {
    let mut s = Session::open("adapt", common)?;
    let i_in = parse_value(iin, Dimension::Current)?;
    if let Some(d) = duration {
        s.doc.engine.config.duration = parse_value(d, Dimension::Time)?;
    }
    s.doc.validate()?;
    let consts = s.doc.constants;
    let cfg = s.doc.engine.config.clone();
    let (summary, out) = adaptation_profile(&s.doc.neuron, &consts, i_in, &cfg)?;
    let plain = neurosim::neuron::AdexNeuronParams {
        i_a: 0.0,
        ..s.doc.neuron
    };
    let quiet = EngineConfig {
        sample_interval: None,
        ..cfg.clone()
    };
    let (no_ahp, _) = adaptation_profile(&plain, &consts, i_in, &quiet)?;
    let o = s.doc.oracle.clone();
    let reference = simulate_voltage_reference(&o.params, o.i_step, o.duration, o.dt)?;

    s.write_traces("traces.csv", &out)?;
    s.write_spikes("spikes.csv", &out)?;
    s.out.write_csv(
        "isi.csv",
        &["spike_index", "isi_s"],
        summary.isis.iter().enumerate().map(|(k, v)| [(k + 1).to_string(), num(*v)]),
    )?;
    s.out.write_csv(
        "oracle_isi.csv",
        &["spike_index", "isi_s"],
        reference.isis().iter().enumerate().map(|(k, v)| [(k + 1).to_string(), num(*v)]),
    )?;
    s.out.write_json(
        "summary.json",
        &AdaptSummary {
            i_in_a: i_in,
            spikes: out.spikes.count(0),
            first_isi_s: summary.first_isi,
            steady_isi_s: summary.steady_isi,
            steady_rate_hz: summary.steady_rate,
            rate_without_ahp_hz: no_ahp.steady_rate,
            ahp_steady_peak_a: summary.ahp_steady_peak,
            ahp_bound_a: summary.ahp_bound,
            oracle_i_step_a: o.i_step,
            oracle_isi_s: reference.isis(),
        },
    )?;
    if s.plot && !out.traces.is_empty() {
        s.plot_traces("traces.csv", "adapt.svg", "membrane and AHP currents", |id| {
            id == "mem0" || id == "ahp0"
        })?;
    }
    s.finish(cfg.seed)
}

// ---------------------------------------------------------------- energy

#[derive(Serialize)]
struct EnergySummary {
    p_static_w: f64,
    e_switch_j: f64,
    residual_rms_j: Option<f64>,
    freq_hz: Vec<f64>,
    energy_pj: Vec<f64>,
}

/// `f1:e1,f2:e2,...` with units, e.g. `30Hz:16pJ,2.1kHz:1pJ`.
pub fn parse_calibration(spec: &str) -> CliResult<Vec<(f64, f64)>> {
    spec.split(',')
        .map(|pair| {
            let (f, e) = pair
                .split_once(':')
                .ok_or_else(|| usage(format!("calibration point '{pair}' is not FREQ:ENERGY")))?;
            Ok((parse_value(f, Dimension::Frequency)?, parse_value(e, Dimension::Energy)?))
        })
        .collect()
}

pub fn energy(common: &Common, calibrate: Option<&str>, grid: &str) -> CliResult<()> {
    let mut s = Session::open("energy", common)?;
    let grid = parse_grid(grid, Dimension::Frequency, true)?;
    let (model, residual): (PowerModel, Option<f64>) = match calibrate {
        Some(spec) => {
            let fit = calibrate_power(&parse_calibration(spec)?)?;
            (fit.model, Some(fit.residual_rms))
        }
        None => (s.doc.power, None),
    };
    s.doc.power = model;
    let energies = grid
        .iter()
        .map(|&f| energy_per_spike(&model, f))
        .collect::<neurosim::Result<Vec<_>>>()?;
    s.out.write_csv(
        "energy.csv",
        &["freq_hz", "energy_pJ"],
        grid.iter().zip(&energies).map(|(f, e)| [num(*f), num(e * 1e12)]),
    )?;
    s.out.write_json(
        "summary.json",
        &EnergySummary {
            p_static_w: model.p_static,
            e_switch_j: model.e_switch,
            residual_rms_j: residual,
            freq_hz: grid.clone(),
            energy_pj: energies.iter().map(|e| e * 1e12).collect(),
        },
    )?;
    if s.plot {
        s.plot_columns(
            &[("energy.csv".to_string(), "E/spike".to_string())],
            "energy.svg",
            LineChart {
                title: "energy per spike",
                x: ("frequency [Hz]", Axis::Log),
                y: ("energy [pJ]", Axis::Log),
                series: Vec::new(),
            },
        )?;
    }
    s.finish(0)
}

// ---------------------------------------------------------------- mc

#[derive(Serialize)]
struct McJson {
    mean_hz: f64,
    std_hz: f64,
    cv: f64,
    n_runs: usize,
    zero_rate_runs: Vec<usize>,
    i_in_a: f64,
    sigma_scale: f64,
    seed: u64,
}

#[derive(Serialize)]
struct McSummary {
    mc: McJson,
}

pub fn mc(common: &Common, runs: usize, seed: Option<u64>) -> CliResult<()> {
    let mut s = Session::open("mc", common)?;
    if runs == 0 {
        return Err(usage("--runs must be at least 1"));
    }
    if let Some(seed) = seed {
        s.doc.mismatch.spec.seed = seed;
    }
    let spec = s.doc.mismatch.spec.clone();
    let res = monte_carlo(&s.doc.mc_setup(), &spec, runs)?;
    s.out.write_csv(
        "histogram.csv",
        &["bin_low_hz", "bin_high_hz", "count"],
        res.histogram.iter().map(|b| [num(b.low), num(b.high), b.count.to_string()]),
    )?;
    s.out.write_csv(
        "rates.csv",
        &["run", "rate_hz"],
        res.rates.iter().enumerate().map(|(i, r)| [i.to_string(), num(*r)]),
    )?;
    s.out.write_json(
        "mc.json",
        &McSummary {
            mc: McJson {
                mean_hz: res.mean,
                std_hz: res.std,
                cv: res.cv,
                n_runs: res.n_runs,
                zero_rate_runs: res.zero_rate_runs.clone(),
                i_in_a: s.doc.mismatch.i_in,
                sigma_scale: spec.scale,
                seed: spec.seed,
            },
        },
    )?;
    if s.plot {
        let (_, rows) = read_csv(&s.out.path("histogram.csv"))?;
        let bins = rows
            .iter()
            .map(|r| {
                let count = r[2]
                    .parse()
                    .map_err(|_| CliError::Output(format!("bad histogram count '{}'", r[2])))?;
                Ok((parse_cell(&r[0])?, parse_cell(&r[1])?, count))
            })
            .collect::<CliResult<Vec<_>>>()?;
        histogram_chart(&s.out.partial_path("histogram.svg"), "firing rate under mismatch", "rate [Hz]", &bins)?;
        s.out.adopt("histogram.svg")?;
    }
    s.finish(spec.seed)
}

/// Configuration after file and overrides, in canonical syntax.
pub fn print_config(path: Option<&Path>, overrides: &[String]) -> CliResult<String> {
    Ok(load_config(path, overrides)?.render())
}
