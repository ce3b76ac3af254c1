use std::fmt;

use serde::Serialize;

/// Sampled currents. All signals share the same sample times.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct TraceSet {
    pub times: Vec<f64>,
    pub signals: Vec<Signal>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Signal {
    pub id: String,
    pub values: Vec<f64>,
}

impl TraceSet {
    pub fn signal(&self, id: &str) -> Option<&[f64]> {
        self.signals.iter().find(|s| s.id == id).map(|s| s.values.as_slice())
    }

    /// `(time, value)` pairs of one signal.
    pub fn series(&self, id: &str) -> Option<Vec<(f64, f64)>> {
        self.signal(id)
            .map(|v| self.times.iter().copied().zip(v.iter().copied()).collect())
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Long-format rows `(time, signal id, value)`, time-major.
    pub fn rows(&self) -> impl Iterator<Item = (f64, &str, f64)> + '_ {
        self.times.iter().enumerate().flat_map(move |(k, &t)| {
            self.signals
                .iter()
                .map(move |s| (t, s.id.as_str(), s.values[k]))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct SpikeRecord {
    /// `(neuron id, spike time)` in emission order.
    pub spikes: Vec<(usize, f64)>,
}

impl SpikeRecord {
    pub fn times_of(&self, neuron: usize) -> Vec<f64> {
        self.spikes
            .iter()
            .filter(|(n, _)| *n == neuron)
            .map(|&(_, t)| t)
            .collect()
    }

    pub fn count(&self, neuron: usize) -> usize {
        self.spikes.iter().filter(|(n, _)| *n == neuron).count()
    }

    pub fn len(&self) -> usize {
        self.spikes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spikes.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogRecord {
    pub t: f64,
    pub kind: &'static str,
    pub id: usize,
    pub detail: String,
}

impl fmt::Display for LogRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "t={:.9e} kind={} id={} detail={}",
            self.t, self.kind, self.id, self.detail
        )
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct EventLog {
    pub records: Vec<LogRecord>,
}

impl EventLog {
    pub(crate) fn push(&mut self, t: f64, kind: &'static str, id: usize, detail: impl Into<String>) {
        self.records.push(LogRecord {
            t,
            kind,
            id,
            detail: detail.into(),
        });
    }

    pub fn of_kind<'a>(&'a self, kind: &'a str) -> impl Iterator<Item = &'a LogRecord> + 'a {
        self.records.iter().filter(move |r| r.kind == kind)
    }
}

impl fmt::Display for EventLog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.records {
            writeln!(f, "{r}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_line_format() {
        let r = LogRecord {
            t: 1.5e-3,
            kind: "req_rise",
            id: 2,
            detail: "spike".into(),
        };
        assert_eq!(r.to_string(), "t=1.500000000e-3 kind=req_rise id=2 detail=spike");
    }

    #[test]
    fn long_rows_are_time_major() {
        let ts = TraceSet {
            times: vec![0.0, 1.0],
            signals: vec![
                Signal {
                    id: "a".into(),
                    values: vec![1.0, 2.0],
                },
                Signal {
                    id: "b".into(),
                    values: vec![3.0, 4.0],
                },
            ],
        };
        let rows: Vec<_> = ts.rows().collect();
        assert_eq!(rows, vec![(0.0, "a", 1.0), (0.0, "b", 3.0), (1.0, "a", 2.0), (1.0, "b", 4.0)]);
        assert_eq!(ts.series("b").unwrap(), vec![(0.0, 3.0), (1.0, 4.0)]);
    }
}
