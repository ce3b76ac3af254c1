//! Energy per spike as a static-power term plus a per-spike switching cost:
//! `E(f) = P_static / f + E_switch`.

use serde::Serialize;

use super::stats::linear_regression;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerModel {
    /// Static power [W].
    pub p_static: f64,
    /// Switching energy per spike [J].
    pub e_switch: f64,
}

impl PowerModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.p_static >= 0.0) || !(self.e_switch >= 0.0) {
            return Err(Error::config("P_static and E_switch must be >= 0"));
        }
        Ok(())
    }
}

pub fn energy_per_spike(model: &PowerModel, freq: f64) -> Result<f64> {
    if !(freq > 0.0) || !freq.is_finite() {
        return Err(Error::Domain(format!("frequency must be > 0, got {freq:e}")));
    }
    Ok(model.p_static / freq + model.e_switch)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerFit {
    pub model: PowerModel,
    /// Root-mean-square energy residual [J].
    pub residual_rms: f64,
}

/// Least-squares fit of `E = P_static·(1/f) + E_switch` to `(f, E)` points.
/// Two points with distinct frequencies are fitted exactly.
pub fn calibrate_power(points: &[(f64, f64)]) -> Result<PowerFit> {
    if points.len() < 2 {
        return Err(Error::Fit("power calibration needs at least two points".into()));
    }
    if points.iter().any(|&(f, _)| !(f > 0.0)) {
        return Err(Error::Fit("calibration frequencies must be > 0".into()));
    }
    let first = points[0].0;
    if points.iter().all(|&(f, _)| f == first) {
        return Err(Error::Fit("calibration frequencies are all equal".into()));
    }
    let xs: Vec<f64> = points.iter().map(|&(f, _)| 1.0 / f).collect();
    let ys: Vec<f64> = points.iter().map(|&(_, e)| e).collect();
    let line = linear_regression(&xs, &ys)?;
    let model = PowerModel {
        p_static: line.slope,
        e_switch: line.intercept,
    };
    let rms = (points
        .iter()
        .map(|&(f, e)| (model.p_static / f + model.e_switch - e).powi(2))
        .sum::<f64>()
        / points.len() as f64)
        .sqrt();
    Ok(PowerFit {
        model,
        residual_rms: rms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_solve() {
        // Cramer's rule on [1/30 1; 1/2100 1]·[P; E] = [16 pJ; 1 pJ]
        let (a1, a2) = (1.0 / 30.0, 1.0 / 2100.0);
        let det = a1 - a2;
        let p = (16e-12 - 1e-12) / det;
        let e = (a1 * 1e-12 - a2 * 16e-12) / det;
        let fit = calibrate_power(&[(30.0, 16e-12), (2100.0, 1e-12)]).unwrap();
        assert!((fit.model.p_static / p - 1.0).abs() < 1e-12);
        assert!((fit.model.e_switch / e - 1.0).abs() < 1e-12);
        assert!(fit.residual_rms < 1e-24);
    }

    #[test]
    fn round_trip_known_model() {
        let m = PowerModel {
            p_static: 2e-10,
            e_switch: 3e-13,
        };
        let pts: Vec<_> = [10.0, 100.0, 1000.0]
            .iter()
            .map(|&f| (f, energy_per_spike(&m, f).unwrap()))
            .collect();
        let fit = calibrate_power(&pts).unwrap();
        assert!((fit.model.p_static / m.p_static - 1.0).abs() < 1e-9);
        assert!((fit.model.e_switch / m.e_switch - 1.0).abs() < 1e-9);
    }

    #[test]
    fn errors() {
        assert!(calibrate_power(&[(30.0, 1e-12), (30.0, 2e-12)]).is_err());
        assert!(calibrate_power(&[(30.0, 1e-12)]).is_err());
        let m = PowerModel {
            p_static: 1.0,
            e_switch: 0.0,
        };
        assert!(matches!(energy_per_spike(&m, 0.0), Err(Error::Domain(_))));
        assert!(energy_per_spike(&m, -1.0).is_err());
    }
}
