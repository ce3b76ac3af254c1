use crate::error::{Error, Result};

/// Localizes an upward threshold crossing of `f` inside `[t_start, t_end]`.
///
/// `f` is re-evaluated at bisection midpoints (the engine re-integrates a
/// single step from the step start for each probe). Bisection stops once the
/// bracket is no wider than `tol`; the returned time is the linear
/// interpolation of the crossing inside that final bracket. When the initial
/// bracket is already no wider than `tol`, `t_end` is returned unchanged.
pub fn locate_crossing(
    mut f: impl FnMut(f64) -> f64,
    t_start: f64,
    t_end: f64,
    threshold: f64,
    tol: f64,
) -> Result<f64> {
    let (mut lo, mut hi) = (t_start, t_end);
    let mut f_lo = f(lo);
    let mut f_hi = f(hi);
    if !(f_lo < threshold && f_hi >= threshold) || !(hi >= lo) {
        return Err(Error::Internal(format!(
            "no bracketed crossing of {threshold:e} on [{t_start:e}, {t_end:e}]: f = ({f_lo:e}, {f_hi:e})"
        )));
    }
    if hi - lo <= tol {
        return Ok(hi);
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm >= threshold {
            hi = mid;
            f_hi = fm;
        } else {
            lo = mid;
            f_lo = fm;
        }
    }
    let frac = ((threshold - f_lo) / (f_hi - f_lo)).clamp(0.0, 1.0);
    Ok(lo + frac * (hi - lo))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_ramp() {
        let t = locate_crossing(|t| 2.0 * t, 0.0, 1.0, 0.7, 1e-9).unwrap();
        assert!((t - 0.35).abs() < 1e-9);
    }

    #[test]
    fn exponential_approach() {
        // 1 - exp(-t/τ) crosses 0.5 at τ·ln 2
        let tau = 3e-3;
        let t = locate_crossing(|t| 1.0 - (-t / tau).exp(), 0.0, 1e-2, 0.5, 1e-9).unwrap();
        assert!((t - tau * std::f64::consts::LN_2).abs() < 1e-9);
    }

    #[test]
    fn degenerate_tolerance_returns_step_end() {
        let t = locate_crossing(|t| t, 0.0, 1e-6, 0.3e-6, 1e-6).unwrap();
        assert_eq!(t, 1e-6);
    }

    #[test]
    fn unbracketed_is_internal_error() {
        let err = locate_crossing(|t| t, 0.0, 1.0, 2.0, 1e-9).unwrap_err();
        assert!(matches!(err, Error::Internal(_)));
    }
}
