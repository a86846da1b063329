//! First upward crossing of a scalar trigger function.

use crate::error::{Error, Result};

/// Forward scan step.
pub const DEFAULT_H_SCAN: f64 = 1e-3;
/// Width of the final bisection bracket.
pub const DEFAULT_TOL_ROOT: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanSettings {
    pub h_scan: f64,
    pub tol_root: f64,
}

impl Default for ScanSettings {
    fn default() -> Self {
        ScanSettings {
            h_scan: DEFAULT_H_SCAN,
            tol_root: DEFAULT_TOL_ROOT,
        }
    }
}

impl ScanSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.h_scan > 0.0 && self.h_scan.is_finite()) {
            return Err(Error::Parameter(format!("h_scan must be positive, got {}", self.h_scan)));
        }
        if !(self.tol_root > 0.0 && self.tol_root < self.h_scan) {
            return Err(Error::Parameter(format!(
                "tol_root must lie in (0, h_scan), got {}",
                self.tol_root
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Crossing {
    /// Upper end of the final bracket; `phi` is non-negative there.
    At(f64),
    /// `phi` stays negative up to the horizon.
    Beyond,
}

impl Crossing {
    pub fn time(self) -> Option<f64> {
        match self {
            Crossing::At(t) => Some(t),
            Crossing::Beyond => None,
        }
    }
}

/// Smallest `t` in `[start, horizon]` with `phi(t) >= 0`, to within `tol_root`.
///
/// The returned time satisfies `0 <= phi(t) <= tol_root` unless the bracket
/// shrinks to adjacent floats first, so steep crossings are bisected past the
/// time tolerance.
/// Scans forward in steps of `h_scan` until the sign flips, then bisects. If
/// `phi(start)` is already non-negative, `start` itself is returned.
pub fn first_crossing<F>(mut phi: F, start: f64, horizon: f64, settings: &ScanSettings) -> Result<Crossing>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut eval = |t: f64| -> Result<f64> {
        let v = phi(t)?;
        if v.is_nan() {
            return Err(Error::RootFinding {
                lo: t,
                hi: t,
                reason: "trigger function is NaN".into(),
            });
        }
        Ok(v)
    };
    if eval(start)? >= 0.0 {
        return Ok(Crossing::At(start));
    }
    if start >= horizon {
        return Ok(Crossing::Beyond);
    }
    let mut lo = start;
    let mut step = 1u64;
    loop {
        let hi = (start + step as f64 * settings.h_scan).min(horizon);
        if eval(hi)? >= 0.0 {
            return bisect(&mut eval, lo, hi, settings.tol_root).map(Crossing::At);
        }
        if hi >= horizon {
            return Ok(Crossing::Beyond);
        }
        lo = hi;
        step += 1;
    }
}

fn bisect<F>(eval: &mut F, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    // invariant: eval(lo) < 0 <= eval(hi)
    let mut at_hi = f64::INFINITY;
    for _ in 0..400 {
        if hi - lo <= tol && at_hi <= tol {
            return Ok(hi);
        }
        let mid = lo + 0.5 * (hi - lo);
        if mid <= lo || mid >= hi {
            return Ok(hi);
        }
        let v = eval(mid)?;
        if v >= 0.0 {
            hi = mid;
            at_hi = v;
        } else {
            lo = mid;
        }
    }
    Err(Error::RootFinding {
        lo,
        hi,
        reason: "bisection did not converge".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_crossing() {
        let s = ScanSettings::default();
        let c = first_crossing(|t| Ok(t - 0.123456789), 0.0, 1.0, &s).unwrap();
        let t = c.time().unwrap();
        assert!(t >= 0.123456789 && t - 0.123456789 <= 1e-9);
    }

    #[test]
    fn steep_crossing_meets_value_tolerance() {
        let s = ScanSettings::default();
        let slope = 1e8;
        let t = first_crossing(|t| Ok(slope * (t - 3e-4)), 0.0, 1.0, &s).unwrap().time().unwrap();
        let v = slope * (t - 3e-4);
        assert!((0.0..=1e-9).contains(&v), "{v}");
    }

    #[test]
    fn no_crossing_before_horizon() {
        let s = ScanSettings::default();
        assert_eq!(first_crossing(|_| Ok(-1.0), 0.0, 0.5, &s).unwrap(), Crossing::Beyond);
    }

    #[test]
    fn already_crossed() {
        let s = ScanSettings::default();
        assert_eq!(first_crossing(|_| Ok(0.0), 2.0, 3.0, &s).unwrap(), Crossing::At(2.0));
    }

    #[test]
    fn picks_first_of_two_crossings() {
        let s = ScanSettings::default();
        // negative outside (0.3, 0.6) and (0.8, 0.9)
        let phi = |t: f64| Ok(-(t - 0.3) * (t - 0.6) * (t - 0.8) * (t - 0.9));
        let t = first_crossing(phi, 0.0, 1.0, &s).unwrap().time().unwrap();
        assert!((t - 0.3).abs() <= 1e-9);
    }

    #[test]
    fn crossing_at_horizon_edge() {
        let s = ScanSettings::default();
        let t = first_crossing(|t| Ok(t - 0.99999), 0.0, 0.99999, &s).unwrap();
        assert_eq!(t, Crossing::At(0.99999));
    }

    #[test]
    fn nan_is_an_error() {
        let s = ScanSettings::default();
        assert!(matches!(
            first_crossing(|t| Ok(if t > 0.1 { f64::NAN } else { -1.0 }), 0.0, 1.0, &s),
            Err(Error::RootFinding { .. })
        ));
    }

    #[test]
    fn settings_validation() {
        assert!(ScanSettings::default().validate().is_ok());
        assert!(ScanSettings { h_scan: 0.0, tol_root: 1e-9 }.validate().is_err());
        assert!(ScanSettings { h_scan: 1e-3, tol_root: 1e-2 }.validate().is_err());
    }
}
