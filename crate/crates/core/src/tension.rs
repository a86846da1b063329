//! Edge-tension potential and its companion shape functions.
//!
//! All functions take the edge length `l = |y_i - y_j|` and the edge's pole
//! `rho = delta - |d_ij|`. They are finite and increasing on `[0, rho)` and blow
//! up at `rho`.

use crate::error::{Error, Result};
use crate::formation::FormationSpec;
use crate::Vector;

/// Evaluations closer than `GUARD_REL * rho` to the pole are rejected.
pub const GUARD_REL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TensionParams {
    rho: f64,
    guard_rel: f64,
}

impl TensionParams {
    pub fn new(rho: f64) -> Result<Self> {
        Self::with_guard(rho, GUARD_REL)
    }

    pub fn with_guard(rho: f64, guard_rel: f64) -> Result<Self> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::Parameter(format!(
                "tension pole must be positive and finite, got {rho}"
            )));
        }
        Ok(TensionParams { rho, guard_rel })
    }

    /// Pole for edge `k` of a formation.
    pub fn for_edge(spec: &FormationSpec, k: usize) -> Result<Self> {
        Self::with_guard(spec.margin(k), spec.guard_rel())
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Distance to the pole, after the margin guard.
    fn gap(&self, l: f64) -> Result<f64> {
        let guard = self.guard_rel * self.rho;
        if !(l >= 0.0) || l >= self.rho - guard {
            return Err(Error::MarginViolation {
                length: l,
                rho: self.rho,
                guard,
            });
        }
        Ok(self.rho - l)
    }

    /// `l^2 / (rho - l)`.
    pub fn nu(&self, l: f64) -> Result<f64> {
        let gap = self.gap(l)?;
        Ok(l * l / gap)
    }

    /// `(2 rho - l) / (rho - l)^2`, the weight multiplying `y_i - y_j` in the
    /// gradient of `nu`.
    pub fn omega(&self, l: f64) -> Result<f64> {
        let gap = self.gap(l)?;
        Ok((2.0 * self.rho - l) / (gap * gap))
    }

    /// `2 rho^2 / (rho - l)^3`.
    pub fn g_bound(&self, l: f64) -> Result<f64> {
        let gap = self.gap(l)?;
        Ok(2.0 * self.rho * self.rho / (gap * gap * gap))
    }

    /// `(3 rho - l) / (rho - l)^3`.
    pub fn h_bound(&self, l: f64) -> Result<f64> {
        let gap = self.gap(l)?;
        Ok((3.0 * self.rho - l) / (gap * gap * gap))
    }
}

/// Sum of `nu_ij` over edges, with `y` any point satisfying
/// `y_i - y_j = x_i - x_j - d_ij`.
pub fn total_tension(spec: &FormationSpec, y: &[Vector]) -> Result<f64> {
    spec.graph()
        .edges()
        .iter()
        .enumerate()
        .try_fold(0.0, |acc, (k, &(i, j))| {
            let l = (&y[i] - &y[j]).norm();
            Ok(acc + TensionParams::for_edge(spec, k)?.nu(l)?)
        })
}

/// Same quantity evaluated directly on positions.
pub fn total_tension_at(spec: &FormationSpec, x: &[Vector]) -> Result<f64> {
    (0..spec.graph().m()).try_fold(0.0, |acc, k| {
        let l = spec.edge_deviation(k, x).norm();
        Ok(acc + TensionParams::for_edge(spec, k)?.nu(l)?)
    })
}

/// `k1 * nu + 0.5 * sum |q_i|^2`.
pub fn total_tension_double(spec: &FormationSpec, y: &[Vector], q: &[Vector], k1: f64) -> Result<f64> {
    let kinetic: f64 = q.iter().map(|qi| qi.norm_squared()).sum::<f64>() * 0.5;
    Ok(k1 * total_tension(spec, y)? + kinetic)
}
