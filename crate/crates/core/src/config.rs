//! Validated run configuration shared by the simulator, the certifier and the CLI.

use serde::{Deserialize, Serialize};

use crate::bounds::{compute_beta0, Beta0};
use crate::double::{solve_gains, DoubleParams, GainSet};
use crate::error::{Error, Result};
use crate::formation::{check_margins, check_feasible, check_initial, FormationSpec, InitialState, DEFAULT_FEASIBILITY_TOL};
use crate::root::ScanSettings;
use crate::single::SingleParams;
use crate::tension::GUARD_REL;
use crate::Vector;

/// Default spacing of the trace grid.
pub const DEFAULT_SAMPLE_DT: f64 = 0.01;
/// Default speed tolerance for the terminal velocity check.
pub const DEFAULT_SPEED_TOL: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeKind {
    Single,
    Double,
}

impl std::fmt::Display for ModeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModeKind::Single => "single",
            ModeKind::Double => "double",
        })
    }
}

/// Which rate cap to enforce on the threshold decay.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Beta0Choice {
    /// `rho2(D D^T) / Delta0`.
    #[default]
    Exact,
    /// `4 / (n (n - 1) Delta)`, computable without global knowledge.
    Conservative,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub scan: ScanSettings,
    pub guard_rel: f64,
    pub speed_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            scan: ScanSettings::default(),
            guard_rel: GUARD_REL,
            speed_tol: DEFAULT_SPEED_TOL,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleSettings {
    pub alpha: f64,
    pub beta: f64,
    /// Free proof constant in (0, 1); defaults to 1/2.
    pub a: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoubleSettings {
    pub alpha_d: f64,
    pub beta_d: f64,
    /// Defaults to the selected beta0.
    pub beta1: Option<f64>,
    /// Defaults to `2 / (k2 + sqrt(k1^2 + k2^2))`.
    pub k3: Option<f64>,
    /// Free proof constant in (0, k3); defaults to k3 / 2.
    pub b: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModeSettings {
    Single(SingleSettings),
    Double(DoubleSettings),
}

/// Resolved controller parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mode {
    Single { params: SingleParams, a: f64 },
    Double { gains: GainSet, params: DoubleParams, b: f64 },
}

impl Mode {
    pub fn kind(&self) -> ModeKind {
        match self {
            Mode::Single { .. } => ModeKind::Single,
            Mode::Double { .. } => ModeKind::Double,
        }
    }

    pub fn alpha(&self) -> f64 {
        match self {
            Mode::Single { params, .. } => params.alpha,
            Mode::Double { params, .. } => params.alpha_d,
        }
    }

    /// Threshold decay rate (`beta` or `beta_d`).
    pub fn rate(&self) -> f64 {
        match self {
            Mode::Single { params, .. } => params.beta,
            Mode::Double { params, .. } => params.beta_d,
        }
    }

    pub fn threshold(&self, t: f64) -> f64 {
        self.alpha() * (-self.rate() * t).exp()
    }

    pub fn gains(&self) -> Option<&GainSet> {
        match self {
            Mode::Double { gains, .. } => Some(gains),
            Mode::Single { .. } => None,
        }
    }
}

/// A fully validated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub formation: FormationSpec,
    pub initial: InitialState,
    pub mode: Mode,
    pub horizon: f64,
    pub sample_dt: f64,
    pub tolerances: Tolerances,
    pub beta0: Beta0,
    pub beta0_choice: Beta0Choice,
}

impl ScenarioConfig {
    pub fn build(
        formation: FormationSpec,
        mut initial: InitialState,
        settings: ModeSettings,
        beta0_choice: Beta0Choice,
        horizon: f64,
        sample_dt: f64,
        tolerances: Tolerances,
    ) -> Result<Self> {
        let formation = formation.with_guard(tolerances.guard_rel)?;
        tolerances.scan.validate()?;
        if !(tolerances.speed_tol >= 0.0) {
            return Err(Error::Parameter(format!(
                "speed_tol={} must be non-negative",
                tolerances.speed_tol
            )));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::Parameter(format!("horizon={horizon} must be positive")));
        }
        if !(sample_dt > 0.0 && sample_dt <= horizon) {
            return Err(Error::Parameter(format!(
                "sample_dt={sample_dt} must lie in (0, horizon]"
            )));
        }
        if formation.graph().m() == 0 {
            return Err(Error::Parameter("formation needs at least one edge".into()));
        }
        check_feasible(&formation, DEFAULT_FEASIBILITY_TOL)?;
        let margins = check_margins(&formation);
        if let Some(k) = margins.margins.iter().position(|&m| m <= 0.0) {
            let (i, j) = formation.graph().edges()[k];
            return Err(Error::DisplacementTooLong {
                i,
                j,
                norm: formation.displacements()[k].norm(),
                delta: formation.delta(),
            });
        }
        initial.check_dims(formation.n(), formation.dim())?;
        let init = check_initial(&formation, &initial)?;
        if let Some(k) = init.slack.iter().position(|&s| s <= 0.0) {
            let (i, j) = formation.graph().edges()[k];
            return Err(Error::InitialOutsideMargin {
                i,
                j,
                length: init.lengths[k],
                margin: formation.margin(k),
            });
        }
        let beta0 = compute_beta0(&formation)?;
        let cap = match beta0_choice {
            Beta0Choice::Exact => beta0.beta0,
            Beta0Choice::Conservative => beta0.conservative,
        };
        let mode = match settings {
            ModeSettings::Single(s) => {
                if initial.q0.is_some() {
                    return Err(Error::Parameter(
                        "initial velocities given for a single-integrator scenario".into(),
                    ));
                }
                let params = SingleParams::new(s.alpha, s.beta, cap)?;
                let a = s.a.unwrap_or(0.5);
                if !(a > 0.0 && a < 1.0) {
                    return Err(Error::Parameter(format!("a={a} violates 0 < a < 1")));
                }
                Mode::Single { params, a }
            }
            ModeSettings::Double(s) => {
                let beta1 = s.beta1.unwrap_or(cap);
                if !(beta1 > 0.0 && beta1 <= cap) {
                    return Err(Error::Parameter(format!(
                        "beta1={beta1} violates 0 < beta1 <= beta0={cap}"
                    )));
                }
                let mut gains = solve_gains(beta1)?;
                if let Some(k3) = s.k3 {
                    gains = gains.with_k3(k3)?;
                }
                let params = DoubleParams::new(s.alpha_d, s.beta_d, &gains)?;
                let b = s.b.unwrap_or(gains.k3 / 2.0);
                if !(b > 0.0 && b < gains.k3) {
                    return Err(Error::Parameter(format!("b={b} violates 0 < b < k3={}", gains.k3)));
                }
                if initial.q0.is_none() {
                    initial.q0 = Some(vec![Vector::zeros(formation.dim()); formation.n()]);
                }
                Mode::Double { gains, params, b }
            }
        };
        Ok(ScenarioConfig {
            formation,
            initial,
            mode,
            horizon,
            sample_dt,
            tolerances,
            beta0,
            beta0_choice,
        })
    }

    pub fn kind(&self) -> ModeKind {
        self.mode.kind()
    }

    /// The beta0 value actually enforced (exact or conservative).
    pub fn selected_beta0(&self) -> f64 {
        match self.beta0_choice {
            Beta0Choice::Exact => self.beta0.beta0,
            Beta0Choice::Conservative => self.beta0.conservative,
        }
    }

    pub fn n(&self) -> usize {
        self.formation.n()
    }

    pub fn dim(&self) -> usize {
        self.formation.dim()
    }
}
