//! TOML scenario files.
//!
//! ```toml
//! format_version = 1
//! mode = "single"          # or "double"
//! beta0 = "exact"          # or "conservative"
//!
//! [formation]
//! p = 2
//! delta = 4.0
//! edges = [[1, 2], [1, 3], [2, 3]]   # 1-based
//! d = [[0, -2], [-2, 0], [-2, 2]]    # d_ij per edge, from i to j as listed
//!
//! [initial]
//! x0 = [[2, 4], [3.5, 7], [4.5, 5.5]]
//!
//! [single]
//! alpha = 10.0
//! beta = 1.0
//!
//! [run]
//! horizon = 20.0
//! ```

use std::path::Path;

use serde::Deserialize;

use crate::config::{Beta0Choice, DoubleSettings, ModeKind, ModeSettings, ScenarioConfig, SingleSettings, Tolerances, DEFAULT_SAMPLE_DT};
use crate::error::{Error, Result};
use crate::formation::{FormationSpec, InitialState};
use crate::graph::Graph;
use crate::root::ScanSettings;
use crate::Vector;

pub const FORMAT_VERSION: u32 = 1;
pub const DEFAULT_HORIZON: f64 = 20.0;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub format_version: u32,
    pub mode: ModeKind,
    #[serde(default)]
    pub beta0: Beta0Choice,
    pub formation: FormationSection,
    pub initial: InitialSection,
    pub single: Option<SingleSection>,
    pub double: Option<DoubleSection>,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub tolerances: ToleranceSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormationSection {
    pub p: usize,
    pub delta: f64,
    pub edges: Vec<[usize; 2]>,
    pub d: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    pub x0: Vec<Vec<f64>>,
    pub q0: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SingleSection {
    pub alpha: f64,
    pub beta: f64,
    pub a: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DoubleSection {
    pub alpha_d: f64,
    pub beta_d: f64,
    pub beta1: Option<f64>,
    pub k3: Option<f64>,
    pub b: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub horizon: f64,
    pub sample_dt: f64,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            horizon: DEFAULT_HORIZON,
            sample_dt: DEFAULT_SAMPLE_DT,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToleranceSection {
    pub h_scan: f64,
    pub tol_root: f64,
    pub guard_rel: f64,
    pub speed_tol: f64,
}

impl Default for ToleranceSection {
    fn default() -> Self {
        let t = Tolerances::default();
        ToleranceSection {
            h_scan: t.scan.h_scan,
            tol_root: t.scan.tol_root,
            guard_rel: t.guard_rel,
            speed_tol: t.speed_tol,
        }
    }
}

fn vectors(rows: &[Vec<f64>]) -> Vec<Vector> {
    rows.iter().map(|r| Vector::from_column_slice(r)).collect()
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Scenario(e.to_string()))
    }

    /// Validates every field and resolves defaults. Indices in error
    /// messages are 1-based.
    pub fn into_config(self) -> Result<ScenarioConfig> {
        self.build().map_err(Error::one_based)
    }

    fn build(self) -> Result<ScenarioConfig> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::Scenario(format!(
                "unsupported format_version {} (expected {FORMAT_VERSION})",
                self.format_version
            )));
        }
        let f = &self.formation;
        let n = self.initial.x0.len();
        if n == 0 {
            return Err(Error::Scenario("initial.x0 lists no agents".into()));
        }
        if f.d.len() != f.edges.len() {
            return Err(Error::Scenario(format!(
                "formation.d has {} entries for {} edges",
                f.d.len(),
                f.edges.len()
            )));
        }
        let mut edges = Vec::with_capacity(f.edges.len());
        let mut d = Vec::with_capacity(f.edges.len());
        for (&[a, b], dv) in f.edges.iter().zip(&f.d) {
            if a == 0 || b == 0 {
                return Err(Error::Scenario(format!("edge [{a}, {b}]: node indices start at 1")));
            }
            let v = Vector::from_column_slice(dv);
            if a <= b {
                edges.push((a - 1, b - 1));
                d.push(v);
            } else {
                edges.push((b - 1, a - 1));
                d.push(-v);
            }
        }
        let graph = Graph::new(n, &edges)?;
        let formation = FormationSpec::new(graph, f.p, d, f.delta)?;

        let initial = InitialState {
            x0: vectors(&self.initial.x0),
            q0: self.initial.q0.as_deref().map(vectors),
        };
        let settings = match self.mode {
            ModeKind::Single => {
                if self.double.is_some() {
                    return Err(Error::Scenario("[double] section given for mode = \"single\"".into()));
                }
                let s = self
                    .single
                    .ok_or_else(|| Error::Scenario("mode = \"single\" needs a [single] section".into()))?;
                ModeSettings::Single(SingleSettings {
                    alpha: s.alpha,
                    beta: s.beta,
                    a: s.a,
                })
            }
            ModeKind::Double => {
                if self.single.is_some() {
                    return Err(Error::Scenario("[single] section given for mode = \"double\"".into()));
                }
                let s = self
                    .double
                    .ok_or_else(|| Error::Scenario("mode = \"double\" needs a [double] section".into()))?;
                ModeSettings::Double(DoubleSettings {
                    alpha_d: s.alpha_d,
                    beta_d: s.beta_d,
                    beta1: s.beta1,
                    k3: s.k3,
                    b: s.b,
                })
            }
        };
        let tol = Tolerances {
            scan: ScanSettings {
                h_scan: self.tolerances.h_scan,
                tol_root: self.tolerances.tol_root,
            },
            guard_rel: self.tolerances.guard_rel,
            speed_tol: self.tolerances.speed_tol,
        };
        ScenarioConfig::build(
            formation,
            initial,
            settings,
            self.beta0,
            self.run.horizon,
            self.run.sample_dt,
            tol,
        )
    }
}

/// Parses and validates scenario text.
pub fn parse_scenario(text: &str) -> Result<ScenarioConfig> {
    ScenarioFile::parse(text)?.into_config()
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<ScenarioConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_scenario(&text)
}
