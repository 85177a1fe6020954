//! JSON configuration for each subcommand. Unknown keys are rejected.

use std::path::Path;

use g2flow::flow::FlowConfig;
use g2flow::identities::{AlgebraicSuiteConfig, FieldSuiteConfig};
use g2flow::linear::{Phi0Table, PHI0_TERMS};
use g2flow::reduction::PotentialMode;
use g2flow::symbol::SearchConfig;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub fn load<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(CliError::Config(msg()))
    }
}

fn check_tolerance(name: &str, t: f64) -> Result<()> {
    check(t > 0.0 && t.is_finite(), || format!("{name} must be positive, got {t}"))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct IdentitiesConfig {
    pub algebraic: AlgebraicSuiteConfig,
    pub field: FieldSuiteConfig,
    /// Signed terms of φ₀ used by the algebraic suite.
    pub phi0_table: Vec<Phi0Table>,
}

impl Default for IdentitiesConfig {
    fn default() -> Self {
        Self {
            algebraic: AlgebraicSuiteConfig::default(),
            field: FieldSuiteConfig::default(),
            phi0_table: PHI0_TERMS.to_vec(),
        }
    }
}

impl IdentitiesConfig {
    pub fn validate(&self) -> Result<()> {
        check(self.algebraic.frames > 0, || {
            "algebraic.frames must be at least 1".into()
        })?;
        check(self.algebraic.spread >= 0.0 && self.algebraic.spread < 1.0, || {
            format!("algebraic.spread must lie in [0, 1), got {}", self.algebraic.spread)
        })?;
        check_tolerance("algebraic.tolerance", self.algebraic.tolerance)?;
        check_tolerance("field.tolerance", self.field.tolerance)?;
        check(self.phi0_table.len() == 7, || {
            format!("phi0Table needs 7 terms, got {}", self.phi0_table.len())
        })?;
        for t in &self.phi0_table {
            check(t.indices.iter().all(|&i| (1..=7).contains(&i)), || {
                format!("phi0Table indices must lie in 1..=7, got {:?}", t.indices)
            })?;
            check(t.sign == 1 || t.sign == -1, || {
                format!("phi0Table sign must be ±1, got {}", t.sign)
            })?;
        }
        Ok(())
    }
}

/// Initial data for a flow run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase", deny_unknown_fields)]
pub enum InitialData {
    /// Constant φ₀ with f = 0.
    Flat { n: usize, dims: Vec<usize> },
    /// Seeded conformally coclosed perturbation of a constant structure.
    #[serde(rename_all = "camelCase")]
    Ccc {
        n: usize,
        dims: Vec<usize>,
        beta_amp: f64,
        f_amp: f64,
    },
    /// Lift of a conformally balanced SU(3) structure on S¹×T⁶.
    #[serde(rename_all = "camelCase")]
    Lift {
        n: usize,
        torus_dims: Vec<usize>,
        modes: Vec<PotentialMode>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct FlowRunConfig {
    pub flow: FlowConfig,
    pub initial: InitialData,
    /// Write a JSON snapshot of φ every this many steps (and at the end).
    pub snapshot_every: Option<usize>,
}

impl Default for FlowRunConfig {
    fn default() -> Self {
        Self {
            flow: FlowConfig {
                t_end: 0.01,
                ..FlowConfig::default()
            },
            initial: InitialData::Flat { n: 8, dims: vec![1] },
            snapshot_every: None,
        }
    }
}

impl FlowRunConfig {
    pub fn validate(&self) -> Result<()> {
        self.flow.validate()?;
        check(self.snapshot_every != Some(0), || {
            "snapshotEvery must be at least 1".into()
        })?;
        if let InitialData::Ccc { beta_amp, f_amp, .. } = self.initial {
            check(beta_amp.is_finite() && f_amp.is_finite(), || {
                "amplitudes must be finite".into()
            })?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct SymbolConfig {
    #[serde(rename = "cValues")]
    pub c_values: Vec<f64>,
    pub search: SearchConfig,
    /// Allowed undershoot of the lower bound 1 − max(C, 0).
    pub tolerance: f64,
}

impl Default for SymbolConfig {
    fn default() -> Self {
        Self {
            c_values: vec![0.0, 0.5, 0.9],
            search: SearchConfig::default(),
            tolerance: 1e-6,
        }
    }
}

impl SymbolConfig {
    pub fn validate(&self) -> Result<()> {
        check(!self.c_values.is_empty(), || "cValues is empty".into())?;
        check(self.c_values.iter().all(|c| c.is_finite()), || {
            "cValues must be finite".into()
        })?;
        check(self.search.restarts > 0 && self.search.steps > 0, || {
            "search.restarts and search.steps must be at least 1".into()
        })?;
        check(self.search.step > 0.0, || "search.step must be positive".into())?;
        check_tolerance("tolerance", self.tolerance)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct ReduceConfig {
    pub n: usize,
    pub torus_dims: Vec<usize>,
    pub modes: Vec<PotentialMode>,
    #[serde(rename = "cValues")]
    pub c_values: Vec<f64>,
    /// Bound on the sup norm of every residual.
    pub tolerance: f64,
}

impl Default for ReduceConfig {
    fn default() -> Self {
        Self {
            n: 16,
            torus_dims: vec![1, 3],
            modes: Vec::new(),
            c_values: vec![0.0, 4.0 / 3.0, 2.0],
            tolerance: 1e-2,
        }
    }
}

impl ReduceConfig {
    pub fn validate(&self) -> Result<()> {
        check(!self.c_values.is_empty(), || "cValues is empty".into())?;
        check(self.c_values.iter().all(|c| c.is_finite()), || {
            "cValues must be finite".into()
        })?;
        check_tolerance("tolerance", self.tolerance)
    }
}
