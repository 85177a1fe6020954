use serde::{Deserialize, Serialize};

use crate::error::{G2Error, Result};
use crate::grid::{Field, Shape};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Anomaly,
    Coflow,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stepper {
    Rk4,
    Euler,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DilatonMode {
    /// f = ¼ log(vol_φ / vol_R) after every stage.
    Recompute,
    /// f advanced with ∂f = ¼ tr A.
    Integrate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct FlowConfig {
    #[serde(rename = "C")]
    pub c: f64,
    pub dt: f64,
    pub t_end: f64,
    pub variant: Variant,
    pub stepper: Stepper,
    pub dilaton_mode: DilatonMode,
    pub diagnostics_every: usize,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            c: 0.0,
            dt: 1e-3,
            t_end: 0.0,
            variant: Variant::Anomaly,
            stepper: Stepper::Rk4,
            dilaton_mode: DilatonMode::Recompute,
            diagnostics_every: 1,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(G2Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= 0.0) {
            return Err(G2Error::Config(format!("tEnd must be nonnegative, got {}", self.t_end)));
        }
        if !self.c.is_finite() {
            return Err(G2Error::Config("C must be finite".into()));
        }
        if self.diagnostics_every == 0 {
            return Err(G2Error::Config("diagnosticsEvery must be at least 1".into()));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt - 1e-9).ceil().max(0.0) as usize
    }

    /// dt = κh² with κ = 0.1, scaled down when the torsion is large.
    pub fn cfl_dt(h: f64, torsion_scale: f64) -> f64 {
        0.1 * h * h / torsion_scale.max(1.0)
    }
}

#[derive(Clone, Debug)]
pub struct FlowState {
    pub phi: Field,
    pub f: Field,
    pub t: f64,
    pub vol_r: Field,
}

impl FlowState {
    /// State with f from the reference volume.
    pub fn new(phi: Field, vol_r: Field) -> Result<Self> {
        let f = crate::torsion::dilaton(&phi, &vol_r)?;
        Ok(Self { phi, f, t: 0.0, vol_r })
    }

    /// State whose reference volume is chosen so that f is the given field.
    pub fn with_dilaton(phi: Field, f: Field) -> Result<Self> {
        let frames = crate::geometry::frames_of(&phi)?;
        let vol_r = Field::from_fn(*phi.grid(), Shape::Scalar, |p, o| {
            o[0] = frames[p].vol * (-4.0 * f.scalar(p)).exp()
        });
        Ok(Self { phi, f, t: 0.0, vol_r })
    }

    pub fn recompute_dilaton(&mut self) -> Result<()> {
        self.f = crate::torsion::dilaton(&self.phi, &self.vol_r)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_json_roundtrip_and_validation() {
        let c = FlowConfig {
            c: 0.5,
            t_end: 1.0,
            ..FlowConfig::default()
        };
        let s = serde_json::to_string(&c).unwrap();
        assert!(s.contains("\"C\":0.5") && s.contains("\"tEnd\"") && s.contains("\"rk4\""));
        assert_eq!(serde_json::from_str::<FlowConfig>(&s).unwrap(), c);
        assert_eq!(c.steps(), 1000);
        let bad = FlowConfig { dt: 0.0, ..c.clone() };
        assert!(bad.validate().is_err());
        let bad = FlowConfig { t_end: -1.0, ..c };
        assert!(bad.validate().is_err());
    }
}
