//! Residual summaries serialized as JSON.

use serde::{Deserialize, Serialize};

use crate::grid::{Field, GridSpec};

/// Norms of a residual field. `l2` is the root mean square of the pointwise
/// norm over grid points, `linf` its maximum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub name: String,
    pub l2: f64,
    pub linf: f64,
    pub grid: GridSpec,
}

impl Residual {
    pub fn from_pointwise(name: impl Into<String>, grid: GridSpec, norms: &[f64]) -> Self {
        let n = norms.len().max(1) as f64;
        let l2 = (norms.iter().map(|x| x * x).sum::<f64>() / n).sqrt();
        let linf = norms.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        Self {
            name: name.into(),
            l2,
            linf,
            grid,
        }
    }

    /// Pointwise norm is the Euclidean norm of the stored components.
    pub fn from_field(name: impl Into<String>, f: &Field) -> Self {
        let norms: Vec<f64> = f.pointwise_norm2().data().iter().map(|x| x.sqrt()).collect();
        Self::from_pointwise(name, *f.grid(), &norms)
    }

    pub fn is_finite(&self) -> bool {
        self.l2.is_finite() && self.linf.is_finite()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub residuals: Vec<Residual>,
}

impl ResidualReport {
    pub fn push(&mut self, r: Residual) {
        self.residuals.push(r);
    }

    pub fn get(&self, name: &str) -> Option<&Residual> {
        self.residuals.iter().find(|r| r.name == name)
    }

    pub fn linf(&self, name: &str) -> f64 {
        self.get(name).map_or(f64::NAN, |r| r.linf)
    }

    pub fn extend(&mut self, other: ResidualReport) {
        self.residuals.extend(other.residuals);
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("residual reports serialize")
    }
}

impl FromIterator<Residual> for ResidualReport {
    fn from_iter<I: IntoIterator<Item = Residual>>(iter: I) -> Self {
        Self {
            residuals: iter.into_iter().collect(),
        }
    }
}

/// Observed convergence order log₂(e_coarse / e_fine) for a halving of h.
pub fn observed_order(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).log2()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Shape;

    #[test]
    fn norms_of_constant_field() {
        let g = GridSpec::new(8, &[0]).unwrap();
        let f = Field::from_fn(g, Shape::Form(1), |_, o| {
            o[0] = 3.0;
            o[1] = 4.0;
        });
        let r = Residual::from_field("c", &f);
        assert!((r.l2 - 5.0).abs() < 1e-14 && (r.linf - 5.0).abs() < 1e-14);
        let rep: ResidualReport = std::iter::once(r).collect();
        let back: ResidualReport = serde_json::from_str(&rep.to_json()).unwrap();
        assert_eq!(back, rep);
    }
}
