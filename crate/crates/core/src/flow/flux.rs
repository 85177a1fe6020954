use crate::error::{G2Error, Result};
use crate::exact4::frame_fixed_point_b;
use crate::geometry::Geometry;
use crate::grid::{codifferential, exterior_d, Field, Shape};
use crate::linear::diamond::flat;
use crate::linear::Tensor2;
use crate::report::Residual;
use crate::torsion::kernels::{self, CccPoint};

use super::config::{FlowConfig, FlowState, Variant};

/// H_C = −e^{2f}d*(e^{−2f}ψ) − (C − 2)(tr T)φ.
pub fn hc_definition(geo: &Geometry, c: f64) -> Result<Field> {
    let weighted = geo.psi.mul_scalar_field(&geo.f.map(|x| (-2.0 * x).exp()));
    let co = codifferential(&weighted, &geo.g)?;
    Ok(Field::from_fn(geo.grid, Shape::Form(3), |p, o| {
        let fr = &geo.frames[p];
        let tr = fr.trace(&geo.torsion.tensor2(p));
        let e2f = (2.0 * geo.f.scalar(p)).exp();
        let h = co.form(p) * -e2f - fr.phi * (c - 2.0) * tr;
        o.copy_from_slice(h.coeffs());
    }))
}

/// −[(7/12)(C − 10/7)τ₀g + τ₃′ − (1/6)(∇f)⌟φ]⋄φ from torsion data.
pub fn hc_torsion_forms(geo: &Geometry, c: f64) -> Field {
    Field::from_fn(geo.grid, Shape::Form(3), |p, o| {
        let fr = &geo.frames[p];
        let b = frame_fixed_point_b(&CccPoint::new(&geo.frame_point(p)), c);
        o.copy_from_slice(fr.from_frame_form(&(flat::diamond_phi(&b) * -1.0)).coeffs());
    })
}

/// Skew torsion (1/6)τ₀φ − τ₃ − τ₁⌟ψ with τ₁ = ½df.
pub fn skew_torsion_h(geo: &Geometry) -> Field {
    Field::from_fn(geo.grid, Shape::Form(3), |p, o| {
        let fr = &geo.frames[p];
        let fp = geo.frame_point(p);
        let tau3 = flat::diamond_phi(&kernels::tau3p(&fp.t));
        let h = crate::linear::standard_phi() * (kernels::tau0(&fp.t) / 6.0)
            - tau3
            - crate::linear::standard_psi().interior(&(fp.df * 0.5));
        o.copy_from_slice(fr.from_frame_form(&h).coeffs());
    })
}

#[derive(Clone, Debug)]
pub struct HcResult {
    pub h: Field,
    /// Definition against the torsion-form expression.
    pub deviation: Residual,
}

pub fn compute_hc(geo: &Geometry, c: f64) -> Result<HcResult> {
    let h = hc_definition(geo, c)?;
    let alt = hc_torsion_forms(geo, c);
    let diff = h.sub(&alt);
    let norms: Vec<f64> = (0..geo.npts())
        .map(|p| geo.frames[p].form_norm2(&diff.form(p)).sqrt())
        .collect();
    Ok(HcResult {
        h,
        deviation: Residual::from_pointwise("hc_two_ways", geo.grid, &norms),
    })
}

/// (∂φ, ∂f) for the configured variant.
pub fn flow_rhs(state: &FlowState, config: &FlowConfig) -> Result<(Field, Field)> {
    let (dphi, df, _) = rhs_with_geometry(state, config)?;
    Ok((dphi, df))
}

pub(crate) fn rhs_with_geometry(state: &FlowState, config: &FlowConfig) -> Result<(Field, Field, Geometry)> {
    let geo = match config.variant {
        Variant::Anomaly => Geometry::with_dilaton(&state.phi, &state.f)?,
        Variant::Coflow => Geometry::with_dilaton(&state.phi, &Field::zeros(*state.phi.grid(), Shape::Scalar))?,
    };
    let h = hc_definition(&geo, config.c)?;
    let eta = exterior_d(&h)?.scale(-1.0);
    if !eta.is_finite() {
        return Err(G2Error::NumericalBlowup(format!("non-finite dH_C at t = {}", state.t)));
    }
    let grid = geo.grid;
    let mut df = Field::zeros(grid, Shape::Scalar);
    let parts: Vec<(Tensor2, f64)> = crate::exec::map_indices(geo.npts(), |p| {
        let fr = &geo.frames[p];
        let w = match config.variant {
            Variant::Anomaly => (2.0 * geo.f.scalar(p)).exp(),
            Variant::Coflow => 1.0,
        };
        let q = flat::project4(&fr.to_frame_form(&(eta.form(p) * w)));
        let a = match config.variant {
            Variant::Anomaly => Tensor2::identity() * (8.0 / 7.0 * q.tr_s) + flat::hook_phi(&q.s7) + q.s27,
            Variant::Coflow => q.s,
        };
        (a, 0.25 * a.trace())
    });
    let dphi = Field::from_fn(grid, Shape::Form(3), |p, o| {
        let a = flat::diamond_phi(&parts[p].0);
        o.copy_from_slice(geo.frames[p].from_frame_form(&a).coeffs());
    });
    for (p, x) in df.data_mut().iter_mut().enumerate() {
        *x = parts[p].1;
    }
    Ok((dphi, df, geo))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{rng_from_seed, CoclosedGenerator};
    use crate::grid::GridSpec;
    use crate::linear::standard_phi;

    fn ccc_geo(n: usize, seed: u64) -> Geometry {
        let grid = GridSpec::new(n, &[1, 4]).unwrap();
        let mut rng = rng_from_seed(seed);
        let s = CoclosedGenerator::random(&grid, 0.15, 0.2, &mut rng)
            .sample(grid)
            .unwrap();
        Geometry::from_reference_volume(&s.phi, &s.vol_r).unwrap()
    }

    #[test]
    fn flat_flux_and_rhs_vanish() {
        let grid = GridSpec::new(8, &[0, 1]).unwrap();
        let phi = Field::constant_form(grid, &standard_phi());
        let st = FlowState::new(phi, Field::constant_scalar(grid, 1.0)).unwrap();
        for variant in [Variant::Anomaly, Variant::Coflow] {
            let cfg = FlowConfig {
                variant,
                ..FlowConfig::default()
            };
            let (a, b) = flow_rhs(&st, &cfg).unwrap();
            assert!(a.max_abs() < 1e-14 && b.max_abs() < 1e-14);
        }
    }

    #[test]
    fn hc_two_ways_agree() {
        for c in [0.0, 4.0 / 3.0, 2.0] {
            let e1 = compute_hc(&ccc_geo(16, 4), c).unwrap().deviation.linf;
            let e2 = compute_hc(&ccc_geo(32, 4), c).unwrap().deviation.linf;
            assert!(e2 < 2e-3 && e1 / e2 > 10.0, "C={c}: {e1} {e2}");
        }
    }

    #[test]
    fn hc_at_four_thirds_is_skew_torsion() {
        let geo = ccc_geo(24, 6);
        let a = hc_torsion_forms(&geo, 4.0 / 3.0);
        let b = skew_torsion_h(&geo);
        assert!(a.sub(&b).max_abs() < 1e-12);
    }
}
