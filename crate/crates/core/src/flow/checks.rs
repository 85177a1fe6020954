use serde::{Deserialize, Serialize};

use crate::curvature::h_squared;
use crate::error::{G2Error, Result};
use crate::exact4::{constancy_spread, fixed_point_direct, frame_fixed_point, frame_fixed_point_b};
use crate::geometry::{write_t2, Geometry};
use crate::grid::{Field, Shape};
use crate::linear::{diamond::flat, Tensor2};
use crate::report::{Residual, ResidualReport};
use crate::torsion::kernels::{phi_phi, CccPoint};

use super::config::FlowState;
use super::flux::hc_definition;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FixedPointReport {
    pub residuals: ResidualReport,
    /// Spread of τ₀·exp(3(C − 4/3)f/(2(C − 1))); absent at C = 1.
    pub constancy_spread: Option<f64>,
}

pub fn fixed_point_residuals(geo: &Geometry, c: f64) -> FixedPointReport {
    let d = fixed_point_direct(geo, c);
    let n = geo.npts();
    let tr: Vec<f64> = (0..n).map(|p| d.tr_s.scalar(p).abs()).collect();
    let s7: Vec<f64> = (0..n)
        .map(|p| geo.frames[p].to_frame_covector(&d.s7.vector(p)).norm())
        .collect();
    let s27: Vec<f64> = (0..n)
        .map(|p| geo.frames[p].t2_norm2(&d.s27.tensor2(p)).sqrt())
        .collect();
    let residuals = [("tr_s", tr), ("s7", s7), ("s27", s27)]
        .into_iter()
        .map(|(name, v)| Residual::from_pointwise(name, geo.grid, &v))
        .collect();
    FixedPointReport {
        residuals,
        constancy_spread: constancy_spread(geo, c),
    }
}

/// Closed form of (H_C²)_ia in frame components.
pub fn frame_h2_closed_form(cp: &CccPoint, c: f64) -> Tensor2 {
    let g = Tensor2::identity();
    let k = c - 10.0 / 7.0;
    let t3 = cp.tau3p;
    -cp.df_df()
        + g * cp.df2()
        + g * (147.0 / 8.0 * k * k * cp.tau0 * cp.tau0)
        + phi_phi(&t3, &t3) * 2.0
        + g * (2.0 * cp.tau3_norm2())
        + cp.df_curl_sym() * 2.0
        + t3 * (14.0 * k * cp.tau0)
}

/// e^{2f}[−2Ric − 4∇²f + ½H_C² − (147/16)(C − 4/3)(C − 16/7)τ₀²g
/// − (21/2)(C − 4/3)τ₀τ₃′] in frame components.
pub fn frame_metric_rhs_thm(ric: &Tensor2, h2: &Tensor2, cp: &CccPoint, c: f64, f: f64) -> Tensor2 {
    let k = c - 4.0 / 3.0;
    let inner = ric * -2.0 - cp.hess * 4.0 + h2 * 0.5
        - Tensor2::identity() * (147.0 / 16.0 * k * (c - 16.0 / 7.0) * cp.tau0 * cp.tau0)
        - cp.tau3p * (21.0 / 2.0 * k * cp.tau0);
    inner * (2.0 * f).exp()
}

/// The same right side written out in torsion data only.
pub fn frame_metric_rhs_explicit(cp: &CccPoint, c: f64, f: f64) -> Tensor2 {
    let g = Tensor2::identity();
    let t3 = cp.tau3p;
    let inner = cp.hess + g * cp.lap + cp.curl_sym() + cp.df_df() * 2.0 - g * (2.0 * cp.df2())
        + g * (7.0 * (c - 10.0 / 7.0) * cp.tau0 * cp.tau0)
        + t3 * t3 * 2.0
        + phi_phi(&t3, &t3)
        + g * cp.tau3_norm2()
        + cp.df_curl_sym()
        - t3 * (3.5 * (c - 13.0 / 7.0) * cp.tau0);
    inner * (2.0 * f).exp()
}

/// Right side of the metric evolution as a coordinate field, with Ric from
/// finite differences and H_C² from the definitional flux.
pub fn metric_rhs(geo: &Geometry, c: f64) -> Result<Field> {
    let ric = geo.curvature_fd()?.ricci();
    let h = hc_definition(geo, c)?;
    Ok(Field::from_fn(geo.grid, Shape::Tensor(2), |p, o| {
        let fr = &geo.frames[p];
        let fp = geo.frame_point(p);
        let cp = CccPoint::new(&fp);
        let (h2, _) = h_squared(&fr.to_frame_form(&h.form(p)), &Tensor2::identity());
        let r = frame_metric_rhs_thm(&fr.to_frame_t2(&ric.tensor2(p)), &h2, &cp, c, fp.f);
        write_t2(&fr.from_frame_t2(&r), o);
    }))
}

#[derive(Clone, Debug)]
pub struct MetricSnapshot {
    pub t: f64,
    pub g: Field,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MetricEvolutionReport {
    /// Entries: `dgdt_vs_rhs`, `flow_vs_rhs`, `explicit_vs_rhs`, `h2_closed_form`.
    pub residuals: ResidualReport,
    /// max |frame RHS| for scale.
    pub rhs_scale: f64,
}

/// Compares ∂_t g from equally spaced snapshots (3 or 5, centred on
/// `state`) against the metric evolution formula at `state`.
pub fn metric_evolution_check(snaps: &[MetricSnapshot], state: &FlowState, c: f64) -> Result<MetricEvolutionReport> {
    let dgdt = match snaps.len() {
        3 => {
            let dt = snaps[1].t - snaps[0].t;
            snaps[2].g.sub(&snaps[0].g).scale(0.5 / dt)
        }
        5 => {
            let dt = snaps[1].t - snaps[0].t;
            snaps[0]
                .g
                .axpy(-8.0, &snaps[1].g)
                .axpy(8.0, &snaps[3].g)
                .sub(&snaps[4].g)
                .scale(1.0 / (12.0 * dt))
        }
        n => return Err(G2Error::Config(format!("need 3 or 5 snapshots, got {n}"))),
    };
    let geo = Geometry::with_dilaton(&state.phi, &state.f)?;
    let rhs = metric_rhs(&geo, c)?;
    let n = geo.npts();
    let rows: Vec<[f64; 5]> = crate::exec::map_indices(n, |p| {
        let fr = &geo.frames[p];
        let fp = geo.frame_point(p);
        let cp = CccPoint::new(&fp);
        let r = fr.to_frame_t2(&rhs.tensor2(p));
        let (tr_s, _, s27) = frame_fixed_point(&cp, c);
        let flow = (Tensor2::identity() * (16.0 / 7.0 * tr_s) + s27 * 2.0) * (2.0 * fp.f).exp();
        let explicit = frame_metric_rhs_explicit(&cp, c, fp.f);
        let hb = flat::diamond_phi(&frame_fixed_point_b(&cp, c)) * -1.0;
        let h2_brute = h_squared(&hb, &Tensor2::identity()).0;
        [
            (fr.to_frame_t2(&dgdt.tensor2(p)) - r).norm(),
            (flow - r).norm(),
            (explicit - r).norm(),
            (frame_h2_closed_form(&cp, c) - h2_brute).norm(),
            r.norm(),
        ]
    });
    let names = ["dgdt_vs_rhs", "flow_vs_rhs", "explicit_vs_rhs", "h2_closed_form"];
    let residuals = names
        .iter()
        .enumerate()
        .map(|(k, name)| {
            let v: Vec<f64> = rows.iter().map(|r| r[k]).collect();
            Residual::from_pointwise(*name, geo.grid, &v)
        })
        .collect();
    Ok(MetricEvolutionReport {
        residuals,
        rhs_scale: rows.iter().map(|r| r[4]).fold(0.0, f64::max),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{rng_from_seed, CoclosedGenerator};
    use crate::grid::GridSpec;

    fn ccc_geo(n: usize, seed: u64) -> Geometry {
        let grid = GridSpec::new(n, &[1, 4]).unwrap();
        let mut rng = rng_from_seed(seed);
        let s = CoclosedGenerator::random(&grid, 0.15, 0.2, &mut rng)
            .sample(grid)
            .unwrap();
        Geometry::from_reference_volume(&s.phi, &s.vol_r).unwrap()
    }

    #[test]
    fn h2_closed_form_is_exact() {
        let geo = ccc_geo(8, 2);
        for c in [0.0, 0.5, 4.0 / 3.0, 2.0] {
            for p in 0..geo.npts() {
                let cp = CccPoint::new(&geo.frame_point(p));
                let hb = flat::diamond_phi(&frame_fixed_point_b(&cp, c)) * -1.0;
                let brute = h_squared(&hb, &Tensor2::identity()).0;
                let d = (frame_h2_closed_form(&cp, c) - brute).norm();
                assert!(d < 1e-11 * (1.0 + brute.norm()), "{d}");
            }
        }
    }

    #[test]
    fn explicit_and_flow_forms_match_theorem_rhs() {
        for c in [0.0, 4.0 / 3.0] {
            let mut errs = Vec::new();
            for n in [16, 32] {
                let geo = ccc_geo(n, 12);
                let st = FlowState::with_dilaton(geo.phi.clone(), geo.f.clone()).unwrap();
                let snaps: Vec<MetricSnapshot> = (0..3)
                    .map(|k| MetricSnapshot {
                        t: k as f64,
                        g: geo.g.clone(),
                    })
                    .collect();
                let rep = metric_evolution_check(&snaps, &st, c).unwrap();
                errs.push((rep.residuals.linf("flow_vs_rhs"), rep.residuals.linf("explicit_vs_rhs")));
                assert!(rep.residuals.linf("h2_closed_form") < 1e-11);
            }
            assert!(errs[0].0 / errs[1].0 > 10.0, "C={c} {errs:?}");
            assert!(errs[0].1 / errs[1].1 > 10.0, "C={c} {errs:?}");
            assert!(errs[1].0 < 5e-3 && errs[1].1 < 5e-3, "C={c} {errs:?}");
        }
    }

    #[test]
    fn fixed_point_report_on_flat() {
        let grid = GridSpec::new(8, &[0, 1]).unwrap();
        let phi = Field::constant_form(grid, &crate::linear::standard_phi());
        let geo = Geometry::from_reference_volume(&phi, &Field::constant_scalar(grid, 1.0)).unwrap();
        let rep = fixed_point_residuals(&geo, 0.0);
        for r in &rep.residuals.residuals {
            assert!(r.linf < 1e-14);
        }
        assert!(rep.constancy_spread.unwrap() < 1e-14);
        assert!(fixed_point_residuals(&geo, 1.0).constancy_spread.is_none());
    }
}
