//! Ricci and scalar curvature from torsion, the generalized Ricci soliton
//! residual and the heterotic system residuals.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::{write_t2, FramePoint, Geometry};
use crate::grid::{christoffel, codifferential, exterior_d, hessian, ricci_fd, Field, Shape};
use crate::linear::{diamond::flat, AltForm, Tensor2};
use crate::report::{Residual, ResidualReport};
use crate::torsion::kernels::CccPoint;

/// Symmetric Ricci formula from T and ∇T, valid for any G2-structure.
pub fn frame_ricci_general(fp: &FramePoint) -> Tensor2 {
    let t = &fp.t;
    let mut c = Tensor2::zeros();
    let mut e = Tensor2::zeros();
    for &([p, q, a], s) in crate::linear::phi0_entries() {
        for i in 0..7 {
            c[(i, a)] += s * fp.dt(p, i, q);
            e[(i, a)] += s * fp.dt(i, p, q);
        }
    }
    let t2 = t * t;
    let w = t * flat::psi_contract(t).transpose();
    let sym = |m: Tensor2| m + m.transpose();
    (sym(c) - sym(e) - sym(t2) + sym(*t) * t.trace() + sym(w)) * 0.5
}

/// Ricci tensor of a conformally coclosed structure from τ₀, τ₃′ and f.
pub fn frame_ricci_ccc(c: &CccPoint) -> Tensor2 {
    let g = Tensor2::identity();
    c.curl_sym() * -0.5 - c.hess * 2.5 - g * (0.5 * c.lap) + g * (0.375 * c.tau0 * c.tau0)
        - c.tau3p * (1.25 * c.tau0)
        - c.tau3p * c.tau3p
        - c.df_df() * 1.25
        + g * (1.25 * c.df2())
}

pub fn frame_scalar_ccc(c: &CccPoint) -> f64 {
    -6.0 * c.lap + 21.0 / 8.0 * c.tau0 * c.tau0 - c.tau3_norm2() + 7.5 * c.df2()
}

pub fn ricci_general(geo: &Geometry) -> Field {
    geo.tensor_field(|_, fp| frame_ricci_general(fp))
}

pub fn ricci_ccc(geo: &Geometry) -> Field {
    geo.tensor_field(|_, fp| frame_ricci_ccc(&CccPoint::new(fp)))
}

pub fn scalar_ccc(geo: &Geometry) -> Field {
    geo.scalar_field(|_, fp| frame_scalar_ccc(&CccPoint::new(fp)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RicciFormula {
    General,
    ConformallyCoclosed,
}

#[derive(Clone, Debug)]
pub struct CurvatureReport {
    pub ric: Field,
    pub scal: Field,
    pub oracle_ric: Field,
    /// Max over points of the frame norm of ric − oracle_ric.
    pub max_deviation: f64,
}

pub fn curvature_report(geo: &Geometry, formula: RicciFormula) -> Result<CurvatureReport> {
    let ric = match formula {
        RicciFormula::General => ricci_general(geo),
        RicciFormula::ConformallyCoclosed => ricci_ccc(geo),
    };
    let oracle_ric = ricci_fd(&geo.g)?;
    let scal = Field::from_fn(geo.grid, Shape::Scalar, |p, o| {
        o[0] = geo.frames[p].trace(&ric.tensor2(p));
    });
    let max_deviation = geo.t2_max_norm(&ric.sub(&oracle_ric));
    Ok(CurvatureReport {
        ric,
        scal,
        oracle_ric,
        max_deviation,
    })
}

/// (H²)_ij = H_imn H_j^mn and ‖H‖² = H_imn H^imn in a metric g.
pub fn h_squared(h: &AltForm, ginv: &Tensor2) -> (Tensor2, f64) {
    let hd = h.to_dense();
    let mut raised = vec![0.0; 343];
    // H_i^{mn}
    for i in 0..7 {
        for m in 0..7 {
            for n in 0..7 {
                let mut acc = 0.0;
                for a in 0..7 {
                    for b in 0..7 {
                        acc += ginv[(m, a)] * ginv[(n, b)] * hd[i * 49 + a * 7 + b];
                    }
                }
                raised[i * 49 + m * 7 + n] = acc;
            }
        }
    }
    let h2 = Tensor2::from_fn(|i, j| (0..49).map(|c| hd[i * 49 + c] * raised[j * 49 + c]).sum());
    let n2 = (ginv * h2).trace();
    (h2, n2)
}

#[derive(Clone, Debug)]
pub struct SolitonResidual {
    /// −2Ric − 4Hess f + ½H².
    pub einstein: Field,
    pub h_closed: Field,
    /// d*(e^{−2f}H).
    pub h_divergence: Field,
    /// R + 4Δf − 4|∇f|² − ‖H‖²/12.
    pub dilaton_eq: Field,
}

impl SolitonResidual {
    pub fn summary(&self) -> ResidualReport {
        [
            Residual::from_field("einstein", &self.einstein),
            Residual::from_field("h_closed", &self.h_closed),
            Residual::from_field("h_divergence", &self.h_divergence),
            Residual::from_field("dilaton_eq", &self.dilaton_eq),
        ]
        .into_iter()
        .collect()
    }
}

pub fn soliton_residual(g: &Field, h: &Field, f: &Field) -> Result<SolitonResidual> {
    let grid = *g.grid();
    let gamma = christoffel(g)?;
    let ric = ricci_fd(g)?;
    let hess = hessian(f, &gamma);
    let df = crate::grid::gradient(f);
    let ginv: Vec<Tensor2> = (0..grid.npts())
        .map(|p| g.tensor2(p).try_inverse().unwrap_or_else(Tensor2::zeros))
        .collect();
    let hs: Vec<(Tensor2, f64)> = (0..grid.npts()).map(|p| h_squared(&h.form(p), &ginv[p])).collect();
    let einstein = Field::from_fn(grid, Shape::Tensor(2), |p, o| {
        let e = ric.tensor2(p) * -2.0 - hess.tensor2(p) * 4.0 + hs[p].0 * 0.5;
        write_t2(&e, o);
    });
    let weighted = h.mul_scalar_field(&f.map(|x| (-2.0 * x).exp()));
    let h_divergence = codifferential(&weighted, g)?;
    let h_closed = exterior_d(h)?;
    let dilaton_eq = Field::from_fn(grid, Shape::Scalar, |p, o| {
        let gi = &ginv[p];
        let r = (gi * ric.tensor2(p)).trace();
        let lap = (gi * hess.tensor2(p)).trace();
        let d = df.vector(p);
        o[0] = r + 4.0 * lap - 4.0 * d.dot(&(gi * d)) - hs[p].1 / 12.0;
    });
    Ok(SolitonResidual {
        einstein,
        h_closed,
        h_divergence,
        dilaton_eq,
    })
}

/// Closed-form ‖H‖² = 6|∇f|² + (7/6)τ₀² + 12|τ₃′|² at C = 4/3.
pub fn frame_h_norm2_formula(c: &CccPoint) -> f64 {
    6.0 * c.df2() + 7.0 / 6.0 * c.tau0 * c.tau0 + 12.0 * c.tau3_norm2()
}

/// Heterotic residuals at C = 4/3 on a conformally coclosed field.
///
/// Entries: `norm_h` (‖H‖² against its closed form), `einstein`
/// (Ric + 2∇²f − ¼H²), `trace_consistency` (g-trace of the einstein
/// residual against R + 2Δf − ¼‖H‖² from independent sources),
/// `trace_offshell` (R + 2Δf − ¼‖H‖² + 8 tr S), `trace_literal`
/// (R + 2Δf − ¼‖H‖²), `h_eom`, `h_closed` and `dilaton`
/// (R + 4Δf − 4|∇f|² − ‖H‖²/12 − (7τ₀/6)²).
pub fn heterotic_residuals(geo: &Geometry) -> Result<ResidualReport> {
    let c = 4.0 / 3.0;
    let grid = geo.grid;
    let h = crate::flow::hc_definition(geo, c)?;
    let sol = soliton_residual(&geo.g, &h, &geo.f)?;
    let ric_fd = ricci_fd(&geo.g)?;
    let n = geo.npts();
    let mut rows: Vec<[f64; 6]> = Vec::with_capacity(n);
    for p in 0..n {
        let fr = &geo.frames[p];
        let fp = geo.frame_point(p);
        let cp = CccPoint::new(&fp);
        let (h2, hn2) = h_squared(&h.form(p), &fr.ginv);
        let formula = frame_h_norm2_formula(&cp);
        let e = ric_fd.tensor2(p) + geo.hess_f.tensor2(p) * 2.0 - h2 * 0.25;
        let tr_e = fr.trace(&e);
        let r = frame_scalar_ccc(&cp);
        let scalar_side = r + 2.0 * cp.lap - 0.25 * formula;
        let trs = crate::exact4::frame_fixed_point(&cp, c).0;
        let dil = (fr.ginv * ric_fd.tensor2(p)).trace() + 4.0 * cp.lap
            - 4.0 * cp.df2()
            - hn2 / 12.0
            - (7.0 * cp.tau0 / 6.0).powi(2);
        rows.push([
            hn2 - formula,
            fr.t2_norm2(&e).sqrt(),
            tr_e - scalar_side,
            scalar_side + 8.0 * trs,
            scalar_side,
            dil,
        ]);
    }
    let col = |k: usize| -> Vec<f64> { rows.iter().map(|r| r[k]).collect() };
    let mut rep = ResidualReport::default();
    for (k, name) in [
        "norm_h",
        "einstein",
        "trace_consistency",
        "trace_offshell",
        "trace_literal",
        "dilaton",
    ]
    .iter()
    .enumerate()
    {
        rep.push(Residual::from_pointwise(*name, grid, &col(k)));
    }
    let mut s = sol.summary();
    s.residuals.retain(|r| r.name == "h_divergence" || r.name == "h_closed");
    for r in &mut s.residuals {
        if r.name == "h_divergence" {
            r.name = "h_eom".into();
        }
    }
    rep.extend(s);
    Ok(rep)
}
