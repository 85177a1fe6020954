//! Reduction to six dimensions: G2-structures on S¹×T⁶ built from a
//! hermitian form ω and the flat holomorphic volume form Ω, with ω
//! generated from a potential so that |Ω|_ω ω² is closed.
//!
//! Coordinates: r is dimension 0 and the complex pairs are
//! (x_a, y_a) = (2a − 1, 2a) for a = 1, 2, 3, with J∂_x = ∂_y.
//! Ω = dz¹∧dz²∧dz³/(2√2), so |Ω| = 1 for the flat metric.

use serde::{Deserialize, Serialize};

use crate::error::{G2Error, Result};
use crate::generators::{TrigScalar, TrigTerm};
use crate::geometry::{write_t2, Geometry};
use crate::grid::{exterior_d, hodge_star_field, wedge_fields, Field, GridSpec, Shape};
use crate::linear::{form2_to_tensor, AltForm, Tensor2, Vector7};
use crate::report::{Residual, ResidualReport};

pub const SQRT8: f64 = 2.0 * std::f64::consts::SQRT_2;

/// J as a 7×7 matrix with zero r-row and r-column.
pub fn complex_structure() -> Tensor2 {
    let mut j = Tensor2::zeros();
    for a in 0..3 {
        let (x, y) = (2 * a + 1, 2 * a + 2);
        j[(x, y)] = -1.0;
        j[(y, x)] = 1.0;
    }
    j
}

/// J extended by the identity on the r-direction, for pulling back forms.
fn j_pullback_matrix() -> Tensor2 {
    let mut j = complex_structure();
    j[(0, 0)] = 1.0;
    j
}

/// ω₀ = Σ dx_a∧dy_a.
pub fn omega0() -> AltForm {
    let mut w = AltForm::zero(2);
    for a in 0..3 {
        w.add_term(&[2 * a + 1, 2 * a + 2], 1.0);
    }
    w
}

/// Re(dz¹∧dz²∧dz³) and Im(dz¹∧dz²∧dz³).
pub fn dz123() -> (AltForm, AltForm) {
    let (x1, y1, x2, y2, x3, y3) = (1, 2, 3, 4, 5, 6);
    let mut re = AltForm::zero(3);
    re.add_term(&[x1, x2, x3], 1.0);
    re.add_term(&[x1, y2, y3], -1.0);
    re.add_term(&[y1, x2, y3], -1.0);
    re.add_term(&[y1, y2, x3], -1.0);
    let mut im = AltForm::zero(3);
    im.add_term(&[y1, x2, x3], 1.0);
    im.add_term(&[x1, y2, x3], 1.0);
    im.add_term(&[x1, x2, y3], 1.0);
    im.add_term(&[y1, y2, y3], -1.0);
    (re, im)
}

/// i∂∂̄u as a 2-form from the real Hessian H: −½(HJ + JH).
pub fn i_ddbar_function(hess: &Tensor2) -> AltForm {
    let j = complex_structure();
    crate::linear::tensor_to_form2(&((hess * j + j * hess) * -0.5))
}

/// Hermitian metric g(X, Y) = ω(X, JY) of a (1,1)-form.
pub fn hermitian_metric(omega: &AltForm) -> Tensor2 {
    form2_to_tensor(omega) * complex_structure()
}

/// One potential mode on T⁶, k indexed by the six torus coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialMode {
    pub k: [i32; 6],
    #[serde(default)]
    pub cos: f64,
    #[serde(default)]
    pub sin: f64,
}

pub fn potential(modes: &[PotentialMode]) -> TrigScalar {
    TrigScalar {
        constant: 0.0,
        terms: modes
            .iter()
            .map(|m| {
                let mut k = [0; 7];
                k[1..].copy_from_slice(&m.k);
                TrigTerm { k, c: m.cos, s: m.sin }
            })
            .collect(),
    }
}

#[derive(Clone, Debug)]
pub struct Su3Data {
    pub grid: GridSpec,
    /// Hermitian (1,1)-form on T⁶.
    pub omega: Field,
    /// |Ω|_ω.
    pub abs_omega: Field,
}

#[derive(Clone, Debug)]
pub struct CccGenerator {
    pub u: TrigScalar,
    /// χ = ω₀ + i∂∂̄u.
    pub chi: Field,
}

impl CccGenerator {
    pub fn new(grid: GridSpec, u: TrigScalar) -> Result<Self> {
        if grid.is_active(0) {
            return Err(G2Error::Config(
                "the S¹ direction (dimension 0) must be inactive".into(),
            ));
        }
        let chi = Field::sample(grid, Shape::Form(2), |x, o| {
            let c = omega0() + i_ddbar_function(&u.hessian(x));
            o.copy_from_slice(c.coeffs());
        });
        Ok(Self { u, chi })
    }
}

/// ω = |Ω|_χ^{−2}χ. Then |Ω|_ω ω² = χ² is closed.
pub fn ccc_metric_from_potential(grid: GridSpec, u: &TrigScalar) -> Result<Su3Data> {
    let gen = CccGenerator::new(grid, u.clone())?;
    let mut s = Field::zeros(grid, Shape::Scalar);
    for p in 0..grid.npts() {
        let g6 = hermitian_metric(&gen.chi.form(p)).fixed_view::<6, 6>(1, 1).into_owned();
        if g6.cholesky().is_none() {
            return Err(G2Error::NonPositiveChi(format!(
                "at point {p}; reduce the potential amplitude"
            )));
        }
        s.set(p, 0, g6.determinant().sqrt());
    }
    let omega = gen.chi.mul_scalar_field(&s);
    let abs_omega = s.map(|x| x.powi(-2));
    Ok(Su3Data { grid, omega, abs_omega })
}

/// φ = Re(dz¹²³)/|Ω|_ω − (1/(2√2)) dr∧ω.
pub fn lift_to_g2(data: &Su3Data) -> Field {
    let re = dz123().0;
    let dr = AltForm::basis(&[0]);
    Field::from_fn(data.grid, Shape::Form(3), |p, o| {
        let phi = re * (1.0 / data.abs_omega.scalar(p)) - dr.wedge(&data.omega.form(p)) * (1.0 / SQRT8);
        o.copy_from_slice(phi.coeffs());
    })
}

/// ψ = −dr∧Im(dz¹²³)/(2√2|Ω|_ω) − ½ω².
pub fn lifted_psi(data: &Su3Data) -> Field {
    let im = dz123().1;
    let dr = AltForm::basis(&[0]);
    Field::from_fn(data.grid, Shape::Form(4), |p, o| {
        let w = data.omega.form(p);
        let psi = dr.wedge(&im) * (-1.0 / (SQRT8 * data.abs_omega.scalar(p))) - w.wedge(&w) * 0.5;
        o.copy_from_slice(psi.coeffs());
    })
}

/// Reference volume density (2√2)⁻¹ on dr∧dx¹∧dy¹∧…∧dy³, for which the
/// dilaton of the lift is exactly −½ log|Ω|_ω.
pub fn reference_volume(grid: GridSpec) -> Field {
    Field::constant_scalar(grid, 1.0 / SQRT8)
}

pub fn lifted_dilaton(data: &Su3Data) -> Field {
    data.abs_omega.map(|a| -0.5 * a.ln())
}

/// d(J^*dα); i∂∂̄α = −½ d(J^*dα) on (p, p)-forms.
fn d_jstar_d(a: &Field) -> Result<Field> {
    let j = j_pullback_matrix();
    let da = exterior_d(a)?;
    let jd = Field::from_fn(*a.grid(), da.shape(), |p, o| {
        o.copy_from_slice(da.form(p).pullback(&j).coeffs())
    });
    exterior_d(&jd)
}

/// i∂∂̄ of a real (p, p)-form field on T⁶.
pub fn i_ddbar(a: &Field) -> Result<Field> {
    Ok(d_jstar_d(a)?.scale(-0.5))
}

/// 4i∂∂̄ω, the right side of the six-dimensional anomaly flow for
/// |Ω|_ω ω². Real by construction.
pub fn anomaly_rhs_6d(data: &Su3Data) -> Result<Field> {
    Ok(i_ddbar(&data.omega)?.scale(4.0))
}

/// Lee form μ from dω∧ω = μ∧ω², solved pointwise.
pub fn lee_form(data: &Su3Data) -> Result<Field> {
    let dw = exterior_d(&data.omega)?;
    Field::try_from_fn(data.grid, Shape::Form(1), |p, o| {
        let w = data.omega.form(p);
        let w2 = w.wedge(&w);
        let rhs = dw.form(p).wedge(&w);
        // columns: e_k∧ω² for the six torus directions, rows: 5-form comps
        let mut m = nalgebra::DMatrix::<f64>::zeros(21, 6);
        for k in 0..6 {
            let c = AltForm::basis(&[k + 1]).wedge(&w2);
            for (r, v) in c.coeffs().iter().enumerate() {
                m[(r, k)] = *v;
            }
        }
        let b = nalgebra::DVector::from_column_slice(rhs.coeffs());
        let sol = m
            .svd(true, true)
            .solve(&b, 1e-14)
            .map_err(|e| G2Error::DegenerateMetric(format!("Lee form solve: {e}")))?;
        o[0] = 0.0;
        o[1..].copy_from_slice(sol.as_slice());
        Ok(())
    })
}

/// (Jμ)(X) = μ(JX).
pub fn j_one_form(mu: &Field) -> Field {
    let j = complex_structure();
    Field::from_fn(*mu.grid(), Shape::Form(1), |p, o| {
        let v = j.transpose() * mu.vector(p);
        o.copy_from_slice(v.as_slice());
    })
}

/// 7d metric diag(1, g₆) so that the 7d star computes the 6d star.
fn metric7_of(data: &Su3Data) -> Field {
    Field::from_fn(data.grid, Shape::Tensor(2), |p, o| {
        let mut g = hermitian_metric(&data.omega.form(p));
        g[(0, 0)] = 1.0;
        write_t2(&g, o);
    })
}

/// 6d Hodge star of ω's metric: ⋆₆α = (−1)^k ι_∂r ⋆₇α.
pub fn star6(a: &Field, data: &Su3Data) -> Result<Field> {
    let k = match a.shape() {
        Shape::Form(k) => k,
        s => return Err(G2Error::Shape(format!("expected a form, got {s:?}"))),
    };
    let s7 = hodge_star_field(a, &metric7_of(data))?;
    let mut e0 = Vector7::zeros();
    e0[0] = 1.0;
    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
    Ok(Field::from_fn(data.grid, Shape::Form(6 - k), |p, o| {
        o.copy_from_slice((s7.form(p).interior(&e0) * sign).coeffs())
    }))
}

fn form_norms(f: &Field, geo: Option<&Geometry>) -> Vec<f64> {
    (0..f.npts())
        .map(|p| match geo {
            Some(g) => g.frames[p].form_norm2(&f.form(p)).sqrt(),
            None => f.form(p).coeffs().iter().map(|x| x * x).sum::<f64>().sqrt(),
        })
        .collect()
}

/// Residuals of the lift: metric split, tr T, dilaton, ψ formula, the
/// structural zero pattern, conformal balance, Lee-form identities and,
/// for every C, −dH_C against −2i∂∂̄ω.
pub fn reduction_check(data: &Su3Data, cs: &[f64]) -> Result<ResidualReport> {
    let grid = data.grid;
    let phi = lift_to_g2(data);
    let geo = Geometry::from_reference_volume(&phi, &reference_volume(grid))?;
    let n = grid.npts();
    let mut rep = ResidualReport::default();

    let split: Vec<f64> = (0..n)
        .map(|p| {
            let g = geo.g.tensor2(p);
            let off: f64 = (1..7).map(|i| g[(0, i)].abs()).fold(0.0, f64::max);
            let g6 = hermitian_metric(&data.omega.form(p));
            let d6 = (1..7)
                .flat_map(|i| (1..7).map(move |j| (i, j)))
                .map(|(i, j)| (g[(i, j)] - g6[(i, j)]).abs())
                .fold(0.0, f64::max);
            (g[(0, 0)] - 0.125).abs().max(off).max(d6)
        })
        .collect();
    rep.push(Residual::from_pointwise("metric_split", grid, &split));

    let tr: Vec<f64> = (0..n).map(|p| geo.frames[p].trace(&geo.torsion.tensor2(p))).collect();
    rep.push(Residual::from_pointwise("trace_t", grid, &tr));

    let fd = geo.f.sub(&lifted_dilaton(data));
    rep.push(Residual::from_field("dilaton", &fd));

    rep.push(Residual::from_field("psi_formula", &geo.psi.sub(&lifted_psi(data))));

    let (re, _) = dz123();
    let pattern: Vec<usize> = (0..35).filter(|&c| re[c] != 0.0).collect();
    let stray: Vec<f64> = (0..n)
        .map(|p| {
            let ph = phi.form(p);
            let w = data.omega.form(p);
            let t = crate::linear::tables();
            (0..35)
                .map(|c| {
                    let m = t.combos[3][c];
                    if m & 1 == 1 {
                        // dr∧β components must equal −ω/(2√2)
                        let rest = m & !1;
                        let sign = 1.0;
                        (ph[c] + sign * w.at_mask(rest) / SQRT8).abs()
                    } else if pattern.contains(&c) {
                        0.0
                    } else {
                        ph[c].abs()
                    }
                })
                .fold(0.0, f64::max)
        })
        .collect();
    rep.push(Residual::from_pointwise("structure", grid, &stray));

    let w2 = wedge_fields(&data.omega, &data.omega)?;
    let balanced = exterior_d(&w2.mul_scalar_field(&data.abs_omega))?;
    rep.push(Residual::from_pointwise("balanced", grid, &form_norms(&balanced, None)));

    let mu = lee_form(data)?;
    let dlog = crate::grid::gradient(&data.abs_omega.map(f64::ln));
    rep.push(Residual::from_field("lee_log_omega", &dlog.axpy(2.0, &mu)));

    let iddw = i_ddbar(&data.omega)?;
    let dsd = exterior_d(&star6(&exterior_d(&data.omega)?, data)?)?;
    let jmu_w = exterior_d(&wedge_fields(&j_one_form(&mu), &data.omega)?)?;
    let lee_star = dsd.axpy(2.0, &jmu_w).axpy(2.0, &iddw);
    rep.push(Residual::from_field("lee_star", &lee_star));

    let target = iddw.scale(-2.0);
    for &c in cs {
        let h = crate::flow::hc_definition(&geo, c)?;
        let lhs = exterior_d(&h)?.scale(-1.0);
        let diff = lhs.sub(&target);
        rep.push(Residual::from_pointwise(
            format!("rhs_7d_6d_C{c:.4}"),
            grid,
            &form_norms(&diff, Some(&geo)),
        ));
    }
    Ok(rep)
}

/// Grid for a reduction run: dimension 0 inactive, the given torus
/// dimensions (1..=6) active.
pub fn reduction_grid(n: usize, torus_dims: &[usize]) -> Result<GridSpec> {
    if torus_dims.iter().any(|&d| d == 0 || d > 6) {
        return Err(G2Error::Config("torus dimensions are 1..=6".into()));
    }
    GridSpec::new(n, torus_dims)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn modes() -> Vec<PotentialMode> {
        vec![
            PotentialMode {
                k: [1, 0, 0, 0, 0, 0],
                cos: 0.0,
                sin: 0.05,
            },
            PotentialMode {
                k: [1, 0, 1, 0, 0, 0],
                cos: 0.03,
                sin: 0.0,
            },
            PotentialMode {
                k: [0, 0, 2, 0, 0, 0],
                cos: 0.0,
                sin: 0.01,
            },
        ]
    }

    fn data(n: usize) -> Su3Data {
        ccc_metric_from_potential(reduction_grid(n, &[1, 3]).unwrap(), &potential(&modes())).unwrap()
    }

    #[test]
    fn scalar_i_ddbar_matches_grid_operator() {
        let grid = reduction_grid(32, &[1, 3]).unwrap();
        let u = potential(&modes());
        let exact = Field::sample(grid, Shape::Form(2), |x, o| {
            o.copy_from_slice(i_ddbar_function(&u.hessian(x)).coeffs())
        });
        let num = i_ddbar(&u.sample(grid)).unwrap();
        assert!(num.sub(&exact).max_abs() < 1e-4, "{}", num.sub(&exact).max_abs());
        // i∂∂̄(uω₀) = (i∂∂̄u)∧ω₀ for constant ω₀
        let uw = u.sample(grid);
        let uw0 = Field::from_fn(grid, Shape::Form(2), |p, o| {
            o.copy_from_slice((omega0() * uw.scalar(p)).coeffs())
        });
        let lhs = i_ddbar(&uw0).unwrap();
        let rhs = Field::from_fn(grid, Shape::Form(4), |p, o| {
            o.copy_from_slice(exact.form(p).wedge(&omega0()).coeffs())
        });
        assert!(lhs.sub(&rhs).max_abs() < 1e-4);
    }

    #[test]
    fn flat_data() {
        let d = ccc_metric_from_potential(reduction_grid(8, &[1]).unwrap(), &TrigScalar::default()).unwrap();
        assert!((d.abs_omega.max_abs() - 1.0).abs() < 1e-14);
        let rep = reduction_check(&d, &[0.0, 4.0 / 3.0, 2.0]).unwrap();
        for r in &rep.residuals {
            assert!(r.linf < 1e-12, "{} {}", r.name, r.linf);
        }
    }

    #[test]
    fn potential_too_large_is_rejected() {
        let u = potential(&[PotentialMode {
            k: [1, 0, 0, 0, 0, 0],
            cos: 3.0,
            sin: 0.0,
        }]);
        let e = ccc_metric_from_potential(reduction_grid(8, &[1]).unwrap(), &u).unwrap_err();
        assert!(matches!(e, G2Error::NonPositiveChi(_)));
    }

    #[test]
    fn lift_identities_converge() {
        let exact = [
            "metric_split",
            "trace_t",
            "dilaton",
            "psi_formula",
            "structure",
            "balanced",
        ];
        let reps: Vec<ResidualReport> = [16, 32]
            .iter()
            .map(|&n| reduction_check(&data(n), &[0.0, 4.0 / 3.0, 2.0]).unwrap())
            .collect();
        for r in &reps[1].residuals {
            let coarse = reps[0].linf(&r.name);
            if exact.contains(&r.name.as_str()) {
                assert!(r.linf < 1e-12 && coarse < 1e-12, "{} {}", r.name, r.linf);
            } else {
                assert!(r.linf < 1e-3, "{} {}", r.name, r.linf);
                assert!(
                    coarse < 1e-10 || coarse / r.linf > 10.0,
                    "{} {coarse} {}",
                    r.name,
                    r.linf
                );
            }
        }
        // the lifted structures are genuinely non-Kähler
        assert!(exterior_d(&data(16).omega).unwrap().max_abs() > 0.05);
    }
}
