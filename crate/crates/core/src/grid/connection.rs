//! Levi-Civita connection and curvature of a metric field by finite
//! differences.

use nalgebra::Cholesky;

use super::{partial, second_partial, Field, GridSpec, Shape};
use crate::error::{G2Error, Result};
use crate::linear::{AltForm, Tensor2, BINOM};

fn inverse_metric(g: &Tensor2) -> Result<Tensor2> {
    Cholesky::new(*g)
        .map(|c| c.inverse())
        .ok_or_else(|| G2Error::DegenerateMetric("Cholesky factorization failed".into()))
}

fn partials(f: &Field) -> [Option<Field>; 7] {
    let grid = *f.grid();
    std::array::from_fn(|d| grid.is_active(d).then(|| partial(f, d)))
}

/// Christoffel symbols Γ^k_ij as a rank-3 field indexed `[k][i][j]`.
pub fn christoffel(g: &Field) -> Result<Field> {
    if g.shape() != Shape::Tensor(2) {
        return Err(G2Error::Shape("metric must be a 2-tensor field".into()));
    }
    let grid = *g.grid();
    let dg = partials(g);
    let npts = grid.npts();
    Field::try_from_fn(grid, Shape::Tensor(3), |p, out| {
        let ginv = inverse_metric(&g.tensor2(p))?;
        // dgp[l][i][j] = ∂_l g_ij
        let mut dgp = [0.0; 343];
        for (l, d) in dg.iter().enumerate() {
            if let Some(d) = d {
                for c in 0..49 {
                    dgp[l * 49 + c] = d.data()[c * npts + p];
                }
            }
        }
        // lowered Γ_lij = ½(∂_i g_jl + ∂_j g_il − ∂_l g_ij)
        let mut low = [0.0; 343];
        for l in 0..7 {
            for i in 0..7 {
                for j in 0..7 {
                    low[l * 49 + i * 7 + j] =
                        0.5 * (dgp[i * 49 + j * 7 + l] + dgp[j * 49 + i * 7 + l] - dgp[l * 49 + i * 7 + j]);
                }
            }
        }
        for k in 0..7 {
            for c in 0..49 {
                let mut acc = 0.0;
                for l in 0..7 {
                    acc += ginv[(k, l)] * low[l * 49 + c];
                }
                out[k * 49 + c] = acc;
            }
        }
        Ok(())
    })
}

/// ∇ of a dense covariant tensor field of rank r; output index order is
/// `[m][i1..ir]`.
pub fn covariant_derivative(t: &Field, gamma: &Field) -> Result<Field> {
    let r = match t.shape() {
        Shape::Tensor(r) if r <= 3 => r,
        Shape::Scalar => 0,
        s => return Err(G2Error::Shape(format!("covariant derivative of {s:?}"))),
    };
    let grid = *t.grid();
    let npts = grid.npts();
    let nc = 7usize.pow(r as u32);
    let dt = partials(t);
    Ok(Field::from_fn(grid, Shape::Tensor(r + 1), |p, out| {
        let mut gam = [0.0; 343];
        gamma.point(p, &mut gam);
        let vals = t.point_vec(p);
        for m in 0..7 {
            let o = &mut out[m * nc..(m + 1) * nc];
            if let Some(d) = &dt[m] {
                for (c, x) in o.iter_mut().enumerate() {
                    *x = d.data()[c * npts + p];
                }
            }
            // − Σ_s Γ^q_{m i_s} t_{..q..}
            for (c, x) in o.iter_mut().enumerate() {
                let mut acc = 0.0;
                let mut stride = nc;
                for _s in 0..r {
                    stride /= 7;
                    let is = (c / stride) % 7;
                    let base = c - is * stride;
                    for q in 0..7 {
                        acc += gam[q * 49 + m * 7 + is] * vals[base + q * stride];
                    }
                }
                *x -= acc;
            }
        }
    }))
}

/// ∇_m α of a k-form field, shape `FormGrad(k)`.
pub fn covariant_derivative_form(a: &Field, gamma: &Field) -> Result<Field> {
    let k = match a.shape() {
        Shape::Form(k) => k,
        s => return Err(G2Error::Shape(format!("expected a form field, got {s:?}"))),
    };
    let grid = *a.grid();
    let npts = grid.npts();
    let nc = BINOM[k];
    let da = partials(a);
    Ok(Field::from_fn(grid, Shape::FormGrad(k), |p, out| {
        let mut gam = [0.0; 343];
        gamma.point(p, &mut gam);
        let alpha = a.form(p);
        for m in 0..7 {
            // D_{iq} = Γ^q_{mi}
            let d = Tensor2::from_fn(|i, q| gam[q * 49 + m * 7 + i]);
            let corr = alpha.derivation(&d);
            for c in 0..nc {
                let pd = da[m].as_ref().map_or(0.0, |f| f.data()[c * npts + p]);
                out[m * nc + c] = pd - corr[c];
            }
        }
    }))
}

/// The k-form ∇_m α at a point of a `FormGrad(k)` field.
pub fn form_grad_at(f: &Field, p: usize, m: usize) -> AltForm {
    let k = match f.shape() {
        Shape::FormGrad(k) => k,
        s => panic!("expected FormGrad, got {s:?}"),
    };
    let nc = BINOM[k];
    let mut a = AltForm::zero(k);
    for c in 0..nc {
        a[c] = f.at(p, m * nc + c);
    }
    a
}

/// Hess(f)_ij = ∂_i∂_j f − Γ^k_ij ∂_k f.
pub fn hessian(f: &Field, gamma: &Field) -> Field {
    assert_eq!(f.shape(), Shape::Scalar);
    let grid = *f.grid();
    let dims = grid.active_dims();
    let mut dd: Vec<Vec<Option<Field>>> = vec![vec![None; 7]; 7];
    for &a in &dims {
        for &b in &dims {
            if b >= a {
                dd[a][b] = Some(second_partial(f, a, b));
            }
        }
    }
    let d1 = partials(f);
    Field::from_fn(grid, Shape::Tensor(2), |p, out| {
        for i in 0..7 {
            for j in 0..7 {
                let (a, b) = if i <= j { (i, j) } else { (j, i) };
                let mut v = dd[a][b].as_ref().map_or(0.0, |x| x.scalar(p));
                for (k, dk) in d1.iter().enumerate() {
                    if let Some(dk) = dk {
                        v -= gamma.at(p, k * 49 + i * 7 + j) * dk.scalar(p);
                    }
                }
                out[i * 7 + j] = v;
            }
        }
    })
}

/// Finite-difference curvature of a metric field.
pub struct CurvatureFd {
    pub g: Field,
    pub gamma: Field,
    dgamma: [Option<Field>; 7],
}

impl CurvatureFd {
    pub fn new(g: &Field) -> Result<Self> {
        let gamma = christoffel(g)?;
        let dgamma = partials(&gamma);
        Ok(Self {
            g: g.clone(),
            gamma,
            dgamma,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        self.g.grid()
    }

    fn local(&self, p: usize) -> ([f64; 343], Vec<[f64; 343]>) {
        let mut gam = [0.0; 343];
        self.gamma.point(p, &mut gam);
        let dg = self
            .dgamma
            .iter()
            .map(|d| {
                let mut a = [0.0; 343];
                if let Some(d) = d {
                    d.point(p, &mut a);
                }
                a
            })
            .collect();
        (gam, dg)
    }

    /// R^l_ijk = ∂_iΓ^l_jk − ∂_jΓ^l_ik + Γ^l_im Γ^m_jk − Γ^l_jm Γ^m_ik,
    /// lowered as R_ijkl = g_lm R^m_ijk; R(∂_i, ∂_j)∂_k = R^l_ijk ∂_l.
    pub fn riemann_at(&self, p: usize) -> Vec<f64> {
        let (gam, dg) = self.local(p);
        let gp = self.g.tensor2(p);
        let mut up = vec![0.0; 2401];
        for i in 0..7 {
            for j in 0..7 {
                if i == j {
                    continue;
                }
                for k in 0..7 {
                    for l in 0..7 {
                        let mut v = dg[i][l * 49 + j * 7 + k] - dg[j][l * 49 + i * 7 + k];
                        for m in 0..7 {
                            v += gam[l * 49 + i * 7 + m] * gam[m * 49 + j * 7 + k]
                                - gam[l * 49 + j * 7 + m] * gam[m * 49 + i * 7 + k];
                        }
                        up[((i * 7 + j) * 7 + k) * 7 + l] = v;
                    }
                }
            }
        }
        let mut low = vec![0.0; 2401];
        for ijk in 0..343 {
            for l in 0..7 {
                let mut acc = 0.0;
                for m in 0..7 {
                    acc += gp[(l, m)] * up[ijk * 7 + m];
                }
                low[ijk * 7 + l] = acc;
            }
        }
        low
    }

    /// Ric_jk = R^i_ijk, symmetrized.
    pub fn ricci_at(&self, p: usize) -> Tensor2 {
        let (gam, dg) = self.local(p);
        let mut r = Tensor2::zeros();
        for j in 0..7 {
            for k in 0..7 {
                let mut v = 0.0;
                for i in 0..7 {
                    v += dg[i][i * 49 + j * 7 + k] - dg[j][i * 49 + i * 7 + k];
                    for m in 0..7 {
                        v += gam[i * 49 + i * 7 + m] * gam[m * 49 + j * 7 + k]
                            - gam[i * 49 + j * 7 + m] * gam[m * 49 + i * 7 + k];
                    }
                }
                r[(j, k)] = v;
            }
        }
        (r + r.transpose()) * 0.5
    }

    pub fn ricci(&self) -> Field {
        Field::from_fn(*self.grid(), Shape::Tensor(2), |p, out| {
            let r = self.ricci_at(p);
            for i in 0..7 {
                for j in 0..7 {
                    out[i * 7 + j] = r[(i, j)];
                }
            }
        })
    }
}

pub fn ricci_fd(g: &Field) -> Result<Field> {
    Ok(CurvatureFd::new(g)?.ricci())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// (u, ∇u, ∇²u) at a point.
    type Jet = (f64, [f64; 7], [[f64; 7]; 7]);

    fn conformal(g: GridSpec) -> (Field, impl Fn(&[f64; 7]) -> Jet) {
        // u = 0.2 sin(x0) cos(x2) + 0.1 sin(x0 + x2)
        let u = |x: &[f64; 7]| {
            let (a, b) = (x[0], x[2]);
            let v = 0.2 * a.sin() * b.cos() + 0.1 * (a + b).sin();
            let mut d = [0.0; 7];
            d[0] = 0.2 * a.cos() * b.cos() + 0.1 * (a + b).cos();
            d[2] = -0.2 * a.sin() * b.sin() + 0.1 * (a + b).cos();
            let mut h = [[0.0; 7]; 7];
            h[0][0] = -0.2 * a.sin() * b.cos() - 0.1 * (a + b).sin();
            h[2][2] = -0.2 * a.sin() * b.cos() - 0.1 * (a + b).sin();
            h[0][2] = -0.2 * a.cos() * b.sin() - 0.1 * (a + b).sin();
            h[2][0] = h[0][2];
            (v, d, h)
        };
        let metric = Field::sample(g, Shape::Tensor(2), move |x, o| {
            let e = (2.0 * u(x).0).exp();
            for i in 0..7 {
                o[i * 7 + i] = e;
            }
        });
        (metric, u)
    }

    fn flat(g: GridSpec) -> Field {
        Field::sample(g, Shape::Tensor(2), |_, o| {
            for i in 0..7 {
                o[i * 8] = 1.0;
            }
        })
    }

    #[test]
    fn flat_connection_vanishes() {
        let g = GridSpec::new(8, &[0, 1]).unwrap();
        let m = flat(g);
        assert_eq!(christoffel(&m).unwrap().max_abs(), 0.0);
        assert_eq!(ricci_fd(&m).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn conformal_christoffel_matches() {
        let g = GridSpec::new(32, &[0, 2]).unwrap();
        let (m, u) = conformal(g);
        let gam = christoffel(&m).unwrap();
        let mut err: f64 = 0.0;
        for p in 0..g.npts() {
            let (_, d, _) = u(&g.coords(p));
            for k in 0..7 {
                for i in 0..7 {
                    for j in 0..7 {
                        let dl = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
                        let e = dl(i, k) * d[j] + dl(j, k) * d[i] - dl(i, j) * d[k];
                        err = err.max((gam.at(p, k * 49 + i * 7 + j) - e).abs());
                    }
                }
            }
        }
        assert!(err < 1e-4, "{err}");
    }

    #[test]
    fn metric_is_parallel() {
        let g = GridSpec::new(32, &[0, 2]).unwrap();
        let (m, _) = conformal(g);
        let gam = christoffel(&m).unwrap();
        let dm = covariant_derivative(&m, &gam).unwrap();
        assert!(dm.max_abs() < 1e-4, "{}", dm.max_abs());
    }

    fn conformal_ricci_error(n: usize) -> f64 {
        let g = GridSpec::new(n, &[0, 2]).unwrap();
        let (m, u) = conformal(g);
        let ric = ricci_fd(&m).unwrap();
        let mut err: f64 = 0.0;
        for p in 0..g.npts() {
            let (_, d, h) = u(&g.coords(p));
            let lap = h[0][0] + h[2][2];
            let du2: f64 = d.iter().map(|x| x * x).sum();
            for i in 0..7 {
                for j in 0..7 {
                    let dl = if i == j { 1.0 } else { 0.0 };
                    let e = -5.0 * (h[i][j] - d[i] * d[j]) - (lap + 5.0 * du2) * dl;
                    err = err.max((ric.at(p, i * 7 + j) - e).abs());
                }
            }
        }
        err
    }

    #[test]
    fn conformal_ricci_matches_textbook() {
        let (e1, e2) = (conformal_ricci_error(16), conformal_ricci_error(32));
        assert!(e2 < 5e-3, "{e2}");
        assert!(e1 / e2 > 16.0 * 0.7, "ratio {}", e1 / e2);
    }

    #[test]
    fn ricci_trace_of_riemann() {
        let g = GridSpec::new(16, &[0, 2]).unwrap();
        let (m, _) = conformal(g);
        let c = CurvatureFd::new(&m).unwrap();
        let p = 37;
        let rm = c.riemann_at(p);
        let ginv = m.tensor2(p).try_inverse().unwrap();
        let ric = c.ricci_at(p);
        // Ric_jk = g^{il} R_ijkl
        let v = Tensor2::from_fn(|j, k| {
            let mut v = 0.0;
            for i in 0..7 {
                for l in 0..7 {
                    v += ginv[(i, l)] * rm[((i * 7 + j) * 7 + k) * 7 + l];
                }
            }
            v
        });
        assert!(((v + v.transpose()) * 0.5 - ric).amax() < 1e-10);
    }

    #[test]
    fn degenerate_metric_reported() {
        let g = GridSpec::new(8, &[0]).unwrap();
        let m = Field::zeros(g, Shape::Tensor(2));
        assert!(matches!(christoffel(&m), Err(G2Error::DegenerateMetric(_))));
    }
}
