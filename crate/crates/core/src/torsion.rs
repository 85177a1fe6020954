//! Torsion tensor, torsion forms and dilaton of a G2-structure field, the
//! conformally coclosed checks and the G2-Bianchi identity suite.
//!
//! Pointwise kernels in [`kernels`] act on adapted-frame components, where
//! φ = φ₀ and g = I, so every index may be written down.

use serde::{Deserialize, Serialize};

use crate::error::{G2Error, Result};
use crate::geometry::metric_field;
use crate::geometry::{frames_of, torsion_fields, transform4, FramePoint, Geometry};
use crate::grid::{christoffel, exterior_d, Field, GridSpec, Shape};
use crate::linear::{
    diamond::flat, diamond_phi, hodge_star, tensor_to_form2, vector_to_form1, G2Frame, Tensor2, Vector7,
};
use crate::report::{Residual, ResidualReport};

/// Full torsion and torsion forms. `tau1` is a 1-form field, `tau2` the
/// antisymmetric 2-tensor of the Ω²₁₄ 2-form, `tau3p` traceless symmetric.
#[derive(Clone, Debug)]
pub struct TorsionData {
    pub t: Field,
    pub tau0: Field,
    pub tau1: Field,
    pub tau2: Field,
    pub tau3p: Field,
    pub f: Option<Field>,
}

/// Frame-component torsion forms (τ₀, τ₁, τ₂, τ₃′) of a frame torsion tensor.
pub fn frame_torsion_forms(t: &Tensor2) -> (f64, Vector7, Tensor2, Tensor2) {
    let d = flat::project2(t);
    (4.0 * d.trace / 7.0, d.vec7, d.skew14 * -2.0, -d.sym0)
}

/// T = ¼τ₀g − τ₃′ + τ₁⌟φ − ½τ₂ in frame components.
pub fn frame_torsion_from_forms(tau0: f64, tau1: &Vector7, tau2: &Tensor2, tau3p: &Tensor2) -> Tensor2 {
    Tensor2::identity() * (0.25 * tau0) - tau3p + flat::hook_phi(tau1) - tau2 * 0.5
}

/// T_mp = (1/24) ∇_mφ_ijk ψ_p^{ijk} for a 3-form field.
pub fn full_torsion(phi: &Field) -> Result<Field> {
    let frames = frames_of(phi)?;
    let g = metric_field(&frames, *phi.grid());
    let gamma = christoffel(&g)?;
    Ok(torsion_fields(phi, &frames, &gamma)?.1)
}

pub fn torsion_forms(t: &Field, frames: &[G2Frame]) -> TorsionData {
    let grid = *t.grid();
    let parts: Vec<_> = (0..grid.npts())
        .map(|p| {
            let fr = &frames[p];
            let (t0, t1, t2, t3) = frame_torsion_forms(&fr.to_frame_t2(&t.tensor2(p)));
            (
                t0,
                fr.from_frame_covector(&t1),
                fr.from_frame_t2(&t2),
                fr.from_frame_t2(&t3),
            )
        })
        .collect();
    let tau0 = Field::from_fn(grid, Shape::Scalar, |p, o| o[0] = parts[p].0);
    let tau1 = Field::from_fn(grid, Shape::Form(1), |p, o| o.copy_from_slice(parts[p].1.as_slice()));
    let t2 = |sel: fn(&(f64, Vector7, Tensor2, Tensor2)) -> &Tensor2| {
        Field::from_fn(grid, Shape::Tensor(2), |p, o| {
            crate::geometry::write_t2(sel(&parts[p]), o)
        })
    };
    TorsionData {
        t: t.clone(),
        tau0,
        tau1,
        tau2: t2(|x| &x.2),
        tau3p: t2(|x| &x.3),
        f: None,
    }
}

impl TorsionData {
    pub fn from_geometry(geo: &Geometry) -> Self {
        let mut td = torsion_forms(&geo.torsion, &geo.frames);
        td.f = Some(geo.f.clone());
        td
    }
}

/// f = ¼ log(vol_φ / vol_R).
pub fn dilaton(phi: &Field, vol_r: &Field) -> Result<Field> {
    let frames = frames_of(phi)?;
    Field::try_from_fn(*phi.grid(), Shape::Scalar, |p, o| {
        let r = vol_r.scalar(p);
        if !(r > 0.0) {
            return Err(G2Error::Config("reference volume must be positive".into()));
        }
        o[0] = 0.25 * (frames[p].vol / r).ln();
        Ok(())
    })
}

/// e^{−2f}ψ as a 4-form field.
pub fn weighted_psi(frames: &[G2Frame], f: &Field) -> Field {
    Field::from_fn(*f.grid(), Shape::Form(4), |p, o| {
        let w = (-2.0 * f.scalar(p)).exp();
        for (x, y) in o.iter_mut().zip(frames[p].psi.coeffs()) {
            *x = w * y;
        }
    })
}

/// Norms of d(e^{−2f}ψ).
pub fn ccc_residual(phi: &Field, f: &Field) -> Result<Residual> {
    let frames = frames_of(phi)?;
    let d = exterior_d(&weighted_psi(&frames, f))?;
    Ok(Residual::from_field("ccc", &d))
}

pub mod kernels {
    //! Identities in adapted-frame components.

    use super::*;
    use crate::linear::{phi0_entries, psi0_entries, skew};

    pub fn grad_trace(fp: &FramePoint) -> Vector7 {
        Vector7::from_fn(|k, _| (0..7).map(|p| fp.dt(k, p, p)).sum())
    }

    /// (div T)_k = ∇_p T_pk.
    pub fn div_t(fp: &FramePoint) -> Vector7 {
        Vector7::from_fn(|k, _| (0..7).map(|p| fp.dt(p, p, k)).sum())
    }

    /// (div Tᵗ)_k = ∇_p T_kp.
    pub fn div_tt(fp: &FramePoint) -> Vector7 {
        Vector7::from_fn(|k, _| (0..7).map(|p| fp.dt(p, k, p)).sum())
    }

    /// ₃K_ij = (∇_p T_qi) φ_pqj.
    pub fn k3(fp: &FramePoint) -> Tensor2 {
        let mut k = Tensor2::zeros();
        for &([p, q, j], s) in phi0_entries() {
            for i in 0..7 {
                k[(i, j)] += s * fp.dt(p, q, i);
            }
        }
        k
    }

    /// ⟨∇T, ψ⟩_k = ∇_i T_jl ψ_ijlk.
    pub fn dt_psi(fp: &FramePoint) -> Vector7 {
        let mut v = Vector7::zeros();
        for &([i, j, l, k], s) in psi0_entries() {
            v[k] += s * fp.dt(i, j, l);
        }
        v
    }

    /// Riemann sign in ½R_ijpq φ_pqk relative to the lowered
    /// R_ijkl = g(R(∂_i, ∂_j)∂_k, ∂_l) of the finite-difference oracle.
    pub const RIEMANN_SIGN: f64 = 1.0;

    /// ∇_iT_jk − ∇_jT_ik − T_ipT_jqφ_pqk − ½R_ijpqφ_pqk, with `rm` the frame
    /// Riemann tensor in the oracle's convention.
    pub fn bianchi_a(fp: &FramePoint, rm: &[f64]) -> Vec<f64> {
        let t = &fp.t;
        let mut r = vec![0.0; 343];
        for i in 0..7 {
            for j in 0..7 {
                for k in 0..7 {
                    r[i * 49 + j * 7 + k] = fp.dt(i, j, k) - fp.dt(j, i, k);
                }
            }
        }
        for &([p, q, k], s) in phi0_entries() {
            for i in 0..7 {
                for j in 0..7 {
                    let rr = RIEMANN_SIGN * rm[((i * 7 + j) * 7 + p) * 7 + q];
                    r[i * 49 + j * 7 + k] -= s * (t[(i, p)] * t[(j, q)] + 0.5 * rr);
                }
            }
        }
        r
    }

    /// div Tᵗ − ∇(tr T) − T(VT).
    pub fn bianchi_7a(fp: &FramePoint) -> Vector7 {
        div_tt(fp) - grad_trace(fp) - fp.t * flat::vec_phi(&fp.t)
    }

    /// ⟨∇T,ψ⟩ − (tr T)VT + V(T²) + Tᵗ(VT).
    pub fn bianchi_7b(fp: &FramePoint) -> Vector7 {
        let t = &fp.t;
        let vt = flat::vec_phi(t);
        dt_psi(fp) - vt * t.trace() + flat::vec_phi(&(t * t)) + t.transpose() * vt
    }

    /// π₁₄(₃K) + (tr T)T₁₄ − (T²)₁₄ − ((PT)T)₁₄.
    pub fn bianchi_14(fp: &FramePoint) -> Tensor2 {
        let t = &fp.t;
        let pt = flat::psi_contract(t);
        flat::pi14(&k3(fp)) + flat::pi14(t) * t.trace() - flat::pi14(&(t * t)) - flat::pi14(&(pt * t))
    }

    /// ∇_kτ₀ from ∇T.
    pub fn grad_tau0(fp: &FramePoint) -> Vector7 {
        grad_trace(fp) * (4.0 / 7.0)
    }

    /// ∇_aτ₃′_bc at `a*49 + b*7 + c` from ∇T.
    pub fn grad_tau3p(fp: &FramePoint) -> Vec<f64> {
        let gt = grad_trace(fp);
        let mut out = vec![0.0; 343];
        for a in 0..7 {
            for b in 0..7 {
                for c in 0..7 {
                    let mut v = 0.5 * (fp.dt(a, b, c) + fp.dt(a, c, b));
                    if b == c {
                        v -= gt[a] / 7.0;
                    }
                    out[a * 49 + b * 7 + c] = -v;
                }
            }
        }
        out
    }

    /// (div τ₃′)_k = ∇_mτ₃′_mk.
    pub fn div_tau3p(d3: &[f64]) -> Vector7 {
        Vector7::from_fn(|k, _| (0..7).map(|m| d3[m * 49 + m * 7 + k]).sum())
    }

    /// (∇_pτ₃′_iq)φ_pqa at (i, a).
    pub fn curl_tau3p(d3: &[f64]) -> Tensor2 {
        let mut out = Tensor2::zeros();
        for &([p, q, a], s) in phi0_entries() {
            for i in 0..7 {
                out[(i, a)] += s * d3[p * 49 + i * 7 + q];
            }
        }
        out
    }

    pub fn tau3p(t: &Tensor2) -> Tensor2 {
        -flat::project2(t).sym0
    }

    pub fn tau0(t: &Tensor2) -> f64 {
        4.0 * t.trace() / 7.0
    }

    /// (3/2)∇τ₀ + div τ₃′ + ¾τ₀∇f − 3(∇f)·τ₃′.
    pub fn ccc_7(fp: &FramePoint) -> Vector7 {
        let d3 = grad_tau3p(fp);
        let t3 = tau3p(&fp.t);
        grad_tau0(fp) * 1.5 + div_tau3p(&d3) + fp.df * (0.75 * tau0(&fp.t)) - t3 * fp.df * 3.0
    }

    /// (1/6)(div τ₃′)⌟φ + ½[(∇τ₃′·φ) − (∇τ₃′·φ)ᵗ].
    pub fn ccc_14(fp: &FramePoint) -> Tensor2 {
        let d3 = grad_tau3p(fp);
        let c = curl_tau3p(&d3);
        flat::hook_phi(&div_tau3p(&d3)) / 6.0 + skew(&c)
    }

    /// A_pq B_rs φ_pri φ_qsa at (i, a).
    pub fn phi_phi(a: &Tensor2, b: &Tensor2) -> Tensor2 {
        let mut out = Tensor2::zeros();
        for &([p, r, i], s1) in phi0_entries() {
            for &([q, s, c], s2) in phi0_entries() {
                out[(i, c)] += s1 * s2 * a[(p, q)] * b[(r, s)];
            }
        }
        out
    }

    /// v_p A_iq φ_pqa at (i, a).
    pub fn vec_curl(v: &Vector7, a: &Tensor2) -> Tensor2 {
        let mut out = Tensor2::zeros();
        for &([p, q, c], s) in phi0_entries() {
            for i in 0..7 {
                out[(i, c)] += s * v[p] * a[(i, q)];
            }
        }
        out
    }

    /// Torsion-form data of a conformally coclosed point, derivatives taken
    /// from ∇T.
    #[derive(Clone, Debug)]
    pub struct CccPoint {
        pub tau0: f64,
        pub tau3p: Tensor2,
        pub dtau0: Vector7,
        /// ∇_aτ₃′_bc at `a*49 + b*7 + c`.
        pub dtau3p: Vec<f64>,
        pub df: Vector7,
        pub hess: Tensor2,
        pub lap: f64,
    }

    impl CccPoint {
        pub fn new(fp: &FramePoint) -> Self {
            Self {
                tau0: tau0(&fp.t),
                tau3p: tau3p(&fp.t),
                dtau0: grad_tau0(fp),
                dtau3p: grad_tau3p(fp),
                df: fp.df,
                hess: fp.hess,
                lap: fp.hess.trace(),
            }
        }

        /// (∇_pτ₃′_iq)φ_pqa + (i ↔ a).
        pub fn curl_sym(&self) -> Tensor2 {
            let c = curl_tau3p(&self.dtau3p);
            c + c.transpose()
        }

        /// (∇_pf)τ₃′_iqφ_pqa + (i ↔ a).
        pub fn df_curl_sym(&self) -> Tensor2 {
            let c = vec_curl(&self.df, &self.tau3p);
            c + c.transpose()
        }

        pub fn df_df(&self) -> Tensor2 {
            self.df * self.df.transpose()
        }

        pub fn df2(&self) -> f64 {
            self.df.norm_squared()
        }

        pub fn tau3_norm2(&self) -> f64 {
            self.tau3p.norm_squared()
        }
    }

    /// Residuals of T(VT) − Tᵗ(VT) and div T − div Tᵗ.
    pub fn ccc_lemma(fp: &FramePoint) -> (Vector7, Vector7) {
        let vt = flat::vec_phi(&fp.t);
        ((fp.t - fp.t.transpose()) * vt, div_t(fp) - div_tt(fp))
    }

    /// PT + 2(∇f)⌟φ and VT − 3∇f.
    pub fn ccc_relations(fp: &FramePoint) -> (Tensor2, Vector7) {
        (
            flat::psi_contract(&fp.t) + flat::hook_phi(&fp.df) * 2.0,
            flat::vec_phi(&fp.t) - fp.df * 3.0,
        )
    }
}

fn t2n(t: &Tensor2) -> f64 {
    t.norm()
}

fn pointwise<F>(geo: &Geometry, f: F) -> Vec<f64>
where
    F: Fn(usize, &FramePoint) -> f64 + Sync + Send,
{
    crate::exec::map_indices(geo.npts(), |p| f(p, &geo.frame_point(p)))
}

/// Residuals of the G2-Bianchi identity (a) and its 7a, 7b and 14
/// components, valid for any G2-structure.
pub fn bianchi_suite(geo: &Geometry) -> Result<ResidualReport> {
    let curv = geo.curvature_fd()?;
    let grid = geo.grid;
    let mut rep = ResidualReport::default();
    let a = pointwise(geo, |p, fp| {
        let rm = transform4(&curv.riemann_at(p), &geo.frames[p].f);
        kernels::bianchi_a(fp, &rm).iter().map(|x| x * x).sum::<f64>().sqrt()
    });
    rep.push(Residual::from_pointwise("bianchi_a", grid, &a));
    let r = pointwise(geo, |_, fp| kernels::bianchi_7a(fp).norm());
    rep.push(Residual::from_pointwise("bianchi_7a", grid, &r));
    let r = pointwise(geo, |_, fp| kernels::bianchi_7b(fp).norm());
    rep.push(Residual::from_pointwise("bianchi_7b", grid, &r));
    let r = pointwise(geo, |_, fp| t2n(&kernels::bianchi_14(fp)));
    rep.push(Residual::from_pointwise("bianchi_14", grid, &r));
    Ok(rep)
}

/// Conformally coclosed variants of 7a and 14 in terms of τ₀, τ₃′, f.
pub fn ccc_bianchi(geo: &Geometry) -> ResidualReport {
    let grid = geo.grid;
    let mut rep = ResidualReport::default();
    let r = pointwise(geo, |_, fp| kernels::ccc_7(fp).norm());
    rep.push(Residual::from_pointwise("ccc_7", grid, &r));
    let r = pointwise(geo, |_, fp| t2n(&kernels::ccc_14(fp)));
    rep.push(Residual::from_pointwise("ccc_14", grid, &r));
    rep
}

/// τ₂ = 0, τ₁ = ½df, the PT/VT relations and the lemma checks.
pub fn ccc_torsion_check(geo: &Geometry) -> ResidualReport {
    let grid = geo.grid;
    let mut rep = ResidualReport::default();
    let r = pointwise(geo, |_, fp| t2n(&frame_torsion_forms(&fp.t).2));
    rep.push(Residual::from_pointwise("tau2", grid, &r));
    let r = pointwise(geo, |_, fp| (frame_torsion_forms(&fp.t).1 - fp.df * 0.5).norm());
    rep.push(Residual::from_pointwise("tau1_half_df", grid, &r));
    let rel: Vec<_> = crate::exec::map_indices(geo.npts(), |p| {
        let (pt, vt) = kernels::ccc_relations(&geo.frame_point(p));
        (pt.norm(), vt.norm())
    });
    let (a, b): (Vec<f64>, Vec<f64>) = rel.into_iter().unzip();
    rep.push(Residual::from_pointwise("pt_relation", grid, &a));
    rep.push(Residual::from_pointwise("vt_relation", grid, &b));
    let lem: Vec<_> = crate::exec::map_indices(geo.npts(), |p| {
        let (x, y) = kernels::ccc_lemma(&geo.frame_point(p));
        (x.norm(), y.norm())
    });
    let (a, b): (Vec<f64>, Vec<f64>) = lem.into_iter().unzip();
    rep.push(Residual::from_pointwise("t_vt_symmetric", grid, &a));
    rep.push(Residual::from_pointwise("div_t_symmetric", grid, &b));
    rep
}

/// Residuals of dφ = τ₀ψ + 3τ₁∧φ + ⋆τ₃ and dψ = 4τ₁∧ψ + ⋆τ₂.
pub fn torsion_form_residuals(geo: &Geometry) -> Result<ResidualReport> {
    let td = torsion_forms(&geo.torsion, &geo.frames);
    let grid = geo.grid;
    let dphi = exterior_d(&geo.phi)?;
    let dpsi = exterior_d(&geo.psi)?;
    let r1 = Field::from_fn(grid, Shape::Form(4), |p, o| {
        let fr = &geo.frames[p];
        let t1 = vector_to_form1(&td.tau1.vector(p));
        let rhs = fr.psi * td.tau0.scalar(p)
            + t1.wedge(&fr.phi) * 3.0
            + hodge_star(fr, &diamond_phi(&td.tau3p.tensor2(p), fr));
        o.copy_from_slice((dphi.form(p) - rhs).coeffs());
    });
    let r2 = Field::from_fn(grid, Shape::Form(5), |p, o| {
        let fr = &geo.frames[p];
        let t1 = vector_to_form1(&td.tau1.vector(p));
        let rhs = t1.wedge(&fr.psi) * 4.0 + hodge_star(fr, &tensor_to_form2(&td.tau2.tensor2(p)));
        o.copy_from_slice((dpsi.form(p) - rhs).coeffs());
    });
    Ok([
        Residual::from_field("dphi_forms", &r1),
        Residual::from_field("dpsi_forms", &r2),
    ]
    .into_iter()
    .collect())
}

/// ∇_mφ_ijk − T_mp ψ^p_ijk.
pub fn defining_residual(geo: &Geometry) -> Residual {
    let nc = 35;
    let norms = pointwise(geo, |p, _| {
        let fr = &geo.frames[p];
        let t = geo.torsion.tensor2(p);
        let mut acc = 0.0;
        for m in 0..7 {
            // T_mp ψ^p = (g⁻¹T_m·)⌟ψ
            let v = fr.ginv * t.row(m).transpose();
            let tp = fr.psi.interior(&v);
            for c in 0..nc {
                let d = geo.dphi.at(p, m * nc + c) - tp[c];
                acc += d * d;
            }
        }
        acc.sqrt()
    });
    Residual::from_pointwise("defining", geo.grid, &norms)
}

/// Comparison of a ccc structure with its coclosed auxiliary
/// φ̃ = e^{−3f/2}φ.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AuxiliaryReport {
    pub residuals: ResidualReport,
}

pub fn auxiliary_phi(phi: &Field, f: &Field) -> Field {
    Field::from_fn(*phi.grid(), Shape::Form(3), |p, o| {
        let w = (-1.5 * f.scalar(p)).exp();
        for (x, y) in o.iter_mut().zip(phi.form(p).coeffs()) {
            *x = w * y;
        }
    })
}

pub fn conformal_auxiliary(geo: &Geometry, vol_r: &Field) -> Result<AuxiliaryReport> {
    let grid: GridSpec = geo.grid;
    let f = &geo.f;
    let aux_phi = auxiliary_phi(&geo.phi, f);
    let aux = Geometry::from_reference_volume(&aux_phi, vol_r)?;
    let td = torsion_forms(&geo.torsion, &geo.frames);
    let atd = torsion_forms(&aux.torsion, &aux.frames);
    let mut rep = ResidualReport::default();
    let pw = |name: &str, h: &dyn Fn(usize) -> f64| {
        let v: Vec<f64> = (0..grid.npts()).map(h).collect();
        Residual::from_pointwise(name, grid, &v)
    };
    rep.push(pw("metric", &|p| {
        (aux.frames[p].g - geo.frames[p].g * (-f.scalar(p)).exp()).norm()
    }));
    rep.push(pw("psi", &|p| {
        (aux.frames[p].psi - geo.frames[p].psi * (-2.0 * f.scalar(p)).exp()).max_abs()
    }));
    rep.push(Residual::from_field("dpsi_aux", &exterior_d(&aux.psi)?));
    rep.push(pw("tau0", &|p| {
        (atd.tau0.scalar(p) - (0.5 * f.scalar(p)).exp() * td.tau0.scalar(p)).abs()
    }));
    rep.push(pw("tau1", &|p| atd.tau1.vector(p).norm()));
    rep.push(pw("tau2", &|p| atd.tau2.tensor2(p).norm()));
    rep.push(pw("tau3", &|p| {
        let a = diamond_phi(&atd.tau3p.tensor2(p), &aux.frames[p]);
        let b = diamond_phi(&td.tau3p.tensor2(p), &geo.frames[p]);
        (a - b * (-f.scalar(p)).exp()).max_abs()
    }));
    rep.push(pw("dilaton", &|p| (aux.f.scalar(p) - f.scalar(p) / 8.0).abs()));
    Ok(AuxiliaryReport { residuals: rep })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{rng_from_seed, CoclosedGenerator, PhiGenerator};
    use crate::linear::standard_phi;
    use rand::Rng;

    fn random_geo(n: usize, seed: u64) -> Geometry {
        let grid = GridSpec::new(n, &[0, 3]).unwrap();
        let mut rng = rng_from_seed(seed);
        let gen = PhiGenerator::random(&grid, 0.15, &mut rng);
        let phi = gen.sample(grid).unwrap();
        Geometry::from_reference_volume(&phi, &Field::constant_scalar(grid, 1.0)).unwrap()
    }

    fn ccc_geo(n: usize, seed: u64) -> (Geometry, Field) {
        let grid = GridSpec::new(n, &[1, 4]).unwrap();
        let mut rng = rng_from_seed(seed);
        let gen = CoclosedGenerator::random(&grid, 0.15, 0.2, &mut rng);
        let s = gen.sample(grid).unwrap();
        (Geometry::from_reference_volume(&s.phi, &s.vol_r).unwrap(), s.vol_r)
    }

    #[test]
    fn torsion_forms_round_trip() {
        let mut rng = rng_from_seed(2);
        for _ in 0..20 {
            let t = Tensor2::from_fn(|_, _| rng.random_range(-1.0..1.0));
            let (a, b, c, d) = frame_torsion_forms(&t);
            assert!((frame_torsion_from_forms(a, &b, &c, &d) - t).norm() < 1e-12);
            assert!(flat::vec_phi(&c).norm() < 1e-12);
        }
        let (a, b, c, d) = frame_torsion_forms(&(Tensor2::identity() * 0.75));
        assert!((a - 3.0).abs() < 1e-15 && b.norm() + c.norm() + d.norm() < 1e-15);
    }

    #[test]
    fn flat_structure_is_torsion_free() {
        let grid = GridSpec::new(8, &[0, 1]).unwrap();
        let phi = Field::constant_form(grid, &(standard_phi() * 8.0));
        assert!(full_torsion(&phi).unwrap().max_abs() < 1e-14);
        let f = dilaton(&phi, &Field::constant_scalar(grid, 1.0)).unwrap();
        assert!((f.scalar(3) - 1.75 * 2f64.ln()).abs() < 1e-12);
        let r = ccc_residual(&phi, &Field::constant_scalar(grid, 0.0)).unwrap();
        assert_eq!(r.linf, 0.0);
    }

    #[test]
    fn riemann_sign_convention() {
        let geo = random_geo(24, 7);
        let curv = geo.curvature_fd().unwrap();
        let mut with = 0.0f64;
        let mut scale = 0.0f64;
        for p in (0..geo.npts()).step_by(37) {
            let fp = geo.frame_point(p);
            let rm = transform4(&curv.riemann_at(p), &geo.frames[p].f);
            with = with.max(kernels::bianchi_a(&fp, &rm).iter().fold(0.0, |m, x| m.max(x.abs())));
            scale = scale.max(rm.iter().fold(0.0, |m, x| m.max(x.abs())));
        }
        assert!(scale > 1e-2, "test field is too flat: {scale}");
        assert!(with < 1e-2 * scale, "{with} vs {scale}");
    }

    #[test]
    fn general_identities_converge() {
        let c = bianchi_suite(&random_geo(16, 11)).unwrap();
        let f = bianchi_suite(&random_geo(32, 11)).unwrap();
        for name in ["bianchi_a", "bianchi_7a", "bianchi_7b", "bianchi_14"] {
            let (a, b) = (c.linf(name), f.linf(name));
            assert!(b < 5e-3, "{name}: {b}");
            assert!(a / b > 10.0, "{name}: {a} -> {b}");
        }
    }

    #[test]
    fn torsion_form_equations_hold() {
        let c = torsion_form_residuals(&random_geo(16, 4)).unwrap();
        let f = torsion_form_residuals(&random_geo(32, 4)).unwrap();
        for name in ["dphi_forms", "dpsi_forms"] {
            assert!(c.linf(name) / f.linf(name) > 8.0, "{name}");
        }
        let d = defining_residual(&random_geo(32, 4));
        assert!(d.linf < 1e-3);
    }

    #[test]
    fn ccc_checks() {
        let (geo, vol_r) = ccc_geo(24, 5);
        let r = ccc_residual(&geo.phi, &geo.f).unwrap();
        assert!(r.linf < 1e-3, "{}", r.linf);
        let rep = ccc_torsion_check(&geo);
        for x in &rep.residuals {
            assert!(x.linf < 2e-3, "{} {}", x.name, x.linf);
        }
        let b = ccc_bianchi(&geo);
        let b2 = ccc_bianchi(&ccc_geo(48, 5).0);
        for (x, y) in b.residuals.iter().zip(&b2.residuals) {
            assert!(
                x.linf < 1e-2 && x.linf / y.linf > 10.0,
                "{} {} {}",
                x.name,
                x.linf,
                y.linf
            );
        }
        let aux = conformal_auxiliary(&geo, &vol_r).unwrap();
        for x in &aux.residuals.residuals {
            assert!(x.linf < 2e-3, "{} {}", x.name, x.linf);
        }
        // discriminative: a random structure is not ccc
        let other = random_geo(24, 5);
        let r2 = ccc_residual(&other.phi, &other.f).unwrap();
        assert!(r2.linf > 10.0 * r.linf.max(1e-6));
    }
}
