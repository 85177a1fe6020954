use nalgebra::Cholesky;

use super::forms::{tables, AltForm, Compound};
use super::standard::standard_psi;
use super::{Tensor2, Vector7};
use crate::error::{G2Error, Result};

/// Metric and volume density induced by a 3-form.
///
/// The bilinear density B_ij is the coefficient of
/// −(1/6)(e_i⌟φ)∧(e_j⌟φ)∧φ on the coordinate top form; then
/// vol = det(B)^{1/9} and g = B / vol.
pub fn metric_from_phi(phi: &AltForm) -> Result<(Tensor2, f64)> {
    assert_eq!(phi.degree(), 3);
    let t = tables();
    let mut u: [AltForm; 7] = [AltForm::zero(2); 7];
    let mut w: [AltForm; 7] = [AltForm::zero(5); 7];
    for i in 0..7 {
        let mut e = Vector7::zeros();
        e[i] = 1.0;
        u[i] = phi.interior(&e);
        w[i] = u[i].wedge(phi);
    }
    // top coefficient of u_i ∧ w_j
    let mut b = Tensor2::zeros();
    for i in 0..7 {
        for j in i..7 {
            let mut acc = 0.0;
            for (n, &m) in t.combos[2].iter().enumerate() {
                let c = !m & 0x7f;
                acc += t.star_sign[m as usize] * u[i][n] * w[j].at_mask(c);
            }
            let v = -acc / 6.0;
            b[(i, j)] = v;
            b[(j, i)] = v;
        }
    }
    let det = b.determinant();
    if !(det > 0.0) || !det.is_finite() {
        return Err(G2Error::NonPositiveForm(format!(
            "bilinear density has determinant {det:e}"
        )));
    }
    let vol = det.powf(1.0 / 9.0);
    let g = b / vol;
    if Cholesky::new(g).is_none() {
        return Err(G2Error::NonPositiveForm("induced bilinear form is indefinite".into()));
    }
    Ok((g, vol))
}

/// Pointwise G2-structure with an adapted frame.
///
/// `f` has as columns vectors e_a with F^*φ = φ₀ and Fᵀ g F = I; `c` is
/// F^{-T}, whose columns are the dual coframe. Tensors move to the frame
/// by `to_frame_*` and back by `from_frame_*`.
#[derive(Clone, Debug)]
pub struct G2Frame {
    pub phi: AltForm,
    pub g: Tensor2,
    pub ginv: Tensor2,
    pub vol: f64,
    pub psi: AltForm,
    pub f: Tensor2,
    pub c: Tensor2,
}

impl G2Frame {
    pub fn new(phi: AltForm) -> Result<Self> {
        let (g, vol) = metric_from_phi(&phi)?;
        let chol = Cholesky::new(g).ok_or_else(|| G2Error::NonPositiveForm("metric not positive definite".into()))?;
        let l = chol.l();
        let ginv = chol.inverse();
        let m = l
            .transpose()
            .try_inverse()
            .ok_or_else(|| G2Error::DegenerateMetric("singular Cholesky factor".into()))?;
        let phi_on = phi.pullback(&m);
        let e = adapted_basis(&phi_on);
        let f = m * e;
        let c = l * e;
        let psi = standard_psi().pullback(&c.transpose());
        Ok(Self {
            phi,
            g,
            ginv,
            vol,
            psi,
            f,
            c,
        })
    }

    pub fn flat() -> Self {
        Self::new(super::standard_phi()).expect("standard form is positive")
    }

    /// Covariant 2-tensor in frame components, Fᵀ t F.
    pub fn to_frame_t2(&self, t: &Tensor2) -> Tensor2 {
        self.f.transpose() * t * self.f
    }

    pub fn from_frame_t2(&self, t: &Tensor2) -> Tensor2 {
        self.c * t * self.c.transpose()
    }

    pub fn to_frame_covector(&self, w: &Vector7) -> Vector7 {
        self.f.transpose() * w
    }

    pub fn from_frame_covector(&self, w: &Vector7) -> Vector7 {
        self.c * w
    }

    /// Coordinates of a vector whose frame components are `x`.
    pub fn from_frame_vector(&self, x: &Vector7) -> Vector7 {
        self.f * x
    }

    pub fn to_frame_vector(&self, x: &Vector7) -> Vector7 {
        self.c.transpose() * x
    }

    pub fn to_frame_form(&self, a: &AltForm) -> AltForm {
        a.pullback(&self.f)
    }

    pub fn from_frame_form(&self, a: &AltForm) -> AltForm {
        a.pullback(&self.c.transpose())
    }

    /// Compound matrices for repeated transport of forms up to degree `deg`.
    pub fn to_frame_compound(&self, deg: usize) -> Compound {
        Compound::new(&self.f, deg)
    }

    pub fn from_frame_compound(&self, deg: usize) -> Compound {
        Compound::new(&self.c.transpose(), deg)
    }

    pub fn lower(&self, x: &Vector7) -> Vector7 {
        self.g * x
    }

    pub fn raise(&self, w: &Vector7) -> Vector7 {
        self.ginv * w
    }

    /// Full g-norm squared of a form, Σ over all index tuples.
    pub fn form_norm2(&self, a: &AltForm) -> f64 {
        self.to_frame_form(a).tensor_norm2()
    }

    pub fn t2_norm2(&self, t: &Tensor2) -> f64 {
        self.to_frame_t2(t).norm_squared()
    }

    pub fn trace(&self, t: &Tensor2) -> f64 {
        (self.ginv * t).trace()
    }

    /// X⌟φ as a covariant 2-tensor.
    pub fn vector_hook_phi(&self, x: &Vector7) -> Tensor2 {
        super::form2_to_tensor(&self.phi.interior(x))
    }
}

/// Oriented orthonormal basis (columns) pulling a unit-metric positive
/// 3-form back to φ₀.
fn adapted_basis(phi_on: &AltForm) -> Tensor2 {
    let dense = phi_on.to_dense();
    let cross = |u: &Vector7, v: &Vector7| -> Vector7 {
        let mut w = Vector7::zeros();
        for i in 0..7 {
            for j in 0..7 {
                let uv = u[i] * v[j];
                if uv == 0.0 {
                    continue;
                }
                let base = i * 49 + j * 7;
                for k in 0..7 {
                    w[k] += dense[base + k] * uv;
                }
            }
        }
        w
    };
    let e1 = Vector7::from_fn(|i, _| if i == 0 { 1.0 } else { 0.0 });
    let e2 = Vector7::from_fn(|i, _| if i == 1 { 1.0 } else { 0.0 });
    let e3 = cross(&e1, &e2);
    let mut best = Vector7::zeros();
    let mut best_norm = -1.0;
    for k in 2..7 {
        let mut v = Vector7::zeros();
        v[k] = 1.0;
        for e in [&e1, &e2, &e3] {
            v -= *e * e.dot(&v);
        }
        let n = v.norm();
        if n > best_norm {
            best_norm = n;
            best = v / n;
        }
    }
    let e4 = best;
    let e5 = cross(&e1, &e4);
    let e6 = cross(&e2, &e4);
    let e7 = cross(&e3, &e4);
    Tensor2::from_columns(&[e1, e2, e3, e4, e5, e6, e7])
}

/// Hodge star of the frame's metric with the orientation of φ.
pub fn hodge_star(frame: &G2Frame, a: &AltForm) -> AltForm {
    frame.from_frame_form(&frame.to_frame_form(a).flat_star())
}

/// Hodge star of an arbitrary positive definite metric, coordinate
/// orientation.
pub fn hodge_star_metric(g: &Tensor2, a: &AltForm) -> Result<AltForm> {
    let chol = Cholesky::new(*g).ok_or_else(|| G2Error::DegenerateMetric("metric not positive definite".into()))?;
    let l = chol.l();
    let m = l
        .transpose()
        .try_inverse()
        .ok_or_else(|| G2Error::DegenerateMetric("singular Cholesky factor".into()))?;
    Ok(a.pullback(&m).flat_star().pullback(&l.transpose()))
}
