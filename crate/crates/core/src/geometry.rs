//! Derived geometry of a G2-structure field: frames, metric, Levi-Civita
//! connection, full torsion tensor and dilaton derivatives.

use crate::error::{G2Error, Result};
use crate::exec;
use crate::grid::{
    christoffel, covariant_derivative, covariant_derivative_form, form_grad_at, gradient, hessian, CurvatureFd, Field,
    GridSpec, Shape,
};
use crate::linear::{diamond::flat, AltForm, G2Frame, Tensor2, Vector7};

pub fn frames_of(phi: &Field) -> Result<Vec<G2Frame>> {
    if phi.shape() != Shape::Form(3) {
        return Err(G2Error::Shape(format!(
            "expected a 3-form field, got {:?}",
            phi.shape()
        )));
    }
    exec::map_indices(phi.npts(), |p| G2Frame::new(phi.form(p)))
        .into_iter()
        .collect()
}

pub fn metric_field(frames: &[G2Frame], grid: GridSpec) -> Field {
    Field::from_fn(grid, Shape::Tensor(2), |p, out| {
        write_t2(&frames[p].g, out);
    })
}

pub fn write_t2(t: &Tensor2, out: &mut [f64]) {
    for i in 0..7 {
        for j in 0..7 {
            out[i * 7 + j] = t[(i, j)];
        }
    }
}

/// Transforms the covariant indices of a rank-3 tensor by `p`:
/// out_abc = P_ma P_ib P_jc x_mij.
pub fn transform3(x: &[f64], p: &Tensor2) -> [f64; 343] {
    let mut a = [0.0; 343];
    let mut b = [0.0; 343];
    // last index
    for mi in 0..49 {
        for c in 0..7 {
            let mut acc = 0.0;
            for j in 0..7 {
                acc += x[mi * 7 + j] * p[(j, c)];
            }
            a[mi * 7 + c] = acc;
        }
    }
    // middle index
    for m in 0..7 {
        for bb in 0..7 {
            for c in 0..7 {
                let mut acc = 0.0;
                for i in 0..7 {
                    acc += a[m * 49 + i * 7 + c] * p[(i, bb)];
                }
                b[m * 49 + bb * 7 + c] = acc;
            }
        }
    }
    // first index
    let mut out = [0.0; 343];
    for aa in 0..7 {
        for rest in 0..49 {
            let mut acc = 0.0;
            for m in 0..7 {
                acc += b[m * 49 + rest] * p[(m, aa)];
            }
            out[aa * 49 + rest] = acc;
        }
    }
    out
}

/// Transforms all four covariant indices of a dense rank-4 tensor by `p`.
pub fn transform4(x: &[f64], p: &Tensor2) -> Vec<f64> {
    let mut cur = x.to_vec();
    let mut next = vec![0.0; 2401];
    for slot in 0..4 {
        let stride = 7usize.pow(3 - slot as u32);
        for (c, out) in next.iter_mut().enumerate() {
            let is = (c / stride) % 7;
            let base = c - is * stride;
            let mut acc = 0.0;
            for q in 0..7 {
                acc += cur[base + q * stride] * p[(q, is)];
            }
            *out = acc;
        }
        std::mem::swap(&mut cur, &mut next);
    }
    cur
}

/// ∇φ and the full torsion of a 3-form field given its frames and
/// Christoffel symbols.
pub fn torsion_fields(phi: &Field, frames: &[G2Frame], gamma: &Field) -> Result<(Field, Field)> {
    let dphi = covariant_derivative_form(phi, gamma)?;
    let torsion = Field::from_fn(*phi.grid(), Shape::Tensor(2), |p, out| {
        let d: [AltForm; 7] = std::array::from_fn(|m| form_grad_at(&dphi, p, m));
        write_t2(&torsion_at(&frames[p], &d), out);
    });
    Ok((dphi, torsion))
}

/// Full torsion T_mp = (1/24) ∇_mφ_ijk ψ_p^{ijk} at one point, given
/// the seven 3-forms ∇_mφ in coordinates.
pub fn torsion_at(frame: &G2Frame, dphi: &[AltForm; 7]) -> Tensor2 {
    let comp = frame.to_frame_compound(3);
    let mut half = Tensor2::zeros();
    for (m, d) in dphi.iter().enumerate() {
        let x = flat::psi_hook3(&comp.apply(d));
        for b in 0..7 {
            half[(m, b)] = x[b];
        }
    }
    let t_ad = frame.f.transpose() * half;
    frame.from_frame_t2(&t_ad)
}

/// Pointwise quantities in adapted-frame components.
#[derive(Clone, Debug)]
pub struct FramePoint {
    pub f: f64,
    pub t: Tensor2,
    /// ∇_a T_bc at index `a*49 + b*7 + c`.
    pub dt: [f64; 343],
    pub df: Vector7,
    pub hess: Tensor2,
}

impl FramePoint {
    #[inline]
    pub fn dt(&self, a: usize, b: usize, c: usize) -> f64 {
        self.dt[a * 49 + b * 7 + c]
    }
}

#[derive(Clone, Debug)]
pub struct Geometry {
    pub grid: GridSpec,
    pub phi: Field,
    pub frames: Vec<G2Frame>,
    pub g: Field,
    pub psi: Field,
    pub vol: Field,
    pub gamma: Field,
    /// ∇_mφ as a `FormGrad(3)` field.
    pub dphi: Field,
    pub torsion: Field,
    /// ∇_m T_ij at component `m*49 + i*7 + j`.
    pub dtorsion: Field,
    pub f: Field,
    pub df: Field,
    pub hess_f: Field,
}

impl Geometry {
    /// Geometry with dilaton f = ¼ log(vol_φ / vol_R).
    pub fn from_reference_volume(phi: &Field, vol_r: &Field) -> Result<Self> {
        let frames = frames_of(phi)?;
        let grid = *phi.grid();
        let f = Field::try_from_fn(grid, Shape::Scalar, |p, out| {
            let r = vol_r.scalar(p);
            if !(r > 0.0) {
                return Err(G2Error::Config("reference volume must be positive".into()));
            }
            out[0] = 0.25 * (frames[p].vol / r).ln();
            Ok(())
        })?;
        Self::build(phi, frames, f)
    }

    /// Geometry with a given dilaton field.
    pub fn with_dilaton(phi: &Field, f: &Field) -> Result<Self> {
        let frames = frames_of(phi)?;
        Self::build(phi, frames, f.clone())
    }

    fn build(phi: &Field, frames: Vec<G2Frame>, f: Field) -> Result<Self> {
        let grid = *phi.grid();
        let g = metric_field(&frames, grid);
        let psi = Field::from_fn(grid, Shape::Form(4), |p, out| {
            out.copy_from_slice(frames[p].psi.coeffs())
        });
        let vol = Field::from_fn(grid, Shape::Scalar, |p, out| out[0] = frames[p].vol);
        let gamma = christoffel(&g)?;
        let (dphi, torsion) = torsion_fields(phi, &frames, &gamma)?;
        let dtorsion = covariant_derivative(&torsion, &gamma)?;
        let df = gradient(&f);
        let hess_f = hessian(&f, &gamma);
        Ok(Self {
            grid,
            phi: phi.clone(),
            frames,
            g,
            psi,
            vol,
            gamma,
            dphi,
            torsion,
            dtorsion,
            f,
            df,
            hess_f,
        })
    }

    pub fn npts(&self) -> usize {
        self.grid.npts()
    }

    pub fn frame_point(&self, p: usize) -> FramePoint {
        let fr = &self.frames[p];
        let mut raw = [0.0; 343];
        self.dtorsion.point(p, &mut raw);
        FramePoint {
            f: self.f.scalar(p),
            t: fr.to_frame_t2(&self.torsion.tensor2(p)),
            dt: transform3(&raw, &fr.f),
            df: fr.to_frame_covector(&self.df.vector(p)),
            hess: fr.to_frame_t2(&self.hess_f.tensor2(p)),
        }
    }

    pub fn curvature_fd(&self) -> Result<CurvatureFd> {
        CurvatureFd::new(&self.g)
    }

    /// Maps frame-component 2-tensors computed per point back to a
    /// coordinate field.
    pub fn tensor_field<F>(&self, f: F) -> Field
    where
        F: Fn(usize, &FramePoint) -> Tensor2 + Sync + Send,
    {
        Field::from_fn(self.grid, Shape::Tensor(2), |p, out| {
            let fp = self.frame_point(p);
            write_t2(&self.frames[p].from_frame_t2(&f(p, &fp)), out);
        })
    }

    pub fn scalar_field<F>(&self, f: F) -> Field
    where
        F: Fn(usize, &FramePoint) -> f64 + Sync + Send,
    {
        Field::from_fn(self.grid, Shape::Scalar, |p, out| {
            out[0] = f(p, &self.frame_point(p));
        })
    }

    /// Frame-component covectors mapped back to a 1-form field.
    pub fn covector_field<F>(&self, f: F) -> Field
    where
        F: Fn(usize, &FramePoint) -> Vector7 + Sync + Send,
    {
        Field::from_fn(self.grid, Shape::Form(1), |p, out| {
            let v = self.frames[p].from_frame_covector(&f(p, &self.frame_point(p)));
            out.copy_from_slice(v.as_slice());
        })
    }

    /// Pointwise frame-norm of a coordinate 2-tensor field, max over points.
    pub fn t2_max_norm(&self, t: &Field) -> f64 {
        (0..self.npts())
            .map(|p| self.frames[p].t2_norm2(&t.tensor2(p)).sqrt())
            .fold(0.0, f64::max)
    }

    pub fn covector_max_norm(&self, w: &Field) -> f64 {
        (0..self.npts())
            .map(|p| w.vector(p).dot(&self.frames[p].raise(&w.vector(p))).max(0.0).sqrt())
            .fold(0.0, f64::max)
    }

    pub fn form_max_norm(&self, a: &Field) -> f64 {
        (0..self.npts())
            .map(|p| self.frames[p].form_norm2(&a.form(p)).sqrt())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linear::standard_phi;

    #[test]
    fn flat_geometry_is_trivial() {
        let grid = GridSpec::new(8, &[0, 1]).unwrap();
        let phi = Field::constant_form(grid, &(standard_phi() * 8.0));
        let vr = Field::constant_scalar(grid, 1.0);
        let geo = Geometry::from_reference_volume(&phi, &vr).unwrap();
        assert!(geo.torsion.max_abs() < 1e-14);
        assert!(geo.dtorsion.max_abs() < 1e-14);
        // vol = 2^7, f = (7/4) log 2
        assert!((geo.f.scalar(0) - 1.75 * 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn transform3_matches_naive() {
        let p = Tensor2::from_fn(|i, j| ((i * 7 + j) as f64).sin());
        let x: Vec<f64> = (0..343).map(|i| (i as f64 * 0.37).cos()).collect();
        let y = transform3(&x, &p);
        let (a, b, c) = (2, 5, 1);
        let mut e = 0.0;
        for m in 0..7 {
            for i in 0..7 {
                for j in 0..7 {
                    e += p[(m, a)] * p[(i, b)] * p[(j, c)] * x[m * 49 + i * 7 + j];
                }
            }
        }
        assert!((y[a * 49 + b * 7 + c] - e).abs() < 1e-12);
    }

    #[test]
    fn transform4_matches_naive() {
        let p = Tensor2::from_fn(|i, j| ((i * 5 + j * 3) as f64).cos());
        let x: Vec<f64> = (0..2401).map(|i| (i as f64 * 0.13).sin()).collect();
        let y = transform4(&x, &p);
        let (a, b, c, d) = (1, 6, 0, 3);
        let mut e = 0.0;
        for i in 0..7 {
            for j in 0..7 {
                for k in 0..7 {
                    for l in 0..7 {
                        e += p[(i, a)] * p[(j, b)] * p[(k, c)] * p[(l, d)] * x[((i * 7 + j) * 7 + k) * 7 + l];
                    }
                }
            }
        }
        assert!((y[((a * 7 + b) * 7 + c) * 7 + d] - e).abs() < 1e-10);
    }
}
