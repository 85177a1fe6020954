//! Seeded smooth test fields: trigonometric scalars and tensors, positive
//! 3-form fields, and conformally coclosed structures built from a closed
//! 4-form by pointwise Newton iteration.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{G2Error, Result};
use crate::grid::{Field, GridSpec, Shape};
use crate::linear::{diamond_phi, project4, standard_phi, standard_psi, AltForm, G2Frame, Tensor2, BINOM};

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// One Fourier mode c·cos(k·x) + s·sin(k·x).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigTerm {
    pub k: [i32; 7],
    pub c: f64,
    pub s: f64,
}

/// Finite trigonometric sum with analytic derivatives.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrigScalar {
    pub constant: f64,
    pub terms: Vec<TrigTerm>,
}

impl TrigScalar {
    pub fn constant(v: f64) -> Self {
        Self {
            constant: v,
            terms: Vec::new(),
        }
    }

    /// `nmodes` random modes with wave numbers |k_d| ≤ `kmax` on the active
    /// dimensions and coefficients uniform in ±amp/|k|².
    pub fn random(grid: &GridSpec, nmodes: usize, kmax: i32, amp: f64, rng: &mut impl Rng) -> Self {
        let dims = grid.active_dims();
        let mut terms = Vec::with_capacity(nmodes);
        if dims.is_empty() {
            return Self::default();
        }
        while terms.len() < nmodes {
            let mut k = [0i32; 7];
            for &d in &dims {
                k[d] = rng.random_range(-kmax..=kmax);
            }
            let k2: i32 = k.iter().map(|x| x * x).sum();
            if k2 == 0 {
                continue;
            }
            let w = amp / k2 as f64;
            terms.push(TrigTerm {
                k,
                c: rng.random_range(-w..=w),
                s: rng.random_range(-w..=w),
            });
        }
        Self { constant: 0.0, terms }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            constant: self.constant * s,
            terms: self
                .terms
                .iter()
                .map(|t| TrigTerm {
                    k: t.k,
                    c: t.c * s,
                    s: t.s * s,
                })
                .collect(),
        }
    }

    fn phase(t: &TrigTerm, x: &[f64; 7]) -> f64 {
        (0..7).map(|d| t.k[d] as f64 * x[d]).sum()
    }

    pub fn value(&self, x: &[f64; 7]) -> f64 {
        self.constant
            + self
                .terms
                .iter()
                .map(|t| {
                    let th = Self::phase(t, x);
                    t.c * th.cos() + t.s * th.sin()
                })
                .sum::<f64>()
    }

    pub fn gradient(&self, x: &[f64; 7]) -> [f64; 7] {
        let mut g = [0.0; 7];
        for t in &self.terms {
            let th = Self::phase(t, x);
            let d = -t.c * th.sin() + t.s * th.cos();
            for (gd, &kd) in g.iter_mut().zip(&t.k) {
                *gd += d * kd as f64;
            }
        }
        g
    }

    pub fn hessian(&self, x: &[f64; 7]) -> Tensor2 {
        let mut h = Tensor2::zeros();
        for t in &self.terms {
            let th = Self::phase(t, x);
            let d2 = -(t.c * th.cos() + t.s * th.sin());
            for a in 0..7 {
                for b in 0..7 {
                    h[(a, b)] += d2 * (t.k[a] * t.k[b]) as f64;
                }
            }
        }
        h
    }

    pub fn sample(&self, grid: GridSpec) -> Field {
        Field::sample(grid, Shape::Scalar, |x, out| out[0] = self.value(x))
    }
}

/// Matrix-valued trigonometric field, one [`TrigScalar`] per entry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigMatrix {
    pub entries: Vec<TrigScalar>,
}

impl TrigMatrix {
    pub fn random(grid: &GridSpec, nmodes: usize, kmax: i32, amp: f64, rng: &mut impl Rng) -> Self {
        Self {
            entries: (0..49)
                .map(|_| TrigScalar::random(grid, nmodes, kmax, amp, rng))
                .collect(),
        }
    }

    pub fn value(&self, x: &[f64; 7]) -> Tensor2 {
        Tensor2::from_fn(|i, j| self.entries[i * 7 + j].value(x))
    }

    pub fn sample(&self, grid: GridSpec) -> Field {
        Field::sample(grid, Shape::Tensor(2), |x, out| {
            for (o, e) in out.iter_mut().zip(&self.entries) {
                *o = e.value(x);
            }
        })
    }
}

/// k-form with trigonometric components and an analytic exterior derivative.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigForm {
    pub degree: usize,
    pub comps: Vec<TrigScalar>,
}

impl TrigForm {
    pub fn random(grid: &GridSpec, degree: usize, nmodes: usize, kmax: i32, amp: f64, rng: &mut impl Rng) -> Self {
        Self {
            degree,
            comps: (0..BINOM[degree])
                .map(|_| TrigScalar::random(grid, nmodes, kmax, amp, rng))
                .collect(),
        }
    }

    pub fn value(&self, x: &[f64; 7]) -> AltForm {
        let c: Vec<f64> = self.comps.iter().map(|s| s.value(x)).collect();
        AltForm::from_coeffs(self.degree, &c)
    }

    pub fn d_value(&self, x: &[f64; 7]) -> AltForm {
        let grads: Vec<[f64; 7]> = self.comps.iter().map(|s| s.gradient(x)).collect();
        let mut out = AltForm::zero(self.degree + 1);
        for m in 0..7 {
            let e = AltForm::basis(&[m]);
            let mut dm = AltForm::zero(self.degree);
            for (c, g) in grads.iter().enumerate() {
                dm[c] = g[m];
            }
            if dm.max_abs() > 0.0 {
                out += e.wedge(&dm);
            }
        }
        out
    }
}

/// Positive 3-form P(x)^*φ₀ with P = P₀ + M(x), P₀ a fixed random matrix
/// near the identity and M a small trigonometric matrix field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhiGenerator {
    pub p0: Tensor2,
    pub m: TrigMatrix,
}

impl PhiGenerator {
    pub fn random(grid: &GridSpec, amp: f64, rng: &mut impl Rng) -> Self {
        let p0 = Tensor2::identity() + Tensor2::from_fn(|_, _| rng.random_range(-0.15..0.15));
        Self {
            p0,
            m: TrigMatrix::random(grid, 2, 1, amp, rng),
        }
    }

    pub fn matrix(&self, x: &[f64; 7]) -> Tensor2 {
        self.p0 + self.m.value(x)
    }

    pub fn value(&self, x: &[f64; 7]) -> AltForm {
        standard_phi().pullback(&self.matrix(x))
    }

    pub fn sample(&self, grid: GridSpec) -> Result<Field> {
        let f = Field::sample(grid, Shape::Form(3), |x, out| {
            out.copy_from_slice(self.value(x).coeffs())
        });
        for p in 0..f.npts() {
            if self.matrix(&grid.coords(p)).determinant() <= 0.0 {
                return Err(G2Error::NonPositiveForm(format!(
                    "generator matrix lost orientation at point {p}"
                )));
            }
        }
        Ok(f)
    }
}

/// Newton solve for the positive 3-form whose dual 4-form is `target`.
pub fn phi_from_psi(target: &AltForm, start: &AltForm) -> Result<AltForm> {
    let mut phi = *start;
    let scale = target.max_abs().max(1.0);
    for _ in 0..40 {
        let fr = G2Frame::new(phi)?;
        let r = *target - fr.psi;
        if r.max_abs() < 1e-15 * scale {
            return Ok(phi);
        }
        let q = project4(&r, &fr).s;
        phi += diamond_phi(&q, &fr);
    }
    let fr = G2Frame::new(phi)?;
    if (*target - fr.psi).max_abs() < 1e-12 * scale {
        Ok(phi)
    } else {
        Err(G2Error::NonPositiveForm(
            "4-form is not the dual of a positive 3-form".into(),
        ))
    }
}

/// Conformally coclosed structure φ = e^{3f/2}φ̃ where ψ̃ = P₀^*ψ₀ + dβ is
/// closed, with reference volume vol_R = e^{−f/2} vol_φ̃ so that the dilaton
/// equals `f`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoclosedGenerator {
    pub p0: Tensor2,
    pub beta: TrigForm,
    pub f: TrigScalar,
}

/// Sampled ccc data: φ, dilaton and reference volume.
#[derive(Clone, Debug)]
pub struct CccSample {
    pub phi: Field,
    pub f: Field,
    pub vol_r: Field,
}

impl CoclosedGenerator {
    pub fn random(grid: &GridSpec, beta_amp: f64, f_amp: f64, rng: &mut impl Rng) -> Self {
        let p0 = Tensor2::identity() + Tensor2::from_fn(|_, _| rng.random_range(-0.1..0.1));
        Self {
            p0,
            beta: TrigForm::random(grid, 3, 2, 1, beta_amp, rng),
            f: TrigScalar::random(grid, 3, 1, f_amp, rng),
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            p0: self.p0,
            beta: TrigForm {
                degree: 3,
                comps: self.beta.comps.iter().map(|c| c.scaled(s)).collect(),
            },
            f: self.f.scaled(s),
        }
    }

    pub fn psi_tilde(&self, x: &[f64; 7]) -> AltForm {
        standard_psi().pullback(&self.p0) + self.beta.d_value(x)
    }

    /// Coclosed auxiliary structure φ̃ at one point.
    pub fn phi_tilde(&self, x: &[f64; 7]) -> Result<AltForm> {
        phi_from_psi(&self.psi_tilde(x), &standard_phi().pullback(&self.p0))
    }

    pub fn sample(&self, grid: GridSpec) -> Result<CccSample> {
        let npts = grid.npts();
        let pts: Vec<Result<(AltForm, f64, f64)>> = crate::exec::map_indices(npts, |p| {
            let x = grid.coords(p);
            let pt = self.phi_tilde(&x)?;
            let vt = G2Frame::new(pt)?.vol;
            let f = self.f.value(&x);
            Ok((pt * (1.5 * f).exp(), f, (-0.5 * f).exp() * vt))
        });
        let mut phi = Field::zeros(grid, Shape::Form(3));
        let mut f = Field::zeros(grid, Shape::Scalar);
        let mut vol_r = Field::zeros(grid, Shape::Scalar);
        for (p, r) in pts.into_iter().enumerate() {
            let (a, fv, vr) = r?;
            for c in 0..BINOM[3] {
                phi.set(p, c, a[c]);
            }
            f.set(p, 0, fv);
            vol_r.set(p, 0, vr);
        }
        Ok(CccSample { phi, f, vol_r })
    }
}
