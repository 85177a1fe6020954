//! ⋄-contractions and type projections.
//!
//! Functions in [`flat`] act on components in an adapted frame where φ = φ₀
//! and g = I; the coordinate-level API transports through a [`G2Frame`].

use serde::{Deserialize, Serialize};

use super::forms::{merge_sign, tables, AltForm};
use super::frame::G2Frame;
use super::{Tensor2, Vector7};

/// (A⋄φ)_ijk = A_i^m φ_mjk + A_j^m φ_imk + A_k^m φ_ijm.
pub fn diamond_phi(a: &Tensor2, frame: &G2Frame) -> AltForm {
    frame.phi.derivation(&(a * frame.ginv))
}

pub fn diamond_psi(a: &Tensor2, frame: &G2Frame) -> AltForm {
    frame.psi.derivation(&(a * frame.ginv))
}

/// Covector V(t)_k = t^{pq} φ_pqk.
pub fn phi_contract(t: &Tensor2, frame: &G2Frame) -> Vector7 {
    frame.from_frame_covector(&flat::vec_phi(&frame.to_frame_t2(t)))
}

/// Vector X with skew₇(β) = X⌟φ.
pub fn skew7_vector(beta: &Tensor2, frame: &G2Frame) -> Vector7 {
    frame.from_frame_vector(&(flat::vec_phi(&frame.to_frame_t2(beta)) / 6.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decomp2 {
    pub trace: f64,
    pub sym0: Tensor2,
    /// Vector X with skew₇ part X⌟φ.
    pub vec7: Vector7,
    pub skew14: Tensor2,
}

impl Decomp2 {
    pub fn reassemble(&self, frame: &G2Frame) -> Tensor2 {
        frame.g * (self.trace / 7.0) + self.sym0 + frame.vector_hook_phi(&self.vec7) + self.skew14
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decomp3 {
    pub alpha: f64,
    pub x7: Vector7,
    pub a27: Tensor2,
}

impl Decomp3 {
    /// αφ + X⌟ψ + A⋄φ
    pub fn reassemble(&self, frame: &G2Frame) -> AltForm {
        frame.phi * self.alpha + frame.psi.interior(&self.x7) + diamond_phi(&self.a27, frame)
    }
}

/// A 4-form written as S⋄ψ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decomp4 {
    pub s: Tensor2,
    pub tr_s: f64,
    /// Covector v_k = (S₇)_ia φ^{ia}_k / 6.
    pub s7: Vector7,
    pub s27: Tensor2,
}

impl Decomp4 {
    pub fn reassemble(&self, frame: &G2Frame) -> AltForm {
        diamond_psi(&self.s, frame)
    }

    /// α in S = ⅓αg − ⅓X⌟φ + A.
    pub fn alpha(&self) -> f64 {
        3.0 * self.tr_s / 7.0
    }

    /// X in S = ⅓αg − ⅓X⌟φ + A.
    pub fn x(&self, frame: &G2Frame) -> Vector7 {
        frame.raise(&self.s7) * -3.0
    }
}

pub fn project2(t: &Tensor2, frame: &G2Frame) -> Decomp2 {
    let ta = frame.to_frame_t2(t);
    let p = flat::project2(&ta);
    Decomp2 {
        trace: p.trace,
        sym0: frame.from_frame_t2(&p.sym0),
        vec7: frame.from_frame_vector(&p.vec7),
        skew14: frame.from_frame_t2(&p.skew14),
    }
}

pub fn project3(gamma: &AltForm, frame: &G2Frame) -> Decomp3 {
    let p = flat::project3(&frame.to_frame_form(gamma));
    Decomp3 {
        alpha: p.alpha,
        x7: frame.from_frame_vector(&p.x7),
        a27: frame.from_frame_t2(&p.a27),
    }
}

pub fn project4(eta: &AltForm, frame: &G2Frame) -> Decomp4 {
    let p = flat::project4(&frame.to_frame_form(eta));
    Decomp4 {
        s: frame.from_frame_t2(&p.s),
        tr_s: p.tr_s,
        s7: frame.from_frame_covector(&p.s7),
        s27: frame.from_frame_t2(&p.s27),
    }
}

/// Frame-component operations against φ₀ and ψ₀.
pub mod flat {
    use super::*;
    use crate::linear::{phi0_entries, psi0_entries, standard_phi, standard_psi};

    /// (X⌟φ₀)_ij = X_p φ_pij.
    pub fn hook_phi(x: &Vector7) -> Tensor2 {
        let mut t = Tensor2::zeros();
        for &([p, i, j], s) in phi0_entries() {
            t[(i, j)] += s * x[p];
        }
        t
    }

    /// V(t)_k = t_pq φ_pqk.
    pub fn vec_phi(t: &Tensor2) -> Vector7 {
        let mut v = Vector7::zeros();
        for &([p, q, k], s) in phi0_entries() {
            v[k] += s * t[(p, q)];
        }
        v
    }

    /// (ψ:t)_ij = ψ_ijkl t_kl.
    pub fn psi_contract(t: &Tensor2) -> Tensor2 {
        let mut out = Tensor2::zeros();
        for &([i, j, k, l], s) in psi0_entries() {
            out[(i, j)] += s * t[(k, l)];
        }
        out
    }

    /// Ω²₁₄ projector (4β + ψ:β)/6 on the antisymmetric part.
    pub fn pi14(t: &Tensor2) -> Tensor2 {
        let b = crate::linear::skew(t);
        (b * 4.0 + psi_contract(&b)) / 6.0
    }

    pub fn diamond_phi(a: &Tensor2) -> AltForm {
        standard_phi().derivation(a)
    }

    pub fn diamond_psi(a: &Tensor2) -> AltForm {
        standard_psi().derivation(a)
    }

    pub fn project2(t: &Tensor2) -> Decomp2 {
        let trace = t.trace();
        let mut sym0 = crate::linear::sym(t);
        for i in 0..7 {
            sym0[(i, i)] -= trace / 7.0;
        }
        let b = crate::linear::skew(t);
        let vec7 = vec_phi(&b) / 6.0;
        let skew14 = b - hook_phi(&vec7);
        Decomp2 {
            trace,
            sym0,
            vec7,
            skew14,
        }
    }

    pub fn project3(gamma: &AltForm) -> Decomp3 {
        let t = tables();
        let alpha = gamma.dot(&standard_phi()) / 7.0;
        let x7 = psi_hook3(gamma);
        // γ_ikl φ_jkl = 2 Σ_{L} γ_{iL} φ_{jL}
        let phi = standard_phi();
        let mut c = Tensor2::zeros();
        for (n, &k) in t.combos[3].iter().enumerate() {
            let pk = phi[n];
            if pk == 0.0 {
                continue;
            }
            for j in crate::linear::mask_indices(k) {
                let l = k & !(1 << j);
                let sj = merge_sign(1 << j, l) * pk;
                for i in 0..7 {
                    if l & (1 << i) != 0 {
                        continue;
                    }
                    c[(i, j)] += 2.0 * merge_sign(1 << i, l) * gamma.at_mask(l | (1 << i)) * sj;
                }
            }
        }
        let mut a27 = crate::linear::sym(&c) * 0.25;
        let tr = a27.trace();
        for i in 0..7 {
            a27[(i, i)] -= tr / 7.0;
        }
        Decomp3 { alpha, x7, a27 }
    }

    /// X_m = (1/24) γ_ijk ψ_mijk.
    pub fn psi_hook3(gamma: &AltForm) -> Vector7 {
        let t = tables();
        let psi = standard_psi();
        let mut x = Vector7::zeros();
        // sorted triples J contribute (1/4) ψ_{mJ} γ_J
        for (n, &k) in t.combos[4].iter().enumerate() {
            let pk = psi[n];
            if pk == 0.0 {
                continue;
            }
            for m in crate::linear::mask_indices(k) {
                let j = k & !(1 << m);
                x[m] += 0.25 * merge_sign(1 << m, j) * pk * gamma.at_mask(j);
            }
        }
        x
    }

    /// η^ψ_ia = η_ijkl ψ_ajkl.
    pub fn eta_psi(eta: &AltForm) -> Tensor2 {
        let t = tables();
        let psi = standard_psi();
        let mut out = Tensor2::zeros();
        for (n, &k) in t.combos[4].iter().enumerate() {
            let pk = psi[n];
            if pk == 0.0 {
                continue;
            }
            for a in crate::linear::mask_indices(k) {
                let j = k & !(1 << a);
                let sa = 6.0 * merge_sign(1 << a, j) * pk;
                for i in 0..7 {
                    if j & (1 << i) != 0 {
                        continue;
                    }
                    out[(i, a)] += sa * merge_sign(1 << i, j) * eta.at_mask(j | (1 << i));
                }
            }
        }
        out
    }

    pub fn project4(eta: &AltForm) -> Decomp4 {
        let ep = eta_psi(eta);
        let p = project2(&ep);
        let tr_s = p.trace / 96.0;
        let s7 = p.vec7 / 36.0;
        let s27 = p.sym0 / 12.0;
        let s = Tensor2::identity() * (tr_s / 7.0) + hook_phi(&s7) + s27;
        Decomp4 { s, tr_s, s7, s27 }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linear::{form2_to_tensor, standard_phi, standard_psi};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn frame(rng: &mut ChaCha8Rng) -> G2Frame {
        let p = Tensor2::identity() + Tensor2::from_fn(|_, _| rng.random_range(-0.3..0.3));
        G2Frame::new(standard_phi().pullback(&p)).unwrap()
    }

    fn rand_t(rng: &mut ChaCha8Rng) -> Tensor2 {
        Tensor2::from_fn(|_, _| rng.random_range(-1.0..1.0))
    }

    fn rand_v(rng: &mut ChaCha8Rng) -> Vector7 {
        Vector7::from_fn(|_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn metric_diamonds() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let fr = frame(&mut rng);
        assert!((diamond_phi(&fr.g, &fr) - fr.phi * 3.0).max_abs() < 1e-12);
        assert!((diamond_psi(&fr.g, &fr) - fr.psi * 4.0).max_abs() < 1e-12);
    }

    #[test]
    fn hook_diamond_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let fr = frame(&mut rng);
        let x = rand_v(&mut rng);
        let lhs = diamond_phi(&fr.vector_hook_phi(&x), &fr);
        let rhs = fr.psi.interior(&x) * -3.0;
        assert!((lhs - rhs).max_abs() < 1e-12);
    }

    #[test]
    fn omega14_is_kernel() {
        let mut rng = ChaCha8Rng::seed_from_u64(35);
        let fr = frame(&mut rng);
        let b = project2(&rand_t(&mut rng), &fr).skew14;
        assert!(diamond_phi(&b, &fr).max_abs() < 1e-12);
        assert!(diamond_psi(&b, &fr).max_abs() < 1e-12);
    }

    #[test]
    fn pi14_formula_matches() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let t = rand_t(&mut rng);
        let p = flat::project2(&t);
        assert!((flat::pi14(&t) - p.skew14).amax() < 1e-14);
    }

    #[test]
    fn project2_pure_parts() {
        let mut rng = ChaCha8Rng::seed_from_u64(39);
        let fr = frame(&mut rng);
        let p = project2(&fr.g, &fr);
        assert!((p.trace - 7.0).abs() < 1e-12);
        assert!(p.sym0.amax() < 1e-12 && p.vec7.amax() < 1e-12 && p.skew14.amax() < 1e-12);
        let x = rand_v(&mut rng);
        let p = project2(&fr.vector_hook_phi(&x), &fr);
        assert!((p.vec7 - x).amax() < 1e-12);
        assert!(p.sym0.amax() < 1e-12 && p.skew14.amax() < 1e-12 && p.trace.abs() < 1e-12);
    }

    #[test]
    fn project2_orthogonal_and_complete() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let fr = frame(&mut rng);
        let t = rand_t(&mut rng);
        let p = project2(&t, &fr);
        assert!((p.reassemble(&fr) - t).amax() < 1e-12);
        let parts = [fr.g * (p.trace / 7.0), p.sym0, fr.vector_hook_phi(&p.vec7), p.skew14];
        for i in 0..4 {
            for j in (i + 1)..4 {
                let a = fr.to_frame_t2(&parts[i]);
                let b = fr.to_frame_t2(&parts[j]);
                assert!(a.dot(&b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn project3_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let fr = frame(&mut rng);
        let v: Vec<f64> = (0..35).map(|_| rng.random_range(-1.0..1.0)).collect();
        let gamma = AltForm::from_coeffs(3, &v);
        let p = project3(&gamma, &fr);
        assert!((p.reassemble(&fr) - gamma).max_abs() < 1e-12);
        let x = rand_v(&mut rng);
        let q = project3(&fr.psi.interior(&x), &fr);
        assert!((q.x7 - x).amax() < 1e-12);
    }

    #[test]
    fn project4_normalizations() {
        let p = flat::project4(&standard_psi());
        assert!((p.tr_s - 7.0 / 4.0).abs() < 1e-14);
        assert!((flat::eta_psi(&standard_psi()).trace() - 168.0).abs() < 1e-12);
        assert!((p.s - Tensor2::identity() * 0.25).amax() < 1e-14);
    }

    #[test]
    fn project4_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(45);
        let fr = frame(&mut rng);
        let v: Vec<f64> = (0..35).map(|_| rng.random_range(-1.0..1.0)).collect();
        let eta = AltForm::from_coeffs(4, &v);
        let p = project4(&eta, &fr);
        assert!((p.reassemble(&fr) - eta).max_abs() < 1e-12);
        let a = project2(&rand_t(&mut rng), &fr).sym0;
        let q = project4(&diamond_psi(&a, &fr), &fr);
        assert!((q.s27 - a).amax() < 1e-12);
        assert!(q.tr_s.abs() < 1e-12 && q.s7.amax() < 1e-12);
        // S = ⅓αg − ⅓X⌟φ + A
        let s = fr.g * (p.alpha() / 3.0) - fr.vector_hook_phi(&p.x(&fr)) / 3.0 + p.s27;
        assert!((s - p.s).amax() < 1e-12);
    }

    #[test]
    fn s7_vector_matches_skew_contraction() {
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        let v: Vec<f64> = (0..35).map(|_| rng.random_range(-1.0..1.0)).collect();
        let p = flat::project4(&AltForm::from_coeffs(4, &v));
        let skew = crate::linear::skew(&p.s);
        assert!((flat::vec_phi(&skew) / 6.0 - p.s7).amax() < 1e-14);
        let _ = form2_to_tensor(&AltForm::zero(2));
    }
}
