//! Principal symbol of the linearized flow operator: the quadratic form in
//! (ξ, χ), its sharp lower bound, the gauge vector field W and the
//! 7-component relation for closed 4-forms.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::Geometry;
use crate::grid::{covariant_derivative, Field, Shape};
use crate::linear::{diamond::flat, standard_phi, AltForm, G2Frame, Vector7};
use crate::report::{Residual, ResidualReport};

/// X_m = −(1/24)χ_mpqr φ^{pqr} in frame components.
pub fn flat_extract_x(chi: &AltForm) -> Vector7 {
    let phi = standard_phi();
    Vector7::from_fn(|m, _| {
        let mut e = Vector7::zeros();
        e[m] = 1.0;
        -0.25 * chi.interior(&e).dot(&phi)
    })
}

/// X as a coordinate vector.
pub fn extract_x(chi: &AltForm, frame: &G2Frame) -> Vector7 {
    frame.from_frame_vector(&flat_extract_x(&frame.to_frame_form(chi)))
}

/// ⟨ξ⌟χ, φ⟩ with tensor inner products, frame components.
pub fn flat_hook_pairing(xi: &Vector7, chi: &AltForm) -> f64 {
    6.0 * chi.interior(xi).dot(&standard_phi())
}

/// −X♭∧φ in frame components.
pub fn flat_witness(x: &Vector7) -> AltForm {
    let mut xf = AltForm::zero(1);
    xf.coeffs_mut().copy_from_slice(x.as_slice());
    xf.wedge(&standard_phi()) * -1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymbolSample {
    pub xi: Vector7,
    pub chi: AltForm,
    pub c: f64,
    pub value: f64,
    pub bound: f64,
}

/// (value, bound) in frame components.
pub fn flat_symbol_form(xi: &Vector7, chi: &AltForm, c: f64) -> (f64, f64) {
    let nn = xi.norm_squared() * chi.tensor_norm2();
    let pair = flat_hook_pairing(xi, chi);
    (nn - c / 6.0 * pair * pair, (1.0 - c.max(0.0)) * nn)
}

/// ξ a covector, χ a 4-form, both in coordinates; norms taken in g_φ.
pub fn symbol_form(xi: &Vector7, chi: &AltForm, c: f64, frame: &G2Frame) -> SymbolSample {
    let (value, bound) = flat_symbol_form(&frame.to_frame_covector(xi), &frame.to_frame_form(chi), c);
    SymbolSample {
        xi: *xi,
        chi: *chi,
        c,
        value,
        bound,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchConfig {
    pub restarts: usize,
    pub steps: usize,
    pub step: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            restarts: 64,
            steps: 500,
            step: 1e-2,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SearchResult {
    pub c: f64,
    pub ratio: f64,
    pub xi: Vector7,
    pub chi: AltForm,
}

fn normalize(xi: &mut Vector7, chi: &mut AltForm) {
    *xi /= xi.norm();
    let n = chi.tensor_norm2().sqrt();
    *chi = *chi * (1.0 / n);
}

fn ratio(xi: &Vector7, chi: &AltForm, c: f64) -> f64 {
    let (v, _) = flat_symbol_form(xi, chi, c);
    v / (xi.norm_squared() * chi.tensor_norm2())
}

/// Minimizes value/(‖ξ‖²‖χ‖²) over the product of unit spheres by
/// projected gradient descent with backtracking, in frame components.
pub fn sharpness_search(c: f64, cfg: &SearchConfig, rng: &mut impl Rng) -> SearchResult {
    let phi = standard_phi();
    let mut best: Option<SearchResult> = None;
    for _ in 0..cfg.restarts {
        let mut xi = Vector7::from_fn(|_, _| rng.random_range(-1.0..1.0));
        let mut chi = AltForm::from_coeffs(4, &(0..35).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<_>>());
        normalize(&mut xi, &mut chi);
        let mut r = ratio(&xi, &chi, c);
        let mut step = cfg.step;
        for _ in 0..cfg.steps {
            // On the unit spheres the ratio is 1 − (C/6)p² with p = ⟨ξ⌟χ, φ⟩.
            let p = flat_hook_pairing(&xi, &chi);
            let mut xf = AltForm::zero(1);
            xf.coeffs_mut().copy_from_slice(xi.as_slice());
            let dp_dchi = xf.wedge(&phi) * 6.0;
            let dp_dxi = Vector7::from_fn(|m, _| {
                let mut e = Vector7::zeros();
                e[m] = 1.0;
                6.0 * chi.interior(&e).dot(&phi)
            });
            let gx = dp_dxi * (-c / 3.0 * p);
            // packed coefficients carry weight 4! in the tensor norm
            let gc = dp_dchi * (-c / 3.0 * p / 24.0);
            let gx = gx - xi * xi.dot(&gx);
            let gc = gc - chi * (24.0 * chi.dot(&gc));
            loop {
                let mut nx = xi - gx * step;
                let mut nc = chi - gc * step;
                normalize(&mut nx, &mut nc);
                let nr = ratio(&nx, &nc, c);
                if nr <= r || step < 1e-12 {
                    if nr <= r {
                        xi = nx;
                        chi = nc;
                        r = nr;
                        step *= 1.5;
                    }
                    break;
                }
                step *= 0.5;
            }
        }
        if best.as_ref().is_none_or(|b| r < b.ratio) {
            best = Some(SearchResult { c, ratio: r, xi, chi });
        }
    }
    best.expect("at least one restart")
}

/// X of a 4-form field as a coordinate vector field.
pub fn x_field(chi: &Field, geo: &Geometry) -> Field {
    Field::from_fn(geo.grid, Shape::Tensor(1), |p, o| {
        o.copy_from_slice(extract_x(&chi.form(p), &geo.frames[p]).as_slice())
    })
}

/// (curl X)_m = (∇_aX_b)φ^{ab}_m for a vector field X, returned as a 1-form.
pub fn curl(x: &Field, geo: &Geometry) -> Result<Field> {
    let lowered = Field::from_fn(geo.grid, Shape::Tensor(1), |p, o| {
        o.copy_from_slice(geo.frames[p].lower(&x.vector(p)).as_slice())
    });
    let dx = covariant_derivative(&lowered, &geo.gamma)?;
    Ok(Field::from_fn(geo.grid, Shape::Form(1), |p, o| {
        let fr = &geo.frames[p];
        let c = flat::vec_phi(&fr.to_frame_t2(&dx.tensor2(p)));
        o.copy_from_slice(fr.from_frame_covector(&c).as_slice())
    }))
}

/// g-divergence ∇^m w_m of a 1-form.
pub fn divergence(w: &Field, geo: &Geometry) -> Result<Field> {
    let t = Field::from_data(geo.grid, Shape::Tensor(1), w.data().to_vec())?;
    let dw = covariant_derivative(&t, &geo.gamma)?;
    Ok(Field::from_fn(geo.grid, Shape::Scalar, |p, o| {
        o[0] = geo.frames[p].trace(&dw.tensor2(p))
    }))
}

#[derive(Clone, Debug)]
pub struct DeturckW {
    /// W = 2 curl X as a 1-form.
    pub w: Field,
    pub div: Field,
    pub report: ResidualReport,
}

pub fn deturck_w(chi: &Field, geo: &Geometry) -> Result<DeturckW> {
    let w = curl(&x_field(chi, geo), geo)?.scale(2.0);
    let div = divergence(&w, geo)?;
    let report = std::iter::once(Residual::from_field("div_w", &div)).collect();
    Ok(DeturckW { w, div, report })
}

/// 2∇α + curl X − div A for χ = S⋄ψ with S = ⅓αg − ⅓X⌟φ + A.
pub fn chi_seven_relation(chi: &Field, geo: &Geometry) -> Result<Field> {
    let grid = geo.grid;
    let parts: Vec<_> = (0..geo.npts())
        .map(|p| {
            let fr = &geo.frames[p];
            let d = crate::linear::project4(&chi.form(p), fr);
            (d.alpha(), d.x(fr), d.s27)
        })
        .collect();
    let alpha = Field::from_fn(grid, Shape::Scalar, |p, o| o[0] = parts[p].0);
    let x = Field::from_fn(grid, Shape::Tensor(1), |p, o| o.copy_from_slice(parts[p].1.as_slice()));
    let a = Field::from_fn(grid, Shape::Tensor(2), |p, o| crate::geometry::write_t2(&parts[p].2, o));
    let grad = crate::grid::gradient(&alpha);
    let cx = curl(&x, geo)?;
    let da = covariant_derivative(&a, &geo.gamma)?;
    Ok(Field::from_fn(grid, Shape::Form(1), |p, o| {
        let gi = &geo.frames[p].ginv;
        for b in 0..7 {
            let mut div = 0.0;
            for m in 0..7 {
                for i in 0..7 {
                    div += gi[(m, i)] * da.at(p, m * 49 + i * 7 + b);
                }
            }
            o[b] = 2.0 * grad.at(p, b) + cx.at(p, b) - div;
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{rng_from_seed, CoclosedGenerator, TrigForm};
    use crate::grid::{exterior_d, GridSpec};
    use crate::linear::standard_psi;

    fn rv(rng: &mut impl Rng) -> Vector7 {
        Vector7::from_fn(|_, _| rng.random_range(-1.0..1.0))
    }

    fn rchi(rng: &mut impl Rng) -> AltForm {
        AltForm::from_coeffs(4, &(0..35).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<_>>())
    }

    #[test]
    fn extract_x_examples() {
        assert!(flat_extract_x(&standard_psi()).norm() < 1e-14);
        let mut rng = rng_from_seed(1);
        for _ in 0..20 {
            let x0 = rv(&mut rng);
            assert!((flat_extract_x(&flat_witness(&x0)) - x0).norm() < 1e-13);
            let xi = rv(&mut rng);
            let chi = rchi(&mut rng);
            let lhs = flat_hook_pairing(&xi, &chi);
            assert!((lhs + 24.0 * xi.dot(&flat_extract_x(&chi))).abs() < 1e-12);
            assert!((flat_witness(&x0).tensor_norm2() - 96.0 * x0.norm_squared()).abs() < 1e-12);
        }
    }

    #[test]
    fn symbol_bound_and_witness() {
        let mut rng = rng_from_seed(2);
        for _ in 0..10_000 {
            let xi = rv(&mut rng);
            let chi = rchi(&mut rng);
            let c = rng.random_range(0.0..1.0);
            let (v, b) = flat_symbol_form(&xi, &chi, c);
            assert!(v >= b - 1e-10);
            let (v2, _) = flat_symbol_form(&xi, &(chi * 3.0), c);
            assert!((v2 - 9.0 * v).abs() < 1e-9 * v.abs().max(1.0));
            let (vn, _) = flat_symbol_form(&xi, &chi, -c);
            assert!(vn >= xi.norm_squared() * chi.tensor_norm2() - 1e-10);
        }
        let x = rv(&mut rng);
        let chi = flat_witness(&x);
        let xi = x * 0.7;
        let p = flat_hook_pairing(&xi, &chi);
        assert!((p * p - 576.0 * xi.norm_squared() * x.norm_squared()).abs() < 1e-9);
        let (v, b) = flat_symbol_form(&xi, &chi, 0.3);
        assert!((v - b).abs() < 1e-10 * v.abs());
        let (v, _) = flat_symbol_form(&xi, &standard_psi(), 0.8);
        assert!((v - xi.norm_squared() * 168.0).abs() < 1e-10);
    }

    #[test]
    fn frame_transport_is_consistent() {
        let mut rng = rng_from_seed(4);
        let p =
            crate::linear::Tensor2::identity() + crate::linear::Tensor2::from_fn(|_, _| rng.random_range(-0.2..0.2));
        let fr = G2Frame::new(standard_phi().pullback(&p)).unwrap();
        let x = rv(&mut rng);
        let chi = fr.from_frame_form(&flat_witness(&fr.to_frame_vector(&x)));
        assert!((extract_x(&chi, &fr) - x).norm() < 1e-12);
        let s = symbol_form(&fr.lower(&x), &chi, 0.5, &fr);
        assert!((s.value - s.bound).abs() < 1e-9 * s.value.abs());
    }

    #[test]
    fn sharpness_reaches_one_minus_c() {
        let mut rng = rng_from_seed(5);
        let cfg = SearchConfig {
            restarts: 8,
            ..SearchConfig::default()
        };
        let mut prev = f64::INFINITY;
        for c in [0.0, 0.5, 0.99] {
            let r = sharpness_search(c, &cfg, &mut rng);
            let tol = if c > 0.9 { 1e-4 } else { 1e-6 };
            assert!((r.ratio - (1.0 - c)).abs() < tol, "C={c}: {}", r.ratio);
            assert!(r.ratio <= prev);
            prev = r.ratio;
        }
    }

    fn flat_geo(n: usize) -> Geometry {
        let grid = GridSpec::new(n, &[0, 3]).unwrap();
        let phi = Field::constant_form(grid, &standard_phi());
        Geometry::from_reference_volume(&phi, &Field::constant_scalar(grid, 1.0)).unwrap()
    }

    #[test]
    fn curl_of_gradient_vanishes_on_flat() {
        let errs: Vec<f64> = [16, 32]
            .iter()
            .map(|&n| {
                let geo = flat_geo(n);
                let mut rng = rng_from_seed(6);
                let h = crate::generators::TrigScalar::random(&geo.grid, 4, 2, 0.3, &mut rng);
                let x = Field::sample(geo.grid, Shape::Tensor(1), |x, o| o.copy_from_slice(&h.gradient(x)));
                curl(&x, &geo).unwrap().max_abs()
            })
            .collect();
        assert!(errs[1] < 1e-4 && errs[0] / errs[1] > 12.0, "{errs:?}");
    }

    fn closed_chi(grid: GridSpec, seed: u64) -> Field {
        let mut rng = rng_from_seed(seed);
        let beta = TrigForm::random(&grid, 3, 4, 2, 0.3, &mut rng);
        Field::sample(grid, Shape::Form(4), |x, o| o.copy_from_slice(beta.d_value(x).coeffs()))
    }

    #[test]
    fn seven_relation_on_flat_background() {
        let errs: Vec<f64> = [16, 32]
            .iter()
            .map(|&n| {
                let geo = flat_geo(n);
                let chi = closed_chi(geo.grid, 7);
                assert!(exterior_d(&chi).unwrap().max_abs() < 1e-2);
                chi_seven_relation(&chi, &geo).unwrap().max_abs()
            })
            .collect();
        assert!(errs[1] < 1e-4 && errs[0] / errs[1] > 12.0, "{errs:?}");
    }

    #[test]
    fn deturck_w_is_divergence_free_on_coclosed() {
        let mut errs = Vec::new();
        for n in [16, 32] {
            let grid = GridSpec::new(n, &[1, 4]).unwrap();
            let mut rng = rng_from_seed(8);
            let s = CoclosedGenerator::random(&grid, 0.15, 0.0, &mut rng)
                .sample(grid)
                .unwrap();
            let geo = Geometry::from_reference_volume(&s.phi, &s.vol_r).unwrap();
            let chi = closed_chi(grid, 9);
            errs.push(deturck_w(&chi, &geo).unwrap().div.max_abs());
        }
        assert!(errs[1] < 5e-3 && errs[0] / errs[1] > 10.0, "{errs:?}");
    }
}
