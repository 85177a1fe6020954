//! Identity suites: pointwise algebra at random frames and grid-level
//! oracle comparisons, summarised as named pass/fail groups.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::generators::{rng_from_seed, CoclosedGenerator};
use crate::geometry::Geometry;
use crate::grid::GridSpec;
use crate::linear::diamond::{diamond_psi, flat, project2, project4};
use crate::linear::{
    form2_to_tensor, hodge_star_metric, metric_from_phi, phi_from_table, AltForm, G2Frame, Phi0Table, Tensor2, Vector7,
};
use crate::report::ResidualReport;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityGroup {
    pub name: String,
    pub max_error: f64,
    pub tolerance: f64,
    pub samples: usize,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub detail: Option<String>,
}

impl IdentityGroup {
    fn new(name: &str, errors: &[f64], tolerance: f64) -> Self {
        let max_error = errors
            .iter()
            .fold(0.0f64, |m, &e| if e.is_nan() { f64::NAN } else { m.max(e) });
        Self {
            name: name.into(),
            max_error,
            tolerance,
            samples: errors.len(),
            pass: max_error <= tolerance,
            detail: None,
        }
    }

    fn failed(name: &str, samples: usize, tolerance: f64, detail: String) -> Self {
        Self {
            name: name.into(),
            max_error: f64::INFINITY,
            tolerance,
            samples,
            pass: false,
            detail: Some(detail),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct AlgebraicSuiteConfig {
    pub frames: usize,
    /// Entries of P − I are drawn from (−spread, spread).
    pub spread: f64,
    pub tolerance: f64,
}

impl Default for AlgebraicSuiteConfig {
    fn default() -> Self {
        Self {
            frames: 1000,
            spread: 0.3,
            tolerance: 1e-11,
        }
    }
}

pub const ALGEBRAIC_GROUPS: [&str; 12] = [
    "contraction_phi_phi",
    "contraction_psi_psi",
    "norm_phi",
    "norm_psi",
    "diamond_g_phi",
    "diamond_g_psi",
    "hook_diamond",
    "omega2_14_kernel",
    "normalization_trace",
    "normalization_seven",
    "normalization_27",
    "decomposition4_complete",
];

/// max |a − b| / max(|b|, 1).
fn rel(a: &[f64], b: &[f64]) -> f64 {
    let num = a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    let den = b.iter().fold(1.0f64, |m, y| m.max(y.abs()));
    num / den
}

fn rel_t(a: &Tensor2, b: &Tensor2) -> f64 {
    rel(a.as_slice(), b.as_slice())
}

fn rel_f(a: &AltForm, b: &AltForm) -> f64 {
    rel(a.coeffs(), b.coeffs())
}

/// C_ij = α_{i…} α_{j…} with the trailing k − 1 indices raised by g⁻¹.
fn self_contraction(a: &AltForm, ginv: &Tensor2) -> Tensor2 {
    let k = a.degree();
    let mut d = a.to_dense();
    let mut raised = d.clone();
    // raise slots 1..k one at a time
    for slot in 1..k {
        let stride = 7usize.pow((k - 1 - slot) as u32);
        for (idx, out) in raised.iter_mut().enumerate() {
            let m = (idx / stride) % 7;
            let base = idx - m * stride;
            *out = (0..7).map(|q| ginv[(m, q)] * d[base + q * stride]).sum();
        }
        d.copy_from_slice(&raised);
    }
    let orig = a.to_dense();
    let block = 7usize.pow((k - 1) as u32);
    Tensor2::from_fn(|i, j| (0..block).map(|r| orig[i * block + r] * d[j * block + r]).sum())
}

fn norm2_raised(a: &AltForm, ginv: &Tensor2) -> f64 {
    (ginv * self_contraction(a, ginv)).trace()
}

fn random_tensor(rng: &mut impl Rng) -> Tensor2 {
    Tensor2::from_fn(|_, _| rng.random_range(-1.0..1.0))
}

fn random_positive_p(rng: &mut impl Rng, spread: f64) -> Tensor2 {
    loop {
        let p = Tensor2::identity() + Tensor2::from_fn(|_, _| rng.random_range(-spread..spread));
        if p.determinant() > 0.1 {
            return p;
        }
    }
}

/// Per-frame errors in the order of [`ALGEBRAIC_GROUPS`].
fn frame_errors(phi: &AltForm, rng: &mut impl Rng) -> Result<[f64; 12]> {
    let (g, _) = metric_from_phi(phi)?;
    let ginv = g.try_inverse().expect("positive definite");
    let psi = hodge_star_metric(&g, phi)?;
    let fr = G2Frame::new(*phi)?;
    let mut e = [0.0; 12];
    e[0] = rel_t(&self_contraction(phi, &ginv), &(g * 6.0));
    e[1] = rel_t(&self_contraction(&psi, &ginv), &(g * 24.0));
    e[2] = (norm2_raised(phi, &ginv) - 42.0).abs() / 42.0;
    e[3] = (norm2_raised(&psi, &ginv) - 168.0).abs() / 168.0;
    e[4] = rel_f(&phi.derivation(&(g * ginv)), &(*phi * 3.0));
    e[5] = rel_f(&psi.derivation(&(g * ginv)), &(psi * 4.0));
    let x = Vector7::from_fn(|_, _| rng.random_range(-1.0..1.0));
    let hook = form2_to_tensor(&phi.interior(&x));
    e[6] = rel_f(&phi.derivation(&(hook * ginv)), &(psi.interior(&x) * -3.0));
    let b14 = project2(&random_tensor(rng), &fr).skew14;
    let scale = b14.amax().max(1.0);
    e[7] = phi
        .derivation(&(b14 * ginv))
        .max_abs()
        .max(psi.derivation(&(b14 * ginv)).max_abs())
        / scale;

    // S = (tr/7)I + hook(v) + S₂₇ in the frame, η = S⋄ψ
    let tr: f64 = rng.random_range(-1.0..1.0);
    let v = Vector7::from_fn(|_, _| rng.random_range(-1.0..1.0));
    let a = random_tensor(rng);
    let s27 = flat::project2(&(a + a.transpose())).sym0;
    let s = Tensor2::identity() * (tr / 7.0) + flat::hook_phi(&v) + s27;
    let eta = diamond_psi(&fr.from_frame_t2(&s), &fr);
    let d = project4(&eta, &fr);
    e[8] = (d.tr_s - tr).abs() / tr.abs().max(1.0);
    e[9] = rel(fr.to_frame_covector(&d.s7).as_slice(), v.as_slice());
    e[10] = rel_t(&fr.to_frame_t2(&d.s27), &s27);
    let coeffs: Vec<f64> = (0..35).map(|_| rng.random_range(-1.0..1.0)).collect();
    let eta = AltForm::from_coeffs(4, &coeffs);
    e[11] = rel_f(&project4(&eta, &fr).reassemble(&fr), &eta);
    Ok(e)
}

/// Runs every algebraic group at `cfg.frames` random frames P^*φ_table.
/// A table whose pulled-back form is not positive fails every group, the
/// contraction groups first.
pub fn algebraic_suite(table: &[Phi0Table], cfg: &AlgebraicSuiteConfig, seed: u64) -> Vec<IdentityGroup> {
    let base = phi_from_table(table);
    let mut rng = rng_from_seed(seed);
    let mut cols: Vec<Vec<f64>> = (0..12).map(|_| Vec::with_capacity(cfg.frames)).collect();
    for _ in 0..cfg.frames {
        let p = random_positive_p(&mut rng, cfg.spread);
        match frame_errors(&base.pullback(&p), &mut rng) {
            Ok(e) => {
                for (c, v) in cols.iter_mut().zip(e) {
                    c.push(v);
                }
            }
            Err(err) => {
                return ALGEBRAIC_GROUPS
                    .iter()
                    .map(|n| IdentityGroup::failed(n, cfg.frames, cfg.tolerance, err.to_string()))
                    .collect();
            }
        }
    }
    ALGEBRAIC_GROUPS
        .iter()
        .zip(&cols)
        .map(|(n, c)| IdentityGroup::new(n, c, cfg.tolerance))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct FieldSuiteConfig {
    /// Points per active dimension.
    pub n: usize,
    pub dims: Vec<usize>,
    pub beta_amp: f64,
    pub f_amp: f64,
    /// Absolute tolerance on grid-order residuals.
    pub tolerance: f64,
}

impl Default for FieldSuiteConfig {
    fn default() -> Self {
        Self {
            n: 24,
            dims: vec![1, 4],
            beta_amp: 0.15,
            f_amp: 0.2,
            tolerance: 5e-2,
        }
    }
}

fn group_from_report(name: &str, rep: &ResidualReport, tolerance: f64) -> IdentityGroup {
    let errors: Vec<f64> = rep.residuals.iter().map(|r| r.linf).collect();
    let mut g = IdentityGroup::new(name, &errors, tolerance);
    if let Some(worst) = rep.residuals.iter().max_by(|a, b| a.linf.total_cmp(&b.linf)) {
        g.detail = Some(format!("worst entry {}", worst.name));
    }
    g
}

/// Grid-level groups on a seeded conformally coclosed field: Bianchi
/// identities, torsion forms, curvature oracles, exact 4-forms, the
/// fixed-point formulas and the heterotic relations.
pub fn field_suite(cfg: &FieldSuiteConfig, seed: u64) -> Result<Vec<IdentityGroup>> {
    let grid = GridSpec::new(cfg.n, &cfg.dims)?;
    let mut rng = rng_from_seed(seed);
    let s = CoclosedGenerator::random(&grid, cfg.beta_amp, cfg.f_amp, &mut rng).sample(grid)?;
    let geo = Geometry::from_reference_volume(&s.phi, &s.vol_r)?;
    let tol = cfg.tolerance;
    let mut out = vec![
        group_from_report("bianchi", &crate::torsion::bianchi_suite(&geo)?, tol),
        group_from_report("ccc_relations", &crate::torsion::ccc_bianchi(&geo), tol),
        group_from_report("torsion_forms", &crate::torsion::torsion_form_residuals(&geo)?, tol),
    ];
    for (name, f) in [
        ("ricci_general", crate::curvature::RicciFormula::General),
        ("ricci_ccc", crate::curvature::RicciFormula::ConformallyCoclosed),
    ] {
        let r = crate::curvature::curvature_report(&geo, f)?;
        out.push(IdentityGroup::new(name, &[r.max_deviation], tol));
    }
    let mut b_rng = rng_from_seed(seed.wrapping_add(1));
    let b = crate::generators::TrigMatrix::random(&grid, 3, 1, 0.2, &mut b_rng).sample(grid);
    out.push(group_from_report(
        "exact4",
        &ResidualReport::from_iter([crate::exact4::exact_residual(&b, &geo)?]),
        tol,
    ));
    for c in [0.0, 4.0 / 3.0, 2.0] {
        let rep = crate::exact4::fixed_point_cross_check(&geo, c)?;
        out.push(group_from_report(&format!("fixed_point_C{c:.4}"), &rep, tol));
    }
    let mut het = crate::curvature::heterotic_residuals(&geo)?;
    het.residuals
        .retain(|r| matches!(r.name.as_str(), "norm_h" | "trace_consistency" | "trace_offshell"));
    out.push(group_from_report("heterotic", &het, tol));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linear::PHI0_TERMS;

    #[test]
    fn standard_table_passes() {
        let cfg = AlgebraicSuiteConfig {
            frames: 50,
            ..Default::default()
        };
        let groups = algebraic_suite(&PHI0_TERMS, &cfg, 1);
        assert_eq!(groups.len(), 12);
        for g in &groups {
            assert!(g.pass, "{g:?}");
        }
    }

    #[test]
    fn sabotaged_table_fails_contractions() {
        let mut t = PHI0_TERMS;
        t[3].sign = -t[3].sign;
        let cfg = AlgebraicSuiteConfig {
            frames: 10,
            ..Default::default()
        };
        let groups = algebraic_suite(&t, &cfg, 1);
        assert_eq!(groups[0].name, "contraction_phi_phi");
        assert!(!groups[0].pass);
    }

    #[test]
    fn self_contraction_matches_brute_force() {
        let mut rng = rng_from_seed(4);
        let p = random_positive_p(&mut rng, 0.3);
        let phi = crate::linear::standard_phi().pullback(&p);
        let (g, _) = metric_from_phi(&phi).unwrap();
        let gi = g.try_inverse().unwrap();
        let d = phi.to_dense();
        let at = |i: usize, j: usize, k: usize| d[i * 49 + j * 7 + k];
        let c = self_contraction(&phi, &gi);
        for (i, j) in [(0, 0), (2, 5), (6, 1)] {
            let mut acc = 0.0;
            for p in 0..7 {
                for q in 0..7 {
                    for r in 0..7 {
                        for s in 0..7 {
                            acc += at(i, p, q) * at(j, r, s) * gi[(p, r)] * gi[(q, s)];
                        }
                    }
                }
            }
            assert!((c[(i, j)] - acc).abs() < 1e-12);
        }
    }

    #[test]
    fn field_suite_default_passes() {
        let groups = field_suite(&FieldSuiteConfig::default(), 7).unwrap();
        assert!(groups.len() >= 10);
        for g in &groups {
            assert!(g.pass, "{g:?}");
        }
    }
}
